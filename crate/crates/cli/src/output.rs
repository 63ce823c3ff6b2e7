//! Output files appear complete or not at all.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use tempfile::NamedTempFile;

fn parent(path: &Path) -> &Path {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// Files written to temporaries next to their targets, renamed on [`Staged::commit`].
/// Dropping without committing deletes the temporaries.
#[derive(Default)]
pub struct Staged(Vec<(NamedTempFile, PathBuf)>);

impl Staged {
    pub fn add(&mut self, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        let mut tmp = NamedTempFile::new_in(parent(path))
            .with_context(|| format!("cannot write {}: directory missing or not writable", path.display()))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.flush())
            .with_context(|| format!("writing {}", path.display()))?;
        // temporaries are created owner-only; outputs should look like any other file
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
        }
        self.0.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> anyhow::Result<()> {
        for (tmp, path) in self.0 {
            tmp.persist(&path)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Fails early, before any work, when `out` cannot be created.
pub fn check_parent(out: &Path) -> anyhow::Result<()> {
    let dir = parent(out);
    anyhow::ensure!(dir.is_dir(), "output directory {} does not exist", dir.display());
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut s = Staged::default();
    s.add(path, bytes)?;
    s.commit()
}

/// Writes to `out`, or stdout when no path was given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn to_json(value: &impl serde::Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("outputs serialize");
    v.push(b'\n');
    v
}

/// A matrix goes out as CSV (numbers only) plus JSON (labels and statistics).
/// `out` names either file; the other takes the same stem with the other extension.
/// Without `out`, the JSON goes to stdout.
pub fn emit_matrix(out: Option<&Path>, csv: &str, json: &impl serde::Serialize) -> anyhow::Result<()> {
    let Some(out) = out else {
        return emit(None, &to_json(json));
    };
    let (csv_path, json_path) = match out.extension().and_then(|e| e.to_str()) {
        Some("csv") => (out.to_path_buf(), out.with_extension("json")),
        Some(_) => (out.with_extension("csv"), out.to_path_buf()),
        None => (out.with_extension("csv"), out.with_extension("json")),
    };
    let mut s = Staged::default();
    s.add(&csv_path, csv.as_bytes())?;
    s.add(&json_path, &to_json(json))?;
    s.commit()?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}
