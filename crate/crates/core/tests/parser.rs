//! parse -> serialize -> parse is a fixpoint, on the registry and on generated maps.

mod common;

use common::oracles::generated_document;
use overcooked_core::layout::{LayoutError, BUILTIN_NAMES};
use overcooked_core::{builtin, parse_layout, serialize_layout, Layout, SplitMix64};
use proptest::prelude::*;

fn assert_fixpoint(l: &Layout) {
    let text = serialize_layout(l);
    let back = parse_layout(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(&back, l, "\n{text}");
    assert_eq!(serialize_layout(&back), text);
}

#[test]
fn builtins_are_fixpoints() {
    for name in BUILTIN_NAMES {
        assert_fixpoint(&builtin(name).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generated_layouts_are_fixpoints(seed in any::<u64>()) {
        let text = generated_document(seed);
        let l = parse_layout(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        assert_fixpoint(&l);
    }

    #[test]
    fn stray_characters_reported_where_they_are(seed in any::<u64>(), ch in "[a-zCDEFGHIJKMNOQSTUVYZ!?#.]") {
        let text = generated_document(seed);
        let lines: Vec<&str> = text.lines().take_while(|l| !l.is_empty()).collect();
        let mut rng = SplitMix64::new(seed ^ 0x5eed);
        let row = rng.index(lines.len());
        let col = rng.index(lines[row].len());
        let bad = ch.chars().next().unwrap();
        let mut edited: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        edited[row].replace_range(col..col + 1, &bad.to_string());
        let err = parse_layout(&edited.join("\n")).unwrap_err();
        prop_assert_eq!(err, LayoutError::UnknownChar { ch: bad, row, col });
    }
}

#[test]
fn thousand_fixed_seed_documents() {
    // deterministic companion to the property above: same count on every run
    for seed in 0..1000 {
        let l = parse_layout(&generated_document(seed)).unwrap();
        assert_fixpoint(&l);
    }
}
