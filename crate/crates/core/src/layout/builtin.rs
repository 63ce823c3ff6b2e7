//! Built-in layout registry.
//!
//! The five classic layouts follow the original benchmark geometry with
//! onions as ingredient `0`. The multi-recipe adaptations and the six
//! coordination layouts are reconstructions: each keeps the documented
//! property (who can see the indicator, where the pot is, whether a button
//! exists) but exact dimensions are our own. They are frozen as golden
//! fixtures in `tests/layouts.rs`.

use super::{parse_layout, Layout, LayoutError};

const CRAMPED_ROOM: &str = "
WWPWW
0A  0
W  AW
WBWXW
";

const ASYMM_ADVANTAGES: &str = "
WWWWWWWWW
0 WXW0W X
W   P   W
W A PA  W
WWWBWBWWW
";

const COORD_RING: &str = "
WWWPW
W A P
BAW W
0   W
W0XWW
";

const FORCED_COORD: &str = "
WWWPW
0 WAP
0AW W
B W W
WWWXW
";

const COUNTER_CIRCUIT: &str = "
WWWPPWWW
W A    W
B WWWW X
W     AW
WWW00WWW
";

const CRAMPED_ROOM_V2: &str = "
WWPWW
0A A1
W   W
WBRXW
";

const ASYMM_RECIPES_LEFT: &str = "
WWWWWWWWW
0 WXW1W X
1   P   0
R A PA  W
WWWBWBWWW
";

const ASYMM_RECIPES_CENTER: &str = "
WWWWRWWWW
0 WXW1W X
1   P   0
W A PA  W
WWWBWBWWW
";

const ASYMM_RECIPES_RIGHT: &str = "
WWWWWWWWW
0 WXW1W X
1   P   0
W A PA  R
WWWBWBWWW
";

const TWO_ROOMS: &str = "
WWWWWWWWW
W   W   0
P A W A 1
W   W   B
WWWWWXWRW
";

const GROUNDED_COORD_SIMPLE: &str = "
WWWWWWWWW
0   W   0
R A W A L
1   W   1
WWWWWPBXW
";

const GROUNDED_COORD_RING: &str = "
WWWWW0WWWWW
R A       W
W WWWWWWW P
W       A X
WWWWL1WWBWW
";

const TEST_TIME_SIMPLE: &str = "
WWWWWWWWW
0   W   0
R A W A W
1   W   1
WWWWWPBXW
";

const TEST_TIME_WIDE: &str = "
WWWWWWWWWWWWW
0     W     0
R  A  W  A  W
1     W     1
WWWWWWWPBXWWW
";

const DEMO_COOK_SIMPLE: &str = "
WWWWWWWWW
0   W   0
R A P A X
1   W   1
WWWWWWWBW
";

const DEMO_COOK_WIDE: &str = "
WWWWWWWWWWWWW
0     W     0
R  A  P  A  X
1     P     1
WWWWWWWWWWBWW
";

/// Two single-ingredient recipes: the layouts other-play permutes over.
const TWO_PURE_RECIPES: &str = "recipes=0,0,0;1,1,1";

struct Entry {
    name: &'static str,
    grid: &'static str,
    directives: &'static str,
}

const REGISTRY: &[Entry] = &[
    Entry {
        name: "cramped_room",
        grid: CRAMPED_ROOM,
        directives: "",
    },
    Entry {
        name: "asymm_advantages",
        grid: ASYMM_ADVANTAGES,
        directives: "",
    },
    Entry {
        name: "coord_ring",
        grid: COORD_RING,
        directives: "",
    },
    Entry {
        name: "forced_coord",
        grid: FORCED_COORD,
        directives: "",
    },
    Entry {
        name: "counter_circuit",
        grid: COUNTER_CIRCUIT,
        directives: "",
    },
    Entry {
        name: "cramped_room_v2",
        grid: CRAMPED_ROOM_V2,
        directives: "",
    },
    Entry {
        name: "asymm_advantages_recipes_left",
        grid: ASYMM_RECIPES_LEFT,
        directives: "",
    },
    Entry {
        name: "asymm_advantages_recipes_center",
        grid: ASYMM_RECIPES_CENTER,
        directives: "",
    },
    Entry {
        name: "asymm_advantages_recipes_right",
        grid: ASYMM_RECIPES_RIGHT,
        directives: "",
    },
    Entry {
        name: "two_rooms",
        grid: TWO_ROOMS,
        directives: "",
    },
    Entry {
        name: "grounded_coord_simple",
        grid: GROUNDED_COORD_SIMPLE,
        directives: TWO_PURE_RECIPES,
    },
    Entry {
        name: "grounded_coord_ring",
        grid: GROUNDED_COORD_RING,
        directives: TWO_PURE_RECIPES,
    },
    Entry {
        name: "test_time_simple",
        grid: TEST_TIME_SIMPLE,
        directives: TWO_PURE_RECIPES,
    },
    Entry {
        name: "test_time_wide",
        grid: TEST_TIME_WIDE,
        directives: TWO_PURE_RECIPES,
    },
    Entry {
        name: "demo_cook_simple",
        grid: DEMO_COOK_SIMPLE,
        directives: TWO_PURE_RECIPES,
    },
    Entry {
        name: "demo_cook_wide",
        grid: DEMO_COOK_WIDE,
        directives: TWO_PURE_RECIPES,
    },
];

pub const BUILTIN_NAMES: &[&str] = &[
    "cramped_room",
    "asymm_advantages",
    "coord_ring",
    "forced_coord",
    "counter_circuit",
    "cramped_room_v2",
    "asymm_advantages_recipes_left",
    "asymm_advantages_recipes_center",
    "asymm_advantages_recipes_right",
    "two_rooms",
    "grounded_coord_simple",
    "grounded_coord_ring",
    "test_time_simple",
    "test_time_wide",
    "demo_cook_simple",
    "demo_cook_wide",
];

pub fn builtin_names() -> Vec<String> {
    BUILTIN_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn builtin(name: &str) -> Result<Layout, LayoutError> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| LayoutError::UnknownBuiltin {
            name: name.to_string(),
            available: builtin_names(),
        })?;
    let doc = format!("{}\nname={}\n{}\n", entry.grid, entry.name, entry.directives);
    parse_layout(&doc)
}

/// Raw DSL text of a built-in (grid plus directives), for docs and the CLI.
pub fn builtin_text(name: &str) -> Option<String> {
    REGISTRY.iter().find(|e| e.name == name).map(|e| {
        format!(
            "{}\nname={}\n{}\n",
            e.grid.trim_start_matches('\n'),
            e.name,
            e.directives
        )
    })
}
