//! Bundled IEEE test-system edge lists (deduplicated branch topologies).

pub const IEEE9: &str = include_str!("../data/ieee9.edges");
pub const IEEE14: &str = include_str!("../data/ieee14.edges");
pub const IEEE24: &str = include_str!("../data/ieee24.edges");
pub const IEEE30: &str = include_str!("../data/ieee30.edges");
pub const IEEE39: &str = include_str!("../data/ieee39.edges");
pub const IEEE57: &str = include_str!("../data/ieee57.edges");
pub const IEEE118: &str = include_str!("../data/ieee118.edges");
pub const IEEE300: &str = include_str!("../data/ieee300.edges");

pub const BUNDLED: [(&str, &str); 8] = [
    ("ieee9", IEEE9),
    ("ieee14", IEEE14),
    ("ieee24", IEEE24),
    ("ieee30", IEEE30),
    ("ieee39", IEEE39),
    ("ieee57", IEEE57),
    ("ieee118", IEEE118),
    ("ieee300", IEEE300),
];

/// Looks up a bundled system by name, e.g. `ieee57`.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}
