//! Scenario files shipped with the binary.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig_into",
        summary: "half-space, z dipoles, transfer and decay vs frequency for three loss rates",
        text: include_str!("../presets/fig_into.toml"),
    },
    Preset {
        name: "fig_intR",
        summary: "half-space at omega = 1.062, transfer vs lateral distance, with free-space reference",
        text: include_str!("../presets/fig_intR.toml"),
    },
    Preset {
        name: "fig_intz",
        summary: "half-space, transfer vs height above the interface with propagating/evanescent parts",
        text: include_str!("../presets/fig_intz.toml"),
    },
    Preset {
        name: "fig_barnes1",
        summary: "four- and five-layer dye cavities, orientation-averaged decay and transfer vs cavity length",
        text: include_str!("../presets/fig_barnes1.toml"),
    },
    Preset {
        name: "fig_barnes2",
        summary: "five-layer dye cavity, orientation-averaged transfer vs cavity length for three lateral offsets",
        text: include_str!("../presets/fig_barnes2.toml"),
    },
    Preset {
        name: "fig_sph",
        summary: "microsphere, diametral radial dipoles, transfer vs frequency",
        text: include_str!("../presets/fig_sph.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
