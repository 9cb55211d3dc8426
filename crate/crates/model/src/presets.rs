//! Workspace presets. Cells are `(col, row)` with row 0 at the bottom; the
//! three bases sit in the corners `(0,0)`, `(4,0)` and `(4,4)`.

use crate::grid::{build_grid_model, GridConfig, Heading, Primitive};
use crate::{LabelSet, Mdp};

pub const NAMES: [&str; 7] = [
    "reach",
    "surveillance",
    "supply",
    "clustered",
    "lab",
    "single",
    "toy",
];

const BASE_AP: [&str; 4] = ["Obs", "b1", "b2", "b3"];

fn with_bases(ap: &[&str]) -> GridConfig {
    let mut cfg = GridConfig::blank(5, 5, ap);
    cfg.add_label(0, 0, "b1", 1.0);
    cfg.add_label(4, 0, "b2", 1.0);
    cfg.add_label(4, 4, "b3", 1.0);
    cfg.add_label(2, 0, "Obs", 0.7);
    cfg
}

/// Ordered reachability: a second obstacle at `(2,4)`, start in the top-left
/// corner facing south.
pub fn reach() -> GridConfig {
    let mut cfg = with_bases(&BASE_AP);
    cfg.add_label(2, 4, "Obs", 0.7);
    cfg.start = (0, 4, Heading::S);
    cfg
}

pub fn surveillance() -> GridConfig {
    let mut cfg = with_bases(&BASE_AP);
    cfg.start = (2, 2, Heading::N);
    cfg
}

/// Supply delivery: supplies appear at four cells with probabilities
/// 0.2 to 0.8.
pub fn supply() -> GridConfig {
    let mut cfg = with_bases(&["Obs", "b1", "b2", "b3", "Spl"]);
    cfg.add_label(0, 2, "Spl", 0.2);
    cfg.add_label(2, 1, "Spl", 0.4);
    cfg.add_label(4, 2, "Spl", 0.6);
    cfg.add_label(2, 4, "Spl", 0.8);
    cfg.start = (2, 2, Heading::N);
    cfg
}

/// Surveillance with a likely obstacle in the center and unlikely ones
/// enclosing `b1`.
pub fn clustered() -> GridConfig {
    let mut cfg = with_bases(&BASE_AP);
    cfg.add_label(2, 2, "Obs", 0.9);
    for (c, r) in [(0, 1), (1, 0), (1, 1)] {
        cfg.add_label(c, r, "Obs", 0.01);
    }
    cfg.start = (3, 2, Heading::W);
    cfg
}

/// The 3×5 lab floor.
pub fn lab() -> GridConfig {
    let mut cfg = GridConfig::blank(5, 3, &BASE_AP);
    cfg.add_label(0, 0, "b1", 1.0);
    cfg.add_label(4, 0, "b2", 1.0);
    cfg.add_label(4, 2, "b3", 1.0);
    cfg.add_label(2, 1, "Obs", 0.5);
    cfg.start = (0, 2, Heading::E);
    cfg
}

pub fn single() -> GridConfig {
    let mut cfg = GridConfig::blank(1, 1, &[]);
    cfg.primitives = vec![Primitive::ST];
    cfg
}

/// Builds a preset by name.
pub fn by_name(name: &str) -> Option<Mdp> {
    let cfg = match name {
        "reach" => reach(),
        "surveillance" => surveillance(),
        "supply" => supply(),
        "clustered" => clustered(),
        "lab" => lab(),
        "single" => single(),
        "toy" => return Some(Mdp::two_state_toy()),
        _ => return None,
    };
    Some(build_grid_model(&cfg).expect("presets are well-formed"))
}

/// Probability that a cell of `cfg` carries proposition `ap`.
pub fn prop_prob(cfg: &GridConfig, col: usize, row: usize, ap: &str) -> f64 {
    let bit = LabelSet::from_names(&[ap], &cfg.ap).expect("unknown proposition");
    cfg.cell_labels[cfg.cell_index(col, row)]
        .iter()
        .filter(|e| e.0 .0 & bit.0 != 0)
        .map(|e| e.1)
        .sum()
}
