//! Discrete grid-world abstraction of a unicycle robot.
//!
//! States are `(cell, heading)` pairs. Cell `(col, row)` has row 0 at the
//! bottom, and the state id is `(row * width + col) * 4 + heading`.
//!
//! Off-grid outcomes: a drift that would leave the grid lands on the
//! intended cell instead, and an intended cell outside the grid means the
//! robot stays put.

use thiserror::Error;

use crate::mdp::{Mdp, StateId, Transition, PROB_TOL};
use crate::LabelSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    N = 0,
    E = 1,
    S = 2,
    W = 3,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    pub fn from_index(i: usize) -> Heading {
        Self::ALL[i % 4]
    }

    /// Clockwise rotation by `k` quarter turns.
    pub fn rotate(self, k: usize) -> Heading {
        Self::from_index(self as usize + k)
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::N => (0, 1),
            Heading::E => (1, 0),
            Heading::S => (0, -1),
            Heading::W => (-1, 0),
        }
    }

    pub fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self as usize]
    }
}

/// Motion primitives, in action-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Primitive {
    FR = 0,
    BK = 1,
    TR = 2,
    TL = 3,
    ST = 4,
}

impl Primitive {
    pub const ALL: [Primitive; 5] = [
        Primitive::FR,
        Primitive::BK,
        Primitive::TR,
        Primitive::TL,
        Primitive::ST,
    ];

    pub fn name(self) -> &'static str {
        ["FR", "BK", "TR", "TL", "ST"][self as usize]
    }

    /// Default costs `[2, 4, 3, 3, 1]`.
    pub fn default_cost(self) -> f64 {
        [2.0, 4.0, 3.0, 3.0, 1.0][self as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub ap: Vec<String>,
    /// Label distribution of each cell, indexed `row * width + col`.
    pub cell_labels: Vec<Vec<(LabelSet, f64)>>,
    pub primitives: Vec<Primitive>,
    /// Cost per primitive, indexed by `Primitive as usize`.
    pub costs: [f64; 5],
    pub start: (usize, usize, Heading),
    pub start_label: LabelSet,
}

impl GridConfig {
    /// A grid where every cell carries the empty label with probability 1.
    pub fn blank(width: usize, height: usize, ap: &[&str]) -> Self {
        GridConfig {
            width,
            height,
            ap: ap.iter().map(|s| s.to_string()).collect(),
            cell_labels: vec![vec![(LabelSet::EMPTY, 1.0)]; width * height],
            primitives: Primitive::ALL.to_vec(),
            costs: Primitive::ALL.map(Primitive::default_cost),
            start: (0, 0, Heading::N),
            start_label: LabelSet::EMPTY,
        }
    }

    pub fn cell_index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    /// Places proposition `ap` in a cell with probability `p`; the remaining
    /// mass stays on the cell's previous labels.
    pub fn add_label(&mut self, col: usize, row: usize, ap: &str, p: f64) {
        let bit = LabelSet::from_names(&[ap], &self.ap).expect("unknown proposition");
        let cell = self.cell_index(col, row);
        let old = std::mem::take(&mut self.cell_labels[cell]);
        let mut out: Vec<(LabelSet, f64)> = Vec::new();
        let mut push = |l: LabelSet, q: f64| {
            if q <= 0.0 {
                return;
            }
            match out.iter_mut().find(|e| e.0 == l) {
                Some(e) => e.1 += q,
                None => out.push((l, q)),
            }
        };
        for (l, q) in old {
            push(LabelSet(l.0 | bit.0), q * p);
            push(l, q * (1.0 - p));
        }
        out.sort_by_key(|e| e.0);
        self.cell_labels[cell] = out;
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimensions {0}x{1} must be positive")]
    Dimensions(usize, usize),
    #[error("expected {expected} cell label entries, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell ({col}, {row}) has an empty label set")]
    EmptyLabels { col: usize, row: usize },
    #[error("cell ({col}, {row}) label probabilities sum to {sum}")]
    LabelSum { col: usize, row: usize, sum: f64 },
    #[error("cell ({col}, {row}) has a non-positive label probability")]
    NonPositive { col: usize, row: usize },
    #[error("no motion primitive selected")]
    NoPrimitives,
    #[error("cost of {0} must be positive")]
    Cost(&'static str),
    #[error("start cell ({0}, {1}) lies outside the grid")]
    Start(usize, usize),
    #[error("start label is not a possible label of the start cell")]
    StartLabel,
}

pub fn state_id(width: usize, col: usize, row: usize, h: Heading) -> StateId {
    (row * width + col) * 4 + h as usize
}

/// Inverse of [`state_id`].
pub fn decode_state(width: usize, s: StateId) -> (usize, usize, Heading) {
    let cell = s / 4;
    (cell % width, cell / width, Heading::from_index(s % 4))
}

fn primitive_outcomes(
    cfg: &GridConfig,
    p: Primitive,
    col: usize,
    row: usize,
    h: Heading,
) -> Vec<(StateId, f64)> {
    let w = cfg.width;
    let me = state_id(w, col, row, h);
    let shifted = |dx: i64, dy: i64| -> StateId {
        let c = col as i64 + dx;
        let r = row as i64 + dy;
        if c < 0 || r < 0 || c >= w as i64 || r >= cfg.height as i64 {
            me
        } else {
            state_id(w, c as usize, r as usize, h)
        }
    };
    let turned = |k: usize| state_id(w, col, row, h.rotate(k));
    let raw = match p {
        Primitive::FR | Primitive::BK => {
            let sign = if p == Primitive::FR { 1 } else { -1 };
            let (dx, dy) = h.delta();
            let (dx, dy) = (dx * sign, dy * sign);
            let (lx, ly) = h.rotate(3).delta();
            let ahead = shifted(dx, dy);
            let drift = |ox: i64, oy: i64| match shifted(ox, oy) {
                s if s == me => ahead,
                s => s,
            };
            vec![
                (ahead, 0.8),
                (drift(dx + lx, dy + ly), 0.1),
                (drift(dx - lx, dy - ly), 0.1),
            ]
        }
        Primitive::TR => vec![(turned(1), 0.9), (turned(0), 0.05), (turned(2), 0.05)],
        Primitive::TL => vec![(turned(3), 0.9), (turned(0), 0.05), (turned(2), 0.05)],
        Primitive::ST => vec![(me, 1.0)],
    };
    let mut out: Vec<(StateId, f64)> = Vec::with_capacity(3);
    for (s, q) in raw {
        match out.iter_mut().find(|e| e.0 == s) {
            Some(e) => e.1 += q,
            None => out.push((s, q)),
        }
    }
    out
}

pub fn build_grid_model(cfg: &GridConfig) -> Result<Mdp, GridError> {
    let (w, hgt) = (cfg.width, cfg.height);
    if w == 0 || hgt == 0 {
        return Err(GridError::Dimensions(w, hgt));
    }
    if cfg.cell_labels.len() != w * hgt {
        return Err(GridError::CellCount {
            expected: w * hgt,
            got: cfg.cell_labels.len(),
        });
    }
    for (i, labels) in cfg.cell_labels.iter().enumerate() {
        let (col, row) = (i % w, i / w);
        if labels.is_empty() {
            return Err(GridError::EmptyLabels { col, row });
        }
        if labels.iter().any(|e| !(e.1 > 0.0)) {
            return Err(GridError::NonPositive { col, row });
        }
        let sum: f64 = labels.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(GridError::LabelSum { col, row, sum });
        }
    }
    if cfg.primitives.is_empty() {
        return Err(GridError::NoPrimitives);
    }
    for p in Primitive::ALL {
        if !(cfg.costs[p as usize] > 0.0) {
            return Err(GridError::Cost(p.name()));
        }
    }
    let (sc, sr, sh) = cfg.start;
    if sc >= w || sr >= hgt {
        return Err(GridError::Start(sc, sr));
    }
    if !cfg.cell_labels[cfg.cell_index(sc, sr)]
        .iter()
        .any(|e| e.0 == cfg.start_label)
    {
        return Err(GridError::StartLabel);
    }

    let mut prims = cfg.primitives.clone();
    prims.sort();
    prims.dedup();

    let n = w * hgt * 4;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    for s in 0..n {
        let (col, row, h) = decode_state(w, s);
        names.push(format!("c{col}_{row}_{}", h.letter()));
        labels.push(cfg.cell_labels[cfg.cell_index(col, row)].clone());
        rows.push(
            prims
                .iter()
                .enumerate()
                .map(|(a, &p)| Transition {
                    action: a,
                    cost: cfg.costs[p as usize],
                    successors: primitive_outcomes(cfg, p, col, row, h),
                })
                .collect(),
        );
    }
    Ok(Mdp {
        ap: cfg.ap.clone(),
        actions: prims.iter().map(|p| p.name().to_string()).collect(),
        state_names: names,
        rows,
        labels,
        initial: (state_id(w, sc, sr, sh), cfg.start_label),
    })
}
