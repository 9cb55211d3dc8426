use std::collections::{BTreeMap, HashMap};

use riskplan_model::ActionId;
use riskplan_product::{PStateId, ProductAutomaton};
use serde::{Deserialize, Serialize};

/// Occupancy below which a state counts as never visited.
pub const OCCUPANCY_TOL: f64 = 1e-9;

pub type Distribution = Vec<(ActionId, f64)>;

/// Randomized stationary policy: a distribution over actions per state,
/// sorted by action id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    pub dist: BTreeMap<PStateId, Distribution>,
}

impl StationaryPolicy {
    pub fn get(&self, s: PStateId) -> Option<&Distribution> {
        self.dist.get(&s)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Actions with positive probability at `s`.
    pub fn support(&self, s: PStateId) -> Vec<ActionId> {
        self.get(s)
            .map(|d| d.iter().map(|e| e.0).collect())
            .unwrap_or_default()
    }
}

/// Ratio rule `π(s,u) = v_{s,u} / Σ_u v_{s,u}`; states whose total mass is
/// at most `OCCUPANCY_TOL` get `fallback(s)`. Probabilities below the
/// tolerance are dropped and the rest renormalized.
pub fn extract_policy<F>(
    states: &[PStateId],
    values: &[(PStateId, ActionId, f64)],
    fallback: F,
) -> StationaryPolicy
where
    F: Fn(PStateId) -> Distribution,
{
    let mut mass: BTreeMap<PStateId, Vec<(ActionId, f64)>> = BTreeMap::new();
    for &(s, u, v) in values {
        mass.entry(s).or_default().push((u, v.max(0.0)));
    }
    let mut dist = BTreeMap::new();
    for &s in states {
        let row = mass.remove(&s).unwrap_or_default();
        let total: f64 = row.iter().map(|e| e.1).sum();
        let d = if total > OCCUPANCY_TOL {
            let mut kept: Vec<(ActionId, f64)> = row
                .into_iter()
                .map(|(u, v)| (u, v / total))
                .filter(|e| e.1 >= OCCUPANCY_TOL)
                .collect();
            let sum: f64 = kept.iter().map(|e| e.1).sum();
            kept.iter_mut().for_each(|e| e.1 /= sum);
            kept.sort_by_key(|e| e.0);
            kept
        } else {
            fallback(s)
        };
        if !d.is_empty() {
            dist.insert(s, d);
        }
    }
    StationaryPolicy { dist }
}

/// Greedy actions of the expected cost to reach `target`. Values come from
/// Gauss-Seidel value iteration over `interior`; a successor that is
/// neither a target nor interior ends the run at cost `dead`. The returned
/// map covers `interior` and `extra`, ties going to the lowest action id.
pub fn greedy_to_target<A, T>(
    p: &ProductAutomaton,
    interior: &[PStateId],
    extra: &[PStateId],
    actions: A,
    target: T,
    dead: f64,
) -> BTreeMap<PStateId, ActionId>
where
    A: Fn(PStateId) -> Vec<ActionId>,
    T: Fn(PStateId) -> bool,
{
    let index: HashMap<PStateId, usize> =
        interior.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let mut v = vec![0.0; interior.len()];
    let q = |v: &[f64], s: PStateId, u: ActionId| -> f64 {
        let t = p.transition(s, u).expect("action allowed at state");
        t.successors.iter().fold(t.cost, |acc, &(n, pr)| {
            let w = if target(n) {
                0.0
            } else {
                index.get(&n).map_or(dead, |&j| v[j])
            };
            acc + pr * w
        })
    };
    let best = |v: &[f64], s: PStateId| -> Option<(ActionId, f64)> {
        let mut out: Option<(ActionId, f64)> = None;
        let mut acts = actions(s);
        acts.sort_unstable();
        for u in acts {
            let x = q(v, s, u);
            if out.is_none_or(|(_, b)| x < b - 1e-12) {
                out = Some((u, x));
            }
        }
        out
    };
    for _ in 0..100_000 {
        let mut delta = 0.0f64;
        for (k, &s) in interior.iter().enumerate() {
            if let Some((_, x)) = best(&v, s) {
                delta = delta.max((x - v[k]).abs() / x.abs().max(1.0));
                v[k] = x;
            }
        }
        if delta < 1e-10 {
            break;
        }
    }
    interior
        .iter()
        .chain(extra)
        .filter_map(|&s| best(&v, s).map(|(u, _)| (s, u)))
        .collect()
}

pub fn point(u: ActionId) -> Distribution {
    vec![(u, 1.0)]
}

pub fn uniform(mut actions: Vec<ActionId>) -> Distribution {
    actions.sort_unstable();
    actions.dedup();
    let p = 1.0 / actions.len() as f64;
    actions.into_iter().map(|u| (u, p)).collect()
}
