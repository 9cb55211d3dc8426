//! End components and strongly connected components of product automata.

use riskplan_model::ActionId;
use riskplan_product::{PStateId, ProductAutomaton};

mod scc;

pub use scc::{is_nontrivial, tarjan_scc, tarjan_scc_masked};

/// Pseudo action of the trap state.
pub const TAU0: ActionId = ActionId::MAX;

/// A sub-MDP over local ids `0..n`. Local state `n - 1` is the trap `ν`
/// when `trap` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMdp {
    /// Product id of each local state; `None` for the trap.
    pub global: Vec<Option<PStateId>>,
    pub trap: Option<usize>,
    /// Per local state: `(action, successors with probabilities)`.
    pub actions: Vec<Vec<(ActionId, Vec<(usize, f64)>)>>,
}

impl SubMdp {
    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }
}

/// An end component in local ids: `actions[k]` are the actions kept at
/// `states[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<usize>,
    pub actions: Vec<Vec<ActionId>>,
}

/// Accepting maximal end component of one Rabin pair, in product ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Amec {
    pub pair: usize,
    pub states: Vec<PStateId>,
    pub actions: Vec<Vec<ActionId>>,
    pub i_states: Vec<PStateId>,
}

/// Accepting strongly connected component; all product actions stay
/// available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ascc {
    pub pair: usize,
    pub states: Vec<PStateId>,
    pub i_states: Vec<PStateId>,
}

/// `Z_i^{¬H}`: drops the `H` states of `pair` and sends every transition
/// into them to the trap `ν`, which loops on `τ0`.
pub fn restrict_avoid(p: &ProductAutomaton, pair: usize) -> SubMdp {
    assert!(pair < p.pairs.len(), "pair index {pair} out of range");
    let keep: Vec<PStateId> = (0..p.num_states()).filter(|&s| !p.in_h(pair, s)).collect();
    let mut local = vec![usize::MAX; p.num_states()];
    for (k, &s) in keep.iter().enumerate() {
        local[s] = k;
    }
    let trap = keep.len();
    let mut actions = Vec::with_capacity(keep.len() + 1);
    for &s in &keep {
        let row = p.rows[s]
            .iter()
            .map(|t| {
                let mut succ: Vec<(usize, f64)> = Vec::with_capacity(t.successors.len());
                let mut to_trap = 0.0;
                for &(n, pr) in &t.successors {
                    if local[n] == usize::MAX {
                        to_trap += pr;
                    } else {
                        succ.push((local[n], pr));
                    }
                }
                if to_trap > 0.0 {
                    succ.push((trap, to_trap));
                }
                (t.action, succ)
            })
            .collect();
        actions.push(row);
    }
    actions.push(vec![(TAU0, vec![(trap, 1.0)])]);
    let mut global: Vec<Option<PStateId>> = keep.into_iter().map(Some).collect();
    global.push(None);
    SubMdp {
        global,
        trap: Some(trap),
        actions,
    }
}

/// Maximal end components by iterated SCC splitting: actions that can leave
/// their state's SCC are dropped, states without actions are dropped, and
/// the SCCs are recomputed until nothing changes. Components are ordered by
/// smallest local id.
pub fn compute_mecs(z: &SubMdp) -> Vec<EndComponent> {
    let n = z.len();
    let mut alive = vec![true; n];
    let mut enabled: Vec<Vec<bool>> = z.actions.iter().map(|a| vec![true; a.len()]).collect();
    let mut comp_of = vec![usize::MAX; n];
    loop {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let mut v: Vec<usize> = z.actions[s]
                    .iter()
                    .zip(&enabled[s])
                    .filter(|(_, &e)| e)
                    .flat_map(|(a, _)| a.1.iter().map(|e| e.0))
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let comps = tarjan_scc_masked(&adj, &alive);
        comp_of.iter_mut().for_each(|c| *c = usize::MAX);
        for (k, c) in comps.iter().enumerate() {
            for &s in c {
                comp_of[s] = k;
            }
        }
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (k, (_, succ)) in z.actions[s].iter().enumerate() {
                if enabled[s][k]
                    && succ
                        .iter()
                        .any(|&(t, _)| !alive[t] || comp_of[t] != comp_of[s])
                {
                    enabled[s][k] = false;
                    changed = true;
                }
            }
            if !enabled[s].iter().any(|&e| e) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mut out: Vec<EndComponent> = comps
                .into_iter()
                .map(|states| {
                    let actions = states
                        .iter()
                        .map(|&s| {
                            z.actions[s]
                                .iter()
                                .zip(&enabled[s])
                                .filter(|(_, &e)| e)
                                .map(|(a, _)| a.0)
                                .collect()
                        })
                        .collect();
                    EndComponent { states, actions }
                })
                .collect();
            out.sort_by_key(|c| c.states[0]);
            return out;
        }
    }
}

/// `Ξ_acc`: for every pair, the MECs of `Z_i^{¬H}` that avoid the trap and
/// meet `I_i`. Ordered by pair, then by smallest state id.
pub fn compute_amecs(p: &ProductAutomaton) -> Vec<Amec> {
    let mut out = Vec::new();
    for pair in 0..p.pairs.len() {
        let z = restrict_avoid(p, pair);
        for ec in compute_mecs(&z) {
            if ec.states.iter().any(|&s| Some(s) == z.trap) {
                continue;
            }
            let states: Vec<PStateId> = ec.states.iter().map(|&s| z.global[s].unwrap()).collect();
            let i_states: Vec<PStateId> = states
                .iter()
                .copied()
                .filter(|&s| p.in_i(pair, s))
                .collect();
            if i_states.is_empty() {
                continue;
            }
            out.push(Amec {
                pair,
                states,
                actions: ec.actions,
                i_states,
            });
        }
    }
    out
}

/// `Ω_acc`: for every pair, the nontrivial SCCs of the product digraph with
/// the `H` states removed that meet `I_i`.
pub fn compute_asccs(p: &ProductAutomaton) -> Vec<Ascc> {
    let adj = p.adjacency();
    let mut out = Vec::new();
    for pair in 0..p.pairs.len() {
        let keep: Vec<bool> = (0..p.num_states()).map(|s| !p.in_h(pair, s)).collect();
        let mut comps = tarjan_scc_masked(&adj, &keep);
        comps.sort_by_key(|c| c[0]);
        for states in comps {
            if !is_nontrivial(&adj, &states) {
                continue;
            }
            let i_states: Vec<PStateId> = states
                .iter()
                .copied()
                .filter(|&s| p.in_i(pair, s))
                .collect();
            if !i_states.is_empty() {
                out.push(Ascc {
                    pair,
                    states,
                    i_states,
                });
            }
        }
    }
    out
}
