//! Product of a labeled MDP with a deterministic Rabin automaton.
//!
//! A product state `⟨x, l, q⟩` pairs a model state, the label observed
//! there and the automaton state. Taking `u` moves to `⟨x̌, ľ, δ(q, l)⟩` with
//! probability `p_D(x, u, x̌) · p_L(x̌, ľ)`: the automaton reads the label of
//! the state being left.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};

use riskplan_dra::{Dra, DraState, Letter};
use riskplan_model::{ActionId, LabelSet, Mdp, StateId};
use thiserror::Error;

mod export;
mod partition;

pub use export::{to_dot, to_prism};
pub use partition::{partition_states, Region, StatePartition};

pub type PStateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PState {
    pub x: StateId,
    pub l: LabelSet,
    pub q: DraState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PTransition {
    pub action: ActionId,
    pub cost: f64,
    pub successors: Vec<(PStateId, f64)>,
}

/// Rabin pair lifted to product states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductPair {
    pub h: Vec<bool>,
    pub i: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Forward closure from the initial state.
    Reachable,
    /// Every label-positive triple; unreachable ones come after the
    /// reachable core.
    All,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProductError {
    #[error("model proposition {0:?} is unknown to the automaton")]
    ApMismatch(String),
    #[error("initial label has zero probability at the initial state")]
    InitialLabel,
    #[error("goal state {0} is not a product state")]
    UnknownGoal(usize),
}

#[derive(Debug, Clone)]
pub struct ProductAutomaton {
    pub states: Vec<PState>,
    pub rows: Vec<Vec<PTransition>>,
    pub initial: PStateId,
    pub pairs: Vec<ProductPair>,
    pub dra: Dra,
    pub model_ap: Vec<String>,
    pub actions: Vec<String>,
    pub model_state_names: Vec<String>,
    /// `letter_bits[j]` is the automaton bit of model proposition `j`.
    letter_bits: Vec<u32>,
    index: HashMap<PState, PStateId>,
}

impl ProductAutomaton {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Number of `(s, š)` pairs with positive probability under some action.
    pub fn num_transitions(&self) -> usize {
        self.adjacency().iter().map(Vec::len).sum()
    }

    pub fn id(&self, s: PState) -> Option<PStateId> {
        self.index.get(&s).copied()
    }

    /// Automaton letter for a model label.
    pub fn letter(&self, l: LabelSet) -> Letter {
        l.indices().fold(0, |acc, j| acc | self.letter_bits[j])
    }

    pub fn transition(&self, s: PStateId, u: ActionId) -> Option<&PTransition> {
        self.rows[s].iter().find(|t| t.action == u)
    }

    pub fn allowed(&self, s: PStateId) -> impl Iterator<Item = ActionId> + '_ {
        self.rows[s].iter().map(|t| t.action)
    }

    pub fn post(&self, s: PStateId, u: ActionId) -> Vec<PStateId> {
        self.transition(s, u)
            .map(|t| t.successors.iter().map(|e| e.0).collect())
            .unwrap_or_default()
    }

    /// Successor lists of the underlying digraph, ascending and deduplicated.
    pub fn adjacency(&self) -> Vec<Vec<PStateId>> {
        self.rows
            .iter()
            .map(|row| {
                let set: BTreeSet<_> = row
                    .iter()
                    .flat_map(|t| t.successors.iter().map(|e| e.0))
                    .collect();
                set.into_iter().collect()
            })
            .collect()
    }

    pub fn in_h(&self, pair: usize, s: PStateId) -> bool {
        self.pairs[pair].h[s]
    }

    pub fn in_i(&self, pair: usize, s: PStateId) -> bool {
        self.pairs[pair].i[s]
    }

    pub fn state_name(&self, s: PStateId) -> String {
        let st = self.states[s];
        let names = st.l.names(&self.model_ap).join(",");
        format!("<{},{{{}}},{}>", self.model_state_names[st.x], names, st.q)
    }

    /// Hex SHA-256 over the state space, transition structure and pairs.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.states.len() as u64).to_le_bytes());
        h.update((self.initial as u64).to_le_bytes());
        for (s, row) in self.states.iter().zip(&self.rows) {
            h.update((s.x as u64).to_le_bytes());
            h.update(s.l.0.to_le_bytes());
            h.update((s.q as u64).to_le_bytes());
            for t in row {
                h.update((t.action as u64).to_le_bytes());
                h.update(t.cost.to_bits().to_le_bytes());
                for &(n, p) in &t.successors {
                    h.update((n as u64).to_le_bytes());
                    h.update(p.to_bits().to_le_bytes());
                }
            }
        }
        for p in &self.pairs {
            for (a, b) in p.h.iter().zip(&p.i) {
                h.update([*a as u8 | ((*b as u8) << 1)]);
            }
        }
        hex::encode(h.finalize())
    }
}

fn letter_bits(m: &Mdp, d: &Dra) -> Result<Vec<u32>, ProductError> {
    m.ap.iter()
        .map(|a| {
            d.ap.iter()
                .position(|b| b == a)
                .map(|k| 1u32 << k)
                .ok_or_else(|| ProductError::ApMismatch(a.clone()))
        })
        .collect()
}

pub fn build_product(m: &Mdp, d: &Dra) -> Result<ProductAutomaton, ProductError> {
    build_product_with(m, d, Scope::Reachable)
}

pub fn build_product_with(
    m: &Mdp,
    d: &Dra,
    scope: Scope,
) -> Result<ProductAutomaton, ProductError> {
    let bits = letter_bits(m, d)?;
    let letter = |l: LabelSet| l.indices().fold(0, |acc, j| acc | bits[j]);
    let (x0, l0) = m.initial;
    if m.label_prob(x0, l0) <= 0.0 {
        return Err(ProductError::InitialLabel);
    }
    let s0 = PState {
        x: x0,
        l: l0,
        q: d.start,
    };

    let mut states = vec![s0];
    let mut index = HashMap::from([(s0, 0)]);
    let mut rows: Vec<Vec<PTransition>> = Vec::new();
    let mut queue = VecDeque::from([0]);

    let expand = |s: PState,
                  states: &mut Vec<PState>,
                  index: &mut HashMap<PState, PStateId>,
                  queue: &mut VecDeque<PStateId>| {
        let q_next = d.next(s.q, letter(s.l));
        m.rows[s.x]
            .iter()
            .map(|t| {
                let mut succ = Vec::new();
                for &(xn, p) in &t.successors {
                    for &(ln, pl) in &m.labels[xn] {
                        let key = PState {
                            x: xn,
                            l: ln,
                            q: q_next,
                        };
                        let id = *index.entry(key).or_insert_with(|| {
                            states.push(key);
                            queue.push_back(states.len() - 1);
                            states.len() - 1
                        });
                        succ.push((id, p * pl));
                    }
                }
                PTransition {
                    action: t.action,
                    cost: t.cost,
                    successors: succ,
                }
            })
            .collect::<Vec<_>>()
    };

    while let Some(s) = queue.pop_front() {
        debug_assert_eq!(s, rows.len());
        rows.push(expand(states[s], &mut states, &mut index, &mut queue));
    }
    if scope == Scope::All {
        let mut rest = Vec::new();
        for x in 0..m.num_states() {
            for &(l, _) in &m.labels[x] {
                for q in 0..d.num_states() {
                    let key = PState { x, l, q };
                    if !index.contains_key(&key) {
                        rest.push(key);
                    }
                }
            }
        }
        for key in rest {
            if let Entry::Vacant(e) = index.entry(key) {
                e.insert(states.len());
                states.push(key);
                queue.push_back(states.len() - 1);
            }
            while let Some(s) = queue.pop_front() {
                rows.push(expand(states[s], &mut states, &mut index, &mut queue));
            }
        }
    }

    let pairs = d
        .pairs
        .iter()
        .map(|p| ProductPair {
            h: states.iter().map(|s| p.h.contains(&s.q)).collect(),
            i: states.iter().map(|s| p.i.contains(&s.q)).collect(),
        })
        .collect();
    Ok(ProductAutomaton {
        states,
        rows,
        initial: 0,
        pairs,
        dra: d.clone(),
        model_ap: m.ap.clone(),
        actions: m.actions.clone(),
        model_state_names: m.state_names.clone(),
        letter_bits: bits,
        index,
    })
}
