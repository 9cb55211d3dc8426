use std::collections::BTreeSet;
use std::fmt;

use crate::LabelSet;

pub type StateId = usize;
pub type ActionId = usize;

/// Tolerance for probability sums and equalities.
pub const PROB_TOL: f64 = 1e-9;

/// One allowed state-action pair `(x, u)` with its cost and successor
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub action: ActionId,
    pub cost: f64,
    pub successors: Vec<(StateId, f64)>,
}

/// A probabilistically-labeled MDP.
///
/// `rows[x]` lists the allowed actions of `x` in ascending action id, each
/// with its successor distribution `p_D(x, u, ·)` and cost `c_D(x, u)`.
/// `labels[x]` lists the label sets `L(x)` with their probabilities
/// `p_L(x, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub ap: Vec<String>,
    pub actions: Vec<String>,
    pub state_names: Vec<String>,
    pub rows: Vec<Vec<Transition>>,
    pub labels: Vec<Vec<(LabelSet, f64)>>,
    pub initial: (StateId, LabelSet),
}

/// A failed well-formedness rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoActions {
        state: StateId,
    },
    UnknownAction {
        state: StateId,
        action: ActionId,
    },
    DuplicateAction {
        state: StateId,
        action: ActionId,
    },
    UnknownSuccessor {
        state: StateId,
        action: ActionId,
        successor: StateId,
    },
    NegativeProbability {
        state: StateId,
        action: ActionId,
        successor: StateId,
    },
    RowSum {
        state: StateId,
        action: ActionId,
        sum: f64,
    },
    NonPositiveCost {
        state: StateId,
        action: ActionId,
        cost: f64,
    },
    NoLabels {
        state: StateId,
    },
    NonPositiveLabel {
        state: StateId,
        label: LabelSet,
    },
    LabelSum {
        state: StateId,
        sum: f64,
    },
    UnknownProposition {
        state: StateId,
        label: LabelSet,
    },
    InitialState {
        state: StateId,
    },
    InitialLabel {
        state: StateId,
        label: LabelSet,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoActions { state } => write!(f, "state {state}: no allowed action"),
            UnknownAction { state, action } => write!(f, "state {state}: unknown action {action}"),
            DuplicateAction { state, action } => {
                write!(f, "state {state}: action {action} listed twice")
            }
            UnknownSuccessor {
                state,
                action,
                successor,
            } => {
                write!(f, "({state}, {action}): successor {successor} out of range")
            }
            NegativeProbability {
                state,
                action,
                successor,
            } => {
                write!(
                    f,
                    "({state}, {action}): negative probability to {successor}"
                )
            }
            RowSum { state, action, sum } => {
                write!(
                    f,
                    "({state}, {action}): successor probabilities sum to {sum}"
                )
            }
            NonPositiveCost {
                state,
                action,
                cost,
            } => {
                write!(f, "({state}, {action}): cost {cost} is not positive")
            }
            NoLabels { state } => write!(f, "state {state}: empty label distribution"),
            NonPositiveLabel { state, label } => {
                write!(
                    f,
                    "state {state}: label {label:?} has non-positive probability"
                )
            }
            LabelSum { state, sum } => write!(f, "state {state}: label probabilities sum to {sum}"),
            UnknownProposition { state, label } => {
                write!(
                    f,
                    "state {state}: label {label:?} uses an undeclared proposition"
                )
            }
            InitialState { state } => write!(f, "initial state {state} out of range"),
            InitialLabel { state, label } => {
                write!(f, "initial label {label:?} is not a label of state {state}")
            }
        }
    }
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    /// Number of distinct `(x, x̌)` pairs with positive probability under
    /// some action.
    pub fn num_edges(&self) -> usize {
        let mut edges = BTreeSet::new();
        for (x, row) in self.rows.iter().enumerate() {
            for t in row {
                for &(y, p) in &t.successors {
                    if p > 0.0 {
                        edges.insert((x, y));
                    }
                }
            }
        }
        edges.len()
    }

    pub fn transition(&self, x: StateId, u: ActionId) -> Option<&Transition> {
        self.rows.get(x)?.iter().find(|t| t.action == u)
    }

    pub fn allowed(&self, x: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.rows[x].iter().map(|t| t.action)
    }

    /// `Post(x, u)`: successors with positive probability.
    pub fn post(&self, x: StateId, u: ActionId) -> Vec<StateId> {
        self.transition(x, u)
            .map(|t| {
                t.successors
                    .iter()
                    .filter(|s| s.1 > 0.0)
                    .map(|s| s.0)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn trans_prob(&self, x: StateId, u: ActionId, y: StateId) -> f64 {
        self.transition(x, u)
            .map(|t| t.successors.iter().filter(|s| s.0 == y).map(|s| s.1).sum())
            .unwrap_or(0.0)
    }

    pub fn cost(&self, x: StateId, u: ActionId) -> Option<f64> {
        self.transition(x, u).map(|t| t.cost)
    }

    pub fn label_prob(&self, x: StateId, l: LabelSet) -> f64 {
        self.labels[x]
            .iter()
            .filter(|e| e.0 == l)
            .map(|e| e.1)
            .sum()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    /// Checks every model invariant. An empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.num_states();
        let ap_mask = if self.ap.len() >= 32 {
            u32::MAX
        } else {
            (1u32 << self.ap.len()) - 1
        };
        for (x, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                out.push(Violation::NoActions { state: x });
            }
            let mut seen = BTreeSet::new();
            for t in row {
                let u = t.action;
                if u >= self.actions.len() {
                    out.push(Violation::UnknownAction {
                        state: x,
                        action: u,
                    });
                }
                if !seen.insert(u) {
                    out.push(Violation::DuplicateAction {
                        state: x,
                        action: u,
                    });
                }
                let mut sum = 0.0;
                for &(y, p) in &t.successors {
                    if y >= n {
                        out.push(Violation::UnknownSuccessor {
                            state: x,
                            action: u,
                            successor: y,
                        });
                    }
                    if p < 0.0 {
                        out.push(Violation::NegativeProbability {
                            state: x,
                            action: u,
                            successor: y,
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_TOL {
                    out.push(Violation::RowSum {
                        state: x,
                        action: u,
                        sum,
                    });
                }
                if !(t.cost > 0.0) {
                    out.push(Violation::NonPositiveCost {
                        state: x,
                        action: u,
                        cost: t.cost,
                    });
                }
            }
        }
        for x in 0..n {
            let labels = self.labels.get(x).map(Vec::as_slice).unwrap_or(&[]);
            if labels.is_empty() {
                out.push(Violation::NoLabels { state: x });
                continue;
            }
            let mut sum = 0.0;
            for &(l, p) in labels {
                if !(p > 0.0) {
                    out.push(Violation::NonPositiveLabel { state: x, label: l });
                }
                if l.0 & !ap_mask != 0 {
                    out.push(Violation::UnknownProposition { state: x, label: l });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(Violation::LabelSum { state: x, sum });
            }
        }
        let (x0, l0) = self.initial;
        if x0 >= n {
            out.push(Violation::InitialState { state: x0 });
        } else if self.label_prob(x0, l0) <= 0.0 {
            out.push(Violation::InitialLabel {
                state: x0,
                label: l0,
            });
        }
        out
    }

    /// The two-state model that moves back and forth between `S1` and `S2`
    /// under the single action `f`. `S1` is occupied by an obstacle with
    /// probability 0.01 and `S2` is the base.
    pub fn two_state_toy() -> Mdp {
        let ap = vec!["obs".to_string(), "b".to_string()];
        let obs = LabelSet::singleton(0);
        let b = LabelSet::singleton(1);
        let row = |to| {
            vec![Transition {
                action: 0,
                cost: 1.0,
                successors: vec![(to, 1.0)],
            }]
        };
        Mdp {
            ap,
            actions: vec!["f".to_string()],
            state_names: vec!["S1".to_string(), "S2".to_string()],
            rows: vec![row(1), row(0)],
            labels: vec![vec![(LabelSet::EMPTY, 0.99), (obs, 0.01)], vec![(b, 1.0)]],
            initial: (0, LabelSet::EMPTY),
        }
    }
}
