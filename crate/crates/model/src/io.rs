//! MDP JSON documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{Mdp, Transition, Violation};
use crate::LabelSet;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct MdpDoc {
    pub format_version: u32,
    pub ap: Vec<String>,
    pub actions: Vec<String>,
    pub states: Vec<StateDoc>,
    pub transitions: Vec<TransitionDoc>,
    pub costs: Vec<CostDoc>,
    pub initial: InitialDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateDoc {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub labels: Vec<LabelDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelDoc {
    pub subset: Vec<String>,
    pub prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub from: usize,
    pub action: String,
    pub to: usize,
    pub prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CostDoc {
    pub state: usize,
    pub action: String,
    pub cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InitialDoc {
    pub state: usize,
    pub label: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0}")]
    Version(u32),
    #[error("state ids must be 0..{n} in order; found {found} at position {pos}")]
    StateOrder { n: usize, pos: usize, found: usize },
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("unknown proposition {0:?}")]
    UnknownProposition(String),
    #[error("state {0} out of range")]
    UnknownState(usize),
    #[error("no cost given for ({state}, {action})")]
    MissingCost { state: usize, action: String },
    #[error("cost given for ({state}, {action}) which has no transitions")]
    OrphanCost { state: usize, action: String },
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

fn action_index(m: &[String], name: &str) -> Result<usize, ModelIoError> {
    m.iter()
        .position(|a| a == name)
        .ok_or_else(|| ModelIoError::UnknownAction(name.to_string()))
}

fn label_of(names: &[String], ap: &[String]) -> Result<LabelSet, ModelIoError> {
    LabelSet::from_names(names, ap).map_err(ModelIoError::UnknownProposition)
}

pub fn from_doc(doc: MdpDoc) -> Result<Mdp, ModelIoError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(ModelIoError::Version(doc.format_version));
    }
    let n = doc.states.len();
    let mut labels = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    for (pos, s) in doc.states.iter().enumerate() {
        if s.id != pos {
            return Err(ModelIoError::StateOrder {
                n,
                pos,
                found: s.id,
            });
        }
        names.push(s.name.clone().unwrap_or_else(|| format!("x{pos}")));
        let mut ls = Vec::with_capacity(s.labels.len());
        for l in &s.labels {
            ls.push((label_of(&l.subset, &doc.ap)?, l.prob));
        }
        labels.push(ls);
    }

    let mut rows: Vec<BTreeMap<usize, Vec<(usize, f64)>>> = vec![BTreeMap::new(); n];
    for t in &doc.transitions {
        if t.from >= n {
            return Err(ModelIoError::UnknownState(t.from));
        }
        if t.to >= n {
            return Err(ModelIoError::UnknownState(t.to));
        }
        let u = action_index(&doc.actions, &t.action)?;
        rows[t.from].entry(u).or_default().push((t.to, t.prob));
    }
    let mut costs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for c in &doc.costs {
        if c.state >= n {
            return Err(ModelIoError::UnknownState(c.state));
        }
        let u = action_index(&doc.actions, &c.action)?;
        if !rows[c.state].contains_key(&u) {
            return Err(ModelIoError::OrphanCost {
                state: c.state,
                action: c.action.clone(),
            });
        }
        costs.insert((c.state, u), c.cost);
    }
    let mut out_rows = Vec::with_capacity(n);
    for (x, row) in rows.into_iter().enumerate() {
        let mut r = Vec::with_capacity(row.len());
        for (u, successors) in row {
            let cost = *costs
                .get(&(x, u))
                .ok_or_else(|| ModelIoError::MissingCost {
                    state: x,
                    action: doc.actions[u].clone(),
                })?;
            r.push(Transition {
                action: u,
                cost,
                successors,
            });
        }
        out_rows.push(r);
    }
    if doc.initial.state >= n {
        return Err(ModelIoError::UnknownState(doc.initial.state));
    }
    let l0 = label_of(&doc.initial.label, &doc.ap)?;
    let m = Mdp {
        ap: doc.ap,
        actions: doc.actions,
        state_names: names,
        rows: out_rows,
        labels,
        initial: (doc.initial.state, l0),
    };
    let v = m.validate();
    if !v.is_empty() {
        return Err(ModelIoError::Invalid(v));
    }
    Ok(m)
}

pub fn to_doc(m: &Mdp) -> MdpDoc {
    let names = |l: LabelSet| {
        l.names(&m.ap)
            .into_iter()
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    let mut transitions = Vec::new();
    let mut costs = Vec::new();
    for (x, row) in m.rows.iter().enumerate() {
        for t in row {
            let action = m.actions[t.action].clone();
            for &(to, prob) in &t.successors {
                transitions.push(TransitionDoc {
                    from: x,
                    action: action.clone(),
                    to,
                    prob,
                });
            }
            costs.push(CostDoc {
                state: x,
                action,
                cost: t.cost,
            });
        }
    }
    MdpDoc {
        format_version: FORMAT_VERSION,
        ap: m.ap.clone(),
        actions: m.actions.clone(),
        states: (0..m.num_states())
            .map(|x| StateDoc {
                id: x,
                name: Some(m.state_names[x].clone()),
                labels: m.labels[x]
                    .iter()
                    .map(|&(l, prob)| LabelDoc {
                        subset: names(l),
                        prob,
                    })
                    .collect(),
            })
            .collect(),
        transitions,
        costs,
        initial: InitialDoc {
            state: m.initial.0,
            label: names(m.initial.1),
        },
    }
}

pub fn from_json(text: &str) -> Result<Mdp, ModelIoError> {
    from_doc(serde_json::from_str(text)?)
}

pub fn to_json(m: &Mdp) -> String {
    serde_json::to_string_pretty(&to_doc(m)).expect("model documents always serialize")
}
