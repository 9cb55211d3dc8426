use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{ActionId, Mdp, StateId};
use crate::LabelSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFlags {
    pub prefix: bool,
    pub suffix: bool,
    pub bad: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: StateId,
    pub label: LabelSet,
    /// `None` when no action was available at this step.
    pub action: Option<ActionId>,
}

/// A finite run `x_0 l_0 u_0 x_1 l_1 u_1 ...`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub steps: Vec<TraceStep>,
    pub product_states: Vec<usize>,
    pub flags: Vec<StepFlags>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("horizon {horizon} needs {needed} steps, trace has {len}")]
    TooShort {
        horizon: usize,
        needed: usize,
        len: usize,
    },
    #[error("step {0} has no action")]
    MissingAction(usize),
    #[error("step {step}: action {action} is not allowed at state {state}")]
    NotAllowed {
        step: usize,
        state: StateId,
        action: ActionId,
    },
}

impl RunTrace {
    pub fn push(&mut self, state: StateId, label: LabelSet, action: Option<ActionId>) {
        self.steps.push(TraceStep {
            state,
            label,
            action,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// `(1/n) · Σ_{t=0..n} c(x_t, u_t)`, which reads steps `0..=n`.
pub fn mean_total_cost(m: &Mdp, trace: &RunTrace, n: usize) -> Result<f64, TraceError> {
    if n == 0 {
        return Err(TraceError::ZeroHorizon);
    }
    if trace.steps.len() < n + 1 {
        return Err(TraceError::TooShort {
            horizon: n,
            needed: n + 1,
            len: trace.steps.len(),
        });
    }
    let mut total = 0.0;
    for (t, st) in trace.steps[..=n].iter().enumerate() {
        let u = st.action.ok_or(TraceError::MissingAction(t))?;
        total += m.cost(st.state, u).ok_or(TraceError::NotAllowed {
            step: t,
            state: st.state,
            action: u,
        })?;
    }
    Ok(total / n as f64)
}
