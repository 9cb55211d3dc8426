//! Online execution of a synthesized policy: tracks the reachable product
//! state from observed model states and labels, samples actions, resets the
//! automaton after bad states and offers the Round-Robin baseline.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use riskplan_model::{ActionId, LabelSet, StateId};
use riskplan_product::{PState, PStateId, ProductAutomaton, Region};
use riskplan_synth::{reset_state, CompletePolicy, Mode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecMode {
    Prefix,
    Suffix(usize),
    Bad,
}

impl ExecMode {
    pub fn name(self) -> &'static str {
        match self {
            ExecMode::Prefix => "prefix",
            ExecMode::Suffix(_) => "suffix",
            ExecMode::Bad => "bad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Baseline {
    /// The synthesized suffix policy.
    #[default]
    Optimal,
    /// Rotate through `U'_c` in ascending action id inside an AMEC.
    RoundRobin,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExecError {
    #[error("step {t}: observation (x={x}, label={label:#b}) is not a successor of the last state and action")]
    Desync { t: usize, x: StateId, label: u32 },
    #[error(
        "initial observation (x={x}, label={label:#b}) does not match the product's initial state"
    )]
    InitialMismatch { x: StateId, label: u32 },
    #[error("no action was applied before this observation")]
    NoAction,
    #[error("policy has no distribution at product state {0}")]
    NoPolicy(PStateId),
    #[error("Round-Robin asked outside an accepting end component (state {0})")]
    OutsideAmec(PStateId),
    #[error("policy and product differ")]
    Fingerprint,
}

/// One line of the execution log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub x: String,
    pub l: Vec<String>,
    pub q: usize,
    pub u: String,
    pub mode: String,
}

/// Finite-memory controller: the current product state, its mode and the
/// Round-Robin cursors.
#[derive(Debug, Clone)]
pub struct Executor<'a> {
    p: &'a ProductAutomaton,
    pol: &'a CompletePolicy,
    baseline: Baseline,
    t: usize,
    state: PStateId,
    mode: ExecMode,
    last: Option<ActionId>,
    cursors: HashMap<PStateId, usize>,
}

impl<'a> Executor<'a> {
    pub fn new(
        p: &'a ProductAutomaton,
        pol: &'a CompletePolicy,
        baseline: Baseline,
    ) -> Result<Self, ExecError> {
        if pol.partition.region.len() != p.num_states() {
            return Err(ExecError::Fingerprint);
        }
        let mut ex = Executor {
            p,
            pol,
            baseline,
            t: 0,
            state: p.initial,
            mode: ExecMode::Prefix,
            last: None,
            cursors: HashMap::new(),
        };
        ex.mode = ex.mode_of(p.initial);
        Ok(ex)
    }

    /// Checks the first observation against `⟨x0, l0, q0⟩`.
    pub fn start(&mut self, x: StateId, l: LabelSet) -> Result<PStateId, ExecError> {
        let s0 = self.p.states[self.p.initial];
        if s0.x != x || s0.l != l {
            return Err(ExecError::InitialMismatch { x, label: l.0 });
        }
        Ok(self.state)
    }

    pub fn state(&self) -> PStateId {
        self.state
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    pub fn time(&self) -> usize {
        self.t
    }

    fn mode_of(&self, s: PStateId) -> ExecMode {
        if let Some(c) = self.pol.component_of(s) {
            return ExecMode::Suffix(c);
        }
        match self.pol.region(s) {
            Region::Bad => ExecMode::Bad,
            _ => ExecMode::Prefix,
        }
    }

    /// Distribution the policy prescribes at the current state.
    pub fn distribution(&self) -> Result<Vec<(ActionId, f64)>, ExecError> {
        let s = self.state;
        let d = match self.mode {
            ExecMode::Prefix => self.pol.prefix.get(s).cloned(),
            ExecMode::Suffix(c) => self.pol.components[c].policy.get(s).cloned(),
            ExecMode::Bad => self.pol.recovery.get(&s).map(|&u| vec![(u, 1.0)]),
        };
        d.ok_or(ExecError::NoPolicy(s))
    }

    /// Picks `u_t` at the current state.
    pub fn act<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<ActionId, ExecError> {
        let u = match (self.baseline, self.mode) {
            (Baseline::RoundRobin, ExecMode::Suffix(_)) if self.pol.mode == Mode::Amec => {
                self.round_robin_step()?
            }
            _ => sample(&self.distribution()?, rng),
        };
        self.last = Some(u);
        Ok(u)
    }

    /// Records an externally chosen action for the next observation.
    pub fn apply(&mut self, u: ActionId) {
        self.last = Some(u);
    }

    /// Next action of the per-state rotation over `U'_c`.
    pub fn round_robin_step(&mut self) -> Result<ActionId, ExecError> {
        let s = self.state;
        let ExecMode::Suffix(c) = self.mode else {
            return Err(ExecError::OutsideAmec(s));
        };
        if self.pol.mode != Mode::Amec {
            return Err(ExecError::OutsideAmec(s));
        }
        let mut actions = self.pol.components[c]
            .actions_at(s)
            .ok_or(ExecError::OutsideAmec(s))?
            .to_vec();
        actions.sort_unstable();
        let k = self.cursors.entry(s).or_insert(0);
        let u = actions[*k % actions.len()];
        *k = (*k + 1) % actions.len();
        Ok(u)
    }

    /// Advances to the product state of the observed `(x_t, l_t)`.
    pub fn observe(&mut self, x: StateId, l: LabelSet) -> Result<PStateId, ExecError> {
        let u = self.last.take().ok_or(ExecError::NoAction)?;
        let prev = self.p.states[self.state];
        let desync = ExecError::Desync {
            t: self.t + 1,
            x,
            label: l.0,
        };
        let t = self.p.transition(self.state, u).ok_or(desync.clone())?;
        let q_next = self.p.dra.next(prev.q, self.p.letter(prev.l));
        let normal = self.p.id(PState { x, l, q: q_next });
        if !t.successors.iter().any(|&(n, _)| Some(n) == normal) {
            return Err(desync);
        }
        let next = if self.mode == ExecMode::Bad {
            reset_state(self.p, &self.pol.partition, prev.q, prev.l, x, l).or(normal)
        } else {
            normal
        };
        self.state = next.expect("checked against the successor list");
        self.mode = self.mode_of(self.state);
        self.t += 1;
        Ok(self.state)
    }

    /// Log line for the current state and the chosen action.
    pub fn record(&self, u: ActionId) -> TraceRecord {
        let s = self.p.states[self.state];
        TraceRecord {
            t: self.t,
            x: self.p.model_state_names[s.x].clone(),
            l: s.l
                .names(&self.p.model_ap)
                .into_iter()
                .map(String::from)
                .collect(),
            q: s.q,
            u: self.p.actions[u].clone(),
            mode: self.mode.name().to_string(),
        }
    }
}

/// Inverse-CDF draw; the last action absorbs rounding.
pub fn sample<R: Rng + ?Sized>(dist: &[(ActionId, f64)], rng: &mut R) -> ActionId {
    if dist.len() == 1 {
        return dist[0].0;
    }
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for &(u, p) in dist {
        acc += p;
        if r < acc {
            return u;
        }
    }
    dist[dist.len() - 1].0
}

/// Writes records as line-delimited JSON.
pub fn write_trace<W: Write>(mut w: W, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
