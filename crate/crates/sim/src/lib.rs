//! Monte Carlo evaluation of synthesized policies: samples successors and
//! labels from the model, drives the executor and aggregates outcome,
//! cost and cycle statistics.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use riskplan_exec::{Baseline, ExecError, ExecMode, Executor};
use riskplan_model::Mdp;
use riskplan_product::{PStateId, ProductAutomaton, Region};
use riskplan_synth::{CompletePolicy, Mode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("policy and product differ: {0}")]
    Mismatch(#[from] ExecError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    pub baseline: Baseline,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            runs: 1000,
            steps: 500,
            seed: 0,
            baseline: Baseline::Optimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Violated the task before reaching `S_c`.
    Failure,
    /// Reached `S_c` before any violation.
    Success,
    Unfinished,
}

/// What one trajectory did. Times are step indices, the initial state
/// being step 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub entered_at: Option<usize>,
    pub failed_at: Option<usize>,
    pub component: Option<usize>,
    /// Cost accumulated before `entered_at`.
    pub prefix_cost: f64,
    pub total_cost: f64,
    /// Accepting cycles completed before the first violation.
    pub n_s: u32,
    /// Accepting cycles completed after the first violation.
    pub late_cycles: u32,
    /// Visits to `I'_c` of the entered component from entry on.
    pub i_visits: u32,
    /// Whether `H` of the entered component's pair was visited after entry.
    pub h_after_entry: bool,
    /// Steps actually executed.
    pub steps: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub format_version: u32,
    pub fingerprint: String,
    pub mode: Mode,
    pub baseline: String,
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    pub failures: usize,
    pub successes: usize,
    pub unfinished: usize,
    /// Reached `S_c` and completed an accepting cycle before any violation.
    pub suffix_successes: usize,
    /// Violated the task at any point.
    pub violated: usize,
    /// Violated, then completed an accepting cycle afterwards.
    pub recovered: usize,
    /// Runs stopped by an executor error.
    pub executor_errors: usize,
    pub mean_prefix_cost: Option<f64>,
    /// Total costs of accepting cyclic paths, in run order.
    pub cycle_costs: Vec<f64>,
    pub mean_cycle_cost: Option<f64>,
    /// Steps spent in states carrying each proposition.
    pub label_visits: BTreeMap<String, u64>,
    pub per_run: Vec<RunSummary>,
}

impl SimStats {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn n_s(&self) -> Vec<u32> {
        self.per_run.iter().map(|r| r.n_s).collect()
    }
}

fn draw<T: Copy, R: Rng + ?Sized>(items: &[(T, f64)], rng: &mut R) -> T {
    if items.len() == 1 {
        return items[0].0;
    }
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for &(v, p) in items {
        acc += p;
        if r < acc {
            return v;
        }
    }
    items[items.len() - 1].0
}

/// Per-run streams: the environment and the executor never share draws.
fn streams(seed: u64, run: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    env.set_stream(2 * run as u64);
    let mut act = ChaCha8Rng::seed_from_u64(seed);
    act.set_stream(2 * run as u64 + 1);
    (env, act)
}

struct Tracker<'a> {
    p: &'a ProductAutomaton,
    pol: &'a CompletePolicy,
    run: RunSummary,
    /// Component and cost of the open cycle, once an `I'_c` state was seen.
    open: Option<(usize, f64)>,
    cycles: Vec<f64>,
    labels: Vec<u64>,
}

impl<'a> Tracker<'a> {
    fn new(p: &'a ProductAutomaton, pol: &'a CompletePolicy) -> Self {
        Tracker {
            p,
            pol,
            run: RunSummary {
                outcome: Outcome::Unfinished,
                entered_at: None,
                failed_at: None,
                component: None,
                prefix_cost: 0.0,
                total_cost: 0.0,
                n_s: 0,
                late_cycles: 0,
                i_visits: 0,
                h_after_entry: false,
                steps: 0,
                error: None,
            },
            open: None,
            cycles: Vec::new(),
            labels: vec![0; p.model_ap.len()],
        }
    }

    fn pay(&mut self, cost: f64) {
        self.run.total_cost += cost;
        if self.run.entered_at.is_none() {
            self.run.prefix_cost += cost;
        }
        if let Some((_, c)) = &mut self.open {
            *c += cost;
        }
    }

    fn visit(&mut self, t: usize, s: PStateId, prev: Option<ExecMode>, mode: ExecMode) {
        for a in self.p.states[s].l.indices() {
            self.labels[a] += 1;
        }
        let left = matches!(prev, Some(ExecMode::Suffix(c)) if !self.pol.components[c].contains(s));
        if left || self.pol.region(s) == Region::Bad {
            self.run.failed_at.get_or_insert(t);
            self.open = None;
        }
        if let (Some(c), Some(_)) = (self.run.component, self.run.entered_at) {
            if self.p.in_h(self.pol.components[c].pair, s) {
                self.run.h_after_entry = true;
            }
        }
        let ExecMode::Suffix(c) = mode else {
            self.open = None;
            return;
        };
        if self.run.entered_at.is_none() {
            self.run.entered_at = Some(t);
            self.run.component = Some(c);
        }
        if self.open.is_some_and(|(k, _)| k != c) {
            self.open = None;
        }
        let comp = &self.pol.components[c];
        if !comp.is_accepting(s) {
            return;
        }
        if self.run.component == Some(c) {
            self.run.i_visits += 1;
        }
        if let Some((_, cost)) = self.open {
            self.cycles.push(cost);
            if self.run.failed_at.is_none() {
                self.run.n_s += 1;
            } else {
                self.run.late_cycles += 1;
            }
        }
        self.open = Some((c, 0.0));
    }

    fn finish(mut self, steps: usize) -> RunResult {
        self.run.steps = steps;
        self.run.outcome = match (self.run.entered_at, self.run.failed_at) {
            (Some(e), f) if f.is_none_or(|f| e < f) => Outcome::Success,
            (_, Some(_)) => Outcome::Failure,
            _ => Outcome::Unfinished,
        };
        (self.run, self.cycles, self.labels)
    }
}

/// Drives one trajectory, calling `visit(t, s_t, mode_{t-1}, mode_t, cost)`
/// for the initial state and after every step. Returns the number of
/// executed steps and the executor error that stopped the run, if any.
fn drive<F>(
    m: &Mdp,
    p: &ProductAutomaton,
    pol: &CompletePolicy,
    cfg: &SimConfig,
    run: usize,
    mut visit: F,
) -> Result<(usize, Option<String>), SimError>
where
    F: FnMut(usize, PStateId, Option<ExecMode>, ExecMode, f64),
{
    let (mut env, mut act) = streams(cfg.seed, run);
    let mut ex = Executor::new(p, pol, cfg.baseline)?;
    let (mut x, l0) = m.initial;
    ex.start(x, l0)?;
    visit(0, ex.state(), None, ex.mode(), 0.0);
    for t in 0..cfg.steps {
        let before = ex.mode();
        let mut step = || {
            let u = ex.act(&mut act)?;
            let tr = m.transition(x, u).ok_or(ExecError::NoPolicy(ex.state()))?;
            let next = draw(&tr.successors, &mut env);
            let l = draw(&m.labels[next], &mut env);
            ex.observe(next, l)?;
            Ok::<_, ExecError>((tr.cost, next))
        };
        match step() {
            Ok((cost, next)) => {
                x = next;
                visit(t + 1, ex.state(), Some(before), ex.mode(), cost);
            }
            Err(e) => return Ok((t, Some(e.to_string()))),
        }
    }
    Ok((cfg.steps, None))
}

/// One trajectory of `cfg.steps` actions from the model's initial observation.
pub fn simulate_run(
    m: &Mdp,
    p: &ProductAutomaton,
    pol: &CompletePolicy,
    cfg: &SimConfig,
    run: usize,
) -> Result<RunResult, SimError> {
    let mut tr = Tracker::new(p, pol);
    let (done, error) = drive(m, p, pol, cfg, run, |t, s, prev, mode, cost| {
        tr.pay(cost);
        tr.visit(t, s, prev, mode);
    })?;
    tr.run.error = error;
    Ok(tr.finish(done))
}

/// Product states visited by run `run`, the initial state first.
pub fn sample_path(
    m: &Mdp,
    p: &ProductAutomaton,
    pol: &CompletePolicy,
    cfg: &SimConfig,
    run: usize,
) -> Result<Vec<PStateId>, SimError> {
    let mut path = Vec::with_capacity(cfg.steps + 1);
    drive(m, p, pol, cfg, run, |_, s, _, _, _| path.push(s))?;
    Ok(path)
}

/// Summary, cycle costs and per-proposition visit counts of one run.
pub type RunResult = (RunSummary, Vec<f64>, Vec<u64>);

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Runs `cfg.runs` independent trajectories in parallel. Run `k` draws from
/// its own pair of streams, so the result does not depend on scheduling.
pub fn run_monte_carlo(
    m: &Mdp,
    p: &ProductAutomaton,
    pol: &CompletePolicy,
    cfg: &SimConfig,
) -> Result<SimStats, SimError> {
    if cfg.runs == 0 || cfg.steps == 0 {
        return Err(SimError::Config(format!(
            "runs = {}, steps = {}",
            cfg.runs, cfg.steps
        )));
    }
    if p.model_state_names != m.state_names || p.actions != m.actions {
        return Err(SimError::Config("model does not match the product".into()));
    }
    let results: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|k| simulate_run(m, p, pol, cfg, k))
        .collect::<Result<_, _>>()?;

    let mut labels = vec![0u64; p.model_ap.len()];
    let mut cycle_costs = Vec::new();
    let mut per_run = Vec::with_capacity(cfg.runs);
    for (run, cycles, l) in results {
        cycle_costs.extend(cycles);
        labels.iter_mut().zip(l).for_each(|(a, b)| *a += b);
        per_run.push(run);
    }
    let count = |f: &dyn Fn(&RunSummary) -> bool| per_run.iter().filter(|r| f(r)).count();
    Ok(SimStats {
        format_version: FORMAT_VERSION,
        fingerprint: pol.fingerprint.clone(),
        mode: pol.mode,
        baseline: match cfg.baseline {
            Baseline::Optimal => "optimal".into(),
            Baseline::RoundRobin => "round-robin".into(),
        },
        runs: cfg.runs,
        steps: cfg.steps,
        seed: cfg.seed,
        failures: count(&|r| r.outcome == Outcome::Failure),
        successes: count(&|r| r.outcome == Outcome::Success),
        unfinished: count(&|r| r.outcome == Outcome::Unfinished),
        suffix_successes: count(&|r| r.n_s > 0),
        violated: count(&|r| r.failed_at.is_some()),
        recovered: count(&|r| r.late_cycles > 0),
        executor_errors: count(&|r| r.error.is_some()),
        mean_prefix_cost: mean(
            per_run
                .iter()
                .filter(|r| r.outcome == Outcome::Success)
                .map(|r| r.prefix_cost),
        ),
        mean_cycle_cost: mean(cycle_costs.iter().copied()),
        cycle_costs,
        label_visits: p.model_ap.iter().cloned().zip(labels).collect(),
        per_run,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub total: usize,
    pub mean: Option<f64>,
    /// No accepting cycle was completed.
    pub empty: bool,
}

impl Histogram {
    /// `bin,count,fraction` rows, `bin` being the lower edge.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["bin", "count", "fraction"])?;
        for b in &self.bins {
            let frac = b.count as f64 / self.total as f64;
            out.write_record([b.start.to_string(), b.count.to_string(), frac.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Equal-width histogram of the accepting cycle costs over `[min, max]`.
pub fn cyclic_cost_histogram(stats: &SimStats, bins: usize) -> Histogram {
    let xs = &stats.cycle_costs;
    if xs.is_empty() || bins == 0 {
        return Histogram {
            bins: Vec::new(),
            total: 0,
            mean: None,
            empty: true,
        };
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = if hi - lo < 1e-9 { 1 } else { bins };
    let width = if n == 1 {
        (hi - lo).max(1e-9)
    } else {
        (hi - lo) / n as f64
    };
    let mut out: Vec<Bin> = (0..n)
        .map(|k| Bin {
            start: lo + k as f64 * width,
            end: lo + (k + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &x in xs {
        let k = (((x - lo) / width) as usize).min(n - 1);
        out[k].count += 1;
    }
    Histogram {
        bins: out,
        total: xs.len(),
        mean: stats.mean_cycle_cost,
        empty: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: u32,
    pub empirical: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub gamma_prex: f64,
    pub gamma_sufx: f64,
    /// Largest `n` not cut off by the horizon.
    pub horizon_limit: u32,
    pub rows: Vec<BoundRow>,
}

impl RiskReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.rows.iter().all(|r| r.margin >= -slack)
    }
}

/// Empirical probability of completing `n` accepting cycles without a
/// violation against `(1 − γ_prex)(1 − γ_sufx)^n`, for each `n` up to the
/// smallest cycle count among runs that never violated the task.
pub fn risk_bound_check(stats: &SimStats, gamma_prex: f64, gamma_sufx: f64) -> RiskReport {
    let limit = stats
        .per_run
        .iter()
        .filter(|r| r.entered_at.is_some() && r.failed_at.is_none())
        .map(|r| r.n_s)
        .min()
        .unwrap_or(0);
    let runs = stats.runs as f64;
    let rows = (0..=limit)
        .map(|n| {
            let ok = stats
                .per_run
                .iter()
                .filter(|r| r.outcome == Outcome::Success && (n == 0 || r.n_s >= n))
                .count();
            let empirical = ok as f64 / runs;
            let bound = (1.0 - gamma_prex) * (1.0 - gamma_sufx).powi(n as i32);
            BoundRow {
                n,
                empirical,
                bound,
                margin: empirical - bound,
            }
        })
        .collect();
    RiskReport {
        gamma_prex,
        gamma_sufx,
        horizon_limit: limit,
        rows,
    }
}
