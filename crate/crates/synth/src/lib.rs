//! Policy synthesis on the product automaton: occupancy-measure programs
//! for the plan prefix and suffix, policy extraction and the recovery rule
//! for bad states.

use std::time::{Duration, Instant};

use riskplan_graph::{compute_amecs, compute_asccs};
use riskplan_lp::{LpError, LpSolver, LpStatus, SimplexSolver, Tolerances};
use riskplan_model::ActionId;
use riskplan_product::{partition_states, PStateId, ProductAutomaton, ProductError, Region};
use thiserror::Error;

pub mod extract;
pub mod policy;
pub mod programs;
pub mod recovery;

pub use extract::{
    extract_policy, greedy_to_target, point, uniform, Distribution, StationaryPolicy,
};
pub use policy::{
    from_doc, from_json, to_doc, to_json, CompletePolicy, ComponentPolicy, ComponentStats,
    Diagnostics, Mode, Params, PolicyDoc,
};
pub use programs::{
    build_combined_program, build_max_reach_program, build_prefix_program,
    build_relaxed_suffix_program, build_suffix_program, PrefixMdp, Program, SuffixMdp,
};
pub use recovery::{label_distance, projected_distance, recovery_policy, reset_state};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no accepting end component and no accepting SCC")]
    NoComponents,
    #[error("component has no accepting state")]
    NoAcceptingStates,
    #[error("action {action} is not available at state {state}")]
    UnknownAction { state: PStateId, action: ActionId },
    #[error("action {action} at state {state} leaves its end component")]
    NotClosed { state: PStateId, action: ActionId },
    #[error("risk bound {gamma} is infeasible; the best reach probability is {max_reach}")]
    Infeasible { gamma: f64, max_reach: f64 },
    #[error("program is unbounded; the prefix model is not transient")]
    Unbounded,
    #[error("solver failed: {0}")]
    Numeric(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error("policy fingerprint {policy} does not match product fingerprint {product}")]
    Fingerprint { policy: String, product: String },
    #[error("malformed policy document: {0}")]
    Doc(String),
}

/// Wall-clock time of each synthesis stage.
#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub components: Duration,
    pub assemble: Duration,
    pub solve: Duration,
    pub extract: Duration,
}

/// Components and partition shared by every program built on `p`.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mode: Mode,
    pub comps: Vec<SuffixMdp>,
    pub partition: riskplan_product::StatePartition,
    pub prefix: PrefixMdp,
}

impl Setup {
    /// AMECs of all pairs when any exist, otherwise the ASCCs.
    pub fn new(p: &ProductAutomaton) -> Result<Self, SynthError> {
        let amecs = compute_amecs(p);
        let (mode, comps) = if amecs.is_empty() {
            let asccs = compute_asccs(p);
            (
                Mode::Relaxed,
                asccs
                    .iter()
                    .map(|a| SuffixMdp::from_ascc(p, a))
                    .collect::<Vec<_>>(),
            )
        } else {
            (Mode::Amec, amecs.iter().map(SuffixMdp::from_amec).collect())
        };
        if comps.is_empty() {
            return Err(SynthError::NoComponents);
        }
        let mut goal: Vec<PStateId> = comps
            .iter()
            .flat_map(|c| c.states.iter().copied())
            .collect();
        goal.sort_unstable();
        goal.dedup();
        let partition = partition_states(p, &goal)?;
        let prefix = PrefixMdp::new(p, &partition);
        Ok(Setup {
            mode,
            comps,
            partition,
            prefix,
        })
    }
}

fn solve(prog: &Program, solver: &dyn LpSolver) -> Result<riskplan_lp::LpSolution, SynthError> {
    prog.lp.check()?;
    Ok(solver.solve(&prog.lp, &Tolerances::default())?)
}

/// Components, combined program, policy extraction and recovery, solved
/// with the bundled simplex solver.
pub fn synthesize(p: &ProductAutomaton, params: Params) -> Result<CompletePolicy, SynthError> {
    synthesize_timed(p, params, &SimplexSolver::default()).map(|r| r.0)
}

pub fn synthesize_timed(
    p: &ProductAutomaton,
    params: Params,
    solver: &dyn LpSolver,
) -> Result<(CompletePolicy, Timings), SynthError> {
    params.check()?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let setup = Setup::new(p)?;
    timings.components = t.elapsed();
    log::info!("{} {:?} components", setup.comps.len(), setup.mode);

    let t = Instant::now();
    let prog = build_combined_program(
        p,
        &setup.prefix,
        &setup.comps,
        params.gamma,
        params.beta,
        params.penalty_d,
    )?;
    timings.assemble = t.elapsed();
    log::info!(
        "program: {} rows, {} columns, {} nonzeros",
        prog.lp.num_constraints(),
        prog.lp.num_vars(),
        prog.lp.num_nonzeros()
    );

    let t = Instant::now();
    let sol = solve(&prog, solver)?;
    timings.solve = t.elapsed();
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            let max_reach = max_reach_probability(p, &setup.prefix, solver)?;
            return Err(SynthError::Infeasible {
                gamma: params.gamma,
                max_reach,
            });
        }
        LpStatus::Unbounded => return Err(SynthError::Unbounded),
        LpStatus::NumericFailure => {
            return Err(SynthError::Numeric("constraint replay failed".into()))
        }
    }

    let t = Instant::now();
    let v = &sol.values;
    let prefix_values: Vec<_> = prog
        .layout
        .prefix
        .iter()
        .map(|x| (x.state, x.action, v[x.var]))
        .collect();
    let goal = |s| setup.partition.of(s) == Region::Goal;
    let prefix_greedy = greedy_to_target(
        p,
        &setup.prefix.normal,
        &[],
        |s| p.allowed(s).collect(),
        goal,
        params.penalty_d,
    );
    let prefix = extract_policy(&setup.prefix.normal, &prefix_values, |s| {
        point(prefix_greedy[&s])
    });

    let mut components = Vec::with_capacity(setup.comps.len());
    for (k, z) in setup.comps.iter().enumerate() {
        let block = &prog.layout.suffix[k];
        let values: Vec<_> = block
            .vars
            .iter()
            .map(|x| (x.state, x.action, v[x.var]))
            .collect();
        let (accepting, interior): (Vec<PStateId>, Vec<PStateId>) =
            z.states.iter().partition(|&&s| z.is_i[z.local(s).unwrap()]);
        let actions = |s| z.actions[z.local(s).unwrap()].clone();
        let is_i = |s| z.local(s).is_some_and(|j| z.is_i[j]);
        let greedy = greedy_to_target(p, &interior, &accepting, actions, is_i, params.penalty_d);
        let policy = extract_policy(&z.states, &values, |s| point(greedy[&s]));
        let stats = ComponentStats {
            suffix_cost: prog.suffix_cost(k, v),
            entry_mass: prog.entry_mass(k, v),
            bad_mass: prog.bad_mass(k, v),
            steps: prog.steps(k, v),
        };
        let mut order: Vec<usize> = (0..z.len()).collect();
        order.sort_by_key(|&i| z.states[i]);
        let mut i_states: Vec<PStateId> = (0..z.len())
            .filter(|&i| z.is_i[i])
            .map(|i| z.states[i])
            .collect();
        i_states.sort_unstable();
        components.push(ComponentPolicy {
            pair: z.pair,
            states: order.iter().map(|&i| z.states[i]).collect(),
            i_states,
            actions: order.iter().map(|&i| z.actions[i].clone()).collect(),
            policy,
            stats,
        });
    }
    let recovery = recovery_policy(p, &setup.partition);
    timings.extract = t.elapsed();

    let reach = prog
        .reach_probability(v, setup.prefix.initial_in_goal())
        .min(1.0);
    let suffix_cost: f64 = components.iter().map(|c| c.stats.suffix_cost).sum();
    let steps: f64 = components.iter().map(|c| c.stats.steps).sum();
    let entry: f64 = components.iter().map(|c| c.stats.entry_mass).sum();
    let bad: f64 = components.iter().map(|c| c.stats.bad_mass).sum();
    let diagnostics = Diagnostics {
        objective: sol.objective,
        prefix_cost: prog.prefix_cost(v),
        suffix_cost,
        mean_suffix_cost: if steps > 0.0 {
            suffix_cost / steps
        } else {
            0.0
        },
        reach_probability: reach,
        gamma_prex: (1.0 - reach).max(0.0),
        gamma_sufx: if entry > 0.0 { bad / entry } else { 0.0 },
        lp_rows: prog.lp.num_constraints(),
        lp_cols: prog.lp.num_vars(),
        lp_nonzeros: prog.lp.num_nonzeros(),
        lp_iterations: sol.iterations,
    };
    let policy = CompletePolicy {
        fingerprint: p.fingerprint(),
        mode: setup.mode,
        params,
        partition: setup.partition,
        prefix,
        components,
        recovery,
        diagnostics,
    };
    Ok((policy, timings))
}

/// Largest probability of reaching `S_c` from the initial state.
pub fn max_reach_probability(
    p: &ProductAutomaton,
    z: &PrefixMdp,
    solver: &dyn LpSolver,
) -> Result<f64, SynthError> {
    if z.initial_in_goal() {
        return Ok(1.0);
    }
    let prog = build_max_reach_program(p, z);
    let sol = solve(&prog, solver)?;
    match sol.status {
        LpStatus::Optimal => Ok(prog.reach_probability(&sol.values, false).clamp(0.0, 1.0)),
        // no flow row at all: the initial state is bad
        LpStatus::Infeasible => Ok(0.0),
        LpStatus::Unbounded => Err(SynthError::Unbounded),
        LpStatus::NumericFailure => Err(SynthError::Numeric("max-reach replay failed".into())),
    }
}
