use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use riskplan_dra::{parse_dra, Dra};
use riskplan_exec::Baseline;
use riskplan_graph::{compute_amecs, compute_asccs};
use riskplan_lp::SimplexSolver;
use riskplan_model::grid::{build_grid_model, GridConfig};
use riskplan_model::{io as model_io, presets, Mdp};
use riskplan_product::{
    build_product, partition_states, to_dot, to_prism, ProductAutomaton, Region, StatePartition,
};
use riskplan_sim::{cyclic_cost_histogram, run_monte_carlo, SimConfig, SimError};
use riskplan_synth::{
    build_combined_program, from_json, synthesize_timed, to_json, Diagnostics, Mode, Params, Setup,
    SynthError,
};
use serde::Serialize;
use thiserror::Error;

use crate::{
    BaselineArg, ExportArg, GenGridArgs, InspectArgs, ParamArgs, SimulateArgs, SynthArgs, TaskArgs,
};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0:#}")]
    Input(anyhow::Error),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0:#}")]
    Internal(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Input(_) => 3,
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Infeasible { gamma, max_reach } => Failure::Infeasible(format!(
                "risk bound {gamma} is infeasible: the best probability of reaching the accepting components is \
                 {max_reach:.6}, so the smallest feasible risk is {:.6}",
                (1.0 - max_reach).max(0.0)
            )),
            SynthError::InvalidParams(_)
            | SynthError::NoComponents
            | SynthError::Fingerprint { .. }
            | SynthError::Doc(_)
            | SynthError::Product(_) => Failure::Input(e.into()),
            other => Failure::Internal(other.into()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Mismatch(_) => Failure::Input(e.into()),
            other => Failure::Internal(other.into()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input)
}

fn load_model(path: &Path) -> Result<Mdp, Failure> {
    model_io::from_json(&read(path)?)
        .with_context(|| format!("model {}", path.display()))
        .map_err(input)
}

fn load_dra(path: &Path) -> Result<Dra, Failure> {
    parse_dra(&read(path)?)
        .with_context(|| format!("automaton {}", path.display()))
        .map_err(input)
}

fn load_task(task: &TaskArgs) -> Result<(Mdp, ProductAutomaton), Failure> {
    let m = load_model(&task.model)?;
    let d = load_dra(&task.dra)?;
    let p = build_product(&m, &d).map_err(input)?;
    Ok((m, p))
}

fn params(a: ParamArgs) -> Result<Params, Failure> {
    let p = Params {
        gamma: a.gamma,
        beta: a.beta,
        penalty_d: a.penalty_d,
    };
    p.check()?;
    Ok(p)
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn gen_grid(a: GenGridArgs) -> Result<(), Failure> {
    let m = match (&a.preset, a.width, a.height) {
        (Some(name), _, _) => presets::by_name(name).ok_or_else(|| {
            input(anyhow!(
                "unknown preset {name:?}; expected one of {}",
                presets::NAMES.join(", ")
            ))
        })?,
        (None, Some(w), Some(h)) => {
            build_grid_model(&GridConfig::blank(w, h, &[])).map_err(input)?
        }
        _ => return Err(input(anyhow!("give --preset or both --width and --height"))),
    };
    write(&a.output, &model_io::to_json(&m))?;
    println!(
        "{} states, {} transitions -> {}",
        m.num_states(),
        m.num_edges(),
        a.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ComponentReport {
    pair: usize,
    states: usize,
    accepting: usize,
    suffix_cost: f64,
    entry_mass: f64,
    cycle_cost: f64,
    gamma_sufx: f64,
}

#[derive(Serialize)]
struct SynthReport {
    mode: Mode,
    params: Params,
    fingerprint: String,
    product_states: usize,
    product_transitions: usize,
    diagnostics: Diagnostics,
    components: Vec<ComponentReport>,
}

pub fn synth(a: SynthArgs) -> Result<(), Failure> {
    let params = params(a.params)?;
    let (_, p) = load_task(&a.task)?;
    let (pol, t) = synthesize_timed(&p, params, &SimplexSolver::default())?;
    write(&a.output, &to_json(&p, &pol))?;
    let report = SynthReport {
        mode: pol.mode,
        params: pol.params,
        fingerprint: pol.fingerprint.clone(),
        product_states: p.num_states(),
        product_transitions: p.num_transitions(),
        diagnostics: pol.diagnostics.clone(),
        components: pol
            .components
            .iter()
            .map(|c| ComponentReport {
                pair: c.pair,
                states: c.states.len(),
                accepting: c.i_states.len(),
                suffix_cost: c.stats.suffix_cost,
                entry_mass: c.stats.entry_mass,
                cycle_cost: c.stats.cycle_cost(),
                gamma_sufx: c.stats.gamma_sufx(),
            })
            .collect(),
    };
    let text = pretty(&report);
    match &a.report {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    eprintln!(
        "timings: components {:.3?}, assemble {:.3?}, solve {:.3?}, extract {:.3?}",
        t.components, t.assemble, t.solve, t.extract
    );
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (m, p) = load_task(&a.task)?;
    let pol = from_json(&read(&a.policy)?, &p)?;
    let baseline = match a.baseline {
        BaselineArg::Optimal => Baseline::Optimal,
        BaselineArg::RoundRobin => Baseline::RoundRobin,
    };
    let cfg = SimConfig {
        runs: a.runs,
        steps: a.steps,
        seed: a.seed,
        baseline,
    };
    let stats = run_monte_carlo(&m, &p, &pol, &cfg)?;
    write(&a.output, &stats.to_json())?;
    if let Some(path) = &a.histogram {
        let h = cyclic_cost_histogram(&stats, a.bins);
        if h.empty {
            eprintln!("warning: no accepting cycle completed; histogram is empty");
        }
        let file = fs::File::create(path)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(input)?;
        h.write_csv(file)?;
    }
    println!(
        "runs {}: failures {}, successes {}, unfinished {}, suffix successes {}, violated {}, recovered {}, executor errors {}",
        stats.runs,
        stats.failures,
        stats.successes,
        stats.unfinished,
        stats.suffix_successes,
        stats.violated,
        stats.recovered,
        stats.executor_errors
    );
    if let Some(c) = stats.mean_cycle_cost {
        println!(
            "mean cycle cost {c:.4} over {} cycles",
            stats.cycle_costs.len()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct PartitionCounts {
    unreachable: usize,
    goal: usize,
    bad: usize,
    normal: usize,
}

#[derive(Serialize)]
struct InspectReport {
    model_states: usize,
    model_transitions: usize,
    dra_states: usize,
    product_states: usize,
    product_transitions: usize,
    amecs: usize,
    asccs: usize,
    mode: Option<Mode>,
    partition: PartitionCounts,
    fingerprint: String,
}

pub fn inspect(a: InspectArgs) -> Result<(), Failure> {
    let (m, p) = load_task(&a.task)?;
    let amecs = compute_amecs(&p);
    let asccs = compute_asccs(&p);
    let setup = match Setup::new(&p) {
        Ok(s) => Some(s),
        Err(SynthError::NoComponents) => None,
        Err(e) => return Err(e.into()),
    };
    let partition: StatePartition = match &setup {
        Some(s) => s.partition.clone(),
        None => partition_states(&p, &[]).map_err(input)?,
    };
    let count = |r| partition.states(r).len();
    let report = InspectReport {
        model_states: m.num_states(),
        model_transitions: m.num_edges(),
        dra_states: p.dra.num_states(),
        product_states: p.num_states(),
        product_transitions: p.num_transitions(),
        amecs: amecs.len(),
        asccs: asccs.len(),
        mode: setup.as_ref().map(|s| s.mode),
        partition: PartitionCounts {
            unreachable: count(Region::Unreachable),
            goal: count(Region::Goal),
            bad: count(Region::Bad),
            normal: count(Region::Normal),
        },
        fingerprint: p.fingerprint(),
    };
    print!("{}", pretty(&report));
    for e in &a.export {
        let (name, text) = match e {
            ExportArg::Dot => ("product.dot", to_dot(&p, Some(&partition))),
            ExportArg::Prism => ("product.prism", to_prism(&p)),
            ExportArg::Lp => {
                let s = setup
                    .as_ref()
                    .ok_or_else(|| input(anyhow!("no accepting component: nothing to export")))?;
                let pr = params(a.params)?;
                let prog = build_combined_program(
                    &p,
                    &s.prefix,
                    &s.comps,
                    pr.gamma,
                    pr.beta,
                    pr.penalty_d,
                )?;
                ("program.lp", prog.lp.to_lp_text())
            }
        };
        let path = a.out_dir.join(name);
        write(&path, &text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
