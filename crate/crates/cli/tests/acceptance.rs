//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskplan_dra::{parse_dra, Dra, RabinPair};
use riskplan_exec::Baseline;
use riskplan_graph::{compute_amecs, compute_asccs};
use riskplan_lp::{LpSolver, SimplexSolver, Tolerances};
use riskplan_model::{presets, LabelSet, Mdp, Transition};
use riskplan_product::{
    build_product, partition_states, PState, ProductAutomaton, Region, StatePartition,
};
use riskplan_sim::{run_monte_carlo, SimConfig, SimStats};
use riskplan_synth::{
    build_max_reach_program, build_prefix_program, synthesize, CompletePolicy, Mode, Params,
    PrefixMdp, Setup,
};

const RUNS: usize = 1000;
const STEPS: usize = 500;
const SIGMAS: f64 = 3.0;
const SEED: u64 = 2024;
/// Equality slack for LP objectives compared across parameter sweeps.
const TREND_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-5;
const ORACLE_CASES: usize = 100;
const PREFIX_DROP_MIN: f64 = 0.5;
const SUFFIX_RISE_MAX: f64 = 0.02;
const RR_RATIO_MAX: f64 = 0.5;
/// One-sided z score separating optimal from Round-Robin cycle costs.
const RR_Z_MIN: f64 = 3.0;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Bench {
    m: Mdp,
    p: ProductAutomaton,
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}.dra"))
}

fn bench(model: &str, automaton: &str) -> Bench {
    let d = parse_dra(&std::fs::read_to_string(fixture(automaton)).unwrap()).unwrap();
    let m = presets::by_name(model).unwrap();
    let p = build_product(&m, &d).unwrap();
    Bench { m, p }
}

fn policy(b: &Bench, gamma: f64, beta: f64, d: f64) -> CompletePolicy {
    synthesize(
        &b.p,
        Params {
            gamma,
            beta,
            penalty_d: d,
        },
    )
    .unwrap()
}

fn simulate(b: &Bench, pol: &CompletePolicy, baseline: Baseline) -> SimStats {
    let cfg = SimConfig {
        runs: RUNS,
        steps: STEPS,
        seed: SEED,
        baseline,
    };
    run_monte_carlo(&b.m, &b.p, pol, &cfg).unwrap()
}

fn binomial_sigma(n: f64, p: f64) -> f64 {
    (n * p * (1.0 - p)).sqrt()
}

fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + TREND_TOL)
}

fn fmt(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn model_sizes() -> Outcome {
    let big = presets::by_name("surveillance").unwrap();
    let lab = presets::by_name("lab").unwrap();
    let got = [
        (big.num_states(), big.num_edges()),
        (lab.num_states(), lab.num_edges()),
    ];
    ensure(
        got == [(100, 816), (60, 456)],
        format!("5x5: {:?}, 3x5: {:?}", got[0], got[1]),
    )
}

fn no_aec_detection() -> Outcome {
    let d = parse_dra(&std::fs::read_to_string(fixture("toy")).unwrap()).unwrap();
    let p = build_product(&Mdp::two_state_toy(), &d).unwrap();
    let (amecs, asccs) = (compute_amecs(&p).len(), compute_asccs(&p).len());
    ensure(
        amecs == 0 && asccs > 0,
        format!("AMECs {amecs}, ASCCs {asccs}"),
    )
}

fn partition_oracle() -> Outcome {
    let adj = vec![
        vec![1, 2],
        vec![3],
        vec![0, 5, 7],
        vec![3],
        vec![0, 9],
        vec![6],
        vec![10],
        vec![8],
        vec![7],
        vec![4],
        vec![5],
    ];
    let goal: Vec<bool> = (0..11).map(|s| [5, 6, 7, 8, 10].contains(&s)).collect();
    let p = StatePartition::compute(&adj, 0, &goal);
    let got = [p.s_unreach(), p.s_goal(), p.s_bad(), p.s_normal()];
    let want = [vec![4, 9], vec![5, 6, 7, 8, 10], vec![1, 3], vec![0, 2]];
    ensure(
        got == want,
        format!(
            "S_o {:?}, S_c {:?}, S_d {:?}, S_n {:?}",
            got[0], got[1], got[2], got[3]
        ),
    )
}

fn risk_fidelity() -> Outcome {
    let b = bench("reach", "reach");
    let gammas = [0.0, 0.1, 0.2, 0.3, 0.4];
    let mut ok = true;
    let mut parts = Vec::new();
    for &g in &gammas {
        let s = simulate(&b, &policy(&b, g, 0.5, 300.0), Baseline::Optimal);
        let want = RUNS as f64 * g;
        let hit = if g == 0.0 {
            s.failures == 0
        } else {
            (s.failures as f64 - want).abs() <= SIGMAS * binomial_sigma(RUNS as f64, g)
        };
        ok &= hit;
        parts.push(format!(
            "g={g}: {}/{}/{}",
            s.failures, s.successes, s.unfinished
        ));
    }
    let setup = Setup::new(&b.p).unwrap();
    let objectives: Vec<f64> = gammas
        .iter()
        .map(|&g| {
            let prog = build_prefix_program(&b.p, &setup.prefix, g);
            SimplexSolver::default()
                .solve(&prog.lp, &Tolerances::default())
                .unwrap()
                .objective
        })
        .collect();
    ok &= nonincreasing(&objectives);
    ensure(
        ok,
        format!(
            "failure/success/unfinished {}; prefix LP [{}]",
            parts.join(", "),
            fmt(&objectives)
        ),
    )
}

fn beta_tradeoff() -> Outcome {
    let b = bench("supply", "supply");
    let betas = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let pols: Vec<CompletePolicy> = betas
        .iter()
        .map(|&beta| policy(&b, 0.0, beta, 300.0))
        .collect();
    let prefix: Vec<f64> = pols.iter().map(|p| p.diagnostics.prefix_cost).collect();
    let suffix: Vec<f64> = pols.iter().map(|p| p.diagnostics.suffix_cost).collect();
    let neg: Vec<f64> = suffix.iter().map(|x| -x).collect();
    let drop = 1.0 - prefix[1] / prefix[0];
    let (m0, m1) = (
        pols[0].diagnostics.mean_suffix_cost,
        pols[1].diagnostics.mean_suffix_cost,
    );
    let rise = m1 / m0 - 1.0;
    let ok = nonincreasing(&prefix)
        && nonincreasing(&neg)
        && drop > PREFIX_DROP_MIN
        && rise < SUFFIX_RISE_MAX;
    ensure(
        ok,
        format!(
            "prefix [{}], suffix [{}], drop at 0.2 {:.1}%, mean suffix {m0:.4} -> {m1:.4} ({:+.2}%)",
            fmt(&prefix),
            fmt(&suffix),
            100.0 * drop,
            100.0 * rise
        ),
    )
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn suffix_vs_round_robin() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for task in ["surveillance", "supply"] {
        let b = bench(task, task);
        let pol = policy(&b, 0.0, 0.1, 300.0);
        let opt = simulate(&b, &pol, Baseline::Optimal);
        let rr = simulate(&b, &pol, Baseline::RoundRobin);
        if opt.cycle_costs.len() < 2 || rr.cycle_costs.len() < 2 {
            ok = false;
            parts.push(format!("{task}: too few cycles"));
            continue;
        }
        let (mo, vo) = mean_var(&opt.cycle_costs);
        let (mr, vr) = mean_var(&rr.cycle_costs);
        let z = (mr - mo)
            / (vo / opt.cycle_costs.len() as f64 + vr / rr.cycle_costs.len() as f64).sqrt();
        let ratio = mo / mr;
        ok &= ratio <= RR_RATIO_MAX && z > RR_Z_MIN;
        parts.push(format!(
            "{task}: {mo:.1} vs {mr:.1} (ratio {ratio:.3}, z {z:.1})"
        ));
    }
    ensure(ok, parts.join("; "))
}

fn relaxed_penalties() -> Outcome {
    let b = bench("clustered", "surveillance");
    let ds = [50.0, 100.0, 200.0, 270.0, 300.0, 1000.0];
    let pols: Vec<CompletePolicy> = ds.iter().map(|&d| policy(&b, 0.1, 0.1, d)).collect();
    let relaxed = pols.iter().all(|p| p.mode == Mode::Relaxed);
    let gs: Vec<f64> = pols.iter().map(|p| p.diagnostics.gamma_sufx).collect();
    let at = &pols[4];
    let s = simulate(&b, at, Baseline::Optimal);
    let n = RUNS as f64;
    let pre = 1.0 - 0.1;
    let suf = pre * (1.0 - at.diagnostics.gamma_sufx);
    let pre_ok = (s.successes as f64 - n * pre).abs() <= SIGMAS * binomial_sigma(n, pre);
    let suf_ok = (s.suffix_successes as f64 - n * suf).abs() <= SIGMAS * binomial_sigma(n, suf);
    ensure(
        relaxed && nonincreasing(&gs) && pre_ok && suf_ok,
        format!(
            "gamma_sufx(d) [{}]; d=300: prefix success {} (want {:.0}), suffix success {} (want {:.1})",
            fmt(&gs),
            s.successes,
            n * pre,
            s.suffix_successes,
            n * suf
        ),
    )
}

/// Random model with 2 to 5 states and up to 2 actions; the product with a
/// one-state automaton mirrors it.
fn random_case(rng: &mut ChaCha8Rng) -> (ProductAutomaton, Vec<usize>) {
    let n = rng.random_range(2..=5);
    let rows = (0..n)
        .map(|_| {
            (0..rng.random_range(1..=2))
                .map(|action| {
                    let mut succ: Vec<(usize, f64)> = Vec::new();
                    for _ in 0..rng.random_range(1..=3) {
                        let (t, w) = (rng.random_range(0..n), rng.random_range(1..=4) as f64);
                        match succ.iter_mut().find(|e| e.0 == t) {
                            Some(e) => e.1 += w,
                            None => succ.push((t, w)),
                        }
                    }
                    let total: f64 = succ.iter().map(|e| e.1).sum();
                    succ.iter_mut().for_each(|e| e.1 /= total);
                    Transition {
                        action,
                        cost: rng.random_range(1.0..5.0),
                        successors: succ,
                    }
                })
                .collect()
        })
        .collect();
    let m = Mdp {
        ap: vec![],
        actions: vec!["a".into(), "b".into()],
        state_names: (0..n).map(|k| format!("x{k}")).collect(),
        rows,
        labels: vec![vec![(LabelSet::EMPTY, 1.0)]; n],
        initial: (0, LabelSet::EMPTY),
    };
    let d = Dra {
        ap: vec!["a".into()],
        start: 0,
        delta: vec![vec![0, 0]],
        pairs: vec![RabinPair {
            h: BTreeSet::new(),
            i: BTreeSet::from([0]),
        }],
        comment: None,
    };
    let p = build_product(&m, &d).unwrap();
    let mut goal: Vec<usize> = (1..n).filter(|_| rng.random_bool(0.4)).collect();
    if goal.is_empty() {
        goal.push(n - 1);
    }
    let goal = goal
        .into_iter()
        .filter_map(|x| {
            p.id(PState {
                x,
                l: LabelSet::EMPTY,
                q: 0,
            })
        })
        .collect();
    (p, goal)
}

/// Value iteration with `S_c` and `S_d` absorbing. `reach` selects maximal
/// reachability; otherwise expected cost with transitions into `S_d` unpriced.
fn value_iteration(p: &ProductAutomaton, region: &[Region], reach: bool) -> f64 {
    let n = p.num_states();
    let mut v: Vec<f64> = (0..n)
        .map(|k| {
            if reach && region[k] == Region::Goal {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let live = |k: usize| matches!(region[k], Region::Goal | Region::Normal);
    for _ in 0..200_000 {
        let mut delta = 0.0f64;
        for k in (0..n).filter(|&k| region[k] == Region::Normal) {
            let vals = p.rows[k].iter().map(|t| {
                if reach {
                    t.successors.iter().map(|&(s, pr)| pr * v[s]).sum::<f64>()
                } else {
                    let kept: f64 = t.successors.iter().filter(|e| live(e.0)).map(|e| e.1).sum();
                    let next: f64 = t
                        .successors
                        .iter()
                        .filter(|e| region[e.0] == Region::Normal)
                        .map(|&(s, pr)| pr * v[s])
                        .sum();
                    t.cost * kept + next
                }
            });
            let best = if reach {
                vals.fold(f64::MIN, f64::max)
            } else {
                vals.fold(f64::MAX, f64::min)
            };
            delta = delta.max((best - v[k]).abs());
            v[k] = best;
        }
        if delta < 1e-13 {
            break;
        }
    }
    v[p.initial]
}

fn lp_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let solver = SimplexSolver::default();
    let tol = Tolerances::default();
    let (mut cases, mut worst_cost, mut worst_reach) = (0, 0.0f64, 0.0f64);
    while cases < ORACLE_CASES {
        let (p, goal) = random_case(&mut rng);
        let part = partition_states(&p, &goal).unwrap();
        if part.of(p.initial) != Region::Normal {
            continue;
        }
        cases += 1;
        let z = PrefixMdp::new(&p, &part);
        let free = build_prefix_program(&p, &z, 1.0);
        let cost = solver.solve(&free.lp, &tol).unwrap().objective;
        worst_cost = worst_cost.max((cost - value_iteration(&p, &part.region, false)).abs());
        let pmax = value_iteration(&p, &part.region, true);
        let mr = build_max_reach_program(&p, &z);
        let sol = solver.solve(&mr.lp, &tol).unwrap();
        worst_reach = worst_reach.max((mr.reach_probability(&sol.values, false) - pmax).abs());
        let edge = build_prefix_program(&p, &z, 1.0 - pmax);
        let sol = solver.solve(&edge.lp, &tol).unwrap();
        worst_reach = worst_reach.max((edge.reach_probability(&sol.values, false) - pmax).abs());
    }
    ensure(
        worst_cost < ORACLE_TOL && worst_reach < ORACLE_TOL,
        format!(
            "{cases} models; max |cost gap| {worst_cost:.2e}, max |reach gap| {worst_reach:.2e}"
        ),
    )
}

fn rabin_satisfaction() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let cases = [
        ("reach", "reach", 0.2, 0.5),
        ("surveillance", "surveillance", 0.0, 0.1),
        ("supply", "supply", 0.0, 0.1),
    ];
    for (model, aut, gamma, beta) in cases {
        let b = bench(model, aut);
        let pol = policy(&b, gamma, beta, 300.0);
        assert_eq!(pol.mode, Mode::Amec);
        for baseline in [Baseline::Optimal, Baseline::RoundRobin] {
            let s = simulate(&b, &pol, baseline);
            for r in s
                .per_run
                .iter()
                .filter(|r| r.outcome == riskplan_sim::Outcome::Success)
            {
                checked += 1;
                let size = pol.components[r.component.unwrap()].states.len();
                let need = (STEPS - r.entered_at.unwrap()) / (10 * size);
                if r.h_after_entry || (r.i_visits as usize) < need {
                    bad.push(format!(
                        "{model}: i_visits {} < {need} or H visited",
                        r.i_visits
                    ));
                }
            }
        }
    }
    ensure(
        bad.is_empty(),
        format!(
            "{checked} runs entered S_c; {} violations {:?}",
            bad.len(),
            bad.first()
        ),
    )
}

fn run(bin: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_riskplan");
    let dir = tempfile::tempdir().unwrap();
    let f = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let dra = fixture("surveillance").to_string_lossy().into_owned();
    run(
        bin,
        &["gen-grid", "--preset", "surveillance", "-o", &f("m.json")],
    )?;
    for k in 0..2 {
        let (pol, rep) = (f(&format!("pol{k}.json")), f(&format!("rep{k}.json")));
        run(
            bin,
            &[
                "synth",
                "--model",
                &f("m.json"),
                "--dra",
                &dra,
                "--gamma",
                "0",
                "--beta",
                "0.1",
                "-o",
                &pol,
                "--report",
                &rep,
            ],
        )?;
        let (stats, hist) = (f(&format!("stats{k}.json")), f(&format!("hist{k}.csv")));
        run(
            bin,
            &[
                "simulate",
                "--model",
                &f("m.json"),
                "--dra",
                &dra,
                "--policy",
                &f("pol0.json"),
                "--runs",
                "200",
                "--seed",
                "7",
                "-o",
                &stats,
                "--histogram",
                &hist,
            ],
        )?;
    }
    let same: Vec<(&str, bool)> = ["pol", "rep", "stats", "hist"]
        .into_iter()
        .map(|stem| {
            let ext = if stem == "hist" { "csv" } else { "json" };
            let a = read(Path::new(&f(&format!("{stem}0.{ext}"))));
            let b = read(Path::new(&f(&format!("{stem}1.{ext}"))));
            (stem, !a.is_empty() && a == b)
        })
        .collect();
    ensure(
        same.iter().all(|e| e.1),
        format!("byte-identical: {same:?}"),
    )
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "model sizes",
            budget: Some(Duration::from_secs(1)),
            check: model_sizes,
        },
        Criterion {
            id: 2,
            name: "no-AEC detection",
            budget: Some(Duration::from_secs(1)),
            check: no_aec_detection,
        },
        Criterion {
            id: 3,
            name: "partition oracle",
            budget: Some(Duration::from_secs(1)),
            check: partition_oracle,
        },
        Criterion {
            id: 4,
            name: "risk-constraint fidelity",
            budget: None,
            check: risk_fidelity,
        },
        Criterion {
            id: 5,
            name: "beta trade-off",
            budget: None,
            check: beta_tradeoff,
        },
        Criterion {
            id: 6,
            name: "suffix vs Round-Robin",
            budget: None,
            check: suffix_vs_round_robin,
        },
        Criterion {
            id: 7,
            name: "relaxed-mode penalties",
            budget: None,
            check: relaxed_penalties,
        },
        Criterion {
            id: 8,
            name: "LP vs oracle",
            budget: Some(Duration::from_secs(10)),
            check: lp_vs_oracle,
        },
        Criterion {
            id: 9,
            name: "Rabin satisfaction",
            budget: None,
            check: rabin_satisfaction,
        },
        Criterion {
            id: 10,
            name: "determinism",
            budget: None,
            check: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = t.elapsed();
        let result = match (result, c.budget) {
            (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; over budget {b:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += result.is_err() as usize;
        println!(
            "criterion {:>2} {:<26} {tag}  {detail} [{elapsed:.2?}]",
            c.id, c.name
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
