use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use riskplan_dra::{parse_dra, Dra, RabinPair};
use riskplan_exec::Baseline;
use riskplan_model::{presets, LabelSet, Mdp, Transition};
use riskplan_product::{build_product, ProductAutomaton};
use riskplan_sim::*;
use riskplan_synth::{synthesize, CompletePolicy, Mode, Params};

struct Bench {
    m: Mdp,
    p: ProductAutomaton,
}

fn bench(model: &str, automaton: &str) -> Bench {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{automaton}.dra"));
    let d = parse_dra(&std::fs::read_to_string(path).unwrap()).unwrap();
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

fn cfg(runs: usize, steps: usize, seed: u64) -> SimConfig {
    SimConfig {
        runs,
        steps,
        seed,
        baseline: Baseline::Optimal,
    }
}

/// s0 -a(1)-> s1 -a(1)-> s2 -a(1)-> s0, no labels, every state accepting.
fn ring() -> Bench {
    let row = |to| {
        vec![Transition {
            action: 0,
            cost: 1.0,
            successors: vec![(to, 1.0)],
        }]
    };
    let m = Mdp {
        ap: vec!["p".into()],
        actions: vec!["a".into()],
        state_names: vec!["s0".into(), "s1".into(), "s2".into()],
        rows: vec![row(1), row(2), row(0)],
        labels: vec![vec![(LabelSet::EMPTY, 1.0)]; 3],
        initial: (0, LabelSet::EMPTY),
    };
    let d = Dra {
        ap: vec!["p".into()],
        start: 0,
        delta: vec![vec![0, 0]],
        pairs: vec![RabinPair {
            h: BTreeSet::new(),
            i: BTreeSet::from([0]),
        }],
        comment: None,
    };
    let p = build_product(&m, &d).unwrap();
    Bench { m, p }
}

#[test]
fn outcomes_partition_the_runs_and_replay_exactly() {
    let b = bench("reach", "reach");
    let pol = policy(&b, 0.2, 0.5, 300.0);
    let a = run_monte_carlo(&b.m, &b.p, &pol, &cfg(200, 200, 11)).unwrap();
    assert_eq!(a.failures + a.successes + a.unfinished, a.runs);
    assert!(a
        .per_run
        .iter()
        .all(|r| r.total_cost >= 0.0 && r.prefix_cost >= 0.0));
    assert!(a.cycle_costs.iter().all(|&c| c >= 0.0));
    assert_eq!(a.executor_errors, 0);
    let again = run_monte_carlo(&b.m, &b.p, &pol, &cfg(200, 200, 11)).unwrap();
    assert_eq!(a.to_json(), again.to_json());
    let other = run_monte_carlo(&b.m, &b.p, &pol, &cfg(200, 200, 12)).unwrap();
    assert_ne!(a.per_run, other.per_run);
}

#[test]
fn empty_configurations_are_rejected() {
    let b = ring();
    let pol = policy(&b, 0.0, 0.5, 10.0);
    assert!(matches!(
        run_monte_carlo(&b.m, &b.p, &pol, &cfg(0, 10, 0)),
        Err(SimError::Config(_))
    ));
    assert!(matches!(
        run_monte_carlo(&b.m, &b.p, &pol, &cfg(3, 0, 0)),
        Err(SimError::Config(_))
    ));
}

#[test]
fn deterministic_ring_gives_identical_runs() {
    let b = ring();
    let pol = policy(&b, 0.0, 0.5, 10.0);
    let s = run_monte_carlo(&b.m, &b.p, &pol, &cfg(20, 30, 5)).unwrap();
    assert!(s.per_run.windows(2).all(|w| w[0] == w[1]));
    // every state is accepting: one cycle per step
    assert_eq!(s.per_run[0].n_s, 30);
    assert_eq!(s.per_run[0].i_visits, 31);
    let h = cyclic_cost_histogram(&s, 10);
    assert!(!h.empty);
    assert_eq!(h.bins.len(), 1);
    assert_eq!(h.bins[0].count, 600);
    assert_eq!(h.bins[0].start, 1.0);
    assert_eq!(h.mean, Some(1.0));
}

#[test]
fn histogram_csv_and_empty_flag() {
    let b = ring();
    let pol = policy(&b, 0.0, 0.5, 10.0);
    let mut s = run_monte_carlo(&b.m, &b.p, &pol, &cfg(2, 3, 0)).unwrap();
    let mut buf = Vec::new();
    cyclic_cost_histogram(&s, 4).write_csv(&mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "bin,count,fraction\n1,6,1\n"
    );
    s.cycle_costs.clear();
    let h = cyclic_cost_histogram(&s, 4);
    assert!(h.empty && h.bins.is_empty());
}

#[test]
fn reach_frequency_matches_the_program() {
    let b = bench("reach", "reach");
    let pol = policy(&b, 0.3, 0.5, 300.0);
    let s = run_monte_carlo(&b.m, &b.p, &pol, &cfg(1000, 500, 3)).unwrap();
    let pr = pol.diagnostics.reach_probability;
    let sigma = (1000.0 * pr * (1.0 - pr)).sqrt();
    assert!(
        (s.successes as f64 - 1000.0 * pr).abs() <= 3.0 * sigma,
        "{} vs {}",
        s.successes,
        pr
    );
}

#[test]
fn zero_suffix_risk_keeps_the_survival_curve_flat() {
    let b = bench("reach", "reach");
    let pol = policy(&b, 0.2, 0.5, 300.0);
    assert_eq!(pol.diagnostics.gamma_sufx, 0.0);
    let s = run_monte_carlo(&b.m, &b.p, &pol, &cfg(400, 300, 8)).unwrap();
    let r = risk_bound_check(&s, pol.diagnostics.gamma_prex, 0.0);
    assert!(r.horizon_limit > 10);
    let first = r.rows[0].empirical;
    for row in &r.rows {
        assert!((row.bound - (1.0 - pol.diagnostics.gamma_prex)).abs() < 1e-12);
        assert_eq!(row.empirical, first);
    }
    let sigma = (0.2f64 * 0.8 / 400.0).sqrt();
    assert!(r.holds(3.0 * sigma), "{:?}", r.rows[0]);
}

#[test]
fn amec_runs_never_leave_their_component() {
    let b = bench("surveillance", "surveillance");
    let pol = policy(&b, 0.0, 0.5, 300.0);
    assert_eq!(pol.mode, Mode::Amec);
    for baseline in [Baseline::Optimal, Baseline::RoundRobin] {
        let c = SimConfig {
            baseline,
            ..cfg(30, 400, 21)
        };
        for run in 0..c.runs {
            let path = sample_path(&b.m, &b.p, &pol, &c, run).unwrap();
            if let Some(k) = path.iter().position(|&s| pol.component_of(s).is_some()) {
                let comp = &pol.components[pol.component_of(path[k]).unwrap()];
                assert!(path[k..].iter().all(|&s| comp.contains(s)));
            }
        }
    }
}

#[test]
fn round_robin_covers_the_component() {
    let b = bench("surveillance", "surveillance");
    let pol = policy(&b, 0.0, 0.5, 300.0);
    // cursors restart every run; rarely visited states need long runs to
    // reach their later actions
    let c = SimConfig {
        baseline: Baseline::RoundRobin,
        ..cfg(1000, 5000, 4)
    };
    let mut seen = HashSet::new();
    let mut entered = HashSet::new();
    for run in 0..c.runs {
        let path = sample_path(&b.m, &b.p, &pol, &c, run).unwrap();
        if let Some(k) = path.iter().find_map(|&s| pol.component_of(s)) {
            entered.insert(k);
        }
        seen.extend(path);
    }
    for k in entered {
        let missing: Vec<String> = pol.components[k]
            .states
            .iter()
            .filter(|s| !seen.contains(s))
            .map(|&s| b.p.state_name(s))
            .collect();
        assert!(missing.is_empty(), "component {k}: {missing:?}");
    }
}

#[test]
fn relaxed_runs_recover_after_violations() {
    let b = bench("clustered", "surveillance");
    let pol = policy(&b, 0.1, 0.0, 300.0);
    assert_eq!(pol.mode, Mode::Relaxed);
    let s = run_monte_carlo(&b.m, &b.p, &pol, &cfg(300, 500, 2)).unwrap();
    assert!(s.violated > 0);
    assert!(s.recovered > 0);
    assert!(s
        .per_run
        .iter()
        .all(|r| r.n_s == 0 || r.outcome == Outcome::Success));
}

mod invariants {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn setup() -> &'static (Bench, Vec<CompletePolicy>) {
        static CELL: OnceLock<(Bench, Vec<CompletePolicy>)> = OnceLock::new();
        CELL.get_or_init(|| {
            let b = bench("reach", "reach");
            let pols = [0.0, 0.2, 0.4]
                .iter()
                .map(|&g| policy(&b, g, 0.5, 300.0))
                .collect();
            (b, pols)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn run_summaries_are_consistent(seed in any::<u64>(), k in 0usize..3, steps in 1usize..120) {
            let (b, pols) = setup();
            let s = run_monte_carlo(&b.m, &b.p, &pols[k], &cfg(16, steps, seed)).unwrap();
            prop_assert_eq!(s.failures + s.successes + s.unfinished, s.runs);
            let total: u32 = s.per_run.iter().map(|r| r.n_s + r.late_cycles).sum();
            prop_assert_eq!(total as usize, s.cycle_costs.len());
            for r in &s.per_run {
                prop_assert_eq!(r.steps, steps);
                prop_assert!(r.prefix_cost <= r.total_cost + 1e-9);
                prop_assert!(r.n_s <= r.i_visits);
                match r.outcome {
                    Outcome::Success => prop_assert!(r.entered_at.unwrap() < r.failed_at.unwrap_or(usize::MAX)),
                    Outcome::Failure => prop_assert!(r.failed_at.unwrap() < r.entered_at.unwrap_or(usize::MAX)),
                    Outcome::Unfinished => prop_assert!(r.entered_at.is_none() && r.failed_at.is_none()),
                }
            }
        }
    }
}
