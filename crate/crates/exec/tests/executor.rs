use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskplan_dra::{Dra, RabinPair};
use riskplan_exec::{write_trace, Baseline, ExecError, ExecMode, Executor, TraceRecord};
use riskplan_model::{LabelSet, Mdp, Transition};
use riskplan_product::{build_product, PState, ProductAutomaton};
use riskplan_synth::{synthesize, CompletePolicy, Params};

fn mdp(rows: Vec<Vec<(usize, f64, Vec<(usize, f64)>)>>, bad: &[usize]) -> Mdp {
    let n = rows.len();
    Mdp {
        ap: vec!["bad".into()],
        actions: vec!["a".into(), "b".into()],
        state_names: (0..n).map(|k| format!("s{k}")).collect(),
        rows: rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(action, cost, successors)| Transition {
                        action,
                        cost,
                        successors,
                    })
                    .collect()
            })
            .collect(),
        labels: (0..n)
            .map(|k| {
                vec![(
                    if bad.contains(&k) {
                        LabelSet::singleton(0)
                    } else {
                        LabelSet::EMPTY
                    },
                    1.0,
                )]
            })
            .collect(),
        initial: (
            0,
            if bad.contains(&0) {
                LabelSet::singleton(0)
            } else {
                LabelSet::EMPTY
            },
        ),
    }
}

fn dra(delta: Vec<Vec<usize>>, h: usize) -> Dra {
    Dra {
        ap: vec!["bad".into()],
        start: 0,
        delta,
        pairs: vec![RabinPair {
            h: BTreeSet::from([h]),
            i: BTreeSet::from([0]),
        }],
        comment: None,
    }
}

fn id(p: &ProductAutomaton, x: usize, bad: bool, q: usize) -> usize {
    let l = if bad {
        LabelSet::singleton(0)
    } else {
        LabelSet::EMPTY
    };
    p.id(PState { x, l, q }).unwrap()
}

fn policy(p: &ProductAutomaton, gamma: f64) -> CompletePolicy {
    synthesize(
        p,
        Params {
            gamma,
            beta: 0.5,
            penalty_d: 10.0,
        },
    )
    .unwrap()
}

/// s0 -a(1)-> s1 -a(1)-> s2, shortcut s0 -b(3)-> s2; s2 loops.
fn chain() -> ProductAutomaton {
    let m = mdp(
        vec![
            vec![(0, 1.0, vec![(1, 1.0)]), (1, 3.0, vec![(2, 1.0)])],
            vec![(0, 1.0, vec![(2, 1.0)])],
            vec![(0, 1.0, vec![(2, 1.0)])],
        ],
        &[],
    );
    build_product(&m, &dra(vec![vec![0, 1], vec![1, 1]], 1)).unwrap()
}

#[test]
fn deterministic_prefix_follows_the_optimal_path() {
    let p = chain();
    let pol = policy(&p, 0.0);
    let mut ex = Executor::new(&p, &pol, Baseline::Optimal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    ex.start(0, LabelSet::EMPTY).unwrap();
    assert_eq!(ex.mode(), ExecMode::Prefix);
    let mut actions = Vec::new();
    for x in [1, 2, 2] {
        actions.push(ex.act(&mut rng).unwrap());
        ex.observe(x, LabelSet::EMPTY).unwrap();
    }
    assert_eq!(actions, vec![0, 0, 0]);
    assert_eq!(ex.mode(), ExecMode::Suffix(0));
    assert_eq!(ex.state(), id(&p, 2, false, 0));
    assert_eq!(ex.time(), 3);
}

#[test]
fn observations_outside_the_support_desync() {
    let p = chain();
    let pol = policy(&p, 0.0);
    let mut ex = Executor::new(&p, &pol, Baseline::Optimal).unwrap();
    assert!(matches!(
        ex.start(1, LabelSet::EMPTY),
        Err(ExecError::InitialMismatch { .. })
    ));
    assert_eq!(ex.observe(1, LabelSet::EMPTY), Err(ExecError::NoAction));
    ex.apply(0);
    assert_eq!(
        ex.observe(2, LabelSet::EMPTY),
        Err(ExecError::Desync {
            t: 1,
            x: 2,
            label: 0
        })
    );
    ex.apply(0);
    assert!(matches!(
        ex.observe(1, LabelSet::singleton(0)),
        Err(ExecError::Desync { .. })
    ));
}

#[test]
fn round_robin_rotates_in_action_order() {
    // one state, both actions loop
    let m = mdp(
        vec![vec![(0, 1.0, vec![(0, 1.0)]), (1, 2.0, vec![(0, 1.0)])]],
        &[],
    );
    let p = build_product(&m, &dra(vec![vec![0, 1], vec![1, 1]], 1)).unwrap();
    let pol = policy(&p, 0.0);
    let mut ex = Executor::new(&p, &pol, Baseline::RoundRobin).unwrap();
    assert_eq!(ex.mode(), ExecMode::Suffix(0));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut seen = Vec::new();
    for _ in 0..3 {
        seen.push(ex.act(&mut rng).unwrap());
        ex.observe(0, LabelSet::EMPTY).unwrap();
    }
    assert_eq!(seen, vec![0, 1, 0]);
    // the optimal suffix keeps to the cheap loop
    let mut ex = Executor::new(&p, &pol, Baseline::Optimal).unwrap();
    for _ in 0..3 {
        assert_eq!(ex.act(&mut rng).unwrap(), 0);
        ex.observe(0, LabelSet::EMPTY).unwrap();
    }
}

#[test]
fn round_robin_needs_an_amec() {
    let p = chain();
    let pol = policy(&p, 0.0);
    let mut ex = Executor::new(&p, &pol, Baseline::RoundRobin).unwrap();
    assert!(matches!(
        ex.round_robin_step(),
        Err(ExecError::OutsideAmec(_))
    ));
    // single action: rotation of length one
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for x in [1, 2] {
        ex.act(&mut rng).unwrap();
        ex.observe(x, LabelSet::EMPTY).unwrap();
    }
    for _ in 0..3 {
        assert_eq!(ex.round_robin_step(), Ok(0));
    }
}

#[test]
fn bad_state_is_reset_onto_a_good_automaton_state() {
    // two `bad` labels in a row are fatal; s0 and s1 carry `bad`
    let m = mdp(
        vec![
            vec![(0, 1.0, vec![(1, 1.0)]), (1, 1.0, vec![(2, 1.0)])],
            vec![(0, 1.0, vec![(1, 1.0)]), (1, 1.0, vec![(2, 1.0)])],
            vec![(0, 1.0, vec![(2, 1.0)])],
        ],
        &[0, 1],
    );
    let p = build_product(&m, &dra(vec![vec![0, 1], vec![0, 2], vec![2, 2]], 2)).unwrap();
    let pol = policy(&p, 0.0);
    let mut ex = Executor::new(&p, &pol, Baseline::Optimal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    ex.start(0, LabelSet::singleton(0)).unwrap();
    // force the fatal move
    ex.apply(0);
    ex.observe(1, LabelSet::singleton(0)).unwrap();
    assert_eq!(ex.state(), id(&p, 1, true, 1));
    assert_eq!(ex.mode(), ExecMode::Bad);
    let u = ex.act(&mut rng).unwrap();
    assert_eq!(u, 1);
    // δ(1, {bad}) = 2 is a trap; the reset projects onto q0 instead
    ex.observe(2, LabelSet::EMPTY).unwrap();
    assert_eq!(ex.state(), id(&p, 2, false, 0));
    assert_eq!(ex.mode(), ExecMode::Suffix(0));
}

#[test]
fn identical_seeds_replay_identically() {
    let p = chain();
    let pol = policy(&p, 0.0);
    let run = |seed| {
        let mut ex = Executor::new(&p, &pol, Baseline::Optimal).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for x in [1, 2, 2, 2] {
            let u = ex.act(&mut rng).unwrap();
            out.push(ex.record(u));
            ex.observe(x, LabelSet::EMPTY).unwrap();
        }
        out
    };
    assert_eq!(run(9), run(9));
}

#[test]
fn trace_lines_are_json() {
    let p = chain();
    let pol = policy(&p, 0.0);
    let ex = Executor::new(&p, &pol, Baseline::Optimal).unwrap();
    let rec = ex.record(0);
    let mut buf = Vec::new();
    write_trace(&mut buf, &[rec.clone(), rec.clone()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(
        text.lines().next().unwrap(),
        r#"{"t":0,"x":"s0","l":[],"q":0,"u":"a","mode":"prefix"}"#
    );
    let back: TraceRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(back, rec);
}
