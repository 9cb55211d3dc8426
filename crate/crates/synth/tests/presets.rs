use std::path::PathBuf;

use riskplan_dra::{parse_dra, Dra};
use riskplan_lp::{LpSolver, SimplexSolver, Tolerances};
use riskplan_model::{presets, Mdp};
use riskplan_product::{build_product, ProductAutomaton, Region};
use riskplan_synth::*;

fn dra(name: &str) -> Dra {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}.dra"));
    parse_dra(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn product(model: &str, automaton: &str) -> ProductAutomaton {
    let m = if model == "toy" {
        Mdp::two_state_toy()
    } else {
        presets::by_name(model).unwrap()
    };
    build_product(&m, &dra(automaton)).unwrap()
}

fn params(gamma: f64, beta: f64) -> Params {
    Params {
        gamma,
        beta,
        penalty_d: 300.0,
    }
}

#[test]
fn toy_falls_back_to_relaxed_mode() {
    let p = product("toy", "toy");
    let pol = synthesize(&p, params(0.1, 0.5)).unwrap();
    assert_eq!(pol.mode, Mode::Relaxed);
    assert!(!pol.components.is_empty());
    // S1 shows an obstacle with probability 0.01 on every pass
    assert!((pol.diagnostics.gamma_sufx - 0.01).abs() < 1e-9);
}

#[test]
fn policy_json_round_trips() {
    let p = product("surveillance", "surveillance");
    let pol = synthesize(&p, params(0.0, 0.5)).unwrap();
    let text = to_json(&p, &pol);
    let back = from_json(&text, &p).unwrap();
    assert_eq!(back, pol);
    assert_eq!(to_json(&p, &back), text);

    let other = product("toy", "toy");
    assert!(matches!(
        from_json(&text, &other),
        Err(SynthError::Fingerprint { .. })
    ));
}

#[test]
fn synthesis_is_deterministic() {
    let p = product("reach", "reach");
    let a = to_json(&p, &synthesize(&p, params(0.2, 0.5)).unwrap());
    let b = to_json(&p, &synthesize(&p, params(0.2, 0.5)).unwrap());
    assert_eq!(a, b);
}

#[test]
fn prefix_cost_is_nonincreasing_in_gamma() {
    let p = product("reach", "reach");
    let setup = Setup::new(&p).unwrap();
    let mut last = f64::INFINITY;
    for k in 0..=4 {
        let gamma = k as f64 / 10.0;
        let prog = build_prefix_program(&p, &setup.prefix, gamma);
        let sol = SimplexSolver::default()
            .solve(&prog.lp, &Tolerances::default())
            .unwrap();
        assert!(sol.is_optimal());
        assert!(prog.reach_probability(&sol.values, false) >= 1.0 - gamma - 1e-6);
        assert!(
            sol.objective <= last + 1e-6,
            "gamma {gamma}: {} after {last}",
            sol.objective
        );
        last = sol.objective;
    }
}

#[test]
fn amec_policies_stay_inside_their_components() {
    let p = product("surveillance", "surveillance");
    let pol = synthesize(&p, params(0.0, 0.2)).unwrap();
    assert_eq!(pol.mode, Mode::Amec);
    for c in &pol.components {
        for (&s, dist) in &c.policy.dist {
            let allowed = c.actions_at(s).unwrap();
            for &(u, _) in dist {
                assert!(allowed.contains(&u));
                for n in p.post(s, u) {
                    assert!(c.contains(n));
                }
            }
        }
    }
    for s in pol.partition.s_bad() {
        assert!(pol.recovery.contains_key(&s));
    }
    for s in pol.partition.s_normal() {
        let d = pol.prefix.get(s).unwrap();
        assert!((d.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn degenerate_parameters_still_give_a_policy() {
    let p = product("reach", "reach");
    let pol = synthesize(&p, params(1.0, 1.0)).unwrap();
    assert_eq!(pol.params.gamma, 1.0);
    assert!((pol.diagnostics.objective - pol.diagnostics.prefix_cost).abs() < 1e-6);
    assert_eq!(pol.region(p.initial), Region::Normal);
}

#[test]
fn zero_risk_reaches_surely() {
    let p = product("reach", "reach");
    let pol = synthesize(&p, params(0.0, 0.5)).unwrap();
    assert!(pol.diagnostics.reach_probability >= 1.0 - 1e-6);
    assert!(pol.diagnostics.gamma_prex <= 1e-6);
}
