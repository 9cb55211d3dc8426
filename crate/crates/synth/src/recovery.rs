//! Projected distance of bad states and the recovery action.

use std::collections::BTreeMap;

use riskplan_dra::{DraState, Letter};
use riskplan_model::{ActionId, LabelSet};
use riskplan_product::{PState, PStateId, ProductAutomaton, StatePartition};

/// `D(ℓ, χ)`: zero when `ℓ ∈ χ`, otherwise the least number of
/// propositions of `ℓ` missing from some `ℓ' ∈ χ`. `None` for empty `χ`.
pub fn label_distance(l: Letter, chi: &[Letter]) -> Option<u32> {
    if chi.contains(&l) {
        return Some(0);
    }
    chi.iter().map(|&lp| (l & !lp).count_ones()).min()
}

/// `χ(q, q̌)` for every `q̌` reachable from `q` in one step.
fn guards(p: &ProductAutomaton, q: DraState) -> Vec<(DraState, Vec<Letter>)> {
    p.dra
        .successors(q)
        .into_iter()
        .map(|qn| {
            (
                qn,
                p.dra
                    .guard_letters(q, qn)
                    .expect("successor of a valid state"),
            )
        })
        .collect()
}

/// `κ(s_d, u)`: distance-weighted mass that `u` moves onto good states when
/// the automaton component is projected. The second value is that good
/// mass itself.
pub fn projected_distance(
    p: &ProductAutomaton,
    part: &StatePartition,
    s: PStateId,
    u: ActionId,
) -> (f64, f64) {
    let st = p.states[s];
    let l = p.letter(st.l);
    let chis = guards(p, st.q);
    let Some(t) = p.transition(s, u) else {
        return (0.0, 0.0);
    };
    let mut kappa = 0.0;
    let mut good = 0.0;
    for &(n, prob) in &t.successors {
        let ns = p.states[n];
        for (qn, chi) in &chis {
            let Some(id) = p.id(PState {
                x: ns.x,
                l: ns.l,
                q: *qn,
            }) else {
                continue;
            };
            if !part.is_good(id) {
                continue;
            }
            let d = label_distance(l, chi).expect("guards of a successor are nonempty");
            kappa += d as f64 / chi.len() as f64 * prob;
            good += prob;
        }
    }
    (kappa, good)
}

/// The single action minimizing `κ` at every state of `S_d`. Actions that
/// reach no good state at all rank last; remaining ties go to the lowest
/// action id.
pub fn recovery_policy(
    p: &ProductAutomaton,
    part: &StatePartition,
) -> BTreeMap<PStateId, ActionId> {
    let mut out = BTreeMap::new();
    for s in part.s_bad() {
        let mut best: Option<(bool, f64, ActionId)> = None;
        let mut actions: Vec<ActionId> = p.allowed(s).collect();
        actions.sort_unstable();
        for u in actions {
            let (k, good) = projected_distance(p, part, s, u);
            let dead = good <= 0.0;
            if best.is_none_or(|(bd, bk, _)| (dead, k) < (bd, bk)) {
                best = Some((dead, k, u));
            }
        }
        if let Some((_, _, u)) = best {
            out.insert(s, u);
        }
    }
    out
}

/// Reset after leaving a bad state: the good state `⟨x, l, q'⟩` with
/// `q' = argmin_{q̌ ∈ Post(q_prev)} D(l_prev, χ(q_prev, q̌))`, ties to the
/// lowest `q̌`. `None` when no such state is good.
pub fn reset_state(
    p: &ProductAutomaton,
    part: &StatePartition,
    q_prev: DraState,
    l_prev: LabelSet,
    x: usize,
    l: LabelSet,
) -> Option<PStateId> {
    let letter = p.letter(l_prev);
    let mut best: Option<(u32, PStateId)> = None;
    for (qn, chi) in guards(p, q_prev) {
        let Some(id) = p.id(PState { x, l, q: qn }) else {
            continue;
        };
        if !part.is_good(id) {
            continue;
        }
        let d = label_distance(letter, &chi).expect("guards of a successor are nonempty");
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    best.map(|b| b.1)
}
