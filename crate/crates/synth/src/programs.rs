//! Occupancy-measure programs over the product: the prefix program on
//! `Z_pre`, the suffix program on `Z_suf`, its relaxed variant with a bad
//! state on `Z_sufx`, and the combined program that links them through the
//! inflow `y0`.

use std::collections::HashMap;

use riskplan_graph::{Amec, Ascc};
use riskplan_lp::{LinearProgram, Relation, VarId};
use riskplan_model::ActionId;
use riskplan_product::{PStateId, ProductAutomaton, Region, StatePartition};

use crate::SynthError;

/// `Z_pre`: the states of `S_n` keep their rows; `S_c` states are absorbing
/// at zero cost, `S_d` successors drop out.
#[derive(Debug, Clone)]
pub struct PrefixMdp {
    pub normal: Vec<PStateId>,
    pub goal: Vec<bool>,
    pub initial: PStateId,
}

impl PrefixMdp {
    pub fn new(p: &ProductAutomaton, part: &StatePartition) -> Self {
        PrefixMdp {
            normal: part.s_normal(),
            goal: part.region.iter().map(|r| *r == Region::Goal).collect(),
            initial: p.initial,
        }
    }

    pub fn initial_in_goal(&self) -> bool {
        self.goal[self.initial]
    }
}

/// `Z_suf` (or `Z_sufx` when `relaxed`) of one component. Local state `k`
/// doubles as the out-copy when `is_i[k]`; in-copies are absorbing sinks
/// and carry no variables.
#[derive(Debug, Clone)]
pub struct SuffixMdp {
    pub pair: usize,
    pub states: Vec<PStateId>,
    pub is_i: Vec<bool>,
    /// Actions per local state: `U'_c` for an AMEC, all of `U(s)` otherwise.
    pub actions: Vec<Vec<ActionId>>,
    pub relaxed: bool,
    local: HashMap<PStateId, usize>,
}

impl SuffixMdp {
    fn build(
        pair: usize,
        states: Vec<PStateId>,
        i_states: &[PStateId],
        actions: Vec<Vec<ActionId>>,
        relaxed: bool,
    ) -> Self {
        let local: HashMap<PStateId, usize> =
            states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let is_i = states.iter().map(|s| i_states.contains(s)).collect();
        SuffixMdp {
            pair,
            states,
            is_i,
            actions,
            relaxed,
            local,
        }
    }

    pub fn from_amec(a: &Amec) -> Self {
        Self::build(
            a.pair,
            a.states.clone(),
            &a.i_states,
            a.actions.clone(),
            false,
        )
    }

    pub fn from_ascc(p: &ProductAutomaton, a: &Ascc) -> Self {
        let actions = a.states.iter().map(|&s| p.allowed(s).collect()).collect();
        Self::build(a.pair, a.states.clone(), &a.i_states, actions, true)
    }

    pub fn local(&self, s: PStateId) -> Option<usize> {
        self.local.get(&s).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: PStateId) -> bool {
        self.local.contains_key(&s)
    }
}

/// One `y_{s,u}` with its objective and reach coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixVar {
    pub state: PStateId,
    pub action: ActionId,
    pub var: VarId,
    /// `c(s,u) · Σ_{š ∈ S_p} p(s,u,š)`.
    pub cost: f64,
    /// `Σ_{š ∈ S_c} p(s,u,š)`.
    pub reach: f64,
}

/// One `z_{s,u}`; `state` is the product state (the out-copy for I states).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuffixVar {
    pub state: PStateId,
    pub action: ActionId,
    pub var: VarId,
    /// `c(s,u) · P(stay in the component)`; the full cost in amec mode.
    pub cost: f64,
    /// Probability of leaving the component (into `s_bad`).
    pub bad: f64,
    /// Probability of ending the cycle: into `I_in` or `s_bad`.
    pub settle: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SuffixBlock {
    pub vars: Vec<SuffixVar>,
    /// Flow row of each local node.
    pub flow_rows: Vec<usize>,
    pub norm_row: usize,
    /// Penalty applied to `bad` mass in the objective.
    pub penalty: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ProgramLayout {
    pub prefix: Vec<PrefixVar>,
    pub reach_row: Option<usize>,
    pub suffix: Vec<SuffixBlock>,
}

/// A program together with what its variables mean.
#[derive(Debug, Clone)]
pub struct Program {
    pub lp: LinearProgram,
    pub layout: ProgramLayout,
}

impl Program {
    pub fn prefix_cost(&self, values: &[f64]) -> f64 {
        self.layout
            .prefix
            .iter()
            .map(|v| v.cost * values[v.var])
            .sum()
    }

    /// Probability of reaching `S_c` encoded by the prefix flow.
    pub fn reach_probability(&self, values: &[f64], initial_in_goal: bool) -> f64 {
        if initial_in_goal {
            return 1.0;
        }
        self.layout
            .prefix
            .iter()
            .map(|v| v.reach * values[v.var])
            .sum()
    }

    /// Cycle cost term of block `k` without the penalty.
    pub fn suffix_cost(&self, k: usize, values: &[f64]) -> f64 {
        self.layout.suffix[k]
            .vars
            .iter()
            .map(|v| v.cost * values[v.var])
            .sum()
    }

    pub fn bad_mass(&self, k: usize, values: &[f64]) -> f64 {
        self.layout.suffix[k]
            .vars
            .iter()
            .map(|v| v.bad * values[v.var])
            .sum()
    }

    /// Penalized relaxed objective `C_sufx(S'_c, d)` of block `k`.
    pub fn relaxed_cost(&self, k: usize, values: &[f64]) -> f64 {
        self.suffix_cost(k, values) + self.layout.suffix[k].penalty * self.bad_mass(k, values)
    }

    /// Total inflow `Σ y0` of block `k`; every cycle started ends in
    /// `I_in` or `s_bad`.
    pub fn entry_mass(&self, k: usize, values: &[f64]) -> f64 {
        self.layout.suffix[k]
            .vars
            .iter()
            .map(|v| v.settle * values[v.var])
            .sum()
    }

    /// Expected number of steps spent in block `k`.
    pub fn steps(&self, k: usize, values: &[f64]) -> f64 {
        self.layout.suffix[k]
            .vars
            .iter()
            .map(|v| values[v.var])
            .sum()
    }
}

fn add_prefix_vars(
    lp: &mut LinearProgram,
    p: &ProductAutomaton,
    z: &PrefixMdp,
    weight: f64,
) -> Vec<PrefixVar> {
    let mut out = Vec::new();
    let normal: Vec<bool> = {
        let mut v = vec![false; p.num_states()];
        for &s in &z.normal {
            v[s] = true;
        }
        v
    };
    for &s in &z.normal {
        for t in &p.rows[s] {
            let mut kept = 0.0;
            let mut reach = 0.0;
            for &(n, pr) in &t.successors {
                if z.goal[n] {
                    reach += pr;
                    kept += pr;
                } else if normal[n] {
                    kept += pr;
                }
            }
            let cost = t.cost * kept;
            let var = lp.add_var(format!("y_{s}_{}", t.action), weight * cost);
            out.push(PrefixVar {
                state: s,
                action: t.action,
                var,
                cost,
                reach,
            });
        }
    }
    out
}

/// Flow rows `Σ_u y_{š,u} - Σ y_{s,u} p(s,u,š) = 1(š = s0)` for `š ∈ S_n`.
fn add_prefix_flow(
    lp: &mut LinearProgram,
    p: &ProductAutomaton,
    z: &PrefixMdp,
    vars: &[PrefixVar],
) {
    let row_of: HashMap<PStateId, usize> =
        z.normal.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); z.normal.len()];
    for v in vars {
        rows[row_of[&v.state]].push((v.var, 1.0));
        let t = p
            .transition(v.state, v.action)
            .expect("prefix variable without transition");
        for &(n, pr) in &t.successors {
            if let Some(&r) = row_of.get(&n) {
                rows[r].push((v.var, -pr));
            }
        }
    }
    for (k, coeffs) in rows.into_iter().enumerate() {
        let s = z.normal[k];
        let rhs = if s == z.initial { 1.0 } else { 0.0 };
        lp.add_constraint(format!("flow_{s}"), merge(coeffs), Relation::Eq, rhs);
    }
}

fn merge(mut coeffs: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    coeffs.sort_by_key(|e| e.0);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// The prefix program: minimize the expected cost of reaching `S_c`
/// subject to reaching it with probability at least `1 - γ`.
pub fn build_prefix_program(p: &ProductAutomaton, z: &PrefixMdp, gamma: f64) -> Program {
    let mut lp = LinearProgram::new();
    let prefix = add_prefix_vars(&mut lp, p, z, 1.0);
    let reach_row = add_reach_row(&mut lp, z, &prefix, gamma);
    add_prefix_flow(&mut lp, p, z, &prefix);
    Program {
        lp,
        layout: ProgramLayout {
            prefix,
            reach_row: Some(reach_row),
            ..Default::default()
        },
    }
}

fn add_reach_row(lp: &mut LinearProgram, z: &PrefixMdp, prefix: &[PrefixVar], gamma: f64) -> usize {
    let coeffs = prefix
        .iter()
        .filter(|v| v.reach > 0.0)
        .map(|v| (v.var, v.reach))
        .collect();
    let rhs = if z.initial_in_goal() {
        0.0
    } else {
        1.0 - gamma
    };
    lp.add_constraint("reach", coeffs, Relation::Ge, rhs)
}

/// Adds the variables and rows of one suffix block with zero inflow; the
/// caller supplies `y0` on the flow rows and the normalization row.
fn add_suffix_block(
    lp: &mut LinearProgram,
    p: &ProductAutomaton,
    z: &SuffixMdp,
    tag: usize,
    weight: f64,
    penalty: f64,
) -> Result<SuffixBlock, SynthError> {
    let n = z.len();
    let mut flow: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
    let mut norm: Vec<(VarId, f64)> = Vec::new();
    let mut vars = Vec::new();
    for k in 0..n {
        let s = z.states[k];
        for &u in &z.actions[k] {
            let t = p.transition(s, u).ok_or(SynthError::UnknownAction {
                state: s,
                action: u,
            })?;
            let mut stay = 0.0;
            let mut bad = 0.0;
            let mut into_i = 0.0;
            let mut succ: Vec<(usize, f64)> = Vec::new();
            for &(nx, pr) in &t.successors {
                match z.local(nx) {
                    Some(j) if z.is_i[j] => {
                        stay += pr;
                        into_i += pr;
                    }
                    Some(j) => {
                        stay += pr;
                        succ.push((j, pr));
                    }
                    None => bad += pr,
                }
            }
            if bad > 0.0 && !z.relaxed {
                return Err(SynthError::NotClosed {
                    state: s,
                    action: u,
                });
            }
            let cost = t.cost * stay;
            let name = if z.is_i[k] {
                format!("z{tag}_{s}o_{u}")
            } else {
                format!("z{tag}_{s}_{u}")
            };
            let var = lp.add_var(name, weight * (cost + penalty * bad));
            flow[k].push((var, 1.0));
            for (j, pr) in succ {
                flow[j].push((var, -pr));
            }
            if into_i + bad > 0.0 {
                norm.push((var, into_i + bad));
            }
            vars.push(SuffixVar {
                state: s,
                action: u,
                var,
                cost,
                bad,
                settle: into_i + bad,
            });
        }
    }
    let flow_rows = flow
        .into_iter()
        .enumerate()
        .map(|(k, coeffs)| {
            let s = z.states[k];
            let name = if z.is_i[k] {
                format!("sflow{tag}_{s}o")
            } else {
                format!("sflow{tag}_{s}")
            };
            lp.add_constraint(name, merge(coeffs), Relation::Eq, 0.0)
        })
        .collect();
    let norm_row = lp.add_constraint(format!("settle{tag}"), merge(norm), Relation::Eq, 0.0);
    Ok(SuffixBlock {
        vars,
        flow_rows,
        norm_row,
        penalty,
    })
}

fn set_constant_inflow(lp: &mut LinearProgram, block: &SuffixBlock, y0: &[f64]) {
    for (k, &row) in block.flow_rows.iter().enumerate() {
        lp.constraints[row].rhs = y0[k];
    }
    lp.constraints[block.norm_row].rhs = y0.iter().sum();
}

/// The suffix program of an AMEC with a fixed inflow `y0` per local state
/// (entering an I state means entering its out-copy).
pub fn build_suffix_program(
    p: &ProductAutomaton,
    z: &SuffixMdp,
    y0: &[f64],
) -> Result<Program, SynthError> {
    build_standalone(p, z, y0, 0.0)
}

/// The relaxed suffix program of an ASCC with bad-state penalty `d`.
pub fn build_relaxed_suffix_program(
    p: &ProductAutomaton,
    z: &SuffixMdp,
    y0: &[f64],
    d: f64,
) -> Result<Program, SynthError> {
    build_standalone(p, z, y0, d)
}

fn build_standalone(
    p: &ProductAutomaton,
    z: &SuffixMdp,
    y0: &[f64],
    d: f64,
) -> Result<Program, SynthError> {
    if !z.is_i.iter().any(|&b| b) {
        return Err(SynthError::NoAcceptingStates);
    }
    assert_eq!(y0.len(), z.len(), "one inflow value per component state");
    let mut lp = LinearProgram::new();
    let block = add_suffix_block(&mut lp, p, z, 0, 1.0, if z.relaxed { d } else { 0.0 })?;
    set_constant_inflow(&mut lp, &block, y0);
    Ok(Program {
        lp,
        layout: ProgramLayout {
            suffix: vec![block],
            ..Default::default()
        },
    })
}

/// The combined program: `β · C_pre + (1 - β) · Σ C_suf` (or `C_sufx` with
/// penalty `d`) where each component's inflow is the prefix flow into it.
/// A state shared by several components feeds the first one.
pub fn build_combined_program(
    p: &ProductAutomaton,
    pre: &PrefixMdp,
    comps: &[SuffixMdp],
    gamma: f64,
    beta: f64,
    d: f64,
) -> Result<Program, SynthError> {
    if comps.is_empty() {
        return Err(SynthError::NoComponents);
    }
    let mut lp = LinearProgram::new();
    let prefix = add_prefix_vars(&mut lp, p, pre, beta);
    let reach_row = add_reach_row(&mut lp, pre, &prefix, gamma);
    add_prefix_flow(&mut lp, p, pre, &prefix);

    let mut owner: HashMap<PStateId, (usize, usize)> = HashMap::new();
    for (c, z) in comps.iter().enumerate() {
        if !z.is_i.iter().any(|&b| b) {
            return Err(SynthError::NoAcceptingStates);
        }
        for (k, &s) in z.states.iter().enumerate() {
            owner.entry(s).or_insert((c, k));
        }
    }
    let mut suffix = Vec::with_capacity(comps.len());
    for (c, z) in comps.iter().enumerate() {
        let penalty = if z.relaxed { d } else { 0.0 };
        suffix.push(add_suffix_block(&mut lp, p, z, c, 1.0 - beta, penalty)?);
    }

    // y0 as the prefix inflow
    let mut extra: Vec<Vec<(usize, VarId, f64)>> = vec![Vec::new(); comps.len()];
    for v in &prefix {
        let t = p
            .transition(v.state, v.action)
            .expect("prefix variable without transition");
        for &(n, pr) in &t.successors {
            if let Some(&(c, k)) = owner.get(&n) {
                extra[c].push((suffix[c].flow_rows[k], v.var, -pr));
            }
        }
    }
    for (c, terms) in extra.into_iter().enumerate() {
        let mut norm_add: Vec<(VarId, f64)> = Vec::new();
        for (row, var, a) in terms {
            lp.constraints[row].coeffs.push((var, a));
            norm_add.push((var, a));
        }
        let nr = suffix[c].norm_row;
        lp.constraints[nr].coeffs.extend(norm_add);
        let merged = merge(std::mem::take(&mut lp.constraints[nr].coeffs));
        lp.constraints[nr].coeffs = merged;
    }
    for row in suffix.iter().flat_map(|b| b.flow_rows.iter()) {
        let merged = merge(std::mem::take(&mut lp.constraints[*row].coeffs));
        lp.constraints[*row].coeffs = merged;
    }
    if let Some(&(c, k)) = owner.get(&pre.initial) {
        lp.constraints[suffix[c].flow_rows[k]].rhs = 1.0;
        lp.constraints[suffix[c].norm_row].rhs = 1.0;
    }
    Ok(Program {
        lp,
        layout: ProgramLayout {
            prefix,
            reach_row: Some(reach_row),
            suffix,
        },
    })
}

/// Prefix flow constraints only, maximizing the probability of reaching
/// `S_c`. Used to report the achievable risk when the bound is infeasible.
pub fn build_max_reach_program(p: &ProductAutomaton, z: &PrefixMdp) -> Program {
    let mut lp = LinearProgram::new();
    let mut prefix = add_prefix_vars(&mut lp, p, z, 0.0);
    for v in &mut prefix {
        lp.objective[v.var] = -v.reach;
    }
    add_prefix_flow(&mut lp, p, z, &prefix);
    Program {
        lp,
        layout: ProgramLayout {
            prefix,
            ..Default::default()
        },
    }
}
