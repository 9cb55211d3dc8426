//! Two-phase revised primal simplex over `A x = b, x ≥ 0`.

use crate::lu::Factor;
use crate::{LinearProgram, LpError, LpSolution, LpSolver, LpStatus, Relation, Tolerances};

const NONBASIC: usize = usize::MAX;
/// Primal slack used by the Harris ratio test and for phase-1 residuals.
const HARRIS_DELTA: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

/// Revised simplex with a sparse LU basis factorization refreshed every
/// `refactor_interval` updates. `max_iterations == 0` picks a limit from
/// the problem size.
#[derive(Debug, Clone)]
pub struct SimplexSolver {
    pub max_iterations: usize,
    pub refactor_interval: usize,
}

impl Default for SimplexSolver {
    fn default() -> Self {
        SimplexSolver {
            max_iterations: 0,
            refactor_interval: 64,
        }
    }
}

/// Equality form: structural columns first, then one slack per inequality.
/// Column `n + i` is the artificial of row `i`.
struct StdForm {
    m: usize,
    n: usize,
    n_struct: usize,
    col_start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
    cost: Vec<f64>,
    b: Vec<f64>,
    row_sign: Vec<f64>,
    /// Column usable as an initial basic variable for each row, if any.
    unit_slack: Vec<Option<usize>>,
}

impl StdForm {
    fn build(lp: &LinearProgram) -> StdForm {
        let m = lp.constraints.len();
        let n_struct = lp.num_vars();
        let row_sign: Vec<f64> = lp
            .constraints
            .iter()
            .map(|c| if c.rhs < 0.0 { -1.0 } else { 1.0 })
            .collect();

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a * row_sign[i]));
                }
            }
        }
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|next, prev| {
                if next.0 == prev.0 {
                    prev.1 += next.1;
                    true
                } else {
                    false
                }
            });
            col.retain(|e| e.1 != 0.0);
        }
        let mut cost = lp.objective.clone();
        let mut unit_slack = vec![None; m];
        for (i, c) in lp.constraints.iter().enumerate() {
            let coef = match c.relation {
                Relation::Eq => continue,
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
            } * row_sign[i];
            if coef > 0.0 {
                unit_slack[i] = Some(cols.len());
            }
            cols.push(vec![(i, coef)]);
            cost.push(0.0);
        }
        let n = cols.len();
        let mut col_start = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for col in &cols {
            col_start.push(rows.len());
            for &(r, v) in col {
                rows.push(r);
                vals.push(v);
            }
        }
        col_start.push(rows.len());
        let b = lp
            .constraints
            .iter()
            .zip(&row_sign)
            .map(|(c, s)| c.rhs * s)
            .collect();
        StdForm {
            m,
            n,
            n_struct,
            col_start,
            rows,
            vals,
            cost,
            b,
            row_sign,
            unit_slack,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j >= self.n {
            vec![(j - self.n, 1.0)]
        } else {
            let r = self.col_start[j]..self.col_start[j + 1];
            self.rows[r.clone()]
                .iter()
                .copied()
                .zip(self.vals[r].iter().copied())
                .collect()
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.col_start[j]..self.col_start[j + 1] {
            s += self.vals[k] * y[self.rows[k]];
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
    /// An artificial variable picked up mass after a refactorization.
    NeedPhaseOne,
    Numeric,
}

struct Simplex<'a> {
    s: &'a StdForm,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    xb: Vec<f64>,
    factor: Factor,
    row_counts: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
    refactor_interval: usize,
}

impl<'a> Simplex<'a> {
    fn new(s: &'a StdForm, max_iterations: usize, refactor_interval: usize) -> Simplex<'a> {
        let mut row_counts = vec![0usize; s.m];
        for &r in &s.rows {
            row_counts[r] += 1;
        }
        let basis: Vec<usize> = (0..s.m)
            .map(|i| s.unit_slack[i].unwrap_or(s.n + i))
            .collect();
        let mut pos_of = vec![NONBASIC; s.n + s.m];
        for (p, &j) in basis.iter().enumerate() {
            pos_of[j] = p;
        }
        Simplex {
            s,
            basis,
            pos_of,
            xb: vec![0.0; s.m],
            factor: Factor::default(),
            row_counts,
            iterations: 0,
            max_iterations,
            refactor_interval,
        }
    }

    /// Refactorizes the basis, repairing singularities with artificials,
    /// and recomputes the basic values.
    fn refactor(&mut self) -> Result<(), ()> {
        for _ in 0..3 {
            let cols: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.s.column(j)).collect();
            match Factor::new(self.s.m, &cols, &self.row_counts) {
                Ok(f) => {
                    self.factor = f;
                    let mut x = self.s.b.clone();
                    self.factor.ftran(&mut x);
                    self.xb = x;
                    return Ok(());
                }
                Err(sing) => {
                    log::debug!("basis repair: {} dependent columns", sing.dropped.len());
                    for (&pos, &row) in sing.dropped.iter().zip(&sing.free_rows) {
                        self.pos_of[self.basis[pos]] = NONBASIC;
                        let art = self.s.n + row;
                        if self.pos_of[art] != NONBASIC {
                            return Err(());
                        }
                        self.basis[pos] = art;
                        self.pos_of[art] = pos;
                    }
                }
            }
        }
        Err(())
    }

    fn duals(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| cost(j)).collect();
        self.factor.btran(&mut y);
        y
    }

    fn run(&mut self, phase: Phase) -> Outcome {
        let s = self.s;
        let cost = |j: usize| -> f64 {
            match phase {
                Phase::One => {
                    if s.is_artificial(j) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Phase::Two => {
                    if s.is_artificial(j) {
                        0.0
                    } else {
                        s.cost[j]
                    }
                }
            }
        };
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut d = vec![0.0; s.m];
        loop {
            if self.factor.num_etas() >= self.refactor_interval {
                if self.refactor().is_err() {
                    return Outcome::Numeric;
                }
                if self.xb.iter().any(|&v| v < -1e-6) {
                    return Outcome::Numeric;
                }
                if phase == Phase::Two
                    && self
                        .basis
                        .iter()
                        .zip(&self.xb)
                        .any(|(&j, &v)| s.is_artificial(j) && v > 1e-7)
                {
                    return Outcome::NeedPhaseOne;
                }
            }
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            let y = self.duals(&cost);

            let mut enter = NONBASIC;
            let mut best = -OPT_TOL;
            for j in 0..s.n {
                if self.pos_of[j] != NONBASIC {
                    continue;
                }
                let dj = cost(j) - s.dot_column(j, &y);
                if bland {
                    if dj < -OPT_TOL {
                        enter = j;
                        break;
                    }
                } else if dj < best {
                    best = dj;
                    enter = j;
                }
            }
            if enter == NONBASIC {
                return Outcome::Optimal;
            }

            d.iter_mut().for_each(|v| *v = 0.0);
            for k in s.col_start[enter]..s.col_start[enter + 1] {
                d[s.rows[k]] = s.vals[k];
            }
            self.factor.ftran(&mut d);

            // Basic artificials in phase 2 are pinned to zero from both sides.
            let pinned = |i: usize| phase == Phase::Two && s.is_artificial(self.basis[i]);
            let leave = if bland {
                let mut leave = NONBASIC;
                let mut best_ratio = f64::INFINITY;
                for i in 0..s.m {
                    let di = d[i];
                    if di > PIVOT_TOL || (pinned(i) && di < -PIVOT_TOL) {
                        let ratio = (self.xb[i] / di).max(0.0);
                        let tie = leave != NONBASIC
                            && (ratio - best_ratio).abs() <= 1e-12
                            && self.basis[i] < self.basis[leave];
                        if ratio < best_ratio - 1e-12 || tie {
                            best_ratio = ratio;
                            leave = i;
                        }
                    }
                }
                leave
            } else {
                let mut theta_max = f64::INFINITY;
                for i in 0..s.m {
                    let di = d[i];
                    if di > PIVOT_TOL {
                        theta_max = theta_max.min((self.xb[i] + HARRIS_DELTA) / di);
                    } else if pinned(i) && di < -PIVOT_TOL {
                        theta_max = theta_max.min((HARRIS_DELTA - self.xb[i]) / -di);
                    }
                }
                let mut leave = NONBASIC;
                let mut best_piv = 0.0;
                if theta_max.is_finite() {
                    for i in 0..s.m {
                        let di = d[i];
                        if di > PIVOT_TOL || (pinned(i) && di < -PIVOT_TOL) {
                            let ratio = self.xb[i] / di;
                            if ratio <= theta_max && di.abs() > best_piv {
                                best_piv = di.abs();
                                leave = i;
                            }
                        }
                    }
                }
                leave
            };
            if leave == NONBASIC {
                return if phase == Phase::One {
                    Outcome::Numeric
                } else {
                    Outcome::Unbounded
                };
            }

            let theta = (self.xb[leave] / d[leave]).max(0.0);
            if theta != 0.0 {
                for i in 0..s.m {
                    self.xb[i] -= theta * d[i];
                }
            }
            self.xb[leave] = theta;
            self.factor.update(leave, &d);
            self.pos_of[self.basis[leave]] = NONBASIC;
            self.basis[leave] = enter;
            self.pos_of[enter] = leave;
            self.iterations += 1;

            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    fn artificial_mass(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| self.s.is_artificial(j))
            .map(|(_, &v)| v.max(0.0))
            .sum()
    }
}

impl LpSolver for SimplexSolver {
    fn solve(&self, lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution, LpError> {
        lp.check()?;
        let s = StdForm::build(lp);
        let max_iterations = if self.max_iterations == 0 {
            50 * (s.m + s.n) + 10_000
        } else {
            self.max_iterations
        };
        let mut sx = Simplex::new(&s, max_iterations, self.refactor_interval.max(1));
        let fail = |iterations| LpSolution {
            status: LpStatus::NumericFailure,
            objective: f64::NAN,
            values: Vec::new(),
            duals: None,
            iterations,
        };
        if sx.refactor().is_err() {
            return Ok(fail(0));
        }
        let b_scale = 1.0 + s.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        for _round in 0..4 {
            if sx.basis.iter().any(|&j| s.is_artificial(j)) && sx.artificial_mass() > 0.0 {
                match sx.run(Phase::One) {
                    Outcome::Optimal => {}
                    _ => return Ok(fail(sx.iterations)),
                }
                if sx.refactor().is_err() {
                    return Ok(fail(sx.iterations));
                }
                if sx.artificial_mass() > 1e-7 * b_scale {
                    return Ok(LpSolution {
                        status: LpStatus::Infeasible,
                        objective: f64::NAN,
                        values: Vec::new(),
                        duals: None,
                        iterations: sx.iterations,
                    });
                }
            }
            match sx.run(Phase::Two) {
                Outcome::Optimal => return Ok(finish(lp, &s, &mut sx, tol)),
                Outcome::Unbounded => {
                    return Ok(LpSolution {
                        status: LpStatus::Unbounded,
                        objective: f64::NEG_INFINITY,
                        values: Vec::new(),
                        duals: None,
                        iterations: sx.iterations,
                    })
                }
                Outcome::NeedPhaseOne => continue,
                Outcome::IterationLimit | Outcome::Numeric => return Ok(fail(sx.iterations)),
            }
        }
        Ok(fail(sx.iterations))
    }
}

fn finish(lp: &LinearProgram, s: &StdForm, sx: &mut Simplex<'_>, tol: &Tolerances) -> LpSolution {
    let fail = |iterations| LpSolution {
        status: LpStatus::NumericFailure,
        objective: f64::NAN,
        values: Vec::new(),
        duals: None,
        iterations,
    };
    if sx.refactor().is_err() {
        return fail(sx.iterations);
    }
    let mut values = vec![0.0; s.n_struct];
    for (&j, &v) in sx.basis.iter().zip(&sx.xb) {
        if j < s.n_struct {
            values[j] = v;
        }
    }
    for v in &mut values {
        if *v < 0.0 && *v >= -tol.nonnegativity {
            *v = 0.0;
        }
    }
    if !lp.replay(&values, tol).is_empty() {
        log::debug!("optimal basis failed constraint replay");
        return fail(sx.iterations);
    }
    let y = sx.duals(&|j| if s.is_artificial(j) { 0.0 } else { s.cost[j] });
    let duals = y.iter().zip(&s.row_sign).map(|(v, sg)| v * sg).collect();
    LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&values),
        values,
        duals: Some(duals),
        iterations: sx.iterations,
    }
}
