//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are eliminated left-looking in order of increasing nonzero
//! count. Step `k` pivots on row `prow[k]` and corresponds to basis
//! position `pcol[k]`; `lcols[k]` holds the multipliers below the pivot and
//! `ucols[k]` the entries of `U` above the diagonal as `(step, value)`.

/// Magnitude below which a pivot candidate counts as zero.
const SINGULAR_TOL: f64 = 1e-11;
/// Threshold partial pivoting: accept any candidate within this factor of
/// the largest one.
const THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries of the transformed entering column.
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Factor {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    /// Step at which each row was pivoted.
    rowstep: Vec<usize>,
    lcols: Vec<Vec<(usize, f64)>>,
    ucols: Vec<Vec<(usize, f64)>>,
    udiag: Vec<f64>,
    etas: Vec<Eta>,
}

/// Result of a factorization attempt. `dropped` lists basis positions whose
/// columns were linearly dependent; `free_rows` the rows left without a
/// pivot, one per dropped position.
#[derive(Debug)]
pub struct Singular {
    pub dropped: Vec<usize>,
    pub free_rows: Vec<usize>,
}

impl Factor {
    /// Factorizes the `m × m` basis whose column at position `p` is
    /// `cols[p]` (row, value) pairs.
    pub fn new(
        m: usize,
        cols: &[Vec<(usize, f64)>],
        row_counts: &[usize],
    ) -> Result<Factor, Singular> {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len(), p));

        let mut f = Factor {
            m,
            prow: Vec::with_capacity(m),
            pcol: Vec::with_capacity(m),
            rowstep: vec![usize::MAX; m],
            lcols: Vec::with_capacity(m),
            ucols: Vec::with_capacity(m),
            udiag: Vec::with_capacity(m),
            etas: Vec::new(),
        };
        let mut x = vec![0.0; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; m];
        let mut dropped = Vec::new();

        for &p in &order {
            for &(r, v) in &cols[p] {
                if !mark[r] {
                    mark[r] = true;
                    touched.push(r);
                }
                x[r] += v;
            }
            let k = f.prow.len();
            let mut ucol = Vec::new();
            for j in 0..k {
                let r = f.prow[j];
                let xr = x[r];
                if xr == 0.0 {
                    continue;
                }
                ucol.push((j, xr));
                for &(i, l) in &f.lcols[j] {
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    x[i] -= l * xr;
                }
            }
            let mut best = 0.0f64;
            for &i in &touched {
                if f.rowstep[i] == usize::MAX {
                    best = best.max(x[i].abs());
                }
            }
            if best <= SINGULAR_TOL {
                dropped.push(p);
            } else {
                let mut piv = usize::MAX;
                for &i in &touched {
                    if f.rowstep[i] == usize::MAX && x[i].abs() >= THRESHOLD * best {
                        let better = piv == usize::MAX
                            || row_counts[i] < row_counts[piv]
                            || (row_counts[i] == row_counts[piv] && x[i].abs() > x[piv].abs());
                        if better {
                            piv = i;
                        }
                    }
                }
                let d = x[piv];
                let mut lcol = Vec::new();
                for &i in &touched {
                    if i != piv && f.rowstep[i] == usize::MAX && x[i] != 0.0 {
                        lcol.push((i, x[i] / d));
                    }
                }
                f.rowstep[piv] = k;
                f.prow.push(piv);
                f.pcol.push(p);
                f.lcols.push(lcol);
                f.ucols.push(ucol);
                f.udiag.push(d);
            }
            for &i in &touched {
                x[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
        }
        if dropped.is_empty() {
            Ok(f)
        } else {
            let free_rows = (0..m).filter(|&r| f.rowstep[r] == usize::MAX).collect();
            Err(Singular { dropped, free_rows })
        }
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = b` in place: `b` is indexed by row on entry and by
    /// basis position on return.
    pub fn ftran(&self, b: &mut [f64]) {
        let m = self.m;
        let mut v = vec![0.0; m];
        for j in 0..m {
            let vj = b[self.prow[j]];
            v[j] = vj;
            if vj != 0.0 {
                for &(i, l) in &self.lcols[j] {
                    b[i] -= l * vj;
                }
            }
        }
        for k in (0..m).rev() {
            let t = v[k] / self.udiag[k];
            v[k] = t;
            if t != 0.0 {
                for &(j, u) in &self.ucols[k] {
                    v[j] -= u * t;
                }
            }
        }
        for k in 0..m {
            b[self.pcol[k]] = v[k];
        }
        for e in &self.etas {
            let zr = b[e.pos] / e.pivot;
            b[e.pos] = zr;
            if zr != 0.0 {
                for &(i, d) in &e.entries {
                    b[i] -= d * zr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c` in place: `c` is indexed by basis position on entry
    /// and by row on return.
    pub fn btran(&self, c: &mut [f64]) {
        let m = self.m;
        for e in self.etas.iter().rev() {
            let mut s = c[e.pos];
            for &(i, d) in &e.entries {
                s -= d * c[i];
            }
            c[e.pos] = s / e.pivot;
        }
        let mut g = vec![0.0; m];
        for k in 0..m {
            let mut s = c[self.pcol[k]];
            for &(j, u) in &self.ucols[k] {
                s -= u * g[j];
            }
            g[k] = s / self.udiag[k];
        }
        for j in (0..m).rev() {
            let mut s = g[j];
            for &(i, l) in &self.lcols[j] {
                s -= l * c[i];
            }
            c[self.prow[j]] = s;
        }
    }

    /// Records the basis change at position `pos`, where `d = B⁻¹ a_q` is the
    /// transformed entering column.
    pub fn update(&mut self, pos: usize, d: &[f64]) {
        let entries = d
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: d[pos],
            entries,
        });
    }
}
