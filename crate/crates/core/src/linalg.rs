//! Sparse storage and the two linear solvers the crate needs: a direct
//! solver for periodic block-tridiagonal systems (every stencil operator on
//! a [`ChannelGrid`](crate::geometry::ChannelGrid) has that shape once the
//! unknowns are ordered column by column) and Jacobi-preconditioned CG.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// columns sorted within each row.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].iter().cloned().zip(self.values[a..b].iter().cloned())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (r, out) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in a..b {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|a_rc - a_cr|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }
}

/// One block row of a periodic block-tridiagonal matrix:
/// `lower·X_{i-1} + diag·X_i + upper·X_{i+1}` (indices mod n).
#[derive(Debug, Clone)]
pub struct BlockRow {
    pub lower: DMatrix<f64>,
    pub diag: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

/// Direct factorization of a periodic block-tridiagonal matrix.
///
/// Gaussian elimination by block rows with the last block column kept as a
/// fill-in column, so a cyclic chain of `n` blocks of size `m` costs
/// `O(n·m³)` and the factorization can be reused across right-hand sides.
pub struct BlockCyclicLu {
    n: usize,
    m: usize,
    lower: Vec<DMatrix<f64>>,
    pivots: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    w_up: Vec<DMatrix<f64>>,
    w_last: Vec<DMatrix<f64>>,
    bottom: Vec<DMatrix<f64>>,
    last: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl BlockCyclicLu {
    pub fn factor(rows: Vec<BlockRow>) -> Result<Self> {
        let n = rows.len();
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "periodic block system needs at least 3 blocks, got {n}"
            )));
        }
        let m = rows[0].diag.nrows();
        let mut pivots = Vec::with_capacity(n - 1);
        let mut w_up = Vec::with_capacity(n - 1);
        let mut w_last = Vec::with_capacity(n - 1);
        let mut lower = Vec::with_capacity(n);

        let mut d = Some(rows[0].diag.clone());
        let mut u = rows[0].upper.clone();
        let mut r = rows[0].lower.clone();
        for i in 0..n - 1 {
            if i == n - 2 {
                // X_{i+1} is the retained last unknown
                r += &u;
                u = DMatrix::zeros(m, m);
            }
            let lu = LU::new(d.take().expect("pivot block"));
            let wu = solve_block(&lu, &u, i)?;
            let wr = solve_block(&lu, &r, i)?;
            pivots.push(lu);
            if i + 1 < n - 1 {
                let row = &rows[i + 1];
                d = Some(&row.diag - &row.lower * &wu);
                r = -(&row.lower * &wr);
                u = row.upper.clone();
            }
            w_up.push(wu);
            w_last.push(wr);
        }
        for row in &rows {
            lower.push(row.lower.clone());
        }

        // Eliminate X_0 .. X_{n-2} from the last block row.
        let mut dlast = rows[n - 1].diag.clone();
        let mut bottom = Vec::with_capacity(n - 1);
        let mut c = rows[n - 1].upper.clone();
        for k in 0..n - 1 {
            if k == n - 2 {
                c += &rows[n - 1].lower;
            }
            dlast -= &c * &w_last[k];
            let next = if k + 1 < n - 1 {
                -(&c * &w_up[k])
            } else {
                DMatrix::zeros(m, m)
            };
            bottom.push(c);
            c = next;
        }
        let last = LU::new(dlast);
        if !last.is_invertible() {
            return Err(Error::SingularLinearization("singular closing block".into()));
        }
        Ok(Self {
            n,
            m,
            lower,
            pivots,
            w_up,
            w_last,
            bottom,
            last,
        })
    }

    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = (self.n, self.m);
        if rhs.len() != n * m {
            return Err(Error::InvalidArgument(format!(
                "rhs length {} does not match system size {}",
                rhs.len(),
                n * m
            )));
        }
        let block = |i: usize| DVector::from_column_slice(&rhs[i * m..(i + 1) * m]);
        let mut y: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let mut b = block(i);
            if i > 0 {
                b -= &self.lower[i] * &y[i - 1];
            }
            let yi = self.pivots[i]
                .solve(&b)
                .ok_or_else(|| Error::SingularLinearization(format!("block {i}")))?;
            y.push(yi);
        }
        let mut blast = block(n - 1);
        for k in 0..n - 1 {
            blast -= &self.bottom[k] * &y[k];
        }
        let xlast = self
            .last
            .solve(&blast)
            .ok_or_else(|| Error::SingularLinearization("closing block".into()))?;
        let mut x = vec![DVector::zeros(m); n];
        x[n - 1] = xlast;
        for k in (0..n - 1).rev() {
            let mut xk = &y[k] - &self.w_last[k] * &x[n - 1];
            if k + 1 < n - 1 {
                xk -= &self.w_up[k] * &x[k + 1];
            }
            x[k] = xk;
        }
        let mut out: Vec<f64> = Vec::with_capacity(n * m);
        for xk in x {
            out.extend(xk.iter());
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLinearization("non-finite solution".into()));
        }
        Ok(out)
    }
}

fn solve_block(
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    b: &DMatrix<f64>,
    i: usize,
) -> Result<DMatrix<f64>> {
    if !lu.is_invertible() {
        return Err(Error::SingularLinearization(format!("singular pivot block {i}")));
    }
    lu.solve(b)
        .ok_or_else(|| Error::SingularLinearization(format!("pivot block {i}")))
}

/// Outcome of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator given as a mat-vec closure. `x` holds the initial guess.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rel = norm(&r) / bnorm;
        if rel <= rel_tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SingularLinearization(format!(
                "CG breakdown (pAp = {pap:e})"
            )));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let rel = norm(&r) / bnorm;
    if rel <= rel_tol {
        Ok(CgStats {
            iterations: max_iter,
            relative_residual: rel,
        })
    } else {
        Err(Error::NonConvergence {
            iterations: max_iter,
            residual: rel,
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
