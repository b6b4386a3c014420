//! Smallest Dirichlet eigenvalue of `−Δ` on the channel.
//!
//! The discrete problem `Kv = λ·diag(J)·v` is symmetrized as
//! `S = M^{-1/2} K M^{-1/2}` and solved by inverse power iteration; each
//! inner solve is a warm-started CG on `S`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ChannelGrid, ScalarField};
use crate::linalg::{conjugate_gradient, dot, norm, SparseOperator};
use crate::operators::Laplacian;

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Unit `J`-weighted L² norm, positive inside, zero on the walls.
    pub eigenfunction: ScalarField,
    /// `‖(−Δ − λ₁)v‖ / ‖v‖` in the `J`-weighted norm.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub max_outer: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            max_outer: 500,
            cg_tol: 1e-12,
            cg_max_iter: 20_000,
        }
    }
}

pub fn smallest_dirichlet_eigenvalue(grid: &Arc<ChannelGrid>, tol: f64) -> Result<EigenResult> {
    smallest_dirichlet_eigenvalue_with(grid, tol, EigenOptions::default())
}

pub fn smallest_dirichlet_eigenvalue_with(
    grid: &Arc<ChannelGrid>,
    tol: f64,
    opts: EigenOptions,
) -> Result<EigenResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let lap = Laplacian::new(grid.clone());
    let k = lap.stiffness();
    let mass = lap.mass();
    let sym = SymmetrizedOperator::new(&k, &mass);
    let n = lap.n_interior();
    let ny = grid.ny();

    // flat-channel eigenfunction cos(πη/2) as deterministic start
    let mut x = Vec::with_capacity(n);
    for i in 0..grid.nx() {
        for j in 1..ny - 1 {
            let v = (std::f64::consts::FRAC_PI_2 * grid.eta(j)).cos();
            x.push(v * mass[(i * (ny - 2)) + j - 1].sqrt());
        }
    }
    normalize(&mut x);

    let diag = sym.diagonal();
    let mut rho = sym.rayleigh(&x);
    let mut y = x.iter().map(|v| v / rho).collect::<Vec<_>>();
    let mut residual = f64::INFINITY;
    let mut sx = vec![0.0; n];
    for it in 1..=opts.max_outer {
        conjugate_gradient(
            |v, out| sym.apply(v, out),
            &diag,
            &x,
            &mut y,
            opts.cg_tol,
            opts.cg_max_iter,
        )?;
        let ny_ = norm(&y);
        x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / ny_);
        sym.apply(&x, &mut sx);
        let rho_prev = std::mem::replace(&mut rho, dot(&x, &sx));
        residual = sx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - rho * b).powi(2))
            .sum::<f64>()
            .sqrt();
        // warm start for the next inner solve: S⁻¹x ≈ x/ρ
        y.iter_mut().zip(&x).for_each(|(a, b)| *a = b / rho);
        if (rho - rho_prev).abs() < tol && residual < 10.0 * tol {
            return Ok(assemble(grid, &mass, &x, rho, residual, it));
        }
    }
    Err(Error::EigenNotConverged(Box::new(assemble(
        grid,
        &mass,
        &x,
        rho,
        residual,
        opts.max_outer,
    ))))
}

fn assemble(
    grid: &Arc<ChannelGrid>,
    mass: &[f64],
    x: &[f64],
    lambda1: f64,
    residual: f64,
    iterations: usize,
) -> EigenResult {
    let ny = grid.ny();
    let mut v = ScalarField::zeros(grid.clone());
    let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    for i in 0..grid.nx() {
        for j in 1..ny - 1 {
            let k = i * (ny - 2) + j - 1;
            v.set(i, j, sign * x[k] / mass[k].sqrt());
        }
    }
    // unit J-weighted L² norm including the cell area
    let scale = (grid.dx() * grid.deta()).sqrt();
    let v = v.scale(1.0 / scale);
    EigenResult {
        lambda1,
        eigenfunction: v,
        residual,
        iterations,
    }
}

fn normalize(x: &mut [f64]) {
    let n = norm(x);
    x.iter_mut().for_each(|v| *v /= n);
}

/// `M^{-1/2} K M^{-1/2}` applied without forming it.
pub struct SymmetrizedOperator<'a> {
    k: &'a SparseOperator,
    inv_sqrt_mass: Vec<f64>,
}

impl<'a> SymmetrizedOperator<'a> {
    pub fn new(k: &'a SparseOperator, mass: &[f64]) -> Self {
        Self {
            k,
            inv_sqrt_mass: mass.iter().map(|m| 1.0 / m.sqrt()).collect(),
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let tmp: Vec<f64> = x.iter().zip(&self.inv_sqrt_mass).map(|(a, s)| a * s).collect();
        self.k.matvec_into(&tmp, out);
        out.iter_mut().zip(&self.inv_sqrt_mass).for_each(|(o, s)| *o *= s);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.k
            .diagonal()
            .iter()
            .zip(&self.inv_sqrt_mass)
            .map(|(d, s)| d * s * s)
            .collect()
    }

    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut sx = vec![0.0; x.len()];
        self.apply(x, &mut sx);
        dot(x, &sx) / dot(x, x)
    }

    /// Dense copy, for small grids.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = self.k.to_dense();
        let n = d.nrows();
        for r in 0..n {
            for c in 0..n {
                d[(r, c)] *= self.inv_sqrt_mass[r] * self.inv_sqrt_mass[c];
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryProfile;
    use std::f64::consts::PI;

    #[test]
    fn flat_channel_eigenvalue_and_mode() {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::flat(), 64, 33).unwrap());
        let r = smallest_dirichlet_eigenvalue(&g, 1e-9).unwrap();
        // discrete 1-D mode: (4/dη²) sin²(π dη / 4)
        let de = g.deta();
        let discrete = 4.0 / (de * de) * (PI * de / 4.0).sin().powi(2);
        assert!((r.lambda1 - discrete).abs() < 1e-8, "{} vs {}", r.lambda1, discrete);
        assert!(r.residual < 1e-8);
        // interior positivity
        for i in 0..g.nx() {
            for j in 1..g.ny() - 1 {
                assert!(r.eigenfunction.get(i, j) > 0.0);
            }
        }
        // J-weighted unit norm
        let n2 = r.eigenfunction.map(|v| v * v).integral();
        assert!((n2 - 1.0).abs() < 1e-10, "{n2}");
        // shape cos(πy/2)/√(2π)
        let amp = 1.0 / (2.0 * PI).sqrt();
        let err = (0..g.ny())
            .map(|j| (r.eigenfunction.get(5, j) - amp * (PI * g.eta(j) / 2.0).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::flat(), 16, 17).unwrap());
        assert!(smallest_dirichlet_eigenvalue(&g, 0.0).is_err());
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(0.2), 16, 17).unwrap());
        let opts = EigenOptions {
            max_outer: 1,
            ..EigenOptions::default()
        };
        match smallest_dirichlet_eigenvalue_with(&g, 1e-14, opts) {
            Err(Error::EigenNotConverged(last)) => {
                assert!(last.lambda1 > 0.0);
                assert_eq!(last.iterations, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
