//! Harmonic part of a velocity field.
//!
//! Harmonic fields tangent to both walls are spanned by `∇⊥q` with `Δq = 0`,
//! `q = 0` on the lower wall and `q = 1` on the upper wall. For `u = ∇⊥ψ`
//! with wall values `c₁, c₂` Green's identity gives
//! `∫ u·∇⊥q = (c₂ − c₁) ∫_{Γ₁} ∂_ν q`, where `ν` is the unit normal pointing
//! in the `+y` direction on both walls. Both sides are computed here by
//! independent quadratures.

use std::sync::Arc;

use crate::equilibrium::{solve_dirichlet, EquilibriumSolution, NewtonOptions, VorticityProfile};
use crate::error::{Error, Result};
use crate::geometry::{ChannelGrid, ScalarField};
use crate::operators::{gradient, Laplacian};

#[derive(Debug, Clone)]
pub struct HarmonicGenerator {
    /// Unnormalized harmonic function with wall values `(c, c + 1)`.
    pub q: ScalarField,
    /// Scale making `‖∇⊥q‖_{L²} = 1`.
    pub normalization: f64,
    /// `∫_{Γ₁} ∂_ν q ds` for the unnormalized `q`.
    pub flux: f64,
    /// Same flux through the upper wall.
    pub flux_upper: f64,
    grad: (ScalarField, ScalarField),
}

impl HarmonicGenerator {
    pub fn grid(&self) -> &Arc<ChannelGrid> {
        self.q.grid()
    }

    /// `∇⊥q` of the normalized generator.
    pub fn field(&self) -> (ScalarField, ScalarField) {
        let (gx, gy) = &self.grad;
        (gy.scale(-self.normalization), gx.scale(self.normalization))
    }

    /// `‖Δq‖∞` over interior nodes.
    pub fn harmonic_residual(&self) -> f64 {
        Laplacian::new(self.grid().clone()).apply(&self.q).interior_max_abs()
    }
}

pub fn harmonic_generator(grid: &Arc<ChannelGrid>) -> Result<HarmonicGenerator> {
    harmonic_generator_with(grid, 0.0)
}

/// Generator with wall values `(base, base + 1)`.
pub fn harmonic_generator_with(grid: &Arc<ChannelGrid>, base: f64) -> Result<HarmonicGenerator> {
    let ny = grid.ny();
    let walls = ScalarField::from_index_fn(grid.clone(), |_, j| {
        if j == ny - 1 {
            base + 1.0
        } else {
            base
        }
    });
    let guess = ScalarField::from_index_fn(grid.clone(), |_, j| base + j as f64 / (ny - 1) as f64);
    let (q, _, _) = solve_dirichlet(
        VorticityProfile::Constant { value: 0.0 },
        None,
        &walls,
        Some(&guess),
        NewtonOptions::with_tol(1e-11),
    )?;
    let grad = gradient(&q);
    let energy = grad.0.zip_with(&grad.1, |a, b| a * a + b * b)?.integral();
    if !(energy > 0.0) {
        return Err(Error::SingularLinearization("degenerate harmonic generator".into()));
    }
    let (flux, flux_upper) = wall_fluxes(&grad);
    Ok(HarmonicGenerator {
        q,
        normalization: 1.0 / energy.sqrt(),
        flux,
        flux_upper,
        grad,
    })
}

/// Upward-normal fluxes `∫ ∂_ν q ds` through the lower and upper walls:
/// `∇q·(J', 1)` on `y = −J`, `∇q·(−J', 1)` on `y = J`, per unit `dx`.
fn wall_fluxes(grad: &(ScalarField, ScalarField)) -> (f64, f64) {
    let g = grad.0.grid();
    let top = g.ny() - 1;
    let mut lo = 0.0;
    let mut hi = 0.0;
    for i in 0..g.nx() {
        let d = g.dh(i);
        lo += d * grad.0.get(i, 0) + grad.1.get(i, 0);
        hi += -d * grad.0.get(i, top) + grad.1.get(i, top);
    }
    (lo * g.dx(), hi * g.dx())
}

/// `∫ u·∇⊥q̂ dx` against the unit-norm generator.
pub fn homology_projection(
    u: &(ScalarField, ScalarField),
    generator: &HarmonicGenerator,
) -> Result<f64> {
    u.0.check_same_grid(&generator.q)?;
    u.1.check_same_grid(&generator.q)?;
    let (gx, gy) = &generator.grad;
    // ∇⊥q = (−q_y, q_x)
    let integrand = ScalarField::from_index_fn(generator.grid().clone(), |i, j| {
        -u.0.get(i, j) * gy.get(i, j) + u.1.get(i, j) * gx.get(i, j)
    });
    Ok(generator.normalization * integrand.integral())
}

/// `‖u‖_{L²}`.
pub fn l2_norm(u: &(ScalarField, ScalarField)) -> f64 {
    u.0.zip_with(&u.1, |a, b| a * a + b * b)
        .map(|f| f.integral().max(0.0).sqrt())
        .unwrap_or(f64::NAN)
}

/// Trivial homology test `|P u| < rel_tol·‖u‖`.
pub fn has_trivial_homology(
    u: &(ScalarField, ScalarField),
    generator: &HarmonicGenerator,
    rel_tol: f64,
) -> Result<bool> {
    let p = homology_projection(u, generator)?;
    Ok(p.abs() < rel_tol * l2_norm(u))
}

/// `|volume projection − gap·flux·normalization|`.
pub fn gap_projection_consistency(
    solution: &EquilibriumSolution,
    generator: &HarmonicGenerator,
) -> Result<f64> {
    let p = homology_projection(&solution.u, generator)?;
    Ok((p - solution.homology_gap * generator.flux * generator.normalization).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryProfile;
    use std::f64::consts::PI;

    fn grid(eps: f64, nx: usize, ny: usize) -> Arc<ChannelGrid> {
        Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), nx, ny).unwrap())
    }

    #[test]
    fn flat_generator_is_linear() {
        let g = grid(0.0, 32, 17);
        let h = harmonic_generator(&g).unwrap();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                assert!((h.q.get(i, j) - (g.eta(j) + 1.0) / 2.0).abs() < 1e-12);
            }
        }
        assert!((h.flux.abs() - PI).abs() < 1e-6);
        assert!((h.normalization - 1.0 / PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn curved_fluxes_balance() {
        let g = grid(0.1, 128, 65);
        let h = harmonic_generator(&g).unwrap();
        assert!(h.harmonic_residual() < 1e-9);
        assert!((h.flux - h.flux_upper).abs() < 1e-6, "{} {}", h.flux, h.flux_upper);
    }

    #[test]
    fn uniform_flow_projection_matches_direct_quadrature() {
        let g = grid(0.0, 32, 17);
        let h = harmonic_generator(&g).unwrap();
        let u = (
            ScalarField::from_index_fn(g.clone(), |_, _| 1.0),
            ScalarField::zeros(g.clone()),
        );
        let p = homology_projection(&u, &h).unwrap();
        // ∫ 1·(−1/2)/√π over area 4π
        assert!((p + 2.0 * PI.sqrt()).abs() < 1e-10, "{p}");
        let scaled = (u.0.scale(-3.5), u.1.scale(-3.5));
        let ps = homology_projection(&scaled, &h).unwrap();
        assert!((ps + 3.5 * p).abs() <= 1e-14 * p.abs());
        assert!(!has_trivial_homology(&u, &h, 1e-6).unwrap());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let h = harmonic_generator(&grid(0.0, 32, 17)).unwrap();
        let other = grid(0.0, 16, 17);
        let u = (ScalarField::zeros(other.clone()), ScalarField::zeros(other));
        assert!(homology_projection(&u, &h).is_err());
    }

    #[test]
    fn shifted_generator_has_same_field() {
        let g = grid(0.2, 32, 17);
        let a = harmonic_generator(&g).unwrap();
        let b = harmonic_generator_with(&g, 3.0).unwrap();
        let (ax, ay) = a.field();
        let (bx, by) = b.field();
        let d = ax.zip_with(&bx, |p, q| (p - q).abs()).unwrap().max_abs()
            + ay.zip_with(&by, |p, q| (p - q).abs()).unwrap().max_abs();
        assert!(d < 1e-11, "{d}");
    }
}
