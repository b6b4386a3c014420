//! Steady states `Δψ = F(ψ)` with `ψ = c₁` on the lower wall and `ψ = c₂` on
//! the upper wall, solved by damped Newton on the mapped grid.
//!
//! The streamfunction is fixed by `c₁ = 0`; the prescribed gap `c₂ − c₁`
//! controls the harmonic (homology) part of the velocity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryProfile, ChannelGrid, ScalarField};
use crate::operators::{perp_gradient, Laplacian};

/// Vorticity as a function of the streamfunction, `ω = F(ψ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VorticityProfile {
    Constant { value: f64 },
    /// `F(ψ) = aψ + b`.
    Affine { a: f64, b: f64 },
    /// `F(ψ) = κ·e^{−2ψ}` (Kelvin–Stuart).
    StuartExp { kappa: f64 },
}

impl VorticityProfile {
    pub fn eval(&self, psi: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Affine { a, b } => a * psi + b,
            Self::StuartExp { kappa } => kappa * (-2.0 * psi).exp(),
        }
    }

    pub fn derivative(&self, psi: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Affine { a, .. } => a,
            Self::StuartExp { kappa } => -2.0 * kappa * (-2.0 * psi).exp(),
        }
    }

    /// `F'` when it does not depend on ψ.
    pub fn constant_slope(&self) -> Option<f64> {
        match *self {
            Self::Constant { .. } => Some(0.0),
            Self::Affine { a, .. } => Some(a),
            Self::StuartExp { .. } => None,
        }
    }

    /// Arnold's condition `−λ₁ < F' < 0` or `F' > 0`. `None` when `F'`
    /// varies with ψ.
    pub fn arnold_admissible(&self, lambda1: f64) -> Option<bool> {
        self.constant_slope()
            .map(|s| (s > -lambda1 && s < 0.0) || s > 0.0)
    }

    /// `F' > −λ₁`, the slope hypothesis under which gap-zero states are
    /// reflection symmetric. Checked on `[lo, hi]` for ψ-dependent slopes.
    pub fn above_resonance(&self, lambda1: f64, lo: f64, hi: f64) -> bool {
        match self.constant_slope() {
            Some(s) => s > -lambda1,
            None => self.derivative(lo).min(self.derivative(hi)) > -lambda1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Convergence threshold on `‖Δψ − F(ψ)‖∞` over interior nodes.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without improving the best residual before giving up.
    pub stagnation_window: usize,
    /// Smallest backtracking step.
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            stagnation_window: 50,
            min_step: 1e-4,
        }
    }
}

impl NewtonOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub psi: ScalarField,
    pub u: (ScalarField, ScalarField),
    pub omega: ScalarField,
    pub boundary_values: (f64, f64),
    pub homology_gap: f64,
    pub pde_residual: f64,
    pub newton_iterations: usize,
    pub profile: VorticityProfile,
}

impl EquilibriumSolution {
    pub fn grid(&self) -> &Arc<ChannelGrid> {
        self.psi.grid()
    }

    /// Builds the derived fields for a streamfunction that already solves the problem.
    pub fn from_psi(
        psi: ScalarField,
        profile: VorticityProfile,
        pde_residual: f64,
        newton_iterations: usize,
    ) -> Self {
        let g = psi.grid().clone();
        let lap = Laplacian::new(g.clone());
        let omega = vorticity(&lap, &psi);
        let u = perp_gradient(&psi);
        let c1 = psi.get(0, 0);
        let c2 = psi.get(0, g.ny() - 1);
        Self {
            psi,
            u,
            omega,
            boundary_values: (c1, c2),
            homology_gap: c2 - c1,
            pde_residual,
            newton_iterations,
            profile,
        }
    }
}

/// `ω = Δψ` inside; wall values by quadratic extrapolation along η.
pub fn vorticity(lap: &Laplacian, psi: &ScalarField) -> ScalarField {
    let mut w = lap.apply(psi);
    let ny = psi.grid().ny();
    for i in 0..psi.grid().nx() {
        let lo = 3.0 * w.get(i, 1) - 3.0 * w.get(i, 2) + w.get(i, 3);
        let hi = 3.0 * w.get(i, ny - 2) - 3.0 * w.get(i, ny - 3) + w.get(i, ny - 4);
        w.set(i, 0, lo);
        w.set(i, ny - 1, hi);
    }
    w
}

/// Solves `Δψ = F(ψ)`, `ψ|Γ₁ = 0`, `ψ|Γ₂ = gap`.
pub fn solve_equilibrium(
    grid: &Arc<ChannelGrid>,
    profile: VorticityProfile,
    gap: f64,
    tol: f64,
) -> Result<EquilibriumSolution> {
    solve_equilibrium_from(grid, profile, gap, None, NewtonOptions::with_tol(tol))
}

/// [`solve_equilibrium`] with an explicit initial guess (boundary rows are overwritten).
pub fn solve_equilibrium_from(
    grid: &Arc<ChannelGrid>,
    profile: VorticityProfile,
    gap: f64,
    initial: Option<&ScalarField>,
    opts: NewtonOptions,
) -> Result<EquilibriumSolution> {
    let guess = match initial {
        Some(f) => {
            if (f.grid().nx(), f.grid().ny()) != (grid.nx(), grid.ny()) {
                return Err(Error::GridMismatch("initial guess has a different shape".into()));
            }
            ScalarField::from_values(grid.clone(), f.values().to_vec())?
        }
        None => {
            let shear = shear_profile(profile, grid.ny(), 0.0, gap)?;
            ScalarField::from_index_fn(grid.clone(), |_, j| shear[j])
        }
    };
    let mut walls = ScalarField::zeros(grid.clone());
    for i in 0..grid.nx() {
        walls.set(i, grid.ny() - 1, gap);
    }
    let (psi, residual, iterations) =
        solve_dirichlet(profile, None, &walls, Some(&guess), opts)?;
    Ok(EquilibriumSolution::from_psi(psi, profile, residual, iterations))
}

/// Newton solve of `Δψ = F(ψ) + s` with wall values taken from the boundary
/// rows of `walls`. Returns `(ψ, ‖residual‖∞, iterations)`.
pub fn solve_dirichlet(
    profile: VorticityProfile,
    source: Option<&ScalarField>,
    walls: &ScalarField,
    initial: Option<&ScalarField>,
    opts: NewtonOptions,
) -> Result<(ScalarField, f64, usize)> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {} must be positive", opts.tol)));
    }
    let g = walls.grid().clone();
    if let Some(s) = source {
        s.check_same_grid(walls)?;
    }
    let (nx, ny) = (g.nx(), g.ny());
    let lap = Laplacian::new(g.clone());
    let mut psi = match initial {
        Some(f) => {
            f.check_same_grid(walls)?;
            f.clone()
        }
        None => ScalarField::zeros(g.clone()),
    };
    for i in 0..nx {
        psi.set(i, 0, walls.get(i, 0));
        psi.set(i, ny - 1, walls.get(i, ny - 1));
    }

    let residual_of = |p: &ScalarField| -> Vec<f64> {
        let v = p.values();
        let mut r = Vec::with_capacity(lap.n_interior());
        for i in 0..nx {
            for j in 1..ny - 1 {
                let s = source.map_or(0.0, |s| s.get(i, j));
                r.push(lap.apply_at(v, i, j) - profile.eval(v[g.idx(i, j)]) - s);
            }
        }
        r
    };
    let inf_norm = |r: &[f64]| {
        r.iter()
            .fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
    };

    let mut res = residual_of(&psi);
    let mut rnorm = inf_norm(&res);
    if !rnorm.is_finite() {
        return Err(Error::NonFinite("initial residual".into()));
    }
    let fixed_factor = match profile.constant_slope() {
        Some(s) => Some(lap.factor_shifted(&lap.mass().iter().map(|m| m * s).collect::<Vec<_>>())?),
        None => None,
    };
    let mut best = rnorm;
    let mut since_best = 0;
    for it in 0..opts.max_iter {
        if rnorm < opts.tol {
            return Ok((psi, rnorm, it));
        }
        // (K + J F'(ψ)) δ = J N(ψ)
        let rhs: Vec<f64> = res
            .iter()
            .enumerate()
            .map(|(k, r)| r * g.jac(k / (ny - 2)))
            .collect();
        let delta = match &fixed_factor {
            Some(lu) => lu.solve(&rhs)?,
            None => {
                let shift: Vec<f64> = (0..nx)
                    .flat_map(|i| (1..ny - 1).map(move |j| (i, j)))
                    .map(|(i, j)| g.jac(i) * profile.derivative(psi.get(i, j)))
                    .collect();
                lap.factor_shifted(&shift)?.solve(&rhs)?
            }
        };
        let mut step = 1.0;
        loop {
            let mut trial = psi.clone();
            for i in 0..nx {
                for j in 1..ny - 1 {
                    let k = lap.interior_index(i, j);
                    trial.set(i, j, psi.get(i, j) + step * delta[k]);
                }
            }
            let tres = residual_of(&trial);
            let tnorm = inf_norm(&tres);
            if (tnorm.is_finite() && tnorm < rnorm) || step * 0.5 < opts.min_step {
                if tnorm.is_finite() {
                    psi = trial;
                    res = tres;
                    rnorm = tnorm;
                }
                break;
            }
            step *= 0.5;
        }
        if rnorm < best {
            best = rnorm;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opts.stagnation_window {
                return Err(Error::NonConvergence {
                    iterations: it + 1,
                    residual: rnorm,
                });
            }
        }
    }
    if rnorm < opts.tol {
        return Ok((psi, rnorm, opts.max_iter));
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: rnorm,
    })
}

/// Shear solution of the one-dimensional reduction `ψ'' = F(ψ)` on
/// `[−1, 1]`, `ψ(−1) = c1`, `ψ(1) = c2`, at `n` equispaced nodes; Newton with
/// a tridiagonal (Thomas) solve.
pub fn shear_profile(profile: VorticityProfile, n: usize, c1: f64, c2: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidArgument("need at least 3 nodes".into()));
    }
    let h = 2.0 / (n - 1) as f64;
    let h2 = h * h;
    let mut psi: Vec<f64> = (0..n)
        .map(|j| c1 + (c2 - c1) * j as f64 / (n - 1) as f64)
        .collect();
    let m = n - 2;
    for _ in 0..100 {
        let mut r = vec![0.0; m];
        let mut diag = vec![0.0; m];
        for k in 0..m {
            let j = k + 1;
            r[k] = (psi[j - 1] - 2.0 * psi[j] + psi[j + 1]) / h2 - profile.eval(psi[j]);
            diag[k] = -2.0 / h2 - profile.derivative(psi[j]);
        }
        let rn = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if rn.is_nan() {
            return Err(Error::NonFinite("shear profile iteration".into()));
        }
        if rn < 1e-11 {
            return Ok(psi);
        }
        let off = 1.0 / h2;
        let delta = thomas(&vec![off; m], &diag, &vec![off; m], &r.iter().map(|v| -v).collect::<Vec<_>>())?;
        for k in 0..m {
            psi[k + 1] += delta[k];
        }
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual: f64::NAN,
    })
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::SingularLinearization("tridiagonal pivot".into()));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for k in 1..n {
        beta = diag[k] - sub[k] * c[k - 1];
        if beta == 0.0 {
            return Err(Error::SingularLinearization("tridiagonal pivot".into()));
        }
        c[k] = sup[k] / beta;
        d[k] = (rhs[k] - sub[k] * d[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}

/// Solves on `shape.scaled(eps)` for each `eps` in turn, seeding each solve
/// with the previous streamfunction on the reference grid.
pub fn continuation_sweep(
    shape: &BoundaryProfile,
    eps_list: &[f64],
    profile: VorticityProfile,
    gap: f64,
    nx: usize,
    ny: usize,
    opts: NewtonOptions,
) -> Result<Vec<EquilibriumSolution>> {
    if eps_list.first().is_some_and(|&e| e != 0.0) {
        return Err(Error::InvalidArgument("eps list must start at 0".into()));
    }
    if eps_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("eps list must be increasing".into()));
    }
    let mut out: Vec<EquilibriumSolution> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let annotate = |e: Error| Error::AtEpsilon {
            eps,
            source: Box::new(e),
        };
        let grid = Arc::new(ChannelGrid::new(shape.scaled(eps), nx, ny).map_err(annotate)?);
        let seed = out.last().map(|s| s.psi.clone());
        let sol = solve_equilibrium_from(&grid, profile, gap, seed.as_ref(), opts)
            .map_err(annotate)?;
        out.push(sol);
    }
    Ok(out)
}

/// Closed-form reference flows on a flat grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedFlow {
    /// `ψ = −y²/2`, `u = (y, 0)`.
    Couette,
    /// `ψ = −y³/3 + y/3`, `u = (y² − 1/3, 0)`.
    Poiseuille,
    /// `ψ = −y²/2 + 1.01y`: shear plus a mean current, `|∇ψ| > 0.01`.
    Current,
}

impl NamedFlow {
    pub const ALL: [NamedFlow; 3] = [NamedFlow::Couette, NamedFlow::Poiseuille, NamedFlow::Current];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Couette => "couette",
            Self::Poiseuille => "poiseuille",
            Self::Current => "current",
        }
    }

    pub fn streamfunction(&self, y: f64) -> f64 {
        match self {
            Self::Couette => -0.5 * y * y,
            Self::Poiseuille => -y * y * y / 3.0 + y / 3.0,
            Self::Current => -0.5 * y * y + 1.01 * y,
        }
    }

    /// Vorticity profile reproducing the flow when one exists on the whole channel.
    pub fn vorticity(&self) -> Option<VorticityProfile> {
        match self {
            Self::Couette | Self::Current => Some(VorticityProfile::Constant { value: -1.0 }),
            // ω = −2y is not a Lipschitz function of ψ across the critical levels
            Self::Poiseuille => None,
        }
    }
}

pub fn builtin_named_flows(grid: &Arc<ChannelGrid>) -> Result<Vec<(String, ScalarField)>> {
    if !grid.profile().is_flat() {
        return Err(Error::InvalidArgument("named flows live on the flat channel".into()));
    }
    Ok(NamedFlow::ALL
        .iter()
        .map(|f| {
            (
                f.name().to_string(),
                ScalarField::from_physical_fn(grid.clone(), |_, y| f.streamfunction(y)),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(nx: usize, ny: usize) -> Arc<ChannelGrid> {
        Arc::new(ChannelGrid::new(BoundaryProfile::flat(), nx, ny).unwrap())
    }

    #[test]
    fn shear_profile_matches_parabola() {
        let p = shear_profile(VorticityProfile::Constant { value: 1.0 }, 65, 0.0, 0.0).unwrap();
        for (j, v) in p.iter().enumerate() {
            let y = -1.0 + 2.0 * j as f64 / 64.0;
            assert!((v - (y * y - 1.0) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_constant_vorticity_recovers_parabola() {
        let g = flat(32, 17);
        let s = solve_equilibrium(&g, VorticityProfile::Constant { value: 1.0 }, 0.0, 1e-10)
            .unwrap();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let y = g.eta(j);
                assert!((s.psi.get(i, j) - (y * y - 1.0) / 2.0).abs() < 1e-10);
                assert!((s.u.0.get(i, j) + y).abs() < 1e-9);
            }
        }
        assert_eq!(s.homology_gap, 0.0);
        assert!(s.pde_residual < 1e-10);
        assert!(s.omega.values().iter().all(|w| (w - 1.0).abs() < 1e-8));
    }

    #[test]
    fn arnold_affine_zero_solution() {
        let g = flat(32, 17);
        let s = solve_equilibrium(&g, VorticityProfile::Affine { a: -1.0, b: 0.0 }, 0.0, 1e-10)
            .unwrap();
        assert!(s.psi.max_abs() < 1e-12);
    }

    #[test]
    fn admissibility() {
        let lam = std::f64::consts::PI.powi(2) / 4.0;
        let af = |a| VorticityProfile::Affine { a, b: 0.0 };
        assert_eq!(af(-1.0).arnold_admissible(lam), Some(true));
        assert_eq!(af(-3.0).arnold_admissible(lam), Some(false));
        assert_eq!(af(2.0).arnold_admissible(lam), Some(true));
        assert_eq!(af(0.0).arnold_admissible(lam), Some(false));
        assert!(VorticityProfile::Constant { value: 1.0 }.above_resonance(lam, -1.0, 1.0));
        assert_eq!(VorticityProfile::StuartExp { kappa: 1.0 }.arnold_admissible(lam), None);
    }

    #[test]
    fn stuart_exp_newton_converges() {
        // Δψ = κe^{−2ψ} with zero walls; κ = 1 is past the fold of this
        // Bratu-type problem on a width-2 channel, κ = 0.2 is below it
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(0.1), 32, 17).unwrap());
        let s = solve_equilibrium(&g, VorticityProfile::StuartExp { kappa: 0.2 }, 0.0, 1e-10)
            .unwrap();
        assert!(s.pde_residual < 1e-10);
        assert!(s.newton_iterations > 1, "{} {}", s.newton_iterations, s.pde_residual);
    }

    #[test]
    fn named_flows_velocities() {
        let g = flat(32, 17);
        let flows = builtin_named_flows(&g).unwrap();
        let (_, pois) = &flows[1];
        let (u1, u2) = perp_gradient(pois);
        // second-order stencils on a cubic: centered error dη²/3, one-sided 2dη²/3
        let bound = 2.0 * g.deta().powi(2) / 3.0 + 1e-12;
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let y = g.eta(j);
                assert!((u1.get(i, j) - (y * y - 1.0 / 3.0)).abs() < bound);
                assert!(u2.get(i, j).abs() < 1e-12);
            }
        }
        let curved = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(0.1), 16, 17).unwrap());
        assert!(builtin_named_flows(&curved).is_err());
    }

    #[test]
    fn continuation_rejects_bad_lists_and_annotates() {
        let shape = BoundaryProfile::cosine(1.0);
        let p = VorticityProfile::Constant { value: 1.0 };
        let o = NewtonOptions::default();
        assert!(continuation_sweep(&shape, &[0.1], p, 0.0, 16, 17, o).is_err());
        assert!(continuation_sweep(&shape, &[0.0, 0.2, 0.1], p, 0.0, 16, 17, o).is_err());
        match continuation_sweep(&shape, &[0.0, 1.5], p, 0.0, 16, 17, o) {
            Err(Error::AtEpsilon { eps, .. }) => assert_eq!(eps, 1.5),
            other => panic!("{other:?}"),
        }
        let one = continuation_sweep(&shape, &[0.0], p, 0.0, 16, 17, o).unwrap();
        assert_eq!(one.len(), 1);
    }
}
