//! Numerical checks of a Carleman estimate on the upper half-channel.
//!
//! The weight is `φ = e^{λφ₀}` with `φ₀ = J(x) − y`, so `φ₀ ≥ 0` and `φ ≥ 1`
//! on `{0 ≤ y ≤ J}`, which is the `η ∈ [0, 1]` half of a [`ChannelGrid`].
//! All derivatives of `φ` are analytic; only the test function is
//! differentiated on the grid.
//!
//! With `A = Δ + m²|∇φ|²` and `B = −m(2∇φ·∇ + Δφ)` the conjugated operator is
//! `e^{mφ}Δ(e^{−mφ}w) = Aw + Bw`, and pointwise
//!
//! ```text
//! 2·Aw·Bw = div T + K
//! K = 4m Hessφ(∇w,∇w) + 4m³ Hessφ(∇φ,∇φ) w² − m Δ²φ w²
//! T = −2m ( 2∇w (∇φ·∇w) − ∇φ|∇w|² + Δφ w ∇w − ½ w² ∇Δφ + m²|∇φ|² ∇φ w² )
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ChannelGrid, ScalarField};
use crate::operators::{divergence, gradient, Laplacian};

const TWO_PI: f64 = 2.0 * PI;

/// Analytic derivatives of `φ` at one point.
#[derive(Debug, Clone, Copy)]
pub struct WeightJet {
    pub phi: f64,
    pub grad: (f64, f64),
    pub hess: [[f64; 2]; 2],
    pub lap: f64,
    pub grad_lap: (f64, f64),
    pub bilap: f64,
}

#[derive(Debug, Clone)]
pub struct CarlemanWeight {
    lambda: f64,
    phi0: ScalarField,
    phi: ScalarField,
    jets: Vec<WeightJet>,
}

impl CarlemanWeight {
    pub fn new(grid: &Arc<ChannelGrid>, lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 1")));
        }
        let phi0 = ScalarField::from_physical_fn(grid.clone(), |x, y| grid.jac_at(x) - y);
        let phi = phi0.map(|p| (lambda * p).exp());
        let mut jets = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                jets.push(weight_jet(grid, lambda, grid.x(i), phi.get(i, j)));
            }
        }
        Ok(Self {
            lambda,
            phi0,
            phi,
            jets,
        })
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        self.phi.grid()
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn phi0(&self) -> &ScalarField {
        &self.phi0
    }
    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }
    pub fn jet(&self, i: usize, j: usize) -> &WeightJet {
        &self.jets[self.grid().idx(i, j)]
    }

    /// `max φ` over the upper half.
    pub fn max_phi(&self) -> f64 {
        let g = self.grid();
        let mut m = f64::NEG_INFINITY;
        for i in 0..g.nx() {
            for j in g.center_row()..g.ny() {
                m = m.max(self.phi.get(i, j));
            }
        }
        m
    }
}

/// `φ = e^{λφ₀}` is given; `φ₀` depends on `y` only through `−y`.
fn weight_jet(grid: &ChannelGrid, lambda: f64, x: f64, phi: f64) -> WeightJet {
    let d = |k| grid.jac_derivative_at(x, k);
    let (h1, h2, h3, h4) = (d(1), d(2), d(3), d(4));
    let l = lambda;
    let grad = (l * h1 * phi, -l * phi);
    let hess = [
        [l * (h2 + l * h1 * h1) * phi, -l * l * h1 * phi],
        [-l * l * h1 * phi, l * l * phi],
    ];
    // Δφ = gφ with g depending on x only
    let g0 = l * (h2 + l * (1.0 + h1 * h1));
    let g1 = l * (h3 + 2.0 * l * h1 * h2);
    let g2 = l * (h4 + 2.0 * l * (h2 * h2 + h1 * h3));
    WeightJet {
        phi,
        grad,
        hess,
        lap: g0 * phi,
        grad_lap: ((g1 + g0 * l * h1) * phi, -l * g0 * phi),
        bilap: (g2 + 2.0 * l * h1 * g1 + g0 * g0) * phi,
    }
}

/// Test function supported strictly inside the upper half-channel.
#[derive(Debug, Clone)]
pub struct TestFunction {
    w: ScalarField,
}

/// Rows that must vanish: the lower half, and two cells inside each wall of the upper half.
fn collar_row(grid: &ChannelGrid, j: usize) -> bool {
    j <= grid.center_row() + 2 || j + 3 >= grid.ny()
}

impl TestFunction {
    pub fn new(w: ScalarField) -> Result<Self> {
        let g = w.grid().clone();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                if collar_row(&g, j) && w.get(i, j) != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "test function is nonzero at node ({i}, {j}) in the collar"
                    )));
                }
            }
        }
        Ok(Self { w })
    }

    pub fn zero(grid: Arc<ChannelGrid>) -> Self {
        Self {
            w: ScalarField::zeros(grid),
        }
    }

    /// `(1 − r²)⁸₊ · (1 + amp·sin(k x + phase))` with `r` the scaled distance
    /// from `center` in reference coordinates.
    pub fn bump(
        grid: Arc<ChannelGrid>,
        center: (f64, f64),
        radii: (f64, f64),
        modulation: (u32, f64, f64),
    ) -> Result<Self> {
        let (k, amp, phase) = modulation;
        let w = ScalarField::from_reference_fn(grid, |x, e| {
            let dx = {
                let d = x - center.0;
                d - TWO_PI * (d / TWO_PI).round()
            };
            let r2 = (dx / radii.0).powi(2) + ((e - center.1) / radii.1).powi(2);
            if r2 >= 1.0 {
                0.0
            } else {
                (1.0 - r2).powi(8) * (1.0 + amp * (k as f64 * x + phase).sin())
            }
        });
        Self::new(w)
    }

    /// Random bump centered mid-way up the half-channel.
    pub fn random(grid: Arc<ChannelGrid>, rng: &mut impl Rng) -> Result<Self> {
        let center = (rng.gen_range(0.0..TWO_PI), rng.gen_range(0.4..0.6));
        let radii = (rng.gen_range(0.6..1.5), rng.gen_range(0.15..0.25));
        let modulation = (
            rng.gen_range(1..=3),
            rng.gen_range(0.0..0.5),
            rng.gen_range(0.0..TWO_PI),
        );
        Self::bump(grid, center, radii, modulation)
    }

    pub fn field(&self) -> &ScalarField {
        &self.w
    }
}

fn check_m(m: f64) -> Result<()> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("m = {m} must be finite and >= 0")));
    }
    Ok(())
}

/// Nodes where the identities are checked: interior of the upper half.
fn upper_interior(grid: &ChannelGrid) -> impl Iterator<Item = (usize, usize)> + '_ {
    let c = grid.center_row();
    (0..grid.nx()).flat_map(move |i| (c + 1..grid.ny() - 1).map(move |j| (i, j)))
}

/// `(Aw, Bw)` on the upper-half interior, zero elsewhere.
pub fn split_parts(
    w: &ScalarField,
    weight: &CarlemanWeight,
    m: f64,
) -> Result<(ScalarField, ScalarField)> {
    check_m(m)?;
    w.check_same_grid(weight.phi())?;
    let g = w.grid().clone();
    let lap = Laplacian::new(g.clone()).apply(w);
    let (wx, wy) = gradient(w);
    let mut a = ScalarField::zeros(g.clone());
    let mut b = ScalarField::zeros(g.clone());
    for (i, j) in upper_interior(&g) {
        let jet = weight.jet(i, j);
        let wv = w.get(i, j);
        let gp2 = jet.grad.0 * jet.grad.0 + jet.grad.1 * jet.grad.1;
        let gpw = jet.grad.0 * wx.get(i, j) + jet.grad.1 * wy.get(i, j);
        a.set(i, j, lap.get(i, j) + m * m * gp2 * wv);
        b.set(i, j, -m * (2.0 * gpw + jet.lap * wv));
    }
    Ok((a, b))
}

/// `e^{mφ}Δ(e^{−mφ}w) = Aw + Bw` without forming `e^{±mφ}`.
pub fn conjugated_field(w: &ScalarField, weight: &CarlemanWeight, m: f64) -> Result<ScalarField> {
    let (a, b) = split_parts(w, weight, m)?;
    a.zip_with(&b, |p, q| p + q)
}

pub fn conjugated_operator(w: &TestFunction, weight: &CarlemanWeight, m: f64) -> Result<ScalarField> {
    conjugated_field(w.field(), weight, m)
}

/// Direct evaluation `e^{m(φ−1)} Δ_h (e^{−m(φ−1)} w)`; the shift by 1 cancels
/// and keeps the inner factor at most 1 on the upper half.
pub fn conjugated_direct(w: &ScalarField, weight: &CarlemanWeight, m: f64) -> Result<ScalarField> {
    check_m(m)?;
    w.check_same_grid(weight.phi())?;
    let g = w.grid().clone();
    let damped = ScalarField::from_index_fn(g.clone(), |i, j| {
        (-m * (weight.phi().get(i, j) - 1.0)).exp() * w.get(i, j)
    });
    let lap = Laplacian::new(g.clone()).apply(&damped);
    let mut out = ScalarField::zeros(g.clone());
    for (i, j) in upper_interior(&g) {
        out.set(i, j, (m * (weight.phi().get(i, j) - 1.0)).exp() * lap.get(i, j));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck {
    /// `max |2AwBw − div T − K|` over the upper-half interior.
    pub residual: f64,
    /// `max |2AwBw|`, for relative comparisons.
    pub scale: f64,
    /// `∮ T·n̂ ds` over the boundary of the upper half.
    pub boundary_flux: f64,
}

/// Vector field `T` of the divergence identity, on all nodes.
pub fn flux_field(
    w: &ScalarField,
    weight: &CarlemanWeight,
    m: f64,
) -> Result<(ScalarField, ScalarField)> {
    check_m(m)?;
    w.check_same_grid(weight.phi())?;
    let g = w.grid().clone();
    let (wx, wy) = gradient(w);
    let mut t1 = ScalarField::zeros(g.clone());
    let mut t2 = ScalarField::zeros(g.clone());
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            let jet = weight.jet(i, j);
            let (px, py) = jet.grad;
            let gw = (wx.get(i, j), wy.get(i, j));
            let wv = w.get(i, j);
            let pw = px * gw.0 + py * gw.1;
            let ww = gw.0 * gw.0 + gw.1 * gw.1;
            let pp = px * px + py * py;
            let comp = |gwk: f64, pk: f64, glk: f64| {
                -2.0 * m
                    * (2.0 * gwk * pw - pk * ww + jet.lap * wv * gwk - 0.5 * wv * wv * glk
                        + m * m * pp * pk * wv * wv)
            };
            t1.set(i, j, comp(gw.0, px, jet.grad_lap.0));
            t2.set(i, j, comp(gw.1, py, jet.grad_lap.1));
        }
    }
    Ok((t1, t2))
}

pub fn divergence_identity_residual(
    w: &TestFunction,
    weight: &CarlemanWeight,
    m: f64,
) -> Result<IdentityCheck> {
    let w = w.field();
    let (a, b) = split_parts(w, weight, m)?;
    let (t1, t2) = flux_field(w, weight, m)?;
    let div_t = divergence(&t1, &t2);
    let (wx, wy) = gradient(w);
    let g = w.grid().clone();
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, j) in upper_interior(&g) {
        let jet = weight.jet(i, j);
        let gw = (wx.get(i, j), wy.get(i, j));
        let wv = w.get(i, j);
        let quad = |v: (f64, f64)| {
            v.0 * (jet.hess[0][0] * v.0 + jet.hess[0][1] * v.1)
                + v.1 * (jet.hess[1][0] * v.0 + jet.hess[1][1] * v.1)
        };
        let k = 4.0 * m * quad(gw) + 4.0 * m.powi(3) * quad(jet.grad) * wv * wv
            - m * jet.bilap * wv * wv;
        let lhs = 2.0 * a.get(i, j) * b.get(i, j);
        residual = residual.max((lhs - div_t.get(i, j) - k).abs());
        scale = scale.max(lhs.abs());
    }
    // outward normals: (−J', 1) ds on the wall, (0, −1) ds on the centerline
    let (top, c) = (g.ny() - 1, g.center_row());
    let mut flux = 0.0;
    for i in 0..g.nx() {
        flux += -g.dh(i) * t1.get(i, top) + t2.get(i, top) - t2.get(i, c);
    }
    Ok(IdentityCheck {
        residual,
        scale,
        boundary_flux: flux * g.dx(),
    })
}

/// `∫` over the upper half (trapezoid in η, `J`-weighted).
pub fn upper_integral(f: &ScalarField) -> f64 {
    let g = f.grid();
    let (c, top) = (g.center_row(), g.ny() - 1);
    let mut s = 0.0;
    for i in 0..g.nx() {
        let mut col = 0.0;
        for j in c..=top {
            let wgt = if j == c || j == top { 0.5 } else { 1.0 };
            col += wgt * f.get(i, j);
        }
        s += col * g.jac(i);
    }
    s * g.dx() * g.deta()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub m: f64,
    /// `∫|e^{mφ}Δe^{−mφ}w|²`, times `e^{−2·log_shift}`.
    pub lhs: f64,
    /// `m²‖w‖²`, times `e^{−2·log_shift}`.
    pub rhs: f64,
    pub ratio: Option<f64>,
    /// Natural logs of the unshifted quantities.
    pub log_lhs: f64,
    pub log_rhs: f64,
    /// Exponent `s` with both sides evaluated as `e^{−2s}·(…)`.
    pub log_shift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlemanSweep {
    pub lambda: f64,
    pub rows: Vec<SweepRow>,
}

impl CarlemanSweep {
    /// Smallest observed ratio.
    pub fn c_obs(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.ratio)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.min(r))))
    }

    /// Least-squares slope of `log ratio` against `log m`.
    pub fn trend_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.ratio.map(|q| (r.m.ln(), q.ln())))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// Every ratio is at least `(1 − tol)` times its predecessor.
    pub fn non_decreasing_within(&self, tol: f64) -> bool {
        let r: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
        !r.is_empty() && r.windows(2).all(|p| p[1] >= (1.0 - tol) * p[0])
    }
}

fn check_m_list(m_list: &[f64]) -> Result<()> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("empty m list".into()));
    }
    for (k, &m) in m_list.iter().enumerate() {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("m = {m} must be >= 1")));
        }
        if k > 0 && m <= m_list[k - 1] {
            return Err(Error::InvalidArgument("m list must be increasing".into()));
        }
    }
    Ok(())
}

fn sweep_row(w: &ScalarField, weight: &CarlemanWeight, m: f64, log_shift: f64) -> Result<SweepRow> {
    let cw = conjugated_field(w, weight, m)?;
    let lhs = upper_integral(&cw.map(|v| v * v));
    let rhs = m * m * upper_integral(&w.map(|v| v * v));
    let ratio = (rhs > 0.0).then(|| lhs / rhs);
    Ok(SweepRow {
        m,
        lhs,
        rhs,
        ratio,
        log_lhs: lhs.ln() + 2.0 * log_shift,
        log_rhs: rhs.ln() + 2.0 * log_shift,
        log_shift,
    })
}

pub fn carleman_ratio_sweep(
    w: &TestFunction,
    weight: &CarlemanWeight,
    m_list: &[f64],
) -> Result<CarlemanSweep> {
    check_m_list(m_list)?;
    let rows = m_list
        .iter()
        .map(|&m| sweep_row(w.field(), weight, m, 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(CarlemanSweep {
        lambda: weight.lambda(),
        rows,
    })
}

/// Sweep for `w = e^{mφ}·base`, evaluated as `e^{m(φ − φ*)}·base` with `φ*`
/// the largest `φ` on the support of `base`, so that nothing overflows;
/// `log_shift = m·φ*` restores the true magnitudes.
pub fn carleman_ratio_sweep_weighted(
    base: &ScalarField,
    weight: &CarlemanWeight,
    m_list: &[f64],
) -> Result<CarlemanSweep> {
    check_m_list(m_list)?;
    base.check_same_grid(weight.phi())?;
    let g = base.grid();
    let mut pmax = f64::NEG_INFINITY;
    for i in 0..g.nx() {
        for j in g.center_row()..g.ny() {
            if base.get(i, j) != 0.0 {
                pmax = pmax.max(weight.phi().get(i, j));
            }
        }
    }
    if pmax == f64::NEG_INFINITY {
        pmax = 0.0;
    }
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let w = ScalarField::from_index_fn(base.grid().clone(), |i, j| {
            if j < base.grid().center_row() || base.get(i, j) == 0.0 {
                0.0
            } else {
                (m * (weight.phi().get(i, j) - pmax)).exp() * base.get(i, j)
            }
        });
        rows.push(sweep_row(&w, weight, m, m * pmax)?);
    }
    Ok(CarlemanSweep {
        lambda: weight.lambda(),
        rows,
    })
}

/// Smooth step: 0 for `z ≤ 1/2`, 1 for `z ≥ 1`, `C^∞` in between.
pub fn smooth_step(z: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let t = 2.0 * z - 1.0;
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        f(t) / (f(t) + f(1.0 - t))
    }
}

/// `χ_c = χ₀((φ − 1)/c)` on the upper half, zero on the lower half.
pub fn build_cutoff(weight: &CarlemanWeight, c: f64) -> Result<ScalarField> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c = {c} must be positive")));
    }
    let g = weight.grid().clone();
    let cr = g.center_row();
    Ok(ScalarField::from_index_fn(g, |i, j| {
        if j < cr {
            0.0
        } else {
            smooth_step((weight.phi().get(i, j) - 1.0) / c)
        }
    }))
}

/// `e^{−mc}`: what remains of the cutoff region after dividing by `e^{m(1+c)}`.
pub fn decay_factor(m: f64, c: f64) -> f64 {
    (-m * c).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(eps: f64, nx: usize, ny: usize) -> Arc<ChannelGrid> {
        Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), nx, ny).unwrap())
    }

    fn bump(g: &Arc<ChannelGrid>) -> TestFunction {
        TestFunction::bump(g.clone(), (2.0, 0.5), (1.2, 0.3), (2, 0.3, 0.4)).unwrap()
    }

    #[test]
    fn weight_derivatives_match_finite_differences() {
        let g = grid(0.15, 32, 17);
        let wt = CarlemanWeight::new(&g, 2.0).unwrap();
        let (l, x, y) = (2.0, 1.1, 0.4);
        let phi = |x: f64, y: f64| (l * (g.jac_at(x) - y)).exp();
        let jet = weight_jet(&g, l, x, phi(x, y));
        let h = 1e-4;
        let lap = |x: f64, y: f64| {
            (phi(x + h, y) + phi(x - h, y) + phi(x, y + h) + phi(x, y - h) - 4.0 * phi(x, y))
                / (h * h)
        };
        assert!((jet.grad.0 - (phi(x + h, y) - phi(x - h, y)) / (2.0 * h)).abs() < 1e-6);
        assert!((jet.lap - lap(x, y)).abs() < 1e-4 * jet.lap.abs());
        let hh = 1e-3;
        let gl_x = (weight_jet(&g, l, x + hh, phi(x + hh, y)).lap
            - weight_jet(&g, l, x - hh, phi(x - hh, y)).lap)
            / (2.0 * hh);
        assert!((jet.grad_lap.0 - gl_x).abs() < 1e-4 * jet.grad_lap.0.abs().max(1.0));
        let bl = {
            let lp = |x: f64, y: f64| weight_jet(&g, l, x, phi(x, y)).lap;
            (lp(x + hh, y) + lp(x - hh, y) + lp(x, y + hh) + lp(x, y - hh) - 4.0 * lp(x, y))
                / (hh * hh)
        };
        assert!((jet.bilap - bl).abs() < 1e-4 * jet.bilap.abs(), "{} {bl}", jet.bilap);
        // φ ≥ 1 on the upper half
        for i in 0..g.nx() {
            for j in g.center_row()..g.ny() {
                assert!(wt.phi().get(i, j) >= 1.0 - 1e-14);
            }
        }
    }

    #[test]
    fn zero_and_trivial_conjugation() {
        let g = grid(0.1, 64, 33);
        let wt = CarlemanWeight::new(&g, 2.0).unwrap();
        let z = TestFunction::zero(g.clone());
        assert_eq!(conjugated_operator(&z, &wt, 5.0).unwrap().max_abs(), 0.0);
        let chk = divergence_identity_residual(&z, &wt, 5.0).unwrap();
        assert_eq!(chk.residual, 0.0);
        let w = bump(&g);
        let c0 = conjugated_operator(&w, &wt, 0.0).unwrap();
        let lap = Laplacian::new(g.clone()).apply(w.field());
        for (i, j) in upper_interior(&g) {
            assert_eq!(c0.get(i, j), lap.get(i, j));
        }
    }

    #[test]
    fn collar_violation_is_rejected() {
        let g = grid(0.0, 64, 33);
        let w = ScalarField::from_reference_fn(g, |_, e| if e > 0.0 { 1.0 } else { 0.0 });
        assert!(TestFunction::new(w).is_err());
    }

    #[test]
    fn expanded_form_converges_to_direct() {
        let mut errs = Vec::new();
        for (nx, ny) in [(64, 33), (128, 65), (256, 129)] {
            let g = grid(0.0, nx, ny);
            let wt = CarlemanWeight::new(&g, 2.0).unwrap();
            let w = bump(&g);
            let a = conjugated_operator(&w, &wt, 5.0).unwrap();
            let b = conjugated_direct(w.field(), &wt, 5.0).unwrap();
            let d = a.zip_with(&b, |p, q| (p - q).abs()).unwrap().max_abs();
            errs.push(d / b.max_abs());
        }
        assert!(errs[2] < 0.05, "{errs:?}");
        let ratio = errs[1] / errs[2];
        assert!((3.0..5.5).contains(&ratio), "{errs:?}");
    }

    #[test]
    fn identity_residual_is_second_order() {
        let mut res = Vec::new();
        for (nx, ny) in [(64, 33), (128, 65), (256, 129)] {
            let g = grid(0.1, nx, ny);
            let wt = CarlemanWeight::new(&g, 2.0).unwrap();
            let chk = divergence_identity_residual(&bump(&g), &wt, 3.0).unwrap();
            assert!(chk.boundary_flux.abs() < 1e-12);
            res.push(chk.residual / chk.scale);
        }
        let r = res[1] / res[2];
        assert!((3.0..5.0).contains(&r), "{res:?}");
    }

    #[test]
    fn random_test_functions_are_valid() {
        let g = grid(0.1, 64, 33);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let w = TestFunction::random(g.clone(), &mut rng).unwrap();
            assert!(w.field().max_abs() > 0.1);
        }
    }

    #[test]
    fn sweep_ratio_grows() {
        let g = grid(0.1, 64, 33);
        let wt = CarlemanWeight::new(&g, 2.0).unwrap();
        let s = carleman_ratio_sweep(&bump(&g), &wt, &[4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!(s.c_obs().unwrap() > 0.0);
        assert!(s.non_decreasing_within(0.2));
        let z = carleman_ratio_sweep(&TestFunction::zero(g.clone()), &wt, &[4.0]).unwrap();
        assert!(z.rows[0].ratio.is_none());
        assert!(carleman_ratio_sweep(&bump(&g), &wt, &[8.0, 4.0]).is_err());
    }

    #[test]
    fn shifted_sweep_has_consistent_logs() {
        let g = grid(0.1, 64, 33);
        let wt = CarlemanWeight::new(&g, 2.0).unwrap();
        let base = bump(&g).field().clone();
        let s = carleman_ratio_sweep_weighted(&base, &wt, &[4.0, 40.0, 400.0]).unwrap();
        for r in &s.rows {
            let q = r.ratio.unwrap();
            assert!(q.is_finite() && q > 0.0);
            assert!(((r.log_lhs - r.log_rhs) - q.ln()).abs() < 1e-9);
        }
        assert!(s.rows[2].log_shift > 700.0);
    }

    #[test]
    fn cutoff_levels() {
        let g = grid(0.1, 64, 33);
        let wt = CarlemanWeight::new(&g, 2.0).unwrap();
        let c = 0.5;
        let chi = build_cutoff(&wt, c).unwrap();
        let mut ones = Vec::new();
        for cc in [1.0, 0.5, 0.25, 0.1] {
            let x = build_cutoff(&wt, cc).unwrap();
            ones.push(x.values().iter().filter(|v| **v == 1.0).count());
        }
        assert!(ones.windows(2).all(|p| p[1] >= p[0]), "{ones:?}");
        for i in 0..g.nx() {
            for j in g.center_row()..g.ny() {
                let p = wt.phi().get(i, j);
                if p >= 1.0 + c {
                    assert_eq!(chi.get(i, j), 1.0);
                }
                if p <= 1.0 + c / 2.0 {
                    assert_eq!(chi.get(i, j), 0.0);
                }
            }
        }
        assert!((decay_factor(10.0, 0.1) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
