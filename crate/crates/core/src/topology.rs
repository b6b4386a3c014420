//! Streamline topology of a streamfunction on the channel.
//!
//! Everything works on a bicubic Hermite interpolant `Ψ(x, η)` of the nodal
//! values in reference coordinates. Nodal derivatives are fourth order
//! (third order one-sided at the walls), which keeps `Ψ` conserved along
//! traced orbits to well below grid accuracy.
//!
//! In reference coordinates the streamline flow is `(ẋ, η̇) = (−Ψ_η, Ψ_x)/J`,
//! which conserves `Ψ` exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::contour::polygon_contains;
use crate::equilibrium::EquilibriumSolution;
use crate::geometry::{ChannelGrid, ScalarField};

const TWO_PI: f64 = 2.0 * PI;

/// Value, gradient and Hessian of the interpolant in reference coordinates.
#[derive(Debug, Clone, Copy)]
pub struct LocalJet {
    pub value: f64,
    pub gx: f64,
    pub ge: f64,
    pub hxx: f64,
    pub hxe: f64,
    pub hee: f64,
}

/// Bicubic Hermite interpolant of a nodal field.
#[derive(Debug, Clone)]
pub struct StreamInterpolant {
    grid: Arc<ChannelGrid>,
    f: Vec<f64>,
    fx: Vec<f64>,
    fe: Vec<f64>,
    fxe: Vec<f64>,
}

fn periodic_dx(v: &[f64], nx: usize, ny: usize, dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..nx {
        let m2 = (i + nx - 2) % nx;
        let m1 = (i + nx - 1) % nx;
        let p1 = (i + 1) % nx;
        let p2 = (i + 2) % nx;
        for j in 0..ny {
            out[i * ny + j] = (v[m2 * ny + j] - 8.0 * v[m1 * ny + j] + 8.0 * v[p1 * ny + j]
                - v[p2 * ny + j])
                / (12.0 * dx);
        }
    }
    out
}

fn wall_deta(v: &[f64], nx: usize, ny: usize, de: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let n = ny - 1;
    for i in 0..nx {
        let c = &v[i * ny..(i + 1) * ny];
        let o = &mut out[i * ny..(i + 1) * ny];
        o[0] = (-11.0 * c[0] + 18.0 * c[1] - 9.0 * c[2] + 2.0 * c[3]) / (6.0 * de);
        o[1] = (-2.0 * c[0] - 3.0 * c[1] + 6.0 * c[2] - c[3]) / (6.0 * de);
        for j in 2..n - 1 {
            o[j] = (c[j - 2] - 8.0 * c[j - 1] + 8.0 * c[j + 1] - c[j + 2]) / (12.0 * de);
        }
        o[n - 1] = (2.0 * c[n] + 3.0 * c[n - 1] - 6.0 * c[n - 2] + c[n - 3]) / (6.0 * de);
        o[n] = (11.0 * c[n] - 18.0 * c[n - 1] + 9.0 * c[n - 2] - 2.0 * c[n - 3]) / (6.0 * de);
    }
    out
}

#[inline]
fn hermite(t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2],
        [6.0 * t2 - 6.0 * t, 3.0 * t2 - 4.0 * t + 1.0, -6.0 * t2 + 6.0 * t, 3.0 * t2 - 2.0 * t],
        [12.0 * t - 6.0, 6.0 * t - 4.0, -12.0 * t + 6.0, 6.0 * t - 2.0],
    )
}

impl StreamInterpolant {
    pub fn new(psi: &ScalarField) -> Self {
        let grid = psi.grid().clone();
        let (nx, ny) = (grid.nx(), grid.ny());
        let f = psi.values().to_vec();
        let fx = periodic_dx(&f, nx, ny, grid.dx());
        let fe = wall_deta(&f, nx, ny, grid.deta());
        let fxe = periodic_dx(&fe, nx, ny, grid.dx());
        Self {
            grid,
            f,
            fx,
            fe,
            fxe,
        }
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }

    /// Nodal `(Ψ_x, Ψ_η)`.
    pub fn nodal_gradient(&self, i: usize, j: usize) -> (f64, f64) {
        let k = self.grid.idx(i, j);
        (self.fx[k], self.fe[k])
    }

    /// Physical velocity `∇⊥ψ` at a node.
    pub fn nodal_velocity(&self, i: usize, j: usize) -> (f64, f64) {
        let (gx, ge) = self.nodal_gradient(i, j);
        let jac = self.grid.jac(i);
        let eta = self.grid.eta(j);
        let py = ge / jac;
        let px = gx - eta * self.grid.dh(i) / jac * ge;
        (-py, px)
    }

    /// `max |u|` over the nodes.
    pub fn max_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.grid.nx() {
            for j in 0..self.grid.ny() {
                let (a, b) = self.nodal_velocity(i, j);
                m = m.max(a.hypot(b));
            }
        }
        m
    }

    /// Interpolant jet at a reference point; `x` is wrapped, `η` is extrapolated
    /// from the boundary cells if it lies outside `[−1, 1]`.
    pub fn jet(&self, x: f64, eta: f64) -> LocalJet {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (dx, de) = (g.dx(), g.deta());
        let xw = x.rem_euclid(TWO_PI);
        let i = ((xw / dx).floor() as usize).min(nx - 1);
        let t = (xw - g.x(i)) / dx;
        let j = (((eta + 1.0) / de).floor().max(0.0) as usize).min(ny - 2);
        let s = (eta - g.eta(j)) / de;
        let (ht, dht, ddht) = hermite(t);
        let (hs, dhs, ddhs) = hermite(s);
        let ip = (i + 1) % nx;
        let mut out = LocalJet {
            value: 0.0,
            gx: 0.0,
            ge: 0.0,
            hxx: 0.0,
            hxe: 0.0,
            hee: 0.0,
        };
        for (a, ii) in [(0usize, i), (1, ip)] {
            for (b, jj) in [(0usize, j), (1, j + 1)] {
                let k = ii * ny + jj;
                // coefficients of the four Hermite products for this corner
                let c = [
                    self.f[k],
                    dx * self.fx[k],
                    de * self.fe[k],
                    dx * de * self.fxe[k],
                ];
                let (ta, tb) = (2 * a, 1 + 2 * a);
                let (sa, sb) = (2 * b, 1 + 2 * b);
                let terms = [(ta, sa, c[0]), (tb, sa, c[1]), (ta, sb, c[2]), (tb, sb, c[3])];
                for (ti, si, cv) in terms {
                    out.value += cv * ht[ti] * hs[si];
                    out.gx += cv * dht[ti] * hs[si];
                    out.ge += cv * ht[ti] * dhs[si];
                    out.hxx += cv * ddht[ti] * hs[si];
                    out.hxe += cv * dht[ti] * dhs[si];
                    out.hee += cv * ht[ti] * ddhs[si];
                }
            }
        }
        out.gx /= dx;
        out.ge /= de;
        out.hxx /= dx * dx;
        out.hxe /= dx * de;
        out.hee /= de * de;
        out
    }

    pub fn value(&self, x: f64, eta: f64) -> f64 {
        self.jet(x, eta).value
    }

    /// Physical `(ψ_x, ψ_y)` at a reference point.
    pub fn physical_gradient(&self, x: f64, eta: f64) -> (f64, f64) {
        let jet = self.jet(x, eta);
        let jac = self.grid.jac_at(x);
        let dj = self.grid.jac_derivative_at(x, 1);
        (jet.gx - eta * dj / jac * jet.ge, jet.ge / jac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Elliptic,
    Hyperbolic,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    /// Physical position, `x ∈ [0, 2π)`.
    pub position: (f64, f64),
    pub kind: CriticalKind,
    pub psi: f64,
    /// Determinant of the physical Hessian.
    pub hessian_det: f64,
    /// `|∇ψ|` at the returned position.
    pub gradient_norm: f64,
    /// `false` when Newton refinement did not reach the tolerance.
    pub converged: bool,
}

/// Row of degenerate critical points spanning the period (shear flows).
#[derive(Debug, Clone, Serialize)]
pub struct CriticalLine {
    pub eta: f64,
    pub psi: f64,
    /// Fraction of x-columns in which a candidate cell was found.
    pub coverage: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
    pub lines: Vec<CriticalLine>,
}

impl CriticalSet {
    pub fn count(&self, kind: CriticalKind) -> usize {
        self.points.iter().filter(|p| p.kind == kind).count()
    }
}

const NEWTON_TOL: f64 = 1e-10;

pub fn find_critical_points(psi: &ScalarField) -> CriticalSet {
    find_critical_points_in(&StreamInterpolant::new(psi))
}

pub fn find_critical_points_in(interp: &StreamInterpolant) -> CriticalSet {
    let g = interp.grid().clone();
    let (nx, ny) = (g.nx(), g.ny());
    let mut gmax: f64 = 0.0;
    for k in 0..interp.f.len() {
        gmax = gmax.max(interp.fx[k].abs()).max(interp.fe[k].abs());
    }
    if gmax == 0.0 {
        return CriticalSet::default();
    }
    let zero_tol = 1e-9 * gmax;
    let vanishes = |vals: [f64; 4]| {
        let pos = vals.iter().any(|v| *v > zero_tol);
        let neg = vals.iter().any(|v| *v < -zero_tol);
        let zero = vals.iter().any(|v| v.abs() <= zero_tol);
        zero || (pos && neg)
    };
    let mut candidates = Vec::new();
    for i in 0..nx {
        let ip = (i + 1) % nx;
        for j in 0..ny - 1 {
            let corners = [(i, j), (ip, j), (ip, j + 1), (i, j + 1)];
            let gx = corners.map(|(a, b)| interp.fx[g.idx(a, b)]);
            let ge = corners.map(|(a, b)| interp.fe[g.idx(a, b)]);
            if vanishes(gx) && vanishes(ge) {
                candidates.push((i, j));
            }
        }
    }

    // rows where candidates cover most of the period are critical lines
    let mut line_rows = vec![false; ny - 1];
    for (j, row) in line_rows.iter_mut().enumerate() {
        let cover = candidates.iter().filter(|c| c.1 == j).count();
        *row = 2 * cover > nx;
    }
    let mut set = CriticalSet::default();
    let mut j = 0;
    while j < ny - 1 {
        if !line_rows[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < ny - 1 && line_rows[j] {
            j += 1;
        }
        set.lines.push(critical_line(interp, start, j, &candidates));
    }

    let mut points: Vec<CriticalPoint> = Vec::new();
    for &(i, j) in candidates.iter().filter(|c| !line_rows[c.1]) {
        let x0 = g.x(i) + 0.5 * g.dx();
        let e0 = g.eta(j) + 0.5 * g.deta();
        let Some(cp) = refine(interp, x0, e0) else {
            continue;
        };
        let dup = points.iter().any(|p| {
            let dxp = periodic_delta(p.position.0 - cp.position.0).abs();
            let (_, ep) = g.to_reference(p.position.0, p.position.1);
            let (_, ec) = g.to_reference(cp.position.0, cp.position.1);
            dxp < g.dx() && (ep - ec).abs() < g.deta()
        });
        if !dup {
            points.push(cp);
        }
    }
    points.sort_by(|a, b| {
        a.position
            .0
            .total_cmp(&b.position.0)
            .then(a.position.1.total_cmp(&b.position.1))
    });
    set.points = points;
    set
}

fn critical_line(
    interp: &StreamInterpolant,
    j0: usize,
    j1: usize,
    candidates: &[(usize, usize)],
) -> CriticalLine {
    let g = interp.grid();
    let nx = g.nx();
    // column-averaged Ψ_η, root located by linear interpolation inside the band
    let avg = |j: usize| (0..nx).map(|i| interp.fe[g.idx(i, j)]).sum::<f64>() / nx as f64;
    let mut eta = 0.5 * (g.eta(j0) + g.eta(j1));
    for j in j0..j1 {
        let (a, b) = (avg(j), avg(j + 1));
        if a == 0.0 {
            eta = g.eta(j);
            break;
        }
        if a * b <= 0.0 && a != b {
            eta = g.eta(j) + a / (a - b) * g.deta();
            break;
        }
    }
    let psi = (0..nx).map(|i| interp.value(g.x(i), eta)).sum::<f64>() / nx as f64;
    let mut cols: Vec<usize> = candidates
        .iter()
        .filter(|c| c.1 >= j0 && c.1 < j1)
        .map(|c| c.0)
        .collect();
    cols.sort_unstable();
    cols.dedup();
    CriticalLine {
        eta,
        psi,
        coverage: cols.len() as f64 / nx as f64,
    }
}

fn periodic_delta(d: f64) -> f64 {
    d - TWO_PI * (d / TWO_PI).round()
}

fn refine(interp: &StreamInterpolant, x0: f64, e0: f64) -> Option<CriticalPoint> {
    let g = interp.grid();
    let (mut x, mut e) = (x0, e0);
    let mut converged = false;
    for _ in 0..50 {
        let jet = interp.jet(x, e);
        let scale = 1.0 + jet.value.abs();
        if jet.gx.hypot(jet.ge) < NEWTON_TOL * scale {
            converged = true;
            break;
        }
        let det = jet.hxx * jet.hee - jet.hxe * jet.hxe;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let mut sx = -(jet.hee * jet.gx - jet.hxe * jet.ge) / det;
        let mut se = -(-jet.hxe * jet.gx + jet.hxx * jet.ge) / det;
        // at most one cell per step
        let shrink = (sx.abs() / g.dx()).max(se.abs() / g.deta()).max(1.0);
        sx /= shrink;
        se /= shrink;
        x += sx;
        e += se;
        if !(-1.0..=1.0).contains(&e) {
            return None;
        }
    }
    if (x0 - x).abs() > 3.0 * g.dx() || (e0 - e).abs() > 3.0 * g.deta() {
        // wandered off to another cell's point; that cell reports it
        return None;
    }
    let x = x.rem_euclid(TWO_PI);
    let jet = interp.jet(x, e);
    let jac = g.jac_at(x);
    let det_ref = jet.hxx * jet.hee - jet.hxe * jet.hxe;
    let det = det_ref / (jac * jac);
    let hscale = jet.hxx.abs() + jet.hee.abs() + 2.0 * jet.hxe.abs();
    let kind = if !converged || det_ref.abs() <= 1e-6 * hscale * hscale {
        CriticalKind::Degenerate
    } else if det > 0.0 {
        CriticalKind::Elliptic
    } else {
        CriticalKind::Hyperbolic
    };
    let (px, py) = interp.physical_gradient(x, e);
    Some(CriticalPoint {
        position: g.to_physical(x, e),
        kind,
        psi: jet.value,
        hessian_det: det,
        gradient_norm: px.hypot(py),
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceError {
    #[error("seed speed {speed:e} below the stagnation tolerance")]
    SeedStagnant { speed: f64 },
    #[error("orbit did not close within {steps} steps")]
    MaxStepsExceeded { steps: usize },
    #[error("speed fell to {speed:e} at ({x}, {y})")]
    StagnationReached { x: f64, y: f64, speed: f64 },
    #[error("orbit left the channel at ({x}, {y})")]
    LeftDomain { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    /// Physical arc-length step; default `min_spacing / 4`.
    pub step: Option<f64>,
    pub max_steps: usize,
    /// Default `2·step`.
    pub closure_tol: Option<f64>,
    /// Absolute speed threshold; default `1e−5·max|u|`.
    pub stagnation_tol: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            step: None,
            max_steps: 100_000,
            closure_tol: None,
            stagnation_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Orbit {
    /// Physical seed.
    pub seed: (f64, f64),
    /// Physical points, x unwrapped; the last point closes the orbit.
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
    pub x_winding: i64,
    /// `ψ` at the seed.
    pub level: f64,
    /// `max |ψ(p) − ψ(seed)|` over the polyline.
    pub max_drift: f64,
}

impl Orbit {
    pub fn contractible(&self) -> bool {
        self.closed && self.x_winding == 0
    }

    pub fn wrapping(&self) -> bool {
        self.closed && self.x_winding != 0
    }
}

/// Streamline integrator bound to one streamfunction.
#[derive(Debug, Clone)]
pub struct StreamTracer {
    interp: StreamInterpolant,
    step: f64,
    max_steps: usize,
    closure_tol: f64,
    stagnation_tol: f64,
    max_speed: f64,
}

impl StreamTracer {
    pub fn new(psi: &ScalarField, opts: TraceOptions) -> Self {
        Self::from_interpolant(StreamInterpolant::new(psi), opts)
    }

    pub fn from_interpolant(interp: StreamInterpolant, opts: TraceOptions) -> Self {
        let step = opts.step.unwrap_or(interp.grid().min_spacing() / 4.0);
        let max_speed = interp.max_speed();
        Self {
            step,
            max_steps: opts.max_steps,
            closure_tol: opts.closure_tol.unwrap_or(2.0 * step),
            stagnation_tol: opts.stagnation_tol.unwrap_or(1e-5 * max_speed),
            max_speed,
            interp,
        }
    }

    pub fn interpolant(&self) -> &StreamInterpolant {
        &self.interp
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn closure_tol(&self) -> f64 {
        self.closure_tol
    }
    pub fn stagnation_tol(&self) -> f64 {
        self.stagnation_tol
    }
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Physical speed at a reference point.
    pub fn speed(&self, x: f64, eta: f64) -> f64 {
        let (a, b) = self.interp.physical_gradient(x, eta);
        a.hypot(b)
    }

    /// Unit-speed direction in reference coordinates, or the speed if stagnant.
    fn direction(&self, x: f64, eta: f64) -> Result<(f64, f64), f64> {
        let jet = self.interp.jet(x, eta);
        let g = self.interp.grid();
        let jac = g.jac_at(x);
        let dj = g.jac_derivative_at(x, 1);
        let px = jet.gx - eta * dj / jac * jet.ge;
        let py = jet.ge / jac;
        let speed = px.hypot(py);
        if !(speed > self.stagnation_tol) {
            return Err(speed);
        }
        Ok((-jet.ge / (jac * speed), jet.gx / (jac * speed)))
    }

    fn phys_dist(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        periodic_delta(a.0 - b.0).hypot(a.1 - b.1)
    }

    /// Traces the streamline through a physical seed until it closes.
    pub fn trace(&self, seed: (f64, f64)) -> Result<Orbit, TraceError> {
        let g = self.interp.grid().clone();
        let (sx, se) = g.to_reference(seed.0, seed.1);
        if !(-1.0..=1.0).contains(&se) {
            return Err(TraceError::LeftDomain {
                x: seed.0,
                y: seed.1,
            });
        }
        if let Err(speed) = self.direction(sx, se) {
            return Err(TraceError::SeedStagnant { speed });
        }
        let level = self.interp.value(sx, se);
        let h = self.step;
        let (mut x, mut e) = (sx, se);
        let mut points = vec![g.to_physical(sx, se)];
        let mut max_drift: f64 = 0.0;
        let mut left_ball = false;
        let stagnant = |x: f64, e: f64, speed: f64| {
            let (px, py) = g.to_physical(x, e);
            TraceError::StagnationReached {
                x: px,
                y: py,
                speed,
            }
        };
        for _ in 0..self.max_steps {
            let k1 = self.direction(x, e).map_err(|s| stagnant(x, e, s))?;
            let (x2, e2) = (x + 0.5 * h * k1.0, e + 0.5 * h * k1.1);
            let k2 = self.direction(x2, e2).map_err(|s| stagnant(x2, e2, s))?;
            let (x3, e3) = (x + 0.5 * h * k2.0, e + 0.5 * h * k2.1);
            let k3 = self.direction(x3, e3).map_err(|s| stagnant(x3, e3, s))?;
            let (x4, e4) = (x + h * k3.0, e + h * k3.1);
            let k4 = self.direction(x4, e4).map_err(|s| stagnant(x4, e4, s))?;
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            e += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            let p = g.to_physical(x, e);
            if !(-1.0..=1.0).contains(&e) {
                return Err(TraceError::LeftDomain { x: p.0, y: p.1 });
            }
            max_drift = max_drift.max((self.interp.value(x, e) - level).abs());
            points.push(p);
            let d = self.phys_dist(p, seed);
            if !left_ball {
                left_ball = d > self.closure_tol;
            } else if d <= self.closure_tol {
                let x_winding = ((x - sx) / TWO_PI).round() as i64;
                points.push((seed.0 + TWO_PI * x_winding as f64, seed.1));
                return Ok(Orbit {
                    seed,
                    points,
                    closed: true,
                    x_winding,
                    level,
                    max_drift,
                });
            }
        }
        Err(TraceError::MaxStepsExceeded {
            steps: self.max_steps,
        })
    }
}

/// Traces one orbit with default tolerances.
pub fn trace_orbit(
    psi: &ScalarField,
    seed: (f64, f64),
    step: f64,
    max_steps: usize,
) -> Result<Orbit, TraceError> {
    let opts = TraceOptions {
        step: Some(step),
        max_steps,
        ..TraceOptions::default()
    };
    StreamTracer::new(psi, opts).trace(seed)
}

/// `max |ψ(i, j) − ψ(i, ny−1−j)|` over all nodes.
pub fn symmetry_residual(psi: &ScalarField) -> f64 {
    let g = psi.grid();
    let ny = g.ny();
    let mut r: f64 = 0.0;
    for i in 0..g.nx() {
        for j in 0..ny / 2 {
            r = r.max((psi.get(i, j) - psi.get(i, ny - 1 - j)).abs());
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum SampleClass {
    /// `|u₂| ≤ stagnation_tol`: not tested.
    Stagnant,
    Contractible,
    Wrapping { x_winding: i64 },
    /// Trace ran into a stagnation point (separatrix-adjacent).
    Separatrix,
    /// Trace failed for another reason.
    Failed { error: TraceError },
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterlineSample {
    pub point: (f64, f64),
    pub u2_abs: f64,
    pub class: SampleClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterlineReport {
    pub samples: Vec<CenterlineSample>,
    pub symmetry_residual: f64,
    pub stagnation_tol: f64,
}

impl CenterlineReport {
    fn count(&self, f: impl Fn(&SampleClass) -> bool) -> usize {
        self.samples.iter().filter(|s| f(&s.class)).count()
    }
    pub fn tested(&self) -> usize {
        self.count(|c| *c != SampleClass::Stagnant)
    }
    pub fn contractible(&self) -> usize {
        self.count(|c| *c == SampleClass::Contractible)
    }
    pub fn wrapping(&self) -> usize {
        self.count(|c| matches!(c, SampleClass::Wrapping { .. }))
    }
    pub fn separatrix(&self) -> usize {
        self.count(|c| *c == SampleClass::Separatrix)
    }
    /// Contractible share of tested samples, separatrix cases excluded.
    pub fn contractible_fraction(&self) -> Option<f64> {
        let denom = self.tested() - self.separatrix();
        (denom > 0).then(|| self.contractible() as f64 / denom as f64)
    }
}

fn classify_trace(r: &Result<Orbit, TraceError>) -> SampleClass {
    match r {
        Ok(o) if o.contractible() => SampleClass::Contractible,
        Ok(o) => SampleClass::Wrapping {
            x_winding: o.x_winding,
        },
        Err(TraceError::StagnationReached { .. }) => SampleClass::Separatrix,
        Err(e) => SampleClass::Failed { error: *e },
    }
}

pub fn centerline_island_test(solution: &EquilibriumSolution, n_samples: usize) -> CenterlineReport {
    let tracer = StreamTracer::new(&solution.psi, TraceOptions::default());
    centerline_with(&tracer, &solution.psi, n_samples)
}

fn centerline_with(tracer: &StreamTracer, psi: &ScalarField, n: usize) -> CenterlineReport {
    let tol = tracer.stagnation_tol();
    let samples = (0..n)
        .into_par_iter()
        .map(|k| {
            let x = TWO_PI * (k as f64 + 0.5) / n as f64;
            let (u2, _) = tracer.interpolant().physical_gradient(x, 0.0);
            let class = if u2.abs() <= tol {
                SampleClass::Stagnant
            } else {
                classify_trace(&tracer.trace((x, 0.0)))
            };
            CenterlineSample {
                point: (x, 0.0),
                u2_abs: u2.abs(),
                class,
            }
        })
        .collect();
    CenterlineReport {
        samples,
        symmetry_residual: symmetry_residual(psi),
        stagnation_tol: tol,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TopologyOptions {
    pub trace: TraceOptions,
    pub centerline_samples: usize,
    /// Regular seed lattice `(columns, rows)` in reference coordinates.
    pub seed_lattice: (usize, usize),
}

impl Default for TopologyOptions {
    fn default() -> Self {
        Self {
            trace: TraceOptions::default(),
            centerline_samples: 32,
            seed_lattice: (16, 8),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Island {
    pub center: CriticalPoint,
    /// A traced contractible orbit enclosing the center.
    pub orbit: Orbit,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub seed: (f64, f64),
    pub class: SampleClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopologyReport {
    pub critical: CriticalSet,
    pub islands: Vec<Island>,
    pub wrapping_orbits: usize,
    pub contractible_orbits: usize,
    pub failed_traces: usize,
    pub symmetry_residual: f64,
    pub centerline: CenterlineReport,
    /// Every seed with its classification.
    pub traces: Vec<TraceRecord>,
    /// Successfully traced orbits.
    #[serde(skip)]
    pub orbits: Vec<Orbit>,
    pub max_speed: f64,
    pub min_speed: f64,
}

impl TopologyReport {
    pub fn island_count(&self) -> usize {
        self.islands.len()
    }
    /// `#elliptic − #hyperbolic` among isolated critical points.
    pub fn index_balance(&self) -> i64 {
        self.critical.count(CriticalKind::Elliptic) as i64
            - self.critical.count(CriticalKind::Hyperbolic) as i64
    }
}

pub fn classify_flow(solution: &EquilibriumSolution) -> TopologyReport {
    classify_field(&solution.psi, TopologyOptions::default())
}

/// Topology of an arbitrary streamfunction on its grid.
pub fn classify_field(psi: &ScalarField, opts: TopologyOptions) -> TopologyReport {
    let tracer = StreamTracer::new(psi, opts.trace);
    let g = psi.grid().clone();
    let critical = find_critical_points_in(tracer.interpolant());
    let centerline = centerline_with(&tracer, psi, opts.centerline_samples);

    let mut seeds: Vec<(f64, f64)> = Vec::new();
    let (cols, rows) = opts.seed_lattice;
    for a in 0..cols {
        let x = TWO_PI * (a as f64 + 0.5) / cols as f64;
        for b in 0..rows {
            let eta = -1.0 + 2.0 * (b as f64 + 0.5) / rows as f64;
            seeds.push(g.to_physical(x, eta));
        }
    }
    // seeds stepping away from each elliptic point along both axes
    for cp in critical.points.iter().filter(|p| p.kind == CriticalKind::Elliptic) {
        let (x, e) = g.to_reference(cp.position.0, cp.position.1);
        for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            for sgn in [-1.0, 1.0] {
                let eta = e + sgn * k * g.deta();
                if eta.abs() < 1.0 {
                    seeds.push(g.to_physical(x, eta));
                }
                seeds.push(g.to_physical(x + sgn * k * g.dx(), e));
            }
        }
    }
    let tol = tracer.stagnation_tol();
    let results: Vec<(f64, f64, Option<Result<Orbit, TraceError>>)> = seeds
        .par_iter()
        .map(|&s| {
            let (x, e) = g.to_reference(s.0, s.1);
            if tracer.speed(x, e) <= tol {
                (s.0, s.1, None)
            } else {
                (s.0, s.1, Some(tracer.trace(s)))
            }
        })
        .collect();

    let mut traces = Vec::new();
    let mut orbits = Vec::new();
    let mut failed = 0;
    for (x, y, r) in results {
        let class = match &r {
            None => SampleClass::Stagnant,
            Some(r) => classify_trace(r),
        };
        if matches!(class, SampleClass::Failed { .. } | SampleClass::Separatrix) {
            failed += 1;
        }
        traces.push(TraceRecord { seed: (x, y), class });
        if let Some(Ok(o)) = r {
            orbits.push(o);
        }
    }

    let mut islands = Vec::new();
    for cp in critical.points.iter().filter(|p| p.kind == CriticalKind::Elliptic) {
        let enclosing = orbits
            .iter()
            .filter(|o| o.contractible())
            .find(|o| encloses(o, cp.position));
        if let Some(o) = enclosing {
            islands.push(Island {
                center: cp.clone(),
                orbit: o.clone(),
            });
        }
    }
    let wrapping_orbits = orbits.iter().filter(|o| o.wrapping()).count();
    let contractible_orbits = orbits.iter().filter(|o| o.contractible()).count();
    let mut min_speed = f64::INFINITY;
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            let (a, b) = tracer.interpolant().nodal_velocity(i, j);
            min_speed = min_speed.min(a.hypot(b));
        }
    }
    TopologyReport {
        critical,
        islands,
        wrapping_orbits,
        contractible_orbits,
        failed_traces: failed,
        symmetry_residual: symmetry_residual(psi),
        centerline,
        traces,
        orbits,
        max_speed: tracer.max_speed(),
        min_speed,
    }
}

/// Point-in-orbit test with the point shifted to the orbit's period copy.
pub fn encloses(orbit: &Orbit, p: (f64, f64)) -> bool {
    if !orbit.contractible() || orbit.points.is_empty() {
        return false;
    }
    let cx = orbit.points.iter().map(|q| q.0).sum::<f64>() / orbit.points.len() as f64;
    let px = p.0 + TWO_PI * ((cx - p.0) / TWO_PI).round();
    polygon_contains(&orbit.points, (px, p.1))
}
