//! Channel geometry: the wall profile `h`, the stretched grid on the
//! reference rectangle and nodal scalar fields.
//!
//! The physical channel is `{(x, y) : x ∈ T, -(a + h(x)) ≤ y ≤ a + h(x)}` with
//! base half-width `a` (1 for every channel experiment). It is the image of
//! the reference rectangle `T × [-1, 1]` under `(x, η) ↦ (x, η·(a + h(x)))`.
//! The centerline `η = 0` maps onto `y = 0` and the map commutes with the
//! reflection `η ↦ -η`, so reflection symmetry is an exact array operation.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Wall profile `h(x) = Σ a_k cos(kx) + Σ b_k sin(kx)` on the 2π-periodic circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BoundaryProfile {
    /// `(k, a_k)` pairs.
    #[serde(default)]
    pub cos: Vec<(u32, f64)>,
    /// `(k, b_k)` pairs.
    #[serde(default)]
    pub sin: Vec<(u32, f64)>,
}

impl BoundaryProfile {
    pub fn flat() -> Self {
        Self::default()
    }

    /// `h(x) = eps·cos(x)`, the default curved channel.
    pub fn cosine(eps: f64) -> Self {
        Self {
            cos: vec![(1, eps)],
            sin: Vec::new(),
        }
    }

    pub fn new(cos: Vec<(u32, f64)>, sin: Vec<(u32, f64)>) -> Self {
        Self { cos, sin }
    }

    /// Multiplies every coefficient by `eps`.
    pub fn scaled(&self, eps: f64) -> Self {
        Self {
            cos: self.cos.iter().map(|&(k, a)| (k, eps * a)).collect(),
            sin: self.sin.iter().map(|&(k, b)| (k, eps * b)).collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `order`-th derivative of the truncated series, differentiated term by term.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        // d^n/dx^n cos(kx) = k^n cos(kx + nπ/2), same shift for sin.
        let shift = order as f64 * PI / 2.0;
        let mut acc = 0.0;
        for &(k, a) in &self.cos {
            let kf = k as f64;
            if order > 0 && k == 0 {
                continue;
            }
            acc += a * kf.powi(order as i32) * (kf * x + shift).cos();
        }
        for &(k, b) in &self.sin {
            let kf = k as f64;
            if k == 0 {
                continue;
            }
            acc += b * kf.powi(order as i32) * (kf * x + shift).sin();
        }
        acc
    }

    pub fn max_mode(&self) -> u32 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .map(|&(k, _)| k)
            .max()
            .unwrap_or(0)
    }

    /// `true` iff `h' ≡ 0`, decided on the coefficients.
    pub fn is_flat(&self) -> bool {
        self.cos.iter().all(|&(k, a)| k == 0 || a == 0.0)
            && self.sin.iter().all(|&(k, b)| k == 0 || b == 0.0)
    }

    /// Maximum of `|h|` over a dense sample (at least 8× the highest mode).
    pub fn max_abs(&self) -> f64 {
        let n = (16 * self.max_mode() as usize).max(256);
        (0..n)
            .map(|i| self.eval(TWO_PI * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Checks `|h| < half_width` everywhere.
    pub fn validate(&self, half_width: f64) -> Result<()> {
        for &(_, c) in self.cos.iter().chain(self.sin.iter()) {
            if !c.is_finite() {
                return Err(Error::InvalidProfile(format!("non-finite coefficient {c}")));
            }
        }
        let m = self.max_abs();
        if m >= half_width {
            return Err(Error::InvalidProfile(format!(
                "max |h| = {m} must stay below the half-width {half_width}"
            )));
        }
        Ok(())
    }
}

/// Tensor grid on `T × [-1, 1]` together with the metric of the stretch map.
///
/// Nodes are `x_i = 2πi/nx` (no duplicated seam column) and
/// `η_j = -1 + 2j/(ny-1)`, boundary rows included. `ny` is odd so the
/// centerline is the grid row `j = (ny-1)/2`.
#[derive(Debug, Clone)]
pub struct ChannelGrid {
    nx: usize,
    ny: usize,
    half_width: f64,
    profile: BoundaryProfile,
    x: Vec<f64>,
    eta: Vec<f64>,
    jac: Vec<f64>,
    dh: Vec<f64>,
    d2h: Vec<f64>,
}

impl ChannelGrid {
    pub fn new(profile: BoundaryProfile, nx: usize, ny: usize) -> Result<Self> {
        Self::with_half_width(profile, nx, ny, 1.0)
    }

    /// Grid for the channel of base half-width `half_width`; the physical
    /// walls sit at `y = ±(half_width + h(x))`.
    pub fn with_half_width(
        profile: BoundaryProfile,
        nx: usize,
        ny: usize,
        half_width: f64,
    ) -> Result<Self> {
        if nx < 16 {
            return Err(Error::InvalidGrid(format!("nx = {nx} must be at least 16")));
        }
        if ny < 17 || ny % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "ny = {ny} must be odd and at least 17"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        profile.validate(half_width)?;
        let x: Vec<f64> = (0..nx).map(|i| TWO_PI * i as f64 / nx as f64).collect();
        let eta: Vec<f64> = (0..ny)
            .map(|j| {
                // exact mirror: η_{ny-1-j} = -η_j
                let c = (ny - 1) as f64 / 2.0;
                (j as f64 - c) / c
            })
            .collect();
        let jac = x.iter().map(|&xi| half_width + profile.eval(xi)).collect();
        let dh = x.iter().map(|&xi| profile.derivative(xi, 1)).collect();
        let d2h = x.iter().map(|&xi| profile.derivative(xi, 2)).collect();
        Ok(Self {
            nx,
            ny,
            half_width,
            profile,
            x,
            eta,
            jac,
            dh,
            d2h,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn profile(&self) -> &BoundaryProfile {
        &self.profile
    }
    pub fn dx(&self) -> f64 {
        TWO_PI / self.nx as f64
    }
    pub fn deta(&self) -> f64 {
        2.0 / (self.ny - 1) as f64
    }
    /// Row index of the centerline `η = 0`.
    pub fn center_row(&self) -> usize {
        (self.ny - 1) / 2
    }
    pub fn x(&self, i: usize) -> f64 {
        self.x[i]
    }
    pub fn eta(&self, j: usize) -> f64 {
        self.eta[j]
    }
    pub fn xs(&self) -> &[f64] {
        &self.x
    }
    pub fn etas(&self) -> &[f64] {
        &self.eta
    }
    /// Local half-width `J = a + h(x_i)`.
    pub fn jac(&self, i: usize) -> f64 {
        self.jac[i]
    }
    pub fn dh(&self, i: usize) -> f64 {
        self.dh[i]
    }
    pub fn d2h(&self, i: usize) -> f64 {
        self.d2h[i]
    }
    /// `J` at an arbitrary abscissa.
    pub fn jac_at(&self, x: f64) -> f64 {
        self.half_width + self.profile.eval(x)
    }
    /// `J^{(order)}` at an arbitrary abscissa (`order ≥ 1`).
    pub fn jac_derivative_at(&self, x: f64, order: u32) -> f64 {
        if order == 0 {
            self.jac_at(x)
        } else {
            self.profile.derivative(x, order)
        }
    }

    /// Flat index of node `(i, j)`; η runs fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn physical_coords(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        if i >= self.nx || j >= self.ny {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok((self.x[i], self.eta[j] * self.jac[i]))
    }

    /// Maps a reference point to physical coordinates (no range check, `x` unwrapped).
    pub fn to_physical(&self, x: f64, eta: f64) -> (f64, f64) {
        (x, eta * self.jac_at(x))
    }

    pub fn to_reference(&self, x: f64, y: f64) -> (f64, f64) {
        (x, y / self.jac_at(x))
    }

    /// Smallest physical node spacing.
    pub fn min_spacing(&self) -> f64 {
        let jmin = self.jac.iter().cloned().fold(f64::INFINITY, f64::min);
        self.dx().min(self.deta() * jmin)
    }

    pub fn same_shape(&self, other: &ChannelGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.half_width == other.half_width
            && self.profile == other.profile
    }
}

/// Nodal values of a scalar on a [`ChannelGrid`], stored with η fastest.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<ChannelGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<ChannelGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: Arc<ChannelGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at the physical node positions.
    pub fn from_physical_fn(grid: Arc<ChannelGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let jac = grid.jac(i);
            for j in 0..grid.ny() {
                values.push(f(grid.x(i), grid.eta(j) * jac));
            }
        }
        Self { grid, values }
    }

    /// Samples `f(x, η)` on the reference nodes.
    pub fn from_reference_fn(grid: Arc<ChannelGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                values.push(f(grid.x(i), grid.eta(j)));
            }
        }
        Self { grid, values }
    }

    /// Samples `f(i, j)` by node index.
    pub fn from_index_fn(grid: Arc<ChannelGrid>, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
    /// Oscillation `max - min`.
    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    /// Max over interior rows (`0 < j < ny-1`) of `|v|`.
    pub fn interior_max_abs(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0f64;
        for i in 0..g.nx() {
            for j in 1..g.ny() - 1 {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Area integral `∫ f dx dy` by the trapezoid rule in η and the
    /// periodic rectangle rule in x, weighted by `J`.
    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        let (dx, de) = (g.dx(), g.deta());
        let mut acc = 0.0;
        for i in 0..g.nx() {
            let mut col = 0.0;
            for j in 0..g.ny() {
                let w = if j == 0 || j == g.ny() - 1 { 0.5 } else { 1.0 };
                col += w * self.get(i, j);
            }
            acc += col * g.jac(i);
        }
        acc * dx * de
    }
}
