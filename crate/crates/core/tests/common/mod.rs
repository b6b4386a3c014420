//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use cats_eye::geometry::{BoundaryProfile, ChannelGrid, ScalarField};
use cats_eye::operators::Laplacian;
use nalgebra::DMatrix;

pub fn grid(eps: f64, nx: usize, ny: usize) -> Arc<ChannelGrid> {
    Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), nx, ny).unwrap())
}

/// Smallest eigenvalue of `−Δ_h` from a dense matrix assembled column by
/// column through `Laplacian::apply` and a full Schur decomposition.
pub fn dense_lambda1(g: &Arc<ChannelGrid>) -> f64 {
    let lap = Laplacian::new(g.clone());
    let (nx, ny) = (g.nx(), g.ny());
    let interior: Vec<(usize, usize)> = (0..nx)
        .flat_map(|i| (1..ny - 1).map(move |j| (i, j)))
        .collect();
    let n = interior.len();
    let mut a = DMatrix::zeros(n, n);
    for (c, &(i, j)) in interior.iter().enumerate() {
        let mut e = ScalarField::zeros(g.clone());
        e.set(i, j, 1.0);
        let col = lap.apply(&e);
        for (r, &(p, q)) in interior.iter().enumerate() {
            a[(r, c)] = -col.get(p, q);
        }
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| {
            assert!(z.im.abs() < 1e-8, "non-real eigenvalue {z}");
            z.re
        })
        .fold(f64::INFINITY, f64::min)
}

/// Manufactured streamfunction `ψ = y³/3 + y·sin x + cos 2x` and its
/// physical Laplacian `2y − y·sin x − 4 cos 2x`.
pub fn manufactured(x: f64, y: f64) -> f64 {
    y.powi(3) / 3.0 + y * x.sin() + (2.0 * x).cos()
}

pub fn manufactured_laplacian(x: f64, y: f64) -> f64 {
    2.0 * y - y * x.sin() - 4.0 * (2.0 * x).cos()
}

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `ln(√2 cosh y + cos x)`; satisfies `Δψ = e^{−2ψ}` because `A² − B² = 1`.
pub fn stuart(x: f64, y: f64) -> f64 {
    (SQRT2 * y.cosh() + x.cos()).ln()
}

/// Hessian determinant of the Stuart field at a critical point, from
/// `∇e^ψ = (−sin x, √2 sinh y)`: at a zero of the gradient
/// `ψ_xx = −cos x / f`, `ψ_yy = √2 cosh y / f`, `ψ_xy = 0` with `f = e^ψ`.
pub fn stuart_hessian_det(x: f64, y: f64) -> f64 {
    let f = SQRT2 * y.cosh() + x.cos();
    (-x.cos() / f) * (SQRT2 * y.cosh() / f)
}
