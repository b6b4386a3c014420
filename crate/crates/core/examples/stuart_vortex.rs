//! The Kelvin-Stuart cat's eye `ψ = ln(√2 cosh y + cos x)`: nodal residual
//! of `Δψ = e^{−2ψ}` and the classifier's critical points.

use std::sync::Arc;

use cats_eye::geometry::{BoundaryProfile, ChannelGrid, ScalarField};
use cats_eye::operators::Laplacian;
use cats_eye::topology::{classify_field, TopologyOptions};

fn main() -> cats_eye::Result<()> {
    for (nx, ny) in [(64, 33), (128, 65), (256, 129)] {
        let g = Arc::new(ChannelGrid::with_half_width(BoundaryProfile::flat(), nx, ny, 2.0)?);
        let psi = ScalarField::from_physical_fn(g.clone(), |x, y| {
            (std::f64::consts::SQRT_2 * y.cosh() + x.cos()).ln()
        });
        let lap = Laplacian::new(g.clone()).apply(&psi);
        let res = (0..nx)
            .flat_map(|i| (1..ny - 1).map(move |j| (i, j)))
            .map(|(i, j)| (lap.get(i, j) - (-2.0 * psi.get(i, j)).exp()).abs())
            .fold(0.0, f64::max);
        let rep = classify_field(&psi, TopologyOptions::default());
        println!("{nx}x{ny}: max |Δψ − e^(−2ψ)| = {res:.3e}, islands {}", rep.island_count());
        for p in &rep.critical.points {
            println!(
                "    {:?} ({:.6}, {:.6}) det {:.5}",
                p.kind, p.position.0, p.position.1, p.hessian_det
            );
        }
    }
    Ok(())
}
