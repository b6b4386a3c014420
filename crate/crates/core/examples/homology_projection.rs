//! Harmonic projection of the velocity against the boundary formula
//! `gap · flux(q)` on flat and curved channels.

use std::sync::Arc;

use cats_eye::equilibrium::{solve_equilibrium, VorticityProfile};
use cats_eye::geometry::{BoundaryProfile, ChannelGrid};
use cats_eye::homology::{gap_projection_consistency, harmonic_generator, homology_projection};

fn main() -> cats_eye::Result<()> {
    let v = VorticityProfile::Constant { value: 1.0 };
    println!("{:>5} {:>6} {:>9} {:>12} {:>10}", "eps", "grid", "gap", "projection", "mismatch");
    for eps in [0.0, 0.2] {
        for (nx, ny) in [(32, 17), (64, 33), (128, 65)] {
            let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), nx, ny)?);
            let gen = harmonic_generator(&g)?;
            for gap in [0.0, 1.5] {
                let sol = solve_equilibrium(&g, v, gap, 1e-10)?;
                let p = homology_projection(&sol.u, &gen)?;
                let d = gap_projection_consistency(&sol, &gen)?;
                println!("{eps:>5} {nx:>6} {gap:>9} {p:>12.6} {d:>10.2e}");
            }
        }
    }
    Ok(())
}
