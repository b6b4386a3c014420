//! A channel carrying a net current (unequal wall values). With a small wall
//! perturbation every streamline wraps around the period.

use std::sync::Arc;

use cats_eye::equilibrium::{solve_equilibrium, VorticityProfile};
use cats_eye::geometry::{BoundaryProfile, ChannelGrid};
use cats_eye::homology::{harmonic_generator, homology_projection};
use cats_eye::topology::classify_flow;

fn main() -> cats_eye::Result<()> {
    let gap = 2.02;
    for eps in [0.0, 0.005, 0.05] {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), 128, 65)?);
        let sol = solve_equilibrium(&g, VorticityProfile::Constant { value: -1.0 }, gap, 1e-10)?;
        let p = homology_projection(&sol.u, &harmonic_generator(&g)?)?;
        let rep = classify_flow(&sol);
        println!(
            "eps = {eps:<5}: projection {p:.4}, islands {}, min |u| {:.2e}, wrapping orbits {}",
            rep.island_count(),
            rep.min_speed,
            rep.wrapping_orbits
        );
    }
    Ok(())
}
