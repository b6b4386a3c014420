//! Constant-vorticity equilibrium with equal wall values on a wavy channel:
//! the flow develops a cat's eye around an elliptic point. Writes an SVG.

use std::sync::Arc;

use cats_eye::equilibrium::{solve_equilibrium, VorticityProfile};
use cats_eye::geometry::{BoundaryProfile, ChannelGrid};
use cats_eye::render::render_contours;
use cats_eye::topology::{classify_flow, CriticalKind};

fn main() -> cats_eye::Result<()> {
    let eps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), 128, 65)?);
    let sol = solve_equilibrium(&g, VorticityProfile::Constant { value: 1.0 }, 0.0, 1e-10)?;
    println!(
        "eps = {eps}: Newton {} iterations, residual {:.1e}",
        sol.newton_iterations, sol.pde_residual
    );

    let rep = classify_flow(&sol);
    for p in &rep.critical.points {
        println!(
            "  {:?} at ({:.4}, {:.4}), det Hess = {:.4}",
            p.kind, p.position.0, p.position.1, p.hessian_det
        );
    }
    println!(
        "  {} islands, {} elliptic, {} wrapping / {} contractible traced orbits",
        rep.island_count(),
        rep.critical.count(CriticalKind::Elliptic),
        rep.wrapping_orbits,
        rep.contractible_orbits
    );

    let islands: Vec<_> = rep.islands.iter().map(|i| i.orbit.clone()).collect();
    let path = std::env::temp_dir().join("cats_eye_curved.svg");
    render_contours(&sol.psi, &islands, &path)?;
    println!("  wrote {}", path.display());
    Ok(())
}
