//! Smallest Dirichlet eigenvalue of the channel as the wall amplitude grows.

use std::f64::consts::PI;
use std::sync::Arc;

use cats_eye::eigen::smallest_dirichlet_eigenvalue;
use cats_eye::geometry::{BoundaryProfile, ChannelGrid};

fn main() -> cats_eye::Result<()> {
    println!("flat strip exact: {:.6}", PI * PI / 4.0);
    println!("{:>6} {:>12} {:>10} {:>6}", "eps", "lambda1", "residual", "iters");
    for eps in [0.0, 0.05, 0.1, 0.2, 0.3] {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(eps), 128, 65)?);
        let r = smallest_dirichlet_eigenvalue(&g, 1e-10)?;
        println!("{eps:>6.2} {:>12.6} {:>10.2e} {:>6}", r.lambda1, r.residual, r.iterations);
    }
    Ok(())
}
