//! Weighted-norm ratios for the conjugated Laplacian as the Carleman
//! parameter grows, and the pointwise divergence identity residual.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cats_eye::carleman::{carleman_ratio_sweep, divergence_identity_residual, CarlemanWeight, TestFunction};
use cats_eye::geometry::{BoundaryProfile, ChannelGrid};

fn main() -> cats_eye::Result<()> {
    let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(0.1), 128, 65)?);
    let weight = CarlemanWeight::new(&g, 2.0)?;
    let ms = [4.0, 8.0, 16.0, 32.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..3 {
        let w = TestFunction::random(g.clone(), &mut rng)?;
        let s = carleman_ratio_sweep(&w, &weight, &ms)?;
        let ratios: Vec<String> = s
            .rows
            .iter()
            .map(|r| format!("{:.3e}", r.ratio.unwrap_or(f64::NAN)))
            .collect();
        let chk = divergence_identity_residual(&w, &weight, 8.0)?;
        println!(
            "w{k}: ratios [{}], log-log slope {:.3}, identity residual {:.2e} (relative {:.2e})",
            ratios.join(", "),
            s.trend_slope().unwrap_or(f64::NAN),
            chk.residual,
            chk.residual / chk.scale
        );
    }
    Ok(())
}
