//! SVG plots of streamlines in physical coordinates.
//!
//! Output is plain text with fixed-precision coordinates, so identical input
//! gives identical bytes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::contour::contour_segments;
use crate::error::Result;
use crate::geometry::ScalarField;
use crate::topology::Orbit;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;
pub const N_LEVELS: usize = 20;

struct Frame {
    ymax: f64,
    scale: f64,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + x * self.scale, MARGIN + (self.ymax - y) * self.scale)
    }
}

/// `N_LEVELS` levels evenly spaced strictly inside `(min ψ, max ψ)`.
pub fn contour_levels(psi: &ScalarField) -> Vec<f64> {
    let (lo, hi) = (psi.min(), psi.max());
    (0..N_LEVELS)
        .map(|k| lo + (k as f64 + 0.5) * (hi - lo) / N_LEVELS as f64)
        .collect()
}

/// Blue (low) to red (high).
fn level_color(t: f64) -> String {
    let r = (40.0 + 200.0 * t).round() as u8;
    let b = (240.0 - 200.0 * t).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

/// SVG document with ψ contours, both walls and the given orbits on top
/// (contractible ones in a heavier stroke).
pub fn contour_svg(psi: &ScalarField, orbits: &[Orbit]) -> String {
    let g = psi.grid();
    let ymax = g.half_width() + g.profile().max_abs();
    let scale = (WIDTH - 2.0 * MARGIN) / (2.0 * PI);
    let frame = Frame { ymax, scale };
    let height = 2.0 * MARGIN + 2.0 * ymax * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH:.0} {height:.0}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    let levels = contour_levels(psi);
    for (k, &level) in levels.iter().enumerate() {
        let segs = contour_segments(psi, level);
        if segs.is_empty() {
            continue;
        }
        let mut d = String::new();
        for [a, b] in segs {
            let pa = frame.px(a.0.clamp(0.0, 2.0 * PI), a.1 * g.jac_at(a.0));
            let pb = frame.px(b.0.clamp(0.0, 2.0 * PI), b.1 * g.jac_at(b.0));
            let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", pa.0, pa.1, pb.0, pb.1);
        }
        let t = k as f64 / (N_LEVELS - 1) as f64;
        let _ = writeln!(
            s,
            "<path class=\"level\" data-level=\"{level:.6e}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\" d=\"{d}\"/>",
            level_color(t)
        );
    }

    for sign in [-1.0, 1.0] {
        let mut d = String::new();
        let n = 256;
        for k in 0..=n {
            let x = 2.0 * PI * k as f64 / n as f64;
            let p = frame.px(x, sign * g.jac_at(x));
            let _ = write!(d, "{}{:.2} {:.2}", if k == 0 { "M" } else { "L" }, p.0, p.1);
        }
        let _ = writeln!(
            s,
            "<path class=\"wall\" fill=\"none\" stroke=\"black\" stroke-width=\"2\" d=\"{d}\"/>"
        );
    }

    for o in orbits {
        if o.points.is_empty() {
            continue;
        }
        // shift the orbit copy so it starts inside the plotted period
        let shift = -2.0 * PI * (o.points[0].0 / (2.0 * PI)).floor();
        let mut d = String::new();
        for (k, &(x, y)) in o.points.iter().enumerate() {
            let p = frame.px(x + shift, y);
            let _ = write!(d, "{}{:.2} {:.2}", if k == 0 { "M" } else { "L" }, p.0, p.1);
        }
        let (class, stroke, w) = if o.contractible() {
            ("island", "#d01010", 2.5)
        } else {
            ("orbit", "#202020", 1.0)
        };
        let _ = writeln!(
            s,
            "<path class=\"{class}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{w}\" d=\"{d}\"/>"
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_contours(psi: &ScalarField, orbits: &[Orbit], path: &Path) -> Result<()> {
    std::fs::write(path, contour_svg(psi, orbits))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryProfile, ChannelGrid};
    use std::sync::Arc;

    #[test]
    fn couette_plot_is_deterministic_and_complete() {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::cosine(0.1), 64, 33).unwrap());
        let psi = ScalarField::from_physical_fn(g, |_, y| -0.5 * y * y);
        let a = contour_svg(&psi, &[]);
        let b = contour_svg(&psi, &[]);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("class=\"level\"").count(), N_LEVELS);
        assert_eq!(a.matches("class=\"wall\"").count(), 2);
    }

    #[test]
    fn levels_are_inside_the_range() {
        let g = Arc::new(ChannelGrid::new(BoundaryProfile::flat(), 32, 17).unwrap());
        let psi = ScalarField::from_physical_fn(g, |_, y| y);
        let lv = contour_levels(&psi);
        assert_eq!(lv.len(), N_LEVELS);
        assert!(lv.iter().all(|l| *l > -1.0 && *l < 1.0));
    }
}
