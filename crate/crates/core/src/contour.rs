//! Marching-squares level sets on the periodic reference grid.
//!
//! Used to draw streamlines and as an independent check on traced orbits:
//! a level-set component through a point is closed and contractible exactly
//! when the chain of crossed cell edges returns to its start with zero net
//! displacement in x.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::geometry::ScalarField;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    /// `(i, j)`–`(i+1, j)`
    H(usize, usize),
    /// `(i, j)`–`(i, j+1)`
    V(usize, usize),
}

/// Connected level-set component in reference coordinates, x unwrapped.
#[derive(Debug, Clone)]
pub struct ContourLine {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
    /// Net number of turns around the periodic direction (closed lines only).
    pub x_winding: i64,
}

impl ContourLine {
    pub fn is_contractible(&self) -> bool {
        self.closed && self.x_winding == 0
    }
}

struct Crossings<'a> {
    field: &'a ScalarField,
    level: f64,
}

impl Crossings<'_> {
    fn above(&self, i: usize, j: usize) -> bool {
        self.field.get(i, j) >= self.level
    }

    /// Canonical crossing point on an edge.
    fn point(&self, e: Edge) -> (f64, f64) {
        let g = self.field.grid();
        let nx = g.nx();
        match e {
            Edge::H(i, j) => {
                let (a, b) = (self.field.get(i, j), self.field.get((i + 1) % nx, j));
                let t = (self.level - a) / (b - a);
                (g.x(i) + t * g.dx(), g.eta(j))
            }
            Edge::V(i, j) => {
                let (a, b) = (self.field.get(i, j), self.field.get(i, j + 1));
                let t = (self.level - a) / (b - a);
                (g.x(i), g.eta(j) + t * g.deta())
            }
        }
    }

    /// Segments of cell `(i, j)` as pairs of crossed edges.
    fn cell(&self, i: usize, j: usize) -> Vec<(Edge, Edge)> {
        let g = self.field.grid();
        let ip = (i + 1) % g.nx();
        let bl = self.above(i, j);
        let br = self.above(ip, j);
        let tr = self.above(ip, j + 1);
        let tl = self.above(i, j + 1);
        let bottom = Edge::H(i, j);
        let top = Edge::H(i, j + 1);
        let left = Edge::V(i, j);
        let right = Edge::V(ip, j);
        let mut crossed = Vec::with_capacity(4);
        if bl != br {
            crossed.push(bottom);
        }
        if br != tr {
            crossed.push(right);
        }
        if tr != tl {
            crossed.push(top);
        }
        if tl != bl {
            crossed.push(left);
        }
        match crossed.len() {
            2 => vec![(crossed[0], crossed[1])],
            4 => {
                let center = 0.25
                    * (self.field.get(i, j)
                        + self.field.get(ip, j)
                        + self.field.get(ip, j + 1)
                        + self.field.get(i, j + 1));
                // saddle: keep the above-level corners separated or joined by the center value
                if (center >= self.level) == bl {
                    vec![(bottom, right), (top, left)]
                } else {
                    vec![(bottom, left), (top, right)]
                }
            }
            _ => Vec::new(),
        }
    }
}

/// All segments at `level`, in reference coordinates (cell-local unwrapping).
pub fn contour_segments(field: &ScalarField, level: f64) -> Vec<[(f64, f64); 2]> {
    let c = Crossings { field, level };
    let g = field.grid();
    let mut out = Vec::new();
    for i in 0..g.nx() {
        let x0 = g.x(i);
        for j in 0..g.ny() - 1 {
            for (a, b) in c.cell(i, j) {
                let pa = unwrap_near(c.point(a), x0);
                let pb = unwrap_near(c.point(b), x0);
                out.push([pa, pb]);
            }
        }
    }
    out
}

fn unwrap_near(p: (f64, f64), x_ref: f64) -> (f64, f64) {
    let k = ((x_ref - p.0) / TWO_PI).round();
    (p.0 + k * TWO_PI, p.1)
}

/// Level-set components at `level`, joined across cells and the periodic seam.
pub fn contour_lines(field: &ScalarField, level: f64) -> Vec<ContourLine> {
    let c = Crossings { field, level };
    let g = field.grid();
    let mut adj: HashMap<Edge, Vec<Edge>> = HashMap::new();
    for i in 0..g.nx() {
        for j in 0..g.ny() - 1 {
            for (a, b) in c.cell(i, j) {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
    }
    let mut keys: Vec<Edge> = adj.keys().cloned().collect();
    keys.sort();
    let mut visited: HashMap<Edge, bool> = HashMap::new();
    let mut lines = Vec::new();
    // open chains start at degree-one edges (walls); then closed loops
    let starts: Vec<Edge> = keys
        .iter()
        .filter(|e| adj[e].len() == 1)
        .chain(keys.iter().filter(|e| adj[e].len() != 1))
        .cloned()
        .collect();
    for start in starts {
        if visited.get(&start).copied().unwrap_or(false) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut prev: Option<Edge> = None;
        let mut cur = start;
        let mut closed = false;
        loop {
            let next = adj[&cur]
                .iter()
                .cloned()
                .find(|n| Some(*n) != prev && !visited.get(n).copied().unwrap_or(false));
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    chain.push(n);
                    prev = Some(cur);
                    cur = n;
                }
                None => {
                    if chain.len() > 2 && adj[&cur].contains(&start) {
                        closed = true;
                    }
                    break;
                }
            }
        }
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(chain.len() + 1);
        for e in &chain {
            let p = c.point(*e);
            let p = match points.last() {
                Some(&(xl, _)) => unwrap_near(p, xl),
                None => p,
            };
            points.push(p);
        }
        let mut x_winding = 0;
        if closed {
            let p0 = points[0];
            let last = points.last().unwrap().0;
            let back = unwrap_near(p0, last);
            x_winding = ((back.0 - p0.0) / TWO_PI).round() as i64;
            points.push(back);
        }
        lines.push(ContourLine {
            points,
            closed,
            x_winding,
        });
    }
    lines
}

/// Even-odd point-in-polygon test; the polygon is treated as closed.
pub fn polygon_contains(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}
