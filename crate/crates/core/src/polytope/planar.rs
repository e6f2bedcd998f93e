//! Vertex enumeration and area for two-dimensional polytopes.

use serde::{Deserialize, Serialize};

use super::lp::LpOutcome;
use super::{is_feasible, HPolytope, PolytopeError};

/// Slack allowed when testing candidate vertices against the rows.
const VERTEX_TOL: f64 = 1e-9;

/// Extreme points of a convex polygon in counterclockwise order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VertexList2D {
    pub points: Vec<[f64; 2]>,
}

impl VertexList2D {
    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let pts = &self.points;
        if pts.len() < 3 {
            return 0.0;
        }
        let twice: f64 = (0..pts.len())
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        0.5 * twice.abs()
    }

    /// `x,y` per line, with header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for p in &self.points {
            s.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        s
    }
}

/// Vertices from pairwise row intersections, filtered by feasibility and
/// reduced to the convex hull.
pub fn vertices_2d(p: &HPolytope) -> Result<VertexList2D, PolytopeError> {
    if p.dim() != 2 {
        return Err(PolytopeError::Dimension {
            expected: 2,
            actual: p.dim(),
        });
    }
    if !is_feasible(p, super::lp::FEASIBILITY_TOL)?.feasible {
        return Err(PolytopeError::Infeasible);
    }
    for c in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        match p.maximize(&c) {
            LpOutcome::Optimal { .. } => {}
            LpOutcome::Unbounded => return Err(PolytopeError::Unbounded),
            LpOutcome::Infeasible => return Err(PolytopeError::Infeasible),
        }
    }
    let n = p.normalized();
    let mut candidates: Vec<[f64; 2]> = Vec::new();
    for i in 0..n.n_rows() {
        for j in (i + 1)..n.n_rows() {
            let (a, c) = (&n.a()[i], &n.a()[j]);
            let det = a[0] * c[1] - a[1] * c[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let (bi, bj) = (n.b()[i], n.b()[j]);
            let x = (bi * c[1] - a[1] * bj) / det;
            let y = (a[0] * bj - bi * c[0]) / det;
            if n.max_violation(&[x, y]) <= VERTEX_TOL * (1.0 + x.abs().max(y.abs())) {
                candidates.push([x, y]);
            }
        }
    }
    Ok(VertexList2D {
        points: convex_hull(candidates),
    })
}

/// Area of a bounded two-dimensional polytope.
pub fn area_2d(p: &HPolytope) -> Result<f64, PolytopeError> {
    Ok(vertices_2d(p)?.area())
}

/// Andrew's monotone chain; collinear points dropped, output counterclockwise
/// starting from the lowest-leftmost point.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    pts.dedup_by(|p, q| (p[0] - q[0]).abs() <= 1e-9 && (p[1] - q[1]).abs() <= 1e-9);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-12 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    // Degenerate (collinear) input collapses to its two endpoints.
    if hull.len() < 3 {
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}
