//! H-polytope machinery: feasibility, redundancy removal, Fourier–Motzkin
//! projection, containment and planar vertex enumeration.

pub mod lp;
mod planar;
mod projection;
mod redundancy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use lp::{LpOutcome, Row};

pub use planar::{area_2d, vertices_2d, VertexList2D};
pub use projection::{eliminate_variable, project, project_with_stats, ProjectionStats};
pub use redundancy::remove_redundant;

/// Rows whose norm falls below this are treated as all-zero.
pub const ZERO_ROW_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("malformed polytope: {0}")]
    Malformed(String),
    #[error("unknown dimension label `{0}`")]
    UnknownLabel(String),
    #[error("dimension labels differ: {left:?} vs {right:?}")]
    LabelMismatch { left: Vec<String>, right: Vec<String> },
    #[error("polytope is empty")]
    Infeasible,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("operation needs a {expected}-dimensional polytope, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("LP backend failure: {0}")]
    Solver(String),
    #[error(
        "eliminating `{label}` would produce {rows} rows (cap {cap}); \
         raise the cap or use a coarser redundancy tolerance"
    )]
    RowBlowup { label: String, rows: usize, cap: usize },
}

/// Numerical settings shared by the geometry routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub redundancy: f64,
    pub containment: f64,
    pub row_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-8,
            redundancy: 1e-7,
            containment: 1e-6,
            row_cap: 200_000,
        }
    }
}

/// `{x : A x <= b}` with named coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    labels: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl HPolytope {
    pub fn new(labels: Vec<String>, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, PolytopeError> {
        let p = HPolytope { labels, a, b };
        p.check()?;
        Ok(p)
    }

    /// Polytope with no rows (all of R^n).
    pub fn universe(labels: Vec<String>) -> Self {
        HPolytope {
            labels,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_box(labels: Vec<String>, lo: &[f64], hi: &[f64]) -> Result<Self, PolytopeError> {
        let n = labels.len();
        if lo.len() != n || hi.len() != n {
            return Err(PolytopeError::Malformed("box bounds length".into()));
        }
        let mut p = HPolytope::universe(labels);
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            p.push_row(up, hi[i]);
            let mut dn = vec![0.0; n];
            dn[i] = -1.0;
            p.push_row(dn, -lo[i]);
        }
        Ok(p)
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<String>, a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        HPolytope { labels, a, b }
    }

    /// Validates a deserialized polytope.
    pub fn check(&self) -> Result<(), PolytopeError> {
        if self.a.len() != self.b.len() {
            return Err(PolytopeError::Malformed(format!(
                "{} rows in A but {} entries in b",
                self.a.len(),
                self.b.len()
            )));
        }
        let dim = self.labels.len();
        if let Some((r, row)) = self.a.iter().enumerate().find(|(_, row)| row.len() != dim) {
            return Err(PolytopeError::Malformed(format!(
                "row {r} has {} columns, expected {dim}",
                row.len()
            )));
        }
        if self.a.iter().flatten().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(PolytopeError::Malformed("non-finite coefficient".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(PolytopeError::Malformed(format!("duplicate label `{dup}`")));
        }
        Ok(())
    }

    pub fn push_row(&mut self, a: Vec<f64>, b: f64) {
        debug_assert_eq!(a.len(), self.labels.len());
        self.a.push(a);
        self.b.push(b);
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> + Clone {
        self.a.iter().zip(&self.b).map(|(a, &b)| Row { a, b })
    }

    pub fn label_index(&self, label: &str) -> Result<usize, PolytopeError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| PolytopeError::UnknownLabel(label.to_string()))
    }

    /// Scales every row to unit Euclidean norm. All-zero rows with a
    /// nonnegative right-hand side are dropped; a zero row with negative
    /// right-hand side is kept as the certificate of emptiness.
    pub fn normalized(&self) -> HPolytope {
        let mut out = HPolytope::universe(self.labels.clone());
        for (a, &b) in self.a.iter().zip(&self.b) {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= ZERO_ROW_TOL {
                if b < 0.0 {
                    out.push_row(vec![0.0; a.len()], b);
                }
                continue;
            }
            out.push_row(a.iter().map(|v| v / norm).collect(), b / norm);
        }
        out
    }

    /// Largest violation `max_r (a_r·x - b_r)`, or `-inf` for no rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows()
            .map(|r| dot(r.a, x) - r.b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Intersection with another polytope over the same labels.
    pub fn intersect(&self, other: &HPolytope) -> Result<HPolytope, PolytopeError> {
        same_labels(self, other)?;
        let mut out = self.clone();
        out.a.extend(other.a.iter().cloned());
        out.b.extend(other.b.iter().copied());
        Ok(out)
    }

    /// Reorders coordinates to `order` (a permutation of the labels).
    pub fn permuted(&self, order: &[String]) -> Result<HPolytope, PolytopeError> {
        if order.len() != self.dim() {
            return Err(PolytopeError::LabelMismatch {
                left: self.labels.clone(),
                right: order.to_vec(),
            });
        }
        let idx = order
            .iter()
            .map(|l| self.label_index(l))
            .collect::<Result<Vec<_>, _>>()?;
        let a = self
            .a
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(HPolytope::from_parts_unchecked(order.to_vec(), a, self.b.clone()))
    }

    /// Maximizes `c·x` over the polytope.
    pub fn maximize(&self, c: &[f64]) -> LpOutcome {
        lp::maximize(c, self.rows())
    }
}

/// Result of [`is_feasible`].
#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Chebyshev center (or least-violating point when infeasible).
    pub witness: Vec<f64>,
    pub radius: f64,
}

/// Feasibility check through the Chebyshev-center program.
pub fn is_feasible(p: &HPolytope, tol: f64) -> Result<Feasibility, PolytopeError> {
    let n = p.normalized();
    let rows: Vec<Row> = n.rows().collect();
    let ball = lp::chebyshev_center(n.dim(), &rows, &[])
        .ok_or_else(|| PolytopeError::Solver("Chebyshev program has no optimum".into()))?;
    Ok(Feasibility {
        feasible: ball.radius >= -tol,
        witness: ball.center,
        radius: ball.radius,
    })
}

/// Outcome of [`contains`]: does the outer polytope contain the inner one?
#[derive(Clone, Debug, PartialEq)]
pub struct Containment {
    pub holds: bool,
    /// Row of the outer polytope with the largest violation.
    pub worst_row: Option<usize>,
    /// `max_x∈inner a_r·x - b_r` for the worst row, with rows normalized.
    pub max_violation: f64,
    /// Point of the inner polytope attaining the worst violation.
    pub witness: Option<Vec<f64>>,
}

/// Tests `inner ⊆ outer`: for each row of `outer`, maximizes its left-hand
/// side over `inner`.
pub fn contains(outer: &HPolytope, inner: &HPolytope, tol: f64) -> Result<Containment, PolytopeError> {
    same_labels(outer, inner)?;
    let outer = outer.normalized();
    let inner_rows: Vec<Row> = inner.rows().collect();
    let mut result = Containment {
        holds: true,
        worst_row: None,
        max_violation: f64::NEG_INFINITY,
        witness: None,
    };
    if outer.n_rows() == 0 {
        if !is_feasible(inner, lp::FEASIBILITY_TOL)?.feasible {
            return Err(PolytopeError::Infeasible);
        }
        return Ok(result);
    }
    for (r, row) in outer.rows().enumerate() {
        let (violation, witness) = match lp::maximize(row.a, inner_rows.iter().copied()) {
            LpOutcome::Optimal { x, value } => (value - row.b, Some(x)),
            LpOutcome::Unbounded => (f64::INFINITY, None),
            LpOutcome::Infeasible => return Err(PolytopeError::Infeasible),
        };
        if violation > result.max_violation {
            result.max_violation = violation;
            result.worst_row = Some(r);
            result.witness = witness;
        }
    }
    result.holds = result.max_violation <= tol;
    Ok(result)
}

pub(crate) fn same_labels(p: &HPolytope, q: &HPolytope) -> Result<(), PolytopeError> {
    if p.labels != q.labels {
        return Err(PolytopeError::LabelMismatch {
            left: p.labels.clone(),
            right: q.labels.clone(),
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bounding box of a polytope via `2·dim` LPs; unbounded directions give
/// infinite bounds.
pub fn bounding_box(p: &HPolytope) -> Result<Vec<(f64, f64)>, PolytopeError> {
    let dim = p.dim();
    let mut out = Vec::with_capacity(dim);
    let mut c = vec![0.0; dim];
    for i in 0..dim {
        c[i] = 1.0;
        let hi = match p.maximize(&c) {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Unbounded => f64::INFINITY,
            LpOutcome::Infeasible => return Err(PolytopeError::Infeasible),
        };
        c[i] = -1.0;
        let lo = match p.maximize(&c) {
            LpOutcome::Optimal { value, .. } => -value,
            LpOutcome::Unbounded => f64::NEG_INFINITY,
            LpOutcome::Infeasible => return Err(PolytopeError::Infeasible),
        };
        c[i] = 0.0;
        out.push((lo, hi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    pub(crate) fn square(side: f64) -> HPolytope {
        HPolytope::from_box(labels(2), &[0.0, 0.0], &[side, side]).unwrap()
    }

    #[test]
    fn feasible_interval_witness() {
        let p = HPolytope::new(labels(1), vec![vec![1.0], vec![-1.0]], vec![1.0, 0.0]).unwrap();
        let f = is_feasible(&p, 1e-8).unwrap();
        assert!(f.feasible);
        assert!((f.witness[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn contradictory_interval() {
        let p = HPolytope::new(labels(1), vec![vec![1.0], vec![-1.0]], vec![0.0, -1.0]).unwrap();
        assert!(!is_feasible(&p, 1e-8).unwrap().feasible);
    }

    #[test]
    fn containment_of_squares() {
        let unit = square(1.0);
        let big = square(2.0);
        let c = contains(&big, &unit, 1e-6).unwrap();
        assert!(c.holds);
        let c = contains(&unit, &big, 1e-6).unwrap();
        assert!(!c.holds);
        assert!((c.max_violation - 1.0).abs() < 1e-9);
        let w = c.witness.unwrap();
        assert!(big.contains_point(&w, 1e-9));
        assert!(!unit.contains_point(&w, 1e-3));
    }

    #[test]
    fn containment_rejects_empty_inner() {
        let empty = HPolytope::new(labels(1), vec![vec![1.0], vec![-1.0]], vec![0.0, -1.0]).unwrap();
        let any = HPolytope::new(labels(1), vec![vec![1.0]], vec![5.0]).unwrap();
        assert_eq!(contains(&any, &empty, 1e-6), Err(PolytopeError::Infeasible));
    }

    #[test]
    fn malformed_rejected() {
        assert!(HPolytope::new(labels(2), vec![vec![1.0]], vec![1.0]).is_err());
        assert!(HPolytope::new(labels(1), vec![vec![1.0]], vec![]).is_err());
        assert!(HPolytope::new(vec!["a".into(), "a".into()], vec![], vec![]).is_err());
    }

    #[test]
    fn json_shape() {
        let p = square(1.0);
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert!(v.get("A").is_some() && v.get("b").is_some() && v.get("labels").is_some());
        let back: HPolytope = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn normalization_drops_trivial_rows() {
        let p = HPolytope::new(labels(2), vec![vec![3.0, 4.0], vec![0.0, 0.0]], vec![5.0, 1.0]).unwrap();
        let n = p.normalized();
        assert_eq!(n.n_rows(), 1);
        assert!((n.a()[0][0] - 0.6).abs() < 1e-15 && (n.b()[0] - 1.0).abs() < 1e-15);
    }
}
