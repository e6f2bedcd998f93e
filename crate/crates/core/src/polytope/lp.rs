//! Thin linear-programming layer used by the geometry code.
//!
//! Every query is phrased as `maximize c·x subject to A x <= b` over free
//! variables. The backend is `minilp`; nothing outside this module touches it.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Default primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Cap on the auxiliary radius variable of the Chebyshev-center program.
const RADIUS_CAP: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// One inequality `a·x <= b`.
#[derive(Clone, Copy, Debug)]
pub struct Row<'a> {
    pub a: &'a [f64],
    pub b: f64,
}

/// Solves `max c·x s.t. a_r·x <= b_r` for all supplied rows, `x` free.
pub fn maximize<'a, I>(c: &[f64], rows: I) -> LpOutcome
where
    I: IntoIterator<Item = Row<'a>>,
{
    maximize_bounded(c, rows, None)
}

/// Same as [`maximize`], with optional per-variable bounds.
pub fn maximize_bounded<'a, I>(c: &[f64], rows: I, bounds: Option<&[(f64, f64)]>) -> LpOutcome
where
    I: IntoIterator<Item = Row<'a>>,
{
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = c
        .iter()
        .enumerate()
        .map(|(i, &ci)| {
            let bound = bounds
                .map(|bs| bs[i])
                .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            problem.add_var(ci, bound)
        })
        .collect();
    let mut terms = Vec::with_capacity(c.len());
    for row in rows {
        debug_assert_eq!(row.a.len(), c.len());
        terms.clear();
        terms.extend(
            row.a
                .iter()
                .zip(&vars)
                .filter(|(coef, _)| **coef != 0.0)
                .map(|(coef, var)| (*var, *coef)),
        );
        if terms.is_empty() {
            if row.b < -FEASIBILITY_TOL {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        problem.add_constraint(terms.as_slice(), ComparisonOp::Le, row.b);
    }
    match problem.solve() {
        Ok(solution) => {
            let x: Vec<f64> = vars.iter().map(|v| solution[*v]).collect();
            let value: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            // minilp reports some unbounded programs as an infinite optimum.
            if !value.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return LpOutcome::Unbounded;
            }
            LpOutcome::Optimal { x, value }
        }
        Err(minilp::Error::Infeasible) => LpOutcome::Infeasible,
        Err(minilp::Error::Unbounded) => LpOutcome::Unbounded,
    }
}

/// Largest inscribed ball of `{x : a_r·x <= b_r}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevBall {
    pub center: Vec<f64>,
    /// Negative when the system is infeasible (the least violation achievable).
    pub radius: f64,
}

/// Chebyshev center. Rows flagged in `hard` enter without the radius term,
/// which keeps the program meaningful for sets confined to a hyperplane.
pub fn chebyshev_center(dim: usize, rows: &[Row<'_>], hard: &[bool]) -> Option<ChebyshevBall> {
    let mut c = vec![0.0; dim + 1];
    c[dim] = 1.0;
    let mut extended: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let norm = row.a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut a = row.a.to_vec();
        a.push(if hard.get(r).copied().unwrap_or(false) { 0.0 } else { norm });
        extended.push(a);
    }
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); dim + 1];
    bounds[dim] = (f64::NEG_INFINITY, RADIUS_CAP);
    let outcome = maximize_bounded(
        &c,
        extended.iter().zip(rows).map(|(a, row)| Row { a, b: row.b }),
        Some(&bounds),
    );
    match outcome {
        LpOutcome::Optimal { mut x, .. } => {
            let radius = x.pop().unwrap_or(0.0);
            Some(ChebyshevBall { center: x, radius })
        }
        // Hard rows alone can be contradictory.
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => None,
    }
}
