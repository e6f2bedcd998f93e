//! Exact projection by Fourier–Motzkin elimination with LP pruning between
//! steps.

use super::redundancy::prune;
use super::{bounding_box, HPolytope, PolytopeError, Tolerances};

/// Coefficients below this magnitude count as zero when splitting rows by sign.
const COEF_ZERO: f64 = 1e-12;

/// One Fourier–Motzkin step: every row with a positive coefficient on `var`
/// is paired with every row with a negative one; rows without `var` pass
/// through. The result has one dimension less and is normalized.
pub fn eliminate_variable(p: &HPolytope, var: &str) -> Result<HPolytope, PolytopeError> {
    let k = p.label_index(var)?;
    Ok(eliminate_index(&p.normalized(), k))
}

fn eliminate_index(p: &HPolytope, k: usize) -> HPolytope {
    let mut labels = p.labels().to_vec();
    labels.remove(k);
    let (pos, neg, zero) = split_by_sign(p, k);
    let mut out = HPolytope::universe(labels);
    for &r in &zero {
        let mut a = p.a()[r].clone();
        a.remove(k);
        out.push_row(a, p.b()[r]);
    }
    for &i in &pos {
        for &j in &neg {
            let (ai, aj) = (&p.a()[i], &p.a()[j]);
            let (wi, wj) = (-aj[k], ai[k]);
            let a: Vec<f64> = (0..ai.len())
                .filter(|&c| c != k)
                .map(|c| wi * ai[c] + wj * aj[c])
                .collect();
            out.push_row(a, wi * p.b()[i] + wj * p.b()[j]);
        }
    }
    out.normalized()
}

fn split_by_sign(p: &HPolytope, k: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
    for (r, a) in p.a().iter().enumerate() {
        if a[k] > COEF_ZERO {
            pos.push(r);
        } else if a[k] < -COEF_ZERO {
            neg.push(r);
        } else {
            zero.push(r);
        }
    }
    (pos, neg, zero)
}

/// Bookkeeping of a projection run.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct ProjectionStats {
    pub rows_in: usize,
    pub rows_after_first_prune: usize,
    /// Largest row count produced by a single elimination, before pruning.
    pub peak_rows: usize,
    pub rows_out: usize,
    /// Labels in elimination order.
    pub eliminated: Vec<String>,
}

/// Projects `p` onto the coordinates in `keep` (output follows `keep`'s order).
pub fn project(p: &HPolytope, keep: &[String], tol: &Tolerances) -> Result<HPolytope, PolytopeError> {
    project_with_stats(p, keep, tol).map(|(q, _)| q)
}

pub fn project_with_stats(
    p: &HPolytope,
    keep: &[String],
    tol: &Tolerances,
) -> Result<(HPolytope, ProjectionStats), PolytopeError> {
    for label in keep {
        p.label_index(label)?;
    }
    let mut stats = ProjectionStats {
        rows_in: p.n_rows(),
        ..Default::default()
    };
    let mut current = prune(p, tol.redundancy, None)?;
    stats.rows_after_first_prune = current.n_rows();
    let mut bbox = bounding_box(&current)?;

    loop {
        let Some(k) = pick_variable(&current, keep) else { break };
        let (pos, neg, zero) = split_by_sign(&current, k);
        let produced = pos.len() * neg.len() + zero.len();
        let label = current.labels()[k].clone();
        if produced > tol.row_cap {
            return Err(PolytopeError::RowBlowup {
                label,
                rows: produced,
                cap: tol.row_cap,
            });
        }
        stats.peak_rows = stats.peak_rows.max(produced);
        let eliminated = eliminate_index(&current, k);
        bbox.remove(k);
        current = prune(&eliminated, tol.redundancy, Some(&bbox))?;
        bbox = bounding_box(&current)?;
        stats.eliminated.push(label);
    }
    let out = current.permuted(keep)?;
    stats.rows_out = out.n_rows();
    Ok((out, stats))
}

/// Next variable to eliminate: the one minimizing the product of positive
/// and negative row counts; ties go to the lowest index.
fn pick_variable(p: &HPolytope, keep: &[String]) -> Option<usize> {
    (0..p.dim())
        .filter(|&k| !keep.contains(&p.labels()[k]))
        .min_by_key(|&k| {
            let (pos, neg, _) = split_by_sign(p, k);
            pos.len() * neg.len()
        })
}

#[cfg(test)]
mod tests {
    use super::super::{area_2d, contains, HPolytope};
    use super::*;

    fn l(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn triangle_eliminate_y() {
        let p = HPolytope::new(
            l(&["x", "y"]),
            vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let q = eliminate_variable(&p, "y").unwrap();
        assert_eq!(q.labels(), &["x".to_string()]);
        let expect = HPolytope::new(l(&["x"]), vec![vec![1.0], vec![-1.0]], vec![1.0, 0.0]).unwrap();
        assert!(contains(&q, &expect, 1e-12).unwrap().holds);
        assert!(contains(&expect, &q, 1e-12).unwrap().holds);
    }

    #[test]
    fn variable_without_coefficients() {
        let p = HPolytope::new(
            l(&["x", "y"]),
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![1.0, 0.0],
        )
        .unwrap();
        let q = eliminate_variable(&p, "y").unwrap();
        assert_eq!(q.n_rows(), 2);
        assert_eq!(q.dim(), 1);
    }

    #[test]
    fn cube_to_square() {
        let cube = HPolytope::from_box(l(&["x", "y", "z"]), &[0.0; 3], &[1.0; 3]).unwrap();
        let sq = eliminate_variable(&cube, "z").unwrap();
        let unit = HPolytope::from_box(l(&["x", "y"]), &[0.0; 2], &[1.0; 2]).unwrap();
        assert!(contains(&sq, &unit, 1e-12).unwrap().holds);
        assert!(contains(&unit, &sq, 1e-12).unwrap().holds);
    }

    #[test]
    fn hexagon_from_balance() {
        let mut p = HPolytope::from_box(l(&["pi", "e1", "e2"]), &[-1.0; 3], &[1.0; 3]).unwrap();
        p.push_row(vec![1.0, 1.0, 1.0], 0.0);
        p.push_row(vec![-1.0, -1.0, -1.0], 0.0);
        let keep = l(&["e1", "e2"]);
        let q = project(&p, &keep, &Tolerances::default()).unwrap();
        assert_eq!(q.n_rows(), 6);
        assert!((area_2d(&q).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn identity_projection_is_minimal() {
        let mut p = HPolytope::from_box(l(&["a", "b"]), &[0.0; 2], &[1.0; 2]).unwrap();
        p.push_row(vec![1.0, 1.0], 5.0);
        let keep = l(&["b", "a"]);
        let q = project(&p, &keep, &Tolerances::default()).unwrap();
        assert_eq!(q.labels(), keep.as_slice());
        assert_eq!(q.n_rows(), 4);
    }

    #[test]
    fn row_cap_enforced() {
        let p = HPolytope::from_box(l(&["x", "y"]), &[-1.0; 2], &[1.0; 2]).unwrap();
        let tol = Tolerances {
            row_cap: 2,
            ..Tolerances::default()
        };
        let err = project(&p, &l(&["y"]), &tol).unwrap_err();
        assert!(matches!(err, PolytopeError::RowBlowup { .. }));
    }
}
