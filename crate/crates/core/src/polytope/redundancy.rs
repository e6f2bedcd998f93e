//! Redundancy removal: duplicate merging, a bounding-box prefilter and
//! Clarkson's incremental LP scheme.

use std::collections::HashMap;

use super::lp::{self, LpOutcome, Row};
use super::{dot, HPolytope, PolytopeError};

/// Cosine threshold above which two normalized rows count as parallel.
const PARALLEL_TOL: f64 = 1e-12;

/// Minimum inscribed radius for Clarkson's ray shooting; thinner sets fall
/// back to one LP per row.
const INTERIOR_RADIUS: f64 = 1e-9;

/// Returns a minimal representation of `p`. Row `r` is dropped when the
/// maximum of `a_r·x` over the rows kept so far does not exceed
/// `b_r + tol`.
pub fn remove_redundant(p: &HPolytope, tol: f64) -> Result<HPolytope, PolytopeError> {
    prune(p, tol, None)
}

/// Same as [`remove_redundant`], optionally seeded with a known outer box.
pub(crate) fn prune(
    p: &HPolytope,
    tol: f64,
    outer_box: Option<&[(f64, f64)]>,
) -> Result<HPolytope, PolytopeError> {
    let labels = p.labels().to_vec();
    let n = dedup_parallel(&p.normalized());
    if n.b().iter().zip(n.a()).any(|(&b, a)| b < -lp::FEASIBILITY_TOL && a.iter().all(|v| *v == 0.0)) {
        return Err(PolytopeError::Infeasible);
    }
    if n.n_rows() == 0 {
        return Ok(n);
    }
    let bbox = match outer_box {
        Some(b) => b.to_vec(),
        None => super::bounding_box(&n)?,
    };
    // The box is valid for the set, so its rows are added before any row is
    // discarded for being implied by it.
    let mut augmented = HPolytope::universe(labels.clone());
    for (i, &(lo, hi)) in bbox.iter().enumerate() {
        let mut e = vec![0.0; bbox.len()];
        if hi.is_finite() {
            e[i] = 1.0;
            augmented.push_row(e.clone(), hi);
        }
        if lo.is_finite() {
            e[i] = -1.0;
            augmented.push_row(e, -lo);
        }
    }
    let n_box = augmented.n_rows();
    for row in n.rows() {
        augmented.push_row(row.a.to_vec(), row.b);
    }
    let (n, origin) = dedup_parallel_tracked(&augmented);

    let hard = equality_pairs(&n, tol);
    let rows: Vec<Row> = n.rows().collect();
    let ball = lp::chebyshev_center(n.dim(), &rows, &hard).ok_or(PolytopeError::Infeasible)?;
    if ball.radius < -lp::FEASIBILITY_TOL {
        return Err(PolytopeError::Infeasible);
    }
    let candidates: Vec<usize> = (0..n.n_rows())
        .filter(|&r| hard[r] || origin[r] < n_box || box_max(&n.a()[r], &bbox) > n.b()[r] + tol)
        .collect();

    let keep = if ball.radius > INTERIOR_RADIUS {
        clarkson(&n, &candidates, &hard, &ball.center, tol)
    } else {
        sequential(&n, &candidates, &hard, tol)
    };
    let a = keep.iter().map(|&r| n.a()[r].clone()).collect();
    let b = keep.iter().map(|&r| n.b()[r]).collect();
    Ok(HPolytope::from_parts_unchecked(labels, a, b))
}

fn box_max(a: &[f64], bbox: &[(f64, f64)]) -> f64 {
    a.iter()
        .zip(bbox)
        .map(|(&ai, &(lo, hi))| {
            if ai > 0.0 {
                ai * hi
            } else if ai < 0.0 {
                ai * lo
            } else {
                0.0
            }
        })
        .sum()
}

/// Quantized direction used to bucket (near-)parallel unit rows.
fn direction_key(a: &[f64]) -> Vec<i64> {
    a.iter().map(|v| (v * 1e9).round() as i64).collect()
}

/// Merges parallel rows of a normalized polytope, keeping the tightest
/// right-hand side at the position of the first occurrence.
fn dedup_parallel(p: &HPolytope) -> HPolytope {
    dedup_parallel_tracked(p).0
}

/// As [`dedup_parallel`], also returning the source row of every output row.
fn dedup_parallel_tracked(p: &HPolytope) -> (HPolytope, Vec<usize>) {
    let mut origin = Vec::new();
    let mut first: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for (r, row) in p.rows().enumerate() {
        let key = direction_key(row.a);
        match first.get(&key) {
            Some(&slot) if 1.0 - dot(&a[slot], row.a) <= PARALLEL_TOL => {
                if row.b < b[slot] {
                    b[slot] = row.b;
                }
            }
            _ => {
                first.entry(key).or_insert(a.len());
                origin.push(r);
                a.push(row.a.to_vec());
                b.push(row.b);
            }
        }
    }
    (HPolytope::from_parts_unchecked(p.labels().to_vec(), a, b), origin)
}

/// Flags rows `r` for which an opposite row `s` exists with
/// `b_r + b_s <= tol`, i.e. syntactic equality constraints.
fn equality_pairs(p: &HPolytope, tol: f64) -> Vec<bool> {
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    for (r, row) in p.a().iter().enumerate() {
        index.entry(direction_key(row)).or_insert(r);
    }
    let mut hard = vec![false; p.n_rows()];
    for (r, row) in p.a().iter().enumerate() {
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        if let Some(&s) = index.get(&direction_key(&neg)) {
            if 1.0 + dot(row, &p.a()[s]) <= PARALLEL_TOL && p.b()[r] + p.b()[s] <= tol {
                hard[r] = true;
                hard[s] = true;
            }
        }
    }
    hard
}

/// `max a_r·x` over `kept` rows plus `a_r·x <= b_r + 1`.
fn probe(p: &HPolytope, kept: &[usize], r: usize) -> LpOutcome {
    let relaxed = p.b()[r] + 1.0;
    let rows = kept
        .iter()
        .filter(|&&s| s != r)
        .map(|&s| Row { a: &p.a()[s], b: p.b()[s] })
        .chain(std::iter::once(Row { a: &p.a()[r], b: relaxed }));
    lp::maximize(&p.a()[r], rows)
}

/// Clarkson's algorithm: LPs are only solved against the growing set of
/// rows already known to be facets.
fn clarkson(p: &HPolytope, candidates: &[usize], hard: &[bool], center: &[f64], tol: f64) -> Vec<usize> {
    let mut facets: Vec<usize> = candidates.iter().copied().filter(|&r| hard[r]).collect();
    let mut is_facet = vec![false; p.n_rows()];
    for &r in &facets {
        is_facet[r] = true;
    }
    let mut discarded = vec![false; p.n_rows()];
    let slack: Vec<f64> = (0..p.n_rows()).map(|r| p.b()[r] - dot(&p.a()[r], center)).collect();

    for &r in candidates {
        while !is_facet[r] && !discarded[r] {
            let x = match probe(p, &facets, r) {
                LpOutcome::Optimal { value, .. } if value <= p.b()[r] + tol => {
                    discarded[r] = true;
                    break;
                }
                LpOutcome::Optimal { x, .. } => x,
                // The relaxed copy of row r bounds the objective, so anything
                // else means the LP layer struggled; keep the row.
                _ => {
                    is_facet[r] = true;
                    facets.push(r);
                    break;
                }
            };
            let dir: Vec<f64> = x.iter().zip(center).map(|(xi, ci)| xi - ci).collect();
            let mut hit: Option<(f64, usize)> = None;
            for &s in candidates {
                if is_facet[s] || discarded[s] {
                    continue;
                }
                let rate = dot(&p.a()[s], &dir);
                if rate <= 1e-14 {
                    continue;
                }
                let t = slack[s] / rate;
                if hit.map_or(true, |(best, _)| t < best) {
                    hit = Some((t, s));
                }
            }
            let s = hit.map(|(_, s)| s).unwrap_or(r);
            is_facet[s] = true;
            facets.push(s);
        }
    }
    let mut keep: Vec<usize> = candidates.iter().copied().filter(|&r| is_facet[r]).collect();
    keep.sort_unstable();
    keep
}

/// One LP per row against all rows still kept; used when the set has no
/// usable interior point.
fn sequential(p: &HPolytope, candidates: &[usize], hard: &[bool], tol: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = candidates.to_vec();
    let mut i = 0;
    while i < kept.len() {
        let r = kept[i];
        if hard[r] {
            i += 1;
            continue;
        }
        let redundant = matches!(
            probe(p, &kept, r),
            LpOutcome::Optimal { value, .. } if value <= p.b()[r] + tol
        );
        if redundant {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}
