#![allow(dead_code)]

use rand::Rng;
use tieflex::polytope::lp::{maximize, LpOutcome, Row};
use tieflex::polytope::HPolytope;

/// Box, zero-sum balance and five random rows over `n_i` internal and two
/// external coordinates. Every row keeps the origin strictly inside.
pub fn random_instance<R: Rng>(rng: &mut R, n_i: usize) -> HPolytope {
    let n = n_i + 2;
    let mut labels: Vec<String> = (0..n_i).map(|k| format!("i{k}")).collect();
    labels.extend(["e0".to_string(), "e1".to_string()]);
    let lo: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.3..1.5)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..1.5)).collect();
    let mut p = HPolytope::from_box(labels, &lo, &hi).unwrap();
    p.push_row(vec![1.0; n], 0.0);
    p.push_row(vec![-1.0; n], 0.0);
    for _ in 0..5 {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        p.push_row(a, rng.gen_range(0.2..1.0));
    }
    p
}

/// Feasibility of `p` with the last two coordinates fixed at `e`.
pub fn lifts(p: &HPolytope, e: [f64; 2]) -> bool {
    let n = p.dim() - 2;
    let a: Vec<Vec<f64>> = p.a().iter().map(|r| r[..n].to_vec()).collect();
    let b: Vec<f64> = p
        .a()
        .iter()
        .zip(p.b())
        .map(|(r, b)| b - r[n] * e[0] - r[n + 1] * e[1])
        .collect();
    let rows = a.iter().zip(&b).map(|(a, b)| Row { a, b: *b });
    !matches!(maximize(&vec![0.0; n], rows), LpOutcome::Infeasible)
}

/// Distance from `x` to the boundary of `q`, measured along unit row normals.
pub fn boundary_distance(q: &HPolytope, x: &[f64]) -> f64 {
    q.a()
        .iter()
        .zip(q.b())
        .map(|(a, b)| {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ax: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            ((b - ax) / norm).abs()
        })
        .fold(f64::INFINITY, f64::min)
}
