//! Extreme eigenvalues over `m`-column principal submatrices.

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use crate::diagnostics::CovarianceSnapshot;
use crate::error::{Error, Result};

const EXACT_LIMIT: f64 = 1e4;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn extremes(snap: &CovarianceSnapshot, idx: &[usize]) -> (f64, f64) {
    if idx.len() == 1 {
        let v = snap.at(idx[0], idx[0]);
        return (v, v);
    }
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |i, j| snap.at(idx[i], idx[j]));
    let eig = sub.symmetric_eigenvalues();
    (eig.min(), eig.max())
}

/// `(ρ_min(m), ρ_max(m))` of the snapshot. All `C(d, m)` subsets are enumerated
/// when there are at most 10⁴ of them; otherwise `n_samples` random subsets are
/// probed together with greedy subsets seeded at the largest and smallest
/// diagonal entries, so the result brackets the true pair from inside.
pub fn sparse_eigen_probe<R: Rng + ?Sized>(
    snap: &CovarianceSnapshot,
    m: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let d = snap.dim();
    if m == 0 || m > d {
        return Err(Error::Config(format!("sparse eigenvalue size m={m} must lie in [1, {d}]")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut visit = |idx: &[usize]| {
        let (a, b) = extremes(snap, idx);
        lo = lo.min(a);
        hi = hi.max(b);
    };
    if binomial(d, m) <= EXACT_LIMIT {
        for idx in (0..d).combinations(m) {
            visit(&idx);
        }
    } else {
        for _ in 0..n_samples {
            let mut idx = sample(rng, d, m).into_vec();
            idx.sort_unstable();
            visit(&idx);
        }
        let diag: Vec<f64> = (0..d).map(|i| snap.at(i, i)).collect();
        let by_diag: Vec<usize> = (0..d).sorted_by(|&a, &b| diag[a].total_cmp(&diag[b])).collect();
        visit(&greedy_set(snap, by_diag[d - 1], m, true));
        visit(&greedy_set(snap, by_diag[0], m, false));
    }
    Ok((lo, hi))
}

/// Grows a set from `seed`, each step adding the coordinate with the largest
/// (`up`) or smallest absolute coupling to the current set.
fn greedy_set(snap: &CovarianceSnapshot, seed: usize, m: usize, up: bool) -> Vec<usize> {
    let d = snap.dim();
    let mut set = vec![seed];
    while set.len() < m {
        let score = |j: usize| snap.at(j, j) + set.iter().map(|&i| snap.at(i, j).abs()).sum::<f64>();
        let pick = (0..d)
            .filter(|j| !set.contains(j))
            .reduce(|a, b| {
                let better = if up { score(b) > score(a) } else { score(b) < score(a) };
                if better {
                    b
                } else {
                    a
                }
            })
            .expect("m <= d");
        set.push(pick);
    }
    set.sort_unstable();
    set
}
