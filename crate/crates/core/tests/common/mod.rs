//! Shared helpers for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use repdyn::FeatureMatrix;

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn features<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> FeatureMatrix {
    FeatureMatrix::new(uniform_matrix(rng, rows, cols)).unwrap()
}

/// Random symmetric positive definite matrix `A Aᵀ + shift · I`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, shift: f64) -> DMatrix<f64> {
    let a = uniform_matrix(rng, n, n);
    &a * a.transpose() + DMatrix::identity(n, n) * shift
}

/// Random orthogonal matrix from the QR factorization of a uniform matrix.
pub fn random_rotation<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    uniform_matrix(rng, n, n).qr().q()
}

/// Per-entry `|a - f| / max(|a|, |f|, floor)` against central differences of
/// `loss` with respect to every entry of `x`.
pub fn max_relative_fd_error(
    x: &DMatrix<f64>,
    analytic: &DMatrix<f64>,
    step: f64,
    floor: f64,
    loss: impl Fn(&DMatrix<f64>) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for idx in 0..x.len() {
        let mut up = x.clone();
        up[idx] += step;
        let mut down = x.clone();
        down[idx] -= step;
        let fd = (loss(&up) - loss(&down)) / (2.0 * step);
        let a = analytic[idx];
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(floor));
    }
    worst
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Digamma at positive integers `1..=n`: `ψ(m) = -γ + H_{m-1}`.
fn digamma_table(n: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut table = vec![f64::NAN; n + 1];
    let mut harmonic = 0.0;
    for m in 1..=n {
        table[m] = -EULER_GAMMA + harmonic;
        harmonic += 1.0 / m as f64;
    }
    table
}

/// Kraskov–Stögbauer–Grassberger estimator (first variant, max norm) of the
/// mutual information between two scalar samples.
pub fn ksg_mutual_information(x: &[f64], y: &[f64], k: usize) -> f64 {
    let n = x.len();
    let psi = digamma_table(n);
    let digamma_int = |m: usize| psi[m];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys_by_x: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut y_sorted = y.to_vec();
    y_sorted.sort_by(f64::total_cmp);

    // Strictly-inside counts via binary search on the sorted marginals.
    let count_within = |sorted: &[f64], c: f64, eps: f64| {
        let lo = sorted.partition_point(|&v| v <= c - eps);
        let hi = sorted.partition_point(|&v| v < c + eps);
        hi - lo - 1
    };

    let mut acc = 0.0;
    for p in 0..n {
        let (xp, yp) = (xs[p], ys_by_x[p]);
        // k smallest max-norm distances, scanning outward in x order.
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let consider = |q: usize, best: &mut Vec<f64>| {
            let d = (xs[q] - xp).abs().max((ys_by_x[q] - yp).abs());
            let pos = best.partition_point(|&b| b < d);
            if pos < k {
                best.insert(pos, d);
                best.truncate(k);
            }
        };
        let (mut lo, mut hi) = (p, p);
        loop {
            let bound = if best.len() == k { best[k - 1] } else { f64::INFINITY };
            let left = lo.checked_sub(1).filter(|&q| xp - xs[q] < bound);
            let right = Some(hi + 1).filter(|&q| q < n && xs[q] - xp < bound);
            match (left, right) {
                (None, None) => break,
                (Some(l), _) => {
                    consider(l, &mut best);
                    lo = l;
                    if let Some(r) = right {
                        consider(r, &mut best);
                        hi = r;
                    }
                }
                (None, Some(r)) => {
                    consider(r, &mut best);
                    hi = r;
                }
            }
        }
        let eps = best[k - 1];
        let nx = count_within(&xs, xp, eps);
        let ny = count_within(&y_sorted, yp, eps);
        acc += digamma_int(nx + 1) + digamma_int(ny + 1);
    }
    digamma_int(k) + digamma_int(n) - acc / n as f64
}
