//! Soft dynamic time warping between two multichannel sequences.
//!
//! Sequences are flat slices of `dim`-dimensional points. The step cost is
//! the squared Euclidean distance between points; the accumulated cost uses
//! the smoothed minimum
//!
//! ```text
//! softmin_γ(a, b, c) = -γ · log(e^{-a/γ} + e^{-b/γ} + e^{-c/γ})
//! ```
//!
//! evaluated with a max-shift so that tiny `γ` stays finite. The forward pass
//! keeps the normalized soft-min weights of every cell, which makes the
//! backward recursion a weighted sum with no further exponentials.

use crate::error::{Error, Result};

/// Value and gradients of one soft-DTW evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftDtwOutput {
    pub value: f64,
    pub grad_a: Vec<f64>,
    pub grad_b: Vec<f64>,
}

struct Table {
    n: usize,
    m: usize,
    /// Accumulated costs, `(n + 1) x (m + 1)`, row-major.
    r: Vec<f64>,
    /// Soft-min weights of (diagonal, up, left) per cell `(i, j)`, 1-based.
    weights: Vec<[f64; 3]>,
}

fn validate(a: &[f64], b: &[f64], dim: usize, gamma: f64) -> Result<(usize, usize)> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("soft-DTW gamma must be positive, got {gamma}")));
    }
    if dim == 0 || a.is_empty() || b.is_empty() || a.len() % dim != 0 || b.len() % dim != 0 {
        return Err(Error::shape("soft-DTW sequences", &[dim], &[a.len(), b.len()]));
    }
    Ok((a.len() / dim, b.len() / dim))
}

fn forward(a: &[f64], b: &[f64], dim: usize, gamma: f64, n: usize, m: usize) -> Table {
    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        let pa = &a[i * dim..(i + 1) * dim];
        for j in 0..m {
            let pb = &b[j * dim..(j + 1) * dim];
            cost[i * m + j] = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
        }
    }
    let w = m + 1;
    let mut r = vec![f64::INFINITY; (n + 1) * w];
    r[0] = 0.0;
    let mut weights = vec![[0.0; 3]; (n + 1) * w];
    let inv_gamma = 1.0 / gamma;
    // anti-diagonal sweep: cells of one diagonal are independent
    for d in 2..=n + m {
        for i in d.saturating_sub(m).max(1)..=(d - 1).min(n) {
            let j = d - i;
            let cand = [r[(i - 1) * w + j - 1], r[(i - 1) * w + j], r[i * w + j - 1]];
            let arg = if cand[0] <= cand[1] && cand[0] <= cand[2] {
                0
            } else if cand[1] <= cand[2] {
                1
            } else {
                2
            };
            let lo = cand[arg];
            let mut e = [1.0; 3];
            let mut sum = 1.0;
            for k in 0..3 {
                if k != arg {
                    // exp(-inf) = 0 for missing predecessors
                    e[k] = ((lo - cand[k]) * inv_gamma).exp();
                    sum += e[k];
                }
            }
            let soft = lo - gamma * sum.ln();
            r[i * w + j] = cost[(i - 1) * m + j - 1] + soft;
            weights[i * w + j] = [e[0] / sum, e[1] / sum, e[2] / sum];
        }
    }
    Table { n, m, r, weights }
}

/// Soft-DTW discrepancy of `a` and `b`.
pub fn soft_dtw(a: &[f64], b: &[f64], dim: usize, gamma: f64) -> Result<f64> {
    let (n, m) = validate(a, b, dim, gamma)?;
    let t = forward(a, b, dim, gamma, n, m);
    Ok(t.r[n * (m + 1) + m])
}

/// Soft-DTW discrepancy with its exact gradient for both sequences.
pub fn soft_dtw_with_grad(a: &[f64], b: &[f64], dim: usize, gamma: f64) -> Result<SoftDtwOutput> {
    let (n, m) = validate(a, b, dim, gamma)?;
    let t = forward(a, b, dim, gamma, n, m);
    let e = alignment(&t);
    let w = m + 1;
    let mut grad_a = vec![0.0; a.len()];
    let mut grad_b = vec![0.0; b.len()];
    for i in 0..n {
        for j in 0..m {
            let eij = e[(i + 1) * w + j + 1];
            if eij == 0.0 {
                continue;
            }
            for d in 0..dim {
                let diff = 2.0 * eij * (a[i * dim + d] - b[j * dim + d]);
                grad_a[i * dim + d] += diff;
                grad_b[j * dim + d] -= diff;
            }
        }
    }
    Ok(SoftDtwOutput {
        value: t.r[n * w + m],
        grad_a,
        grad_b,
    })
}

/// Expected alignment matrix `∂R(n, m) / ∂cost(i, j)`, `n x m` row-major.
pub fn soft_alignment(a: &[f64], b: &[f64], dim: usize, gamma: f64) -> Result<Vec<f64>> {
    let (n, m) = validate(a, b, dim, gamma)?;
    let t = forward(a, b, dim, gamma, n, m);
    let e = alignment(&t);
    let w = m + 1;
    Ok((0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| e[(i + 1) * w + j + 1]).collect())
}

fn alignment(t: &Table) -> Vec<f64> {
    let (n, m) = (t.n, t.m);
    let w = m + 1;
    let mut e = vec![0.0; (n + 1) * w];
    e[n * w + m] = 1.0;
    for d in (2..=n + m).rev() {
        for i in d.saturating_sub(m).max(1)..=(d - 1).min(n) {
            let j = d - i;
            if i == n && j == m {
                continue;
            }
            let mut acc = 0.0;
            if i < n && j < m {
                acc += e[(i + 1) * w + j + 1] * t.weights[(i + 1) * w + j + 1][0];
            }
            if i < n {
                acc += e[(i + 1) * w + j] * t.weights[(i + 1) * w + j][1];
            }
            if j < m {
                acc += e[i * w + j + 1] * t.weights[i * w + j + 1][2];
            }
            e[i * w + j] = acc;
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_gamma_and_shapes() {
        assert!(soft_dtw(&[0.0, 0.0], &[0.0, 0.0], 2, 0.0).is_err());
        assert!(soft_dtw(&[0.0, 0.0], &[0.0, 0.0], 2, -1.0).is_err());
        assert!(soft_dtw(&[], &[0.0, 0.0], 2, 0.1).is_err());
        assert!(soft_dtw(&[0.0, 0.0, 1.0], &[0.0, 0.0], 2, 0.1).is_err());
    }

    #[test]
    fn single_points_reduce_to_squared_distance() {
        let v = soft_dtw(&[1.0, 2.0], &[0.0, 0.0], 2, 0.5).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6];
        let b = [0.0, 0.1, 0.2, 0.2, -0.1, 0.3, 0.7, 0.7];
        let ab = soft_dtw(&a, &b, 2, 0.1).unwrap();
        let ba = soft_dtw(&b, &a, 2, 0.1).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn tiny_gamma_stays_finite() {
        let a = [0.0, 1.0, 2.0, 3.0];
        let b = [5.0, -4.0, 3.0];
        let out = soft_dtw_with_grad(&a, &b, 1, 1e-9).unwrap();
        assert!(out.value.is_finite());
        assert!(out.grad_a.iter().chain(&out.grad_b).all(|g| g.is_finite()));
    }

    #[test]
    fn alignment_of_identical_short_sequences_is_diagonal_at_low_gamma() {
        let a = [0.0, 1.0, 3.0];
        let e = soft_alignment(&a, &a, 1, 1e-3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((e[i * 3 + j] - expected).abs() < 1e-6);
            }
        }
    }
}
