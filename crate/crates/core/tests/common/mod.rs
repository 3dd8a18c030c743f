//! Reference implementations written independently of the library code.
#![allow(dead_code)]

/// Classic dynamic time warping with squared Euclidean point cost.
pub fn hard_dtw(a: &[f64], b: &[f64], dim: usize) -> f64 {
    let (n, m) = (a.len() / dim, b.len() / dim);
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let cost: f64 = (0..dim).map(|k| (a[(i - 1) * dim + k] - b[(j - 1) * dim + k]).powi(2)).sum();
            d[i][j] = cost + d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
        }
    }
    d[n][m]
}

fn far_frr(genuine: &[f64], imposter: &[f64], t: f64) -> (f64, f64) {
    let far = imposter.iter().filter(|s| **s >= t).count() as f64 / imposter.len() as f64;
    let frr = genuine.iter().filter(|s| **s < t).count() as f64 / genuine.len() as f64;
    (far, frr)
}

fn distinct_thresholds(genuine: &[f64], imposter: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = Vec::new();
    for s in genuine.iter().chain(imposter) {
        if !t.contains(s) {
            t.push(*s);
        }
    }
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t
}

/// EER by exhaustive threshold sweep with linear interpolation between the
/// two thresholds that bracket the FAR/FRR crossing. Beyond the largest
/// score FAR is 0 and FRR is 1.
pub fn eer_oracle(genuine: &[f64], imposter: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = distinct_thresholds(genuine, imposter)
        .into_iter()
        .map(|t| far_frr(genuine, imposter, t))
        .collect();
    pts.push((0.0, 1.0));
    for k in 0..pts.len() {
        let (far, frr) = pts[k];
        if far <= frr {
            if k == 0 {
                return (far + frr) / 2.0;
            }
            let (pf, pr) = pts[k - 1];
            let (d0, d1) = (pf - pr, far - frr);
            let w = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
            return pf + w * (far - pf);
        }
    }
    unreachable!("the closing point always satisfies FAR <= FRR")
}

/// (FAR, TAR) for the origin followed by every distinct threshold in
/// descending order.
pub fn roc_oracle(genuine: &[f64], imposter: &[f64]) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0)];
    for t in distinct_thresholds(genuine, imposter).into_iter().rev() {
        let (far, frr) = far_frr(genuine, imposter, t);
        out.push((far, 1.0 - frr));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank-1 rate over unit vectors: each probe goes to the set of templates
/// with maximal similarity, and the smallest subject id of that set wins.
pub fn rank1_oracle(templates: &[(u32, Vec<f64>)], probes: &[(u32, Vec<f64>)]) -> f64 {
    let mut correct = 0;
    let mut total = 0;
    for (subject, p) in probes {
        if !templates.iter().any(|(t, _)| t == subject) {
            continue;
        }
        total += 1;
        let sims: Vec<(u32, f64)> = templates.iter().map(|(t, v)| (*t, dot(v, p).clamp(-1.0, 1.0))).collect();
        let best = sims.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let winner = sims.iter().filter(|s| s.1 == best).map(|s| s.0).min().unwrap();
        if winner == *subject {
            correct += 1;
        }
    }
    correct as f64 / total as f64
}
