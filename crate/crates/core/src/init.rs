//! k-means initialization shared by all four learners.
//!
//! Scalar k-means with k-means++ seeding; cluster statistics are mapped onto
//! mixture components: the middle cluster becomes the Gaussian, the highest
//! and lowest clusters become the positive and negative activation
//! components through the method of moments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{mom, GaussianParams, MixtureParams, ShapeFamily, Support};
use crate::error::{Error, Result};
use crate::mlem;
use crate::par::Execution;
use crate::responsibilities::Responsibilities;

pub const CLUSTER_VARIANCE_FLOOR: f64 = 1e-6;
pub const MAX_LLOYD_ITERATIONS: usize = 100;
/// Mean and variance of the fallback activation component.
pub const FALLBACK_MOMENT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// Sorted ascending.
    pub centers: Vec<f64>,
    pub assignments: Vec<usize>,
    pub cluster_means: Vec<f64>,
    pub cluster_vars: Vec<f64>,
    pub cluster_counts: Vec<usize>,
    pub iterations: usize,
    /// Fewer distinct values than clusters; some clusters are duplicates.
    pub degenerate: bool,
}

impl KMeansResult {
    /// Within-cluster sum of squared distances to the centers.
    pub fn sse(&self, data: &[f64]) -> f64 {
        data.iter()
            .zip(&self.assignments)
            .map(|(x, &a)| (x - self.centers[a]).powi(2))
            .sum()
    }
}

#[inline]
fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = (x - c).abs();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn plus_plus_seeds(data: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k);
    centers.push(data[rng.random_range(0..data.len())]);
    let mut d2: Vec<f64> = data.iter().map(|x| (x - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            // every point coincides with a chosen center
            let last = *centers.last().unwrap();
            centers.push(last);
            continue;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = data.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            acc += d;
            if acc > target {
                pick = i;
                break;
            }
        }
        let c = data[pick];
        centers.push(c);
        for (d, x) in d2.iter_mut().zip(data) {
            *d = d.min((x - c).powi(2));
        }
    }
    centers
}

/// Lloyd's algorithm on scalars, k-means++ seeded, clusters sorted by center.
pub fn kmeans_1d(data: &[f64], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 || data.len() < k {
        return Err(Error::InvalidInput(format!(
            "k-means needs at least k={k} samples, got {}",
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("k-means input contains non-finite values".into()));
    }
    let first = data[0];
    if data.iter().all(|&x| x == first) {
        // Single distinct value: one cluster, duplicated, everything in the middle.
        let mid = k / 2;
        let mut counts = vec![0; k];
        counts[mid] = data.len();
        return Ok(KMeansResult {
            centers: vec![first; k],
            assignments: vec![mid; data.len()],
            cluster_means: vec![first; k],
            cluster_vars: vec![CLUSTER_VARIANCE_FLOOR; k],
            cluster_counts: counts,
            iterations: 0,
            degenerate: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seeds(data, k, &mut rng);
    let mut assignments: Vec<usize> = data.iter().map(|&x| nearest(&centers, x)).collect();
    let mut iterations = 0;
    for _ in 0..MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (&x, &a) in data.iter().zip(&assignments) {
            sum[a] += x;
            count[a] += 1;
        }
        for j in 0..k {
            if count[j] > 0 {
                centers[j] = sum[j] / count[j] as f64;
            }
        }
        let mut changed = false;
        for (x, a) in data.iter().zip(assignments.iter_mut()) {
            let b = nearest(&centers, *x);
            if b != *a {
                *a = b;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let mut rank = vec![0; k];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    let centers: Vec<f64> = order.iter().map(|&j| centers[j]).collect();
    for a in assignments.iter_mut() {
        *a = rank[*a];
    }

    let mut counts = vec![0usize; k];
    let mut sum = vec![0.0; k];
    for (&x, &a) in data.iter().zip(&assignments) {
        sum[a] += x;
        counts[a] += 1;
    }
    let means: Vec<f64> = (0..k)
        .map(|j| {
            if counts[j] > 0 {
                sum[j] / counts[j] as f64
            } else {
                centers[j]
            }
        })
        .collect();
    let mut ss = vec![0.0; k];
    for (&x, &a) in data.iter().zip(&assignments) {
        ss[a] += (x - means[a]).powi(2);
    }
    let vars = (0..k)
        .map(|j| {
            if counts[j] > 0 {
                (ss[j] / counts[j] as f64).max(CLUSTER_VARIANCE_FLOOR)
            } else {
                CLUSTER_VARIANCE_FLOOR
            }
        })
        .collect();
    let degenerate = counts.contains(&0);
    Ok(KMeansResult {
        centers,
        assignments,
        cluster_means: means,
        cluster_vars: vars,
        cluster_counts: counts,
        iterations,
        degenerate,
    })
}

/// Mixture parameters from a three-cluster k-means result plus the initial
/// responsibilities evaluated under them.
///
/// A side cluster whose mirrored mean is not positive falls back to the
/// moment-matched component with mean and variance [`FALLBACK_MOMENT`].
pub fn init_mixture(
    data: &[f64],
    km: &KMeansResult,
    family: ShapeFamily,
    exec: Execution,
) -> Result<(MixtureParams, Responsibilities)> {
    if km.centers.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "initialization needs 3 clusters, got {}",
            km.centers.len()
        )));
    }
    let total: usize = km.cluster_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidInput("k-means result has no samples".into()));
    }
    let side = |mean: f64, var: f64| {
        if mean > 0.0 && km_var_ok(var) {
            mom(family, mean, var)
        } else {
            mom(family, FALLBACK_MOMENT, FALLBACK_MOMENT)
        }
    };
    let gauss = GaussianParams::from_mean_variance(km.cluster_means[1], km.cluster_vars[1])?;
    let positive = side(km.cluster_means[2], km.cluster_vars[2])?;
    let negative = side(-km.cluster_means[0], km.cluster_vars[0])?.with_support(Support::Negative);
    let pi = [
        km.cluster_counts[1] as f64 / total as f64,
        km.cluster_counts[2] as f64 / total as f64,
        km.cluster_counts[0] as f64 / total as f64,
    ];
    let params = MixtureParams::new(pi, gauss, positive, negative)?;
    let gamma = mlem::e_step(data, &params, exec)?.responsibilities;
    Ok((params, gamma))
}

fn km_var_ok(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_triples() {
        let data = [-5.01, -5.0, -4.99, -0.01, 0.0, 0.01, 4.99, 5.0, 5.01];
        let km = kmeans_1d(&data, 3, 1).unwrap();
        for (c, t) in km.centers.iter().zip([-5.0, 0.0, 5.0]) {
            assert!((c - t).abs() < 1e-9);
        }
        assert_eq!(km.cluster_counts, vec![3, 3, 3]);
        assert!(!km.degenerate);
    }

    #[test]
    fn deterministic_given_seed() {
        let data: Vec<f64> = (0..500).map(|i| ((i * 7919) % 1000) as f64 / 100.0 - 5.0).collect();
        assert_eq!(kmeans_1d(&data, 3, 9).unwrap(), kmeans_1d(&data, 3, 9).unwrap());
    }

    #[test]
    fn constant_data_is_degenerate() {
        let km = kmeans_1d(&[2.0; 10], 3, 0).unwrap();
        assert!(km.degenerate);
        assert_eq!(km.cluster_counts, vec![0, 10, 0]);
        assert_eq!(km.cluster_vars, vec![CLUSTER_VARIANCE_FLOOR; 3]);
    }

    #[test]
    fn too_few_samples() {
        assert!(kmeans_1d(&[1.0, 2.0], 3, 0).is_err());
    }

    #[test]
    fn inverse_gamma_cluster_moments() {
        let km = KMeansResult {
            centers: vec![-3.0, 0.01, 10.0],
            assignments: vec![],
            cluster_means: vec![-3.0, 0.01, 10.0],
            cluster_vars: vec![1.0, 1.0, 10.0],
            cluster_counts: vec![10, 80, 10],
            iterations: 1,
            degenerate: false,
        };
        let data = [-3.0, 0.0, 0.5, 10.0];
        let (p, gamma) = init_mixture(&data, &km, ShapeFamily::InverseGamma, Execution::Sequential)
            .unwrap();
        assert_eq!((p.positive.shape, p.positive.rate), (12.0, 110.0));
        assert_eq!(p.gauss.mu, 0.01);
        assert_eq!(p.gauss.tau, 1.0);
        assert_eq!(p.pi, [0.8, 0.1, 0.1]);
        for r in gamma.rows() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_sign_cluster_falls_back() {
        let km = KMeansResult {
            centers: vec![0.5, 1.0, 3.0],
            assignments: vec![],
            cluster_means: vec![0.5, 1.0, 3.0],
            cluster_vars: vec![0.1, 0.1, 0.5],
            cluster_counts: vec![5, 5, 5],
            iterations: 1,
            degenerate: false,
        };
        let (p, _) = init_mixture(&[0.5, 1.0, 3.0], &km, ShapeFamily::Gamma, Execution::Sequential)
            .unwrap();
        assert_eq!((p.negative.shape, p.negative.rate), (10.0, 1.0));
        assert_eq!(p.negative.support, Support::Negative);
    }
}
