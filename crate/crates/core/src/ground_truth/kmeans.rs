//! Lloyd's k-means with k-means++ seeding over standardized features.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulator::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence tolerance on the largest centroid movement.
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest-inertia run wins.
    pub n_init: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            max_iter: 300,
            tol: 1e-4,
            n_init: 4,
        }
    }
}

/// Per-feature z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Population mean/std per feature; constant features get std 1.
    pub fn fit(points: &[Vec<T>]) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("no points to standardize"))?;
        let dim = first.len();
        let n = T::from_usize_lossy(points.len());
        let mut mean = vec![T::zero(); dim];
        for p in points {
            if p.len() != dim {
                return Err(Error::InvalidParameter("ragged feature vectors".into()));
            }
            for (m, &v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for p in points {
            for ((acc, &v), &m) in var.iter_mut().zip(p).zip(&mean) {
                let d = v - m;
                *acc += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > T::epsilon() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, point: &[T]) -> Vec<T> {
        point
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Index and squared distance of the nearest centroid (lowest index on ties).
pub fn nearest<T: Scalar>(point: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<T> {
    pub centroids: Vec<Vec<T>>,
    pub assignments: Vec<usize>,
    /// Squared distance of each point to its centroid.
    pub sq_dists: Vec<T>,
    pub inertia: T,
    pub iterations: usize,
}

/// Clusters already-standardized points.
pub fn kmeans<T: Scalar>(points: &[Vec<T>], params: &KMeansParams) -> Result<KMeansFit<T>> {
    if params.k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if points.len() < params.k {
        return Err(Error::Insufficient {
            what: "profiles",
            needed: params.k,
            got: points.len(),
        });
    }
    let mut best: Option<KMeansFit<T>> = None;
    for run in 0..params.n_init.max(1) {
        let fit = lloyd(points, params, run as u64);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one run"))
}

fn plus_plus_init<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64, run: u64) -> Vec<Vec<T>> {
    let mut rng = stream_rng(seed, run, 0x6b6d);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]).to_f64_lossy())
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c).to_f64_lossy());
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd<T: Scalar>(points: &[Vec<T>], params: &KMeansParams, run: u64) -> KMeansFit<T> {
    let k = params.k;
    let dim = points[0].len();
    let tol = T::from_f64_lossy(params.tol);
    let mut centroids = plus_plus_init(points, k, params.seed, run);
    let mut assignments = vec![0usize; points.len()];
    let mut sq_dists = vec![T::zero(); points.len()];
    let mut iterations = 0;

    for iter in 0..params.max_iter {
        iterations = iter + 1;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignments[i] = c;
            sq_dists[i] = d;
        }
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, &v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                let n = T::from_usize_lossy(counts[c]);
                next[c] = sums[c].iter().map(|&s| s / n).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = sq_dists
                    .iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc })
                    .0;
                next[c] = points[far].clone();
                sq_dists[far] = T::zero();
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(T::zero(), |a, b| a.max(b));
        centroids = next;
        if shift <= tol {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest(p, &centroids);
        assignments[i] = c;
        sq_dists[i] = d;
    }
    let inertia = sq_dists.iter().copied().sum();
    KMeansFit {
        centroids,
        assignments,
        sq_dists,
        inertia,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (label, center) in [(0usize, -5.0), (1, 5.0)] {
            for _ in 0..50 {
                pts.push((0..4).map(|_| center + noise.sample(&mut rng)).collect());
                labels.push(label);
            }
        }
        (pts, labels)
    }

    #[test]
    fn separates_two_blobs() {
        let (pts, labels) = blobs(3);
        let fit = kmeans(&pts, &KMeansParams::default()).unwrap();
        for (a, l) in fit.assignments.iter().zip(&labels) {
            let first = fit.assignments[if *l == 0 { 0 } else { 50 }];
            assert_eq!(*a, first);
        }
        assert_ne!(fit.assignments[0], fit.assignments[50]);
    }

    #[test]
    fn identical_points() {
        let pts = vec![vec![1.5, -2.0, 3.0]; 7];
        let params = KMeansParams {
            k: 1,
            ..Default::default()
        };
        let fit = kmeans(&pts, &params).unwrap();
        assert_eq!(fit.inertia, 0.0);
        assert_eq!(fit.centroids[0], vec![1.5, -2.0, 3.0]);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![1.0]];
        assert!(matches!(
            kmeans(&pts, &KMeansParams::default()),
            Err(Error::Insufficient { needed: 2, got: 1, .. })
        ));
    }

    #[test]
    fn deterministic() {
        let (pts, _) = blobs(11);
        let a = kmeans(&pts, &KMeansParams::default()).unwrap();
        let b = kmeans(&pts, &KMeansParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn standardizer_constant_feature() {
        let pts = vec![vec![1.0, 2.0], vec![1.0, 4.0]];
        let s = Standardizer::fit(&pts).unwrap();
        assert_eq!(s.std[0], 1.0);
        assert_eq!(s.apply(&[1.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(s.apply(&[1.0, 4.0]), vec![0.0, 1.0]);
    }
}
