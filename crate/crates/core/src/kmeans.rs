//! Lloyd's k-means with k-means++ seeding.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            seed,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// Fitted centroids, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub k: usize,
    pub dim: usize,
    pub centroids: Vec<f64>,
    /// Within-cluster sum of squares under the final centroids.
    pub inertia: f64,
    pub seed: u64,
    /// Inertia after each assignment step, ending with the final one.
    pub inertia_history: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Squared distance, abandoning early once the partial sum exceeds `bound`.
/// Summation order does not depend on `bound`, so completed results are
/// bit-identical across calls.
#[inline]
fn sq_dist_bounded(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut s = 0.0;
    for (ca, cb) in a.chunks(32).zip(b.chunks(32)) {
        s += sq_dist(ca, cb);
        if s > bound {
            return s;
        }
    }
    s
}

/// Nearest centroid, ties to the lowest index. `hint` is checked first to
/// tighten the early-exit bound.
fn nearest(point: &[f64], centroids: &[f64], dim: usize, hint: usize) -> (usize, f64) {
    let k = centroids.len() / dim;
    let mut best = hint.min(k - 1);
    let mut best_d = sq_dist_bounded(point, &centroids[best * dim..(best + 1) * dim], f64::INFINITY);
    for j in 0..k {
        if j == best {
            continue;
        }
        let d = sq_dist_bounded(point, &centroids[j * dim..(j + 1) * dim], best_d);
        if d < best_d || (d == best_d && j < best) {
            best = j;
            best_d = d;
        }
    }
    (best, best_d)
}

impl KMeansModel {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Index of the closest centroid (squared Euclidean, ties to the lowest index).
    pub fn predict(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim {
            return Err(Error::Shape(format!(
                "point has dimension {}, centroids {}",
                point.len(),
                self.dim
            )));
        }
        Ok(nearest(point, &self.centroids, self.dim, 0).0)
    }
}

fn assign_all(data: &[f64], dim: usize, centroids: &[f64], labels: &mut [usize], dists: &mut [f64]) {
    data.par_chunks(dim)
        .zip(labels.par_iter_mut())
        .zip(dists.par_iter_mut())
        .for_each(|((p, l), d)| {
            let (j, dd) = nearest(p, centroids, dim, *l);
            *l = j;
            *d = dd;
        });
}

fn kmeans_pp(data: &[f64], dim: usize, k: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&data[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = data.par_chunks(dim).map(|p| sq_dist(p, &centroids[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            // guard against landing on a zero-weight tail through rounding
            if d2[idx] == 0.0 {
                idx = d2.iter().rposition(|&w| w > 0.0).unwrap_or(idx);
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = data[pick * dim..(pick + 1) * dim].to_vec();
        d2.par_iter_mut()
            .zip(data.par_chunks(dim))
            .for_each(|(d, p)| *d = d.min(sq_dist(p, &c)));
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Fits `params.k` centroids to row-major `data` of dimension `dim`.
pub fn fit_kmeans(data: &[f64], dim: usize, params: &KMeansParams) -> Result<KMeansModel> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(Error::Shape(format!(
            "{} values do not form rows of dimension {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    let k = params.k;
    if k == 0 {
        return Err(Error::Config("k-means needs at least one cluster".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot form {k} clusters"
        )));
    }

    let mut rng = rng::rng(params.seed);
    let mut centroids = kmeans_pp(data, dim, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let mut history = Vec::new();

    for _ in 0..params.max_iter {
        assign_all(data, dim, &centroids, &mut labels, &mut dists);
        history.push(dists.iter().sum::<f64>());

        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &l) in data.chunks(dim).zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        // empty clusters take the points currently worst served
        let mut taken = vec![false; n];
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| !taken[i])
                .fold(None, |acc: Option<usize>, i| match acc {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                })
                .expect("n >= k");
            taken[far] = true;
            sums[j * dim..(j + 1) * dim].copy_from_slice(&data[far * dim..(far + 1) * dim]);
            counts[j] = 1;
        }
        let mut shift = 0.0f64;
        for j in 0..k {
            let inv = 1.0 / counts[j] as f64;
            let row = &mut sums[j * dim..(j + 1) * dim];
            row.iter_mut().for_each(|v| *v *= inv);
            shift = shift.max(sq_dist(row, &centroids[j * dim..(j + 1) * dim]));
        }
        centroids = sums;
        if shift.sqrt() <= params.tol {
            break;
        }
    }
    assign_all(data, dim, &centroids, &mut labels, &mut dists);
    let inertia = dists.iter().sum::<f64>();
    history.push(inertia);

    Ok(KMeansModel {
        k,
        dim,
        centroids,
        inertia,
        seed: params.seed,
        inertia_history: history,
    })
}

/// Convenience wrapper over a slice of equal-length rows.
pub fn fit_kmeans_rows(points: &[Vec<f64>], params: &KMeansParams) -> Result<KMeansModel> {
    let dim = points.first().map_or(0, |p| p.len());
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points have differing dimensions".into()));
    }
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    if points.len() < params.k {
        return Err(Error::InsufficientData(format!(
            "{} points cannot form {} clusters",
            points.len(),
            params.k
        )));
    }
    fit_kmeans(&flat, dim, params)
}
