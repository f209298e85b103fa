use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng as _;

use crate::dense::DenseMatrix;
use crate::error::{contract_err, Result};
use crate::rng::substream;

const TOL: f64 = 1e-6;
const MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix<f64>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &DenseMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().enumerate() {
        let d = sq_dist(p, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(z: &DenseMatrix<f64>, k: usize, rng: &mut crate::rng::Rng) -> DenseMatrix<f64> {
    let n = z.n_rows();
    let mut centroids = DenseMatrix::zeros(k, z.n_cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(z.row(first));
    let mut d2: Vec<f64> = z.rows().map(|p| sq_dist(p, z.row(first))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point already coincides with a centroid
            Err(_) => rng.random_range(0..n),
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, p) in z.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, z.row(pick)));
        }
    }
    centroids
}

fn lloyd(z: &DenseMatrix<f64>, mut centroids: DenseMatrix<f64>) -> KMeansFit {
    let (n, d, k) = (z.n_rows(), z.n_cols(), centroids.n_rows());
    let mut labels = vec![0; n];
    for _ in 0..MAX_ITER {
        let mut dist = vec![0.0; n];
        for (i, p) in z.rows().enumerate() {
            let (c, dd) = nearest(p, &centroids);
            labels[i] = c;
            dist[i] = dd;
        }
        let mut next = DenseMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, p) in z.rows().enumerate() {
            counts[labels[i]] += 1;
            for (acc, &x) in next.row_mut(labels[i]).iter_mut().zip(p) {
                *acc += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed from the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("non-empty input");
                next.row_mut(c).copy_from_slice(z.row(far));
                dist[far] = 0.0;
            } else {
                let inv = 1.0 / counts[c] as f64;
                next.row_mut(c).iter_mut().for_each(|x| *x *= inv);
            }
        }
        let shift = next.max_abs_diff(&centroids);
        centroids = next;
        if shift < TOL {
            break;
        }
    }
    let mut inertia = 0.0;
    for (i, p) in z.rows().enumerate() {
        let (c, dd) = nearest(p, &centroids);
        labels[i] = c;
        inertia += dd;
    }
    KMeansFit {
        labels,
        centroids,
        inertia,
    }
}

/// Best-inertia k-means over `restarts` k-means++ initializations.
pub fn kmeans_fit(z: &DenseMatrix<f64>, classes: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    if classes < 2 {
        return Err(contract_err("kmeans", format!("classes = {classes}")));
    }
    if z.n_rows() < classes {
        return Err(contract_err(
            "kmeans",
            format!("{} points for {classes} clusters", z.n_rows()),
        ));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let mut rng = substream(seed, r as u64, 0, "kmeans");
        let fit = lloyd(z, plus_plus_init(z, classes, &mut rng));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

pub fn kmeans(z: &DenseMatrix<f64>, classes: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_fit(z, classes, restarts, seed)?.labels)
}

/// Sum of squared distances to the per-cluster means of `labels`.
pub fn inertia_of(z: &DenseMatrix<f64>, labels: &[usize], classes: usize) -> f64 {
    let mut sums = DenseMatrix::zeros(classes, z.n_cols());
    let mut counts = vec![0usize; classes];
    for (p, &l) in z.rows().zip(labels) {
        counts[l] += 1;
        for (a, &x) in sums.row_mut(l).iter_mut().zip(p) {
            *a += x;
        }
    }
    for c in 0..classes {
        let inv = 1.0 / counts[c].max(1) as f64;
        sums.row_mut(c).iter_mut().for_each(|x| *x *= inv);
    }
    z.rows().zip(labels).map(|(p, &l)| sq_dist(p, sums.row(l))).sum()
}
