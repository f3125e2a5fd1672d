//! Lloyd's K-means on the rows or columns of a partially observed matrix,
//! used to seed F and G with cluster indicators.

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::observed::ObservedMatrix;

const MAX_ITERATIONS: usize = 100;

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Cluster labels for the rows of `points`.
///
/// Centres start from a random point followed by repeated farthest-point
/// picks; an empty cluster takes over the point farthest from its centre.
pub fn kmeans<R: Rng + ?Sized>(points: &Array2<f64>, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let mut centres = Array2::zeros((k, points.ncols()));
    centres.row_mut(0).assign(&points.row(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = (0..n).map(|p| sq_dist(points.row(p), centres.row(0))).collect();
    for c in 1..k {
        let far = argmax(&nearest);
        centres.row_mut(c).assign(&points.row(far));
        for (p, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(p), centres.row(c)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for p in 0..n {
            let (best, d) = (0..k)
                .map(|c| (c, sq_dist(points.row(p), centres.row(c))))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            dist[p] = d;
            if labels[p] != best {
                labels[p] = best;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = argmax(&dist);
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                dist[far] = 0.0;
                changed = true;
            }
        }
        centres.fill(0.0);
        for (p, &l) in labels.iter().enumerate() {
            let mut row = centres.row_mut(l);
            row += &points.row(p);
        }
        for (c, &cnt) in counts.iter().enumerate() {
            centres.row_mut(c).mapv_inplace(|x| x / cnt as f64);
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
        .0
}

/// Rows of the data with each missing entry replaced by its column's observed mean.
pub(crate) fn impute_rows(data: &ObservedMatrix) -> Array2<f64> {
    let overall = data.observed().map(|(_, _, v)| v).sum::<f64>() / data.n_observed() as f64;
    let col_means: Vec<f64> = (0..data.cols())
        .map(|j| {
            let (s, n) = (0..data.rows())
                .filter_map(|i| data.get(i, j))
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n > 0 {
                s / n as f64
            } else {
                overall
            }
        })
        .collect();
    Array2::from_shape_fn(data.dim(), |(i, j)| data.get(i, j).unwrap_or(col_means[j]))
}

/// One-hot cluster indicators plus `smoothing`.
pub(crate) fn indicators(labels: &[usize], k: usize, smoothing: f64) -> Array2<f64> {
    let mut out = Array2::from_elem((labels.len(), k), smoothing);
    for (p, &l) in labels.iter().enumerate() {
        out[[p, l]] += 1.0;
    }
    out
}

/// Indicator matrices from clustering rows into K groups and columns into L groups.
pub fn kmeans_init<R: Rng + ?Sized>(
    data: &ObservedMatrix,
    k: usize,
    l: usize,
    smoothing: f64,
    rng: &mut R,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if k > data.rows() || l > data.cols() {
        return Err(invalid(format!(
            "K = {k}, L = {l} exceed the {} rows or {} columns available for clustering",
            data.rows(),
            data.cols()
        )));
    }
    let rows = kmeans(&impute_rows(data), k, rng)?;
    let cols = kmeans(&impute_rows(&data.transpose()), l, rng)?;
    Ok((indicators(&rows, k, smoothing), indicators(&cols, l, smoothing)))
}
