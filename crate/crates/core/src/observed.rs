//! Partially observed matrices, their index sets, and train/test splits.
//!
//! Missing entries are carried as a boolean mask next to the value matrix.
//! The value stored under a masked-out cell is a placeholder and is never
//! read by any engine.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// A real matrix together with its observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix {
    values: Array2<f64>,
    mask: Array2<bool>,
}

impl ObservedMatrix {
    /// Builds a matrix from values and a mask (`true` = observed).
    pub fn new(values: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        if values.dim() != mask.dim() {
            return Err(Error::Shape(format!(
                "values {:?} vs mask {:?}",
                values.dim(),
                mask.dim()
            )));
        }
        let (rows, cols) = values.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix must have at least one row and column".into()));
        }
        let mut observed = 0usize;
        for ((i, j), &m) in mask.indexed_iter() {
            if m {
                if !values[[i, j]].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                observed += 1;
            }
        }
        if observed == 0 {
            return Err(Error::NoObservations);
        }
        // Zero the placeholders so equality and serialization never depend on them.
        let mut values = values;
        for ((i, j), v) in values.indexed_iter_mut() {
            if !mask[[i, j]] {
                *v = 0.0;
            }
        }
        Ok(Self { values, mask })
    }

    pub fn fully_observed(values: Array2<f64>) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), true);
        Self::new(values, mask)
    }

    /// Same values, restricted to `mask`. The new mask must be a subset of the current one.
    pub fn restrict(&self, mask: &Array2<bool>) -> Result<Self> {
        if mask.dim() != self.mask.dim() {
            return Err(Error::Shape("restriction mask has a different shape".into()));
        }
        if mask.iter().zip(self.mask.iter()).any(|(&m, &own)| m && !own) {
            return Err(invalid("restriction mask selects unobserved entries"));
        }
        Self::new(self.values.clone(), mask.clone())
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[[i, j]]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.mask[[i, j]].then(|| self.values[[i, j]])
    }

    pub fn n_observed(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Observed entries in row-major order.
    pub fn observed(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.mask
            .indexed_iter()
            .filter(|(_, &m)| m)
            .map(move |((i, j), _)| (i, j, self.values[[i, j]]))
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.t().to_owned(),
            mask: self.mask.t().to_owned(),
        }
    }

    /// Sample variance of the observed values.
    pub fn observed_variance(&self) -> f64 {
        let n = self.n_observed() as f64;
        let mean = self.observed().map(|(_, _, v)| v).sum::<f64>() / n;
        self.observed().map(|(_, _, v)| (v - mean).powi(2)).sum::<f64>() / n
    }
}

/// Projections of the observed index set onto rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub omega: Vec<(usize, usize)>,
    /// `omega_row[i]` lists the observed column indices of row `i`.
    pub omega_row: Vec<Vec<usize>>,
    /// `omega_col[j]` lists the observed row indices of column `j`.
    pub omega_col: Vec<Vec<usize>>,
}

impl IndexSets {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Rebuilds the boolean mask these index sets were derived from.
    pub fn to_mask(&self, rows: usize, cols: usize) -> Array2<bool> {
        let mut mask = Array2::from_elem((rows, cols), false);
        for &(i, j) in &self.omega {
            mask[[i, j]] = true;
        }
        mask
    }
}

pub fn build_index_sets(m: &ObservedMatrix) -> IndexSets {
    let (rows, cols) = m.dim();
    let mut omega = Vec::with_capacity(m.n_observed());
    let mut omega_row = vec![Vec::new(); rows];
    let mut omega_col = vec![Vec::new(); cols];
    for ((i, j), &obs) in m.mask().indexed_iter() {
        if obs {
            omega.push((i, j));
            omega_row[i].push(j);
            omega_col[j].push(i);
        }
    }
    IndexSets {
        omega,
        omega_row,
        omega_col,
    }
}

/// A disjoint partition of an observation mask into training and test parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_mask: Array2<bool>,
    pub test_mask: Array2<bool>,
}

impl Split {
    fn from_test_indices(m: &ObservedMatrix, test: &[(usize, usize)]) -> Self {
        let mut train_mask = m.mask().clone();
        let mut test_mask = Array2::from_elem(m.dim(), false);
        for &(i, j) in test {
            train_mask[[i, j]] = false;
            test_mask[[i, j]] = true;
        }
        Self {
            train_mask,
            test_mask,
        }
    }

    pub fn n_test(&self) -> usize {
        self.test_mask.iter().filter(|&&m| m).count()
    }

    pub fn n_train(&self) -> usize {
        self.train_mask.iter().filter(|&&m| m).count()
    }

    pub fn train(&self, m: &ObservedMatrix) -> Result<ObservedMatrix> {
        m.restrict(&self.train_mask)
    }
}

fn shuffled_omega(m: &ObservedMatrix, seed: u64) -> Vec<(usize, usize)> {
    let mut omega = build_index_sets(m).omega;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    omega.shuffle(&mut rng);
    omega
}

/// Hides `round(test_fraction * |Ω|)` observed entries chosen uniformly at random.
pub fn random_split(m: &ObservedMatrix, test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(invalid(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n = m.n_observed();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 {
        return Err(Error::EmptySplit("test"));
    }
    if n_test >= n {
        return Err(Error::EmptySplit("train"));
    }
    let omega = shuffled_omega(m, seed);
    Ok(Split::from_test_indices(m, &omega[..n_test]))
}

/// Partitions Ω into `folds` test sets whose sizes differ by at most one.
pub fn kfold_splits(m: &ObservedMatrix, folds: usize, seed: u64) -> Result<Vec<Split>> {
    if folds < 2 {
        return Err(invalid(format!("need at least 2 folds, got {folds}")));
    }
    let n = m.n_observed();
    if folds > n {
        return Err(invalid(format!("{folds} folds but only {n} observed entries")));
    }
    let omega = shuffled_omega(m, seed);
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    let splits = (0..folds)
        .map(|f| {
            let size = base + usize::from(f < extra);
            let split = Split::from_test_indices(m, &omega[start..start + size]);
            start += size;
            split
        })
        .collect();
    Ok(splits)
}
