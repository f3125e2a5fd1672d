//! Choosing the latent dimensionality: line search over K, and grid or greedy
//! search over (K, L), each candidate scored on its best-of-restarts fit.

use std::collections::HashMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{fit, Engine, Fit, FitSpec, Rank};
use crate::error::{invalid, Error, Result};
use crate::observed::ObservedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
    Mse,
    Elbo,
}

impl Criterion {
    /// Orientation-free score where lower is better.
    fn loss(self, value: f64) -> f64 {
        match self {
            Criterion::Elbo => -value,
            _ => value,
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "mse" => Ok(Criterion::Mse),
            "elbo" => Ok(Criterion::Elbo),
            _ => Err(invalid(format!("unknown criterion {s:?}; expected aic, bic, mse or elbo"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    Line,
    Grid,
    Greedy,
}

impl FromStr for SearchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" => Ok(SearchKind::Line),
            "grid" => Ok(SearchKind::Grid),
            "greedy" => Ok(SearchKind::Greedy),
            _ => Err(invalid(format!("unknown search {s:?}; expected line, grid or greedy"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub k_values: Vec<usize>,
    /// Present for tri-factorisation searches.
    pub l_values: Option<Vec<usize>>,
    pub restarts: usize,
    pub criterion: Criterion,
    pub fit: FitSpec,
    pub seed: u64,
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        check_values("k_values", &self.k_values)?;
        if let Some(l) = &self.l_values {
            check_values("l_values", l)?;
        }
        if self.restarts == 0 {
            return Err(invalid("restarts must be at least 1"));
        }
        if self.criterion == Criterion::Elbo && self.fit.engine != Engine::Vb {
            return Err(invalid("the ELBO criterion needs the vb engine"));
        }
        Ok(())
    }

    /// The same spec with K and L sorted ascending and deduplicated.
    pub fn canonical(&self) -> Self {
        let sort = |v: &[usize]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        Self {
            k_values: sort(&self.k_values),
            l_values: self.l_values.as_deref().map(sort),
            ..self.clone()
        }
    }
}

fn check_values(what: &str, v: &[usize]) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(format!("{what} is empty")));
    }
    if v.contains(&0) {
        return Err(invalid(format!("{what} must be at least 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rank: Rank,
    pub criterion: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Rank,
    pub criterion: Criterion,
    pub evaluated: Vec<Evaluation>,
    /// Visited points, greedy search only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<Rank>,
}

impl SearchResult {
    pub fn best_evaluation(&self) -> &Evaluation {
        self.evaluated
            .iter()
            .find(|e| e.rank == self.best)
            .expect("best rank is always evaluated")
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for restart `r` of a fit at `rank`: the base seed plus the restart
/// index, offset by a hash of the dimensions.
pub fn restart_seed(base: u64, rank: Rank, r: usize) -> u64 {
    let (k, l) = match rank {
        Rank::Nmf { k } => (k as u64, 0),
        Rank::Nmtf { k, l } => (k as u64, l as u64),
    };
    base.wrapping_add(r as u64)
        .wrapping_add(splitmix64((k << 32) ^ l))
}

/// Runs `restarts` fits from distinct seeds and keeps the one with the highest
/// training log-likelihood (earliest restart on ties).
pub fn restart_fit(data: &ObservedMatrix, rank: Rank, spec: &FitSpec, restarts: usize, seed: u64) -> Result<Fit> {
    if restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    let fits: Vec<Fit> = (0..restarts)
        .into_par_iter()
        .map(|r| fit(data, rank, spec, restart_seed(seed, rank, r)))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, Fit)> = None;
    for f in fits {
        let ll = f.log_likelihood(data);
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, f));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn score(data: &ObservedMatrix, rank: Rank, spec: &SearchSpec) -> Result<Evaluation> {
    let f = restart_fit(data, rank, &spec.fit, spec.restarts, spec.seed)?;
    let q = f.quality(data)?;
    let criterion = match spec.criterion {
        Criterion::Aic => q.aic,
        Criterion::Bic => q.bic,
        Criterion::Mse => q.mse,
        Criterion::Elbo => q.elbo.ok_or_else(|| invalid("the ELBO criterion needs the vb engine"))?,
    };
    Ok(Evaluation {
        rank,
        criterion,
        loglik: q.loglik,
    })
}

/// Lowest loss wins; ties go to the earlier entry, which for ascending
/// candidate lists is the smaller dimensionality.
fn pick_best(evals: &[Evaluation], criterion: Criterion) -> Rank {
    let mut best = &evals[0];
    for e in &evals[1..] {
        if criterion.loss(e.criterion) < criterion.loss(best.criterion) {
            best = e;
        }
    }
    best.rank
}

fn exhaustive(data: &ObservedMatrix, ranks: Vec<Rank>, spec: &SearchSpec) -> Result<SearchResult> {
    let evaluated: Vec<Evaluation> = ranks
        .into_par_iter()
        .map(|r| score(data, r, spec))
        .collect::<Result<_>>()?;
    Ok(SearchResult {
        best: pick_best(&evaluated, spec.criterion),
        criterion: spec.criterion,
        evaluated,
        path: Vec::new(),
    })
}

/// Evaluates every K in `k_values` for the two-factor model.
pub fn line_search(data: &ObservedMatrix, spec: &SearchSpec) -> Result<SearchResult> {
    spec.validate()?;
    if spec.l_values.is_some() {
        return Err(invalid("line search takes k_values only"));
    }
    let spec = spec.canonical();
    let ranks = spec.k_values.iter().map(|&k| Rank::Nmf { k }).collect();
    exhaustive(data, ranks, &spec)
}

fn grid_values(spec: &SearchSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let spec = spec.canonical();
    let l = spec
        .l_values
        .ok_or_else(|| invalid("grid and greedy search need l_values"))?;
    Ok((spec.k_values, l))
}

/// Evaluates every (K, L) pair for the tri-factor model.
pub fn grid_search(data: &ObservedMatrix, spec: &SearchSpec) -> Result<SearchResult> {
    let (ks, ls) = grid_values(spec)?;
    let ranks = ks
        .iter()
        .flat_map(|&k| ls.iter().map(move |&l| Rank::Nmtf { k, l }))
        .collect();
    exhaustive(data, ranks, spec)
}

/// Greedy ascent over the (K, L) grid from its smallest corner.
pub fn greedy_search(data: &ObservedMatrix, spec: &SearchSpec) -> Result<SearchResult> {
    let (ks, ls) = grid_values(spec)?;
    greedy_over(&ks, &ls, spec.criterion, |batch| {
        batch
            .par_iter()
            .map(|&(k, l)| score(data, Rank::Nmtf { k, l }, spec))
            .collect()
    })
}

/// The greedy procedure against an arbitrary batch evaluator, which receives
/// the not-yet-scored (K, L) points of each step.
///
/// From the current point the up to three successors one grid step larger in
/// K, L, or both are scored; the walk moves to the best of them only if it
/// strictly improves on the current point. Each point is scored at most once.
pub fn greedy_over(
    ks: &[usize],
    ls: &[usize],
    criterion: Criterion,
    mut evaluate: impl FnMut(&[(usize, usize)]) -> Result<Vec<Evaluation>>,
) -> Result<SearchResult> {
    if ks.is_empty() || ls.is_empty() {
        return Err(invalid("greedy search needs nonempty K and L lists"));
    }
    let mut cache: HashMap<(usize, usize), Evaluation> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut lookup = |points: &[(usize, usize)],
                      cache: &mut HashMap<(usize, usize), Evaluation>,
                      order: &mut Vec<(usize, usize)>|
     -> Result<()> {
        let fresh: Vec<(usize, usize)> = points.iter().copied().filter(|p| !cache.contains_key(p)).collect();
        if fresh.is_empty() {
            return Ok(());
        }
        let evals = evaluate(&fresh)?;
        for (p, e) in fresh.into_iter().zip(evals) {
            cache.insert(p, e);
            order.push(p);
        }
        Ok(())
    };

    let (mut ki, mut li) = (0usize, 0usize);
    lookup(&[(ks[0], ls[0])], &mut cache, &mut order)?;
    let mut path = vec![Rank::Nmtf { k: ks[0], l: ls[0] }];
    loop {
        let mut succ = Vec::new();
        for (dk, dl) in [(0, 1), (1, 0), (1, 1)] {
            if ki + dk < ks.len() && li + dl < ls.len() {
                succ.push((ki + dk, li + dl));
            }
        }
        if succ.is_empty() {
            break;
        }
        let points: Vec<(usize, usize)> = succ.iter().map(|&(a, b)| (ks[a], ls[b])).collect();
        lookup(&points, &mut cache, &mut order)?;
        let current = criterion.loss(cache[&(ks[ki], ls[li])].criterion);
        // Smaller (K, L) first so equal successors resolve toward parsimony.
        succ.sort_by_key(|&(a, b)| (ks[a], ls[b]));
        let mut best: Option<((usize, usize), f64)> = None;
        for (a, b) in succ {
            let loss = criterion.loss(cache[&(ks[a], ls[b])].criterion);
            if best.is_none_or(|(_, bl)| loss < bl) {
                best = Some(((a, b), loss));
            }
        }
        match best {
            Some(((a, b), loss)) if loss < current => {
                ki = a;
                li = b;
                path.push(Rank::Nmtf { k: ks[a], l: ls[b] });
            }
            _ => break,
        }
    }
    let evaluated: Vec<Evaluation> = order.iter().map(|p| cache[p]).collect();
    Ok(SearchResult {
        best: Rank::Nmtf { k: ks[ki], l: ls[li] },
        criterion,
        evaluated,
        path,
    })
}

pub fn run_search(data: &ObservedMatrix, kind: SearchKind, spec: &SearchSpec) -> Result<SearchResult> {
    match kind {
        SearchKind::Line => line_search(data, spec),
        SearchKind::Grid => grid_search(data, spec),
        SearchKind::Greedy => greedy_search(data, spec),
    }
}
