use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Noise, ToySpec};
use crate::engine::{fit, Engine, FitSpec, Rank};
use crate::error::{invalid, Result};
use crate::observed::{kfold_splits, random_split, ObservedMatrix, Split};
use crate::quality::mse;
use crate::selection::{greedy_over, restart_fit, run_search, Evaluation, SearchKind, SearchResult, SearchSpec};
use crate::trace::RunTrace;

/// Test MSE above this multiple of the data variance marks a run as diverged.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

/// Constants an experiment ran under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub rank: Rank,
    pub rows: usize,
    pub cols: usize,
    pub repeats: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    /// `None` when the run failed; see `error`.
    pub test_mse: Option<f64>,
    pub diverged: bool,
    /// Rows plus columns left with no training entries.
    pub empty_lines: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub engine: Engine,
    /// Missing fraction or noise-to-signal ratio.
    pub condition: f64,
    /// Mean over the repeats that completed.
    pub mean_test_mse: Option<f64>,
    pub repeats: Vec<RepeatResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub protocol: Protocol,
    pub conditions: Vec<ConditionResult>,
}

impl ExperimentReport {
    pub fn condition(&self, engine: Engine, condition: f64) -> Option<&ConditionResult> {
        self.conditions
            .iter()
            .find(|c| c.engine == engine && c.condition == condition)
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn condition_result(engine: Engine, condition: f64, repeats: Vec<RepeatResult>) -> ConditionResult {
    ConditionResult {
        engine,
        condition,
        mean_test_mse: mean_of(repeats.iter().filter_map(|r| r.test_mse)),
        repeats,
    }
}

fn protocol(toy: &ToySpec, fit: &FitSpec, repeats: usize, test_fraction: Option<f64>, seed: u64) -> Protocol {
    let g = fit.gibbs_config(seed);
    Protocol {
        rank: toy.rank,
        rows: toy.rows,
        cols: toy.cols,
        repeats,
        iterations: fit.iterations,
        burn_in: g.burn_in,
        thinning: g.thinning,
        test_fraction,
        seed,
    }
}

fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(seed, |acc, &p| acc.wrapping_mul(0x100_0000_01B3).wrapping_add(p + 1))
}

/// Copy of the training data with negative observations replaced by zero,
/// for the multiplicative-update baseline.
fn clip_negative(m: &ObservedMatrix) -> Result<ObservedMatrix> {
    ObservedMatrix::new(m.values().mapv(|x| x.max(0.0)), m.mask().clone())
}

fn count_empty_lines(mask: &ndarray::Array2<bool>) -> usize {
    let rows = mask.rows().into_iter().filter(|r| !r.iter().any(|&m| m)).count();
    let cols = mask.columns().into_iter().filter(|c| !c.iter().any(|&m| m)).count();
    rows + cols
}

/// Fits `engine` on the training part of `split` and scores the held-out part.
fn evaluate_split(
    data: &ObservedMatrix,
    split: &Split,
    rank: Rank,
    spec: &FitSpec,
    seed: u64,
    diverge_at: f64,
) -> RepeatResult {
    let empty_lines = count_empty_lines(&split.train_mask);
    let run = || -> Result<f64> {
        let mut train = split.train(data)?;
        if spec.engine == Engine::Np {
            train = clip_negative(&train)?;
        }
        let f = fit(&train, rank, spec, seed)?;
        mse(&f.prediction, data, &split.test_mask)
    };
    match run() {
        Ok(m) => RepeatResult {
            test_mse: Some(m),
            diverged: !(m <= diverge_at),
            empty_lines,
            error: None,
        },
        Err(e) => RepeatResult {
            test_mse: None,
            diverged: false,
            empty_lines,
            error: Some(e.to_string()),
        },
    }
}

/// One trace per engine on `data`. Each engine is run `timing_repeats` times
/// from the same seed, one after another; the reported wall-clock is the
/// per-iteration mean over those runs.
pub fn convergence_experiment(
    data: &ObservedMatrix,
    engines: &[Engine],
    rank: Rank,
    base: &FitSpec,
    timing_repeats: usize,
    seed: u64,
) -> Result<Vec<RunTrace>> {
    if timing_repeats == 0 {
        return Err(invalid("timing_repeats must be at least 1"));
    }
    let mut traces = Vec::with_capacity(engines.len());
    for &engine in engines {
        let spec = FitSpec { engine, ..*base };
        let clipped;
        let data = if engine == Engine::Np {
            clipped = clip_negative(data)?;
            &clipped
        } else {
            data
        };
        let mut first = fit(data, rank, &spec, seed)?.trace;
        let mut totals: Vec<f64> = first.wall_clock.iter().map(|&(_, t)| t).collect();
        for _ in 1..timing_repeats {
            let again = fit(data, rank, &spec, seed)?.trace;
            for (acc, &(_, t)) in totals.iter_mut().zip(&again.wall_clock) {
                *acc += t;
            }
        }
        for (slot, total) in first.wall_clock.iter_mut().zip(totals) {
            slot.1 = total / timing_repeats as f64;
        }
        traces.push(first);
    }
    Ok(traces)
}

/// For each missing fraction, hides that share of one generated dataset
/// `repeats` times at random and records each engine's test MSE.
pub fn missing_values_experiment(
    toy: &ToySpec,
    fractions: &[f64],
    repeats: usize,
    engines: &[Engine],
    base: &FitSpec,
    seed: u64,
) -> Result<ExperimentReport> {
    if repeats == 0 {
        return Err(invalid("repeats must be at least 1"));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(invalid(format!("missing fraction {f} outside (0, 1)")));
    }
    let data = toy.generate(seed)?.data;
    let diverge_at = DIVERGENCE_FACTOR * data.observed_variance();
    let mut jobs = Vec::new();
    for (fi, &frac) in fractions.iter().enumerate() {
        for r in 0..repeats {
            let split = random_split(&data, frac, derive_seed(seed, &[fi as u64, r as u64]))?;
            for (ei, &engine) in engines.iter().enumerate() {
                jobs.push((fi, r, ei, engine, split.clone()));
            }
        }
    }
    let results: Vec<RepeatResult> = jobs
        .par_iter()
        .map(|(fi, r, _, engine, split)| {
            let spec = FitSpec { engine: *engine, ..*base };
            let fit_seed = derive_seed(seed, &[*fi as u64, *r as u64, 7]);
            evaluate_split(&data, split, toy.rank, &spec, fit_seed, diverge_at)
        })
        .collect();
    let conditions = group(&jobs, results, engines, fractions, repeats);
    Ok(ExperimentReport {
        kind: "missing_values".into(),
        protocol: protocol(toy, base, repeats, None, seed),
        conditions,
    })
}

fn group<S>(
    jobs: &[(usize, usize, usize, Engine, S)],
    results: Vec<RepeatResult>,
    engines: &[Engine],
    conditions: &[f64],
    repeats: usize,
) -> Vec<ConditionResult> {
    let mut slots: Vec<Vec<Option<RepeatResult>>> = vec![vec![None; repeats]; conditions.len() * engines.len()];
    for ((ci, r, ei, _, _), res) in jobs.iter().zip(results) {
        slots[ci * engines.len() + ei][*r] = Some(res);
    }
    let mut out = Vec::with_capacity(slots.len());
    for (ci, &c) in conditions.iter().enumerate() {
        for (ei, &e) in engines.iter().enumerate() {
            let reps = std::mem::take(&mut slots[ci * engines.len() + ei])
                .into_iter()
                .map(|r| r.expect("every job produces a result"))
                .collect();
            out.push(condition_result(e, c, reps));
        }
    }
    out
}

/// Test fraction used by the noise experiment.
pub const NOISE_TEST_FRACTION: f64 = 0.1;

/// For each noise-to-signal ratio, generates `repeats` datasets, hides 10% of
/// each, and records each engine's test MSE.
pub fn noise_experiment(
    toy: &ToySpec,
    nsr_values: &[f64],
    repeats: usize,
    engines: &[Engine],
    base: &FitSpec,
    seed: u64,
) -> Result<ExperimentReport> {
    if repeats == 0 {
        return Err(invalid("repeats must be at least 1"));
    }
    if let Some(r) = nsr_values.iter().find(|r| !(**r >= 0.0)) {
        return Err(invalid(format!("noise-to-signal ratio {r} is negative")));
    }
    let mut datasets = Vec::new();
    let mut jobs = Vec::new();
    for (ci, &nsr) in nsr_values.iter().enumerate() {
        for r in 0..repeats {
            let spec = ToySpec {
                noise: Noise::SignalRatio(nsr),
                ..*toy
            };
            let data = spec.generate(derive_seed(seed, &[ci as u64, r as u64]))?.data;
            let split = random_split(&data, NOISE_TEST_FRACTION, derive_seed(seed, &[ci as u64, r as u64, 3]))?;
            let di = datasets.len();
            datasets.push(data);
            for (ei, &engine) in engines.iter().enumerate() {
                jobs.push((ci, r, ei, engine, (di, split.clone())));
            }
        }
    }
    let results: Vec<RepeatResult> = jobs
        .par_iter()
        .map(|(ci, r, _, engine, (di, split))| {
            let data = &datasets[*di];
            let spec = FitSpec { engine: *engine, ..*base };
            let diverge_at = DIVERGENCE_FACTOR * data.observed_variance();
            evaluate_split(data, split, toy.rank, &spec, derive_seed(seed, &[*ci as u64, *r as u64, 7]), diverge_at)
        })
        .collect();
    let conditions = group(&jobs, results, engines, nsr_values, repeats);
    Ok(ExperimentReport {
        kind: "noise".into(),
        protocol: protocol(toy, base, repeats, Some(NOISE_TEST_FRACTION), seed),
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Rank>,
    pub test_mse: Option<f64>,
    pub diverged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub engine: Engine,
    pub folds: Vec<FoldResult>,
    /// Mean over folds that completed.
    pub mean_test_mse: Option<f64>,
}

fn candidates(kind: SearchKind, spec: &SearchSpec) -> Vec<Rank> {
    let spec = spec.canonical();
    match (kind, &spec.l_values) {
        (SearchKind::Line, _) | (_, None) => spec.k_values.iter().map(|&k| Rank::Nmf { k }).collect(),
        (_, Some(ls)) => spec
            .k_values
            .iter()
            .flat_map(|&k| ls.iter().map(move |&l| Rank::Nmtf { k, l }))
            .collect(),
    }
}

/// Mean held-out MSE and mean training log-likelihood of `rank` across an
/// inner K-fold split of `train`.
fn inner_cv(train: &ObservedMatrix, rank: Rank, spec: &SearchSpec, inner_folds: usize, seed: u64) -> Result<Evaluation> {
    let splits = kfold_splits(train, inner_folds, seed)?;
    let (mut err, mut ll) = (0.0, 0.0);
    for (i, s) in splits.iter().enumerate() {
        let part = s.train(train)?;
        let f = restart_fit(&part, rank, &spec.fit, spec.restarts, derive_seed(seed, &[i as u64]))?;
        err += mse(&f.prediction, train, &s.test_mask)?;
        ll += f.log_likelihood(&part);
    }
    let n = splits.len() as f64;
    Ok(Evaluation {
        rank,
        criterion: err / n,
        loglik: ll / n,
    })
}

/// Model selection on the training folds of NP by nested cross-validation.
fn nested_selection(
    train: &ObservedMatrix,
    kind: SearchKind,
    spec: &SearchSpec,
    inner_folds: usize,
    seed: u64,
) -> Result<SearchResult> {
    let score = |rank: Rank| inner_cv(train, rank, spec, inner_folds, seed);
    if kind == SearchKind::Greedy {
        let spec = spec.canonical();
        let ls = spec.l_values.clone().unwrap_or_default();
        return greedy_over(&spec.k_values, &ls, crate::selection::Criterion::Mse, |pts| {
            pts.par_iter().map(|&(k, l)| score(Rank::Nmtf { k, l })).collect()
        });
    }
    let evaluated: Vec<Evaluation> = candidates(kind, spec).into_par_iter().map(score).collect::<Result<_>>()?;
    let mut best = evaluated[0];
    for e in &evaluated[1..] {
        if e.criterion < best.criterion {
            best = *e;
        }
    }
    Ok(SearchResult {
        best: best.rank,
        criterion: crate::selection::Criterion::Mse,
        evaluated,
        path: Vec::new(),
    })
}

/// `folds`-fold cross-validation with per-fold model selection: criterion
/// search for the Bayesian engines, nested cross-validation for NP.
pub fn cross_validation(
    data: &ObservedMatrix,
    folds: usize,
    kind: SearchKind,
    spec: &SearchSpec,
    inner_folds: usize,
    seed: u64,
) -> Result<CvReport> {
    spec.validate()?;
    let splits = kfold_splits(data, folds, seed)?;
    let diverge_at = DIVERGENCE_FACTOR * data.observed_variance();
    let results: Vec<FoldResult> = splits
        .par_iter()
        .enumerate()
        .map(|(fold, split)| {
            let mut chosen = None;
            let run = |chosen: &mut Option<Rank>| -> Result<f64> {
                let mut train = split.train(data)?;
                if spec.fit.engine == Engine::Np {
                    train = clip_negative(&train)?;
                }
                let fold_seed = derive_seed(seed, &[fold as u64]);
                let fold_spec = SearchSpec {
                    seed: fold_seed,
                    ..spec.clone()
                };
                let picked = if spec.fit.engine == Engine::Np {
                    nested_selection(&train, kind, &fold_spec, inner_folds, fold_seed)?
                } else {
                    run_search(&train, kind, &fold_spec)?
                };
                *chosen = Some(picked.best);
                let f = restart_fit(&train, picked.best, &spec.fit, spec.restarts, fold_seed)?;
                mse(&f.prediction, data, &split.test_mask)
            };
            match run(&mut chosen) {
                Ok(m) => FoldResult {
                    fold,
                    chosen,
                    test_mse: Some(m),
                    diverged: !(m <= diverge_at),
                    error: None,
                },
                Err(e) => FoldResult {
                    fold,
                    chosen,
                    test_mse: None,
                    diverged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(CvReport {
        engine: spec.fit.engine,
        mean_test_mse: mean_of(results.iter().filter_map(|r| r.test_mse)),
        folds: results,
    })
}
