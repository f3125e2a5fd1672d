//! Bayesian non-negative matrix factorisation (R ≈ UVᵀ) and tri-factorisation
//! (R ≈ FSGᵀ) with exponential priors and Gaussian noise, fitted by Gibbs
//! sampling, variational Bayes, iterated conditional modes or
//! multiplicative updates.

mod conditional;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod hyper;
pub mod io;
pub mod nmf;
pub mod nmtf;
pub mod observed;
pub mod quality;
pub mod randvar;
pub mod selection;
pub mod trace;

pub use config::{GibbsConfig, RunConfig};
pub use engine::{fit, Engine, Factors, Fit, FitSpec, Priors, Rank};
pub use error::{Error, Result};
pub use hyper::{InitScheme, Rate};
pub use observed::{build_index_sets, kfold_splits, random_split, IndexSets, ObservedMatrix, Split};
pub use trace::RunTrace;
pub use selection::{Criterion, SearchKind, SearchResult, SearchSpec};
pub use ndarray;
