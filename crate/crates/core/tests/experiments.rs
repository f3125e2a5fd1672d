mod common;

use bnmtf::experiments::{
    cross_validation, gen_toy_nmf, missing_values_experiment, noise_experiment, Noise, ToySpec,
};
use bnmtf::{Criterion, Engine, Factors, FitSpec, Rank, SearchKind, SearchSpec};

#[test]
fn toy_factors_and_noise_have_the_stated_moments() {
    let toy = gen_toy_nmf(200, 150, 5, 2.0, 17).unwrap();
    let Factors::Nmf { u, v } = &toy.truth else { panic!("nmf truth") };
    let all: Vec<f64> = u.iter().chain(v.iter()).copied().collect();
    let (m, var) = common::mean_var(&all);
    let se = (var / all.len() as f64).sqrt();
    assert!((m - 1.0).abs() < 3.0 * se, "factor mean {m}");
    let clean = toy.truth.product();
    let resid: Vec<f64> = toy.data.values().iter().zip(clean.iter()).map(|(a, b)| a - b).collect();
    let (rm, rv) = common::mean_var(&resid);
    let n = resid.len() as f64;
    assert!(rm.abs() < 3.0 * (2.0 / n).sqrt());
    assert!((rv - 2.0).abs() < 3.0 * 2.0 * (2.0 / n).sqrt(), "noise variance {rv}");
}

#[test]
fn noiseless_low_rank_data_is_recovered_by_multiplicative_updates() {
    let toy = ToySpec {
        rows: 30,
        cols: 25,
        rank: Rank::Nmf { k: 2 },
        noise: Noise::Variance(0.0),
    };
    let base = FitSpec {
        tol: 0.0,
        ..FitSpec::new(Engine::Np).with_iterations(3000)
    };
    let rep = missing_values_experiment(&toy, &[0.1], 2, &[Engine::Np], &base, 5).unwrap();
    let c = rep.condition(Engine::Np, 0.1).unwrap();
    let scale = toy.generate(5).unwrap().data.observed_variance();
    assert!(c.mean_test_mse.unwrap() < 1e-3 * scale, "{:?}", c.mean_test_mse);
}

#[test]
fn zero_noise_ratio_gives_small_test_error() {
    let toy = ToySpec {
        rows: 40,
        cols: 30,
        rank: Rank::Nmtf { k: 2, l: 2 },
        noise: Noise::SignalRatio(0.0),
    };
    let base = FitSpec::new(Engine::Vb).with_iterations(300);
    let rep = noise_experiment(&toy, &[0.0, 0.5], 2, &[Engine::Vb], &base, 1).unwrap();
    let clean = rep.condition(Engine::Vb, 0.0).unwrap().mean_test_mse.unwrap();
    let noisy = rep.condition(Engine::Vb, 0.5).unwrap().mean_test_mse.unwrap();
    assert!(clean < noisy, "{clean} vs {noisy}");
    assert!(rep.conditions.iter().all(|c| c.repeats.len() == 2));
}

#[test]
fn cross_validation_ignores_candidate_order() {
    let toy = gen_toy_nmf(20, 16, 2, 0.2, 9).unwrap();
    let mut spec = SearchSpec {
        k_values: vec![1, 2, 3],
        l_values: None,
        restarts: 1,
        criterion: Criterion::Aic,
        fit: FitSpec::new(Engine::Vb).with_iterations(100),
        seed: 4,
    };
    let a = cross_validation(&toy.data, 4, SearchKind::Line, &spec, 3, 2).unwrap();
    spec.k_values = vec![3, 1, 2];
    let b = cross_validation(&toy.data, 4, SearchKind::Line, &spec, 3, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.folds.len(), 4);
    assert!(a.folds.iter().all(|f| f.chosen.is_some() && f.test_mse.is_some()));
}

#[test]
fn experiments_reject_bad_protocols() {
    let toy = ToySpec::standard(Rank::Nmf { k: 2 });
    let base = FitSpec::new(Engine::Vb).with_iterations(5);
    assert!(missing_values_experiment(&toy, &[1.0], 1, &[Engine::Vb], &base, 0).is_err());
    assert!(missing_values_experiment(&toy, &[0.5], 0, &[Engine::Vb], &base, 0).is_err());
    assert!(noise_experiment(&toy, &[-0.1], 1, &[Engine::Vb], &base, 0).is_err());
}
