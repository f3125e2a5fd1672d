mod common;

use bnmtf::config::{GibbsConfig, RunConfig};
use bnmtf::hyper::{InitScheme, Rate};
use bnmtf::ndarray::{array, Array2};
use bnmtf::nmf::{self, NmfHyper, NmfPointState, NmfVariationalState};
use bnmtf::nmtf::gibbs::Target;
use bnmtf::nmtf::{self, NmtfHyper, NmtfPointState, NmtfVariationalState};
use bnmtf::quality::{elbo_nmf, elbo_nmtf, log_posterior_nmtf};
use bnmtf::randvar::{tn_mean_var, tn_sample, TruncNormParams};
use bnmtf::ObservedMatrix;
use common::integrate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, missing: f64, seed: u64) -> ObservedMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>() * 3.0);
    let mut mask = Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>() >= missing);
    mask[[0, 0]] = true;
    ObservedMatrix::new(values, mask).unwrap()
}

fn random_exp(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || -rng.random::<f64>().ln())
}

/// Mean and variance of the density proportional to exp(log_kernel(x)) on x ≥ 0.
fn numeric_moments(log_kernel: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let grid = 4000;
    let peak = (0..=grid)
        .map(|i| log_kernel(hi * i as f64 / grid as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let w = |x: f64| (log_kernel(x) - peak).exp();
    let z = integrate(w, 0.0, hi, 1e-12);
    let m = integrate(|x| x * w(x), 0.0, hi, 1e-12) / z;
    let v = integrate(|x| (x - m).powi(2) * w(x), 0.0, hi, 1e-12) / z;
    (m, v)
}

fn nmf_log_joint_in(data: &ObservedMatrix, s: &NmfPointState, hyper: &NmfHyper) -> f64 {
    let pred = s.product();
    let sse: f64 = data.observed().map(|(i, j, r)| (r - pred[[i, j]]).powi(2)).sum();
    let prior: f64 = s.u.iter().map(|&x| -hyper.lambda_u.at(0, 0) * x).sum::<f64>()
        + s.v.iter().map(|&x| -hyper.lambda_v.at(0, 0) * x).sum::<f64>();
    prior - 0.5 * s.tau * sse
}

#[test]
fn nmf_factor_conditional_matches_numeric_density() {
    let data = random_matrix(4, 3, 0.2, 1);
    let hyper = NmfHyper::uniform(1.5, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let state = NmfPointState {
        u: random_exp(4, 2, &mut rng),
        v: random_exp(3, 2, &mut rng),
        tau: 2.0,
    };
    for (i, k) in [(0, 0), (1, 1), (3, 0)] {
        let p = nmf::gibbs::u_posterior(&data, &state, i, k, &hyper).unwrap();
        let (m, v) = tn_mean_var(p);
        let kernel = |x: f64| {
            let mut s = state.clone();
            s.u[[i, k]] = x;
            nmf_log_joint_in(&data, &s, &hyper)
        };
        let (om, ov) = numeric_moments(kernel, 30.0);
        assert!((m - om).abs() < 1e-8, "mean ({i},{k}): {m} vs {om}");
        assert!((v - ov).abs() < 1e-8, "var ({i},{k}): {v} vs {ov}");
    }
    for (j, k) in [(0, 1), (2, 0)] {
        let p = nmf::gibbs::v_posterior(&data, &state, j, k, &hyper).unwrap();
        let (m, _) = tn_mean_var(p);
        let kernel = |x: f64| {
            let mut s = state.clone();
            s.v[[j, k]] = x;
            nmf_log_joint_in(&data, &s, &hyper)
        };
        assert!((m - numeric_moments(kernel, 30.0).0).abs() < 1e-8);
    }
}

#[test]
fn noise_conditional_matches_numeric_density() {
    let data = random_matrix(3, 3, 0.0, 4);
    let hyper = NmfHyper::uniform(1.0, 2.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random_exp(3, 1, &mut rng);
    let v = random_exp(3, 1, &mut rng);
    let pred = u.dot(&v.t());
    let sse: f64 = data.observed().map(|(i, j, r)| (r - pred[[i, j]]).powi(2)).sum();
    let n = data.n_observed() as f64;
    let kernel = |t: f64| (hyper.alpha - 1.0) * t.ln() - hyper.beta * t + 0.5 * n * t.ln() - 0.5 * t * sse;
    let (om, ov) = numeric_moments(kernel, 60.0);
    let g = nmf::gibbs::tau_posterior(&data, &u, &v, &hyper);
    assert!((g.mean() - om).abs() < 1e-8);
    assert!((g.variance() - ov).abs() < 1e-8);
}

#[test]
fn nmtf_factor_conditionals_match_numeric_density() {
    let data = random_matrix(4, 5, 0.25, 7);
    let hyper = NmtfHyper::uniform(1.2, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let state = NmtfPointState {
        f: random_exp(4, 2, &mut rng),
        s: random_exp(2, 3, &mut rng),
        g: random_exp(5, 3, &mut rng),
        tau: 1.5,
    };
    let log_joint = |s: &NmtfPointState| {
        let pred = s.product();
        let sse: f64 = data.observed().map(|(i, j, r)| (r - pred[[i, j]]).powi(2)).sum();
        -1.2 * (s.f.sum() + s.s.sum() + s.g.sum()) - 0.5 * s.tau * sse
    };
    for target in [Target::F(1, 0), Target::F(3, 1), Target::S(0, 2), Target::S(1, 0), Target::G(4, 1), Target::G(0, 2)] {
        let p = nmtf::gibbs::factor_posterior(&data, &state, &hyper, target).unwrap();
        let (m, v) = tn_mean_var(p);
        let kernel = |x: f64| {
            let mut s = state.clone();
            match target {
                Target::F(a, b) => s.f[[a, b]] = x,
                Target::S(a, b) => s.s[[a, b]] = x,
                Target::G(a, b) => s.g[[a, b]] = x,
            }
            log_joint(&s)
        };
        let (om, ov) = numeric_moments(kernel, 30.0);
        assert!((m - om).abs() < 1e-8, "{target:?}: {m} vs {om}");
        assert!((v - ov).abs() < 1e-8, "{target:?}: {v} vs {ov}");
    }
}

fn nmf_q(rows: usize, cols: usize, k: usize, rng: &mut ChaCha8Rng) -> NmfVariationalState {
    let mut q = NmfVariationalState::init(rows, cols, k, &NmfHyper::default(), InitScheme::PriorDraw, rng).unwrap();
    q.mu_u.mapv_inplace(|_| rng.random::<f64>() * 3.0 - 1.0);
    q.mu_v.mapv_inplace(|_| rng.random::<f64>() * 3.0 - 1.0);
    q.prec_u.mapv_inplace(|_| 0.5 + rng.random::<f64>() * 4.0);
    q.prec_v.mapv_inplace(|_| 0.5 + rng.random::<f64>() * 4.0);
    q.refresh_all();
    q
}

fn nmtf_q(data: &ObservedMatrix, k: usize, l: usize, rng: &mut ChaCha8Rng) -> NmtfVariationalState {
    let p = NmtfPointState {
        f: Array2::zeros((data.rows(), k)),
        s: Array2::zeros((k, l)),
        g: Array2::zeros((data.cols(), l)),
        tau: 1.0,
    };
    let mut q = NmtfVariationalState::from_locations(p, 2.0);
    for m in [&mut q.mu_f, &mut q.mu_s, &mut q.mu_g] {
        m.mapv_inplace(|_| rng.random::<f64>() * 3.0 - 1.0);
    }
    for m in [&mut q.prec_f, &mut q.prec_s, &mut q.prec_g] {
        m.mapv_inplace(|_| 0.5 + rng.random::<f64>() * 4.0);
    }
    q.refresh_all();
    q
}

#[test]
fn nmf_expected_residual_matches_monte_carlo() {
    let data = random_matrix(3, 3, 0.0, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let q = nmf_q(3, 3, 2, &mut rng);
        let (i, j) = (rng.random_range(0..3), rng.random_range(0..3));
        let closed = nmf::vb::expected_sq_residual(&data, &q, i, j);
        let r = data.get(i, j).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let dot: f64 = (0..2)
                    .map(|k| tn_sample(q.u_params(i, k), &mut rng) * tn_sample(q.v_params(j, k), &mut rng))
                    .sum();
                (r - dot).powi(2)
            })
            .collect();
        let (m, v) = common::mean_var(&draws);
        let se = (v / draws.len() as f64).sqrt();
        assert!((m - closed).abs() < 4.0 * se, "{m} vs {closed} (se {se})");
    }
}

#[test]
fn nmtf_expected_residual_matches_monte_carlo() {
    let data = random_matrix(3, 4, 0.0, 13);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (k, l) = (2, 3);
    for _ in 0..5 {
        let q = nmtf_q(&data, k, l, &mut rng);
        let (i, j) = (rng.random_range(0..3), rng.random_range(0..4));
        let closed = nmtf::vb::expected_sq_residual(&data, &q, i, j);
        let r = data.get(i, j).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let f: Vec<f64> = (0..k).map(|a| tn_sample(q.params(nmtf::Factor::F, i, a), &mut rng)).collect();
                let g: Vec<f64> = (0..l).map(|b| tn_sample(q.params(nmtf::Factor::G, j, b), &mut rng)).collect();
                let mut dot = 0.0;
                for (a, fa) in f.iter().enumerate() {
                    for (b, gb) in g.iter().enumerate() {
                        dot += fa * tn_sample(q.params(nmtf::Factor::S, a, b), &mut rng) * gb;
                    }
                }
                (r - dot).powi(2)
            })
            .collect();
        let (m, v) = common::mean_var(&draws);
        let se = (v / draws.len() as f64).sqrt();
        assert!((m - closed).abs() < 4.0 * se, "{m} vs {closed} (se {se})");
    }
}

#[test]
fn vb_elbo_never_decreases_with_missing_entries() {
    let data = random_matrix(12, 9, 0.4, 21);
    let cfg = RunConfig {
        iterations: 150,
        tol: 0.0,
        seed: 3,
        init: InitScheme::PriorDraw,
    };
    let out = nmf::vb::run(&data, &NmfHyper::default(), 3, &cfg).unwrap();
    let elbo = out.trace.iter_elbo.unwrap();
    assert!(elbo.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9 * w[0].1.abs()));
    let cfg = RunConfig {
        init: InitScheme::KMeans,
        ..cfg
    };
    let out = nmtf::vb::run(&data, &NmtfHyper::default(), 3, 2, &cfg).unwrap();
    let elbo = out.trace.iter_elbo.unwrap();
    assert!(elbo.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9 * w[0].1.abs()));
}

#[test]
fn nmtf_icm_log_posterior_monotone_per_update() {
    for seed in 0..4 {
        let data = random_matrix(7, 6, 0.3, 100 + seed);
        let hyper = NmtfHyper::default();
        let cfg = RunConfig {
            iterations: 15,
            tol: 0.0,
            seed,
            init: InitScheme::PriorDraw,
        };
        let mut last = f64::NEG_INFINITY;
        let mut worst: f64 = 0.0;
        nmtf::icm::run_observed(&data, &hyper, 2, 3, &cfg, &mut |s| {
            let lp = log_posterior_nmtf(&data, &hyper, s);
            worst = worst.max(last - lp);
            last = lp;
        })
        .unwrap();
        assert!(worst <= 1e-10 * last.abs().max(1.0), "seed {seed}: drop {worst}");
    }
}

#[test]
fn multiplicative_updates_never_increase_training_error() {
    let data = random_matrix(10, 8, 0.3, 31);
    let cfg = RunConfig {
        iterations: 200,
        tol: 0.0,
        seed: 1,
        init: InitScheme::PriorDraw,
    };
    let a = nmf::np::run(&data, 3, &cfg).unwrap().trace.iter_mse;
    let b = nmtf::np::run(&data, 3, 2, &cfg).unwrap().trace.iter_mse;
    for t in [a, b] {
        assert!(t.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)));
    }
}

#[test]
fn exchange_symmetry_of_conditionals_and_bounds() {
    let data = random_matrix(5, 4, 0.2, 41);
    let dt = data.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let hyper = NmtfHyper {
        lambda_f: Rate::Scalar(0.7),
        lambda_s: Rate::Scalar(1.3),
        lambda_g: Rate::Scalar(2.1),
        alpha: 1.5,
        beta: 0.8,
    };
    let ht = hyper.transposed();
    let st = NmtfPointState {
        f: random_exp(5, 2, &mut rng),
        s: random_exp(2, 3, &mut rng),
        g: random_exp(4, 3, &mut rng),
        tau: 1.1,
    };
    let tt = st.transposed();
    let close = |a: Option<TruncNormParams>, b: Option<TruncNormParams>| {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a.mu - b.mu).abs() < 1e-12 && (a.tau - b.tau).abs() < 1e-9 * a.tau);
    };
    close(
        nmtf::gibbs::factor_posterior(&data, &st, &hyper, Target::F(3, 1)),
        nmtf::gibbs::factor_posterior(&dt, &tt, &ht, Target::G(3, 1)),
    );
    close(
        nmtf::gibbs::factor_posterior(&data, &st, &hyper, Target::S(1, 2)),
        nmtf::gibbs::factor_posterior(&dt, &tt, &ht, Target::S(2, 1)),
    );
    let q = nmtf_q(&data, 2, 3, &mut rng);
    let e1 = elbo_nmtf(&data, &hyper, &q);
    let e2 = elbo_nmtf(&dt, &ht, &q.transposed());
    assert!((e1 - e2).abs() < 1e-10 * e1.abs());

    let nh = NmfHyper {
        lambda_u: Rate::Scalar(0.5),
        lambda_v: Rate::Scalar(2.0),
        alpha: 1.0,
        beta: 1.0,
    };
    let ns = NmfPointState {
        u: random_exp(5, 2, &mut rng),
        v: random_exp(4, 2, &mut rng),
        tau: 0.9,
    };
    let swapped_h = NmfHyper {
        lambda_u: nh.lambda_v.clone(),
        lambda_v: nh.lambda_u.clone(),
        ..nh.clone()
    };
    let swapped_s = NmfPointState {
        u: ns.v.clone(),
        v: ns.u.clone(),
        tau: ns.tau,
    };
    close(
        nmf::gibbs::u_posterior(&data, &ns, 2, 1, &nh),
        nmf::gibbs::v_posterior(&dt, &swapped_s, 2, 1, &swapped_h),
    );
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let data = random_matrix(8, 7, 0.2, 51);
    let g = GibbsConfig {
        iterations: 60,
        burn_in: 30,
        thinning: 3,
        seed: 9,
        init: InitScheme::PriorDraw,
    };
    let a = nmf::gibbs::run(&data, &NmfHyper::default(), 2, &g).unwrap();
    let b = nmf::gibbs::run(&data, &NmfHyper::default(), 2, &g).unwrap();
    assert_eq!(a.trace.iter_mse, b.trace.iter_mse);
    assert_eq!(a.draws, b.draws);
    assert_eq!(a.draws.len(), g.retained_count());
    let c = nmf::gibbs::run(&data, &NmfHyper::default(), 2, &GibbsConfig { seed: 10, ..g }).unwrap();
    assert_ne!(a.trace.iter_mse, c.trace.iter_mse);
    let a = nmtf::gibbs::run(&data, &NmtfHyper::default(), 2, 2, &g).unwrap();
    let b = nmtf::gibbs::run(&data, &NmtfHyper::default(), 2, 2, &g).unwrap();
    assert_eq!(a.draws, b.draws);
}

#[test]
fn unobserved_row_falls_back_to_the_prior() {
    let values = array![[1.0, 2.0, 0.5], [0.0, 0.0, 0.0], [2.0, 1.0, 1.5]];
    let mask = array![[true, true, true], [false, false, false], [true, true, true]];
    let data = ObservedMatrix::new(values, mask).unwrap();
    let hyper = NmfHyper::uniform(2.0, 1.0, 1.0);
    let cfg = RunConfig {
        iterations: 50,
        tol: 0.0,
        seed: 1,
        init: InitScheme::PriorDraw,
    };
    let vb = nmf::vb::run(&data, &hyper, 2, &cfg).unwrap();
    for k in 0..2 {
        assert!((vb.state.exp_u[[1, k]] - 0.5).abs() < 1e-12);
    }
    assert!(elbo_nmf(&data, &hyper, &vb.state).is_finite());
    let icm = nmf::icm::run(&data, &hyper, 2, &cfg).unwrap();
    assert!(icm.state.u.row(1).iter().all(|&x| x == 0.0));
    let g = GibbsConfig {
        iterations: 4000,
        burn_in: 0,
        thinning: 1,
        seed: 2,
        init: InitScheme::PriorDraw,
    };
    let draws = nmf::gibbs::run(&data, &hyper, 1, &g).unwrap().draws;
    let xs: Vec<f64> = draws.iter().map(|d| d.u[[1, 0]]).collect();
    let (m, _) = common::mean_var(&xs);
    assert!((m - 0.5).abs() < 0.05, "{m}");
}
