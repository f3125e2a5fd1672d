mod common;

use bnmtf::randvar::{
    delta_fn, erf::erfcx, exp_matched_tn, lambda_fn, tn_entropy, tn_mean_var, tn_sample, ExpParams, GammaParams,
    TruncNormParams,
};
use common::{lambda_cf, lambda_quad, mean_var, tn_quad};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn lambda_matches_quadrature_across_the_line() {
    for i in 0..=120 {
        let x = -10.0 + i as f64 * 0.25;
        let want = lambda_quad(x);
        let got = lambda_fn(x);
        assert!((got - want).abs() <= 1e-11 * want.max(1.0), "x={x}: {got} vs {want}");
        let d = want * (want - x);
        assert!((delta_fn(x) - d).abs() <= 1e-10, "delta x={x}");
    }
}

#[test]
fn lambda_far_tail_matches_continued_fraction() {
    for x in [20.0, 25.0, 30.0, 35.0, 40.0, 80.0, 1e3] {
        let want = lambda_cf(x);
        assert!((lambda_fn(x) / want - 1.0).abs() < 1e-13, "x={x}");
        let d = want * (want - x);
        assert!((delta_fn(x) / d - 1.0).abs() < 1e-9, "delta x={x}");
    }
}

#[test]
fn truncated_normal_moments_and_entropy() {
    for tau in [0.1, 1.0, 100.0] {
        for i in 0..=32 {
            let mu = -8.0 + 0.5 * i as f64;
            let p = TruncNormParams::new(mu, tau).unwrap();
            let o = tn_quad(mu, tau);
            let (m, v) = tn_mean_var(p);
            assert!((m - o.mean).abs() < 1e-10, "mean mu={mu} tau={tau}: {m} vs {}", o.mean);
            assert!((v - o.var).abs() < 1e-10, "var mu={mu} tau={tau}: {v} vs {}", o.var);
            assert!((tn_entropy(p) - o.entropy).abs() < 1e-9, "entropy mu={mu} tau={tau}");
        }
    }
}

#[test]
fn scaled_erfc_known_values() {
    // erfcx(0) = 1, erfcx(x) → 1/(x√π) for large x.
    assert!((erfcx(0.0) - 1.0).abs() < 1e-15);
    let x = 1e6_f64;
    assert!((erfcx(x) * x * std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-12);
    assert!((erfcx(1.0) - 0.427_583_576_155_807_0).abs() < 1e-15);
    assert!((erfcx(-1.0) - 5.008_980_080_762_283).abs() < 1e-13);
}

#[test]
fn sampler_moments_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (mu, tau) in [(1.0, 1.0), (-2.0, 4.0), (0.0, 0.5), (-12.0, 1.0), (5.0, 100.0)] {
        let p = TruncNormParams::new(mu, tau).unwrap();
        let draws: Vec<f64> = (0..200_000).map(|_| tn_sample(p, &mut rng)).collect();
        assert!(draws.iter().all(|&x| x >= 0.0));
        let (m, v) = mean_var(&draws);
        let (em, ev) = tn_mean_var(p);
        let se = (ev / draws.len() as f64).sqrt();
        assert!((m - em).abs() < 4.0 * se, "mu={mu}: {m} vs {em}");
        assert!((v / ev - 1.0).abs() < 0.03, "mu={mu}: var {v} vs {ev}");
    }
}

#[test]
fn gamma_and_exponential_samplers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = GammaParams::new(3.5, 2.0).unwrap();
    let xs: Vec<f64> = (0..200_000).map(|_| g.sample(&mut rng)).collect();
    let (m, v) = mean_var(&xs);
    assert!((m / g.mean() - 1.0).abs() < 0.01);
    assert!((v / g.variance() - 1.0).abs() < 0.03);
    let e = ExpParams::new(4.0).unwrap();
    let xs: Vec<f64> = (0..200_000).map(|_| e.sample(&mut rng)).collect();
    let (m, v) = mean_var(&xs);
    assert!((m - 0.25).abs() < 0.003);
    assert!((v / 0.0625 - 1.0).abs() < 0.03);
}

#[test]
fn exponential_matched_tn_has_prior_mean() {
    for rate in [0.1, 1.0, 7.0] {
        let (m, _) = tn_mean_var(exp_matched_tn(rate));
        assert!((m * rate - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gamma_entropy_matches_quadrature() {
    for (a, b) in [(1.0, 1.0), (4.0, 0.5), (30.0, 10.0)] {
        let g = GammaParams::new(a, b).unwrap();
        let hi = g.mean() + 60.0 * g.variance().sqrt();
        let h = common::integrate(
            |x| {
                let lp = common::gamma_ln_pdf(x, a, b);
                if x <= 0.0 { 0.0 } else { -lp * lp.exp() }
            },
            0.0,
            hi,
            1e-12,
        );
        assert!((g.entropy() - h).abs() < 1e-8, "a={a} b={b}: {} vs {h}", g.entropy());
    }
}
