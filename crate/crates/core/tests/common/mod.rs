//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use bnmtf::ndarray::Array2;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive Gauss–Kronrod quadrature of `f` over [a, b], bisecting the
/// interval with the largest error estimate until the total estimate is below
/// `rel` times the integral.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..4000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= rel * total.abs() || err < 1e-300 {
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

/// Inverse Mills ratio by quadrature of
/// (1 − Φ(x)) / φ(x) = ∫₀^∞ exp(−s²/2 − x s) ds.
pub fn lambda_quad(x: f64) -> f64 {
    let peak = (-x).max(0.0);
    let shift = if x < 0.0 { 0.5 * x * x } else { 0.0 };
    let upper = peak + 40.0 / x.max(1.0);
    let tail = integrate(|s| (-0.5 * s * s - x * s - shift).exp(), 0.0, upper, 1e-14);
    (-shift).exp() / tail
}

/// Continued-fraction evaluation of the Mills ratio for large positive x:
/// (1 − Φ(x))/φ(x) = 1/(x + 1/(x + 2/(x + 3/(x + …)))).
pub fn lambda_cf(x: f64) -> f64 {
    let mut t = x;
    for n in (1..=200).rev() {
        t = x + n as f64 / t;
    }
    t
}

/// Moments and differential entropy of N(μ, 1/τ) truncated to [0, ∞),
/// computed by quadrature of the rescaled kernel.
pub struct TnOracle {
    pub mean: f64,
    pub var: f64,
    pub entropy: f64,
}

pub fn tn_quad(mu: f64, tau: f64) -> TnOracle {
    let sd = tau.sqrt().recip();
    // Exponent −τx²/2 + τμx shifted by its maximum over x ≥ 0.
    let peak = if mu > 0.0 { 0.5 * tau * mu * mu } else { 0.0 };
    let e = move |x: f64| -0.5 * tau * x * x + tau * mu * x - peak;
    let (lo, hi) = if mu > 0.0 {
        ((mu - 40.0 * sd).max(0.0), mu + 40.0 * sd)
    } else {
        (0.0, (40.0 * sd).min(60.0 / (tau * -mu).max(1e-300)))
    };
    let rel = 1e-14;
    let z = integrate(|x| e(x).exp(), lo, hi, rel);
    let m1 = integrate(|x| x * e(x).exp(), lo, hi, rel) / z;
    let c2 = integrate(|x| (x - m1).powi(2) * e(x).exp(), lo, hi, rel) / z;
    let ee = integrate(|x| e(x) * e(x).exp(), lo, hi, rel) / z;
    TnOracle {
        mean: m1,
        var: c2,
        entropy: z.ln() - ee,
    }
}

/// Normalised log-density of the Gamma distribution.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - statrs::function::gamma::ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// ln p(R) for a single observed cell with R = uv + noise, u, v ~ Exp(λ) and
/// τ ~ Gamma(α, β): τ integrated in closed form, (u, v) by nested quadrature.
pub fn single_cell_log_evidence(r: f64, lambda: f64, alpha: f64, beta: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let ln_c = ln_gamma(alpha + 0.5) - ln_gamma(alpha) + alpha * beta.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let marginal = |m: f64| (ln_c - (alpha + 0.5) * (beta + 0.5 * (r - m).powi(2)).ln()).exp();
    let top = 60.0 / lambda;
    let inner = |u: f64| {
        integrate(
            |v| lambda * lambda * (-lambda * (u + v)).exp() * marginal(u * v),
            0.0,
            top,
            1e-10,
        )
    };
    integrate(inner, 0.0, top, 1e-9).ln()
}

/// Naive double-loop mean squared error over a mask.
pub fn loop_mse(pred: &Array2<f64>, values: &Array2<f64>, subset: &Array2<bool>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            if subset[[i, j]] {
                s += (pred[[i, j]] - values[[i, j]]).powi(2);
                n += 1;
            }
        }
    }
    s / n as f64
}

/// Sample mean and variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}
