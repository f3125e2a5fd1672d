//! Three-factor model R ≈ FSGᵀ with F ∈ ℝ^{I×K}, S ∈ ℝ^{K×L}, G ∈ ℝ^{J×L}.

pub mod gibbs;
pub mod icm;
pub mod kmeans;
pub mod np;
pub mod vb;

use ndarray::Array2;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::hyper::{check_positive, InitScheme, Rate, KMEANS_SMOOTHING};
use crate::nmf::draw_exponential;
use crate::observed::ObservedMatrix;
use crate::randvar::{GammaParams, Moments, TruncNormParams};

#[derive(Debug, Clone, PartialEq)]
pub struct NmtfHyper {
    pub lambda_f: Rate,
    pub lambda_s: Rate,
    pub lambda_g: Rate,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NmtfHyper {
    fn default() -> Self {
        Self::uniform(1.0, 1.0, 1.0)
    }
}

impl NmtfHyper {
    pub fn uniform(lambda: f64, alpha: f64, beta: f64) -> Self {
        Self {
            lambda_f: Rate::Scalar(lambda),
            lambda_s: Rate::Scalar(lambda),
            lambda_g: Rate::Scalar(lambda),
            alpha,
            beta,
        }
    }

    pub fn validate(&self, rows: usize, cols: usize, k: usize, l: usize) -> Result<()> {
        if k == 0 || l == 0 {
            return Err(invalid("K and L must be at least 1"));
        }
        self.lambda_f.validate("lambda_f", (rows, k))?;
        self.lambda_s.validate("lambda_s", (k, l))?;
        self.lambda_g.validate("lambda_g", (cols, l))?;
        check_positive("alpha", self.alpha)?;
        check_positive("beta", self.beta)
    }

    pub fn tau_prior(&self) -> GammaParams {
        GammaParams {
            shape: self.alpha,
            rate: self.beta,
        }
    }

    /// Hyperparameters of the transposed problem: F and G swap, S transposes.
    pub fn transposed(&self) -> Self {
        let t = |r: &Rate| match r {
            Rate::Scalar(v) => Rate::Scalar(*v),
            Rate::Matrix(m) => Rate::Matrix(m.t().to_owned()),
        };
        Self {
            lambda_f: self.lambda_g.clone(),
            lambda_s: t(&self.lambda_s),
            lambda_g: self.lambda_f.clone(),
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmtfPointState {
    pub f: Array2<f64>,
    pub s: Array2<f64>,
    pub g: Array2<f64>,
    pub tau: f64,
}

impl NmtfPointState {
    /// Starting point under `scheme`. K-means indicators carry the standard
    /// smoothing for point states.
    pub fn init<R: Rng + ?Sized>(
        data: &ObservedMatrix,
        k: usize,
        l: usize,
        hyper: &NmtfHyper,
        scheme: InitScheme,
        rng: &mut R,
    ) -> Result<Self> {
        init_point(data, k, l, hyper, scheme, KMEANS_SMOOTHING, rng)
    }

    pub fn ranks(&self) -> (usize, usize) {
        self.s.dim()
    }

    pub fn product(&self) -> Array2<f64> {
        self.f.dot(&self.s).dot(&self.g.t())
    }

    pub fn transposed(&self) -> Self {
        Self {
            f: self.g.clone(),
            s: self.s.t().to_owned(),
            g: self.f.clone(),
            tau: self.tau,
        }
    }
}

fn init_point<R: Rng + ?Sized>(
    data: &ObservedMatrix,
    k: usize,
    l: usize,
    hyper: &NmtfHyper,
    scheme: InitScheme,
    smoothing: f64,
    rng: &mut R,
) -> Result<NmtfPointState> {
    let (rows, cols) = data.dim();
    hyper.validate(rows, cols, k, l)?;
    let (f, s, g, tau) = match scheme {
        InitScheme::PriorMean => (
            Array2::from_shape_fn((rows, k), |(i, c)| 1.0 / hyper.lambda_f.at(i, c)),
            Array2::from_shape_fn((k, l), |(a, b)| 1.0 / hyper.lambda_s.at(a, b)),
            Array2::from_shape_fn((cols, l), |(j, c)| 1.0 / hyper.lambda_g.at(j, c)),
            hyper.tau_prior().mean(),
        ),
        InitScheme::PriorDraw => {
            let f = draw_exponential(rows, k, &hyper.lambda_f, rng);
            let s = draw_exponential(k, l, &hyper.lambda_s, rng);
            let g = draw_exponential(cols, l, &hyper.lambda_g, rng);
            (f, s, g, hyper.tau_prior().sample(rng))
        }
        InitScheme::KMeans => {
            let (f, g) = kmeans::kmeans_init(data, k, l, smoothing, rng)?;
            let s = draw_exponential(k, l, &hyper.lambda_s, rng);
            (f, s, g, hyper.tau_prior().sample(rng))
        }
    };
    Ok(NmtfPointState { f, s, g, tau })
}

/// Mean-field posterior over F, S, G and τ with cached moments.
#[derive(Debug, Clone, PartialEq)]
pub struct NmtfVariationalState {
    pub mu_f: Array2<f64>,
    pub prec_f: Array2<f64>,
    pub exp_f: Array2<f64>,
    pub var_f: Array2<f64>,
    pub mu_s: Array2<f64>,
    pub prec_s: Array2<f64>,
    pub exp_s: Array2<f64>,
    pub var_s: Array2<f64>,
    pub mu_g: Array2<f64>,
    pub prec_g: Array2<f64>,
    pub exp_g: Array2<f64>,
    pub var_g: Array2<f64>,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub exp_tau: f64,
}

/// Which factor matrix an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    F,
    S,
    G,
}

impl NmtfVariationalState {
    /// K-means indicators are used without smoothing as the location parameters.
    pub fn init<R: Rng + ?Sized>(
        data: &ObservedMatrix,
        k: usize,
        l: usize,
        hyper: &NmtfHyper,
        scheme: InitScheme,
        rng: &mut R,
    ) -> Result<Self> {
        let p = init_point(data, k, l, hyper, scheme, 0.0, rng)?;
        Ok(Self::from_locations(p, hyper.alpha))
    }

    /// Unit-precision q centred on `p`, with β* chosen so that τ̃ = p.tau.
    pub fn from_locations(p: NmtfPointState, alpha: f64) -> Self {
        let zeros = |a: &Array2<f64>| Array2::zeros(a.dim());
        let ones = |a: &Array2<f64>| Array2::ones(a.dim());
        let mut q = Self {
            prec_f: ones(&p.f),
            exp_f: zeros(&p.f),
            var_f: zeros(&p.f),
            prec_s: ones(&p.s),
            exp_s: zeros(&p.s),
            var_s: zeros(&p.s),
            prec_g: ones(&p.g),
            exp_g: zeros(&p.g),
            var_g: zeros(&p.g),
            mu_f: p.f,
            mu_s: p.s,
            mu_g: p.g,
            alpha_star: alpha,
            beta_star: alpha / p.tau,
            exp_tau: p.tau,
        };
        q.refresh_all();
        q
    }

    pub fn ranks(&self) -> (usize, usize) {
        self.mu_s.dim()
    }

    pub fn params(&self, which: Factor, r: usize, c: usize) -> TruncNormParams {
        let (mu, prec) = match which {
            Factor::F => (&self.mu_f, &self.prec_f),
            Factor::S => (&self.mu_s, &self.prec_s),
            Factor::G => (&self.mu_g, &self.prec_g),
        };
        TruncNormParams {
            mu: mu[[r, c]],
            tau: prec[[r, c]],
        }
    }

    pub(crate) fn set(&mut self, which: Factor, r: usize, c: usize, p: TruncNormParams) {
        let (mu, prec, exp, var) = match which {
            Factor::F => (&mut self.mu_f, &mut self.prec_f, &mut self.exp_f, &mut self.var_f),
            Factor::S => (&mut self.mu_s, &mut self.prec_s, &mut self.exp_s, &mut self.var_s),
            Factor::G => (&mut self.mu_g, &mut self.prec_g, &mut self.exp_g, &mut self.var_g),
        };
        let m = Moments::of(p);
        mu[[r, c]] = p.mu;
        prec[[r, c]] = p.tau;
        exp[[r, c]] = m.mean;
        var[[r, c]] = m.var;
    }

    pub(crate) fn set_tau(&mut self, q: GammaParams) {
        self.alpha_star = q.shape;
        self.beta_star = q.rate;
        self.exp_tau = q.mean();
    }

    pub fn refresh_all(&mut self) {
        for which in [Factor::F, Factor::S, Factor::G] {
            let (rows, cols) = match which {
                Factor::F => self.mu_f.dim(),
                Factor::S => self.mu_s.dim(),
                Factor::G => self.mu_g.dim(),
            };
            for r in 0..rows {
                for c in 0..cols {
                    self.set(which, r, c, self.params(which, r, c));
                }
            }
        }
        self.exp_tau = self.alpha_star / self.beta_star;
    }

    pub fn tau_posterior(&self) -> GammaParams {
        GammaParams {
            shape: self.alpha_star,
            rate: self.beta_star,
        }
    }

    /// F̃ S̃ G̃ᵀ.
    pub fn mean_product(&self) -> Array2<f64> {
        self.exp_f.dot(&self.exp_s).dot(&self.exp_g.t())
    }

    pub fn transposed(&self) -> Self {
        let t = |a: &Array2<f64>| a.t().to_owned();
        Self {
            mu_f: self.mu_g.clone(),
            prec_f: self.prec_g.clone(),
            exp_f: self.exp_g.clone(),
            var_f: self.var_g.clone(),
            mu_s: t(&self.mu_s),
            prec_s: t(&self.prec_s),
            exp_s: t(&self.exp_s),
            var_s: t(&self.var_s),
            mu_g: self.mu_f.clone(),
            prec_g: self.prec_f.clone(),
            exp_g: self.exp_f.clone(),
            var_g: self.var_f.clone(),
            alpha_star: self.alpha_star,
            beta_star: self.beta_star,
            exp_tau: self.exp_tau,
        }
    }
}

pub fn predict_draws(draws: &[NmtfPointState]) -> Result<Array2<f64>> {
    let first = draws.first().ok_or(Error::NoDraws)?;
    let mut acc = first.product();
    for d in &draws[1..] {
        acc += &d.product();
    }
    acc /= draws.len() as f64;
    Ok(acc)
}

/// Writes (F S Gᵀ)_ij for every (i, j) in Ω, given B = F S.
pub(crate) fn fill_prediction(pred: &mut Array2<f64>, omega: &[(usize, usize)], b: &Array2<f64>, g: &Array2<f64>) {
    for &(i, j) in omega {
        pred[[i, j]] = b.row(i).dot(&g.row(j));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data() -> ObservedMatrix {
        ObservedMatrix::fully_observed(Array2::from_shape_fn((5, 4), |(i, j)| (i + 2 * j) as f64)).unwrap()
    }

    #[test]
    fn prior_mean_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = NmtfPointState::init(&data(), 2, 3, &NmtfHyper::uniform(2.0, 1.0, 1.0), InitScheme::PriorMean, &mut rng)
            .unwrap();
        assert_eq!(s.ranks(), (2, 3));
        assert!(s.f.iter().chain(s.s.iter()).chain(s.g.iter()).all(|&x| x == 0.5));
        assert_eq!(s.tau, 1.0);
    }

    #[test]
    fn kmeans_init_smoothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = NmtfPointState::init(&data(), 2, 2, &NmtfHyper::default(), InitScheme::KMeans, &mut rng).unwrap();
        assert!(p.f.iter().chain(p.g.iter()).all(|&x| x == 0.2 || x == 1.2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = NmtfVariationalState::init(&data(), 2, 2, &NmtfHyper::default(), InitScheme::KMeans, &mut rng).unwrap();
        assert!(q.mu_f.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn zero_rank_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(NmtfPointState::init(&data(), 0, 2, &NmtfHyper::default(), InitScheme::PriorMean, &mut rng).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let p = NmtfPointState {
            f: array![[1.0, 2.0]],
            s: array![[1.0, 0.0, 2.0], [0.5, 1.0, 0.0]],
            g: array![[1.0, 1.0, 1.0], [0.0, 2.0, 1.0]],
            tau: 3.0,
        };
        assert_eq!(p.transposed().product(), p.product().t());
        assert_eq!(p.transposed().transposed(), p);
    }
}
