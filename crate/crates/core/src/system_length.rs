//! Probabilistic system-length forecasting.
//!
//! The probability that the system is short, `phi = P(NIV > 0 | X)`, is
//! modelled by logistic regression, `phi = 1 / (1 + exp(-beta . X))`, with
//! the coefficients estimated by maximum likelihood. One model is fit per
//! settlement period. The empirical proportion of short periods serves as
//! the benchmark forecast, and deterministic forecasts round `phi >= 0.5`
//! to "short".
//!
//! Fitting uses iteratively reweighted least squares on features
//! standardised with training-fold statistics; standardisation is absorbed
//! into the coefficients, so reported coefficients and standard errors are
//! on the raw feature scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_spd, spd_inverse};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemLengthError {
    #[error("need at least {need} observations for {dim} coefficients, got {got}")]
    TooFewObservations { need: usize, got: usize, dim: usize },
    #[error("training outcomes contain a single class")]
    SingleClass,
    #[error("feature dimension mismatch: model has {model}, input has {input}")]
    DimensionMismatch { model: usize, input: usize },
    #[error("feature rows have inconsistent lengths")]
    RaggedFeatures,
    #[error("iteratively reweighted least squares failed to produce finite coefficients")]
    Diverged,
    #[error("empty training group")]
    EmptyGroup,
}

/// Deterministic system-length call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemLength {
    Short,
    Long,
}

const MAX_ITERATIONS: usize = 100;
const REL_TOLERANCE: f64 = 1e-8;
const SEPARATION_BETA: f64 = 30.0;
const RIDGE: f64 = 1e-6;

/// Fitted per-period logistic model of `P(NIV > 0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel<T> {
    pub period: u8,
    pub feature_names: Vec<String>,
    /// Coefficients on the standardised scale, intercept first.
    beta: Vec<T>,
    /// Training means/sds of the raw (non-intercept) features.
    means: Vec<T>,
    sds: Vec<T>,
    /// Covariance of the standardised-scale coefficients, row-major.
    cov: Vec<T>,
    pub iterations: usize,
    pub log_likelihood: T,
    /// Set when quasi-separation forced the ridge fallback.
    pub separation_flagged: bool,
}

fn sigmoid<T: Scalar>(eta: T) -> T {
    let cap = T::from_f64_lossy(35.0);
    let eta = eta.max(-cap).min(cap);
    T::one() / (T::one() + (-eta).exp())
}

impl<T: Scalar> LogisticModel<T> {
    /// Fits by maximum likelihood (IRLS). `features` are raw, without an
    /// intercept column; `outcomes` are `true` for short periods.
    pub fn fit(
        period: u8,
        feature_names: &[&str],
        features: &[Vec<T>],
        outcomes: &[bool],
    ) -> Result<Self, SystemLengthError> {
        let k = feature_names.len();
        let dim = k + 1;
        let n = outcomes.len();
        if features.len() != n || features.iter().any(|row| row.len() != k) {
            return Err(SystemLengthError::RaggedFeatures);
        }
        if n < 10 * dim {
            return Err(SystemLengthError::TooFewObservations { need: 10 * dim, got: n, dim });
        }
        let shorts = outcomes.iter().filter(|&&o| o).count();
        if shorts == 0 || shorts == n {
            return Err(SystemLengthError::SingleClass);
        }

        // standardise with training statistics
        let mut means = vec![T::zero(); k];
        let mut sds = vec![T::one(); k];
        let n_t = T::from_usize_lossy(n);
        for j in 0..k {
            let mean = features.iter().map(|r| r[j]).sum::<T>() / n_t;
            let var = features.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<T>() / n_t;
            means[j] = mean;
            sds[j] = var.sqrt().max(T::from_f64_lossy(1e-12));
        }
        let mut x = vec![T::zero(); n * dim];
        for (i, row) in features.iter().enumerate() {
            x[i * dim] = T::one();
            for j in 0..k {
                x[i * dim + j + 1] = (row[j] - means[j]) / sds[j];
            }
        }

        match Self::irls(&x, outcomes, n, dim, T::zero()) {
            Ok(fit) if !fit.separated => Ok(Self {
                period,
                feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
                beta: fit.beta,
                means,
                sds,
                cov: fit.cov,
                iterations: fit.iterations,
                log_likelihood: fit.log_likelihood,
                separation_flagged: false,
            }),
            // separation or a singular system: refit with an L2 penalty on
            // the non-intercept coefficients and flag the model
            _ => {
                let fit = Self::irls(&x, outcomes, n, dim, T::from_f64_lossy(RIDGE))
                    .map_err(|_| SystemLengthError::Diverged)?;
                Ok(Self {
                    period,
                    feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
                    beta: fit.beta,
                    means,
                    sds,
                    cov: fit.cov,
                    iterations: fit.iterations,
                    log_likelihood: fit.log_likelihood,
                    separation_flagged: true,
                })
            }
        }
    }

    fn irls(
        x: &[T],
        outcomes: &[bool],
        n: usize,
        dim: usize,
        ridge: T,
    ) -> Result<IrlsFit<T>, SystemLengthError> {
        let mut beta = vec![T::zero(); dim];
        let mut log_lik = T::neg_infinity();
        let mut iterations = 0;
        let floor = T::from_f64_lossy(1e-10);
        let eps = T::from_f64_lossy(1e-12).max(T::epsilon());
        let mut gram = vec![T::zero(); dim * dim];

        for iter in 1..=MAX_ITERATIONS {
            iterations = iter;
            gram.iter_mut().for_each(|g| *g = T::zero());
            let mut rhs = vec![T::zero(); dim];
            let mut ll = T::zero();
            for i in 0..n {
                let row = &x[i * dim..(i + 1) * dim];
                let mut eta = T::zero();
                for j in 0..dim {
                    eta += row[j] * beta[j];
                }
                let phi = sigmoid(eta);
                let o = if outcomes[i] { T::one() } else { T::zero() };
                let p = phi.max(eps).min(T::one() - eps);
                ll += o * p.ln() + (T::one() - o) * (T::one() - p).ln();
                let w = (phi * (T::one() - phi)).max(floor);
                let z = eta + (o - phi) / w;
                for a in 0..dim {
                    rhs[a] += w * row[a] * z;
                    for b in 0..=a {
                        gram[a * dim + b] = gram[a * dim + b] + w * row[a] * row[b];
                    }
                }
            }
            for a in 0..dim {
                for b in a + 1..dim {
                    gram[a * dim + b] = gram[b * dim + a];
                }
                if a > 0 {
                    gram[a * dim + a] = gram[a * dim + a] + ridge;
                }
            }
            let new_beta = solve_spd(&gram, &rhs, dim).ok_or(SystemLengthError::Diverged)?;
            if new_beta.iter().any(|b| !b.is_finite()) {
                return Err(SystemLengthError::Diverged);
            }
            beta = new_beta;
            let rel = (ll - log_lik).abs() / (log_lik.abs() + T::one());
            log_lik = ll;
            if iter > 1 && rel < T::from_f64_lossy(REL_TOLERANCE) {
                break;
            }
        }

        let separated = beta
            .iter()
            .any(|b| b.abs() > T::from_f64_lossy(SEPARATION_BETA));
        let cov = spd_inverse(&gram, dim).ok_or(SystemLengthError::Diverged)?;
        Ok(IrlsFit { beta, cov, iterations, log_likelihood: log_lik, separated })
    }

    /// Builds a model directly from raw-scale coefficients (intercept
    /// first); used for deserialised models and tests.
    pub fn from_coefficients(period: u8, feature_names: &[&str], beta_raw: &[T]) -> Self {
        let k = feature_names.len();
        assert_eq!(beta_raw.len(), k + 1, "intercept plus one coefficient per feature");
        Self {
            period,
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            beta: beta_raw.to_vec(),
            means: vec![T::zero(); k],
            sds: vec![T::one(); k],
            cov: vec![T::zero(); (k + 1) * (k + 1)],
            iterations: 0,
            log_likelihood: T::nan(),
            separation_flagged: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Probability the system is short for a raw feature vector.
    pub fn predict_phi(&self, features: &[T]) -> Result<T, SystemLengthError> {
        if features.len() + 1 != self.beta.len() {
            return Err(SystemLengthError::DimensionMismatch {
                model: self.beta.len() - 1,
                input: features.len(),
            });
        }
        let mut eta = self.beta[0];
        for j in 0..features.len() {
            eta += self.beta[j + 1] * (features[j] - self.means[j]) / self.sds[j];
        }
        Ok(sigmoid(eta))
    }

    /// Deterministic forecast: short iff `phi >= 0.5`.
    pub fn predict_deterministic(&self, features: &[T]) -> Result<SystemLength, SystemLengthError> {
        Ok(deterministic_from_phi(self.predict_phi(features)?))
    }

    /// Coefficients on the raw feature scale, intercept first.
    pub fn coefficients(&self) -> Vec<T> {
        let k = self.means.len();
        let mut raw = vec![T::zero(); k + 1];
        raw[0] = self.beta[0];
        for j in 0..k {
            raw[j + 1] = self.beta[j + 1] / self.sds[j];
            raw[0] = raw[0] - self.beta[j + 1] * self.means[j] / self.sds[j];
        }
        raw
    }

    /// Standard errors of the raw-scale coefficients, intercept first.
    /// Derived from the inverse Fisher information at the optimum, mapped
    /// through the affine de-standardisation.
    pub fn standard_errors(&self) -> Vec<T> {
        let dim = self.beta.len();
        let k = dim - 1;
        // rows of the affine map raw = A . std
        let mut a = vec![T::zero(); dim * dim];
        a[0] = T::one();
        for j in 0..k {
            a[j + 1] = -self.means[j] / self.sds[j]; // row 0
            a[(j + 1) * dim + (j + 1)] = T::one() / self.sds[j];
        }
        let mut se = vec![T::zero(); dim];
        for r in 0..dim {
            let mut var = T::zero();
            for i in 0..dim {
                for j in 0..dim {
                    var += a[r * dim + i] * self.cov[i * dim + j] * a[r * dim + j];
                }
            }
            se[r] = var.max(T::zero()).sqrt();
        }
        se
    }
}

struct IrlsFit<T> {
    beta: Vec<T>,
    cov: Vec<T>,
    iterations: usize,
    log_likelihood: T,
    separated: bool,
}

/// Deterministic rounding of a probabilistic forecast.
pub fn deterministic_from_phi<T: Scalar>(phi: T) -> SystemLength {
    if phi >= T::from_f64_lossy(0.5) {
        SystemLength::Short
    } else {
        SystemLength::Long
    }
}

/// Historic proportion of short outcomes; the benchmark forecast for one
/// settlement period.
pub fn empirical_proportion<T: Scalar>(outcomes: &[bool]) -> Result<T, SystemLengthError> {
    if outcomes.is_empty() {
        return Err(SystemLengthError::EmptyGroup);
    }
    let shorts = outcomes.iter().filter(|&&o| o).count();
    Ok(T::from_usize_lossy(shorts) / T::from_usize_lossy(outcomes.len()))
}
