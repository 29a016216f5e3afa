//! Day-ahead offer strategies.
//!
//! Every strategy that takes a position decides the direction the same way:
//! bid high (the "long" branch) when the forecast short-probability `phi`
//! lies below the critical probability `Phi`, bid low otherwise, with the
//! tie `phi == Phi` resolving to the short branch. They differ in how far
//! from the point forecast they move: all the way to the bounds
//! (zero/max), a fixed adjustment (additive), a proportional adjustment
//! (multiplicative), or a predictive quantile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::QuantileForecast;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("invalid strategy parameter: {0}")]
    InvalidParam(String),
    #[error("quantile strategy requires a quantile forecast")]
    MissingQuantiles,
    #[error("known-NIV strategy requires the realised system length")]
    MissingKnownSign,
}

/// Which side of the critical probability the decision fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `phi < Phi`: bid as if the system will be long.
    Long,
    /// `phi >= Phi`: bid as if the system will be short.
    Short,
    /// Strategy does not condition on the critical probability.
    NotApplicable,
}

/// Strategy selection and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyParams<T> {
    /// Offer the point forecast; minimises imbalance exposure.
    MinImbalance,
    /// Oracle: offer 0/e_max from the realised system length.
    KnownNiv,
    /// Zero/max from the deterministic rounding of `phi`.
    DeterministicSl,
    /// Zero/max from the probabilistic rule `phi < Phi`.
    ProbabilisticZeroMax,
    /// Point forecast plus/minus `nu * e_max`, clipped.
    Additive { nu: T },
    /// Point forecast scaled by `1 +/- eta`, clipped.
    Multiplicative { eta: T },
    /// Predictive quantile `alpha_prime` (long) or `1 - alpha_prime` (short).
    Quantile { alpha_prime: T },
}

impl<T: Scalar> StrategyParams<T> {
    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            Self::Additive { nu } => {
                if *nu < T::zero() || *nu > T::one() || !nu.is_finite() {
                    return Err(StrategyError::InvalidParam(format!("nu must be in [0, 1], got {nu}")));
                }
            }
            Self::Multiplicative { eta } => {
                if *eta < T::zero() || !eta.is_finite() {
                    return Err(StrategyError::InvalidParam(format!("eta must be >= 0, got {eta}")));
                }
            }
            Self::Quantile { alpha_prime } => {
                let half = T::from_f64_lossy(0.5);
                if *alpha_prime < half || *alpha_prime >= T::one() || !alpha_prime.is_finite() {
                    return Err(StrategyError::InvalidParam(format!(
                        "alpha_prime must be in [0.5, 1), got {alpha_prime}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Stable label used in reports and ledgers.
    pub fn label(&self) -> String {
        match self {
            Self::MinImbalance => "min_imbalance".into(),
            Self::KnownNiv => "known_niv".into(),
            Self::DeterministicSl => "deterministic_sl".into(),
            Self::ProbabilisticZeroMax => "probabilistic_zero_max".into(),
            Self::Additive { nu } => format!("additive(nu={nu})"),
            Self::Multiplicative { eta } => format!("multiplicative(eta={eta})"),
            Self::Quantile { alpha_prime } => format!("quantile(alpha_prime={alpha_prime})"),
        }
    }
}

/// Everything a strategy may condition on for one settlement period.
#[derive(Debug, Clone)]
pub struct StrategyInputs<'a, T> {
    pub e_max: T,
    /// Forecast probability the system is short.
    pub phi: T,
    /// Forecast critical probability; `None` when the price forecast was
    /// degenerate (`pi_up == pi_down`).
    pub phi_crit: Option<T>,
    /// Point forecast of own generation.
    pub e_hat: T,
    pub quantiles: Option<&'a QuantileForecast<T>>,
    /// Realised system length, available in backtests for the oracle
    /// strategy only.
    pub known_short: Option<bool>,
}

/// One period's decision together with what produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfferDecision<T> {
    pub offer: T,
    pub branch: Branch,
    /// The strategy needed the critical probability but it was degenerate,
    /// so the decision fell back to offering the point forecast.
    pub fallback: bool,
}

fn clamp<T: Scalar>(v: T, e_max: T) -> T {
    v.max(T::zero()).min(e_max)
}

/// `true` when the probabilistic rule selects the long branch.
pub fn long_branch<T: Scalar>(phi: T, phi_crit: T) -> bool {
    phi < phi_crit
}

pub fn offer_min_imbalance<T: Scalar>(e_hat: T, e_max: T) -> T {
    clamp(e_hat, e_max)
}

pub fn offer_known_niv<T: Scalar>(short: bool, e_max: T) -> T {
    if short {
        T::zero()
    } else {
        e_max
    }
}

pub fn offer_probabilistic<T: Scalar>(phi: T, phi_crit: T, e_max: T) -> T {
    if long_branch(phi, phi_crit) {
        e_max
    } else {
        T::zero()
    }
}

pub fn offer_additive<T: Scalar>(e_hat: T, phi: T, phi_crit: T, nu: T, e_max: T) -> T {
    if long_branch(phi, phi_crit) {
        e_max.min(e_hat + nu * e_max)
    } else {
        T::zero().max(e_hat - nu * e_max)
    }
}

pub fn offer_multiplicative<T: Scalar>(e_hat: T, phi: T, phi_crit: T, eta: T, e_max: T) -> T {
    if long_branch(phi, phi_crit) {
        e_max.min((T::one() + eta) * e_hat)
    } else {
        T::zero().max((T::one() - eta) * e_hat)
    }
}

pub fn offer_quantile<T: Scalar>(
    quantiles: &QuantileForecast<T>,
    phi: T,
    phi_crit: T,
    alpha_prime: T,
) -> T {
    if long_branch(phi, phi_crit) {
        quantiles.quantile(alpha_prime)
    } else {
        quantiles.quantile(T::one() - alpha_prime)
    }
}

/// Applies a strategy to one period's inputs. Strategies that need the
/// critical probability fall back to the point forecast when it is
/// degenerate: with both imbalance directions cost-equivalent in
/// expectation, minimising the imbalance is the neutral action.
pub fn decide<T: Scalar>(
    params: &StrategyParams<T>,
    inputs: &StrategyInputs<'_, T>,
) -> Result<OfferDecision<T>, StrategyError> {
    params.validate()?;
    let e_max = inputs.e_max;

    let needs_crit = matches!(
        params,
        StrategyParams::ProbabilisticZeroMax
            | StrategyParams::Additive { .. }
            | StrategyParams::Multiplicative { .. }
            | StrategyParams::Quantile { .. }
    );
    let phi_crit = match (needs_crit, inputs.phi_crit) {
        (true, None) => {
            return Ok(OfferDecision {
                offer: offer_min_imbalance(inputs.e_hat, e_max),
                branch: Branch::NotApplicable,
                fallback: true,
            });
        }
        (_, crit) => crit.unwrap_or_else(T::zero),
    };
    let branch = if long_branch(inputs.phi, phi_crit) { Branch::Long } else { Branch::Short };

    let decision = match params {
        StrategyParams::MinImbalance => OfferDecision {
            offer: offer_min_imbalance(inputs.e_hat, e_max),
            branch: Branch::NotApplicable,
            fallback: false,
        },
        StrategyParams::KnownNiv => {
            let short = inputs.known_short.ok_or(StrategyError::MissingKnownSign)?;
            OfferDecision {
                offer: offer_known_niv(short, e_max),
                branch: if short { Branch::Short } else { Branch::Long },
                fallback: false,
            }
        }
        StrategyParams::DeterministicSl => {
            let short = inputs.phi >= T::from_f64_lossy(0.5);
            OfferDecision {
                offer: offer_known_niv(short, e_max),
                branch: if short { Branch::Short } else { Branch::Long },
                fallback: false,
            }
        }
        StrategyParams::ProbabilisticZeroMax => OfferDecision {
            offer: offer_probabilistic(inputs.phi, phi_crit, e_max),
            branch,
            fallback: false,
        },
        StrategyParams::Additive { nu } => OfferDecision {
            offer: offer_additive(inputs.e_hat, inputs.phi, phi_crit, *nu, e_max),
            branch,
            fallback: false,
        },
        StrategyParams::Multiplicative { eta } => OfferDecision {
            offer: offer_multiplicative(inputs.e_hat, inputs.phi, phi_crit, *eta, e_max),
            branch,
            fallback: false,
        },
        StrategyParams::Quantile { alpha_prime } => {
            let q = inputs.quantiles.ok_or(StrategyError::MissingQuantiles)?;
            OfferDecision {
                offer: offer_quantile(q, inputs.phi, phi_crit, *alpha_prime),
                branch,
                fallback: false,
            }
        }
    };
    debug_assert!(decision.offer >= T::zero() && decision.offer <= e_max);
    Ok(decision)
}
