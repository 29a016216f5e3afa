//! Single-price imbalance settlement algebra.
//!
//! A participant contracts `E^C` MWh at the day-ahead price and delivers `E`.
//! The signed imbalance `d = E^C - E` is cashed out at the single imbalance
//! price, so the imbalance cost relative to the day-ahead position is
//! `T = (pi_s - pi_c) * d` and period revenue is `R = pi_c * E - T`. When the
//! system is short the imbalance price sits above the day-ahead price and
//! below it when the system is long, which is what makes the direction of an
//! imbalance either a penalty or a reward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SettlementError {
    /// The up- and down-regulation prices coincide, so the critical
    /// probability is undefined and either imbalance direction carries the
    /// same expected cost.
    #[error("degenerate prices: up-regulation equals down-regulation price")]
    DegeneratePrices,
}

/// Day-ahead price together with the up- and down-regulation prices for one
/// settlement period. Regulation semantics put `pi_down <= pi_c <= pi_up`;
/// observed market data can violate that ordering, which is tolerated but
/// reported by [`PriceTriple::is_ordered`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTriple<T> {
    pub pi_c: T,
    pub pi_up: T,
    pub pi_down: T,
}

impl<T: Scalar> PriceTriple<T> {
    pub fn new(pi_c: T, pi_up: T, pi_down: T) -> Self {
        Self { pi_c, pi_up, pi_down }
    }

    /// Whether the regulation ordering `pi_down <= pi_c <= pi_up` holds.
    pub fn is_ordered(&self) -> bool {
        self.pi_down <= self.pi_c && self.pi_c <= self.pi_up
    }

    /// Critical probability at which the expected-cost-optimal offer flips
    /// between the two extremes.
    pub fn critical_probability(&self) -> Result<CriticalProbability<T>, SettlementError> {
        critical_probability(self)
    }
}

/// The cost/loss ratio `(pi_c - pi_down) / (pi_up - pi_down)`, clamped to
/// [0, 1]. `clamped` records that the raw ratio fell outside the unit
/// interval, which only happens when the price ordering is violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalProbability<T> {
    pub value: T,
    pub clamped: bool,
}

/// Computes the critical probability of a price triple.
///
/// Errors with [`SettlementError::DegeneratePrices`] when `pi_up == pi_down`;
/// callers treat both imbalance directions as cost-equivalent in that case.
pub fn critical_probability<T: Scalar>(
    prices: &PriceTriple<T>,
) -> Result<CriticalProbability<T>, SettlementError> {
    if prices.pi_up == prices.pi_down {
        return Err(SettlementError::DegeneratePrices);
    }
    let raw = (prices.pi_c - prices.pi_down) / (prices.pi_up - prices.pi_down);
    let value = raw.max(T::zero()).min(T::one());
    Ok(CriticalProbability { value, clamped: value != raw })
}

/// Outcome of settling one period: the signed imbalance, the imbalance cost
/// relative to the day-ahead position, and the period revenue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlementResult<T> {
    /// `d = contracted - generated` (MWh).
    pub imbalance: T,
    /// `T = (pi_s - pi_c) * d` (currency).
    pub cost: T,
    /// `R = pi_c * generated - T` (currency).
    pub revenue: T,
}

/// Settles one period at the observed imbalance price. Pure algebra: the
/// realised `pi_s` is used whichever side of `pi_c` it falls on, because
/// settlement follows cash flows rather than model assumptions.
pub fn settle<T: Scalar>(contracted: T, generated: T, pi_c: T, pi_s: T) -> SettlementResult<T> {
    let imbalance = contracted - generated;
    let cost = (pi_s - pi_c) * imbalance;
    let revenue = pi_c * generated - cost;
    SettlementResult { imbalance, cost, revenue }
}
