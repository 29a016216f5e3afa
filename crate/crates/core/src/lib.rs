//! Backtesting engine for day-ahead offer strategies of stochastic
//! generators in markets with a single-price balancing mechanism.
//!
//! The crate covers the full loop: market data (historic CSV or synthetic),
//! probabilistic system-length forecasts, day-ahead and regulation price
//! forecasts, wind power quantile forecasts, the offer strategies themselves,
//! single-price settlement, and the evaluation suite (Brier decomposition,
//! ROC, revenue, value at risk, imbalance statistics).
//!
//! Numeric code is generic over the scalar type via [`scalar::Scalar`];
//! `f64` aliases for the model types are exported at the crate root.

pub mod backtest;
pub mod data;
pub mod evaluation;
mod linalg;
mod optim;
pub mod power;
pub mod price;
pub mod scalar;
pub mod settlement;
pub mod strategy;
pub mod synth;
pub mod system_length;

pub use scalar::Scalar;

/// `f64` instantiations of the scalar-generic model and report types.
pub type PriceTriple64 = settlement::PriceTriple<f64>;
pub type SettlementResult64 = settlement::SettlementResult<f64>;
pub type LogisticModel64 = system_length::LogisticModel<f64>;
pub type ArmaxModel64 = price::ArmaxModel<f64>;
pub type BoostedQuantileModel64 = power::BoostedQuantileModel<f64>;
pub type QuantileForecast64 = power::QuantileForecast<f64>;
pub type BrierReport64 = evaluation::BrierReport<f64>;
pub type RocCurve64 = evaluation::RocCurve<f64>;
