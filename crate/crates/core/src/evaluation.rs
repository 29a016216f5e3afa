//! Forecast and revenue scoring: Brier score with its
//! reliability/resolution/uncertainty decomposition, ROC curves, empirical
//! value at risk and imbalance statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("empty input")]
    Empty,
    #[error("forecast probability outside [0, 1]")]
    BadProbability,
    #[error("both outcome classes must be present")]
    SingleClass,
    #[error("alpha must lie strictly inside (0, 1)")]
    BadAlpha,
}

/// Number of forecast bins for the Brier decomposition: centres 0.00, 0.05,
/// ..., 1.00.
pub const BRIER_BINS: usize = 21;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrierBin<T> {
    pub center: T,
    pub count: usize,
    /// Mean outcome among forecasts snapped to this bin.
    pub mean_outcome: T,
}

/// Brier score report. The decomposition is computed on forecasts snapped to
/// the nearest of the 21 bin centres, which makes the identity
/// `brier_snapped = reliability - resolution + uncertainty` exact; the raw
/// (un-snapped) score is reported alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrierReport<T> {
    pub brier_raw: T,
    pub brier_snapped: T,
    pub reliability: T,
    pub resolution: T,
    pub uncertainty: T,
    pub bins: Vec<BrierBin<T>>,
    pub n: usize,
}

fn bin_index<T: Scalar>(phi: T) -> usize {
    let scaled = phi * T::from_usize_lossy(BRIER_BINS - 1);
    let idx = scaled.round().to_usize().unwrap_or(0);
    idx.min(BRIER_BINS - 1)
}

/// Brier score of probabilistic binary forecasts with the Murphy
/// decomposition over 21 forecast bins.
pub fn brier<T: Scalar>(forecasts: &[T], outcomes: &[bool]) -> Result<BrierReport<T>, EvalError> {
    if forecasts.is_empty() || forecasts.len() != outcomes.len() {
        return Err(EvalError::Empty);
    }
    if forecasts.iter().any(|&p| p < T::zero() || p > T::one() || !p.is_finite()) {
        return Err(EvalError::BadProbability);
    }
    let n = forecasts.len();
    let n_t = T::from_usize_lossy(n);

    let mut counts = [0usize; BRIER_BINS];
    let mut positives = [0usize; BRIER_BINS];
    let mut raw = T::zero();
    let mut snapped = T::zero();
    for (&phi, &o) in forecasts.iter().zip(outcomes) {
        let o_t = if o { T::one() } else { T::zero() };
        raw += (phi - o_t) * (phi - o_t);
        let k = bin_index(phi);
        let center = bin_center::<T>(k);
        snapped += (center - o_t) * (center - o_t);
        counts[k] += 1;
        if o {
            positives[k] += 1;
        }
    }
    raw = raw / n_t;
    snapped = snapped / n_t;

    let total_pos: usize = positives.iter().sum();
    let o_bar = T::from_usize_lossy(total_pos) / n_t;

    let mut reliability = T::zero();
    let mut resolution = T::zero();
    let mut bins = Vec::with_capacity(BRIER_BINS);
    for k in 0..BRIER_BINS {
        let center = bin_center::<T>(k);
        if counts[k] == 0 {
            bins.push(BrierBin { center, count: 0, mean_outcome: T::zero() });
            continue;
        }
        let n_k = T::from_usize_lossy(counts[k]);
        let o_k = T::from_usize_lossy(positives[k]) / n_k;
        reliability += n_k * (center - o_k) * (center - o_k);
        resolution += n_k * (o_k - o_bar) * (o_k - o_bar);
        bins.push(BrierBin { center, count: counts[k], mean_outcome: o_k });
    }
    reliability = reliability / n_t;
    resolution = resolution / n_t;
    let uncertainty = o_bar * (T::one() - o_bar);

    Ok(BrierReport {
        brier_raw: raw,
        brier_snapped: snapped,
        reliability,
        resolution,
        uncertainty,
        bins,
        n,
    })
}

fn bin_center<T: Scalar>(k: usize) -> T {
    T::from_usize_lossy(k) / T::from_usize_lossy(BRIER_BINS - 1)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RocPoint<T> {
    pub threshold: T,
    pub false_positive_rate: T,
    pub true_positive_rate: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve<T> {
    /// Points ordered from (0, 0) to (1, 1), one per distinct threshold.
    pub points: Vec<RocPoint<T>>,
    /// Area under the curve by the trapezoid rule.
    pub auc: T,
}

/// ROC curve over all distinct forecast thresholds; classify positive when
/// `forecast >= threshold`.
pub fn roc<T: Scalar>(forecasts: &[T], outcomes: &[bool]) -> Result<RocCurve<T>, EvalError> {
    if forecasts.is_empty() || forecasts.len() != outcomes.len() {
        return Err(EvalError::Empty);
    }
    let pos = outcomes.iter().filter(|&&o| o).count();
    let neg = outcomes.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..forecasts.len()).collect();
    order.sort_by(|&a, &b| forecasts[b].partial_cmp(&forecasts[a]).unwrap_or(std::cmp::Ordering::Equal));

    let pos_t = T::from_usize_lossy(pos);
    let neg_t = T::from_usize_lossy(neg);
    let mut points = vec![RocPoint {
        threshold: T::infinity(),
        false_positive_rate: T::zero(),
        true_positive_rate: T::zero(),
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let value = forecasts[order[i]];
        // absorb the whole tie group before emitting a point
        while i < order.len() && forecasts[order[i]] == value {
            if outcomes[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: value,
            false_positive_rate: T::from_usize_lossy(fp) / neg_t,
            true_positive_rate: T::from_usize_lossy(tp) / pos_t,
        });
    }

    let mut auc = T::zero();
    let half = T::from_f64_lossy(0.5);
    for w in points.windows(2) {
        let dx = w[1].false_positive_rate - w[0].false_positive_rate;
        auc += dx * (w[0].true_positive_rate + w[1].true_positive_rate) * half;
    }
    Ok(RocCurve { points, auc })
}

/// Empirical `alpha`-percentile of period revenues: the value the revenue
/// falls below with probability `alpha`. Linear interpolation between the
/// closest order statistics.
pub fn var_alpha<T: Scalar>(revenues: &[T], alpha: T) -> Result<T, EvalError> {
    if revenues.is_empty() {
        return Err(EvalError::Empty);
    }
    if alpha <= T::zero() || alpha >= T::one() {
        return Err(EvalError::BadAlpha);
    }
    let mut sorted = revenues.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(quantile_sorted(&sorted, alpha))
}

/// Interpolated quantile of an ascending-sorted slice (the `(n-1)p` rule).
pub(crate) fn quantile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = T::from_usize_lossy(n - 1) * p;
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::from_usize_lossy(lo);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Mean absolute imbalance as a percentage of `e_max`.
pub fn mean_abs_imbalance<T: Scalar>(contracted: &[T], generated: &[T], e_max: T) -> Result<T, EvalError> {
    if contracted.is_empty() || contracted.len() != generated.len() {
        return Err(EvalError::Empty);
    }
    let sum: T = contracted
        .iter()
        .zip(generated)
        .map(|(&c, &g)| (c - g).abs())
        .sum();
    let mean = sum / T::from_usize_lossy(contracted.len());
    Ok(mean / e_max * T::from_f64_lossy(100.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn perfect_confident_forecasts_score_zero() {
        let outcomes = vec![true, false, true, true, false];
        let forecasts: Vec<f64> = outcomes.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
        let rep = brier(&forecasts, &outcomes).unwrap();
        assert_eq!(rep.brier_raw, 0.0);
        assert_eq!(rep.brier_snapped, 0.0);
        assert_eq!(rep.reliability, 0.0);
    }

    #[test]
    fn constant_half_scores_quarter_exactly() {
        let outcomes = vec![true, false, true, false, false, true, true];
        let forecasts = vec![0.5; 7];
        let rep = brier(&forecasts, &outcomes).unwrap();
        assert_eq!(rep.brier_raw, 0.25);
        assert_eq!(rep.brier_snapped, 0.25);
    }

    #[test]
    fn constant_climatology_is_all_uncertainty() {
        // phi == o_bar = 0.75 (a bin centre): reliability ~ 0, resolution 0
        let outcomes = vec![true, true, true, false];
        let forecasts = vec![0.75f64; 4];
        let rep = brier(&forecasts, &outcomes).unwrap();
        assert!(rep.reliability.abs() < 1e-15);
        assert_eq!(rep.resolution, 0.0);
        assert!((rep.brier_snapped - rep.uncertainty).abs() < 1e-15);
        assert_eq!(rep.uncertainty, 0.75 * 0.25);
    }

    #[test]
    fn decomposition_identity_on_random_sets() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(5..400);
            let forecasts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let outcomes: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            if outcomes.iter().all(|&o| o) || outcomes.iter().all(|&o| !o) {
                continue;
            }
            let rep = brier(&forecasts, &outcomes).unwrap();
            let identity = rep.reliability - rep.resolution + rep.uncertainty;
            assert!(
                (identity - rep.brier_snapped).abs() < 1e-10,
                "identity violated: {} vs {}",
                identity,
                rep.brier_snapped
            );
        }
    }

    #[test]
    fn snapped_brier_proper_among_constants() {
        // grid search over constant forecasts: minimum at phi = o_bar
        let outcomes: Vec<bool> = (0..20).map(|i| i < 15).collect(); // o_bar = 0.75
        let mut best = (f64::INFINITY, -1.0);
        for k in 0..=20 {
            let c = k as f64 * 0.05;
            let rep = brier(&vec![c; 20], &outcomes).unwrap();
            if rep.brier_snapped < best.0 {
                best = (rep.brier_snapped, c);
            }
        }
        assert_eq!(best.1, 0.75);
    }

    #[test]
    fn brier_rejects_bad_input() {
        assert_eq!(brier::<f64>(&[], &[]).unwrap_err(), EvalError::Empty);
        assert_eq!(brier(&[1.2], &[true]).unwrap_err(), EvalError::BadProbability);
    }

    #[test]
    fn roc_perfect_and_reversed() {
        let outcomes = vec![true, false, true, false];
        let perfect: Vec<f64> = outcomes.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
        let curve = roc(&perfect, &outcomes).unwrap();
        assert_eq!(curve.auc, 1.0);
        let reversed: Vec<f64> = perfect.iter().map(|p| 1.0 - p).collect();
        let curve = roc(&reversed, &outcomes).unwrap();
        assert_eq!(curve.auc, 0.0);
    }

    #[test]
    fn roc_endpoints_and_monotonicity() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let forecasts: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let outcomes: Vec<bool> = (0..200).map(|_| rng.gen_bool(0.5)).collect();
        let curve = roc(&forecasts, &outcomes).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.false_positive_rate, first.true_positive_rate), (0.0, 0.0));
        assert_eq!((last.false_positive_rate, last.true_positive_rate), (1.0, 1.0));
        for w in curve.points.windows(2) {
            assert!(w[1].false_positive_rate >= w[0].false_positive_rate);
            assert!(w[1].true_positive_rate >= w[0].true_positive_rate);
        }
    }

    #[test]
    fn roc_null_forecasts_have_half_auc() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let n = 10_000;
        let forecasts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let outcomes: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let curve = roc(&forecasts, &outcomes).unwrap();
        assert!((curve.auc - 0.5).abs() < 0.03, "auc={}", curve.auc);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let forecasts: Vec<f64> = (0..500).map(|_| rng.gen_range(0.01..0.99)).collect();
        let outcomes: Vec<bool> = forecasts.iter().map(|&p| rng.gen_bool(p)).collect();
        let base = roc(&forecasts, &outcomes).unwrap().auc;
        let squashed: Vec<f64> = forecasts.iter().map(|&p| p * p * 0.9).collect();
        let transformed = roc(&squashed, &outcomes).unwrap().auc;
        assert!((base - transformed).abs() < 1e-12);
    }

    #[test]
    fn roc_rejects_single_class() {
        assert_eq!(
            roc(&[0.3, 0.6], &[true, true]).unwrap_err(),
            EvalError::SingleClass
        );
    }

    #[test]
    fn var_interpolates_percentile() {
        let revenues: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let v = var_alpha(&revenues, 0.01).unwrap();
        assert!((v - 1.99).abs() < 1e-12);
    }

    #[test]
    fn var_degenerate_and_median() {
        assert_eq!(var_alpha(&[5.0; 8], 0.01).unwrap(), 5.0);
        let revenues = vec![3.0, 1.0, 2.0];
        assert_eq!(var_alpha(&revenues, 0.5).unwrap(), 2.0);
    }

    #[test]
    fn var_monotone_in_alpha() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let revenues: Vec<f64> = (0..300).map(|_| rng.gen_range(-50.0..150.0)).collect();
        let mut last = f64::NEG_INFINITY;
        for k in 1..20 {
            let v = var_alpha(&revenues, k as f64 * 0.05).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn var_rejects_bad_alpha() {
        assert_eq!(var_alpha(&[1.0], 0.0).unwrap_err(), EvalError::BadAlpha);
        assert_eq!(var_alpha::<f64>(&[], 0.5).unwrap_err(), EvalError::Empty);
    }

    #[test]
    fn imbalance_percentage() {
        let zero = mean_abs_imbalance(&[3.0, 4.0], &[3.0, 4.0], 10.0).unwrap();
        assert_eq!(zero, 0.0);
        // alternating +-0.5 e_max
        let c = vec![7.5, 2.5, 7.5, 2.5];
        let g = vec![2.5, 7.5, 2.5, 7.5];
        let half = mean_abs_imbalance(&c, &g, 10.0).unwrap();
        assert_eq!(half, 50.0);
    }
}
