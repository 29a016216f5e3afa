//! Synthetic market data with controllable price asymmetry and NIV
//! predictability.
//!
//! The generator draws day-ahead system forecasts (load, national wind,
//! solar, margin), produces the system length through a logistic link of
//! known coefficients on the standardised forecasts plus logistic noise, and
//! builds regulation prices around the day-ahead price so that
//! `pi_down <= pi_c <= pi_up` holds by construction. The true coefficients,
//! the true short-probability and the true conditional generation quantiles
//! are returned alongside the dataset for oracle checks.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};
use thiserror::Error;

use crate::data::{
    DataError, Dataset, DayType, PeriodStamp, SettlementRecord, PERIODS_PER_DAY,
    SOLAR_FIRST_PERIOD, SOLAR_LAST_PERIOD,
};

/// Quantile levels used throughout: 0.01, 0.05, 0.10, ..., 0.95, 0.99.
pub fn standard_quantile_levels() -> Vec<f64> {
    let mut levels = vec![0.01];
    for i in 1..=19 {
        levels.push(i as f64 * 0.05);
    }
    levels.push(0.99);
    levels
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("span must be at least one day, got {0}")]
    BadSpan(i64),
    #[error("spreads must be non-negative, got up={up}, down={down}")]
    NegativeSpread { up: f64, down: f64 },
    #[error("beta must have {expected} entries (intercept, load, wind, solar, margin), got {got}")]
    BadBeta { expected: usize, got: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Configuration for [`generate`]. Deserialisable from a flat TOML table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Span of the dataset in days.
    pub days: i64,
    /// Maximum deliverable energy per settlement period, MWh.
    pub e_max: f64,
    pub start_date: NaiveDate,
    /// Up-regulation spread per MWh of |NIV|; 0 collapses `pi_up` onto `pi_c`.
    pub spread_up: f64,
    /// Down-regulation spread per MWh of |NIV|.
    pub spread_down: f64,
    /// True system-length coefficients on
    /// `[1, load_std, wind_std, solar_std, margin_std]`.
    pub beta: Vec<f64>,
    /// MWh of NIV per unit of the latent system-length score.
    pub niv_scale: f64,
    /// Mean day-ahead price level, currency/MWh.
    pub price_level: f64,
    /// Amplitude of the within-day price shape.
    pub price_amp: f64,
    /// AR(1) coefficient of the day-ahead price deviation.
    pub price_ar: f64,
    /// Innovation scale of the day-ahead price deviation.
    pub price_noise: f64,
    /// AR(1) coefficient of the latent own-generation process.
    pub wind_ar: f64,
    /// Innovation scale of the latent own-generation process.
    pub wind_noise: f64,
    /// Loading of the national wind forecast on the latent own generation.
    pub wind_coupling: f64,
    /// Offset of the latent score; negative skews generation low.
    pub wind_offset: f64,
    /// Noise of the operator's point forecast, in latent-score units.
    pub forecast_error: f64,
    pub holidays: Vec<NaiveDate>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            days: 60,
            e_max: 10.0,
            start_date: NaiveDate::from_ymd_opt(2016, 1, 4).unwrap(),
            spread_up: 0.06,
            spread_down: 0.06,
            beta: vec![0.1, 0.9, -0.7, 0.4, -0.6],
            niv_scale: 150.0,
            price_level: 38.0,
            price_amp: 6.0,
            price_ar: 0.8,
            price_noise: 2.0,
            wind_ar: 0.96,
            wind_noise: 0.35,
            wind_coupling: 0.12,
            wind_offset: -0.6,
            forecast_error: 0.18,
            holidays: Vec::new(),
        }
    }
}

impl SynthConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(s)
    }
}

/// Ground truth emitted next to the synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthTruth {
    /// Coefficients of the short-probability link on standardised features.
    pub beta: Vec<f64>,
    /// True `P(NIV > 0)` per record.
    pub phi: Vec<f64>,
    /// Quantile levels of `quantiles`.
    pub quantile_levels: Vec<f64>,
    /// True conditional generation quantiles per record (MWh).
    pub quantiles: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn daily_shape(period: u8) -> f64 {
    // one broad peak in the evening, trough overnight
    let t = (period as f64 - 1.0) / PERIODS_PER_DAY as f64;
    (std::f64::consts::TAU * (t - 0.3)).sin()
}

fn solar_bell(period: u8) -> f64 {
    let span = (SOLAR_LAST_PERIOD - SOLAR_FIRST_PERIOD) as f64;
    let x = (period - SOLAR_FIRST_PERIOD) as f64 / span;
    (std::f64::consts::PI * x).sin().powi(2)
}

fn standardise(values: &mut [f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt().max(1e-12);
    for v in values.iter_mut() {
        *v = (*v - mean) / sd;
    }
    (mean, sd)
}

/// Generates a synthetic dataset. Deterministic for a fixed seed.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<(Dataset, SynthTruth), SynthError> {
    if config.days < 1 {
        return Err(SynthError::BadSpan(config.days));
    }
    if config.spread_up < 0.0 || config.spread_down < 0.0 {
        return Err(SynthError::NegativeSpread { up: config.spread_up, down: config.spread_down });
    }
    if config.beta.len() != 5 {
        return Err(SynthError::BadBeta { expected: 5, got: config.beta.len() });
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let n = config.days as usize * PERIODS_PER_DAY as usize;

    let dates: Vec<NaiveDate> = (0..config.days)
        .map(|d| config.start_date + Days::new(d as u64))
        .collect();

    // --- exogenous day-ahead system forecasts ---
    let mut load = vec![0.0; n];
    let mut wind = vec![0.0; n];
    let mut solar = vec![0.0; n];
    let mut margin = vec![0.0; n];

    let mut load_day = 0.0f64;
    let mut margin_day = 0.0f64;
    let mut solar_day = 0.0f64;
    let mut wind_latent = 0.0f64;
    for (di, _) in dates.iter().enumerate() {
        load_day = 0.7 * load_day + 0.71 * std_normal.sample(&mut rng);
        margin_day = 0.6 * margin_day + 0.8 * std_normal.sample(&mut rng);
        solar_day = 0.5 * solar_day + 0.87 * std_normal.sample(&mut rng);
        for p in 1..=PERIODS_PER_DAY {
            let t = di * PERIODS_PER_DAY as usize + p as usize - 1;
            wind_latent = 0.985 * wind_latent + 0.25 * std_normal.sample(&mut rng);
            load[t] = 30_000.0
                + 5_000.0 * daily_shape(p)
                + 1_800.0 * load_day
                + 250.0 * std_normal.sample(&mut rng);
            wind[t] = 7_000.0 * sigmoid(wind_latent);
            margin[t] = 8_000.0 + 1_500.0 * margin_day + 350.0 * std_normal.sample(&mut rng);
            if (SOLAR_FIRST_PERIOD..=SOLAR_LAST_PERIOD).contains(&p) {
                solar[t] = (1_800.0 + 600.0 * solar_day).max(50.0) * solar_bell(p);
            }
        }
    }

    let mut load_std = load.clone();
    standardise(&mut load_std);
    let mut wind_std = wind.clone();
    standardise(&mut wind_std);
    let mut margin_std = margin.clone();
    standardise(&mut margin_std);
    // solar standardised over daylight periods only
    let mut solar_std = vec![0.0; n];
    {
        let daylight: Vec<usize> = (0..n)
            .filter(|&t| {
                let p = (t % PERIODS_PER_DAY as usize) as u8 + 1;
                (SOLAR_FIRST_PERIOD..=SOLAR_LAST_PERIOD).contains(&p)
            })
            .collect();
        let mut vals: Vec<f64> = daylight.iter().map(|&t| solar[t]).collect();
        let (mean, sd) = standardise(&mut vals);
        for (&t, _) in daylight.iter().zip(vals.iter()) {
            solar_std[t] = (solar[t] - mean) / sd;
        }
    }

    // --- system length: logistic link of beta on standardised features ---
    let beta = &config.beta;
    let mut phi_true = vec![0.0; n];
    let mut niv = vec![0.0; n];
    for t in 0..n {
        let p = (t % PERIODS_PER_DAY as usize) as u8 + 1;
        let daylight = (SOLAR_FIRST_PERIOD..=SOLAR_LAST_PERIOD).contains(&p);
        let score = beta[0]
            + beta[1] * load_std[t]
            + beta[2] * wind_std[t]
            + if daylight { beta[3] * solar_std[t] } else { 0.0 }
            + beta[4] * margin_std[t];
        phi_true[t] = sigmoid(score);
        // latent logistic noise: P(score + L > 0) = sigmoid(score)
        let u: f64 = rng.gen_range(1e-12..1.0 - 1e-12);
        let logistic = (u / (1.0 - u)).ln();
        niv[t] = config.niv_scale * (score + logistic);
    }

    // --- prices ---
    let mut pi_c = vec![0.0; n];
    let mut bal = vec![0.0; n];
    let mut price_dev = 0.0f64;
    for t in 0..n {
        let p = (t % PERIODS_PER_DAY as usize) as u8 + 1;
        price_dev = config.price_ar * price_dev + config.price_noise * std_normal.sample(&mut rng);
        pi_c[t] = config.price_level + config.price_amp * daily_shape(p) + price_dev;
        let up_mult: f64 = (0.4 * std_normal.sample(&mut rng)).exp();
        let down_mult: f64 = (0.4 * std_normal.sample(&mut rng)).exp();
        let pi_up = pi_c[t] + config.spread_up * niv[t].abs() * up_mult;
        let pi_down = pi_c[t] - config.spread_down * niv[t].abs() * down_mult;
        bal[t] = if niv[t] > 0.0 { pi_up } else { pi_down };
    }

    // --- own generation, its truth quantiles and the operator forecast ---
    let levels = standard_quantile_levels();
    let normal_dist = NormalDist::new(0.0, 1.0).unwrap();
    let z_levels: Vec<f64> = levels.iter().map(|&a| normal_dist.inverse_cdf(a)).collect();
    let mut gen = vec![0.0; n];
    let mut power_fc = vec![0.0; n];
    let mut quantiles = vec![Vec::new(); n];
    let mut own_latent = 0.0f64;
    for t in 0..n {
        let mean_score = config.wind_ar * own_latent
            + config.wind_coupling * wind_std[t]
            + config.wind_offset;
        let shock = config.wind_noise * std_normal.sample(&mut rng);
        own_latent = config.wind_ar * own_latent + config.wind_coupling * wind_std[t] + shock;
        gen[t] = config.e_max * sigmoid(own_latent + config.wind_offset);
        quantiles[t] = z_levels
            .iter()
            .map(|&z| config.e_max * sigmoid(mean_score + config.wind_noise * z))
            .collect();
        let fc_noise = config.forecast_error * std_normal.sample(&mut rng);
        power_fc[t] = config.e_max * sigmoid(mean_score + fc_noise);
    }

    // --- assemble records ---
    let mut records = Vec::with_capacity(n);
    for (di, &date) in dates.iter().enumerate() {
        let day_type = DayType::from_calendar(date, &config.holidays);
        for p in 1..=PERIODS_PER_DAY {
            let t = di * PERIODS_PER_DAY as usize + p as usize - 1;
            let daylight = (SOLAR_FIRST_PERIOD..=SOLAR_LAST_PERIOD).contains(&p);
            records.push(SettlementRecord {
                stamp: PeriodStamp { date, period: p },
                day_type,
                da_price: pi_c[t],
                bal_price: Some(bal[t]),
                niv: niv[t],
                gen_energy: gen[t],
                load_fc: load[t],
                wind_fc: wind[t],
                solar_fc: daylight.then_some(solar[t]),
                margin_fc: margin[t],
                power_fc: Some(power_fc[t]),
            });
        }
    }

    let dataset = Dataset::new(records, config.e_max, format!("synthetic(seed={seed})"))?;
    let truth = SynthTruth {
        beta: beta.clone(),
        phi: phi_true,
        quantile_levels: levels,
        quantiles,
    };
    Ok((dataset, truth))
}
