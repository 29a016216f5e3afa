//! Canonical data model for half-hourly settlement periods plus CSV I/O.
//!
//! A dataset is an ordered sequence of [`SettlementRecord`]s, exactly 48
//! periods per calendar day. Days with 46/50 periods (daylight-saving
//! transitions) are rejected at load so per-period model indexing stays
//! unambiguous. Balancing prices that have not been published yet are
//! explicit missing values, never zeros.

use std::fmt;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Periods per day at half-hour resolution.
pub const PERIODS_PER_DAY: u8 = 48;
/// First settlement period with daylight; solar forecasts exist for
/// periods 12..=41 only.
pub const SOLAR_FIRST_PERIOD: u8 = 12;
pub const SOLAR_LAST_PERIOD: u8 = 41;

/// Expected CSV header, in order.
pub const CSV_HEADER: [&str; 12] = [
    "date", "period", "day_type", "da_price", "bal_price", "niv", "gen_energy", "load_fc",
    "wind_fc", "solar_fc", "margin_fc", "power_fc",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: cannot parse {column} from `{value}`")]
    Parse { row: usize, column: &'static str, value: String },
    #[error("row {row}: missing required value in column {column}")]
    Missing { row: usize, column: &'static str },
    #[error("row {row}: settlement period {period} outside 1..=48")]
    PeriodRange { row: usize, period: i64 },
    #[error("row {row}: duplicate record for {date} period {period}")]
    Duplicate { row: usize, date: NaiveDate, period: u8 },
    #[error("row {row}: records out of chronological order")]
    OutOfOrder { row: usize },
    #[error("row {row}: gen_energy {value} outside [0, {e_max}]")]
    GenRange { row: usize, value: f64, e_max: f64 },
    #[error("row {row}: solar_fc must be {expected} for period {period}")]
    SolarPresence { row: usize, period: u8, expected: &'static str },
    #[error("day {date} has {count} periods; exactly 48 required (daylight-saving days are not supported)")]
    PeriodCount { date: NaiveDate, count: usize },
    #[error("e_max must be positive, got {0}")]
    BadEMax(f64),
    #[error("dataset contains no records")]
    Empty,
}

/// Calendar date plus settlement period index (1..=48).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeriodStamp {
    pub date: NaiveDate,
    pub period: u8,
}

impl fmt::Display for PeriodStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} p{}", self.date, self.period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
    Holiday,
}

impl DayType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "weekday" => Some(Self::Weekday),
            "weekend" => Some(Self::Weekend),
            "holiday" => Some(Self::Holiday),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Weekday => "weekday",
            Self::Weekend => "weekend",
            Self::Holiday => "holiday",
        }
    }

    /// Day type implied by the calendar alone: weekends by weekday number,
    /// holidays from the supplied list.
    pub fn from_calendar(date: NaiveDate, holidays: &[NaiveDate]) -> Self {
        if holidays.contains(&date) {
            Self::Holiday
        } else if matches!(date.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun) {
            Self::Weekend
        } else {
            Self::Weekday
        }
    }
}

/// One settlement period's market outcome and the day-ahead system forecasts
/// available when bidding for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementRecord {
    pub stamp: PeriodStamp,
    pub day_type: DayType,
    /// Day-ahead (contract) price, currency/MWh.
    pub da_price: f64,
    /// Single imbalance price, currency/MWh; missing until published.
    pub bal_price: Option<f64>,
    /// Net imbalance volume, MWh signed; positive means the system is short.
    pub niv: f64,
    /// Metered generation, MWh in [0, e_max].
    pub gen_energy: f64,
    /// Day-ahead national load forecast, MW.
    pub load_fc: f64,
    /// Day-ahead national wind forecast, MW.
    pub wind_fc: f64,
    /// Day-ahead solar forecast, MW; present for periods 12..=41 only.
    pub solar_fc: Option<f64>,
    /// Day-ahead generation margin forecast, MW.
    pub margin_fc: f64,
    /// Operator's day-ahead point forecast of own generation, MWh.
    pub power_fc: Option<f64>,
}

impl SettlementRecord {
    /// System length outcome: 1 when short (NIV > 0), 0 when long.
    /// NIV exactly zero counts as long.
    pub fn is_short(&self) -> bool {
        self.niv > 0.0
    }

    pub fn has_daylight(&self) -> bool {
        (SOLAR_FIRST_PERIOD..=SOLAR_LAST_PERIOD).contains(&self.stamp.period)
    }
}

/// Immutable, validated sequence of settlement records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<SettlementRecord>,
    e_max: f64,
    source: String,
}

impl Dataset {
    /// Validates invariants and constructs the dataset.
    pub fn new(records: Vec<SettlementRecord>, e_max: f64, source: impl Into<String>) -> Result<Self, DataError> {
        if e_max <= 0.0 || !e_max.is_finite() {
            return Err(DataError::BadEMax(e_max));
        }
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        let mut per_day = 0usize;
        for (i, rec) in records.iter().enumerate() {
            let row = i + 2; // header is row 1 in file terms
            if !(1..=PERIODS_PER_DAY).contains(&rec.stamp.period) {
                return Err(DataError::PeriodRange { row, period: rec.stamp.period as i64 });
            }
            if i > 0 {
                let prev = &records[i - 1].stamp;
                if rec.stamp == *prev {
                    return Err(DataError::Duplicate { row, date: rec.stamp.date, period: rec.stamp.period });
                }
                if rec.stamp < *prev {
                    return Err(DataError::OutOfOrder { row });
                }
            }
            if !(0.0..=e_max).contains(&rec.gen_energy) {
                return Err(DataError::GenRange { row, value: rec.gen_energy, e_max });
            }
            let daylight = rec.has_daylight();
            if daylight && rec.solar_fc.is_none() {
                return Err(DataError::SolarPresence { row, period: rec.stamp.period, expected: "present" });
            }
            if !daylight && rec.solar_fc.is_some() {
                return Err(DataError::SolarPresence { row, period: rec.stamp.period, expected: "absent" });
            }
            per_day += 1;
            let last_of_day = i + 1 == records.len() || records[i + 1].stamp.date != rec.stamp.date;
            if last_of_day {
                if per_day != PERIODS_PER_DAY as usize {
                    return Err(DataError::PeriodCount { date: rec.stamp.date, count: per_day });
                }
                per_day = 0;
            }
        }
        Ok(Self { records, e_max, source: source.into() })
    }

    pub fn records(&self) -> &[SettlementRecord] {
        &self.records
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct days in chronological order.
    pub fn days(&self) -> Vec<NaiveDate> {
        let mut days = Vec::new();
        for rec in &self.records {
            if days.last() != Some(&rec.stamp.date) {
                days.push(rec.stamp.date);
            }
        }
        days
    }

    pub fn record_at(&self, stamp: PeriodStamp) -> Option<&SettlementRecord> {
        self.records
            .binary_search_by(|r| r.stamp.cmp(&stamp))
            .ok()
            .map(|i| &self.records[i])
    }
}

fn parse_f64(field: &str, row: usize, column: &'static str) -> Result<f64, DataError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| DataError::Parse { row, column, value: field.to_string() })
}

fn parse_required(field: &str, row: usize, column: &'static str) -> Result<f64, DataError> {
    if field.trim().is_empty() {
        return Err(DataError::Missing { row, column });
    }
    parse_f64(field, row, column)
}

fn parse_optional(field: &str, row: usize, column: &'static str) -> Result<Option<f64>, DataError> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, row, column).map(Some)
    }
}

/// Loads a dataset from the canonical CSV schema. Header names and order must
/// match exactly; empty cells are missing values.
pub fn load_csv(path: impl AsRef<Path>, e_max: f64) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != CSV_HEADER {
        return Err(DataError::Header {
            expected: CSV_HEADER.join(","),
            found: found.join(","),
        });
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row?;
        let get = |idx: usize| row.get(idx).unwrap_or("");
        let date = get(0)
            .parse::<NaiveDate>()
            .map_err(|_| DataError::Parse { row: row_no, column: "date", value: get(0).to_string() })?;
        let period_raw = get(1)
            .trim()
            .parse::<i64>()
            .map_err(|_| DataError::Parse { row: row_no, column: "period", value: get(1).to_string() })?;
        if !(1..=PERIODS_PER_DAY as i64).contains(&period_raw) {
            return Err(DataError::PeriodRange { row: row_no, period: period_raw });
        }
        let day_type = DayType::parse(get(2).trim())
            .ok_or_else(|| DataError::Parse { row: row_no, column: "day_type", value: get(2).to_string() })?;
        records.push(SettlementRecord {
            stamp: PeriodStamp { date, period: period_raw as u8 },
            day_type,
            da_price: parse_required(get(3), row_no, "da_price")?,
            bal_price: parse_optional(get(4), row_no, "bal_price")?,
            niv: parse_required(get(5), row_no, "niv")?,
            gen_energy: parse_required(get(6), row_no, "gen_energy")?,
            load_fc: parse_required(get(7), row_no, "load_fc")?,
            wind_fc: parse_required(get(8), row_no, "wind_fc")?,
            solar_fc: parse_optional(get(9), row_no, "solar_fc")?,
            margin_fc: parse_required(get(10), row_no, "margin_fc")?,
            power_fc: parse_optional(get(11), row_no, "power_fc")?,
        });
    }
    Dataset::new(records, e_max, path.display().to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a dataset back to the canonical CSV schema. Numeric formatting uses
/// the shortest round-trip representation, so `load_csv(write_csv(d))`
/// reproduces `d` exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(CSV_HEADER)?;
    for rec in dataset.records() {
        writer.write_record(&[
            rec.stamp.date.to_string(),
            rec.stamp.period.to_string(),
            rec.day_type.as_str().to_string(),
            rec.da_price.to_string(),
            fmt_opt(rec.bal_price),
            rec.niv.to_string(),
            rec.gen_energy.to_string(),
            rec.load_fc.to_string(),
            rec.wind_fc.to_string(),
            fmt_opt(rec.solar_fc),
            rec.margin_fc.to_string(),
            fmt_opt(rec.power_fc),
        ])?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn plain_record(date: NaiveDate, period: u8) -> SettlementRecord {
        let daylight = (SOLAR_FIRST_PERIOD..=SOLAR_LAST_PERIOD).contains(&period);
        SettlementRecord {
            stamp: PeriodStamp { date, period },
            day_type: DayType::from_calendar(date, &[]),
            da_price: 40.0 + period as f64 * 0.25,
            bal_price: Some(45.0),
            niv: if period % 2 == 0 { 120.0 } else { -80.0 },
            gen_energy: 3.5,
            load_fc: 30_000.0,
            wind_fc: 5_000.0,
            solar_fc: daylight.then_some(1_500.0),
            margin_fc: 9_000.0,
            power_fc: Some(3.4),
        }
    }

    fn two_day_dataset() -> Dataset {
        let d0 = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        let mut records = Vec::new();
        for day in 0..2 {
            let date = d0 + chrono::Days::new(day);
            for p in 1..=PERIODS_PER_DAY {
                records.push(plain_record(date, p));
            }
        }
        Dataset::new(records, 10.0, "test").unwrap()
    }

    #[test]
    fn loads_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_csv(&two_day_dataset(), &path).unwrap();
        let loaded = load_csv(&path, 10.0).unwrap();
        assert_eq!(loaded.len(), 96);
    }

    #[test]
    fn round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let original = two_day_dataset();
        let path = dir.path().join("data.csv");
        write_csv(&original, &path).unwrap();
        let loaded = load_csv(&path, 10.0).unwrap();
        assert_eq!(loaded.records(), original.records());
        // and writing again yields byte-identical files
        let path2 = dir.path().join("data2.csv");
        write_csv(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_period_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut body = String::from(&CSV_HEADER.join(","));
        body.push('\n');
        body.push_str("2016-01-04,49,weekday,40,45,100,3.5,30000,5000,,9000,3.4\n");
        std::fs::write(&path, body).unwrap();
        match load_csv(&path, 10.0) {
            Err(DataError::PeriodRange { row, period }) => {
                assert_eq!(row, 2);
                assert_eq!(period, 49);
            }
            other => panic!("expected PeriodRange, got {other:?}"),
        }
    }

    #[test]
    fn rejects_gen_above_e_max() {
        let d0 = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        let mut records: Vec<_> = (1..=PERIODS_PER_DAY).map(|p| plain_record(d0, p)).collect();
        records[5].gen_energy = 12.0; // 1.2 * e_max
        match Dataset::new(records, 10.0, "test") {
            Err(DataError::GenRange { value, e_max, .. }) => {
                assert_eq!(value, 12.0);
                assert_eq!(e_max, 10.0);
            }
            other => panic!("expected GenRange, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_period() {
        let d0 = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        let mut records: Vec<_> = (1..=PERIODS_PER_DAY).map(|p| plain_record(d0, p)).collect();
        records[7] = records[6].clone();
        assert!(matches!(
            Dataset::new(records, 10.0, "test"),
            Err(DataError::Duplicate { .. })
        ));
    }

    #[test]
    fn rejects_short_day() {
        // 47 periods: a daylight-saving style day
        let d0 = NaiveDate::from_ymd_opt(2016, 3, 27).unwrap();
        let records: Vec<_> = (1..=47).map(|p| plain_record(d0, p)).collect();
        match Dataset::new(records, 10.0, "test") {
            Err(DataError::PeriodCount { date, count }) => {
                assert_eq!(date, d0);
                assert_eq!(count, 47);
            }
            other => panic!("expected PeriodCount, got {other:?}"),
        }
    }

    #[test]
    fn solar_presence_enforced() {
        let d0 = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        let mut records: Vec<_> = (1..=PERIODS_PER_DAY).map(|p| plain_record(d0, p)).collect();
        records[0].solar_fc = Some(1.0); // period 1 must be absent
        assert!(matches!(
            Dataset::new(records, 10.0, "test"),
            Err(DataError::SolarPresence { expected: "absent", .. })
        ));

        let mut records: Vec<_> = (1..=PERIODS_PER_DAY).map(|p| plain_record(d0, p)).collect();
        records[19].solar_fc = None; // period 20 must be present
        assert!(matches!(
            Dataset::new(records, 10.0, "test"),
            Err(DataError::SolarPresence { expected: "present", .. })
        ));
    }

    #[test]
    fn missing_bal_price_is_allowed() {
        let d0 = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        let mut records: Vec<_> = (1..=PERIODS_PER_DAY).map(|p| plain_record(d0, p)).collect();
        records[40].bal_price = None;
        let ds = Dataset::new(records, 10.0, "test").unwrap();
        assert!(ds.records()[40].bal_price.is_none());
    }

    #[test]
    fn day_type_partition_is_exhaustive() {
        let ds = two_day_dataset();
        // every record falls in exactly one (day_type, period) cell
        let mut cells = std::collections::HashMap::new();
        for rec in ds.records() {
            *cells.entry((rec.day_type, rec.stamp.period)).or_insert(0usize) += 1;
        }
        let total: usize = cells.values().sum();
        assert_eq!(total, ds.len());
    }

    #[test]
    fn calendar_day_types() {
        let holidays = vec![NaiveDate::from_ymd_opt(2016, 1, 1).unwrap()];
        assert_eq!(
            DayType::from_calendar(NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(), &holidays),
            DayType::Holiday
        );
        assert_eq!(
            DayType::from_calendar(NaiveDate::from_ymd_opt(2016, 1, 2).unwrap(), &holidays),
            DayType::Weekend
        );
        assert_eq!(
            DayType::from_calendar(NaiveDate::from_ymd_opt(2016, 1, 4).unwrap(), &holidays),
            DayType::Weekday
        );
    }
}
