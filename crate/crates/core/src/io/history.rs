//! Historical phase data in CSV.
//!
//! Phases: header `release,phase,order,defects`, one row per release and
//! lifecycle phase. Sizes: header `release,loc,loc_per_fp` with an optional
//! fourth `complexity_adjustment` column.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::calibration::{PhaseRecord, ReleaseHistory};
use crate::estimation::SizeEstimate;

pub const HISTORY_HEADER: [&str; 4] = ["release", "phase", "order", "defects"];
pub const SIZES_HEADER: [&str; 3] = ["release", "loc", "loc_per_fp"];

/// Row numbers are 1-based lines of the input, the header being row 1.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("row {row}: {message}")]
    Parse { row: u64, message: String },
    #[error("row {row}: negative defect count {value}")]
    NegativeCount { row: u64, value: i64 },
    #[error("row {row}: duplicate order {order} in release '{release}'")]
    Duplicate { row: u64, release: String, order: i64 },
}

impl HistoryError {
    pub fn code(&self) -> &'static str {
        match self {
            HistoryError::Parse { .. } => "parse-error",
            HistoryError::NegativeCount { .. } => "negative-count",
            HistoryError::Duplicate { .. } => "duplicate-order",
        }
    }

    pub fn row(&self) -> u64 {
        match self {
            HistoryError::Parse { row, .. }
            | HistoryError::NegativeCount { row, .. }
            | HistoryError::Duplicate { row, .. } => *row,
        }
    }
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(bytes)
}

fn records(bytes: &[u8], expected: &[&str], optional: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, HistoryError> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for result in reader(bytes).records() {
        let record = result
            .map_err(|e| HistoryError::Parse { row: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let row = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if !header_seen {
            let fields: Vec<&str> = record.iter().collect();
            let required_ok = fields.len() >= expected.len() && fields[..expected.len()] == *expected;
            let extra_ok = fields[expected.len().min(fields.len())..].iter().zip(optional).all(|(a, b)| a == b)
                && fields.len() <= expected.len() + optional.len();
            if !(required_ok && extra_ok) {
                return Err(HistoryError::Parse {
                    row,
                    message: format!("expected header '{}', got '{}'", expected.join(","), fields.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        rows.push((row, record));
    }
    if !header_seen {
        return Err(HistoryError::Parse { row: 1, message: format!("missing header '{}'", expected.join(",")) });
    }
    Ok(rows)
}

fn field<'a>(record: &'a csv::StringRecord, row: u64, idx: usize, name: &str) -> Result<&'a str, HistoryError> {
    match record.get(idx) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(HistoryError::Parse { row, message: format!("missing {name}") }),
    }
}

fn number<T: std::str::FromStr>(raw: &str, row: u64, name: &str) -> Result<T, HistoryError> {
    raw.parse().map_err(|_| HistoryError::Parse { row, message: format!("{name} '{raw}' is not a valid number") })
}

/// Releases in first-appearance order, phases sorted by order.
pub fn load_history_csv(bytes: &[u8]) -> Result<Vec<ReleaseHistory<f64>>, HistoryError> {
    let mut order_of_release: Vec<String> = Vec::new();
    let mut phases: HashMap<String, Vec<PhaseRecord>> = HashMap::new();
    for (row, record) in records(bytes, &HISTORY_HEADER, &[])? {
        if record.len() != 4 {
            return Err(HistoryError::Parse { row, message: format!("expected 4 fields, got {}", record.len()) });
        }
        let release = field(&record, row, 0, "release")?.to_string();
        let phase = field(&record, row, 1, "phase")?.to_string();
        let order: i64 = number(field(&record, row, 2, "order")?, row, "order")?;
        let defects: i64 = number(field(&record, row, 3, "defects")?, row, "defects")?;
        if defects < 0 {
            return Err(HistoryError::NegativeCount { row, value: defects });
        }
        let list = phases.entry(release.clone()).or_insert_with(|| {
            order_of_release.push(release.clone());
            Vec::new()
        });
        if list.iter().any(|p| p.order == order) {
            return Err(HistoryError::Duplicate { row, release, order });
        }
        list.push(PhaseRecord::new(phase, order, defects as u64));
    }
    Ok(order_of_release
        .into_iter()
        .map(|name| {
            let list = phases.remove(&name).unwrap_or_default();
            ReleaseHistory::new(name, list)
        })
        .collect())
}

pub fn load_sizes_csv(bytes: &[u8]) -> Result<BTreeMap<String, SizeEstimate<f64>>, HistoryError> {
    let mut sizes = BTreeMap::new();
    for (row, record) in records(bytes, &SIZES_HEADER, &["complexity_adjustment"])? {
        let release = field(&record, row, 0, "release")?.to_string();
        let loc: f64 = number(field(&record, row, 1, "loc")?, row, "loc")?;
        let gearing: f64 = number(field(&record, row, 2, "loc_per_fp")?, row, "loc_per_fp")?;
        let mut size = SizeEstimate::new(loc, gearing);
        if let Some(adj) = record.get(3).filter(|s| !s.is_empty()) {
            size = size.with_complexity(number(adj, row, "complexity_adjustment")?);
        }
        size.validate().map_err(|e| HistoryError::Parse { row, message: e.to_string() })?;
        if sizes.insert(release.clone(), size).is_some() {
            return Err(HistoryError::Parse { row, message: format!("duplicate size row for release '{release}'") });
        }
    }
    Ok(sizes)
}

/// Attaches sizes by release name; releases without a size keep `None`.
pub fn attach_sizes(histories: &mut [ReleaseHistory<f64>], sizes: &BTreeMap<String, SizeEstimate<f64>>) {
    for history in histories {
        if let Some(size) = sizes.get(&history.release_name) {
            history.size = Some(*size);
        }
    }
}
