//! Defect removal efficiency from historical phase counts, and density
//! calibration from past releases.
//!
//! The effectiveness of an activity is `E = N / (N + S)` where `N` counts the
//! defects it found and `S` the defects found by every strictly later phase,
//! field reports included. Latent defects that were never found cannot be
//! observed and are not part of `S`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{backfire_function_points, DensityParams, EstimationError, SizeEstimate};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("phase '{phase}' not found in release '{release}'")]
    UnknownPhase { release: String, phase: String },
    #[error("no defects at or after phase '{phase}'; effectiveness undefined")]
    NoDefects { phase: String },
    #[error("release '{0}' has no phases")]
    EmptyHistory(String),
    #[error("no usable history: {0}")]
    NoUsableHistory(String),
    #[error(transparent)]
    Size(#[from] EstimationError),
}

impl CalibrationError {
    pub fn code(&self) -> &'static str {
        match self {
            CalibrationError::UnknownPhase { .. } => "unknown-phase",
            CalibrationError::NoDefects { .. } => "no-defects",
            CalibrationError::EmptyHistory(_) => "empty-history",
            CalibrationError::NoUsableHistory(_) => "no-usable-history",
            CalibrationError::Size(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase_name: String,
    pub order: i64,
    pub defects_found: u64,
}

impl PhaseRecord {
    pub fn new(phase_name: impl Into<String>, order: i64, defects_found: u64) -> Self {
        Self { phase_name: phase_name.into(), order, defects_found }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ReleaseHistory<T> {
    pub release_name: String,
    pub size: Option<SizeEstimate<T>>,
    /// Sorted by `order`.
    pub phases: Vec<PhaseRecord>,
}

impl<T: Scalar> ReleaseHistory<T> {
    /// Sorts the phases; orders are expected to be unique.
    pub fn new(release_name: impl Into<String>, mut phases: Vec<PhaseRecord>) -> Self {
        phases.sort_by_key(|p| p.order);
        Self { release_name: release_name.into(), size: None, phases }
    }

    pub fn with_size(mut self, size: SizeEstimate<T>) -> Self {
        self.size = Some(size);
        self
    }

    pub fn total_defects(&self) -> u64 {
        self.phases.iter().map(|p| p.defects_found).sum()
    }

    /// Defects found at `phase` and every later phase.
    pub fn defects_from(&self, phase: &str) -> Result<u64, CalibrationError> {
        let idx = self.phase_index(phase)?;
        Ok(self.phases[idx..].iter().map(|p| p.defects_found).sum())
    }

    fn phase_index(&self, phase: &str) -> Result<usize, CalibrationError> {
        self.phases.iter().position(|p| p.phase_name == phase).ok_or_else(|| CalibrationError::UnknownPhase {
            release: self.release_name.clone(),
            phase: phase.to_string(),
        })
    }
}

/// Effectiveness of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDre<T> {
    pub phase: String,
    pub effectiveness: T,
    pub found: u64,
    pub subsequent: u64,
    /// Set when `effectiveness == 1`; a plan cannot use that value as is.
    pub caution: bool,
}

impl<T: Scalar> PhaseDre<T> {
    /// The effectiveness as a plan DRE, which must stay below 1. A measured
    /// 1.0 becomes `ceiling` (e.g. 0.999) and the returned note says so.
    pub fn plan_dre(&self, ceiling: T) -> (T, Option<String>) {
        if self.effectiveness >= T::one() {
            (
                ceiling,
                Some(format!(
                    "measured DRE of '{}' is 100%; reduced to {} because plan DRE must be < 1",
                    self.phase, ceiling
                )),
            )
        } else {
            (self.effectiveness, None)
        }
    }
}

/// Effectiveness of `phase`: found / (found + found later).
pub fn dre_of_phase<T: Scalar>(history: &ReleaseHistory<T>, phase: &str) -> Result<PhaseDre<T>, CalibrationError> {
    let idx = history.phase_index(phase)?;
    phase_dre_at(history, idx)
}

fn phase_dre_at<T: Scalar>(history: &ReleaseHistory<T>, idx: usize) -> Result<PhaseDre<T>, CalibrationError> {
    let record = &history.phases[idx];
    let found = record.defects_found;
    let subsequent: u64 = history.phases.iter().filter(|p| p.order > record.order).map(|p| p.defects_found).sum();
    let total = found + subsequent;
    if total == 0 {
        return Err(CalibrationError::NoDefects { phase: record.phase_name.clone() });
    }
    let effectiveness = T::from_count(found) / T::from_count(total);
    Ok(PhaseDre { phase: record.phase_name.clone(), effectiveness, found, subsequent, caution: subsequent == 0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DreProfile<T> {
    pub release: String,
    pub phases: Vec<PhaseDre<T>>,
    pub notes: Vec<String>,
}

/// Effectiveness of every phase that has defects at or after it.
pub fn dre_profile<T: Scalar>(history: &ReleaseHistory<T>) -> Result<DreProfile<T>, CalibrationError> {
    if history.phases.is_empty() {
        return Err(CalibrationError::EmptyHistory(history.release_name.clone()));
    }
    let mut phases = Vec::new();
    let mut notes = Vec::new();
    for idx in 0..history.phases.len() {
        match phase_dre_at(history, idx) {
            Ok(dre) => {
                if dre.caution {
                    notes.push(format!("{}: effectiveness 100% (no later defects recorded)", dre.phase));
                }
                phases.push(dre);
            }
            Err(CalibrationError::NoDefects { phase }) => {
                notes.push(format!("{phase}: omitted, no defects at or after this phase"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(DreProfile { release: history.release_name.clone(), phases, notes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Mean of per-release densities.
    #[default]
    Unweighted,
    /// Total defects over total size.
    SizeWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DensityCalibration<T> {
    pub params: DensityParams<T>,
    pub releases_used: Vec<String>,
    pub notes: Vec<String>,
}

/// Fits defects-per-KLOC and defects-per-FP to past releases.
///
/// The defect count of a release is everything found from `entry_phase`
/// onward, or every recorded phase when `entry_phase` is `None`.
pub fn calibrate_density<T: Scalar>(
    histories: &[ReleaseHistory<T>],
    entry_phase: Option<&str>,
    weighting: Weighting,
) -> Result<DensityCalibration<T>, CalibrationError> {
    let mut notes = Vec::new();
    let mut samples = Vec::new();
    for history in histories {
        let Some(size) = history.size else {
            notes.push(format!("{}: skipped, no size recorded", history.release_name));
            continue;
        };
        let defects = match entry_phase {
            Some(phase) => match history.defects_from(phase) {
                Ok(n) => n,
                Err(_) => {
                    notes.push(format!("{}: skipped, no '{phase}' phase", history.release_name));
                    continue;
                }
            },
            None => history.total_defects(),
        };
        let kloc = size.kloc();
        let fp = backfire_function_points(&size)?;
        if kloc <= T::zero() || fp <= T::zero() {
            notes.push(format!("{}: skipped, zero size", history.release_name));
            continue;
        }
        samples.push((history.release_name.clone(), T::from_count(defects), kloc, fp));
    }
    if samples.is_empty() {
        return Err(CalibrationError::NoUsableHistory(if notes.is_empty() {
            "no histories given".into()
        } else {
            notes.join("; ")
        }));
    }

    let (per_kloc, per_fp) = match weighting {
        Weighting::Unweighted => {
            let n = T::from_count(samples.len() as u64);
            let kloc_sum = samples.iter().fold(T::zero(), |acc, s| acc + s.1 / s.2);
            let fp_sum = samples.iter().fold(T::zero(), |acc, s| acc + s.1 / s.3);
            (kloc_sum / n, fp_sum / n)
        }
        Weighting::SizeWeighted => {
            let defects = samples.iter().fold(T::zero(), |acc, s| acc + s.1);
            let kloc = samples.iter().fold(T::zero(), |acc, s| acc + s.2);
            let fp = samples.iter().fold(T::zero(), |acc, s| acc + s.3);
            (defects / kloc, defects / fp)
        }
    };

    Ok(DensityCalibration {
        params: DensityParams { defects_per_fp: per_fp, defects_per_kloc: per_kloc, adjustment: T::one() },
        releases_used: samples.into_iter().map(|s| s.0).collect(),
        notes,
    })
}
