//! Size and defect prediction.
//!
//! Two routes lead to a defect count at system-test entry:
//!
//! - backfire LOC into function points through a gearing factor (source
//!   statements per FP), then multiply by a defects-per-FP rate;
//! - multiply KLOC directly by a defects-per-KLOC density.
//!
//! Both routes carry a dimensionless adjustment multiplier. The shipped rates
//! (1.0 defects/FP, 8.0 defects/KLOC, 125 LOC/FP) are example defaults that
//! reproduce the classic 100 KLOC / 800 FP / 800 defects worked example; they
//! are not industry-authoritative figures and should be replaced by
//! calibrated values where history exists.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{non_negative, positive, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("invalid size: {field} must be {rule}")]
    InvalidSize { field: &'static str, rule: &'static str },
    #[error("invalid parameters: {field} must be {rule}")]
    InvalidParams { field: &'static str, rule: &'static str },
    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),
}

impl EstimationError {
    pub fn code(&self) -> &'static str {
        match self {
            EstimationError::InvalidSize { .. } => "invalid-size",
            EstimationError::InvalidParams { .. } => "invalid-params",
            EstimationError::InvalidPrediction(_) => "invalid-prediction",
        }
    }

    pub fn field(&self) -> Option<&'static str> {
        match self {
            EstimationError::InvalidSize { field, .. } | EstimationError::InvalidParams { field, .. } => Some(field),
            EstimationError::InvalidPrediction(_) => None,
        }
    }
}

/// Source-size estimate used for backfiring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SizeEstimate<T> {
    pub loc: T,
    /// Gearing factor: source statements per function point.
    pub loc_per_fp: T,
    /// Multiplier applied to the raw FP count.
    #[serde(default = "one")]
    pub complexity_adjustment: T,
}

fn one<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> SizeEstimate<T> {
    pub fn new(loc: T, loc_per_fp: T) -> Self {
        Self { loc, loc_per_fp, complexity_adjustment: T::one() }
    }

    pub fn with_complexity(mut self, adjustment: T) -> Self {
        self.complexity_adjustment = adjustment;
        self
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        if !non_negative(self.loc) {
            return Err(EstimationError::InvalidSize { field: "loc", rule: ">= 0" });
        }
        if !positive(self.loc_per_fp) {
            return Err(EstimationError::InvalidSize { field: "loc_per_fp", rule: "> 0" });
        }
        if !positive(self.complexity_adjustment) {
            return Err(EstimationError::InvalidSize { field: "complexity_adjustment", rule: "> 0" });
        }
        Ok(())
    }

    pub fn kloc(&self) -> T {
        self.loc / T::lit(1000.0)
    }
}

/// Defect density rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DensityParams<T> {
    pub defects_per_fp: T,
    pub defects_per_kloc: T,
    /// Lumped "defect adjustment parameters" multiplier.
    #[serde(default = "one")]
    pub adjustment: T,
}

impl<T: Scalar> Default for DensityParams<T> {
    /// Example defaults that agree with each other on a 125 LOC/FP gearing.
    fn default() -> Self {
        Self { defects_per_fp: T::one(), defects_per_kloc: T::lit(8.0), adjustment: T::one() }
    }
}

impl<T: Scalar> DensityParams<T> {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !non_negative(self.defects_per_fp) {
            return Err(EstimationError::InvalidParams { field: "defects_per_fp", rule: ">= 0" });
        }
        if !non_negative(self.defects_per_kloc) {
            return Err(EstimationError::InvalidParams { field: "defects_per_kloc", rule: ">= 0" });
        }
        if !positive(self.adjustment) {
            return Err(EstimationError::InvalidParams { field: "adjustment", rule: "> 0" });
        }
        Ok(())
    }
}

/// Multipliers turning a nominal prediction into its optimistic and
/// pessimistic bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeFactors<T> {
    pub low: T,
    pub high: T,
}

impl<T: Scalar> Default for RangeFactors<T> {
    /// 650/800 and 1400/800.
    fn default() -> Self {
        Self { low: T::lit(0.8125), high: T::lit(1.75) }
    }
}

impl<T: Scalar> RangeFactors<T> {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !non_negative(self.low) || self.low > T::one() {
            return Err(EstimationError::InvalidParams { field: "range_factors.low", rule: "in [0, 1]" });
        }
        if !self.high.is_finite() || self.high < T::one() {
            return Err(EstimationError::InvalidParams { field: "range_factors.high", rule: ">= 1" });
        }
        Ok(())
    }

    pub fn apply(&self, nominal: T) -> (T, T) {
        (nominal * self.low, nominal * self.high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMethod {
    Fp,
    LocDensity,
    Direct,
}

/// Predicted defect count at the start of system test, with its range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectPrediction<T> {
    pub nominal: T,
    pub low: T,
    pub high: T,
    pub method: PredictionMethod,
}

impl<T: Scalar> DefectPrediction<T> {
    /// A directly entered prediction (historical or expert figure).
    pub fn direct(nominal: T, low: T, high: T) -> Result<Self, EstimationError> {
        let prediction = Self { nominal, low, high, method: PredictionMethod::Direct };
        prediction.validate()?;
        Ok(prediction)
    }

    /// Direct prediction whose bounds come from range factors.
    pub fn direct_with_range(nominal: T, range: &RangeFactors<T>) -> Result<Self, EstimationError> {
        range.validate()?;
        let (low, high) = range.apply(nominal);
        Self::direct(nominal, low, high)
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        for (name, value) in [("low", self.low), ("nominal", self.nominal), ("high", self.high)] {
            if !non_negative(value) {
                return Err(EstimationError::InvalidPrediction(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.low <= self.nominal && self.nominal <= self.high) {
            return Err(EstimationError::InvalidPrediction(format!(
                "expected low <= nominal <= high, got {} / {} / {}",
                self.low, self.nominal, self.high
            )));
        }
        Ok(())
    }
}

/// Function points from LOC: `(loc / loc_per_fp) * complexity_adjustment`.
pub fn backfire_function_points<T: Scalar>(size: &SizeEstimate<T>) -> Result<T, EstimationError> {
    size.validate()?;
    Ok(size.loc / size.loc_per_fp * size.complexity_adjustment)
}

pub fn predict_defects_from_fp<T: Scalar>(
    function_points: T,
    params: &DensityParams<T>,
    range: &RangeFactors<T>,
) -> Result<DefectPrediction<T>, EstimationError> {
    if !non_negative(function_points) {
        return Err(EstimationError::InvalidSize { field: "function_points", rule: ">= 0" });
    }
    params.validate()?;
    range.validate()?;
    let nominal = function_points * params.defects_per_fp * params.adjustment;
    Ok(ranged(nominal, range, PredictionMethod::Fp))
}

pub fn predict_defects_from_loc<T: Scalar>(
    loc: T,
    params: &DensityParams<T>,
    range: &RangeFactors<T>,
) -> Result<DefectPrediction<T>, EstimationError> {
    if !non_negative(loc) {
        return Err(EstimationError::InvalidSize { field: "loc", rule: ">= 0" });
    }
    params.validate()?;
    range.validate()?;
    let nominal = loc / T::lit(1000.0) * params.defects_per_kloc * params.adjustment;
    Ok(ranged(nominal, range, PredictionMethod::LocDensity))
}

fn ranged<T: Scalar>(nominal: T, range: &RangeFactors<T>, method: PredictionMethod) -> DefectPrediction<T> {
    let (low, high) = range.apply(nominal);
    DefectPrediction { nominal, low, high, method }
}
