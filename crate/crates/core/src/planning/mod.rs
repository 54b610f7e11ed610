//! Staffing estimates and the what-if scenario engine.

mod compose;
mod scenario;
mod staffing;

pub use compose::{composed_dre, coverage_weight, CompositionModel};
pub use scenario::{
    apply_scenario, compare_scenarios, Comparison, ComparisonColumn, LevelDelta, OverridePath, OverrideValue, Scenario,
    ScenarioResult, SelectionDelta,
};
pub use staffing::{
    estimate_staffing, worst_case_scaling, CaseLoad, ScalingProfile, StaffConstraint, StaffingEstimate,
};

use thiserror::Error;

use crate::estimation::{DefectPrediction, RangeFactors};
use crate::matrix::{assemble_risk_matrix, LevelPlan, MatrixError, MatrixOptions, RiskMatrix};
use crate::scalar::Scalar;
use crate::scope::ScopeMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanningError {
    #[error("execution rate must be > 0")]
    ZeroRate,
    #[error("staffing constraint must be > 0")]
    ZeroConstraint,
    #[error("no case count for level {0}")]
    UnknownLevel(String),
    #[error("invalid scaling profile: {0}")]
    InvalidProfile(String),
    #[error("bad override path '{path}': {reason}")]
    BadOverridePath { path: String, reason: String },
    #[error("invariant violation at {location}: {message}")]
    InvariantViolation { location: String, message: String },
    #[error("scenario results do not share one level ladder: {0}")]
    MismatchedLadders(String),
    #[error("invalid composition model: {0}")]
    InvalidComposition(String),
}

impl PlanningError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanningError::ZeroRate => "zero-rate",
            PlanningError::ZeroConstraint => "zero-constraint",
            PlanningError::UnknownLevel(_) => "unknown-level",
            PlanningError::InvalidProfile(_) => "invalid-profile",
            PlanningError::BadOverridePath { .. } => "bad-override-path",
            PlanningError::InvariantViolation { .. } => "invariant-violation",
            PlanningError::MismatchedLadders(_) => "mismatched-ladders",
            PlanningError::InvalidComposition(_) => "invalid-composition",
        }
    }

    pub fn location(&self) -> Option<String> {
        match self {
            PlanningError::BadOverridePath { path, .. } => Some(path.clone()),
            PlanningError::InvariantViolation { location, .. } => Some(location.clone()),
            _ => None,
        }
    }
}

impl From<MatrixError> for PlanningError {
    fn from(e: MatrixError) -> Self {
        PlanningError::InvariantViolation {
            location: e.location().unwrap_or_else(|| "plan".into()),
            message: e.to_string(),
        }
    }
}

/// Everything needed to build both matrices: the base of every scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<T> {
    pub levels: Vec<LevelPlan<T>>,
    pub scope: ScopeMatrix,
    pub predicted: DefectPrediction<T>,
    /// Used to re-derive low/high when a scenario overrides the nominal.
    pub range: RangeFactors<T>,
    /// Level name of the currently chosen column, if any.
    pub selected_level: Option<String>,
    pub options: MatrixOptions,
    pub composition: Option<CompositionModel<T>>,
}

impl<T: Scalar> Plan<T> {
    /// Level plans with composed DRE substituted when the composition model
    /// is enabled.
    pub fn effective_levels(&self) -> Result<Vec<LevelPlan<T>>, PlanningError> {
        let mut levels = self.levels.clone();
        if let Some(model) = self.composition.as_ref().filter(|m| m.enabled) {
            for plan in &mut levels {
                let column = self.scope.column(&plan.scope_label).ok_or_else(|| PlanningError::InvariantViolation {
                    location: format!("levels.{}.scope", plan.level.name),
                    message: format!("scope level '{}' not in scope matrix", plan.scope_label),
                })?;
                plan.dre = composed_dre(model, &column)?;
            }
        }
        Ok(levels)
    }

    /// Builds the risk matrix with findings attached; strictness only changes
    /// finding severities here.
    pub fn matrix(&self) -> Result<RiskMatrix<T>, PlanningError> {
        Ok(assemble_risk_matrix(self.effective_levels()?, self.predicted, &self.scope, &self.options)?)
    }

    /// Resolves a level name (case-insensitive) or a scope label to the
    /// level's canonical name.
    pub fn resolve_level(&self, key: &str) -> Option<String> {
        self.levels
            .iter()
            .find(|l| l.level.name.eq_ignore_ascii_case(key))
            .or_else(|| self.levels.iter().find(|l| l.scope_label == key))
            .map(|l| l.level.name.clone())
    }
}
