//! Test-effort risk planning.
//!
//! Predict the defects present when system test starts, lay the candidate
//! test levels side by side in a risk matrix with the defects each would let
//! through, and negotiate the choice with what-if scenarios.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below pin `f64`, which is what the plan file, CLI and service use.

pub mod calibration;
pub mod estimation;
pub mod io;
pub mod matrix;
pub mod planning;
pub mod scalar;
pub mod scope;
pub mod wire;

pub use scalar::Scalar;

pub use calibration::{calibrate_density, dre_of_phase, dre_profile, CalibrationError, PhaseRecord, Weighting};
pub use estimation::{
    backfire_function_points, predict_defects_from_fp, predict_defects_from_loc, EstimationError, PredictionMethod,
};
pub use io::{load_plan, save_plan, Format, PlanDocument, PlanError};
pub use matrix::{
    build_risk_matrix, default_dre_ladder, delivered_defects, validate_matrix, DisplayPolicy, Finding, MatrixError,
    MatrixOptions, RoundingMode, Severity, TestLevel,
};
pub use planning::{apply_scenario, compare_scenarios, OverrideValue, PlanningError, Scenario};
pub use scope::{default_scope_matrix, Grade, ScopeMatrix};

pub type SizeEstimate = estimation::SizeEstimate<f64>;
pub type DensityParams = estimation::DensityParams<f64>;
pub type RangeFactors = estimation::RangeFactors<f64>;
pub type DefectPrediction = estimation::DefectPrediction<f64>;
pub type LevelPlan = matrix::LevelPlan<f64>;
pub type RiskMatrix = matrix::RiskMatrix<f64>;
pub type ReleaseHistory = calibration::ReleaseHistory<f64>;
pub type PhaseDre = calibration::PhaseDre<f64>;
pub type Plan = planning::Plan<f64>;
pub type ScenarioResult = planning::ScenarioResult<f64>;
pub type CaseLoad = planning::CaseLoad<f64>;
pub type ScalingProfile = planning::ScalingProfile<f64>;
