//! Test Risk Matrix: one column per test level, projecting delivered defects
//! from the shared defect prediction and each level's removal efficiency.
//!
//! Levels are alternatives, not phases. Every column depends only on its own
//! plan and the shared prediction.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{DefectPrediction, EstimationError};
use crate::scalar::{non_negative, Scalar};
use crate::scope::ScopeMatrix;

pub const DEFAULT_LEVEL_NAMES: [&str; 5] = ["MINIMAL", "LOW", "MEDIUM", "HIGH", "EXTENSIVE"];
const DEFAULT_DRE: [f64; 5] = [0.10, 0.30, 0.60, 0.85, 0.95];
const DEFAULT_SCOPE: [&str; 5] = ["A", "B", "C", "D", "E"];
const DEFAULT_INTENSITY: [&str; 5] = ["LIGHT", "LIGHT", "MEDIUM", "STRONG", "STRONG"];
const DEFAULT_ENVIRONMENT: [&str; 5] = ["Existing", "Existing", "Existing", "Enhanced", "Enhanced"];
const EXAMPLE_STAFF: [u32; 5] = [2, 2, 4, 5, 5];
const EXAMPLE_CALENDAR: [f64; 5] = [3.0, 6.0, 8.0, 12.0, 16.0];

// Relative tolerance for re-checking derived cells.
const DERIVED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("dre must be in [0, 1), got {0}")]
    DreOutOfRange(f64),
    #[error("invalid plan at {location}: {message}")]
    InvalidPlan { location: String, message: String },
    #[error(transparent)]
    Prediction(#[from] EstimationError),
    #[error("matrix has {} error-level finding(s)", .0.iter().filter(|f| f.severity == Severity::Error).count())]
    Validation(Vec<Finding>),
}

impl MatrixError {
    pub fn code(&self) -> &'static str {
        match self {
            MatrixError::DreOutOfRange(_) => "dre-out-of-range",
            MatrixError::InvalidPlan { .. } => "invalid-plan",
            MatrixError::Prediction(e) => e.code(),
            MatrixError::Validation(_) => "validation-error",
        }
    }

    pub fn location(&self) -> Option<String> {
        match self {
            MatrixError::InvalidPlan { location, .. } => Some(location.clone()),
            MatrixError::Prediction(e) => e.field().map(|f| format!("predicted.{f}")),
            _ => None,
        }
    }
}

/// A rung of the test-level ladder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestLevel {
    pub name: String,
    pub ordinal: usize,
}

impl TestLevel {
    pub fn new(name: impl Into<String>, ordinal: usize) -> Self {
        Self { name: name.into(), ordinal }
    }
}

/// One column of the risk matrix as entered by the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPlan<T> {
    pub level: TestLevel,
    pub scope_label: String,
    pub intensity: String,
    pub environment: String,
    pub staff: u32,
    pub calendar_weeks: T,
    pub dre: T,
}

impl<T: Scalar> LevelPlan<T> {
    pub fn staff_weeks(&self) -> T {
        T::from_count(u64::from(self.staff)) * self.calendar_weeks
    }

    fn check(&self) -> Result<(), MatrixError> {
        check_dre(self.dre).map_err(|e| MatrixError::InvalidPlan {
            location: format!("levels.{}.dre", self.level.name),
            message: format!("{e}; dre < 1"),
        })?;
        if !non_negative(self.calendar_weeks) {
            return Err(MatrixError::InvalidPlan {
                location: format!("levels.{}.calendar_weeks", self.level.name),
                message: "calendar_weeks must be finite and >= 0".into(),
            });
        }
        Ok(())
    }
}

fn check_dre<T: Scalar>(dre: T) -> Result<(), MatrixError> {
    if dre.is_finite() && dre >= T::zero() && dre < T::one() {
        Ok(())
    } else {
        Err(MatrixError::DreOutOfRange(dre.to_f64_lossy()))
    }
}

/// The default DRE ladder: 10%, 30%, 60%, 85%, 95%.
pub fn default_dre_ladder<T: Scalar>() -> Vec<(TestLevel, T)> {
    DEFAULT_LEVEL_NAMES
        .iter()
        .zip(DEFAULT_DRE)
        .enumerate()
        .map(|(i, (name, dre))| (TestLevel::new(*name, i), T::lit(dre)))
        .collect()
}

/// Standard elements of the five-level ladder; staff and calendar weeks are
/// per-project and start at zero.
pub fn default_level_plans<T: Scalar>() -> Vec<LevelPlan<T>> {
    default_dre_ladder()
        .into_iter()
        .map(|(level, dre)| {
            let i = level.ordinal;
            LevelPlan {
                level,
                scope_label: DEFAULT_SCOPE[i].to_string(),
                intensity: DEFAULT_INTENSITY[i].to_string(),
                environment: DEFAULT_ENVIRONMENT[i].to_string(),
                staff: 0,
                calendar_weeks: T::zero(),
                dre,
            }
        })
        .collect()
}

/// The five-level ladder with the worked example's staffing filled in.
pub fn example_level_plans<T: Scalar>() -> Vec<LevelPlan<T>> {
    let mut plans = default_level_plans();
    for (i, plan) in plans.iter_mut().enumerate() {
        plan.staff = EXAMPLE_STAFF[i];
        plan.calendar_weeks = T::lit(EXAMPLE_CALENDAR[i]);
    }
    plans
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    #[default]
    HalfAwayFromZero,
    HalfEven,
    /// Rounds up; the pessimistic reading of a fractional defect.
    Ceiling,
}

impl RoundingMode {
    pub fn round<T: Scalar>(self, value: T) -> T {
        match self {
            RoundingMode::HalfAwayFromZero => value.round(),
            RoundingMode::Ceiling => value.ceil(),
            RoundingMode::HalfEven => {
                let floor = value.floor();
                let diff = value - floor;
                let half = T::lit(0.5);
                let odd = (floor / T::lit(2.0)).fract() != T::zero();
                if diff > half || (diff == half && odd) {
                    floor + T::one()
                } else {
                    floor
                }
            }
        }
    }
}

/// How exact defect figures become the integers shown in the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayPolicy {
    pub rounding: RoundingMode,
    /// Show at least one delivered defect whenever at least one was predicted.
    pub never_zero_clamp: bool,
}

impl Default for DisplayPolicy {
    fn default() -> Self {
        Self { rounding: RoundingMode::HalfAwayFromZero, never_zero_clamp: true }
    }
}

impl DisplayPolicy {
    pub fn display<T: Scalar>(&self, value: T) -> i64 {
        self.rounding.round(value).to_i64().unwrap_or(i64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivered<T> {
    pub exact: T,
    pub display: i64,
}

/// Defects left after a level removes `dre` of the `predicted` ones.
pub fn delivered_defects<T: Scalar>(predicted: T, dre: T, policy: &DisplayPolicy) -> Result<Delivered<T>, MatrixError> {
    check_dre(dre)?;
    if !non_negative(predicted) {
        return Err(MatrixError::InvalidPlan {
            location: "predicted.nominal".into(),
            message: "predicted defects must be finite and >= 0".into(),
        });
    }
    let exact = predicted * (T::one() - dre);
    let mut display = policy.display(exact);
    if policy.never_zero_clamp && predicted >= T::one() && display < 1 {
        display = 1;
    }
    Ok(Delivered { exact, display })
}

/// Allowed values for the uninterpreted Intensity and Environment labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSets {
    pub intensity: Vec<String>,
    pub environment: Vec<String>,
}

impl Default for LabelSets {
    fn default() -> Self {
        Self {
            intensity: ["LIGHT", "MEDIUM", "STRONG"].map(String::from).to_vec(),
            environment: ["Existing", "Enhanced"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatrixOptions {
    /// Promote DRE ordering findings from warnings to errors.
    pub strict: bool,
    pub display: DisplayPolicy,
    pub labels: LabelSets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// One validation finding. `location` uses the scenario override path
/// grammar (`levels.HIGH.dre`, `scope.Regression.C`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub location: String,
    pub message: String,
}

impl Finding {
    fn new(severity: Severity, code: &str, location: String, message: String) -> Self {
        Self { severity, code: code.to_string(), location, message }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} [{}] {}", self.severity, self.location, self.code, self.message)
    }
}

/// Computed column of the risk matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow<T> {
    pub plan: LevelPlan<T>,
    pub staff_weeks: T,
    pub delivered_exact: T,
    pub delivered_display: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMatrix<T> {
    pub rows: Vec<LevelRow<T>>,
    pub predicted: DefectPrediction<T>,
    pub findings: Vec<Finding>,
}

impl<T: Scalar> RiskMatrix<T> {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn row(&self, level: &str) -> Option<&LevelRow<T>> {
        self.rows.iter().find(|r| r.plan.level.name == level)
    }

    pub fn level_names(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.plan.level.name.as_str()).collect()
    }
}

/// Computes every derived cell and attaches the validation report. Fails only
/// on malformed plans; findings never abort.
pub fn assemble_risk_matrix<T: Scalar>(
    plans: Vec<LevelPlan<T>>,
    predicted: DefectPrediction<T>,
    scope: &ScopeMatrix,
    options: &MatrixOptions,
) -> Result<RiskMatrix<T>, MatrixError> {
    if plans.is_empty() {
        return Err(MatrixError::InvalidPlan {
            location: "levels".into(),
            message: "at least one level required".into(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for (i, plan) in plans.iter().enumerate() {
        if plan.level.ordinal != i {
            return Err(MatrixError::InvalidPlan {
                location: format!("levels.{}", plan.level.name),
                message: format!(
                    "ordinal {} where {} expected (ordinals must be 0..n-1 in order)",
                    plan.level.ordinal, i
                ),
            });
        }
        if plan.level.name.trim().is_empty() || !seen.insert(plan.level.name.as_str()) {
            return Err(MatrixError::InvalidPlan {
                location: format!("levels[{i}].name"),
                message: format!("level name '{}' empty or duplicated", plan.level.name),
            });
        }
        plan.check()?;
    }
    predicted.validate()?;

    let rows = plans
        .into_iter()
        .map(|plan| {
            let delivered = delivered_defects(predicted.nominal, plan.dre, &options.display)?;
            Ok(LevelRow {
                staff_weeks: plan.staff_weeks(),
                delivered_exact: delivered.exact,
                delivered_display: delivered.display,
                plan,
            })
        })
        .collect::<Result<Vec<_>, MatrixError>>()?;

    let mut matrix = RiskMatrix { rows, predicted, findings: Vec::new() };
    matrix.findings = validate_matrix(&matrix, scope, options);
    Ok(matrix)
}

/// Like [`assemble_risk_matrix`], but in strict mode any error-level finding
/// becomes [`MatrixError::Validation`].
pub fn build_risk_matrix<T: Scalar>(
    plans: Vec<LevelPlan<T>>,
    predicted: DefectPrediction<T>,
    scope: &ScopeMatrix,
    options: &MatrixOptions,
) -> Result<RiskMatrix<T>, MatrixError> {
    let matrix = assemble_risk_matrix(plans, predicted, scope, options)?;
    if options.strict && matrix.has_errors() {
        return Err(MatrixError::Validation(matrix.findings));
    }
    Ok(matrix)
}

fn close<T: Scalar>(a: T, b: T) -> bool {
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= T::lit(DERIVED_TOLERANCE) * scale
}

/// Checks the ordering and consistency rules of both tables. An empty report
/// means the matrix is valid.
pub fn validate_matrix<T: Scalar>(
    matrix: &RiskMatrix<T>,
    scope: &ScopeMatrix,
    options: &MatrixOptions,
) -> Vec<Finding> {
    use Severity::{Error, Warning};
    let mut findings = Vec::new();

    if let Err(e) = matrix.predicted.validate() {
        findings.push(Finding::new(Error, "invalid-prediction", "predicted".into(), e.to_string()));
    }

    for (i, row) in matrix.rows.iter().enumerate() {
        let plan = &row.plan;
        let name = &plan.level.name;
        let at = |field: &str| format!("levels.{name}.{field}");

        if plan.level.ordinal != i {
            findings.push(Finding::new(
                Error,
                "level-ordinal",
                format!("levels.{name}"),
                format!("ordinal {} at position {}", plan.level.ordinal, i),
            ));
        }
        if scope.level_index(&plan.scope_label).is_none() {
            findings.push(Finding::new(
                Error,
                "unknown-scope-level",
                at("scope"),
                format!("scope level '{}' is not a column of the scope matrix", plan.scope_label),
            ));
        }
        if !options.labels.intensity.contains(&plan.intensity) {
            findings.push(Finding::new(
                Error,
                "unknown-label",
                at("intensity"),
                format!("intensity '{}' not in configured set", plan.intensity),
            ));
        }
        if !options.labels.environment.contains(&plan.environment) {
            findings.push(Finding::new(
                Error,
                "unknown-label",
                at("environment"),
                format!("environment '{}' not in configured set", plan.environment),
            ));
        }

        let dre_ok = check_dre(plan.dre).is_ok();
        if !dre_ok {
            findings.push(Finding::new(
                Error,
                "dre-out-of-range",
                at("dre"),
                format!("dre {} outside [0, 1); dre < 1", plan.dre),
            ));
        }
        if !close(row.staff_weeks, plan.staff_weeks()) {
            findings.push(Finding::new(
                Error,
                "staff-weeks-mismatch",
                at("staff_weeks"),
                format!("staff_weeks {} but staff x calendar_weeks = {}", row.staff_weeks, plan.staff_weeks()),
            ));
        }
        if dre_ok {
            if let Ok(expected) = delivered_defects(matrix.predicted.nominal, plan.dre, &options.display) {
                if !close(row.delivered_exact, expected.exact) || row.delivered_display != expected.display {
                    findings.push(Finding::new(
                        Error,
                        "delivered-mismatch",
                        at("delivered_defects"),
                        format!(
                            "delivered {} ({}) but predicted x (1 - dre) = {} ({})",
                            row.delivered_exact, row.delivered_display, expected.exact, expected.display
                        ),
                    ));
                }
            }
        }

        if i > 0 {
            let previous = &matrix.rows[i - 1].plan;
            if plan.dre < previous.dre {
                findings.push(Finding::new(
                    if options.strict { Error } else { Warning },
                    "dre-non-monotone",
                    at("dre"),
                    format!(
                        "DRE non-monotone at level {} ({}): {} after {} at {}",
                        i + 1,
                        name,
                        plan.dre,
                        previous.dre,
                        previous.level.name
                    ),
                ));
            }
            if plan.dre == T::zero() {
                findings.push(Finding::new(
                    Warning,
                    "dre-zero",
                    at("dre"),
                    format!("dre is 0 at non-minimal level {name}"),
                ));
            }
        }
    }

    for regression in scope.regressions() {
        findings.push(Finding::new(
            Error,
            "grade-regression",
            format!("scope.{}.{}", regression.activity, regression.level),
            format!(
                "grade regression in {} at scope {}: {} -> {}",
                regression.activity, regression.level, regression.from, regression.to
            ),
        ));
    }

    findings
}
