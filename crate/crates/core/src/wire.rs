//! Request and response bodies of the HTTP contract.
//!
//! The service is a thin shell over these functions; the CLI calls the same
//! ones in JSON mode so both fronts emit identical bytes.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationError;
use crate::estimation::{
    backfire_function_points, predict_defects_from_fp, predict_defects_from_loc, DefectPrediction, DensityParams,
    EstimationError, RangeFactors, SizeEstimate,
};
use crate::io::render::{render_comparison, render_matrix, render_prediction, render_scenario, Format};
use crate::io::{load_plan, save_plan, HistoryError, PlanDocument, PlanError};
use crate::planning::{apply_scenario, compare_scenarios, Plan, PlanningError, Scenario};

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

/// An error with the HTTP status it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireError {
    pub status: u16,
    pub body: ErrorBody,
}

impl WireError {
    pub fn new(status: u16, code: &str, message: impl Into<String>, location: Option<String>) -> Self {
        Self { status, body: ErrorBody { error: code.to_string(), message: message.into(), location } }
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(404, code, message, None)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.body).expect("error bodies serialize");
        out.push('\n');
        out
    }
}

impl std::fmt::Display for WireError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.body.location {
            Some(loc) => write!(f, "{} at {}: {}", self.body.error, loc, self.body.message),
            None => write!(f, "{}: {}", self.body.error, self.body.message),
        }
    }
}

impl std::error::Error for WireError {}

impl From<PlanError> for WireError {
    fn from(e: PlanError) -> Self {
        let status = if matches!(e, PlanError::Parse { .. }) { 400 } else { 422 };
        WireError::new(status, e.code(), e.to_string(), Some(e.location()))
    }
}

impl From<PlanningError> for WireError {
    fn from(e: PlanningError) -> Self {
        WireError::new(422, e.code(), e.to_string(), e.location())
    }
}

impl From<EstimationError> for WireError {
    fn from(e: EstimationError) -> Self {
        WireError::new(422, e.code(), e.to_string(), e.field().map(String::from))
    }
}

impl From<CalibrationError> for WireError {
    fn from(e: CalibrationError) -> Self {
        WireError::new(422, e.code(), e.to_string(), None)
    }
}

impl From<HistoryError> for WireError {
    fn from(e: HistoryError) -> Self {
        WireError::new(422, e.code(), e.to_string(), Some(format!("row {}", e.row())))
    }
}

/// Deserializes a JSON body, mapping syntax errors to 400 and shape errors
/// to 422 with the offending path.
pub fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, WireError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => WireError::new(422, "schema-error", inner.to_string(), Some(path)),
            _ => WireError::new(
                400,
                "parse-error",
                inner.to_string(),
                Some(format!("line {}, column {}", inner.line(), inner.column())),
            ),
        }
    })?;
    de.end().map_err(|e| WireError::new(400, "parse-error", e.to_string(), None))?;
    Ok(value)
}

/// `POST /api/estimate` body.
///
/// Either a size (`loc` + `loc_per_fp`) or a `function_points` count with
/// `defects_per_fp`, or `loc` with `defects_per_kloc`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loc_per_fp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity_adjustment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "fp")]
    pub function_points: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defects_per_fp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defects_per_kloc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjustment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_factors: Option<RangeFactors<f64>>,
}

impl EstimateRequest {
    pub fn evaluate(&self) -> Result<DefectPrediction<f64>, WireError> {
        let range = self.range_factors.unwrap_or_default();
        let adjustment = self.adjustment.unwrap_or(1.0);
        let invalid = |msg: &str, field: &str| WireError::new(422, "invalid-params", msg, Some(field.to_string()));

        let fp = match (self.function_points, self.loc, self.loc_per_fp) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(invalid("give either function_points or loc + loc_per_fp, not both", "function_points"))
            }
            (Some(fp), None, None) => Some(fp),
            (None, Some(loc), Some(gearing)) => {
                let size = SizeEstimate::new(loc, gearing).with_complexity(self.complexity_adjustment.unwrap_or(1.0));
                Some(backfire_function_points(&size)?)
            }
            _ => None,
        };

        match (fp, self.defects_per_fp, self.loc, self.defects_per_kloc) {
            (Some(fp), Some(per_fp), _, _) => {
                let params = DensityParams { defects_per_fp: per_fp, defects_per_kloc: 0.0, adjustment };
                Ok(predict_defects_from_fp(fp, &params, &range)?)
            }
            (_, None, Some(loc), Some(per_kloc)) => {
                let params = DensityParams { defects_per_fp: 0.0, defects_per_kloc: per_kloc, adjustment };
                Ok(predict_defects_from_loc(loc, &params, &range)?)
            }
            (Some(_), None, _, _) => {
                Err(invalid("defects_per_fp is required with a function-point size", "defects_per_fp"))
            }
            _ => Err(invalid(
                "need loc + loc_per_fp + defects_per_fp, function_points + defects_per_fp, or loc + defects_per_kloc",
                "loc",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub version: &'static str,
}

pub fn health_json() -> String {
    let mut out =
        serde_json::to_string_pretty(&Health { status: "ok", version: env!("CARGO_PKG_VERSION") }).expect("serializes");
    out.push('\n');
    out
}

/// `GET /api/defaults`: the worked-example plan in canonical form.
pub fn defaults_json() -> String {
    save_plan(&PlanDocument::worked_example())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

pub fn session_created_json(session_id: &str) -> String {
    let mut out =
        serde_json::to_string_pretty(&SessionCreated { session_id: session_id.to_string() }).expect("serializes");
    out.push('\n');
    out
}

pub fn estimate_json(request: &EstimateRequest) -> Result<String, WireError> {
    Ok(render_prediction(&request.evaluate()?, Format::Json))
}

/// `POST /api/matrix`: the matrix report for a plan document.
pub fn matrix_json(plan_bytes: &[u8]) -> Result<String, WireError> {
    let doc = load_plan(plan_bytes)?;
    let plan = doc.to_plan::<f64>()?;
    let matrix = plan.matrix()?;
    Ok(render_matrix(&matrix, &plan.scope, Format::Json))
}

pub fn scenario_json(base: &Plan<f64>, scenario: &Scenario) -> Result<String, WireError> {
    Ok(render_scenario(&apply_scenario(base, scenario)?, Format::Json))
}

pub fn compare_json(base: &Plan<f64>, scenarios: &[Scenario]) -> Result<String, WireError> {
    let results = scenarios.iter().map(|s| apply_scenario(base, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(render_comparison(&compare_scenarios(&results)?, Format::Json))
}
