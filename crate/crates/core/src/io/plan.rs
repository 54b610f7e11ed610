//! Plan documents: the JSON file that carries both matrices and the defect
//! prediction inputs.
//!
//! Loading fills omitted standard elements (DRE ladder, scope grades,
//! intensity and environment labels) from the standard defaults. Saving
//! writes the canonical form: fixed key order, two-space indentation and a
//! trailing newline, so `save(load(save(x))) == save(load(x))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{
    backfire_function_points, predict_defects_from_fp, predict_defects_from_loc, DefectPrediction, DensityParams,
    EstimationError, RangeFactors, SizeEstimate,
};
use crate::matrix::{
    default_level_plans, example_level_plans, DisplayPolicy, LabelSets, LevelPlan, MatrixOptions, RoundingMode,
    TestLevel,
};
use crate::planning::{CompositionModel, Plan};
use crate::scalar::Scalar;
use crate::scope::{default_scope_matrix, ScopeMatrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
    #[error("invariant violation at {location}: {message}")]
    Invariant { location: String, message: String },
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::Parse { .. } => "parse-error",
            PlanError::Schema { .. } => "schema-error",
            PlanError::Invariant { .. } => "invariant-violation",
        }
    }

    pub fn location(&self) -> String {
        match self {
            PlanError::Parse { line, column, .. } => format!("line {line}, column {column}"),
            PlanError::Schema { field, .. } => field.clone(),
            PlanError::Invariant { location, .. } => location.clone(),
        }
    }

    fn invariant(location: impl Into<String>, message: impl Into<String>) -> Self {
        PlanError::Invariant { location: location.into(), message: message.into() }
    }

    fn from_estimation(prefix: &str, e: EstimationError) -> Self {
        let location = match e.field() {
            Some(f) => format!("{prefix}.{f}"),
            None => prefix.to_string(),
        };
        PlanError::invariant(location, e.to_string())
    }
}

/// How the defect prediction is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictionSpec {
    Direct {
        nominal: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        low: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        high: Option<f64>,
    },
    /// From a function-point count, or from LOC backfired through a gearing
    /// factor.
    Fp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        function_points: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        loc: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        loc_per_fp: Option<f64>,
        #[serde(default = "one")]
        complexity_adjustment: f64,
        defects_per_fp: f64,
        #[serde(default = "one")]
        adjustment: f64,
    },
    LocDensity {
        loc: f64,
        defects_per_kloc: f64,
        #[serde(default = "one")]
        adjustment: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PredictionSpec {
    pub fn predict<T: Scalar>(&self, range: &RangeFactors<T>) -> Result<DefectPrediction<T>, PlanError> {
        let err = |e| PlanError::from_estimation("prediction", e);
        match *self {
            PredictionSpec::Direct { nominal, low, high } => {
                let nominal = T::lit(nominal);
                let (dl, dh) = range.apply(nominal);
                DefectPrediction::direct(nominal, low.map(T::lit).unwrap_or(dl), high.map(T::lit).unwrap_or(dh))
                    .map_err(err)
            }
            PredictionSpec::Fp {
                function_points,
                loc,
                loc_per_fp,
                complexity_adjustment,
                defects_per_fp,
                adjustment,
            } => {
                let fp = match (function_points, loc, loc_per_fp) {
                    (Some(fp), None, None) => T::lit(fp),
                    (None, Some(loc), Some(gearing)) => {
                        let size = SizeEstimate::new(T::lit(loc), T::lit(gearing))
                            .with_complexity(T::lit(complexity_adjustment));
                        backfire_function_points(&size).map_err(err)?
                    }
                    _ => {
                        return Err(PlanError::Schema {
                            field: "prediction".into(),
                            message: "fp method needs either function_points or both loc and loc_per_fp".into(),
                        })
                    }
                };
                let params = DensityParams {
                    defects_per_fp: T::lit(defects_per_fp),
                    defects_per_kloc: T::zero(),
                    adjustment: T::lit(adjustment),
                };
                predict_defects_from_fp(fp, &params, range).map_err(err)
            }
            PredictionSpec::LocDensity { loc, defects_per_kloc, adjustment } => {
                let params = DensityParams {
                    defects_per_fp: T::zero(),
                    defects_per_kloc: T::lit(defects_per_kloc),
                    adjustment: T::lit(adjustment),
                };
                predict_defects_from_loc(T::lit(loc), &params, range).map_err(err)
            }
        }
    }
}

/// One risk-matrix column as stored in the plan file. Order in the list is
/// the level ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub name: String,
    pub scope: String,
    pub intensity: String,
    pub environment: String,
    pub staff: u32,
    pub calendar_weeks: f64,
    pub dre: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOptions {
    #[serde(default)]
    pub strict_validation: bool,
    #[serde(default)]
    pub rounding: RoundingMode,
    #[serde(default = "yes")]
    pub never_zero_clamp: bool,
    #[serde(default)]
    pub labels: LabelSets,
    #[serde(default)]
    pub composition: CompositionModel<f64>,
}

fn yes() -> bool {
    true
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            strict_validation: false,
            rounding: RoundingMode::default(),
            never_zero_clamp: true,
            labels: LabelSets::default(),
            composition: CompositionModel::default(),
        }
    }
}

impl<T: Scalar> Default for CompositionModel<T> {
    fn default() -> Self {
        Self { enabled: false, effectiveness: BTreeMap::new() }
    }
}

/// A fully resolved plan file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanDocument {
    pub schema_version: u32,
    pub prediction: PredictionSpec,
    pub range_factors: RangeFactors<f64>,
    pub levels: Vec<LevelSpec>,
    pub scope_matrix: ScopeMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_level: Option<String>,
    pub options: PlanOptions,
}

/// On-disk shape before defaults are filled in.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    schema_version: u32,
    prediction: PredictionSpec,
    #[serde(default)]
    range_factors: Option<RangeFactors<f64>>,
    #[serde(default)]
    levels: Option<Vec<RawLevel>>,
    #[serde(default)]
    scope_matrix: Option<ScopeMatrix>,
    #[serde(default)]
    selected_level: Option<String>,
    #[serde(default)]
    options: PlanOptions,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    name: String,
    #[serde(default)]
    scope: Option<String>,
    #[serde(default)]
    intensity: Option<String>,
    #[serde(default)]
    environment: Option<String>,
    #[serde(default)]
    staff: Option<u32>,
    #[serde(default)]
    calendar_weeks: Option<f64>,
    #[serde(default)]
    dre: Option<f64>,
}

fn spec_from_plan(plan: &LevelPlan<f64>) -> LevelSpec {
    LevelSpec {
        name: plan.level.name.clone(),
        scope: plan.scope_label.clone(),
        intensity: plan.intensity.clone(),
        environment: plan.environment.clone(),
        staff: plan.staff,
        calendar_weeks: plan.calendar_weeks,
        dre: plan.dre,
    }
}

impl PlanDocument {
    /// The worked example: 800 predicted defects (650 to 1400), the default
    /// ladder with its staffing, the standard scope grid, MEDIUM selected.
    pub fn worked_example() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            prediction: PredictionSpec::Direct { nominal: 800.0, low: Some(650.0), high: Some(1400.0) },
            range_factors: RangeFactors::default(),
            levels: example_level_plans::<f64>().iter().map(spec_from_plan).collect(),
            scope_matrix: default_scope_matrix(),
            selected_level: Some("MEDIUM".into()),
            options: PlanOptions::default(),
        }
    }

    /// The standard elements around a direct prediction, with
    /// zero staffing.
    pub fn with_defaults(nominal: f64) -> Self {
        let range = RangeFactors::default();
        let (low, high) = range.apply(nominal);
        Self {
            prediction: PredictionSpec::Direct { nominal, low: Some(low), high: Some(high) },
            levels: default_level_plans::<f64>().iter().map(spec_from_plan).collect(),
            selected_level: None,
            ..Self::worked_example()
        }
    }

    pub fn matrix_options(&self) -> MatrixOptions {
        MatrixOptions {
            strict: self.options.strict_validation,
            display: DisplayPolicy { rounding: self.options.rounding, never_zero_clamp: self.options.never_zero_clamp },
            labels: self.options.labels.clone(),
        }
    }

    pub fn level_plans<T: Scalar>(&self) -> Vec<LevelPlan<T>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| LevelPlan {
                level: TestLevel::new(l.name.clone(), i),
                scope_label: l.scope.clone(),
                intensity: l.intensity.clone(),
                environment: l.environment.clone(),
                staff: l.staff,
                calendar_weeks: T::lit(l.calendar_weeks),
                dre: T::lit(l.dre),
            })
            .collect()
    }

    /// Evaluates the prediction and assembles the scenario base.
    pub fn to_plan<T: Scalar>(&self) -> Result<Plan<T>, PlanError> {
        let range = RangeFactors { low: T::lit(self.range_factors.low), high: T::lit(self.range_factors.high) };
        let predicted = self.prediction.predict(&range)?;
        let composition = Some(CompositionModel {
            enabled: self.options.composition.enabled,
            effectiveness: self
                .options
                .composition
                .effectiveness
                .iter()
                .map(|(k, v)| (k.clone(), T::lit(*v)))
                .collect(),
        });
        Ok(Plan {
            levels: self.level_plans(),
            scope: self.scope_matrix.clone(),
            predicted,
            range,
            selected_level: self.selected_level.clone(),
            options: self.matrix_options(),
            composition,
        })
    }

    fn check(&self) -> Result<(), PlanError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(PlanError::Schema {
                field: "schema_version".into(),
                message: format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            });
        }
        self.range_factors.validate().map_err(|e| PlanError::from_estimation("range_factors", e))?;
        self.prediction.predict(&self.range_factors)?;

        if self.levels.is_empty() {
            return Err(PlanError::invariant("levels", "at least one level required"));
        }
        let mut names = std::collections::HashSet::new();
        for (i, level) in self.levels.iter().enumerate() {
            let at = |field: &str| format!("levels[{i}].{field}");
            if level.name.trim().is_empty() || level.name.contains('.') {
                return Err(PlanError::invariant(at("name"), "level names must be non-empty and contain no '.'"));
            }
            if !names.insert(level.name.to_ascii_lowercase()) {
                return Err(PlanError::invariant(at("name"), format!("duplicate level name '{}'", level.name)));
            }
            if !(level.dre.is_finite() && (0.0..1.0).contains(&level.dre)) {
                return Err(PlanError::invariant(at("dre"), format!("dre < 1 and >= 0 required, got {}", level.dre)));
            }
            if !(level.calendar_weeks.is_finite() && level.calendar_weeks >= 0.0) {
                return Err(PlanError::invariant(at("calendar_weeks"), "calendar_weeks must be >= 0"));
            }
            if self.scope_matrix.level_index(&level.scope).is_none() {
                return Err(PlanError::invariant(
                    at("scope"),
                    format!("scope level '{}' is not a column of scope_matrix", level.scope),
                ));
            }
        }
        for row in self.scope_matrix.activities() {
            if row.name.contains('.') {
                return Err(PlanError::invariant(
                    "scope_matrix.activities",
                    format!("activity '{}' contains '.'", row.name),
                ));
            }
        }
        if let Some(selected) = &self.selected_level {
            if !self.levels.iter().any(|l| &l.name == selected) {
                return Err(PlanError::invariant("selected_level", format!("no level named '{selected}'")));
            }
        }
        let composition = &self.options.composition;
        for (activity, e) in &composition.effectiveness {
            if !(e.is_finite() && (0.0..1.0).contains(e)) {
                return Err(PlanError::invariant(
                    format!("options.composition.effectiveness.{activity}"),
                    "effectiveness must be in [0, 1)",
                ));
            }
        }
        if composition.enabled {
            for row in self.scope_matrix.activities() {
                if !composition.effectiveness.contains_key(&row.name) {
                    return Err(PlanError::invariant(
                        format!("options.composition.effectiveness.{}", row.name),
                        "composition mode needs an effectiveness for every activity",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn resolve(raw: RawPlan) -> Result<PlanDocument, PlanError> {
    let defaults = default_level_plans::<f64>();
    let levels = match raw.levels {
        None => defaults.iter().map(spec_from_plan).collect(),
        Some(levels) => levels
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let fallback = defaults.iter().find(|d| d.level.name.eq_ignore_ascii_case(&l.name));
                let missing = |field: &str| PlanError::Schema {
                    field: format!("levels[{i}].{field}"),
                    message: format!("missing field `{field}` (no default for level '{}')", l.name),
                };
                Ok(LevelSpec {
                    scope: match l.scope {
                        Some(s) => s,
                        None => fallback.map(|d| d.scope_label.clone()).ok_or_else(|| missing("scope"))?,
                    },
                    intensity: match l.intensity {
                        Some(s) => s,
                        None => fallback.map(|d| d.intensity.clone()).ok_or_else(|| missing("intensity"))?,
                    },
                    environment: match l.environment {
                        Some(s) => s,
                        None => fallback.map(|d| d.environment.clone()).ok_or_else(|| missing("environment"))?,
                    },
                    dre: match l.dre {
                        Some(d) => d,
                        None => fallback.map(|d| d.dre).ok_or_else(|| missing("dre"))?,
                    },
                    staff: l.staff.unwrap_or(0),
                    calendar_weeks: l.calendar_weeks.unwrap_or(0.0),
                    name: l.name,
                })
            })
            .collect::<Result<_, PlanError>>()?,
    };
    let range_factors = raw.range_factors.unwrap_or_default();
    let prediction = match raw.prediction {
        PredictionSpec::Direct { nominal, low, high } => {
            let (dl, dh) = range_factors.apply(nominal);
            PredictionSpec::Direct { nominal, low: Some(low.unwrap_or(dl)), high: Some(high.unwrap_or(dh)) }
        }
        other => other,
    };
    let doc = PlanDocument {
        schema_version: raw.schema_version,
        prediction,
        range_factors,
        levels,
        scope_matrix: raw.scope_matrix.unwrap_or_else(default_scope_matrix),
        selected_level: raw.selected_level,
        options: raw.options,
    };
    doc.check()?;
    Ok(doc)
}

pub fn load_plan(bytes: &[u8]) -> Result<PlanDocument, PlanError> {
    let text = std::str::from_utf8(bytes).map_err(|e| PlanError::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
        column: 0,
        message: "input is not valid UTF-8".into(),
    })?;
    // Syntax first, so trailing garbage is reported as such even when the
    // prefix is also incomplete.
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PlanError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let raw: RawPlan = serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        PlanError::Schema {
            field: if field == "." { "(root)".into() } else { field },
            message: e.into_inner().to_string(),
        }
    })?;
    resolve(raw)
}

/// Canonical serialization.
pub fn save_plan(doc: &PlanDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("plan documents always serialize");
    out.push('\n');
    out
}
