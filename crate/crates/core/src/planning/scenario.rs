//! What-if scenarios: named override sets applied to a base plan.
//!
//! Override paths are dotted:
//!
//! | path                         | value                                  |
//! |------------------------------|----------------------------------------|
//! | `levels.<LEVEL>.dre`         | number in [0, 1)                       |
//! | `levels.<LEVEL>.staff`       | non-negative integer                   |
//! | `levels.<LEVEL>.calendar_weeks` | number >= 0                         |
//! | `levels.<LEVEL>.intensity`   | label                                  |
//! | `levels.<LEVEL>.environment` | label                                  |
//! | `levels.<LEVEL>.scope`       | scope level label                      |
//! | `predicted.nominal`          | number >= 0                            |
//! | `predicted.low` / `.high`    | number >= 0                            |
//! | `scope.<ACTIVITY>.<SCOPE>`   | inclusion grade label                  |
//! | `selected_level`             | level name or scope label              |
//!
//! `<LEVEL>` matches level names case-insensitively. Overriding the nominal
//! prediction re-derives the bounds from the plan's range factors unless the
//! bounds are overridden too.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Plan, PlanningError};
use crate::estimation::DefectPrediction;
use crate::matrix::RiskMatrix;
use crate::scalar::Scalar;
use crate::scope::{Grade, ScopeMatrix};

/// Value side of an override: numbers for quantities, text for labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverrideValue {
    Number(f64),
    Text(String),
}

impl OverrideValue {
    /// Parses command-line text: numbers when they parse, labels otherwise.
    pub fn parse_text(raw: &str) -> Self {
        match raw.trim().parse::<f64>() {
            Ok(n) => OverrideValue::Number(n),
            Err(_) => OverrideValue::Text(raw.to_string()),
        }
    }

    fn number(&self, path: &str) -> Result<f64, PlanningError> {
        match self {
            OverrideValue::Number(n) => Ok(*n),
            OverrideValue::Text(t) => t.trim().parse().map_err(|_| PlanningError::InvariantViolation {
                location: path.to_string(),
                message: format!("expected a number, got '{t}'"),
            }),
        }
    }

    fn text(&self) -> String {
        match self {
            OverrideValue::Number(n) => n.to_string(),
            OverrideValue::Text(t) => t.clone(),
        }
    }
}

impl fmt::Display for OverrideValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelField {
    Dre,
    Staff,
    CalendarWeeks,
    Intensity,
    Environment,
    Scope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedField {
    Nominal,
    Low,
    High,
}

/// A parsed override path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OverridePath {
    Level { level: String, field: LevelField },
    Predicted(PredictedField),
    ScopeCell { activity: String, level: String },
    SelectedLevel,
}

impl FromStr for OverridePath {
    type Err = PlanningError;

    fn from_str(path: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| PlanningError::BadOverridePath { path: path.to_string(), reason: reason.to_string() };
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            ["selected_level"] => Ok(OverridePath::SelectedLevel),
            ["predicted", field] => Ok(OverridePath::Predicted(match *field {
                "nominal" => PredictedField::Nominal,
                "low" => PredictedField::Low,
                "high" => PredictedField::High,
                _ => return Err(bad("predicted field must be nominal, low or high")),
            })),
            ["levels", level, field] if !level.is_empty() => Ok(OverridePath::Level {
                level: level.to_string(),
                field: match *field {
                    "dre" => LevelField::Dre,
                    "staff" => LevelField::Staff,
                    "calendar_weeks" => LevelField::CalendarWeeks,
                    "intensity" => LevelField::Intensity,
                    "environment" => LevelField::Environment,
                    "scope" => LevelField::Scope,
                    _ => {
                        return Err(bad(
                            "level field must be dre, staff, calendar_weeks, intensity, environment or scope",
                        ))
                    }
                },
            }),
            ["scope", activity, level] if !activity.is_empty() && !level.is_empty() => {
                Ok(OverridePath::ScopeCell { activity: activity.to_string(), level: level.to_string() })
            }
            _ => Err(bad(
                "expected levels.<LEVEL>.<field>, predicted.<field>, scope.<ACTIVITY>.<SCOPE> or selected_level",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub overrides: BTreeMap<String, OverrideValue>,
}

impl Scenario {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), overrides: BTreeMap::new() }
    }

    pub fn set(mut self, path: impl Into<String>, value: OverrideValue) -> Self {
        self.overrides.insert(path.into(), value);
        self
    }
}

/// Scenario minus base, per level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDelta<T> {
    pub level: String,
    pub delivered_exact: T,
    pub delivered_display: i64,
    pub staff_weeks: T,
    pub calendar_weeks: T,
}

/// Delivered defects at the base's selected level versus the scenario's.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDelta<T> {
    pub base_level: Option<String>,
    pub level: String,
    pub base_delivered_display: i64,
    pub delivered_display: i64,
    pub delta_display: i64,
    pub delta_exact: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult<T> {
    pub name: String,
    pub matrix: RiskMatrix<T>,
    pub scope: ScopeMatrix,
    pub selected_level: Option<String>,
    pub selection: Option<SelectionDelta<T>>,
    pub deltas: Vec<LevelDelta<T>>,
}

impl<T: Scalar> Plan<T> {
    /// A copy of the plan with every override applied.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, OverrideValue>) -> Result<Plan<T>, PlanningError> {
        let mut plan = self.clone();
        let mut nominal = None;
        let mut low = None;
        let mut high = None;

        for (raw_path, value) in overrides {
            let violation = |message: String| PlanningError::InvariantViolation { location: raw_path.clone(), message };
            match raw_path.parse::<OverridePath>()? {
                OverridePath::SelectedLevel => {
                    let key = value.text();
                    let level = plan.resolve_level(&key).ok_or_else(|| PlanningError::BadOverridePath {
                        path: raw_path.clone(),
                        reason: format!("no level or scope label '{key}'"),
                    })?;
                    plan.selected_level = Some(level);
                }
                OverridePath::Predicted(field) => {
                    let count = value.number(raw_path)?;
                    if !(count.is_finite() && count >= 0.0) {
                        return Err(violation(format!("predicted defects must be >= 0, got {count}")));
                    }
                    match field {
                        PredictedField::Nominal => nominal = Some(T::lit(count)),
                        PredictedField::Low => low = Some(T::lit(count)),
                        PredictedField::High => high = Some(T::lit(count)),
                    }
                }
                OverridePath::ScopeCell { activity, level } => {
                    let grade: Grade = value.text().parse().map_err(|e| violation(format!("{e}")))?;
                    if plan.scope.grade(&activity, &level).is_none() {
                        return Err(PlanningError::BadOverridePath {
                            path: raw_path.clone(),
                            reason: format!("no scope cell ({activity}, {level})"),
                        });
                    }
                    plan.scope =
                        plan.scope.with_grade(&activity, &level, grade).map_err(|e| violation(e.to_string()))?;
                }
                OverridePath::Level { level, field } => {
                    let idx = plan.levels.iter().position(|l| l.level.name.eq_ignore_ascii_case(&level)).ok_or_else(
                        || PlanningError::BadOverridePath {
                            path: raw_path.clone(),
                            reason: format!("no level '{level}'"),
                        },
                    )?;
                    let composed = plan.composition.as_ref().is_some_and(|c| c.enabled);
                    let target = &mut plan.levels[idx];
                    match field {
                        LevelField::Dre => {
                            if composed {
                                return Err(PlanningError::BadOverridePath {
                                    path: raw_path.clone(),
                                    reason: "dre is derived from the scope matrix while composition mode is on".into(),
                                });
                            }
                            let dre = value.number(raw_path)?;
                            if !(dre.is_finite() && (0.0..1.0).contains(&dre)) {
                                return Err(violation(format!("dre must be in [0, 1), got {dre}; dre < 1")));
                            }
                            target.dre = T::lit(dre);
                        }
                        LevelField::Staff => {
                            let staff = value.number(raw_path)?;
                            if !(staff.is_finite()
                                && staff >= 0.0
                                && staff.fract() == 0.0
                                && staff <= f64::from(u32::MAX))
                            {
                                return Err(violation(format!("staff must be a non-negative integer, got {staff}")));
                            }
                            target.staff = staff as u32;
                        }
                        LevelField::CalendarWeeks => {
                            let w = value.number(raw_path)?;
                            if !(w.is_finite() && w >= 0.0) {
                                return Err(violation(format!("calendar_weeks must be >= 0, got {w}")));
                            }
                            target.calendar_weeks = T::lit(w);
                        }
                        LevelField::Intensity => target.intensity = value.text(),
                        LevelField::Environment => target.environment = value.text(),
                        LevelField::Scope => {
                            let label = value.text();
                            if plan.scope.level_index(&label).is_none() {
                                return Err(violation(format!("scope level '{label}' not in scope matrix")));
                            }
                            plan.levels[idx].scope_label = label;
                        }
                    }
                }
            }
        }

        if nominal.is_some() || low.is_some() || high.is_some() {
            let base = nominal.unwrap_or(plan.predicted.nominal);
            let (derived_low, derived_high) =
                if nominal.is_some() { plan.range.apply(base) } else { (plan.predicted.low, plan.predicted.high) };
            plan.predicted =
                DefectPrediction::direct(base, low.unwrap_or(derived_low), high.unwrap_or(derived_high)).map_err(
                    |e| PlanningError::InvariantViolation { location: "predicted".into(), message: e.to_string() },
                )?;
        }
        Ok(plan)
    }
}

/// Applies a scenario to a copy of `base` and reports what changed.
pub fn apply_scenario<T: Scalar>(base: &Plan<T>, scenario: &Scenario) -> Result<ScenarioResult<T>, PlanningError> {
    let base_matrix = base.matrix()?;
    let plan = base.with_overrides(&scenario.overrides)?;
    let matrix = plan.matrix()?;

    let deltas = level_deltas(&base_matrix, &matrix)?;

    let selection = match plan.selected_level.as_ref() {
        None => None,
        Some(level) => {
            let row = matrix.row(level).expect("selected level resolved against this ladder");
            let base_row = base
                .selected_level
                .as_deref()
                .and_then(|l| base_matrix.row(l))
                .unwrap_or_else(|| base_matrix.row(level).expect("ladders match"));
            Some(SelectionDelta {
                base_level: base.selected_level.clone(),
                level: level.clone(),
                base_delivered_display: base_row.delivered_display,
                delivered_display: row.delivered_display,
                delta_display: row.delivered_display - base_row.delivered_display,
                delta_exact: row.delivered_exact - base_row.delivered_exact,
            })
        }
    };

    Ok(ScenarioResult {
        name: scenario.name.clone(),
        matrix,
        scope: plan.scope,
        selected_level: plan.selected_level,
        selection,
        deltas,
    })
}

fn level_deltas<T: Scalar>(base: &RiskMatrix<T>, other: &RiskMatrix<T>) -> Result<Vec<LevelDelta<T>>, PlanningError> {
    if base.level_names() != other.level_names() {
        return Err(PlanningError::MismatchedLadders(format!("{:?} vs {:?}", base.level_names(), other.level_names())));
    }
    Ok(base
        .rows
        .iter()
        .zip(&other.rows)
        .map(|(b, s)| LevelDelta {
            level: s.plan.level.name.clone(),
            delivered_exact: s.delivered_exact - b.delivered_exact,
            delivered_display: s.delivered_display - b.delivered_display,
            staff_weeks: s.staff_weeks - b.staff_weeks,
            calendar_weeks: s.plan.calendar_weeks - b.plan.calendar_weeks,
        })
        .collect())
}

/// One scenario's column in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonColumn<T> {
    pub name: String,
    pub selected_level: Option<String>,
    pub selected_delivered_display: Option<i64>,
    pub delivered_exact: Vec<T>,
    pub delivered_display: Vec<i64>,
    pub staff_weeks: Vec<T>,
    pub calendar_weeks: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<T> {
    pub levels: Vec<String>,
    pub columns: Vec<ComparisonColumn<T>>,
}

/// Side-by-side view of scenario results, in input order.
pub fn compare_scenarios<T: Scalar>(results: &[ScenarioResult<T>]) -> Result<Comparison<T>, PlanningError> {
    let levels: Vec<String> = match results.first() {
        Some(first) => first.matrix.level_names().into_iter().map(String::from).collect(),
        None => Vec::new(),
    };
    let mut columns = Vec::with_capacity(results.len());
    for result in results {
        let names = result.matrix.level_names();
        if names != levels {
            return Err(PlanningError::MismatchedLadders(format!("scenario '{}' has levels {names:?}", result.name)));
        }
        let rows = &result.matrix.rows;
        columns.push(ComparisonColumn {
            name: result.name.clone(),
            selected_level: result.selected_level.clone(),
            selected_delivered_display: result
                .selected_level
                .as_deref()
                .and_then(|l| result.matrix.row(l))
                .map(|r| r.delivered_display),
            delivered_exact: rows.iter().map(|r| r.delivered_exact).collect(),
            delivered_display: rows.iter().map(|r| r.delivered_display).collect(),
            staff_weeks: rows.iter().map(|r| r.staff_weeks).collect(),
            calendar_weeks: rows.iter().map(|r| r.plan.calendar_weeks).collect(),
        });
    }
    Ok(Comparison { levels, columns })
}
