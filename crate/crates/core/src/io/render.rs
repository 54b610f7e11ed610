//! Text renderings of matrices, predictions and scenario results.
//!
//! JSON renderings are the wire format: the HTTP service answers with exactly
//! these bytes, and the CLI prints them in `--json`/`--format json` mode.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::calibration::{DensityCalibration, DreProfile};
use crate::estimation::{DefectPrediction, PredictionMethod};
use crate::matrix::{Finding, RiskMatrix, Severity};
use crate::planning::{Comparison, ScenarioResult};
use crate::scalar::Scalar;
use crate::scope::{ActivityRow, Grade, ScopeMatrix};

/// Row labels of the risk matrix, top to bottom.
pub const RISK_ROWS: [&str; 9] = [
    "TEST SCOPE",
    "INTENSITY",
    "ENVIRONMENT",
    "STAFF",
    "STAFF WEEKS",
    "CALENDAR WEEKS",
    "PREDICTED DEFECTS",
    "DRE",
    "DELIVERED DEFECTS",
];
pub const LEVEL_HEADER: &str = "TEST LEVEL";
pub const SCOPE_HEADER: &str = "SCOPE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected md, csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Markdown => "md",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Integral values print without decimals, others with up to two.
pub fn format_number(value: f64) -> String {
    if (value - value.round()).abs() < 1e-9 {
        format!("{}", value.round() as i64)
    } else {
        let s = format!("{value:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn format_signed(value: f64) -> String {
    let s = format_number(value);
    if value > 0.0 && s != "0" {
        format!("+{s}")
    } else {
        s
    }
}

/// Efficiency as a percentage: `85%`, or `99.9%` when not whole.
pub fn format_percent(fraction: f64) -> String {
    let pct = fraction * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        let s = format!("{pct:.2}");
        format!("{}%", s.trim_end_matches('0').trim_end_matches('.'))
    }
}

fn json<S: Serialize>(value: &S) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("reports always serialize");
    out.push('\n');
    out
}

fn csv_text(rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

fn markdown_table(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
        if i == 0 {
            out.push_str(&format!("|{}\n", "---|".repeat(row.len())));
        }
    }
    out
}

// ---- JSON views -----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub nominal: f64,
    pub low: f64,
    pub high: f64,
    pub method: PredictionMethod,
}

impl<T: Scalar> From<&DefectPrediction<T>> for PredictionReport {
    fn from(p: &DefectPrediction<T>) -> Self {
        Self {
            nominal: p.nominal.to_f64_lossy(),
            low: p.low.to_f64_lossy(),
            high: p.high.to_f64_lossy(),
            method: p.method,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub name: String,
    pub ordinal: usize,
    pub scope: String,
    pub intensity: String,
    pub environment: String,
    pub staff: u32,
    pub staff_weeks: f64,
    pub calendar_weeks: f64,
    pub predicted_defects: f64,
    pub dre: f64,
    pub delivered_defects_exact: f64,
    pub delivered_defects_display: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixReport {
    pub levels: Vec<LevelReport>,
    pub predicted: PredictionReport,
    pub scope_matrix: ScopeMatrix,
    pub valid: bool,
    pub findings: Vec<Finding>,
}

impl MatrixReport {
    pub fn new<T: Scalar>(matrix: &RiskMatrix<T>, scope: &ScopeMatrix) -> Self {
        Self {
            levels: matrix
                .rows
                .iter()
                .map(|r| LevelReport {
                    name: r.plan.level.name.clone(),
                    ordinal: r.plan.level.ordinal,
                    scope: r.plan.scope_label.clone(),
                    intensity: r.plan.intensity.clone(),
                    environment: r.plan.environment.clone(),
                    staff: r.plan.staff,
                    staff_weeks: r.staff_weeks.to_f64_lossy(),
                    calendar_weeks: r.plan.calendar_weeks.to_f64_lossy(),
                    predicted_defects: matrix.predicted.nominal.to_f64_lossy(),
                    dre: r.plan.dre.to_f64_lossy(),
                    delivered_defects_exact: r.delivered_exact.to_f64_lossy(),
                    delivered_defects_display: r.delivered_display,
                })
                .collect(),
            predicted: (&matrix.predicted).into(),
            scope_matrix: scope.clone(),
            valid: !matrix.has_errors(),
            findings: matrix.findings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub level: String,
    pub delivered_defects_exact: f64,
    pub delivered_defects_display: i64,
    pub staff_weeks: f64,
    pub calendar_weeks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub base_level: Option<String>,
    pub level: String,
    pub base_delivered_defects_display: i64,
    pub delivered_defects_display: i64,
    pub delta_display: i64,
    pub delta_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub selected_level: Option<String>,
    pub selection: Option<SelectionReport>,
    pub deltas: Vec<DeltaReport>,
    pub matrix: MatrixReport,
}

impl ScenarioReport {
    pub fn new<T: Scalar>(result: &ScenarioResult<T>) -> Self {
        Self {
            name: result.name.clone(),
            selected_level: result.selected_level.clone(),
            selection: result.selection.as_ref().map(|s| SelectionReport {
                base_level: s.base_level.clone(),
                level: s.level.clone(),
                base_delivered_defects_display: s.base_delivered_display,
                delivered_defects_display: s.delivered_display,
                delta_display: s.delta_display,
                delta_exact: s.delta_exact.to_f64_lossy(),
            }),
            deltas: result
                .deltas
                .iter()
                .map(|d| DeltaReport {
                    level: d.level.clone(),
                    delivered_defects_exact: d.delivered_exact.to_f64_lossy(),
                    delivered_defects_display: d.delivered_display,
                    staff_weeks: d.staff_weeks.to_f64_lossy(),
                    calendar_weeks: d.calendar_weeks.to_f64_lossy(),
                })
                .collect(),
            matrix: MatrixReport::new(&result.matrix, &result.scope),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonColumnReport {
    pub name: String,
    pub selected_level: Option<String>,
    pub selected_delivered_defects_display: Option<i64>,
    pub delivered_defects_display: Vec<i64>,
    pub delivered_defects_exact: Vec<f64>,
    pub staff_weeks: Vec<f64>,
    pub calendar_weeks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub levels: Vec<String>,
    pub scenarios: Vec<ComparisonColumnReport>,
}

impl ComparisonReport {
    pub fn new<T: Scalar>(cmp: &Comparison<T>) -> Self {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        Self {
            levels: cmp.levels.clone(),
            scenarios: cmp
                .columns
                .iter()
                .map(|c| ComparisonColumnReport {
                    name: c.name.clone(),
                    selected_level: c.selected_level.clone(),
                    selected_delivered_defects_display: c.selected_delivered_display,
                    delivered_defects_display: c.delivered_display.clone(),
                    delivered_defects_exact: f(&c.delivered_exact),
                    staff_weeks: f(&c.staff_weeks),
                    calendar_weeks: f(&c.calendar_weeks),
                })
                .collect(),
        }
    }
}

// ---- table rows -----------------------------------------------------------

fn risk_rows<T: Scalar>(matrix: &RiskMatrix<T>) -> Vec<Vec<String>> {
    let policy_display = |x: T| format_number(x.round().to_f64_lossy());
    let mut rows = vec![std::iter::once(LEVEL_HEADER.to_string())
        .chain(matrix.rows.iter().map(|r| r.plan.level.name.clone()))
        .collect::<Vec<_>>()];
    for label in RISK_ROWS {
        let mut row = vec![label.to_string()];
        for r in &matrix.rows {
            row.push(match label {
                "TEST SCOPE" => r.plan.scope_label.clone(),
                "INTENSITY" => r.plan.intensity.clone(),
                "ENVIRONMENT" => r.plan.environment.clone(),
                "STAFF" => r.plan.staff.to_string(),
                "STAFF WEEKS" => format_number(r.staff_weeks.to_f64_lossy()),
                "CALENDAR WEEKS" => format_number(r.plan.calendar_weeks.to_f64_lossy()),
                "PREDICTED DEFECTS" => policy_display(matrix.predicted.nominal),
                "DRE" => format_percent(r.plan.dre.to_f64_lossy()),
                _ => r.delivered_display.to_string(),
            });
        }
        rows.push(row);
    }
    rows
}

fn scope_rows(scope: &ScopeMatrix) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once(SCOPE_HEADER.to_string()).chain(scope.levels().iter().cloned()).collect()];
    for activity in scope.activities() {
        rows.push(
            std::iter::once(activity.name.clone())
                .chain(activity.grades.iter().map(|g| g.label().to_string()))
                .collect(),
        );
    }
    rows
}

fn delta_rows<T: Scalar>(result: &ScenarioResult<T>) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once("CHANGE VS BASE".to_string())
        .chain(result.deltas.iter().map(|d| d.level.clone()))
        .collect()];
    rows.push(
        std::iter::once("DELIVERED DEFECTS".to_string())
            .chain(result.deltas.iter().map(|d| format_signed(d.delivered_display as f64)))
            .collect(),
    );
    rows.push(
        std::iter::once("STAFF WEEKS".to_string())
            .chain(result.deltas.iter().map(|d| format_signed(d.staff_weeks.to_f64_lossy())))
            .collect(),
    );
    rows.push(
        std::iter::once("CALENDAR WEEKS".to_string())
            .chain(result.deltas.iter().map(|d| format_signed(d.calendar_weeks.to_f64_lossy())))
            .collect(),
    );
    rows
}

fn findings_markdown(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return String::new();
    }
    let mut out = String::from("\nFindings:\n\n");
    for f in findings {
        out.push_str(&format!("- {f}\n"));
    }
    out
}

// ---- renderers ------------------------------------------------------------

/// Risk matrix followed by the scope matrix.
pub fn render_matrix<T: Scalar>(matrix: &RiskMatrix<T>, scope: &ScopeMatrix, format: Format) -> String {
    match format {
        Format::Json => json(&MatrixReport::new(matrix, scope)),
        Format::Csv => {
            let mut rows = risk_rows(matrix);
            rows.extend(scope_rows(scope));
            csv_text(&rows)
        }
        Format::Markdown => format!(
            "{}\n{}{}",
            markdown_table(&risk_rows(matrix)),
            markdown_table(&scope_rows(scope)),
            findings_markdown(&matrix.findings)
        ),
    }
}

pub fn render_scope(scope: &ScopeMatrix, format: Format) -> String {
    match format {
        Format::Json => json(scope),
        Format::Csv => csv_text(&scope_rows(scope)),
        Format::Markdown => markdown_table(&scope_rows(scope)),
    }
}

pub fn render_prediction<T: Scalar>(prediction: &DefectPrediction<T>, format: Format) -> String {
    let report = PredictionReport::from(prediction);
    match format {
        Format::Json => json(&report),
        Format::Csv => csv_text(&[
            vec!["method".into(), "low".into(), "nominal".into(), "high".into()],
            vec![
                method_label(report.method).into(),
                format_number(report.low),
                format_number(report.nominal),
                format_number(report.high),
            ],
        ]),
        Format::Markdown => format!(
            "predicted: {}\nrange: {} to {}\nmethod: {}\n",
            format_number(report.nominal),
            format_number(report.low),
            format_number(report.high),
            method_label(report.method)
        ),
    }
}

fn method_label(method: PredictionMethod) -> &'static str {
    match method {
        PredictionMethod::Fp => "fp",
        PredictionMethod::LocDensity => "loc_density",
        PredictionMethod::Direct => "direct",
    }
}

pub fn render_scenario<T: Scalar>(result: &ScenarioResult<T>, format: Format) -> String {
    match format {
        Format::Json => json(&ScenarioReport::new(result)),
        Format::Csv => {
            let mut rows = risk_rows(&result.matrix);
            rows.extend(delta_rows(result));
            rows.extend(scope_rows(&result.scope));
            csv_text(&rows)
        }
        Format::Markdown => {
            let mut out = format!("Scenario: {}\n\n", result.name);
            if let Some(sel) = &result.selection {
                out.push_str(&format!(
                    "Selected level: {} -> delivered {} (base {}, change {})\n\n",
                    sel.level,
                    sel.delivered_display,
                    sel.base_delivered_display,
                    format_signed(sel.delta_display as f64)
                ));
            }
            out.push_str(&markdown_table(&risk_rows(&result.matrix)));
            out.push('\n');
            out.push_str(&markdown_table(&delta_rows(result)));
            out.push('\n');
            out.push_str(&markdown_table(&scope_rows(&result.scope)));
            out.push_str(&findings_markdown(&result.matrix.findings));
            out
        }
    }
}

pub fn render_comparison<T: Scalar>(cmp: &Comparison<T>, format: Format) -> String {
    let report = ComparisonReport::new(cmp);
    if format == Format::Json {
        return json(&report);
    }
    let mut rows = vec![std::iter::once("DELIVERED DEFECTS".to_string())
        .chain(report.scenarios.iter().map(|s| s.name.clone()))
        .collect::<Vec<_>>()];
    for (i, level) in report.levels.iter().enumerate() {
        rows.push(
            std::iter::once(level.clone())
                .chain(report.scenarios.iter().map(|s| s.delivered_defects_display[i].to_string()))
                .collect(),
        );
    }
    rows.push(
        std::iter::once("SELECTED".to_string())
            .chain(report.scenarios.iter().map(|s| match (&s.selected_level, s.selected_delivered_defects_display) {
                (Some(l), Some(d)) => format!("{l}: {d}"),
                _ => "-".to_string(),
            }))
            .collect(),
    );
    match format {
        Format::Csv => csv_text(&rows),
        _ => markdown_table(&rows),
    }
}

pub fn render_profile<T: Scalar>(profiles: &[DreProfile<T>], format: Format) -> String {
    if format == Format::Json {
        #[derive(Serialize)]
        struct Row<'a> {
            release: &'a str,
            phase: &'a str,
            effectiveness: f64,
            found: u64,
            subsequent: u64,
            caution: bool,
        }
        #[derive(Serialize)]
        struct Report<'a> {
            phases: Vec<Row<'a>>,
            notes: Vec<String>,
        }
        let report = Report {
            phases: profiles
                .iter()
                .flat_map(|p| {
                    p.phases.iter().map(move |d| Row {
                        release: &p.release,
                        phase: &d.phase,
                        effectiveness: d.effectiveness.to_f64_lossy(),
                        found: d.found,
                        subsequent: d.subsequent,
                        caution: d.caution,
                    })
                })
                .collect(),
            notes: profiles.iter().flat_map(|p| p.notes.iter().map(move |n| format!("{}: {n}", p.release))).collect(),
        };
        return json(&report);
    }
    let mut rows = vec![["release", "phase", "found", "later", "DRE", "caution"].map(String::from).to_vec()];
    for p in profiles {
        for d in &p.phases {
            rows.push(vec![
                p.release.clone(),
                d.phase.clone(),
                d.found.to_string(),
                d.subsequent.to_string(),
                format_percent(d.effectiveness.to_f64_lossy()),
                if d.caution { "yes".into() } else { String::new() },
            ]);
        }
    }
    match format {
        Format::Csv => csv_text(&rows),
        _ => {
            let mut out = markdown_table(&rows);
            let notes: Vec<String> =
                profiles.iter().flat_map(|p| p.notes.iter().map(move |n| format!("- {}: {n}\n", p.release))).collect();
            if !notes.is_empty() {
                out.push_str("\nNotes:\n\n");
                out.extend(notes);
            }
            out
        }
    }
}

pub fn render_density<T: Scalar>(calibration: &DensityCalibration<T>, format: Format) -> String {
    let per_fp = calibration.params.defects_per_fp.to_f64_lossy();
    let per_kloc = calibration.params.defects_per_kloc.to_f64_lossy();
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                defects_per_fp: f64,
                defects_per_kloc: f64,
                adjustment: f64,
                releases_used: &'a [String],
                notes: &'a [String],
            }
            json(&Report {
                defects_per_fp: per_fp,
                defects_per_kloc: per_kloc,
                adjustment: calibration.params.adjustment.to_f64_lossy(),
                releases_used: &calibration.releases_used,
                notes: &calibration.notes,
            })
        }
        Format::Csv => csv_text(&[
            vec!["defects_per_fp".into(), "defects_per_kloc".into(), "releases".into()],
            vec![per_fp.to_string(), per_kloc.to_string(), calibration.releases_used.join(";")],
        ]),
        Format::Markdown => {
            let mut out = format!(
                "defects_per_fp: {per_fp}\ndefects_per_kloc: {per_kloc}\nreleases: {}\n",
                calibration.releases_used.join(", ")
            );
            for note in &calibration.notes {
                out.push_str(&format!("note: {note}\n"));
            }
            out
        }
    }
}

// ---- parsing back ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
#[error("rendered table: {0}")]
pub struct RenderedParseError(pub String);

/// Tables recovered from a CSV rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTables {
    /// `(row label, cells)` in order, starting with `TEST LEVEL`.
    pub risk_rows: Vec<(String, Vec<String>)>,
    pub scope: Option<ScopeMatrix>,
}

impl RenderedTables {
    pub fn risk_row(&self, label: &str) -> Option<&[String]> {
        self.risk_rows.iter().find(|(l, _)| l == label).map(|(_, cells)| cells.as_slice())
    }
}

/// Parses the CSV produced by [`render_matrix`] or [`render_scope`].
pub fn parse_rendered_csv(text: &str) -> Result<RenderedTables, RenderedParseError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut risk_rows = Vec::new();
    let mut scope_levels: Option<Vec<String>> = None;
    let mut activities = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| RenderedParseError(e.to_string()))?;
        let mut cells = record.iter().map(String::from);
        let label = cells.next().unwrap_or_default();
        let rest: Vec<String> = cells.collect();
        if label == SCOPE_HEADER {
            scope_levels = Some(rest);
        } else if scope_levels.is_some() {
            let grades = rest
                .iter()
                .map(|g| g.parse::<Grade>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| RenderedParseError(e.to_string()))?;
            activities.push(ActivityRow { name: label, grades });
        } else {
            risk_rows.push((label, rest));
        }
    }
    let scope = match scope_levels {
        Some(levels) => Some(ScopeMatrix::new(levels, activities).map_err(|e| RenderedParseError(e.to_string()))?),
        None => None,
    };
    Ok(RenderedTables { risk_rows, scope })
}

/// Error-level findings only.
pub fn errors(findings: &[Finding]) -> impl Iterator<Item = &Finding> {
    findings.iter().filter(|f| f.severity == Severity::Error)
}
