//! `testrisk`: batch estimation, risk matrices, what-if runs and the service.
//!
//! Exit codes: 0 ok, 1 error-level validation findings, 2 usage or parse
//! errors. Results go to stdout, findings and diagnostics to stderr.

use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use testrisk_core::calibration::{calibrate_density, dre_profile, DreProfile};
use testrisk_core::io::{attach_sizes, load_history_csv, load_sizes_csv, render_density, render_profile, render_scope};
use testrisk_core::planning::PlanningError;
use testrisk_core::scope::ActivityRow;
use testrisk_core::wire::{self, EstimateRequest};
use testrisk_core::{
    apply_scenario, load_plan, Format, Grade, OverrideValue, PlanDocument, PlanError, Scenario, Weighting,
};

/// Marks failures that map to exit code 1.
#[derive(Debug)]
struct ValidationFailure(String);

impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailure {}

fn invalid(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ValidationFailure(message.into()))
}

fn plan_error(e: PlanError) -> anyhow::Error {
    match e {
        PlanError::Invariant { .. } => invalid(e.to_string()),
        other => anyhow::Error::new(other),
    }
}

fn planning_error(e: PlanningError) -> anyhow::Error {
    match e {
        PlanningError::BadOverridePath { .. } => anyhow::Error::new(e),
        other => invalid(other.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "testrisk", version, about = "Test-effort risk planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict the defects present at the start of system test.
    Estimate(EstimateArgs),
    /// Render the risk matrix and scope matrix of a plan.
    Matrix(MatrixArgs),
    /// Render (and optionally extend) the scope matrix of a plan.
    Scope(ScopeArgs),
    /// Apply overrides to a plan and show the change against it.
    Whatif(WhatifArgs),
    /// Derive DRE or density parameters from past releases.
    #[command(subcommand)]
    Calibrate(CalibrateCommand),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Print the worked-example plan document.
    Defaults,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    loc: Option<f64>,
    /// Gearing factor, lines of code per function point.
    #[arg(long)]
    loc_per_fp: Option<f64>,
    /// Function points counted directly instead of backfired.
    #[arg(long, conflicts_with_all = ["loc_per_fp"])]
    fp: Option<f64>,
    #[arg(long)]
    defects_per_fp: Option<f64>,
    #[arg(long, conflicts_with = "defects_per_fp")]
    defects_per_kloc: Option<f64>,
    /// Defect adjustment multiplier.
    #[arg(long)]
    adjust: Option<f64>,
    /// Complexity multiplier applied to backfired function points.
    #[arg(long)]
    complexity: Option<f64>,
    #[arg(long)]
    range_low: Option<f64>,
    #[arg(long, requires = "range_low")]
    range_high: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Markdown,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Md | FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value = "md")]
    format: FormatArg,
    /// Same as `--format json`.
    #[arg(long)]
    json: bool,
}

impl Output {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format.into()
        }
    }
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Plan document, or `-` for stdin.
    #[arg(long)]
    config: PathBuf,
    /// Treat DRE ordering findings as errors.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ScopeArgs {
    #[arg(long)]
    config: PathBuf,
    /// New activity row, `Name=grade,grade,...` with one grade per level.
    #[arg(long)]
    add_activity: Option<String>,
    /// New level column, `Label@position=grade,grade,...` with one grade per
    /// activity; position 0 inserts before the first level.
    #[arg(long)]
    add_level: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct WhatifArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override, `path=value` (e.g. `levels.HIGH.dre=0.8`). Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "what-if")]
    name: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Subcommand)]
enum CalibrateCommand {
    /// Effectiveness of each phase from found-defect counts.
    Dre {
        #[arg(long)]
        history: PathBuf,
        /// Only this phase.
        #[arg(long)]
        phase: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Defects per KLOC and per FP from sized releases.
    Density {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        sizes: PathBuf,
        /// Count defects from this phase onward instead of all phases.
        #[arg(long)]
        phase: Option<String>,
        #[arg(long, value_enum, default_value = "unweighted")]
        weighting: WeightingArg,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightingArg {
    Unweighted,
    SizeWeighted,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "TESTRISK_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Built UI assets to serve at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Idle time before a session is dropped, e.g. `24h`, `30m`.
    #[arg(long, default_value = "24h", value_parser = humantime::parse_duration)]
    session_ttl: Duration,
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
        Ok(buf)
    } else {
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load_document(path: &Path) -> anyhow::Result<PlanDocument> {
    load_plan(&read_input(path)?).map_err(plan_error)
}

fn parse_grades(list: &str) -> anyhow::Result<Vec<Grade>> {
    list.split(',').map(|g| g.trim().parse::<Grade>().map_err(|e| anyhow!(e))).collect()
}

fn report_findings(findings: &[testrisk_core::Finding]) {
    let mut stderr = std::io::stderr().lock();
    for f in findings {
        let _ = writeln!(stderr, "{f}");
    }
}

fn estimate(args: EstimateArgs) -> anyhow::Result<String> {
    let range_factors = match (args.range_low, args.range_high) {
        (Some(low), Some(high)) => Some(testrisk_core::RangeFactors { low, high }),
        (Some(_), None) => bail!("--range-low needs --range-high"),
        _ => None,
    };
    let request = EstimateRequest {
        loc: args.loc,
        loc_per_fp: args.loc_per_fp,
        complexity_adjustment: args.complexity,
        function_points: args.fp,
        defects_per_fp: args.defects_per_fp,
        defects_per_kloc: args.defects_per_kloc,
        adjustment: args.adjust,
        range_factors,
    };
    let prediction = request.evaluate().map_err(|e| anyhow!(e))?;
    let format = if args.json { Format::Json } else { Format::Markdown };
    Ok(testrisk_core::io::render_prediction(&prediction, format))
}

fn matrix(args: MatrixArgs) -> anyhow::Result<(String, bool)> {
    let mut doc = load_document(&args.config)?;
    doc.options.strict_validation |= args.strict;
    let plan = doc.to_plan::<f64>().map_err(plan_error)?;
    let matrix = plan.matrix().map_err(planning_error)?;
    report_findings(&matrix.findings);
    let out = testrisk_core::io::render_matrix(&matrix, &plan.scope, args.output.format());
    Ok((out, matrix.has_errors()))
}

fn scope(args: ScopeArgs) -> anyhow::Result<String> {
    let doc = load_document(&args.config)?;
    let mut scope = doc.scope_matrix.clone();
    let activity = match &args.add_activity {
        Some(spec) => {
            let (name, grades) = spec.split_once('=').context("--add-activity expects Name=grade,grade,...")?;
            Some(ActivityRow { name: name.trim().to_string(), grades: parse_grades(grades)? })
        }
        None => None,
    };
    let level = match &args.add_level {
        Some(spec) => {
            let (head, grades) = spec.split_once('=').context("--add-level expects Label@position=grade,...")?;
            let (label, position) = head.split_once('@').context("--add-level expects Label@position=grade,...")?;
            let position: usize = position.trim().parse().context("--add-level position")?;
            Some((label.trim().to_string(), position, parse_grades(grades)?))
        }
        None => None,
    };
    if activity.is_some() || level.is_some() {
        scope = scope.extend(activity, level).map_err(|e| invalid(e.to_string()))?;
    }
    Ok(render_scope(&scope, args.output.format()))
}

fn whatif(args: WhatifArgs) -> anyhow::Result<(String, bool)> {
    let doc = load_document(&args.config)?;
    let base = doc.to_plan::<f64>().map_err(plan_error)?;
    let mut scenario = Scenario::new(args.name);
    for raw in &args.overrides {
        let (path, value) = raw.split_once('=').with_context(|| format!("--set expects path=value, got '{raw}'"))?;
        scenario = scenario.set(path.trim(), OverrideValue::parse_text(value));
    }
    let result = apply_scenario(&base, &scenario).map_err(planning_error)?;
    report_findings(&result.matrix.findings);
    Ok((testrisk_core::io::render_scenario(&result, args.output.format()), result.matrix.has_errors()))
}

fn calibrate(command: CalibrateCommand) -> anyhow::Result<String> {
    match command {
        CalibrateCommand::Dre { history, phase, output } => {
            let histories = load_history_csv(&read_input(&history)?)?;
            let mut profiles = Vec::with_capacity(histories.len());
            for h in &histories {
                let mut profile: DreProfile<f64> = dre_profile(h).map_err(|e| invalid(e.to_string()))?;
                if let Some(name) = &phase {
                    if !h.phases.iter().any(|p| &p.phase_name == name) {
                        return Err(invalid(format!("phase '{name}' not found in release '{}'", h.release_name)));
                    }
                    profile.phases.retain(|p| &p.phase == name);
                    profile.notes.retain(|n| n.starts_with(&format!("{name}:")));
                }
                profiles.push(profile);
            }
            if output.format() != Format::Markdown {
                for p in &profiles {
                    p.notes.iter().for_each(|n| eprintln!("note: {}: {n}", p.release));
                }
            }
            Ok(render_profile(&profiles, output.format()))
        }
        CalibrateCommand::Density { history, sizes, phase, weighting, output } => {
            let mut histories = load_history_csv(&read_input(&history)?)?;
            let sizes = load_sizes_csv(&read_input(&sizes)?)?;
            attach_sizes(&mut histories, &sizes);
            let weighting = match weighting {
                WeightingArg::Unweighted => Weighting::Unweighted,
                WeightingArg::SizeWeighted => Weighting::SizeWeighted,
            };
            let calibration =
                calibrate_density(&histories, phase.as_deref(), weighting).map_err(|e| invalid(e.to_string()))?;
            if output.format() != Format::Markdown {
                calibration.notes.iter().for_each(|n| eprintln!("note: {n}"));
            }
            Ok(render_density(&calibration, output.format()))
        }
    }
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    if let Some(dir) = &args.static_dir {
        if !dir.is_dir() {
            bail!("--static-dir {} is not a directory", dir.display());
        }
    }
    let config = testrisk_service::ServeConfig {
        addr: SocketAddr::new(args.host, args.port),
        session_ttl: args.session_ttl,
        static_dir: args.static_dir,
    };
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(testrisk_service::serve(config)).context("service failed")
}

/// Output plus whether error-level findings were raised.
fn run(cli: Cli) -> anyhow::Result<(String, bool)> {
    match cli.command {
        Command::Estimate(args) => Ok((estimate(args)?, false)),
        Command::Matrix(args) => matrix(args),
        Command::Scope(args) => Ok((scope(args)?, false)),
        Command::Whatif(args) => whatif(args),
        Command::Calibrate(command) => Ok((calibrate(command)?, false)),
        Command::Serve(args) => serve(args).map(|()| (String::new(), false)),
        Command::Defaults => Ok((wire::defaults_json(), false)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, has_errors)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            if has_errors {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationFailure>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
