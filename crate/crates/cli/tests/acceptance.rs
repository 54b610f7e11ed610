//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request};
use http_body_util::BodyExt;
use num_rational::Ratio;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use testrisk_core::calibration::dre_of_phase;
use testrisk_core::estimation::{backfire_function_points, predict_defects_from_fp, DensityParams, RangeFactors};
use testrisk_core::io::render::parse_rendered_csv;
use testrisk_core::io::render_scope;
use testrisk_core::matrix::{assemble_risk_matrix, build_risk_matrix, delivered_defects, example_level_plans};
use testrisk_core::planning::{worst_case_scaling, ScalingProfile};
use testrisk_core::{
    default_scope_matrix, load_plan, save_plan, validate_matrix, wire, DefectPrediction, DisplayPolicy, Format, Grade,
    LevelPlan, MatrixOptions, PhaseRecord, PlanDocument, SizeEstimate, TestLevel,
};
use testrisk_service::{router, AppState};
use tower::ServiceExt;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

/// The worked example, typed in as literals rather than taken
/// from the library's defaults.
fn example_plans() -> Vec<LevelPlan> {
    let names = ["MINIMAL", "LOW", "MEDIUM", "HIGH", "EXTENSIVE"];
    let scope = ["A", "B", "C", "D", "E"];
    let intensity = ["LIGHT", "LIGHT", "MEDIUM", "STRONG", "STRONG"];
    let environment = ["Existing", "Existing", "Existing", "Enhanced", "Enhanced"];
    let staff = [2, 2, 4, 5, 5];
    let weeks = [3.0, 6.0, 8.0, 12.0, 16.0];
    let dre = [0.10, 0.30, 0.60, 0.85, 0.95];
    (0..5)
        .map(|i| LevelPlan {
            level: TestLevel::new(names[i], i),
            scope_label: scope[i].into(),
            intensity: intensity[i].into(),
            environment: environment[i].into(),
            staff: staff[i],
            calendar_weeks: weeks[i],
            dre: dre[i],
        })
        .collect()
}

fn risk_matrix_example() -> Outcome {
    let start = Instant::now();
    let predicted = DefectPrediction::direct(800.0, 650.0, 1400.0).map_err(|e| e.to_string())?;
    let matrix = build_risk_matrix(example_plans(), predicted, &default_scope_matrix(), &MatrixOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let staff_weeks: Vec<f64> = matrix.rows.iter().map(|r| r.staff_weeks).collect();
    let delivered: Vec<i64> = matrix.rows.iter().map(|r| r.delivered_display).collect();
    ensure(staff_weeks == [6.0, 12.0, 32.0, 60.0, 80.0], || format!("staff-weeks {staff_weeks:?}"))?;
    ensure(delivered == [720, 560, 320, 120, 40], || format!("delivered {delivered:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

fn scope_grid_example() -> Outcome {
    let expected: [(&str, [&str; 5]); 5] = [
        ("Sanity", ["Yes", "Yes", "Yes", "Yes", "Yes"]),
        ("Features", ["Subset", "Changed/New", "Most", "All", "All"]),
        ("Regression", ["No", "No", "Minimal", "Good", "Complete"]),
        ("Stress", ["No", "No", "No", "Good", "Complete"]),
        ("Load", ["No", "No", "Minimal", "Good", "Complete"]),
    ];
    let scope = default_scope_matrix();
    ensure(scope.levels() == ["A", "B", "C", "D", "E"], || format!("levels {:?}", scope.levels()))?;
    ensure(scope.activities().len() == expected.len(), || "activity count".into())?;
    for (row, (name, cells)) in scope.activities().iter().zip(expected) {
        ensure(row.name == name, || format!("row {} != {name}", row.name))?;
        let labels: Vec<&str> = row.grades.iter().map(|g| g.label()).collect();
        ensure(labels == cells, || format!("{name}: {labels:?}"))?;
    }
    let parsed = parse_rendered_csv(&render_scope(&scope, Format::Csv)).map_err(|e| e.to_string())?;
    ensure(parsed.scope.as_ref() == Some(&scope), || "CSV render/parse changed the grid".into())
}

fn backfiring() -> Outcome {
    let fp = backfire_function_points(&SizeEstimate::new(100_000.0, 125.0)).map_err(|e| e.to_string())?;
    ensure(fp == 800.0, || format!("fp {fp}"))?;
    let params = DensityParams { defects_per_fp: 1.0, defects_per_kloc: 0.0, adjustment: 1.0 };
    let range = RangeFactors { low: 0.8125, high: 1.75 };
    let p = predict_defects_from_fp(fp, &params, &range).map_err(|e| e.to_string())?;
    ensure((p.low, p.nominal, p.high) == (650.0, 800.0, 1400.0), || format!("{p:?}"))
}

fn effectiveness(found: u64, subsequent: u64) -> Result<f64, String> {
    let history = testrisk_core::ReleaseHistory::new(
        "r",
        vec![
            PhaseRecord::new("inspection", 0, 3),
            PhaseRecord::new("test", 1, found),
            PhaseRecord::new("field", 2, subsequent),
        ],
    );
    dre_of_phase(&history, "test").map(|d| d.effectiveness).map_err(|e| e.to_string())
}

fn dre_properties() -> Outcome {
    let config = Config { cases: 1000, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let pairs = (0u64..1_000_000, 0u64..1_000_000).prop_filter("found + later > 0", |(found, later)| found + later > 0);
    let mut checked = 0;
    while checked < 1000 {
        let (found, later) = pairs.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let eff = effectiveness(found, later)?;
        let exact = Ratio::new(found, found + later);
        let oracle = *exact.numer() as f64 / *exact.denom() as f64;
        ensure((eff - oracle).abs() <= 1e-15, || format!("eff({found},{later}) = {eff}, oracle {oracle}"))?;
        if found > 0 {
            ensure(effectiveness(found, 0)? == 1.0, || format!("eff({found},0) != 1"))?;
        }
        if later > 0 {
            ensure(effectiveness(0, later)? == 0.0, || format!("eff(0,{later}) != 0"))?;
            ensure(effectiveness(found + 1, later)? > eff, || format!("eff not increasing at ({found},{later})"))?;
        }
        for k in [2, 7, 1000] {
            let scaled = effectiveness(found * k, later * k)?;
            ensure((scaled - eff).abs() <= 1e-15, || format!("eff({found},{later}) changes under x{k}"))?;
        }
        checked += 1;
    }
    Ok(())
}

fn delivered_oracle() -> Outcome {
    let policy = DisplayPolicy::default();
    for step in 0..=20u32 {
        let predicted = f64::from(step * 50);
        for tenth in 0..20u32 {
            let dre = f64::from(tenth) * 0.05;
            let got = delivered_defects(predicted, dre, &policy).map_err(|e| e.to_string())?;
            let exact = predicted * (1.0 - dre);
            ensure((got.exact - exact).abs() <= 1e-12, || {
                format!("predicted={predicted} dre={dre}: {} vs {exact}", got.exact)
            })?;
            let rational = Ratio::new(u64::from(step * 50 * (20 - tenth)), 20);
            let rational = *rational.numer() as f64 / *rational.denom() as f64;
            ensure((got.exact - rational).abs() <= 1e-12, || {
                format!("predicted={predicted} dre={dre}: {} vs {rational}", got.exact)
            })?;
            // Round half away from zero on a non-negative value, then show at
            // least one defect whenever one or more were predicted.
            let mut display = (exact + 0.5).floor() as i64;
            if predicted >= 1.0 && display < 1 {
                display = 1;
            }
            ensure(got.display == display, || {
                format!("predicted={predicted} dre={dre}: display {} vs {display}", got.display)
            })?;
        }
    }
    Ok(())
}

fn validation_sensitivity() -> Outcome {
    let opts = MatrixOptions::default();
    let predicted = DefectPrediction::direct(800.0, 650.0, 1400.0).map_err(|e| e.to_string())?;
    let scope = default_scope_matrix();
    let build = |plans: Vec<LevelPlan>, scope: &testrisk_core::ScopeMatrix| {
        assemble_risk_matrix(plans, predicted, scope, &opts).map_err(|e| e.to_string())
    };
    let clean = build(example_plans(), &scope)?;
    let findings = validate_matrix(&clean, &scope, &opts);
    ensure(findings.is_empty(), || format!("default tables: {findings:?}"))?;

    let dre_cases = [("LOW", 0.05), ("MEDIUM", 0.20), ("HIGH", 0.50), ("EXTENSIVE", 0.80)];
    for (level, dre) in dre_cases {
        let mut plans = example_plans();
        plans.iter_mut().find(|p| p.level.name == level).unwrap().dre = dre;
        let matrix = build(plans, &scope)?;
        let findings = validate_matrix(&matrix, &scope, &opts);
        let want = format!("levels.{level}.dre");
        ensure(findings.len() == 1 && findings[0].location == want, || format!("DRE {level}={dre}: {findings:?}"))?;
    }

    use Grade::*;
    let grade_cases = [
        ("Features", "C", Subset),
        ("Features", "E", Most),
        ("Regression", "D", No),
        ("Stress", "E", No),
        ("Load", "D", No),
        ("Sanity", "C", No),
    ];
    for (activity, level, grade) in grade_cases {
        let injected = scope.with_grade(activity, level, grade).map_err(|e| e.to_string())?;
        let matrix = build(example_plans(), &injected)?;
        let findings = validate_matrix(&matrix, &injected, &opts);
        let want = format!("scope.{activity}.{level}");
        ensure(findings.len() == 1 && findings[0].location == want, || {
            format!("{activity}.{level}={grade}: {findings:?}")
        })?;
    }
    Ok(())
}

async fn api(method: Method, uri: &str, body: String) -> Result<String, String> {
    let app = router(AppState::default(), None);
    let request = Request::builder().method(method).uri(uri).body(Body::from(body)).map_err(|e| e.to_string())?;
    let response = app.oneshot(request).await.map_err(|e| e.to_string())?;
    let status = response.status();
    let bytes = response.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    let text = String::from_utf8(bytes.to_vec()).map_err(|e| e.to_string())?;
    ensure(status.is_success(), || format!("{uri}: {status} {text}"))?;
    Ok(text)
}

fn cli(args: &[&str], stdin: Option<&str>) -> Result<String, String> {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_testrisk"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or_default().as_bytes()).map_err(|e| e.to_string())?;
    drop(pipe);
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {} {}", out.status, String::from_utf8_lossy(&out.stderr)))?;
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn round_trip_and_canonical_form() -> Outcome {
    let doc = PlanDocument::worked_example();
    let first = save_plan(&doc);
    let second = save_plan(&doc);
    ensure(first == second, || "two saves differ".into())?;
    let reloaded = load_plan(first.as_bytes()).map_err(|e| e.to_string())?;
    ensure(reloaded == doc, || "load(save(doc)) != doc".into())?;
    ensure(save_plan(&reloaded) == first, || "save(load(save(doc))) != save(doc)".into())?;

    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;

    let via_cli = cli(&["matrix", "--config", "-", "--json"], Some(&first))?;
    let via_api = runtime.block_on(api(Method::POST, "/api/matrix", first.clone()))?;
    ensure(via_cli == via_api, || "matrix: CLI and API bodies differ".into())?;

    let via_cli = cli(&["defaults"], None)?;
    let via_api = runtime.block_on(api(Method::GET, "/api/defaults", String::new()))?;
    ensure(via_cli == via_api && via_cli == wire::defaults_json(), || "defaults: CLI and API differ".into())?;

    let via_cli =
        cli(&["estimate", "--loc", "100000", "--loc-per-fp", "125", "--defects-per-fp", "1.0", "--json"], None)?;
    let request = r#"{"loc":100000,"loc_per_fp":125,"defects_per_fp":1.0}"#.to_string();
    let via_api = runtime.block_on(api(Method::POST, "/api/estimate", request))?;
    ensure(via_cli == via_api, || "estimate: CLI and API bodies differ".into())
}

fn worst_case_scaling_example() -> Outcome {
    let template = example_level_plans::<f64>();
    let worst = example_plans().pop().unwrap();
    let scaled = worst_case_scaling(&worst, &template, &ScalingProfile::default()).map_err(|e| e.to_string())?;
    let staff_weeks: Vec<f64> = scaled.iter().map(|p| p.staff_weeks()).collect();
    ensure(staff_weeks == [6.0, 12.0, 32.0, 60.0, 80.0], || format!("staff-weeks {staff_weeks:?}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("risk matrix example reproduced exactly", risk_matrix_example),
        ("scope grid reproduced and round-trips", scope_grid_example),
        ("backfiring worked example", backfiring),
        ("DRE formula properties over 1000 pairs", dre_properties),
        ("delivered defects match brute-force oracle", delivered_oracle),
        ("validation sensitivity (0 + 10 injected)", validation_sensitivity),
        ("round trip, canonical form, CLI == API", round_trip_and_canonical_form),
        ("worst-case scaling reproduces staff-weeks", worst_case_scaling_example),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(()) => println!("PASS  {name}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
