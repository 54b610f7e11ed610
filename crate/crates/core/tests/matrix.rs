use proptest::prelude::*;
use testrisk_core::matrix::{
    assemble_risk_matrix, delivered_defects, example_level_plans, DisplayPolicy, MatrixOptions, RoundingMode,
};
use testrisk_core::{default_scope_matrix, DefectPrediction, Severity};

fn ladder_matrix(dres: &[f64]) -> testrisk_core::RiskMatrix {
    let mut plans = example_level_plans::<f64>();
    for (plan, dre) in plans.iter_mut().zip(dres) {
        plan.dre = *dre;
    }
    let predicted = DefectPrediction::direct(800.0, 650.0, 1400.0).unwrap();
    assemble_risk_matrix(plans, predicted, &default_scope_matrix(), &MatrixOptions::default()).unwrap()
}

fn sorted_ladder() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..0.99f64, 5).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #[test]
    fn delivered_within_predicted(p in 0.0..1e6f64, dre in 0.0..0.999f64) {
        let d = delivered_defects(p, dre, &DisplayPolicy::default()).unwrap();
        prop_assert!(d.exact >= 0.0 && d.exact <= p);
    }

    #[test]
    fn delivered_decreases_with_dre(p in 0.0..1e6f64, a in 0.0..0.999f64, b in 0.0..0.999f64) {
        let policy = DisplayPolicy::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let d_lo = delivered_defects(p, lo, &policy).unwrap();
        let d_hi = delivered_defects(p, hi, &policy).unwrap();
        prop_assert!(d_hi.exact <= d_lo.exact);
        prop_assert!(d_hi.display <= d_lo.display);
    }

    #[test]
    fn display_is_rounded_exact_unless_clamped(p in 0.0..1e5f64, dre in 0.0..0.999f64) {
        let d = delivered_defects(p, dre, &DisplayPolicy::default()).unwrap();
        if d.display == 1 && p >= 1.0 && d.exact < 0.5 {
            return Ok(());
        }
        prop_assert!((d.display as f64 - d.exact).abs() <= 0.5);
    }

    #[test]
    fn clamp_only_when_something_predicted(p in 0.0..1.0f64, dre in 0.0..0.999f64) {
        let d = delivered_defects(p, dre, &DisplayPolicy::default()).unwrap();
        prop_assert_eq!(d.display, (p * (1.0 - dre)).round() as i64);
    }

    #[test]
    fn ceiling_never_understates(p in 0.0..1e5f64, dre in 0.0..0.999f64) {
        let policy = DisplayPolicy { rounding: RoundingMode::Ceiling, never_zero_clamp: false };
        let d = delivered_defects(p, dre, &policy).unwrap();
        prop_assert!(d.display as f64 >= d.exact);
    }

    #[test]
    fn ordered_ladders_raise_no_findings(dres in sorted_ladder()) {
        let m = ladder_matrix(&dres);
        prop_assert!(m.findings.is_empty(), "{:?}", m.findings);
        let dd: Vec<i64> = m.rows.iter().map(|r| r.delivered_display).collect();
        prop_assert!(dd.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn one_drop_one_finding(dres in sorted_ladder(), at in 1usize..5, cut in 0.01..0.99f64) {
        let mut dres = dres;
        let floor = dres[at - 1];
        prop_assume!(floor > 0.02);
        let lowered = floor * cut;
        prop_assume!(at + 1 >= dres.len() || lowered <= dres[at + 1]);
        dres[at] = lowered;
        let m = ladder_matrix(&dres);
        prop_assert_eq!(m.findings.len(), 1, "{:?}", m.findings);
        let f = &m.findings[0];
        prop_assert_eq!(f.code.as_str(), "dre-non-monotone");
        prop_assert_eq!(f.severity, Severity::Warning);
        prop_assert_eq!(&f.location, &format!("levels.{}.dre", m.rows[at].plan.level.name));
    }
}

#[test]
fn out_of_range_dre_rejected() {
    for dre in [1.0, 1.5, -0.1, f64::NAN] {
        assert!(delivered_defects(800.0, dre, &DisplayPolicy::default()).is_err(), "{dre}");
    }
}
