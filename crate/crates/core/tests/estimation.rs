use proptest::prelude::*;
use testrisk_core::estimation::{
    backfire_function_points, predict_defects_from_fp, predict_defects_from_loc, DensityParams, RangeFactors,
    SizeEstimate,
};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn worked_example() {
    let fp = backfire_function_points(&SizeEstimate::new(100_000.0_f64, 125.0)).unwrap();
    assert_eq!(fp, 800.0);
    let p = predict_defects_from_fp(fp, &DensityParams::default(), &RangeFactors::default()).unwrap();
    assert_eq!((p.low, p.nominal, p.high), (650.0, 800.0, 1400.0));
    let p = predict_defects_from_loc(100_000.0_f64, &DensityParams::default(), &RangeFactors::default()).unwrap();
    assert_eq!(p.nominal, 800.0);
}

proptest! {
    #[test]
    fn backfire_is_linear_in_size(loc in 0.0..1e7f64, gearing in 1.0..500.0f64, k in 0.01..100.0f64) {
        let base = backfire_function_points(&SizeEstimate::new(loc, gearing)).unwrap();
        let scaled = backfire_function_points(&SizeEstimate::new(loc * k, gearing)).unwrap();
        prop_assert!(close(scaled, base * k, 1e-12));
    }

    #[test]
    fn backfire_scales_with_complexity(loc in 0.0..1e7f64, gearing in 1.0..500.0f64, adj in 0.1..3.0f64) {
        let plain = backfire_function_points(&SizeEstimate::new(loc, gearing)).unwrap();
        let adjusted = backfire_function_points(&SizeEstimate::new(loc, gearing).with_complexity(adj)).unwrap();
        prop_assert!(close(adjusted, plain * adj, 1e-12));
    }

    #[test]
    fn prediction_monotone_in_size(a in 0.0..1e6f64, b in 0.0..1e6f64, per_kloc in 0.0..50.0f64) {
        let params = DensityParams { defects_per_fp: 0.0, defects_per_kloc: per_kloc, adjustment: 1.0 };
        let range = RangeFactors::default();
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let ps = predict_defects_from_loc(small, &params, &range).unwrap();
        let pl = predict_defects_from_loc(large, &params, &range).unwrap();
        prop_assert!(ps.nominal <= pl.nominal);
    }

    #[test]
    fn range_brackets_nominal(fp in 0.0..1e5f64, per_fp in 0.0..5.0f64, low in 0.0..=1.0f64, high in 1.0..4.0f64) {
        let params = DensityParams { defects_per_fp: per_fp, defects_per_kloc: 0.0, adjustment: 1.0 };
        let p = predict_defects_from_fp(fp, &params, &RangeFactors { low, high }).unwrap();
        prop_assert!(p.low <= p.nominal && p.nominal <= p.high);
    }

    /// A per-KLOC density equal to `1000 * per_fp / gearing` predicts the same
    /// count from LOC as the per-FP density does from backfired FP.
    #[test]
    fn fp_and_loc_routes_agree(loc in 0.0..1e7f64, gearing in 10.0..400.0f64, per_fp in 0.0..5.0f64) {
        let range = RangeFactors::default();
        let fp = backfire_function_points(&SizeEstimate::new(loc, gearing)).unwrap();
        let via_fp = predict_defects_from_fp(fp, &DensityParams { defects_per_fp: per_fp, defects_per_kloc: 0.0, adjustment: 1.0 }, &range).unwrap();
        let per_kloc = 1000.0 * per_fp / gearing;
        let via_loc = predict_defects_from_loc(loc, &DensityParams { defects_per_fp: 0.0, defects_per_kloc: per_kloc, adjustment: 1.0 }, &range).unwrap();
        prop_assert!(close(via_fp.nominal, via_loc.nominal, 1e-9));
    }

    #[test]
    fn f32_tracks_f64(loc in 1.0..1e6f64, gearing in 10.0..400.0f64) {
        let wide = backfire_function_points(&SizeEstimate::new(loc, gearing)).unwrap();
        let narrow = backfire_function_points(&SizeEstimate::new(loc as f32, gearing as f32)).unwrap();
        prop_assert!(close(f64::from(narrow), wide, 1e-5));
    }
}

#[test]
fn invalid_inputs_rejected() {
    for (loc, gearing) in [(-1.0, 125.0), (1.0, 0.0), (f64::NAN, 125.0), (1.0, f64::INFINITY)] {
        assert!(backfire_function_points(&SizeEstimate::new(loc, gearing)).is_err(), "{loc} {gearing}");
    }
    let bad_range = RangeFactors { low: 1.2, high: 1.75 };
    assert!(predict_defects_from_fp(10.0, &DensityParams::default(), &bad_range).is_err());
}
