use proptest::prelude::*;
use scarid_core::detect::{boxplot_summary, flag_scars, run_pipeline, PipelineConfig};
use scarid_core::dynamics::TimeGrid;
use scarid_core::hilbert::{BitString, Boundary};
use scarid_core::idest::default_t2_values;
use scarid_core::sampling::ReadoutChannel;

fn labelled(values: &[f64]) -> Vec<(String, f64)> {
    values.iter().enumerate().map(|(i, &v)| (format!("s{i}"), v)).collect()
}

proptest! {
    #[test]
    fn boxplot_fences_and_fliers(values in prop::collection::vec(-50.0f64..50.0, 4..80)) {
        let b = boxplot_summary(&labelled(&values)).unwrap();
        prop_assert!(b.q1 <= b.median && b.median <= b.q3);
        prop_assert!((b.low_fence - (b.q1 - 1.5 * b.iqr)).abs() < 1e-12);
        prop_assert!((b.high_fence - (b.q3 + 1.5 * b.iqr)).abs() < 1e-12);
        prop_assert!(b.low_fence <= b.whisker_low && b.whisker_high <= b.high_fence);
        for v in &values {
            let outside = *v < b.low_fence || *v > b.high_fence;
            prop_assert_eq!(outside, b.fliers.iter().any(|f| f.1 == *v));
        }
        for label in flag_scars(&b) {
            let v = b.fliers.iter().find(|f| f.0 == label).unwrap().1;
            prop_assert!(v < b.whisker_low && v < b.median);
        }
    }

    #[test]
    fn raising_a_value_never_flags_it(values in prop::collection::vec(0.0f64..10.0, 8..40), bump in 0.0f64..100.0) {
        let mut v = values.clone();
        v[0] = 10.0 + bump;
        let b = boxplot_summary(&labelled(&v)).unwrap();
        prop_assert!(!flag_scars(&b).contains(&"s0".to_string()));
    }
}

#[test]
fn planted_low_values_are_flagged() {
    let mut values: Vec<f64> = (0..40).map(|i| 2.2 + 0.01 * (i % 7) as f64).collect();
    values[3] = 1.2;
    values[17] = 1.25;
    let b = boxplot_summary(&labelled(&values)).unwrap();
    assert_eq!(flag_scars(&b), vec!["s3".to_string(), "s17".to_string()]);
}

fn small_config(seed: u64) -> PipelineConfig {
    PipelineConfig {
        length: 8,
        boundary: Boundary::Periodic,
        times: TimeGrid { start: 0.0, end: 10.0, steps: 10 },
        shots: 100,
        seed,
        t2_values: default_t2_values(8),
        ..PipelineConfig::default()
    }
}

#[test]
fn pipeline_is_deterministic() {
    let a = run_pipeline(small_config(4)).unwrap();
    let b = run_pipeline(small_config(4)).unwrap();
    assert_eq!(a, b);
    let c = run_pipeline(small_config(5)).unwrap();
    assert_ne!(a.outcomes, c.outcomes);
}

#[test]
fn pipeline_reports_every_state() {
    let r = run_pipeline(small_config(0)).unwrap();
    assert_eq!(r.outcomes.len(), 47);
    assert!(r.outcomes.windows(2).all(|w| w[0].basis_index < w[1].basis_index));
    let estimated = r.outcomes.iter().filter(|o| o.d_hat().is_some()).count();
    assert_eq!(estimated + r.failures.iter().filter(|f| f.0 != "<boxplot>").count(), 47);
    for w in &r.weak_candidates {
        assert!(!r.scar_candidates.contains(w));
    }
}

#[test]
fn selected_states_only() {
    let states = vec![BitString::z2(8), BitString::ground(8), BitString::z2_prime(8), BitString::z3(8)];
    let cfg = PipelineConfig { initial_states: Some(states.clone()), ..small_config(1) };
    let r = run_pipeline(cfg).unwrap();
    assert_eq!(r.outcomes.len(), 4);
    for s in &states {
        assert!(r.outcomes.iter().any(|o| o.state == *s));
    }
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(run_pipeline(PipelineConfig { shots: 0, ..small_config(0) }).is_err());
    let bad = PipelineConfig { initial_states: Some(vec![BitString::new(0b11, 8).unwrap()]), ..small_config(0) };
    assert!(run_pipeline(bad).is_err());
    assert!(ReadoutChannel::symmetric(0.7).is_err());
}
