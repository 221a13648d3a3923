use contagion::convergence::{compare_full_reduced, loss_distance, run_scaling_study};
use contagion::mean_field::MFConfig;
use contagion::network::LiabilityNetwork;
use contagion::scenarios;
use proptest::prelude::*;

fn ramp(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|k| (k as f64 * dt).min(0.5)).collect()
}

#[test]
fn identical_paths_are_at_distance_zero() {
    let a = ramp(50, 0.02);
    assert_eq!(loss_distance(&a, &a, 0.02, None).unwrap(), 0.0);
}

#[test]
fn constant_offset_costs_exactly_the_offset() {
    let b = ramp(40, 0.01);
    let a: Vec<f64> = b.iter().map(|x| x + 0.07).collect();
    let d = loss_distance(&a, &b, 0.01, None).unwrap();
    assert!((d - 0.07).abs() < 1e-15, "{d}");
}

#[test]
fn unit_jump_one_step_late_costs_at_most_dt() {
    let dt = 1e-3;
    let a: Vec<f64> = (0..100).map(|k| if k >= 40 { 1.0 } else { 0.0 }).collect();
    let b: Vec<f64> = (0..100).map(|k| if k >= 41 { 1.0 } else { 0.0 }).collect();
    let d = loss_distance(&a, &b, dt, None).unwrap();
    assert!(d <= dt + 1e-15, "{d}");
    assert!(d > 0.0);
}

#[test]
fn mismatched_grids_are_rejected() {
    assert!(loss_distance(&[0.0, 1.0], &[0.0, 1.0, 1.0], 0.1, None).is_err());
    assert!(loss_distance(&[], &[], 0.1, None).is_err());
    assert!(loss_distance(&[0.0], &[0.0], 0.0, None).is_err());
}

fn path_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..0.2, len).prop_map(|steps| {
        let mut acc = 0.0;
        steps.into_iter().map(|s| { acc += s; acc }).collect()
    })
}

fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..25).prop_flat_map(|n| (path_strategy(n), path_strategy(n), path_strategy(n)))
}

proptest! {
    #[test]
    fn distance_is_symmetric((a, b, _) in triple(), dt in 1e-3f64..0.1) {
        let ab = loss_distance(&a, &b, dt, None).unwrap();
        let ba = loss_distance(&b, &a, dt, None).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-15);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn distance_obeys_triangle_inequality((a, b, c) in triple(), dt in 1e-3f64..0.1) {
        let ac = loss_distance(&a, &c, dt, None).unwrap();
        let ab = loss_distance(&a, &b, dt, None).unwrap();
        let bc = loss_distance(&b, &c, dt, None).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12, "{} > {} + {}", ac, ab, bc);
    }
}

#[test]
fn reduced_network_against_itself_agrees_exactly() {
    let mut cfg = scenarios::full_vs_reduced_config();
    cfg.full = cfg.reduced.clone();
    cfg.runs = 8;
    cfg.dt = 1.0 / 500.0;
    let report = compare_full_reduced(&cfg).unwrap();
    assert_eq!(report.median_norm_diff, 0.0);
    assert_eq!(report.agreement_rate, 1.0);
    for row in &report.rows {
        assert_eq!(row.full_default_times, row.reduced_default_times);
    }
}

#[test]
fn negligible_perturbation_leaves_default_times_unchanged() {
    let mut cfg = scenarios::full_vs_reduced_config();
    let n = cfg.reduced.n();
    let rows: Vec<Vec<f64>> = cfg
        .reduced
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter().enumerate().map(|(j, x)| if i != j && x == 0.0 { 1e-10 } else { x }).collect()
        })
        .collect();
    cfg.full = LiabilityNetwork::from_rows(&rows, cfg.reduced.societal().to_vec(), cfg.reduced.horizon()).unwrap();
    assert_eq!(cfg.full.n(), n);
    cfg.runs = 8;
    cfg.dt = 1.0 / 500.0;
    let report = compare_full_reduced(&cfg).unwrap();
    assert_eq!(report.agreement_rate, 1.0);
    assert!(report.rows.iter().any(|r| r.both_defaulted > 0), "no defaults to compare");
    for row in &report.rows {
        assert!(row.norm_diff <= 1e-12, "run {}: {}", row.run, row.norm_diff);
    }
}

#[test]
fn comparison_is_deterministic_in_its_seeds() {
    let mut cfg = scenarios::full_vs_reduced_config();
    cfg.runs = 4;
    cfg.dt = 1.0 / 500.0;
    let a = compare_full_reduced(&cfg).unwrap();
    let b = compare_full_reduced(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    cfg.seed = 1;
    let c = compare_full_reduced(&cfg).unwrap();
    assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
}

#[test]
fn mismatched_networks_are_rejected() {
    let mut cfg = scenarios::full_vs_reduced_config();
    cfg.full = scenarios::three_bank();
    assert!(compare_full_reduced(&cfg).is_err());
}

#[test]
fn small_scaling_study_is_well_formed() {
    let mut cfg = scenarios::feedback_free_study();
    cfg.m_list = vec![2, 8];
    cfg.runs = 3;
    cfg.mf = MFConfig { dx: 0.02, ..MFConfig::default() };
    let study = run_scaling_study(&cfg).unwrap();
    assert_eq!(study.rows.len(), 6);
    assert_eq!(study.summary.len(), 2);
    assert_eq!(study.mf_jumps, 0);
    assert_eq!(study.mf_losses.len(), 1);
    assert_eq!(study.times.len(), study.mf_losses[0].len());
    for row in &study.rows {
        assert!(row.distances.iter().all(|d| (0.0..=1.0 + 1e-12).contains(d)), "{row:?}");
    }
    assert!(study.slope.is_some());
    // The same config reruns to identical numbers.
    let again = run_scaling_study(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&study.rows).unwrap(), serde_json::to_string(&again.rows).unwrap());
}
