//! Randomized invariants of the reporting layer, config and controller pieces.

use fracstab::control::{filter_step, AdaptiveState};
use fracstab::experiments::{run_experiment, Experiment, ExperimentConfig};
use fracstab::report::{cumulative_trapezoid, settling_time, trapezoid, Table};
use fracstab::specfun::ml_decay;
use nalgebra::DVector;
use proptest::prelude::*;

proptest! {
    #[test]
    fn settling_time_is_a_grid_node_or_infinite(norms in prop::collection::vec(0.0f64..10.0, 1..60)) {
        let t: Vec<f64> = (0..norms.len()).map(|k| k as f64 * 0.1).collect();
        let ts = settling_time(&t, &norms, 0.1);
        if ts.is_finite() {
            let k = t.iter().position(|x| *x == ts).expect("on the grid");
            prop_assert!(norms[k..].iter().all(|v| *v <= 0.1 * norms[0]));
        } else {
            prop_assert!(*norms.last().unwrap() > 0.1 * norms[0]);
        }
    }

    #[test]
    fn trapezoid_agrees_with_its_running_sum(v in prop::collection::vec(-5.0f64..5.0, 2..80), h in 0.001f64..1.0) {
        let c = cumulative_trapezoid(h, &v);
        prop_assert!((c[v.len() - 1] - trapezoid(h, &v)).abs() <= 1e-9 * (1.0 + trapezoid(h, &v).abs()));
    }

    #[test]
    fn csv_roundtrips_values(cols in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 5), 1..5)) {
        let mut t = Table::new("p");
        for (i, c) in cols.iter().enumerate() {
            t = t.col(&format!("c{i}"), "1", c.clone());
        }
        let csv = t.to_csv().unwrap();
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        prop_assert_eq!(body.len(), 6);
        for (r, line) in body[1..].iter().enumerate() {
            let vals: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            let want: Vec<f64> = cols.iter().map(|c| c[r]).collect();
            prop_assert_eq!(vals, want);
        }
    }

    #[test]
    fn ml_decay_stays_in_unit_interval_and_falls(alpha in 0.3f64..1.0, t in 0.0f64..50.0, dt in 0.01f64..5.0) {
        let a = ml_decay(alpha, 1.0, t).unwrap();
        let b = ml_decay(alpha, 1.0, t + dt).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn filter_moves_toward_the_state(x in prop::collection::vec(-2.0f64..2.0, 3), xh in prop::collection::vec(-2.0f64..2.0, 3), t_f in 0.01f64..1.0, h in 0.001f64..0.1) {
        let x = DVector::from_vec(x);
        let s = AdaptiveState {
            theta_f_hat: DVector::zeros(9),
            theta_g_hat: DVector::zeros(9),
            x_hat: DVector::from_vec(xh),
            tau_hat: 0.0,
        };
        let next = filter_step(&s, &x, t_f, h, &|v| v.norm());
        prop_assert!((&next.x_hat - &x).norm() <= (&s.x_hat - &x).norm() + 1e-15);
        prop_assert!((next.tau_hat - next.x_hat.norm()).abs() < 1e-15);
        prop_assert_eq!(next.theta_f_hat, s.theta_f_hat);
    }
}

#[test]
fn config_roundtrips_through_toml() {
    let cfg = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn identical_config_writes_identical_bytes() {
    let cfg = ExperimentConfig::default();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for e in [Experiment::MlCurves, Experiment::Adaptive] {
        let ma = run_experiment(e, &cfg, a.path()).unwrap();
        run_experiment(e, &cfg, b.path()).unwrap();
        assert!(ma.passed(), "{:?}", ma.failures().collect::<Vec<_>>());
        for rel in &ma.outputs {
            let (pa, pb) = (a.path().join(e.name()).join(rel), b.path().join(e.name()).join(rel));
            assert!(std::fs::read(pa).unwrap() == std::fs::read(pb).unwrap(), "{} differs", rel.display());
        }
    }
}

#[test]
fn sensitivity_writes_a_directory_per_point() {
    let cfg = ExperimentConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(Experiment::SensitivityAlpha, &cfg, dir.path()).unwrap();
    assert!(m.passed());
    for a in &cfg.sweep.alphas {
        assert!(dir.path().join("sensitivity_alpha").join(format!("alpha_{a:.2}")).is_dir());
    }
}

#[test]
fn shipped_config_matches_defaults() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    assert_eq!(ExperimentConfig::load(&path).unwrap(), ExperimentConfig::default());
}
