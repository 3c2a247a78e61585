//! Cross-module properties of full closed-loop runs on the reference tuning.

mod common;

use common::{peak_error_in, reference_config};
use platoon::comms::ChannelParams;
use platoon::control::spacing_error;
use platoon::dynamics::VehicleState;
use platoon::scenario::{metrics, run, ScenarioConfig};

#[test]
fn halving_dt_shifts_positions_and_velocities_below_tolerance() {
    let coarse = run(&reference_config()).unwrap();
    let mut config = reference_config();
    config.dt = 0.005;
    let fine = run(&config).unwrap();
    // dt/2 keeps the shared time grid bitwise (0.005 doubles to 0.01 exactly),
    // so coarse row j lines up with fine row 2j.
    let mut worst_p = 0.0f64;
    let mut worst_v = 0.0f64;
    for (j, &t) in coarse.times.iter().enumerate() {
        assert_eq!(t, fine.times[2 * j]);
        for i in 0..coarse.vehicles.len() {
            worst_p = worst_p.max((coarse.vehicles[i].p[j] - fine.vehicles[i].p[2 * j]).abs());
            worst_v = worst_v.max((coarse.vehicles[i].v[j] - fine.vehicles[i].v[2 * j]).abs());
        }
    }
    assert!(worst_p < 1e-3, "position refinement drift {worst_p}");
    assert!(worst_v < 1e-3, "velocity refinement drift {worst_v}");
}

#[test]
fn logged_errors_match_recomputed_gaps() {
    let config = reference_config();
    let log = run(&config).unwrap();
    for j in 0..log.rows() {
        for i in 1..log.vehicles.len() {
            let own = VehicleState::new(
                log.vehicles[i].p[j],
                log.vehicles[i].v[j],
                log.vehicles[i].a[j],
            );
            let pred = VehicleState::new(
                log.vehicles[i - 1].p[j],
                log.vehicles[i - 1].v[j],
                log.vehicles[i - 1].a[j],
            );
            assert_eq!(
                log.vehicles[i].e[j],
                spacing_error(&config.spacing, &own, &pred)
            );
        }
    }
}

#[test]
fn late_cruise_contracts_errors() {
    // Between the disturbance dying out and the brake, every follower's error
    // envelope keeps shrinking.
    let log = run(&reference_config()).unwrap();
    for i in 1..=3 {
        let mid = peak_error_in(&log, i, 30.0, 35.0);
        let tail = peak_error_in(&log, i, 35.0, 40.0);
        assert!(tail < mid, "follower {i}: tail {tail} >= mid {mid}");
    }
}

#[test]
fn clamped_run_never_rolls_backward() {
    let log = run(&reference_config()).unwrap();
    for (i, trace) in log.vehicles.iter().enumerate() {
        assert!(trace.v.iter().all(|&v| v >= 0.0), "vehicle {i} reversed");
    }
    // The sustained brake parks the leader well before the horizon.
    assert_eq!(*log.vehicles[0].v.last().unwrap(), 0.0);
}

#[test]
fn lossy_channel_keeps_errors_bounded() {
    // Zero-order hold over dropped packets degrades tracking but must not
    // destabilize the reference tuning.
    let mut config = reference_config();
    config.channel = ChannelParams::new(0.05, 0.2, 7).unwrap();
    let log = run(&config).unwrap();
    for i in 1..=3 {
        let peak = peak_error_in(&log, i, 0.0, 60.01);
        assert!(peak.is_finite() && peak < 1.0, "follower {i} peak {peak}");
    }
}

#[test]
fn window_ratios_agree_with_directly_computed_peaks() {
    let config = reference_config();
    let log = run(&config).unwrap();
    let m = metrics(&log);
    let (lo, hi) = (config.leader.t_dist, config.leader.t_brake);
    for i in 1..=3 {
        assert_eq!(m.window_peaks[i - 1], peak_error_in(&log, i, lo, hi));
    }
    for k in 0..2 {
        assert_eq!(
            m.window_peak_ratios[k],
            m.window_peaks[k + 1] / m.window_peaks[k]
        );
    }
}

#[test]
fn f32_run_tracks_f64_coarsely() {
    let config64 = {
        let mut c = reference_config();
        c.t_end = 41.0;
        c
    };
    let config32 = ScenarioConfig::<f32> {
        n_followers: 3,
        r_max: 2,
        vehicle: platoon::dynamics::VehicleParams::new(0.9).unwrap(),
        spacing: platoon::control::SpacingPolicy::new(0.78, 0.6).unwrap(),
        gains: platoon::control::Gains::new(0.1, 0.61, 0.41).unwrap(),
        channel: ChannelParams::new(0.05, 0.0, 42).unwrap(),
        leader: platoon::scenario::LeaderProfile {
            a_step: 0.1,
            t_step: 5.0,
            t_cruise: 15.0,
            a_dist: 0.25,
            omega_0: std::f32::consts::PI,
            t_dist: 15.0,
            a_brake: -0.1,
            t_brake: 40.0,
        },
        dt: 0.01,
        t_end: 41.0,
        clamp: true,
    };
    let log64 = run(&config64);
    let log32 = run(&config32);
    let (log64, log32) = match (log64, log32) {
        (Ok(a), Ok(b)) => (a, b),
        other => panic!("runs failed: {other:?}"),
    };
    assert_eq!(log64.rows(), log32.rows());
    let mut worst = 0.0f64;
    for j in 0..log64.rows() {
        for i in 0..4 {
            worst = worst.max((log64.vehicles[i].v[j] - log32.vehicles[i].v[j] as f64).abs());
        }
    }
    // Single precision loses ~2e-2 m/s over 41 s of closed loop; this guards
    // the generic instantiation, not accuracy.
    assert!(worst < 5e-2, "f32 velocity drift {worst}");
}
