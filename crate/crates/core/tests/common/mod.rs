//! Shared fixtures for the integration tests: the reference four-vehicle
//! configuration (tau 0.9, h 0.78, d 0.6, gains 0.1/0.61/0.41, delay 0.05,
//! two predecessors) and its leader maneuver.

use platoon::comms::ChannelParams;
use platoon::control::{Gains, SpacingPolicy};
use platoon::dynamics::VehicleParams;
use platoon::scenario::{LeaderProfile, ScenarioConfig, TrajectoryLog};
use std::f64::consts::PI;

pub fn reference_profile() -> LeaderProfile<f64> {
    LeaderProfile {
        a_step: 0.1,
        t_step: 5.0,
        t_cruise: 15.0,
        a_dist: 0.25,
        omega_0: PI,
        t_dist: 15.0,
        a_brake: -0.05,
        t_brake: 40.0,
    }
}

pub fn reference_config() -> ScenarioConfig<f64> {
    ScenarioConfig {
        n_followers: 3,
        r_max: 2,
        vehicle: VehicleParams::new(0.9).unwrap(),
        spacing: SpacingPolicy::new(0.78, 0.6).unwrap(),
        gains: Gains::new(0.1, 0.61, 0.41).unwrap(),
        channel: ChannelParams::new(0.05, 0.0, 42).unwrap(),
        leader: reference_profile(),
        dt: 0.01,
        t_end: 60.0,
        clamp: true,
    }
}

/// Peak |e| of follower `i` (1-based) over rows with `lo <= t < hi`.
pub fn peak_error_in(log: &TrajectoryLog<f64>, i: usize, lo: f64, hi: f64) -> f64 {
    log.times
        .iter()
        .zip(&log.vehicles[i].e)
        .filter(|(&t, _)| t >= lo && t < hi)
        .map(|(_, &e)| e.abs())
        .fold(0.0, f64::max)
}
