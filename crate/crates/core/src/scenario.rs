//! Leader maneuver profile, platoon assembly, the closed-loop delayed run, and
//! spacing-error metrics.
//!
//! A run is a fixed-step loop with three synchronous phases per step: every vehicle
//! publishes its state, every controller samples its delayed snapshot and computes its
//! input, then all vehicles integrate simultaneously. A controller at time `t`
//! therefore acts on exactly the `t - delta` states, matching the delay-differential
//! model the stability analysis assumes.

use std::f64::consts::PI;

use crate::comms::{ChannelParams, ChannelSet};
use crate::control::{mpf_control, spacing_error, Gains, SpacingPolicy};
use crate::dynamics::{step_vehicle, VehicleParams, VehicleState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stability::PlatoonParams;

/// Open-loop input profile of the lead vehicle: accelerate, cruise, take a half-sine
/// disturbance dip, brake to a stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderProfile<T> {
    /// Step acceleration applied on `[t_step, t_cruise)`, m/s^2.
    pub a_step: T,
    pub t_step: T,
    /// End of the acceleration phase; `t_cruise = t_brake` keeps the step active
    /// until braking, lower values insert a zero-input cruise.
    pub t_cruise: T,
    /// Disturbance amplitude, m/s^2.
    pub a_dist: T,
    /// Disturbance frequency, rad/s; the dip lasts half a cycle.
    pub omega_0: T,
    pub t_dist: T,
    /// Braking input from `t_brake` on; non-positive. The velocity floor stops the
    /// vehicle from reversing.
    pub a_brake: T,
    pub t_brake: T,
}

impl<T: Scalar> LeaderProfile<T> {
    /// A profile that never commands anything; the platoon stays at rest.
    pub fn quiescent() -> Self {
        Self {
            a_step: T::zero(),
            t_step: T::one(),
            t_cruise: T::lit(3.0),
            a_dist: T::zero(),
            omega_0: T::lit(PI),
            t_dist: T::lit(2.0),
            a_brake: T::zero(),
            t_brake: T::lit(3.0),
        }
    }

    /// End of the disturbance half-cycle.
    pub fn t_dist_end(&self) -> T {
        self.t_dist + T::lit(PI) / self.omega_0
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let finite = [
            self.a_step,
            self.t_step,
            self.t_cruise,
            self.a_dist,
            self.omega_0,
            self.t_dist,
            self.a_brake,
            self.t_brake,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            v.push("leader profile fields must all be finite".into());
            return v;
        }
        if !(self.t_step < self.t_dist && self.t_dist < self.t_brake) {
            v.push(format!(
                "leader times must satisfy t_step < t_dist < t_brake, got {} / {} / {}",
                self.t_step, self.t_dist, self.t_brake
            ));
        }
        if !(self.t_step <= self.t_cruise && self.t_cruise <= self.t_brake) {
            v.push(format!(
                "t_cruise must lie in [t_step, t_brake], got {}",
                self.t_cruise
            ));
        }
        if self.omega_0 <= T::zero() {
            v.push(format!(
                "disturbance frequency omega_0 must be positive, got {}",
                self.omega_0
            ));
        }
        if self.a_brake > T::zero() {
            v.push(format!(
                "braking input a_brake must be <= 0, got {}",
                self.a_brake
            ));
        }
        v
    }
}

/// Leader input at time `t`.
///
/// Zero before `t_step`; `a_step` on `[t_step, t_cruise)`; during the half-cycle
/// `[t_dist, t_dist + pi/omega_0)` the dip `a_dist * sin(omega_0*(t - t_dist) + pi)`
/// is added on top of whatever the step contributes; `a_brake` from `t_brake` on,
/// overriding everything else.
pub fn leader_input<T: Scalar>(profile: &LeaderProfile<T>, t: T) -> T {
    debug_assert!(t >= T::zero());
    if t >= profile.t_brake {
        return profile.a_brake;
    }
    let mut u = if t >= profile.t_step && t < profile.t_cruise {
        profile.a_step
    } else {
        T::zero()
    };
    if t >= profile.t_dist && t < profile.t_dist_end() {
        let phase = profile.omega_0 * (t - profile.t_dist) + T::lit(PI);
        u = u + profile.a_dist * phase.sin();
    }
    u
}

/// Complete description of one closed-loop platoon run.
///
/// The master random seed lives in `channel` (packet loss is the only consumer of
/// randomness); two configs that compare equal produce identical runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig<T> {
    /// Vehicles behind the leader; zero is a valid (leader-only) platoon.
    pub n_followers: usize,
    /// Most predecessors any follower tracks; follower `i` tracks `min(i, r_max)`.
    pub r_max: usize,
    pub vehicle: VehicleParams<T>,
    pub spacing: SpacingPolicy<T>,
    pub gains: Gains<T>,
    pub channel: ChannelParams<T>,
    pub leader: LeaderProfile<T>,
    pub dt: T,
    pub t_end: T,
    /// Apply the velocity floor to every vehicle.
    pub clamp: bool,
}

/// Relative tolerance for "divides the step size" checks: absorbs decimal-literal
/// rounding without accepting genuinely misaligned grids. The epsilon term keeps the
/// check meaningful in f32, where decimal literals land farther off the grid.
fn grid_tol<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

impl<T: Scalar> ScenarioConfig<T> {
    /// Validates every field, reporting all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut v: Vec<String> = Vec::new();
        if self.r_max == 0 {
            v.push("predecessor count r_max must be >= 1".into());
        }
        if !(self.vehicle.tau.is_finite() && self.vehicle.tau > T::zero()) {
            v.push(format!(
                "vehicle lag tau must be finite and positive, got {}",
                self.vehicle.tau
            ));
        }
        if !(self.vehicle.v_min.is_finite() && self.vehicle.v_min <= T::zero()) {
            v.push(format!(
                "velocity floor v_min must be finite and <= 0, got {}",
                self.vehicle.v_min
            ));
        }
        if !(self.spacing.h.is_finite() && self.spacing.h >= T::zero()) {
            v.push(format!(
                "time headway h must be finite and >= 0, got {}",
                self.spacing.h
            ));
        }
        if !(self.spacing.d.is_finite() && self.spacing.d > T::zero()) {
            v.push(format!(
                "standstill distance d must be finite and positive, got {}",
                self.spacing.d
            ));
        }
        if !(self.gains.kp.is_finite() && self.gains.kv.is_finite() && self.gains.ka.is_finite()) {
            v.push("gains must be finite".into());
        }
        if !(self.channel.delta.is_finite() && self.channel.delta >= T::zero()) {
            v.push(format!(
                "channel delay must be finite and >= 0, got {}",
                self.channel.delta
            ));
        }
        if !(0.0..=1.0).contains(&self.channel.loss_prob) {
            v.push(format!(
                "loss probability must lie in [0, 1], got {}",
                self.channel.loss_prob
            ));
        }
        let dt_ok = self.dt.is_finite() && self.dt > T::zero();
        if !dt_ok {
            v.push(format!(
                "step size dt must be finite and positive, got {}",
                self.dt
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > T::zero()) {
            v.push(format!(
                "t_end must be finite and positive, got {}",
                self.t_end
            ));
        }
        if dt_ok {
            if self.channel.delta.is_finite()
                && self.channel.delta >= T::zero()
                && !divides(self.channel.delta, self.dt)
            {
                v.push(format!(
                    "channel delay {} must be a whole number of {}-second steps",
                    self.channel.delta, self.dt
                ));
            }
            if self.t_end.is_finite() && self.t_end > T::zero() && !divides(self.t_end, self.dt) {
                v.push(format!(
                    "t_end {} must be a whole number of {}-second steps",
                    self.t_end, self.dt
                ));
            }
        }
        v.extend(self.leader.violations());
        if self.t_end.is_finite()
            && self.leader.t_brake.is_finite()
            && self.t_end <= self.leader.t_brake
        {
            v.push(format!(
                "t_end {} must exceed the braking time {}",
                self.t_end, self.leader.t_brake
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Number of integration steps; the log holds one more row than this.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt)
            .round()
            .to_usize()
            .expect("step count fits in usize")
    }

    /// The homogeneous parameter set the stability analysis sees.
    pub fn platoon_params(&self) -> Result<PlatoonParams<T>> {
        PlatoonParams::new(
            self.vehicle.tau,
            self.gains,
            self.spacing.h,
            self.channel.delta,
            self.r_max,
        )
    }
}

/// Whether `x` is a whole non-negative multiple of `dt` (to relative grid tolerance).
fn divides<T: Scalar>(x: T, dt: T) -> bool {
    let k = (x / dt).round();
    if k < T::zero() {
        return false;
    }
    (x - k * dt).abs() <= grid_tol::<T>() * T::one().max(x.abs())
}

/// One vehicle's logged signals, one entry per step row.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrace<T> {
    pub p: Vec<T>,
    pub v: Vec<T>,
    pub a: Vec<T>,
    /// Commanded input (leader: open-loop profile; followers: feedback law).
    pub u: Vec<T>,
    /// Spacing error against the immediate predecessor; empty for the leader.
    pub e: Vec<T>,
}

impl<T> Default for VehicleTrace<T> {
    fn default() -> Self {
        Self {
            p: Vec::new(),
            v: Vec::new(),
            a: Vec::new(),
            u: Vec::new(),
            e: Vec::new(),
        }
    }
}

/// Complete time-indexed record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog<T> {
    pub dt: T,
    pub n_followers: usize,
    pub times: Vec<T>,
    /// Leader first, then followers in order.
    pub vehicles: Vec<VehicleTrace<T>>,
    /// `[start, end)` of the leader's disturbance, for windowed metrics.
    pub disturbance_window: Option<(T, T)>,
}

impl<T: Scalar> TrajectoryLog<T> {
    pub fn rows(&self) -> usize {
        self.times.len()
    }
}

/// Initial platoon at rest with zero spacing errors: leader at the origin, follower
/// `i` at `-i*d`, every history buffer pre-filled with its source's initial state.
pub fn init_platoon<T: Scalar>(
    config: &ScenarioConfig<T>,
) -> Result<(Vec<VehicleState<T>>, ChannelSet<T>)> {
    config.validate()?;
    let states: Vec<VehicleState<T>> = (0..=config.n_followers)
        .map(|i| {
            let offset = T::from_usize(i).expect("vehicle index fits in scalar");
            VehicleState::at_rest(-offset * config.spacing.d)
        })
        .collect();
    let channels = ChannelSet::new(&states, config.r_max, &config.channel)?;
    Ok((states, channels))
}

/// Runs the closed-loop scenario and returns the full log.
///
/// Each row records the states at time `t` together with the inputs computed at `t`
/// (which act over the following step). Any non-finite state or input aborts with a
/// divergence report naming the step and vehicle.
pub fn run<T: Scalar>(config: &ScenarioConfig<T>) -> Result<TrajectoryLog<T>> {
    let (mut states, mut channels) = init_platoon(config)?;
    let n_vehicles = config.n_followers + 1;
    let nsteps = config.steps();
    let mut log = TrajectoryLog {
        dt: config.dt,
        n_followers: config.n_followers,
        times: Vec::with_capacity(nsteps + 1),
        vehicles: vec![VehicleTrace::default(); n_vehicles],
        disturbance_window: Some((config.leader.t_dist, config.leader.t_brake)),
    };
    let mut inputs = vec![T::zero(); n_vehicles];
    for j in 0..=nsteps {
        let t = T::from_usize(j).expect("step index fits in scalar") * config.dt;
        channels.publish_all(t, &states)?;
        inputs[0] = leader_input(&config.leader, t);
        for (i, input) in inputs.iter_mut().enumerate().skip(1) {
            let snapshot = channels.snapshot_for(i, t)?;
            *input = mpf_control(&config.gains, &config.spacing, &snapshot)?;
        }
        log.times.push(t);
        for i in 0..n_vehicles {
            let trace = &mut log.vehicles[i];
            trace.p.push(states[i].p);
            trace.v.push(states[i].v);
            trace.a.push(states[i].a);
            trace.u.push(inputs[i]);
            if i > 0 {
                trace
                    .e
                    .push(spacing_error(&config.spacing, &states[i], &states[i - 1]));
            }
        }
        if j < nsteps {
            for i in 0..n_vehicles {
                let next = step_vehicle(
                    &states[i],
                    &config.vehicle,
                    inputs[i],
                    config.dt,
                    config.clamp,
                )
                .ok()
                .filter(VehicleState::is_finite)
                .ok_or_else(|| Error::Divergence {
                    step: j + 1,
                    vehicle: i,
                    time: (T::from_usize(j + 1).expect("step index fits in scalar") * config.dt)
                        .to_f64_lossy(),
                })?;
                states[i] = next;
            }
        }
    }
    Ok(log)
}

/// Error statistics of one follower over the whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerMetrics<T> {
    pub peak_abs_error: T,
    /// Time of the first peak occurrence.
    pub t_peak: T,
    pub rms_error: T,
    pub final_error: T,
}

/// Per-follower statistics plus string-amplification ratios over the disturbance
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary<T> {
    pub followers: Vec<FollowerMetrics<T>>,
    /// Peak |e| per follower inside the disturbance window.
    pub window_peaks: Vec<T>,
    /// `window_peaks[i+1] / window_peaks[i]`; a rest run yields zeros.
    pub window_peak_ratios: Vec<T>,
}

/// Summarizes a log. The window ratios use the log's disturbance window when present,
/// the whole run otherwise.
pub fn metrics<T: Scalar>(log: &TrajectoryLog<T>) -> MetricsSummary<T> {
    debug_assert!(log.rows() > 0, "metrics need a non-empty log");
    let rows = log.rows();
    let mut followers = Vec::with_capacity(log.n_followers);
    let mut window_peaks = Vec::with_capacity(log.n_followers);
    let (w_start, w_end) = log
        .disturbance_window
        .unwrap_or((T::neg_infinity(), T::infinity()));
    for trace in log.vehicles.iter().skip(1) {
        let mut peak = T::zero();
        let mut t_peak = log.times.first().copied().unwrap_or_else(T::zero);
        let mut sum_sq = T::zero();
        let mut window_peak = T::zero();
        for (k, &e) in trace.e.iter().enumerate() {
            let mag = e.abs();
            if mag > peak {
                peak = mag;
                t_peak = log.times[k];
            }
            sum_sq = sum_sq + e * e;
            let t = log.times[k];
            if t >= w_start && t < w_end && mag > window_peak {
                window_peak = mag;
            }
        }
        let rows_t = T::from_usize(rows).expect("row count fits in scalar");
        followers.push(FollowerMetrics {
            peak_abs_error: peak,
            t_peak,
            rms_error: (sum_sq / rows_t).sqrt(),
            final_error: trace.e.last().copied().unwrap_or_else(T::zero),
        });
        window_peaks.push(window_peak);
    }
    let window_peak_ratios = window_peaks
        .windows(2)
        .map(|pair| {
            if pair[0] == T::zero() {
                if pair[1] == T::zero() {
                    T::zero()
                } else {
                    T::infinity()
                }
            } else {
                pair[1] / pair[0]
            }
        })
        .collect();
    MetricsSummary {
        followers,
        window_peaks,
        window_peak_ratios,
    }
}

// ---------------------------------------------------------------------------
