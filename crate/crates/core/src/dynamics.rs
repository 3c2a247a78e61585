//! Longitudinal vehicle dynamics: a double integrator driven through a first-order
//! actuator lag, `p' = v`, `v' = a`, `tau*a' + a = u`.
//!
//! The discrete step treats `u` as held constant over the interval, which makes the
//! acceleration update exact (no discretization error in the lag channel); `v` and `p`
//! advance by the trapezoid rule on the exact acceleration endpoints.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Physical constants of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T> {
    /// Actuator lag time constant in seconds; strictly positive.
    pub tau: T,
    /// Velocity floor in m/s; non-positive, so stopping is allowed but reversing is not.
    pub v_min: T,
}

impl<T: Scalar> VehicleParams<T> {
    /// Lag `tau` with a zero velocity floor (vehicles stop, never reverse).
    pub fn new(tau: T) -> Result<Self> {
        Self::with_floor(tau, T::zero())
    }

    /// Lag `tau` with an explicit velocity floor `v_min <= 0`.
    pub fn with_floor(tau: T, v_min: T) -> Result<Self> {
        if !(tau.is_finite() && tau > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "vehicle lag tau must be finite and positive, got {tau}"
            )));
        }
        if !(v_min.is_finite() && v_min <= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "velocity floor v_min must be finite and <= 0, got {v_min}"
            )));
        }
        Ok(Self { tau, v_min })
    }
}

/// Kinematic state of one vehicle: position (m), velocity (m/s), acceleration (m/s^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState<T> {
    pub p: T,
    pub v: T,
    pub a: T,
}

impl<T: Scalar> VehicleState<T> {
    pub fn new(p: T, v: T, a: T) -> Self {
        Self { p, v, a }
    }

    /// A vehicle at rest at position `p`.
    pub fn at_rest(p: T) -> Self {
        Self {
            p,
            v: T::zero(),
            a: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite() && self.a.is_finite()
    }
}

/// Advances one vehicle by `dt` seconds under the commanded input `u`.
///
/// Updates: `a' = u + (a - u)*exp(-dt/tau)` (exact for constant `u`),
/// `v' = v + dt*(a + a')/2`, `p' = p + dt*(v + v')/2`. When `clamp` is set and the
/// velocity endpoint lands below `v_min`, the stored velocity is raised onto the floor
/// and the stored acceleration onto `max(a', 0)`; the position update keeps the
/// unclamped endpoint, since the floor crossing happens inside the step.
pub fn step_vehicle<T: Scalar>(
    state: &VehicleState<T>,
    params: &VehicleParams<T>,
    u: T,
    dt: T,
    clamp: bool,
) -> Result<VehicleState<T>> {
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "step size dt must be finite and positive, got {dt}"
        )));
    }
    if !state.is_finite() || !u.is_finite() {
        return Err(Error::InvalidState(format!(
            "non-finite step input: state ({}, {}, {}), u {u}",
            state.p, state.v, state.a
        )));
    }
    let half = T::lit(0.5);
    let decay = (-dt / params.tau).exp();
    let a_next = u + (state.a - u) * decay;
    let v_next = state.v + dt * half * (state.a + a_next);
    let p_next = state.p + dt * half * (state.v + v_next);
    let (v_next, a_next) = if clamp && v_next < params.v_min {
        (params.v_min, a_next.max(T::zero()))
    } else {
        (v_next, a_next)
    };
    Ok(VehicleState {
        p: p_next,
        v: v_next,
        a: a_next,
    })
}

/// Acceleration the lag settles to under a constant input: exactly `u`.
///
/// `u` must be finite; the value is returned unchanged, since the first-order lag has
/// unit DC gain.
pub fn steady_state_accel<T: Scalar>(u: T) -> T {
    debug_assert!(u.is_finite());
    u
}

// ---------------------------------------------------------------------------
