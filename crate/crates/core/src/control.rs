//! Spacing policy and the multi-predecessor feedback law.
//!
//! Each follower tracks every one of its first `r` predecessors. The desired gap to the
//! l-th predecessor is the sum of l per-vehicle headway terms, so the whole platoon
//! contracts and stretches consistently with speed.

use crate::dynamics::VehicleState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Constant-time-headway spacing: desired gap to the immediate predecessor is
/// `h*v + d` at own velocity `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingPolicy<T> {
    /// Time headway in seconds; non-negative.
    pub h: T,
    /// Standstill distance in meters; strictly positive.
    pub d: T,
}

impl<T: Scalar> SpacingPolicy<T> {
    pub fn new(h: T, d: T) -> Result<Self> {
        if !(h.is_finite() && h >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "time headway h must be finite and >= 0, got {h}"
            )));
        }
        if !(d.is_finite() && d > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "standstill distance d must be finite and positive, got {d}"
            )));
        }
        Ok(Self { h, d })
    }
}

/// Feedback gains on position, velocity, and acceleration errors.
///
/// Construction only requires finite values; whether a gain set certifies stable
/// behavior is the stability module's job, and sweeps deliberately explore gain sets
/// that fail those checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains<T> {
    pub kp: T,
    pub kv: T,
    pub ka: T,
}

impl<T: Scalar> Gains<T> {
    pub fn new(kp: T, kv: T, ka: T) -> Result<Self> {
        if !(kp.is_finite() && kv.is_finite() && ka.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gains must be finite, got ({kp}, {kv}, {ka})"
            )));
        }
        Ok(Self { kp, kv, ka })
    }
}

/// States a follower's controller acts on, all sampled at the same (delayed) instant.
///
/// `predecessors[0]` is the immediate predecessor, `predecessors[1]` the one ahead of
/// it, and so on; the follower's own state rides the same delayed path, so the control
/// law sees a consistent snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSnapshot<T> {
    pub own: VehicleState<T>,
    pub predecessors: Vec<VehicleState<T>>,
}

impl<T: Scalar> NeighborSnapshot<T> {
    pub fn new(own: VehicleState<T>, predecessors: Vec<VehicleState<T>>) -> Self {
        Self { own, predecessors }
    }
}

/// Desired gap between a follower and its l-th predecessor.
///
/// `velocities` holds the velocities of the l vehicles from the (l-1)-th predecessor
/// back to the follower itself, in front-to-rear order; the gap is
/// `sum(h*v_k + d)` over them, one headway term per sandwiched vehicle.
pub fn desired_gap<T: Scalar>(policy: &SpacingPolicy<T>, l: usize, velocities: &[T]) -> Result<T> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "predecessor offset l must be >= 1".into(),
        ));
    }
    if velocities.len() != l {
        return Err(Error::InvalidArgument(format!(
            "offset {l} gap needs exactly {l} velocities, got {}",
            velocities.len()
        )));
    }
    let mut gap = T::zero();
    for &v in velocities {
        gap = gap + policy.h * v + policy.d;
    }
    Ok(gap)
}

/// Signed spacing error against the immediate predecessor:
/// `e = p_pred - p_own - (h*v_own + d)`; positive when the gap is too wide.
pub fn spacing_error<T: Scalar>(
    policy: &SpacingPolicy<T>,
    own: &VehicleState<T>,
    pred: &VehicleState<T>,
) -> T {
    pred.p - own.p - (policy.h * own.v + policy.d)
}

/// Commanded acceleration of one follower from a consistent delayed snapshot.
///
/// Sums a proportional-derivative-acceleration correction against each of the `r`
/// predecessors in the snapshot:
/// `u = -sum_l [kp*(p_own - p_l + gap_l) + kv*(v_own - v_l) + ka*(a_own - a_l)]`,
/// with `gap_l` from [`desired_gap`]. At the equilibrium spacing with equal
/// velocities and zero accelerations every term vanishes.
pub fn mpf_control<T: Scalar>(
    gains: &Gains<T>,
    policy: &SpacingPolicy<T>,
    snapshot: &NeighborSnapshot<T>,
) -> Result<T> {
    let r = snapshot.predecessors.len();
    if r == 0 {
        return Err(Error::InvalidArgument(
            "snapshot needs at least one predecessor".into(),
        ));
    }
    let own = &snapshot.own;
    let mut velocities: Vec<T> = Vec::with_capacity(r);
    let mut u = T::zero();
    for l in 1..=r {
        velocities.clear();
        for k in (0..l - 1).rev() {
            velocities.push(snapshot.predecessors[k].v);
        }
        velocities.push(own.v);
        let gap = desired_gap(policy, l, &velocities)?;
        let pred = &snapshot.predecessors[l - 1];
        u = u
            - (gains.kp * (own.p - pred.p + gap)
                + gains.kv * (own.v - pred.v)
                + gains.ka * (own.a - pred.a));
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
