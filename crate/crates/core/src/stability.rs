//! Stability analysis of the delayed multi-predecessor platoon loop.
//!
//! Two separate questions are answered for a homogeneous parameter set. Internal
//! stability: does each vehicle's closed loop damp out disturbances for any delay?
//! String stability: do spacing-error amplitudes shrink from one follower to the next,
//! checked both through closed-form sufficient conditions and by directly sweeping the
//! worst-case amplification over frequency.

use num_complex::Complex;

use crate::control::Gains;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on region-sweep size.
pub const SWEEP_BUDGET: usize = 10_000_000;

/// Slack for the swept-norm verdict `hinf <= bound`: absorbs grid and refinement
/// rounding without admitting any real violation.
fn norm_slack<T: Scalar>() -> T {
    T::lit(1e-9)
}

/// Homogeneous platoon parameters the analysis operates on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatoonParams<T> {
    /// Actuator lag time constant in seconds; strictly positive.
    pub tau: T,
    pub gains: Gains<T>,
    /// Time headway in seconds; non-negative.
    pub h: T,
    /// Communication delay in seconds; non-negative.
    pub delta: T,
    /// Number of predecessors each (deep enough) follower tracks; at least 1.
    pub r: usize,
}

impl<T: Scalar> PlatoonParams<T> {
    pub fn new(tau: T, gains: Gains<T>, h: T, delta: T, r: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "lag tau must be finite and positive, got {tau}"
            )));
        }
        if !(h.is_finite() && h >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "headway h must be finite and >= 0, got {h}"
            )));
        }
        if !(delta.is_finite() && delta >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "delay must be finite and >= 0, got {delta}"
            )));
        }
        if r == 0 {
            return Err(Error::InvalidArgument(
                "predecessor count r must be >= 1".into(),
            ));
        }
        Gains::new(gains.kp, gains.kv, gains.ka)?;
        Ok(Self {
            tau,
            gains,
            h,
            delta,
            r,
        })
    }

    fn r_scalar(&self) -> T {
        T::from_usize(self.r).expect("r fits in scalar")
    }

    /// Combined velocity coupling `kv + kp*h`; recurs in most conditions.
    fn coupling(&self) -> T {
        self.gains.kv + self.gains.kp * self.h
    }
}

/// One evaluated inequality: the raw left-hand value and its verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check<T> {
    pub value: T,
    pub ok: bool,
}

impl<T: Scalar> Check<T> {
    fn new(value: T, ok: bool) -> Self {
        Self { value, ok }
    }
}

/// Internal-stability conditions: each vehicle's own loop must be asymptotically
/// stable for arbitrary uniform delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalReport<T> {
    /// `kp > 0`; value is `kp` itself.
    pub kp_positive: Check<T>,
    /// `ka > 0`; value is `ka` itself.
    pub ka_positive: Check<T>,
    /// `kp - tau*(kv + kp*h) + tau^2*kp` must stay outside a `1e-9` band around zero;
    /// an exact zero would put a closed-loop root on a degenerate cancellation.
    pub characteristic_nonzero: Check<T>,
    /// `(kv + kp*h) - kp*tau >= 0`: velocity coupling must dominate the lagged
    /// position gain.
    pub coupling_margin: Check<T>,
    /// `delta * r * (kv + kp*h) < 1`: total delayed feedback strength stays below the
    /// level that can sustain oscillation.
    pub delay_product: Check<T>,
}

impl<T: Scalar> InternalReport<T> {
    pub fn all_ok(&self) -> bool {
        self.kp_positive.ok
            && self.ka_positive.ok
            && self.characteristic_nonzero.ok
            && self.coupling_margin.ok
            && self.delay_product.ok
    }
}

/// Evaluates every internal-stability condition; returns raw values alongside the
/// verdicts so reports can show margins, not just booleans.
pub fn check_internal<T: Scalar>(params: &PlatoonParams<T>) -> InternalReport<T> {
    let g = &params.gains;
    let tau = params.tau;
    let coupling = params.coupling();
    let characteristic = g.kp - tau * coupling + tau * tau * g.kp;
    let coupling_margin = coupling - g.kp * tau;
    let delay_product = params.delta * params.r_scalar() * coupling;
    InternalReport {
        kp_positive: Check::new(g.kp, g.kp > T::zero()),
        ka_positive: Check::new(g.ka, g.ka > T::zero()),
        characteristic_nonzero: Check::new(characteristic, characteristic.abs() > T::lit(1e-9)),
        coupling_margin: Check::new(coupling_margin, coupling_margin >= T::zero()),
        delay_product: Check::new(delay_product, delay_product < T::one()),
    }
}

/// String-stability sufficient conditions. All six must hold (together with internal
/// stability and `h >= min_headway`) for the closed-form certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct StringReport<T> {
    /// `kv + kp*(h - tau) >= 0`
    pub velocity_gain_margin: Check<T>,
    /// `2*tau*delta - delta*h - tau*h <= 0`: the headway must outweigh the lag-delay
    /// harmonic mean.
    pub headway_lag_balance: Check<T>,
    /// `ka - tau*(kv + kp*h) <= 0`
    pub accel_gain_bound: Check<T>,
    /// `tau - 2*r*ka*delta >= 0`
    pub lag_vs_delay: Check<T>,
    /// `1 + 2r(ka - tau*(kv + kp*h)) + 2r*delta*(kp*(tau - h) - kv) >= 0`
    pub damping_budget: Check<T>,
    /// Per predecessor offset `l` in `1..=r`:
    /// `r^2*kp^2*h^2*(1-(r-l)^2) + 2*r^2*kp*kv*h*(1+r-l) - 2*r*kp >= 0`.
    pub predecessor_weights: Vec<Check<T>>,
}

impl<T: Scalar> StringReport<T> {
    pub fn all_ok(&self) -> bool {
        self.velocity_gain_margin.ok
            && self.headway_lag_balance.ok
            && self.accel_gain_bound.ok
            && self.lag_vs_delay.ok
            && self.damping_budget.ok
            && self.predecessor_weights.iter().all(|c| c.ok)
    }
}

/// Evaluates the six string-stability sufficient conditions.
pub fn check_string_conditions<T: Scalar>(params: &PlatoonParams<T>) -> StringReport<T> {
    let g = &params.gains;
    let tau = params.tau;
    let h = params.h;
    let delta = params.delta;
    let r = params.r_scalar();
    let two = T::lit(2.0);
    let coupling = params.coupling();

    let velocity_gain_margin = g.kv + g.kp * (h - tau);
    let headway_lag_balance = two * tau * delta - delta * h - tau * h;
    let accel_gain_bound = g.ka - tau * coupling;
    let lag_vs_delay = tau - two * r * g.ka * delta;
    let damping_budget =
        T::one() + two * r * (g.ka - tau * coupling) + two * r * delta * (g.kp * (tau - h) - g.kv);
    let predecessor_weights = (1..=params.r)
        .map(|l| {
            let rl = T::from_usize(params.r - l).expect("offset fits in scalar");
            let value = r * r * g.kp * g.kp * h * h * (T::one() - rl * rl)
                + two * r * r * g.kp * g.kv * h * (T::one() + rl)
                - two * r * g.kp;
            Check::new(value, value >= T::zero())
        })
        .collect();

    StringReport {
        velocity_gain_margin: Check::new(velocity_gain_margin, velocity_gain_margin >= T::zero()),
        headway_lag_balance: Check::new(headway_lag_balance, headway_lag_balance <= T::zero()),
        accel_gain_bound: Check::new(accel_gain_bound, accel_gain_bound <= T::zero()),
        lag_vs_delay: Check::new(lag_vs_delay, lag_vs_delay >= T::zero()),
        damping_budget: Check::new(damping_budget, damping_budget >= T::zero()),
        predecessor_weights,
    }
}

/// `|H_l(j*omega)|`: amplification from the l-th-predecessor error signal to the
/// follower's, including the delay terms.
///
/// Numerator `(ka*s^2 + (kv - kp*h*(r-l))*s + kp) * e^(-delta*s)`, denominator
/// `tau*s^3 + s^2 + (r*ka*s^2 + r*(kv + kp*h)*s + r*kp) * e^(-delta*s)`, evaluated at
/// `s = j*omega`. The magnitude is even in `omega`, so negative values are accepted
/// and mirror the positive axis.
pub fn transfer_magnitude<T: Scalar>(params: &PlatoonParams<T>, l: usize, omega: T) -> Result<T> {
    if l < 1 || l > params.r {
        return Err(Error::InvalidArgument(format!(
            "predecessor offset l must lie in 1..={}, got {l}",
            params.r
        )));
    }
    let g = &params.gains;
    let r = params.r_scalar();
    let rl = T::from_usize(params.r - l).expect("offset fits in scalar");
    let s = Complex::new(T::zero(), omega);
    let delay = (-s * params.delta).exp();
    let num = (s * s * g.ka + s * (g.kv - g.kp * params.h * rl) + g.kp) * delay;
    let den = s * s * s * params.tau
        + s * s
        + (s * s * (r * g.ka) + s * (r * params.coupling()) + r * g.kp) * delay;
    Ok((num / den).norm())
}

/// Worst-case amplification `sup_omega |H_l(j*omega)|`.
///
/// A 2000-point log grid over `[1e-3, 1e3]` rad/s plus the `omega = 0` anchor locates
/// the peak; golden-section search shrinks the surrounding bracket to `1e-6`. Warns
/// when the internal-stability conditions fail, since a supremum over the imaginary
/// axis only bounds the response of a stable loop.
pub fn hinf_norm<T: Scalar>(params: &PlatoonParams<T>, l: usize) -> Result<T> {
    if !check_internal(params).all_ok() {
        log::warn!("H-infinity norm requested for internally unstable parameters");
    }
    hinf_norm_quiet(params, l)
}

pub(crate) fn hinf_norm_quiet<T: Scalar>(params: &PlatoonParams<T>, l: usize) -> Result<T> {
    const GRID_POINTS: usize = 2000;
    let mut omegas = Vec::with_capacity(GRID_POINTS + 1);
    omegas.push(T::zero());
    let lo = T::lit(1e-3).ln();
    let hi = T::lit(1e3).ln();
    let denom = T::from_usize(GRID_POINTS - 1).expect("grid size fits in scalar");
    for i in 0..GRID_POINTS {
        let frac = T::from_usize(i).expect("grid index fits in scalar") / denom;
        omegas.push((lo + (hi - lo) * frac).exp());
    }

    let mut best = T::neg_infinity();
    let mut best_idx = 0usize;
    for (i, &w) in omegas.iter().enumerate() {
        let mag = transfer_magnitude(params, l, w)?;
        if mag > best {
            best = mag;
            best_idx = i;
        }
    }
    if !best.is_finite() {
        return Ok(best);
    }

    let a = omegas[best_idx.saturating_sub(1)];
    let b = omegas[(best_idx + 1).min(omegas.len() - 1)];
    let refined = golden_max(
        |w| transfer_magnitude(params, l, w).unwrap_or(T::nan()),
        a,
        b,
    );
    Ok(if refined > best { refined } else { best })
}

/// Golden-section maximization of a unimodal-near-peak function on `[a, b]`,
/// terminating when the bracket is below `1e-6` (scaled by the bracket location).
fn golden_max<T: Scalar>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let tol = T::lit(1e-6) * T::one().max(a.abs());
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    if fc > fd {
        fc
    } else {
        fd
    }
}

/// Smallest time headway the closed-form certificate admits:
/// `2*(tau + delta) / (2*r*ka + 1)`.
pub fn min_headway<T: Scalar>(tau: T, delta: T, r: usize, ka: T) -> Result<T> {
    if !(tau.is_finite() && delta.is_finite() && ka.is_finite()) {
        return Err(Error::InvalidArgument(
            "min_headway arguments must be finite".into(),
        ));
    }
    let two = T::lit(2.0);
    let den = two * T::from_usize(r).expect("r fits in scalar") * ka + T::one();
    if den <= T::zero() {
        return Err(Error::InvalidArgument(format!(
            "headway-bound denominator 2*r*ka + 1 must be positive, got {den}"
        )));
    }
    Ok(two * (tau + delta) / den)
}

/// Full stability report for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub params: PlatoonParams<T>,
    pub internal: InternalReport<T>,
    pub string: StringReport<T>,
    /// `None` when the bound's denominator is non-positive (certificate inapplicable).
    pub h_min: Option<T>,
    /// `h >= h_min`.
    pub headway_ok: bool,
    /// Directly swept worst-case amplifications, index `l-1`.
    pub hinf_norms: Vec<T>,
    /// The string-stability ceiling `1/r`.
    pub hinf_bound: T,
    /// Every swept norm at or below the ceiling (with float slack).
    pub norms_ok: bool,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn internal_ok(&self) -> bool {
        self.internal.all_ok()
    }

    /// Closed-form conditions alone.
    pub fn conditions_ok(&self) -> bool {
        self.string.all_ok()
    }

    /// String-stable verdict: sufficient conditions, direct norm sweep, and internal
    /// stability all hold (an unstable loop cannot be string stable).
    pub fn string_ok(&self) -> bool {
        self.conditions_ok() && self.norms_ok && self.internal_ok()
    }

    /// Everything certified: internal, string, and headway at or above the bound.
    pub fn certified(&self) -> bool {
        self.internal_ok() && self.string_ok() && self.headway_ok
    }
}

/// Runs every check and norm sweep for one parameter set.
pub fn analyze<T: Scalar>(params: &PlatoonParams<T>) -> StabilityReport<T> {
    let internal = check_internal(params);
    let string = check_string_conditions(params);
    let h_min = min_headway(params.tau, params.delta, params.r, params.gains.ka).ok();
    let headway_ok = h_min.map(|hm| params.h >= hm).unwrap_or(false);
    let hinf_norms: Vec<T> = (1..=params.r)
        .map(|l| hinf_norm_quiet(params, l).expect("l in range"))
        .collect();
    let hinf_bound = T::one() / params.r_scalar();
    let norms_ok = hinf_norms
        .iter()
        .all(|&n| n <= hinf_bound + norm_slack::<T>());
    StabilityReport {
        params: *params,
        internal,
        string,
        h_min,
        headway_ok,
        hinf_norms,
        hinf_bound,
        norms_ok,
    }
}

/// Amplification magnitudes tabulated over a frequency grid, one curve per
/// predecessor offset.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse<T> {
    /// `omega = 0` anchor first, then the log-spaced grid.
    pub omegas: Vec<T>,
    /// `magnitudes[l-1][k] = |H_l(j*omegas[k])|`.
    pub magnitudes: Vec<Vec<T>>,
    /// The string-stability ceiling `1/r`.
    pub bound: T,
}

/// Tabulates `|H_l|` for every `l` over `omega = 0` plus `points` log-spaced
/// frequencies in `[omega_min, omega_max]`.
pub fn frequency_response<T: Scalar>(
    params: &PlatoonParams<T>,
    omega_min: T,
    omega_max: T,
    points: usize,
) -> Result<FrequencyResponse<T>> {
    if !(omega_min.is_finite() && omega_min > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "omega_min must be finite and positive, got {omega_min}"
        )));
    }
    if !(omega_max.is_finite() && omega_max > omega_min) {
        return Err(Error::InvalidArgument(format!(
            "omega_max must be finite and exceed omega_min, got {omega_max}"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidArgument(format!(
            "frequency grid needs at least 2 points, got {points}"
        )));
    }
    let mut omegas = Vec::with_capacity(points + 1);
    omegas.push(T::zero());
    let lo = omega_min.ln();
    let hi = omega_max.ln();
    let denom = T::from_usize(points - 1).expect("grid size fits in scalar");
    for i in 0..points {
        let frac = T::from_usize(i).expect("grid index fits in scalar") / denom;
        omegas.push((lo + (hi - lo) * frac).exp());
    }
    let magnitudes = (1..=params.r)
        .map(|l| {
            omegas
                .iter()
                .map(|&w| transfer_magnitude(params, l, w))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyResponse {
        omegas,
        magnitudes,
        bound: T::one() / params.r_scalar(),
    })
}

/// Parameter axis a region sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Kp,
    Kv,
    Ka,
    H,
    Tau,
    Delta,
}

/// Cartesian sweep specification: `base` supplies every parameter a grid does not.
#[derive(Debug, Clone)]
pub struct SweepSpec<T> {
    pub base: PlatoonParams<T>,
    pub axes: Vec<(SweepParam, Vec<T>)>,
    /// Also sweep the direct norms per point (much slower than the closed forms).
    pub compute_norms: bool,
}

/// One classified grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint<T> {
    pub params: PlatoonParams<T>,
    pub internal_ok: bool,
    /// Closed-form sufficient conditions.
    pub conditions_ok: bool,
    pub h_min: Option<T>,
    pub headway_ok: bool,
    /// Swept norms, present only when requested.
    pub hinf_norms: Option<Vec<T>>,
    pub norms_ok: Option<bool>,
}

impl<T: Scalar> RegionPoint<T> {
    /// Certified under every evidence source the sweep computed.
    pub fn certified(&self) -> bool {
        self.internal_ok && self.conditions_ok && self.headway_ok && self.norms_ok.unwrap_or(true)
    }
}

/// Classifies every point of the cartesian grid; the last axis varies fastest.
pub fn sweep_gain_region<T: Scalar>(spec: &SweepSpec<T>) -> Result<Vec<RegionPoint<T>>> {
    let mut total: usize = 1;
    for (param, values) in &spec.axes {
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "sweep axis {param:?} has no values"
            )));
        }
        // checked_mul only guards usize overflow; the budget check below reports
        // the exact requested size whenever it still fits in a usize.
        total = total
            .checked_mul(values.len())
            .ok_or(Error::BudgetExceeded {
                points: usize::MAX,
                budget: SWEEP_BUDGET,
            })?;
    }
    if total > SWEEP_BUDGET {
        return Err(Error::BudgetExceeded {
            points: total,
            budget: SWEEP_BUDGET,
        });
    }

    let mut rows = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut tau = spec.base.tau;
        let mut gains = spec.base.gains;
        let mut h = spec.base.h;
        let mut delta = spec.base.delta;
        for (param, values) in spec.axes.iter().rev() {
            let v = values[idx % values.len()];
            idx /= values.len();
            match param {
                SweepParam::Kp => gains.kp = v,
                SweepParam::Kv => gains.kv = v,
                SweepParam::Ka => gains.ka = v,
                SweepParam::H => h = v,
                SweepParam::Tau => tau = v,
                SweepParam::Delta => delta = v,
            }
        }
        let params = PlatoonParams::new(tau, gains, h, delta, spec.base.r)?;
        let internal_ok = check_internal(&params).all_ok();
        let conditions_ok = check_string_conditions(&params).all_ok();
        let h_min = min_headway(params.tau, params.delta, params.r, params.gains.ka).ok();
        let headway_ok = h_min.map(|hm| params.h >= hm).unwrap_or(false);
        let (hinf_norms, norms_ok) = if spec.compute_norms {
            let norms: Vec<T> = (1..=params.r)
                .map(|l| hinf_norm_quiet(&params, l).expect("l in range"))
                .collect();
            let bound = T::one() / params.r_scalar();
            let ok = norms.iter().all(|&n| n <= bound + norm_slack::<T>());
            (Some(norms), Some(ok))
        } else {
            (None, None)
        };
        rows.push(RegionPoint {
            params,
            internal_ok,
            conditions_ok,
            h_min,
            headway_ok,
            hinf_norms,
            norms_ok,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
