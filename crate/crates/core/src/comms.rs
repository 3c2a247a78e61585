//! Delayed broadcast channels between vehicles.
//!
//! Every listening link keeps its own short history of received states; a controller
//! samples the newest state no younger than the channel delay, so the whole snapshot it
//! acts on is aged consistently. Optional Bernoulli packet loss drops individual
//! publishes per link; the receiver then keeps holding the last delivered sample.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::NeighborSnapshot;
use crate::dynamics::VehicleState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Comparison slack for timestamps on the step grid: `t - delta` computed in floating
/// point can undershoot the exact grid point (e.g. `0.06 - 0.05 < 0.01`), which would
/// otherwise skew the lookup by one full step. Far below any step size of interest,
/// far above accumulated rounding over a run; the epsilon term keeps the margin
/// meaningful in f32.
fn time_slack<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// Channel configuration shared by every link of a platoon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    /// Uniform communication delay in seconds; non-negative, a multiple of the step
    /// size in any scenario that uses it.
    pub delta: T,
    /// Probability that a single publish on a single link is lost.
    pub loss_prob: f64,
    /// Master seed; every link derives an independent stream from it.
    pub seed: u64,
}

impl<T: Scalar> ChannelParams<T> {
    pub fn new(delta: T, loss_prob: f64, seed: u64) -> Result<Self> {
        if !(delta.is_finite() && delta >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "channel delay must be finite and >= 0, got {delta}"
            )));
        }
        if !(0.0..=1.0).contains(&loss_prob) {
            return Err(Error::InvalidArgument(format!(
                "loss probability must lie in [0, 1], got {loss_prob}"
            )));
        }
        Ok(Self {
            delta,
            loss_prob,
            seed,
        })
    }

    /// Lossless channel with delay `delta`.
    pub fn lossless(delta: T) -> Result<Self> {
        Self::new(delta, 0.0, 0)
    }
}

/// One timestamped state sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub state: VehicleState<T>,
}

/// Bounded history of received states on one link, newest last.
///
/// The buffer is created holding the source's initial state with a timestamp of
/// negative infinity, so a query before the first delivery (or before `t = delta`)
/// resolves to the initial state. Pruning keeps the newest sample old enough to answer
/// a query at the buffer's delay horizon, plus everything newer.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T> {
    samples: VecDeque<Sample<T>>,
    horizon: T,
}

impl<T: Scalar> HistoryBuffer<T> {
    /// New buffer for a link with delay horizon `horizon`, pre-filled with `initial`.
    pub fn new(initial: VehicleState<T>, horizon: T) -> Self {
        let mut samples = VecDeque::new();
        samples.push_back(Sample {
            t: T::neg_infinity(),
            state: initial,
        });
        Self { samples, horizon }
    }

    /// Appends a delivered state. Timestamps must strictly increase.
    pub fn publish(&mut self, t: T, state: VehicleState<T>) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "publish timestamp must be finite, got {t}"
            )));
        }
        if !state.is_finite() {
            return Err(Error::InvalidState(format!(
                "published state is non-finite at t = {t}"
            )));
        }
        if let Some(last) = self.samples.back() {
            if t <= last.t {
                return Err(Error::InvalidArgument(format!(
                    "publish timestamps must strictly increase: {t} after {}",
                    last.t
                )));
            }
        }
        self.samples.push_back(Sample { t, state });
        let cutoff = t - self.horizon + time_slack::<T>();
        while self.samples.len() >= 2 && self.samples[1].t <= cutoff {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// State as seen at time `t` through a delay of `delta`: the newest sample with
    /// timestamp at most `t - delta` (with grid slack). Queries older than everything
    /// retained resolve to the oldest sample, which before any pruning is the initial
    /// pre-fill.
    pub fn sample_delayed(&self, t: T, delta: T) -> VehicleState<T> {
        debug_assert!(delta >= T::zero());
        let cutoff = t - delta + time_slack::<T>();
        self.samples
            .iter()
            .rev()
            .find(|s| s.t <= cutoff)
            .unwrap_or(&self.samples[0])
            .state
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Timestamps currently retained, oldest first; the pre-fill shows as `-inf`.
    pub fn timestamps(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

struct Link<T> {
    source: usize,
    buffer: HistoryBuffer<T>,
    rng: Option<ChaCha8Rng>,
    loss_prob: f64,
}

/// All listening links of a platoon.
///
/// Follower `i` (1-based) listens to itself and to predecessors `i-1 .. i-r_i` with
/// `r_i = min(i, r_max)`; the own state rides the same delayed path so snapshots stay
/// consistent. Each link draws packet losses from its own counter-mode stream, so drop
/// patterns are independent across links yet fully reproducible from the master seed.
pub struct ChannelSet<T> {
    n_vehicles: usize,
    delta: T,
    /// `links[i]` for follower `i`: index 0 the self link, index l the l-th predecessor.
    links: Vec<Vec<Link<T>>>,
}

impl<T: Scalar> ChannelSet<T> {
    /// Builds the fabric for `initial_states` (leader first), pre-filling every buffer.
    pub fn new(
        initial_states: &[VehicleState<T>],
        r_max: usize,
        params: &ChannelParams<T>,
    ) -> Result<Self> {
        let n_vehicles = initial_states.len();
        if n_vehicles == 0 {
            return Err(Error::InvalidArgument("no vehicles".into()));
        }
        if r_max == 0 {
            return Err(Error::InvalidArgument(
                "predecessor count r_max must be >= 1".into(),
            ));
        }
        ChannelParams::new(params.delta, params.loss_prob, params.seed)?;
        for (i, s) in initial_states.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::InvalidState(format!(
                    "initial state of vehicle {i} is non-finite"
                )));
            }
        }
        let mut links = Vec::with_capacity(n_vehicles);
        links.push(Vec::new());
        for i in 1..n_vehicles {
            let r_i = i.min(r_max);
            let mut row = Vec::with_capacity(r_i + 1);
            for l in 0..=r_i {
                let source = i - l;
                let rng = (params.loss_prob > 0.0).then(|| {
                    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                    rng.set_stream((i * n_vehicles + source) as u64);
                    rng
                });
                row.push(Link {
                    source,
                    buffer: HistoryBuffer::new(initial_states[source], params.delta),
                    rng,
                    loss_prob: params.loss_prob,
                });
            }
            links.push(row);
        }
        Ok(Self {
            n_vehicles,
            delta: params.delta,
            links,
        })
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Predecessor count of follower `i`.
    pub fn r_of(&self, follower: usize) -> Result<usize> {
        self.check_follower(follower)?;
        Ok(self.links[follower].len() - 1)
    }

    fn check_follower(&self, follower: usize) -> Result<()> {
        if follower == 0 || follower >= self.n_vehicles {
            return Err(Error::InvalidArgument(format!(
                "follower index must lie in 1..{}, got {follower}",
                self.n_vehicles
            )));
        }
        Ok(())
    }

    /// Publishes every vehicle's state at time `t` on every listening link, applying
    /// per-link packet loss. Each link draws exactly one loss decision per call, so the
    /// drop pattern depends only on the seed and the step count.
    pub fn publish_all(&mut self, t: T, states: &[VehicleState<T>]) -> Result<()> {
        if states.len() != self.n_vehicles {
            return Err(Error::InvalidArgument(format!(
                "expected {} states, got {}",
                self.n_vehicles,
                states.len()
            )));
        }
        for row in &mut self.links {
            for link in row {
                let delivered = match &mut link.rng {
                    Some(rng) => !rng.gen_bool(link.loss_prob),
                    None => true,
                };
                if delivered {
                    link.buffer.publish(t, states[link.source])?;
                }
            }
        }
        Ok(())
    }

    /// Snapshot follower `i` acts on at time `t`: own and predecessor states, all aged
    /// by the channel delay through their respective link histories.
    pub fn snapshot_for(&self, follower: usize, t: T) -> Result<NeighborSnapshot<T>> {
        self.check_follower(follower)?;
        let row = &self.links[follower];
        let own = row[0].buffer.sample_delayed(t, self.delta);
        let predecessors = row[1..]
            .iter()
            .map(|link| link.buffer.sample_delayed(t, self.delta))
            .collect();
        Ok(NeighborSnapshot::new(own, predecessors))
    }

    /// Delivered (finite) timestamps on the link from `source` to `follower`; test and
    /// diagnostics hook for loss patterns.
    pub fn delivered_timestamps(&self, follower: usize, source: usize) -> Result<Vec<T>> {
        self.check_follower(follower)?;
        let link = self.links[follower]
            .iter()
            .find(|l| l.source == source)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("follower {follower} does not listen to {source}"))
            })?;
        Ok(link
            .buffer
            .timestamps()
            .into_iter()
            .filter(|t| t.is_finite())
            .collect())
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn state(p: f64) -> VehicleState<f64> {
        VehicleState::new(p, 0.0, 0.0)
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(-0.01, 0.0, 0).is_err());
        assert!(ChannelParams::new(0.05, -0.1, 0).is_err());
        assert!(ChannelParams::new(0.05, 1.5, 0).is_err());
        assert!(ChannelParams::<f64>::new(f64::NAN, 0.0, 0).is_err());
        assert!(ChannelParams::new(0.0, 1.0, 7).is_ok());
    }

    #[test]
    fn prefill_answers_early_queries() {
        let buf = HistoryBuffer::new(state(-0.6), 0.05);
        assert_eq!(buf.sample_delayed(0.0, 0.05).p, -0.6);
        assert_eq!(buf.sample_delayed(0.04, 0.05).p, -0.6);
        assert_eq!(buf.len(), 1);
    }

    #[test]
    fn delayed_lookup_is_exactly_k_steps_back() {
        // delta = 5 steps of dt = 0.01; every query must land exactly 5 publishes back.
        let dt = 0.01;
        let delta = 0.05;
        let mut buf = HistoryBuffer::new(state(0.0), delta);
        for j in 1..=100usize {
            let t = j as f64 * dt;
            buf.publish(t, state(t)).unwrap();
            if j >= 5 {
                let got = buf.sample_delayed(t, delta);
                let want = (j - 5) as f64 * dt;
                assert_eq!(got.p, want, "query at step {j}");
            }
            assert!(buf.len() <= 7, "capacity exceeded: {}", buf.len());
        }
    }

    #[test]
    fn subgrid_query_rounds_down() {
        // Query at t = 0.07 through delta = 0.05 sees the publish at 0.02 even though
        // 0.07 - 0.05 lands a hair below it in floating point.
        let mut buf = HistoryBuffer::new(state(-1.0), 0.05);
        for j in 0..=7usize {
            let t = j as f64 * 0.01;
            buf.publish(t, state(t)).unwrap();
        }
        assert_eq!(buf.sample_delayed(0.07, 0.05).p, 0.02);
    }

    #[test]
    fn zero_delay_returns_latest() {
        let mut buf = HistoryBuffer::new(state(0.0), 0.0);
        buf.publish(0.0, state(10.0)).unwrap();
        assert_eq!(buf.sample_delayed(0.0, 0.0).p, 10.0);
        buf.publish(0.01, state(11.0)).unwrap();
        assert_eq!(buf.sample_delayed(0.01, 0.0).p, 11.0);
        assert!(buf.len() <= 2);
    }

    #[test]
    fn rejects_non_monotonic_publishes() {
        let mut buf = HistoryBuffer::new(state(0.0), 0.05);
        buf.publish(0.01, state(1.0)).unwrap();
        assert!(matches!(
            buf.publish(0.001, state(2.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            buf.publish(0.01, state(2.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            buf.publish(f64::INFINITY, state(2.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            buf.publish(0.02, state(f64::NAN)),
            Err(Error::InvalidState(_))
        ));
    }

    fn table_set(loss: f64, seed: u64) -> ChannelSet<f64> {
        let initial: Vec<_> = [0.0, -0.6, -1.2, -1.8].iter().map(|&p| state(p)).collect();
        let params = ChannelParams::new(0.05, loss, seed).unwrap();
        ChannelSet::new(&initial, 2, &params).unwrap()
    }

    #[test]
    fn fabric_shape_follows_predecessor_rule() {
        let set = table_set(0.0, 0);
        assert_eq!(set.r_of(1).unwrap(), 1);
        assert_eq!(set.r_of(2).unwrap(), 2);
        assert_eq!(set.r_of(3).unwrap(), 2);
        assert!(set.r_of(0).is_err());
        assert!(set.r_of(4).is_err());
    }

    #[test]
    fn lossless_snapshot_ages_consistently() {
        let mut set = table_set(0.0, 0);
        for j in 0..=10usize {
            let t = j as f64 * 0.01;
            let states: Vec<_> = (0..4).map(|i| state(t * 100.0 + i as f64)).collect();
            set.publish_all(t, &states).unwrap();
        }
        // At t = 0.10 a 0.05 delay shows every source at its t = 0.05 value.
        let snap = set.snapshot_for(2, 0.10).unwrap();
        assert_eq!(snap.own.p, 5.0 + 2.0);
        assert_eq!(snap.predecessors[0].p, 5.0 + 1.0);
        assert_eq!(snap.predecessors[1].p, 5.0);
    }

    #[test]
    fn total_loss_freezes_initial_snapshot() {
        let mut set = table_set(1.0, 9);
        for j in 0..=50usize {
            let t = j as f64 * 0.01;
            let states: Vec<_> = (0..4).map(|i| state(1000.0 + t + i as f64)).collect();
            set.publish_all(t, &states).unwrap();
        }
        let snap = set.snapshot_for(3, 0.5).unwrap();
        assert_eq!(snap.own.p, -1.8);
        assert_eq!(snap.predecessors[0].p, -1.2);
        assert_eq!(snap.predecessors[1].p, -0.6);
    }

    #[test]
    fn loss_pattern_is_deterministic_per_seed() {
        let run = |seed: u64| {
            let mut set = table_set(0.5, seed);
            for j in 0..=200usize {
                let t = j as f64 * 0.01;
                let states: Vec<_> = (0..4).map(|i| state(t + i as f64)).collect();
                set.publish_all(t, &states).unwrap();
            }
            set
        };
        let a = run(42);
        let b = run(42);
        let c = run(43);
        // Unpruned tails match exactly between identical seeds.
        assert_eq!(
            a.delivered_timestamps(2, 1).unwrap(),
            b.delivered_timestamps(2, 1).unwrap()
        );
        assert_eq!(
            a.delivered_timestamps(3, 3).unwrap(),
            b.delivered_timestamps(3, 3).unwrap()
        );
        assert_ne!(
            a.delivered_timestamps(2, 1).unwrap(),
            c.delivered_timestamps(2, 1).unwrap()
        );
    }

    #[test]
    fn distinct_links_draw_distinct_streams() {
        // Long horizon keeps full delivery history, so stream reuse would show as
        // identical delivered-timestamp sequences across links.
        let initial: Vec<_> = (0..4).map(|i| state(-(i as f64) * 0.6)).collect();
        let params = ChannelParams::new(1e6, 0.5, 42).unwrap();
        let mut set = ChannelSet::new(&initial, 2, &params).unwrap();
        for j in 0..=400usize {
            let t = j as f64 * 0.01;
            let states: Vec<_> = (0..4).map(|i| state(t + i as f64)).collect();
            set.publish_all(t, &states).unwrap();
        }
        let tails: Vec<_> = [(1, 0), (2, 1), (3, 2), (2, 2), (3, 3)]
            .iter()
            .map(|(r, s)| set.delivered_timestamps(*r, *s).unwrap())
            .collect();
        for i in 0..tails.len() {
            for j in (i + 1)..tails.len() {
                assert_ne!(tails[i], tails[j], "links {i} and {j} share a stream");
            }
        }
    }

    #[test]
    fn loss_rate_tracks_probability() {
        let initial = [state(0.0), state(-0.6)];
        // Long horizon so nothing is pruned and the delivered count is exact.
        let params = ChannelParams::new(1e6, 0.3, 1234).unwrap();
        let mut set = ChannelSet::new(&initial, 1, &params).unwrap();
        let n = 5000usize;
        for j in 0..n {
            let t = j as f64 * 0.01;
            set.publish_all(t, &[state(t), state(t - 0.6)]).unwrap();
        }
        let kept = set.delivered_timestamps(1, 0).unwrap().len() as f64;
        let rate = 1.0 - kept / n as f64;
        assert!((rate - 0.3).abs() < 0.03, "observed loss rate {rate}");
    }
}
