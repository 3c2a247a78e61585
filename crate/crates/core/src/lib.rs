//! Simulation and stability analysis for longitudinal vehicle platoons in which every
//! follower regulates against several predecessors over a delayed broadcast channel.
//!
//! The crate is organized bottom-up:
//!
//! - [`dynamics`]: single-vehicle longitudinal model (double integrator + actuator lag)
//! - [`control`]: constant-time-headway spacing and the multi-predecessor feedback law
//! - [`comms`]: per-link delayed state channels with optional packet loss
//! - [`stability`]: internal-stability checks, string-stability conditions, transfer
//!   magnitudes, worst-case gain search, headway bounds, and parameter-region sweeps
//! - [`scenario`]: leader maneuver profile, closed-loop platoon runs, and error metrics
//!
//! All numerics are generic over [`scalar::Scalar`] (`f32` or `f64`); the `*64` aliases
//! at the crate root pin the common `f64` instantiations.

pub mod comms;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod scalar;
pub mod scenario;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Scalar;

// --- f64 instantiations -----------------------------------------------------

pub type VehicleParams64 = dynamics::VehicleParams<f64>;
pub type VehicleState64 = dynamics::VehicleState<f64>;
pub type SpacingPolicy64 = control::SpacingPolicy<f64>;
pub type Gains64 = control::Gains<f64>;
pub type NeighborSnapshot64 = control::NeighborSnapshot<f64>;
pub type ChannelParams64 = comms::ChannelParams<f64>;
pub type HistoryBuffer64 = comms::HistoryBuffer<f64>;
pub type ChannelSet64 = comms::ChannelSet<f64>;
pub type PlatoonParams64 = stability::PlatoonParams<f64>;
pub type StabilityReport64 = stability::StabilityReport<f64>;
pub type FrequencyResponse64 = stability::FrequencyResponse<f64>;
pub type SweepSpec64 = stability::SweepSpec<f64>;
pub type RegionPoint64 = stability::RegionPoint<f64>;
pub type LeaderProfile64 = scenario::LeaderProfile<f64>;
pub type ScenarioConfig64 = scenario::ScenarioConfig<f64>;
pub type TrajectoryLog64 = scenario::TrajectoryLog<f64>;
pub type MetricsSummary64 = scenario::MetricsSummary<f64>;
