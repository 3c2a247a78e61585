//! Config file schema, override application, and the run manifest.
//!
//! The file is TOML with a `schema` version and one section per concern. Unknown
//! keys are rejected. Overrides (`--set key=value`) edit the parsed document
//! before it is deserialized, so they go through exactly the same checks as
//! file contents.

use platoon::comms::ChannelParams;
use platoon::control::{Gains, SpacingPolicy};
use platoon::dynamics::VehicleParams;
use platoon::scenario::{LeaderProfile, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: i64,
    pub platoon: PlatoonSection,
    pub vehicle: VehicleSection,
    pub spacing: SpacingSection,
    pub gains: GainsSection,
    pub channel: ChannelSection,
    pub leader: LeaderSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatoonSection {
    pub n_followers: usize,
    pub r_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub tau: f64,
    #[serde(default)]
    pub v_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingSection {
    pub h: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub kp: f64,
    pub kv: f64,
    pub ka: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub delta: f64,
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSection {
    #[serde(alias = "a0")]
    pub a_step: f64,
    pub t_step: f64,
    pub t_cruise: f64,
    pub a_dist: f64,
    pub omega_0: f64,
    pub t_dist: f64,
    pub a_brake: f64,
    pub t_brake: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_clamp")]
    pub clamp: bool,
}

fn default_clamp() -> bool {
    true
}

impl ConfigFile {
    /// Builds the core scenario configuration; constructor checks surface as
    /// invalid-input errors.
    pub fn to_scenario(&self) -> Result<ScenarioConfig<f64>, CliError> {
        let make = || -> platoon::Result<ScenarioConfig<f64>> {
            Ok(ScenarioConfig {
                n_followers: self.platoon.n_followers,
                r_max: self.platoon.r_max,
                vehicle: VehicleParams::with_floor(self.vehicle.tau, self.vehicle.v_min)?,
                spacing: SpacingPolicy::new(self.spacing.h, self.spacing.d)?,
                gains: Gains::new(self.gains.kp, self.gains.kv, self.gains.ka)?,
                channel: ChannelParams::new(
                    self.channel.delta,
                    self.channel.loss_prob,
                    self.channel.seed,
                )?,
                leader: LeaderProfile {
                    a_step: self.leader.a_step,
                    t_step: self.leader.t_step,
                    t_cruise: self.leader.t_cruise,
                    a_dist: self.leader.a_dist,
                    omega_0: self.leader.omega_0,
                    t_dist: self.leader.t_dist,
                    a_brake: self.leader.a_brake,
                    t_brake: self.leader.t_brake,
                },
                dt: self.sim.dt,
                t_end: self.sim.t_end,
                clamp: self.sim.clamp,
            })
        };
        let config = make().map_err(CliError::from_core)?;
        config.validate().map_err(CliError::from_core)?;
        Ok(config)
    }
}

/// Bare override keys accepted as shorthand for their dotted paths.
const KEY_ALIASES: &[(&str, &str)] = &[
    ("n_followers", "platoon.n_followers"),
    ("r_max", "platoon.r_max"),
    ("tau", "vehicle.tau"),
    ("v_min", "vehicle.v_min"),
    ("h", "spacing.h"),
    ("d", "spacing.d"),
    ("kp", "gains.kp"),
    ("kv", "gains.kv"),
    ("ka", "gains.ka"),
    ("delta", "channel.delta"),
    ("loss_prob", "channel.loss_prob"),
    ("seed", "channel.seed"),
    ("a_step", "leader.a_step"),
    ("a0", "leader.a_step"),
    ("t_step", "leader.t_step"),
    ("t_cruise", "leader.t_cruise"),
    ("a_dist", "leader.a_dist"),
    ("omega_0", "leader.omega_0"),
    ("t_dist", "leader.t_dist"),
    ("a_brake", "leader.a_brake"),
    ("t_brake", "leader.t_brake"),
    ("dt", "sim.dt"),
    ("t_end", "sim.t_end"),
    ("clamp", "sim.clamp"),
];

fn resolve_key(key: &str) -> Result<String, CliError> {
    if key.contains('.') {
        return Ok(key.to_string());
    }
    KEY_ALIASES
        .iter()
        .find(|(short, _)| *short == key)
        .map(|(_, full)| full.to_string())
        .ok_or_else(|| CliError::Invalid(format!("unknown override key {key:?}")))
}

fn parse_value(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

/// Applies `key=value` overrides to the parsed document, returning the resolved
/// dotted forms for the manifest.
pub fn apply_overrides(doc: &mut toml::Table, sets: &[String]) -> Result<Vec<String>, CliError> {
    let mut applied = Vec::with_capacity(sets.len());
    for set in sets {
        let (key, value) = set
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("override {set:?} is not key=value")))?;
        let path = resolve_key(key.trim())?;
        let parsed = parse_value(value.trim());
        let mut table = &mut *doc;
        let segments: Vec<&str> = path.split('.').collect();
        for segment in &segments[..segments.len() - 1] {
            table = table
                .entry(segment.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| {
                    CliError::Invalid(format!("override path {path:?} crosses a non-table key"))
                })?;
        }
        table.insert(segments[segments.len() - 1].to_string(), parsed);
        applied.push(format!("{path}={}", value.trim()));
    }
    Ok(applied)
}

/// Loads, overrides, and type-checks a config file.
pub fn load(
    path: &std::path::Path,
    sets: &[String],
    seed: Option<u64>,
) -> Result<(ConfigFile, Vec<String>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e| CliError::Invalid(format!("config parse error: {e}")))?;
    let mut applied = apply_overrides(&mut doc, sets)?;
    if let Some(seed) = seed {
        let channel = doc
            .entry("channel".to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Invalid("channel section is not a table".into()))?;
        channel.insert("seed".to_string(), toml::Value::Integer(seed as i64));
        applied.push(format!("channel.seed={seed}"));
    }
    let config: ConfigFile = toml::Value::Table(doc)
        .try_into()
        .map_err(|e| CliError::Invalid(format!("config error: {e}")))?;
    if config.schema != SCHEMA_VERSION {
        return Err(CliError::Invalid(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            config.schema
        )));
    }
    Ok((config, applied))
}

/// Serializes the resolved config with a comment header. The body re-parses as a
/// config file; nothing in it varies between identical reruns.
pub fn manifest_string(command: &str, overrides: &[String], config: &ConfigFile) -> String {
    let mut out = String::new();
    out.push_str("# resolved run configuration; the body re-parses as a config file\n");
    out.push_str(&format!("# command: {command}\n"));
    out.push_str(&format!("# tool: platoon {}\n", env!("CARGO_PKG_VERSION")));
    if overrides.is_empty() {
        out.push_str("# overrides: none\n");
    } else {
        out.push_str(&format!("# overrides: {}\n", overrides.join(" ")));
    }
    out.push('\n');
    out.push_str(&toml::to_string_pretty(config).expect("config serializes"));
    out
}
