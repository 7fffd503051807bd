//! Experiment configuration: a preset filled in with whatever the JSON file
//! overrides, then validated field by field.
//!
//! Fields missing from the file take the preset value. A field that is
//! present but malformed or out of range is an error naming its path; it
//! never falls back to the preset.

use std::fmt;
use std::path::Path;

use risae_core::attack::{AttackBudget, PgdConfig, PsrReference};
use risae_core::autoencoder::{AttackChannel, Preset, SystemConfig, TrainConfig};
use risae_core::channel::ArrayGeometry;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

/// The four benchmarks of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Secured,
    Jamming,
    Rmaef,
    Rmaep,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [Self::Secured, Self::Jamming, Self::Rmaef, Self::Rmaep];

    pub fn name(self) -> &'static str {
        match self {
            Self::Secured => "secured",
            Self::Jamming => "jamming",
            Self::Rmaef => "rmaef",
            Self::Rmaep => "rmaep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn channel_name(c: AttackChannel) -> &'static str {
    match c {
        AttackChannel::Ideal => "ideal",
        AttackChannel::DoubleScattering => "double_scattering",
    }
}

pub fn parse_channel(s: &str) -> Option<AttackChannel> {
    match s {
        "ideal" => Some(AttackChannel::Ideal),
        "double_scattering" => Some(AttackChannel::DoubleScattering),
        _ => None,
    }
}

/// Node placement in meters. Recorded with the results; the channel gains
/// are normalized, so these do not enter the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Encoder to RIS 1.
    pub d1_m: f64,
    /// RIS 1 to RIS 2.
    pub d2_m: f64,
    /// Height of encoder and surfaces above the decoder.
    pub dh_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSettings {
    pub psr_db: f64,
    pub psr_reference: PsrReference,
    pub pgd: PgdConfig,
}

impl AttackSettings {
    pub fn budget(&self) -> AttackBudget {
        AttackBudget {
            psr_db: self.psr_db,
            reference: self.psr_reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    /// Evaluation SNR grid in dB, strictly increasing.
    pub snr_db: Vec<f64>,
    pub attacks: Vec<AttackKind>,
    /// Scatterer counts the trained system is evaluated under.
    pub scatterers: Vec<usize>,
    pub attack_channels: Vec<AttackChannel>,
    /// Test blocks per cell.
    pub test_blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seed: u64,
    pub system: SystemConfig,
    pub geometry: Geometry,
    pub training: TrainConfig,
    pub attack: AttackSettings,
    pub sweep: SweepSettings,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (training, snr_db, test_blocks) = match preset {
            Preset::Desk => (TrainConfig::desk(), vec![-4.0, 0.0, 4.0, 8.0], 2000),
            Preset::Paper => (
                TrainConfig::paper(),
                vec![-8.0, -4.0, 0.0, 4.0, 8.0],
                10_000,
            ),
        };
        Self {
            preset,
            seed: 2024,
            system: SystemConfig::preset(preset),
            geometry: Geometry {
                d1_m: 100.0,
                d2_m: 200.0,
                dh_m: 2.0,
            },
            training,
            attack: AttackSettings {
                psr_db: -7.0,
                psr_reference: PsrReference::default(),
                pgd: PgdConfig::default(),
            },
            sweep: SweepSettings {
                snr_db,
                attacks: AttackKind::ALL.to_vec(),
                scatterers: vec![3, 5, 9],
                attack_channels: vec![AttackChannel::Ideal, AttackChannel::DoubleScattering],
                test_blocks,
            },
        }
    }

    /// Overlays `overrides` (a JSON object, possibly partial) on the preset
    /// and validates the result. The preset comes from `preset` if given,
    /// else from the document's own `preset` field, else desk.
    pub fn from_json(overrides: &Value, preset: Option<Preset>) -> Result<Self> {
        if !overrides.is_object() {
            return Err(HarnessError::config("<root>", "expected a JSON object"));
        }
        let preset = match preset {
            Some(p) => p,
            None => match overrides.get("preset") {
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|e| HarnessError::config("preset", e.to_string()))?,
                None => Preset::Desk,
            },
        };
        let mut merged = serde_json::to_value(Self::preset(preset)).expect("config serializes");
        let mut overrides = overrides.clone();
        if let Some(obj) = overrides.as_object_mut() {
            obj.insert(
                "preset".into(),
                serde_json::to_value(preset).expect("preset serializes"),
            );
        }
        reject_unknown(&overrides, &merged, "")?;
        merge(&mut merged, &overrides);
        let cfg: Self = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_str(text: &str, preset: Option<Preset>) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| HarnessError::config("<root>", format!("not valid JSON: {e}")))?;
        Self::from_json(&v, preset)
    }

    pub fn load(path: &Path, preset: Option<Preset>) -> Result<Self> {
        let bytes = crate::error::read(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| HarnessError::config("<root>", "config file is not UTF-8"))?;
        Self::from_str(&text, preset)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        validate_system(&self.system)?;
        for (name, d) in [
            ("d1_m", self.geometry.d1_m),
            ("d2_m", self.geometry.d2_m),
            ("dh_m", self.geometry.dh_m),
        ] {
            positive(&format!("geometry.{name}"), d)?;
        }
        self.training
            .validate()
            .map_err(|e| core_field("training", e))?;
        finite("attack.psr_db", self.attack.psr_db)?;
        self.attack
            .pgd
            .validate()
            .map_err(|e| core_field("attack.pgd", e))?;

        let s = &self.sweep;
        if s.snr_db.is_empty() {
            return Err(HarnessError::config("sweep.snr_db", "must not be empty"));
        }
        for (i, v) in s.snr_db.iter().enumerate() {
            finite(&format!("sweep.snr_db[{i}]"), *v)?;
            if i > 0 && *v <= s.snr_db[i - 1] {
                return Err(HarnessError::config(
                    format!("sweep.snr_db[{i}]"),
                    "the grid must be strictly increasing",
                ));
            }
        }
        if s.attacks.is_empty() {
            return Err(HarnessError::config("sweep.attacks", "must not be empty"));
        }
        for (i, a) in s.attacks.iter().enumerate() {
            if s.attacks[..i].contains(a) {
                return Err(HarnessError::config(
                    format!("sweep.attacks[{i}]"),
                    "duplicate",
                ));
            }
        }
        if s.scatterers.is_empty() {
            return Err(HarnessError::config(
                "sweep.scatterers",
                "must not be empty",
            ));
        }
        for (i, &n) in s.scatterers.iter().enumerate() {
            if n == 0 {
                return Err(HarnessError::config(
                    format!("sweep.scatterers[{i}]"),
                    "must be at least 1",
                ));
            }
            if s.scatterers[..i].contains(&n) {
                return Err(HarnessError::config(
                    format!("sweep.scatterers[{i}]"),
                    "duplicate",
                ));
            }
        }
        if s.attack_channels.is_empty() {
            return Err(HarnessError::config(
                "sweep.attack_channels",
                "must not be empty",
            ));
        }
        for (i, c) in s.attack_channels.iter().enumerate() {
            if s.attack_channels[..i].contains(c) {
                return Err(HarnessError::config(
                    format!("sweep.attack_channels[{i}]"),
                    "duplicate",
                ));
            }
        }
        if s.test_blocks == 0 {
            return Err(HarnessError::config(
                "sweep.test_blocks",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

fn core_field(prefix: &str, e: impl Into<CoreInvalid>) -> HarnessError {
    match e.into() {
        CoreInvalid::Field(field, reason) => {
            HarnessError::config(format!("{prefix}.{field}"), reason)
        }
        CoreInvalid::Other(msg) => HarnessError::config(prefix, msg),
    }
}

enum CoreInvalid {
    Field(&'static str, &'static str),
    Other(String),
}

impl From<risae_core::autoencoder::AutoencoderError> for CoreInvalid {
    fn from(e: risae_core::autoencoder::AutoencoderError) -> Self {
        match e {
            risae_core::autoencoder::AutoencoderError::InvalidConfig { field, reason } => {
                Self::Field(field, reason)
            }
            other => Self::Other(other.to_string()),
        }
    }
}

impl From<risae_core::attack::AttackError> for CoreInvalid {
    fn from(e: risae_core::attack::AttackError) -> Self {
        match e {
            risae_core::attack::AttackError::InvalidConfig { field, reason } => {
                Self::Field(field, reason)
            }
            other => Self::Other(other.to_string()),
        }
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::config(path, "must be finite"))
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::config(path, "must be positive and finite"))
    }
}

fn validate_geometry(path: &str, g: &ArrayGeometry) -> Result<()> {
    if g.count_v == 0 {
        return Err(HarnessError::config(
            format!("{path}.count_v"),
            "must be at least 1",
        ));
    }
    if g.count_h == 0 {
        return Err(HarnessError::config(
            format!("{path}.count_h"),
            "must be at least 1",
        ));
    }
    if g.kind == risae_core::channel::ArrayKind::Ula && g.count_v != 1 {
        return Err(HarnessError::config(
            format!("{path}.count_v"),
            "a ULA has exactly one row",
        ));
    }
    positive(&format!("{path}.spacing_v"), g.spacing_v)?;
    positive(&format!("{path}.spacing_h"), g.spacing_h)
}

fn validate_system(s: &SystemConfig) -> Result<()> {
    let c = &s.channel;
    for (name, g) in [
        ("encoder", &c.encoder),
        ("decoder", &c.decoder),
        ("ris1", &c.ris1),
        ("ris2", &c.ris2),
        ("adversary", &c.adversary),
    ] {
        validate_geometry(&format!("system.channel.{name}"), g)?;
    }
    let sc = &c.scattering;
    if sc.num_scatterers == 0 {
        return Err(HarnessError::config(
            "system.channel.scattering.num_scatterers",
            "must be at least 1",
        ));
    }
    for (name, v) in [
        ("spread_tx", sc.spread_tx),
        ("spread_ris", sc.spread_ris),
        ("spread_sc", sc.spread_sc),
    ] {
        if !(v > 0.0 && v <= std::f64::consts::PI) {
            return Err(HarnessError::config(
                format!("system.channel.scattering.{name}"),
                "must lie in (0, pi]",
            ));
        }
    }
    positive(
        "system.channel.scattering.scatterer_spacing",
        sc.scatterer_spacing,
    )?;
    for (name, v) in [
        ("kappa", c.kappa),
        ("omega", c.omega),
        ("adversary_omega", c.adversary_omega),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(HarnessError::config(
                format!("system.channel.{name}"),
                "must be nonnegative and finite",
            ));
        }
    }
    if s.messages < 2 {
        return Err(HarnessError::config(
            "system.messages",
            "must be at least 2",
        ));
    }
    if s.block_len == 0 {
        return Err(HarnessError::config(
            "system.block_len",
            "must be at least 1",
        ));
    }
    positive("system.power", s.power)?;
    positive("system.sigma2", s.sigma2)?;
    if s.hidden == 0 {
        return Err(HarnessError::config("system.hidden", "must be at least 1"));
    }
    // anything the checks above missed still gets reported
    s.validate().map_err(|e| core_field("system", e))
}

/// Errors on object keys of `user` that the full config does not have.
fn reject_unknown(user: &Value, full: &Value, path: &str) -> Result<()> {
    if let (Value::Object(u), Value::Object(f)) = (user, full) {
        for (k, v) in u {
            let here = if path.is_empty() {
                k.clone()
            } else {
                format!("{path}.{k}")
            };
            match f.get(k) {
                None => return Err(HarnessError::config(here, "unknown field")),
                Some(inner) => reject_unknown(v, inner, &here)?,
            }
        }
    }
    Ok(())
}

/// Recursive object merge; non-object values in `over` replace.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
