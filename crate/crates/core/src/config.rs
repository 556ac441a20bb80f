//! Simulation configuration: TOML document, defaults and validation.
//!
//! Every section and field is optional in a file; missing entries take the
//! default study values. Unknown keys are rejected. `validate` reports the
//! first offending field by its dotted path.

use crate::channel::{ChannelParams, LinkClass, ShadowingSigmas};
use crate::mac::{CbrSource, Numerology, OuterLoopParams};
use crate::ncr::NcrGainMode;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub isd: f64,
    pub gnb_ue_distance: f64,
    pub gnb_height: f64,
    pub ncr_height: f64,
    pub ue_height: f64,
    pub ncr_access_downtilt_deg: f64,
    pub allow_override: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            isd: 400.0,
            gnb_ue_distance: 150.0,
            gnb_height: 25.0,
            ncr_height: 10.0,
            ue_height: 1.5,
            ncr_access_downtilt_deg: 0.0,
            allow_override: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_ghz: f64,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers_per_prb: usize,
    pub n_prb: usize,
    pub slot_duration_s: f64,
    pub symbols_per_slot: usize,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            subcarrier_spacing_hz: 60e3,
            subcarriers_per_prb: 12,
            n_prb: 1,
            slot_duration_s: 0.25e-3,
            symbols_per_slot: 14,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
        }
    }
}

impl RadioConfig {
    pub fn numerology(&self) -> Numerology {
        Numerology {
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
            subcarriers_per_prb: self.subcarriers_per_prb,
            symbols_per_slot: self.symbols_per_slot,
            slot_duration_s: self.slot_duration_s,
        }
    }

    pub fn prb_bandwidth_hz(&self) -> f64 {
        self.subcarrier_spacing_hz * self.subcarriers_per_prb as f64
    }
}

/// Total transmit powers, split evenly over the PRBs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub gnb_tx_dbm: f64,
    pub ncr_tx_dbm: f64,
    pub ue_tx_dbm: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            gnb_tx_dbm: 16.8,
            ncr_tx_dbm: 13.8,
            ue_tx_dbm: 5.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    pub rows: usize,
    pub cols: usize,
    /// Wavelengths.
    pub element_spacing: f64,
    pub max_element_gain_db: f64,
    pub ue_gain_db: f64,
    pub oversampling_az: usize,
    pub oversampling_el: usize,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            element_spacing: 0.5,
            max_element_gain_db: 8.0,
            ue_gain_db: 0.0,
            oversampling_az: 1,
            oversampling_el: 1,
        }
    }
}

/// Where B2 points its beam while the repeater is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum B2BeamTarget {
    Ncr,
    Ue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub gnb_ue: LinkClass,
    pub gnb_ncr: LinkClass,
    pub ncr_ue: LinkClass,
    pub shadowing_sigma_db: ShadowingSigmas,
    pub rician_k_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = ChannelParams::default();
        Self {
            gnb_ue: LinkClass::UMA_NLOS,
            gnb_ncr: LinkClass::UMA_NLOS,
            ncr_ue: LinkClass::UMI_LOS,
            shadowing_sigma_db: p.shadowing_sigma_db,
            rician_k_db: p.rician_k_db,
        }
    }
}

impl ChannelConfig {
    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            shadowing_sigma_db: self.shadowing_sigma_db,
            rician_k_db: self.rician_k_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConfig {
    pub cbr_packet_bits: u64,
    pub cbr_period_slots: usize,
    pub outer_loop_step_down_db: f64,
    pub outer_loop_step_up_db: f64,
    pub outer_loop_clamp_db: f64,
    pub outer_loop_initial_db: f64,
    /// Replacement CQI table; the bundled 64QAM table when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cqi_table: Option<String>,
}

impl Default for MacConfig {
    fn default() -> Self {
        let ol = OuterLoopParams::default();
        let cbr = CbrSource::default();
        Self {
            cbr_packet_bits: cbr.packet_bits,
            cbr_period_slots: cbr.period_slots,
            outer_loop_step_down_db: ol.step_down_db,
            outer_loop_step_up_db: ol.step_up_db,
            outer_loop_clamp_db: ol.clamp_db,
            outer_loop_initial_db: ol.initial_offset_db,
            cqi_table: None,
        }
    }
}

impl MacConfig {
    pub fn outer_loop(&self) -> OuterLoopParams {
        OuterLoopParams {
            step_down_db: self.outer_loop_step_down_db,
            step_up_db: self.outer_loop_step_up_db,
            clamp_db: self.outer_loop_clamp_db,
            initial_offset_db: self.outer_loop_initial_db,
        }
    }

    pub fn cbr(&self) -> CbrSource {
        CbrSource {
            packet_bits: self.cbr_packet_bits,
            period_slots: self.cbr_period_slots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Repeater distance from B2, metres.
    pub offsets_m: Vec<f64>,
    pub gain_modes: Vec<NcrGainMode>,
    pub drops: usize,
    pub slots_per_drop: usize,
    pub base_seed: u64,
    pub quantiles: Vec<f64>,
    pub b2_beam_target: B2BeamTarget,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            offsets_m: (0..28).map(|i| 10.0 + 5.0 * i as f64).collect(),
            gain_modes: vec![
                NcrGainMode::Dynamic,
                NcrGainMode::Fixed { gain_db: 70.0 },
                NcrGainMode::Fixed { gain_db: 90.0 },
                NcrGainMode::Off,
            ],
            drops: 50,
            slots_per_drop: 200,
            base_seed: 1,
            quantiles: vec![0.1, 0.9],
            b2_beam_target: B2BeamTarget::Ncr,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub power: PowerConfig,
    pub antenna: AntennaConfig,
    pub channel: ChannelConfig,
    pub mac: MacConfig,
    pub sweep: SweepConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Reads and parses `path`; does not validate.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        positive("scenario.isd", s.isd)?;
        positive("scenario.gnb_ue_distance", s.gnb_ue_distance)?;
        positive("scenario.gnb_height", s.gnb_height)?;
        positive("scenario.ncr_height", s.ncr_height)?;
        positive("scenario.ue_height", s.ue_height)?;
        finite(
            "scenario.ncr_access_downtilt_deg",
            s.ncr_access_downtilt_deg,
        )?;
        if !s.allow_override && s.gnb_ue_distance > s.isd / 2.0 {
            return Err(invalid(
                "scenario.gnb_ue_distance",
                format!(
                    "{} exceeds half of isd ({})",
                    s.gnb_ue_distance,
                    s.isd / 2.0
                ),
            ));
        }

        let r = &self.radio;
        if !(0.5..=100.0).contains(&r.carrier_ghz) {
            return Err(invalid(
                "radio.carrier_ghz",
                format!("must lie in [0.5, 100], got {}", r.carrier_ghz),
            ));
        }
        positive("radio.subcarrier_spacing_hz", r.subcarrier_spacing_hz)?;
        nonzero("radio.subcarriers_per_prb", r.subcarriers_per_prb)?;
        nonzero("radio.n_prb", r.n_prb)?;
        positive("radio.slot_duration_s", r.slot_duration_s)?;
        nonzero("radio.symbols_per_slot", r.symbols_per_slot)?;
        finite("radio.noise_density_dbm_hz", r.noise_density_dbm_hz)?;
        finite("radio.noise_figure_db", r.noise_figure_db)?;

        let p = &self.power;
        finite("power.gnb_tx_dbm", p.gnb_tx_dbm)?;
        finite("power.ncr_tx_dbm", p.ncr_tx_dbm)?;
        finite("power.ue_tx_dbm", p.ue_tx_dbm)?;

        let a = &self.antenna;
        nonzero("antenna.rows", a.rows)?;
        nonzero("antenna.cols", a.cols)?;
        positive("antenna.element_spacing", a.element_spacing)?;
        finite("antenna.max_element_gain_db", a.max_element_gain_db)?;
        finite("antenna.ue_gain_db", a.ue_gain_db)?;
        nonzero("antenna.oversampling_az", a.oversampling_az)?;
        nonzero("antenna.oversampling_el", a.oversampling_el)?;

        let c = &self.channel;
        for (field, v) in [
            (
                "channel.shadowing_sigma_db.uma_los",
                c.shadowing_sigma_db.uma_los,
            ),
            (
                "channel.shadowing_sigma_db.uma_nlos",
                c.shadowing_sigma_db.uma_nlos,
            ),
            (
                "channel.shadowing_sigma_db.umi_los",
                c.shadowing_sigma_db.umi_los,
            ),
            (
                "channel.shadowing_sigma_db.umi_nlos",
                c.shadowing_sigma_db.umi_nlos,
            ),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        if c.rician_k_db.is_nan() || c.rician_k_db == f64::NEG_INFINITY {
            return Err(invalid(
                "channel.rician_k_db",
                format!("must be a number or +inf, got {}", c.rician_k_db),
            ));
        }

        let m = &self.mac;
        nonzero("mac.cbr_period_slots", m.cbr_period_slots)?;
        for (field, v) in [
            ("mac.outer_loop_step_down_db", m.outer_loop_step_down_db),
            ("mac.outer_loop_step_up_db", m.outer_loop_step_up_db),
            ("mac.outer_loop_clamp_db", m.outer_loop_clamp_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        finite("mac.outer_loop_initial_db", m.outer_loop_initial_db)?;
        if let Some(path) = &m.cqi_table {
            if path.is_empty() {
                return Err(invalid("mac.cqi_table", "path must not be empty"));
            }
        }

        let w = &self.sweep;
        if w.offsets_m.is_empty() {
            return Err(invalid(
                "sweep.offsets_m",
                "at least one offset is required",
            ));
        }
        for &o in &w.offsets_m {
            let inside = o > 0.0 && o < s.gnb_ue_distance;
            if !o.is_finite() || (!inside && !s.allow_override) {
                return Err(invalid(
                    "sweep.offsets_m",
                    format!("offset {o} outside (0, {})", s.gnb_ue_distance),
                ));
            }
        }
        if w.gain_modes.is_empty() {
            return Err(invalid(
                "sweep.gain_modes",
                "at least one gain mode is required",
            ));
        }
        for mode in &w.gain_modes {
            mode.validate()
                .map_err(|e| invalid("sweep.gain_modes", e.to_string()))?;
        }
        nonzero("sweep.drops", w.drops)?;
        nonzero("sweep.slots_per_drop", w.slots_per_drop)?;
        if w.quantiles.is_empty() {
            return Err(invalid(
                "sweep.quantiles",
                "at least one quantile is required",
            ));
        }
        for &q in &w.quantiles {
            if !(q > 0.0 && q < 1.0) {
                return Err(invalid("sweep.quantiles", format!("{q} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn nonzero(field: &str, v: usize) -> Result<(), ConfigError> {
    if v > 0 {
        Ok(())
    } else {
        Err(invalid(field, "must be at least 1"))
    }
}
