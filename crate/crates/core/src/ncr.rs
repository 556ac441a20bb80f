//! Amplify-and-forward model of the repeater's forwarding unit.
//!
//! The repeater amplifies everything it receives on a PRB (donor signal,
//! co-channel interference and its own thermal noise) with a single gain and
//! clips the result at a per-PRB power cap. With dynamic gain the cap is hit
//! exactly on every PRB; a fixed gain saturates whenever
//! `gain * input > cap`, at which point it behaves like the dynamic gain.

use crate::units::{GainDb, GainLinear, PowerDbm, PowerLinear, UnitsError};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NcrError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid gain mode: {0}")]
    InvalidMode(String),
    #[error(transparent)]
    Units(#[from] UnitsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NcrGainMode {
    /// Gain re-computed per PRB so the output sits at the power cap.
    Dynamic,
    /// Constant amplification, clipped at the cap.
    Fixed { gain_db: f64 },
    /// Repeater switched off: zero gain, nothing forwarded.
    Off,
}

impl NcrGainMode {
    pub fn label(&self) -> &'static str {
        match self {
            NcrGainMode::Dynamic => "dynamic",
            NcrGainMode::Fixed { .. } => "fixed",
            NcrGainMode::Off => "off",
        }
    }

    pub fn fixed_gain_db(&self) -> Option<f64> {
        match self {
            NcrGainMode::Fixed { gain_db } => Some(*gain_db),
            _ => None,
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, NcrGainMode::Off)
    }

    pub fn validate(&self) -> Result<(), NcrError> {
        match self {
            NcrGainMode::Fixed { gain_db } if !gain_db.is_finite() => Err(NcrError::InvalidMode(
                format!("fixed gain must be finite, got {gain_db}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NcrGainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NcrGainMode::Fixed { gain_db } => write!(f, "fixed:{gain_db}"),
            other => f.write_str(other.label()),
        }
    }
}

/// Per-drop repeater configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcrState {
    pub mode: NcrGainMode,
    /// Per-PRB transmit power cap, mW.
    pub p_max_per_prb: PowerLinear,
    fixed_gain: GainLinear,
}

/// Result of forwarding one PRB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forwarded {
    /// Transmit power on the PRB.
    pub power: PowerLinear,
    /// Effective amplification applied to every input component.
    pub applied_gain: GainLinear,
    pub saturated: bool,
}

impl NcrState {
    pub fn new(mode: NcrGainMode, p_max_per_prb: PowerLinear) -> Result<Self, NcrError> {
        mode.validate()?;
        if !(p_max_per_prb.0 >= 0.0 && p_max_per_prb.0.is_finite()) {
            return Err(NcrError::InvalidMode(format!(
                "power cap must be finite and non-negative, got {} mW",
                p_max_per_prb.0
            )));
        }
        let fixed_gain = match mode {
            NcrGainMode::Fixed { gain_db } => GainDb(gain_db).to_linear()?,
            _ => GainLinear(0.0),
        };
        Ok(Self {
            mode,
            p_max_per_prb,
            fixed_gain,
        })
    }

    /// State whose cap is a total transmit power split evenly over `n_prb`.
    pub fn from_total_power(
        mode: NcrGainMode,
        total: PowerDbm,
        n_prb: usize,
    ) -> Result<Self, NcrError> {
        let p = total.to_linear()?;
        Self::new(mode, PowerLinear(p.0 / n_prb.max(1) as f64))
    }
}

pub fn total_input_power(
    useful: PowerLinear,
    interference: PowerLinear,
    noise: PowerLinear,
) -> PowerLinear {
    PowerLinear(useful.0 + interference.0 + noise.0)
}

/// `p_max / total_input`. Only the aggregate input is needed, never its parts.
pub fn dynamic_gain(p_max: PowerLinear, total_input: PowerLinear) -> Result<GainLinear, NcrError> {
    if !(total_input.0 > 0.0) {
        return Err(NcrError::DegenerateInput(format!(
            "total input power must be positive to set a dynamic gain, got {} mW",
            total_input.0
        )));
    }
    Ok(GainLinear(p_max.0 / total_input.0))
}

/// `min(p_max, g * total_input)`. A zero input forwards nothing.
pub fn forward_power(state: &NcrState, total_input: PowerLinear) -> Forwarded {
    let p_max = state.p_max_per_prb;
    let off = Forwarded {
        power: PowerLinear(0.0),
        applied_gain: GainLinear(0.0),
        saturated: false,
    };
    match state.mode {
        NcrGainMode::Off => off,
        NcrGainMode::Dynamic => match dynamic_gain(p_max, total_input) {
            Ok(g) => Forwarded {
                power: p_max,
                applied_gain: g,
                saturated: true,
            },
            Err(_) => Forwarded {
                saturated: true,
                ..off
            },
        },
        NcrGainMode::Fixed { .. } => {
            let g = state.fixed_gain;
            let out = g.0 * total_input.0;
            if out > p_max.0 {
                // Same expression as the dynamic branch, so a saturated fixed
                // gain reproduces dynamic-mode results bit for bit.
                let applied = dynamic_gain(p_max, total_input).unwrap_or(GainLinear(0.0));
                Forwarded {
                    power: p_max,
                    applied_gain: applied,
                    saturated: true,
                }
            } else {
                Forwarded {
                    power: PowerLinear(out),
                    applied_gain: g,
                    saturated: false,
                }
            }
        }
    }
}

/// Effective UE noise including the thermal noise the repeater forwards:
/// `p_n * (1 + g_ncr * g_tx_ncr * g_rx_ue / l_ncr_ue)`.
pub fn amplified_noise_at_ue(
    p_n: PowerLinear,
    g_ncr: GainLinear,
    g_tx_ncr: GainLinear,
    g_rx_ue: GainLinear,
    l_ncr_ue: GainLinear,
) -> PowerLinear {
    PowerLinear(p_n.0 * (1.0 + g_ncr.0 * g_tx_ncr.0 * g_rx_ue.0 / l_ncr_ue.0))
}
