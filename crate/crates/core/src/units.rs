//! Power and gain quantities in logarithmic and linear form.
//!
//! Powers are carried in dBm / mW, gains (and attenuations) in dB / linear
//! ratio. Link-budget sums happen in the linear domain only; the dB types
//! exist at configuration and reporting boundaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Power level in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(pub f64);

/// Power in milliwatts. Zero is a silent node.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerLinear(pub f64);

/// Gain (or attenuation, when used as a pathloss) in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainDb(pub f64);

/// Dimensionless linear gain ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainLinear(pub f64);

/// `10^(x/10)`. Rejects NaN and infinities.
pub fn db_to_linear(x: GainDb) -> Result<GainLinear, UnitsError> {
    if !x.0.is_finite() {
        return Err(UnitsError::InvalidArgument(format!(
            "dB value must be finite, got {}",
            x.0
        )));
    }
    Ok(GainLinear(10f64.powf(x.0 / 10.0)))
}

/// `10·log10(x)`. Zero maps to `-inf` (a documented sentinel, not an error);
/// negative or NaN inputs are rejected.
pub fn linear_to_db(x: GainLinear) -> Result<GainDb, UnitsError> {
    if x.0.is_nan() || x.0 < 0.0 {
        return Err(UnitsError::InvalidArgument(format!(
            "linear value must be non-negative, got {}",
            x.0
        )));
    }
    Ok(GainDb(10.0 * x.0.log10()))
}

/// Thermal noise over `bandwidth_hz` raised by the receiver noise figure:
/// `density + 10·log10(bandwidth) + nf`.
pub fn noise_power_per_prb(
    density_dbm_per_hz: PowerDbm,
    bandwidth_hz: f64,
    noise_figure: GainDb,
) -> Result<PowerDbm, UnitsError> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(UnitsError::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    Ok(PowerDbm(
        density_dbm_per_hz.0 + 10.0 * bandwidth_hz.log10() + noise_figure.0,
    ))
}

impl PowerDbm {
    pub fn to_linear(self) -> Result<PowerLinear, UnitsError> {
        db_to_linear(GainDb(self.0)).map(|g| PowerLinear(g.0))
    }
}

impl PowerLinear {
    pub fn to_dbm(self) -> Result<PowerDbm, UnitsError> {
        linear_to_db(GainLinear(self.0)).map(|g| PowerDbm(g.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl GainDb {
    pub fn to_linear(self) -> Result<GainLinear, UnitsError> {
        db_to_linear(self)
    }
}

impl GainLinear {
    pub fn to_db(self) -> Result<GainDb, UnitsError> {
        linear_to_db(self)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Infallible `10·log10` for reporting paths where the argument is known to
/// be a positive power ratio.
pub(crate) fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub(crate) fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}
