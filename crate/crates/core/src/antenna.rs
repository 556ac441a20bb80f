//! Uniform rectangular array model with the 3GPP directional element
//! pattern and a 2-D DFT beam codebook.
//!
//! Panel-local frame: x along boresight, y horizontal (left of boresight),
//! z up. Rows are numbered top to bottom, so a positive elevation DFT index
//! steers the beam below boresight. Columns run along +y.

use crate::scenario::{Direction, PanelOrientation};
use crate::units::GainDb;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// 3 dB beamwidth of the element pattern, horizontal and vertical.
pub const ELEMENT_HPBW_DEG: f64 = 65.0;
/// Front-to-back ratio `A_max` of the element pattern.
pub const ELEMENT_MAX_ATTENUATION_DB: f64 = 30.0;
/// Vertical side-lobe limit `SLA_V` of the element pattern.
pub const ELEMENT_SLA_V_DB: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AntennaError {
    #[error("beam {index} out of range for a codebook of {size} beams")]
    BeamOutOfRange { index: usize, size: usize },
    #[error("invalid array configuration: {0}")]
    InvalidConfig(String),
    #[error("codebook was built for a {book_rows}x{book_cols} array, not {rows}x{cols}")]
    CodebookMismatch {
        book_rows: usize,
        book_cols: usize,
        rows: usize,
        cols: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPattern {
    /// Parabolic az/el pattern of TR 38.901 Table 7.3-1.
    Directional,
    /// Flat pattern; gain equals the peak in every direction.
    Omni,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub max_element_gain: GainDb,
    pub pattern: ElementPattern,
    pub boresight: PanelOrientation,
}

impl ArrayConfig {
    /// 8x8 half-wavelength URA with 8 dBi directional elements.
    pub fn ura_8x8(boresight: PanelOrientation) -> Self {
        Self {
            rows: 8,
            cols: 8,
            element_spacing: 0.5,
            max_element_gain: GainDb(8.0),
            pattern: ElementPattern::Directional,
            boresight,
        }
    }

    /// Single omnidirectional element.
    pub fn omni(gain: GainDb) -> Self {
        Self {
            rows: 1,
            cols: 1,
            element_spacing: 0.5,
            max_element_gain: gain,
            pattern: ElementPattern::Omni,
            boresight: PanelOrientation::new(0.0, 0.0),
        }
    }

    pub fn with_boresight(mut self, boresight: PanelOrientation) -> Self {
        self.boresight = boresight;
        self
    }

    pub fn validate(&self) -> Result<(), AntennaError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(AntennaError::InvalidConfig(format!(
                "rows and cols must be at least 1, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(AntennaError::InvalidConfig(format!(
                "element spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        if !self.max_element_gain.0.is_finite() {
            return Err(AntennaError::InvalidConfig(
                "max element gain must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Peak gain of any beam: element peak plus full coherent array gain.
    pub fn peak_gain(&self) -> GainDb {
        GainDb(self.max_element_gain.0 + 10.0 * (self.num_elements() as f64).log10())
    }

    /// Direction cosines of `direction` in the panel frame.
    pub fn to_local(&self, direction: Direction) -> [f64; 3] {
        let d = direction.unit_vector();
        let b = self.boresight.boresight().unit_vector();
        let (sa, ca) = self.boresight.bearing.sin_cos();
        let h = [-sa, ca, 0.0];
        let up = [
            b[1] * h[2] - b[2] * h[1],
            b[2] * h[0] - b[0] * h[2],
            b[0] * h[1] - b[1] * h[0],
        ];
        let dot = |a: [f64; 3], c: [f64; 3]| a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
        [dot(d, b), dot(d, h), dot(d, up)]
    }

    /// Inverse of [`to_local`](Self::to_local) for a local direction given
    /// as (azimuth, elevation) in radians.
    pub fn to_global(&self, local_azimuth: f64, local_elevation: f64) -> Direction {
        let l = Direction::new(local_azimuth, local_elevation).unit_vector();
        let b = self.boresight.boresight().unit_vector();
        let (sa, ca) = self.boresight.bearing.sin_cos();
        let h = [-sa, ca, 0.0];
        let up = [
            b[1] * h[2] - b[2] * h[1],
            b[2] * h[0] - b[0] * h[2],
            b[0] * h[1] - b[1] * h[0],
        ];
        let g = [
            l[0] * b[0] + l[1] * h[0] + l[2] * up[0],
            l[0] * b[1] + l[1] * h[1] + l[2] * up[1],
            l[0] * b[2] + l[1] * h[2] + l[2] * up[2],
        ];
        Direction::new(g[1].atan2(g[0]), g[2].clamp(-1.0, 1.0).asin())
    }
}

/// Element gain toward `direction` (global frame).
pub fn element_gain(cfg: &ArrayConfig, direction: Direction) -> GainDb {
    match cfg.pattern {
        ElementPattern::Omni => cfg.max_element_gain,
        ElementPattern::Directional => {
            let [x, y, z] = cfg.to_local(direction);
            let az = y.atan2(x).to_degrees();
            let el = z.clamp(-1.0, 1.0).asin().to_degrees();
            GainDb(cfg.max_element_gain.0 + element_attenuation_db(az, el))
        }
    }
}

/// Relative element pattern in dB (<= 0) for panel-local azimuth and
/// elevation in degrees.
pub fn element_attenuation_db(azimuth_deg: f64, elevation_deg: f64) -> f64 {
    let vertical = -(12.0 * (elevation_deg / ELEMENT_HPBW_DEG).powi(2)).min(ELEMENT_SLA_V_DB);
    let horizontal =
        -(12.0 * (azimuth_deg / ELEMENT_HPBW_DEG).powi(2)).min(ELEMENT_MAX_ATTENUATION_DB);
    -(-(vertical + horizontal)).min(ELEMENT_MAX_ATTENUATION_DB)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    /// Elevation DFT bin, `0..rows*os_el`.
    pub elevation_index: usize,
    /// Azimuth DFT bin, `0..cols*os_az`.
    pub azimuth_index: usize,
    /// Unit-norm weights, row-major (`row * cols + col`).
    pub weights: Vec<Complex64>,
    /// Steering point in panel-local sine space: (y, downward z).
    pub steering: (f64, f64),
}

impl Beam {
    /// Panel-local (azimuth, elevation) the beam steers to, if that point of
    /// sine space is a real direction in front of the panel.
    pub fn steering_angles(&self) -> Option<(f64, f64)> {
        let (y, down) = self.steering;
        let z = -down;
        let rem = 1.0 - y * y - z * z;
        if rem <= 0.0 {
            return None;
        }
        let x = rem.sqrt();
        Some((y.atan2(x), z.asin()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamCodebook {
    pub rows: usize,
    pub cols: usize,
    pub oversampling: (usize, usize),
    beams: Vec<Beam>,
}

impl BeamCodebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    pub fn beam(&self, id: BeamId) -> Result<&Beam, AntennaError> {
        self.beams.get(id.0).ok_or(AntennaError::BeamOutOfRange {
            index: id.0,
            size: self.beams.len(),
        })
    }
}

fn signed_bin(index: usize, bins: usize) -> f64 {
    if 2 * index < bins {
        index as f64
    } else {
        index as f64 - bins as f64
    }
}

/// Builds the 2-D DFT codebook. Beams are ordered elevation-major:
/// `id = elevation_index * (cols * os_az) + azimuth_index`, with bin 0 the
/// boresight beam in both dimensions.
pub fn build_dft_codebook(
    cfg: &ArrayConfig,
    oversampling: (usize, usize),
) -> Result<BeamCodebook, AntennaError> {
    cfg.validate()?;
    let (os_az, os_el) = oversampling;
    if os_az == 0 || os_el == 0 {
        return Err(AntennaError::InvalidConfig(format!(
            "oversampling must be at least (1,1), got ({os_az},{os_el})"
        )));
    }
    let (rows, cols) = (cfg.rows, cfg.cols);
    let az_bins = cols * os_az;
    let el_bins = rows * os_el;
    let norm = 1.0 / ((rows * cols) as f64).sqrt();
    let mut beams = Vec::with_capacity(az_bins * el_bins);
    for q in 0..el_bins {
        let q_s = signed_bin(q, el_bins);
        for p in 0..az_bins {
            let p_s = signed_bin(p, az_bins);
            let mut weights = Vec::with_capacity(rows * cols);
            for m in 0..rows {
                for n in 0..cols {
                    let phase = -2.0
                        * PI
                        * (n as f64 * p_s / az_bins as f64 + m as f64 * q_s / el_bins as f64);
                    weights.push(Complex64::from_polar(norm, phase));
                }
            }
            beams.push(Beam {
                elevation_index: q,
                azimuth_index: p,
                weights,
                steering: (
                    p_s / (az_bins as f64 * cfg.element_spacing),
                    q_s / (el_bins as f64 * cfg.element_spacing),
                ),
            });
        }
    }
    Ok(BeamCodebook {
        rows,
        cols,
        oversampling,
        beams,
    })
}

/// `|sum_e w_e a_e(direction)|^2`, the coherent array power gain of `beam`.
pub fn array_power_gain(cfg: &ArrayConfig, beam: &Beam, direction: Direction) -> f64 {
    let [_, y, z] = cfg.to_local(direction);
    let k = 2.0 * PI * cfg.element_spacing;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..cfg.rows {
        for n in 0..cfg.cols {
            let phase = k * (n as f64 * y - m as f64 * z);
            acc += beam.weights[m * cfg.cols + n] * Complex64::from_polar(1.0, phase);
        }
    }
    acc.norm_sqr()
}

fn check_book(cfg: &ArrayConfig, book: &BeamCodebook) -> Result<(), AntennaError> {
    if cfg.rows != book.rows || cfg.cols != book.cols {
        return Err(AntennaError::CodebookMismatch {
            book_rows: book.rows,
            book_cols: book.cols,
            rows: cfg.rows,
            cols: cfg.cols,
        });
    }
    Ok(())
}

/// Element gain plus array gain of `beam` toward `direction`.
pub fn beam_gain(
    cfg: &ArrayConfig,
    book: &BeamCodebook,
    beam: BeamId,
    direction: Direction,
) -> Result<GainDb, AntennaError> {
    check_book(cfg, book)?;
    let b = book.beam(beam)?;
    let af = array_power_gain(cfg, b, direction);
    Ok(GainDb(element_gain(cfg, direction).0 + 10.0 * af.log10()))
}

/// Exhaustive search for the beam with the largest gain toward `target`;
/// the lowest index wins ties.
pub fn select_best_beam(
    cfg: &ArrayConfig,
    book: &BeamCodebook,
    target: Direction,
) -> Result<BeamId, AntennaError> {
    check_book(cfg, book)?;
    let mut best = (BeamId(0), f64::NEG_INFINITY);
    for (i, b) in book.beams.iter().enumerate() {
        let g = array_power_gain(cfg, b, target);
        if g > best.1 {
            best = (BeamId(i), g);
        }
    }
    Ok(best.0)
}
