//! TDD framing, round-robin PRB allocation, CBR traffic and CQI-based link
//! adaptation with an outer loop.
//!
//! The error model is threshold based: a transmission at CQI `c` succeeds
//! iff the SINR it actually experiences reaches the table threshold of `c`.
//! MCS selection uses the previous DL slot's SINR (plus the outer-loop
//! offset), so errors come from slot-to-slot channel variation.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MacError {
    #[error("CQI table line {line}: {reason}")]
    TableParse { line: usize, reason: String },
    #[error("invalid CQI table: {0}")]
    InvalidTable(String),
    #[error("failed to read CQI table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

const STANDARD_TABLE: &str = include_str!("../data/cqi_table_64qam.txt");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqiEntry {
    pub index: u8,
    /// Bits per resource element.
    pub efficiency: f64,
    pub threshold_db: f64,
    pub modulation_order: Option<u8>,
    pub code_rate_x1024: Option<u16>,
}

/// CQI indices 1..=N; index 0 means "no transmission".
#[derive(Debug, Clone, PartialEq)]
pub struct CqiTable {
    entries: Vec<CqiEntry>,
}

impl CqiTable {
    /// The 64QAM table whose top entry carries 5.5547 bits/RE.
    pub fn standard() -> Self {
        Self::parse(STANDARD_TABLE).expect("bundled CQI table is valid")
    }

    /// Parses `index efficiency threshold_db [modulation_order code_rate_x1024]`
    /// lines. `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, MacError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| MacError::TableParse {
                line: n + 1,
                reason,
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 && cols.len() != 5 {
                return Err(err(format!(
                    "expected 3 or 5 columns, found {}",
                    cols.len()
                )));
            }
            let index: u8 = cols[0]
                .parse()
                .map_err(|e| err(format!("bad index `{}`: {e}", cols[0])))?;
            let efficiency: f64 = cols[1]
                .parse()
                .map_err(|e| err(format!("bad efficiency `{}`: {e}", cols[1])))?;
            let threshold_db: f64 = cols[2]
                .parse()
                .map_err(|e| err(format!("bad threshold `{}`: {e}", cols[2])))?;
            let (modulation_order, code_rate_x1024) = if cols.len() == 5 {
                let q: u8 = cols[3]
                    .parse()
                    .map_err(|e| err(format!("bad modulation order `{}`: {e}", cols[3])))?;
                let r: u16 = cols[4]
                    .parse()
                    .map_err(|e| err(format!("bad code rate `{}`: {e}", cols[4])))?;
                (Some(q), Some(r))
            } else {
                (None, None)
            };
            entries.push(CqiEntry {
                index,
                efficiency,
                threshold_db,
                modulation_order,
                code_rate_x1024,
            });
        }
        Self::from_entries(entries)
    }

    pub fn load(path: &Path) -> Result<Self, MacError> {
        let text = fs::read_to_string(path).map_err(|source| MacError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn from_entries(entries: Vec<CqiEntry>) -> Result<Self, MacError> {
        if entries.is_empty() {
            return Err(MacError::InvalidTable("no entries".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.index as usize != i + 1 {
                return Err(MacError::InvalidTable(format!(
                    "indices must run 1, 2, ...; entry {} has index {}",
                    i + 1,
                    e.index
                )));
            }
            if !(e.efficiency > 0.0 && e.efficiency.is_finite() && e.threshold_db.is_finite()) {
                return Err(MacError::InvalidTable(format!(
                    "entry {} must have positive efficiency and finite threshold",
                    e.index
                )));
            }
        }
        for w in entries.windows(2) {
            if w[1].efficiency <= w[0].efficiency {
                return Err(MacError::InvalidTable(format!(
                    "efficiency must increase strictly (CQI {} -> {})",
                    w[0].index, w[1].index
                )));
            }
            if w[1].threshold_db < w[0].threshold_db {
                return Err(MacError::InvalidTable(format!(
                    "thresholds must not decrease (CQI {} -> {})",
                    w[0].index, w[1].index
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CqiEntry] {
        &self.entries
    }

    pub fn max_index(&self) -> u8 {
        self.entries.len() as u8
    }

    fn entry(&self, cqi: u8) -> Option<&CqiEntry> {
        (cqi as usize)
            .checked_sub(1)
            .and_then(|i| self.entries.get(i))
    }

    /// Bits per RE; zero for CQI 0 or an unknown index.
    pub fn efficiency(&self, cqi: u8) -> f64 {
        self.entry(cqi).map_or(0.0, |e| e.efficiency)
    }

    pub fn threshold_db(&self, cqi: u8) -> Option<f64> {
        self.entry(cqi).map(|e| e.threshold_db)
    }
}

/// OFDM numerology of one PRB in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub subcarrier_spacing_hz: f64,
    pub subcarriers_per_prb: usize,
    pub symbols_per_slot: usize,
    pub slot_duration_s: f64,
}

impl Default for Numerology {
    fn default() -> Self {
        Self {
            subcarrier_spacing_hz: 60e3,
            subcarriers_per_prb: 12,
            symbols_per_slot: 14,
            slot_duration_s: 0.25e-3,
        }
    }
}

impl Numerology {
    pub fn prb_bandwidth_hz(&self) -> f64 {
        self.subcarrier_spacing_hz * self.subcarriers_per_prb as f64
    }

    pub fn resource_elements_per_prb(&self) -> usize {
        self.subcarriers_per_prb * self.symbols_per_slot
    }
}

/// `(subcarriers * symbols * efficiency) / (slot duration * PRB bandwidth)`.
pub fn spectral_efficiency(cqi: u8, table: &CqiTable, numerology: &Numerology) -> f64 {
    numerology.resource_elements_per_prb() as f64 * table.efficiency(cqi)
        / (numerology.slot_duration_s * numerology.prb_bandwidth_hz())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotDirection {
    Downlink,
    Uplink,
}

/// Strictly alternating DL/UL slots, slot 0 being DL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TddFrame {
    pub slot_duration_s: f64,
    pub symbols_per_slot: usize,
}

impl TddFrame {
    pub fn direction(&self, slot: usize) -> SlotDirection {
        if slot.is_multiple_of(2) {
            SlotDirection::Downlink
        } else {
            SlotDirection::Uplink
        }
    }

    pub fn is_downlink(&self, slot: usize) -> bool {
        self.direction(slot) == SlotDirection::Downlink
    }

    pub fn downlink_slots(&self, n_slots: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n_slots).filter(move |&s| self.is_downlink(s))
    }
}

/// Round robin over `ues`: PRB `p` of allocation round `round` goes to
/// `ues[(round * prbs + p) % ues.len()]`. Returns `(prb, ue)` pairs.
pub fn schedule_rr<T: Copy>(ues: &[T], prbs: usize, round: usize) -> Vec<(usize, T)> {
    if ues.is_empty() {
        return Vec::new();
    }
    (0..prbs)
        .map(|p| (p, ues[(round * prbs + p) % ues.len()]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterLoopParams {
    pub step_down_db: f64,
    pub step_up_db: f64,
    pub clamp_db: f64,
    pub initial_offset_db: f64,
}

impl Default for OuterLoopParams {
    fn default() -> Self {
        Self {
            step_down_db: 1.0,
            step_up_db: 0.1,
            clamp_db: 20.0,
            initial_offset_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterLoopState {
    pub offset_db: f64,
    params: OuterLoopParams,
}

impl OuterLoopState {
    pub fn new(params: OuterLoopParams) -> Self {
        Self {
            offset_db: params
                .initial_offset_db
                .clamp(-params.clamp_db, params.clamp_db),
            params,
        }
    }

    pub fn params(&self) -> &OuterLoopParams {
        &self.params
    }

    pub fn update(&mut self, outcome: Outcome) {
        let step = match outcome {
            Outcome::Success => self.params.step_up_db,
            Outcome::Error => -self.params.step_down_db,
        };
        self.offset_db = (self.offset_db + step).clamp(-self.params.clamp_db, self.params.clamp_db);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Error,
}

/// Highest CQI whose threshold is <= estimated SINR + offset (inclusive);
/// 0 when none qualifies.
pub fn select_mcs(estimated_sinr_db: f64, outer: &OuterLoopState, table: &CqiTable) -> u8 {
    let adjusted = estimated_sinr_db + outer.offset_db;
    table
        .entries()
        .iter()
        .rev()
        .find(|e| e.threshold_db <= adjusted)
        .map_or(0, |e| e.index)
}

/// Decides success for CQI `chosen` (>= 1) and feeds the result to the
/// outer loop.
pub fn transmission_outcome(
    actual_sinr_db: f64,
    chosen: u8,
    table: &CqiTable,
    outer: &mut OuterLoopState,
) -> Result<Outcome, MacError> {
    let threshold = table
        .threshold_db(chosen)
        .ok_or_else(|| MacError::InvalidArgument(format!("CQI {chosen} is not transmittable")))?;
    let outcome = if actual_sinr_db >= threshold {
        Outcome::Success
    } else {
        Outcome::Error
    };
    outer.update(outcome);
    Ok(outcome)
}

/// Effective SINR (dB) of a multi-PRB allocation: mean of the linear SINRs.
pub fn effective_sinr_db(sinr_linear: &[f64]) -> f64 {
    let mean = sinr_linear.iter().sum::<f64>() / sinr_linear.len() as f64;
    10.0 * mean.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbrSource {
    pub packet_bits: u64,
    /// Arrival period in DL slots.
    pub period_slots: usize,
}

impl Default for CbrSource {
    fn default() -> Self {
        Self {
            packet_bits: 3072,
            period_slots: 1,
        }
    }
}

/// Result of one DL transmission opportunity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotReport {
    pub cqi: u8,
    pub outcome: Option<Outcome>,
    /// Achieved spectral efficiency, zero unless the transmission succeeded.
    pub spectral_efficiency: f64,
    pub delivered_bits: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TrafficStats {
    pub offered_bits: u64,
    pub delivered_bits: u64,
    pub queued_bits: u64,
    pub transmissions: u64,
    pub errors: u64,
}

impl TrafficStats {
    pub fn merge(&mut self, other: &TrafficStats) {
        self.offered_bits += other.offered_bits;
        self.delivered_bits += other.delivered_bits;
        self.queued_bits += other.queued_bits;
        self.transmissions += other.transmissions;
        self.errors += other.errors;
    }

    pub fn error_rate(&self) -> f64 {
        if self.transmissions == 0 {
            0.0
        } else {
            self.errors as f64 / self.transmissions as f64
        }
    }
}

/// Per-UE MAC state inside one drop.
#[derive(Debug, Clone)]
pub struct UeMac {
    outer: OuterLoopState,
    last_sinr_db: Option<f64>,
    source: CbrSource,
    dl_slots_seen: usize,
    pub stats: TrafficStats,
}

impl UeMac {
    pub fn new(params: OuterLoopParams, source: CbrSource) -> Self {
        Self {
            outer: OuterLoopState::new(params),
            last_sinr_db: None,
            source,
            dl_slots_seen: 0,
            stats: TrafficStats::default(),
        }
    }

    pub fn outer_loop(&self) -> &OuterLoopState {
        &self.outer
    }

    /// One DL slot in which the UE holds `n_prb` PRBs and experiences
    /// `actual_sinr_db`. The first slot uses its own SINR as the report.
    pub fn serve(
        &mut self,
        actual_sinr_db: f64,
        n_prb: usize,
        table: &CqiTable,
        numerology: &Numerology,
    ) -> SlotReport {
        if self.dl_slots_seen.is_multiple_of(self.source.period_slots.max(1)) {
            self.stats.offered_bits += self.source.packet_bits;
            self.stats.queued_bits += self.source.packet_bits;
        }
        self.dl_slots_seen += 1;

        let estimate = self.last_sinr_db.unwrap_or(actual_sinr_db);
        self.last_sinr_db = Some(actual_sinr_db);
        let cqi = select_mcs(estimate, &self.outer, table);
        if cqi == 0 || n_prb == 0 {
            return SlotReport {
                cqi: 0,
                outcome: None,
                spectral_efficiency: 0.0,
                delivered_bits: 0,
            };
        }
        let outcome = transmission_outcome(actual_sinr_db, cqi, table, &mut self.outer)
            .expect("selected CQI comes from the table");
        self.stats.transmissions += 1;
        match outcome {
            Outcome::Success => {
                let capacity = (numerology.resource_elements_per_prb() as f64
                    * table.efficiency(cqi)
                    * n_prb as f64)
                    .floor() as u64;
                let delivered = capacity.min(self.stats.queued_bits);
                self.stats.queued_bits -= delivered;
                self.stats.delivered_bits += delivered;
                SlotReport {
                    cqi,
                    outcome: Some(outcome),
                    spectral_efficiency: spectral_efficiency(cqi, table, numerology),
                    delivered_bits: delivered,
                }
            }
            Outcome::Error => {
                self.stats.errors += 1;
                SlotReport {
                    cqi,
                    outcome: Some(outcome),
                    spectral_efficiency: 0.0,
                    delivered_bits: 0,
                }
            }
        }
    }
}
