//! Monte-Carlo sweep driver.
//!
//! A sweep is the cross product of repeater offsets and gain modes. For each
//! cell the geometry, beams and pathlosses are prepared once; every drop then
//! draws fresh shadowing and fading from the drop's random streams, evaluates
//! the link budget per DL slot and PRB, runs link adaptation, and appends
//! samples. Cells and drops run in parallel, results are collected in input
//! order, so outputs do not depend on the thread count.
//!
//! Sample semantics per UE:
//!
//! * `snr`, `sinr` (dB) and `interference` (dBm): one sample per DL slot and PRB;
//! * `se` (bits/s/Hz): one per DL slot, zero unless the transmission succeeded;
//! * `beam_index`: one per DL slot; the repeater access beam for U2 (B2's
//!   beam when the repeater is off) and B1's beam for U1.
//!
//! Quantiles use linear interpolation between order statistics:
//! `h = (n - 1) q`, `Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h])`.

use crate::antenna::{
    beam_gain, build_dft_codebook, select_best_beam, AntennaError, ArrayConfig, BeamCodebook,
    BeamId, ElementPattern,
};
use crate::channel::{pathloss_db, ChannelError, ChannelParams, LinkClass, LinkState};
use crate::config::{B2BeamTarget, ConfigError, SimConfig};
use crate::linkbudget::{evaluate_prb, LinkBudgetError, PrbChannel};
use crate::mac::{
    effective_sinr_db, schedule_rr, CqiTable, MacError, Numerology, TddFrame, TrafficStats, UeMac,
};
use crate::ncr::{NcrError, NcrGainMode, NcrState};
use crate::rng;
use crate::scenario::{
    LayoutParams, NodeId, PanelId, PanelOrientation, ScenarioError, ScenarioLayout,
};
use crate::units::{
    from_db, noise_power_per_prb, to_db, GainDb, GainLinear, PowerDbm, PowerLinear, UnitsError,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Ncr(#[from] NcrError),
    #[error(transparent)]
    LinkBudget(#[from] LinkBudgetError),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error("quantile: {0}")]
    Quantile(String),
    #[error("cell (offset {offset} m, mode {mode}): {source}")]
    Cell {
        offset: f64,
        mode: String,
        #[source]
        source: Box<EngineError>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Radio links, numbered for random-stream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkId {
    B1U1 = 0,
    B1U2 = 1,
    B2U1 = 2,
    B2U2 = 3,
    B1Ncr = 4,
    B2Ncr = 5,
    NcrU1 = 6,
    NcrU2 = 7,
}

impl LinkId {
    pub const ALL: [LinkId; 8] = [
        LinkId::B1U1,
        LinkId::B1U2,
        LinkId::B2U1,
        LinkId::B2U2,
        LinkId::B1Ncr,
        LinkId::B2Ncr,
        LinkId::NcrU1,
        LinkId::NcrU2,
    ];

    /// (transmitter, receiver); the transmitter is the higher node.
    pub fn endpoints(self) -> (NodeId, NodeId) {
        use NodeId::*;
        match self {
            LinkId::B1U1 => (B1, U1),
            LinkId::B1U2 => (B1, U2),
            LinkId::B2U1 => (B2, U1),
            LinkId::B2U2 => (B2, U2),
            LinkId::B1Ncr => (B1, Ncr),
            LinkId::B2Ncr => (B2, Ncr),
            LinkId::NcrU1 => (Ncr, U1),
            LinkId::NcrU2 => (Ncr, U2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Snr,
    Sinr,
    Se,
    Interference,
    BeamIndex,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Snr,
        Metric::Sinr,
        Metric::Se,
        Metric::Interference,
        Metric::BeamIndex,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Snr => "snr",
            Metric::Sinr => "sinr",
            Metric::Se => "se",
            Metric::Interference => "interference",
            Metric::BeamIndex => "beam_index",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const UES: [NodeId; 2] = [NodeId::U1, NodeId::U2];

/// Samples of one UE, appended drop after drop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UeSamples {
    pub snr_db: Vec<f64>,
    pub sinr_db: Vec<f64>,
    pub interference_dbm: Vec<f64>,
    /// Linear, mW; aligned with `snr_db`.
    pub interference_mw: Vec<f64>,
    /// mW; aligned with `snr_db`.
    pub effective_noise_mw: Vec<f64>,
    pub se: Vec<f64>,
    pub beam_index: Vec<f64>,
    pub traffic: TrafficStats,
}

impl UeSamples {
    pub fn metric(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::Snr => &self.snr_db,
            Metric::Sinr => &self.sinr_db,
            Metric::Se => &self.se,
            Metric::Interference => &self.interference_dbm,
            Metric::BeamIndex => &self.beam_index,
        }
    }

    fn append(&mut self, other: UeSamples) {
        self.snr_db.extend(other.snr_db);
        self.sinr_db.extend(other.sinr_db);
        self.interference_dbm.extend(other.interference_dbm);
        self.interference_mw.extend(other.interference_mw);
        self.effective_noise_mw.extend(other.effective_noise_mw);
        self.se.extend(other.se);
        self.beam_index.extend(other.beam_index);
        self.traffic.merge(&other.traffic);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub u1: UeSamples,
    pub u2: UeSamples,
    /// PRBs evaluated with the repeater active.
    pub active_prbs: usize,
    /// Of those, PRBs where the output hit the power cap.
    pub saturated_prbs: usize,
    /// Drop index of each per-slot sample (`se`, `beam_index`).
    pub slot_drop: Vec<u64>,
}

impl SampleSet {
    pub fn ue(&self, ue: NodeId) -> &UeSamples {
        match ue {
            NodeId::U1 => &self.u1,
            NodeId::U2 => &self.u2,
            other => panic!("{other} is not a UE"),
        }
    }

    pub fn metric(&self, ue: NodeId, metric: Metric) -> &[f64] {
        self.ue(ue).metric(metric)
    }

    pub fn append(&mut self, other: SampleSet) {
        self.u1.append(other.u1);
        self.u2.append(other.u2);
        self.active_prbs += other.active_prbs;
        self.saturated_prbs += other.saturated_prbs;
        self.slot_drop.extend(other.slot_drop);
    }

    /// Every active PRB saturated (vacuously true when inactive).
    pub fn fully_saturated(&self) -> bool {
        self.saturated_prbs == self.active_prbs
    }
}

/// Linear-interpolation quantile of unsorted `samples`.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64, EngineError> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

/// Linear-interpolation quantile of ascending `sorted`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64, EngineError> {
    if sorted.is_empty() {
        return Err(EngineError::Quantile("empty sample list".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(EngineError::Quantile(format!(
            "q must lie in (0, 1), got {q}"
        )));
    }
    if let Some(bad) = sorted.iter().find(|x| x.is_nan()) {
        return Err(EngineError::Quantile(format!(
            "sample {bad} is not a number"
        )));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        return Ok(a);
    }
    Ok(a + (h - lo as f64) * (b - a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBeams {
    pub b1: BeamId,
    pub b2: BeamId,
    pub ncr_backhaul: BeamId,
    pub ncr_access: BeamId,
}

/// Everything about a sweep cell that does not change between drops.
#[derive(Debug, Clone)]
pub struct PreparedCell {
    pub offset: f64,
    pub mode: NcrGainMode,
    pub layout: ScenarioLayout,
    pub beams: CellBeams,
    pub pathloss: [GainDb; 8],
    pub classes: [LinkClass; 8],
    ncr: NcrState,
    template: PrbChannel,
}

impl PreparedCell {
    pub fn ncr(&self) -> &NcrState {
        &self.ncr
    }

    /// Beam reported for `ue` in the `beam_index` metric.
    pub fn reported_beam(&self, ue: NodeId) -> BeamId {
        match ue {
            NodeId::U1 => self.beams.b1,
            _ if self.mode.is_active() => self.beams.ncr_access,
            _ => self.beams.b2,
        }
    }
}

/// Results of one (offset, mode) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub offset: f64,
    pub mode: NcrGainMode,
    pub beams: CellBeams,
    pub samples: SampleSet,
}

impl CellResult {
    /// Mean U1 interference over all samples, averaged in mW, in dBm.
    pub fn mean_interference_u1_dbm(&self) -> f64 {
        let v = &self.samples.u1.interference_mw;
        to_db(v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileResult {
    pub ncr_offset: f64,
    pub gain_mode: NcrGainMode,
    pub ue: NodeId,
    pub metric: Metric,
    pub q: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamTraceRow {
    pub ncr_offset: f64,
    pub gain_mode: NcrGainMode,
    pub beam_index: usize,
    pub mean_interference_u1_dbm: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub cells: Vec<CellResult>,
    pub quantiles: Vec<QuantileResult>,
    pub beam_trace: Vec<BeamTraceRow>,
}

impl SweepOutput {
    pub fn cell(&self, offset: f64, mode: NcrGainMode) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.offset == offset && c.mode == mode)
    }

    /// Quantile `q` of (`ue`, `metric`) for every offset of `mode`, in sweep order.
    pub fn curve(&self, mode: NcrGainMode, ue: NodeId, metric: Metric, q: f64) -> Vec<(f64, f64)> {
        self.quantiles
            .iter()
            .filter(|r| r.gain_mode == mode && r.ue == ue && r.metric == metric && r.q == q)
            .map(|r| (r.ncr_offset, r.value))
            .collect()
    }
}

/// Model built once from a validated configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    table: CqiTable,
    numerology: Numerology,
    frame: TddFrame,
    channel: ChannelParams,
    codebook: BeamCodebook,
    p_n: PowerLinear,
    p_gnb_prb: PowerLinear,
    g_ue: GainLinear,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let table = match &config.mac.cqi_table {
            Some(path) => CqiTable::load(Path::new(path))?,
            None => CqiTable::standard(),
        };
        let r = &config.radio;
        let numerology = r.numerology();
        let frame = TddFrame {
            slot_duration_s: r.slot_duration_s,
            symbols_per_slot: r.symbols_per_slot,
        };
        let p_n = noise_power_per_prb(
            PowerDbm(r.noise_density_dbm_hz),
            r.prb_bandwidth_hz(),
            GainDb(r.noise_figure_db),
        )?
        .to_linear()?;
        let p_gnb_prb =
            PowerLinear(PowerDbm(config.power.gnb_tx_dbm).to_linear()?.0 / r.n_prb as f64);
        let panel = panel_config(&config, PanelOrientation::new(0.0, 0.0));
        let codebook = build_dft_codebook(
            &panel,
            (
                config.antenna.oversampling_az,
                config.antenna.oversampling_el,
            ),
        )?;
        let g_ue = GainDb(config.antenna.ue_gain_db).to_linear()?;
        Ok(Self {
            channel: config.channel.params(),
            config,
            table,
            numerology,
            frame,
            codebook,
            p_n,
            p_gnb_prb,
            g_ue,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn cqi_table(&self) -> &CqiTable {
        &self.table
    }

    pub fn noise_power(&self) -> PowerLinear {
        self.p_n
    }

    pub fn prepare(&self, offset: f64, mode: NcrGainMode) -> Result<PreparedCell, EngineError> {
        let c = &self.config;
        let s = &c.scenario;
        let layout = ScenarioLayout::build(&LayoutParams {
            isd: s.isd,
            gnb_ue_distance: s.gnb_ue_distance,
            ncr_offset: offset,
            gnb_height: s.gnb_height,
            ncr_height: s.ncr_height,
            ue_height: s.ue_height,
            ncr_access_downtilt: s.ncr_access_downtilt_deg.to_radians(),
            allow_override: s.allow_override,
        })?;
        let panel = |id| panel_config(c, layout.panel(id));
        let (b1p, b2p, bhp, acp) = (
            panel(PanelId::B1),
            panel(PanelId::B2),
            panel(PanelId::NcrBackhaul),
            panel(PanelId::NcrAccess),
        );
        let book = &self.codebook;
        let dir = |a, b| layout.direction(a, b);
        use NodeId::*;

        let b2_target = match (mode.is_active(), c.sweep.b2_beam_target) {
            (true, B2BeamTarget::Ncr) => Ncr,
            _ => U2,
        };
        let beams = CellBeams {
            b1: select_best_beam(&b1p, book, dir(B1, U1))?,
            b2: select_best_beam(&b2p, book, dir(B2, b2_target))?,
            ncr_backhaul: select_best_beam(&bhp, book, dir(Ncr, B2))?,
            ncr_access: select_best_beam(&acp, book, dir(Ncr, U2))?,
        };
        let g = |cfg: &ArrayConfig, beam, from, to| -> Result<GainLinear, EngineError> {
            Ok(GainLinear(from_db(
                beam_gain(cfg, book, beam, dir(from, to))?.0,
            )))
        };

        let mut pathloss = [GainDb(0.0); 8];
        let mut classes = [LinkClass::UMA_NLOS; 8];
        for id in LinkId::ALL {
            let (tx, rx) = id.endpoints();
            let class = match (tx, rx) {
                (Ncr, _) => c.channel.ncr_ue,
                (_, Ncr) => c.channel.gnb_ncr,
                _ => c.channel.gnb_ue,
            };
            let h_tx = layout.position(tx).z;
            let h_rx = layout.position(rx).z;
            pathloss[id as usize] = pathloss_db(
                class,
                layout.distance(tx, rx),
                c.radio.carrier_ghz,
                h_tx,
                h_rx,
            )?;
            classes[id as usize] = class;
        }

        let one = GainLinear(1.0);
        let template = PrbChannel {
            p_tx_b1: self.p_gnb_prb,
            p_tx_b2: self.p_gnb_prb,
            p_n: self.p_n,
            g_b1_u1: g(&b1p, beams.b1, B1, U1)?,
            g_b1_u2: g(&b1p, beams.b1, B1, U2)?,
            g_b1_ncr: g(&b1p, beams.b1, B1, Ncr)?,
            g_b2_u1: g(&b2p, beams.b2, B2, U1)?,
            g_b2_u2: g(&b2p, beams.b2, B2, U2)?,
            g_b2_ncr: g(&b2p, beams.b2, B2, Ncr)?,
            g_ncr_rx_b1: g(&bhp, beams.ncr_backhaul, Ncr, B1)?,
            g_ncr_rx_b2: g(&bhp, beams.ncr_backhaul, Ncr, B2)?,
            g_ncr_tx_u1: g(&acp, beams.ncr_access, Ncr, U1)?,
            g_ncr_tx_u2: g(&acp, beams.ncr_access, Ncr, U2)?,
            g_u1: self.g_ue,
            g_u2: self.g_ue,
            l_b1_u1: one,
            l_b1_u2: one,
            l_b1_ncr: one,
            l_b2_u1: one,
            l_b2_u2: one,
            l_b2_ncr: one,
            l_ncr_u1: one,
            l_ncr_u2: one,
        };
        let ncr = NcrState::from_total_power(mode, PowerDbm(c.power.ncr_tx_dbm), c.radio.n_prb)?;
        Ok(PreparedCell {
            offset,
            mode,
            layout,
            beams,
            pathloss,
            classes,
            ncr,
            template,
        })
    }

    /// Channel realizations of drop `drop`; identical for every cell.
    fn draw_links(&self, cell: &PreparedCell, drop: u64, n_slots: usize) -> Vec<LinkState> {
        let n_prb = self.config.radio.n_prb;
        LinkId::ALL
            .iter()
            .map(|&id| {
                let mut r = rng::stream(self.config.sweep.base_seed, drop, id as u64);
                LinkState::generate(
                    cell.classes[id as usize],
                    cell.pathloss[id as usize],
                    &self.channel,
                    n_slots,
                    n_prb,
                    &mut r,
                )
            })
            .collect()
    }

    /// One drop of `slots` slots.
    pub fn run_drop(
        &self,
        cell: &PreparedCell,
        drop: u64,
        slots: usize,
    ) -> Result<SampleSet, EngineError> {
        let n_prb = self.config.radio.n_prb;
        let links = self.draw_links(cell, drop, slots);
        let att = |id: LinkId, slot, prb| GainLinear(links[id as usize].attenuation(slot, prb));
        let ol = self.config.mac.outer_loop();
        let cbr = self.config.mac.cbr();
        let mut macs = [UeMac::new(ol, cbr), UeMac::new(ol, cbr)];
        let mut out = SampleSet::default();

        for (round, slot) in self.frame.downlink_slots(slots).enumerate() {
            let mut sinr_lin: [Vec<f64>; 2] =
                [Vec::with_capacity(n_prb), Vec::with_capacity(n_prb)];
            for prb in 0..n_prb {
                let ch = PrbChannel {
                    l_b1_u1: att(LinkId::B1U1, slot, prb),
                    l_b1_u2: att(LinkId::B1U2, slot, prb),
                    l_b1_ncr: att(LinkId::B1Ncr, slot, prb),
                    l_b2_u1: att(LinkId::B2U1, slot, prb),
                    l_b2_u2: att(LinkId::B2U2, slot, prb),
                    l_b2_ncr: att(LinkId::B2Ncr, slot, prb),
                    l_ncr_u1: att(LinkId::NcrU1, slot, prb),
                    l_ncr_u2: att(LinkId::NcrU2, slot, prb),
                    ..cell.template
                };
                let o = evaluate_prb(&ch, &cell.ncr, slot, prb)?;
                if cell.mode.is_active() {
                    out.active_prbs += 1;
                    out.saturated_prbs += o.forwarded.saturated as usize;
                }
                for (k, s) in [o.u1, o.u2].into_iter().enumerate() {
                    let ue = if k == 0 { &mut out.u1 } else { &mut out.u2 };
                    ue.snr_db.push(to_db(s.snr.0));
                    ue.sinr_db.push(to_db(s.sinr.0));
                    ue.interference_dbm.push(to_db(s.interference.0));
                    ue.interference_mw.push(s.interference.0);
                    ue.effective_noise_mw.push(s.effective_noise.0);
                    sinr_lin[k].push(s.sinr.0);
                }
            }
            for (k, &ue_id) in UES.iter().enumerate() {
                // One UE per cell: it receives every PRB of the slot.
                let granted = schedule_rr(&[ue_id], n_prb, round).len();
                let report = macs[k].serve(
                    effective_sinr_db(&sinr_lin[k]),
                    granted,
                    &self.table,
                    &self.numerology,
                );
                let ue = if k == 0 { &mut out.u1 } else { &mut out.u2 };
                ue.se.push(report.spectral_efficiency);
                ue.beam_index.push(cell.reported_beam(ue_id).0 as f64);
            }
            out.slot_drop.push(drop);
        }
        let [m1, m2] = macs;
        out.u1.traffic = m1.stats;
        out.u2.traffic = m2.stats;
        Ok(out)
    }

    /// All configured drops of one cell, in drop order.
    pub fn run_cell(&self, offset: f64, mode: NcrGainMode) -> Result<CellResult, EngineError> {
        self.run_cell_drops(offset, mode, 0..self.config.sweep.drops as u64)
    }

    /// Drops `drops` of one cell, in drop order.
    pub fn run_cell_drops(
        &self,
        offset: f64,
        mode: NcrGainMode,
        drops: Range<u64>,
    ) -> Result<CellResult, EngineError> {
        self.run_cell_inner(offset, mode, drops)
            .map_err(|e| EngineError::Cell {
                offset,
                mode: mode.to_string(),
                source: Box::new(e),
            })
    }

    fn run_cell_inner(
        &self,
        offset: f64,
        mode: NcrGainMode,
        drops: Range<u64>,
    ) -> Result<CellResult, EngineError> {
        let cell = self.prepare(offset, mode)?;
        let w = &self.config.sweep;
        let drops = drops
            .into_par_iter()
            .map(|d| self.run_drop(&cell, d, w.slots_per_drop))
            .collect::<Result<Vec<_>, _>>()?;
        let mut samples = SampleSet::default();
        for d in drops {
            samples.append(d);
        }
        log::debug!(
            "cell offset={offset} mode={mode}: access beam {}, {} of {} PRBs saturated",
            cell.beams.ncr_access.0,
            samples.saturated_prbs,
            samples.active_prbs
        );
        Ok(CellResult {
            offset,
            mode,
            beams: cell.beams,
            samples,
        })
    }

    /// Runs every (offset, mode) cell of the configured sweep.
    pub fn run_sweep(&self) -> Result<SweepOutput, EngineError> {
        self.run_sweep_drops(0..self.config.sweep.drops as u64)
    }

    /// The configured sweep restricted to drops `drops`.
    pub fn run_sweep_drops(&self, drops: Range<u64>) -> Result<SweepOutput, EngineError> {
        let w = &self.config.sweep;
        let grid: Vec<(f64, NcrGainMode)> = w
            .offsets_m
            .iter()
            .flat_map(|&o| w.gain_modes.iter().map(move |&m| (o, m)))
            .collect();
        log::info!(
            "sweep: {} cells, drops {:?} x {} slots, seed {}",
            grid.len(),
            drops,
            w.slots_per_drop,
            w.base_seed
        );
        let cells = grid
            .par_iter()
            .map(|&(o, m)| self.run_cell_drops(o, m, drops.clone()))
            .collect::<Result<Vec<_>, _>>()?;

        let mut quantiles = Vec::new();
        let mut beam_trace = Vec::new();
        for cell in &cells {
            quantiles.extend(cell_quantiles(cell, &w.quantiles).map_err(|e| {
                EngineError::Cell {
                    offset: cell.offset,
                    mode: cell.mode.to_string(),
                    source: Box::new(e),
                }
            })?);
            if cell.mode.is_active() {
                beam_trace.push(BeamTraceRow {
                    ncr_offset: cell.offset,
                    gain_mode: cell.mode,
                    beam_index: cell.beams.ncr_access.0,
                    mean_interference_u1_dbm: cell.mean_interference_u1_dbm(),
                });
            }
        }
        log::info!("sweep finished: {} quantile rows", quantiles.len());
        Ok(SweepOutput {
            cells,
            quantiles,
            beam_trace,
        })
    }
}

fn panel_config(c: &SimConfig, boresight: PanelOrientation) -> ArrayConfig {
    let a = &c.antenna;
    ArrayConfig {
        rows: a.rows,
        cols: a.cols,
        element_spacing: a.element_spacing,
        max_element_gain: GainDb(a.max_element_gain_db),
        pattern: ElementPattern::Directional,
        boresight,
    }
}

/// Quantile rows of one cell: UEs, then metrics, then quantiles.
pub fn cell_quantiles(cell: &CellResult, qs: &[f64]) -> Result<Vec<QuantileResult>, EngineError> {
    let mut rows = Vec::with_capacity(UES.len() * Metric::ALL.len() * qs.len());
    for ue in UES {
        for metric in Metric::ALL {
            let mut sorted = cell.samples.metric(ue, metric).to_vec();
            sorted.sort_by(f64::total_cmp);
            for &q in qs {
                rows.push(QuantileResult {
                    ncr_offset: cell.offset,
                    gain_mode: cell.mode,
                    ue,
                    metric,
                    q,
                    value: quantile_sorted(&sorted, q)?,
                });
            }
        }
    }
    Ok(rows)
}

pub const QUANTILES_FILE: &str = "quantiles.csv";
pub const BEAM_TRACE_FILE: &str = "beam_trace.csv";
pub const TRAFFIC_FILE: &str = "traffic.csv";
pub const RAW_SAMPLES_FILE: &str = "samples.csv";

fn fixed_gain_field(mode: &NcrGainMode) -> String {
    mode.fixed_gain_db()
        .map(|g| g.to_string())
        .unwrap_or_default()
}

fn value_field(metric: Metric, v: f64) -> String {
    if metric == Metric::BeamIndex && v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        v.to_string()
    }
}

#[derive(Serialize)]
struct QuantileRow<'a> {
    ncr_offset_m: String,
    gain_mode: &'a str,
    fixed_gain_db: String,
    ue: String,
    metric: &'a str,
    quantile: String,
    value: String,
}

pub fn write_quantiles_csv<W: Write>(w: W, rows: &[QuantileResult]) -> Result<(), EngineError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(QuantileRow {
            ncr_offset_m: r.ncr_offset.to_string(),
            gain_mode: r.gain_mode.label(),
            fixed_gain_db: fixed_gain_field(&r.gain_mode),
            ue: r.ue.to_string(),
            metric: r.metric.label(),
            quantile: r.q.to_string(),
            value: value_field(r.metric, r.value),
        })?;
    }
    if rows.is_empty() {
        wr.write_record([
            "ncr_offset_m",
            "gain_mode",
            "fixed_gain_db",
            "ue",
            "metric",
            "quantile",
            "value",
        ])?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct BeamRow {
    ncr_offset_m: String,
    gain_mode: String,
    beam_index: usize,
    mean_interference_u1_dbm: String,
}

/// `gain_mode` is `dynamic` or `fixed:<dB>` so fixed gains stay distinguishable.
pub fn write_beam_trace_csv<W: Write>(w: W, rows: &[BeamTraceRow]) -> Result<(), EngineError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(BeamRow {
            ncr_offset_m: r.ncr_offset.to_string(),
            gain_mode: r.gain_mode.to_string(),
            beam_index: r.beam_index,
            mean_interference_u1_dbm: r.mean_interference_u1_dbm.to_string(),
        })?;
    }
    if rows.is_empty() {
        wr.write_record([
            "ncr_offset_m",
            "gain_mode",
            "beam_index",
            "mean_interference_u1_dbm",
        ])?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct TrafficRow<'a> {
    ncr_offset_m: String,
    gain_mode: &'a str,
    fixed_gain_db: String,
    ue: String,
    offered_bits: u64,
    delivered_bits: u64,
    queued_bits: u64,
    transmissions: u64,
    errors: u64,
    error_rate: String,
}

pub fn write_traffic_csv<W: Write>(w: W, cells: &[CellResult]) -> Result<(), EngineError> {
    let mut wr = csv::Writer::from_writer(w);
    for c in cells {
        for ue in UES {
            let t = &c.samples.ue(ue).traffic;
            wr.serialize(TrafficRow {
                ncr_offset_m: c.offset.to_string(),
                gain_mode: c.mode.label(),
                fixed_gain_db: fixed_gain_field(&c.mode),
                ue: ue.to_string(),
                offered_bits: t.offered_bits,
                delivered_bits: t.delivered_bits,
                queued_bits: t.queued_bits,
                transmissions: t.transmissions,
                errors: t.errors,
                error_rate: t.error_rate().to_string(),
            })?;
        }
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct RawRow<'a> {
    ncr_offset_m: String,
    gain_mode: &'a str,
    fixed_gain_db: String,
    ue: String,
    metric: &'a str,
    sample: usize,
    value: String,
}

/// One row per sample, in collection order.
pub fn write_raw_samples_csv<W: Write>(w: W, cells: &[CellResult]) -> Result<(), EngineError> {
    let mut wr = csv::Writer::from_writer(w);
    for c in cells {
        for ue in UES {
            for metric in Metric::ALL {
                for (i, &v) in c.samples.metric(ue, metric).iter().enumerate() {
                    wr.serialize(RawRow {
                        ncr_offset_m: c.offset.to_string(),
                        gain_mode: c.mode.label(),
                        fixed_gain_db: fixed_gain_field(&c.mode),
                        ue: ue.to_string(),
                        metric: metric.label(),
                        sample: i,
                        value: value_field(metric, v),
                    })?;
                }
            }
        }
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, EngineError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| EngineError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Writes the quantile, beam-trace and traffic tables (and optionally raw
/// samples) into `dir`, creating it if needed. Returns the written paths.
pub fn write_outputs(
    dir: &Path,
    out: &SweepOutput,
    raw_samples: bool,
) -> Result<Vec<PathBuf>, EngineError> {
    fs::create_dir_all(dir).map_err(|source| EngineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    let p = dir.join(QUANTILES_FILE);
    write_quantiles_csv(create(&p)?, &out.quantiles)?;
    written.push(p);
    let p = dir.join(BEAM_TRACE_FILE);
    write_beam_trace_csv(create(&p)?, &out.beam_trace)?;
    written.push(p);
    let p = dir.join(TRAFFIC_FILE);
    write_traffic_csv(create(&p)?, &out.cells)?;
    written.push(p);
    if raw_samples {
        let p = dir.join(RAW_SAMPLES_FILE);
        write_raw_samples_csv(create(&p)?, &out.cells)?;
        written.push(p);
    }
    Ok(written)
}
