//! Per-PRB downlink budget of the two-cell repeater scenario.
//!
//! Every received power is `p_tx * g_tx * g_rx / l`. The repeater path
//! multiplies two such hops, so its contribution is divided by the *product*
//! of the donor-side and access-side attenuations. Interference at a UE is
//! the other gNB's direct signal plus whatever of that gNB's signal the
//! repeater forwards toward the UE. Noise at U2 includes the repeater's
//! own amplified thermal noise.

use crate::ncr::{amplified_noise_at_ue, forward_power, total_input_power, Forwarded, NcrState};
use crate::scenario::NodeId;
use crate::units::{GainLinear, PowerLinear};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkBudgetError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerKind {
    Useful,
    Interference,
}

/// Role of a transmitter/receiver pair in the two-cell scenario.
pub fn classify(tx: NodeId, rx: NodeId) -> Option<PowerKind> {
    use NodeId::*;
    match (tx, rx) {
        (B1, U1) | (B2, U2) | (B2, Ncr) | (Ncr, U2) => Some(PowerKind::Useful),
        (B1, U2) | (B2, U1) | (Ncr, U1) | (B1, Ncr) => Some(PowerKind::Interference),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPower {
    pub tx: NodeId,
    pub rx: NodeId,
    pub prb: usize,
    pub value: PowerLinear,
    pub kind: PowerKind,
}

/// `p_tx * g_tx * g_rx / l` for the pair `(tx, rx)` on `prb`.
pub fn received_power(
    tx: NodeId,
    rx: NodeId,
    prb: usize,
    p_tx: PowerLinear,
    g_tx: GainLinear,
    g_rx: GainLinear,
    l: GainLinear,
) -> Result<ReceivedPower, LinkBudgetError> {
    if !(l.0 > 0.0) {
        return Err(LinkBudgetError::InvalidArgument(format!(
            "attenuation must be positive, got {}",
            l.0
        )));
    }
    let kind = classify(tx, rx).ok_or_else(|| {
        LinkBudgetError::InvalidArgument(format!("no downlink role for pair ({tx}, {rx})"))
    })?;
    Ok(ReceivedPower {
        tx,
        rx,
        prb,
        value: PowerLinear(p_tx.0 * g_tx.0 * g_rx.0 / l.0),
        kind,
    })
}

/// Two-hop path source -> repeater -> UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayChain {
    pub p_tx_source: PowerLinear,
    pub g_tx_source: GainLinear,
    pub g_rx_ncr: GainLinear,
    pub l_source_ncr: GainLinear,
    pub g_ncr: GainLinear,
    pub g_tx_ncr: GainLinear,
    pub g_rx_ue: GainLinear,
    pub l_ncr_ue: GainLinear,
}

impl RelayChain {
    /// `p * g_tx * g_rx_ncr * g_ncr * g_tx_ncr * g_rx_ue / (l_1 * l_2)`.
    pub fn power(&self) -> PowerLinear {
        PowerLinear(
            self.p_tx_source.0
                * self.g_tx_source.0
                * self.g_rx_ncr.0
                * self.g_ncr.0
                * self.g_tx_ncr.0
                * self.g_rx_ue.0
                / (self.l_source_ncr.0 * self.l_ncr_ue.0),
        )
    }
}

/// Useful power at U2: direct term from B2 plus the forwarded term.
pub fn useful_power_u2(direct: &ReceivedPower, via_ncr: &RelayChain) -> PowerLinear {
    PowerLinear(direct.value.0 + via_ncr.power().0)
}

/// Interference at `victim` from the other cell's gNB, direct and forwarded.
pub fn interference_power(
    victim: NodeId,
    aggressor: NodeId,
    direct: &ReceivedPower,
    via_ncr: &RelayChain,
) -> Result<PowerLinear, LinkBudgetError> {
    let expected = match victim {
        NodeId::U1 => NodeId::B2,
        NodeId::U2 => NodeId::B1,
        other => {
            return Err(LinkBudgetError::InvalidArgument(format!(
                "{other} is not a UE"
            )))
        }
    };
    if aggressor != expected || direct.tx != aggressor || direct.rx != victim {
        return Err(LinkBudgetError::InvalidArgument(format!(
            "victim {victim} is interfered by {expected}, got aggressor {aggressor} and direct term ({}, {})",
            direct.tx, direct.rx
        )));
    }
    Ok(PowerLinear(direct.value.0 + via_ncr.power().0))
}

/// SNR/SINR and their ingredients for one UE on one PRB of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeRadioSample {
    pub ue: NodeId,
    pub slot: usize,
    pub prb: usize,
    pub snr: GainLinear,
    pub sinr: GainLinear,
    pub useful: PowerLinear,
    pub interference: PowerLinear,
    pub effective_noise: PowerLinear,
}

/// `snr = S / N`, `sinr = S / (I + N)`.
pub fn snr_sinr(
    ue: NodeId,
    slot: usize,
    prb: usize,
    useful: PowerLinear,
    interference: PowerLinear,
    effective_noise: PowerLinear,
) -> Result<UeRadioSample, LinkBudgetError> {
    if !(effective_noise.0 > 0.0) {
        return Err(LinkBudgetError::InvalidArgument(format!(
            "effective noise must be positive, got {}",
            effective_noise.0
        )));
    }
    if useful.0 < 0.0 || interference.0 < 0.0 {
        return Err(LinkBudgetError::InvalidArgument(
            "powers must be non-negative".into(),
        ));
    }
    Ok(UeRadioSample {
        ue,
        slot,
        prb,
        snr: GainLinear(useful.0 / effective_noise.0),
        sinr: GainLinear(useful.0 / (interference.0 + effective_noise.0)),
        useful,
        interference,
        effective_noise,
    })
}

/// Linear channel quantities of every link on one PRB of one slot.
///
/// `g_<tx>_<rx>` is the transmit gain of `tx`'s active beam toward `rx`;
/// `g_ncr_rx_*` are backhaul-panel receive gains and `g_ncr_tx_*` access-panel
/// transmit gains; `l_*` are composite attenuations including fading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrbChannel {
    pub p_tx_b1: PowerLinear,
    pub p_tx_b2: PowerLinear,
    pub p_n: PowerLinear,
    pub g_b1_u1: GainLinear,
    pub g_b1_u2: GainLinear,
    pub g_b1_ncr: GainLinear,
    pub g_b2_u1: GainLinear,
    pub g_b2_u2: GainLinear,
    pub g_b2_ncr: GainLinear,
    pub g_ncr_rx_b1: GainLinear,
    pub g_ncr_rx_b2: GainLinear,
    pub g_ncr_tx_u1: GainLinear,
    pub g_ncr_tx_u2: GainLinear,
    pub g_u1: GainLinear,
    pub g_u2: GainLinear,
    pub l_b1_u1: GainLinear,
    pub l_b1_u2: GainLinear,
    pub l_b1_ncr: GainLinear,
    pub l_b2_u1: GainLinear,
    pub l_b2_u2: GainLinear,
    pub l_b2_ncr: GainLinear,
    pub l_ncr_u1: GainLinear,
    pub l_ncr_u2: GainLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrbOutcome {
    pub u1: UeRadioSample,
    pub u2: UeRadioSample,
    /// Donor signal at the repeater input.
    pub ncr_useful_input: PowerLinear,
    /// Co-channel interference at the repeater input.
    pub ncr_interference_input: PowerLinear,
    pub forwarded: Forwarded,
}

/// Evaluates the full two-cell budget for one PRB.
pub fn evaluate_prb(
    ch: &PrbChannel,
    ncr: &NcrState,
    slot: usize,
    prb: usize,
) -> Result<PrbOutcome, LinkBudgetError> {
    use NodeId::*;
    let s_ncr = received_power(
        B2,
        Ncr,
        prb,
        ch.p_tx_b2,
        ch.g_b2_ncr,
        ch.g_ncr_rx_b2,
        ch.l_b2_ncr,
    )?;
    let i_ncr = received_power(
        B1,
        Ncr,
        prb,
        ch.p_tx_b1,
        ch.g_b1_ncr,
        ch.g_ncr_rx_b1,
        ch.l_b1_ncr,
    )?;
    let total = total_input_power(s_ncr.value, i_ncr.value, ch.p_n);
    let forwarded = forward_power(ncr, total);
    let g = forwarded.applied_gain;

    let b2_chain = |g_tx_ncr, g_rx_ue, l_ncr_ue| RelayChain {
        p_tx_source: ch.p_tx_b2,
        g_tx_source: ch.g_b2_ncr,
        g_rx_ncr: ch.g_ncr_rx_b2,
        l_source_ncr: ch.l_b2_ncr,
        g_ncr: g,
        g_tx_ncr,
        g_rx_ue,
        l_ncr_ue,
    };

    // U1: served by B1 only; B2 interferes directly and through the repeater.
    let u1_useful = received_power(B1, U1, prb, ch.p_tx_b1, ch.g_b1_u1, ch.g_u1, ch.l_b1_u1)?;
    let u1_direct_i = received_power(B2, U1, prb, ch.p_tx_b2, ch.g_b2_u1, ch.g_u1, ch.l_b2_u1)?;
    let u1_i = interference_power(
        U1,
        B2,
        &u1_direct_i,
        &b2_chain(ch.g_ncr_tx_u1, ch.g_u1, ch.l_ncr_u1),
    )?;
    let u1 = snr_sinr(U1, slot, prb, u1_useful.value, u1_i, ch.p_n)?;

    // U2: direct and forwarded B2 signal; B1 interferes directly and through the repeater.
    let u2_direct = received_power(B2, U2, prb, ch.p_tx_b2, ch.g_b2_u2, ch.g_u2, ch.l_b2_u2)?;
    let u2_useful = useful_power_u2(&u2_direct, &b2_chain(ch.g_ncr_tx_u2, ch.g_u2, ch.l_ncr_u2));
    let u2_direct_i = received_power(B1, U2, prb, ch.p_tx_b1, ch.g_b1_u2, ch.g_u2, ch.l_b1_u2)?;
    let b1_chain = RelayChain {
        p_tx_source: ch.p_tx_b1,
        g_tx_source: ch.g_b1_ncr,
        g_rx_ncr: ch.g_ncr_rx_b1,
        l_source_ncr: ch.l_b1_ncr,
        g_ncr: g,
        g_tx_ncr: ch.g_ncr_tx_u2,
        g_rx_ue: ch.g_u2,
        l_ncr_ue: ch.l_ncr_u2,
    };
    let u2_i = interference_power(U2, B1, &u2_direct_i, &b1_chain)?;
    let u2_noise = amplified_noise_at_ue(ch.p_n, g, ch.g_ncr_tx_u2, ch.g_u2, ch.l_ncr_u2);
    let u2 = snr_sinr(U2, slot, prb, u2_useful, u2_i, u2_noise)?;

    Ok(PrbOutcome {
        u1,
        u2,
        ncr_useful_input: s_ncr.value,
        ncr_interference_input: i_ncr.value,
        forwarded,
    })
}
