//! System-level simulator for a two-cell downlink in which a
//! network-controlled repeater (amplify-and-forward) assists the cell-edge
//! UE of its donor gNB.
//!
//! Module map:
//!
//! * [`units`]: dB/linear power and gain types;
//! * [`scenario`]: collinear two-cell geometry and panel orientations;
//! * [`antenna`]: 3GPP element pattern, URA array factor, DFT codebook;
//! * [`channel`]: pathloss, shadowing and fading;
//! * [`rng`]: per-(drop, link) random streams;
//! * [`ncr`]: repeater gain modes and the power cap;
//! * [`linkbudget`]: received powers, interference, SNR and SINR;
//! * [`mac`]: TDD framing, scheduling, CQI selection and outer loop;
//! * [`config`]: TOML configuration;
//! * [`engine`]: sweep driver, quantiles and CSV output.

pub mod antenna;
pub mod channel;
pub mod config;
pub mod engine;
pub mod linkbudget;
pub mod mac;
pub mod ncr;
pub mod rng;
pub mod scenario;
pub mod units;

pub use config::SimConfig;
pub use engine::{Simulator, SweepOutput};
pub use ncr::NcrGainMode;
