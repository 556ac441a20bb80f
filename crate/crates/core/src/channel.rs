//! Large-scale pathloss, lognormal shadowing and per-slot small-scale fading.
//!
//! Pathloss follows the UMa/UMi formulas of TR 38.901 Table 7.4.1-1 with the
//! effective environment height fixed at 1 m. Small-scale fading is a block
//! statistical model: unit-mean exponential power for NLOS links and
//! unit-mean Rician power for LOS links, i.i.d. across slots and PRBs.
//!
//! The formulas are evaluated for any 2D distance up to 5 km; below the
//! nominal 10 m lower bound they are extrapolated.

use crate::units::{from_db, GainDb};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const EFFECTIVE_ENV_HEIGHT: f64 = 1.0;
const MAX_2D_DISTANCE: f64 = 5_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Environment {
    UrbanMacro,
    UrbanMicro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Visibility {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkClass {
    pub environment: Environment,
    pub visibility: Visibility,
}

impl LinkClass {
    pub const UMA_LOS: LinkClass = LinkClass::new(Environment::UrbanMacro, Visibility::Los);
    pub const UMA_NLOS: LinkClass = LinkClass::new(Environment::UrbanMacro, Visibility::Nlos);
    pub const UMI_LOS: LinkClass = LinkClass::new(Environment::UrbanMicro, Visibility::Los);
    pub const UMI_NLOS: LinkClass = LinkClass::new(Environment::UrbanMicro, Visibility::Nlos);

    pub const fn new(environment: Environment, visibility: Visibility) -> Self {
        Self {
            environment,
            visibility,
        }
    }

    pub fn is_los(self) -> bool {
        self.visibility == Visibility::Los
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let env = match self.environment {
            Environment::UrbanMacro => "uma",
            Environment::UrbanMicro => "umi",
        };
        let vis = match self.visibility {
            Visibility::Los => "los",
            Visibility::Nlos => "nlos",
        };
        write!(f, "{env}-{vis}")
    }
}

impl FromStr for LinkClass {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uma-los" => Ok(Self::UMA_LOS),
            "uma-nlos" => Ok(Self::UMA_NLOS),
            "umi-los" => Ok(Self::UMI_LOS),
            "umi-nlos" => Ok(Self::UMI_NLOS),
            other => Err(ChannelError::InvalidArgument(format!(
                "unknown link class `{other}` (expected uma-los, uma-nlos, umi-los or umi-nlos)"
            ))),
        }
    }
}

impl Serialize for LinkClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinkClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn breakpoint_distance(h_bs: f64, h_ut: f64, fc_ghz: f64) -> f64 {
    4.0 * (h_bs - EFFECTIVE_ENV_HEIGHT) * (h_ut - EFFECTIVE_ENV_HEIGHT) * fc_ghz * 1e9
        / SPEED_OF_LIGHT
}

fn uma_los(d3d: f64, d2d: f64, fc: f64, h_bs: f64, h_ut: f64) -> f64 {
    let bp = breakpoint_distance(h_bs, h_ut, fc);
    if d2d <= bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * fc.log10()
    } else {
        28.0 + 40.0 * d3d.log10() + 20.0 * fc.log10()
            - 9.0 * (bp * bp + (h_bs - h_ut).powi(2)).log10()
    }
}

fn umi_los(d3d: f64, d2d: f64, fc: f64, h_bs: f64, h_ut: f64) -> f64 {
    let bp = breakpoint_distance(h_bs, h_ut, fc);
    if d2d <= bp {
        32.4 + 21.0 * d3d.log10() + 20.0 * fc.log10()
    } else {
        32.4 + 40.0 * d3d.log10() + 20.0 * fc.log10()
            - 9.5 * (bp * bp + (h_bs - h_ut).powi(2)).log10()
    }
}

/// TR 38.901 pathloss in dB. `h_bs` is the transmitting site height (gNB or
/// repeater), `h_ut` the terminal height.
pub fn pathloss_db(
    class: LinkClass,
    d3d: f64,
    fc_ghz: f64,
    h_bs: f64,
    h_ut: f64,
) -> Result<GainDb, ChannelError> {
    if !(0.5..=100.0).contains(&fc_ghz) {
        return Err(ChannelError::InvalidArgument(format!(
            "carrier {fc_ghz} GHz outside the 0.5-100 GHz validity range"
        )));
    }
    if !(d3d > 0.0 && d3d.is_finite()) {
        return Err(ChannelError::InvalidArgument(format!(
            "3D distance must be positive, got {d3d} m"
        )));
    }
    if !(h_bs > EFFECTIVE_ENV_HEIGHT && h_ut > EFFECTIVE_ENV_HEIGHT)
        || !h_bs.is_finite()
        || !h_ut.is_finite()
    {
        return Err(ChannelError::InvalidArgument(format!(
            "antenna heights must exceed {EFFECTIVE_ENV_HEIGHT} m, got {h_bs} m / {h_ut} m"
        )));
    }
    let dh = h_bs - h_ut;
    let d2d_sq = d3d * d3d - dh * dh;
    if d2d_sq < -1e-9 {
        return Err(ChannelError::InvalidArgument(format!(
            "3D distance {d3d} m shorter than the height difference {} m",
            dh.abs()
        )));
    }
    let d2d = d2d_sq.max(0.0).sqrt();
    if d2d > MAX_2D_DISTANCE {
        return Err(ChannelError::InvalidArgument(format!(
            "2D distance {d2d} m beyond the 5 km validity range"
        )));
    }
    let fc = fc_ghz;
    let pl = match (class.environment, class.visibility) {
        (Environment::UrbanMacro, Visibility::Los) => uma_los(d3d, d2d, fc, h_bs, h_ut),
        (Environment::UrbanMacro, Visibility::Nlos) => {
            let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc.log10() - 0.6 * (h_ut - 1.5);
            uma_los(d3d, d2d, fc, h_bs, h_ut).max(nlos)
        }
        (Environment::UrbanMicro, Visibility::Los) => umi_los(d3d, d2d, fc, h_bs, h_ut),
        (Environment::UrbanMicro, Visibility::Nlos) => {
            let nlos = 35.3 * d3d.log10() + 22.4 + 21.3 * fc.log10() - 0.3 * (h_ut - 1.5);
            umi_los(d3d, d2d, fc, h_bs, h_ut).max(nlos)
        }
    };
    Ok(GainDb(pl))
}

/// Shadowing standard deviations per link class, dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowingSigmas {
    pub uma_los: f64,
    pub uma_nlos: f64,
    pub umi_los: f64,
    pub umi_nlos: f64,
}

impl Default for ShadowingSigmas {
    fn default() -> Self {
        Self {
            uma_los: 4.0,
            uma_nlos: 6.0,
            umi_los: 4.0,
            umi_nlos: 7.82,
        }
    }
}

impl ShadowingSigmas {
    pub fn for_class(&self, class: LinkClass) -> f64 {
        match (class.environment, class.visibility) {
            (Environment::UrbanMacro, Visibility::Los) => self.uma_los,
            (Environment::UrbanMacro, Visibility::Nlos) => self.uma_nlos,
            (Environment::UrbanMicro, Visibility::Los) => self.umi_los,
            (Environment::UrbanMicro, Visibility::Nlos) => self.umi_nlos,
        }
    }
}

/// Statistical knobs of the channel model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub shadowing_sigma_db: ShadowingSigmas,
    /// Rician K-factor of LOS links; `inf` removes fading altogether.
    pub rician_k_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            shadowing_sigma_db: ShadowingSigmas::default(),
            rician_k_db: 9.0,
        }
    }
}

/// Zero-mean Gaussian shadowing (dB) with the class standard deviation.
pub fn draw_shadowing<R: Rng + ?Sized>(
    class: LinkClass,
    params: &ChannelParams,
    rng: &mut R,
) -> GainDb {
    let sigma = params.shadowing_sigma_db.for_class(class);
    let z: f64 = rng.sample(StandardNormal);
    GainDb(sigma * z)
}

/// Multiplicative power gains, `n_slots * n_prb` values in slot-major order.
pub fn draw_fading<R: Rng + ?Sized>(
    class: LinkClass,
    params: &ChannelParams,
    n_slots: usize,
    n_prb: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = n_slots * n_prb;
    if !class.is_los() {
        return (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    }
    let k_db = params.rician_k_db;
    if k_db == f64::INFINITY {
        return vec![1.0; n];
    }
    let k = from_db(k_db);
    let los = (k / (k + 1.0)).sqrt();
    let scatter = (1.0 / (2.0 * (k + 1.0))).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let (a, b) = (los + scatter * re, scatter * im);
            a * a + b * b
        })
        .collect()
}

/// Realized channel of one link for one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub class: LinkClass,
    pub pathloss: GainDb,
    pub shadowing: GainDb,
    n_prb: usize,
    fading: Vec<f64>,
}

impl LinkState {
    /// Draws shadowing, then the fading block, from `rng`.
    pub fn generate<R: Rng + ?Sized>(
        class: LinkClass,
        pathloss: GainDb,
        params: &ChannelParams,
        n_slots: usize,
        n_prb: usize,
        rng: &mut R,
    ) -> Self {
        let shadowing = draw_shadowing(class, params, rng);
        let fading = draw_fading(class, params, n_slots, n_prb, rng);
        Self {
            class,
            pathloss,
            shadowing,
            n_prb,
            fading,
        }
    }

    pub fn fading(&self, slot: usize, prb: usize) -> f64 {
        self.fading[slot * self.n_prb + prb]
    }

    /// Linear attenuation `l = pathloss * shadowing / fading`.
    pub fn attenuation(&self, slot: usize, prb: usize) -> f64 {
        from_db(self.pathloss.0 + self.shadowing.0) / self.fading(slot, prb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uma_nlos_cell_edge() {
        let d3 = (150.0f64 * 150.0 + 23.5 * 23.5).sqrt();
        let pl = pathloss_db(LinkClass::UMA_NLOS, d3, 28.0, 25.0, 1.5).unwrap();
        assert!((pl.0 - 127.730_578_915_811_88).abs() < 1e-9);
        let los = pathloss_db(LinkClass::UMA_LOS, d3, 28.0, 25.0, 1.5).unwrap();
        assert!(pl.0 >= los.0);
    }

    #[test]
    fn umi_los_before_breakpoint() {
        // d3d = 75 m exactly; both heights chosen equal so d2d = d3d.
        let pl = pathloss_db(LinkClass::UMI_LOS, 75.0, 28.0, 10.0, 10.0).unwrap();
        assert!((pl.0 - 100.719_447_158_070_08).abs() < 1e-9);
    }

    #[test]
    fn validity_errors() {
        assert!(pathloss_db(LinkClass::UMA_NLOS, 100.0, 0.4, 25.0, 1.5).is_err());
        assert!(pathloss_db(LinkClass::UMA_NLOS, 100.0, 101.0, 25.0, 1.5).is_err());
        assert!(pathloss_db(LinkClass::UMA_NLOS, 0.0, 28.0, 25.0, 1.5).is_err());
        assert!(pathloss_db(LinkClass::UMA_NLOS, 6000.0, 28.0, 25.0, 1.5).is_err());
        assert!(pathloss_db(LinkClass::UMA_NLOS, 10.0, 28.0, 25.0, 1.5).is_err());
        let msg = pathloss_db(LinkClass::UMI_LOS, 10.0, 200.0, 10.0, 1.5)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("validity"));
    }

    #[test]
    fn pathloss_is_monotone_within_branches() {
        for class in [
            LinkClass::UMA_LOS,
            LinkClass::UMA_NLOS,
            LinkClass::UMI_LOS,
            LinkClass::UMI_NLOS,
        ] {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..2000 {
                let d2 = 10.0 + i as f64 * 2.0;
                let d3 = (d2 * d2 + 23.5 * 23.5).sqrt();
                let pl = pathloss_db(class, d3, 28.0, 25.0, 1.5).unwrap().0;
                assert!(pl > prev, "{class} not increasing at {d2} m");
                prev = pl;
            }
        }
    }

    #[test]
    fn nlos_never_below_los() {
        for d2 in [10.0, 50.0, 300.0, 1200.0, 4900.0] {
            let d3 = (d2 * d2 + 23.5f64 * 23.5).sqrt();
            for fc in [0.7, 3.5, 28.0, 60.0] {
                let los = pathloss_db(LinkClass::UMA_LOS, d3, fc, 25.0, 1.5).unwrap();
                let nlos = pathloss_db(LinkClass::UMA_NLOS, d3, fc, 25.0, 1.5).unwrap();
                assert!(nlos.0 >= los.0);
            }
        }
    }

    #[test]
    fn link_class_names() {
        for s in ["uma-los", "uma-nlos", "umi-los", "umi-nlos"] {
            assert_eq!(s.parse::<LinkClass>().unwrap().to_string(), s);
        }
        assert!("rural".parse::<LinkClass>().is_err());
    }

    #[test]
    fn zero_sigma_shadowing() {
        let params = ChannelParams {
            shadowing_sigma_db: ShadowingSigmas {
                uma_los: 0.0,
                uma_nlos: 0.0,
                umi_los: 0.0,
                umi_nlos: 0.0,
            },
            ..ChannelParams::default()
        };
        let mut r = rng::stream(3, 0, 0);
        for _ in 0..100 {
            assert_eq!(draw_shadowing(LinkClass::UMA_NLOS, &params, &mut r).0, 0.0);
        }
    }

    #[test]
    fn shadowing_spread() {
        let params = ChannelParams::default();
        let mut r = rng::stream(11, 0, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| draw_shadowing(LinkClass::UMA_NLOS, &params, &mut r).0)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 6.0).abs() < 0.1, "std {}", var.sqrt());
        assert!(mean.abs() < 0.1);
    }

    #[test]
    fn same_seed_same_draws() {
        let params = ChannelParams::default();
        let a = LinkState::generate(
            LinkClass::UMI_LOS,
            GainDb(90.0),
            &params,
            50,
            2,
            &mut rng::stream(5, 1, 2),
        );
        let b = LinkState::generate(
            LinkClass::UMI_LOS,
            GainDb(90.0),
            &params,
            50,
            2,
            &mut rng::stream(5, 1, 2),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn fading_is_unit_mean() {
        let params = ChannelParams::default();
        for class in [LinkClass::UMA_NLOS, LinkClass::UMI_LOS] {
            let g = draw_fading(class, &params, 1_000_000, 1, &mut rng::stream(9, 0, 1));
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            assert!((mean - 1.0).abs() < 0.005, "{class}: mean {mean}");
            assert!(g.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn rayleigh_power_median() {
        let params = ChannelParams::default();
        let mut g = draw_fading(
            LinkClass::UMA_NLOS,
            &params,
            200_001,
            1,
            &mut rng::stream(2, 0, 0),
        );
        g.sort_by(f64::total_cmp);
        let median = g[g.len() / 2];
        assert!(
            (median - std::f64::consts::LN_2).abs() < 0.01,
            "median {median}"
        );
    }

    #[test]
    fn infinite_k_removes_fading() {
        let params = ChannelParams {
            rician_k_db: f64::INFINITY,
            ..ChannelParams::default()
        };
        let g = draw_fading(
            LinkClass::UMI_LOS,
            &params,
            10,
            3,
            &mut rng::stream(0, 0, 0),
        );
        assert_eq!(g, vec![1.0; 30]);
    }

    #[test]
    fn attenuation_combines_components() {
        let params = ChannelParams::default();
        let s = LinkState::generate(
            LinkClass::UMA_NLOS,
            GainDb(100.0),
            &params,
            4,
            1,
            &mut rng::stream(1, 0, 0),
        );
        for slot in 0..4 {
            let expected = 10f64.powf((100.0 + s.shadowing.0) / 10.0) / s.fading(slot, 0);
            let got = s.attenuation(slot, 0);
            assert!(((got - expected) / expected).abs() < 1e-12);
            assert!(got > 0.0);
        }
    }
}
