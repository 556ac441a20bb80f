//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use ncr_sim::channel::{draw_fading, pathloss_db, ChannelParams, LinkClass};
use ncr_sim::engine::{write_outputs, Metric, SweepOutput};
use ncr_sim::linkbudget::{evaluate_prb, PrbChannel};
use ncr_sim::mac::{spectral_efficiency, CbrSource, CqiTable, Numerology, OuterLoopParams, UeMac};
use ncr_sim::ncr::{forward_power, NcrGainMode, NcrState};
use ncr_sim::rng;
use ncr_sim::scenario::NodeId;
use ncr_sim::units::{GainLinear, PowerDbm, PowerLinear};
use ncr_sim::{SimConfig, Simulator};
use rand::Rng;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

const A1_SE_TARGET: f64 = 5.18;
const A1_SE_TOL: f64 = 0.005;
const A2_INPUTS: usize = 10_000;
const A2_REL_TOL: f64 = 1e-12;
const A4_MAX_SPREAD_DB: f64 = 0.2;
const A6_MIN_BENEFIT_DB: f64 = 10.0;
const A7_MIN_DROP_DB: f64 = 3.0;
const A8_SAMPLES: usize = 100_000;
const A9_TOL_DB: f64 = 0.01;
const A10_BLER_RANGE: (f64, f64) = (0.05, 0.15);
const A10_SLOTS: usize = 100_000;
const Q90: f64 = 0.9;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn a1() -> Outcome {
    let se = spectral_efficiency(15, &CqiTable::standard(), &Numerology::default());
    let err = (se - A1_SE_TARGET).abs();
    check(
        err <= A1_SE_TOL,
        format!("SE(CQI 15) = {se:.5} bits/s/Hz"),
        format!("SE(CQI 15) = {se:.5}, |err| {err:.5} > {A1_SE_TOL}"),
    )
}

fn a2() -> Outcome {
    let mut r = rng::stream(2, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..A2_INPUTS {
        let cap = PowerDbm(r.random_range(-20.0..30.0)).to_linear().unwrap();
        let input = PowerDbm(r.random_range(-160.0..20.0)).to_linear().unwrap();
        let st = NcrState::new(NcrGainMode::Dynamic, cap).unwrap();
        let out = forward_power(&st, input);
        // Output rebuilt from the applied gain, as the link budget does.
        let rebuilt = out.applied_gain.0 * input.0;
        worst = worst.max(((rebuilt - cap.0) / cap.0).abs());
        worst = worst.max(((out.power.0 - cap.0) / cap.0).abs());
    }
    check(
        worst <= A2_REL_TOL,
        format!("{A2_INPUTS} inputs, worst relative error {worst:.2e}"),
        format!("worst relative error {worst:.2e} > {A2_REL_TOL:.0e}"),
    )
}

fn a3(out: &SweepOutput, offsets: &[f64]) -> Outcome {
    let fixed90 = NcrGainMode::Fixed { gain_db: 90.0 };
    let mut compared = Vec::new();
    for &o in offsets {
        let (Some(f), Some(d)) = (out.cell(o, fixed90), out.cell(o, NcrGainMode::Dynamic)) else {
            continue;
        };
        if !f.samples.fully_saturated() {
            continue;
        }
        let a = f.samples.metric(NodeId::U2, Metric::Snr);
        let b = d.samples.metric(NodeId::U2, Metric::Snr);
        let identical =
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        if !identical {
            return Err(format!(
                "offset {o}: saturated fixed-90 U2 SNR differs from dynamic"
            ));
        }
        compared.push((o, a.len()));
    }
    check(
        !compared.is_empty(),
        format!(
            "bit-identical U2 SNR on {} fully saturated cells (offsets {:?}, {} samples each)",
            compared.len(),
            compared.iter().map(|c| c.0).collect::<Vec<_>>(),
            compared[0].1
        ),
        "no sweep cell where fixed 90 dB saturates every PRB".into(),
    )
}

fn a4(out: &SweepOutput, modes: &[NcrGainMode]) -> Outcome {
    let mut worst = (0.0f64, NcrGainMode::Dynamic);
    for &m in modes {
        let v: Vec<f64> = out
            .curve(m, NodeId::U1, Metric::Snr, Q90)
            .iter()
            .map(|p| p.1)
            .collect();
        let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread >= worst.0 {
            worst = (spread, m);
        }
    }
    check(
        worst.0 < A4_MAX_SPREAD_DB,
        format!(
            "U1 SNR q90 spread across offsets {:.4} dB (worst mode {})",
            worst.0, worst.1
        ),
        format!(
            "U1 SNR q90 spread {:.4} dB in mode {} >= {A4_MAX_SPREAD_DB}",
            worst.0, worst.1
        ),
    )
}

fn argmax(curve: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, p) in curve.iter().enumerate() {
        if p.1 > curve[best].1 {
            best = i;
        }
    }
    best
}

fn a5(out: &SweepOutput) -> Outcome {
    let c = out.curve(NcrGainMode::Dynamic, NodeId::U2, Metric::Snr, Q90);
    let i = argmax(&c);
    let (first, last, peak) = (c[0], c[c.len() - 1], c[i]);
    let interior = i > 0 && i + 1 < c.len();
    check(
        interior && first.1 < peak.1 && last.1 < peak.1,
        format!(
            "U2 SNR q90 peaks at {} m ({:.2} dB); {:.2} dB at {} m, {:.2} dB at {} m",
            peak.0, peak.1, first.1, first.0, last.1, last.0
        ),
        format!(
            "U2 SNR q90 maximum at {} m is not strictly interior",
            peak.0
        ),
    )
}

fn a6(out: &SweepOutput) -> Outcome {
    let dynamic = out.curve(NcrGainMode::Dynamic, NodeId::U2, Metric::Snr, Q90);
    let base = out.curve(NcrGainMode::Off, NodeId::U2, Metric::Snr, Q90);
    let i = argmax(&dynamic);
    let Some(b) = base.iter().find(|p| p.0 == dynamic[i].0) else {
        return Err("baseline sweep lacks the best offset".into());
    };
    let gain = dynamic[i].1 - b.1;
    check(
        gain >= A6_MIN_BENEFIT_DB,
        format!(
            "at {} m: dynamic {:.2} dB vs off {:.2} dB, benefit {gain:.2} dB",
            dynamic[i].0, dynamic[i].1, b.1
        ),
        format!("benefit {gain:.2} dB < {A6_MIN_BENEFIT_DB} dB"),
    )
}

fn a7(out: &SweepOutput) -> Outcome {
    let trace: Vec<_> = out
        .beam_trace
        .iter()
        .filter(|r| r.gain_mode == NcrGainMode::Dynamic)
        .collect();
    let mut switch = None;
    for w in trace.windows(2) {
        let d = w[0].mean_interference_u1_dbm - w[1].mean_interference_u1_dbm;
        if w[0].beam_index != w[1].beam_index {
            if d >= A7_MIN_DROP_DB && switch.is_none() {
                switch = Some((
                    w[0].ncr_offset,
                    w[1].ncr_offset,
                    w[0].beam_index,
                    w[1].beam_index,
                    d,
                ));
            }
        } else if d > 0.0 {
            return Err(format!(
                "interference falls by {d:.3} dB between {} and {} m within beam {}",
                w[0].ncr_offset, w[1].ncr_offset, w[0].beam_index
            ));
        }
    }
    match switch {
        Some((a, b, ba, bb, d)) => Ok(format!(
            "beam {ba} -> {bb} between {a} and {b} m, U1 interference drops {d:.2} dB; nondecreasing within segments"
        )),
        None => Err(format!("no beam change with a U1 interference drop >= {A7_MIN_DROP_DB} dB")),
    }
}

fn a8(out: &SweepOutput, p_n: f64) -> Outcome {
    let mut r = rng::stream(8, 0, 0);
    let modes = [
        NcrGainMode::Dynamic,
        NcrGainMode::Fixed { gain_db: 70.0 },
        NcrGainMode::Fixed { gain_db: 90.0 },
        NcrGainMode::Off,
    ];
    let cap = PowerDbm(13.8).to_linear().unwrap();
    let mut lin = |lo: f64, hi: f64| GainLinear(10f64.powf(r.random_range(lo..hi) / 10.0));
    for k in 0..A8_SAMPLES {
        let mode = modes[k % modes.len()];
        let ch = PrbChannel {
            p_tx_b1: PowerLinear(lin(0.0, 30.0).0),
            p_tx_b2: PowerLinear(lin(0.0, 30.0).0),
            p_n: PowerLinear(p_n),
            g_b1_u1: lin(-20.0, 27.0),
            g_b1_u2: lin(-20.0, 27.0),
            g_b1_ncr: lin(-20.0, 27.0),
            g_b2_u1: lin(-20.0, 27.0),
            g_b2_u2: lin(-20.0, 27.0),
            g_b2_ncr: lin(-20.0, 27.0),
            g_ncr_rx_b1: lin(-20.0, 27.0),
            g_ncr_rx_b2: lin(-20.0, 27.0),
            g_ncr_tx_u1: lin(-20.0, 27.0),
            g_ncr_tx_u2: lin(-20.0, 27.0),
            g_u1: GainLinear(1.0),
            g_u2: GainLinear(1.0),
            l_b1_u1: lin(60.0, 160.0),
            l_b1_u2: lin(60.0, 160.0),
            l_b1_ncr: lin(60.0, 160.0),
            l_b2_u1: lin(60.0, 160.0),
            l_b2_u2: lin(60.0, 160.0),
            l_b2_ncr: lin(60.0, 160.0),
            l_ncr_u1: lin(60.0, 140.0),
            l_ncr_u2: lin(60.0, 140.0),
        };
        let st = NcrState::new(mode, cap).unwrap();
        let o = evaluate_prb(&ch, &st, 0, 0).map_err(|e| e.to_string())?;
        for s in [o.u1, o.u2] {
            if !(s.sinr.0 <= s.snr.0 && s.effective_noise.0 >= p_n) {
                return Err(format!(
                    "random sample {k} ({mode}): ordering or noise floor violated"
                ));
            }
        }
        if mode.is_active() && !(o.u2.effective_noise.0 > p_n) {
            return Err(format!(
                "random sample {k} ({mode}): U2 noise not above floor"
            ));
        }
    }
    let mut swept = 0usize;
    for c in &out.cells {
        for ue in [NodeId::U1, NodeId::U2] {
            let s = c.samples.ue(ue);
            for i in 0..s.snr_db.len() {
                let n = s.effective_noise_mw[i];
                let strict = ue == NodeId::U2 && c.mode.is_active();
                if s.sinr_db[i] > s.snr_db[i] || n < p_n || (strict && !(n > p_n)) {
                    return Err(format!(
                        "sweep sample {i} of {ue} at {} m ({}) violates ordering",
                        c.offset, c.mode
                    ));
                }
                swept += 1;
            }
        }
    }
    Ok(format!(
        "{A8_SAMPLES} randomized PRBs and {swept} sweep samples satisfy SINR <= SNR, noise >= p_n"
    ))
}

fn a9() -> Outcome {
    // (class, d2d, h_bs, h_ut, fc GHz, reference dB) from an independent
    // high-precision evaluation of the Table 7.4.1-1 formulas.
    let cases = [
        (
            LinkClass::UMA_NLOS,
            150.0,
            25.0,
            1.5,
            28.0,
            127.730578915812,
        ),
        (LinkClass::UMA_NLOS, 75.0, 25.0, 10.0, 28.0, 110.99338625009),
        (LinkClass::UMI_LOS, 75.0, 10.0, 1.5, 28.0, 100.777646036107),
        (LinkClass::UMA_LOS, 300.0, 25.0, 1.5, 28.0, 111.46905233208),
        (LinkClass::UMI_LOS, 2500.0, 10.0, 1.5, 3.5, 135.064440038126),
        (LinkClass::UMA_LOS, 1000.0, 25.0, 1.5, 3.5, 109.406494346027),
        (
            LinkClass::UMI_NLOS,
            200.0,
            10.0,
            1.5,
            28.0,
            134.464657869198,
        ),
    ];
    let mut worst = 0.0f64;
    for (class, d2d, h_bs, h_ut, fc, want) in cases {
        let d3d = f64::hypot(d2d, h_bs - h_ut);
        let got = pathloss_db(class, d3d, fc, h_bs, h_ut)
            .map_err(|e| e.to_string())?
            .0;
        let err = (got - want).abs();
        if err > A9_TOL_DB {
            return Err(format!("{class} at {d2d} m: {got:.4} dB vs {want:.4} dB"));
        }
        worst = worst.max(err);
    }
    Ok(format!(
        "{} geometries, worst deviation {worst:.2e} dB",
        cases.len()
    ))
}

fn a10() -> Outcome {
    let table = CqiTable::standard();
    let num = Numerology::default();
    let mut mac = UeMac::new(OuterLoopParams::default(), CbrSource::default());
    let mut r = rng::stream(10, 0, 0);
    let fading = draw_fading(
        LinkClass::UMA_NLOS,
        &ChannelParams::default(),
        A10_SLOTS,
        1,
        &mut r,
    );
    let mean_sinr_db = 10.0;
    for f in fading {
        mac.serve(mean_sinr_db + 10.0 * f.log10(), 1, &table, &num);
    }
    let rate = mac.stats.error_rate();
    let offset = mac.outer_loop().offset_db;
    check(
        (A10_BLER_RANGE.0..=A10_BLER_RANGE.1).contains(&rate),
        format!(
            "error rate {:.4} over {} transmissions (Rayleigh, mean SINR {mean_sinr_db} dB, final offset {offset:.1} dB)",
            rate, mac.stats.transmissions
        ),
        format!("error rate {rate:.4} outside {A10_BLER_RANGE:?}"),
    )
}

fn run_in_pool(threads: usize, config: &SimConfig) -> SweepOutput {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| Simulator::new(config.clone()).unwrap().run_sweep().unwrap())
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn a11(single: &SweepOutput, multi: &SweepOutput) -> Outcome {
    let d1 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d4 = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_outputs(d1.path(), single, true).map_err(|e| e.to_string())?;
    write_outputs(d4.path(), multi, true).map_err(|e| e.to_string())?;
    let (f1, f4) = (files_in(d1.path()), files_in(d4.path()));
    let names: Vec<_> = f1.iter().map(|f| f.0.as_str()).collect();
    let bytes: usize = f1.iter().map(|f| f.1.len()).sum();
    check(
        f1 == f4,
        format!("1-thread and 4-thread sweeps wrote byte-identical {names:?} ({bytes} bytes)"),
        "CSV outputs differ between 1 and 4 threads".into(),
    )
}

fn main() -> ExitCode {
    let config = SimConfig::default();
    let p_n = Simulator::new(config.clone()).unwrap().noise_power().0;
    let single = run_in_pool(1, &config);
    let multi = run_in_pool(4, &config);
    let w = &config.sweep;

    let results: Vec<(&str, Outcome)> = vec![
        ("A1 spectral-efficiency ceiling", a1()),
        ("A2 dynamic-gain identity", a2()),
        ("A3 saturation equivalence", a3(&multi, &w.offsets_m)),
        ("A4 U1 SNR flatness", a4(&multi, &w.gain_modes)),
        ("A5 interior optimum", a5(&multi)),
        ("A6 repeater benefit", a6(&multi)),
        ("A7 beam-switch discontinuity", a7(&multi)),
        ("A8 ordering and noise floor", a8(&multi, p_n)),
        ("A9 pathloss oracle", a9()),
        ("A10 outer-loop equilibrium", a10()),
        ("A11 determinism across thread counts", a11(&single, &multi)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
