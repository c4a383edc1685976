//! Scenario drivers shared by the command-line runner and the acceptance
//! suite. Every driver is a pure function of its parameters and seed; trials
//! fan out over rayon and are reduced in index order.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::adversary::{
    ccs_defend, cdpp_protect, exponential_profile, occupied_taps, run_risj_with, run_risl_speculate, run_risl_toggle,
    rss_bits, wideband_bits, AttackKind, AttackScenario, CcsParams, EveKnowledge, OfdmBand, RisjSetup, RislSetup,
    RssBits,
};
use crate::channel::ChannelStats;
use crate::error::{invalid, Result};
use crate::keygen::{bdr, cdf_quantize, kgr, BitString};
use crate::keyrate::{ksg_mi, sum_secret_key_rate};
use crate::optimize::{onoff_select, optimize_phases, OptOptions};
use crate::probing::{block_average, run_session, DirectFactor, Party, ProbeSession, RealizationPolicy};
use crate::randomness::{default_block_len, Nist};
use crate::ris::{random_config, RisConfig, RisMode, RisSchedule, ScheduleKind};
use crate::scalar::Real;
use crate::seed::{Purpose, Seed};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

/// `printf("%.6g")`-style rendering.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&e) {
        let sign = if e < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mant), sign, e.abs())
    } else {
        let decimals = (5 - e).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_g6(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Cell::Num(x) => *x,
            Cell::Int(i) => *i as f64,
            Cell::Text(_) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Rows whose named columns equal the given values.
    pub fn select(&self, filter: &[(&str, f64)]) -> Vec<&Vec<Cell>> {
        self.rows
            .iter()
            .filter(|r| filter.iter().all(|(k, v)| self.column(k).is_some_and(|c| r[c].as_f64() == *v)))
            .collect()
    }

    pub fn value(&self, row: &[Cell], name: &str) -> f64 {
        self.column(name).map_or(f64::NAN, |c| row[c].as_f64())
    }
}

fn seed_at(seed: u64, path: &[u64]) -> Seed {
    path.iter().fold(Seed(seed), |s, &i| s.child(i))
}

fn mismatches(a: &BitString, b: &BitString) -> Result<(usize, usize)> {
    let r = bdr(a, b)?;
    Ok(((r * a.len() as f64).round() as usize, a.len()))
}

fn pooled(parts: &[(usize, usize)]) -> f64 {
    let (d, n) = parts.iter().fold((0, 0), |(d, n), &(x, y)| (d + x, n + y));
    d as f64 / n as f64
}

// --------------------------------------------------------- static KGR/BDR

#[derive(Debug, Clone, PartialEq)]
pub struct StaticParams {
    pub l_values: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub n_elements: usize,
    pub gamma: f64,
    pub n_bits: usize,
    pub t_probe_ms: f64,
    pub t_update_ms: f64,
}

impl Default for StaticParams {
    fn default() -> Self {
        StaticParams {
            l_values: vec![1, 2, 3, 4],
            snr_db: vec![15.0],
            n_elements: 128,
            gamma: 0.5,
            n_bits: 10_000,
            t_probe_ms: 2.0,
            t_update_ms: 2.0,
        }
    }
}

/// CDF bits of block-mean amplitude for Alice and Bob.
pub fn block_mean_bits(session: &ProbeSession<f64>) -> Result<(BitString, BitString)> {
    let l = session.l_oversample;
    let bits = |p: Party| -> Result<BitString> {
        let means = block_average::<f64, Complex<f64>>(&session.series(p, 0), l);
        Ok(cdf_quantize(&means.iter().map(|z| z.norm()).collect::<Vec<_>>())?.from_party(p))
    };
    Ok((bits(Party::Alice)?, bits(Party::Bob)?))
}

/// Static environment, one session per trial: pooled BDR of block-mean bits.
/// `with_ris = false` holds a surface that carries no energy.
pub fn static_bdr(
    n_elements: usize,
    gamma: f64,
    with_ris: bool,
    l: usize,
    snr_db: f64,
    n_bits: usize,
    trials: usize,
    seed: Seed,
) -> Result<f64> {
    if trials == 0 || n_bits < 2 * trials {
        return Err(invalid("need trials ≥ 1 and at least two bits per trial"));
    }
    let stats = ChannelStats::new(n_elements, 1).with_gamma(if with_ris { gamma } else { 0.0 });
    let kind = if with_ris { ScheduleKind::RandomPerBlock } else { ScheduleKind::Hold };
    let schedule = RisSchedule::new(kind, l, RisMode::BinaryPhase, n_elements)?;
    let per = n_bits.div_ceil(trials);
    let parts: Vec<(usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.child(t as u64).rng(Purpose::Config);
            let s = run_session(&stats, &schedule, snr_db, per * l, RealizationPolicy::Static, &mut rng)?;
            let (a, b) = block_mean_bits(&s)?;
            mismatches(&a, &b)
        })
        .collect::<Result<_>>()?;
    Ok(pooled(&parts))
}

pub fn static_kgr_bdr(seed: u64, trials: usize, p: &StaticParams) -> Result<Table> {
    let mut rows = Vec::new();
    for (si, &snr) in p.snr_db.iter().enumerate() {
        for &l in &p.l_values {
            let rate = kgr(l, p.t_probe_ms * 1e-3, p.t_update_ms * 1e-3)?;
            // the same draws serve every L, so differences across L are not sampling noise
            let with = static_bdr(p.n_elements, p.gamma, true, l, snr, p.n_bits, trials, seed_at(seed, &[si as u64, 0]))?;
            let without = static_bdr(p.n_elements, p.gamma, false, l, snr, p.n_bits, trials, seed_at(seed, &[si as u64, 1]))?;
            rows.push(vec![Cell::Num(snr), Cell::Int(l as i64), Cell::Num(rate), Cell::Num(with), Cell::Num(without)]);
        }
    }
    Ok(Table { header: vec!["snr_db", "L", "kgr_bits_per_s", "bdr_with_ris", "bdr_without_ris"], rows })
}

// ---------------------------------------------------------- multi-user rate

#[derive(Debug, Clone, PartialEq)]
pub struct SumrateParams {
    pub n_elements: usize,
    pub n_uts: usize,
    pub rho_ut: Vec<f64>,
    pub rho_elem: f64,
    pub elem_phase: f64,
    pub snr_db: Vec<f64>,
    pub k_on: usize,
    pub opt: OptOptions<f64>,
}

impl Default for SumrateParams {
    fn default() -> Self {
        SumrateParams {
            n_elements: 16,
            n_uts: 2,
            rho_ut: vec![0.0, 0.5],
            rho_elem: 0.7,
            elem_phase: 0.4,
            snr_db: (0..=12).map(|i| -5.0 + 2.5 * i as f64).collect(),
            k_on: 8,
            opt: OptOptions::default(),
        }
    }
}

impl SumrateParams {
    pub fn stats(&self, rho_ut: f64) -> ChannelStats<f64> {
        ChannelStats::new(self.n_elements, self.n_uts).with_correlation(self.rho_elem, self.elem_phase, rho_ut)
    }
}

/// Rates of random (averaged over `trials` draws), on-off and optimized
/// configurations per (ρ_ut, SNR).
pub fn multiuser_sumrate(seed: u64, trials: usize, p: &SumrateParams) -> Result<Table> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let mut rng = Seed(seed).rng(Purpose::Config);
    let randoms: Vec<RisConfig<f64>> =
        (0..trials).map(|_| random_config(RisMode::ContinuousPhase, p.n_elements, &mut rng)).collect::<Result<_>>()?;
    let points: Vec<(usize, f64, f64)> = p
        .rho_ut
        .iter()
        .flat_map(|&r| p.snr_db.iter().map(move |&s| (r, s)))
        .enumerate()
        .map(|(i, (r, s))| (i, r, s))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(i, rho, snr)| {
            let st = p.stats(rho);
            let random = randoms.iter().map(|c| sum_secret_key_rate(&st, c, snr)).sum::<Result<f64>>()? / trials as f64;
            let onoff = sum_secret_key_rate(&st, &onoff_select(&st, p.k_on)?, snr)?;
            let opts = OptOptions { seed: Seed(seed).child(i as u64 + 1).0, ..p.opt };
            let (_, opt) = optimize_phases(&st, snr, &opts)?;
            Ok(vec![Cell::Num(rho), Cell::Num(snr), Cell::Num(random), Cell::Num(onoff), Cell::Num(opt)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { header: vec!["rho_ut", "snr_db", "rate_random", "rate_onoff", "rate_optimized"], rows })
}

/// SNR shift (dB) that moves curve `b` onto curve `a`, averaged over the
/// levels both curves reach; positive when `b` needs more SNR.
pub fn horizontal_gap(snr: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let interp = |ys: &[f64], level: f64| -> Option<f64> {
        (0..ys.len() - 1).find_map(|i| {
            let (y0, y1) = (ys[i], ys[i + 1]);
            (y0 <= level && level <= y1 && y1 > y0).then(|| snr[i] + (level - y0) / (y1 - y0) * (snr[i + 1] - snr[i]))
        })
    };
    let (lo, hi) = (a.iter().copied().fold(f64::INFINITY, f64::min), a.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let gaps: Vec<f64> = b
        .iter()
        .filter(|&&y| y > lo && y < hi)
        .filter_map(|&y| Some(interp(b, y)? - interp(a, y)?))
        .collect();
    if gaps.is_empty() {
        f64::NAN
    } else {
        gaps.iter().sum::<f64>() / gaps.len() as f64
    }
}

// -------------------------------------------------------------------- RISJ

#[derive(Debug, Clone, PartialEq)]
pub struct RisjParams {
    pub bandwidth_mhz: Vec<f64>,
    /// RIS path delay in taps of the matching bandwidth (fractional = off-grid).
    pub ris_delay_taps: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub gamma: f64,
    pub n_elements: usize,
    pub n_direct_taps: usize,
    pub profile_decay: f64,
    pub coherence: usize,
    pub blocks: usize,
    pub kappa: f64,
}

impl Default for RisjParams {
    fn default() -> Self {
        RisjParams {
            bandwidth_mhz: vec![23.04, 7.68],
            ris_delay_taps: vec![24.0, 44.5],
            snr_db: vec![0.0, 10.0, 20.0, 25.0],
            gamma: 0.1,
            n_elements: 64,
            n_direct_taps: 18,
            profile_decay: 8.0,
            coherence: 32,
            blocks: 16,
            kappa: 5.0,
        }
    }
}

impl RisjParams {
    pub fn stats(&self, delay: f64) -> ChannelStats<f64> {
        let idx = delay.floor();
        ChannelStats::new(self.n_elements, 1).with_gamma(self.gamma).with_multipath(
            exponential_profile(self.n_direct_taps, self.profile_decay),
            idx as usize,
            delay - idx,
        )
    }
}

/// Aggregated outcome of one RISJ table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisjPoint {
    pub bdr_ab: f64,
    pub bdr_ae: f64,
    pub bits_per_use: f64,
    pub detection_rate: f64,
    pub false_alarm_rate: f64,
}

fn drop_taps(csi: &[Vec<Complex<f64>>], mask: &[usize]) -> Vec<Vec<Complex<f64>>> {
    csi.iter()
        .map(|row| {
            let mut t = row.clone();
            f64::dft(&mut t, true);
            for &j in mask {
                t[j] = Complex::new(0.0, 0.0);
            }
            f64::dft(&mut t, false);
            t
        })
        .collect()
}

/// One RISJ configuration: `attack` toggles desync, `ccs` the separation defense.
pub fn risj_point(p: &RisjParams, band: usize, snr_db: f64, attack: bool, ccs: bool, trials: usize, seed: Seed) -> Result<RisjPoint> {
    let k = OfdmBand::from_bandwidth(p.bandwidth_mhz[band] * 1e6)?.n_subcarriers;
    let delay = p.ris_delay_taps[band];
    let stats = p.stats(delay);
    let ris_taps: Vec<usize> =
        if delay.fract() == 0.0 { vec![delay as usize] } else { vec![delay.floor() as usize, delay.ceil() as usize] };
    let setup = RisjSetup { n_subcarriers: k, coherence_probes: p.coherence, attack };
    let per: Vec<(f64, f64, f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            // attack and no-attack runs share a seed: same channels, same noise
            let mut rng = seed.child(t as u64).rng(Purpose::Config);
            let s = run_risj_with(&stats, snr_db, p.coherence * p.blocks, &setup, &mut rng)?;
            let (alice, bob, eve) = (s.snapshots(Party::Alice), s.snapshots(Party::Bob), s.snapshots(Party::Eve));
            if ccs {
                let params = CcsParams { n_subcarriers: k, kappa: p.kappa, min_snapshots: p.coherence };
                let out = ccs_defend(&alice, &bob, &params)?;
                let (_, be) = wideband_bits(&drop_taps(&alice, &out.mask), &drop_taps(&eve, &out.mask), out.bits_per_use())?;
                let detected = ris_taps.iter().any(|r| out.mask.contains(r));
                let false_alarms = out.mask.iter().filter(|j| !ris_taps.contains(j)).count();
                Ok((
                    bdr(&out.bits_alice, &out.bits_bob)?,
                    bdr(&out.bits_alice, &be)?,
                    out.bits_per_use() as f64,
                    f64::from(u8::from(detected)),
                    false_alarms as f64 / (k - ris_taps.len()) as f64,
                ))
            } else {
                let n = 2 * occupied_taps(&alice, &bob, p.kappa).len().max(1);
                let (ba, bb) = wideband_bits(&alice, &bob, n)?;
                let (_, be) = wideband_bits(&alice, &eve, n)?;
                Ok((bdr(&ba, &bb)?, bdr(&ba, &be)?, n as f64, f64::NAN, f64::NAN))
            }
        })
        .collect::<Result<_>>()?;
    let m = |f: fn(&(f64, f64, f64, f64, f64)) -> f64| per.iter().map(f).sum::<f64>() / per.len() as f64;
    Ok(RisjPoint {
        bdr_ab: m(|x| x.0),
        bdr_ae: m(|x| x.1),
        bits_per_use: m(|x| x.2),
        detection_rate: m(|x| x.3),
        false_alarm_rate: m(|x| x.4),
    })
}

pub fn risj(seed: u64, trials: usize, p: &RisjParams) -> Result<Table> {
    if p.bandwidth_mhz.len() != p.ris_delay_taps.len() {
        return Err(invalid("bandwidth_mhz and ris_delay_taps need one entry each"));
    }
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let mut rows = Vec::new();
    for b in 0..p.bandwidth_mhz.len() {
        for (si, &snr) in p.snr_db.iter().enumerate() {
            let s = seed_at(seed, &[b as u64, si as u64]);
            for (attack, ccs) in [(false, false), (true, false), (true, true), (false, true)] {
                let r = risj_point(p, b, snr, attack, ccs, trials, s)?;
                rows.push(vec![
                    Cell::Num(p.bandwidth_mhz[b]),
                    Cell::Int(attack.into()),
                    Cell::Int(ccs.into()),
                    Cell::Num(snr),
                    Cell::Num(p.gamma),
                    Cell::Num(r.bdr_ab),
                    Cell::Num(r.bdr_ae),
                    Cell::Num(r.bits_per_use),
                    Cell::Num(r.detection_rate),
                    Cell::Num(r.false_alarm_rate),
                ]);
            }
        }
    }
    Ok(Table {
        header: vec![
            "bandwidth_mhz",
            "attack",
            "ccs",
            "snr_db",
            "gamma",
            "bdr_ab",
            "bdr_ae",
            "kgr_bits_per_use",
            "detection_rate",
            "false_alarm_rate",
        ],
        rows,
    })
}

// -------------------------------------------------------------------- RISL

#[derive(Debug, Clone, PartialEq)]
pub struct RislParams {
    pub gamma: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub n_rounds: usize,
    pub block_len: usize,
    pub n_subcarriers: usize,
    pub n_direct_taps: usize,
    pub ris_delay_taps: usize,
    pub n_elements: usize,
}

impl Default for RislParams {
    fn default() -> Self {
        RislParams {
            gamma: vec![0.1, 0.2, 0.5],
            snr_db: vec![0.0, 10.0, 20.0, 25.0],
            n_rounds: 64,
            block_len: 8,
            n_subcarriers: 256,
            n_direct_taps: 4,
            ris_delay_taps: 6,
            n_elements: 64,
        }
    }
}

impl RislParams {
    pub fn stats(&self, gamma: f64) -> ChannelStats<f64> {
        ChannelStats::new(self.n_elements, 1).with_gamma(gamma).with_multipath(
            exponential_profile(self.n_direct_taps, 2.0),
            self.ris_delay_taps,
            0.0,
        )
    }

    pub fn setup(&self) -> RislSetup {
        RislSetup { n_subcarriers: self.n_subcarriers, block_len: self.block_len }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RislPoint {
    pub bdr_ab: f64,
    pub bdr_ae: f64,
    pub bits_per_use: f64,
}

/// Pooled BDRs of one leakage attack, optionally under private pilots.
pub fn risl_point(p: &RislParams, kind: AttackKind, gamma: f64, snr_db: f64, protected: bool, trials: usize, seed: Seed) -> Result<RislPoint> {
    let stats = p.stats(gamma);
    let setup = p.setup();
    let scenario = AttackScenario::new(kind, gamma, EveKnowledge::FullCsi);
    let mode = if protected { RssBits::PerProbe } else { RssBits::PerBlock };
    let parts: Vec<((usize, usize), (usize, usize))> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.child(t as u64).rng(Purpose::Config);
            let (s, eve) = if protected {
                cdpp_protect(&stats, &scenario, snr_db, p.n_rounds, &setup, DirectFactor::PrivateGaussian, &mut rng)?
            } else if kind == AttackKind::RislToggle {
                run_risl_toggle(&stats, snr_db, p.n_rounds, &setup, &mut rng)?
            } else {
                run_risl_speculate(&stats, &scenario, snr_db, p.n_rounds, &setup, &mut rng)?
            };
            let a = rss_bits(&s, Party::Alice, mode)?;
            let b = rss_bits(&s, Party::Bob, mode)?;
            Ok((mismatches(&a, &b)?, mismatches(&a, &eve)?))
        })
        .collect::<Result<_>>()?;
    let ab: Vec<_> = parts.iter().map(|x| x.0).collect();
    let ae: Vec<_> = parts.iter().map(|x| x.1).collect();
    let bits_per_use = if protected { 1.0 } else { 1.0 / p.block_len as f64 };
    Ok(RislPoint { bdr_ab: pooled(&ab), bdr_ae: pooled(&ae), bits_per_use })
}

pub fn risl(seed: u64, trials: usize, p: &RislParams) -> Result<Table> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let mut rows = Vec::new();
    for (ai, (kind, name)) in [(AttackKind::RislToggle, "toggle"), (AttackKind::RislSpeculate, "speculate")].into_iter().enumerate() {
        for (gi, &g) in p.gamma.iter().enumerate() {
            for (si, &snr) in p.snr_db.iter().enumerate() {
                for protected in [false, true] {
                    let s = seed_at(seed, &[ai as u64, gi as u64, si as u64]);
                    let r = risl_point(p, kind, g, snr, protected, trials, s)?;
                    rows.push(vec![
                        Cell::Text(name.into()),
                        Cell::Int(protected.into()),
                        Cell::Num(snr),
                        Cell::Num(g),
                        Cell::Num(r.bdr_ab),
                        Cell::Num(r.bdr_ae),
                        Cell::Num(r.bits_per_use),
                        Cell::Num(f64::NAN),
                        Cell::Num(f64::NAN),
                    ]);
                }
            }
        }
    }
    Ok(Table {
        header: vec![
            "attack",
            "protected",
            "snr_db",
            "gamma",
            "bdr_ab",
            "bdr_ae",
            "kgr_bits_per_use",
            "detection_rate",
            "false_alarm_rate",
        ],
        rows,
    })
}

// ---------------------------------------------------------- MI estimation

#[derive(Debug, Clone, PartialEq)]
pub struct MiParams {
    pub snr_db: Vec<f64>,
    pub n_samples: usize,
    pub n_elements: usize,
    pub gamma: f64,
    pub k_neighbors: usize,
}

impl Default for MiParams {
    fn default() -> Self {
        MiParams { snr_db: vec![0.0, 10.0, 20.0], n_samples: 10_000, n_elements: 64, gamma: 0.5, k_neighbors: 4 }
    }
}

/// KSG estimates (bits per observation) of Alice–Bob and Alice–Eve
/// amplitude dependence under a random surface in a static environment.
pub fn mi_point(p: &MiParams, snr_db: f64, trials: usize, seed: Seed) -> Result<(f64, f64)> {
    let stats = ChannelStats::new(p.n_elements, 1).with_gamma(p.gamma);
    let schedule = RisSchedule::new(ScheduleKind::RandomPerBlock, 1, RisMode::BinaryPhase, p.n_elements)?;
    let per: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.child(t as u64).rng(Purpose::Config);
            let s = run_session(&stats, &schedule, snr_db, p.n_samples, RealizationPolicy::Static, &mut rng)?;
            let a = s.amplitudes(Party::Alice, 0);
            Ok((
                ksg_mi(&a, &s.amplitudes(Party::Bob, 0), p.k_neighbors)?,
                ksg_mi(&a, &s.amplitudes(Party::Eve, 0), p.k_neighbors)?,
            ))
        })
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    Ok((per.iter().map(|x| x.0).sum::<f64>() / n, per.iter().map(|x| x.1).sum::<f64>() / n))
}

pub fn mi_estimate(seed: u64, trials: usize, p: &MiParams) -> Result<Table> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let rows = p
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let (ab, ae) = mi_point(p, snr, trials, Seed(seed).child(i as u64))?;
            Ok(vec![Cell::Num(snr), Cell::Num(ab), Cell::Num(ae)])
        })
        .collect::<Result<_>>()?;
    Ok(Table { header: vec!["snr_db", "mi_ab", "mi_ae"], rows })
}

// ------------------------------------------------------- randomness audit

#[derive(Debug, Clone, PartialEq)]
pub struct AuditParams {
    pub n_bits: usize,
    pub n_elements: usize,
    pub gamma: f64,
    pub l: usize,
    pub snr_db: f64,
    pub alpha: f64,
    /// Bits per static session; longer keys concatenate sessions.
    pub session_bits: usize,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams { n_bits: 100_000, n_elements: 128, gamma: 0.5, l: 1, snr_db: 20.0, alpha: 0.01, session_bits: 10_000 }
    }
}

/// Alice's key bits from the random-surface static scenario.
pub fn audit_bits(p: &AuditParams, seed: Seed) -> Result<BitString> {
    if p.session_bits < 2 || p.n_bits == 0 {
        return Err(invalid("session_bits must be ≥ 2 and n_bits positive"));
    }
    let stats = ChannelStats::new(p.n_elements, 1).with_gamma(p.gamma);
    let schedule = RisSchedule::new(ScheduleKind::RandomPerBlock, p.l, RisMode::BinaryPhase, p.n_elements)?;
    let sessions = p.n_bits.div_ceil(p.session_bits);
    let parts: Vec<BitString> = (0..sessions)
        .into_par_iter()
        .map(|i| {
            let bits = p.session_bits.min(p.n_bits - i * p.session_bits).max(2);
            let mut rng = seed.child(i as u64).rng(Purpose::Config);
            let s = run_session(&stats, &schedule, p.snr_db, bits * p.l, RealizationPolicy::Static, &mut rng)?;
            Ok(block_mean_bits(&s)?.0)
        })
        .collect::<Result<_>>()?;
    let mut all = BitString::concat(&parts);
    all.bits.truncate(p.n_bits);
    Ok(all)
}

pub fn randomness_audit(seed: u64, trials: usize, p: &AuditParams) -> Result<Table> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let nist = Nist { alpha: p.alpha, enforce_minimum: true };
    let mut rows = Vec::new();
    for t in 0..trials {
        let bits = audit_bits(p, Seed(seed).child(t as u64))?;
        for r in nist.all(&bits, default_block_len(bits.len()))? {
            rows.push(vec![
                Cell::Int(t as i64),
                Cell::Text(r.test_name.into()),
                Cell::Int(r.n_bits as i64),
                Cell::Num(r.p_value),
                Cell::Int(r.passed.into()),
            ]);
        }
    }
    Ok(Table { header: vec!["trial", "test", "n", "p_value", "pass"], rows })
}
