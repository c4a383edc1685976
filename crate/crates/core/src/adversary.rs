//! Surface-controlling attackers and the two countermeasures.
//!
//! Jamming (desync / attenuation) breaks reciprocity; leakage (toggle /
//! speculation) makes the key predictable. Channel separation removes the
//! surface's tap in the delay domain; private pilots add fast fading the
//! surface owner cannot see.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;

use crate::channel::{ris_gain, ChannelRealization, ChannelSampler, ChannelStats, Tap};
use crate::error::{invalid, Error, Result};
use crate::keygen::{cdf_quantize, rss_threshold_quantize, BitString};
use crate::probing::{
    add_noise, block_average, check_snr, observe, run_session_traced, DirectFactor, NoiseReference, Observation,
    Party, ProbeSession, RealizationPolicy, SessionOptions,
};
use crate::ris::{random_config, reflection_coeffs, RisConfig, RisMode, RisSchedule, ScheduleKind};
use crate::scalar::{lit, median, Real};
use crate::seed::{Purpose, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    RisjDesync,
    RisjAttenuate,
    RislToggle,
    RislSpeculate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EveKnowledge {
    ScheduleOnly,
    FullCsi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackScenario<T> {
    pub kind: AttackKind,
    pub gamma: T,
    pub eve_knowledge: EveKnowledge,
}

impl<T: Real> AttackScenario<T> {
    pub fn new(kind: AttackKind, gamma: T, eve_knowledge: EveKnowledge) -> Self {
        AttackScenario { kind, gamma, eve_knowledge }
    }

    pub fn check(&self, stats: &ChannelStats<T>) -> Result<()> {
        if (self.gamma - stats.gamma).abs() > lit(1e-12) {
            return Err(invalid(format!("scenario gamma {} differs from channel gamma {}", self.gamma, stats.gamma)));
        }
        Ok(())
    }

    fn need_full_csi(&self) -> Result<()> {
        if self.eve_knowledge != EveKnowledge::FullCsi {
            return Err(Error::Precondition(format!("{:?} needs full CSI at the attacker", self.kind)));
        }
        Ok(())
    }
}

/// OFDM numerology: subcarrier count from bandwidth at 15 kHz spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmBand {
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
}

impl OfdmBand {
    pub const SPACING_HZ: f64 = 15e3;

    pub fn from_bandwidth(bandwidth_hz: f64) -> Result<Self> {
        let n = (bandwidth_hz / Self::SPACING_HZ).round();
        if !(n >= 1.0) || !n.is_finite() {
            return Err(invalid(format!("bandwidth {bandwidth_hz} Hz gives no subcarriers")));
        }
        Ok(OfdmBand { bandwidth_hz, n_subcarriers: n as usize })
    }

    /// Tap spacing in seconds.
    pub fn resolution_s(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }
}

/// Exponentially decaying direct-link profile with `n` consecutive taps.
pub fn exponential_profile<T: Real>(n: usize, decay_taps: T) -> Vec<Tap<T>> {
    (0..n).map(|d| Tap { delay: d, power: (-lit::<T>(d as f64) / decay_taps).exp() }).collect()
}

// ---------------------------------------------------------------- RISJ

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RisjSetup {
    pub n_subcarriers: usize,
    /// Probes per coherence interval; channel and benign surface state both
    /// change at these boundaries.
    pub coherence_probes: usize,
    pub attack: bool,
}

impl RisjSetup {
    pub fn new(n_subcarriers: usize) -> Self {
        RisjSetup { n_subcarriers, coherence_probes: 32, attack: true }
    }
}

/// Wideband session under the desynchronization attack (`setup.attack`) or
/// with a benign per-interval random surface; identical seeds give
/// identical channels and noise in both cases.
pub fn run_risj_with<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    snr_db: T,
    n_rounds: usize,
    setup: &RisjSetup,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    if setup.coherence_probes == 0 {
        return Err(invalid("coherence interval must be at least one probe"));
    }
    let kind = if setup.attack { ScheduleKind::AttackerPerDirection } else { ScheduleKind::RandomPerBlock };
    let schedule = RisSchedule::new(kind, setup.coherence_probes, RisMode::BinaryPhase, stats.n_elements)?;
    let opts = SessionOptions {
        policy: RealizationPolicy::PerBlock(setup.coherence_probes),
        observation: Observation::Wideband { n_subcarriers: setup.n_subcarriers },
        ..SessionOptions::default()
    };
    Ok(run_session_traced(stats, &schedule, snr_db, n_rounds, &opts, rng)?.0)
}

/// Desynchronization attack: Φ₁ and Φ₂ drawn independently every probe.
pub fn run_risj<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    snr_db: T,
    n_rounds: usize,
    n_subcarriers: usize,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    run_risj_with(stats, snr_db, n_rounds, &RisjSetup::new(n_subcarriers), rng)
}

/// `n_points` equally spaced subcarrier indices out of `k`.
fn spaced(k: usize, n_points: usize) -> Vec<usize> {
    (0..n_points).map(|i| i * k / n_points).collect()
}

/// CDF bits of amplitude on `n_points` equally spaced subcarriers, each
/// quantized over time; output is snapshot-major.
pub fn wideband_bits<T: Real>(
    csi_alice: &[Vec<Complex<T>>],
    csi_bob: &[Vec<Complex<T>>],
    n_points: usize,
) -> Result<(BitString, BitString)> {
    let k = csi_alice.first().map_or(0, Vec::len);
    if n_points == 0 || n_points > k {
        return Err(invalid(format!("cannot pick {n_points} of {k} subcarriers")));
    }
    let idx = spaced(k, n_points);
    let per = |csi: &[Vec<Complex<T>>]| -> Result<Vec<BitString>> {
        idx.iter().map(|&s| cdf_quantize(&csi.iter().map(|row| row[s].norm()).collect::<Vec<T>>())).collect()
    };
    let interleave = |cols: Vec<BitString>| {
        let t = cols[0].len();
        BitString::new((0..t).flat_map(|i| cols.iter().map(move |c| c.bits[i])).collect())
    };
    Ok((interleave(per(csi_alice)?), interleave(per(csi_bob)?)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcsParams<T> {
    pub n_subcarriers: usize,
    /// Flag taps whose temporal variance exceeds κ × the median tap variance.
    pub kappa: T,
    /// Also the window over which temporal variance is measured.
    pub min_snapshots: usize,
}

impl<T: Real> CcsParams<T> {
    pub fn new(n_subcarriers: usize) -> Self {
        CcsParams { n_subcarriers, kappa: lit(5.0), min_snapshots: 32 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.min_snapshots < 2 {
            return Err(invalid("CCS needs subcarriers and at least two snapshots per window"));
        }
        if !(self.kappa > T::one()) {
            return Err(invalid("kappa must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcsOutcome {
    /// Taps flagged as surface-induced (union over both parties), ascending.
    pub mask: Vec<usize>,
    /// Taps carrying significant mean power.
    pub occupied: Vec<usize>,
    /// Occupied taps that survive the mask.
    pub retained: Vec<usize>,
    pub bits_alice: BitString,
    pub bits_bob: BitString,
}

impl CcsOutcome {
    /// One bit per real and imaginary dimension of each retained tap.
    pub fn bits_per_use(&self) -> usize {
        2 * self.retained.len()
    }
}

fn to_taps<T: Real>(csi: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
    csi.iter()
        .map(|row| {
            let mut r = row.clone();
            T::dft(&mut r, true);
            r
        })
        .collect()
}

/// Windowed temporal variance per tap, averaged over windows.
fn tap_variance<T: Real>(taps: &[Vec<Complex<T>>], window: usize) -> Vec<T> {
    let k = taps[0].len();
    let windows: Vec<&[Vec<Complex<T>>]> = taps.chunks_exact(window).collect();
    let w = lit::<T>(window as f64);
    (0..k)
        .map(|j| {
            let total: T = windows
                .iter()
                .map(|win| {
                    let m: Complex<T> = win.iter().map(|r| r[j]).sum::<Complex<T>>() / w;
                    win.iter().map(|r| (r[j] - m).norm_sqr()).sum::<T>() / w
                })
                .sum();
            total / lit(windows.len() as f64)
        })
        .collect()
}

fn above<T: Real>(v: &[T], kappa: T) -> Vec<bool> {
    let m = median(v);
    v.iter().map(|&x| x > kappa * m).collect()
}

/// Channel separation: drop high-variance taps, quantize what is left.
pub fn ccs_defend<T: Real>(
    csi_alice: &[Vec<Complex<T>>],
    csi_bob: &[Vec<Complex<T>>],
    params: &CcsParams<T>,
) -> Result<CcsOutcome> {
    params.validate()?;
    let k = params.n_subcarriers;
    if csi_alice.len() != csi_bob.len() {
        return Err(invalid("parties hold different snapshot counts"));
    }
    if csi_alice.len() < params.min_snapshots {
        return Err(invalid(format!("{} snapshots, need at least {}", csi_alice.len(), params.min_snapshots)));
    }
    if csi_alice.iter().chain(csi_bob).any(|r| r.len() != k) {
        return Err(invalid(format!("every snapshot must hold {k} subcarriers")));
    }
    let ta = to_taps(csi_alice);
    let tb = to_taps(csi_bob);
    let fa = above(&tap_variance(&ta, params.min_snapshots), params.kappa);
    let fb = above(&tap_variance(&tb, params.min_snapshots), params.kappa);
    let flagged: Vec<bool> = fa.iter().zip(&fb).map(|(a, b)| *a || *b).collect();
    if flagged.iter().all(|&f| f) {
        return Err(Error::NoCleanChannel);
    }
    let s = lit::<T>((2 * ta.len()) as f64);
    let power: Vec<T> = (0..k).map(|j| ta.iter().chain(&tb).map(|r| r[j].norm_sqr()).sum::<T>() / s).collect();
    let occ = above(&power, params.kappa);
    let mask: Vec<usize> = (0..k).filter(|&j| flagged[j]).collect();
    let occupied: Vec<usize> = (0..k).filter(|&j| occ[j]).collect();
    let retained: Vec<usize> = occupied.iter().copied().filter(|&j| !flagged[j]).collect();
    if retained.is_empty() {
        return Err(Error::NoCleanChannel);
    }
    let clean = |taps: Vec<Vec<Complex<T>>>| -> Vec<Vec<Complex<T>>> {
        taps.into_iter()
            .map(|mut r| {
                for &j in &mask {
                    r[j] = Complex::new(T::zero(), T::zero());
                }
                T::dft(&mut r, false);
                r
            })
            .collect()
    };
    let (bits_alice, bits_bob) = wideband_bits(&clean(ta), &clean(tb), 2 * retained.len())?;
    Ok(CcsOutcome { mask, occupied, retained, bits_alice, bits_bob })
}

/// Taps occupied by significant mean power in both parties' CSI.
pub fn occupied_taps<T: Real>(csi_alice: &[Vec<Complex<T>>], csi_bob: &[Vec<Complex<T>>], kappa: T) -> Vec<usize> {
    let ta = to_taps(csi_alice);
    let tb = to_taps(csi_bob);
    let k = ta.first().map_or(0, Vec::len);
    let s = lit::<T>((ta.len() + tb.len()) as f64);
    let power: Vec<T> = (0..k).map(|j| ta.iter().chain(&tb).map(|r| r[j].norm_sqr()).sum::<T>() / s).collect();
    above(&power, kappa).into_iter().enumerate().filter_map(|(j, f)| f.then_some(j)).collect()
}

// ------------------------------------------------------ attenuation RISJ

/// Phases that make the surface path cancel `direct` as far as possible.
///
/// Starts from the better of full anti-alignment and a balanced ±φ split,
/// then runs closed-form coordinate descent on `|direct + Σ cₙaₙ|`.
pub fn attenuation_phases<T: Real>(direct: Complex<T>, per_element: &[Complex<T>]) -> Vec<T> {
    let n = per_element.len();
    let s: T = per_element.iter().map(|a| a.norm()).sum();
    let target = direct.arg() + T::PI();
    let anti: Vec<T> = per_element.iter().map(|a| target - a.arg()).collect();
    let total = |ph: &[T]| -> Complex<T> {
        direct + per_element.iter().zip(ph).map(|(a, &p)| a * Complex::from_polar(T::one(), p)).sum::<Complex<T>>()
    };
    let mut phases = anti.clone();
    if s > direct.norm() && n > 1 {
        let phi = (direct.norm() / s).acos();
        let split: Vec<T> = anti.iter().enumerate().map(|(i, &p)| if i % 2 == 0 { p + phi } else { p - phi }).collect();
        if total(&split).norm() < total(&anti).norm() {
            phases = split;
        }
    }
    let mut acc = total(&phases);
    for _ in 0..8 {
        for i in 0..n {
            let mine = per_element[i] * Complex::from_polar(T::one(), phases[i]);
            let rest = acc - mine;
            if rest.norm() == T::zero() {
                continue;
            }
            let p = rest.arg() + T::PI() - per_element[i].arg();
            let cand = rest + per_element[i] * Complex::from_polar(T::one(), p);
            if cand.norm() < acc.norm() {
                phases[i] = p;
                acc = cand;
            }
        }
    }
    phases.into_iter().map(crate::ris::wrap_phase).collect()
}

fn attenuation_session<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    snr_db: T,
    n_rounds: usize,
    attack: bool,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    check_snr(snr_db)?;
    if n_rounds == 0 {
        return Err(invalid("n_rounds must be at least 1"));
    }
    let seed = Seed::from_rng(rng);
    let sampler = ChannelSampler::new(stats)?;
    let mut chan_rng = seed.rng(Purpose::Channel);
    let mut cfg_rng = seed.rng(Purpose::Attacker);
    let one = Complex::new(T::one(), T::zero());
    let n = stats.n_elements;
    let mut clean = Vec::with_capacity(n_rounds);
    for _ in 0..n_rounds {
        let real = sampler.draw(&mut chan_rng);
        // the benign surface draw is consumed in both modes to keep streams aligned
        let benign: RisConfig<T> = random_config(RisMode::ContinuousPhase, n, &mut cfg_rng)?;
        let cfg = if attack {
            let d: Complex<T> = real.h_direct[0].iter().copied().sum();
            let a: Vec<Complex<T>> = (0..n).map(|i| real.h_ar[i] * real.h_rb_at(i, 0)).collect();
            RisConfig::continuous(&attenuation_phases(d, &a))
        } else {
            benign
        };
        let cfg = Arc::new(cfg);
        clean.push(observe(stats, &real, &cfg, &cfg, Observation::Narrowband, 0, one)?);
    }
    // SNR is nominal: attenuation lowers the signal, not the receiver noise
    let nominal = stats.var_direct + stats.element_power.iter().map(|&p| p * stats.var_ar * stats.var_rb[0]).sum::<T>();
    let d = SessionOptions::<T>::default();
    add_noise(clean, snr_db, NoiseReference::Fixed(nominal), &mut seed.rng(Purpose::Noise), 1, d.t_probe_s, d.t_update_s)
}

/// Oracle attacker minimizing the received magnitude every probe
/// (block fading, one probe per coherence interval).
pub fn run_risj_attenuate<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    scenario: &AttackScenario<T>,
    snr_db: T,
    n_rounds: usize,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    scenario.need_full_csi()?;
    attenuation_session(stats, snr_db, n_rounds, true, rng)
}

/// The same channel and noise draws with a benign random surface.
pub fn run_benign_fading<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    snr_db: T,
    n_rounds: usize,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    attenuation_session(stats, snr_db, n_rounds, false, rng)
}

/// CDF bits of per-probe amplitude for a narrowband session.
pub fn narrowband_bits<T: Real>(session: &ProbeSession<T>) -> Result<(BitString, BitString)> {
    Ok((
        cdf_quantize(&session.amplitudes(Party::Alice, 0))?.from_party(Party::Alice),
        cdf_quantize(&session.amplitudes(Party::Bob, 0))?.from_party(Party::Bob),
    ))
}

// ---------------------------------------------------------------- RISL

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RislSetup {
    pub n_subcarriers: usize,
    /// Probes per surface state (L).
    pub block_len: usize,
}

impl Default for RislSetup {
    fn default() -> Self {
        RislSetup { n_subcarriers: 256, block_len: 8 }
    }
}

/// How legitimate RSS is turned into bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RssBits {
    /// Mean of each surface block, one bit per block.
    PerBlock,
    /// Every probe, one bit each (used under private pilots, whose factor
    /// changes per probe and would be averaged away).
    PerProbe,
}

/// RSS-threshold bits of one party.
pub fn rss_bits<T: Real>(session: &ProbeSession<T>, party: Party, mode: RssBits) -> Result<BitString> {
    let p = session.powers(party);
    let series = match mode {
        RssBits::PerBlock => block_average::<T, T>(&p, session.l_oversample),
        RssBits::PerProbe => p,
    };
    Ok(rss_threshold_quantize(&series)?.from_party(party))
}

fn risl_session<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    snr_db: T,
    n_rounds: usize,
    setup: &RislSetup,
    kind: ScheduleKind,
    direct_factor: DirectFactor,
    rng: &mut R,
) -> Result<(ProbeSession<T>, Vec<ChannelRealization<T>>)> {
    if n_rounds == 0 {
        return Err(invalid("n_rounds must be at least 1"));
    }
    let schedule = RisSchedule::new(kind, setup.block_len, RisMode::BinaryPhase, stats.n_elements)?;
    let opts = SessionOptions {
        policy: RealizationPolicy::Static,
        observation: Observation::Wideband { n_subcarriers: setup.n_subcarriers },
        direct_factor,
        ..SessionOptions::default()
    };
    run_session_traced(stats, &schedule, snr_db, n_rounds * setup.block_len, &opts, rng)
}

fn expand(bits: &BitString, by: usize, mode: RssBits) -> BitString {
    match mode {
        RssBits::PerBlock => bits.clone(),
        RssBits::PerProbe => BitString::new(bits.bits.iter().flat_map(|&b| std::iter::repeat_n(b, by)).collect()),
    }
}

fn toggle_prediction(n_rounds: usize) -> BitString {
    BitString::new((0..n_rounds).map(|b| b % 2 == 0).collect()).from_party(Party::Eve)
}

fn speculation<T: Real>(session: &ProbeSession<T>, real: &ChannelRealization<T>, mode: RssBits) -> Result<BitString> {
    let l = session.l_oversample;
    let gains: Vec<T> = session
        .records
        .iter()
        .step_by(l)
        .map(|r| ris_gain(real, &reflection_coeffs(&r.cfg_forward), 0).map(|g| g.norm_sqr()))
        .collect::<Result<_>>()?;
    let per_probe: Vec<T> = match mode {
        RssBits::PerBlock => gains,
        RssBits::PerProbe => gains.iter().flat_map(|&g| std::iter::repeat_n(g, l)).collect(),
    };
    Ok(rss_threshold_quantize(&per_probe)?.from_party(Party::Eve))
}

/// Toggle leakage: the surface alternates all-on / all-off every block and
/// Eve predicts on → 1. Returns the session and Eve's per-block bits.
pub fn run_risl_toggle<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    snr_db: T,
    n_rounds: usize,
    setup: &RislSetup,
    rng: &mut R,
) -> Result<(ProbeSession<T>, BitString)> {
    let (s, _) = risl_session(stats, snr_db, n_rounds, setup, ScheduleKind::AlternatingAllOnOff, DirectFactor::None, rng)?;
    Ok((s, toggle_prediction(n_rounds)))
}

/// Speculation leakage: Eve knows the surface links and configurations and
/// quantizes the cascaded power herself. Returns per-block bits.
pub fn run_risl_speculate<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    scenario: &AttackScenario<T>,
    snr_db: T,
    n_rounds: usize,
    setup: &RislSetup,
    rng: &mut R,
) -> Result<(ProbeSession<T>, BitString)> {
    scenario.need_full_csi()?;
    let (s, reals) = risl_session(stats, snr_db, n_rounds, setup, ScheduleKind::RandomPerBlock, DirectFactor::None, rng)?;
    let eve = speculation(&s, &reals[0], RssBits::PerBlock)?;
    Ok((s, eve))
}

/// Leakage attack run against private pilots. Eve's strategy is unchanged;
/// her bits are expanded per probe to match [`RssBits::PerProbe`].
/// `factor` is normally [`DirectFactor::PrivateGaussian`]; `Unity` is the
/// degenerate check that must reproduce the unprotected run.
pub fn cdpp_protect<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    scenario: &AttackScenario<T>,
    snr_db: T,
    n_rounds: usize,
    setup: &RislSetup,
    factor: DirectFactor,
    rng: &mut R,
) -> Result<(ProbeSession<T>, BitString)> {
    let mode = RssBits::PerProbe;
    match scenario.kind {
        AttackKind::RislToggle => {
            let (s, _) = risl_session(stats, snr_db, n_rounds, setup, ScheduleKind::AlternatingAllOnOff, factor, rng)?;
            Ok((s, expand(&toggle_prediction(n_rounds), setup.block_len, mode).from_party(Party::Eve)))
        }
        AttackKind::RislSpeculate => {
            scenario.need_full_csi()?;
            let (s, reals) = risl_session(stats, snr_db, n_rounds, setup, ScheduleKind::RandomPerBlock, factor, rng)?;
            let eve = speculation(&s, &reals[0], mode)?;
            Ok((s, eve))
        }
        k => Err(Error::Precondition(format!("private pilots counter leakage attacks, not {k:?}"))),
    }
}
