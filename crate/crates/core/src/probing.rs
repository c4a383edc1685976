//! Bidirectional TDD channel sounding.
//!
//! Estimation is modelled as "true gain + complex Gaussian noise". Each
//! probe index is one forward/reverse pilot pair inside a coherence
//! interval; Eve overhears the forward pilot through her own links.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{
    tapped_parts, ChannelRealization, ChannelSampler, ChannelStats, Listener,
};
use crate::error::{invalid, Result};
use crate::ris::{reflection_coeffs, schedule_config, Direction, RisConfig, RisSchedule, ScheduleKind};
use crate::scalar::{complex_normal, lit, Real};
use crate::seed::{Purpose, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
    Eve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord<T> {
    pub probe_index: usize,
    /// Φ₁, in force while Bob listens (shared between probes of one block).
    pub cfg_forward: Arc<RisConfig<T>>,
    /// Φ₂, in force while Alice listens.
    pub cfg_reverse: Arc<RisConfig<T>>,
    /// One entry for narrowband sessions, one per subcarrier for OFDM.
    pub obs_alice: Vec<Complex<T>>,
    pub obs_bob: Vec<Complex<T>>,
    pub obs_eve: Vec<Complex<T>>,
}

impl<T: Real> ProbeRecord<T> {
    pub fn obs(&self, party: Party) -> &[Complex<T>] {
        match party {
            Party::Alice => &self.obs_alice,
            Party::Bob => &self.obs_bob,
            Party::Eve => &self.obs_eve,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSession<T> {
    pub records: Vec<ProbeRecord<T>>,
    pub snr_db: T,
    /// Probes per surface configuration (L).
    pub l_oversample: usize,
    pub t_probe_s: T,
    pub t_update_s: T,
    /// Noise variance actually applied per observation entry.
    pub noise_var: T,
}

impl<T: Real> ProbeSession<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.records.first().map_or(0, |r| r.obs_bob.len())
    }

    /// Time series of one party's observation on one subcarrier.
    pub fn series(&self, party: Party, subcarrier: usize) -> Vec<Complex<T>> {
        self.records.iter().map(|r| r.obs(party)[subcarrier]).collect()
    }

    pub fn amplitudes(&self, party: Party, subcarrier: usize) -> Vec<T> {
        self.records.iter().map(|r| r.obs(party)[subcarrier].norm()).collect()
    }

    /// Received signal strength per probe, summed over subcarriers.
    pub fn powers(&self, party: Party) -> Vec<T> {
        self.records.iter().map(|r| r.obs(party).iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    /// Per-probe snapshots (rows) of one party's CSI.
    pub fn snapshots(&self, party: Party) -> Vec<Vec<Complex<T>>> {
        self.records.iter().map(|r| r.obs(party).to_vec()).collect()
    }

    /// CSV trace: one row per (probe, subcarrier).
    pub fn write_trace<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "probe_index,subcarrier,alice_re,alice_im,bob_re,bob_im,eve_re,eve_im")?;
        for r in &self.records {
            for k in 0..r.obs_bob.len() {
                let (a, b, e) = (r.obs_alice[k], r.obs_bob[k], r.obs_eve[k]);
                writeln!(w, "{},{},{},{},{},{},{},{}", r.probe_index, k, a.re, a.im, b.re, b.im, e.re, e.im)?;
            }
        }
        Ok(())
    }
}

/// How the physical channel evolves over the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealizationPolicy {
    /// One realization for every probe (static environment).
    Static,
    /// Fresh realization every `n` probes (block fading).
    PerBlock(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    /// Composite scalar gain.
    Narrowband,
    /// Per-subcarrier CSI from the tap-domain model.
    Wideband { n_subcarriers: usize },
}

/// Multiplicative factor applied to the direct-link contribution of the
/// legitimate observations (dynamic private pilots).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectFactor {
    None,
    /// Zero-mean unit-variance complex Gaussian per probe, shared by Alice and Bob.
    PrivateGaussian,
    /// Factor identically 1, drawn through the same code path (degenerate check).
    Unity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionOptions<T> {
    pub policy: RealizationPolicy,
    pub observation: Observation,
    pub ut: usize,
    pub t_probe_s: T,
    pub t_update_s: T,
    pub direct_factor: DirectFactor,
}

impl<T: Real> Default for SessionOptions<T> {
    fn default() -> Self {
        SessionOptions {
            policy: RealizationPolicy::Static,
            observation: Observation::Narrowband,
            ut: 0,
            t_probe_s: lit(2e-3),
            t_update_s: lit(2e-3),
            direct_factor: DirectFactor::None,
        }
    }
}

/// Noise-free observations of one probe.
#[derive(Debug, Clone)]
pub(crate) struct CleanProbe<T> {
    pub cfg_forward: Arc<RisConfig<T>>,
    pub cfg_reverse: Arc<RisConfig<T>>,
    pub bob: Vec<Complex<T>>,
    pub alice: Vec<Complex<T>>,
    pub eve: Vec<Complex<T>>,
}

/// What the SNR is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum NoiseReference<T> {
    /// Mean clean power of the legitimate observations in this session.
    Empirical,
    /// A fixed signal power (e.g. the nominal, unattacked one).
    Fixed(T),
}

pub(crate) fn check_snr<T: Real>(snr_db: T) -> Result<()> {
    // +∞ is accepted as the noiseless surrogate
    if snr_db.is_nan() || snr_db == T::neg_infinity() {
        return Err(invalid(format!("SNR {snr_db} dB is not usable")));
    }
    Ok(())
}

pub(crate) fn add_noise<T: Real>(
    clean: Vec<CleanProbe<T>>,
    snr_db: T,
    reference: NoiseReference<T>,
    noise_rng: &mut ChaCha12Rng,
    l_oversample: usize,
    t_probe_s: T,
    t_update_s: T,
) -> Result<ProbeSession<T>> {
    check_snr(snr_db)?;
    if clean.is_empty() {
        return Err(invalid("a session needs at least one probe"));
    }
    let signal = match reference {
        NoiseReference::Fixed(p) => p,
        NoiseReference::Empirical => {
            let (mut acc, mut cnt) = (T::zero(), 0usize);
            for c in &clean {
                acc = acc + c.bob.iter().chain(&c.alice).map(|z| z.norm_sqr()).sum::<T>();
                cnt += c.bob.len() + c.alice.len();
            }
            acc / lit(cnt as f64)
        }
    };
    let noise_var = if snr_db == T::infinity() {
        T::zero()
    } else {
        signal / lit::<T>(10.0).powf(snr_db / lit(10.0))
    };
    let mut noisy = |v: Vec<Complex<T>>| -> Vec<Complex<T>> {
        v.into_iter().map(|z| z + complex_normal(noise_rng, noise_var)).collect()
    };
    let records = clean
        .into_iter()
        .enumerate()
        .map(|(t, c)| {
            let obs_bob = noisy(c.bob);
            let obs_alice = noisy(c.alice);
            let obs_eve = noisy(c.eve);
            ProbeRecord { probe_index: t, cfg_forward: c.cfg_forward, cfg_reverse: c.cfg_reverse, obs_alice, obs_bob, obs_eve }
        })
        .collect();
    Ok(ProbeSession { records, snr_db, l_oversample, t_probe_s, t_update_s, noise_var })
}

/// Clean observations of all three parties for one probe.
pub(crate) fn observe<T: Real>(
    stats: &ChannelStats<T>,
    real: &ChannelRealization<T>,
    cfg_forward: &Arc<RisConfig<T>>,
    cfg_reverse: &Arc<RisConfig<T>>,
    observation: Observation,
    ut: usize,
    pilot: Complex<T>,
) -> Result<CleanProbe<T>> {
    let cf = reflection_coeffs(cfg_forward);
    let cr = reflection_coeffs(cfg_reverse);
    let (bob, alice, eve) = match observation {
        Observation::Narrowband => {
            if ut >= real.n_uts {
                return Err(invalid(format!("UT index {ut} out of range")));
            }
            let direct: Complex<T> = real.h_direct[ut].iter().copied().sum();
            let eve_direct: Complex<T> = real.h_eve_direct.iter().copied().sum();
            let bob = crate::channel::ris_gain(real, &cf, ut)? + direct * pilot;
            let alice = crate::channel::ris_gain(real, &cr, ut)? + direct * pilot;
            let eve = crate::channel::eve_ris_gain(real, &cf)? + eve_direct;
            (vec![bob], vec![alice], vec![eve])
        }
        Observation::Wideband { n_subcarriers } => {
            let pb = tapped_parts(stats, real, &cf, Listener::Ut(ut), n_subcarriers)?;
            let pa = tapped_parts(stats, real, &cr, Listener::Ut(ut), n_subcarriers)?;
            let pe = tapped_parts(stats, real, &cf, Listener::Eve, n_subcarriers)?;
            let mix = |p: &crate::channel::ResponseParts<T>| -> Vec<Complex<T>> {
                p.direct.iter().zip(&p.ris).map(|(d, r)| r + d * pilot).collect()
            };
            (mix(&pb), mix(&pa), pe.total())
        }
    };
    Ok(CleanProbe { cfg_forward: Arc::clone(cfg_forward), cfg_reverse: Arc::clone(cfg_reverse), bob, alice, eve })
}

/// Per-probe private factors; `None` when the option is off.
pub(crate) fn private_pilots<T: Real>(kind: DirectFactor, seed: Seed, n: usize) -> Vec<Complex<T>> {
    let one = Complex::new(T::one(), T::zero());
    match kind {
        DirectFactor::None | DirectFactor::Unity => vec![one; n],
        DirectFactor::PrivateGaussian => {
            let mut rng = seed.rng(Purpose::PrivatePilot);
            (0..n).map(|_| complex_normal(&mut rng, T::one())).collect()
        }
    }
}

/// Generic session: `stats` gives the channel, `schedule` the surface states.
pub fn run_session_with<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    schedule: &RisSchedule,
    snr_db: T,
    n_probes: usize,
    opts: &SessionOptions<T>,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    Ok(run_session_traced(stats, schedule, snr_db, n_probes, opts, rng)?.0)
}

/// As [`run_session_with`], also returning every realization drawn
/// (probe `t` used `reals[t / b]` under `PerBlock(b)`, `reals[0]` when static).
pub(crate) fn run_session_traced<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    schedule: &RisSchedule,
    snr_db: T,
    n_probes: usize,
    opts: &SessionOptions<T>,
    rng: &mut R,
) -> Result<(ProbeSession<T>, Vec<ChannelRealization<T>>)> {
    check_snr(snr_db)?;
    if n_probes == 0 {
        return Err(invalid("n_probes must be at least 1"));
    }
    if schedule.n_elements != stats.n_elements {
        return Err(invalid("schedule and channel disagree on the element count"));
    }
    if let RealizationPolicy::PerBlock(0) = opts.policy {
        return Err(invalid("realization block length must be at least 1"));
    }
    let seed = Seed::from_rng(rng);
    let sampler = ChannelSampler::new(stats)?;
    let mut chan_rng = seed.rng(Purpose::Channel);
    let key = seed.child(Purpose::Schedule as u64).0;
    let pilots = private_pilots::<T>(opts.direct_factor, seed, n_probes);

    let mut reals = vec![sampler.draw(&mut chan_rng)];
    let mut cached: Option<(usize, Arc<RisConfig<T>>)> = None;
    let mut clean = Vec::with_capacity(n_probes);
    for t in 0..n_probes {
        if let RealizationPolicy::PerBlock(b) = opts.policy {
            if t > 0 && t % b == 0 {
                reals.push(sampler.draw(&mut chan_rng));
            }
        }
        let (cf, cr) = if schedule.kind == ScheduleKind::AttackerPerDirection {
            (
                Arc::new(schedule_config(schedule, t, Direction::Forward, key)),
                Arc::new(schedule_config(schedule, t, Direction::Reverse, key)),
            )
        } else {
            let block = schedule.block_of(t);
            let cfg = match &cached {
                Some((b, c)) if *b == block || schedule.kind == ScheduleKind::Hold => Arc::clone(c),
                _ => {
                    let c = Arc::new(schedule_config(schedule, t, Direction::Forward, key));
                    cached = Some((block, Arc::clone(&c)));
                    c
                }
            };
            (Arc::clone(&cfg), cfg)
        };
        let real = reals.last().expect("drawn above");
        clean.push(observe(stats, real, &cf, &cr, opts.observation, opts.ut, pilots[t])?);
    }
    let session = add_noise(
        clean,
        snr_db,
        NoiseReference::Empirical,
        &mut seed.rng(Purpose::Noise),
        schedule.block_len,
        opts.t_probe_s,
        opts.t_update_s,
    )?;
    Ok((session, reals))
}

/// Narrowband session with default timing (T_p = T_u = 2 ms).
pub fn run_session<T: Real, R: Rng + ?Sized>(
    stats: &ChannelStats<T>,
    schedule: &RisSchedule,
    snr_db: T,
    n_probes: usize,
    policy: RealizationPolicy,
    rng: &mut R,
) -> Result<ProbeSession<T>> {
    let opts = SessionOptions { policy, ..SessionOptions::default() };
    run_session_with(stats, schedule, snr_db, n_probes, &opts, rng)
}

/// Non-overlapping means of `l` consecutive samples; a trailing remainder is dropped.
pub fn block_average<T, S>(series: &[S], l: usize) -> Vec<S>
where
    T: Real,
    S: Copy + num_traits::Zero + std::ops::Add<Output = S> + std::ops::Div<T, Output = S>,
{
    assert!(l >= 1, "block length must be positive");
    series
        .chunks_exact(l)
        .map(|c| c.iter().fold(S::zero(), |a, &b| a + b) / lit::<T>(l as f64))
        .collect()
}
