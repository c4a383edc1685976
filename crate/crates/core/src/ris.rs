//! Surface configurations and the schedulers that decide which one is in
//! force at each probe.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{invalid, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RisMode {
    /// Any phase in [−π, π), unit amplitude.
    ContinuousPhase,
    /// Phase 0 or π (coefficient ±1), unit amplitude.
    BinaryPhase,
    /// Amplitude 0 or 1, phase 0.
    OnOff,
}

/// Which way a pilot travels through the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Alice → Bob (the surface state Bob measures through).
    Forward,
    /// Bob → Alice.
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig<T> {
    pub mode: RisMode,
    pub phases: Vec<T>,
    pub amplitudes: Vec<T>,
}

impl<T: Real> RisConfig<T> {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Continuous-phase config; phases are wrapped into [−π, π).
    pub fn continuous(phases: &[T]) -> Self {
        RisConfig {
            mode: RisMode::ContinuousPhase,
            phases: phases.iter().map(|&p| wrap_phase(p)).collect(),
            amplitudes: vec![T::one(); phases.len()],
        }
    }

    /// Binary-phase config; `true` selects phase π (coefficient −1).
    pub fn binary(flips: &[bool]) -> Self {
        RisConfig {
            mode: RisMode::BinaryPhase,
            phases: flips.iter().map(|&f| if f { T::PI() } else { T::zero() }).collect(),
            amplitudes: vec![T::one(); flips.len()],
        }
    }

    pub fn on_off(on: &[bool]) -> Self {
        RisConfig {
            mode: RisMode::OnOff,
            phases: vec![T::zero(); on.len()],
            amplitudes: on.iter().map(|&o| if o { T::one() } else { T::zero() }).collect(),
        }
    }

    pub fn all_on(n: usize) -> Self {
        Self::on_off(&vec![true; n])
    }

    pub fn all_off(n: usize) -> Self {
        Self::on_off(&vec![false; n])
    }

    /// Checks the constraints of `self.mode`.
    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != self.amplitudes.len() {
            return Err(invalid("phases and amplitudes differ in length"));
        }
        let pi = T::PI();
        for (&p, &a) in self.phases.iter().zip(&self.amplitudes) {
            if !(p.is_finite() && a.is_finite()) {
                return Err(invalid("non-finite coefficient"));
            }
            if a < T::zero() || a > T::one() {
                return Err(invalid("amplitude outside [0, 1]"));
            }
            let ok = match self.mode {
                RisMode::ContinuousPhase => a == T::one() && p >= -pi && p < pi,
                // π is accepted as the representative of the second state
                RisMode::BinaryPhase => a == T::one() && (p == T::zero() || p == pi || p == -pi),
                RisMode::OnOff => p == T::zero() && (a == T::zero() || a == T::one()),
            };
            if !ok {
                return Err(invalid(format!("coefficient ({a}, {p}) violates {:?}", self.mode)));
            }
        }
        Ok(())
    }
}

/// Wrap an angle into [−π, π).
pub fn wrap_phase<T: Real>(p: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = (p + T::PI()) % two_pi;
    if w < T::zero() {
        w = w + two_pi;
    }
    let w = w - T::PI();
    // guard the rounding edge where w lands exactly on +π
    if w >= T::PI() {
        -T::PI()
    } else {
        w
    }
}

/// `amplitudes[n] · exp(i·phases[n])`.
pub fn reflection_coeffs<T: Real>(cfg: &RisConfig<T>) -> Vec<Complex<T>> {
    cfg.phases
        .iter()
        .zip(&cfg.amplitudes)
        .map(|(&p, &a)| match cfg.mode {
            // exact ±1 instead of cos(π) = −1 + ε·i
            RisMode::BinaryPhase => {
                if p == T::zero() {
                    Complex::new(a, T::zero())
                } else {
                    Complex::new(-a, T::zero())
                }
            }
            RisMode::OnOff => Complex::new(a, T::zero()),
            RisMode::ContinuousPhase => Complex::from_polar(a, p),
        })
        .collect()
}

pub fn random_config<T: Real, R: Rng + ?Sized>(mode: RisMode, n: usize, rng: &mut R) -> Result<RisConfig<T>> {
    if n == 0 {
        return Err(invalid("a surface needs at least one element"));
    }
    Ok(match mode {
        RisMode::BinaryPhase => {
            let flips: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            RisConfig::binary(&flips)
        }
        RisMode::OnOff => {
            let on: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            RisConfig::on_off(&on)
        }
        RisMode::ContinuousPhase => {
            let two_pi = T::PI() + T::PI();
            let phases: Vec<T> = (0..n).map(|_| T::unit(rng) * two_pi - T::PI()).collect();
            RisConfig::continuous(&phases)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// One configuration for the whole session.
    Hold,
    /// A fresh random configuration every `block_len` probes, shared by both directions.
    RandomPerBlock,
    /// All elements on for even blocks, all off for odd blocks.
    AlternatingAllOnOff,
    /// Independent random configuration for every (probe, direction): Φ₁ ≠ Φ₂.
    AttackerPerDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RisSchedule {
    pub kind: ScheduleKind,
    /// Probes per surface state (L).
    pub block_len: usize,
    /// Mode of the random draws; ignored by the alternating kind.
    pub mode: RisMode,
    pub n_elements: usize,
}

impl RisSchedule {
    pub fn new(kind: ScheduleKind, block_len: usize, mode: RisMode, n_elements: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(invalid("block_len must be at least 1"));
        }
        if n_elements == 0 {
            return Err(invalid("a surface needs at least one element"));
        }
        Ok(RisSchedule { kind, block_len, mode, n_elements })
    }

    pub fn block_of(&self, probe_index: usize) -> usize {
        probe_index / self.block_len
    }
}

/// Configuration in force at `probe_index` in `direction`.
///
/// Pure in its arguments: every block (or, for the attacker kind, every
/// probe/direction pair) reads its own ChaCha stream keyed by `stream_key`,
/// so sequences replay identically whatever order they are queried in.
pub fn schedule_config<T: Real>(
    schedule: &RisSchedule,
    probe_index: usize,
    direction: Direction,
    stream_key: u64,
) -> RisConfig<T> {
    let n = schedule.n_elements;
    let block = schedule.block_of(probe_index) as u64;
    let draw = |stream: u64| {
        let mut rng = ChaCha12Rng::seed_from_u64(stream_key);
        rng.set_stream(stream);
        random_config(schedule.mode, n, &mut rng).expect("n_elements checked at construction")
    };
    match schedule.kind {
        ScheduleKind::Hold => draw(0),
        ScheduleKind::RandomPerBlock => draw(block),
        ScheduleKind::AlternatingAllOnOff => {
            if block % 2 == 0 {
                RisConfig::all_on(n)
            } else {
                RisConfig::all_off(n)
            }
        }
        ScheduleKind::AttackerPerDirection => {
            let d = match direction {
                Direction::Forward => 0,
                Direction::Reverse => 1,
            };
            draw((probe_index as u64) * 2 + d)
        }
    }
}

/// Phase-quantize a continuous config to the binary mode (nearest of 0/π).
pub fn quantize_binary<T: Real>(cfg: &RisConfig<T>) -> RisConfig<T> {
    let half = T::PI() / lit(2.0);
    let flips: Vec<bool> = cfg.phases.iter().map(|&p| p.abs() > half).collect();
    RisConfig::binary(&flips)
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn coefficient_examples() {
        let b = RisConfig::<f64>::binary(&[false, true]);
        let c = reflection_coeffs(&b);
        assert_eq!(c, vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]);

        let o = RisConfig::<f64>::on_off(&[false, true, false]);
        let c = reflection_coeffs(&o);
        assert_eq!(c.iter().map(|z| z.re).collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);

        let q = RisConfig::<f64>::continuous(&[std::f64::consts::FRAC_PI_2]);
        let c = reflection_coeffs(&q)[0];
        assert!((c - Complex::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn random_config_rejects_empty_and_replays() {
        let mut r = ChaCha12Rng::seed_from_u64(3);
        assert!(random_config::<f64, _>(RisMode::BinaryPhase, 0, &mut r).is_err());
        let a: RisConfig<f64> = random_config(RisMode::ContinuousPhase, 16, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        let b: RisConfig<f64> = random_config(RisMode::ContinuousPhase, 16, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binary_flip_fraction_per_element() {
        // 10^5 draws of a 128-element config; each element's −1 fraction
        // must sit inside 0.5 ± 0.01 (≈ 6.3σ for a fair coin).
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut neg = vec![0u32; 128];
        for _ in 0..draws {
            let c: RisConfig<f64> = random_config(RisMode::BinaryPhase, 128, &mut rng).unwrap();
            for (k, z) in reflection_coeffs(&c).iter().enumerate() {
                if z.re < 0.0 {
                    neg[k] += 1;
                }
            }
        }
        for &k in &neg {
            let f = f64::from(k) / draws as f64;
            assert!((f - 0.5).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn schedule_semantics() {
        let s = RisSchedule::new(ScheduleKind::RandomPerBlock, 4, RisMode::BinaryPhase, 128).unwrap();
        let c0: RisConfig<f64> = schedule_config(&s, 0, Direction::Forward, 5);
        for p in 1..4 {
            assert_eq!(c0, schedule_config(&s, p, Direction::Forward, 5));
            assert_eq!(c0, schedule_config(&s, p, Direction::Reverse, 5));
        }
        assert_ne!(c0, schedule_config(&s, 4, Direction::Forward, 5));

        let alt = RisSchedule::new(ScheduleKind::AlternatingAllOnOff, 3, RisMode::OnOff, 8).unwrap();
        let on: RisConfig<f64> = schedule_config(&alt, 2, Direction::Forward, 0);
        let off: RisConfig<f64> = schedule_config(&alt, 3, Direction::Forward, 0);
        assert!(on.amplitudes.iter().all(|&a| a == 1.0));
        assert!(off.amplitudes.iter().all(|&a| a == 0.0));

        let atk = RisSchedule::new(ScheduleKind::AttackerPerDirection, 1, RisMode::BinaryPhase, 64).unwrap();
        for p in 0..50 {
            let f: RisConfig<f64> = schedule_config(&atk, p, Direction::Forward, 1);
            let r: RisConfig<f64> = schedule_config(&atk, p, Direction::Reverse, 1);
            assert_ne!(f, r);
        }
    }

    #[test]
    fn wrap_phase_range() {
        let pi = std::f64::consts::PI;
        for &p in &[-3.0 * pi, -pi, 0.0, pi, 2.5 * pi, 7.0] {
            let w = wrap_phase(p);
            assert!((-pi..pi).contains(&w), "{p} -> {w}");
            assert!(((w - p) / (2.0 * pi)).fract().abs() < 1e-9 || ((w - p) / (2.0 * pi)).fract().abs() > 1.0 - 1e-9);
        }
    }
}
