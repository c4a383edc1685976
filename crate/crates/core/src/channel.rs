//! Statistical channel ensemble, realizations, and RIS-involved gains.
//!
//! The composite gain seen between Alice and UT `m` is
//! `Σₙ cₙ·h_ar[n]·h_rb[n,m] + Σ direct taps`; the same physical draw serves
//! both directions, so reciprocity is exact and any asymmetry must come from
//! noise or from the surface being in a different state per direction.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;

use crate::error::{config, invalid, Result};
use crate::ris::{reflection_coeffs, RisConfig};
use crate::scalar::{complex_normal, lit, Real};

/// One resolvable direct-link tap: delay in samples and relative power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap<T> {
    pub delay: usize,
    pub power: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats<T> {
    pub n_elements: usize,
    pub n_uts: usize,
    /// Per-element variance of the Alice→RIS link.
    pub var_ar: T,
    /// Per-element variance of the RIS→UT link, one entry per UT.
    pub var_rb: Vec<T>,
    /// Total variance of each direct link (0 = blocked).
    pub var_direct: T,
    /// Correlation between the RIS→UT links of two different UTs.
    pub rho_ut: T,
    /// Magnitude of the correlation between adjacent elements.
    pub rho_elem: T,
    /// Phase advance of the element correlation per element index (mean
    /// arrival angle of a uniform array); 0 gives the purely real model.
    pub elem_phase: T,
    /// Relative power of each element's Alice-side gain (all 1 by default).
    pub element_power: Vec<T>,
    /// Share of total mean energy carried by the RIS path in tap-domain responses.
    pub gamma: T,
    /// Direct-link tap profile; powers are normalized on use.
    pub multipath: Vec<Tap<T>>,
    pub ris_tap_index: usize,
    /// Fractional extra delay of the RIS path, in taps, within [0, 1).
    pub ris_tap_offset: T,
}

impl<T: Real> ChannelStats<T> {
    /// Unit-variance, uncorrelated links, direct path blocked.
    pub fn new(n_elements: usize, n_uts: usize) -> Self {
        ChannelStats {
            n_elements,
            n_uts,
            var_ar: T::one(),
            var_rb: vec![T::one(); n_uts],
            var_direct: T::zero(),
            rho_ut: T::zero(),
            rho_elem: T::zero(),
            elem_phase: T::zero(),
            element_power: vec![T::one(); n_elements],
            gamma: T::zero(),
            multipath: vec![Tap { delay: 0, power: T::one() }],
            ris_tap_index: 1,
            ris_tap_offset: T::zero(),
        }
    }

    /// Split a unit mean energy: the RIS path gets `gamma`, the direct link the rest.
    pub fn with_gamma(mut self, gamma: T) -> Self {
        let n = lit::<T>(self.n_elements as f64);
        self.gamma = gamma;
        self.var_direct = T::one() - gamma;
        self.var_ar = T::one();
        self.var_rb = vec![gamma / n; self.n_uts];
        self.element_power = vec![T::one(); self.n_elements];
        self
    }

    pub fn with_correlation(mut self, rho_elem: T, elem_phase: T, rho_ut: T) -> Self {
        self.rho_elem = rho_elem;
        self.elem_phase = elem_phase;
        self.rho_ut = rho_ut;
        self
    }

    pub fn with_multipath(mut self, taps: Vec<Tap<T>>, ris_tap_index: usize, ris_tap_offset: T) -> Self {
        self.multipath = taps;
        self.ris_tap_index = ris_tap_index;
        self.ris_tap_offset = ris_tap_offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 || self.n_uts == 0 {
            return Err(config("n_elements and n_uts must be positive"));
        }
        if self.var_rb.len() != self.n_uts {
            return Err(config(format!("var_rb has {} entries, expected {}", self.var_rb.len(), self.n_uts)));
        }
        if self.element_power.len() != self.n_elements {
            return Err(config("element_power length differs from n_elements"));
        }
        let nonneg = |v: T| v.is_finite() && v >= T::zero();
        if !nonneg(self.var_ar) || !nonneg(self.var_direct) || !self.var_rb.iter().all(|&v| nonneg(v)) {
            return Err(config("variances must be finite and nonnegative"));
        }
        if !self.element_power.iter().all(|&v| nonneg(v)) {
            return Err(config("element powers must be finite and nonnegative"));
        }
        let unit = |v: T| v >= T::zero() && v < T::one();
        if !unit(self.rho_ut) || !unit(self.rho_elem) {
            return Err(config("rho_ut and rho_elem must lie in [0, 1)"));
        }
        if !self.elem_phase.is_finite() {
            return Err(config("elem_phase must be finite"));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(config("gamma must lie in [0, 1]"));
        }
        if self.multipath.is_empty() {
            return Err(config("multipath profile is empty"));
        }
        for w in self.multipath.windows(2) {
            if w[1].delay <= w[0].delay {
                return Err(config("multipath delays must be strictly increasing"));
            }
        }
        if !self.multipath.iter().all(|t| t.power.is_finite() && t.power > T::zero()) {
            return Err(config("multipath powers must be positive"));
        }
        if !(self.ris_tap_offset >= T::zero() && self.ris_tap_offset < T::one()) {
            return Err(config("ris_tap_offset must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Multipath powers scaled to sum to one.
    pub fn normalized_multipath(&self) -> Vec<Tap<T>> {
        let total: T = self.multipath.iter().map(|t| t.power).sum();
        self.multipath.iter().map(|t| Tap { delay: t.delay, power: t.power / total }).collect()
    }

    /// Element covariance `E[x_i x_j*]` with unit diagonal.
    pub fn element_correlation(&self, i: usize, j: usize) -> Complex<T> {
        let d = i as i64 - j as i64;
        let mag = self.rho_elem.powi(d.unsigned_abs() as i32);
        Complex::from_polar(mag, self.elem_phase * lit(d as f64))
    }

    /// Per-element cascaded variance `p_n·var_ar·Σ_m var_rb[m]` used for on-off ranking.
    pub fn cascaded_element_variance(&self) -> Vec<T> {
        let rb: T = self.var_rb.iter().copied().sum();
        self.element_power.iter().map(|&p| p * self.var_ar * rb).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub n_elements: usize,
    pub n_uts: usize,
    /// Alice→RIS gains (equal to RIS→Alice).
    pub h_ar: Vec<Complex<T>>,
    /// RIS→UT gains, row-major `[n * n_uts + m]`.
    pub h_rb: Vec<Complex<T>>,
    /// Direct taps of each UT's link to Alice, in profile order.
    pub h_direct: Vec<Vec<Complex<T>>>,
    /// Eve's direct taps from Alice.
    pub h_eve_direct: Vec<Complex<T>>,
    /// RIS→Eve gains.
    pub h_eve_ris: Vec<Complex<T>>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn h_rb_at(&self, n: usize, ut: usize) -> Complex<T> {
        self.h_rb[n * self.n_uts + ut]
    }
}

/// Precomputed coloring for repeated draws from one ensemble.
#[derive(Debug, Clone)]
pub struct ChannelSampler<T> {
    stats: ChannelStats<T>,
    /// Hermitian square root of the element correlation, row-major, or
    /// `None` when it is the identity.
    elem_sqrt: Option<Vec<Complex<T>>>,
    ut_sqrt: Option<Vec<T>>,
    tap_amp: Vec<T>,
}

impl<T: Real> ChannelSampler<T> {
    pub fn new(stats: &ChannelStats<T>) -> Result<Self> {
        stats.validate()?;
        let n = stats.n_elements;
        let m = stats.n_uts;
        let elem_sqrt = if stats.rho_elem == T::zero() {
            None
        } else {
            let r = DMatrix::from_fn(n, n, |i, j| {
                let c = stats.element_correlation(i, j);
                Complex::new(c.re.as_f64(), c.im.as_f64())
            });
            let s = hermitian_sqrt(r)?;
            Some(
                (0..n * n)
                    .map(|k| {
                        let c = s[(k / n, k % n)];
                        Complex::new(lit(c.re), lit(c.im))
                    })
                    .collect(),
            )
        };
        let ut_sqrt = if stats.rho_ut == T::zero() || m == 1 {
            None
        } else {
            let rho = stats.rho_ut.as_f64();
            let c = DMatrix::from_fn(m, m, |i, j| Complex::new(if i == j { 1.0 } else { rho }, 0.0));
            let s = hermitian_sqrt(c)?;
            Some((0..m * m).map(|k| lit(s[(k / m, k % m)].re)).collect())
        };
        let tap_amp = stats.normalized_multipath().iter().map(|t| t.power.sqrt()).collect();
        Ok(ChannelSampler { stats: stats.clone(), elem_sqrt, ut_sqrt, tap_amp })
    }

    pub fn stats(&self) -> &ChannelStats<T> {
        &self.stats
    }

    fn color_elements(&self, w: &[Complex<T>]) -> Vec<Complex<T>> {
        match &self.elem_sqrt {
            None => w.to_vec(),
            Some(s) => {
                let n = w.len();
                (0..n).map(|i| (0..n).map(|k| s[i * n + k] * w[k]).sum()).collect()
            }
        }
    }

    fn draw_taps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex<T>> {
        let v = self.stats.var_direct;
        self.tap_amp
            .iter()
            .map(|&a| {
                if v == T::zero() {
                    Complex::new(T::zero(), T::zero())
                } else {
                    complex_normal(rng, v) * a
                }
            })
            .collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization<T> {
        let st = &self.stats;
        let n = st.n_elements;
        let m = st.n_uts;

        let w: Vec<Complex<T>> = (0..n).map(|_| complex_normal(rng, T::one())).collect();
        let h_ar: Vec<Complex<T>> = self
            .color_elements(&w)
            .into_iter()
            .zip(&st.element_power)
            .map(|(x, &p)| x * (p * st.var_ar).sqrt())
            .collect();

        // columns: independent spatially-colored draws, then mixed across UTs
        let cols: Vec<Vec<Complex<T>>> = (0..m)
            .map(|_| {
                let w: Vec<Complex<T>> = (0..n).map(|_| complex_normal(rng, T::one())).collect();
                self.color_elements(&w)
            })
            .collect();
        let mut h_rb = vec![Complex::new(T::zero(), T::zero()); n * m];
        for e in 0..n {
            for u in 0..m {
                let x = match &self.ut_sqrt {
                    None => cols[u][e],
                    Some(s) => (0..m).map(|j| cols[j][e] * s[u * m + j]).sum(),
                };
                h_rb[e * m + u] = x * st.var_rb[u].sqrt();
            }
        }

        let h_direct = (0..m).map(|_| self.draw_taps(rng)).collect();

        let we: Vec<Complex<T>> = (0..n).map(|_| complex_normal(rng, T::one())).collect();
        let h_eve_ris = self.color_elements(&we).into_iter().map(|x| x * st.var_rb[0].sqrt()).collect();
        let h_eve_direct = self.draw_taps(rng);

        ChannelRealization { n_elements: n, n_uts: m, h_ar, h_rb, h_direct, h_eve_direct, h_eve_ris }
    }
}

fn hermitian_sqrt(r: DMatrix<Complex<f64>>) -> Result<DMatrix<Complex<f64>>> {
    let eig = r.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
        return Err(config("correlation matrix is not positive semi-definite"));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex::new(l.max(0.0).sqrt(), 0.0)));
    let v = eig.eigenvectors;
    Ok(&v * d * v.adjoint())
}

/// One draw of every link in the ensemble.
pub fn draw_realization<T: Real, R: Rng + ?Sized>(stats: &ChannelStats<T>, rng: &mut R) -> Result<ChannelRealization<T>> {
    Ok(ChannelSampler::new(stats)?.draw(rng))
}

fn check_ut<T: Real>(real: &ChannelRealization<T>, ut: usize) -> Result<()> {
    if ut >= real.n_uts {
        return Err(invalid(format!("UT index {ut} out of range (M = {})", real.n_uts)));
    }
    Ok(())
}

fn check_len<T: Real>(real: &ChannelRealization<T>, coeffs: &[Complex<T>]) -> Result<()> {
    if coeffs.len() != real.n_elements {
        return Err(invalid(format!("{} coefficients for {} elements", coeffs.len(), real.n_elements)));
    }
    Ok(())
}

/// RIS-reflected part only: `Σₙ cₙ·h_ar[n]·h_rb[n,ut]`.
pub fn ris_gain<T: Real>(real: &ChannelRealization<T>, coeffs: &[Complex<T>], ut: usize) -> Result<Complex<T>> {
    check_ut(real, ut)?;
    check_len(real, coeffs)?;
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| c * real.h_ar[n] * real.h_rb_at(n, ut))
        .sum())
}

pub fn cascaded_gain<T: Real>(real: &ChannelRealization<T>, cfg: &RisConfig<T>, ut: usize) -> Result<Complex<T>> {
    let coeffs = reflection_coeffs(cfg);
    let direct: Complex<T> = {
        check_ut(real, ut)?;
        real.h_direct[ut].iter().copied().sum()
    };
    Ok(ris_gain(real, &coeffs, ut)? + direct)
}

/// Eve's reflected part `Σₙ cₙ·h_ar[n]·h_eve_ris[n]`.
pub fn eve_ris_gain<T: Real>(real: &ChannelRealization<T>, coeffs: &[Complex<T>]) -> Result<Complex<T>> {
    check_len(real, coeffs)?;
    Ok(coeffs.iter().enumerate().map(|(n, &c)| c * real.h_ar[n] * real.h_eve_ris[n]).sum())
}

pub fn eve_gain<T: Real>(real: &ChannelRealization<T>, cfg: &RisConfig<T>) -> Result<Complex<T>> {
    let coeffs = reflection_coeffs(cfg);
    Ok(eve_ris_gain(real, &coeffs)? + real.h_eve_direct.iter().copied().sum::<Complex<T>>())
}

/// Per-subcarrier response split into its direct and RIS contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseParts<T> {
    pub direct: Vec<Complex<T>>,
    pub ris: Vec<Complex<T>>,
}

impl<T: Real> ResponseParts<T> {
    pub fn total(&self) -> Vec<Complex<T>> {
        self.direct.iter().zip(&self.ris).map(|(a, b)| a + b).collect()
    }
}

/// Which receiver a tap-domain response is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Listener {
    Ut(usize),
    Eve,
}

/// Tap-domain model of one link, split into direct and RIS parts.
///
/// Direct taps sit at their profile delays and the cascaded gain at
/// `ris_tap_index (+ offset)`. Each realization is rescaled so that, on
/// average over surface states, the RIS path carries `gamma` of the unit
/// total energy.
pub fn tapped_parts<T: Real>(
    stats: &ChannelStats<T>,
    real: &ChannelRealization<T>,
    coeffs: &[Complex<T>],
    listener: Listener,
    n_subcarriers: usize,
) -> Result<ResponseParts<T>> {
    let k = n_subcarriers;
    if stats.ris_tap_index >= k || stats.multipath.iter().any(|t| t.delay >= k) {
        return Err(config("tap index beyond the number of subcarriers"));
    }
    if stats.ris_tap_offset == T::zero() && stats.multipath.iter().any(|t| t.delay == stats.ris_tap_index) {
        return Err(config(format!("RIS tap {} collides with a direct tap", stats.ris_tap_index)));
    }
    let zero = Complex::new(T::zero(), T::zero());

    let (taps, reflected, path_energy) = match listener {
        Listener::Ut(ut) => {
            check_ut(real, ut)?;
            let e: T = (0..real.n_elements).map(|n| (real.h_ar[n] * real.h_rb_at(n, ut)).norm_sqr()).sum();
            (&real.h_direct[ut], ris_gain(real, coeffs, ut)?, e)
        }
        Listener::Eve => {
            let e: T = (0..real.n_elements).map(|n| (real.h_ar[n] * real.h_eve_ris[n]).norm_sqr()).sum();
            (&real.h_eve_direct, eve_ris_gain(real, coeffs)?, e)
        }
    };

    let mut direct = vec![zero; k];
    if stats.var_direct > T::zero() {
        let scale = ((T::one() - stats.gamma) / stats.var_direct).sqrt();
        for (tap, &h) in stats.multipath.iter().zip(taps.iter()) {
            direct[tap.delay] = h * scale;
        }
    }
    T::dft(&mut direct, false);

    let g = if path_energy > T::zero() { reflected * (stats.gamma / path_energy).sqrt() } else { zero };
    let delay = lit::<T>(stats.ris_tap_index as f64) + stats.ris_tap_offset;
    let norm = lit::<T>(k as f64).sqrt();
    let two_pi = T::PI() + T::PI();
    let ris = (0..k)
        .map(|s| g * Complex::from_polar(T::one() / norm, -two_pi * lit::<T>(s as f64) * delay / lit(k as f64)))
        .collect();
    Ok(ResponseParts { direct, ris })
}

/// Per-subcarrier CSI of `ut`'s link (unitary DFT of the tap-domain model).
pub fn tapped_response<T: Real>(
    stats: &ChannelStats<T>,
    real: &ChannelRealization<T>,
    cfg: &RisConfig<T>,
    ut: usize,
    n_subcarriers: usize,
) -> Result<Vec<Complex<T>>> {
    Ok(tapped_parts(stats, real, &reflection_coeffs(cfg), Listener::Ut(ut), n_subcarriers)?.total())
}
