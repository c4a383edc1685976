//! Five statistical tests from NIST SP 800-22 for auditing key bits.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::keygen::BitString;

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub test_name: &'static str,
    pub p_value: f64,
    pub passed: bool,
    pub n_bits: usize,
}

impl TestReport {
    fn new(test_name: &'static str, p_value: f64, n_bits: usize, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport { test_name, p_value, passed: p_value >= alpha, n_bits }
    }
}

/// Test battery settings. `enforce_minimum = false` admits the short
/// worked-example vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nist {
    pub alpha: f64,
    pub enforce_minimum: bool,
}

impl Default for Nist {
    fn default() -> Self {
        Nist { alpha: DEFAULT_ALPHA, enforce_minimum: true }
    }
}

fn pm(bits: &BitString) -> impl Iterator<Item = i64> + '_ {
    bits.bits.iter().map(|&b| if b { 1 } else { -1 })
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Chi-square tail `P(χ²_dof > x)` through the regularized upper gamma.
fn chi2_tail(dof: f64, x: f64) -> f64 {
    gamma_ur(dof / 2.0, x / 2.0)
}

impl Nist {
    fn check(&self, test: &'static str, n: usize, min: usize) -> Result<()> {
        if n == 0 || (self.enforce_minimum && n < min) {
            return Err(Error::TooShort { test, got: n, min });
        }
        Ok(())
    }

    pub fn monobit(&self, bits: &BitString) -> Result<TestReport> {
        let n = bits.len();
        self.check("monobit", n, 100)?;
        let s: i64 = pm(bits).sum();
        let s_obs = s.unsigned_abs() as f64 / (n as f64).sqrt();
        Ok(TestReport::new("monobit", erfc(s_obs / std::f64::consts::SQRT_2), n, self.alpha))
    }

    pub fn block_frequency(&self, bits: &BitString, block_len: usize) -> Result<TestReport> {
        let n = bits.len();
        self.check("block_frequency", n, 100)?;
        if block_len == 0 || (self.enforce_minimum && block_len < 20) || block_len > n {
            return Err(Error::Invalid(format!("block length {block_len} unusable for {n} bits (minimum 20)")));
        }
        let blocks = n / block_len;
        let m = block_len as f64;
        let chi2: f64 = bits
            .bits
            .chunks_exact(block_len)
            .map(|b| {
                let pi = b.iter().filter(|&&x| x).count() as f64 / m;
                (pi - 0.5).powi(2)
            })
            .sum::<f64>()
            * 4.0
            * m;
        Ok(TestReport::new("block_frequency", chi2_tail(blocks as f64, chi2), n, self.alpha))
    }

    pub fn runs(&self, bits: &BitString) -> Result<TestReport> {
        let n = bits.len();
        self.check("runs", n, 100)?;
        let nf = n as f64;
        let pi = bits.ones() as f64 / nf;
        // frequency prerequisite: a badly biased sequence fails outright
        if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
            return Ok(TestReport::new("runs", 0.0, n, self.alpha));
        }
        let v = 1 + bits.bits.windows(2).filter(|w| w[0] != w[1]).count();
        let q = pi * (1.0 - pi);
        let p = erfc((v as f64 - 2.0 * nf * q).abs() / (2.0 * (2.0 * nf).sqrt() * q));
        Ok(TestReport::new("runs", p, n, self.alpha))
    }

    /// Longest run of ones in blocks; block size picked from the sequence length.
    pub fn longest_run(&self, bits: &BitString) -> Result<TestReport> {
        let n = bits.len();
        self.check("longest_run", n, 128)?;
        if n < 128 {
            return Err(Error::TooShort { test: "longest_run", got: n, min: 128 });
        }
        let (m, lo, probs): (usize, usize, &[f64]) = if n < 6272 {
            (8, 1, &[0.2148, 0.3672, 0.2305, 0.2266])
        } else if n < 750_000 {
            (128, 4, &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])
        } else {
            (10_000, 10, &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727])
        };
        let k = probs.len() - 1;
        let mut counts = vec![0usize; probs.len()];
        let mut blocks = 0usize;
        for block in bits.bits.chunks_exact(m) {
            let (mut best, mut cur) = (0usize, 0usize);
            for &b in block {
                cur = if b { cur + 1 } else { 0 };
                best = best.max(cur);
            }
            counts[best.clamp(lo, lo + k) - lo] += 1;
            blocks += 1;
        }
        let nb = blocks as f64;
        let chi2: f64 = counts.iter().zip(probs).map(|(&v, &p)| (v as f64 - nb * p).powi(2) / (nb * p)).sum();
        Ok(TestReport::new("longest_run", chi2_tail(k as f64, chi2), n, self.alpha))
    }

    /// Cumulative sums in forward (`reverse = false`) or backward mode.
    pub fn cumulative_sums_mode(&self, bits: &BitString, reverse: bool) -> Result<TestReport> {
        let n = bits.len();
        self.check("cumulative_sums", n, 100)?;
        let steps: Vec<i64> = if reverse { pm(bits).collect::<Vec<_>>().into_iter().rev().collect() } else { pm(bits).collect() };
        let (mut s, mut z) = (0i64, 0i64);
        for x in steps {
            s += x;
            z = z.max(s.abs());
        }
        let (ni, zi) = (n as i64, z);
        let sq = (n as f64).sqrt();
        let zf = z as f64;
        // loop bounds follow the reference implementation's integer division
        let mut sum1 = 0.0;
        let mut k = (-ni / zi + 1) / 4;
        while k <= (ni / zi - 1) / 4 {
            let kf = k as f64;
            sum1 += normal_cdf((4.0 * kf + 1.0) * zf / sq) - normal_cdf((4.0 * kf - 1.0) * zf / sq);
            k += 1;
        }
        let mut sum2 = 0.0;
        let mut k = (-ni / zi - 3) / 4;
        while k <= (ni / zi - 1) / 4 {
            let kf = k as f64;
            sum2 += normal_cdf((4.0 * kf + 3.0) * zf / sq) - normal_cdf((4.0 * kf + 1.0) * zf / sq);
            k += 1;
        }
        Ok(TestReport::new("cumulative_sums", 1.0 - sum1 + sum2, n, self.alpha))
    }

    pub fn cumulative_sums(&self, bits: &BitString) -> Result<TestReport> {
        self.cumulative_sums_mode(bits, false)
    }

    /// All five tests in a fixed order.
    pub fn all(&self, bits: &BitString, block_len: usize) -> Result<Vec<TestReport>> {
        Ok(vec![
            self.monobit(bits)?,
            self.block_frequency(bits, block_len)?,
            self.runs(bits)?,
            self.longest_run(bits)?,
            self.cumulative_sums(bits)?,
        ])
    }
}

/// Block length keeping the block count under 100, as the test guidance asks.
pub fn default_block_len(n_bits: usize) -> usize {
    n_bits.div_ceil(99).max(20)
}

pub fn monobit(bits: &BitString) -> Result<TestReport> {
    Nist::default().monobit(bits)
}

pub fn block_frequency(bits: &BitString, block_len: usize) -> Result<TestReport> {
    Nist::default().block_frequency(bits, block_len)
}

pub fn runs(bits: &BitString) -> Result<TestReport> {
    Nist::default().runs(bits)
}

pub fn longest_run(bits: &BitString) -> Result<TestReport> {
    Nist::default().longest_run(bits)
}

pub fn cumulative_sums(bits: &BitString) -> Result<TestReport> {
    Nist::default().cumulative_sums(bits)
}
