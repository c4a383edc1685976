//! From observation series to keys: quantization, disagreement and rate
//! accounting, syndrome reconciliation, Toeplitz privacy amplification.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::probing::Party;
use crate::scalar::{lit, mean, median, Real};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString {
    pub bits: Vec<bool>,
    pub origin: Option<Party>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString { bits, origin: None }
    }

    pub fn from_party(mut self, party: Party) -> Self {
        self.origin = Some(party);
        self
    }

    /// Parse a `0`/`1` string; other characters are rejected.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(invalid(format!("'{c}' is not a bit"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(BitString::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Packed bytes, most significant bit first, last byte zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))))
            .collect()
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.len().div_ceil(4));
        for b in self.to_bytes() {
            write!(s, "{b:02x}").expect("writing to a String");
        }
        s
    }

    /// Header line written next to raw binary exports (bit length is not
    /// recoverable from the padded bytes alone).
    pub fn sidecar_header(&self) -> String {
        format!("bits={}\n", self.len())
    }

    /// Concatenate several strings (e.g. per-subcarrier keys); origin is kept from the first.
    pub fn concat(parts: &[BitString]) -> BitString {
        BitString {
            bits: parts.iter().flat_map(|p| p.bits.iter().copied()).collect(),
            origin: parts.first().and_then(|p| p.origin),
        }
    }
}

fn threshold_bits<T: Real>(series: &[T], threshold: T) -> Result<BitString> {
    if series.len() < 2 {
        return Err(invalid("quantization needs at least two samples"));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite sample"));
    }
    let first = series[0];
    if series.iter().all(|&x| x == first) {
        return Err(Error::ZeroEntropy);
    }
    // ties with the threshold map to 0
    Ok(BitString::new(series.iter().map(|&x| x > threshold).collect()))
}

/// One bit per sample: 1 iff above the series' own empirical median.
pub fn cdf_quantize<T: Real>(series: &[T]) -> Result<BitString> {
    threshold_bits(series, median(series))
}

/// One bit per sample: 1 iff the power is above the series mean.
pub fn rss_threshold_quantize<T: Real>(powers: &[T]) -> Result<BitString> {
    threshold_bits(powers, mean(powers))
}

/// Fraction of positions where the two strings differ.
pub fn bdr(a: &BitString, b: &BitString) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(invalid("empty bit strings"));
    }
    let d = a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count();
    Ok(d as f64 / a.len() as f64)
}

/// Key generation rate `1 / (L·T_p + T_u)` in bit/s for one bit per surface configuration.
pub fn kgr<T: Real>(l: usize, t_probe_s: T, t_update_s: T) -> Result<T> {
    if l == 0 || !(t_probe_s > T::zero()) || !(t_update_s >= T::zero()) {
        return Err(invalid("L and T_p must be positive, T_u nonnegative"));
    }
    Ok(T::one() / (lit::<T>(l as f64) * t_probe_s + t_update_s))
}

/// Linear block code for syndrome reconciliation.
///
/// Column `j` of the parity-check matrix is the `r`-bit binary expansion of
/// `j + 1` (the Hamming construction), so a single error at position `j`
/// produces syndrome `j + 1` and is located directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconcileParams {
    pub n: usize,
    pub k: usize,
    /// Parity-check columns, one `u32` syndrome per code position.
    pub parity_columns: Vec<u32>,
    /// Width of the per-block verification hash.
    pub hash_bits: usize,
}

impl ReconcileParams {
    /// Hamming(2^r − 1, 2^r − 1 − r): distance 3, corrects one error per block.
    pub fn hamming(r: u32, hash_bits: usize) -> Result<Self> {
        if !(2..=16).contains(&r) {
            return Err(invalid("Hamming order r must be within 2..=16"));
        }
        if hash_bits > 64 {
            return Err(invalid("verification hash is at most 64 bits"));
        }
        let n = (1usize << r) - 1;
        Ok(ReconcileParams { n, k: n - r as usize, parity_columns: (1..=n as u32).collect(), hash_bits })
    }

    pub fn leak_per_block(&self) -> usize {
        self.n - self.k + self.hash_bits
    }

    fn syndrome(&self, block: &[bool]) -> u32 {
        block.iter().zip(&self.parity_columns).filter(|(b, _)| **b).fold(0, |s, (_, &c)| s ^ c)
    }

    fn locate(&self, syndrome: u32) -> Option<usize> {
        self.parity_columns.iter().position(|&c| c == syndrome)
    }
}

impl Default for ReconcileParams {
    fn default() -> Self {
        ReconcileParams::hamming(5, 16).expect("valid defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciled {
    /// Alice's surviving bits.
    pub key: BitString,
    /// Bob's bits after correction (equal to `key` unless a hash collided).
    pub key_bob: BitString,
    pub leaked_bits: usize,
    pub failed_blocks: usize,
    pub blocks: usize,
}

fn block_tag(index: usize, block: &[bool], bits: usize) -> u64 {
    if bits == 0 {
        return 0;
    }
    let mut h = Sha256::new();
    h.update((index as u64).to_le_bytes());
    h.update(BitString::new(block.to_vec()).to_bytes());
    let d = h.finalize();
    let mut w = [0u8; 8];
    w.copy_from_slice(&d[..8]);
    let v = u64::from_be_bytes(w);
    if bits == 64 {
        v
    } else {
        v >> (64 - bits)
    }
}

/// One-way syndrome reconciliation: Alice publishes each block's syndrome
/// and a short hash; Bob corrects toward Alice and drops the block when the
/// hash disagrees (Alice drops it too).
pub fn reconcile(a: &BitString, b: &BitString, params: &ReconcileParams) -> Result<Reconciled> {
    if a.len() != b.len() {
        return Err(invalid("reconcile needs equal-length inputs"));
    }
    if !(0 < params.k && params.k < params.n) || params.parity_columns.len() != params.n {
        return Err(invalid("malformed code description"));
    }
    let n = params.n;
    let len = a.len();
    let blocks = len.div_ceil(n);
    let pad = |s: &BitString| {
        let mut v = s.bits.clone();
        v.resize(blocks * n, false);
        v
    };
    let (pa, mut pb) = (pad(a), pad(b));
    let mut key = Vec::with_capacity(len);
    let mut key_bob = Vec::with_capacity(len);
    let mut failed = 0;
    for i in 0..blocks {
        let range = i * n..(i + 1) * n;
        let diff = params.syndrome(&pa[range.clone()]) ^ params.syndrome(&pb[range.clone()]);
        if diff != 0 {
            if let Some(j) = params.locate(diff) {
                pb[i * n + j] = !pb[i * n + j];
            }
        }
        if block_tag(i, &pa[range.clone()], params.hash_bits) != block_tag(i, &pb[range.clone()], params.hash_bits) {
            failed += 1;
            continue;
        }
        let end = ((i + 1) * n).min(len);
        key.extend_from_slice(&pa[i * n..end]);
        key_bob.extend_from_slice(&pb[i * n..end]);
    }
    Ok(Reconciled {
        key: BitString { bits: key, origin: a.origin },
        key_bob: BitString { bits: key_bob, origin: b.origin },
        leaked_bits: blocks * params.leak_per_block(),
        failed_blocks: failed,
        blocks,
    })
}

/// Compress `key` to `out_len` bits with a seed-derived Toeplitz matrix.
pub fn privacy_amplify(key: &BitString, leaked_bits: usize, out_len: usize, seed: u64) -> Result<BitString> {
    let n = key.len();
    if out_len == 0 || out_len + leaked_bits > n {
        return Err(invalid(format!(
            "cannot extract {out_len} bits from {n} with {leaked_bits} leaked"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // T[i][j] = diag[i − j + n − 1]
    let diag: Vec<bool> = (0..n + out_len - 1).map(|_| rng.random::<bool>()).collect();
    let ones: Vec<usize> = key.bits.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect();
    let bits = (0..out_len)
        .map(|i| ones.iter().fold(false, |acc, &j| acc ^ diag[i + n - 1 - j]))
        .collect();
    Ok(BitString { bits, origin: key.origin })
}
