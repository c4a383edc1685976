//! Gaussian secret-key rates for the multi-user surface, and the KSG
//! k-nearest-neighbour mutual-information estimator.

use std::collections::BinaryHeap;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use statrs::function::gamma::digamma;

use crate::channel::ChannelStats;
use crate::error::{invalid, Result};
use crate::ris::{reflection_coeffs, RisConfig};
use crate::scalar::{lit, Real};

/// `½·log₂(vx·vy / (vx·vy − c²))` for a real Gaussian pair; `+∞` when the
/// pair is deterministically dependent.
pub fn gaussian_mi<T: Real>(var_x: T, var_y: T, cov_xy: T) -> T {
    if cov_xy == T::zero() {
        return T::zero();
    }
    let p = var_x * var_y;
    let resid = p - cov_xy * cov_xy;
    if resid <= p * lit(1e-12) {
        return T::infinity();
    }
    (p / resid).log2() / lit(2.0)
}

/// Jointly Gaussian (x_A, x_B, z), each complex, stored in real-stacked form:
/// variable `i` occupies rows `2i` (real part) and `2i + 1` (imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussObsModel<T> {
    pub cov: [[T; 6]; 6],
    pub noise_var: T,
}

impl<T: Real> GaussObsModel<T> {
    /// Stack a Hermitian complex covariance `E[x_i x_j*]` of circular variables.
    pub fn from_complex(c: [[Complex<T>; 3]; 3], noise_var: T) -> Self {
        let h = lit::<T>(0.5);
        let mut cov = [[T::zero(); 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = (c[i][j].re * h, c[i][j].im * h);
                cov[2 * i][2 * j] = a;
                cov[2 * i][2 * j + 1] = -b;
                cov[2 * i + 1][2 * j] = b;
                cov[2 * i + 1][2 * j + 1] = a;
            }
        }
        GaussObsModel { cov, noise_var }
    }

    /// Smallest eigenvalue bound check via Cholesky-with-tolerance.
    pub fn is_psd(&self) -> bool {
        let sym = (0..6).all(|i| (0..6).all(|j| (self.cov[i][j] - self.cov[j][i]).abs() <= lit(1e-10)));
        sym && min_pivot(&self.cov) >= lit(-1e-10)
    }
}

/// Smallest pivot of an LDLᵀ-style elimination (≈ PSD test for small matrices).
fn min_pivot<T: Real>(m: &[[T; 6]; 6]) -> T {
    let mut a = *m;
    let mut worst = T::infinity();
    for k in 0..6 {
        let p = a[k][k];
        worst = worst.min(p);
        if p.abs() <= lit(1e-14) {
            continue;
        }
        for i in k + 1..6 {
            let f = a[i][k] / p;
            for j in k..6 {
                a[i][j] = a[i][j] - f * a[k][j];
            }
        }
    }
    worst
}

fn det<T: Real>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    let mut d = T::one();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).expect("finite")).expect("non-empty");
        if a[piv][k] == T::zero() {
            return T::zero();
        }
        if piv != k {
            a.swap(piv, k);
            d = -d;
        }
        d = d * a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] = a[i][j] - f * v;
            }
        }
    }
    d
}

/// Moore–Penrose inverse of a symmetric PSD 2×2 block.
fn pinv2<T: Real>(m: [[T; 2]; 2]) -> [[T; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let dt = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if tr <= T::zero() {
        return [[T::zero(); 2]; 2];
    }
    if dt > tr * tr * lit(1e-12) {
        return [[m[1][1] / dt, -m[0][1] / dt], [-m[1][0] / dt, m[0][0] / dt]];
    }
    // rank one: M = v vᵀ ⇒ M⁺ = M / tr²
    let s = tr * tr;
    [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]]
}

/// `I(x_A; x_B | z)` in bits, via the Schur complement of the z block.
pub fn conditional_mi<T: Real>(model: &GaussObsModel<T>) -> T {
    let c = &model.cov;
    let zz = pinv2([[c[4][4], c[4][5]], [c[5][4], c[5][5]]]);
    // Σ_XX − Σ_XZ Σ_ZZ⁺ Σ_ZX over X = rows 0..4
    let mut s = vec![vec![T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut corr = T::zero();
            for a in 0..2 {
                for b in 0..2 {
                    corr = corr + c[i][4 + a] * zz[a][b] * c[4 + b][j];
                }
            }
            s[i][j] = c[i][j] - corr;
        }
    }
    let da = det(vec![vec![s[0][0], s[0][1]], vec![s[1][0], s[1][1]]]);
    let db = det(vec![vec![s[2][2], s[2][3]], vec![s[3][2], s[3][3]]]);
    let scale_a = s[0][0] * s[1][1];
    let scale_b = s[2][2] * s[3][3];
    let tiny = lit::<T>(1e-12);
    let ref_scale = c[0][0].max(c[2][2]).max(T::min_positive_value());
    // no residual randomness on one side ⇒ nothing left to share
    if s[0][0] <= tiny * ref_scale || s[2][2] <= tiny * ref_scale || da <= tiny * scale_a || db <= tiny * scale_b {
        return T::zero();
    }
    let cross = (0..2).flat_map(|i| (2..4).map(move |j| (i, j))).map(|(i, j)| s[i][j].abs()).fold(T::zero(), T::max);
    if cross <= tiny * ref_scale {
        return T::zero();
    }
    let dj = det(s);
    if dj <= tiny * da * db {
        return T::infinity();
    }
    ((da * db / dj).log2() / lit(2.0)).max(T::zero())
}

/// Quadratic-form kernel of the cascaded gain for a fixed ensemble.
///
/// Every covariance entry of the multi-user model is a multiple of
/// `q(c) = Σᵢⱼ cᵢ cⱼ* K_ij`, with `K = R_a ⊙ R_e` (Alice-side covariance
/// times the unit-diagonal element correlation).
#[derive(Debug, Clone)]
pub struct RateModel<T> {
    stats: ChannelStats<T>,
    kernel: Vec<Complex<T>>,
    snr: T,
}

impl<T: Real> RateModel<T> {
    pub fn new(stats: &ChannelStats<T>, snr_db: T) -> Result<Self> {
        stats.validate()?;
        if !snr_db.is_finite() {
            return Err(invalid("SNR must be finite"));
        }
        let n = stats.n_elements;
        let mut kernel = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let re = stats.element_correlation(i, j);
                let ra = re * (stats.var_ar * (stats.element_power[i] * stats.element_power[j]).sqrt());
                kernel.push(ra * re);
            }
        }
        Ok(RateModel { stats: stats.clone(), kernel, snr: lit::<T>(10.0).powf(snr_db / lit(10.0)) })
    }

    pub fn stats(&self) -> &ChannelStats<T> {
        &self.stats
    }

    /// `q(c)`; real and nonnegative because the kernel is Hermitian PSD.
    pub fn quad(&self, c: &[Complex<T>]) -> T {
        let n = c.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            let mut row = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                row = row + self.kernel[i * n + j] * c[j].conj();
            }
            acc = acc + c[i] * row;
        }
        acc.re.max(T::zero())
    }

    /// Row-major Hermitian kernel `K`.
    pub(crate) fn kernel(&self) -> &[Complex<T>] {
        &self.kernel
    }

    /// Configuration-independent estimation noise of UT `m`.
    pub fn noise_var(&self, m: usize) -> T {
        let st = &self.stats;
        let ris: T = st.element_power.iter().map(|&p| p * st.var_ar * st.var_rb[m]).sum();
        (ris + st.var_direct) / self.snr
    }

    fn model_from_quad(&self, q: T, m: usize, cond: Option<usize>) -> GaussObsModel<T> {
        let st = &self.stats;
        let z = Complex::new(T::zero(), T::zero());
        let re = |x: T| Complex::new(x, T::zero());
        let v = st.var_rb[m] * q + st.var_direct;
        let nv = self.noise_var(m);
        let (cz, vz) = match cond {
            None => (z, z),
            Some(mc) => {
                let cross = st.rho_ut * (st.var_rb[m] * st.var_rb[mc]).sqrt() * q;
                (re(cross), re(st.var_rb[mc] * q + st.var_direct))
            }
        };
        GaussObsModel::from_complex(
            [[re(v + nv), re(v), cz], [re(v), re(v + nv), cz], [cz.conj(), cz.conj(), vz]],
            nv,
        )
    }

    pub fn observation_model(&self, c: &[Complex<T>], m: usize, cond: Option<usize>) -> GaussObsModel<T> {
        self.model_from_quad(self.quad(c), m, cond)
    }

    /// Σ_m min_{m′≠m} I(x_A^m; x_B^m | g_{m′}).
    pub fn sum_rate(&self, c: &[Complex<T>]) -> T {
        self.sum_rate_from_quad(self.quad(c))
    }

    /// Sum rate as a function of the quadratic form alone.
    pub fn sum_rate_from_quad(&self, q: T) -> T {
        let m_total = self.stats.n_uts;
        (0..m_total)
            .map(|m| {
                if m_total == 1 {
                    conditional_mi(&self.model_from_quad(q, m, None))
                } else {
                    (0..m_total)
                        .filter(|&mc| mc != m)
                        .map(|mc| conditional_mi(&self.model_from_quad(q, m, Some(mc))))
                        .fold(T::infinity(), T::min)
                }
            })
            .sum()
    }
}

/// Covariance model of (Alice's estimate of UT `ut_m`, UT `ut_m`'s estimate,
/// true gain of `ut_cond`).
pub fn observation_cov<T: Real>(
    stats: &ChannelStats<T>,
    cfg: &RisConfig<T>,
    snr_db: T,
    ut_m: usize,
    ut_cond: Option<usize>,
) -> Result<GaussObsModel<T>> {
    if cfg.len() != stats.n_elements {
        return Err(invalid("config length differs from the element count"));
    }
    if ut_m >= stats.n_uts || ut_cond.is_some_and(|u| u >= stats.n_uts) {
        return Err(invalid("UT index out of range"));
    }
    Ok(RateModel::new(stats, snr_db)?.observation_model(&reflection_coeffs(cfg), ut_m, ut_cond))
}

pub fn sum_secret_key_rate<T: Real>(stats: &ChannelStats<T>, cfg: &RisConfig<T>, snr_db: T) -> Result<T> {
    if cfg.len() != stats.n_elements {
        return Err(invalid("config length differs from the element count"));
    }
    Ok(RateModel::new(stats, snr_db)?.sum_rate(&reflection_coeffs(cfg)))
}

/// Smallest sample count accepted by the estimator.
pub const KSG_MIN_SAMPLES: usize = 50;

fn jittered(v: &[f64], rng: &mut ChaCha12Rng) -> Vec<f64> {
    use rand::Rng;
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    let amp = 1e-10 * if sd > 0.0 { sd } else { 1.0 };
    v.iter().map(|x| x + amp * (rng.random::<f64>() * 2.0 - 1.0)).collect()
}

fn count_within(sorted: &[f64], centre: f64, eps: f64) -> usize {
    let lo = sorted.partition_point(|&v| v <= centre - eps);
    let hi = sorted.partition_point(|&v| v < centre + eps);
    hi - lo
}

fn check_ksg(n: usize, m: usize, k: usize) -> Result<()> {
    if n != m {
        return Err(invalid("sample counts differ"));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if n < k + 1 {
        return Err(invalid(format!("{n} samples cannot support k = {k}")));
    }
    if n < KSG_MIN_SAMPLES {
        return Err(invalid(format!("KSG needs at least {KSG_MIN_SAMPLES} samples")));
    }
    Ok(())
}

fn ksg_finish(k: usize, n: usize, nx: &[usize], ny: &[usize]) -> f64 {
    let avg = nx.iter().zip(ny).map(|(&a, &b)| digamma(a as f64 + 1.0) + digamma(b as f64 + 1.0)).sum::<f64>() / n as f64;
    (digamma(k as f64) + digamma(n as f64) - avg) / std::f64::consts::LN_2
}

/// Kraskov–Stögbauer–Grassberger estimate (first algorithm, max-norm), in bits.
pub fn ksg_mi<T: Real>(samples_x: &[T], samples_y: &[T], k_neighbors: usize) -> Result<T> {
    let n = samples_x.len();
    check_ksg(n, samples_y.len(), k_neighbors)?;
    let k = k_neighbors;
    let mut rng = ChaCha12Rng::seed_from_u64(0x6b73_6700);
    let x = jittered(&samples_x.iter().map(|v| v.as_f64()).collect::<Vec<_>>(), &mut rng);
    let y = jittered(&samples_y.iter().map(|v| v.as_f64()).collect::<Vec<_>>(), &mut rng);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut ys = y.clone();
    ys.sort_by(f64::total_cmp);

    let mut nx = vec![0usize; n];
    let mut ny = vec![0usize; n];
    let mut heap: BinaryHeap<OrdF64> = BinaryHeap::with_capacity(k + 1);
    for (pos, &i) in order.iter().enumerate() {
        heap.clear();
        let (mut lo, mut hi) = (pos, pos + 1);
        // widen outward in x; stop once |dx| alone exceeds the current k-th distance
        loop {
            let left = (lo > 0).then(|| xs[pos] - xs[lo - 1]);
            let right = (hi < n).then(|| xs[hi] - xs[pos]);
            let take_left = match (left, right) {
                (None, None) => break,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (Some(l), Some(r)) => l <= r,
            };
            let (j, dx) = if take_left {
                lo -= 1;
                (order[lo], left.expect("checked"))
            } else {
                hi += 1;
                (order[hi - 1], right.expect("checked"))
            };
            if heap.len() == k && dx >= heap.peek().expect("full").0 {
                break;
            }
            let d = dx.max((y[j] - y[i]).abs());
            if heap.len() < k {
                heap.push(OrdF64(d));
            } else if d < heap.peek().expect("full").0 {
                heap.pop();
                heap.push(OrdF64(d));
            }
        }
        let eps = heap.peek().expect("k ≥ 1 neighbours").0;
        nx[i] = count_within(&xs, x[i], eps) - 1;
        ny[i] = count_within(&ys, y[i], eps) - 1;
    }
    Ok(lit(ksg_finish(k, n, &nx, &ny)))
}

/// KSG for vector-valued samples (e.g. real/imaginary pairs); brute force.
pub fn ksg_mi_multi<T: Real>(samples_x: &[Vec<T>], samples_y: &[Vec<T>], k_neighbors: usize) -> Result<T> {
    let n = samples_x.len();
    check_ksg(n, samples_y.len(), k_neighbors)?;
    let k = k_neighbors;
    let mut rng = ChaCha12Rng::seed_from_u64(0x6b73_6701);
    let column = |s: &[Vec<T>], d: usize| -> Vec<f64> { s.iter().map(|p| p[d].as_f64()).collect() };
    let dx = samples_x[0].len();
    let dy = samples_y[0].len();
    if samples_x.iter().any(|p| p.len() != dx) || samples_y.iter().any(|p| p.len() != dy) {
        return Err(invalid("ragged sample dimensions"));
    }
    let xc: Vec<Vec<f64>> = (0..dx).map(|d| jittered(&column(samples_x, d), &mut rng)).collect();
    let yc: Vec<Vec<f64>> = (0..dy).map(|d| jittered(&column(samples_y, d), &mut rng)).collect();
    let dist = |cols: &[Vec<f64>], i: usize, j: usize| cols.iter().map(|c| (c[i] - c[j]).abs()).fold(0.0, f64::max);

    let mut nx = vec![0usize; n];
    let mut ny = vec![0usize; n];
    let mut d_joint = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            d_joint[j] = if i == j { f64::INFINITY } else { dist(&xc, i, j).max(dist(&yc, i, j)) };
        }
        let mut sorted = d_joint.clone();
        sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
        let eps = sorted[k - 1];
        nx[i] = (0..n).filter(|&j| j != i && dist(&xc, i, j) < eps).count();
        ny[i] = (0..n).filter(|&j| j != i && dist(&yc, i, j) < eps).count();
    }
    Ok(lit(ksg_finish(k, n, &nx, &ny)))
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
