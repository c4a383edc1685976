//! Surface configuration for the multi-user sum secret key rate.

use num_complex::Complex;
use rayon::prelude::*;

use crate::channel::ChannelStats;
use crate::error::{invalid, Error, Result};
use crate::keyrate::RateModel;
use crate::ris::{random_config, reflection_coeffs, RisConfig, RisMode};
use crate::scalar::{lit, Real};
use crate::seed::{Purpose, Seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptOptions<T> {
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Stop a restart once a full sweep gains less than this (bits).
    pub tol: T,
    /// Grid points per coordinate line search.
    pub grid: usize,
    pub seed: u64,
}

impl<T: Real> Default for OptOptions<T> {
    fn default() -> Self {
        OptOptions { restarts: 8, max_sweeps: 200, tol: lit(1e-6), grid: 64, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    ZeroPhase,
    BinaryRandom,
    ContinuousRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace<T> {
    pub start: StartKind,
    /// Objective after each completed sweep (index 0 is the starting point).
    pub sweep_rates: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptOutcome<T> {
    pub config: RisConfig<T>,
    pub rate: T,
    pub traces: Vec<RestartTrace<T>>,
}

/// On-off configuration enabling the `k_on` elements of largest cascaded
/// variance (summed over UTs); ties go to the lower index.
pub fn onoff_select<T: Real>(stats: &ChannelStats<T>, k_on: usize) -> Result<RisConfig<T>> {
    stats.validate()?;
    let n = stats.n_elements;
    if k_on == 0 || k_on > n {
        return Err(invalid(format!("k_on = {k_on} outside 1..={n}")));
    }
    let var = stats.cascaded_element_variance();
    let mut idx: Vec<usize> = (0..n).collect();
    // stable sort keeps index order among equal variances
    idx.sort_by(|&a, &b| var[b].partial_cmp(&var[a]).expect("finite variances"));
    let mut on = vec![false; n];
    for &i in &idx[..k_on] {
        on[i] = true;
    }
    Ok(RisConfig::on_off(&on))
}

/// Objective restricted to one coordinate: `q(θₙ) = base + 2·Re(e^{iθₙ}·sₙ)`.
struct Coordinate<T> {
    base: T,
    s: Complex<T>,
}

impl<T: Real> Coordinate<T> {
    fn quad(&self, theta: T) -> T {
        let c = Complex::from_polar(T::one(), theta);
        (self.base + lit::<T>(2.0) * (c * self.s).re).max(T::zero())
    }
}

struct Ascent<'a, T> {
    model: &'a RateModel<T>,
    kernel: Vec<Complex<T>>,
    n: usize,
    grid: usize,
}

impl<'a, T: Real> Ascent<'a, T> {
    fn new(model: &'a RateModel<T>, grid: usize) -> Self {
        let n = model.stats().n_elements;
        Ascent { model, kernel: model.kernel().to_vec(), n, grid }
    }

    fn rate_of_quad(&self, q: T) -> T {
        self.model.sum_rate_from_quad(q)
    }

    /// Split `q = base + 2·Re(cₖ·sₖ)` given the current total `q`.
    fn coordinate(&self, c: &[Complex<T>], q: T, k: usize) -> Coordinate<T> {
        let n = self.n;
        let s: Complex<T> = (0..n).filter(|&j| j != k).map(|j| self.kernel[k * n + j] * c[j].conj()).sum();
        Coordinate { base: q - lit::<T>(2.0) * (c[k] * s).re, s }
    }

    /// Best θ for one coordinate, never worse than `current`.
    fn line_search(&self, coord: &Coordinate<T>, current: T) -> (T, T) {
        let f = |t: T| self.rate_of_quad(coord.quad(t));
        let two_pi = T::PI() + T::PI();
        let step = two_pi / lit(self.grid as f64);
        let mut best = (current, f(current));
        let mut best_grid = 0;
        let mut grid_val = T::neg_infinity();
        for g in 0..self.grid {
            let t = -T::PI() + step * lit(g as f64);
            let v = f(t);
            if v > grid_val {
                grid_val = v;
                best_grid = g;
            }
        }
        let centre = -T::PI() + step * lit(best_grid as f64);
        if grid_val > best.1 {
            best = (centre, grid_val);
        }
        // golden-section refinement over the two neighbouring cells
        let (mut a, mut b) = (centre - step, centre + step);
        let r = lit::<T>(0.618_033_988_749_894_8);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..40 {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = f(x2);
            }
            if (b - a).abs() < lit(1e-9) {
                break;
            }
        }
        let (xg, fg) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if fg > best.1 {
            best = (xg, fg);
        }
        best
    }

    fn run(&self, start: &[T], opts: &OptOptions<T>) -> Result<(Vec<T>, T, Vec<T>)> {
        let mut theta = start.to_vec();
        let mut c: Vec<Complex<T>> = theta.iter().map(|&t| Complex::from_polar(T::one(), t)).collect();
        let mut q = self.model.quad(&c);
        let mut rate = self.rate_of_quad(q);
        if !rate.is_finite() {
            return Err(Error::NonFinite);
        }
        let mut trace = vec![rate];
        for _ in 0..opts.max_sweeps {
            let before = rate;
            for k in 0..self.n {
                let coord = self.coordinate(&c, q, k);
                let (t, v) = self.line_search(&coord, theta[k]);
                if !v.is_finite() {
                    return Err(Error::NonFinite);
                }
                if v >= rate {
                    theta[k] = t;
                    c[k] = Complex::from_polar(T::one(), t);
                    rate = v;
                    q = coord.quad(t);
                }
            }
            // refresh to stop rounding drift in the running form
            q = self.model.quad(&c);
            trace.push(rate);
            if rate - before < opts.tol {
                break;
            }
        }
        Ok((theta, rate, trace))
    }
}

/// Multi-start cyclic coordinate ascent over continuous phases.
pub fn optimize_phases_traced<T: Real>(stats: &ChannelStats<T>, snr_db: T, opts: &OptOptions<T>) -> Result<OptOutcome<T>> {
    if opts.restarts == 0 || opts.max_sweeps == 0 || opts.grid == 0 || !(opts.tol > T::zero()) {
        return Err(invalid("optimizer options must all be positive"));
    }
    let model = RateModel::new(stats, snr_db)?;
    let ascent = Ascent::new(&model, opts.grid);
    let n = stats.n_elements;
    let seed = Seed(opts.seed);

    let starts: Vec<(StartKind, Vec<T>)> = (0..opts.restarts)
        .map(|r| {
            let mut rng = seed.child(r as u64).rng(Purpose::Config);
            match r {
                0 => (StartKind::ZeroPhase, vec![T::zero(); n]),
                1 => {
                    let cfg: RisConfig<T> = random_config(RisMode::BinaryPhase, n, &mut rng).expect("n ≥ 1");
                    (StartKind::BinaryRandom, cfg.phases)
                }
                _ => {
                    let cfg: RisConfig<T> = random_config(RisMode::ContinuousPhase, n, &mut rng).expect("n ≥ 1");
                    (StartKind::ContinuousRandom, cfg.phases)
                }
            }
        })
        .collect();

    let runs: Vec<Result<(Vec<T>, T, Vec<T>)>> = starts.par_iter().map(|(_, s)| ascent.run(s, opts)).collect();

    let mut best: Option<(usize, Vec<T>, T)> = None;
    let mut traces = Vec::with_capacity(runs.len());
    for (i, run) in runs.into_iter().enumerate() {
        let (theta, rate, trace) = run?;
        traces.push(RestartTrace { start: starts[i].0, sweep_rates: trace });
        // strict comparison: ties keep the lowest restart index
        if best.as_ref().is_none_or(|b| rate > b.2) {
            best = Some((i, theta, rate));
        }
    }
    let (_, theta, _) = best.expect("at least one restart");
    let config = RisConfig::continuous(&theta);
    // re-evaluate on the wrapped phases so the reported rate is exactly the config's
    let rate = model.sum_rate(&reflection_coeffs(&config));
    Ok(OptOutcome { config, rate, traces })
}

pub fn optimize_phases<T: Real>(stats: &ChannelStats<T>, snr_db: T, opts: &OptOptions<T>) -> Result<(RisConfig<T>, T)> {
    let o = optimize_phases_traced(stats, snr_db, opts)?;
    Ok((o.config, o.rate))
}
