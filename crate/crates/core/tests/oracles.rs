//! Statistical and closed-form oracles. Frozen constants were computed
//! independently of the library (noted inline).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use ris_pkg::adversary::{rss_bits, run_risl_toggle, RislSetup, RssBits};
use ris_pkg::channel::{cascaded_gain, draw_realization, eve_gain, ris_gain};
use ris_pkg::experiments::{mi_point, MiParams};
use ris_pkg::keygen::{cdf_quantize, BitString};
use ris_pkg::keyrate::{conditional_mi, ksg_mi, observation_cov, sum_secret_key_rate, GaussObsModel, RateModel};
use ris_pkg::optimize::{optimize_phases, OptOptions};
use ris_pkg::probing::{block_average, run_session, Party, RealizationPolicy};
use ris_pkg::randomness::{default_block_len, Nist};
use ris_pkg::ris::{random_config, reflection_coeffs, RisConfig, RisMode, RisSchedule, ScheduleKind};
use ris_pkg::{ChannelStats, Complex, Seed};

fn cn(rng: &mut ChaCha12Rng) -> Complex {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
    Complex::new(a * h, b * h)
}

fn correlated_pair(n: usize, rho: f64, rng: &mut ChaCha12Rng) -> (Vec<f64>, Vec<f64>) {
    (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            (a, rho * a + (1.0 - rho * rho).sqrt() * b)
        })
        .unzip()
}

#[test]
fn ksg_matches_gaussian_closed_form() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let (x, y) = correlated_pair(10_000, 0.0, &mut rng);
    assert!(ksg_mi(&x, &y, 4).unwrap().abs() <= 0.03);
    // −½·log₂(1 − 0.81)
    let (x, y) = correlated_pair(10_000, 0.9, &mut rng);
    let est = ksg_mi(&x, &y, 4).unwrap();
    assert!((est - 1.197_964_338_165_57).abs() <= 0.05, "{est}");
}

#[test]
fn ksg_error_shrinks_with_sample_count() {
    // −½·log₂(1 − 0.36)
    let truth = 0.321_928_094_887_362;
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let errs: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| {
            (0..20)
                .map(|_| {
                    let (x, y) = correlated_pair(n, 0.6, &mut rng);
                    (ksg_mi(&x, &y, 4).unwrap() - truth).abs()
                })
                .sum::<f64>()
                / 20.0
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn conditional_mi_worked_example() {
    let r = [[1.0, 0.9, 0.5], [0.9, 1.0, 0.5], [0.5, 0.5, 1.0]];
    let cplx = r.map(|row| row.map(|v| Complex::new(v, 0.0)));
    let lib = conditional_mi(&GaussObsModel::from_complex(cplx, 0.0));
    // conditional covariance [[0.75, 0.65], [0.65, 0.75]], complex pair: log₂(0.75² / (0.75² − 0.65²))
    assert!((lib - 2.006_426_269_159_433).abs() < 1e-9, "{lib}");

    // Monte-Carlo: colour 10⁶ circular samples, then evaluate the Schur
    // complement of the sample covariance directly
    let l = [[1.0, 0.0, 0.0], [0.9, (1.0f64 - 0.81).sqrt(), 0.0], [0.5, 0.0, 0.0]];
    let l20 = 0.5;
    let l21 = (0.5 - l20 * 0.9) / l[1][1];
    let l22 = (1.0f64 - l20 * l20 - l21 * l21).sqrt();
    let chol = [l[0], l[1], [l20, l21, l22]];
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let n = 1_000_000;
    let mut s = [[Complex::new(0.0, 0.0); 3]; 3];
    for _ in 0..n {
        let w = [cn(&mut rng), cn(&mut rng), cn(&mut rng)];
        let x: Vec<Complex> = chol.iter().map(|row| row.iter().zip(&w).map(|(c, z)| z * *c).sum()).collect();
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += x[i] * x[j].conj();
            }
        }
    }
    let s = s.map(|row| row.map(|v| v / n as f64));
    let cond = |i: usize, j: usize| s[i][j] - s[i][2] * s[2][j] / s[2][2].re;
    let (aa, bb, ab) = (cond(0, 0).re, cond(1, 1).re, cond(0, 1));
    let mc = (aa * bb / (aa * bb - ab.norm_sqr())).log2();
    assert!((mc - lib).abs() <= 0.02, "MC {mc} vs {lib}");
}

#[test]
fn on_off_variance_counts_active_elements() {
    let stats = ChannelStats::new(10, 1);
    for k in [0, 1, 4, 10] {
        let on: Vec<bool> = (0..10).map(|i| i < k).collect();
        let m = observation_cov(&stats, &RisConfig::on_off(&on), 10.0, 0, None).unwrap();
        // stacked real parts carry half of each complex variance
        assert!((2.0 * (m.cov[2][2] - m.noise_var / 2.0) - k as f64).abs() < 1e-9);
    }
}

#[test]
fn independent_users_make_conditioning_void() {
    let stats = ChannelStats::new(6, 2).with_correlation(0.6, 0.4, 0.0);
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let model = RateModel::new(&stats, 5.0).unwrap();
    for _ in 0..10 {
        let cfg = random_config(RisMode::ContinuousPhase, 6, &mut rng).unwrap();
        let c = reflection_coeffs(&cfg);
        for m in 0..2 {
            let plain = conditional_mi(&model.observation_model(&c, m, None));
            let cond = conditional_mi(&model.observation_model(&c, m, Some(1 - m)));
            assert!((plain - cond).abs() < 1e-9);
        }
    }
}

#[test]
fn uncorrelated_links_are_empirically_independent() {
    let stats = ChannelStats::new(2, 2);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let n = 100_000;
    let (mut ar, mut rb, mut ut) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
    for _ in 0..n {
        let r = draw_realization(&stats, &mut rng).unwrap();
        ar += r.h_ar[0] * r.h_ar[1].conj();
        rb += r.h_rb[0] * r.h_rb[1].conj();
        ut += r.h_rb[0] * r.h_rb[2].conj();
    }
    for acc in [ar, rb, ut] {
        assert!((acc / n as f64).norm() <= 0.02, "{acc}");
    }
}

#[test]
fn ris_energy_share_matches_gamma() {
    for g in [0.1, 0.5, 0.9] {
        let stats = ChannelStats::new(64, 1).with_gamma(g);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let (mut ris, mut total) = (0.0, 0.0);
        for _ in 0..40_000 {
            let r = draw_realization(&stats, &mut rng).unwrap();
            let cfg = random_config(RisMode::BinaryPhase, 64, &mut rng).unwrap();
            ris += ris_gain(&r, &reflection_coeffs(&cfg), 0).unwrap().norm_sqr();
            total += cascaded_gain(&r, &cfg, 0).unwrap().norm_sqr();
        }
        assert!((ris / total - g).abs() <= 0.01, "γ={g}: {}", ris / total);
    }
}

#[test]
fn eve_is_independent_of_bob() {
    let stats = ChannelStats::new(64, 1).with_gamma(0.5);
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let (mut cross, mut pb, mut pe) = (Complex::new(0.0, 0.0), 0.0, 0.0);
    for _ in 0..10_000 {
        let r = draw_realization(&stats, &mut rng).unwrap();
        let cfg = random_config(RisMode::ContinuousPhase, 64, &mut rng).unwrap();
        let (b, e) = (cascaded_gain(&r, &cfg, 0).unwrap(), eve_gain(&r, &cfg).unwrap());
        cross += b * e.conj();
        pb += b.norm_sqr();
        pe += e.norm_sqr();
    }
    assert!(cross.norm() / (pb * pe).sqrt() <= 0.03);
}

#[test]
fn only_noise_varies_in_a_held_static_channel() {
    let stats = ChannelStats::new(16, 1).with_gamma(0.5);
    let schedule = RisSchedule::new(ScheduleKind::Hold, 1, RisMode::BinaryPhase, 16).unwrap();
    let s = run_session(&stats, &schedule, 10.0, 10_000, RealizationPolicy::Static, &mut ChaCha12Rng::seed_from_u64(8)).unwrap();
    let xs = s.series(Party::Bob, 0);
    let mean: Complex = xs.iter().sum::<Complex>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (xs.len() - 1) as f64;
    assert!((var / s.noise_var - 1.0).abs() <= 0.05, "{var} vs {}", s.noise_var);
}

#[test]
fn measured_snr_matches_request() {
    let stats = ChannelStats::new(16, 1).with_gamma(0.5);
    let schedule = RisSchedule::new(ScheduleKind::RandomPerBlock, 4, RisMode::BinaryPhase, 16).unwrap();
    for snr in [0.0, 10.0, 20.0] {
        let run = |db: f64| {
            run_session(&stats, &schedule, db, 100_000, RealizationPolicy::PerBlock(64), &mut ChaCha12Rng::seed_from_u64(9))
                .unwrap()
        };
        // identical seeds give identical clean signals; the difference is the noise
        let (clean, noisy) = (run(f64::INFINITY), run(snr));
        let (mut sig, mut noise) = (0.0, 0.0);
        for (c, n) in clean.records.iter().zip(&noisy.records) {
            sig += c.obs_bob[0].norm_sqr();
            noise += (n.obs_bob[0] - c.obs_bob[0]).norm_sqr();
        }
        let measured = 10.0 * (sig / noise).log10();
        assert!((measured - snr).abs() <= 0.2, "{snr} dB requested, {measured} measured");
    }
}

#[test]
fn surface_changes_dominate_within_block_noise() {
    let stats = ChannelStats::new(64, 1).with_gamma(0.5);
    let l = 8;
    let schedule = RisSchedule::new(ScheduleKind::RandomPerBlock, l, RisMode::BinaryPhase, 64).unwrap();
    let s = run_session(&stats, &schedule, 20.0, 512 * l, RealizationPolicy::Static, &mut ChaCha12Rng::seed_from_u64(10)).unwrap();
    let xs = s.series(Party::Alice, 0);
    let means = block_average::<f64, Complex>(&xs, l);
    let grand: Complex = means.iter().sum::<Complex>() / means.len() as f64;
    let between = means.iter().map(|m| (m - grand).norm_sqr()).sum::<f64>() / (means.len() - 1) as f64;
    let within = xs
        .chunks(l)
        .zip(&means)
        .map(|(block, m)| block.iter().map(|x| (x - m).norm_sqr()).sum::<f64>())
        .sum::<f64>()
        / (xs.len() - means.len()) as f64;
    assert!(between > within, "between {between}, within {within}");
}

#[test]
fn alternating_surface_gives_alternating_rss_bits() {
    let stats = ris_pkg::experiments::RislParams::default().stats(0.5);
    let setup = RislSetup::default();
    let (s, _) = run_risl_toggle(&stats, 20.0, 256, &setup, &mut ChaCha12Rng::seed_from_u64(11)).unwrap();
    let bits = rss_bits(&s, Party::Alice, RssBits::PerBlock).unwrap();
    let flips = bits.bits.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(flips as f64 / (bits.len() - 1) as f64 >= 0.95, "{flips} of {}", bits.len() - 1);
}

#[test]
fn legitimate_information_dwarfs_eve() {
    let p = MiParams { n_samples: 4000, ..MiParams::default() };
    let (ab, ae) = mi_point(&p, 20.0, 1, Seed(12)).unwrap();
    assert!(ab > 10.0 * ae.max(0.0) && ab > 0.3, "{ab} vs {ae}");
}

#[test]
fn fair_coins_pass_the_battery() {
    let nist = Nist::default();
    let mut passes = [0usize; 5];
    for i in 0..100u64 {
        let mut rng = Seed(i).rng(ris_pkg::seed::Purpose::Config);
        let bits = BitString::new((0..100_000).map(|_| rng.random::<bool>()).collect());
        for (slot, r) in passes.iter_mut().zip(nist.all(&bits, default_block_len(bits.len())).unwrap()) {
            *slot += usize::from(r.passed);
        }
    }
    assert!(passes.iter().all(|&p| p >= 96), "{passes:?}");
}

#[test]
fn single_precision_tracks_double() {
    let s64 = ChannelStats::new(8, 2).with_correlation(0.7, 0.4, 0.5);
    let s32 = ris_pkg::channel::ChannelStats::<f32>::new(8, 2).with_correlation(0.7, 0.4, 0.5);
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    for _ in 0..5 {
        let cfg = random_config::<f64, _>(RisMode::ContinuousPhase, 8, &mut rng).unwrap();
        let cfg32 = RisConfig::<f32>::continuous(&cfg.phases.iter().map(|&p| p as f32).collect::<Vec<_>>());
        let a = sum_secret_key_rate(&s64, &cfg, 10.0).unwrap();
        let b = sum_secret_key_rate(&s32, &cfg32, 10.0f32).unwrap();
        assert!((a - b as f64).abs() <= 1e-3 * a.max(1.0), "{a} vs {b}");
    }
    let opts = OptOptions::<f32> { restarts: 2, tol: 1e-4, ..OptOptions::default() };
    let (_, r32) = optimize_phases(&s32, 10.0f32, &opts).unwrap();
    let (_, r64) = optimize_phases(&s64, 10.0, &OptOptions { restarts: 2, ..OptOptions::default() }).unwrap();
    assert!((r32 as f64 - r64).abs() <= 1e-2 * r64, "{r32} vs {r64}");

    let schedule = RisSchedule::new(ScheduleKind::RandomPerBlock, 2, RisMode::BinaryPhase, 8).unwrap();
    let st = ris_pkg::channel::ChannelStats::<f32>::new(8, 1).with_gamma(0.5);
    let s = run_session(&st, &schedule, f32::INFINITY, 64, RealizationPolicy::Static, &mut ChaCha12Rng::seed_from_u64(14)).unwrap();
    assert_eq!(s.series(Party::Alice, 0), s.series(Party::Bob, 0));
    assert_eq!(cdf_quantize(&s.amplitudes(Party::Alice, 0)).unwrap().len(), 64);
}
