//! Quick example-based checks of every module, run by `ris-pkg selftest`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{cascaded_gain, ChannelRealization, ChannelStats};
use crate::cli::parse_config;
use crate::keygen::{bdr, cdf_quantize, kgr, reconcile, BitString, ReconcileParams};
use crate::keyrate::{gaussian_mi, sum_secret_key_rate};
use crate::optimize::onoff_select;
use crate::probing::{run_session, Party, RealizationPolicy};
use crate::randomness::{Nist, DEFAULT_ALPHA};
use crate::ris::{reflection_coeffs, RisConfig, RisMode, RisSchedule, ScheduleKind};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn cascaded_example() -> bool {
    let c = |x: f64| Complex::new(x, 0.0);
    let real = ChannelRealization {
        n_elements: 2,
        n_uts: 1,
        h_ar: vec![c(1.0), c(1.0)],
        h_rb: vec![c(1.0), c(1.0)],
        h_direct: vec![vec![c(0.0)]],
        h_eve_direct: vec![c(0.0)],
        h_eve_ris: vec![c(0.0); 2],
    };
    let g = cascaded_gain(&real, &RisConfig::continuous(&[0.0, 0.0]), 0).map(|g| g.re);
    let h = cascaded_gain(&real, &RisConfig::continuous(&[0.0, std::f64::consts::PI]), 0).map(|g| g.norm());
    g.is_ok_and(|g| close(g, 2.0, 1e-12)) && h.is_ok_and(|h| h < 1e-12)
}

fn binary_coefficients() -> bool {
    let r = reflection_coeffs(&RisConfig::<f64>::binary(&[false, true]));
    r == vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]
}

fn noiseless_reciprocity() -> bool {
    let st = ChannelStats::<f64>::new(16, 1).with_gamma(0.5);
    let Ok(sched) = RisSchedule::new(ScheduleKind::RandomPerBlock, 2, RisMode::BinaryPhase, 16) else { return false };
    run_session(&st, &sched, f64::INFINITY, 32, RealizationPolicy::Static, &mut ChaCha12Rng::seed_from_u64(1))
        .is_ok_and(|s| s.series(Party::Alice, 0) == s.series(Party::Bob, 0))
}

fn quantizer_and_bdr() -> bool {
    let q = cdf_quantize(&[0.1, 0.9, 0.5, 0.7]).map(|b| b.bits);
    let d = bdr(&BitString::new(vec![true, true, false, false]), &BitString::new(vec![true, false, false, true]));
    q == Ok(vec![false, true, false, true]) && d == Ok(0.5)
}

fn kgr_table() -> bool {
    [(1, 250.0), (2, 166.67), (3, 125.0), (4, 100.0)]
        .iter()
        .all(|&(l, want)| kgr(l, 2e-3, 2e-3).is_ok_and(|r: f64| close((r * 100.0).round() / 100.0, want, 1e-9)))
}

fn reconcile_single_error() -> bool {
    let Ok(p) = ReconcileParams::hamming(3, 8) else { return false };
    let a = BitString::new((0..70).map(|i| i % 3 == 0).collect());
    let mut b = a.clone();
    b.bits[5] = !b.bits[5];
    reconcile(&a, &b, &p).is_ok_and(|r| r.key == r.key_bob && r.failed_blocks == 0)
}

fn mi_example() -> bool {
    close(gaussian_mi(1.0, 1.0, 0.5), 0.207_518_749, 1e-6)
}

fn blocked_rate_is_zero() -> bool {
    let st = ChannelStats::<f64>::new(8, 2);
    sum_secret_key_rate(&st, &RisConfig::all_off(8), 10.0) == Ok(0.0)
}

fn onoff_example() -> bool {
    let mut st = ChannelStats::<f64>::new(3, 1);
    st.element_power = vec![3.0, 1.0, 2.0];
    onoff_select(&st, 2).is_ok_and(|c| c.amplitudes == vec![1.0, 0.0, 1.0])
}

fn nist_vectors() -> bool {
    let nist = Nist { alpha: DEFAULT_ALPHA, enforce_minimum: false };
    let b = |s: &str| BitString::parse(s).expect("literal bits");
    nist.monobit(&b("1011010101")).is_ok_and(|r| close(r.p_value, 0.527089, 1e-5))
        && nist.runs(&b("1001101011")).is_ok_and(|r| close(r.p_value, 0.147232, 1e-5))
}

fn config_example() -> bool {
    parse_config("[static-kgr-bdr]\nseed = 7\ntrials = 100\nL = 4").is_ok()
        && parse_config("[static-kgr-bdr]\nseed = 7\ntrials = 100\nL = banana").is_err()
}

pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> bool); 12] = [
        ("channel: cascaded gain", cascaded_example),
        ("ris: binary coefficients", binary_coefficients),
        ("probing: noiseless reciprocity", noiseless_reciprocity),
        ("keygen: quantizer and BDR", quantizer_and_bdr),
        ("keygen: KGR table", kgr_table),
        ("keygen: reconciliation", reconcile_single_error),
        ("keyrate: Gaussian MI", mi_example),
        ("keyrate: blocked link", blocked_rate_is_zero),
        ("optimize: on-off selection", onoff_example),
        ("randomness: worked vectors", nist_vectors),
        ("cli: config parsing", config_example),
        ("channel: off surface", || {
            let st = ChannelStats::<f64>::new(4, 1);
            let mut rng = ChaCha12Rng::seed_from_u64(2);
            crate::channel::draw_realization(&st, &mut rng)
                .and_then(|r| cascaded_gain(&r, &RisConfig::all_off(4), 0))
                .is_ok_and(|g| g.norm() == 0.0)
        }),
    ];
    checks.iter().map(|&(name, f)| Check { name, passed: f() }).collect()
}
