//! Experiment configs and the runner behind the `ris-pkg` binary.
//!
//! Config format: one `[scenario-name]` header, then `key = value` lines;
//! `#` starts a comment; lists are comma-separated.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{config, Error, Result};
use crate::experiments::{
    mi_estimate, multiuser_sumrate, randomness_audit, risj, risl, static_kgr_bdr, AuditParams, MiParams, RisjParams,
    RislParams, StaticParams, SumrateParams, Table,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    StaticKgrBdr,
    MultiuserSumrate,
    Risj,
    Risl,
    MiEstimate,
    RandomnessAudit,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::StaticKgrBdr,
        Scenario::MultiuserSumrate,
        Scenario::Risj,
        Scenario::Risl,
        Scenario::MiEstimate,
        Scenario::RandomnessAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::StaticKgrBdr => "static-kgr-bdr",
            Scenario::MultiuserSumrate => "multiuser-sumrate",
            Scenario::Risj => "risj",
            Scenario::Risl => "risl",
            Scenario::MiEstimate => "mi-estimate",
            Scenario::RandomnessAudit => "randomness-audit",
        }
    }

    pub fn from_name(s: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Static(StaticParams),
    Sumrate(SumrateParams),
    Risj(RisjParams),
    Risl(RislParams),
    Mi(MiParams),
    Audit(AuditParams),
}

impl Params {
    fn default_for(s: Scenario) -> Params {
        match s {
            Scenario::StaticKgrBdr => Params::Static(StaticParams::default()),
            Scenario::MultiuserSumrate => Params::Sumrate(SumrateParams::default()),
            Scenario::Risj => Params::Risj(RisjParams::default()),
            Scenario::Risl => Params::Risl(RislParams::default()),
            Scenario::MiEstimate => Params::Mi(MiParams::default()),
            Scenario::RandomnessAudit => Params::Audit(AuditParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub trials: usize,
    pub params: Params,
}

fn int(v: &str) -> std::result::Result<usize, &'static str> {
    v.parse().map_err(|_| "a nonnegative integer")
}

fn real(v: &str) -> std::result::Result<f64, &'static str> {
    // reject the words `nan`/`inf` except the explicit noiseless SNR spelling
    match v {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or("a real number"),
    }
}

fn list<X>(v: &str, one: fn(&str) -> std::result::Result<X, &'static str>) -> std::result::Result<Vec<X>, &'static str> {
    let items: Vec<X> = v.split(',').map(|s| one(s.trim())).collect::<std::result::Result<_, _>>().map_err(|_| "a comma-separated list")?;
    if items.is_empty() {
        return Err("a non-empty list");
    }
    Ok(items)
}

enum Set {
    Ok,
    Unknown,
    Type(&'static str),
}

macro_rules! set {
    ($target:expr, $parse:expr, $v:expr) => {
        match $parse($v) {
            Ok(x) => {
                $target = x;
                Set::Ok
            }
            Err(e) => Set::Type(e),
        }
    };
}

fn ints(v: &str) -> std::result::Result<Vec<usize>, &'static str> {
    list(v, int)
}

fn reals(v: &str) -> std::result::Result<Vec<f64>, &'static str> {
    list(v, real)
}

fn assign(params: &mut Params, key: &str, v: &str) -> Set {
    match params {
        Params::Static(p) => match key {
            "L" => set!(p.l_values, ints, v),
            "snr_db" => set!(p.snr_db, reals, v),
            "n_elements" => set!(p.n_elements, int, v),
            "gamma" => set!(p.gamma, real, v),
            "n_bits" => set!(p.n_bits, int, v),
            "t_probe_ms" => set!(p.t_probe_ms, real, v),
            "t_update_ms" => set!(p.t_update_ms, real, v),
            _ => Set::Unknown,
        },
        Params::Sumrate(p) => match key {
            "n_elements" => set!(p.n_elements, int, v),
            "n_uts" => set!(p.n_uts, int, v),
            "rho_ut" => set!(p.rho_ut, reals, v),
            "rho_elem" => set!(p.rho_elem, real, v),
            "elem_phase" => set!(p.elem_phase, real, v),
            "snr_db" => set!(p.snr_db, reals, v),
            "k_on" => set!(p.k_on, int, v),
            "restarts" => set!(p.opt.restarts, int, v),
            "max_sweeps" => set!(p.opt.max_sweeps, int, v),
            "tol" => set!(p.opt.tol, real, v),
            "grid" => set!(p.opt.grid, int, v),
            _ => Set::Unknown,
        },
        Params::Risj(p) => match key {
            "bandwidth_mhz" => set!(p.bandwidth_mhz, reals, v),
            "ris_delay_taps" => set!(p.ris_delay_taps, reals, v),
            "snr_db" => set!(p.snr_db, reals, v),
            "gamma" => set!(p.gamma, real, v),
            "n_elements" => set!(p.n_elements, int, v),
            "n_direct_taps" => set!(p.n_direct_taps, int, v),
            "profile_decay" => set!(p.profile_decay, real, v),
            "coherence" => set!(p.coherence, int, v),
            "blocks" => set!(p.blocks, int, v),
            "kappa" => set!(p.kappa, real, v),
            _ => Set::Unknown,
        },
        Params::Risl(p) => match key {
            "gamma" => set!(p.gamma, reals, v),
            "snr_db" => set!(p.snr_db, reals, v),
            "n_rounds" => set!(p.n_rounds, int, v),
            "L" => set!(p.block_len, int, v),
            "n_subcarriers" => set!(p.n_subcarriers, int, v),
            "n_direct_taps" => set!(p.n_direct_taps, int, v),
            "ris_delay_taps" => set!(p.ris_delay_taps, int, v),
            "n_elements" => set!(p.n_elements, int, v),
            _ => Set::Unknown,
        },
        Params::Mi(p) => match key {
            "snr_db" => set!(p.snr_db, reals, v),
            "n_samples" => set!(p.n_samples, int, v),
            "n_elements" => set!(p.n_elements, int, v),
            "gamma" => set!(p.gamma, real, v),
            "k" => set!(p.k_neighbors, int, v),
            _ => Set::Unknown,
        },
        Params::Audit(p) => match key {
            "n_bits" => set!(p.n_bits, int, v),
            "n_elements" => set!(p.n_elements, int, v),
            "gamma" => set!(p.gamma, real, v),
            "L" => set!(p.l, int, v),
            "snr_db" => set!(p.snr_db, real, v),
            "alpha" => set!(p.alpha, real, v),
            "session_bits" => set!(p.session_bits, int, v),
            _ => Set::Unknown,
        },
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut scenario: Option<(Scenario, Params)> = None;
    let mut seed = None;
    let mut trials = None;
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| config(format!("line {n}: malformed section header")))?.trim();
            if scenario.is_some() {
                return Err(config(format!("line {n}: only one scenario section is allowed")));
            }
            let s = Scenario::from_name(name).ok_or_else(|| config(format!("line {n}: unknown scenario `{name}`")))?;
            scenario = Some((s, Params::default_for(s)));
            continue;
        }
        let (_, params) = scenario.as_mut().ok_or_else(|| config(format!("line {n}: key before the scenario header")))?;
        let (key, value) = line.split_once('=').ok_or_else(|| config(format!("line {n}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(config(format!("line {n}: duplicate key `{key}`")));
        }
        let outcome = match key {
            "seed" => match value.parse::<u64>() {
                Ok(v) => {
                    seed = Some(v);
                    Set::Ok
                }
                Err(_) => Set::Type("a 64-bit unsigned integer"),
            },
            "trials" => match int(value) {
                Ok(v) => {
                    trials = Some(v);
                    Set::Ok
                }
                Err(e) => Set::Type(e),
            },
            _ => assign(params, key, value),
        };
        match outcome {
            Set::Ok => {}
            Set::Unknown => return Err(config(format!("line {n}: unknown key `{key}`"))),
            Set::Type(want) => return Err(config(format!("line {n}: key `{key}` expects {want}, got `{value}`"))),
        }
    }
    let (scenario, params) = scenario.ok_or_else(|| config("missing `[scenario]` header"))?;
    let seed = seed.ok_or_else(|| config("missing required key `seed`"))?;
    let trials = trials.ok_or_else(|| config("missing required key `trials`"))?;
    let cfg = ExperimentConfig { scenario, seed, trials, params };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Cheap parameter checks so bad configs fail before any simulation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(config(m.to_string()));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        match &self.params {
            Params::Static(p) => {
                if p.l_values.contains(&0) || p.n_elements == 0 || !unit(p.gamma) || p.n_bits < 2 * self.trials {
                    return bad("static-kgr-bdr: need L ≥ 1, n_elements ≥ 1, gamma in [0,1], n_bits ≥ 2·trials");
                }
                if !(p.t_probe_ms > 0.0 && p.t_update_ms >= 0.0) {
                    return bad("static-kgr-bdr: timing must be positive");
                }
            }
            Params::Sumrate(p) => {
                if p.n_elements == 0 || p.n_uts == 0 || p.k_on == 0 || p.k_on > p.n_elements {
                    return bad("multiuser-sumrate: need n_elements, n_uts ≥ 1 and 1 ≤ k_on ≤ n_elements");
                }
                if !p.rho_ut.iter().all(|&r| (0.0..1.0).contains(&r)) || !(0.0..1.0).contains(&p.rho_elem) {
                    return bad("multiuser-sumrate: correlations must lie in [0, 1)");
                }
                if p.opt.restarts == 0 || p.opt.max_sweeps == 0 || p.opt.grid == 0 || !(p.opt.tol > 0.0) {
                    return bad("multiuser-sumrate: optimizer options must be positive");
                }
            }
            Params::Risj(p) => {
                if p.bandwidth_mhz.len() != p.ris_delay_taps.len() {
                    return bad("risj: bandwidth_mhz and ris_delay_taps need the same length");
                }
                if !unit(p.gamma) || p.n_elements == 0 || p.n_direct_taps == 0 || p.coherence < 2 || p.blocks == 0 || !(p.kappa > 1.0) {
                    return bad("risj: need gamma in [0,1], positive sizes, coherence ≥ 2, kappa > 1");
                }
            }
            Params::Risl(p) => {
                if !p.gamma.iter().all(|&g| unit(g)) || p.n_rounds < 2 || p.block_len == 0 || p.n_elements == 0 || p.n_direct_taps == 0 {
                    return bad("risl: need gamma in [0,1], n_rounds ≥ 2 and positive sizes");
                }
                if p.ris_delay_taps < p.n_direct_taps || p.ris_delay_taps >= p.n_subcarriers {
                    return bad("risl: the RIS tap must follow the direct taps and fit the subcarrier count");
                }
            }
            Params::Mi(p) => {
                if p.n_samples < crate::keyrate::KSG_MIN_SAMPLES || p.k_neighbors == 0 || p.n_elements == 0 || !unit(p.gamma) {
                    return bad("mi-estimate: need n_samples ≥ 50, k ≥ 1, gamma in [0,1]");
                }
            }
            Params::Audit(p) => {
                if p.n_bits < 128 || p.l == 0 || p.n_elements == 0 || !unit(p.gamma) || !(p.alpha > 0.0 && p.alpha < 1.0) || p.session_bits < 2 {
                    return bad("randomness-audit: need n_bits ≥ 128, L ≥ 1, gamma in [0,1], alpha in (0,1)");
                }
            }
        }
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.scenario.name(), self.seed)
    }
}

/// Run the configured scenario and return its table.
pub fn run_table(cfg: &ExperimentConfig) -> Result<Table> {
    let (s, t) = (cfg.seed, cfg.trials);
    match &cfg.params {
        Params::Static(p) => static_kgr_bdr(s, t, p),
        Params::Sumrate(p) => multiuser_sumrate(s, t, p),
        Params::Risj(p) => risj(s, t, p),
        Params::Risl(p) => risl(s, t, p),
        Params::Mi(p) => mi_estimate(s, t, p),
        Params::Audit(p) => randomness_audit(s, t, p),
    }
}

/// Run and write `<scenario>_<seed>.csv` into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(PathBuf, Table)> {
    let table = run_table(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Invalid(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(cfg.file_name());
    fs::write(&path, table.to_csv()).map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok((path, table))
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Size the global thread pool from `RIS_PKG_THREADS` when set.
pub fn init_threads() -> Result<()> {
    match std::env::var("RIS_PKG_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| config(format!("RIS_PKG_THREADS=`{v}` is not a positive integer")))?;
            // a pool may already exist (e.g. in tests); that is not an error
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// The `run` subcommand: returns the process exit code.
pub fn run_command(config_path: &Path, seed: Option<u64>, out_dir: &Path) -> i32 {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config_path.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    match run_experiment(&cfg, out_dir) {
        Ok((path, table)) => {
            println!("{}: {} rows -> {}", cfg.scenario.name(), table.rows.len(), path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn example_config() {
        let c = parse_config("[static-kgr-bdr]\nseed = 7\ntrials = 100\nL = 4").unwrap();
        assert_eq!(c.scenario, Scenario::StaticKgrBdr);
        assert_eq!((c.seed, c.trials), (7, 100));
        match c.params {
            Params::Static(p) => assert_eq!(p.l_values, vec![4]),
            _ => panic!("wrong params"),
        }
    }

    #[test]
    fn duplicate_key_reports_second_line() {
        let e = parse_config("[risl]\nseed = 1\ntrials = 2\nseed = 3\n").unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
    }

    #[test]
    fn type_error_names_key() {
        let e = parse_config("[static-kgr-bdr]\nseed = 7\ntrials = 100\nL = banana").unwrap_err();
        let m = e.to_string();
        assert!(m.contains("`L`") && m.contains("line 4"), "{m}");
    }

    #[test]
    fn unknown_key_and_scenario() {
        assert!(parse_config("[risj]\nseed = 1\ntrials = 1\nwat = 3").unwrap_err().to_string().contains("unknown key"));
        assert!(parse_config("[nope]\nseed = 1\ntrials = 1").unwrap_err().to_string().contains("unknown scenario"));
        assert!(parse_config("[risj]\ntrials = 1").is_err());
    }

    #[test]
    fn comments_and_lists() {
        let c = parse_config("# header\n[multiuser-sumrate]  # fig\nseed = 3\ntrials = 5\nrho_ut = 0, 0.5 # two\n").unwrap();
        match c.params {
            Params::Sumrate(p) => assert_eq!(p.rho_ut, vec![0.0, 0.5]),
            _ => panic!(),
        }
    }
}
