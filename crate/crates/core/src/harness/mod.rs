//! Monte-Carlo experiment runner.
//!
//! Every random quantity of trial `t` comes from `stream(seed, t, purpose)`,
//! so all methods and sweep points see the same profile and channel draws.
//! Trials run in parallel and are reduced in trial order, which keeps the
//! output byte-identical for any thread count.

mod config;
mod csv;
mod preset;

pub use config::{parse_config, parse_config_file};
pub use csv::{csv_string, emit_csv, format_sig, parse_csv, CSV_HEADER};
pub use preset::{preset, PRESET_NAMES};

use rayon::prelude::*;

use crate::channel::{
    make_hex_geometry, make_identity_receive_profile, make_mu_mimo_profile, make_random_fully_separable,
    ChannelSampler, CorrelationProfile, NetworkConfig,
};
use crate::combiner::{design_combiners, CombinerMethod};
use crate::error::{Error, Result};
use crate::estimator::{GramPolicy, NetworkEstimator};
use crate::matlin::CMatrix;
use crate::pilots::{design_pilots, PilotMethod};
use crate::random::stream;

/// Where the correlation matrices come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `Q_i = X X*`, diagonal `P_j ~ U[0,1]`; redrawn every trial.
    RandomFullySeparable,
    /// `Q_i = I`, diagonal `P_j ~ U[0,1]`; redrawn every trial.
    IdentityReceive,
    /// Hexagonal MU-MIMO network drawn once from the seed.
    HexMuMimo { gamma: f64, sigma_db: f64, radius: f64 },
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::RandomFullySeparable => "random-fs",
            ProfileKind::IdentityReceive => "identity-rx",
            ProfileKind::HexMuMimo { .. } => "hex-mu-mimo",
        }
    }

    pub fn redrawn_per_trial(&self) -> bool {
        !matches!(self, ProfileKind::HexMuMimo { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Tau,
    Nrf,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Tau => "tau",
            SweepVar::Nrf => "nrf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Base configuration; the swept field is overwritten per point.
    pub cfg: NetworkConfig,
    pub profile_kind: ProfileKind,
    pub combiner_methods: Vec<CombinerMethod>,
    pub pilot_methods: Vec<PilotMethod>,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if self.combiner_methods.is_empty() || self.pilot_methods.is_empty() {
            return Err(Error::InvalidConfig("need at least one combiner and one pilot method".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::InvalidConfig("sweep has no values".into()));
        }
        for &v in &self.sweep.values {
            self.point_config(v)?;
        }
        if matches!(self.profile_kind, ProfileKind::HexMuMimo { .. }) && self.pilot_methods.contains(&PilotMethod::Eigen) {
            return Err(Error::InvalidConfig("eigen-pilots need a fully-separable profile".into()));
        }
        Ok(())
    }

    /// Configuration at one sweep point.
    pub fn point_config(&self, value: usize) -> Result<NetworkConfig> {
        match self.sweep.var {
            SweepVar::Tau => self.cfg.with_pilot_len(value),
            SweepVar::Nrf => self.cfg.with_rf_chains(value),
        }
    }
}

/// Aggregate over the trials of one (sweep point, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    /// `pilot/combiner`, e.g. `eigen/fd`.
    pub method: String,
    pub tau: usize,
    pub nrf: usize,
    pub trials: usize,
    pub seed: u64,
    /// Mean of `(1/M) Σ_i ‖h_ii − ĥ_ii‖² / ‖h_ii‖²`.
    pub mean_nmse: f64,
    /// Sample standard deviation of the per-trial NMSE.
    pub std_nmse: f64,
    /// Mean of `(1/M) Σ_i ε_i / tr(P_ii ⊗ Q_i)`.
    pub mean_analytic_mse: f64,
    pub failed_trials: usize,
}

impl ResultRow {
    /// Standard error of `mean_nmse`.
    pub fn std_error(&self) -> f64 {
        let ok = self.trials - self.failed_trials;
        if ok == 0 {
            f64::NAN
        } else {
            self.std_nmse / (ok as f64).sqrt()
        }
    }
}

pub fn method_label(pilot: PilotMethod, combiner: CombinerMethod) -> String {
    format!("{}/{}", pilot.name(), combiner.name())
}

/// Worker count: `PILOTFORGE_THREADS` if set, else rayon's default.
pub fn thread_count() -> Result<usize> {
    match std::env::var("PILOTFORGE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidConfig(format!("PILOTFORGE_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn draw_profile(kind: ProfileKind, cfg: &NetworkConfig, seed: u64, trial: u64) -> Result<CorrelationProfile> {
    let mut rng = stream(seed, trial, "profile");
    match kind {
        ProfileKind::RandomFullySeparable => Ok(make_random_fully_separable(cfg, &mut rng)),
        ProfileKind::IdentityReceive => Ok(make_identity_receive_profile(cfg, &mut rng)),
        ProfileKind::HexMuMimo { gamma, sigma_db, radius } => {
            let geom = make_hex_geometry(cfg, radius, &mut stream(seed, 0, "geometry"));
            make_mu_mimo_profile(&geom, cfg.antennas, gamma, sigma_db, &mut stream(seed, 0, "shadowing"))
        }
    }
}

/// `(nmse, normalized analytic MSE)` of each method pair, `None` on failure.
type TrialOutcome = Vec<Option<(f64, f64)>>;

struct Point<'a> {
    scenario: &'a Scenario,
    cfg: NetworkConfig,
    combos: Vec<(CombinerMethod, PilotMethod)>,
    fixed: Option<&'a (CorrelationProfile, ChannelSampler)>,
}

impl Point<'_> {
    fn rf_chains(&self, c: CombinerMethod) -> usize {
        if c == CombinerMethod::FullReceiver {
            self.cfg.antennas
        } else {
            self.cfg.rf_chains
        }
    }

    fn trial(&self, t: u64) -> TrialOutcome {
        let s = self.scenario;
        let owned;
        let (profile, sampler) = match self.fixed {
            Some((p, smp)) => (p, smp),
            None => {
                let drawn = draw_profile(s.profile_kind, &self.cfg, s.seed, t)
                    .and_then(|p| ChannelSampler::new(&p).map(|smp| (p, smp)));
                match drawn {
                    Ok(v) => {
                        owned = v;
                        (&owned.0, &owned.1)
                    }
                    Err(_) => return vec![None; self.combos.len()],
                }
            }
        };
        let channel = sampler.sample(&mut stream(s.seed, t, "channel"));
        let receive: Vec<CMatrix> = (0..profile.cells()).map(|i| profile.receive(i)).collect();
        let mut combiner_cache: Vec<(CombinerMethod, Result<crate::estimator::CombinerSet>)> = Vec::new();
        self.combos
            .iter()
            .map(|&(c, p)| {
                if !combiner_cache.iter().any(|(m, _)| *m == c) {
                    let w = design_combiners(&receive, self.rf_chains(c), c, &mut stream(s.seed, t, "combiner"));
                    combiner_cache.push((c, w));
                }
                let w = combiner_cache.iter().find(|(m, _)| *m == c).and_then(|(_, w)| w.as_ref().ok())?;
                let cfg = NetworkConfig { rf_chains: self.rf_chains(c), ..self.cfg };
                let pilots = design_pilots(p, profile, w, &cfg, &mut stream(s.seed, t, "pilots")).ok()?;
                let est = NetworkEstimator::build(&pilots, w, profile, GramPolicy::RidgeFallback).ok()?;
                let report = est.run(&channel).ok()?;
                let m = profile.cells();
                let analytic = (0..m)
                    .map(|i| {
                        let c = est.cell(i);
                        if c.trace_a > 0.0 {
                            c.analytic_mse / c.trace_a
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
                    / m as f64;
                report.nmse_empirical.is_finite().then_some((report.nmse_empirical, analytic))
            })
            .collect()
    }
}

fn aggregate(outcomes: &[TrialOutcome], idx: usize) -> (f64, f64, f64, usize) {
    let ok: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o[idx]).collect();
    let failed = outcomes.len() - ok.len();
    let n = ok.len() as f64;
    if ok.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, failed);
    }
    let mean = ok.iter().map(|x| x.0).sum::<f64>() / n;
    let var = if ok.len() > 1 { ok.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let analytic = ok.iter().map(|x| x.1).sum::<f64>() / n;
    (mean, var.sqrt(), analytic, failed)
}

/// Runs every sweep point and method pair. Rows come out ordered by sweep
/// value, then combiner, then pilot method.
pub fn run_scenario(s: &Scenario) -> Result<Vec<ResultRow>> {
    s.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let fixed = if s.profile_kind.redrawn_per_trial() {
        None
    } else {
        let p = draw_profile(s.profile_kind, &s.cfg, s.seed, 0)?;
        let smp = ChannelSampler::new(&p)?;
        Some((p, smp))
    };
    let mut rows = Vec::new();
    for &value in &s.sweep.values {
        let cfg = s.point_config(value)?;
        let mut combos = Vec::new();
        for &c in &s.combiner_methods {
            // A full receiver has no RF dimension to sweep; it is evaluated
            // once, at N_RF = N_BS.
            if c == CombinerMethod::FullReceiver && s.sweep.var == SweepVar::Nrf && value != cfg.antennas {
                continue;
            }
            for &p in &s.pilot_methods {
                combos.push((c, p));
            }
        }
        if combos.is_empty() {
            continue;
        }
        let point = Point { scenario: s, cfg, combos, fixed: fixed.as_ref() };
        let outcomes: Vec<TrialOutcome> =
            pool.install(|| (0..s.trials as u64).into_par_iter().map(|t| point.trial(t)).collect());
        for (idx, &(c, p)) in point.combos.iter().enumerate() {
            let (mean, std, analytic, failed) = aggregate(&outcomes, idx);
            rows.push(ResultRow {
                scenario: s.name.clone(),
                method: method_label(p, c),
                tau: cfg.pilot_len,
                nrf: point.rf_chains(c),
                trials: s.trials,
                seed: s.seed,
                mean_nmse: mean,
                std_nmse: std,
                mean_analytic_mse: analytic,
                failed_trials: failed,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(trials: usize) -> Scenario {
        Scenario {
            name: "tiny".into(),
            cfg: NetworkConfig::new(2, 2, 4, 1, 2, 1.0).unwrap(),
            profile_kind: ProfileKind::RandomFullySeparable,
            combiner_methods: vec![CombinerMethod::FullyDigital],
            pilot_methods: vec![PilotMethod::Eigen, PilotMethod::Random],
            sweep: Sweep { var: SweepVar::Tau, values: vec![2, 3] },
            trials,
            seed: 5,
        }
    }

    #[test]
    fn rows_are_deterministic_and_ordered() {
        let a = run_scenario(&tiny(1)).unwrap();
        let b = run_scenario(&tiny(1)).unwrap();
        assert_eq!(a, b);
        let labels: Vec<(usize, &str)> = a.iter().map(|r| (r.tau, r.method.as_str())).collect();
        assert_eq!(labels, vec![(2, "eigen/fd"), (2, "random/fd"), (3, "eigen/fd"), (3, "random/fd")]);
        assert!(a.iter().all(|r| r.std_nmse == 0.0 && r.failed_trials == 0));
    }

    #[test]
    fn standard_error_shrinks_with_trials() {
        let small = run_scenario(&tiny(400)).unwrap();
        let large = run_scenario(&tiny(1600)).unwrap();
        for (s, l) in small.iter().zip(&large) {
            let ratio = s.std_error() / l.std_error();
            assert!((ratio - 2.0).abs() <= 0.6, "{ratio}");
        }
    }

    #[test]
    fn full_receiver_only_at_full_rf() {
        let mut s = tiny(2);
        s.profile_kind = ProfileKind::IdentityReceive;
        s.combiner_methods = vec![CombinerMethod::FullyDigital, CombinerMethod::FullReceiver];
        s.pilot_methods = vec![PilotMethod::Spa];
        s.sweep = Sweep { var: SweepVar::Nrf, values: vec![1, 2, 4] };
        let rows = run_scenario(&s).unwrap();
        let full: Vec<usize> = rows.iter().filter(|r| r.method == "spa/full").map(|r| r.nrf).collect();
        assert_eq!(full, vec![4]);
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = tiny(1);
        s.sweep.values = vec![5];
        assert!(run_scenario(&s).is_err());
        let mut s = tiny(1);
        s.trials = 0;
        assert!(s.validate().is_err());
    }
}
