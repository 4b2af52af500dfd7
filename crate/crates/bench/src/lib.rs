//! Fixtures shared by the benchmarks.

use pilotforge::channel::{make_hex_geometry, make_mu_mimo_profile, make_random_fully_separable};
use pilotforge::combiner::{fully_digital, FeasibleSet};
use pilotforge::random::stream;
use pilotforge::{CombinerSet, CorrelationProfile, NetworkConfig, PilotObjectiveContext};

pub struct Fixture {
    pub cfg: NetworkConfig,
    pub profile: CorrelationProfile,
    pub combiners: CombinerSet,
    pub ctx: PilotObjectiveContext,
}

fn build(cfg: NetworkConfig, profile: CorrelationProfile) -> Fixture {
    let ws = (0..cfg.cells)
        .map(|i| fully_digital(&profile.receive(i), cfg.rf_chains).expect("PSD receive correlation"))
        .collect();
    let combiners = CombinerSet::new(ws, FeasibleSet::Unconstrained).expect("finite combiners");
    let ctx = PilotObjectiveContext::new(&profile, &combiners).expect("consistent fixture");
    Fixture { cfg, profile, combiners, ctx }
}

/// The fully-separable network of the pilot-length sweep (M=3, K=4, N=10).
pub fn fully_separable(tau: usize, rf_chains: usize) -> Fixture {
    let cfg = NetworkConfig::new(3, 4, 10, rf_chains, tau, 1.0).expect("valid dimensions");
    let profile = make_random_fully_separable(&cfg, &mut stream(1, 0, "profile"));
    build(cfg, profile)
}

/// Seven hexagonal cells with K=4 users and 10 antennas.
pub fn hexagonal(tau: usize) -> Fixture {
    let cfg = NetworkConfig::new(7, 4, 10, 10, tau, 1.0).expect("valid dimensions");
    let geom = make_hex_geometry(&cfg, 1.0, &mut stream(1, 0, "geometry"));
    let profile =
        make_mu_mimo_profile(&geom, cfg.antennas, 3.0, 8.0, &mut stream(1, 0, "shadowing")).expect("valid geometry");
    build(cfg, profile)
}
