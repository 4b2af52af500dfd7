use super::{ProfileKind, Scenario, Sweep, SweepVar};
use crate::channel::NetworkConfig;
use crate::combiner::CombinerMethod;
use crate::error::{Error, Result};
use crate::pilots::{DictionaryKind, PilotMethod};

pub const PRESET_NAMES: [&str; 5] = ["fig1", "fig2", "fig3", "fig5", "fig6"];

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SEED: u64 = 1;

const HEX: ProfileKind = ProfileKind::HexMuMimo { gamma: 3.0, sigma_db: 8.0, radius: 1.0 };

pub fn preset(name: &str) -> Result<Scenario> {
    let cfg = |m, n_rf, tau| NetworkConfig::new(m, 4, 10, n_rf, tau, 1.0).expect("preset dimensions are valid");
    let tau_sweep = |lo: usize, hi: usize| Sweep { var: SweepVar::Tau, values: (lo..=hi).collect() };
    let (cfg, profile_kind, combiner_methods, pilot_methods, sweep) = match name {
        "fig1" => (
            cfg(3, 1, 4),
            ProfileKind::RandomFullySeparable,
            vec![CombinerMethod::FullyDigital, CombinerMethod::GrtmDict],
            vec![PilotMethod::Eigen, PilotMethod::Random, PilotMethod::OrthReuse],
            tau_sweep(4, 12),
        ),
        "fig2" => (
            cfg(3, 1, 4),
            ProfileKind::IdentityReceive,
            vec![CombinerMethod::FullyDigital],
            vec![PilotMethod::Eigen, PilotMethod::Spa, PilotMethod::Random],
            tau_sweep(4, 12),
        ),
        "fig3" => (
            cfg(3, 1, 5),
            ProfileKind::IdentityReceive,
            vec![CombinerMethod::FullyDigital, CombinerMethod::FullReceiver],
            vec![PilotMethod::Eigen, PilotMethod::Spa, PilotMethod::Random],
            Sweep { var: SweepVar::Nrf, values: (1..=10).collect() },
        ),
        "fig5" => (
            cfg(7, 10, 4),
            HEX,
            vec![CombinerMethod::FullReceiver],
            vec![PilotMethod::Gsrtm(DictionaryKind::Gaussian), PilotMethod::Spa, PilotMethod::Random],
            tau_sweep(4, 8),
        ),
        "fig6" => (
            cfg(7, 10, 4),
            HEX,
            vec![CombinerMethod::FullReceiver],
            vec![
                PilotMethod::Gsrtm(DictionaryKind::Gaussian),
                PilotMethod::Gsrtm(DictionaryKind::Qam16),
                PilotMethod::Gsrtm(DictionaryKind::Qam4),
            ],
            tau_sweep(4, 8),
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(Scenario {
        name: name.to_string(),
        cfg,
        profile_kind,
        combiner_methods,
        pilot_methods,
        sweep,
        trials: DEFAULT_TRIALS,
        seed: DEFAULT_SEED,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
        assert_eq!(preset("fig4"), Err(Error::UnknownPreset("fig4".into())));
    }

    #[test]
    fn preset_parameters() {
        let f1 = preset("fig1").unwrap();
        assert_eq!((f1.cfg.cells, f1.cfg.antennas, f1.cfg.users_per_cell, f1.cfg.rf_chains), (3, 10, 4, 1));
        let f3 = preset("fig3").unwrap();
        assert_eq!(f3.sweep.var, SweepVar::Nrf);
        assert_eq!(f3.cfg.pilot_len, 5);
        let f5 = preset("fig5").unwrap();
        assert_eq!((f5.cfg.cells, f5.cfg.rf_chains, f5.cfg.antennas), (7, 10, 10));
        assert!(matches!(f5.profile_kind, ProfileKind::HexMuMimo { .. }));
        let f6 = preset("fig6").unwrap();
        let kinds: Vec<_> = f6.pilot_methods.iter().map(|p| p.name()).collect();
        assert_eq!(kinds, vec!["gsrtm", "gsrtm-qam16", "gsrtm-qam4"]);
    }
}
