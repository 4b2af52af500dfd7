//! `key = value` scenario files.
//!
//! ```text
//! # start from a preset, then override
//! preset = fig1
//! trials = 500
//! values = 4..8
//! pilots = eigen, random
//! ```
//!
//! Without `preset`, the fig1 protocol is the base and the name is `custom`.

use std::path::Path;

use super::{preset, ProfileKind, Scenario, SweepVar};
use crate::combiner::CombinerMethod;
use crate::error::{Error, Result};
use crate::pilots::PilotMethod;

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::Parse(format!("{key}: `{v}`: {e}")))
}

/// `4..12` (inclusive), `4..=12`, or `4, 6, 8`.
fn parse_values(v: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = v.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi): (usize, usize) = (parse_num("values", lo.trim())?, parse_num("values", hi.trim())?);
        if lo > hi {
            return Err(Error::Parse(format!("values: empty range `{v}`")));
        }
        return Ok((lo..=hi).collect());
    }
    v.split(',').map(|t| parse_num("values", t.trim())).collect()
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(|t| f(t.trim())).collect()
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut pairs = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", no + 1)))?;
        pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    let mut s = match pairs.iter().find(|(k, _)| k == "preset") {
        Some((_, name)) => preset(name)?,
        None => Scenario { name: "custom".into(), ..preset("fig1")? },
    };
    let (mut gamma, mut sigma_db, mut radius) = match s.profile_kind {
        ProfileKind::HexMuMimo { gamma, sigma_db, radius } => (gamma, sigma_db, radius),
        _ => (3.0, 8.0, 1.0),
    };
    let mut profile_name: Option<String> = None;
    for (k, v) in &pairs {
        match k.as_str() {
            "preset" => {}
            "name" => s.name = v.clone(),
            "cells" => s.cfg.cells = parse_num(k, v)?,
            "users" => s.cfg.users_per_cell = parse_num(k, v)?,
            "antennas" => s.cfg.antennas = parse_num(k, v)?,
            "rf_chains" | "nrf" => s.cfg.rf_chains = parse_num(k, v)?,
            "tau" | "pilot_len" => s.cfg.pilot_len = parse_num(k, v)?,
            "power" => s.cfg.power = parse_num(k, v)?,
            "profile" => profile_name = Some(v.to_ascii_lowercase()),
            "gamma" => gamma = parse_num(k, v)?,
            "sigma_db" => sigma_db = parse_num(k, v)?,
            "radius" => radius = parse_num(k, v)?,
            "combiners" => s.combiner_methods = parse_list(v, CombinerMethod::parse)?,
            "pilots" => s.pilot_methods = parse_list(v, PilotMethod::parse)?,
            "sweep" => {
                s.sweep.var = match v.to_ascii_lowercase().as_str() {
                    "tau" => SweepVar::Tau,
                    "nrf" => SweepVar::Nrf,
                    other => return Err(Error::Parse(format!("sweep: unknown variable `{other}`"))),
                }
            }
            "values" => s.sweep.values = parse_values(v)?,
            "trials" => s.trials = parse_num(k, v)?,
            "seed" => s.seed = parse_num(k, v)?,
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
    }
    let hex = ProfileKind::HexMuMimo { gamma, sigma_db, radius };
    s.profile_kind = match profile_name.as_deref() {
        None if matches!(s.profile_kind, ProfileKind::HexMuMimo { .. }) => hex,
        None => s.profile_kind,
        Some("random-fs") => ProfileKind::RandomFullySeparable,
        Some("identity-rx") => ProfileKind::IdentityReceive,
        Some("hex-mu-mimo") => hex,
        Some(other) => return Err(Error::Parse(format!("profile: unknown kind `{other}`"))),
    };
    if let ProfileKind::HexMuMimo { gamma, radius, .. } = s.profile_kind {
        if !(gamma > 0.0 && radius > 0.0) {
            return Err(Error::InvalidConfig("gamma and radius must be positive".into()));
        }
    }
    // The swept field of the base configuration is never used on its own.
    if let Some(&first) = s.sweep.values.first() {
        match s.sweep.var {
            SweepVar::Tau => s.cfg.pilot_len = first,
            SweepVar::Nrf => s.cfg.rf_chains = first,
        }
    }
    s.validate()?;
    Ok(s)
}

pub fn parse_config_file(path: &Path) -> Result<Scenario> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pilots::DictionaryKind;

    #[test]
    fn preset_with_overrides() {
        let s = parse_config("preset = fig5 # hex\ntrials = 50\nseed=9\nvalues = 4..6\npilots = gsrtm-qam4, spa\n").unwrap();
        assert_eq!(s.name, "fig5");
        assert_eq!((s.trials, s.seed), (50, 9));
        assert_eq!(s.sweep.values, vec![4, 5, 6]);
        assert_eq!(s.pilot_methods, vec![PilotMethod::Gsrtm(DictionaryKind::Qam4), PilotMethod::Spa]);
        assert!(matches!(s.profile_kind, ProfileKind::HexMuMimo { .. }));
    }

    #[test]
    fn custom_scenario_from_scratch() {
        let text = "name = small\ncells = 2\nusers = 2\nantennas = 4\nrf_chains = 2\nprofile = identity-rx\n\
                    combiners = fd\npilots = eigen, spa\nsweep = tau\nvalues = 2, 4\ntrials = 3\n";
        let s = parse_config(text).unwrap();
        assert_eq!(s.name, "small");
        assert_eq!(s.cfg.cells, 2);
        assert_eq!(s.profile_kind, ProfileKind::IdentityReceive);
        assert_eq!(s.sweep.values, vec![2, 4]);
    }

    #[test]
    fn bad_files_are_rejected() {
        for text in [
            "cells 3",
            "bogus = 1",
            "trials = many",
            "preset = fig9",
            "values = 9..4",
            "sweep = power",
            "profile = hex-mu-mimo\npilots = eigen",
            "trials = 0",
        ] {
            assert!(parse_config(text).is_err(), "{text}");
        }
    }
}
