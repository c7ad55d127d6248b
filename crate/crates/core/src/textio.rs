//! Flat `key = value` text formats: the configuration file and the count log.
//!
//! Both formats allow blank lines and `#` comments. Keys are matched exactly;
//! unknown and repeated keys are errors.
//!
//! Configuration keys mirror [`SystemParams`] field paths (`source.mu`,
//! `detectors.dead_time_s`, ...). Keys left out keep their default values.
//! When neither `source.p_z0` nor `source.p_z1` is given they are derived
//! from the decoy probabilities.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::concentration::CountRecord;
use crate::error::{Error, Result};
use crate::params::{balanced_signal_probability, CrossTerm, MonitorMode, SystemParams};

pub const CONFIG_KEYS: [&str; 24] = [
    "source.mu",
    "source.pulse_pair_rate",
    "source.p_decoy_alpha_alpha",
    "source.p_decoy_vacuum",
    "source.p_z0",
    "source.p_z1",
    "channel.length_km",
    "channel.attenuation_db_per_km",
    "channel.extra_loss_db",
    "detectors.efficiency",
    "detectors.dark_count_prob",
    "detectors.dead_time_s",
    "receiver.t_b",
    "receiver.phase_shift",
    "receiver.disclose_rate",
    "receiver.compression_ratio",
    "security.eps_cor",
    "security.eps_sec",
    "security.eps_1",
    "security.eps_2",
    "security.f_ec",
    "security.qber_abort_threshold",
    "options.monitor_mode",
    "options.cross_term",
];

pub const ROUNDS_KEY: &str = "rounds";

pub const COUNT_LOG_KEYS: [&str; 8] = [
    "rounds",
    "n_z",
    "n_sent_aa",
    "n_sent_vac",
    "n_aa_m0",
    "n_aa_m1",
    "n_vac_m0",
    "n_vac_m1",
];

/// Yields `(line_number, key, value)` for every non-blank, non-comment line.
fn key_values(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str)>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let lineno = i + 1;
        Some(match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok((lineno, k.trim(), v.trim())),
            _ => Err(Error::parse(lineno, format!("expected `key = value`, got `{line}`"))),
        })
    })
}

fn parse_f64(lineno: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::parse(lineno, format!("{key}: `{value}` is not a number")))
}

fn parse_u64(lineno: usize, key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::parse(lineno, format!("{key}: `{value}` is not a non-negative integer")))
}

/// Applies one `key = value` setting. `lineno` is only used in diagnostics.
pub fn apply_setting(params: &mut SystemParams, lineno: usize, key: &str, value: &str) -> Result<()> {
    let f = || parse_f64(lineno, key, value);
    match key {
        "source.mu" => params.source.mu = f()?,
        "source.pulse_pair_rate" => params.source.pulse_pair_rate = f()?,
        "source.p_decoy_alpha_alpha" => params.source.p_decoy_alpha_alpha = f()?,
        "source.p_decoy_vacuum" => params.source.p_decoy_vacuum = f()?,
        "source.p_z0" => params.source.p_z0 = f()?,
        "source.p_z1" => params.source.p_z1 = f()?,
        "channel.length_km" => params.channel.length_km = f()?,
        "channel.attenuation_db_per_km" => params.channel.attenuation_db_per_km = f()?,
        "channel.extra_loss_db" => params.channel.extra_loss_db = f()?,
        "detectors.efficiency" => params.detectors.efficiency = f()?,
        "detectors.dark_count_prob" => params.detectors.dark_count_prob = f()?,
        "detectors.dead_time_s" => params.detectors.dead_time_s = f()?,
        "receiver.t_b" => params.receiver.t_b = f()?,
        "receiver.phase_shift" => params.receiver.phase_shift = f()?,
        "receiver.disclose_rate" => params.receiver.disclose_rate = f()?,
        "receiver.compression_ratio" => params.receiver.compression_ratio = f()?,
        "security.eps_cor" => params.security.eps_cor = f()?,
        "security.eps_sec" => params.security.eps_sec = f()?,
        "security.eps_1" => params.security.eps_1 = f()?,
        "security.eps_2" => params.security.eps_2 = f()?,
        "security.f_ec" => params.security.f_ec = f()?,
        "security.qber_abort_threshold" => params.security.qber_abort_threshold = f()?,
        "options.monitor_mode" => {
            params.options.monitor_mode = match value {
                "switch" => MonitorMode::Switch,
                "splitter" => MonitorMode::Splitter,
                _ => return Err(Error::parse(lineno, format!("{key}: expected `switch` or `splitter`, got `{value}`"))),
            }
        }
        "options.cross_term" => {
            params.options.cross_term = match value {
                "mixed" => CrossTerm::Mixed,
                "as_printed" => CrossTerm::AsPrinted,
                _ => return Err(Error::parse(lineno, format!("{key}: expected `mixed` or `as_printed`, got `{value}`"))),
            }
        }
        ROUNDS_KEY => params.rounds = parse_u64(lineno, key, value)?,
        _ => return Err(Error::parse(lineno, format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Applies settings from `text` on top of `base`. The result is not validated.
pub fn parse_config(text: &str, base: SystemParams) -> Result<SystemParams> {
    let mut params = base;
    let mut seen = HashSet::new();
    for item in key_values(text) {
        let (lineno, key, value) = item?;
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(lineno, format!("duplicate key `{key}`")));
        }
        apply_setting(&mut params, lineno, key, value)?;
    }
    if !seen.contains("source.p_z0") && !seen.contains("source.p_z1") {
        rebalance_signal(&mut params);
    }
    Ok(params)
}

pub fn rebalance_signal(params: &mut SystemParams) {
    let p = balanced_signal_probability(params.source.p_decoy_alpha_alpha, params.source.p_decoy_vacuum);
    params.source.p_z0 = p;
    params.source.p_z1 = p;
}

/// Every key with its current value, in [`CONFIG_KEYS`] order; parses back
/// to the same parameters.
pub fn render_config(p: &SystemParams) -> String {
    let values: [String; 24] = [
        p.source.mu.to_string(),
        p.source.pulse_pair_rate.to_string(),
        p.source.p_decoy_alpha_alpha.to_string(),
        p.source.p_decoy_vacuum.to_string(),
        p.source.p_z0.to_string(),
        p.source.p_z1.to_string(),
        p.channel.length_km.to_string(),
        p.channel.attenuation_db_per_km.to_string(),
        p.channel.extra_loss_db.to_string(),
        p.detectors.efficiency.to_string(),
        p.detectors.dark_count_prob.to_string(),
        p.detectors.dead_time_s.to_string(),
        p.receiver.t_b.to_string(),
        p.receiver.phase_shift.to_string(),
        p.receiver.disclose_rate.to_string(),
        p.receiver.compression_ratio.to_string(),
        p.security.eps_cor.to_string(),
        p.security.eps_sec.to_string(),
        p.security.eps_1.to_string(),
        p.security.eps_2.to_string(),
        p.security.f_ec.to_string(),
        p.security.qber_abort_threshold.to_string(),
        match p.options.monitor_mode {
            MonitorMode::Switch => "switch",
            MonitorMode::Splitter => "splitter",
        }
        .to_string(),
        match p.options.cross_term {
            CrossTerm::Mixed => "mixed",
            CrossTerm::AsPrinted => "as_printed",
        }
        .to_string(),
    ];
    let mut out = String::new();
    for (k, v) in CONFIG_KEYS.iter().zip(values) {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "{ROUNDS_KEY} = {}", p.rounds);
    out
}

pub fn read_config(path: &Path, base: SystemParams) -> Result<SystemParams> {
    parse_config(&read_to_string(path)?, base)
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses and validates a count log. All eight keys are required.
pub fn parse_count_log(text: &str) -> Result<CountRecord> {
    let mut values: [Option<u64>; 8] = [None; 8];
    let mut last_line = 0;
    for item in key_values(text) {
        let (lineno, key, value) = item?;
        last_line = lineno;
        let slot = COUNT_LOG_KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| Error::parse(lineno, format!("unknown key `{key}`")))?;
        if values[slot].is_some() {
            return Err(Error::parse(lineno, format!("duplicate key `{key}`")));
        }
        values[slot] = Some(parse_u64(lineno, key, value)?);
    }
    if last_line == 0 {
        return Err(Error::parse(0, "count log is empty"));
    }
    let missing: Vec<&str> = COUNT_LOG_KEYS
        .iter()
        .zip(values.iter())
        .filter(|(_, v)| v.is_none())
        .map(|(k, _)| *k)
        .collect();
    if !missing.is_empty() {
        return Err(Error::parse(last_line, format!("missing keys: {}", missing.join(", "))));
    }
    let v = values.map(Option::unwrap_or_default);
    CountRecord {
        rounds: v[0],
        n_z: v[1],
        n_sent_aa: v[2],
        n_sent_vac: v[3],
        n_aa_m0: v[4],
        n_aa_m1: v[5],
        n_vac_m0: v[6],
        n_vac_m1: v[7],
    }
    .validate()
}

pub fn render_count_log(r: &CountRecord) -> String {
    let v = [
        r.rounds, r.n_z, r.n_sent_aa, r.n_sent_vac, r.n_aa_m0, r.n_aa_m1, r.n_vac_m0, r.n_vac_m1,
    ];
    let mut out = String::new();
    for (k, v) in COUNT_LOG_KEYS.iter().zip(v) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Reads a count log from disk.
pub fn replay_counts(path: &Path) -> Result<CountRecord> {
    parse_count_log(&read_to_string(path)?)
}
