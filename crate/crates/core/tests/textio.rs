mod common;

use cow_qkd::scan::evaluate_point;
use cow_qkd::textio::{parse_config, read_config, render_config, render_count_log, replay_counts};
use cow_qkd::{simulate_session, Error, PipelineMode, SystemParams};
use proptest::prelude::*;

use common::*;

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lab.conf");
    let mut p = lab_fast_detector();
    p.channel.length_km = 42.5;
    p.options.monitor_mode = cow_qkd::MonitorMode::Splitter;
    std::fs::write(&path, render_config(&p)).unwrap();
    assert_eq!(read_config(&path, SystemParams::default()).unwrap(), p);
}

#[test]
fn partial_config_keeps_defaults() {
    let text = "# shorter link\nchannel.length_km = 25\nsource.p_decoy_vacuum = 0.05\n";
    let p = parse_config(text, SystemParams::default()).unwrap();
    assert_eq!(p.channel.length_km, 25.0);
    assert_eq!(p.detectors, SystemParams::default().detectors);
    assert!((p.source.p_z0 - 0.47).abs() < 1e-12);
    assert!(p.validate().is_ok());
}

#[test]
fn missing_file_names_path() {
    let err = read_config(std::path::Path::new("/no/such/file.conf"), SystemParams::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/no/such/file.conf"));
}

#[test]
fn simulated_log_replays_to_same_result() {
    let p = lab_at(40.0);
    let tally = simulate_session(&p, &per_pair(21, 2_000_000));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.log");
    std::fs::write(&path, render_count_log(&tally.record)).unwrap();
    let record = replay_counts(&path).unwrap();
    assert_eq!(record, tally.record);
    let a = evaluate_point(&p, &PipelineMode::Replay(record)).unwrap();
    let b = evaluate_point(&p, &PipelineMode::Replay(tally.record)).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn rendered_config_parses_back(mu in 0.01..0.99f64, km in 0.0..300.0f64, eff in 0.01..1.0f64, dead in 0.0..1e-4f64, rounds in 1u64..u64::MAX) {
        let mut p = SystemParams::default();
        p.source.mu = mu;
        p.channel.length_km = km;
        p.detectors.efficiency = eff;
        p.detectors.dead_time_s = dead;
        p.rounds = rounds;
        prop_assert_eq!(parse_config(&render_config(&p), SystemParams::default()).unwrap(), p);
    }
}
