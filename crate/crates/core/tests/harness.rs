use std::fs;
use std::path::PathBuf;

use ethsim_core::controller::{ControllerConfig, Design};
use ethsim_core::harness::{
    render_csv, run_bench, run_cdc_stress, run_loopback, run_scenario, BenchConfig, FailureKind,
    RowStatus, Scenario,
};

fn calibration_file() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/calibrated.conf")
}

#[test]
fn committed_calibration_lands_near_the_published_savings() {
    let text = fs::read_to_string(calibration_file()).unwrap();
    let cfg = BenchConfig::from_text(&text).unwrap();
    let report = run_bench(&cfg).unwrap();
    for (payload, published) in [(256, 62.97), (512, 60.42), (1024, 64.48)] {
        let s = report.savings(payload).unwrap();
        assert!(
            (s - published).abs() <= 10.0,
            "{payload} B: {s:.2}% vs {published}%"
        );
    }
}

#[test]
fn bench_csv_is_deterministic() {
    let cfg = BenchConfig {
        payloads: vec![64, 700, 2048],
        ..Default::default()
    };
    let a = render_csv(&run_bench(&cfg).unwrap()).unwrap();
    let b = render_csv(&run_bench(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("design,payload_bytes,phase,cycles,status,savings_pct\n"));
}

#[test]
fn single_design_selection() {
    let cfg = BenchConfig {
        designs: vec![Design::Bufferless],
        ..Default::default()
    };
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.rows.len(), 15);
    assert!(report
        .rows
        .iter()
        .all(|r| r.status == RowStatus::Ok && r.savings_pct.is_none()));
}

#[test]
fn loopback_is_seeded() {
    let cfg = ControllerConfig::default();
    let a = run_loopback(&cfg, 30, 99);
    assert!(a.passed(), "{:?}", a.failures);
    assert_eq!(a.max_in_flight, run_loopback(&cfg, 30, 99).max_in_flight);
}

#[test]
fn starved_loopback_reports_underruns() {
    let cfg = ControllerConfig {
        sys_clk_hz: 10_000_000,
        threshold: 1,
        ..Default::default()
    };
    let r = run_loopback(&cfg, 10, 1);
    assert!(!r.passed());
    assert_eq!(r.count(|k| matches!(k, FailureKind::Underrun { .. })), 10);
}

fn trace_of(s: Scenario, cfg: &ControllerConfig) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    run_scenario(s, cfg, 1, Box::new(fs::File::create(&path).unwrap())).unwrap();
    fs::read_to_string(path).unwrap()
}

#[test]
fn tx_256_trace_has_282_wire_octets() {
    let t = trace_of(Scenario::Tx256, &ControllerConfig::default());
    assert_eq!(
        t.lines().filter(|l| l.contains(",wire,octet,")).count(),
        282
    );
    assert!(t.lines().any(|l| l.contains(",tx_cdc,occupancy,")));
}

#[test]
fn rx_1024_trace_shows_the_receive_path() {
    let t = trace_of(Scenario::Rx1024, &ControllerConfig::default());
    assert_eq!(
        t.lines().filter(|l| l.contains(",wire,octet,")).count(),
        8 + 14 + 1024 + 4
    );
    assert!(t.lines().any(|l| l.contains(",rx_cdc,occupancy,")));
}

#[test]
fn cdc_stress_occupancy_stays_within_depth() {
    for depth in [4usize, 32] {
        let cfg = ControllerConfig {
            cdc_depth: depth,
            threshold: 16,
            ..Default::default()
        };
        let t = trace_of(Scenario::CdcStress, &cfg);
        let occ: Vec<usize> = t
            .lines()
            .filter(|l| l.contains(",cdc,occupancy,"))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(!occ.is_empty());
        assert!(occ.iter().all(|&o| o <= depth));
        assert_eq!(
            occ.iter().max(),
            Some(&depth),
            "stress should fill the FIFO"
        );
    }
    let r = run_cdc_stress(&ControllerConfig::default(), 10_000, 3, None).unwrap();
    assert!(r.in_order && r.received == 10_000);
}
