use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{test_header, BenchConfig};
use crate::controller::{savings, tx_transaction, Design, PhaseLatencies, TransactionError};
use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    BufferOverflow,
    Underrun,
    Failed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::BufferOverflow => "buffer_overflow",
            RowStatus::Underrun => "underrun",
            RowStatus::Failed => "failed",
        }
    }
}

/// Outcome of one (design, payload) kernel.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub design: Design,
    pub payload_bytes: usize,
    pub status: RowStatus,
    pub phases: Option<PhaseLatencies>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub design: Design,
    pub payload_bytes: usize,
    /// One of the phase names, or `total` for the summary row.
    pub phase: &'static str,
    pub cycles: Option<u64>,
    pub status: RowStatus,
    /// Only on summary rows, and only when both designs completed.
    pub savings_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub results: Vec<BenchResult>,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn result(&self, design: Design, payload: usize) -> Option<&BenchResult> {
        self.results
            .iter()
            .find(|r| r.design == design && r.payload_bytes == payload)
    }

    /// Savings for `payload` when both designs completed.
    pub fn savings(&self, payload: usize) -> Option<f64> {
        let b = self.result(Design::Buffered, payload)?.phases?;
        let bl = self.result(Design::Bufferless, payload)?.phases?;
        Some(savings(&b, &bl))
    }

    /// True when every run either completed or hit the expected baseline
    /// capacity limit.
    pub fn healthy(&self) -> bool {
        self.results.iter().all(|r| {
            r.status == RowStatus::Ok
                || (r.status == RowStatus::BufferOverflow && r.design == Design::Buffered)
        })
    }
}

/// Payload bytes for one run; independent of the design so both see the
/// same frame.
fn payload_for(seed: u64, len: usize) -> Vec<u8> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (len as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..len).map(|_| rng.gen()).collect()
}

/// Runs every (payload, design) pair on its own kernel, in parallel, and
/// lays the results out in a fixed order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, SimError> {
    cfg.validate()?;
    let ctrl = cfg.controller()?;
    let header = test_header(&ctrl);
    let mut designs = cfg.designs.clone();
    designs.sort();
    designs.dedup();
    let jobs: Vec<(usize, Design)> = cfg
        .payloads
        .iter()
        .flat_map(|&p| designs.iter().map(move |&d| (p, d)))
        .collect();
    let results: Vec<BenchResult> = jobs
        .par_iter()
        .map(|&(payload_bytes, design)| {
            let payload = payload_for(cfg.seed, payload_bytes);
            let (status, phases, detail) =
                match tx_transaction(design, &ctrl, &header, &payload, None) {
                    Ok(o) => (RowStatus::Ok, Some(o.phases), None),
                    Err(e @ TransactionError::BufferOverflow { .. }) => {
                        (RowStatus::BufferOverflow, None, Some(e.to_string()))
                    }
                    Err(e @ TransactionError::Underrun { .. }) => {
                        (RowStatus::Underrun, None, Some(e.to_string()))
                    }
                    Err(e) => (RowStatus::Failed, None, Some(e.to_string())),
                };
            BenchResult {
                design,
                payload_bytes,
                status,
                phases,
                detail,
            }
        })
        .collect();

    let mut report = BenchReport {
        results,
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for r in &report.results {
        let savings_pct = report.savings(r.payload_bytes);
        match r.phases {
            Some(p) => {
                for (phase, cycles) in PhaseLatencies::NAMES.iter().zip(p.as_array()) {
                    rows.push(BenchRow {
                        design: r.design,
                        payload_bytes: r.payload_bytes,
                        phase,
                        cycles: Some(cycles),
                        status: r.status,
                        savings_pct: None,
                    });
                }
                rows.push(BenchRow {
                    design: r.design,
                    payload_bytes: r.payload_bytes,
                    phase: "total",
                    cycles: Some(p.total()),
                    status: r.status,
                    savings_pct,
                });
            }
            None => rows.push(BenchRow {
                design: r.design,
                payload_bytes: r.payload_bytes,
                phase: "total",
                cycles: None,
                status: r.status,
                savings_pct: None,
            }),
        }
    }
    report.rows = rows;
    Ok(report)
}

pub const CSV_HEADER: [&str; 6] = [
    "design",
    "payload_bytes",
    "phase",
    "cycles",
    "status",
    "savings_pct",
];

pub fn render_csv(report: &BenchReport) -> Result<Vec<u8>, SimError> {
    let err = |e: csv::Error| SimError::Trace(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in &report.rows {
        w.write_record([
            r.design.as_str().to_string(),
            r.payload_bytes.to_string(),
            r.phase.to_string(),
            r.cycles.map(|c| c.to_string()).unwrap_or_default(),
            r.status.as_str().to_string(),
            r.savings_pct.map(|s| format!("{s:.2}")).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| SimError::Trace(e.to_string()))
}

/// Human-readable table: one line per run, then savings per payload.
pub fn summary_table(report: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<11} {:>8} {:>8} {:>9} {:>8} {:>6} {:>8}  status",
        "design", "payload", "config", "preamble", "payload", "crc", "total"
    );
    for r in &report.results {
        match r.phases {
            Some(p) => {
                let _ = writeln!(
                    s,
                    "{:<11} {:>8} {:>8} {:>9} {:>8} {:>6} {:>8}  {}",
                    r.design.as_str(),
                    r.payload_bytes,
                    p.config,
                    p.preamble,
                    p.payload,
                    p.crc,
                    p.total(),
                    r.status.as_str()
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "{:<11} {:>8} {:>8} {:>9} {:>8} {:>6} {:>8}  {} ({})",
                    r.design.as_str(),
                    r.payload_bytes,
                    "-",
                    "-",
                    "-",
                    "-",
                    "-",
                    r.status.as_str(),
                    r.detail.as_deref().unwrap_or("")
                );
            }
        }
    }
    let mut payloads: Vec<usize> = report.results.iter().map(|r| r.payload_bytes).collect();
    payloads.dedup();
    for p in payloads {
        if let Some(v) = report.savings(p) {
            let _ = writeln!(s, "savings at {p} B: {v:.2}%");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_and_totals() {
        let report = run_bench(&BenchConfig::default()).unwrap();
        assert_eq!(
            report.rows.iter().filter(|r| r.phase != "total").count(),
            24
        );
        assert_eq!(report.rows.iter().filter(|r| r.phase == "total").count(), 6);
        for chunk in report.rows.chunks(5) {
            let sum: u64 = chunk[..4].iter().map(|r| r.cycles.unwrap()).sum();
            assert_eq!(chunk[4].cycles, Some(sum));
        }
        let totals: Vec<_> = report.rows.iter().filter(|r| r.phase == "total").collect();
        for pair in totals.chunks(2) {
            let b = report
                .result(Design::Buffered, pair[0].payload_bytes)
                .unwrap()
                .phases
                .unwrap();
            let bl = report
                .result(Design::Bufferless, pair[0].payload_bytes)
                .unwrap()
                .phases
                .unwrap();
            assert_eq!(pair[1].savings_pct, Some(savings(&b, &bl)));
        }
        assert!(report.healthy());
    }

    #[test]
    fn oversize_payload_is_a_status_row() {
        let cfg = BenchConfig {
            payloads: vec![2048],
            ..Default::default()
        };
        let report = run_bench(&cfg).unwrap();
        let b = report.result(Design::Buffered, 2048).unwrap();
        assert_eq!(b.status, RowStatus::BufferOverflow);
        assert_eq!(
            report.result(Design::Bufferless, 2048).unwrap().status,
            RowStatus::Ok
        );
        let csv = String::from_utf8(render_csv(&report).unwrap()).unwrap();
        assert!(csv.contains("buffered,2048,total,,buffer_overflow,"));
    }
}
