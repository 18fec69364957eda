//! `ethsim`: run the controller experiments from the command line.
//!
//! Exit status is 0 on success, 1 when a run completes but fails
//! verification, and 2 for bad input or I/O errors.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ethsim_core::harness::{
    render_csv, run_bench, run_loopback, run_scenario, summary_table, BenchConfig, FailureKind,
    Scenario,
};

#[derive(Parser, Debug)]
#[command(
    name = "ethsim",
    version,
    about = "Cycle-level Ethernet controller simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Phase-resolved transmit latency of both designs.
    Bench(Common),
    /// Random frames sent from bufferless TX back into bufferless RX.
    Loopback {
        #[arg(long, default_value_t = 1000)]
        frames: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Write a per-cycle CSV trace of one scenario.
    Trace {
        /// tx_256, tx_1024, rx_1024 or cdc_stress
        scenario: String,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated payload sizes in bytes.
    #[arg(long)]
    payloads: Option<String>,
    /// buffered, bufferless or both.
    #[arg(long)]
    designs: Option<String>,
    #[arg(long)]
    sys_clk_mhz: Option<u64>,
    #[arg(long)]
    bus_width: Option<usize>,
    #[arg(long)]
    cdc_depth: Option<usize>,
    /// Bytes queued before the bufferless MAC starts a frame.
    #[arg(long)]
    threshold: Option<usize>,
    /// Extra bus cycles per CPU store.
    #[arg(long)]
    copy_overhead: Option<u32>,
    #[arg(long)]
    dma_setup: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Attribute the baseline copy to the payload phase.
    #[arg(long)]
    copy_as_payload_phase: bool,
}

impl Common {
    fn resolve(&self) -> Result<BenchConfig> {
        let mut c = BenchConfig::default();
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            c.apply_text(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        let flags: [(&str, Option<String>); 9] = [
            ("payloads", self.payloads.clone()),
            ("designs", self.designs.clone()),
            ("sys_clk_mhz", self.sys_clk_mhz.map(|v| v.to_string())),
            ("bus_width", self.bus_width.map(|v| v.to_string())),
            ("cdc_depth", self.cdc_depth.map(|v| v.to_string())),
            ("threshold", self.threshold.map(|v| v.to_string())),
            ("copy_overhead", self.copy_overhead.map(|v| v.to_string())),
            ("dma_setup", self.dma_setup.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, &v)?;
            }
        }
        if let Some(p) = &self.csv {
            c.csv = Some(p.clone());
        }
        c.copy_as_payload_phase |= self.copy_as_payload_phase;
        c.validate()?;
        Ok(c)
    }
}

fn bench(common: &Common) -> Result<ExitCode> {
    let cfg = common.resolve()?;
    let report = run_bench(&cfg)?;
    let csv = render_csv(&report)?;
    let table = summary_table(&report);
    match &cfg.csv {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            print!("{table}");
        }
        None => {
            io::stdout().write_all(&csv)?;
            eprint!("{table}");
        }
    }
    Ok(if report.healthy() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn loopback(frames: usize, common: &Common) -> Result<ExitCode> {
    let cfg = common.resolve()?;
    let report = run_loopback(&cfg.controller()?, frames, cfg.seed);
    for f in &report.failures {
        println!(
            "frame {} ({} B payload): {:?}",
            f.index, f.payload_len, f.kind
        );
    }
    let underruns = report.count(|k| matches!(k, FailureKind::Underrun { .. }));
    let fcs = report.count(|k| matches!(k, FailureKind::Fcs));
    let mismatches = report.count(|k| matches!(k, FailureKind::Mismatch { .. }));
    println!(
        "{} frames, {} failures ({} underruns, {} FCS errors, {} mismatches, {} other); peak {} bytes in flight",
        report.frames,
        report.failures.len(),
        underruns,
        fcs,
        mismatches,
        report.failures.len() - underruns - fcs - mismatches,
        report.max_in_flight
    );
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn trace(scenario: &str, out: &PathBuf, common: &Common) -> Result<ExitCode> {
    let scenario: Scenario = scenario.parse()?;
    let cfg = common.resolve()?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let r = run_scenario(
        scenario,
        &cfg.controller()?,
        cfg.seed,
        Box::new(BufWriter::new(file)),
    )?;
    println!(
        "{scenario}: {} trace rows, {} wire octets, peak FIFO occupancy {} -> {}",
        r.trace_rows,
        r.wire_octets,
        r.max_occupancy,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bench(common) => bench(common),
        Command::Loopback { frames, common } => loopback(*frames, common),
        Command::Trace {
            scenario,
            out,
            common,
        } => trace(scenario, out, common),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
