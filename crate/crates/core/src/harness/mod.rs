//! Experiment drivers shared by the command-line tool, the acceptance suite
//! and the benchmarks.

mod bench;
mod loopback;
mod scenarios;

pub use bench::{
    render_csv, run_bench, summary_table, BenchReport, BenchResult, BenchRow, RowStatus,
};
pub use loopback::{run_loopback, FailureKind, FrameFailure, LoopbackReport};
pub use scenarios::{run_cdc_stress, run_scenario, CdcStressReport, Scenario, ScenarioReport};

use std::path::PathBuf;

use crate::controller::{ControllerConfig, Design};
use crate::error::SimError;
use crate::frame::{FrameHeader, MacAddress};

/// Settings for one bench invocation. Every field can come from a
/// `key = value` file; command-line flags are applied on top.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub payloads: Vec<usize>,
    pub designs: Vec<Design>,
    pub sys_clk_mhz: u64,
    pub bus_width: usize,
    pub cdc_depth: usize,
    pub threshold: usize,
    pub copy_overhead: u32,
    pub dma_setup: u32,
    pub seed: u64,
    pub csv: Option<PathBuf>,
    pub copy_as_payload_phase: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let c = ControllerConfig::default();
        BenchConfig {
            payloads: vec![256, 512, 1024],
            designs: Design::ALL.to_vec(),
            sys_clk_mhz: c.sys_clk_hz / 1_000_000,
            bus_width: c.bus_width,
            cdc_depth: c.cdc_depth,
            threshold: c.threshold,
            copy_overhead: c.copy_overhead,
            dma_setup: c.dma_setup,
            seed: 1,
            csv: None,
            copy_as_payload_phase: c.copy_as_payload_phase,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, SimError> {
    value
        .trim()
        .parse()
        .map_err(|_| SimError::Config(format!("{key}: cannot parse '{value}'")))
}

pub fn parse_designs(value: &str) -> Result<Vec<Design>, SimError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "both" | "all" => Ok(Design::ALL.to_vec()),
        v => v.split(',').map(str::parse).collect(),
    }
}

pub fn parse_payloads(value: &str) -> Result<Vec<usize>, SimError> {
    value.split(',').map(|p| parse_num("payloads", p)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, SimError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        v => Err(SimError::Config(format!(
            "{key}: expected a boolean, got '{v}'"
        ))),
    }
}

impl BenchConfig {
    /// Sets one field by name. Dashes and underscores are interchangeable,
    /// so keys match the flag spellings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        let key = key.trim().trim_start_matches("--").replace('-', "_");
        match key.as_str() {
            "payloads" => self.payloads = parse_payloads(value)?,
            "designs" => self.designs = parse_designs(value)?,
            "sys_clk_mhz" => self.sys_clk_mhz = parse_num(&key, value)?,
            "bus_width" => self.bus_width = parse_num(&key, value)?,
            "cdc_depth" => self.cdc_depth = parse_num(&key, value)?,
            "threshold" => self.threshold = parse_num(&key, value)?,
            "copy_overhead" => self.copy_overhead = parse_num(&key, value)?,
            "dma_setup" => self.dma_setup = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "csv" => self.csv = Some(PathBuf::from(value.trim())),
            "copy_as_payload_phase" => self.copy_as_payload_phase = parse_bool(&key, value)?,
            _ => {
                return Err(SimError::Config(format!(
                    "unknown configuration key '{key}'"
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key = value` document. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), SimError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected 'key = value'", n + 1))
            })?;
            self.set(k, v)
                .map_err(|e| SimError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let mut c = BenchConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn controller(&self) -> Result<ControllerConfig, SimError> {
        let c = ControllerConfig {
            sys_clk_hz: self
                .sys_clk_mhz
                .checked_mul(1_000_000)
                .ok_or_else(|| SimError::Config("clock too fast".into()))?,
            bus_width: self.bus_width,
            cdc_depth: self.cdc_depth,
            threshold: self.threshold,
            copy_overhead: self.copy_overhead,
            dma_setup: self.dma_setup,
            copy_as_payload_phase: self.copy_as_payload_phase,
            ..ControllerConfig::default()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.payloads.is_empty() || self.payloads.contains(&0) {
            return Err(SimError::Config(
                "payload sizes must be at least 1 byte".into(),
            ));
        }
        if self.designs.is_empty() {
            return Err(SimError::Config("no design selected".into()));
        }
        self.controller().map(|_| ())
    }
}

/// Header used for every generated frame.
pub fn test_header(cfg: &ControllerConfig) -> FrameHeader {
    FrameHeader {
        dst: MacAddress([0x02, 0x00, 0x00, 0x00, 0x00, 0x02]),
        src: cfg.mac,
        ethertype: 0x88B5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_config_round_trip() {
        let c = BenchConfig::from_text("# calibration\npayloads = 64, 128\ndesigns = bufferless\ncopy-overhead = 7\ncopy_as_payload_phase = yes\n")
            .unwrap();
        assert_eq!(c.payloads, vec![64, 128]);
        assert_eq!(c.designs, vec![Design::Bufferless]);
        assert_eq!(c.copy_overhead, 7);
        assert!(c.copy_as_payload_phase);
        assert_eq!(c.sys_clk_mhz, 50);
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(BenchConfig::from_text("speed = 3").is_err());
        assert!(BenchConfig::from_text("payloads").is_err());
        let c = BenchConfig::from_text("payloads = 0").unwrap();
        assert!(c.validate().is_err());
        let c = BenchConfig::from_text("sys_clk_mhz = 30").unwrap();
        assert!(c.validate().is_err());
    }
}
