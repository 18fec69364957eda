//! Full controller compositions and the phase-resolved transaction runners.
//!
//! * [`Design::Bufferless`]: registers, DMA, CDC FIFOs, sizers, MAC.
//! * [`Design::Buffered`]: registers, a 1536-byte TX buffer and RX buffer
//!   filled or drained by the CPU through a bus window, MAC.

mod buffered;
mod bufferless;
mod cpu;
mod probe;
mod run;
mod shared;

pub use buffered::BufferedWorld;
pub use bufferless::BufferlessWorld;
pub use cpu::{CpuOp, Mark};
pub use probe::Probe;
pub use run::{
    loopback_frame, rx_run, rx_transaction, tx_transaction, LoopbackOutcome, RxOutcome, TxOutcome,
    DEFAULT_RX_ADDR, DEFAULT_TX_ADDR,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::SimError;
use crate::frame::MacAddress;
use crate::kernel::{ClockDomain, Component, TickContext, World, PS_PER_SECOND};
use crate::soc::BUFFER_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Design {
    Buffered,
    Bufferless,
}

impl Design {
    pub const ALL: [Design; 2] = [Design::Buffered, Design::Bufferless];

    pub fn as_str(self) -> &'static str {
        match self {
            Design::Buffered => "buffered",
            Design::Bufferless => "bufferless",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Design {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "buffered" => Ok(Design::Buffered),
            "bufferless" => Ok(Design::Bufferless),
            other => Err(SimError::Config(format!("unknown design '{other}'"))),
        }
    }
}

/// What the receiver listens to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireMode {
    /// No receiver at all.
    TxOnly,
    /// A scripted line stands in for the link partner.
    Feed,
    /// The receiver hears the local transmitter.
    Loopback,
}

/// Everything that shapes a controller instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub sys_clk_hz: u64,
    pub bus_width: usize,
    pub cdc_depth: usize,
    pub sync_stages: usize,
    /// Bytes that must be queued before the bufferless MAC starts a frame.
    pub threshold: usize,
    /// Extra bus cycles per CPU store to the device.
    pub copy_overhead: u32,
    pub dma_setup: u32,
    pub max_burst: u64,
    pub mem_size: usize,
    pub read_latency: u32,
    pub write_latency: u32,
    /// Count the baseline CPU copy as part of the payload phase instead of
    /// configuration (TX) or CRC (RX).
    pub copy_as_payload_phase: bool,
    pub mac: MacAddress,
}

pub const DEFAULT_SYS_CLK_HZ: u64 = 50_000_000;
pub const DEFAULT_CDC_DEPTH: usize = 32;
pub const DEFAULT_COPY_OVERHEAD: u32 = 4;
pub const DEFAULT_DMA_SETUP: u32 = 4;

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            sys_clk_hz: DEFAULT_SYS_CLK_HZ,
            bus_width: 8,
            cdc_depth: DEFAULT_CDC_DEPTH,
            sync_stages: 2,
            threshold: crate::mac::DEFAULT_THRESHOLD,
            copy_overhead: DEFAULT_COPY_OVERHEAD,
            dma_setup: DEFAULT_DMA_SETUP,
            max_burst: crate::dma::DEFAULT_MAX_BURST,
            mem_size: 1 << 20,
            read_latency: 1,
            write_latency: 1,
            copy_as_payload_phase: false,
            mac: MacAddress([0x02, 0x00, 0x00, 0x00, 0x00, 0x01]),
        }
    }
}

impl ControllerConfig {
    pub fn sys_clock(&self) -> Result<ClockDomain, SimError> {
        ClockDomain::from_hz("sys", self.sys_clk_hz)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.sys_clock()?;
        let bad = |m: String| Err(SimError::Config(m));
        if !self.bus_width.is_power_of_two() || !(4..=64).contains(&self.bus_width) {
            return bad(format!(
                "bus width {} must be a power of two in 4..=64",
                self.bus_width
            ));
        }
        if self.cdc_depth < 2 || !self.cdc_depth.is_power_of_two() {
            return bad(format!(
                "CDC depth {} must be a power of two >= 2",
                self.cdc_depth
            ));
        }
        if self.sync_stages < 2 {
            return bad("at least two synchronizer stages are required".into());
        }
        if self.threshold == 0 {
            return bad("cut-through threshold must be at least 1 byte".into());
        }
        // The MAC can only see what the CDC FIFO holds; a larger threshold
        // would wait forever on a long frame.
        if self.threshold > self.cdc_depth * self.bus_width {
            return bad(format!(
                "threshold {} exceeds the {}-byte CDC FIFO",
                self.threshold,
                self.cdc_depth * self.bus_width
            ));
        }
        if self.read_latency == 0 || self.write_latency == 0 {
            return bad("memory latencies must be at least one cycle".into());
        }
        if self.max_burst == 0 {
            return bad("max burst must be at least one beat".into());
        }
        Ok(())
    }

    pub fn sys_period_ps(&self) -> u64 {
        PS_PER_SECOND / self.sys_clk_hz
    }
}

/// Per-transaction cycle counts, all in system-domain cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseLatencies {
    pub config: u64,
    pub preamble: u64,
    pub payload: u64,
    pub crc: u64,
}

impl PhaseLatencies {
    pub const NAMES: [&'static str; 4] = ["config", "preamble", "payload", "crc"];

    pub fn total(&self) -> u64 {
        self.config + self.preamble + self.payload + self.crc
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.config, self.preamble, self.payload, self.crc]
    }

    /// Builds phases from cumulative boundary edges.
    pub fn from_boundaries(
        config_end: u64,
        preamble_end: u64,
        payload_end: u64,
        crc_end: u64,
    ) -> Result<Self, SimError> {
        if !(config_end <= preamble_end && preamble_end <= payload_end && payload_end <= crc_end) {
            return Err(SimError::protocol(
                "phases",
                format!("boundaries out of order: {config_end}, {preamble_end}, {payload_end}, {crc_end}"),
            ));
        }
        Ok(PhaseLatencies {
            config: config_end,
            preamble: preamble_end - config_end,
            payload: payload_end - preamble_end,
            crc: crc_end - payload_end,
        })
    }
}

/// Percentage of buffered cycles saved by the bufferless design.
pub fn savings(buffered: &PhaseLatencies, bufferless: &PhaseLatencies) -> f64 {
    let b = buffered.total();
    assert!(
        b > 0,
        "a buffered transaction always has a configuration phase"
    );
    100.0 * (b as f64 - bufferless.total() as f64) / b as f64
}

#[derive(Debug, Error)]
pub enum TransactionError {
    #[error("frame of {frame_octets} octets exceeds the {capacity}-byte buffer")]
    BufferOverflow {
        frame_octets: usize,
        capacity: usize,
    },
    #[error("transmit underrun after {after_body_octets} body octets")]
    Underrun { after_body_octets: usize },
    #[error("received frame of {len} bytes overflowed a {capacity}-byte buffer")]
    RxOverflow { len: usize, capacity: usize },
    #[error("received frame failed the FCS check")]
    FcsError,
    #[error("transaction did not finish within {0} ps")]
    Timeout(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<crate::soc::SocError> for TransactionError {
    fn from(e: crate::soc::SocError) -> Self {
        TransactionError::Sim(e.into())
    }
}

/// Octets a frame with `body_len` header+payload bytes occupies in the
/// baseline buffer once padded and followed by its FCS.
pub fn buffered_frame_octets(body_len: usize) -> usize {
    body_len.max(crate::frame::HEADER_LEN + crate::frame::MIN_PAYLOAD) + crate::frame::FCS_LEN
}

pub fn fits_baseline_buffer(body_len: usize) -> bool {
    buffered_frame_octets(body_len) <= BUFFER_BYTES
}

/// A component whose behavior is one world method.
pub(crate) struct Stage<W> {
    name: &'static str,
    f: fn(&mut W, &mut TickContext) -> Result<(), SimError>,
}

impl<W> Stage<W> {
    pub(crate) fn boxed(
        name: &'static str,
        f: fn(&mut W, &mut TickContext) -> Result<(), SimError>,
    ) -> Box<Self> {
        Box::new(Stage { name, f })
    }
}

impl<W: World> Component<W> for Stage<W> {
    fn name(&self) -> &str {
        self.name
    }

    fn tick(&mut self, world: &mut W, ctx: &mut TickContext) -> Result<(), SimError> {
        (self.f)(world, ctx)
    }
}
