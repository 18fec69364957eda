use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::test_header;
use crate::axis::CdcFifo;
use crate::controller::{
    rx_run, tx_transaction, ControllerConfig, Design, Stage, TransactionError,
};
use crate::error::SimError;
use crate::frame::frame_octets;
use crate::kernel::{
    ClockDomain, CommitContext, DomainId, Kernel, RunOutcome, SimTime, TickContext, World,
};
use crate::soc::BUFFER_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Tx256,
    Tx1024,
    Rx1024,
    CdcStress,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Tx256,
        Scenario::Tx1024,
        Scenario::Rx1024,
        Scenario::CdcStress,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Tx256 => "tx_256",
            Scenario::Tx1024 => "tx_1024",
            Scenario::Rx1024 => "rx_1024",
            Scenario::CdcStress => "cdc_stress",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| {
                SimError::Config(format!(
                    "unknown scenario '{s}' (tx_256, tx_1024, rx_1024, cdc_stress)"
                ))
            })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScenarioReport {
    pub trace_rows: u64,
    /// Non-idle wire octets seen during the run.
    pub wire_octets: usize,
    pub max_occupancy: usize,
}

/// Runs a named scenario on the bufferless controller with tracing into
/// `sink`.
pub fn run_scenario(
    scenario: Scenario,
    cfg: &ControllerConfig,
    seed: u64,
    sink: Box<dyn Write + Send>,
) -> Result<ScenarioReport, TransactionError> {
    let header = test_header(cfg);
    let payload = |n: usize| -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen()).collect()
    };
    match scenario {
        Scenario::Tx256 | Scenario::Tx1024 => {
            let n = if scenario == Scenario::Tx256 {
                256
            } else {
                1024
            };
            let o = tx_transaction(Design::Bufferless, cfg, &header, &payload(n), Some(sink))?;
            Ok(ScenarioReport {
                trace_rows: o.trace_rows,
                wire_octets: o.wire.len(),
                max_occupancy: o.max_tx_fifo,
            })
        }
        Scenario::Rx1024 => {
            let wire = frame_octets(&header, &payload(1024));
            let o = rx_run(
                Design::Bufferless,
                cfg,
                &wire,
                BUFFER_BYTES as u32,
                Some(sink),
            )?;
            Ok(ScenarioReport {
                trace_rows: o.trace_rows,
                wire_octets: wire.len(),
                max_occupancy: 0,
            })
        }
        Scenario::CdcStress => {
            let r = run_cdc_stress(cfg, 2_000, seed, Some(sink))?;
            if !r.in_order || r.received != r.items {
                return Err(SimError::protocol("cdc_stress", "items lost or reordered").into());
            }
            Ok(ScenarioReport {
                trace_rows: r.trace_rows,
                wire_octets: 0,
                max_occupancy: r.max_occupancy,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdcStressReport {
    pub items: u64,
    pub received: u64,
    pub in_order: bool,
    pub depth: usize,
    pub max_occupancy: usize,
    pub trace_rows: u64,
}

const WRITER: DomainId = DomainId(0);
const READER: DomainId = DomainId(1);

struct StressWorld {
    fifo: CdcFifo<u64>,
    write_rng: ChaCha8Rng,
    read_rng: ChaCha8Rng,
    items: u64,
    next: u64,
    received: u64,
    in_order: bool,
}

impl StressWorld {
    fn produce(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        // Bursty producer: long runs of writes with random pauses.
        if self.next < self.items && self.write_rng.gen_bool(0.7) && self.fifo.write_ready() {
            self.fifo.write(self.next, cx.domain())?;
            self.next += 1;
        }
        Ok(())
    }

    fn consume(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        if self.read_rng.gen_bool(0.25) {
            if let Some(v) = self.fifo.pop(cx.domain())? {
                self.in_order &= v == self.received;
                self.received += 1;
            }
        }
        Ok(())
    }
}

impl World for StressWorld {
    fn commit(&mut self, cx: &mut CommitContext) -> Result<(), SimError> {
        let (w, r) = (cx.fired(WRITER), cx.fired(READER));
        let c = self.fifo.clock(w, r);
        if c.wrote || c.read {
            let d = if c.wrote { WRITER } else { READER };
            cx.trace(d, "cdc", "occupancy", c.occupancy)?;
        }
        Ok(())
    }
}

/// Pushes `items` sequence numbers from the system domain to the Ethernet
/// domain through a CDC FIFO with random stalls on both sides.
pub fn run_cdc_stress(
    cfg: &ControllerConfig,
    items: u64,
    seed: u64,
    sink: Option<Box<dyn Write + Send>>,
) -> Result<CdcStressReport, SimError> {
    let world = StressWorld {
        fifo: CdcFifo::new("cdc", cfg.cdc_depth, cfg.sync_stages, WRITER, READER)?,
        write_rng: ChaCha8Rng::seed_from_u64(seed),
        read_rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED)),
        items,
        next: 0,
        received: 0,
        in_order: true,
    };
    let mut k = Kernel::new(world);
    k.add_domain(cfg.sys_clock()?)?;
    k.add_domain(ClockDomain::ethernet())?;
    k.register(Stage::boxed("producer", StressWorld::produce), WRITER)?;
    k.register(Stage::boxed("consumer", StressWorld::consume), READER)?;
    if let Some(s) = sink {
        k.set_trace_sink(s)?;
    }
    // Both sides average well under one item per edge; this leaves slack.
    let limit = SimTime::from_ps((items + 100) * 100 * cfg.sys_period_ps().max(8_000));
    let out = k.run_until(|k| k.world().received == items, limit)?;
    k.flush_trace()?;
    if out == RunOutcome::TimedOut {
        return Err(SimError::protocol(
            "cdc_stress",
            "run did not drain in time",
        ));
    }
    let w = k.world();
    Ok(CdcStressReport {
        items,
        received: w.received,
        in_order: w.in_order,
        depth: cfg.cdc_depth,
        max_occupancy: w.fifo.max_occupancy(),
        trace_rows: k.trace_rows(),
    })
}
