//! Scripted driver runs: one transaction from the CPU's first register store
//! to the last cycle it has to wait for.

use std::io::Write;

use super::cpu::{CpuOp, CpuPort, Mark};
use super::{
    buffered_frame_octets, fits_baseline_buffer, BufferedWorld, BufferlessWorld, ControllerConfig,
    Design, PhaseLatencies, Probe, TransactionError, WireMode,
};
use crate::error::SimError;
use crate::frame::{padded_body, FrameHeader, FCS_LEN};
use crate::kernel::{Kernel, RunOutcome, SimTime, World, ETH_PERIOD_PS};
use crate::mac::FrameReport;
use crate::soc::{
    irq, offsets, rx_status, MemoryModel, RegisterFile, BUFFER_BYTES, RX_WINDOW_BASE,
    TX_WINDOW_BASE,
};

pub const DEFAULT_TX_ADDR: u64 = 0x1_0000;
pub const DEFAULT_RX_ADDR: u64 = 0x4_0000;

/// What the runners need from either controller.
pub(crate) trait ControllerWorld: World + CpuPort + Sized + 'static {
    fn build(cfg: &ControllerConfig, mode: WireMode) -> Result<Kernel<Self>, SimError>;
    fn parts(
        &mut self,
    ) -> (
        &mut MemoryModel,
        &mut std::collections::VecDeque<Option<u8>>,
    );
    fn regs(&self) -> &RegisterFile;
    fn probe_ref(&self) -> &Probe;
    fn idle_cpu(&self) -> bool;
}

macro_rules! controller_world {
    ($t:ty) => {
        impl ControllerWorld for $t {
            fn build(cfg: &ControllerConfig, mode: WireMode) -> Result<Kernel<Self>, SimError> {
                <$t>::kernel(cfg, mode)
            }
            fn parts(
                &mut self,
            ) -> (
                &mut MemoryModel,
                &mut std::collections::VecDeque<Option<u8>>,
            ) {
                (&mut self.mem, &mut self.feed)
            }
            fn regs(&self) -> &RegisterFile {
                &self.regs
            }
            fn probe_ref(&self) -> &Probe {
                &self.probe
            }
            fn idle_cpu(&self) -> bool {
                self.cpu.idle()
            }
        }
    };
}

controller_world!(BufferedWorld);
controller_world!(BufferlessWorld);

#[derive(Debug, Clone)]
pub struct TxOutcome {
    pub design: Design,
    pub phases: PhaseLatencies,
    /// Non-idle wire octets, preamble through FCS.
    pub wire: Vec<u8>,
    pub max_tx_fifo: usize,
    pub max_in_flight: usize,
    pub warnings: Vec<String>,
    pub trace_rows: u64,
}

#[derive(Debug, Clone)]
pub struct RxOutcome {
    pub design: Design,
    pub phases: PhaseLatencies,
    /// Bytes the driver ends up with in memory.
    pub delivered: Vec<u8>,
    pub report: FrameReport,
    pub rx_status: u32,
    pub irq_status: u32,
    pub warnings: Vec<String>,
    pub trace_rows: u64,
}

impl RxOutcome {
    pub fn fcs_error(&self) -> bool {
        self.rx_status & rx_status::FCS_ERR != 0
    }

    pub fn overflow(&self) -> bool {
        self.rx_status & rx_status::OVERFLOW != 0
    }
}

#[derive(Debug, Clone)]
pub struct LoopbackOutcome {
    /// Padded frame body as the receiver should see it.
    pub expected: Vec<u8>,
    pub delivered: Vec<u8>,
    pub fcs_ok: bool,
    pub underrun: Option<usize>,
    pub overflow: bool,
    pub max_in_flight: usize,
}

impl LoopbackOutcome {
    pub fn passed(&self) -> bool {
        self.fcs_ok && self.underrun.is_none() && !self.overflow && self.delivered == self.expected
    }
}

fn store(offset: u32, value: u32) -> CpuOp {
    CpuOp::Store {
        addr: u64::from(offset),
        value,
    }
}

fn prologue(cfg: &ControllerConfig) -> Vec<CpuOp> {
    let (lo, hi) = cfg.mac.to_registers();
    vec![
        store(offsets::MAC_LO, lo),
        store(offsets::MAC_HI, hi),
        store(offsets::IRQ_EN, irq::ALL),
    ]
}

fn tx_ops(design: Design, cfg: &ControllerConfig, src: u64, len: usize) -> Vec<CpuOp> {
    let mut ops = Vec::new();
    match design {
        Design::Bufferless => {
            ops.push(store(offsets::TX_SRC_LO, src as u32));
            ops.push(store(offsets::TX_SRC_HI, (src >> 32) as u32));
        }
        Design::Buffered => {
            let w = cfg.bus_width;
            for off in (0..len).step_by(w) {
                ops.push(CpuOp::CopyIn {
                    mem_addr: src + off as u64,
                    dev_addr: TX_WINDOW_BASE + off as u64,
                    len: w.min(len - off),
                });
            }
            ops.push(CpuOp::Mark(Mark::CopyEnd));
        }
    }
    ops.push(store(offsets::TX_LEN, len as u32));
    ops.push(store(offsets::TX_START, 1));
    ops
}

fn rx_arm_ops(design: Design, dst: u64, capacity: u32) -> Vec<CpuOp> {
    let mut ops = Vec::new();
    if design == Design::Bufferless {
        ops.push(store(offsets::RX_DST_LO, dst as u32));
        ops.push(store(offsets::RX_DST_HI, (dst >> 32) as u32));
    }
    ops.push(store(offsets::RX_BUF_LEN, capacity));
    ops
}

fn rx_collect_ops(design: Design, cfg: &ControllerConfig, dst: u64) -> Vec<CpuOp> {
    let mut ops = vec![CpuOp::WaitRxDone];
    if design == Design::Buffered {
        ops.push(CpuOp::CopyRxFrame {
            dev_addr: RX_WINDOW_BASE,
            mem_addr: dst,
            word: cfg.bus_width,
        });
        ops.push(CpuOp::Mark(Mark::CopyEnd));
    }
    ops
}

/// Generous simulated-time limit for a transaction moving `bytes` bytes.
fn budget(cfg: &ControllerConfig, kernel_now: SimTime, bytes: usize) -> SimTime {
    let words = bytes.div_ceil(cfg.bus_width) as u64 + 1;
    let per_word = 2 + u64::from(cfg.copy_overhead + cfg.read_latency + cfg.write_latency);
    let sys = (64 + u64::from(cfg.dma_setup) + 2 * words * per_word) * cfg.sys_period_ps();
    let eth = (bytes as u64 + 256) * ETH_PERIOD_PS;
    SimTime::from_ps(kernel_now.as_ps() + 4 * (sys + eth) + 1_000_000)
}

fn run<W: ControllerWorld>(
    kernel: &mut Kernel<W>,
    limit: SimTime,
    done: impl Fn(&W) -> bool,
) -> Result<(), TransactionError> {
    let out = kernel.run_until(|k| done(k.world()), limit)?;
    kernel.flush_trace()?;
    match out {
        RunOutcome::Satisfied => Ok(()),
        RunOutcome::TimedOut => Err(TransactionError::Timeout(limit.as_ps())),
    }
}

fn prepare<W: ControllerWorld>(
    cfg: &ControllerConfig,
    mode: WireMode,
    trace: Option<Box<dyn Write + Send>>,
) -> Result<Kernel<W>, SimError> {
    let mut k = W::build(cfg, mode)?;
    if let Some(sink) = trace {
        k.set_trace_sink(sink)?;
    }
    Ok(k)
}

fn missing(what: &str) -> TransactionError {
    TransactionError::Sim(SimError::protocol(
        "runner",
        format!("transaction finished without {what}"),
    ))
}

/// Transmits one frame built from `header` and `payload` (no MTU cap, so
/// oversize frames can be tried) and splits its latency into phases.
pub fn tx_transaction(
    design: Design,
    cfg: &ControllerConfig,
    header: &FrameHeader,
    payload: &[u8],
    trace: Option<Box<dyn Write + Send>>,
) -> Result<TxOutcome, TransactionError> {
    let mut body = header.to_bytes().to_vec();
    body.extend_from_slice(payload);
    if design == Design::Buffered && !fits_baseline_buffer(body.len()) {
        return Err(TransactionError::BufferOverflow {
            frame_octets: buffered_frame_octets(body.len()),
            capacity: BUFFER_BYTES,
        });
    }
    match design {
        Design::Buffered => tx_run::<BufferedWorld>(design, cfg, &body, trace),
        Design::Bufferless => tx_run::<BufferlessWorld>(design, cfg, &body, trace),
    }
}

fn tx_run<W: ControllerWorld>(
    design: Design,
    cfg: &ControllerConfig,
    body: &[u8],
    trace: Option<Box<dyn Write + Send>>,
) -> Result<TxOutcome, TransactionError> {
    let mut k = prepare::<W>(cfg, WireMode::TxOnly, trace)?;
    k.world_mut().parts().0.write(DEFAULT_TX_ADDR, body)?;
    let mut ops = prologue(cfg);
    ops.extend(tx_ops(design, cfg, DEFAULT_TX_ADDR, body.len()));
    ops.push(CpuOp::Mark(Mark::ConfigEnd));
    ops.push(CpuOp::WaitTxIdle);
    k.world_mut().cpu().queue.extend(ops);
    let limit = budget(cfg, k.now(), body.len());
    run(&mut k, limit, |w| {
        w.probe_ref().tx_done_edge.is_some() && w.idle_cpu()
    })?;

    let p = k.world().probe_ref();
    if let Some(after_body_octets) = p.underrun {
        return Err(TransactionError::Underrun { after_body_octets });
    }
    let clk = cfg.sys_clock()?;
    let ceil = |t: Option<SimTime>, what| {
        t.map(|t| clk.edge_at_or_after(t))
            .ok_or_else(|| missing(what))
    };
    let config_end = p
        .config_end
        .ok_or_else(|| missing("a configuration mark"))?;
    let mut phases = PhaseLatencies::from_boundaries(
        config_end,
        ceil(p.tx_sfd, "an SFD")?,
        ceil(p.tx_body_end, "a body end")?,
        ceil(p.tx_fcs_end, "an FCS")?,
    )?;
    if cfg.copy_as_payload_phase {
        phases.config -= p.copy_cycles;
        phases.payload += p.copy_cycles;
    }
    Ok(TxOutcome {
        design,
        phases,
        wire: p.wire.clone(),
        max_tx_fifo: p.max_tx_fifo,
        max_in_flight: p.max_in_flight,
        warnings: p.warnings.clone(),
        trace_rows: k.trace_rows(),
    })
}

/// Receives the scripted `wire` octets into a buffer of `capacity` bytes
/// and reports what happened, including FCS and overflow failures.
pub fn rx_run(
    design: Design,
    cfg: &ControllerConfig,
    wire: &[u8],
    capacity: u32,
    trace: Option<Box<dyn Write + Send>>,
) -> Result<RxOutcome, TransactionError> {
    match design {
        Design::Buffered => rx_run_in::<BufferedWorld>(design, cfg, wire, capacity, trace),
        Design::Bufferless => rx_run_in::<BufferlessWorld>(design, cfg, wire, capacity, trace),
    }
}

fn rx_run_in<W: ControllerWorld>(
    design: Design,
    cfg: &ControllerConfig,
    wire: &[u8],
    capacity: u32,
    trace: Option<Box<dyn Write + Send>>,
) -> Result<RxOutcome, TransactionError> {
    let mut k = prepare::<W>(cfg, WireMode::Feed, trace)?;
    k.world_mut()
        .parts()
        .1
        .extend(wire.iter().map(|&o| Some(o)));
    let mut ops = prologue(cfg);
    ops.extend(rx_arm_ops(design, DEFAULT_RX_ADDR, capacity));
    ops.push(CpuOp::Mark(Mark::ConfigEnd));
    ops.extend(rx_collect_ops(design, cfg, DEFAULT_RX_ADDR));
    k.world_mut().cpu().queue.extend(ops);
    let limit = budget(cfg, k.now(), wire.len());
    run(&mut k, limit, |w| {
        w.probe_ref().rx_done_edge.is_some() && w.idle_cpu()
    })?;

    let w = k.world_mut();
    let len = w.regs().rx_len();
    let delivered = w.parts().0.read(DEFAULT_RX_ADDR, len)?.to_vec();
    let p = w.probe_ref();
    let report = p.rx_report.ok_or_else(|| missing("a receive report"))?;
    let clk = cfg.sys_clock()?;
    let config_end = p
        .config_end
        .ok_or_else(|| missing("a configuration mark"))?;
    let fcs_end = clk.edge_at_or_after(report.fcs_end_time);
    let handoff = match design {
        Design::Bufferless => p.rx_done_edge,
        Design::Buffered => p.copy_end,
    }
    .ok_or_else(|| missing("a completion edge"))?;
    let mut phases = PhaseLatencies::from_boundaries(
        config_end,
        clk.edge_at_or_after(report.sfd_time),
        clk.edge_at_or_after(report.body_end_time),
        fcs_end.max(handoff),
    )?;
    if cfg.copy_as_payload_phase {
        phases.crc -= p.copy_cycles;
        phases.payload += p.copy_cycles;
    }
    Ok(RxOutcome {
        design,
        phases,
        delivered,
        report,
        rx_status: w.regs().read(offsets::RX_STATUS)?,
        irq_status: w.regs().irq_status(),
        warnings: p.warnings.clone(),
        trace_rows: k.trace_rows(),
    })
}

/// Like [`rx_run`] but turns FCS and overflow failures into errors.
pub fn rx_transaction(
    design: Design,
    cfg: &ControllerConfig,
    wire: &[u8],
    capacity: u32,
    trace: Option<Box<dyn Write + Send>>,
) -> Result<RxOutcome, TransactionError> {
    let out = rx_run(design, cfg, wire, capacity, trace)?;
    if out.overflow() {
        return Err(TransactionError::RxOverflow {
            len: out.report.len,
            capacity: (capacity as usize).min(match design {
                Design::Buffered => BUFFER_BYTES - FCS_LEN,
                Design::Bufferless => usize::MAX,
            }),
        });
    }
    if out.fcs_error() {
        return Err(TransactionError::FcsError);
    }
    Ok(out)
}

/// Sends one frame from `tx_addr` and receives it at `rx_addr` through the
/// controller's own wire.
pub fn loopback_frame(
    design: Design,
    cfg: &ControllerConfig,
    header: &FrameHeader,
    payload: &[u8],
    tx_addr: u64,
    rx_addr: u64,
) -> Result<LoopbackOutcome, TransactionError> {
    match design {
        Design::Buffered => {
            loopback_in::<BufferedWorld>(design, cfg, header, payload, tx_addr, rx_addr)
        }
        Design::Bufferless => {
            loopback_in::<BufferlessWorld>(design, cfg, header, payload, tx_addr, rx_addr)
        }
    }
}

fn loopback_in<W: ControllerWorld>(
    design: Design,
    cfg: &ControllerConfig,
    header: &FrameHeader,
    payload: &[u8],
    tx_addr: u64,
    rx_addr: u64,
) -> Result<LoopbackOutcome, TransactionError> {
    let mut body = header.to_bytes().to_vec();
    body.extend_from_slice(payload);
    if design == Design::Buffered && !fits_baseline_buffer(body.len()) {
        return Err(TransactionError::BufferOverflow {
            frame_octets: buffered_frame_octets(body.len()),
            capacity: BUFFER_BYTES,
        });
    }
    let mut k = prepare::<W>(cfg, WireMode::Loopback, None)?;
    k.world_mut().parts().0.write(tx_addr, &body)?;
    let mut ops = prologue(cfg);
    ops.extend(rx_arm_ops(design, rx_addr, BUFFER_BYTES as u32));
    ops.extend(tx_ops(design, cfg, tx_addr, body.len()));
    ops.push(CpuOp::Mark(Mark::ConfigEnd));
    ops.push(CpuOp::WaitTxIdle);
    ops.extend(rx_collect_ops(design, cfg, rx_addr));
    k.world_mut().cpu().queue.extend(ops);
    let limit = budget(cfg, k.now(), 2 * body.len());
    run(&mut k, limit, |w| {
        let p = w.probe_ref();
        p.tx_done_edge.is_some() && p.rx_done_edge.is_some() && w.idle_cpu()
    })?;

    let w = k.world_mut();
    let len = w.regs().rx_len();
    let status = w.regs().read(offsets::RX_STATUS)?;
    let delivered = w.parts().0.read(rx_addr, len)?.to_vec();
    let p = w.probe_ref();
    Ok(LoopbackOutcome {
        expected: padded_body(header, payload),
        delivered,
        fcs_ok: status & rx_status::FCS_ERR == 0,
        underrun: p.underrun,
        overflow: status & rx_status::OVERFLOW != 0,
        max_in_flight: p.max_in_flight,
    })
}
