use std::collections::VecDeque;

use super::cpu::{cpu_tick, CpuPort, CpuState};
use super::shared::{
    add_domains, after_edge, commit_wire, record_tx_event, store_register, ETH, SYS,
};
use super::{fits_baseline_buffer, ControllerConfig, Probe, Stage, WireMode};
use crate::axis::{CdcFifo, StreamBeat, StreamChannel, TransferEvent};
use crate::error::SimError;
use crate::frame::FCS_LEN;
use crate::kernel::{CommitContext, Kernel, SimTime, TickContext, World};
use crate::mac::{
    FrameReport, MacRx, MacRxPort, MacTx, MacTxPort, TxEvent, TxLevel, Wire, WireSource,
    WireSourcePort,
};
use crate::soc::{decode, MemoryModel, RegEvent, RegisterFile, Target, BUFFER_BYTES};

/// Body bytes the baseline RX buffer keeps (the FCS shares the 1536 bytes).
const RX_BODY_CAPACITY: usize = BUFFER_BYTES - FCS_LEN;

/// The store-and-forward baseline: the CPU copies frames into and out of two
/// 1536-byte dual-port buffers through a bus window.
pub struct BufferedWorld {
    cfg: ControllerConfig,
    pub(crate) regs: RegisterFile,
    pub(crate) mem: MemoryModel,
    pub(crate) cpu: CpuState,
    staged_stores: Vec<(u64, Vec<u8>)>,
    tx_buf: Vec<u8>,
    rx_buf: Vec<u8>,
    start_fifo: CdcFifo<usize>,
    done_fifo: CdcFifo<bool>,
    report_fifo: CdcFifo<FrameReport>,
    /// Frame being streamed out of the TX buffer: (length, bytes sent).
    streaming: Option<(usize, usize)>,
    tx_narrow: StreamChannel,
    rx_narrow: StreamChannel,
    rx_fill: usize,
    rx_overflow: bool,
    mac_report: Option<FrameReport>,
    wire: Wire,
    pub(crate) feed: VecDeque<Option<u8>>,
    tx_level: TxLevel,
    pub(crate) probe: Probe,
}

impl BufferedWorld {
    pub fn new(cfg: &ControllerConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let stages = cfg.sync_stages;
        Ok(BufferedWorld {
            cfg: cfg.clone(),
            regs: RegisterFile::new(),
            mem: MemoryModel::new(cfg.mem_size, cfg.read_latency, cfg.write_latency)?,
            cpu: CpuState::default(),
            staged_stores: Vec::new(),
            tx_buf: vec![0; BUFFER_BYTES],
            rx_buf: vec![0; BUFFER_BYTES],
            start_fifo: CdcFifo::new("tx_start_cdc", 4, stages, SYS, ETH)?,
            done_fifo: CdcFifo::new("tx_done_cdc", 4, stages, ETH, SYS)?,
            report_fifo: CdcFifo::new("rx_report_cdc", 4, stages, ETH, SYS)?,
            streaming: None,
            tx_narrow: StreamChannel::new("tx_axis", 1)?,
            rx_narrow: StreamChannel::new("rx_axis", 1)?,
            rx_fill: 0,
            rx_overflow: false,
            mac_report: None,
            wire: Wire::new(),
            feed: VecDeque::new(),
            tx_level: TxLevel::default(),
            probe: Probe::default(),
        })
    }

    pub fn kernel(cfg: &ControllerConfig, mode: WireMode) -> Result<Kernel<Self>, SimError> {
        let mut k = Kernel::new(BufferedWorld::new(cfg)?);
        add_domains(&mut k, cfg)?;
        k.register(Stage::boxed("cpu", cpu_tick::<Self>), SYS)?;
        k.register(Stage::boxed("tx_buffer", Self::tx_buffer_tick), ETH)?;
        // The whole frame is resident before the MAC may start.
        k.register(Box::new(MacTx::new(1)), ETH)?;
        if mode != WireMode::TxOnly {
            k.register(Box::new(MacRx::new()), ETH)?;
            k.register(Stage::boxed("rx_buffer", Self::rx_buffer_tick), ETH)?;
        }
        if mode == WireMode::Feed {
            k.register(Box::new(WireSource), ETH)?;
        }
        Ok(k)
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn registers(&self) -> &RegisterFile {
        &self.regs
    }

    pub fn memory(&self) -> &MemoryModel {
        &self.mem
    }

    pub fn memory_mut(&mut self) -> &mut MemoryModel {
        &mut self.mem
    }

    pub fn probe(&self) -> &Probe {
        &self.probe
    }

    pub fn cpu_idle(&self) -> bool {
        self.cpu.idle()
    }

    fn tx_buffer_tick(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        if self.streaming.is_none() {
            if let Some(len) = self.start_fifo.pop(cx.domain())? {
                self.streaming = Some((len, 0));
                cx.trace("stream_start", len)?;
            }
        }
        if let Some((len, sent)) = self.streaming {
            if self.tx_narrow.can_drive() {
                let beat = StreamBeat::from_bytes(&self.tx_buf[sent..=sent], 1, sent + 1 == len)?;
                self.tx_narrow.drive(beat)?;
                self.streaming = if sent + 1 == len {
                    None
                } else {
                    Some((len, sent + 1))
                };
            }
        }
        Ok(())
    }

    fn rx_buffer_tick(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        if let Some(b) = self.rx_narrow.take() {
            if self.rx_fill < RX_BODY_CAPACITY {
                self.rx_buf[self.rx_fill] = b.bytes()[0];
                self.rx_fill += 1;
            } else {
                self.rx_overflow = true;
            }
            if b.last() {
                let mut rep = self.mac_report.take().ok_or_else(|| {
                    SimError::protocol("rx_buffer", "end of frame without a MAC report")
                })?;
                rep.overflow |= self.rx_overflow;
                self.report_fifo.write(rep, cx.domain())?;
                self.rx_fill = 0;
                self.rx_overflow = false;
            }
        }
        self.rx_narrow.set_ready();
        Ok(())
    }

    fn commit_sys(&mut self, cx: &mut CommitContext, edge: u64) -> Result<(), SimError> {
        for (addr, data) in std::mem::take(&mut self.staged_stores) {
            match decode(addr, data.len(), true)? {
                Target::Register(off) => {
                    let event = store_register(&mut self.regs, &mut self.probe, cx, off, &data)?;
                    if let Some(RegEvent::TxStart { len, .. }) = event {
                        let len = len as usize;
                        if fits_baseline_buffer(len) {
                            self.start_fifo.write(len, SYS)?;
                        } else {
                            let msg =
                                format!("TX_LEN {len} does not fit the {BUFFER_BYTES}-byte buffer");
                            cx.trace(SYS, "regs", "warning", &msg)?;
                            self.probe.warnings.push(msg);
                            self.regs.tx_complete(false);
                        }
                    }
                }
                Target::TxBuffer(off) => self.tx_buf[off..off + data.len()].copy_from_slice(&data),
                Target::RxBuffer(_) => {
                    let msg = format!("store to RX buffer window at {addr:#x} ignored");
                    cx.trace(SYS, "regs", "warning", &msg)?;
                    self.probe.warnings.push(msg);
                }
            }
        }
        if let Some(ok) = self.done_fifo.pop(SYS)? {
            self.regs.tx_complete(ok);
            self.probe.tx_done_edge = Some(edge);
        }
        if let Some(rep) = self.report_fifo.pop(SYS)? {
            if self.regs.rx_armed() {
                let cap = (self.regs.rx_buf_len() as usize).min(RX_BODY_CAPACITY);
                self.regs
                    .rx_complete(rep.len.min(cap), !rep.fcs_ok, rep.overflow || rep.len > cap);
                self.probe.rx_done_edge = Some(edge);
                self.probe.rx_report = Some(rep);
            } else {
                let msg = "frame received while RX was not armed".to_string();
                cx.trace(SYS, "regs", "warning", &msg)?;
                self.probe.warnings.push(msg);
            }
        }
        Ok(())
    }
}

impl World for BufferedWorld {
    fn commit(&mut self, cx: &mut CommitContext) -> Result<(), SimError> {
        let sys_edge = cx.edge_index(SYS);
        let eth_fired = cx.fired(ETH);
        if let Some(edge) = sys_edge {
            self.commit_sys(cx, edge)?;
        }
        if eth_fired {
            if let TransferEvent::Transferred(b) = self.tx_narrow.commit()? {
                cx.trace(
                    ETH,
                    "tx_axis",
                    "transfer",
                    format_args!("{:02x}", b.bytes()[0]),
                )?;
            }
            if let TransferEvent::Transferred(b) = self.rx_narrow.commit()? {
                cx.trace(
                    ETH,
                    "rx_axis",
                    "transfer",
                    format_args!("{:02x}", b.bytes()[0]),
                )?;
            }
            commit_wire(&mut self.wire, &mut self.probe, cx)?;
        }
        let sys_fired = sys_edge.is_some();
        self.start_fifo.clock(sys_fired, eth_fired);
        self.done_fifo.clock(eth_fired, sys_fired);
        self.report_fifo.clock(eth_fired, sys_fired);
        let mut level = TxLevel::default();
        if let Some((len, sent)) = self.streaming {
            level = TxLevel {
                bytes: len - sent,
                has_last: true,
            };
        }
        for b in [self.tx_narrow.pending(), self.tx_narrow.delivered()]
            .into_iter()
            .flatten()
        {
            level.bytes += b.len();
            level.has_last |= b.last();
        }
        self.tx_level = level;
        Ok(())
    }
}

impl CpuPort for BufferedWorld {
    fn cpu(&mut self) -> &mut CpuState {
        &mut self.cpu
    }

    fn copy_overhead(&self) -> u32 {
        self.cfg.copy_overhead
    }

    fn memory(&mut self) -> &mut MemoryModel {
        &mut self.mem
    }

    fn registers(&self) -> &RegisterFile {
        &self.regs
    }

    fn probe_mut(&mut self) -> &mut Probe {
        &mut self.probe
    }

    fn device_store(&mut self, addr: u64, data: Vec<u8>) -> Result<(), SimError> {
        decode(addr, data.len(), true)?;
        self.staged_stores.push((addr, data));
        Ok(())
    }

    fn device_load(&self, addr: u64, len: usize) -> Result<Vec<u8>, SimError> {
        Ok(match decode(addr, len, true)? {
            Target::Register(off) => self.regs.read(off)?.to_le_bytes()[..len.min(4)].to_vec(),
            Target::TxBuffer(off) => self.tx_buf[off..off + len].to_vec(),
            Target::RxBuffer(off) => self.rx_buf[off..off + len].to_vec(),
        })
    }
}

impl MacTxPort for BufferedWorld {
    fn tx_level(&self) -> TxLevel {
        self.tx_level
    }

    fn tx_input(&mut self) -> &mut StreamChannel {
        &mut self.tx_narrow
    }

    fn tx_wire(&mut self) -> &mut Wire {
        &mut self.wire
    }

    fn tx_event(&mut self, event: TxEvent, time: SimTime) -> Result<(), SimError> {
        record_tx_event(&mut self.probe, event, time);
        if let TxEvent::FcsEnd { ok } = event {
            self.done_fifo.write(ok, ETH)?;
        }
        Ok(())
    }
}

impl MacRxPort for BufferedWorld {
    fn rx_line(&self) -> Option<u8> {
        self.wire.line()
    }

    fn rx_output(&mut self) -> &mut StreamChannel {
        &mut self.rx_narrow
    }

    fn rx_report(&mut self, report: FrameReport, _time: SimTime) -> Result<(), SimError> {
        self.mac_report = Some(report);
        Ok(())
    }
}

impl WireSourcePort for BufferedWorld {
    fn next_feed(&mut self, now: SimTime) -> Option<Option<u8>> {
        if !after_edge(self.probe.config_end, self.cfg.sys_period_ps(), now) {
            return Some(None);
        }
        self.feed.pop_front()
    }

    fn feed_wire(&mut self) -> &mut Wire {
        &mut self.wire
    }
}
