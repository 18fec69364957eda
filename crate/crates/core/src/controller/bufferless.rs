use std::collections::VecDeque;

use super::cpu::{cpu_tick, CpuPort, CpuState};
use super::shared::{
    add_domains, after_edge, commit_wire, record_tx_event, store_register, trace_fifo, ETH, SYS,
};
use super::{ControllerConfig, Probe, Stage, WireMode};
use crate::axis::{CdcFifo, Downsizer, StreamBeat, StreamChannel, TransferEvent, Upsizer};
use crate::dma::{Direction, DmaConfig, DmaEngine, DmaStatus, TransferRequest};
use crate::error::SimError;
use crate::kernel::{CommitContext, Kernel, SimTime, TickContext, World};
use crate::mac::{
    FrameReport, MacRx, MacRxPort, MacTx, MacTxPort, TxEvent, TxLevel, Wire, WireSource,
    WireSourcePort,
};
use crate::soc::{decode, MemoryModel, RegEvent, RegisterFile, Target};

/// The DMA-based controller: memory reaches the MAC through the DMA, a
/// CDC FIFO and a width converter, with no packet-sized storage anywhere.
pub struct BufferlessWorld {
    cfg: ControllerConfig,
    pub(crate) regs: RegisterFile,
    pub(crate) mem: MemoryModel,
    pub(crate) cpu: CpuState,
    staged_stores: Vec<(u64, Vec<u8>)>,
    dma: DmaEngine,
    dma_done: Vec<DmaStatus>,
    rx_dma: Option<DmaStatus>,
    rx_report: Option<FrameReport>,
    next_id: u32,
    tx_fifo: CdcFifo<StreamBeat>,
    rx_fifo: CdcFifo<StreamBeat>,
    report_fifo: CdcFifo<FrameReport>,
    done_fifo: CdcFifo<bool>,
    downsizer: Downsizer,
    tx_narrow: StreamChannel,
    upsizer: Upsizer,
    rx_narrow: StreamChannel,
    wire: Wire,
    pub(crate) feed: VecDeque<Option<u8>>,
    tx_level: TxLevel,
    pub(crate) probe: Probe,
}

impl BufferlessWorld {
    pub fn new(cfg: &ControllerConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let w = cfg.bus_width;
        let depth = cfg.cdc_depth;
        let stages = cfg.sync_stages;
        Ok(BufferlessWorld {
            cfg: cfg.clone(),
            regs: RegisterFile::new(),
            mem: MemoryModel::new(cfg.mem_size, cfg.read_latency, cfg.write_latency)?,
            cpu: CpuState::default(),
            staged_stores: Vec::new(),
            dma: DmaEngine::new(DmaConfig {
                bus_width: w,
                max_burst: cfg.max_burst,
                setup_cycles: cfg.dma_setup,
            })?,
            dma_done: Vec::new(),
            rx_dma: None,
            rx_report: None,
            next_id: 0,
            tx_fifo: CdcFifo::new("tx_cdc", depth, stages, SYS, ETH)?,
            rx_fifo: CdcFifo::new("rx_cdc", depth, stages, ETH, SYS)?,
            report_fifo: CdcFifo::new("rx_report_cdc", 4, stages, ETH, SYS)?,
            done_fifo: CdcFifo::new("tx_done_cdc", 4, stages, ETH, SYS)?,
            downsizer: Downsizer::new(w, 1)?,
            tx_narrow: StreamChannel::new("tx_axis", 1)?,
            upsizer: Upsizer::new(1, w)?,
            rx_narrow: StreamChannel::new("rx_axis", 1)?,
            wire: Wire::new(),
            feed: VecDeque::new(),
            tx_level: TxLevel::default(),
            probe: Probe::default(),
        })
    }

    /// Builds a kernel with the components `mode` calls for.
    pub fn kernel(cfg: &ControllerConfig, mode: WireMode) -> Result<Kernel<Self>, SimError> {
        let mut k = Kernel::new(BufferlessWorld::new(cfg)?);
        add_domains(&mut k, cfg)?;
        k.register(Stage::boxed("cpu", cpu_tick::<Self>), SYS)?;
        k.register(Stage::boxed("dma", Self::dma_tick), SYS)?;
        k.register(Stage::boxed("tx_sizer", Self::tx_sizer_tick), ETH)?;
        k.register(Box::new(MacTx::new(cfg.threshold)), ETH)?;
        if mode != WireMode::TxOnly {
            k.register(Box::new(MacRx::new()), ETH)?;
            k.register(Stage::boxed("rx_sizer", Self::rx_sizer_tick), ETH)?;
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

    pub fn dma(&self) -> &DmaEngine {
        &self.dma
    }

    pub fn tx_fifo(&self) -> &CdcFifo<StreamBeat> {
        &self.tx_fifo
    }

    pub fn rx_fifo(&self) -> &CdcFifo<StreamBeat> {
        &self.rx_fifo
    }

    fn dma_tick(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        let done = self.dma.tick(
            cx.edge_index(),
            &mut self.mem,
            &mut self.tx_fifo,
            &mut self.rx_fifo,
            cx.domain(),
        )?;
        self.dma_done.extend(done);
        Ok(())
    }

    fn tx_sizer_tick(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        if !self.tx_narrow.can_drive() {
            return Ok(());
        }
        let beat = match self.downsizer.pop() {
            Some(b) => Some(b),
            None => match self.tx_fifo.pop(cx.domain())? {
                Some(wide) => {
                    self.downsizer.push(wide)?;
                    self.downsizer.pop()
                }
                None => None,
            },
        };
        if let Some(b) = beat {
            self.tx_narrow.drive(b)?;
        }
        Ok(())
    }

    fn rx_sizer_tick(&mut self, cx: &mut TickContext) -> Result<(), SimError> {
        if self.upsizer.peek().is_some() && self.rx_fifo.write_ready() {
            let beat = self.upsizer.pop().expect("peeked");
            self.rx_fifo.write(beat, cx.domain())?;
        }
        if let Some(b) = self.rx_narrow.take() {
            self.upsizer.push(b)?;
        }
        if self.upsizer.can_accept() {
            self.rx_narrow.set_ready();
        }
        Ok(())
    }

    fn submit(&mut self, direction: Direction, addr: u64, len: u32) -> Result<(), SimError> {
        self.next_id += 1;
        let req = TransferRequest::new(self.next_id, direction, addr, u64::from(len))?;
        self.dma.submit(req, &self.mem)?;
        Ok(())
    }

    fn commit_sys(&mut self, cx: &mut CommitContext, edge: u64) -> Result<(), SimError> {
        for (addr, data) in std::mem::take(&mut self.staged_stores) {
            let Target::Register(off) = decode(addr, data.len(), false)? else {
                unreachable!("decode without buffer windows only yields registers")
            };
            match store_register(&mut self.regs, &mut self.probe, cx, off, &data)? {
                Some(RegEvent::TxStart { src, len }) => {
                    self.submit(Direction::MemToStream, src, len)?
                }
                Some(RegEvent::RxArm { dst, len }) => {
                    self.submit(Direction::StreamToMem, dst, len)?
                }
                _ => {}
            }
        }
        for st in std::mem::take(&mut self.dma_done) {
            cx.trace(
                SYS,
                "dma",
                "done",
                format_args!("{:?}:{}", st.direction, st.bytes_moved),
            )?;
            if st.direction == Direction::StreamToMem {
                self.rx_dma = Some(st);
            }
        }
        if let Some(ok) = self.done_fifo.pop(SYS)? {
            self.regs.tx_complete(ok);
            self.probe.tx_done_edge = Some(edge);
        }
        if let Some(rep) = self.report_fifo.pop(SYS)? {
            self.rx_report = Some(rep);
        }
        if self.rx_dma.is_some() && self.rx_report.is_some() {
            let st = self.rx_dma.take().expect("checked");
            let rep = self.rx_report.take().expect("checked");
            self.regs.rx_complete(
                st.bytes_moved as usize,
                !rep.fcs_ok,
                rep.overflow || st.overflow(),
            );
            self.probe.rx_done_edge = Some(edge);
            self.probe.rx_report = Some(rep);
        }
        Ok(())
    }

    fn in_flight(&self) -> usize {
        let w = self.cfg.bus_width;
        let ch = |c: &StreamChannel| {
            c.pending().map_or(0, StreamBeat::len) + c.delivered().map_or(0, StreamBeat::len)
        };
        self.dma.staged_bytes()
            + (self.tx_fifo.occupancy() + self.rx_fifo.occupancy()) * w
            + self.downsizer.held_bytes()
            + self.upsizer.held_bytes()
            + ch(&self.tx_narrow)
            + ch(&self.rx_narrow)
    }

    fn update_tx_level(&mut self) {
        let mut level = TxLevel::default();
        for b in self.tx_fifo.visible() {
            level.bytes += b.len();
            level.has_last |= b.last();
        }
        level.bytes += self.downsizer.held_bytes();
        level.has_last |= self.downsizer.holds_last();
        for b in [self.tx_narrow.pending(), self.tx_narrow.delivered()]
            .into_iter()
            .flatten()
        {
            level.bytes += b.len();
            level.has_last |= b.last();
        }
        self.tx_level = level;
    }
}

impl World for BufferlessWorld {
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
        let c = self.tx_fifo.clock(sys_fired, eth_fired);
        trace_fifo(cx, SYS, "tx_cdc", c)?;
        let c = self.rx_fifo.clock(eth_fired, sys_fired);
        trace_fifo(cx, ETH, "rx_cdc", c)?;
        self.report_fifo.clock(eth_fired, sys_fired);
        self.done_fifo.clock(eth_fired, sys_fired);
        self.probe.max_tx_fifo = self.tx_fifo.max_occupancy();
        self.probe.max_rx_fifo = self.rx_fifo.max_occupancy();
        self.probe.max_in_flight = self.probe.max_in_flight.max(self.in_flight());
        self.update_tx_level();
        Ok(())
    }
}

impl CpuPort for BufferlessWorld {
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
        decode(addr, data.len(), false)?;
        self.staged_stores.push((addr, data));
        Ok(())
    }

    fn device_load(&self, addr: u64, len: usize) -> Result<Vec<u8>, SimError> {
        let Target::Register(off) = decode(addr, len, false)? else {
            unreachable!()
        };
        Ok(self.regs.read(off)?.to_le_bytes()[..len.min(4)].to_vec())
    }
}

impl MacTxPort for BufferlessWorld {
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

impl MacRxPort for BufferlessWorld {
    fn rx_line(&self) -> Option<u8> {
        self.wire.line()
    }

    fn rx_output(&mut self) -> &mut StreamChannel {
        &mut self.rx_narrow
    }

    fn rx_report(&mut self, report: FrameReport, _time: SimTime) -> Result<(), SimError> {
        self.report_fifo.write(report, ETH)?;
        Ok(())
    }
}

impl WireSourcePort for BufferlessWorld {
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
