use std::collections::VecDeque;

use super::Probe;
use crate::error::SimError;
use crate::kernel::TickContext;
use crate::soc::{MemoryModel, RegisterFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    ConfigEnd,
    CopyEnd,
}

/// One step of the scripted driver.
///
/// Costs in system cycles, with `O` the per-store bus overhead:
/// register store `1 + O`; copying a word into the device
/// `read_latency + 1 + O`; copying a word out `1 + O + write_latency`.
/// Waits and marks take no time of their own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CpuOp {
    Store {
        addr: u64,
        value: u32,
    },
    CopyIn {
        mem_addr: u64,
        dev_addr: u64,
        len: usize,
    },
    CopyOut {
        dev_addr: u64,
        mem_addr: u64,
        len: usize,
    },
    /// Expands into word-sized `CopyOut`s covering the received length, as
    /// read from RX_STATUS once the frame is in.
    CopyRxFrame {
        dev_addr: u64,
        mem_addr: u64,
        word: usize,
    },
    WaitTxIdle,
    WaitRxDone,
    Mark(Mark),
}

impl CpuOp {
    fn cost(&self, overhead: u32, read_latency: u32, write_latency: u32) -> Option<u64> {
        let o = u64::from(overhead);
        match self {
            CpuOp::Store { .. } => Some(1 + o),
            CpuOp::CopyIn { .. } => Some(u64::from(read_latency) + 1 + o),
            CpuOp::CopyOut { .. } => Some(1 + o + u64::from(write_latency)),
            _ => None,
        }
    }
}

#[derive(Debug, Default)]
pub(crate) struct CpuState {
    pub queue: VecDeque<CpuOp>,
    /// Op in progress with its total cost and cycles left.
    current: Option<(CpuOp, u64, u64)>,
}

impl CpuState {
    pub fn idle(&self) -> bool {
        self.queue.is_empty() && self.current.is_none()
    }
}

pub(crate) trait CpuPort {
    fn cpu(&mut self) -> &mut CpuState;
    fn copy_overhead(&self) -> u32;
    fn memory(&mut self) -> &mut MemoryModel;
    fn registers(&self) -> &RegisterFile;
    fn probe_mut(&mut self) -> &mut Probe;
    /// Device store; lands when the system domain commits.
    fn device_store(&mut self, addr: u64, data: Vec<u8>) -> Result<(), SimError>;
    fn device_load(&self, addr: u64, len: usize) -> Result<Vec<u8>, SimError>;
}

fn complete<W: CpuPort>(world: &mut W, op: CpuOp, cost: u64) -> Result<(), SimError> {
    match op {
        CpuOp::Store { addr, value } => world.device_store(addr, value.to_le_bytes().to_vec()),
        CpuOp::CopyIn {
            mem_addr,
            dev_addr,
            len,
        } => {
            let data = world.memory().read(mem_addr, len)?.to_vec();
            world.probe_mut().copy_cycles += cost;
            world.device_store(dev_addr, data)
        }
        CpuOp::CopyOut {
            dev_addr,
            mem_addr,
            len,
        } => {
            let data = world.device_load(dev_addr, len)?;
            world.probe_mut().copy_cycles += cost;
            world.memory().write(mem_addr, &data)?;
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Runs marks and satisfied waits at the head of the queue.
fn drain_free_ops<W: CpuPort>(world: &mut W, edge: u64) {
    while let Some(op) = world.cpu().queue.front().cloned() {
        let go = match op {
            CpuOp::Mark(m) => {
                let p = world.probe_mut();
                match m {
                    Mark::ConfigEnd => p.config_end = Some(edge),
                    Mark::CopyEnd => p.copy_end = Some(edge),
                }
                true
            }
            CpuOp::WaitTxIdle => !world.registers().tx_busy(),
            CpuOp::WaitRxDone => world.registers().rx_done(),
            CpuOp::CopyRxFrame {
                dev_addr,
                mem_addr,
                word,
            } => {
                let len = world.registers().rx_len();
                world.cpu().queue.pop_front();
                for off in (0..len).step_by(word).rev() {
                    let n = word.min(len - off);
                    let op = CpuOp::CopyOut {
                        dev_addr: dev_addr + off as u64,
                        mem_addr: mem_addr + off as u64,
                        len: n,
                    };
                    world.cpu().queue.push_front(op);
                }
                continue;
            }
            _ => false,
        };
        if !go {
            return;
        }
        world.cpu().queue.pop_front();
    }
}

/// System-domain tick of the driver CPU.
pub(crate) fn cpu_tick<W: CpuPort>(world: &mut W, ctx: &mut TickContext) -> Result<(), SimError> {
    let edge = ctx.edge_index();
    if world.cpu().current.is_none() {
        drain_free_ops(world, edge);
        let overhead = world.copy_overhead();
        let (rl, wl) = (
            world.memory().read_latency(),
            world.memory().write_latency(),
        );
        let cost = world
            .cpu()
            .queue
            .front()
            .and_then(|op| op.cost(overhead, rl, wl));
        let Some(cost) = cost else { return Ok(()) };
        let op = world.cpu().queue.pop_front().expect("front exists");
        world.cpu().current = Some((op, cost, cost));
    }
    let (op, cost, left) = world.cpu().current.take().expect("an op is in progress");
    if left > 1 {
        world.cpu().current = Some((op, cost, left - 1));
        return Ok(());
    }
    complete(world, op, cost)?;
    drain_free_ops(world, edge);
    Ok(())
}
