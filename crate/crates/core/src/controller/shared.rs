//! Plumbing common to both controller worlds.

use super::{ControllerConfig, Probe};
use crate::axis::CdcClock;
use crate::error::SimError;
use crate::kernel::{ClockDomain, CommitContext, DomainId, Kernel, SimTime, World};
use crate::mac::{TxEvent, Wire};
use crate::soc::{RegEvent, RegisterFile};

pub(crate) const SYS: DomainId = DomainId(0);
pub(crate) const ETH: DomainId = DomainId(1);

pub(crate) fn add_domains<W: World>(
    kernel: &mut Kernel<W>,
    cfg: &ControllerConfig,
) -> Result<(), SimError> {
    let sys = kernel.add_domain(cfg.sys_clock()?)?;
    let eth = kernel.add_domain(ClockDomain::ethernet())?;
    debug_assert_eq!((sys, eth), (SYS, ETH));
    Ok(())
}

/// Applies a 32-bit CPU store to the register block.
pub(crate) fn store_register(
    regs: &mut RegisterFile,
    probe: &mut Probe,
    cx: &mut CommitContext,
    offset: u32,
    data: &[u8],
) -> Result<Option<RegEvent>, SimError> {
    let mut word = [0u8; 4];
    let n = data.len().min(4);
    word[..n].copy_from_slice(&data[..n]);
    let value = u32::from_le_bytes(word);
    cx.trace(
        SYS,
        "regs",
        "write",
        format_args!("{offset:#05x}={value:#x}"),
    )?;
    let ev = regs.write(offset, value)?;
    if let Some(RegEvent::Ignored { offset, reason }) = &ev {
        let msg = format!("write to {offset:#x} ignored: {reason}");
        cx.trace(SYS, "regs", "warning", &msg)?;
        probe.warnings.push(msg);
        return Ok(None);
    }
    Ok(ev)
}

pub(crate) fn record_tx_event(probe: &mut Probe, ev: TxEvent, t: SimTime) {
    match ev {
        TxEvent::Start => probe.tx_start = Some(t),
        TxEvent::Sfd => probe.tx_sfd = Some(t),
        TxEvent::BodyEnd { .. } => probe.tx_body_end = Some(t),
        TxEvent::FcsEnd { ok } => {
            probe.tx_fcs_end = Some(t);
            probe.tx_ok = Some(ok);
        }
        TxEvent::Underrun { after_body_octets } => {
            probe.underrun.get_or_insert(after_body_octets);
        }
    }
}

pub(crate) fn commit_wire(
    wire: &mut Wire,
    probe: &mut Probe,
    cx: &mut CommitContext,
) -> Result<(), SimError> {
    match wire.commit() {
        Some(octet) => {
            probe.wire.push(octet);
            cx.trace(ETH, "wire", "octet", format_args!("{octet:02x}"))
        }
        None => cx.trace(ETH, "wire", "idle", ""),
    }
}

pub(crate) fn trace_fifo(
    cx: &mut CommitContext,
    domain: DomainId,
    name: &str,
    clk: CdcClock,
) -> Result<(), SimError> {
    if clk.wrote || clk.read {
        cx.trace(domain, name, "occupancy", clk.occupancy)?;
    }
    Ok(())
}

/// True once the sys edge `edge` lies strictly before `now`.
pub(crate) fn after_edge(edge: Option<u64>, sys_period_ps: u64, now: SimTime) -> bool {
    edge.is_some_and(|e| e * sys_period_ps < now.as_ps())
}
