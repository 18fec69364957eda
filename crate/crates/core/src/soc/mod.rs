//! System-side resources: main memory, the controller register file and the
//! device address decoder.

mod memory;
mod regs;

pub use memory::{Burst, MemoryModel};
pub use regs::{irq, offsets, rx_status, RegEvent, RegisterFile};

use thiserror::Error;

use crate::error::SimError;

/// Size of each baseline packet buffer and its bus window.
pub const BUFFER_BYTES: usize = 1536;
pub const TX_WINDOW_BASE: u64 = 0x1000;
pub const RX_WINDOW_BASE: u64 = 0x1800;
/// Everything below this offset belongs to the register block.
pub const REG_SPACE_END: u64 = 0x1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SocError {
    #[error("bus fault at {addr:#x} (+{len})")]
    BusFault { addr: u64, len: usize },
    #[error("misaligned {width}-byte access at {addr:#x}")]
    Misaligned { addr: u64, width: usize },
    #[error("access width {width} exceeds the {bus_width}-byte bus")]
    TooWide { width: usize, bus_width: usize },
    #[error("memory latency must be at least one cycle")]
    ZeroLatency,
}

impl From<SocError> for SimError {
    fn from(e: SocError) -> Self {
        SimError::protocol("bus", e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Read,
    Write,
}

/// One access through the controller's subordinate port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusTransaction {
    pub kind: BusKind,
    pub addr: u64,
    pub data: Vec<u8>,
}

impl BusTransaction {
    pub fn write(addr: u64, data: Vec<u8>, bus_width: usize) -> Result<Self, SocError> {
        let t = BusTransaction {
            kind: BusKind::Write,
            addr,
            data,
        };
        t.validate(bus_width)?;
        Ok(t)
    }

    pub fn read(addr: u64, width: usize, bus_width: usize) -> Result<Self, SocError> {
        let t = BusTransaction {
            kind: BusKind::Read,
            addr,
            data: vec![0; width],
        };
        t.validate(bus_width)?;
        Ok(t)
    }

    pub fn width(&self) -> usize {
        self.data.len()
    }

    fn validate(&self, bus_width: usize) -> Result<(), SocError> {
        let width = self.width();
        if width > bus_width {
            return Err(SocError::TooWide { width, bus_width });
        }
        if width == 0 || !width.is_power_of_two() || self.addr % width as u64 != 0 {
            return Err(SocError::Misaligned {
                addr: self.addr,
                width,
            });
        }
        Ok(())
    }
}

/// Where a device-relative address lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Register(u32),
    TxBuffer(usize),
    RxBuffer(usize),
}

/// Decodes a device address. Buffer windows exist only on the baseline.
pub fn decode(addr: u64, len: usize, with_buffers: bool) -> Result<Target, SocError> {
    let fault = SocError::BusFault { addr, len };
    let end = addr.checked_add(len as u64).ok_or(fault.clone())?;
    if end <= REG_SPACE_END {
        return Ok(Target::Register(addr as u32));
    }
    let window = |base: u64| addr >= base && end <= base + BUFFER_BYTES as u64;
    if with_buffers && window(TX_WINDOW_BASE) {
        return Ok(Target::TxBuffer((addr - TX_WINDOW_BASE) as usize));
    }
    if with_buffers && window(RX_WINDOW_BASE) {
        return Ok(Target::RxBuffer((addr - RX_WINDOW_BASE) as usize));
    }
    Err(fault)
}
