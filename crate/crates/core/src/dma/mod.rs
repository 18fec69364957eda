//! One-dimensional DMA: request legalization and the data mover.

mod engine;

pub use engine::{DmaConfig, DmaEngine, DmaState, DmaStatus};

use thiserror::Error;

use crate::error::SimError;

pub const PAGE_BYTES: u64 = 4096;
pub const DEFAULT_MAX_BURST: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DmaError {
    #[error("transfer length must be at least one byte")]
    ZeroLength,
    #[error("transfer range {addr:#x}+{len} overflows the address space")]
    AddressOverflow { addr: u64, len: u64 },
    #[error("bus width {0} must be a power of two no larger than a page")]
    BadBusWidth(usize),
    #[error("max burst must be at least one beat")]
    ZeroBurst,
    #[error("request {id} targets {addr:#x}+{len}, outside memory")]
    OutOfRange { id: u32, addr: u64, len: u64 },
    #[error("a {0:?} request is already queued")]
    Busy(Direction),
}

impl From<DmaError> for SimError {
    fn from(e: DmaError) -> Self {
        SimError::protocol("dma", e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    MemToStream,
    StreamToMem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferRequest {
    pub id: u32,
    pub direction: Direction,
    pub mem_addr: u64,
    pub length: u64,
}

impl TransferRequest {
    pub fn new(
        id: u32,
        direction: Direction,
        mem_addr: u64,
        length: u64,
    ) -> Result<Self, DmaError> {
        if length == 0 {
            return Err(DmaError::ZeroLength);
        }
        if mem_addr.checked_add(length).is_none() {
            return Err(DmaError::AddressOverflow {
                addr: mem_addr,
                len: length,
            });
        }
        Ok(TransferRequest {
            id,
            direction,
            mem_addr,
            length,
        })
    }

    pub fn end(&self) -> u64 {
        self.mem_addr + self.length
    }
}

/// A legal burst: contiguous, inside one page, at most `max_burst` beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmaJob {
    pub mem_addr: u64,
    pub length: u64,
    pub beats: u64,
    /// Offset of the first valid byte within the first beat.
    pub first_offset: usize,
    /// Offset of the last valid byte within the last beat.
    pub last_offset: usize,
}

impl DmaJob {
    fn new(mem_addr: u64, end: u64, bus_width: u64) -> Self {
        let first_beat = mem_addr / bus_width;
        let last_beat = (end - 1) / bus_width;
        DmaJob {
            mem_addr,
            length: end - mem_addr,
            beats: last_beat - first_beat + 1,
            first_offset: (mem_addr % bus_width) as usize,
            last_offset: ((end - 1) % bus_width) as usize,
        }
    }

    pub fn end(&self) -> u64 {
        self.mem_addr + self.length
    }
}

fn check_geometry(bus_width: usize, max_burst: u64) -> Result<(), DmaError> {
    if bus_width == 0 || !bus_width.is_power_of_two() || bus_width as u64 > PAGE_BYTES {
        return Err(DmaError::BadBusWidth(bus_width));
    }
    if max_burst == 0 {
        return Err(DmaError::ZeroBurst);
    }
    Ok(())
}

/// Splits a request into jobs at 4 KiB pages and at the burst limit.
///
/// A burst always ends on a bus-word boundary `max_burst` words after the
/// aligned-down start, so an unaligned first job is shorter in bytes but
/// never longer in beats.
pub fn legalize(
    req: &TransferRequest,
    bus_width: usize,
    max_burst: u64,
) -> Result<Vec<DmaJob>, DmaError> {
    check_geometry(bus_width, max_burst)?;
    let w = bus_width as u64;
    let burst_bytes = max_burst.saturating_mul(w);
    let mut jobs = Vec::new();
    let mut cur = req.mem_addr;
    let end = req.end();
    while cur < end {
        let page_end = (cur / PAGE_BYTES + 1).saturating_mul(PAGE_BYTES);
        let burst_end = (cur - cur % w).saturating_add(burst_bytes);
        let stop = end.min(page_end).min(burst_end);
        jobs.push(DmaJob::new(cur, stop, w));
        cur = stop;
    }
    Ok(jobs)
}
