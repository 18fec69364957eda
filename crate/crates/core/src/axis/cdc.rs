use std::collections::VecDeque;

use super::{AxisError, StreamBeat, StreamSink, StreamSource};
use crate::kernel::DomainId;

pub fn to_gray(x: u64) -> u64 {
    x ^ (x >> 1)
}

pub fn from_gray(mut g: u64) -> u64 {
    let mut x = 0;
    while g != 0 {
        x ^= g;
        g >>= 1;
    }
    x
}

/// What happened to a FIFO at one commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CdcClock {
    pub wrote: bool,
    pub read: bool,
    /// True occupancy after the commit.
    pub occupancy: usize,
}

/// Dual-clock FIFO with gray-coded pointer synchronizers.
///
/// Pointers are binary counters modulo `2 * depth` (one extra wrap bit). Each
/// side only sees the other side's pointer after it has passed through
/// `sync_stages` registers clocked by its own domain, so the full and empty
/// flags are conservative exactly like a hardware async FIFO.
#[derive(Debug, Clone)]
pub struct CdcFifo<T> {
    name: String,
    depth: usize,
    write_domain: DomainId,
    read_domain: DomainId,
    entries: VecDeque<T>,
    wptr: u64,
    rptr: u64,
    /// Gray write pointer as seen by the read side, oldest stage last.
    wsync: Vec<u64>,
    rsync: Vec<u64>,
    staged_write: Option<T>,
    staged_pop: bool,
    max_occupancy: usize,
    total_writes: u64,
    total_reads: u64,
}

impl<T> CdcFifo<T> {
    pub fn new(
        name: impl Into<String>,
        depth: usize,
        sync_stages: usize,
        write_domain: DomainId,
        read_domain: DomainId,
    ) -> Result<Self, AxisError> {
        if depth < 2 || !depth.is_power_of_two() || sync_stages < 2 {
            return Err(AxisError::BadFifoGeometry {
                depth,
                stages: sync_stages,
            });
        }
        Ok(CdcFifo {
            name: name.into(),
            depth,
            write_domain,
            read_domain,
            entries: VecDeque::with_capacity(depth),
            wptr: 0,
            rptr: 0,
            wsync: vec![0; sync_stages],
            rsync: vec![0; sync_stages],
            staged_write: None,
            staged_pop: false,
            max_occupancy: 0,
            total_writes: 0,
            total_reads: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn sync_stages(&self) -> usize {
        self.wsync.len()
    }

    pub fn write_domain(&self) -> DomainId {
        self.write_domain
    }

    pub fn read_domain(&self) -> DomainId {
        self.read_domain
    }

    fn ptr_mask(&self) -> u64 {
        2 * self.depth as u64 - 1
    }

    fn distance(&self, ahead: u64, behind: u64) -> usize {
        (ahead.wrapping_sub(behind) & self.ptr_mask()) as usize
    }

    /// Entries between the committed pointers.
    pub fn occupancy(&self) -> usize {
        self.distance(self.wptr, self.rptr)
    }

    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    pub fn total_writes(&self) -> u64 {
        self.total_writes
    }

    pub fn total_reads(&self) -> u64 {
        self.total_reads
    }

    /// Occupancy as the write side believes it (never an underestimate).
    pub fn write_side_level(&self) -> usize {
        let synced_r = from_gray(*self.rsync.last().expect("at least two stages"));
        self.distance(self.wptr, synced_r)
    }

    pub fn write_ready(&self) -> bool {
        self.staged_write.is_none() && self.write_side_level() < self.depth
    }

    /// Entries the read side may consume at this edge.
    pub fn readable(&self) -> usize {
        let synced_w = from_gray(*self.wsync.last().expect("at least two stages"));
        let n = self.distance(synced_w, self.rptr);
        n - usize::from(self.staged_pop)
    }

    fn check(&self, domain: DomainId, expected: DomainId) -> Result<(), AxisError> {
        if domain != expected {
            return Err(AxisError::WrongDomain {
                fifo: self.name.clone(),
                expected,
                got: domain,
            });
        }
        Ok(())
    }

    /// Stages a write; it lands at the end of the current write edge.
    pub fn write(&mut self, item: T, domain: DomainId) -> Result<(), AxisError> {
        self.check(domain, self.write_domain)?;
        if self.staged_write.is_some() {
            return Err(AxisError::DoubleWrite {
                fifo: self.name.clone(),
            });
        }
        if self.write_side_level() >= self.depth {
            return Err(AxisError::WriteWhileFull {
                fifo: self.name.clone(),
            });
        }
        self.staged_write = Some(item);
        Ok(())
    }

    pub fn peek(&self) -> Option<&T> {
        if self.readable() == 0 {
            return None;
        }
        self.entries.front()
    }

    /// Items the reader can already see, oldest first.
    pub fn visible(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().take(self.readable())
    }

    /// Takes the oldest visible item. At most one pop per read edge.
    pub fn pop(&mut self, domain: DomainId) -> Result<Option<T>, AxisError> {
        self.check(domain, self.read_domain)?;
        if self.readable() == 0 {
            return Ok(None);
        }
        self.staged_pop = true;
        Ok(self.entries.pop_front())
    }

    /// Advances the synchronizers and applies staged accesses. Call once per
    /// kernel instant with which of the two domains had an edge.
    ///
    /// Synchronizers sample the opposite pointer before this instant's
    /// accesses land, so a write is first readable at the third read edge
    /// after it with two stages.
    pub fn clock(&mut self, write_edge: bool, read_edge: bool) -> CdcClock {
        let mut ev = CdcClock::default();
        let (wptr, rptr) = (self.wptr, self.rptr);
        if read_edge {
            self.wsync.rotate_right(1);
            self.wsync[0] = to_gray(wptr);
            if std::mem::take(&mut self.staged_pop) {
                self.rptr = (self.rptr + 1) & self.ptr_mask();
                self.total_reads += 1;
                ev.read = true;
            }
        }
        if write_edge {
            self.rsync.rotate_right(1);
            self.rsync[0] = to_gray(rptr);
            if let Some(item) = self.staged_write.take() {
                self.entries.push_back(item);
                self.wptr = (self.wptr + 1) & self.ptr_mask();
                self.total_writes += 1;
                ev.wrote = true;
            }
        }
        ev.occupancy = self.occupancy();
        debug_assert!(ev.occupancy <= self.depth);
        debug_assert_eq!(self.total_writes - self.total_reads, ev.occupancy as u64);
        self.max_occupancy = self.max_occupancy.max(ev.occupancy);
        ev
    }
}

impl StreamSink for CdcFifo<StreamBeat> {
    fn sink_ready(&self) -> bool {
        self.write_ready()
    }

    fn sink_push(&mut self, beat: StreamBeat, domain: DomainId) -> Result<(), AxisError> {
        self.write(beat, domain)
    }
}

impl StreamSource for CdcFifo<StreamBeat> {
    fn source_peek(&self) -> Option<&StreamBeat> {
        self.peek()
    }

    fn source_pop(&mut self, domain: DomainId) -> Result<Option<StreamBeat>, AxisError> {
        self.pop(domain)
    }
}
