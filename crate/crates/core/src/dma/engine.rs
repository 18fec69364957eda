use std::collections::VecDeque;

use super::{legalize, Direction, DmaError, DmaJob, TransferRequest, DEFAULT_MAX_BURST};
use crate::axis::{StreamBeat, StreamSink, StreamSource};
use crate::error::SimError;
use crate::kernel::DomainId;
use crate::soc::MemoryModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmaConfig {
    pub bus_width: usize,
    pub max_burst: u64,
    /// Cycles between accepting a request and the first memory access.
    pub setup_cycles: u32,
}

impl Default for DmaConfig {
    fn default() -> Self {
        DmaConfig {
            bus_width: 8,
            max_burst: DEFAULT_MAX_BURST,
            setup_cycles: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmaState {
    Idle,
    Running,
    Done,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmaStatus {
    pub id: u32,
    pub direction: Direction,
    pub state: DmaState,
    pub bytes_moved: u64,
    /// Stream bytes that did not fit the destination (stream to memory only).
    pub dropped: u64,
    pub start_edge: u64,
    pub end_edge: u64,
}

impl DmaStatus {
    pub fn overflow(&self) -> bool {
        self.dropped > 0
    }
}

#[derive(Debug)]
struct ReadChannel {
    status: DmaStatus,
    setup_left: u32,
    jobs: VecDeque<DmaJob>,
    /// Next byte to fetch within the front job.
    cursor: u64,
    in_flight: bool,
    staging: VecDeque<u8>,
}

impl ReadChannel {
    fn reads_done(&self) -> bool {
        self.jobs.is_empty() && !self.in_flight
    }

    fn next_read(&self, w: u64) -> Option<(u64, usize)> {
        let job = self.jobs.front()?;
        let word_end = (self.cursor - self.cursor % w + w).min(job.end());
        Some((self.cursor, (word_end - self.cursor) as usize))
    }

    fn advance(&mut self, len: usize) {
        self.cursor += len as u64;
        if let Some(job) = self.jobs.front() {
            if self.cursor >= job.end() {
                self.jobs.pop_front();
                if let Some(next) = self.jobs.front() {
                    self.cursor = next.mem_addr;
                }
            }
        }
    }
}

#[derive(Debug)]
struct WriteChannel {
    status: DmaStatus,
    setup_left: u32,
    cursor: u64,
    end: u64,
    in_flight: bool,
    staging: VecDeque<u8>,
    seen_last: bool,
}

#[derive(Debug)]
enum PortOp {
    Read {
        remaining: u32,
        data: Vec<u8>,
    },
    Write {
        remaining: u32,
        addr: u64,
        data: Vec<u8>,
    },
}

/// Two-channel DMA (memory to stream, stream to memory) sharing one
/// non-pipelined memory port with round-robin arbitration.
///
/// Each channel serves one request at a time. Memory words are fetched or
/// stored in bus-aligned pieces; a small staging buffer (under two bus words)
/// realigns them onto packed stream beats.
#[derive(Debug)]
pub struct DmaEngine {
    cfg: DmaConfig,
    queue_read: VecDeque<TransferRequest>,
    queue_write: VecDeque<TransferRequest>,
    read: Option<ReadChannel>,
    write: Option<WriteChannel>,
    port: Option<PortOp>,
    last_grant: Direction,
    edges: u64,
    port_ops: u64,
    beats_out: u64,
}

impl DmaEngine {
    pub fn new(cfg: DmaConfig) -> Result<Self, DmaError> {
        super::check_geometry(cfg.bus_width, cfg.max_burst)?;
        Ok(DmaEngine {
            cfg,
            queue_read: VecDeque::new(),
            queue_write: VecDeque::new(),
            read: None,
            write: None,
            port: None,
            last_grant: Direction::StreamToMem,
            edges: 0,
            port_ops: 0,
            beats_out: 0,
        })
    }

    pub fn config(&self) -> &DmaConfig {
        &self.cfg
    }

    pub fn submit(&mut self, req: TransferRequest, mem: &MemoryModel) -> Result<(), DmaError> {
        if mem.check_range(req.mem_addr, req.length as usize).is_err() {
            return Err(DmaError::OutOfRange {
                id: req.id,
                addr: req.mem_addr,
                len: req.length,
            });
        }
        match req.direction {
            Direction::MemToStream => self.queue_read.push_back(req),
            Direction::StreamToMem => self.queue_write.push_back(req),
        }
        Ok(())
    }

    pub fn busy(&self) -> bool {
        self.read.is_some()
            || self.write.is_some()
            || !self.queue_read.is_empty()
            || !self.queue_write.is_empty()
    }

    pub fn edges(&self) -> u64 {
        self.edges
    }

    /// Memory accesses issued so far; never exceeds [`edges`](Self::edges).
    pub fn port_ops(&self) -> u64 {
        self.port_ops
    }

    pub fn beats_out(&self) -> u64 {
        self.beats_out
    }

    /// Bytes held inside the engine.
    pub fn staged_bytes(&self) -> usize {
        self.read.as_ref().map_or(0, |r| r.staging.len())
            + self.write.as_ref().map_or(0, |w| w.staging.len())
    }

    fn status(req: &TransferRequest, edge: u64) -> DmaStatus {
        DmaStatus {
            id: req.id,
            direction: req.direction,
            state: DmaState::Running,
            bytes_moved: 0,
            dropped: 0,
            start_edge: edge,
            end_edge: edge,
        }
    }

    fn activate(&mut self, edge: u64) -> Result<(), DmaError> {
        if self.read.is_none() {
            if let Some(req) = self.queue_read.pop_front() {
                let jobs: VecDeque<DmaJob> =
                    legalize(&req, self.cfg.bus_width, self.cfg.max_burst)?.into();
                self.read = Some(ReadChannel {
                    status: Self::status(&req, edge),
                    setup_left: self.cfg.setup_cycles,
                    cursor: req.mem_addr,
                    jobs,
                    in_flight: false,
                    staging: VecDeque::with_capacity(2 * self.cfg.bus_width),
                });
            }
        }
        if self.write.is_none() {
            if let Some(req) = self.queue_write.pop_front() {
                self.write = Some(WriteChannel {
                    status: Self::status(&req, edge),
                    setup_left: self.cfg.setup_cycles,
                    cursor: req.mem_addr,
                    end: req.end(),
                    in_flight: false,
                    staging: VecDeque::with_capacity(2 * self.cfg.bus_width),
                    seen_last: false,
                });
            }
        }
        Ok(())
    }

    /// One system-domain edge. Returns requests that finished on this edge.
    pub fn tick(
        &mut self,
        edge: u64,
        mem: &mut MemoryModel,
        sink: &mut dyn StreamSink,
        source: &mut dyn StreamSource,
        domain: DomainId,
    ) -> Result<Vec<DmaStatus>, SimError> {
        self.edges += 1;
        self.activate(edge)?;
        let w = self.cfg.bus_width;
        let mut finished = Vec::new();

        let mut read_ready = false;
        if let Some(rd) = self.read.as_mut() {
            if rd.setup_left > 0 {
                rd.setup_left -= 1;
            } else {
                read_ready = true;
                let flush = rd.reads_done() && !rd.staging.is_empty();
                if (rd.staging.len() >= w || flush) && sink.sink_ready() {
                    let n = w.min(rd.staging.len());
                    let bytes: Vec<u8> = rd.staging.drain(..n).collect();
                    let last = rd.reads_done() && rd.staging.is_empty();
                    sink.sink_push(StreamBeat::from_bytes(&bytes, w, last)?, domain)?;
                    rd.status.bytes_moved += n as u64;
                    self.beats_out += 1;
                    if last {
                        rd.status.state = DmaState::Done;
                        rd.status.end_edge = edge;
                        finished.push(rd.status.clone());
                        self.read = None;
                        read_ready = false;
                    }
                }
            }
        }

        let mut write_ready = false;
        if let Some(wr) = self.write.as_mut() {
            if wr.setup_left > 0 {
                wr.setup_left -= 1;
            } else {
                write_ready = true;
                if !wr.seen_last && wr.staging.len() < w {
                    if let Some(beat) = source.source_pop(domain)? {
                        let room = (wr.end - wr.cursor) as usize - wr.staging.len();
                        let take = beat.len().min(room);
                        wr.staging.extend(&beat.bytes()[..take]);
                        wr.status.dropped += (beat.len() - take) as u64;
                        wr.seen_last = beat.last();
                    }
                }
                if !wr.seen_last && wr.staging.len() < w {
                    source.source_request();
                }
            }
        }

        if self.port.is_none() {
            let wants_read = read_ready
                && self
                    .read
                    .as_ref()
                    .is_some_and(|r| !r.in_flight && !r.jobs.is_empty() && r.staging.len() < w);
            let wants_write = write_ready
                && self.write.as_ref().is_some_and(|wr| {
                    let word_room = w - (wr.cursor % w as u64) as usize;
                    !wr.in_flight
                        && !wr.staging.is_empty()
                        && (wr.staging.len() >= word_room
                            || wr.seen_last
                            || wr.cursor + wr.staging.len() as u64 == wr.end)
                });
            let grant = match (wants_read, wants_write) {
                (true, true) => Some(match self.last_grant {
                    Direction::MemToStream => Direction::StreamToMem,
                    Direction::StreamToMem => Direction::MemToStream,
                }),
                (true, false) => Some(Direction::MemToStream),
                (false, true) => Some(Direction::StreamToMem),
                (false, false) => None,
            };
            match grant {
                Some(Direction::MemToStream) => {
                    let rd = self.read.as_mut().expect("granted");
                    let (addr, len) = rd.next_read(w as u64).expect("jobs pending");
                    let data = mem.read(addr, len)?.to_vec();
                    rd.advance(len);
                    rd.in_flight = true;
                    self.port = Some(PortOp::Read {
                        remaining: mem.read_latency(),
                        data,
                    });
                }
                Some(Direction::StreamToMem) => {
                    let wr = self.write.as_mut().expect("granted");
                    let word_room = w - (wr.cursor % w as u64) as usize;
                    let n = word_room.min(wr.staging.len());
                    let data: Vec<u8> = wr.staging.drain(..n).collect();
                    let addr = wr.cursor;
                    wr.cursor += n as u64;
                    wr.in_flight = true;
                    self.port = Some(PortOp::Write {
                        remaining: mem.write_latency(),
                        addr,
                        data,
                    });
                }
                None => {}
            }
            if let Some(d) = grant {
                self.last_grant = d;
                self.port_ops += 1;
            }
        }

        let port_done = match self.port.as_mut() {
            Some(PortOp::Read { remaining, .. }) | Some(PortOp::Write { remaining, .. }) => {
                *remaining -= 1;
                *remaining == 0
            }
            None => false,
        };
        if port_done {
            match self.port.take().expect("port busy") {
                PortOp::Read { data, .. } => {
                    let rd = self.read.as_mut().expect("read channel owns the op");
                    rd.staging.extend(data);
                    rd.in_flight = false;
                }
                PortOp::Write { addr, data, .. } => {
                    mem.write(addr, &data)?;
                    let wr = self.write.as_mut().expect("write channel owns the op");
                    wr.status.bytes_moved += data.len() as u64;
                    wr.in_flight = false;
                }
            }
        }

        if let Some(wr) = self.write.as_mut() {
            if wr.seen_last && wr.staging.is_empty() && !wr.in_flight {
                wr.status.state = DmaState::Done;
                wr.status.end_edge = edge;
                finished.push(wr.status.clone());
                self.write = None;
            }
        }
        debug_assert!(self.port_ops <= self.edges);
        debug_assert!(self.staged_bytes() <= 4 * w);
        Ok(finished)
    }
}
