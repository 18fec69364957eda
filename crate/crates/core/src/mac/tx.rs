use super::Wire;
use crate::axis::StreamChannel;
use crate::error::SimError;
use crate::frame::{
    fcs_octets, Crc32, FCS_LEN, HEADER_LEN, MIN_PAYLOAD, PREAMBLE_LEN, PREAMBLE_OCTET, SFD_OCTET,
};
use crate::kernel::{Component, SimTime, TickContext, World};

pub const IPG_OCTETS: u8 = 12;
pub const DEFAULT_THRESHOLD: usize = 16;
const MIN_BODY: usize = HEADER_LEN + MIN_PAYLOAD;

/// How much frame data is waiting upstream of the MAC, as of the last commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TxLevel {
    pub bytes: usize,
    /// The end of the frame is already among those bytes.
    pub has_last: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxEvent {
    /// First preamble octet driven.
    Start,
    Sfd,
    /// Last header/payload/pad octet driven.
    BodyEnd {
        body_len: usize,
    },
    /// Last FCS octet driven. `ok` is false for an aborted frame.
    FcsEnd {
        ok: bool,
    },
    Underrun {
        after_body_octets: usize,
    },
}

pub trait MacTxPort {
    fn tx_level(&self) -> TxLevel;
    fn tx_input(&mut self) -> &mut StreamChannel;
    fn tx_wire(&mut self) -> &mut Wire;
    fn tx_event(&mut self, event: TxEvent, time: SimTime) -> Result<(), SimError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxState {
    Idle,
    /// Preamble octets already sent.
    Preamble(u8),
    Data,
    Pad,
    /// FCS octets already sent.
    Fcs(u8),
    Ipg(u8),
}

/// Transmit engine: one wire octet per Ethernet edge while a frame is active.
///
/// Starts once `threshold` bytes (or a whole short frame) are queued
/// upstream. If the input runs dry mid-frame the line cannot pause, so the
/// frame is closed immediately with an inverted FCS and the rest of the
/// packet is drained from the input.
#[derive(Debug, Clone)]
pub struct MacTx {
    threshold: usize,
    state: TxState,
    crc: Crc32,
    fcs: [u8; FCS_LEN],
    body_len: usize,
    aborted: bool,
    draining: bool,
    frames: u64,
    underruns: u64,
}

impl MacTx {
    pub fn new(threshold: usize) -> Self {
        MacTx {
            threshold: threshold.max(1),
            state: TxState::Idle,
            crc: Crc32::new(),
            fcs: [0; FCS_LEN],
            body_len: 0,
            aborted: false,
            draining: false,
            frames: 0,
            underruns: 0,
        }
    }

    pub fn state(&self) -> TxState {
        self.state
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn underruns(&self) -> u64 {
        self.underruns
    }

    fn drain<W: MacTxPort>(&mut self, world: &mut W) {
        if !self.draining {
            return;
        }
        let input = world.tx_input();
        if let Some(beat) = input.take() {
            if beat.last() {
                self.draining = false;
                return;
            }
        }
        input.set_ready();
    }

    fn close_body(&mut self, time: SimTime, world: &mut impl MacTxPort) -> Result<(), SimError> {
        self.fcs = fcs_octets(self.crc.finalize());
        self.state = TxState::Fcs(0);
        world.tx_event(
            TxEvent::BodyEnd {
                body_len: self.body_len,
            },
            time,
        )
    }
}

impl<W: World + MacTxPort> Component<W> for MacTx {
    fn name(&self) -> &str {
        "mac_tx"
    }

    fn tick(&mut self, world: &mut W, ctx: &mut TickContext) -> Result<(), SimError> {
        let t = ctx.time();
        match self.state {
            TxState::Idle => {
                self.drain(world);
                let level = world.tx_level();
                if !self.draining
                    && level.bytes > 0
                    && (level.bytes >= self.threshold || level.has_last)
                {
                    world.tx_wire().drive(PREAMBLE_OCTET)?;
                    self.state = TxState::Preamble(1);
                    world.tx_event(TxEvent::Start, t)?;
                    ctx.trace("tx_start", level.bytes)?;
                }
            }
            TxState::Preamble(n) if (n as usize) < PREAMBLE_LEN => {
                world.tx_wire().drive(PREAMBLE_OCTET)?;
                self.state = TxState::Preamble(n + 1);
            }
            TxState::Preamble(_) => {
                world.tx_wire().drive(SFD_OCTET)?;
                world.tx_input().set_ready();
                self.crc = Crc32::new();
                self.body_len = 0;
                self.aborted = false;
                self.state = TxState::Data;
                world.tx_event(TxEvent::Sfd, t)?;
            }
            TxState::Data => match world.tx_input().take() {
                Some(beat) => {
                    let octet = beat.bytes()[0];
                    world.tx_wire().drive(octet)?;
                    self.crc.update(octet);
                    self.body_len += 1;
                    if !beat.last() {
                        world.tx_input().set_ready();
                    } else if self.body_len < MIN_BODY {
                        self.state = TxState::Pad;
                    } else {
                        self.close_body(t, world)?;
                    }
                }
                None => {
                    self.underruns += 1;
                    self.aborted = true;
                    self.draining = true;
                    self.fcs = fcs_octets(!self.crc.finalize());
                    world.tx_wire().drive(self.fcs[0])?;
                    self.state = TxState::Fcs(1);
                    world.tx_event(
                        TxEvent::Underrun {
                            after_body_octets: self.body_len,
                        },
                        t,
                    )?;
                    ctx.trace("underrun", self.body_len)?;
                    self.drain(world);
                }
            },
            TxState::Pad => {
                world.tx_wire().drive(0)?;
                self.crc.update(0);
                self.body_len += 1;
                if self.body_len == MIN_BODY {
                    self.close_body(t, world)?;
                }
            }
            TxState::Fcs(i) => {
                self.drain(world);
                world.tx_wire().drive(self.fcs[i as usize])?;
                if i as usize + 1 == FCS_LEN {
                    self.frames += 1;
                    self.state = TxState::Ipg(0);
                    world.tx_event(TxEvent::FcsEnd { ok: !self.aborted }, t)?;
                } else {
                    self.state = TxState::Fcs(i + 1);
                }
            }
            TxState::Ipg(n) => {
                self.drain(world);
                self.state = if n + 1 >= IPG_OCTETS {
                    TxState::Idle
                } else {
                    TxState::Ipg(n + 1)
                };
            }
        }
        Ok(())
    }
}
