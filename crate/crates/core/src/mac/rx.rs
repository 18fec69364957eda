use std::collections::VecDeque;

use crate::axis::{StreamBeat, StreamChannel};
use crate::error::SimError;
use crate::frame::{
    Crc32, FCS_LEN, HEADER_LEN, MIN_PAYLOAD, PREAMBLE_LEN, PREAMBLE_OCTET, SFD_OCTET,
};
use crate::kernel::{Component, SimTime, TickContext, World};

/// Summary of one received frame, emitted when the line goes idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameReport {
    /// Header + payload + pad octets delivered downstream.
    pub len: usize,
    pub fcs_ok: bool,
    /// Octets dropped because the downstream channel stalled.
    pub overflow: bool,
    /// Shorter than a minimum-size frame.
    pub runt: bool,
    pub sfd_time: SimTime,
    /// When the last body octet was sampled.
    pub body_end_time: SimTime,
    /// When the last FCS octet was sampled.
    pub fcs_end_time: SimTime,
}

pub trait MacRxPort {
    fn rx_line(&self) -> Option<u8>;
    fn rx_output(&mut self) -> &mut StreamChannel;
    fn rx_report(&mut self, report: FrameReport, time: SimTime) -> Result<(), SimError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxState {
    Hunt,
    /// Preamble octets seen so far.
    Preamble(u8),
    Data,
    /// Malformed start; wait for idle before hunting again.
    Discard,
}

/// Receive engine. Body octets are forwarded through a five-deep delay line,
/// so when the line goes idle the oldest entry is the final body octet (sent
/// with `last`) and the other four are the FCS.
#[derive(Debug, Clone)]
pub struct MacRx {
    state: RxState,
    delay: VecDeque<(u8, SimTime)>,
    skid: Option<StreamBeat>,
    crc: Crc32,
    body_len: usize,
    overflow: bool,
    sfd_time: SimTime,
    last_body_time: SimTime,
    frames: u64,
    ignored: u64,
}

impl Default for MacRx {
    fn default() -> Self {
        Self::new()
    }
}

impl MacRx {
    pub fn new() -> Self {
        MacRx {
            state: RxState::Hunt,
            delay: VecDeque::with_capacity(FCS_LEN + 2),
            skid: None,
            crc: Crc32::new(),
            body_len: 0,
            overflow: false,
            sfd_time: SimTime::ZERO,
            last_body_time: SimTime::ZERO,
            frames: 0,
            ignored: 0,
        }
    }

    pub fn state(&self) -> RxState {
        self.state
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// Frames dropped for a malformed preamble or SFD.
    pub fn ignored(&self) -> u64 {
        self.ignored
    }

    fn forward(
        &mut self,
        out: &mut StreamChannel,
        octet: u8,
        time: SimTime,
        last: bool,
    ) -> Result<(), SimError> {
        self.crc.update(octet);
        self.body_len += 1;
        self.last_body_time = time;
        let beat = StreamBeat::from_bytes(&[octet], 1, last)?;
        if out.can_drive() {
            out.drive(beat)?;
        } else if self.skid.is_none() {
            self.skid = Some(beat);
        } else {
            self.overflow = true;
            if last {
                // Never lose the end marker: it replaces the stale skid entry.
                self.skid = Some(beat);
            }
        }
        Ok(())
    }

    fn finish<W: MacRxPort>(&mut self, world: &mut W, time: SimTime) -> Result<(), SimError> {
        self.state = RxState::Hunt;
        if self.delay.len() <= FCS_LEN {
            self.ignored += 1;
            self.delay.clear();
            return Ok(());
        }
        let (octet, t) = self.delay.pop_front().expect("more than FCS_LEN octets");
        self.forward(world.rx_output(), octet, t, true)?;
        let fcs_end_time = self.delay.back().map_or(t, |&(_, ft)| ft);
        let fcs: Vec<u8> = self.delay.drain(..).map(|(o, _)| o).collect();
        let received = u32::from_le_bytes([fcs[0], fcs[1], fcs[2], fcs[3]]);
        self.frames += 1;
        let report = FrameReport {
            len: self.body_len,
            fcs_ok: self.crc.finalize() == received,
            overflow: self.overflow,
            runt: self.body_len < HEADER_LEN + MIN_PAYLOAD,
            sfd_time: self.sfd_time,
            body_end_time: self.last_body_time,
            fcs_end_time,
        };
        world.rx_report(report, time)
    }
}

impl<W: World + MacRxPort> Component<W> for MacRx {
    fn name(&self) -> &str {
        "mac_rx"
    }

    fn tick(&mut self, world: &mut W, ctx: &mut TickContext) -> Result<(), SimError> {
        let t = ctx.time();
        if let Some(beat) = self.skid.take() {
            let out = world.rx_output();
            if out.can_drive() {
                out.drive(beat)?;
            } else {
                self.skid = Some(beat);
            }
        }
        let octet = world.rx_line();
        match (self.state, octet) {
            (RxState::Hunt, None) => {}
            (RxState::Hunt, Some(PREAMBLE_OCTET)) => self.state = RxState::Preamble(1),
            (RxState::Hunt, Some(_)) => self.state = RxState::Discard,
            (RxState::Preamble(n), Some(PREAMBLE_OCTET)) if (n as usize) < PREAMBLE_LEN => {
                self.state = RxState::Preamble(n + 1)
            }
            (RxState::Preamble(n), Some(SFD_OCTET)) if n as usize == PREAMBLE_LEN => {
                self.state = RxState::Data;
                self.crc = Crc32::new();
                self.body_len = 0;
                self.overflow = false;
                self.sfd_time = t;
                self.delay.clear();
                ctx.trace("rx_sfd", "")?;
            }
            (RxState::Preamble(_), None) => {
                self.ignored += 1;
                self.state = RxState::Hunt;
            }
            (RxState::Preamble(_), Some(_)) => {
                self.ignored += 1;
                self.state = RxState::Discard;
            }
            (RxState::Data, Some(o)) => {
                self.delay.push_back((o, t));
                if self.delay.len() > FCS_LEN + 1 {
                    let (old, ot) = self.delay.pop_front().expect("non-empty");
                    self.forward(world.rx_output(), old, ot, false)?;
                }
            }
            (RxState::Data, None) => {
                self.finish(world, t)?;
                ctx.trace("rx_end", self.body_len)?;
            }
            (RxState::Discard, None) => self.state = RxState::Hunt,
            (RxState::Discard, Some(_)) => {}
        }
        Ok(())
    }
}
