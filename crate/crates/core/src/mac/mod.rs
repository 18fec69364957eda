//! MAC transmit/receive engines and the RGMII wire between them.
//!
//! RGMII moves two nibbles per 125 MHz cycle (one per clock edge). The model
//! folds that into one octet per Ethernet-domain edge; [`nibble_split`] gives
//! the per-edge view, low nibble first.

mod rx;
mod tx;

pub use rx::{FrameReport, MacRx, MacRxPort, RxState};
pub use tx::{MacTx, MacTxPort, TxEvent, TxLevel, TxState, DEFAULT_THRESHOLD, IPG_OCTETS};

use crate::error::SimError;
use crate::kernel::{Component, SimTime, TickContext, World};

/// Low nibble goes out on the rising edge, high nibble on the falling edge.
pub fn nibble_split(octet: u8) -> (u8, u8) {
    (octet & 0x0F, octet >> 4)
}

pub fn nibble_join(low: u8, high: u8) -> u8 {
    (low & 0x0F) | (high << 4)
}

/// The line between a transmitter and a receiver. Whatever is driven during
/// an edge is what the receiver samples on the next edge; an undriven edge is
/// idle.
#[derive(Debug, Clone, Default)]
pub struct Wire {
    next: Option<u8>,
    line: Option<u8>,
    active_cycles: u64,
}

impl Wire {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn drive(&mut self, octet: u8) -> Result<(), SimError> {
        if self.next.is_some() {
            return Err(SimError::protocol("wire", "two drivers in one cycle"));
        }
        self.next = Some(octet);
        Ok(())
    }

    /// Octet currently on the line.
    pub fn line(&self) -> Option<u8> {
        self.line
    }

    pub fn active_cycles(&self) -> u64 {
        self.active_cycles
    }

    pub fn commit(&mut self) -> Option<u8> {
        self.line = self.next.take();
        if self.line.is_some() {
            self.active_cycles += 1;
        }
        self.line
    }
}

/// World access for [`WireSource`].
pub trait WireSourcePort {
    /// Next scripted line state; `None` once the sequence is exhausted.
    fn next_feed(&mut self, now: SimTime) -> Option<Option<u8>>;
    fn feed_wire(&mut self) -> &mut Wire;
}

/// Replays a scripted octet/idle sequence onto a wire, standing in for a
/// remote transmitter.
#[derive(Debug, Default)]
pub struct WireSource;

impl<W: World + WireSourcePort> Component<W> for WireSource {
    fn name(&self) -> &str {
        "wire_src"
    }

    fn tick(&mut self, world: &mut W, ctx: &mut TickContext) -> Result<(), SimError> {
        if let Some(Some(octet)) = world.next_feed(ctx.time()) {
            world.feed_wire().drive(octet)?;
        }
        Ok(())
    }
}


#[cfg(test)]
mod unit {
    use super::*;

    #[test]
    fn nibble_examples() {
        assert_eq!(nibble_split(0xA7), (0x7, 0xA));
        assert_eq!(nibble_split(0x00), (0, 0));
    }

    #[test]
    fn nibble_round_trip_exhaustive() {
        for x in 0..=255u8 {
            let (lo, hi) = nibble_split(x);
            assert!(lo < 16 && hi < 16);
            assert_eq!(nibble_join(lo, hi), x);
        }
    }

    #[test]
    fn wire_is_registered_and_single_driver() {
        let mut w = Wire::new();
        w.drive(0x55).unwrap();
        assert_eq!(w.line(), None);
        assert!(w.drive(0x55).is_err());
        assert_eq!(w.commit(), Some(0x55));
        assert_eq!(w.commit(), None);
        assert_eq!(w.active_cycles(), 1);
    }
}
