//! AXI-Stream plumbing: beats, valid/ready channels, width converters and the
//! dual-clock FIFO.
//!
//! Byte 0 of a beat is the lowest memory address and the first octet on the
//! wire, everywhere.

mod cdc;
mod sizer;

pub use cdc::{from_gray, to_gray, CdcClock, CdcFifo};
pub use sizer::{downsize, upsize, Downsizer, Upsizer};

use thiserror::Error;

use crate::error::SimError;
use crate::kernel::DomainId;

pub const MAX_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxisError {
    #[error("stream width {0} is not a power of two in 1..=64")]
    InvalidWidth(usize),
    #[error("keep mask {keep:#x} is not a non-empty contiguous prefix of a {width}-byte beat")]
    BadKeep { keep: u64, width: usize },
    #[error("partial beat without last")]
    PartialNotLast,
    #[error("beat width {got} on a {expected}-byte stream")]
    WidthMismatch { expected: usize, got: usize },
    #[error("cannot convert {from}-byte beats to {to}-byte beats")]
    IncompatibleWidths { from: usize, to: usize },
    #[error("{channel}: pending beat changed before it was accepted")]
    PendingMutated { channel: String },
    #[error("{channel}: new beat delivered while the previous one was never taken")]
    DeliveredNotTaken { channel: String },
    #[error("{fifo}: accessed from domain {got:?}, expected {expected:?}")]
    WrongDomain {
        fifo: String,
        expected: DomainId,
        got: DomainId,
    },
    #[error("{fifo}: write while full")]
    WriteWhileFull { fifo: String },
    #[error("{fifo}: more than one write in a single edge")]
    DoubleWrite { fifo: String },
    #[error("sizer accepted a beat it had no room for")]
    SizerOverrun,
    #[error("CDC FIFO depth {depth} must be a power of two >= 2 and sync stages {stages} >= 2")]
    BadFifoGeometry { depth: usize, stages: usize },
}

impl From<AxisError> for SimError {
    fn from(e: AxisError) -> Self {
        SimError::protocol("axis", e.to_string())
    }
}

pub(crate) fn check_width(width: usize) -> Result<(), AxisError> {
    if width == 0 || width > MAX_WIDTH || !width.is_power_of_two() {
        return Err(AxisError::InvalidWidth(width));
    }
    Ok(())
}

fn prefix_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// One AXI-Stream transfer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamBeat {
    data: Vec<u8>,
    keep: u64,
    last: bool,
}

impl StreamBeat {
    pub fn new(data: Vec<u8>, keep: u64, last: bool) -> Result<Self, AxisError> {
        let width = data.len();
        check_width(width)?;
        let n = keep.count_ones() as usize;
        if keep == 0 || keep != prefix_mask(n) || n > width {
            return Err(AxisError::BadKeep { keep, width });
        }
        if n < width && !last {
            return Err(AxisError::PartialNotLast);
        }
        Ok(StreamBeat { data, keep, last })
    }

    /// Packs `bytes` into a `width`-byte beat, zero-filling the tail.
    pub fn from_bytes(bytes: &[u8], width: usize, last: bool) -> Result<Self, AxisError> {
        check_width(width)?;
        if bytes.is_empty() || bytes.len() > width {
            return Err(AxisError::BadKeep {
                keep: prefix_mask(bytes.len()),
                width,
            });
        }
        let mut data = bytes.to_vec();
        data.resize(width, 0);
        StreamBeat::new(data, prefix_mask(bytes.len()), last)
    }

    pub fn width(&self) -> usize {
        self.data.len()
    }

    pub fn keep(&self) -> u64 {
        self.keep
    }

    pub fn last(&self) -> bool {
        self.last
    }

    pub fn len(&self) -> usize {
        self.keep.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.keep == 0
    }

    /// Keep-masked bytes.
    pub fn bytes(&self) -> &[u8] {
        &self.data[..self.len()]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

/// Outcome of one edge of a valid/ready channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransferEvent {
    Transferred(StreamBeat),
    /// Valid without ready.
    StalledReady,
    /// Ready without valid.
    StalledValid,
    Idle,
}

/// A single-domain valid/ready link.
///
/// The producer drives a beat (valid) which stays pending until accepted. The
/// consumer raises ready for the current edge. At commit the beat moves if both
/// hold; the consumer receives it at its next tick through [`take`].
///
/// [`take`]: StreamChannel::take
#[derive(Debug, Clone)]
pub struct StreamChannel {
    name: String,
    width: usize,
    pending: Option<StreamBeat>,
    ready: bool,
    delivered: Option<StreamBeat>,
    transfers: u64,
}

impl StreamChannel {
    pub fn new(name: impl Into<String>, width: usize) -> Result<Self, AxisError> {
        check_width(width)?;
        Ok(StreamChannel {
            name: name.into(),
            width,
            pending: None,
            ready: false,
            delivered: None,
            transfers: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// True when the producer may present a new beat.
    pub fn can_drive(&self) -> bool {
        self.pending.is_none()
    }

    pub fn pending(&self) -> Option<&StreamBeat> {
        self.pending.as_ref()
    }

    /// Presents `beat` as valid. Re-driving the pending beat is allowed;
    /// changing it is a protocol violation.
    pub fn drive(&mut self, beat: StreamBeat) -> Result<(), AxisError> {
        if beat.width() != self.width {
            return Err(AxisError::WidthMismatch {
                expected: self.width,
                got: beat.width(),
            });
        }
        match &self.pending {
            Some(p) if *p != beat => Err(AxisError::PendingMutated {
                channel: self.name.clone(),
            }),
            _ => {
                self.pending = Some(beat);
                Ok(())
            }
        }
    }

    pub fn set_ready(&mut self) {
        self.ready = true;
    }

    pub fn delivered(&self) -> Option<&StreamBeat> {
        self.delivered.as_ref()
    }

    pub fn take(&mut self) -> Option<StreamBeat> {
        self.delivered.take()
    }

    pub fn transfers(&self) -> u64 {
        self.transfers
    }

    /// Evaluates the handshake for this edge.
    pub fn commit(&mut self) -> Result<TransferEvent, AxisError> {
        let ready = std::mem::take(&mut self.ready);
        let ev = match (self.pending.is_some(), ready) {
            (true, true) => {
                if self.delivered.is_some() {
                    return Err(AxisError::DeliveredNotTaken {
                        channel: self.name.clone(),
                    });
                }
                let beat = self.pending.take().expect("pending checked");
                self.delivered = Some(beat.clone());
                self.transfers += 1;
                TransferEvent::Transferred(beat)
            }
            (true, false) => TransferEvent::StalledReady,
            (false, true) => TransferEvent::StalledValid,
            (false, false) => TransferEvent::Idle,
        };
        Ok(ev)
    }
}

/// Producer side of a stream: a channel or the write port of a CDC FIFO.
pub trait StreamSink {
    fn sink_ready(&self) -> bool;
    fn sink_push(&mut self, beat: StreamBeat, domain: DomainId) -> Result<(), AxisError>;
}

/// Consumer side of a stream.
pub trait StreamSource {
    fn source_peek(&self) -> Option<&StreamBeat>;
    fn source_pop(&mut self, domain: DomainId) -> Result<Option<StreamBeat>, AxisError>;
    /// Signals that one more beat can be taken on the next edge.
    fn source_request(&mut self) {}
}

impl StreamSink for StreamChannel {
    fn sink_ready(&self) -> bool {
        self.can_drive()
    }

    fn sink_push(&mut self, beat: StreamBeat, _domain: DomainId) -> Result<(), AxisError> {
        self.drive(beat)
    }
}

impl StreamSource for StreamChannel {
    fn source_peek(&self) -> Option<&StreamBeat> {
        self.delivered()
    }

    fn source_pop(&mut self, _domain: DomainId) -> Result<Option<StreamBeat>, AxisError> {
        Ok(self.take())
    }

    fn source_request(&mut self) {
        self.set_ready();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beat(bytes: &[u8], w: usize, last: bool) -> StreamBeat {
        StreamBeat::from_bytes(bytes, w, last).unwrap()
    }

    #[test]
    fn keep_must_be_prefix() {
        assert!(StreamBeat::new(vec![0; 4], 0b0111, true).is_ok());
        assert_eq!(
            StreamBeat::new(vec![0; 4], 0b0101, true),
            Err(AxisError::BadKeep {
                keep: 0b0101,
                width: 4
            })
        );
        assert!(StreamBeat::new(vec![0; 4], 0, true).is_err());
        assert_eq!(
            StreamBeat::new(vec![0; 4], 0b0011, false),
            Err(AxisError::PartialNotLast)
        );
        assert!(StreamBeat::new(vec![0; 3], 0b111, true).is_err());
        assert!(StreamBeat::new(vec![0; 64], u64::MAX, false).is_ok());
        assert!(StreamBeat::new(vec![0; 4], 0b11111, true).is_err());
    }

    #[test]
    fn bytes_are_keep_masked() {
        let b = beat(&[1, 2, 3], 8, true);
        assert_eq!(b.bytes(), &[1, 2, 3]);
        assert_eq!(b.keep(), 0b111);
        assert_eq!(b.data().len(), 8);
    }

    #[test]
    fn handshake_transfers_on_valid_and_ready() {
        let mut ch = StreamChannel::new("c", 1).unwrap();
        ch.drive(beat(&[5], 1, false)).unwrap();
        ch.set_ready();
        assert_eq!(
            ch.commit().unwrap(),
            TransferEvent::Transferred(beat(&[5], 1, false))
        );
        assert_eq!(ch.take().unwrap().bytes(), &[5]);
        assert!(ch.can_drive());
    }

    #[test]
    fn stall_keeps_data_until_ready() {
        let mut ch = StreamChannel::new("c", 2).unwrap();
        let b = beat(&[1, 2], 2, true);
        ch.drive(b.clone()).unwrap();
        for _ in 0..4 {
            assert_eq!(ch.commit().unwrap(), TransferEvent::StalledReady);
            ch.drive(b.clone()).unwrap();
            assert_eq!(ch.pending(), Some(&b));
        }
        ch.set_ready();
        assert_eq!(ch.commit().unwrap(), TransferEvent::Transferred(b.clone()));
        assert_eq!(ch.take(), Some(b));
    }

    #[test]
    fn ready_without_valid() {
        let mut ch = StreamChannel::new("c", 1).unwrap();
        ch.set_ready();
        assert_eq!(ch.commit().unwrap(), TransferEvent::StalledValid);
        assert_eq!(ch.commit().unwrap(), TransferEvent::Idle);
    }

    #[test]
    fn mutating_pending_beat_is_a_fault() {
        let mut ch = StreamChannel::new("c", 1).unwrap();
        ch.drive(beat(&[1], 1, false)).unwrap();
        assert!(matches!(
            ch.drive(beat(&[2], 1, false)),
            Err(AxisError::PendingMutated { .. })
        ));
        assert!(matches!(
            ch.drive(beat(&[1, 1], 2, false)),
            Err(AxisError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn untaken_delivery_is_a_fault() {
        let mut ch = StreamChannel::new("c", 1).unwrap();
        ch.drive(beat(&[1], 1, false)).unwrap();
        ch.set_ready();
        ch.commit().unwrap();
        ch.drive(beat(&[2], 1, false)).unwrap();
        ch.set_ready();
        assert!(matches!(
            ch.commit(),
            Err(AxisError::DeliveredNotTaken { .. })
        ));
    }
}
