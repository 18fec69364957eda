use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::test_header;
use crate::controller::{loopback_frame, ControllerConfig, Design, TransactionError};
use crate::frame::{MAX_PAYLOAD, MIN_PAYLOAD};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureKind {
    Underrun { after_body_octets: usize },
    Fcs,
    Overflow,
    Mismatch { first_diff: usize },
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameFailure {
    pub index: usize,
    pub payload_len: usize,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, Default)]
pub struct LoopbackReport {
    pub frames: usize,
    pub failures: Vec<FrameFailure>,
    /// Most frame bytes held between memory and wire in any single frame.
    pub max_in_flight: usize,
}

impl LoopbackReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&FailureKind) -> bool) -> usize {
        self.failures.iter().filter(|f| pred(&f.kind)).count()
    }
}

struct FramePlan {
    payload: Vec<u8>,
    tx_addr: u64,
    rx_addr: u64,
}

/// Sends `frames` random frames (payload 46..=1500 bytes, buffers at odd
/// offsets) from the bufferless transmitter into the bufferless receiver.
pub fn run_loopback(cfg: &ControllerConfig, frames: usize, seed: u64) -> LoopbackReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans: Vec<FramePlan> = (0..frames)
        .map(|_| {
            let len = rng.gen_range(MIN_PAYLOAD..=MAX_PAYLOAD);
            FramePlan {
                payload: (0..len).map(|_| rng.gen()).collect(),
                tx_addr: 0x1_0000 + rng.gen_range(0..64),
                rx_addr: 0x2_0000 + rng.gen_range(0..64),
            }
        })
        .collect();
    let header = test_header(cfg);
    let outcomes: Vec<(Option<FailureKind>, usize)> = plans
        .par_iter()
        .map(|p| {
            match loopback_frame(
                Design::Bufferless,
                cfg,
                &header,
                &p.payload,
                p.tx_addr,
                p.rx_addr,
            ) {
                Ok(o) => {
                    let kind = if let Some(after_body_octets) = o.underrun {
                        Some(FailureKind::Underrun { after_body_octets })
                    } else if o.overflow {
                        Some(FailureKind::Overflow)
                    } else if !o.fcs_ok {
                        Some(FailureKind::Fcs)
                    } else if o.delivered != o.expected {
                        let first_diff = o
                            .delivered
                            .iter()
                            .zip(&o.expected)
                            .take_while(|(a, b)| a == b)
                            .count();
                        Some(FailureKind::Mismatch { first_diff })
                    } else {
                        None
                    };
                    (kind, o.max_in_flight)
                }
                Err(TransactionError::Underrun { after_body_octets }) => {
                    (Some(FailureKind::Underrun { after_body_octets }), 0)
                }
                Err(e) => (Some(FailureKind::Error(e.to_string())), 0),
            }
        })
        .collect();
    let mut report = LoopbackReport {
        frames,
        ..Default::default()
    };
    for (index, (kind, in_flight)) in outcomes.into_iter().enumerate() {
        report.max_in_flight = report.max_in_flight.max(in_flight);
        if let Some(kind) = kind {
            report.failures.push(FrameFailure {
                index,
                payload_len: plans[index].payload.len(),
                kind,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frames_pass() {
        let r = run_loopback(&ControllerConfig::default(), 0, 5);
        assert!(r.passed());
        assert_eq!(r.frames, 0);
    }

    #[test]
    fn a_few_frames_pass() {
        let r = run_loopback(&ControllerConfig::default(), 8, 5);
        assert!(r.passed(), "{:?}", r.failures);
    }
}
