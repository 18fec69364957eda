//! Fixtures shared by the criterion benches.

use ethsim_core::controller::ControllerConfig;
use ethsim_core::frame::FrameHeader;
use ethsim_core::harness::test_header;

/// Deterministic payload of `len` bytes.
pub fn payload(len: usize) -> Vec<u8> {
    (0..len)
        .map(|i| (i as u32).wrapping_mul(2_654_435_761).to_le_bytes()[3])
        .collect()
}

pub fn header() -> FrameHeader {
    test_header(&ControllerConfig::default())
}
