use crate::kernel::SimTime;
use crate::mac::FrameReport;

/// Timestamps and counters a transaction run needs for phase accounting and
/// post-run checks. Sys-domain values are edge indices, Ethernet-domain ones
/// are times.
#[derive(Debug, Clone, Default)]
pub struct Probe {
    pub config_end: Option<u64>,
    pub copy_end: Option<u64>,
    /// CPU cycles spent copying to or from the baseline buffers.
    pub copy_cycles: u64,
    pub tx_start: Option<SimTime>,
    pub tx_sfd: Option<SimTime>,
    pub tx_body_end: Option<SimTime>,
    pub tx_fcs_end: Option<SimTime>,
    pub tx_ok: Option<bool>,
    pub underrun: Option<usize>,
    pub tx_done_edge: Option<u64>,
    pub rx_report: Option<FrameReport>,
    pub rx_done_edge: Option<u64>,
    /// Every non-idle octet seen on the wire, in order.
    pub wire: Vec<u8>,
    pub warnings: Vec<String>,
    pub max_tx_fifo: usize,
    pub max_rx_fifo: usize,
    /// Largest number of frame bytes held anywhere between memory and wire.
    pub max_in_flight: usize,
}
