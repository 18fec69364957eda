use super::SocError;
use crate::frame::MacAddress;

pub mod offsets {
    pub const MAC_LO: u32 = 0x00;
    pub const MAC_HI: u32 = 0x04;
    pub const TX_SRC_LO: u32 = 0x08;
    pub const TX_SRC_HI: u32 = 0x0C;
    pub const TX_LEN: u32 = 0x10;
    pub const TX_START: u32 = 0x14;
    pub const RX_DST_LO: u32 = 0x18;
    pub const RX_DST_HI: u32 = 0x1C;
    pub const RX_BUF_LEN: u32 = 0x20;
    pub const RX_STATUS: u32 = 0x24;
    pub const IRQ_EN: u32 = 0x28;
    pub const IRQ_STATUS: u32 = 0x2C;
}

/// IRQ_EN / IRQ_STATUS bits.
pub mod irq {
    pub const TX_DONE: u32 = 1 << 0;
    pub const RX_DONE: u32 = 1 << 1;
    /// Bad FCS or receive overflow.
    pub const RX_ERR: u32 = 1 << 2;
    /// Transmit underrun.
    pub const TX_ERR: u32 = 1 << 3;
    pub const ALL: u32 = TX_DONE | RX_DONE | RX_ERR | TX_ERR;
}

/// RX_STATUS layout. Bits 0..=2 are write-one-to-clear, the rest read-only.
pub mod rx_status {
    pub const DONE: u32 = 1 << 0;
    pub const FCS_ERR: u32 = 1 << 1;
    pub const OVERFLOW: u32 = 1 << 2;
    pub const ARMED: u32 = 1 << 3;
    pub const W1C: u32 = DONE | FCS_ERR | OVERFLOW;
    pub const LEN_SHIFT: u32 = 16;
}

/// Side effect of a register write that the controller must act on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegEvent {
    TxStart {
        src: u64,
        len: u32,
    },
    RxArm {
        dst: u64,
        len: u32,
    },
    /// The write was dropped; surfaced as a warning in the trace.
    Ignored {
        offset: u32,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RegisterFile {
    mac_lo: u32,
    mac_hi: u32,
    tx_src: u64,
    tx_len: u32,
    tx_busy: bool,
    rx_dst: u64,
    rx_buf_len: u32,
    rx_armed: bool,
    rx_status: u32,
    irq_en: u32,
    irq_status: u32,
}

fn set_lo(v: u64, lo: u32) -> u64 {
    (v & !0xFFFF_FFFF) | u64::from(lo)
}

fn set_hi(v: u64, hi: u32) -> u64 {
    (v & 0xFFFF_FFFF) | (u64::from(hi) << 32)
}

impl RegisterFile {
    pub fn new() -> Self {
        Self::default()
    }

    fn check(offset: u32) -> Result<(), SocError> {
        if offset % 4 != 0 || u64::from(offset) >= super::REG_SPACE_END {
            return Err(SocError::BusFault {
                addr: u64::from(offset),
                len: 4,
            });
        }
        Ok(())
    }

    pub fn read(&self, offset: u32) -> Result<u32, SocError> {
        Self::check(offset)?;
        use offsets::*;
        let v = match offset {
            MAC_LO => self.mac_lo,
            MAC_HI => self.mac_hi,
            TX_SRC_LO => self.tx_src as u32,
            TX_SRC_HI => (self.tx_src >> 32) as u32,
            TX_LEN => self.tx_len,
            TX_START => u32::from(self.tx_busy),
            RX_DST_LO => self.rx_dst as u32,
            RX_DST_HI => (self.rx_dst >> 32) as u32,
            RX_BUF_LEN => self.rx_buf_len,
            RX_STATUS => self.rx_status | if self.rx_armed { rx_status::ARMED } else { 0 },
            IRQ_EN => self.irq_en,
            IRQ_STATUS => self.irq_status,
            _ => 0,
        };
        Ok(v)
    }

    pub fn write(&mut self, offset: u32, value: u32) -> Result<Option<RegEvent>, SocError> {
        Self::check(offset)?;
        use offsets::*;
        let busy = |offset| {
            Some(RegEvent::Ignored {
                offset,
                reason: "transmit in progress",
            })
        };
        let ev = match offset {
            MAC_LO => {
                self.mac_lo = value;
                None
            }
            MAC_HI => {
                self.mac_hi = value & 0xFFFF;
                None
            }
            TX_SRC_LO | TX_SRC_HI | TX_LEN if self.tx_busy => busy(offset),
            TX_SRC_LO => {
                self.tx_src = set_lo(self.tx_src, value);
                None
            }
            TX_SRC_HI => {
                self.tx_src = set_hi(self.tx_src, value);
                None
            }
            TX_LEN => {
                self.tx_len = value;
                None
            }
            TX_START if value & 1 == 0 => None,
            TX_START if self.tx_busy => busy(offset),
            TX_START if self.tx_len == 0 => Some(RegEvent::Ignored {
                offset,
                reason: "TX_LEN is zero",
            }),
            TX_START => {
                self.tx_busy = true;
                Some(RegEvent::TxStart {
                    src: self.tx_src,
                    len: self.tx_len,
                })
            }
            RX_DST_LO | RX_DST_HI | RX_BUF_LEN if self.rx_armed => Some(RegEvent::Ignored {
                offset,
                reason: "receive armed",
            }),
            RX_DST_LO => {
                self.rx_dst = set_lo(self.rx_dst, value);
                None
            }
            RX_DST_HI => {
                self.rx_dst = set_hi(self.rx_dst, value);
                None
            }
            RX_BUF_LEN if value == 0 => Some(RegEvent::Ignored {
                offset,
                reason: "zero-length receive buffer",
            }),
            RX_BUF_LEN => {
                self.rx_buf_len = value;
                self.rx_armed = true;
                self.rx_status &= !rx_status::W1C;
                Some(RegEvent::RxArm {
                    dst: self.rx_dst,
                    len: value,
                })
            }
            RX_STATUS => {
                self.rx_status &= !(value & rx_status::W1C);
                None
            }
            IRQ_EN => {
                self.irq_en = value & irq::ALL;
                None
            }
            IRQ_STATUS => {
                self.irq_status &= !value;
                None
            }
            _ => None,
        };
        Ok(ev)
    }

    fn raise(&mut self, bits: u32) {
        self.irq_status |= bits & self.irq_en;
    }

    /// Hardware side: the frame left the wire (or was aborted).
    pub fn tx_complete(&mut self, ok: bool) {
        self.tx_busy = false;
        self.raise(if ok {
            irq::TX_DONE
        } else {
            irq::TX_DONE | irq::TX_ERR
        });
    }

    /// Hardware side: a received frame has been fully written out.
    pub fn rx_complete(&mut self, len: usize, fcs_err: bool, overflow: bool) {
        self.rx_armed = false;
        let len = (len.min(0xFFFF) as u32) << rx_status::LEN_SHIFT;
        let mut st = rx_status::DONE | len;
        if fcs_err {
            st |= rx_status::FCS_ERR;
        }
        if overflow {
            st |= rx_status::OVERFLOW;
        }
        self.rx_status = st;
        self.raise(irq::RX_DONE | if fcs_err || overflow { irq::RX_ERR } else { 0 });
    }

    pub fn mac(&self) -> MacAddress {
        MacAddress::from_registers(self.mac_lo, self.mac_hi)
    }

    pub fn tx_busy(&self) -> bool {
        self.tx_busy
    }

    pub fn tx_src(&self) -> u64 {
        self.tx_src
    }

    pub fn tx_len(&self) -> u32 {
        self.tx_len
    }

    pub fn rx_armed(&self) -> bool {
        self.rx_armed
    }

    pub fn rx_dst(&self) -> u64 {
        self.rx_dst
    }

    pub fn rx_buf_len(&self) -> u32 {
        self.rx_buf_len
    }

    pub fn rx_done(&self) -> bool {
        self.rx_status & rx_status::DONE != 0
    }

    pub fn rx_len(&self) -> usize {
        (self.rx_status >> rx_status::LEN_SHIFT) as usize
    }

    pub fn irq_status(&self) -> u32 {
        self.irq_status
    }
}
