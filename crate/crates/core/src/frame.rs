//! IEEE 802.3 framing: preamble/SFD, header, minimum-size padding and the
//! CRC-32 frame check sequence.

use std::fmt;

use thiserror::Error;

pub const PREAMBLE_OCTET: u8 = 0x55;
pub const SFD_OCTET: u8 = 0xD5;
pub const PREAMBLE_LEN: usize = 7;
/// Preamble plus SFD.
pub const START_LEN: usize = PREAMBLE_LEN + 1;
pub const HEADER_LEN: usize = 14;
pub const MIN_PAYLOAD: usize = 46;
pub const MAX_PAYLOAD: usize = 1500;
pub const FCS_LEN: usize = 4;
/// Smallest legal wire frame, preamble through FCS.
pub const MIN_WIRE_LEN: usize = START_LEN + HEADER_LEN + MIN_PAYLOAD + FCS_LEN;
/// Ethertype values below this are 802.3 length fields.
pub const ETHERTYPE_MIN: u16 = 1536;

/// Reflected form of the 802.3 generator 0x04C11DB7.
const POLY_REFLECTED: u32 = 0xEDB8_8320;

const fn build_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 {
                (c >> 1) ^ POLY_REFLECTED
            } else {
                c >> 1
            };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

static CRC_TABLE: [u32; 256] = build_table();

/// Running FCS state, fed one octet at a time as the MAC sees the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crc32 {
    state: u32,
}

impl Default for Crc32 {
    fn default() -> Self {
        Crc32::new()
    }
}

impl Crc32 {
    pub const fn new() -> Self {
        Crc32 { state: 0xFFFF_FFFF }
    }

    #[inline]
    pub fn update(&mut self, octet: u8) {
        self.state = (self.state >> 8) ^ CRC_TABLE[((self.state ^ octet as u32) & 0xFF) as usize];
    }

    pub fn update_slice(&mut self, data: &[u8]) {
        for &b in data {
            self.update(b);
        }
    }

    pub fn finalize(&self) -> u32 {
        !self.state
    }
}

/// One-shot Ethernet FCS.
pub fn crc32(data: &[u8]) -> u32 {
    let mut c = Crc32::new();
    c.update_slice(data);
    c.finalize()
}

/// FCS octets in transmission order (least significant byte first).
pub fn fcs_octets(fcs: u32) -> [u8; 4] {
    fcs.to_le_bytes()
}

/// Total wire length for a payload of `payload_len` bytes.
pub fn wire_len(payload_len: usize) -> usize {
    START_LEN + HEADER_LEN + payload_len.max(MIN_PAYLOAD) + FCS_LEN
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MacAddress(pub [u8; 6]);

impl MacAddress {
    pub const BROADCAST: MacAddress = MacAddress([0xFF; 6]);

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }

    /// Split into the MAC_LO / MAC_HI register values.
    pub fn to_registers(&self) -> (u32, u32) {
        let o = self.0;
        (
            u32::from_le_bytes([o[0], o[1], o[2], o[3]]),
            u32::from(u16::from_le_bytes([o[4], o[5]])),
        )
    }

    pub fn from_registers(lo: u32, hi: u32) -> Self {
        let l = lo.to_le_bytes();
        let h = (hi as u16).to_le_bytes();
        MacAddress([l[0], l[1], l[2], l[3], h[0], h[1]])
    }
}

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

/// Layer-2 header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub ethertype: u16,
}

impl FrameHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..6].copy_from_slice(&self.dst.0);
        h[6..12].copy_from_slice(&self.src.0);
        h[12..].copy_from_slice(&self.ethertype.to_be_bytes());
        h
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Self {
        let mut dst = [0u8; 6];
        let mut src = [0u8; 6];
        dst.copy_from_slice(&b[..6]);
        src.copy_from_slice(&b[6..12]);
        FrameHeader {
            dst: MacAddress(dst),
            src: MacAddress(src),
            ethertype: u16::from_be_bytes([b[12], b[13]]),
        }
    }
}

impl Default for FrameHeader {
    fn default() -> Self {
        FrameHeader {
            dst: MacAddress([0x02, 0x00, 0x00, 0x00, 0x00, 0x02]),
            src: MacAddress([0x02, 0x00, 0x00, 0x00, 0x00, 0x01]),
            ethertype: 0x88B5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EthernetFrame {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub ethertype: u16,
    pub payload: Vec<u8>,
}

impl EthernetFrame {
    pub fn new(header: FrameHeader, payload: Vec<u8>) -> Result<Self, FrameError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(FrameError::Oversize { len: payload.len() });
        }
        Ok(EthernetFrame {
            dst: header.dst,
            src: header.src,
            ethertype: header.ethertype,
            payload,
        })
    }

    pub fn header(&self) -> FrameHeader {
        FrameHeader {
            dst: self.dst,
            src: self.src,
            ethertype: self.ethertype,
        }
    }
}

/// The exact octet sequence on the line, preamble through FCS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireFrame(Vec<u8>);

impl WireFrame {
    pub fn octets(&self) -> &[u8] {
        &self.0
    }

    pub fn into_octets(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every octet the FCS covers, padding included.
    pub fn body(&self) -> &[u8] {
        &self.0[START_LEN..self.0.len() - FCS_LEN]
    }

    pub fn fcs(&self) -> u32 {
        let n = self.0.len();
        u32::from_le_bytes([self.0[n - 4], self.0[n - 3], self.0[n - 2], self.0[n - 1]])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload of {len} bytes exceeds the {MAX_PAYLOAD}-byte maximum")]
    Oversize { len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("frame of {len} octets is shorter than the {MIN_WIRE_LEN}-octet minimum")]
    Runt { len: usize },
    #[error("preamble octet {index} is {found:#04x}")]
    BadPreamble { index: usize, found: u8 },
    #[error("start frame delimiter is {found:#04x}")]
    BadSfd { found: u8 },
    #[error("FCS mismatch: computed {computed:#010x}, received {received:#010x}")]
    BadFcs { computed: u32, received: u32 },
    #[error("payload of {len} bytes exceeds the {MAX_PAYLOAD}-byte maximum")]
    Oversize { len: usize },
}

/// Header plus payload, zero-padded to the minimum frame size.
pub fn padded_body(header: &FrameHeader, payload: &[u8]) -> Vec<u8> {
    let mut body = Vec::with_capacity(HEADER_LEN + payload.len().max(MIN_PAYLOAD));
    body.extend_from_slice(&header.to_bytes());
    body.extend_from_slice(payload);
    body.resize(HEADER_LEN + payload.len().max(MIN_PAYLOAD), 0);
    body
}

/// Frames arbitrary header+payload bytes without the MTU check. The bufferless
/// controller streams payloads larger than a standard frame, so the MAC path
/// needs this form.
pub fn frame_octets(header: &FrameHeader, payload: &[u8]) -> Vec<u8> {
    let body = padded_body(header, payload);
    let mut out = Vec::with_capacity(START_LEN + body.len() + FCS_LEN);
    out.extend_from_slice(&[PREAMBLE_OCTET; PREAMBLE_LEN]);
    out.push(SFD_OCTET);
    out.extend_from_slice(&body);
    out.extend_from_slice(&fcs_octets(crc32(&body)));
    out
}

pub fn encode(frame: &EthernetFrame) -> Result<WireFrame, FrameError> {
    if frame.payload.len() > MAX_PAYLOAD {
        return Err(FrameError::Oversize {
            len: frame.payload.len(),
        });
    }
    Ok(WireFrame(frame_octets(&frame.header(), &frame.payload)))
}

pub fn decode(octets: &[u8]) -> Result<EthernetFrame, DecodeError> {
    if octets.len() < MIN_WIRE_LEN {
        return Err(DecodeError::Runt { len: octets.len() });
    }
    if let Some(index) = octets[..PREAMBLE_LEN]
        .iter()
        .position(|&b| b != PREAMBLE_OCTET)
    {
        return Err(DecodeError::BadPreamble {
            index,
            found: octets[index],
        });
    }
    if octets[PREAMBLE_LEN] != SFD_OCTET {
        return Err(DecodeError::BadSfd {
            found: octets[PREAMBLE_LEN],
        });
    }
    let n = octets.len();
    let body = &octets[START_LEN..n - FCS_LEN];
    let received = u32::from_le_bytes([octets[n - 4], octets[n - 3], octets[n - 2], octets[n - 1]]);
    let computed = crc32(body);
    if computed != received {
        return Err(DecodeError::BadFcs { computed, received });
    }
    let mut hdr = [0u8; HEADER_LEN];
    hdr.copy_from_slice(&body[..HEADER_LEN]);
    let header = FrameHeader::from_bytes(&hdr);
    let data = &body[HEADER_LEN..];
    let payload = if header.ethertype < ETHERTYPE_MIN && usize::from(header.ethertype) <= data.len()
    {
        &data[..usize::from(header.ethertype)]
    } else {
        data
    };
    if payload.len() > MAX_PAYLOAD {
        return Err(DecodeError::Oversize { len: payload.len() });
    }
    Ok(EthernetFrame {
        dst: header.dst,
        src: header.src,
        ethertype: header.ethertype,
        payload: payload.to_vec(),
    })
}
