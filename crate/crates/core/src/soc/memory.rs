use super::SocError;

/// Result of a timed burst access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Burst {
    /// Bus-aligned words touched, in address order.
    pub beats: usize,
    /// Data-phase cycles: `beats * latency`, the port is not pipelined.
    pub cycles: u64,
    pub data: Vec<u8>,
}

/// Byte-addressable single-port memory.
#[derive(Debug, Clone)]
pub struct MemoryModel {
    bytes: Vec<u8>,
    read_latency: u32,
    write_latency: u32,
}

impl MemoryModel {
    pub fn new(size: usize, read_latency: u32, write_latency: u32) -> Result<Self, SocError> {
        if read_latency == 0 || write_latency == 0 {
            return Err(SocError::ZeroLatency);
        }
        Ok(MemoryModel {
            bytes: vec![0; size],
            read_latency,
            write_latency,
        })
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn read_latency(&self) -> u32 {
        self.read_latency
    }

    pub fn write_latency(&self) -> u32 {
        self.write_latency
    }

    fn range(&self, addr: u64, len: usize) -> Result<std::ops::Range<usize>, SocError> {
        let fault = SocError::BusFault { addr, len };
        let start = usize::try_from(addr).map_err(|_| fault.clone())?;
        let end = start.checked_add(len).ok_or(fault.clone())?;
        if end > self.bytes.len() {
            return Err(fault);
        }
        Ok(start..end)
    }

    pub fn check_range(&self, addr: u64, len: usize) -> Result<(), SocError> {
        self.range(addr, len).map(|_| ())
    }

    pub fn read(&self, addr: u64, len: usize) -> Result<&[u8], SocError> {
        let r = self.range(addr, len)?;
        Ok(&self.bytes[r])
    }

    pub fn write(&mut self, addr: u64, data: &[u8]) -> Result<(), SocError> {
        let r = self.range(addr, data.len())?;
        self.bytes[r].copy_from_slice(data);
        Ok(())
    }

    fn beats(addr: u64, len: usize, bus_width: usize) -> usize {
        if len == 0 {
            return 0;
        }
        let w = bus_width as u64;
        let first = addr / w;
        let last = (addr + len as u64 - 1) / w;
        (last - first + 1) as usize
    }

    pub fn read_burst(&self, addr: u64, len: usize, bus_width: usize) -> Result<Burst, SocError> {
        let data = self.read(addr, len)?.to_vec();
        let beats = Self::beats(addr, len, bus_width);
        Ok(Burst {
            beats,
            cycles: beats as u64 * u64::from(self.read_latency),
            data,
        })
    }

    pub fn write_burst(
        &mut self,
        addr: u64,
        data: &[u8],
        bus_width: usize,
    ) -> Result<Burst, SocError> {
        self.write(addr, data)?;
        let beats = Self::beats(addr, data.len(), bus_width);
        Ok(Burst {
            beats,
            cycles: beats as u64 * u64::from(self.write_latency),
            data: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let mut m = MemoryModel::new(0x1000, 1, 1).unwrap();
        m.write(0x100, &[1, 2, 3]).unwrap();
        assert_eq!(m.read(0x100, 3).unwrap(), &[1, 2, 3]);
    }

    #[test]
    fn out_of_range_is_a_bus_fault() {
        let mut m = MemoryModel::new(0x100, 1, 1).unwrap();
        assert_eq!(
            m.read(0xFE, 4),
            Err(SocError::BusFault { addr: 0xFE, len: 4 })
        );
        assert!(m.write(0x100, &[0]).is_err());
        assert!(m.read(u64::MAX, 2).is_err());
        assert!(m.read(0xFC, 4).is_ok());
    }

    #[test]
    fn burst_costs_latency_per_beat() {
        let m = MemoryModel::new(0x1000, 1, 1).unwrap();
        let b = m.read_burst(0, 64, 8).unwrap();
        assert_eq!((b.beats, b.cycles), (8, 8));
        let m = MemoryModel::new(0x1000, 3, 2).unwrap();
        let b = m.read_burst(4, 16, 8).unwrap();
        assert_eq!((b.beats, b.cycles), (3, 9));
    }

    #[test]
    fn zero_latency_rejected() {
        assert_eq!(
            MemoryModel::new(16, 0, 1).unwrap_err(),
            SocError::ZeroLatency
        );
    }
}
