use std::fmt;
use std::ops::{Add, Sub};

use crate::error::SimError;

/// Picoseconds in one second.
pub const PS_PER_SECOND: u64 = 1_000_000_000_000;

/// Ethernet-side clock: 125 MHz, one octet per cycle at 1 Gb/s.
pub const ETH_PERIOD_PS: u64 = 8_000;

/// Default system-side clock: 50 MHz.
pub const SYS_DEFAULT_PERIOD_PS: u64 = 20_000;

/// Absolute simulation time in integer picoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * 1_000_000)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ps", self.0)
    }
}

/// A free-running clock. Rising edge `n` (1-based) occurs at
/// `phase_ps + n * period_ps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockDomain {
    name: String,
    period_ps: u64,
    phase_ps: u64,
}

impl ClockDomain {
    pub fn new(name: impl Into<String>, period_ps: u64, phase_ps: u64) -> Result<Self, SimError> {
        let name = name.into();
        if period_ps == 0 {
            return Err(SimError::Config(format!(
                "clock {name}: period must be positive"
            )));
        }
        if phase_ps >= period_ps {
            return Err(SimError::Config(format!(
                "clock {name}: phase {phase_ps} ps must be below period {period_ps} ps"
            )));
        }
        Ok(ClockDomain {
            name,
            period_ps,
            phase_ps,
        })
    }

    /// Builds a clock from a frequency in hertz. The frequency must divide
    /// 10^12 so the period is an exact number of picoseconds.
    pub fn from_hz(name: impl Into<String>, hz: u64) -> Result<Self, SimError> {
        let name = name.into();
        if hz == 0 || PS_PER_SECOND % hz != 0 {
            return Err(SimError::Config(format!(
                "clock {name}: {hz} Hz does not give an integer picosecond period"
            )));
        }
        ClockDomain::new(name, PS_PER_SECOND / hz, 0)
    }

    /// The fixed 125 MHz Ethernet domain.
    pub fn ethernet() -> Self {
        ClockDomain {
            name: "eth".into(),
            period_ps: ETH_PERIOD_PS,
            phase_ps: 0,
        }
    }

    /// The default 50 MHz system domain.
    pub fn system_default() -> Self {
        ClockDomain {
            name: "sys".into(),
            period_ps: SYS_DEFAULT_PERIOD_PS,
            phase_ps: 0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period_ps(&self) -> u64 {
        self.period_ps
    }

    pub fn phase_ps(&self) -> u64 {
        self.phase_ps
    }

    pub fn frequency_hz(&self) -> f64 {
        PS_PER_SECOND as f64 / self.period_ps as f64
    }

    /// Time of rising edge `n` (1-based).
    pub fn edge_time(&self, n: u64) -> SimTime {
        SimTime(self.phase_ps + n * self.period_ps)
    }

    /// Number of rising edges at or before `t`.
    pub fn edges_through(&self, t: SimTime) -> u64 {
        if t.0 < self.phase_ps + self.period_ps {
            0
        } else {
            (t.0 - self.phase_ps) / self.period_ps
        }
    }

    /// Index of the first rising edge at or after `t`, i.e. the edge on which
    /// an event at `t` becomes observable in this domain.
    pub fn edge_at_or_after(&self, t: SimTime) -> u64 {
        if t.0 <= self.phase_ps {
            return 0;
        }
        (t.0 - self.phase_ps).div_ceil(self.period_ps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_must_divide_picosecond_second() {
        assert_eq!(
            ClockDomain::from_hz("s", 50_000_000).unwrap().period_ps(),
            20_000
        );
        assert_eq!(
            ClockDomain::from_hz("s", 125_000_000).unwrap().period_ps(),
            8_000
        );
        assert!(ClockDomain::from_hz("s", 3).is_err());
        assert!(ClockDomain::from_hz("s", 0).is_err());
        assert!(ClockDomain::from_hz("s", 333_000_000).is_err());
    }

    #[test]
    fn phase_must_be_inside_period() {
        assert!(ClockDomain::new("x", 10, 10).is_err());
        assert!(ClockDomain::new("x", 0, 0).is_err());
        assert!(ClockDomain::new("x", 10, 9).is_ok());
    }

    #[test]
    fn edge_arithmetic() {
        let eth = ClockDomain::ethernet();
        assert_eq!(eth.edge_time(10), SimTime::from_ps(80_000));
        assert_eq!(eth.edges_through(SimTime::from_ps(80_000)), 10);
        assert_eq!(eth.edges_through(SimTime::from_ps(79_999)), 9);
        assert_eq!(eth.edges_through(SimTime::ZERO), 0);

        let sys = ClockDomain::system_default();
        assert_eq!(sys.edge_at_or_after(SimTime::from_ps(40_000)), 2);
        assert_eq!(sys.edge_at_or_after(SimTime::from_ps(40_001)), 3);
        assert_eq!(sys.edge_at_or_after(SimTime::ZERO), 0);

        let shifted = ClockDomain::new("p", 100, 30).unwrap();
        assert_eq!(shifted.edge_time(1), SimTime::from_ps(130));
        assert_eq!(shifted.edges_through(SimTime::from_ps(129)), 0);
        assert_eq!(shifted.edges_through(SimTime::from_ps(130)), 1);
        assert_eq!(shifted.edge_at_or_after(SimTime::from_ps(131)), 2);
    }
}
