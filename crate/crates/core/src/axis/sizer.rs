use std::collections::VecDeque;

use super::{check_width, AxisError, StreamBeat};

/// Splits wide beats into narrower ones.
#[derive(Debug, Clone)]
pub struct Downsizer {
    in_width: usize,
    out_width: usize,
    buf: VecDeque<u8>,
    last: bool,
}

impl Downsizer {
    pub fn new(in_width: usize, out_width: usize) -> Result<Self, AxisError> {
        check_width(in_width)?;
        check_width(out_width)?;
        if in_width < out_width || in_width % out_width != 0 {
            return Err(AxisError::IncompatibleWidths {
                from: in_width,
                to: out_width,
            });
        }
        Ok(Downsizer {
            in_width,
            out_width,
            buf: VecDeque::with_capacity(in_width),
            last: false,
        })
    }

    pub fn can_accept(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, beat: StreamBeat) -> Result<(), AxisError> {
        if beat.width() != self.in_width {
            return Err(AxisError::WidthMismatch {
                expected: self.in_width,
                got: beat.width(),
            });
        }
        if !self.can_accept() {
            return Err(AxisError::SizerOverrun);
        }
        self.buf.extend(beat.bytes());
        self.last = beat.last();
        Ok(())
    }

    /// Next narrow beat, if any bytes are held.
    pub fn pop(&mut self) -> Option<StreamBeat> {
        if self.buf.is_empty() {
            return None;
        }
        let n = self.out_width.min(self.buf.len());
        let chunk: Vec<u8> = self.buf.drain(..n).collect();
        let last = self.last && self.buf.is_empty();
        Some(
            StreamBeat::from_bytes(&chunk, self.out_width, last)
                .expect("chunk fits the output width"),
        )
    }

    pub fn held_bytes(&self) -> usize {
        self.buf.len()
    }

    pub fn holds_last(&self) -> bool {
        self.last && !self.buf.is_empty()
    }
}

/// Packs narrow beats into wider ones, flushing early on `last`.
#[derive(Debug, Clone)]
pub struct Upsizer {
    in_width: usize,
    out_width: usize,
    acc: Vec<u8>,
    /// Completed beats. Two slots let the sink stall for an edge while one
    /// more input is absorbed, whether or not that input carries `last`.
    out: VecDeque<StreamBeat>,
}

const UPSIZER_OUT_SLOTS: usize = 2;

impl Upsizer {
    pub fn new(in_width: usize, out_width: usize) -> Result<Self, AxisError> {
        check_width(in_width)?;
        check_width(out_width)?;
        if out_width < in_width || out_width % in_width != 0 {
            return Err(AxisError::IncompatibleWidths {
                from: in_width,
                to: out_width,
            });
        }
        Ok(Upsizer {
            in_width,
            out_width,
            acc: Vec::with_capacity(out_width),
            out: VecDeque::with_capacity(UPSIZER_OUT_SLOTS),
        })
    }

    /// True when the next input beat can be absorbed even if the output
    /// does not drain first.
    pub fn can_accept(&self) -> bool {
        self.out.len() < UPSIZER_OUT_SLOTS
    }

    pub fn push(&mut self, beat: StreamBeat) -> Result<(), AxisError> {
        if beat.width() != self.in_width {
            return Err(AxisError::WidthMismatch {
                expected: self.in_width,
                got: beat.width(),
            });
        }
        let completes = beat.last() || self.acc.len() + beat.len() >= self.out_width;
        if completes && self.out.len() == UPSIZER_OUT_SLOTS {
            return Err(AxisError::SizerOverrun);
        }
        self.acc.extend_from_slice(beat.bytes());
        if completes {
            let out = StreamBeat::from_bytes(&self.acc, self.out_width, beat.last())
                .expect("accumulator never exceeds the output width");
            self.acc.clear();
            self.out.push_back(out);
        }
        Ok(())
    }

    pub fn peek(&self) -> Option<&StreamBeat> {
        self.out.front()
    }

    pub fn pop(&mut self) -> Option<StreamBeat> {
        self.out.pop_front()
    }

    pub fn held_bytes(&self) -> usize {
        self.acc.len() + self.out.iter().map(StreamBeat::len).sum::<usize>()
    }
}

/// Converts a beat stream to a narrower width.
pub fn downsize(beats: &[StreamBeat], out_width: usize) -> Result<Vec<StreamBeat>, AxisError> {
    let Some(first) = beats.first() else {
        return Ok(Vec::new());
    };
    let mut d = Downsizer::new(first.width(), out_width)?;
    let mut out = Vec::new();
    for b in beats {
        d.push(b.clone())?;
        while let Some(o) = d.pop() {
            out.push(o);
        }
    }
    Ok(out)
}

/// Converts a beat stream to a wider width.
pub fn upsize(beats: &[StreamBeat], out_width: usize) -> Result<Vec<StreamBeat>, AxisError> {
    let Some(first) = beats.first() else {
        return Ok(Vec::new());
    };
    let mut u = Upsizer::new(first.width(), out_width)?;
    let mut out = Vec::new();
    for b in beats {
        u.push(b.clone())?;
        if let Some(o) = u.pop() {
            out.push(o);
        }
    }
    Ok(out)
}
