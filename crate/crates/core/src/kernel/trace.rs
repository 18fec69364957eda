//! Append-only CSV trace sink shared by every component of a kernel.
//!
//! Rows are `time_ps,domain,edge_index,component,event,value`. Wire activity
//! uses the same layout with `component = wire`, `event = octet|idle` and the
//! octet in hex as the value.

use std::fmt::Display;
use std::io::Write;

use crate::error::SimError;

pub const TRACE_HEADER: [&str; 6] = [
    "time_ps",
    "domain",
    "edge_index",
    "component",
    "event",
    "value",
];

#[derive(Default)]
pub struct Tracer {
    out: Option<csv::Writer<Box<dyn Write + Send>>>,
    rows: u64,
}

impl Tracer {
    pub fn disabled() -> Self {
        Tracer::default()
    }

    pub fn to_writer(sink: Box<dyn Write + Send>) -> Result<Self, SimError> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(sink);
        w.write_record(TRACE_HEADER)?;
        Ok(Tracer {
            out: Some(w),
            rows: 0,
        })
    }

    #[inline]
    pub fn enabled(&self) -> bool {
        self.out.is_some()
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn emit(
        &mut self,
        time_ps: u64,
        domain: &str,
        edge_index: u64,
        component: &str,
        event: &str,
        value: impl Display,
    ) -> Result<(), SimError> {
        if let Some(w) = self.out.as_mut() {
            w.write_record([
                time_ps.to_string().as_str(),
                domain,
                edge_index.to_string().as_str(),
                component,
                event,
                value.to_string().as_str(),
            ])?;
            self.rows += 1;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), SimError> {
        if let Some(w) = self.out.as_mut() {
            w.flush().map_err(|e| SimError::Trace(e.to_string()))?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for Tracer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tracer")
            .field("enabled", &self.enabled())
            .field("rows", &self.rows)
            .finish()
    }
}
