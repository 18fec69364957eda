use thiserror::Error;

use crate::kernel::DomainId;

/// Faults that stop a simulation run.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown clock domain {0:?}")]
    UnknownDomain(DomainId),
    #[error("protocol violation in {component}: {detail}")]
    Protocol { component: String, detail: String },
    #[error("trace output failed: {0}")]
    Trace(String),
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Trace(e.to_string())
    }
}

impl SimError {
    pub fn protocol(component: impl Into<String>, detail: impl Into<String>) -> Self {
        SimError::Protocol {
            component: component.into(),
            detail: detail.into(),
        }
    }
}
