pub mod axis;
pub mod controller;
pub mod dma;
pub mod error;
pub mod frame;
pub mod harness;
pub mod kernel;
pub mod mac;
pub mod soc;

pub use error::SimError;
