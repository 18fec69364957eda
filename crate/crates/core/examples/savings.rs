//! Prints the phase breakdown of one 1024-byte transmit on both designs.

use ethsim_core::controller::{savings, tx_transaction, ControllerConfig, Design};
use ethsim_core::harness::test_header;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ControllerConfig::default();
    let header = test_header(&cfg);
    let payload = vec![0x5A; 1024];
    let buffered = tx_transaction(Design::Buffered, &cfg, &header, &payload, None)?;
    let bufferless = tx_transaction(Design::Bufferless, &cfg, &header, &payload, None)?;
    for o in [&buffered, &bufferless] {
        println!(
            "{:<10} {:?} total {}",
            o.design.as_str(),
            o.phases,
            o.phases.total()
        );
    }
    println!(
        "savings {:.2}%",
        savings(&buffered.phases, &bufferless.phases)
    );
    Ok(())
}
