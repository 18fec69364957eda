mod oracles;

use ethsim_core::axis::{downsize, upsize, Downsizer, StreamBeat, Upsizer};
use oracles::{packetize, packets_of};
use proptest::prelude::*;

fn stream(packets: &[Vec<u8>], width: usize) -> Vec<StreamBeat> {
    packets.iter().flat_map(|p| packetize(p, width)).collect()
}

proptest! {
    #[test]
    fn upsize_after_downsize_is_identity(
        packets in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 1..300), 1..8),
        wexp in 1u32..7,
        nexp in 0u32..7,
    ) {
        let wide = 1usize << wexp.max(nexp);
        let narrow = 1usize << nexp.min(wexp);
        let beats = stream(&packets, wide);
        let down = downsize(&beats, narrow).unwrap();
        prop_assert_eq!(packets_of(&down), packets.clone());
        prop_assert!(down.iter().all(|b| b.width() == narrow));
        let up = upsize(&down, wide).unwrap();
        prop_assert_eq!(up, beats);
    }

    #[test]
    fn sizers_hold_at_most_their_bound(
        packet in proptest::collection::vec(any::<u8>(), 1..200),
        mut stalls in proptest::collection::vec(any::<bool>(), 0..64),
    ) {
        // At least one ready edge per period so the stream drains.
        stalls.push(false);
        // Byte stream into an 8-byte upsizer whose sink stalls randomly.
        let mut u = Upsizer::new(1, 8).unwrap();
        let mut out = Vec::new();
        let mut i = 0;
        let mut edge = 0;
        while out.iter().map(|b: &StreamBeat| b.len()).sum::<usize>() < packet.len() {
            if !stalls[edge % stalls.len()] {
                if let Some(b) = u.pop() {
                    out.push(b);
                }
            }
            if i < packet.len() && u.can_accept() {
                u.push(StreamBeat::from_bytes(&packet[i..=i], 1, i + 1 == packet.len()).unwrap()).unwrap();
                i += 1;
            }
            prop_assert!(u.held_bytes() <= 2 * 8);
            edge += 1;
            prop_assert!(edge < 10_000);
        }
        prop_assert_eq!(packets_of(&out), vec![packet.clone()]);

        let mut d = Downsizer::new(8, 1).unwrap();
        for b in packetize(&packet, 8) {
            prop_assert!(d.can_accept());
            d.push(b).unwrap();
            prop_assert!(d.held_bytes() <= 8);
            while d.pop().is_some() {}
        }
    }
}

#[test]
fn mismatched_widths_are_rejected() {
    let beats = packetize(&[1, 2, 3], 4);
    assert!(upsize(&beats, 2).is_err());
    assert!(downsize(&beats, 8).is_err());
}
