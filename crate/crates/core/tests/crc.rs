mod oracles;

use ethsim_core::frame::{
    crc32, decode, encode, frame_octets, Crc32, EthernetFrame, FrameHeader, MacAddress,
};
use oracles::crc32_bitwise;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn check_value() {
    assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    assert_eq!(crc32_bitwise(b"123456789"), 0xCBF4_3926);
    assert_eq!(crc32(b""), 0);
}

#[test]
fn table_matches_bit_serial_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for _ in 0..10_000 {
        let len = rng.gen_range(0..256);
        let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        assert_eq!(crc32(&data), crc32_bitwise(&data), "{data:02x?}");
    }
}

proptest! {
    #[test]
    fn streaming_equals_one_shot(data in proptest::collection::vec(any::<u8>(), 0..512), split in 0usize..512) {
        let split = split.min(data.len());
        let mut c = Crc32::new();
        c.update_slice(&data[..split]);
        for &b in &data[split..] {
            c.update(b);
        }
        prop_assert_eq!(c.finalize(), crc32_bitwise(&data));
    }

    #[test]
    fn frames_round_trip(dst in any::<[u8; 6]>(), src in any::<[u8; 6]>(), ethertype in 1536u16..,
                         payload in proptest::collection::vec(any::<u8>(), 0..1500)) {
        let header = FrameHeader { dst: MacAddress(dst), src: MacAddress(src), ethertype };
        let frame = EthernetFrame::new(header, payload.clone()).unwrap();
        let wire = encode(&frame).unwrap();
        prop_assert_eq!(wire.len(), 8 + 14 + payload.len().max(46) + 4);
        prop_assert_eq!(wire.octets(), &frame_octets(&header, &payload)[..]);
        let back = decode(wire.octets()).unwrap();
        prop_assert_eq!(back.header(), header);
    }

    #[test]
    fn any_single_bit_flip_is_caught(payload in proptest::collection::vec(any::<u8>(), 46..200), bit in 0usize..8 * 60) {
        let header = FrameHeader { dst: MacAddress([1; 6]), src: MacAddress([2; 6]), ethertype: 0x0800 };
        let mut octets = frame_octets(&header, &payload);
        let pos = 8 + bit / 8;
        octets[pos] ^= 1 << (bit % 8);
        prop_assert!(decode(&octets).is_err());
    }
}
