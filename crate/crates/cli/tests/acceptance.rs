//! One PASS/FAIL line per acceptance criterion, each timed against its
//! runtime budget. Runs without the libtest harness so the lines always
//! show up in `cargo test` output.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use ethsim_core::axis::{downsize, upsize, Downsizer, StreamBeat, Upsizer};
use ethsim_core::controller::{tx_transaction, ControllerConfig, Design, TransactionError};
use ethsim_core::dma::{legalize, Direction, TransferRequest};
use ethsim_core::frame::{crc32, frame_octets};
use ethsim_core::harness::{run_bench, run_cdc_stress, run_loopback, test_header, BenchConfig};
use oracles::{cdc_against_queue, check_legalized, crc32_bitwise, packetize, packets_of};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Name, runtime limit in seconds, and the check itself.
type Criterion = (&'static str, Option<u64>, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn payload(n: usize) -> Vec<u8> {
    (0..n).map(|i| (i * 131 + 17) as u8).collect()
}

fn buffer_capacity() -> Check {
    let cfg = ControllerConfig::default();
    let header = test_header(&cfg);
    let sink = SharedBuf::default();
    let r = tx_transaction(
        Design::Buffered,
        &cfg,
        &header,
        &payload(2048),
        Some(Box::new(sink.clone())),
    );
    let Err(TransactionError::BufferOverflow {
        frame_octets: n,
        capacity,
    }) = r
    else {
        return Err(format!("buffered design did not overflow: {r:?}"));
    };
    let trace = String::from_utf8(sink.0.lock().unwrap().clone()).map_err(|e| e.to_string())?;
    ensure(!trace.contains(",wire,"), || {
        "buffered design touched the wire".into()
    })?;
    let ok = tx_transaction(Design::Bufferless, &cfg, &header, &payload(2048), None)
        .map_err(|e| e.to_string())?;
    ensure(ok.wire.len() == 8 + 14 + 2048 + 4, || {
        format!("bufferless sent {} octets", ok.wire.len())
    })?;
    Ok(format!(
        "buffered: {n} B frame > {capacity} B buffer, no wire activity; bufferless: {} octets",
        ok.wire.len()
    ))
}

fn calibration_file() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/calibrated.conf")
}

fn savings() -> Check {
    let default = run_bench(&BenchConfig::default()).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(calibration_file()).map_err(|e| e.to_string())?;
    let calibrated = run_bench(&BenchConfig::from_text(&text).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (p, published) in [(256, 62.97), (512, 60.42), (1024, 64.48)] {
        let d = default
            .savings(p)
            .ok_or(format!("no default savings at {p} B"))?;
        let c = calibrated
            .savings(p)
            .ok_or(format!("no calibrated savings at {p} B"))?;
        ensure(d > 50.0, || format!("default savings at {p} B is {d:.2}%"))?;
        ensure((c - published).abs() <= 10.0, || {
            format!("calibrated {c:.2}% at {p} B, target {published}%")
        })?;
        parts.push(format!("{p} B {d:.2}%/{c:.2}%"));
    }
    Ok(format!("default/calibrated: {}", parts.join(", ")))
}

fn wire_time_law() -> Check {
    let cfg = ControllerConfig::default();
    let header = test_header(&cfg);
    let mut runs = 0;
    for p in [10, 46, 256, 512, 1024, 1500] {
        for d in [Design::Buffered, Design::Bufferless] {
            let o = tx_transaction(d, &cfg, &header, &payload(p), None)
                .map_err(|e| format!("{d} {p}: {e}"))?;
            let want = 8 + 14 + p.max(46) + 4;
            ensure(o.wire.len() == want, || {
                format!("{d} {p} B: {} active cycles, want {want}", o.wire.len())
            })?;
            ensure(o.wire == frame_octets(&header, &payload(p)), || {
                format!("{d} {p} B: octets differ")
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, active cycles = 8+14+max(P,46)+4"))
}

fn crc_conformance() -> Check {
    ensure(crc32(b"123456789") == 0xCBF4_3926, || {
        format!("check value {:#010x}", crc32(b"123456789"))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3C);
    for i in 0..10_000 {
        let len = rng.gen_range(0..2048);
        let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        ensure(crc32(&data) == crc32_bitwise(&data), || {
            format!("input {i} ({len} B) disagrees")
        })?;
    }
    Ok("check value 0xCBF43926, 10000 random inputs match the bit-serial oracle".into())
}

fn loopback_integrity() -> Check {
    let r = run_loopback(&ControllerConfig::default(), 1_000, 1);
    if let Some(f) = r.failures.first() {
        return Err(format!(
            "{} of 1000 frames failed; first: frame {} {:?}",
            r.failures.len(),
            f.index,
            f.kind
        ));
    }
    Ok(format!(
        "1000 frames byte-identical with good FCS, peak {} B in flight",
        r.max_in_flight
    ))
}

fn cdc_and_streams() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let run = cdc_against_queue(&mut rng, 16, 2, 10_000)?;
    ensure(run.received == (0..10_000).collect::<Vec<u64>>(), || {
        "items lost, duplicated or reordered".into()
    })?;
    ensure(run.max_occupancy <= 16, || {
        format!("occupancy {} > 16", run.max_occupancy)
    })?;

    let cfg = ControllerConfig::default();
    let stress = run_cdc_stress(&cfg, 10_000, 6, None).map_err(|e| e.to_string())?;
    ensure(stress.in_order && stress.received == 10_000, || {
        "two-clock stress lost or reordered items".into()
    })?;
    ensure(stress.max_occupancy <= cfg.cdc_depth, || {
        format!("stress occupancy {}", stress.max_occupancy)
    })?;

    for case in 0..500 {
        let wide = 1usize << rng.gen_range(1..7);
        let narrow = 1usize << rng.gen_range(0..=wide.trailing_zeros());
        let packets: Vec<Vec<u8>> = (0..rng.gen_range(1..6))
            .map(|_| (0..rng.gen_range(1..400)).map(|_| rng.gen()).collect())
            .collect();
        let beats: Vec<StreamBeat> = packets.iter().flat_map(|p| packetize(p, wide)).collect();
        let down = downsize(&beats, narrow).map_err(|e| e.to_string())?;
        let up = upsize(&down, wide).map_err(|e| e.to_string())?;
        ensure(up == beats && packets_of(&down) == packets, || {
            format!("case {case}: {wide}->{narrow}->{wide} not identity")
        })?;

        // Cycle-level sizers with a randomly stalling sink.
        let bytes: Vec<u8> = packets.concat();
        let mut u = Upsizer::new(1, 8).map_err(|e| e.to_string())?;
        let mut d = Downsizer::new(8, 1).map_err(|e| e.to_string())?;
        let (mut i, mut got, mut guard) = (0, Vec::new(), 0);
        while got.len() < bytes.len() {
            guard += 1;
            ensure(guard < 100_000, || {
                format!("case {case}: sizers stopped making progress")
            })?;
            if rng.gen_bool(0.6) {
                if let Some(b) = d.pop() {
                    got.extend_from_slice(b.bytes());
                }
            }
            if d.can_accept() {
                if let Some(b) = u.pop() {
                    d.push(b).map_err(|e| e.to_string())?;
                }
            }
            if i < bytes.len() && u.can_accept() {
                u.push(StreamBeat::from_bytes(&bytes[i..=i], 1, i + 1 == bytes.len()).unwrap())
                    .map_err(|e| e.to_string())?;
                i += 1;
            }
            ensure(u.held_bytes() <= 16 && d.held_bytes() <= 8, || {
                format!("case {case}: sizer over its bound")
            })?;
        }
        ensure(got == bytes, || {
            format!("case {case}: byte stream changed through the sizers")
        })?;
    }
    Ok(format!(
        "10000 items in order (peak {}/16), stress peak {}/{}, 500 sizer identity cases",
        run.max_occupancy, stress.max_occupancy, cfg.cdc_depth
    ))
}

fn legalizer_coverage() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut jobs_seen = 0;
    for i in 0..5_000 {
        let w = [4u64, 8, 16, 32][rng.gen_range(0..4)];
        let burst = [1u64, 2, 16, 64, 256][rng.gen_range(0..5)];
        let addr = rng.gen_range(0..1u64 << 32);
        let len = rng.gen_range(1..20_000);
        let req = TransferRequest::new(1, Direction::MemToStream, addr, len)
            .map_err(|e| e.to_string())?;
        let jobs = legalize(&req, w as usize, burst).map_err(|e| e.to_string())?;
        check_legalized(&req, &jobs, w, burst)
            .map_err(|e| format!("request {i} ({addr:#x}+{len}): {e}"))?;
        jobs_seen += jobs.len();
    }
    Ok(format!(
        "5000 requests, {jobs_seen} jobs, exact byte coverage"
    ))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("bench{run}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_ethsim"))
            .args([
                "bench",
                "--payloads",
                "64,256,512,1024,1500,2048",
                "--seed",
                "9",
                "--csv",
            ])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("run {run} exited with {}", out.status)
        })?;
        outputs.push(fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], || "CSV outputs differ".into())?;
    Ok(format!("two runs, identical {} B CSVs", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 buffer capacity", Some(1), buffer_capacity),
        ("2 savings", Some(5), savings),
        ("3 wire-time law", Some(1), wire_time_law),
        ("4 CRC conformance", Some(1), crc_conformance),
        ("5 loopback integrity", Some(10), loopback_integrity),
        ("6 CDC and stream properties", Some(10), cdc_and_streams),
        ("7 legalizer coverage", Some(5), legalizer_coverage),
        ("8 determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let verdict = match (result, limit.map(Duration::from_secs)) {
            (Err(e), _) => Err(e),
            (Ok(_), Some(l)) if took > l => Err(format!("took {took:.2?}, limit {l:?}")),
            (Ok(m), _) => Ok(m),
        };
        let budget = limit.map(|l| format!(" / {l} s")).unwrap_or_default();
        match verdict {
            Ok(m) => println!("PASS criterion {name} [{took:.2?}{budget}]: {m}"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {name} [{took:.2?}{budget}]: {e}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
