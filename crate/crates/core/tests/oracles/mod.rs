//! Reference models the production code is checked against. They favour
//! obviousness over speed.
#![allow(dead_code)]

use std::collections::VecDeque;

use ethsim_core::axis::{CdcFifo, StreamBeat};
use ethsim_core::dma::{DmaJob, TransferRequest, PAGE_BYTES};
use ethsim_core::kernel::DomainId;
use rand::Rng;

/// CRC-32 one bit at a time, straight from the reflected polynomial.
pub fn crc32_bitwise(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc ^= u32::from(byte);
        for _ in 0..8 {
            let lsb = crc & 1;
            crc >>= 1;
            if lsb == 1 {
                crc ^= 0xEDB8_8320;
            }
        }
    }
    !crc
}

/// Marks every byte each job touches and checks the request is covered
/// exactly once, with no job crossing a page or exceeding the burst limit.
pub fn check_legalized(
    req: &TransferRequest,
    jobs: &[DmaJob],
    bus_width: u64,
    max_burst: u64,
) -> Result<(), String> {
    let len = req.length as usize;
    let mut hits = vec![0u8; len];
    let mut expect_next = req.mem_addr;
    for (i, j) in jobs.iter().enumerate() {
        if j.length == 0 {
            return Err(format!("job {i} is empty"));
        }
        if j.mem_addr != expect_next {
            return Err(format!(
                "job {i} starts at {:#x}, expected {expect_next:#x}",
                j.mem_addr
            ));
        }
        expect_next = j.mem_addr + j.length;
        let last = j.mem_addr + j.length - 1;
        if j.mem_addr / PAGE_BYTES != last / PAGE_BYTES {
            return Err(format!(
                "job {i} [{:#x}, {last:#x}] crosses a page",
                j.mem_addr
            ));
        }
        let first_word = j.mem_addr / bus_width;
        let last_word = last / bus_width;
        let beats = last_word - first_word + 1;
        if beats != j.beats {
            return Err(format!("job {i} claims {} beats, spans {beats}", j.beats));
        }
        if beats > max_burst {
            return Err(format!("job {i} has {beats} beats, limit {max_burst}"));
        }
        for a in j.mem_addr..=last {
            let Some(slot) = a
                .checked_sub(req.mem_addr)
                .and_then(|o| hits.get_mut(o as usize))
            else {
                return Err(format!("job {i} touches {a:#x} outside the request"));
            };
            *slot += 1;
        }
    }
    match hits.iter().position(|&h| h != 1) {
        Some(p) => Err(format!("byte {p} covered {} times", hits[p])),
        None => Ok(()),
    }
}

pub struct CdcRun {
    pub received: Vec<u64>,
    pub max_occupancy: usize,
}

/// Drives a CDC FIFO with a random interleaving of write and read edges and
/// random stalls on both sides, checking every pop against a plain queue.
pub fn cdc_against_queue(
    rng: &mut impl Rng,
    depth: usize,
    stages: usize,
    items: u64,
) -> Result<CdcRun, String> {
    let (wd, rd) = (DomainId(0), DomainId(1));
    let mut fifo = CdcFifo::new("oracle", depth, stages, wd, rd).map_err(|e| e.to_string())?;
    let mut model: VecDeque<u64> = VecDeque::new();
    let mut next = 0u64;
    let mut received = Vec::with_capacity(items as usize);
    let write_p = rng.gen_range(0.2..1.0);
    let read_p = rng.gen_range(0.2..1.0);
    let mut guard = 0u64;
    while (received.len() as u64) < items {
        guard += 1;
        if guard > 200 * items + 10_000 {
            return Err("no progress".into());
        }
        let (we, re) = match rng.gen_range(0..3) {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        if we && next < items && rng.gen_bool(write_p) && fifo.write_ready() {
            fifo.write(next, wd).map_err(|e| e.to_string())?;
            model.push_back(next);
            next += 1;
        }
        if re && rng.gen_bool(read_p) {
            if let Some(v) = fifo.pop(rd).map_err(|e| e.to_string())? {
                let want = model.pop_front().ok_or("popped from an empty model")?;
                if v != want {
                    return Err(format!("got {v}, expected {want}"));
                }
                received.push(v);
            }
        }
        let c = fifo.clock(we, re);
        if c.occupancy > depth {
            return Err(format!("occupancy {} exceeds depth {depth}", c.occupancy));
        }
        if c.occupancy != model.len() {
            return Err(format!(
                "occupancy {} but model holds {}",
                c.occupancy,
                model.len()
            ));
        }
    }
    Ok(CdcRun {
        received,
        max_occupancy: fifo.max_occupancy(),
    })
}

/// Packs a packet into `width`-byte beats with a partial final beat.
pub fn packetize(packet: &[u8], width: usize) -> Vec<StreamBeat> {
    let n = packet.chunks(width).count();
    packet
        .chunks(width)
        .enumerate()
        .map(|(i, c)| StreamBeat::from_bytes(c, width, i + 1 == n).unwrap())
        .collect()
}

/// Bytes and packet boundaries of a beat stream.
pub fn packets_of(beats: &[StreamBeat]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for b in beats {
        cur.extend_from_slice(b.bytes());
        if b.last() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
