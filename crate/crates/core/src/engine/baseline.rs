//! Host-core baseline: the same program's memory accesses issued by cores
//! with a limited number of outstanding misses.
//!
//! The access stream comes from the sequential interpreter. Consecutive
//! accesses of one instruction to the same cacheline count once, as they
//! would hit in the private cache. Each remaining access is a miss: the core
//! issues it, it reaches the memory controller `miss_path_cycles` later and
//! holds one of the core's `max_outstanding` slots until its data returns.
//! The accesses are split into contiguous chunks, one per core.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use super::{RunOptions, RunOutput, SimConfig, SimError, StatReport};
use crate::dram::{Completion, Dram, MemRequest, Origin, ReqKind};
use crate::oracle::oracle_run;
use crate::program::{ArrayTable, MemoryImage, Program};
use crate::trace::TraceEvent;
use crate::Time;

/// One cacheline miss of the baseline stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineAccess {
    pub line: u64,
    pub write: bool,
}

/// Cacheline misses of `program` in execution order.
pub fn access_stream(
    program: &Program,
    image: MemoryImage,
    cfg: &SimConfig,
) -> Result<(Vec<LineAccess>, RunOutput), SimError> {
    let arrays = ArrayTable::layout(program, &cfg.dram)?;
    let out = oracle_run(program, image, &cfg.maa)?;
    let line_bytes = cfg.dram.cacheline_bytes as u64;
    let mut lines: Vec<LineAccess> = Vec::new();
    let mut last: Option<(usize, u64)> = None;
    for a in &out.accesses {
        let line = arrays.get(a.array).addr(a.index) & !(line_bytes - 1);
        if last == Some((a.pc, line)) {
            if a.write {
                lines.last_mut().unwrap().write = true;
            }
            continue;
        }
        last = Some((a.pc, line));
        lines.push(LineAccess {
            line,
            write: a.write,
        });
    }
    let result = RunOutput {
        image: out.image,
        tiles: out.tiles,
        registers: out.registers,
        stats: StatReport::default(),
        trace: Vec::new(),
    };
    Ok((lines, result))
}

struct Core {
    next: usize,
    end: usize,
    outstanding: usize,
    next_issue: u64,
}

/// Runs the baseline for `program`. The returned image and tiles are the
/// interpreter's; the statistics come from the timed access stream.
pub fn run_baseline(
    program: &Program,
    image: MemoryImage,
    cfg: &SimConfig,
    opts: &RunOptions,
) -> Result<RunOutput, SimError> {
    let (lines, mut out) = access_stream(program, image, cfg)?;
    let b = &cfg.baseline;
    if b.cores == 0 || b.max_outstanding == 0 {
        return Err(SimError::Validation(
            "baseline needs at least one core and one outstanding miss".into(),
        ));
    }
    let mut dram = Dram::new(cfg.dram.clone())?;
    if opts.trace {
        dram = dram.with_trace();
    }
    let maa = &cfg.maa;
    let chunk = lines.len().div_ceil(b.cores).max(1);
    let mut cores: Vec<Core> = (0..b.cores)
        .map(|c| Core {
            next: (c * chunk).min(lines.len()),
            end: ((c + 1) * chunk).min(lines.len()),
            outstanding: 0,
            next_issue: 0,
        })
        .collect();
    // requests on their way to the controller: (arrival, core, access)
    let mut in_path: VecDeque<(Time, usize, LineAccess)> = VecDeque::new();
    let mut owners: BTreeMap<u64, usize> = BTreeMap::new();
    let mut returns: BTreeMap<(Time, u64), usize> = BTreeMap::new();
    let mut done: Vec<Completion> = Vec::new();
    let mut next_id = 0u64;
    let mut now: Time = 0;
    loop {
        while let Some(w) = dram.next_wake().filter(|&w| w <= now) {
            dram.tick(w, &mut done);
            for c in done.drain(..) {
                returns.insert((c.done, c.req.id), owners.remove(&c.req.id).unwrap());
            }
        }
        while let Some((&(t, id), &core)) = returns.first_key_value() {
            if t > now {
                break;
            }
            returns.remove(&(t, id));
            cores[core].outstanding -= 1;
        }
        while let Some(&(t, core, a)) = in_path.front() {
            if t > now {
                break;
            }
            let coord = dram.map_address(a.line)?;
            if !dram.can_accept(coord.channel) {
                break;
            }
            let kind = if a.write {
                ReqKind::Write
            } else {
                ReqKind::Read
            };
            let req = MemRequest {
                id: next_id,
                kind,
                addr: a.line,
                coord,
                arrival: now,
                origin: Origin::Baseline,
            };
            dram.enqueue(req, now)
                .map_err(|_| SimError::Internal("baseline enqueue refused"))?;
            owners.insert(next_id, core);
            next_id += 1;
            in_path.pop_front();
        }
        let cycle = maa.cycle_at_or_after(now);
        for (k, c) in cores.iter_mut().enumerate() {
            if c.next < c.end
                && c.outstanding < b.max_outstanding
                && maa.cycle_time(c.next_issue) <= now
            {
                let arrive = maa.cycle_time(cycle + b.miss_path_cycles);
                in_path.push_back((arrive, k, lines[c.next]));
                c.next += 1;
                c.outstanding += 1;
                c.next_issue = cycle + b.issue_cycles;
            }
        }
        if cores.iter().all(|c| c.next == c.end && c.outstanding == 0) && in_path.is_empty() {
            break;
        }
        // jump to the next moment anything can change
        let mut next = [
            dram.next_wake(),
            returns.first_key_value().map(|(k, _)| k.0),
            in_path.front().map(|p| p.0),
        ]
        .into_iter()
        .flatten()
        .filter(|&t| t > now)
        .min();
        for c in &cores {
            if c.next < c.end && c.outstanding < b.max_outstanding {
                let t = maa.cycle_time(c.next_issue).max(maa.cycle_time(cycle + 1));
                next = Some(next.map_or(t, |n| n.min(t)));
            }
        }
        match next {
            Some(t) => now = t,
            None => return Err(SimError::Internal("baseline stalled with nothing pending")),
        }
    }
    let cycles = maa.cycle_at_or_after(now);
    let ds = dram.stats(now);
    out.stats = StatReport::from_dram(&opts.label, "baseline", cycles, &ds, &dram);
    out.stats.direct_dram = ds.accepted;
    out.trace = dram.take_trace().into_iter().map(TraceEvent::Cmd).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{DType, Instruction};
    use crate::program::ArrayInit;

    #[test]
    fn stream_coalesces_per_line() {
        let mut p = Program::default();
        let b = p.declare("B", DType::U32, 64, ArrayInit::Iota);
        p.set_reg(1, 64);
        p.set_reg(2, 1);
        p.exec(Instruction::sld(DType::U32, b, 0, [0, 1, 2]));
        let cfg = SimConfig::default();
        let (lines, _) = access_stream(&p, MemoryImage::from_program(&p), &cfg).unwrap();
        assert_eq!(lines.len(), 4);
        let out = run_baseline(
            &p,
            MemoryImage::from_program(&p),
            &cfg,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.stats.dram_reads, 4);
        assert_eq!(out.tiles[0].words, (0..64).collect::<Vec<u64>>());
    }

    #[test]
    fn more_outstanding_is_not_slower() {
        let mut p = Program::default();
        let b = p.declare("B", DType::U32, 4096, ArrayInit::Iota);
        p.set_reg(1, 4096);
        p.set_reg(2, 1);
        p.exec(Instruction::sld(DType::U32, b, 0, [0, 1, 2]));
        let mut cfg = SimConfig::default();
        let img = MemoryImage::from_program(&p);
        cfg.baseline.max_outstanding = 1;
        let slow = run_baseline(&p, img.clone(), &cfg, &RunOptions::default()).unwrap();
        cfg.baseline.max_outstanding = 10;
        let fast = run_baseline(&p, img, &cfg, &RunOptions::default()).unwrap();
        assert!(fast.stats.cycles < slow.stats.cycles);
    }
}
