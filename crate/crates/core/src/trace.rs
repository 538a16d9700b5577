//! Event records emitted by a traced run, and an offline checker that replays
//! a DRAM command stream against the timing rules without using the
//! scheduler's own bookkeeping.

use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dram::{CmdRecord, Command, DramConfig};
use crate::Time;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Cmd(CmdRecord),
    Dispatch {
        t: Time,
        pc: usize,
        slot: usize,
    },
    Issue {
        t: Time,
        pc: usize,
        slot: usize,
        n: usize,
    },
    Retire {
        t: Time,
        pc: usize,
        slot: usize,
    },
    /// Row Table rows of one slice handed to the request generator.
    Drain {
        t: Time,
        pc: usize,
        slice: u32,
        rows: u32,
        capacity: bool,
    },
    IndirectRequest {
        t: Time,
        pc: usize,
        line: u64,
        slice: u32,
        row: u32,
        column: u32,
        llc: bool,
    },
}

impl TraceEvent {
    pub fn time(&self) -> Time {
        match self {
            TraceEvent::Cmd(c) => c.t,
            TraceEvent::Dispatch { t, .. }
            | TraceEvent::Issue { t, .. }
            | TraceEvent::Retire { t, .. }
            | TraceEvent::Drain { t, .. }
            | TraceEvent::IndirectRequest { t, .. } => *t,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("command {index} ({cmd:?} at {t} ps): {rule}")]
pub struct TimingViolation {
    pub index: usize,
    pub cmd: Command,
    pub t: Time,
    pub rule: &'static str,
}

#[derive(Default)]
struct BankView {
    open: Option<u32>,
    act: Option<Time>,
    pre: Option<Time>,
    col: Option<Time>,
}

#[derive(Default)]
struct ChannelView {
    last_cmd: Option<Time>,
    last_col: Option<(Time, u32, u32)>,
    last_col_in_group: BTreeMap<(u32, u32), Time>,
}

/// Replays `cmds` (in issue order) and reports the first broken rule.
///
/// Checked: tCK alignment, at most one command per tCK per channel, per-bank
/// state (ACT only to a closed bank, PRE only to an open one, columns only to
/// the open row), tRP, tRCD, tRAS, tRTP, tCCD_S/tCCD_L and data-bus overlap.
pub fn check_timing(cmds: &[CmdRecord], cfg: &DramConfig) -> Result<(), TimingViolation> {
    let mut banks: BTreeMap<(u32, u32, u32, u32), BankView> = BTreeMap::new();
    let mut chans: BTreeMap<u32, ChannelView> = BTreeMap::new();
    let burst = cfg.burst_time();
    for (index, c) in cmds.iter().enumerate() {
        let fail = |rule| {
            Err(TimingViolation {
                index,
                cmd: c.cmd,
                t: c.t,
                rule,
            })
        };
        let after = |prev: Option<Time>, gap: Time| prev.is_none_or(|p| c.t >= p + gap);
        if c.t % cfg.tck != 0 {
            return fail("not on a clock edge");
        }
        let ch = chans.entry(c.channel).or_default();
        if !after(ch.last_cmd, cfg.tck) {
            return fail("two commands in one clock on a channel");
        }
        ch.last_cmd = Some(c.t);
        let b = banks
            .entry((c.channel, c.rank, c.bank_group, c.bank))
            .or_default();
        match c.cmd {
            Command::Act => {
                if b.open.is_some() {
                    return fail("ACT to an open bank");
                }
                if !after(b.pre, cfg.trp) {
                    return fail("tRP");
                }
                b.open = Some(c.row);
                b.act = Some(c.t);
            }
            Command::Pre => {
                if b.open.is_none() {
                    return fail("PRE to a closed bank");
                }
                if !after(b.act, cfg.tras) {
                    return fail("tRAS");
                }
                if !after(b.col, cfg.trtp) {
                    return fail("tRTP");
                }
                b.open = None;
                b.pre = Some(c.t);
            }
            Command::Rd | Command::Wr => {
                if b.open != Some(c.row) {
                    return fail("column command to a row that is not open");
                }
                if !after(b.act, cfg.trcd) {
                    return fail("tRCD");
                }
                if let Some((p, rank, bg)) = ch.last_col {
                    let gap = if rank == c.rank && bg == c.bank_group {
                        cfg.tccd_l
                    } else {
                        cfg.tccd_s
                    };
                    if c.t < p + gap {
                        return fail("tCCD");
                    }
                    if c.t < p + burst {
                        return fail("data bus overlap");
                    }
                }
                if !after(
                    ch.last_col_in_group.get(&(c.rank, c.bank_group)).copied(),
                    cfg.tccd_l,
                ) {
                    return fail("tCCD_L");
                }
                ch.last_col = Some((c.t, c.rank, c.bank_group));
                ch.last_col_in_group.insert((c.rank, c.bank_group), c.t);
                b.col = Some(c.t);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmd(t: Time, bg: u32, bank: u32, row: u32, cmd: Command) -> CmdRecord {
        CmdRecord {
            t,
            channel: 0,
            rank: 0,
            bank_group: bg,
            bank,
            row,
            column: 0,
            cmd,
            req: 0,
        }
    }

    #[test]
    fn legal_sequence_passes() {
        let cfg = DramConfig::default();
        let seq = [
            cmd(0, 0, 0, 5, Command::Act),
            cmd(625, 1, 0, 7, Command::Act),
            cmd(12_500, 0, 0, 5, Command::Rd),
            cmd(15_000, 1, 0, 7, Command::Rd),
            cmd(32_500, 0, 0, 5, Command::Pre),
            cmd(45_000, 0, 0, 6, Command::Act),
        ];
        assert_eq!(check_timing(&seq, &cfg), Ok(()));
    }

    #[test]
    fn each_rule_is_caught() {
        let cfg = DramConfig::default();
        let cases: [(&[CmdRecord], &str); 7] = [
            (
                &[
                    cmd(0, 0, 0, 5, Command::Act),
                    cmd(10_000, 0, 0, 5, Command::Rd),
                ],
                "tRCD",
            ),
            (
                &[
                    cmd(0, 0, 0, 5, Command::Act),
                    cmd(30_000, 0, 0, 5, Command::Pre),
                ],
                "tRAS",
            ),
            (
                &[
                    cmd(0, 0, 0, 5, Command::Act),
                    cmd(32_500, 0, 0, 5, Command::Pre),
                    cmd(40_000, 0, 0, 5, Command::Act),
                ],
                "tRP",
            ),
            (
                &[
                    cmd(0, 0, 0, 5, Command::Act),
                    cmd(30_000, 0, 0, 5, Command::Rd),
                    cmd(33_125, 0, 0, 5, Command::Pre),
                ],
                "tRTP",
            ),
            (
                &[
                    cmd(0, 0, 0, 5, Command::Act),
                    cmd(625, 0, 1, 5, Command::Act),
                    cmd(12_500, 0, 0, 5, Command::Rd),
                    cmd(15_000, 0, 1, 5, Command::Rd),
                ],
                "tCCD",
            ),
            (
                &[cmd(0, 0, 0, 5, Command::Act), cmd(0, 1, 0, 5, Command::Act)],
                "two commands in one clock on a channel",
            ),
            (&[cmd(100, 0, 0, 5, Command::Act)], "not on a clock edge"),
        ];
        for (seq, rule) in cases {
            assert_eq!(check_timing(seq, &cfg).unwrap_err().rule, rule);
        }
    }

    #[test]
    fn state_errors() {
        let cfg = DramConfig::default();
        let e = check_timing(&[cmd(0, 0, 0, 5, Command::Rd)], &cfg).unwrap_err();
        assert_eq!(e.rule, "column command to a row that is not open");
        let e = check_timing(&[cmd(0, 0, 0, 5, Command::Pre)], &cfg).unwrap_err();
        assert_eq!(e.rule, "PRE to a closed bank");
    }
}
