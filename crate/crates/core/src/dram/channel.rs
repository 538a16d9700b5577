use alloc::vec;
use alloc::vec::Vec;

use super::{
    CmdRecord, Command, Completion, DramConfig, DramCoord, DramError, MemRequest, ReqKind,
};
use crate::Time;

#[derive(Clone, Debug, Default)]
pub struct BankState {
    pub open_row: Option<u32>,
    pub last_act: Option<Time>,
    pub last_pre: Option<Time>,
    pub last_rd_wr: Option<Time>,
}

#[derive(Clone, Debug)]
struct Queued {
    req: MemRequest,
    eligible: Time,
    /// An ACT was issued on behalf of this request.
    activated: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ChannelCounters {
    pub reads: u64,
    pub writes: u64,
    pub acts: u64,
    pub pres: u64,
    pub row_hits: u64,
    pub bytes: u64,
    pub accepted: u64,
    pub rejected: u64,
    /// Integral of buffer length over time (entries x ps).
    pub occupancy_area: u128,
    pub busy_time: Time,
}

/// One channel: its banks, the request buffer and an FR-FCFS scheduler.
#[derive(Clone, Debug)]
pub struct Channel {
    id: u32,
    banks: Vec<BankState>,
    buffer: Vec<Queued>,
    last_col: Option<Time>,
    last_col_group: Vec<Option<Time>>,
    bus_free: Time,
    next_cmd: Time,
    wake: Option<Time>,
    occ_last: Time,
    counters: ChannelCounters,
}

impl Channel {
    pub fn new(cfg: &DramConfig, id: u32) -> Self {
        Self {
            id,
            banks: vec![BankState::default(); cfg.banks_per_channel() as usize],
            buffer: Vec::with_capacity(cfg.request_buffer_size),
            last_col: None,
            last_col_group: vec![None; (cfg.ranks * cfg.bank_groups) as usize],
            bus_free: 0,
            next_cmd: 0,
            wake: None,
            occ_last: 0,
            counters: ChannelCounters::default(),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn bank(&self, cfg: &DramConfig, coord: &DramCoord) -> &BankState {
        &self.banks[coord.bank_in_channel(cfg)]
    }

    pub fn counters(&self) -> &ChannelCounters {
        &self.counters
    }

    pub fn queued(&self) -> usize {
        self.buffer.len()
    }

    pub fn wake(&self) -> Option<Time> {
        self.wake
    }

    /// The command a request needs next, given its bank state.
    pub fn next_command(&self, cfg: &DramConfig, req: &MemRequest) -> Command {
        match self.bank(cfg, &req.coord).open_row {
            Some(r) if r == req.coord.row => match req.kind {
                ReqKind::Read => Command::Rd,
                ReqKind::Write => Command::Wr,
            },
            Some(_) => Command::Pre,
            None => Command::Act,
        }
    }

    /// Earliest time `cmd` to `coord` satisfies every timing constraint.
    pub fn earliest_issue(
        &self,
        cfg: &DramConfig,
        cmd: Command,
        coord: &DramCoord,
    ) -> Result<Time, DramError> {
        let bank = self.bank(cfg, coord);
        let mut t = self.next_cmd;
        match cmd {
            Command::Act => {
                if bank.open_row.is_some() {
                    return Err(DramError::Protocol {
                        cmd,
                        reason: "bank already has an open row",
                    });
                }
                if let Some(p) = bank.last_pre {
                    t = t.max(p + cfg.trp);
                }
            }
            Command::Pre => {
                if bank.open_row.is_none() {
                    return Err(DramError::Protocol {
                        cmd,
                        reason: "bank is already closed",
                    });
                }
                if let Some(a) = bank.last_act {
                    t = t.max(a + cfg.tras);
                }
                if let Some(c) = bank.last_rd_wr {
                    t = t.max(c + cfg.trtp);
                }
            }
            Command::Rd | Command::Wr => {
                if bank.open_row != Some(coord.row) {
                    return Err(DramError::Protocol {
                        cmd,
                        reason: "target row is not open",
                    });
                }
                if let Some(a) = bank.last_act {
                    t = t.max(a + cfg.trcd);
                }
                if let Some(c) = self.last_col {
                    t = t.max(c + cfg.tccd_s);
                }
                let g = (coord.rank * cfg.bank_groups + coord.bank_group) as usize;
                if let Some(c) = self.last_col_group[g] {
                    t = t.max(c + cfg.tccd_l);
                }
                t = t.max(self.bus_free);
            }
        }
        Ok(cfg.align_up(t))
    }

    /// Issues a command at `t`. Returns the end of the data transfer for column
    /// commands.
    pub fn issue(
        &mut self,
        cfg: &DramConfig,
        cmd: Command,
        coord: &DramCoord,
        t: Time,
    ) -> Result<Option<Time>, DramError> {
        let earliest = self.earliest_issue(cfg, cmd, coord)?;
        if t < earliest || !t.is_multiple_of(cfg.tck) {
            return Err(DramError::Timing {
                cmd,
                at: t,
                earliest,
            });
        }
        let bi = coord.bank_in_channel(cfg);
        self.next_cmd = t + cfg.tck;
        let bank = &mut self.banks[bi];
        match cmd {
            Command::Act => {
                bank.open_row = Some(coord.row);
                bank.last_act = Some(t);
                self.counters.acts += 1;
                Ok(None)
            }
            Command::Pre => {
                bank.open_row = None;
                bank.last_pre = Some(t);
                self.counters.pres += 1;
                Ok(None)
            }
            Command::Rd | Command::Wr => {
                bank.last_rd_wr = Some(t);
                self.last_col = Some(t);
                let g = (coord.rank * cfg.bank_groups + coord.bank_group) as usize;
                self.last_col_group[g] = Some(t);
                let end = t + cfg.burst_time();
                self.bus_free = end;
                self.counters.busy_time += cfg.burst_time();
                self.counters.bytes += cfg.cacheline_bytes as u64;
                Ok(Some(end))
            }
        }
    }

    fn account_occupancy(&mut self, now: Time) {
        if now > self.occ_last {
            self.counters.occupancy_area +=
                self.buffer.len() as u128 * (now - self.occ_last) as u128;
            self.occ_last = now;
        }
    }

    /// Offers a request to the buffer. A full buffer hands the request back.
    pub fn enqueue(
        &mut self,
        cfg: &DramConfig,
        req: MemRequest,
        now: Time,
    ) -> Result<(), MemRequest> {
        if self.buffer.len() >= cfg.request_buffer_size {
            self.counters.rejected += 1;
            return Err(req);
        }
        self.account_occupancy(now);
        // visible to the scheduler on the next command clock edge
        let eligible = (now / cfg.tck + 1) * cfg.tck;
        self.buffer.push(Queued {
            req,
            eligible,
            activated: false,
        });
        self.counters.accepted += 1;
        self.wake = Some(self.wake.map_or(eligible, |w| w.min(eligible)));
        Ok(())
    }

    /// One scheduling decision at command clock edge `now`.
    ///
    /// Among buffered requests whose next command can issue at `now`, column
    /// commands to an open row win (oldest first); otherwise the oldest
    /// issuable ACT/PRE goes. A bank is not precharged while a buffered request
    /// still hits its open row.
    pub fn frfcfs_step(
        &mut self,
        cfg: &DramConfig,
        now: Time,
        done: &mut Vec<Completion>,
        trace: Option<&mut Vec<CmdRecord>>,
    ) -> Option<Command> {
        if self.buffer.is_empty() {
            self.wake = None;
            return None;
        }
        let hit_pending = self.hit_pending(cfg);
        let mut best_hit: Option<(usize, (Time, u64))> = None;
        let mut best_other: Option<(usize, (Time, u64))> = None;
        let mut next_wake: Option<Time> = None;
        for (i, q) in self.buffer.iter().enumerate() {
            let cmd = self.next_command(cfg, &q.req);
            if cmd == Command::Pre && hit_pending[q.req.coord.bank_in_channel(cfg)] {
                continue;
            }
            let t = self
                .earliest_issue(cfg, cmd, &q.req.coord)
                .expect("next_command is always legal")
                .max(q.eligible);
            if t > now {
                next_wake = Some(next_wake.map_or(t, |w| w.min(t)));
                continue;
            }
            let key = (q.req.arrival, q.req.id);
            let slot = if cmd.is_column() {
                &mut best_hit
            } else {
                &mut best_other
            };
            if slot.is_none_or(|(_, k)| key < k) {
                *slot = Some((i, key));
            }
        }
        let Some((idx, _)) = best_hit.or(best_other) else {
            self.wake = next_wake.map(|t| cfg.align_up(t.max(now + 1)));
            return None;
        };
        let coord = self.buffer[idx].req.coord;
        let cmd = self.next_command(cfg, &self.buffer[idx].req);
        let end = self
            .issue(cfg, cmd, &coord, now)
            .expect("scheduler picked an issuable command");
        if let Some(trace) = trace {
            trace.push(CmdRecord {
                t: now,
                channel: self.id,
                rank: coord.rank,
                bank_group: coord.bank_group,
                bank: coord.bank,
                row: coord.row,
                column: coord.column,
                cmd,
                req: self.buffer[idx].req.id,
            });
        }
        match cmd {
            Command::Act => self.buffer[idx].activated = true,
            Command::Pre => {}
            Command::Rd | Command::Wr => {
                self.account_occupancy(now);
                let q = self.buffer.remove(idx);
                match q.req.kind {
                    ReqKind::Read => self.counters.reads += 1,
                    ReqKind::Write => self.counters.writes += 1,
                }
                if !q.activated {
                    self.counters.row_hits += 1;
                }
                done.push(Completion {
                    req: q.req,
                    done: end.expect("column command has data"),
                });
            }
        }
        self.wake = if self.buffer.is_empty() {
            None
        } else {
            Some(now + cfg.tck)
        };
        Some(cmd)
    }

    fn hit_pending(&self, cfg: &DramConfig) -> Vec<bool> {
        let mut v = vec![false; self.banks.len()];
        for q in &self.buffer {
            let bi = q.req.coord.bank_in_channel(cfg);
            if self.banks[bi].open_row == Some(q.req.coord.row) {
                v[bi] = true;
            }
        }
        v
    }

    pub(crate) fn finish(&mut self, now: Time) {
        self.account_occupancy(now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::Origin;

    fn coord(bg: u32, bank: u32, row: u32) -> DramCoord {
        DramCoord {
            bank_group: bg,
            bank,
            row,
            ..DramCoord::default()
        }
    }

    fn req(id: u64, c: DramCoord, arrival: Time) -> MemRequest {
        MemRequest {
            id,
            kind: ReqKind::Read,
            addr: 0,
            coord: c,
            arrival,
            origin: Origin::Baseline,
        }
    }

    #[test]
    fn act_then_read_after_trcd() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        let c = coord(0, 0, 3);
        ch.issue(&cfg, Command::Act, &c, 0).unwrap();
        assert_eq!(ch.earliest_issue(&cfg, Command::Rd, &c).unwrap(), 12_500);
    }

    #[test]
    fn precharge_waits_for_tras_and_trtp() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        let c = coord(0, 0, 3);
        ch.issue(&cfg, Command::Act, &c, 0).unwrap();
        ch.issue(&cfg, Command::Rd, &c, 12_500).unwrap();
        // max(0 + 32.5, 12.5 + 7.5)
        assert_eq!(ch.earliest_issue(&cfg, Command::Pre, &c).unwrap(), 32_500);
        ch.issue(&cfg, Command::Pre, &c, 32_500).unwrap();
        assert_eq!(ch.earliest_issue(&cfg, Command::Act, &c).unwrap(), 45_000);
    }

    #[test]
    fn column_spacing_by_bank_group() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        let a = coord(0, 0, 1);
        let b = coord(1, 0, 1);
        let same = coord(0, 1, 1);
        for c in [a, b, same] {
            let t = ch.earliest_issue(&cfg, Command::Act, &c).unwrap();
            ch.issue(&cfg, Command::Act, &c, t).unwrap();
        }
        let t0 = ch.earliest_issue(&cfg, Command::Rd, &a).unwrap();
        ch.issue(&cfg, Command::Rd, &a, t0).unwrap();
        assert_eq!(
            ch.earliest_issue(&cfg, Command::Rd, &b).unwrap() - t0,
            2_500
        );
        assert_eq!(
            ch.earliest_issue(&cfg, Command::Rd, &same).unwrap() - t0,
            5_000
        );
    }

    #[test]
    fn protocol_errors() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        let c = coord(0, 0, 1);
        assert!(matches!(
            ch.earliest_issue(&cfg, Command::Rd, &c),
            Err(DramError::Protocol { .. })
        ));
        assert!(matches!(
            ch.earliest_issue(&cfg, Command::Pre, &c),
            Err(DramError::Protocol { .. })
        ));
        ch.issue(&cfg, Command::Act, &c, 0).unwrap();
        assert!(matches!(
            ch.earliest_issue(&cfg, Command::Act, &c),
            Err(DramError::Protocol { .. })
        ));
        assert!(matches!(
            ch.issue(&cfg, Command::Rd, &c, 625),
            Err(DramError::Timing { .. })
        ));
    }

    #[test]
    fn buffer_capacity() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        assert!(ch.enqueue(&cfg, req(0, coord(0, 0, 0), 0), 0).is_ok());
        for i in 1..32 {
            assert!(ch.enqueue(&cfg, req(i, coord(0, 0, 0), 0), 0).is_ok());
        }
        let back = ch.enqueue(&cfg, req(32, coord(0, 0, 0), 0), 0).unwrap_err();
        assert_eq!(back.id, 32);
        // drain one completion and retry
        let mut done = Vec::new();
        let mut now = 0;
        while done.is_empty() {
            now = ch.wake().unwrap();
            ch.frfcfs_step(&cfg, now, &mut done, None);
        }
        assert!(ch.enqueue(&cfg, back, now).is_ok());
    }

    #[test]
    fn empty_buffer_issues_nothing() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        assert_eq!(ch.frfcfs_step(&cfg, 0, &mut Vec::new(), None), None);
    }

    #[test]
    fn row_hit_goes_first() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        ch.issue(&cfg, Command::Act, &coord(0, 0, 7), 0).unwrap();
        ch.enqueue(&cfg, req(1, coord(0, 0, 5), 0), 0).unwrap();
        ch.enqueue(&cfg, req(2, coord(0, 0, 7), 0), 0).unwrap();
        let mut done = Vec::new();
        while done.is_empty() {
            let t = ch.wake().unwrap();
            ch.frfcfs_step(&cfg, t, &mut done, None);
        }
        assert_eq!(done[0].req.id, 2);
    }

    #[test]
    fn equal_hits_oldest_first() {
        let cfg = DramConfig::default();
        let mut ch = Channel::new(&cfg, 0);
        ch.issue(&cfg, Command::Act, &coord(0, 0, 7), 0).unwrap();
        ch.enqueue(&cfg, req(9, coord(0, 0, 7), 2), 2).unwrap();
        ch.enqueue(&cfg, req(8, coord(0, 0, 7), 1), 2).unwrap();
        let mut done = Vec::new();
        while done.is_empty() {
            let t = ch.wake().unwrap();
            ch.frfcfs_step(&cfg, t, &mut done, None);
        }
        assert_eq!(done[0].req.id, 8);
    }
}
