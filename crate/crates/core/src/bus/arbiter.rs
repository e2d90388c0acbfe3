//! Seven-stage filtered arbitration.
//!
//! Filters run in a fixed order and each narrows the candidate set:
//!
//! | # | filter              | keeps                                                        |
//! |---|---------------------|--------------------------------------------------------------|
//! | 1 | RequestValid        | pending requesters not blocked behind a buffered write       |
//! | 2 | AccessPermission    | candidates whose bank is not bursting or precharging another row |
//! | 3 | QosUrgent           | minimal-slack real-time candidates, if any is within threshold |
//! | 4 | WriteBufferPressure | the write buffer, when nearly full, overdue or blocking a hazard |
//! | 5 | IdleBank            | candidates whose bank is idle or open on the wanted row      |
//! | 6 | StaticPriority      | candidates with the highest static rank                      |
//! | 7 | RoundRobin          | the first candidate at or after the rotating pointer         |
//!
//! Overdue candidates (urgent real-time, or waiting past the starvation
//! guard) are never dropped by filters 2 and 5.
//!
//! A filter that would empty a non-empty set passes its input through.
//! Filters 2..=6 can be switched off; 1 and 7 always run.

use serde::{Deserialize, Serialize};

use crate::ddrc::BankReport;
use crate::types::{CandidateSet, Cycle, Op, Slot};

pub const FILTER_COUNT: usize = 7;

pub const FILTER_NAMES: [&str; FILTER_COUNT] = [
    "request_valid",
    "access_permission",
    "qos_urgent",
    "write_buffer_pressure",
    "idle_bank",
    "static_priority",
    "round_robin",
];

/// Everything the filters know about one requester.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub slot: Slot,
    pub op: Op,
    pub bank: usize,
    pub row: u32,
    pub rt: bool,
    /// QoS objective minus cycles waited; only meaningful when `rt`.
    pub slack: i64,
    pub priority: u32,
    /// Overlaps a write still sitting in the write buffer.
    pub hazard: bool,
    /// Urgent real-time or long-waiting requester; filters 2 and 5 keep it.
    pub overdue: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FilterContext<'a> {
    pub candidates: &'a [Candidate],
    pub report: &'a [BankReport],
    pub enabled: [bool; FILTER_COUNT],
    pub qos_urgency_threshold: u32,
    pub wb_occupancy: u32,
    pub wb_high_watermark: u32,
    /// A pending request is waiting on a buffered write.
    pub wb_hazard: bool,
    /// Slot with the highest round-robin priority this cycle.
    pub rr_next: u8,
}

impl FilterContext<'_> {
    fn candidate(&self, slot: Slot) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.slot == slot)
    }

    fn keep(&self, set: CandidateSet, mut pred: impl FnMut(&Candidate) -> bool) -> CandidateSet {
        set.iter()
            .filter(|s| self.candidate(*s).is_some_and(&mut pred))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantDecision {
    pub granted: Option<Slot>,
    /// Candidate set surviving each filter, in order.
    pub filter_trace: [CandidateSet; FILTER_COUNT],
    pub cycle: Cycle,
}

/// Applies filter `k` (1-based) to `set`.
pub fn apply_filter(k: usize, set: CandidateSet, ctx: &FilterContext<'_>) -> CandidateSet {
    assert!((1..=FILTER_COUNT).contains(&k), "filter index {k} out of range");
    if k == 1 {
        return ctx.keep(set, |c| !c.hazard);
    }
    if set.is_empty() {
        return set;
    }
    if k != FILTER_COUNT && !ctx.enabled[k - 1] {
        return set;
    }
    let out = match k {
        2 => ctx.keep(set, |c| {
            // a row hit can stream behind the current burst
            c.overdue || !ctx.report.get(c.bank).is_some_and(|r| r.blocked)
        }),
        3 => {
            let threshold = i64::from(ctx.qos_urgency_threshold);
            let urgent = ctx.keep(set, |c| c.rt && c.slack <= threshold);
            match urgent.iter().filter_map(|s| ctx.candidate(s)).map(|c| c.slack).min() {
                Some(min) => ctx.keep(urgent, |c| c.slack == min),
                None => set,
            }
        }
        4 => {
            let overdue = ctx.candidate(Slot::WRITE_BUFFER).is_some_and(|c| c.overdue);
            let pressured = ctx.wb_occupancy >= ctx.wb_high_watermark || ctx.wb_hazard || overdue;
            if pressured && set.contains(Slot::WRITE_BUFFER) {
                CandidateSet::single(Slot::WRITE_BUFFER)
            } else {
                set
            }
        }
        5 => ctx.keep(set, |c| {
            c.overdue
                || ctx
                    .report
                    .get(c.bank)
                    .is_some_and(|r| r.idle || r.open_row == Some(c.row))
        }),
        6 => {
            let best = set.iter().filter_map(|s| ctx.candidate(s)).map(|c| c.priority).max();
            ctx.keep(set, |c| Some(c.priority) == best)
        }
        _ => round_robin(set, ctx.rr_next),
    };
    if out.is_empty() {
        set
    } else {
        out
    }
}

/// First member at or after `next`, wrapping around.
pub fn round_robin(set: CandidateSet, next: u8) -> CandidateSet {
    if set.is_empty() {
        return set;
    }
    let rotated = set.0.rotate_right(u32::from(next));
    let idx = (rotated.trailing_zeros() + u32::from(next)) % 64;
    CandidateSet::single(Slot(idx as u8))
}

/// Runs the full filter chain over `pool`.
pub fn arbitrate(pool: CandidateSet, ctx: &FilterContext<'_>, cycle: Cycle) -> GrantDecision {
    let mut trace = [CandidateSet::EMPTY; FILTER_COUNT];
    let mut set = pool;
    for (k, slot) in trace.iter_mut().enumerate() {
        set = apply_filter(k + 1, set, ctx);
        *slot = set;
    }
    GrantDecision {
        granted: trace[FILTER_COUNT - 1].only(),
        filter_trace: trace,
        cycle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(slot: u8) -> Candidate {
        Candidate {
            slot: Slot(slot),
            op: Op::Read,
            bank: 0,
            row: 0,
            rt: false,
            slack: 0,
            priority: 0,
            hazard: false,
            overdue: false,
        }
    }

    fn ctx<'a>(candidates: &'a [Candidate], report: &'a [BankReport]) -> FilterContext<'a> {
        FilterContext {
            candidates,
            report,
            enabled: [true; FILTER_COUNT],
            qos_urgency_threshold: 5,
            wb_occupancy: 0,
            wb_high_watermark: 3,
            wb_hazard: false,
            rr_next: 0,
        }
    }

    fn set(slots: &[u8]) -> CandidateSet {
        slots.iter().map(|s| Slot(*s)).collect()
    }

    fn idle_report(n: usize) -> Vec<BankReport> {
        vec![
            BankReport {
                idle: true,
                open_row: None,
                blocked: false
            };
            n
        ]
    }

    #[test]
    fn sole_candidate_survives_every_filter() {
        let cands = [cand(3)];
        let report = idle_report(4);
        let d = arbitrate(set(&[3]), &ctx(&cands, &report), 7);
        assert_eq!(d.granted, Some(Slot(3)));
        assert!(d.filter_trace.iter().all(|s| *s == set(&[3])));
    }

    #[test]
    fn empty_pool_grants_nothing() {
        let report = idle_report(4);
        let d = arbitrate(CandidateSet::EMPTY, &ctx(&[], &report), 0);
        assert_eq!(d.granted, None);
    }

    #[test]
    fn qos_filter_keeps_minimal_slack_within_threshold() {
        let mut a = cand(0);
        a.rt = true;
        a.slack = 2;
        let mut b = cand(1);
        b.rt = true;
        b.slack = 40;
        let c = cand(2);
        let cands = [a, b, c];
        let report = idle_report(4);
        assert_eq!(apply_filter(3, set(&[0, 1, 2]), &ctx(&cands, &report)), set(&[0]));
        // nobody urgent: pass through
        assert_eq!(apply_filter(3, set(&[1, 2]), &ctx(&cands, &report)), set(&[1, 2]));
    }

    #[test]
    fn rt_master_with_zero_slack_wins_full_chain() {
        // hand-applied chain: F1..F2 keep both, F3 keeps the RT master, rest pass it through
        let mut rt = cand(4);
        rt.rt = true;
        rt.slack = 0;
        let nrt = cand(1);
        let cands = [rt, nrt];
        let report = idle_report(4);
        let d = arbitrate(set(&[1, 4]), &ctx(&cands, &report), 0);
        assert_eq!(d.filter_trace[1], set(&[1, 4]));
        assert_eq!(d.filter_trace[2], set(&[4]));
        assert_eq!(d.granted, Some(Slot(4)));
    }

    #[test]
    fn idle_bank_preferred() {
        let mut a = cand(0);
        a.bank = 0;
        let mut b = cand(1);
        b.bank = 2;
        let cands = [a, b];
        let mut report = idle_report(4);
        report[0] = BankReport {
            idle: false,
            open_row: Some(9),
            blocked: true,
        };
        assert_eq!(apply_filter(5, set(&[0, 1]), &ctx(&cands, &report)), set(&[1]));
        // open on the wanted row counts as preferred
        report[0].open_row = Some(0);
        assert_eq!(apply_filter(5, set(&[0, 1]), &ctx(&cands, &report)), set(&[0, 1]));
    }

    #[test]
    fn disabled_filter_passes_through() {
        let mut a = cand(0);
        a.priority = 1;
        let cands = [a, cand(1)];
        let report = idle_report(4);
        let mut c = ctx(&cands, &report);
        assert_eq!(apply_filter(6, set(&[0, 1]), &c), set(&[0]));
        c.enabled[5] = false;
        assert_eq!(apply_filter(6, set(&[0, 1]), &c), set(&[0, 1]));
    }

    #[test]
    fn overdue_candidate_keeps_its_place() {
        let mut a = cand(0);
        a.overdue = true;
        let mut b = cand(1);
        b.bank = 2;
        let cands = [a, b];
        let mut report = idle_report(4);
        report[0] = BankReport {
            idle: false,
            open_row: Some(9),
            blocked: true,
        };
        let c = ctx(&cands, &report);
        assert_eq!(apply_filter(2, set(&[0, 1]), &c), set(&[0, 1]));
        assert_eq!(apply_filter(5, set(&[0, 1]), &c), set(&[0, 1]));
    }

    #[test]
    fn overdue_write_buffer_forces_drain() {
        let mut wb = cand(Slot::WRITE_BUFFER.0);
        let cands_fresh = [cand(0), wb];
        let report = idle_report(4);
        let pool = set(&[0, Slot::WRITE_BUFFER.0]);
        assert_eq!(apply_filter(4, pool, &ctx(&cands_fresh, &report)), pool);
        wb.overdue = true;
        let cands = [cand(0), wb];
        assert_eq!(apply_filter(4, pool, &ctx(&cands, &report)), CandidateSet::single(Slot::WRITE_BUFFER));
    }

    #[test]
    fn access_permission_never_empties() {
        let cands = [cand(0), cand(1)];
        let mut report = idle_report(4);
        report[0].blocked = true;
        assert_eq!(apply_filter(2, set(&[0, 1]), &ctx(&cands, &report)), set(&[0, 1]));
    }

    #[test]
    fn round_robin_rotation() {
        let cands = [cand(1), cand(2)];
        let report = idle_report(4);
        let mut c = ctx(&cands, &report);
        // M1 granted last, pointer moved to 2
        c.rr_next = 2;
        assert_eq!(arbitrate(set(&[1, 2]), &c, 0).granted, Some(Slot(2)));
        c.rr_next = 3;
        assert_eq!(arbitrate(set(&[1, 2]), &c, 0).granted, Some(Slot(1)));
        assert_eq!(round_robin(set(&[5, 63]), 6), set(&[63]));
        assert_eq!(round_robin(set(&[5, 63]), 0), set(&[5]));
    }

    #[test]
    fn write_buffer_pressure() {
        let mut wb = cand(63);
        wb.op = Op::Write;
        let cands = [cand(0), wb];
        let report = idle_report(4);
        let mut c = ctx(&cands, &report);
        assert_eq!(apply_filter(4, set(&[0, 63]), &c), set(&[0, 63]));
        c.wb_occupancy = 3;
        assert_eq!(apply_filter(4, set(&[0, 63]), &c), set(&[63]));
        c.wb_occupancy = 0;
        c.wb_hazard = true;
        assert_eq!(apply_filter(4, set(&[0, 63]), &c), set(&[63]));
    }

    #[test]
    fn hazard_reads_are_not_valid_requests() {
        let mut r = cand(0);
        r.hazard = true;
        let cands = [r, cand(63)];
        let report = idle_report(4);
        assert_eq!(apply_filter(1, set(&[0, 63]), &ctx(&cands, &report)), set(&[63]));
    }

    proptest::proptest! {
        #[test]
        fn chain_is_sound(
            pool in 0u64..(1 << 12),
            banks in proptest::collection::vec(0usize..4, 12),
            rows in proptest::collection::vec(0u32..3, 12),
            rt in proptest::collection::vec(proptest::bool::ANY, 12),
            slack in proptest::collection::vec(-5i64..60, 12),
            prio in proptest::collection::vec(0u32..3, 12),
            blocked in proptest::collection::vec(proptest::bool::ANY, 4),
            enabled in proptest::collection::vec(proptest::bool::ANY, 5),
            rr in 0u8..64,
            occ in 0u32..5,
        ) {
            let cands: Vec<Candidate> = (0..12).map(|i| Candidate {
                slot: Slot(i as u8), op: Op::Read, bank: banks[i], row: rows[i], rt: rt[i],
                slack: slack[i], priority: prio[i], hazard: false, overdue: false,
            }).collect();
            let report: Vec<BankReport> = (0..4).map(|b| BankReport {
                idle: !blocked[b] && b % 2 == 0, open_row: Some(b as u32 % 3), blocked: blocked[b],
            }).collect();
            let mut c = ctx(&cands, &report);
            for k in 0..5 { c.enabled[k + 1] = enabled[k]; }
            c.rr_next = rr;
            c.wb_occupancy = occ;
            let pool = CandidateSet(pool);
            let d = arbitrate(pool, &c, 0);
            let mut prev = pool;
            for s in d.filter_trace {
                proptest::prop_assert!(s.is_subset(prev));
                proptest::prop_assert!(prev.is_empty() || !s.is_empty());
                prev = s;
            }
            proptest::prop_assert_eq!(d.granted.is_some(), !pool.is_empty());
            if let Some(g) = d.granted {
                proptest::prop_assert!(pool.contains(g));
                proptest::prop_assert_eq!(d.filter_trace[6], CandidateSet::single(g));
            }
        }
    }
}
