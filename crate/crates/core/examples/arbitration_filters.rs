//! Runs the seven-filter arbitration chain by hand and prints what each
//! filter keeps.

use ahbplus::bus::{arbitrate, Candidate, FilterContext, FILTER_COUNT, FILTER_NAMES};
use ahbplus::ddrc::BankReport;
use ahbplus::types::{CandidateSet, Op, Slot};

fn cand(slot: u8, bank: usize, row: u32) -> Candidate {
    Candidate {
        slot: Slot(slot),
        op: Op::Read,
        bank,
        row,
        rt: false,
        slack: 0,
        priority: 0,
        hazard: false,
        overdue: false,
    }
}

fn show(title: &str, pool: CandidateSet, ctx: &FilterContext<'_>) {
    let d = arbitrate(pool, ctx, 0);
    println!("{title}");
    println!("  {:<22} {:?}", "pool", pool.iter().map(|s| s.0).collect::<Vec<_>>());
    for (name, set) in FILTER_NAMES.iter().zip(d.filter_trace) {
        println!("  {name:<22} {:?}", set.iter().map(|s| s.0).collect::<Vec<_>>());
    }
    println!("  {:<22} {:?}", "granted", d.granted.map(|s| s.0));
}

fn main() {
    // bank 0 is bursting, bank 1 has row 7 open, banks 2 and 3 are idle
    let report = vec![
        BankReport { idle: false, open_row: Some(3), blocked: true },
        BankReport { idle: false, open_row: Some(7), blocked: false },
        BankReport { idle: true, open_row: None, blocked: false },
        BankReport { idle: true, open_row: None, blocked: false },
    ];
    let mut rt = cand(4, 1, 9);
    rt.rt = true;
    rt.slack = 40;
    let candidates = vec![cand(0, 0, 1), cand(1, 1, 7), cand(2, 2, 0), rt, cand(5, 1, 2)];
    let pool: CandidateSet = candidates.iter().map(|c| c.slot).collect();
    let mut ctx = FilterContext {
        candidates: &candidates,
        report: &report,
        enabled: [true; FILTER_COUNT],
        qos_urgency_threshold: 24,
        wb_occupancy: 0,
        wb_high_watermark: 3,
        wb_hazard: false,
        rr_next: 2,
    };
    show("relaxed real-time master: bank preferences decide", pool, &ctx);

    let mut urgent = candidates.clone();
    urgent[3].slack = 5;
    ctx.candidates = &urgent;
    show("\nsame pool, real-time master close to its deadline", pool, &ctx);

    ctx.candidates = &candidates;
    ctx.enabled[4] = false;
    show("\nidle-bank filter switched off: round robin from slot 2", pool, &ctx);
}
