//! Steps a single DRAM bank through activate, read, precharge and a second
//! activate, showing the timing constraints the controller must respect.

use ahbplus::ddrc::{bank_step, BankState, DdrCommand, DdrTiming};
use ahbplus::types::TxnId;

fn main() {
    let timing = DdrTiming::default();
    println!("{timing:?}");
    let script: &[(u64, DdrCommand)] = &[
        (0, DdrCommand::Activate { bank: 0, row: 5 }),
        (3, DdrCommand::ColRead { bank: 0, col: 0, beats: 4, txn: TxnId(1) }),
        (10, DdrCommand::Precharge { bank: 0 }),
        (13, DdrCommand::Activate { bank: 0, row: 6 }),
    ];
    let mut bank = BankState::default();
    for cycle in 0..16 {
        let cmd = script.iter().find(|(c, _)| *c == cycle).map(|(_, cmd)| cmd);
        bank = bank_step(&bank, None, cycle, &timing).unwrap();
        if let Some(cmd) = cmd {
            bank = bank_step(&bank, Some(cmd), cycle, &timing).unwrap();
        }
        println!("cycle {cycle:>2} {:<40} {:?}", cmd.map(|c| format!("{c:?}")).unwrap_or_default(), bank.phase);
    }
    // precharging before tRAS has elapsed is refused
    let early = bank_step(&BankState::default(), Some(&DdrCommand::Activate { bank: 0, row: 1 }), 0, &timing).unwrap();
    println!("{}", bank_step(&early, Some(&DdrCommand::Precharge { bank: 0 }), 2, &timing).unwrap_err());
}
