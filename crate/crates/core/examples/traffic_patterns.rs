//! Draws the first few transactions of each traffic pattern.

use ahbplus::ddrc::AddressMap;
use ahbplus::masters::{InterArrival, MasterModel, OpMix, PatternKind, PatternSpec, Region, Stride, StrideMode};
use ahbplus::types::MasterId;

fn main() {
    let map = AddressMap::new(64, 8, 2, 13).unwrap();
    for (kind, stride) in [
        (PatternKind::Single, Stride::default()),
        (PatternKind::Burst8, Stride::default()),
        (PatternKind::Mixed, Stride::Named(StrideMode::Random)),
    ] {
        let spec = PatternSpec {
            kind,
            op_mix: OpMix::Read,
            txn_count: 5,
            addr_stride: stride,
            inter_arrival: InterArrival::Range([0, 4]),
            seed: 11,
        };
        let id = MasterId(1);
        let mut m = MasterModel::new(id, spec, &map, Region::for_master(&map, 1, 4)).unwrap();
        println!("{kind:?} with {stride:?} stride");
        let mut cycle = 0;
        while !m.is_done() {
            match m.next_stimulus(cycle) {
                Some(s) => {
                    let d = map.decode(s.addr).unwrap();
                    println!("  cycle {cycle:>2}: {:?} {:?} addr {:#07x} bank {} row {}", s.op, s.burst, s.addr, d.bank, d.row);
                    m.complete(cycle);
                }
                None => cycle += 1,
            }
        }
    }
}
