//! A two-component pipeline on a custom signal board.
//!
//! The producer writes a counter, the consumer latches it. Peers only see
//! committed values, so the consumer always trails by one cycle, whatever
//! the registration order and in both kernel modes.

use std::any::Any;

use ahbplus::checker::Violation;
use ahbplus::kernel::{Component, KernelMode, World};
use ahbplus::types::Cycle;

#[derive(Debug, Clone, Default, PartialEq)]
struct Board {
    produced: u64,
    consumed: u64,
}

#[derive(Clone)]
struct Producer {
    staged: u64,
}

impl Component<Board> for Producer {
    fn name(&self) -> &str {
        "producer"
    }
    fn eval(&mut self, _cycle: Cycle, b: &Board) -> Result<(), Violation> {
        self.staged = b.produced + 1;
        Ok(())
    }
    fn commit(&mut self, next: &mut Board) {
        next.produced = self.staged;
    }
    fn box_clone(&self) -> Box<dyn Component<Board>> {
        Box::new(self.clone())
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Clone)]
struct Consumer {
    staged: u64,
}

impl Component<Board> for Consumer {
    fn name(&self) -> &str {
        "consumer"
    }
    fn eval(&mut self, _cycle: Cycle, b: &Board) -> Result<(), Violation> {
        self.staged = b.produced;
        Ok(())
    }
    fn commit(&mut self, next: &mut Board) {
        next.consumed = self.staged;
    }
    fn box_clone(&self) -> Box<dyn Component<Board>> {
        Box::new(self.clone())
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
}

fn trace(mode: KernelMode, consumer_first: bool) -> Vec<Board> {
    let mut world = World::new(Board::default()).with_mode(mode);
    let p: Box<dyn Component<Board>> = Box::new(Producer { staged: 0 });
    let c: Box<dyn Component<Board>> = Box::new(Consumer { staged: 0 });
    let (first, second) = if consumer_first { (c, p) } else { (p, c) };
    world.register(first).unwrap();
    world.register(second).unwrap();
    let mut boards = Vec::new();
    world
        .run(5, false, |_, b| {
            boards.push(b.clone());
            Ok(())
        })
        .unwrap();
    boards
}

fn main() {
    let reference = trace(KernelMode::Reference, false);
    for (cycle, b) in reference.iter().enumerate() {
        println!("cycle {cycle}: produced {} consumed {}", b.produced, b.consumed);
    }
    assert_eq!(trace(KernelMode::Optimized, false), reference);
    assert_eq!(trace(KernelMode::Optimized, true), reference);
    println!("optimized kernel and both registration orders match the reference");
}
