//! Two-phase cycle-stepped simulation kernel.
//!
//! Every step runs two phases over the registered components:
//!
//! 1. **Eval**: each component reads the signal board committed at the end
//!    of the previous cycle and computes its next state. Nothing it does is
//!    visible to peers yet.
//! 2. **Commit**: each component publishes its staged outputs into the
//!    next board. The boards are then swapped.
//!
//! Because Eval only sees the committed board, a value written at cycle `N`
//! is first observed by peers during Eval of cycle `N + 1`, and results do
//! not depend on registration order as long as each component writes only
//! the board fields it owns.
//!
//! Components are invoked by direct method call; there are no threads or
//! coroutines involved in stepping.

use std::any::Any;
use std::mem;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::Violation;
use crate::types::Cycle;

/// A clocked model hosted by a [`World`].
pub trait Component<B>: Send {
    fn name(&self) -> &str;

    /// Computes the next state from the committed board.
    fn eval(&mut self, cycle: Cycle, committed: &B) -> Result<(), Violation>;

    /// Writes staged outputs into the board being built for the next cycle.
    fn commit(&mut self, next: &mut B);

    /// True when the component has no outstanding work.
    fn is_quiescent(&self) -> bool {
        true
    }

    /// Transactions completed so far, as seen by this component.
    fn completed(&self) -> u64 {
        0
    }

    fn box_clone(&self) -> Box<dyn Component<B>>;

    fn as_any(&self) -> &dyn Any;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Eval,
    Commit,
}

/// Which stepping routine the world uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// In-place double buffering with buffer reuse.
    #[default]
    Optimized,
    /// Snapshot the whole world, evaluate clones against the snapshot, then
    /// install all updates at once. Slow; used as an oracle.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    MaxCycles,
    AllMastersDone,
    AssertionAbort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSummary {
    pub total_cycles: Cycle,
    pub completed_transactions: u64,
    pub terminated_reason: TerminationReason,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("components cannot be registered after the first step")]
    RegistrationAfterStart,
    #[error("max_cycles must be greater than zero")]
    ZeroMaxCycles,
    #[error("fatal assertion: {0}")]
    AssertionAbort(Violation),
}

/// Dense component handle, equal to registration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentId(pub usize);

pub struct World<B> {
    cycle: Cycle,
    phase: Phase,
    mode: KernelMode,
    components: Vec<Box<dyn Component<B>>>,
    current: B,
    next: B,
}

impl<B: Clone + Send + 'static> World<B> {
    pub fn new(board: B) -> Self {
        World {
            cycle: 0,
            phase: Phase::Idle,
            mode: KernelMode::Optimized,
            components: Vec::new(),
            next: board.clone(),
            current: board,
        }
    }

    pub fn with_mode(mut self, mode: KernelMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn cycle(&self) -> Cycle {
        self.cycle
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// The board committed at the end of the last step.
    pub fn board(&self) -> &B {
        &self.current
    }

    pub fn components(&self) -> impl Iterator<Item = &dyn Component<B>> {
        self.components.iter().map(|c| c.as_ref())
    }

    /// Finds the first component of concrete type `T`.
    pub fn component<T: 'static>(&self) -> Option<&T> {
        self.components
            .iter()
            .find_map(|c| c.as_any().downcast_ref::<T>())
    }

    pub fn register(&mut self, component: Box<dyn Component<B>>) -> Result<ComponentId, KernelError> {
        if self.cycle != 0 {
            return Err(KernelError::RegistrationAfterStart);
        }
        self.components.push(component);
        Ok(ComponentId(self.components.len() - 1))
    }

    pub fn step_cycle(&mut self) -> Result<(), KernelError> {
        debug_assert_eq!(self.phase, Phase::Idle);
        let result = match self.mode {
            KernelMode::Optimized => self.step_in_place(),
            KernelMode::Reference => self.step_snapshot(),
        };
        self.phase = Phase::Idle;
        result
    }

    fn step_in_place(&mut self) -> Result<(), KernelError> {
        let cycle = self.cycle;
        self.phase = Phase::Eval;
        for component in &mut self.components {
            component
                .eval(cycle, &self.current)
                .map_err(KernelError::AssertionAbort)?;
        }
        self.phase = Phase::Commit;
        self.next.clone_from(&self.current);
        for component in &mut self.components {
            component.commit(&mut self.next);
        }
        mem::swap(&mut self.current, &mut self.next);
        self.cycle += 1;
        Ok(())
    }

    fn step_snapshot(&mut self) -> Result<(), KernelError> {
        let cycle = self.cycle;
        let snapshot = self.current.clone();
        self.phase = Phase::Eval;
        let mut evaluated = Vec::with_capacity(self.components.len());
        for component in &self.components {
            let mut copy = component.box_clone();
            copy.eval(cycle, &snapshot).map_err(KernelError::AssertionAbort)?;
            evaluated.push(copy);
        }
        self.phase = Phase::Commit;
        let mut next = snapshot.clone();
        for component in &mut evaluated {
            component.commit(&mut next);
        }
        self.components = evaluated;
        self.current = next;
        self.next = snapshot;
        self.cycle += 1;
        Ok(())
    }

    pub fn all_quiescent(&self) -> bool {
        self.components.iter().all(|c| c.is_quiescent())
    }

    pub fn completed_transactions(&self) -> u64 {
        self.components.iter().map(|c| c.completed()).sum()
    }

    /// Steps until `max_cycles` is reached or, with `stop_when_idle`, until
    /// every component is quiescent. `observe` sees each committed board
    /// together with the cycle that produced it.
    pub fn run<F>(&mut self, max_cycles: Cycle, stop_when_idle: bool, mut observe: F) -> Result<SimSummary, KernelError>
    where
        F: FnMut(Cycle, &B) -> Result<(), Violation>,
    {
        if max_cycles == 0 {
            return Err(KernelError::ZeroMaxCycles);
        }
        let mut reason = TerminationReason::MaxCycles;
        while self.cycle < max_cycles {
            self.step_cycle()?;
            observe(self.cycle - 1, &self.current).map_err(KernelError::AssertionAbort)?;
            if stop_when_idle && self.all_quiescent() {
                reason = TerminationReason::AllMastersDone;
                break;
            }
        }
        Ok(SimSummary {
            total_cycles: self.cycle,
            completed_transactions: self.completed_transactions(),
            terminated_reason: reason,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two registers that each latch the other's committed value plus one.
    #[derive(Debug, Clone, Default, PartialEq)]
    struct Pair {
        a: u64,
        b: u64,
    }

    #[derive(Clone)]
    struct Latch {
        name: &'static str,
        writes_a: bool,
        staged: u64,
    }

    impl Component<Pair> for Latch {
        fn name(&self) -> &str {
            self.name
        }
        fn eval(&mut self, cycle: Cycle, b: &Pair) -> Result<(), Violation> {
            self.staged = if self.writes_a { b.b + cycle } else { b.a * 2 + 1 };
            Ok(())
        }
        fn commit(&mut self, next: &mut Pair) {
            if self.writes_a {
                next.a = self.staged;
            } else {
                next.b = self.staged;
            }
        }
        fn box_clone(&self) -> Box<dyn Component<Pair>> {
            Box::new(self.clone())
        }
        fn as_any(&self) -> &dyn Any {
            self
        }
    }

    fn latch(name: &'static str, writes_a: bool) -> Box<dyn Component<Pair>> {
        Box::new(Latch {
            name,
            writes_a,
            staged: 0,
        })
    }

    fn trace(order_ab: bool, mode: KernelMode, steps: usize) -> Vec<Pair> {
        let mut world = World::new(Pair::default()).with_mode(mode);
        if order_ab {
            world.register(latch("A", true)).unwrap();
            world.register(latch("B", false)).unwrap();
        } else {
            world.register(latch("B", false)).unwrap();
            world.register(latch("A", true)).unwrap();
        }
        (0..steps)
            .map(|_| {
                world.step_cycle().unwrap();
                world.board().clone()
            })
            .collect()
    }

    /// Simultaneous update computed directly from the previous pair.
    fn closed_form(steps: usize) -> Vec<Pair> {
        let mut p = Pair::default();
        (0..steps as u64)
            .map(|cycle| {
                p = Pair {
                    a: p.b + cycle,
                    b: p.a * 2 + 1,
                };
                p.clone()
            })
            .collect()
    }

    #[test]
    fn dense_ids_in_registration_order() {
        let mut world = World::new(Pair::default());
        assert_eq!(world.register(latch("A", true)).unwrap(), ComponentId(0));
        assert_eq!(world.register(latch("B", false)).unwrap(), ComponentId(1));
        assert_eq!(world.register(latch("C", false)).unwrap(), ComponentId(2));
    }

    #[test]
    fn registration_after_start_rejected() {
        let mut world = World::new(Pair::default());
        world.step_cycle().unwrap();
        assert_eq!(
            world.register(latch("A", true)).unwrap_err(),
            KernelError::RegistrationAfterStart
        );
    }

    #[test]
    fn empty_world_advances_one_cycle() {
        let mut world = World::new(Pair::default());
        world.step_cycle().unwrap();
        assert_eq!(world.cycle(), 1);
        assert_eq!(world.board(), &Pair::default());
        assert_eq!(world.phase(), Phase::Idle);
    }

    #[test]
    fn writes_visible_next_cycle_only() {
        let mut world = World::new(Pair::default());
        world.register(latch("A", true)).unwrap();
        world.register(latch("B", false)).unwrap();
        // cycle 0: a <- b(0) + 0 = 0, b <- a(0)*2+1 = 1
        world.step_cycle().unwrap();
        assert_eq!(world.board(), &Pair { a: 0, b: 1 });
        // cycle 1: a <- 1 + 1 = 2, b <- 0*2+1 = 1 (B saw the old a)
        world.step_cycle().unwrap();
        assert_eq!(world.board(), &Pair { a: 2, b: 1 });
    }

    #[test]
    fn order_independent_and_matches_reference() {
        let expected = closed_form(20);
        assert_eq!(trace(true, KernelMode::Optimized, 20), expected);
        assert_eq!(trace(false, KernelMode::Optimized, 20), expected);
        assert_eq!(trace(true, KernelMode::Reference, 20), expected);
        assert_eq!(trace(false, KernelMode::Reference, 20), expected);
    }

    #[test]
    fn run_without_components_hits_max_cycles() {
        let mut world = World::new(Pair::default());
        let summary = world.run(100, false, |_, _| Ok(())).unwrap();
        assert_eq!(
            summary,
            SimSummary {
                total_cycles: 100,
                completed_transactions: 0,
                terminated_reason: TerminationReason::MaxCycles
            }
        );
    }

    #[test]
    fn run_rejects_zero_max_cycles() {
        let mut world = World::new(Pair::default());
        assert_eq!(
            world.run(0, true, |_, _| Ok(())).unwrap_err(),
            KernelError::ZeroMaxCycles
        );
    }

    #[test]
    fn observer_sees_committed_cycle() {
        let mut world = World::new(Pair::default());
        world.register(latch("A", true)).unwrap();
        let mut seen = Vec::new();
        world
            .run(3, false, |cycle, _| {
                seen.push(cycle);
                Ok(())
            })
            .unwrap();
        assert_eq!(seen, vec![0, 1, 2]);
    }
}
