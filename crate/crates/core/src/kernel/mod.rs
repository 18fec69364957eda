//! Deterministic multi-clock, cycle-stepped simulation engine.
//!
//! Components are bound to a clock domain and ticked on every rising edge of
//! that domain, in registration order. When several domains have an edge at
//! the same instant they are processed in domain registration order. Every
//! tick follows a compute-then-commit contract: components read committed
//! state from the shared [`World`] and stage their outputs; the world commits
//! all staged state once every component with an edge at that instant has
//! run. Results are therefore independent of the order components were
//! registered in.

mod signal;
mod time;
mod trace;

pub use signal::{Mailbox, Reg};
pub use time::{ClockDomain, SimTime, ETH_PERIOD_PS, PS_PER_SECOND, SYS_DEFAULT_PERIOD_PS};
pub use trace::{Tracer, TRACE_HEADER};

use std::fmt::Display;
use std::io::Write;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Satisfied,
    TimedOut,
}

/// A clocked block of logic.
pub trait Component<W>: Send {
    fn name(&self) -> &str;

    /// Called once per rising edge of the bound domain. Must only read
    /// committed state and stage its outputs.
    fn tick(&mut self, world: &mut W, cx: &mut TickContext<'_>) -> Result<(), SimError>;
}

/// Shared state between components: channels, FIFOs, registers, memories.
pub trait World: Send {
    /// Makes the outputs staged during this instant visible.
    fn commit(&mut self, cx: &mut CommitContext<'_>) -> Result<(), SimError>;
}

/// Per-tick view handed to a component.
pub struct TickContext<'a> {
    time: SimTime,
    domain: DomainId,
    domain_name: &'a str,
    edge_index: u64,
    component: &'a str,
    tracer: &'a mut Tracer,
}

impl TickContext<'_> {
    pub fn time(&self) -> SimTime {
        self.time
    }

    pub fn domain(&self) -> DomainId {
        self.domain
    }

    /// 1-based index of the current edge in the component's domain.
    pub fn edge_index(&self) -> u64 {
        self.edge_index
    }

    pub fn tracing(&self) -> bool {
        self.tracer.enabled()
    }

    pub fn trace(&mut self, event: &str, value: impl Display) -> Result<(), SimError> {
        self.tracer.emit(
            self.time.as_ps(),
            self.domain_name,
            self.edge_index,
            self.component,
            event,
            value,
        )
    }
}

/// View handed to [`World::commit`]: which domains had an edge at this instant.
pub struct CommitContext<'a> {
    time: SimTime,
    fired: &'a [(DomainId, u64)],
    names: &'a [String],
    tracer: &'a mut Tracer,
}

impl CommitContext<'_> {
    pub fn time(&self) -> SimTime {
        self.time
    }

    pub fn fired(&self, domain: DomainId) -> bool {
        self.fired.iter().any(|(d, _)| *d == domain)
    }

    pub fn edge_index(&self, domain: DomainId) -> Option<u64> {
        self.fired
            .iter()
            .find(|(d, _)| *d == domain)
            .map(|(_, e)| *e)
    }

    pub fn tracing(&self) -> bool {
        self.tracer.enabled()
    }

    pub fn trace(
        &mut self,
        domain: DomainId,
        component: &str,
        event: &str,
        value: impl Display,
    ) -> Result<(), SimError> {
        if !self.tracer.enabled() {
            return Ok(());
        }
        let edge = self.edge_index(domain).unwrap_or(0);
        let name = self.names.get(domain.0).map(String::as_str).unwrap_or("?");
        self.tracer
            .emit(self.time.as_ps(), name, edge, component, event, value)
    }
}

struct Slot<W> {
    name: String,
    component: Box<dyn Component<W>>,
}

pub struct Kernel<W> {
    world: W,
    clocks: Vec<ClockDomain>,
    names: Vec<String>,
    edges: Vec<u64>,
    slots: Vec<Slot<W>>,
    by_domain: Vec<Vec<usize>>,
    now: SimTime,
    started: bool,
    tracer: Tracer,
    fired: Vec<(DomainId, u64)>,
}

impl<W: World> Kernel<W> {
    pub fn new(world: W) -> Self {
        Kernel {
            world,
            clocks: Vec::new(),
            names: Vec::new(),
            edges: Vec::new(),
            slots: Vec::new(),
            by_domain: Vec::new(),
            now: SimTime::ZERO,
            started: false,
            tracer: Tracer::disabled(),
            fired: Vec::new(),
        }
    }

    pub fn add_domain(&mut self, clock: ClockDomain) -> Result<DomainId, SimError> {
        if self.started {
            return Err(SimError::Config(
                "cannot add a clock domain after the simulation started".into(),
            ));
        }
        if self.names.iter().any(|n| n == clock.name()) {
            return Err(SimError::Config(format!(
                "duplicate clock domain {}",
                clock.name()
            )));
        }
        self.names.push(clock.name().to_string());
        self.clocks.push(clock);
        self.edges.push(0);
        self.by_domain.push(Vec::new());
        Ok(DomainId(self.clocks.len() - 1))
    }

    pub fn register(
        &mut self,
        component: Box<dyn Component<W>>,
        domain: DomainId,
    ) -> Result<ComponentId, SimError> {
        if self.started {
            return Err(SimError::Config(format!(
                "cannot register {} after the simulation started",
                component.name()
            )));
        }
        let list = self
            .by_domain
            .get_mut(domain.0)
            .ok_or(SimError::UnknownDomain(domain))?;
        let id = self.slots.len();
        list.push(id);
        self.slots.push(Slot {
            name: component.name().to_string(),
            component,
        });
        Ok(ComponentId(id))
    }

    /// Attaches a CSV trace sink. Must happen before the first run.
    pub fn set_trace_sink(&mut self, sink: Box<dyn Write + Send>) -> Result<(), SimError> {
        if self.started {
            return Err(SimError::Config(
                "trace sink must be attached before the simulation starts".into(),
            ));
        }
        self.tracer = Tracer::to_writer(sink)?;
        Ok(())
    }

    pub fn flush_trace(&mut self) -> Result<(), SimError> {
        self.tracer.flush()
    }

    pub fn trace_rows(&self) -> u64 {
        self.tracer.rows()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn started(&self) -> bool {
        self.started
    }

    pub fn world(&self) -> &W {
        &self.world
    }

    pub fn into_world(self) -> W {
        self.world
    }

    pub fn world_mut(&mut self) -> &mut W {
        &mut self.world
    }

    pub fn clock(&self, domain: DomainId) -> Result<&ClockDomain, SimError> {
        self.clocks
            .get(domain.0)
            .ok_or(SimError::UnknownDomain(domain))
    }

    pub fn domain_by_name(&self, name: &str) -> Option<DomainId> {
        self.names.iter().position(|n| n == name).map(DomainId)
    }

    /// Rising edges of `domain` processed so far.
    pub fn edge_count(&self, domain: DomainId) -> Result<u64, SimError> {
        self.edges
            .get(domain.0)
            .copied()
            .ok_or(SimError::UnknownDomain(domain))
    }

    pub fn component_name(&self, id: ComponentId) -> Option<&str> {
        self.slots.get(id.0).map(|s| s.name.as_str())
    }

    fn next_edge_time(&self) -> Option<SimTime> {
        self.clocks
            .iter()
            .zip(&self.edges)
            .map(|(c, &n)| c.edge_time(n + 1))
            .min()
    }

    /// Processes every domain edge at the next edge instant.
    pub fn step(&mut self) -> Result<SimTime, SimError> {
        self.started = true;
        let t = self
            .next_edge_time()
            .ok_or_else(|| SimError::Config("kernel has no clock domains".into()))?;
        self.now = t;

        self.fired.clear();
        for (i, clock) in self.clocks.iter().enumerate() {
            if clock.edge_time(self.edges[i] + 1) == t {
                self.edges[i] += 1;
                self.fired.push((DomainId(i), self.edges[i]));
            }
        }

        let Kernel {
            world,
            slots,
            by_domain,
            names,
            tracer,
            fired,
            ..
        } = self;
        for &(domain, edge_index) in fired.iter() {
            for &idx in &by_domain[domain.0] {
                let slot = &mut slots[idx];
                let mut cx = TickContext {
                    time: t,
                    domain,
                    domain_name: &names[domain.0],
                    edge_index,
                    component: &slot.name,
                    tracer,
                };
                slot.component.tick(world, &mut cx)?;
            }
        }
        let mut cx = CommitContext {
            time: t,
            fired,
            names,
            tracer,
        };
        world.commit(&mut cx)?;
        Ok(t)
    }

    /// Advances edge by edge until `done` holds or the next edge would pass
    /// `max_time`.
    pub fn run_until<F>(&mut self, mut done: F, max_time: SimTime) -> Result<RunOutcome, SimError>
    where
        F: FnMut(&Kernel<W>) -> bool,
    {
        if max_time < self.now {
            return Err(SimError::Config(format!(
                "run limit {max_time} is before the current time {}",
                self.now
            )));
        }
        self.started = true;
        if done(self) {
            return Ok(RunOutcome::Satisfied);
        }
        loop {
            match self.next_edge_time() {
                Some(t) if t <= max_time => {
                    self.step()?;
                    if done(self) {
                        return Ok(RunOutcome::Satisfied);
                    }
                }
                _ => {
                    self.now = max_time;
                    return Ok(RunOutcome::TimedOut);
                }
            }
        }
    }
}

impl<W> std::fmt::Debug for Kernel<W> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("now", &self.now)
            .field("domains", &self.names)
            .field("edges", &self.edges)
            .field(
                "components",
                &self
                    .slots
                    .iter()
                    .map(|s| s.name.as_str())
                    .collect::<Vec<_>>(),
            )
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Records (time, domain, edge, component) for every tick and whether a
    /// commit ran at that instant.
    #[derive(Default)]
    struct Log {
        ticks: Vec<(u64, usize, u64, String)>,
        commits: Vec<u64>,
        shared: Reg<u64>,
    }

    impl World for Log {
        fn commit(&mut self, cx: &mut CommitContext<'_>) -> Result<(), SimError> {
            self.commits.push(cx.time().as_ps());
            self.shared.commit();
            Ok(())
        }
    }

    struct Probe(String);

    impl Component<Log> for Probe {
        fn name(&self) -> &str {
            &self.0
        }
        fn tick(&mut self, w: &mut Log, cx: &mut TickContext<'_>) -> Result<(), SimError> {
            w.ticks.push((
                cx.time().as_ps(),
                cx.domain().0,
                cx.edge_index(),
                self.0.clone(),
            ));
            Ok(())
        }
    }

    /// Increments the shared register; a reader in the same instant must see
    /// the previous value.
    struct Incr;
    impl Component<Log> for Incr {
        fn name(&self) -> &str {
            "incr"
        }
        fn tick(&mut self, w: &mut Log, _cx: &mut TickContext<'_>) -> Result<(), SimError> {
            let v = *w.shared.get();
            w.shared.set(v + 1);
            Ok(())
        }
    }

    struct Sample(Vec<u64>);
    impl Component<Log> for Sample {
        fn name(&self) -> &str {
            "sample"
        }
        fn tick(&mut self, w: &mut Log, _cx: &mut TickContext<'_>) -> Result<(), SimError> {
            self.0.push(*w.shared.get());
            w.ticks.push((0, 0, *w.shared.get(), "sample".into()));
            Ok(())
        }
    }

    fn two_domain_kernel() -> (Kernel<Log>, DomainId, DomainId) {
        let mut k = Kernel::new(Log::default());
        let eth = k.add_domain(ClockDomain::ethernet()).unwrap();
        let sys = k.add_domain(ClockDomain::system_default()).unwrap();
        (k, eth, sys)
    }

    #[test]
    fn ids_are_unique_and_stable() {
        let (mut k, eth, sys) = two_domain_kernel();
        let a = k.register(Box::new(Probe("mac".into())), eth).unwrap();
        let b = k.register(Box::new(Probe("dma".into())), sys).unwrap();
        assert_eq!(a, ComponentId(0));
        assert_eq!(b, ComponentId(1));
        assert_eq!(k.component_name(b), Some("dma"));
    }

    #[test]
    fn register_after_start_is_rejected() {
        let (mut k, eth, _) = two_domain_kernel();
        k.run_until(|_| false, SimTime::from_ns(100)).unwrap();
        let err = k.register(Box::new(Probe("late".into())), eth).unwrap_err();
        assert!(matches!(err, SimError::Config(_)));
        assert!(k.add_domain(ClockDomain::new("x", 10, 0).unwrap()).is_err());
    }

    #[test]
    fn register_into_unknown_domain_fails() {
        let (mut k, _, _) = two_domain_kernel();
        assert!(matches!(
            k.register(Box::new(Probe("x".into())), DomainId(7)),
            Err(SimError::UnknownDomain(_))
        ));
        assert!(k.edge_count(DomainId(7)).is_err());
    }

    #[test]
    fn predicate_on_edge_count() {
        let (mut k, eth, sys) = two_domain_kernel();
        assert_eq!(k.edge_count(eth).unwrap(), 0);
        let out = k
            .run_until(|k| k.edge_count(eth).unwrap() == 10, SimTime::from_us(10))
            .unwrap();
        assert_eq!(out, RunOutcome::Satisfied);
        assert_eq!(k.now(), SimTime::from_ps(80_000));
        assert_eq!(k.edge_count(sys).unwrap(), 4);
    }

    #[test]
    fn timeout_lands_exactly_on_limit() {
        let (mut k, _, _) = two_domain_kernel();
        let out = k.run_until(|_| false, SimTime::from_us(1)).unwrap();
        assert_eq!(out, RunOutcome::TimedOut);
        assert_eq!(k.now(), SimTime::from_us(1));
        assert!(k.run_until(|_| false, SimTime::from_ns(10)).is_err());
    }

    #[test]
    fn coinciding_edges_follow_domain_order() {
        let (mut k, eth, sys) = two_domain_kernel();
        k.register(Box::new(Probe("e0".into())), eth).unwrap();
        k.register(Box::new(Probe("s0".into())), sys).unwrap();
        k.register(Box::new(Probe("e1".into())), eth).unwrap();
        k.run_until(|_| false, SimTime::from_ps(120_000)).unwrap();
        let w = k.world();
        let both: Vec<u64> = {
            let mut v: Vec<u64> = w
                .ticks
                .iter()
                .filter(|t| t.3 == "s0")
                .map(|t| t.0)
                .filter(|t| t % 8_000 == 0)
                .collect();
            v.dedup();
            v
        };
        assert_eq!(both, vec![40_000, 80_000, 120_000]);
        let at_40: Vec<&str> = w
            .ticks
            .iter()
            .filter(|t| t.0 == 40_000)
            .map(|t| t.3.as_str())
            .collect();
        assert_eq!(at_40, vec!["e0", "e1", "s0"]);
        // One commit per distinct instant.
        let mut instants = w.commits.clone();
        instants.dedup();
        assert_eq!(instants.len(), w.commits.len());
    }

    #[test]
    fn edge_sequence_is_sorted_merge_of_progressions() {
        let mut k = Kernel::new(Log::default());
        let a = k
            .add_domain(ClockDomain::new("a", 7_000, 3_000).unwrap())
            .unwrap();
        let b = k
            .add_domain(ClockDomain::new("b", 5_000, 0).unwrap())
            .unwrap();
        k.register(Box::new(Probe("pa".into())), a).unwrap();
        k.register(Box::new(Probe("pb".into())), b).unwrap();
        k.run_until(|_| false, SimTime::from_ps(200_000)).unwrap();

        let mut expected: Vec<(u64, usize)> = Vec::new();
        for n in 1.. {
            let t = 3_000 + 7_000 * n;
            if t > 200_000 {
                break;
            }
            expected.push((t, 0));
        }
        for n in 1..=40 {
            expected.push((5_000 * n, 1));
        }
        expected.sort();
        let got: Vec<(u64, usize)> = k.world().ticks.iter().map(|t| (t.0, t.1)).collect();
        assert_eq!(got, expected);
        // No (domain, edge) pair ticked twice per component.
        let mut seen = std::collections::HashSet::new();
        for t in &k.world().ticks {
            assert!(seen.insert((t.1, t.2, t.3.clone())));
        }
    }

    #[test]
    fn outputs_become_visible_on_the_next_edge_regardless_of_order() {
        for reader_first in [true, false] {
            let mut k = Kernel::new(Log::default());
            let d = k
                .add_domain(ClockDomain::new("d", 1_000, 0).unwrap())
                .unwrap();
            if reader_first {
                k.register(Box::new(Sample(Vec::new())), d).unwrap();
                k.register(Box::new(Incr), d).unwrap();
            } else {
                k.register(Box::new(Incr), d).unwrap();
                k.register(Box::new(Sample(Vec::new())), d).unwrap();
            }
            k.run_until(|_| false, SimTime::from_ps(3_000)).unwrap();
            let seen: Vec<u64> = k
                .world()
                .ticks
                .iter()
                .filter(|t| t.3 == "sample")
                .map(|t| t.2)
                .collect();
            assert_eq!(seen, vec![0, 1, 2]);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let run = || {
            let (mut k, eth, sys) = two_domain_kernel();
            k.register(Box::new(Probe("a".into())), eth).unwrap();
            k.register(Box::new(Probe("b".into())), sys).unwrap();
            k.run_until(|_| false, SimTime::from_us(2)).unwrap();
            k.world().ticks.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trace_rows_are_written() {
        #[derive(Clone, Default)]
        struct Shared(std::sync::Arc<std::sync::Mutex<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(b);
                Ok(b.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        struct Chatty;
        impl Component<Log> for Chatty {
            fn name(&self) -> &str {
                "chatty"
            }
            fn tick(&mut self, _w: &mut Log, cx: &mut TickContext<'_>) -> Result<(), SimError> {
                cx.trace("hello", cx.edge_index())
            }
        }
        let buf = Shared::default();
        let (mut k, eth, _) = two_domain_kernel();
        k.register(Box::new(Chatty), eth).unwrap();
        k.set_trace_sink(Box::new(buf.clone())).unwrap();
        k.run_until(|k| k.edge_count(eth).unwrap() == 2, SimTime::from_us(1))
            .unwrap();
        k.flush_trace().unwrap();
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        assert_eq!(
            text,
            "time_ps,domain,edge_index,component,event,value\n8000,eth,1,chatty,hello,1\n16000,eth,2,chatty,hello,2\n"
        );
    }
}
