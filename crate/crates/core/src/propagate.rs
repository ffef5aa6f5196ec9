//! Fixpoint propagation over an [`Icsp`].

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::error::PropagateError;
use crate::expr::Term;
use crate::icsp::{translate_term, Domains, Icsp, Relation, VarId};
use crate::interval::{Interval, IntervalBox};

/// Hard cap on DRO applications in one run.
pub const ACTIVATION_BUDGET: u64 = 1_000_000;

/// Selection order of the active set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Fifo,
    /// Greater depth first, ties by insertion order.
    DepthPriority,
    /// Uniformly random member, reproducible from the seed.
    Random(u64),
}

/// Initial contents of the active set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Init {
    All,
    Subset(Vec<usize>),
}

/// Duplicate-free worklist of constraint indices.
#[derive(Clone, Debug)]
pub struct ActiveSet {
    member: Vec<bool>,
    len: usize,
    seq: u64,
    queue: Queue,
}

#[derive(Clone, Debug)]
enum Queue {
    Fifo(VecDeque<usize>),
    Depth(BinaryHeap<(u32, Reverse<u64>, usize)>),
    Random(Vec<usize>, Box<ChaCha8Rng>),
}

impl ActiveSet {
    pub fn new(order: Order, constraints: usize) -> Self {
        let queue = match order {
            Order::Fifo => Queue::Fifo(VecDeque::new()),
            Order::DepthPriority => Queue::Depth(BinaryHeap::new()),
            Order::Random(seed) => Queue::Random(Vec::new(), Box::new(ChaCha8Rng::seed_from_u64(seed))),
        };
        ActiveSet {
            member: vec![false; constraints],
            len: 0,
            seq: 0,
            queue,
        }
    }

    /// Inserts `k` unless already present. Returns whether it was inserted.
    pub fn push(&mut self, k: usize, depth: u32) -> bool {
        if self.member[k] {
            return false;
        }
        self.member[k] = true;
        self.len += 1;
        self.seq += 1;
        match &mut self.queue {
            Queue::Fifo(q) => q.push_back(k),
            Queue::Depth(h) => h.push((depth, Reverse(self.seq), k)),
            Queue::Random(v, _) => v.push(k),
        }
        true
    }

    /// Takes the next constraint out of the queue. It stays a member, so
    /// pushes are suppressed, until [`ActiveSet::release`].
    pub fn choose(&mut self) -> Option<usize> {
        match &mut self.queue {
            Queue::Fifo(q) => q.pop_front(),
            Queue::Depth(h) => h.pop().map(|(_, _, k)| k),
            Queue::Random(v, rng) => {
                if v.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..v.len());
                    Some(v.swap_remove(i))
                }
            }
        }
    }

    pub fn release(&mut self, k: usize) {
        if self.member[k] {
            self.member[k] = false;
            self.len -= 1;
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.member[k]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Removes and returns the next constraint.
    pub fn pop(&mut self) -> Option<usize> {
        let k = self.choose()?;
        self.release(k);
        Some(k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub constraint: usize,
    pub before: SmallVec<[Interval; 4]>,
    pub after: SmallVec<[Interval; 4]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropagationStats {
    /// DRO applications per constraint.
    pub activations: Vec<u64>,
    pub total_dro_calls: u64,
    /// Number of (application, variable) pairs where a domain shrank.
    pub changed_domain_events: u64,
    /// Size of the active set before the first selection.
    pub initial_active: usize,
    pub budget_exhausted: bool,
    pub trace: Option<Vec<TraceEvent>>,
}

impl PropagationStats {
    fn new(icsp: &Icsp, trace: bool) -> Self {
        PropagationStats {
            activations: vec![0; icsp.constraints().len()],
            trace: trace.then(Vec::new),
            ..Default::default()
        }
    }

    pub fn max_activations(&self) -> u64 {
        self.activations.iter().copied().max().unwrap_or(0)
    }

    /// `constraint -> count` table.
    pub fn render(&self, icsp: &Icsp) -> String {
        let mut out = String::new();
        for (k, n) in self.activations.iter().enumerate() {
            out.push_str(&format!("{:<40} {n}\n", describe(icsp, k)));
        }
        out.push_str(&format!("total {}\n", self.total_dro_calls));
        out
    }

    /// One line per DRO application.
    pub fn render_trace(&self, icsp: &Icsp) -> String {
        let mut out = String::new();
        for e in self.trace.iter().flatten() {
            let fmt_all = |v: &[Interval]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            out.push_str(&format!(
                "{}: {} -> {}\n",
                describe(icsp, e.constraint),
                fmt_all(&e.before),
                fmt_all(&e.after)
            ));
        }
        out
    }
}

/// `kind(args)` with variable names.
pub fn describe(icsp: &Icsp, k: usize) -> String {
    let c = icsp.constraint(k);
    let args: Vec<&str> = c.args.iter().map(|&v| icsp.var(v).name.as_str()).collect();
    format!("{}({})", c.relation.name(), args.join(", "))
}

#[derive(Clone, Debug, PartialEq)]
pub enum PropagationOutcome {
    Fixpoint { domains: Domains, stats: PropagationStats },
    Inconsistent { stats: PropagationStats },
}

impl PropagationOutcome {
    pub fn stats(&self) -> &PropagationStats {
        match self {
            PropagationOutcome::Fixpoint { stats, .. } | PropagationOutcome::Inconsistent { stats } => stats,
        }
    }

    pub fn domains(&self) -> Option<&Domains> {
        match self {
            PropagationOutcome::Fixpoint { domains, .. } => Some(domains),
            PropagationOutcome::Inconsistent { .. } => None,
        }
    }

    pub fn into_domains(self) -> Option<Domains> {
        match self {
            PropagationOutcome::Fixpoint { domains, .. } => Some(domains),
            PropagationOutcome::Inconsistent { .. } => None,
        }
    }

    pub fn is_inconsistent(&self) -> bool {
        matches!(self, PropagationOutcome::Inconsistent { .. })
    }
}

impl fmt::Display for PropagationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropagationOutcome::Fixpoint { .. } => f.write_str("fixpoint"),
            PropagationOutcome::Inconsistent { .. } => f.write_str("inconsistent"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    pub order: Order,
    pub trace: bool,
    pub budget: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            order: Order::DepthPriority,
            trace: false,
            budget: ACTIVATION_BUDGET,
        }
    }
}

impl Options {
    pub fn with_order(order: Order) -> Self {
        Options {
            order,
            ..Options::default()
        }
    }
}

struct Engine<'a> {
    icsp: &'a Icsp,
    budget: u64,
    stats: PropagationStats,
}

impl<'a> Engine<'a> {
    fn new(icsp: &'a Icsp, opts: &Options) -> Self {
        Engine {
            icsp,
            budget: opts.budget,
            stats: PropagationStats::new(icsp, opts.trace),
        }
    }

    /// The propagation loop. Returns false when a domain becomes empty.
    /// Constraints for which `skip` holds are never enqueued.
    fn run(&mut self, d: &mut Domains, active: &mut ActiveSet, skip: impl Fn(usize) -> bool) -> bool {
        while let Some(k) = active.choose() {
            if self.stats.total_dro_calls >= self.budget {
                self.stats.budget_exhausted = true;
                active.release(k);
                return true;
            }
            let c = self.icsp.constraint(k);
            let before: Option<SmallVec<[Interval; 4]>> =
                self.stats.trace.as_ref().map(|_| c.args.iter().map(|&v| d[v]).collect());
            let applied = self.icsp.apply(k, d);
            self.stats.activations[k] += 1;
            self.stats.total_dro_calls += 1;
            self.stats.changed_domain_events += applied.changed.len() as u64;
            if let (Some(trace), Some(before)) = (self.stats.trace.as_mut(), before) {
                let after = c.args.iter().map(|&v| d[v]).collect();
                trace.push(TraceEvent {
                    constraint: k,
                    before,
                    after,
                });
            }
            if applied.empty {
                return false;
            }
            for &v in &applied.changed {
                for &j in self.icsp.constraints_of(v) {
                    if !skip(j) {
                        active.push(j, self.icsp.constraint(j).depth);
                    }
                }
            }
            active.release(k);
        }
        true
    }

    fn finish(self, consistent: bool, d: Domains) -> PropagationOutcome {
        if consistent {
            PropagationOutcome::Fixpoint {
                domains: d,
                stats: self.stats,
            }
        } else {
            PropagationOutcome::Inconsistent { stats: self.stats }
        }
    }

    /// Shrinks `v` to `shrunk` from outside the loop and propagates from the
    /// constraints involving `v`.
    fn extraneous(&mut self, d: &mut Domains, v: VarId, shrunk: Interval, order: Order) -> bool {
        d[v] = shrunk;
        if shrunk.is_empty() {
            return false;
        }
        let mut active = ActiveSet::new(order, self.icsp.constraints().len());
        for &k in self.icsp.constraints_of(v) {
            active.push(k, self.icsp.constraint(k).depth);
        }
        self.stats.initial_active = self.stats.initial_active.max(active.len());
        self.run(d, &mut active, |_| false)
    }

    /// Round-robin over the `LeqZero` cuts until a full round changes nothing.
    fn cut_rounds(&mut self, d: &mut Domains, order: Order) -> bool {
        let leq: Vec<usize> = self.icsp.leq_constraints().collect();
        loop {
            let mut changed = false;
            for &k in &leq {
                if self.stats.budget_exhausted {
                    return true;
                }
                let y = self.icsp.constraint(k).args[0];
                let cut = d[y].intersect(&Interval::NON_POSITIVE);
                if cut != d[y] {
                    changed = true;
                    if !self.extraneous(d, y, cut, order) {
                        return false;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }
}

fn is_leq(icsp: &Icsp, k: usize) -> bool {
    icsp.constraint(k).relation == Relation::LeqZero
}

/// The generic propagation algorithm from `start`.
pub fn gpa(icsp: &Icsp, start: &Domains, init: &Init, opts: &Options) -> PropagationOutcome {
    let mut engine = Engine::new(icsp, opts);
    let mut d = start.clone();
    if d.any_empty() {
        return engine.finish(false, d);
    }
    let mut active = ActiveSet::new(opts.order, icsp.constraints().len());
    match init {
        Init::All => {
            for (k, c) in icsp.constraints().iter().enumerate() {
                active.push(k, c.depth);
            }
        }
        Init::Subset(ks) => {
            for &k in ks {
                active.push(k, icsp.constraint(k).depth);
            }
        }
    }
    engine.stats.initial_active = active.len();
    let ok = engine.run(&mut d, &mut active, |_| false);
    engine.finish(ok, d)
}

/// Constraints other than `LeqZero` whose domains differ from the defaults.
pub fn seed_constraints(icsp: &Icsp, d: &Domains) -> Vec<usize> {
    (0..icsp.constraints().len())
        .filter(|&k| !is_leq(icsp, k) && icsp.is_seed(k, d))
        .collect()
}

fn bottom_up(engine: &mut Engine<'_>, d: &mut Domains) -> bool {
    let icsp = engine.icsp;
    let mut active = ActiveSet::new(Order::DepthPriority, icsp.constraints().len());
    for k in seed_constraints(icsp, d) {
        active.push(k, icsp.constraint(k).depth);
    }
    engine.stats.initial_active = active.len();
    engine.run(d, &mut active, |k| is_leq(icsp, k))
}

/// Propagation with selective initialization: only seed constraints start
/// in the active set, deepest first; the `LeqZero` cuts are then applied as
/// extraneous events.
pub fn psi(icsp: &Icsp, start: &Domains, opts: &Options) -> PropagationOutcome {
    let mut engine = Engine::new(icsp, opts);
    let mut d = start.clone();
    if d.any_empty() {
        return engine.finish(false, d);
    }
    let ok = bottom_up(&mut engine, &mut d);
    let initial = engine.stats.initial_active;
    if !ok {
        return engine.finish(false, d);
    }
    let ok = engine.cut_rounds(&mut d, Order::DepthPriority);
    engine.stats.initial_active = initial;
    engine.finish(ok, d)
}

/// Checks that no DRO changes `d`.
pub fn check_fixpoint(icsp: &Icsp, d: &Domains) -> Result<(), PropagateError> {
    for k in 0..icsp.constraints().len() {
        let mut probe = d.clone();
        if !icsp.apply(k, &mut probe).changed.is_empty() {
            return Err(PropagateError::NotFixpoint(k));
        }
    }
    Ok(())
}

/// Replaces the domain of `changed` by a proper subset and propagates from
/// the constraints that involve it.
pub fn repropagate(
    icsp: &Icsp,
    fixpoint: &Domains,
    changed: VarId,
    shrunk: Interval,
    opts: &Options,
) -> Result<PropagationOutcome, PropagateError> {
    if changed.0 >= fixpoint.len() {
        return Err(PropagateError::UnknownVar(changed.0));
    }
    let current = fixpoint[changed];
    if !shrunk.is_subset(&current) || shrunk == current {
        return Err(PropagateError::NotProperSubset {
            current: current.to_string(),
            shrunk: shrunk.to_string(),
        });
    }
    if cfg!(debug_assertions) {
        check_fixpoint(icsp, fixpoint)?;
    }
    let mut engine = Engine::new(icsp, opts);
    let mut d = fixpoint.clone();
    let ok = engine.extraneous(&mut d, changed, shrunk, opts.order);
    Ok(engine.finish(ok, d))
}

/// Evaluates `t` by translating it and propagating from the seeds.
pub fn eval_by_propagation(t: &Term, env: &IntervalBox) -> Result<Interval, PropagateError> {
    let mut missing = None;
    t.walk_vars(&mut |v| {
        if missing.is_none() && !env.contains_var(v) {
            missing = Some(v.to_string());
        }
    });
    if let Some(v) = missing {
        return Err(crate::error::EvalError::Unbound(v).into());
    }
    let (icsp, root) = translate_term(t, env);
    Ok(match psi(&icsp, &icsp.domains, &Options::default()) {
        PropagationOutcome::Fixpoint { domains, .. } => domains[root],
        PropagationOutcome::Inconsistent { .. } => Interval::EMPTY,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum InequalityOutcome {
    Infeasible,
    AllSolutions(Domains),
    Indeterminate(Domains),
}

/// Solves a translated single inequality in two phases: bottom-up evaluation
/// without the root cut, then the cut `y <= 0` as an extraneous event.
pub fn solve_inequality(
    icsp: &Icsp,
    start: &Domains,
    opts: &Options,
) -> (InequalityOutcome, PropagationStats) {
    let mut engine = Engine::new(icsp, opts);
    let mut d = start.clone();
    if d.any_empty() || !bottom_up(&mut engine, &mut d) {
        return (InequalityOutcome::Infeasible, engine.stats);
    }
    let Some(&y) = icsp.roots.first() else {
        return (InequalityOutcome::AllSolutions(d), engine.stats);
    };
    let Some((a, b)) = d[y].bounds() else {
        return (InequalityOutcome::Infeasible, engine.stats);
    };
    if a > 0.0 {
        return (InequalityOutcome::Infeasible, engine.stats);
    }
    if b <= 0.0 {
        return (InequalityOutcome::AllSolutions(d), engine.stats);
    }
    let cut = d[y].intersect(&Interval::NON_POSITIVE);
    let ok = engine.extraneous(&mut d, y, cut, opts.order);
    let outcome = if ok {
        InequalityOutcome::Indeterminate(d)
    } else {
        InequalityOutcome::Infeasible
    };
    (outcome, engine.stats)
}
