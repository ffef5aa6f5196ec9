//! Branch-and-prune solving of inequality systems.

use std::cmp::Ordering;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{EvalError, SearchError};
use crate::expr::{canonicalize, AtomicFormula, CanonicalSystem, System, Term};
use crate::icsp::{translate_system, Domains, Icsp, VarId};
use crate::interval::{eval_term, Interval, IntervalBox};
use crate::propagate::{psi, Options, PropagationOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    BoxConsistencyFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcMethod {
    Functional,
    Relational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    /// Domains this narrow are not split further.
    pub min_width: f64,
    /// Number of search nodes processed before giving up.
    pub max_boxes: usize,
    pub strategy: Strategy,
    pub bc_tolerance: f64,
    pub bc_method: BcMethod,
    /// Worker threads; 1 processes nodes sequentially.
    pub threads: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            min_width: 1e-3,
            max_boxes: 100_000,
            strategy: Strategy::Greedy,
            bc_tolerance: 1e-8,
            bc_method: BcMethod::Relational,
            threads: 1,
        }
    }
}

impl SolveConfig {
    /// Settings for the feasibility tests of [`lower_bound_minimum`].
    pub fn for_lower_bound(precision: f64) -> Self {
        SolveConfig {
            min_width: precision / 4.0,
            max_boxes: 20_000,
            ..SolveConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.min_width > 0.0) {
            return Err(SearchError::Config("min_width must be positive".into()));
        }
        if !(self.bc_tolerance > 0.0) {
            return Err(SearchError::Config("bc_tolerance must be positive".into()));
        }
        if self.max_boxes == 0 {
            return Err(SearchError::Config("max_boxes must be positive".into()));
        }
        if self.threads == 0 {
            return Err(SearchError::Config("threads must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Infeasible,
    AllSolutions,
    Indeterminate,
}

/// Classifies `bx` by evaluating every left-hand side over it.
pub fn classify(system: &System, bx: &IntervalBox) -> Result<Classification, EvalError> {
    classify_formulas(&system.formulas, bx)
}

fn classify_formulas(formulas: &[AtomicFormula], bx: &IntervalBox) -> Result<Classification, EvalError> {
    if bx.is_empty() {
        return Ok(Classification::Infeasible);
    }
    let mut all = true;
    for f in formulas {
        match eval_term(&f.lhs, bx)?.bounds() {
            None => return Ok(Classification::Infeasible),
            Some((a, _)) if a > 0.0 => return Ok(Classification::Infeasible),
            Some((_, b)) => all &= b <= 0.0,
        }
    }
    Ok(if all {
        Classification::AllSolutions
    } else {
        Classification::Indeterminate
    })
}

/// DRO calls allowed per propagation inside the search. Slowly contracting
/// cycles are cut off here and left to splitting.
pub const NODE_BUDGET: u64 = 50_000;

/// A system together with its canonical form and translated ICSP.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    pub system: System,
    pub canonical: CanonicalSystem,
    pub icsp: Icsp,
    /// Fresh ICSP variables of each original variable.
    pub classes: IndexMap<String, Vec<VarId>>,
}

impl CompiledSystem {
    pub fn new(system: &System) -> Self {
        let canonical = canonicalize(system);
        let icsp = translate_system(&canonical);
        let classes = canonical
            .classes
            .iter()
            .map(|c| {
                let ids = c
                    .members
                    .iter()
                    .map(|m| icsp.var_named(m).expect("every fresh variable is translated"))
                    .collect();
                (c.original.clone(), ids)
            })
            .collect();
        CompiledSystem {
            system: system.clone(),
            canonical,
            icsp,
            classes,
        }
    }

    pub fn initial_box(&self) -> IntervalBox {
        self.system.declarations.clone()
    }

    /// ICSP domains with every fresh variable set from `bx`.
    pub fn domains_for(&self, bx: &IntervalBox) -> Domains {
        let mut d = self.icsp.domains.clone();
        for (orig, ids) in &self.classes {
            let dom = bx.get(orig).unwrap_or(Interval::ENTIRE);
            for &v in ids {
                d[v] = dom;
            }
        }
        d
    }

    /// User box read back from ICSP domains: each variable gets the common
    /// intersection of its class.
    pub fn read_box(&self, bx: &IntervalBox, d: &Domains) -> IntervalBox {
        bx.iter()
            .map(|(name, dom)| {
                let narrowed = match self.classes.get(name) {
                    Some(ids) => ids.iter().fold(dom, |acc, &v| acc.intersect(&d[v])),
                    None => dom,
                };
                (name, narrowed)
            })
            .collect()
    }

    /// Propagates the conjunction over `bx`, stopping after [`NODE_BUDGET`]
    /// DRO calls. `None` when it is inconsistent.
    pub fn propagate(&self, bx: &IntervalBox) -> Option<(IntervalBox, u64)> {
        if bx.is_empty() {
            return None;
        }
        let opts = Options {
            budget: NODE_BUDGET,
            ..Options::default()
        };
        match psi(&self.icsp, &self.domains_for(bx), &opts) {
            PropagationOutcome::Fixpoint { domains, stats } => {
                let out = self.read_box(bx, &domains);
                (!out.is_empty()).then_some((out, stats.total_dro_calls))
            }
            PropagationOutcome::Inconsistent { .. } => None,
        }
    }

    pub fn classify(&self, bx: &IntervalBox) -> Result<Classification, EvalError> {
        classify(&self.system, bx)
    }

    fn proven_empty(&self, bx: &IntervalBox, method: BcMethod) -> Result<bool, EvalError> {
        Ok(match method {
            BcMethod::Functional => self.classify(bx)? == Classification::Infeasible,
            BcMethod::Relational => self.propagate(bx).is_none(),
        })
    }
}

/// Splits the widest variable wider than `min_width` (ties: declaration
/// order) among `splittable` (all variables when `None`).
pub fn split_widest(
    bx: &IntervalBox,
    splittable: Option<&[&str]>,
    min_width: f64,
) -> Result<(String, IntervalBox, IntervalBox), SearchError> {
    let mut best: Option<(&str, f64, (Interval, Interval))> = None;
    for (name, dom) in bx.iter() {
        if splittable.is_some_and(|s| !s.contains(&name)) {
            continue;
        }
        let w = dom.width();
        if !(w > min_width) || best.as_ref().is_some_and(|(_, bw, _)| w <= *bw) {
            continue;
        }
        if let Ok(halves) = dom.split() {
            best = Some((name, w, halves));
        }
    }
    let (name, _, (left, right)) = best.ok_or(SearchError::NothingToSplit)?;
    let mut a = bx.clone();
    let mut b = bx.clone();
    a.insert(name, left);
    b.insert(name, right);
    Ok((name.to_string(), a, b))
}

fn with_var(bx: &IntervalBox, var: &str, dom: Interval) -> IntervalBox {
    let mut out = bx.clone();
    out.insert(var, dom);
    out
}

/// Half of `slice` adjacent to the outer boundary on `side`.
fn halve(slice: Interval, side: Side) -> Option<Interval> {
    let (l, r) = slice.split().ok()?;
    Some(match side {
        Side::Left => l,
        Side::Right => r,
    })
}

/// Removes boundary slices of `var`'s domain on `side` that are proven to
/// contain no solution. Probing starts at half the domain and halves on
/// failure; it restarts after every removal and stops once the undecided
/// slice is narrower than the tolerance.
pub fn narrow_bound(
    compiled: &CompiledSystem,
    bx: &IntervalBox,
    var: &str,
    side: Side,
    cfg: &SolveConfig,
) -> Result<Interval, SearchError> {
    let mut dom = bx.get(var).ok_or_else(|| EvalError::Unbound(var.to_string()))?;
    let empty = |d: Interval| compiled.proven_empty(&with_var(bx, var, d), cfg.bc_method);
    'restart: loop {
        if dom.is_empty() || empty(dom)? {
            return Ok(Interval::EMPTY);
        }
        let mut probe = halve(dom, side);
        while let Some(slice) = probe {
            if empty(slice)? {
                let (lo, hi) = dom.bounds().expect("non-empty");
                dom = match side {
                    Side::Left => Interval::closed(slice.hi(), hi),
                    Side::Right => Interval::closed(lo, slice.lo()),
                };
                continue 'restart;
            }
            if slice.width() < cfg.bc_tolerance {
                break;
            }
            probe = halve(slice, side);
        }
        return Ok(dom);
    }
}

fn bound_moved(old: f64, new: f64, tol: f64) -> bool {
    if old == new {
        return false;
    }
    if old.is_infinite() || new.is_infinite() {
        return true;
    }
    (old - new).abs() > tol
}

/// Narrows both bounds of every variable until no bound moves by more than
/// the tolerance.
pub fn box_consistency_pass(
    compiled: &CompiledSystem,
    bx: &IntervalBox,
    cfg: &SolveConfig,
) -> Result<IntervalBox, SearchError> {
    let mut current = bx.clone();
    let names: Vec<String> = current.names().map(str::to_string).collect();
    for _round in 0..1000 {
        let mut moved = false;
        for name in &names {
            for side in [Side::Left, Side::Right] {
                let old = current.get(name).expect("declared");
                let new = narrow_bound(compiled, &current, name, side, cfg)?;
                if new.is_empty() {
                    current.insert(name.as_str(), Interval::EMPTY);
                    return Ok(current);
                }
                moved |= bound_moved(old.lo(), new.lo(), cfg.bc_tolerance)
                    || bound_moved(old.hi(), new.hi(), cfg.bc_tolerance);
                current.insert(name.as_str(), new);
            }
        }
        if !moved {
            break;
        }
    }
    Ok(current)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub splits: usize,
    pub dro_calls: u64,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cover {
    pub proven: Vec<IntervalBox>,
    pub indeterminate: Vec<IntervalBox>,
    pub infeasible_count: usize,
    pub stats: SolveStats,
}

impl Cover {
    pub fn proven_volume(&self) -> f64 {
        self.proven.iter().map(IntervalBox::volume).sum()
    }

    pub fn indeterminate_volume(&self) -> f64 {
        self.indeterminate.iter().map(IntervalBox::volume).sum()
    }

    pub fn covers(&self, point: &[(&str, f64)]) -> bool {
        self.proven
            .iter()
            .chain(&self.indeterminate)
            .any(|b| b.contains_point(point))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "proven": self.proven.iter().map(box_json).collect::<Vec<_>>(),
            "indeterminate": self.indeterminate.iter().map(box_json).collect::<Vec<_>>(),
            "infeasible_count": self.infeasible_count,
            "stats": serde_json::to_value(&self.stats).expect("plain struct"),
        })
    }
}

fn bound_json(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(x)
    }
}

/// `{"var": [lb, rb], ...}` with infinite bounds as the strings `"inf"` and
/// `"-inf"`.
pub fn box_json(bx: &IntervalBox) -> Value {
    let mut m = Map::new();
    for (name, d) in bx.iter() {
        let v = match d.bounds() {
            Some((lo, hi)) => json!([bound_json(lo), bound_json(hi)]),
            None => json!("empty"),
        };
        m.insert(name.to_string(), v);
    }
    Value::Object(m)
}

fn cmp_boxes(a: &IntervalBox, b: &IntervalBox) -> Ordering {
    for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
        let o = x.lo().total_cmp(&y.lo()).then(x.hi().total_cmp(&y.hi()));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

enum Node {
    Infeasible,
    Proven(IntervalBox),
    Leaf(IntervalBox),
    Split(IntervalBox, IntervalBox),
}

fn process(compiled: &CompiledSystem, bx: IntervalBox, cfg: &SolveConfig) -> Result<(Node, u64), SearchError> {
    let Some((mut narrowed, calls)) = compiled.propagate(&bx) else {
        return Ok((Node::Infeasible, 0));
    };
    let mut class = compiled.classify(&narrowed)?;
    if class == Classification::Indeterminate && cfg.strategy == Strategy::BoxConsistencyFirst {
        narrowed = box_consistency_pass(compiled, &narrowed, cfg)?;
        class = compiled.classify(&narrowed)?;
    }
    Ok((
        match class {
            Classification::Infeasible => Node::Infeasible,
            Classification::AllSolutions => Node::Proven(narrowed),
            Classification::Indeterminate => match split_widest(&narrowed, None, cfg.min_width) {
                Ok((_, a, b)) => Node::Split(a, b),
                Err(_) => Node::Leaf(narrowed),
            },
        },
        calls,
    ))
}

/// Boxes taken from the search stack per step.
const BATCH: usize = 32;

/// Computes a cover of the solutions of `system` inside its declared box.
/// Boxes in the cover are listed in lexicographic order of their bounds.
pub fn solve_system(system: &System, cfg: &SolveConfig) -> Result<Cover, SearchError> {
    cfg.validate()?;
    let compiled = CompiledSystem::new(system);
    let root = compiled.initial_box();
    let mut cover = Cover::default();
    let mut stack = vec![root];
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| SearchError::Config(e.to_string()))?,
        )
    } else {
        None
    };
    while !stack.is_empty() {
        let room = cfg.max_boxes - cover.stats.nodes;
        if room == 0 {
            cover.stats.budget_exhausted = true;
            cover.indeterminate.append(&mut stack);
            break;
        }
        // same batches for every thread count, so the node order is fixed
        let batch_len = BATCH.min(room).min(stack.len());
        let batch: Vec<IntervalBox> = stack.split_off(stack.len() - batch_len);
        let results: Vec<Result<(Node, u64), SearchError>> = match &pool {
            Some(p) => p.install(|| batch.into_par_iter().map(|b| process(&compiled, b, cfg)).collect()),
            None => batch.into_iter().map(|b| process(&compiled, b, cfg)).collect(),
        };
        for r in results {
            let (node, calls) = r?;
            cover.stats.nodes += 1;
            cover.stats.dro_calls += calls;
            match node {
                Node::Infeasible => cover.infeasible_count += 1,
                Node::Proven(b) => cover.proven.push(b),
                Node::Leaf(b) => cover.indeterminate.push(b),
                Node::Split(a, b) => {
                    cover.stats.splits += 1;
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
    }
    cover.proven.sort_by(cmp_boxes);
    cover.indeterminate.sort_by(cmp_boxes);
    Ok(cover)
}

/// True when search proves that `compiled` has no solution in `bx`. Stops at
/// the first box that cannot be pruned.
fn refute(compiled: &CompiledSystem, bx: IntervalBox, cfg: &SolveConfig) -> Result<bool, SearchError> {
    let mut stack = vec![bx];
    let mut nodes = 0;
    while let Some(b) = stack.pop() {
        nodes += 1;
        if nodes > cfg.max_boxes {
            return Ok(false);
        }
        match process(compiled, b, cfg)?.0 {
            Node::Infeasible => {}
            Node::Proven(_) | Node::Leaf(_) => return Ok(false),
            Node::Split(a, b) => {
                stack.push(b);
                stack.push(a);
            }
        }
    }
    Ok(true)
}

/// A lower bound on the minimum of `objective` over the solutions of
/// `constraints`, found by bisection on a threshold `c`: whenever
/// `objective - c <= 0` is proven infeasible together with the constraints,
/// `c` is a valid lower bound. Returns `-inf` when the objective is
/// unbounded below over the box, and `inf` when the constraints are
/// proven infeasible.
pub fn lower_bound_minimum(
    objective: &Term,
    constraints: &System,
    precision: f64,
    cfg: &SolveConfig,
) -> Result<f64, SearchError> {
    cfg.validate()?;
    if !(precision > 0.0) {
        return Err(SearchError::Config("precision must be positive".into()));
    }
    let mut base = constraints.clone();
    base.formulas.insert(0, AtomicFormula::new(objective.clone()));
    base.declare_missing();
    base.formulas.remove(0);
    let bx = base.declarations.clone();
    let range = eval_term(objective, &bx)?;
    let Some((mut lo, mut hi)) = range.bounds() else {
        return Ok(f64::INFINITY);
    };
    if lo == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let infeasible_below = |c: f64| -> Result<bool, SearchError> {
        let mut s = base.clone();
        s.formulas
            .push(AtomicFormula::new(Term::sub(objective.clone(), constant_term(c))));
        let compiled = CompiledSystem::new(&s);
        refute(&compiled, bx.clone(), cfg)
    };
    if refute(&CompiledSystem::new(&base), bx.clone(), cfg)? {
        return Ok(f64::INFINITY);
    }
    if hi == f64::INFINITY {
        let mut step = lo.abs().max(1.0);
        loop {
            let c = lo + step;
            if !c.is_finite() {
                return Ok(lo);
            }
            if infeasible_below(c)? {
                lo = c;
                step *= 2.0;
            } else {
                hi = c;
                break;
            }
        }
    }
    while hi - lo > precision {
        let c = 0.5 * lo + 0.5 * hi;
        if c <= lo || c >= hi {
            break;
        }
        if infeasible_below(c)? {
            lo = c;
        } else {
            hi = c;
        }
    }
    Ok(lo)
}

/// A term whose value is exactly `c`.
fn constant_term(c: f64) -> Term {
    if c < 0.0 {
        Term::neg(Term::constant(-c))
    } else {
        Term::constant(c)
    }
}
