//! Interval constraint satisfaction problems over primitive constraints.

use std::fmt;
use std::ops::{Index, IndexMut};

use indexmap::IndexMap;
use smallvec::SmallVec;

use crate::expr::{AtomicFormula, BinaryOp, CanonicalSystem, Term, UnaryOp};
use crate::interval::{sin_preimage, Interval, IntervalBox, Pieces};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    User,
    Internal,
    Constant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub kind: VarKind,
}

/// Relation of a primitive constraint. Argument order:
/// `Sum(x, y, z)`: x + y = z, `Prod(x, y, z)`: xy = z, `Sq(x, y)`: y = x²,
/// `Sin(x, y)`: y = sin x, `Neg(x, y)`: y = -x, `LeqZero(y)`: y ≤ 0,
/// `AllEq(v..)`: all equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Sum,
    Prod,
    Sq,
    Sin,
    Neg,
    LeqZero,
    AllEq,
}

impl Relation {
    pub const ALL: [Relation; 7] = [
        Relation::Sum,
        Relation::Prod,
        Relation::Sq,
        Relation::Sin,
        Relation::Neg,
        Relation::LeqZero,
        Relation::AllEq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Sum => "sum",
            Relation::Prod => "prod",
            Relation::Sq => "sq",
            Relation::Sin => "sin",
            Relation::Neg => "neg",
            Relation::LeqZero => "leqzero",
            Relation::AllEq => "alleq",
        }
    }

    /// Fixed arity, `None` for the variadic `AllEq`.
    pub fn arity(self) -> Option<usize> {
        match self {
            Relation::Sum | Relation::Prod => Some(3),
            Relation::Sq | Relation::Sin | Relation::Neg => Some(2),
            Relation::LeqZero => Some(1),
            Relation::AllEq => None,
        }
    }
}

/// Depth given to equality constraints so that they are scheduled first.
pub const ALLEQ_DEPTH: u32 = u32::MAX;

pub type Args = SmallVec<[VarId; 3]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub relation: Relation,
    pub args: Args,
    /// Distance from the root of the generating tree.
    pub depth: u32,
}

impl Constraint {
    pub fn new(relation: Relation, args: &[VarId], depth: u32) -> Self {
        debug_assert!(relation.arity().is_none_or(|n| n == args.len()));
        Constraint {
            relation,
            args: args.iter().copied().collect(),
            depth,
        }
    }

    pub fn involves(&self, v: VarId) -> bool {
        self.args.contains(&v)
    }
}

/// Current domains of all variables of an [`Icsp`], indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Domains(Vec<Interval>);

impl Domains {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if some variable has an empty domain.
    pub fn any_empty(&self) -> bool {
        self.0.iter().any(Interval::is_empty)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Interval)> + '_ {
        self.0.iter().enumerate().map(|(i, d)| (VarId(i), *d))
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.0
    }

    /// Componentwise inclusion.
    pub fn is_subset(&self, other: &Domains) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset(b))
    }
}

impl Index<VarId> for Domains {
    type Output = Interval;
    fn index(&self, v: VarId) -> &Interval {
        &self.0[v.0]
    }
}

impl IndexMut<VarId> for Domains {
    fn index_mut(&mut self, v: VarId) -> &mut Interval {
        &mut self.0[v.0]
    }
}

impl FromIterator<Interval> for Domains {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        Domains(iter.into_iter().collect())
    }
}

/// Effect of one DRO application.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Applied {
    /// Variables whose domain shrank, in argument order.
    pub changed: SmallVec<[VarId; 4]>,
    /// Some argument domain became empty.
    pub empty: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Icsp {
    vars: Vec<VarInfo>,
    names: IndexMap<String, VarId>,
    constraints: Vec<Constraint>,
    provenance: Vec<String>,
    /// Constraint indices per variable.
    watch: Vec<Vec<usize>>,
    /// Initial domains.
    pub domains: Domains,
    /// Label of each translated formula's left-hand side.
    pub roots: Vec<VarId>,
}

impl Default for Icsp {
    fn default() -> Self {
        Icsp::new()
    }
}

impl Icsp {
    pub fn new() -> Self {
        Icsp {
            vars: Vec::new(),
            names: IndexMap::new(),
            constraints: Vec::new(),
            provenance: Vec::new(),
            watch: Vec::new(),
            domains: Domains::default(),
            roots: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, v: VarId) -> &VarInfo {
        &self.vars[v.0]
    }

    pub fn var_named(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &VarInfo)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i), v))
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, k: usize) -> &Constraint {
        &self.constraints[k]
    }

    /// Rendered origin of constraint `k`.
    pub fn provenance(&self, k: usize) -> &str {
        &self.provenance[k]
    }

    /// Indices of the constraints whose argument list contains `v`.
    pub fn constraints_of(&self, v: VarId) -> &[usize] {
        &self.watch[v.0]
    }

    /// Indices of the `LeqZero` constraints.
    pub fn leq_constraints(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.constraints.len()).filter(|&k| self.constraints[k].relation == Relation::LeqZero)
    }

    /// Adds a variable, or returns the existing one of that name.
    pub fn add_var(&mut self, name: &str, kind: VarKind, domain: Interval) -> VarId {
        if let Some(v) = self.var_named(name) {
            return v;
        }
        let v = VarId(self.vars.len());
        self.vars.push(VarInfo {
            name: name.to_string(),
            kind,
        });
        self.names.insert(name.to_string(), v);
        self.watch.push(Vec::new());
        self.domains.0.push(domain);
        v
    }

    pub fn add_constraint(&mut self, c: Constraint, origin: impl Into<String>) -> usize {
        let k = self.constraints.len();
        for &v in &c.args {
            if !self.watch[v.0].contains(&k) {
                self.watch[v.0].push(k);
            }
        }
        self.constraints.push(c);
        self.provenance.push(origin.into());
        k
    }

    fn fresh(&mut self, kind: VarKind, domain: Interval) -> VarId {
        let (prefix, count) = match kind {
            VarKind::Constant => ("_c", self.vars.iter().filter(|v| v.kind == VarKind::Constant).count()),
            _ => ("_t", self.vars.iter().filter(|v| v.kind == VarKind::Internal).count()),
        };
        let name = format!("{prefix}{}", count + 1);
        self.add_var(&name, kind, domain)
    }

    /// Labels `t` and emits one constraint per function-symbol node; `t` sits
    /// at `depth`.
    fn translate_node(&mut self, t: &Term, depth: u32, user: &IntervalBox) -> VarId {
        match t {
            Term::Var(name) => {
                let d = user.get(name).unwrap_or(Interval::ENTIRE);
                self.add_var(name, VarKind::User, d)
            }
            Term::Const(c) => self.fresh(VarKind::Constant, c.enclosure()),
            Term::Unary(op, a) => {
                let label = self.fresh(VarKind::Internal, Interval::ENTIRE);
                let a = self.translate_node(a, depth + 1, user);
                let relation = match op {
                    UnaryOp::Neg => Relation::Neg,
                    UnaryOp::Sq => Relation::Sq,
                    UnaryOp::Sin => Relation::Sin,
                };
                self.add_constraint(Constraint::new(relation, &[a, label], depth), t.to_string());
                label
            }
            Term::Binary(op, a, b) => {
                let label = self.fresh(VarKind::Internal, Interval::ENTIRE);
                let a = self.translate_node(a, depth + 1, user);
                let b = self.translate_node(b, depth + 1, user);
                let c = match op {
                    BinaryOp::Add => Constraint::new(Relation::Sum, &[a, b, label], depth),
                    BinaryOp::Sub => Constraint::new(Relation::Sum, &[label, b, a], depth),
                    BinaryOp::Mul => Constraint::new(Relation::Prod, &[a, b, label], depth),
                    BinaryOp::Div => Constraint::new(Relation::Prod, &[label, b, a], depth),
                };
                self.add_constraint(c, t.to_string());
                label
            }
        }
    }

    /// Adds the constraints of `lhs <= 0`, returning the label of `lhs`.
    pub fn add_formula(&mut self, f: &AtomicFormula, user: &IntervalBox) -> VarId {
        let root = self.translate_node(&f.lhs, 1, user);
        self.add_constraint(Constraint::new(Relation::LeqZero, &[root], 0), f.to_string());
        self.roots.push(root);
        root
    }

    /// Applies the DRO of constraint `k` to `d` until it is stable.
    pub fn apply(&self, k: usize, d: &mut Domains) -> Applied {
        apply_dro(&self.constraints[k], d)
    }

    /// Named view of the domains.
    pub fn to_box(&self, d: &Domains) -> IntervalBox {
        self.vars.iter().zip(d.as_slice()).map(|(v, i)| (v.name.as_str(), *i)).collect()
    }

    /// Domains of the user variables only.
    pub fn user_box(&self, d: &Domains) -> IntervalBox {
        self.vars
            .iter()
            .zip(d.as_slice())
            .filter(|(v, _)| v.kind == VarKind::User)
            .map(|(v, i)| (v.name.as_str(), *i))
            .collect()
    }

    pub fn is_seed(&self, k: usize, d: &Domains) -> bool {
        is_seed(&self.constraints[k], d)
    }

    /// One constraint per line as `kind(args) @depth`, then one domain per
    /// line as `name in [lb,rb]`.
    pub fn render_debug(&self, d: &Domains) -> String {
        let mut out = String::new();
        for c in &self.constraints {
            let args: Vec<&str> = c.args.iter().map(|v| self.vars[v.0].name.as_str()).collect();
            let depth = if c.depth == ALLEQ_DEPTH {
                "inf".to_string()
            } else {
                c.depth.to_string()
            };
            out.push_str(&format!("{}({}) @{depth}\n", c.relation.name(), args.join(", ")));
        }
        for (v, info) in self.vars.iter().enumerate() {
            out.push_str(&format!("{} in {}\n", info.name, d.0[v]));
        }
        out
    }
}

/// ICSP of a single formula. Variables missing from `domains` are unbounded.
pub fn translate(f: &AtomicFormula, domains: &IntervalBox) -> Icsp {
    let mut icsp = Icsp::new();
    icsp.add_formula(f, domains);
    icsp
}

/// ICSP of a bare term, without the final `LeqZero`; the root sits at depth
/// 0. Returns the root label, which is the variable itself for a leaf.
pub fn translate_term(t: &Term, domains: &IntervalBox) -> (Icsp, VarId) {
    let mut icsp = Icsp::new();
    let root = icsp.translate_node(t, 0, domains);
    (icsp, root)
}

/// Union of the per-formula translations plus one `AllEq` per class with at
/// least two members.
pub fn translate_system(cs: &CanonicalSystem) -> Icsp {
    let mut icsp = Icsp::new();
    for f in &cs.formulas {
        icsp.add_formula(f, &cs.domains);
    }
    for class in &cs.classes {
        if class.members.len() < 2 {
            continue;
        }
        let args: Vec<VarId> = class
            .members
            .iter()
            .map(|m| {
                let d = cs.domains.get(m).unwrap_or(Interval::ENTIRE);
                icsp.add_var(m, VarKind::User, d)
            })
            .collect();
        icsp.add_constraint(
            Constraint::new(Relation::AllEq, &args, ALLEQ_DEPTH),
            format!("{} = {}", class.original, class.members.join(" = ")),
        );
    }
    icsp
}

/// The simultaneous projections of `relation` on argument domains `vals`.
pub fn project(relation: Relation, vals: &[Interval]) -> SmallVec<[Interval; 4]> {
    let mut out: SmallVec<[Interval; 4]> = SmallVec::new();
    match relation {
        Relation::Sum => {
            let (x, y, z) = (vals[0], vals[1], vals[2]);
            out.push(x.intersect(&z.sub(&y)));
            out.push(y.intersect(&z.sub(&x)));
            out.push(z.intersect(&x.add(&y)));
        }
        Relation::Prod => {
            let (x, y, z) = (vals[0], vals[1], vals[2]);
            out.push(Pieces::quotient(&z, &y).restrict(&x));
            out.push(Pieces::quotient(&z, &x).restrict(&y));
            out.push(z.intersect(&x.mul(&y)));
        }
        Relation::Sq => {
            let (x, y) = (vals[0], vals[1]);
            let y2 = y.intersect(&x.sq());
            out.push(Pieces::sqrt(&y2).restrict(&x));
            out.push(y2);
        }
        Relation::Sin => {
            let (x, y) = (vals[0], vals[1]);
            let y2 = y.intersect(&x.sin());
            out.push(sin_preimage(&x, &y2));
            out.push(y2);
        }
        Relation::Neg => {
            let (x, y) = (vals[0], vals[1]);
            out.push(x.intersect(&y.neg()));
            out.push(y.intersect(&x.neg()));
        }
        Relation::LeqZero => out.push(vals[0].intersect(&Interval::NON_POSITIVE)),
        Relation::AllEq => {
            let common = vals.iter().fold(Interval::ENTIRE, |acc, v| acc.intersect(v));
            out.extend(vals.iter().map(|_| common));
        }
    }
    out
}

/// Applies the DRO of `c` to `d`, repeating the simultaneous projection
/// until nothing changes. Repeated arguments are combined by intersection.
pub fn apply_dro(c: &Constraint, d: &mut Domains) -> Applied {
    let mut applied = Applied::default();
    loop {
        let vals: SmallVec<[Interval; 4]> = c.args.iter().map(|&v| d[v]).collect();
        let proj = project(c.relation, &vals);
        let mut any = false;
        for (&v, p) in c.args.iter().zip(proj) {
            let new = d[v].intersect(&p);
            if new != d[v] {
                d[v] = new;
                any = true;
                if !applied.changed.contains(&v) {
                    applied.changed.push(v);
                }
                if new.is_empty() {
                    applied.empty = true;
                }
            }
        }
        if !any || applied.empty {
            return applied;
        }
    }
}

/// Domains produced by the DRO of `relation` from all-unbounded arguments.
pub fn default_domains(relation: Relation, arity: usize) -> SmallVec<[Interval; 4]> {
    let args: Vec<VarId> = (0..arity).map(VarId).collect();
    let c = Constraint {
        relation,
        args: args.into_iter().collect(),
        depth: 0,
    };
    let mut d: Domains = (0..arity).map(|_| Interval::ENTIRE).collect();
    apply_dro(&c, &mut d);
    d.0.into_iter().collect()
}

/// Default domain of argument position `i`, without running the DRO.
fn default_at(relation: Relation, i: usize) -> Interval {
    match (relation, i) {
        (Relation::Sin, 1) => Interval::UNIT,
        (Relation::Sq, 1) => Interval::NON_NEGATIVE,
        (Relation::LeqZero, _) => Interval::NON_POSITIVE,
        _ => Interval::ENTIRE,
    }
}

/// True iff some argument's domain differs from its default domain.
pub fn is_seed(c: &Constraint, d: &Domains) -> bool {
    c.args
        .iter()
        .enumerate()
        .any(|(i, &v)| d[v] != default_at(c.relation, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{canonicalize, parse_system};

    fn iv(a: f64, b: f64) -> Interval {
        Interval::closed(a, b)
    }

    fn run(relation: Relation, vals: &[Interval]) -> Domains {
        let args: Vec<VarId> = (0..vals.len()).map(VarId).collect();
        let mut d: Domains = vals.iter().copied().collect();
        apply_dro(&Constraint::new(relation, &args, 0), &mut d);
        d
    }

    #[test]
    fn default_domains_match_shortcut() {
        for r in Relation::ALL {
            let n = r.arity().unwrap_or(3);
            let dd = default_domains(r, n);
            for (i, d) in dd.iter().enumerate() {
                assert_eq!(*d, default_at(r, i), "{r:?} arg {i}");
            }
        }
        assert_eq!(default_domains(Relation::Sin, 2).as_slice(), &[Interval::ENTIRE, Interval::UNIT]);
        assert_eq!(
            default_domains(Relation::Sq, 2).as_slice(),
            &[Interval::ENTIRE, Interval::NON_NEGATIVE]
        );
    }

    #[test]
    fn prod_detects_inconsistency() {
        let d = run(Relation::Prod, &[iv(1.0, 2.0), iv(1.0, 2.0), iv(6.0, 8.0)]);
        assert!(d.any_empty());
    }

    #[test]
    fn sum_narrows_all_three() {
        let d = run(Relation::Sum, &[iv(0.0, 10.0), iv(0.0, 10.0), iv(0.0, 1.0)]);
        assert_eq!(d.as_slice(), &[iv(0.0, 1.0), iv(0.0, 1.0), iv(0.0, 1.0)]);
    }

    #[test]
    fn leq_zero_cuts() {
        let d = run(Relation::LeqZero, &[iv(-1.0, 3.0)]);
        assert_eq!(d.as_slice(), &[iv(-1.0, 0.0)]);
    }

    #[test]
    fn sq_uses_both_branches() {
        let d = run(Relation::Sq, &[iv(-3.0, 0.5), iv(1.0, 4.0)]);
        assert_eq!(d.as_slice(), &[iv(-2.0, -1.0), iv(1.0, 4.0)]);
        let d = run(Relation::Sq, &[iv(-2.0, 2.0), iv(0.0, 1.0)]);
        assert_eq!(d[VarId(0)], iv(-1.0, 1.0));
    }

    #[test]
    fn prod_drops_the_gap_inside_x() {
        // z / y = (-inf, -1] ∪ [1, inf), x = [-0.5, 3]
        let d = run(Relation::Prod, &[iv(-0.5, 3.0), iv(-1.0, 1.0), iv(1.0, 2.0)]);
        assert_eq!(d[VarId(0)], iv(1.0, 3.0));
    }

    #[test]
    fn sin_reverse_projection() {
        let d = run(Relation::Sin, &[iv(0.0, 3.0), iv(0.9, 1.0)]);
        let x = d[VarId(0)];
        assert!(x.lo() > 1.1 && x.lo() <= 0.9f64.asin());
        assert!(x.hi() < 2.1 && x.hi() >= std::f64::consts::PI - 0.9f64.asin());
    }

    #[test]
    fn alleq_intersects() {
        let d = run(Relation::AllEq, &[iv(0.0, 3.0), iv(1.0, 5.0), iv(-1.0, 2.0)]);
        assert!(d.as_slice().iter().all(|x| *x == iv(1.0, 2.0)));
    }

    #[test]
    fn aliased_arguments_are_intersected() {
        // x + x = z with z = [0, 2]
        let mut d: Domains = [iv(-5.0, 5.0), iv(0.0, 2.0)].into_iter().collect();
        apply_dro(&Constraint::new(Relation::Sum, &[VarId(0), VarId(0), VarId(1)], 0), &mut d);
        assert!(d[VarId(0)].contains(0.0) && d[VarId(0)].contains(1.0));
        assert_eq!(d[VarId(1)], iv(0.0, 2.0));
        // y * y = z with y = [-3, 3], z = [-1, 4]: z >= -9 only
        let mut d: Domains = [iv(-3.0, 3.0), iv(-1.0, 4.0)].into_iter().collect();
        apply_dro(&Constraint::new(Relation::Prod, &[VarId(0), VarId(0), VarId(1)], 0), &mut d);
        assert_eq!(d[VarId(1)], iv(-1.0, 4.0));
    }

    #[test]
    fn eq3_translation() {
        let s = parse_system("x^2 + x*y - y^2 <= 0;").unwrap();
        let icsp = translate(&s.formulas[0], &s.declarations);
        let kinds: Vec<_> = icsp.constraints().iter().map(|c| (c.relation, c.depth)).collect();
        assert_eq!(
            kinds,
            vec![
                (Relation::Sq, 2),
                (Relation::Prod, 3),
                (Relation::Sq, 3),
                (Relation::Sum, 2),
                (Relation::Sum, 1),
                (Relation::LeqZero, 0),
            ]
        );
        let render = icsp.render_debug(&icsp.domains);
        assert!(render.contains("sum(_t3, _t5, _t4) @2"), "{render}");
        assert!(render.contains("leqzero(_t1) @0"));
    }

    #[test]
    fn leaf_formula_is_one_constraint() {
        let s = parse_system("x <= 0;").unwrap();
        let icsp = translate(&s.formulas[0], &s.declarations);
        assert_eq!(icsp.constraints().len(), 1);
        assert_eq!(icsp.constraint(0).relation, Relation::LeqZero);
    }

    #[test]
    fn constants_get_tight_domains() {
        let s = parse_system("x - 0.1 <= 0;").unwrap();
        let icsp = translate(&s.formulas[0], &s.declarations);
        let c = icsp.var_named("_c1").unwrap();
        assert_eq!(icsp.var(c).kind, VarKind::Constant);
        assert_eq!(icsp.domains[c], iv(0.1f64.next_down(), 0.1));
    }

    #[test]
    fn system_translation_adds_alleq() {
        let s = parse_system("x^2 + x*y - y^2 <= 0;").unwrap();
        let icsp = translate_system(&canonicalize(&s));
        let alleq: Vec<_> = icsp
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::AllEq)
            .collect();
        assert_eq!(alleq.len(), 2);
        assert!(alleq.iter().all(|c| c.depth == ALLEQ_DEPTH && c.args.len() == 2));

        let s = parse_system("x + y <= 0; z <= 0;").unwrap();
        let icsp = translate_system(&canonicalize(&s));
        assert!(icsp.constraints().iter().all(|c| c.relation != Relation::AllEq));

        let s = parse_system("x <= 1; 0 - x <= 0;").unwrap();
        let icsp = translate_system(&canonicalize(&s));
        let last = icsp.constraints().last().unwrap();
        assert_eq!(last.relation, Relation::AllEq);
        assert_eq!(icsp.var(last.args[0]).name, "x#1");
        assert_eq!(icsp.var(last.args[1]).name, "x#2");
    }

    #[test]
    fn seeds_of_the_sine_sum() {
        let s = parse_system("sin(x1) + sin(x2) <= 0;").unwrap();
        let icsp = translate(&s.formulas[0], &s.declarations);
        let d = icsp.domains.clone();
        let sum = icsp.constraints().iter().position(|c| c.relation == Relation::Sum).unwrap();
        let sins: Vec<usize> = (0..icsp.constraints().len())
            .filter(|&k| icsp.constraint(k).relation == Relation::Sin)
            .collect();
        assert!(!icsp.is_seed(sum, &d));
        assert!(sins.iter().all(|&k| icsp.is_seed(k, &d)));
        let mut d2 = d.clone();
        for &k in &sins {
            d2[icsp.constraint(k).args[1]] = Interval::UNIT;
        }
        assert!(icsp.is_seed(sum, &d2));
        assert!(sins.iter().all(|&k| !icsp.is_seed(k, &d2)));
    }
}
