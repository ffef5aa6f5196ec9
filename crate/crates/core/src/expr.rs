//! Terms, inequalities and the single-occurrence canonical form.

mod parse;

use std::fmt;

use indexmap::IndexMap;
use num::{BigInt, BigRational};

use crate::interval::{Interval, IntervalBox};

pub use parse::{parse_system, parse_term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sq,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub(crate) fn inverse(self) -> BinaryOp {
        match self {
            BinaryOp::Add => BinaryOp::Sub,
            BinaryOp::Sub => BinaryOp::Add,
            BinaryOp::Mul => BinaryOp::Div,
            BinaryOp::Div => BinaryOp::Mul,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

/// A decimal literal together with the tightest interval enclosing it.
#[derive(Clone, Debug, PartialEq)]
pub struct Constant {
    literal: String,
    enclosure: Interval,
}

impl Constant {
    /// Parses an unsigned decimal literal such as `12`, `0.5` or `3e-4`.
    pub fn parse(literal: &str) -> Option<Self> {
        let enclosure = decimal_enclosure(literal)?;
        Some(Constant {
            literal: literal.to_string(),
            enclosure,
        })
    }

    /// A constant for a finite, non-negative double, written exactly.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite() && x >= 0.0, "constants are finite and unsigned");
        Constant {
            literal: exact_decimal(x),
            enclosure: Interval::point(x),
        }
    }

    pub fn literal(&self) -> &str {
        &self.literal
    }

    pub fn enclosure(&self) -> Interval {
        self.enclosure
    }

    pub fn is_zero(&self) -> bool {
        self.enclosure == Interval::point(0.0)
    }
}

/// A term built from variables, constants and the supported function
/// symbols. Arity is fixed by the variant.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(String),
    Const(Constant),
    Unary(UnaryOp, Box<Term>),
    Binary(BinaryOp, Box<Term>, Box<Term>),
}

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(x: f64) -> Term {
        Term::Const(Constant::from_f64(x))
    }

    pub fn unary(op: UnaryOp, a: Term) -> Term {
        Term::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: Term, b: Term) -> Term {
        Term::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::binary(BinaryOp::Add, a, b)
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::binary(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Term, b: Term) -> Term {
        Term::binary(BinaryOp::Div, a, b)
    }

    pub fn neg(a: Term) -> Term {
        Term::unary(UnaryOp::Neg, a)
    }

    pub fn sq(a: Term) -> Term {
        Term::unary(UnaryOp::Sq, a)
    }

    pub fn sin(a: Term) -> Term {
        Term::unary(UnaryOp::Sin, a)
    }

    /// Variable occurrences, left to right.
    pub fn walk_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Term::Var(v) => f(v),
            Term::Const(_) => {}
            Term::Unary(_, a) => a.walk_vars(f),
            Term::Binary(_, a, b) => {
                a.walk_vars(f);
                b.walk_vars(f);
            }
        }
    }

    /// Number of function-symbol nodes.
    pub fn internal_nodes(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 0,
            Term::Unary(_, a) => 1 + a.internal_nodes(),
            Term::Binary(_, a, b) => 1 + a.internal_nodes() + b.internal_nodes(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 0,
            Term::Unary(_, a) => 1 + a.depth(),
            Term::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Point evaluation in double precision.
    pub fn eval_point(&self, env: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            Term::Var(v) => env(v),
            Term::Const(c) => c.literal.parse().unwrap_or(f64::NAN),
            Term::Unary(op, a) => {
                let a = a.eval_point(env);
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sq => a * a,
                    UnaryOp::Sin => a.sin(),
                }
            }
            Term::Binary(op, a, b) => {
                let (a, b) = (a.eval_point(env), b.eval_point(env));
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                }
            }
        }
    }

    fn rename_vars(&self, f: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::Const(c) => Term::Const(c.clone()),
            Term::Unary(op, a) => Term::unary(*op, a.rename_vars(f)),
            Term::Binary(op, a, b) => {
                let a = a.rename_vars(f);
                let b = b.rename_vars(f);
                Term::binary(*op, a, b)
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => f.write_str(&c.literal),
            Term::Unary(UnaryOp::Sin, a) => write!(f, "sin({a})"),
            Term::Unary(UnaryOp::Neg, a) => match **a {
                Term::Unary(UnaryOp::Sq, _) => write!(f, "-({a})"),
                _ => write!(f, "-{a}"),
            },
            Term::Unary(UnaryOp::Sq, a) => write!(f, "{a}^2"),
            Term::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// `lhs <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicFormula {
    pub lhs: Term,
}

impl AtomicFormula {
    pub fn new(lhs: Term) -> Self {
        AtomicFormula { lhs }
    }

    /// `a <= b` as `a - b <= 0`; a literal zero on the right is dropped.
    pub fn le(a: Term, b: Term) -> Self {
        match &b {
            Term::Const(c) if c.is_zero() => AtomicFormula::new(a),
            _ => AtomicFormula::new(Term::sub(a, b)),
        }
    }
}

impl fmt::Display for AtomicFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= 0", self.lhs)
    }
}

/// Declared domains plus a list of inequalities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct System {
    pub declarations: IntervalBox,
    pub formulas: Vec<AtomicFormula>,
}

impl System {
    pub fn new(declarations: IntervalBox, formulas: Vec<AtomicFormula>) -> Self {
        let mut s = System {
            declarations,
            formulas,
        };
        s.declare_missing();
        s
    }

    /// Gives every undeclared variable the domain `[-inf, inf]`.
    pub fn declare_missing(&mut self) {
        let mut missing = Vec::new();
        for f in &self.formulas {
            f.lhs.walk_vars(&mut |v| {
                if !self.declarations.contains_var(v) && !missing.iter().any(|m| m == v) {
                    missing.push(v.to_string());
                }
            });
        }
        for v in missing {
            self.declarations.insert(v, Interval::ENTIRE);
        }
    }

    /// The domain box of the declared variables.
    pub fn domains(&self) -> &IntervalBox {
        &self.declarations
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, d) in self.declarations.iter() {
            match d.bounds() {
                Some((lo, hi)) => writeln!(
                    f,
                    "var {name} in [{}, {}];",
                    render_bound(lo),
                    render_bound(hi)
                )?,
                None => writeln!(f, "# {name} has an empty domain")?,
            }
        }
        for formula in &self.formulas {
            writeln!(f, "{formula};")?;
        }
        Ok(())
    }
}

fn render_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x < 0.0 {
        format!("-{}", exact_decimal(-x))
    } else {
        exact_decimal(x)
    }
}

/// Occurrence count of every variable over all formulas, in order of first
/// occurrence.
pub fn occurrences(system: &System) -> IndexMap<String, usize> {
    let mut counts: IndexMap<String, usize> = IndexMap::new();
    for f in &system.formulas {
        f.lhs.walk_vars(&mut |v| *counts.entry(v.to_string()).or_default() += 1);
    }
    counts
}

/// The fresh variables that replaced the occurrences of one original
/// variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceClass {
    pub original: String,
    pub members: Vec<String>,
}

/// A system in which no variable occurs twice; equality of the occurrences
/// is restored through the equivalence classes.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalSystem {
    pub formulas: Vec<AtomicFormula>,
    pub classes: Vec<EquivalenceClass>,
    /// Domains of the fresh variables, inherited from their originals.
    pub domains: IntervalBox,
    /// Domains of the original variables, including ones that never occur.
    pub original_domains: IntervalBox,
}

/// Name of the `k`-th (1-based) occurrence of `original`.
pub fn fresh_name(original: &str, k: usize) -> String {
    format!("{original}#{k}")
}

/// Replaces each variable occurrence by a distinct fresh variable
/// `<orig>#<k>`, numbering occurrences left to right and top to bottom.
pub fn canonicalize(system: &System) -> CanonicalSystem {
    let mut classes: IndexMap<String, Vec<String>> = IndexMap::new();
    let formulas = system
        .formulas
        .iter()
        .map(|f| {
            AtomicFormula::new(f.lhs.rename_vars(&mut |v| {
                let members = classes.entry(v.to_string()).or_default();
                let fresh = fresh_name(v, members.len() + 1);
                members.push(fresh.clone());
                fresh
            }))
        })
        .collect();
    let mut domains = IntervalBox::new();
    for (orig, members) in &classes {
        let d = system.declarations.get(orig).unwrap_or(Interval::ENTIRE);
        for m in members {
            domains.insert(m.clone(), d);
        }
    }
    CanonicalSystem {
        formulas,
        classes: classes
            .into_iter()
            .map(|(original, members)| EquivalenceClass { original, members })
            .collect(),
        domains,
        original_domains: system.declarations.clone(),
    }
}

fn decimal_to_rational(literal: &str) -> Option<BigRational> {
    let (mantissa, exp) = match literal.find(['e', 'E']) {
        Some(i) => (&literal[..i], literal[i + 1..].parse::<i64>().ok()?),
        None => (literal, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(digits * num::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Tightest interval containing an unsigned decimal literal.
pub(crate) fn decimal_enclosure(literal: &str) -> Option<Interval> {
    let nearest: f64 = literal.parse().ok()?;
    if nearest.is_nan() || nearest < 0.0 || literal.starts_with(['+', '-']) {
        return None;
    }
    if nearest.is_infinite() {
        return Some(Interval::closed(f64::MAX, f64::INFINITY));
    }
    // bounds far outside the double range would build huge powers of ten
    let exponent_ok = literal
        .find(['e', 'E'])
        .is_none_or(|i| literal[i + 1..].parse::<i64>().is_ok_and(|e| e.abs() < 2000));
    if !exponent_ok {
        return Some(if nearest == 0.0 {
            Interval::closed(0.0, f64::from_bits(1))
        } else {
            Interval::closed(nearest.next_down(), nearest.next_up())
        });
    }
    let exact = decimal_to_rational(literal)?;
    let approx = BigRational::from_float(nearest).expect("finite");
    Some(match exact.cmp(&approx) {
        std::cmp::Ordering::Equal => Interval::point(nearest),
        std::cmp::Ordering::Less => Interval::closed(nearest.next_down(), nearest),
        std::cmp::Ordering::Greater => Interval::closed(nearest, nearest.next_up()),
    })
}

/// A decimal string whose exact value is `x` (finite, non-negative).
pub(crate) fn exact_decimal(x: f64) -> String {
    let shortest = format!("{x:e}");
    let exact = BigRational::from_float(x).expect("finite");
    if decimal_to_rational(&shortest).is_some_and(|r| r == exact) {
        return shortest;
    }
    // every double has at most 767 significant decimal digits
    let long = format!("{x:.767e}");
    let (mantissa, exp) = long.split_once('e').expect("exponent form");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    let s = format!("{mantissa}e{exp}");
    debug_assert!(decimal_to_rational(&s).is_some_and(|r| r == exact));
    s
}
