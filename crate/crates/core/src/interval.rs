//! Floating-point intervals with outward rounding.
//!
//! An [`Interval`] is either empty or a closed range `[lo, hi]` whose bounds
//! are finite doubles or infinities (`lo` is never `+inf`, `hi` is never
//! `-inf`). Every operation returns a superset of the exact set image of its
//! arguments; the bound computations are done by the directed-rounding
//! helpers in [`crate::round`], which move a bound by at most one ulp.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::error::{EvalError, IntervalError};
use crate::expr::{BinaryOp, Term, UnaryOp};
use crate::round;

const TAU: f64 = std::f64::consts::TAU;
const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

/// A closed connected set of reals with floating-point bounds.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    bounds: Option<(f64, f64)>,
}

impl Interval {
    pub const EMPTY: Interval = Interval { bounds: None };
    pub const ENTIRE: Interval = Interval {
        bounds: Some((f64::NEG_INFINITY, f64::INFINITY)),
    };
    pub const NON_POSITIVE: Interval = Interval {
        bounds: Some((f64::NEG_INFINITY, 0.0)),
    };
    pub const NON_NEGATIVE: Interval = Interval {
        bounds: Some((0.0, f64::INFINITY)),
    };
    pub const UNIT: Interval = Interval {
        bounds: Some((-1.0, 1.0)),
    };

    /// Builds `[lo, hi]`, rejecting NaN, `lo > hi`, `lo == +inf` and
    /// `hi == -inf`.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(IntervalError::NanBound);
        }
        if lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(IntervalError::InvalidBounds { lo, hi });
        }
        Ok(Self::from_bounds(lo, hi))
    }

    /// Like [`Interval::new`] for bounds known to be valid; panics otherwise.
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi).expect("invalid interval bounds")
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    /// Internal constructor: assumes valid bounds, normalizes `-0.0`.
    #[inline]
    pub(crate) fn from_bounds(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi && lo != f64::INFINITY && hi != f64::NEG_INFINITY);
        // -0.0 == 0.0, so this maps both zeros to +0.0
        let lo = if lo == 0.0 { 0.0 } else { lo };
        let hi = if hi == 0.0 { 0.0 } else { hi };
        Interval {
            bounds: Some((lo, hi)),
        }
    }

    /// Builds `[lo, hi]` or `Empty` when `lo > hi`.
    #[inline]
    fn from_maybe(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            Self::from_bounds(lo, hi)
        } else {
            Self::EMPTY
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    /// Left bound; `+inf` for the empty interval.
    pub fn lo(&self) -> f64 {
        self.bounds.map_or(f64::INFINITY, |b| b.0)
    }

    /// Right bound; `-inf` for the empty interval.
    pub fn hi(&self) -> f64 {
        self.bounds.map_or(f64::NEG_INFINITY, |b| b.1)
    }

    pub fn is_point(&self) -> bool {
        matches!(self.bounds, Some((lo, hi)) if lo == hi)
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.bounds, Some((lo, hi)) if lo.is_finite() && hi.is_finite())
    }

    pub fn contains(&self, x: f64) -> bool {
        matches!(self.bounds, Some((lo, hi)) if lo <= x && x <= hi)
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, other: &Interval) -> bool {
        match (self.bounds, other.bounds) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    /// `hi - lo` rounded up; zero for the empty interval.
    pub fn width(&self) -> f64 {
        match self.bounds {
            None => 0.0,
            Some((lo, hi)) => {
                if lo.is_infinite() || hi.is_infinite() {
                    f64::INFINITY
                } else {
                    round::add_up(hi, -lo)
                }
            }
        }
    }

    /// A finite point inside a non-empty interval, used as the split pivot.
    ///
    /// Bounded intervals use the midpoint. An interval with an infinite side
    /// pivots at 0 when 0 is interior, otherwise at `max(2|b|, 1)` on the
    /// unbounded side of the finite bound `b`.
    pub fn midpoint(&self) -> Option<f64> {
        let (lo, hi) = self.bounds?;
        let m = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                let m = 0.5 * lo + 0.5 * hi;
                m.clamp(lo, hi)
            }
            (false, false) => 0.0,
            (true, false) => {
                if lo < 0.0 {
                    0.0
                } else {
                    (2.0 * lo).clamp(1.0, f64::MAX)
                }
            }
            (false, true) => {
                if hi > 0.0 {
                    0.0
                } else {
                    (2.0 * hi).clamp(f64::MIN, -1.0)
                }
            }
        };
        Some(m)
    }

    /// Splits at [`Interval::midpoint`] into `([lo, m], [m, hi])`.
    pub fn split(&self) -> Result<(Interval, Interval), IntervalError> {
        let (lo, hi) = self.bounds.ok_or(IntervalError::SplitEmpty)?;
        if lo == hi {
            return Err(IntervalError::SplitDegenerate(lo));
        }
        let m = self.midpoint().expect("non-empty");
        if m <= lo || m >= hi {
            // adjacent floats, or no finite pivot beyond a huge bound
            return Err(IntervalError::SplitDegenerate(m));
        }
        Ok((Self::from_bounds(lo, m), Self::from_bounds(m, hi)))
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        match (self.bounds, other.bounds) {
            (Some((a, b)), Some((c, d))) => Self::from_maybe(a.max(c), b.min(d)),
            _ => Self::EMPTY,
        }
    }

    /// The hull φ of the union of two intervals.
    pub fn hull(&self, other: &Interval) -> Interval {
        match (self.bounds, other.bounds) {
            (None, _) => *other,
            (_, None) => *self,
            (Some((a, b)), Some((c, d))) => Self::from_bounds(a.min(c), b.max(d)),
        }
    }

    pub fn neg(&self) -> Interval {
        match self.bounds {
            None => Self::EMPTY,
            Some((lo, hi)) => Self::from_bounds(-hi, -lo),
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        match (self.bounds, other.bounds) {
            (Some((a, b)), Some((c, d))) => {
                Self::from_bounds(round::add_down(a, c), round::add_up(b, d))
            }
            _ => Self::EMPTY,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let ((a, b), (c, d)) = match (self.bounds, other.bounds) {
            (Some(x), Some(y)) => (x, y),
            _ => return Self::EMPTY,
        };
        let lo = round::mul_down(a, c)
            .min(round::mul_down(a, d))
            .min(round::mul_down(b, c))
            .min(round::mul_down(b, d));
        let hi = round::mul_up(a, c)
            .max(round::mul_up(a, d))
            .max(round::mul_up(b, c))
            .max(round::mul_up(b, d));
        Self::from_bounds(lo, hi)
    }

    /// Hull of the relational quotient `{ z : z * d = n for some n, d }`.
    pub fn div_hull(&self, divisor: &Interval) -> Interval {
        let pieces = Pieces::quotient(self, divisor);
        pieces.0.hull(&pieces.1)
    }

    pub fn sq(&self) -> Interval {
        let (lo, hi) = match self.bounds {
            None => return Self::EMPTY,
            Some(b) => b,
        };
        if lo >= 0.0 {
            Self::from_bounds(round::mul_down(lo, lo), round::mul_up(hi, hi))
        } else if hi <= 0.0 {
            Self::from_bounds(round::mul_down(hi, hi), round::mul_up(lo, lo))
        } else {
            Self::from_bounds(0.0, round::mul_up(lo, lo).max(round::mul_up(hi, hi)))
        }
    }

    /// Hull of `{ x : x² ∈ self }`.
    pub fn sqrt_hull(&self) -> Interval {
        let pieces = Pieces::sqrt(self);
        pieces.0.hull(&pieces.1)
    }

    /// Enclosure of `{ sin x : x ∈ self }`, always within `[-1, 1]`.
    pub fn sin(&self) -> Interval {
        let (lo, hi) = match self.bounds {
            None => return Self::EMPTY,
            Some(b) => b,
        };
        if !lo.is_finite() || !hi.is_finite() || hi - lo >= TAU {
            return Self::UNIT;
        }
        let top = if contains_phase(lo, hi, FRAC_PI_2) {
            1.0
        } else {
            round::sin_up(lo).max(round::sin_up(hi))
        };
        let bottom = if contains_phase(lo, hi, -FRAC_PI_2) {
            -1.0
        } else {
            round::sin_down(lo).min(round::sin_down(hi))
        };
        Self::from_bounds(bottom, top)
    }
}

/// Conservatively decides whether `offset + k·2π ∈ [lo, hi]` for some
/// integer `k`. False positives are possible near the endpoints, false
/// negatives are not.
fn contains_phase(lo: f64, hi: f64, offset: f64) -> bool {
    let slack = |q: f64| 1e-9 * (1.0 + q.abs());
    let qa = (lo - offset) / TAU;
    let qb = (hi - offset) / TAU;
    (qa - slack(qa)).ceil() <= (qb + slack(qb)).floor()
}

/// A set represented as the union of at most two intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Pieces(pub Interval, pub Interval);

impl Pieces {
    fn one(i: Interval) -> Self {
        Pieces(i, Interval::EMPTY)
    }

    /// `φ(x ∩ self)`.
    pub fn restrict(&self, x: &Interval) -> Interval {
        x.intersect(&self.0).hull(&x.intersect(&self.1))
    }

    /// `{ z : ∃ n ∈ num, d ∈ den, z·d = n }`.
    pub fn quotient(num: &Interval, den: &Interval) -> Self {
        let ((nl, nh), (dl, dh)) = match (num.bounds, den.bounds) {
            (Some(n), Some(d)) => (n, d),
            _ => return Self::one(Interval::EMPTY),
        };
        let num_has_zero = nl <= 0.0 && 0.0 <= nh;
        if dl == 0.0 && dh == 0.0 {
            return Self::one(if num_has_zero {
                Interval::ENTIRE
            } else {
                Interval::EMPTY
            });
        }
        if dl > 0.0 {
            return Self::one(positive_quotient(nl, nh, dl, dh));
        }
        if dh < 0.0 {
            return Self::one(positive_quotient(-nh, -nl, -dh, -dl));
        }
        if num_has_zero {
            return Self::one(Interval::ENTIRE);
        }
        // 0 ∈ den, 0 ∉ num
        let (mut left, mut right) = (Interval::EMPTY, Interval::EMPTY);
        if nl > 0.0 {
            if dh > 0.0 {
                right = Interval::from_bounds(round::div_down(nl, dh), f64::INFINITY);
            }
            if dl < 0.0 {
                left = Interval::from_bounds(f64::NEG_INFINITY, round::div_up(nl, dl));
            }
        } else {
            if dh > 0.0 {
                left = Interval::from_bounds(f64::NEG_INFINITY, round::div_up(nh, dh));
            }
            if dl < 0.0 {
                right = Interval::from_bounds(round::div_down(nh, dl), f64::INFINITY);
            }
        }
        Pieces(left, right)
    }

    /// `{ x : x² ∈ y }`.
    pub fn sqrt(y: &Interval) -> Self {
        let y = y.intersect(&Interval::NON_NEGATIVE);
        let (yl, yh) = match y.bounds {
            None => return Self::one(Interval::EMPTY),
            Some(b) => b,
        };
        let outer = round::sqrt_up(yh);
        let inner = round::sqrt_down(yl);
        Pieces(
            Interval::from_bounds(-outer, -inner),
            Interval::from_bounds(inner, outer),
        )
    }
}

/// `[nl, nh] / [dl, dh]` for `dl > 0`.
fn positive_quotient(nl: f64, nh: f64, dl: f64, dh: f64) -> Interval {
    let lo = if nl >= 0.0 {
        round::div_down(nl, dh)
    } else {
        round::div_down(nl, dl)
    };
    let hi = if nh >= 0.0 {
        round::div_up(nh, dl)
    } else {
        round::div_up(nh, dh)
    };
    Interval::from_bounds(lo, hi)
}

/// Reduces `x` to the hull of `{ v ∈ x : sin v ∈ y }`.
///
/// Boundary slices are removed while [`Interval::sin`] proves them disjoint
/// from `y`; the largest removable slice on each side is found by bisection
/// over the ordered float grid. Domains that are unbounded or at least 2π
/// wide are returned unchanged.
pub(crate) fn sin_preimage(x: &Interval, y: &Interval) -> Interval {
    let (lo, hi) = match (x.bounds, y.bounds) {
        (Some(b), Some(_)) => b,
        _ => return Interval::EMPTY,
    };
    if Interval::UNIT.is_subset(y) || !x.is_bounded() || hi - lo >= TAU {
        return *x;
    }
    let disjoint = |a: f64, b: f64| Interval::from_bounds(a, b).sin().intersect(y).is_empty();
    if disjoint(lo, hi) {
        return Interval::EMPTY;
    }
    let new_lo = if disjoint(lo, lo) {
        last_true(lo, hi, |m| disjoint(lo, m))
    } else {
        lo
    };
    if new_lo > lo && disjoint(new_lo, hi) {
        return Interval::EMPTY;
    }
    let new_hi = if disjoint(hi, hi) {
        first_true(new_lo, hi, |m| disjoint(m, hi))
    } else {
        hi
    };
    Interval::from_maybe(new_lo, new_hi)
}

/// Largest `m` in `[a, b]` with `pred(m)`, given `pred(a)` and `!pred(b)`
/// and a monotone predicate.
fn last_true(a: f64, b: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut l, mut r) = (round::to_ordered(a) as i128, round::to_ordered(b) as i128);
    while r - l > 1 {
        let mid = l + (r - l) / 2;
        if pred(round::from_ordered(mid as i64)) {
            l = mid;
        } else {
            r = mid;
        }
    }
    round::from_ordered(l as i64)
}

/// Smallest `m` in `[a, b]` with `pred(m)`, given `!pred(a)` and `pred(b)`.
fn first_true(a: f64, b: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut l, mut r) = (round::to_ordered(a) as i128, round::to_ordered(b) as i128);
    while r - l > 1 {
        let mid = l + (r - l) / 2;
        if pred(round::from_ordered(mid as i64)) {
            r = mid;
        } else {
            l = mid;
        }
    }
    round::from_ordered(r as i64)
}

impl Default for Interval {
    fn default() -> Self {
        Self::ENTIRE
    }
}

fn fmt_bound(x: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if x == f64::INFINITY {
        f.write_str("inf")
    } else if x == f64::NEG_INFINITY {
        f.write_str("-inf")
    } else {
        write!(f, "{x:?}")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bounds {
            None => f.write_str("empty"),
            Some((lo, hi)) => {
                f.write_str("[")?;
                fmt_bound(lo, f)?;
                f.write_str(",")?;
                fmt_bound(hi, f)?;
                f.write_str("]")
            }
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn parse_bound(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

impl FromStr for Interval {
    type Err = IntervalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "empty" {
            return Ok(Self::EMPTY);
        }
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| IntervalError::Syntax(s.to_string()))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| IntervalError::Syntax(s.to_string()))?;
        let lo = parse_bound(a).ok_or_else(|| IntervalError::Syntax(s.to_string()))?;
        let hi = parse_bound(b).ok_or_else(|| IntervalError::Syntax(s.to_string()))?;
        Interval::new(lo, hi)
    }
}

/// Cartesian product of intervals keyed by variable name, in declaration
/// order.
#[derive(Clone, Default, PartialEq)]
pub struct IntervalBox {
    entries: IndexMap<String, Interval>,
}

impl IntervalBox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, domain: Interval) -> Option<Interval> {
        self.entries.insert(name.into(), domain)
    }

    pub fn get(&self, name: &str) -> Option<Interval> {
        self.entries.get(name).copied()
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Interval> {
        self.entries.get_mut(name)
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// A box is empty iff any component is empty.
    pub fn is_empty(&self) -> bool {
        self.entries.values().any(Interval::is_empty)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Interval)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Product of component widths.
    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.entries.values().map(Interval::width).product()
    }

    pub fn contains_point(&self, point: &[(&str, f64)]) -> bool {
        point
            .iter()
            .all(|(name, x)| self.get(name).is_some_and(|d| d.contains(*x)))
    }

    pub fn is_subset(&self, other: &IntervalBox) -> bool {
        self.entries
            .iter()
            .all(|(k, v)| other.get(k).is_some_and(|o| v.is_subset(&o)))
    }
}

impl FromIterator<(String, Interval)> for IntervalBox {
    fn from_iter<I: IntoIterator<Item = (String, Interval)>>(iter: I) -> Self {
        IntervalBox {
            entries: iter.into_iter().collect(),
        }
    }
}

impl<'a> FromIterator<(&'a str, Interval)> for IntervalBox {
    fn from_iter<I: IntoIterator<Item = (&'a str, Interval)>>(iter: I) -> Self {
        IntervalBox {
            entries: iter.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Natural interval extension of `t` over `env`.
pub fn eval_term(t: &Term, env: &IntervalBox) -> Result<Interval, EvalError> {
    Ok(match t {
        Term::Var(name) => env
            .get(name)
            .ok_or_else(|| EvalError::Unbound(name.clone()))?,
        Term::Const(c) => c.enclosure(),
        Term::Unary(op, a) => {
            let a = eval_term(a, env)?;
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Sq => a.sq(),
                UnaryOp::Sin => a.sin(),
            }
        }
        Term::Binary(op, a, b) => {
            let a = eval_term(a, env)?;
            let b = eval_term(b, env)?;
            match op {
                BinaryOp::Add => a.add(&b),
                BinaryOp::Sub => a.sub(&b),
                BinaryOp::Mul => a.mul(&b),
                BinaryOp::Div => a.div_hull(&b),
            }
        }
    })
}
