//! Directed rounding on top of round-to-nearest.
//!
//! Each operation is performed in the default rounding mode and the exact
//! error term is recovered with an error-free transformation (TwoSum for
//! addition, `mul_add` for products, quotients and square roots). The rounded
//! result is moved one representable step only when the error term says the
//! true value lies on the wrong side, so exact results stay exact. In the
//! gradual-underflow range, where the error term is no longer exact, the
//! result is widened unconditionally.
//!
//! Callers never pass the indeterminate forms `inf - inf`, `x / 0` or
//! `inf / inf`; products of zero and an infinity are zero.

/// Below this magnitude the error-free transformations for `*`, `/` and
/// `sqrt` may lose their exactness.
const TINY: f64 = 1.0e-280;

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    debug_assert!(!(a.is_infinite() && b.is_infinite() && a != b));
    let s = a + b;
    if s.is_infinite() {
        if a.is_finite() && b.is_finite() && s > 0.0 {
            return f64::MAX;
        }
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    debug_assert!(!(a.is_infinite() && b.is_infinite() && a != b));
    let s = a + b;
    if s.is_infinite() {
        if a.is_finite() && b.is_finite() && s < 0.0 {
            return f64::MIN;
        }
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Sign of the rounding error of `a * b` relative to the computed product:
/// `-1` when the true product is below it, `1` above, `0` exact, and `2`
/// when the error cannot be determined.
#[inline]
fn mul_error_sign(a: f64, b: f64, p: f64) -> i8 {
    if p.abs() < TINY {
        return 2;
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 {
        -1
    } else if e > 0.0 {
        1
    } else {
        0
    }
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_infinite() {
        if a.is_finite() && b.is_finite() && p > 0.0 {
            return f64::MAX;
        }
        return p;
    }
    if a.is_infinite() || b.is_infinite() {
        return p;
    }
    match mul_error_sign(a, b, p) {
        0 | 1 => p,
        _ => p.next_down(),
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_infinite() {
        if a.is_finite() && b.is_finite() && p < 0.0 {
            return f64::MIN;
        }
        return p;
    }
    if a.is_infinite() || b.is_infinite() {
        return p;
    }
    match mul_error_sign(a, b, p) {
        0 | -1 => p,
        _ => p.next_up(),
    }
}

/// Same convention as [`mul_error_sign`] for `a / b`.
#[inline]
fn div_error_sign(a: f64, b: f64, q: f64) -> i8 {
    if q.abs() < TINY || a.abs() < TINY {
        return 2;
    }
    // a / b - q == r / b
    let r = (-q).mul_add(b, a);
    if r == 0.0 {
        0
    } else if (r > 0.0) == (b > 0.0) {
        1
    } else {
        -1
    }
}

pub(crate) fn div_down(a: f64, b: f64) -> f64 {
    debug_assert!(b != 0.0 && !(a.is_infinite() && b.is_infinite()));
    if a == 0.0 || b.is_infinite() || a.is_infinite() {
        return a / b;
    }
    let q = a / b;
    if q.is_infinite() {
        return if q > 0.0 { f64::MAX } else { q };
    }
    match div_error_sign(a, b, q) {
        0 | 1 => q,
        _ => q.next_down(),
    }
}

pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    debug_assert!(b != 0.0 && !(a.is_infinite() && b.is_infinite()));
    if a == 0.0 || b.is_infinite() || a.is_infinite() {
        return a / b;
    }
    let q = a / b;
    if q.is_infinite() {
        return if q < 0.0 { f64::MIN } else { q };
    }
    match div_error_sign(a, b, q) {
        0 | -1 => q,
        _ => q.next_up(),
    }
}

pub(crate) fn sqrt_down(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a == 0.0 || a.is_infinite() {
        return a.sqrt();
    }
    let s = a.sqrt();
    if a < TINY {
        return s.next_down().max(0.0);
    }
    if (-s).mul_add(s, a) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn sqrt_up(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a == 0.0 || a.is_infinite() {
        return a.sqrt();
    }
    let s = a.sqrt();
    if a < TINY {
        return s.next_up();
    }
    if (-s).mul_add(s, a) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

// The platform `sin` is not correctly rounded, so both bounds get two
// steps of slack.

pub(crate) fn sin_down(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.sin().next_down().next_down().max(-1.0)
}

pub(crate) fn sin_up(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.sin().next_up().next_up().min(1.0)
}

/// Order-preserving bijection between `f64` (without NaN) and `i64`.
pub(crate) fn to_ordered(x: f64) -> i64 {
    let i = x.to_bits() as i64;
    i ^ ((((i >> 63) as u64) >> 1) as i64)
}

pub(crate) fn from_ordered(i: i64) -> f64 {
    let bits = i ^ ((((i >> 63) as u64) >> 1) as i64);
    f64::from_bits(bits as u64)
}
