#![allow(dead_code)]

use icp_core::expr::{AtomicFormula, BinaryOp, Constant, System, Term, UnaryOp};
use icp_core::{eval_term, Interval, IntervalBox};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn var_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn random_literal(rng: &mut TestRng) -> Constant {
    let lit = match rng.gen_range(0..4) {
        0 => format!("{}", rng.gen_range(0..10)),
        1 => format!("{}.{}", rng.gen_range(0..5), rng.gen_range(0..100)),
        2 => "0.1".to_string(),
        _ => format!("{}e-{}", rng.gen_range(1..9), rng.gen_range(1..4)),
    };
    Constant::parse(&lit).expect("valid literal")
}

/// A random term of depth at most `depth` over `vars`.
pub fn random_term(rng: &mut TestRng, depth: usize, vars: &[String], with_sin: bool) -> Term {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.8) {
            Term::Var(vars[rng.gen_range(0..vars.len())].clone())
        } else {
            Term::Const(random_literal(rng))
        };
    }
    let ops = if with_sin { 7 } else { 6 };
    let sub = |rng: &mut TestRng| random_term(rng, depth - 1, vars, with_sin);
    match rng.gen_range(0..ops) {
        0 => Term::binary(BinaryOp::Add, sub(rng), sub(rng)),
        1 => Term::binary(BinaryOp::Sub, sub(rng), sub(rng)),
        2 => Term::binary(BinaryOp::Mul, sub(rng), sub(rng)),
        3 => Term::binary(BinaryOp::Div, sub(rng), sub(rng)),
        4 => Term::unary(UnaryOp::Neg, sub(rng)),
        5 => Term::unary(UnaryOp::Sq, sub(rng)),
        _ => Term::unary(UnaryOp::Sin, sub(rng)),
    }
}

/// A random finite, non-empty interval; sometimes a point.
pub fn random_finite(rng: &mut TestRng) -> Interval {
    let lo: f64 = rng.gen_range(-10.0..10.0);
    if rng.gen_bool(0.15) {
        return Interval::point(lo);
    }
    let w: f64 = rng.gen_range(0.0..8.0);
    Interval::closed(lo, lo + w)
}

/// Finite, half-infinite or unbounded.
pub fn random_any(rng: &mut TestRng) -> Interval {
    match rng.gen_range(0..6) {
        0 => Interval::ENTIRE,
        1 => Interval::closed(f64::NEG_INFINITY, rng.gen_range(-5.0..5.0)),
        2 => Interval::closed(rng.gen_range(-5.0..5.0), f64::INFINITY),
        _ => random_finite(rng),
    }
}

pub fn random_env(rng: &mut TestRng, vars: &[String]) -> IntervalBox {
    vars.iter().map(|v| (v.clone(), random_finite(rng))).collect()
}

/// True if some division in `t` has a denominator evaluating to `[0, 0]`.
pub fn has_zero_denominator(t: &Term, env: &IntervalBox) -> bool {
    match t {
        Term::Var(_) | Term::Const(_) => false,
        Term::Unary(_, a) => has_zero_denominator(a, env),
        Term::Binary(op, a, b) => {
            (*op == BinaryOp::Div && eval_term(b, env).unwrap() == Interval::point(0.0))
                || has_zero_denominator(a, env)
                || has_zero_denominator(b, env)
        }
    }
}

pub fn random_system(rng: &mut TestRng, nvars: usize, nformulas: usize, depth: usize) -> System {
    let vars = var_names(nvars);
    let mut decls = IntervalBox::new();
    for v in &vars {
        let lo: f64 = rng.gen_range(-3.0..1.0);
        let w: f64 = rng.gen_range(0.5..4.0);
        decls.insert(v.clone(), Interval::closed(lo, lo + w));
    }
    let formulas = (0..nformulas)
        .map(|_| AtomicFormula::new(random_term(rng, depth, &vars, true)))
        .collect();
    System::new(decls, formulas)
}

/// Point box for a sample.
pub fn point_box(names: &[String], xs: &[f64]) -> IntervalBox {
    names.iter().zip(xs).map(|(n, x)| (n.clone(), Interval::point(*x))).collect()
}

/// Rigorous point test: `Some(true)` if the point satisfies every formula,
/// `Some(false)` if it violates one, `None` if rounding leaves it open.
pub fn point_status(system: &System, names: &[String], xs: &[f64]) -> Option<bool> {
    let env = point_box(names, xs);
    let mut all = true;
    for f in &system.formulas {
        let r = eval_term(&f.lhs, &env).unwrap();
        match r.bounds() {
            None => return Some(false),
            Some((a, _)) if a > 0.0 => return Some(false),
            Some((_, b)) => all &= b <= 0.0,
        }
    }
    if all {
        Some(true)
    } else {
        None
    }
}
