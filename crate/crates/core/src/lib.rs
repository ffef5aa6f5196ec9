//! Interval constraint propagation for systems of nonlinear inequalities.
//!
//! Terms are parsed into [`System`]s, rewritten into a single-occurrence
//! canonical form, translated into an [`Icsp`] of primitive constraints and
//! narrowed by propagation. [`solve_system`] combines propagation with
//! splitting to compute a [`Cover`] of the solution set.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod icsp;
pub mod interval;
pub mod propagate;
mod round;
pub mod search;

pub use error::{EvalError, IntervalError, ParseError, PropagateError, SearchError};
pub use expr::{canonicalize, parse_system, parse_term, AtomicFormula, CanonicalSystem, System, Term};
pub use icsp::{translate, translate_system, translate_term, Icsp, Relation, VarId};
pub use interval::{eval_term, Interval, IntervalBox};
pub use propagate::{eval_by_propagation, gpa, psi, repropagate, solve_inequality, Order, PropagationOutcome};
pub use search::{lower_bound_minimum, solve_system, Cover, SolveConfig};
