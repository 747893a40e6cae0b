//! lamsem: an executable semantics workbench for call-by-value
//! lambda-calculus with integer constants.
//!
//! The same language is given several semantics — big-step evaluation with
//! fuel, small-step reduction, a depth-indexed denotational evaluator,
//! finite and infinite trace semantics, bounded approximants of the
//! coinductive divergence and coevaluation relations, simple types over
//! equi-recursive (rational-tree) type graphs, and compilation to a small
//! eval-apply abstract machine — and the equivalences between them are
//! differentially tested on generated terms at bounded depth.

pub mod bigstep;
pub mod denot;
pub mod harness;
pub mod machine;
pub mod smallstep;
pub mod syntax;
pub mod traces;
pub mod types;

pub use bigstep::{coeval_approx, diverges_approx, eval_fuel, eval_trace, EvalOutcome, Fuel};
pub use denot::{compute, exec_approx, Result3};
pub use smallstep::{classify, reduce_with_trace, reduct_stream, step, ReductionClass};
pub use syntax::{parse, subst, to_debruijn, DbTerm, Term};
