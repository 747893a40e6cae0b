//! Deterministic one-step reduction, bounded multi-step reduction with
//! value/stuck/step-limit classification, traced reduction, and the
//! corecursive stream of successive reducts.

use std::sync::Arc;

use crate::syntax::{subst_closed, Term};
use crate::traces::{FiniteTrace, LazyTrace};

/// Result of attempting one reduction step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Stepped(Term),
    NoStep,
}

/// Outcome of bounded multi-step reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionClass {
    /// Reached a value in `steps` reduction steps.
    ValueReached(Term, usize),
    /// Reached a non-value normal form in `steps` steps.
    Stuck(Term, usize),
    /// Still reducible after `steps` (= the limit) steps.
    StepLimit(Term, usize),
}

/// One step of call-by-value reduction: the beta axiom on `(\x. a) v` with a
/// value argument, or reduction under the left then the right subterm of an
/// application. At most one rule applies, so the relation is a function.
///
/// Iterative so that reducts that grow deep over long reduction sequences
/// cannot exhaust the stack: descend to the unique active position, then
/// rebuild the spine around the contractum, sharing everything else.
pub fn step(t: &Term) -> StepOutcome {
    let mut path: Vec<(&Term, bool)> = Vec::new();
    let mut cur = t;
    let contractum = loop {
        match cur {
            Term::App(fun, arg) => {
                if let Term::Abs(x, body) = &**fun {
                    if arg.is_value() {
                        break subst_closed(body, x, arg);
                    }
                }
                if !fun.is_value() {
                    path.push((cur, true));
                    cur = fun;
                } else {
                    path.push((cur, false));
                    cur = arg;
                }
            }
            // non-application at the active position: no rule applies
            _ => return StepOutcome::NoStep,
        }
    };
    let mut rebuilt = contractum;
    for (node, went_left) in path.into_iter().rev() {
        let Term::App(fun, arg) = node else {
            unreachable!()
        };
        rebuilt = if went_left {
            Term::App(Arc::new(rebuilt), arg.clone())
        } else {
            Term::App(fun.clone(), Arc::new(rebuilt))
        };
    }
    StepOutcome::Stepped(rebuilt)
}

/// Iterate `step` at most `limit` times, stopping at the first value or
/// stuck state. A step-limited term is reported as such, never conflated
/// with a stuck one.
pub fn classify(t: &Term, limit: usize) -> ReductionClass {
    let mut cur = t.clone();
    let mut steps = 0;
    loop {
        if cur.is_value() {
            return ReductionClass::ValueReached(cur, steps);
        }
        match step(&cur) {
            StepOutcome::NoStep => return ReductionClass::Stuck(cur, steps),
            StepOutcome::Stepped(next) => {
                if steps == limit {
                    return ReductionClass::StepLimit(cur, steps);
                }
                steps += 1;
                cur = next;
            }
        }
    }
}

/// Like [`classify`], also returning the trace of source terms of every step
/// performed, in order; the final term is not part of the trace.
pub fn reduce_with_trace(t: &Term, limit: usize) -> (FiniteTrace, ReductionClass) {
    let mut trace = Vec::new();
    let mut cur = t.clone();
    let mut steps = 0;
    loop {
        if cur.is_value() {
            return (trace, ReductionClass::ValueReached(cur, steps));
        }
        match step(&cur) {
            StepOutcome::NoStep => return (trace, ReductionClass::Stuck(cur, steps)),
            StepOutcome::Stepped(next) => {
                if steps == limit {
                    return (trace, ReductionClass::StepLimit(cur, steps));
                }
                trace.push(cur);
                steps += 1;
                cur = next;
            }
        }
    }
}

/// The infinite stream of successive reducts of `t`: element 0 is `t`
/// itself, and once no step applies the last term repeats forever.
pub fn reduct_stream(t: &Term) -> LazyTrace {
    let mut cur = t.clone();
    LazyTrace::from_fn(move || {
        let out = cur.clone();
        if let StepOutcome::Stepped(next) = step(&cur) {
            cur = next;
        }
        Some(out)
    })
}
