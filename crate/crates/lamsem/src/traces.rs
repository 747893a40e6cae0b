//! Trace algebra: finite traces as term sequences, conceptually infinite
//! lazy traces as pull-based producers, concatenation, left/right
//! application into evaluation contexts, and depth-bounded bisimilarity.

use std::collections::VecDeque;

use thiserror::Error;

use crate::syntax::Term;

/// A finite trace is an ordered sequence of terms, one per reduction step
/// performed, recording the source term of each step.
pub type FiniteTrace = Vec<Term>;

/// A conceptually infinite trace. Producers built by the trace algebra and
/// by the reduct stream always yield a term on every pull; a divergence
/// trace stream may stall (return `None`) when its divergence evidence
/// runs out mid-stream.
pub struct LazyTrace {
    source: Box<dyn FnMut() -> Option<Term> + Send>,
}

impl LazyTrace {
    pub fn from_fn(source: impl FnMut() -> Option<Term> + Send + 'static) -> LazyTrace {
        LazyTrace {
            source: Box::new(source),
        }
    }

    /// Endlessly repeats a single term.
    pub fn constant(t: Term) -> LazyTrace {
        LazyTrace::from_fn(move || Some(t.clone()))
    }

    pub fn pull(&mut self) -> Option<Term> {
        (self.source)()
    }

    /// First `k` elements; shorter only if the producer stalls.
    pub fn take(&mut self, k: usize) -> Vec<Term> {
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            match self.pull() {
                Some(t) => out.push(t),
                None => break,
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("right application requires a value, got `{0}`")]
pub struct NonValue(pub String);

/// Concatenation of finite traces. The empty trace is a neutral element and
/// concatenation is associative.
pub fn concat(t: &FiniteTrace, u: &FiniteTrace) -> FiniteTrace {
    let mut out = t.clone();
    out.extend(u.iter().cloned());
    out
}

/// Prepend a finite trace onto a lazy trace.
pub fn concat_lazy(t: &FiniteTrace, mut u: LazyTrace) -> LazyTrace {
    let mut pending: VecDeque<Term> = t.iter().cloned().collect();
    LazyTrace::from_fn(move || match pending.pop_front() {
        Some(x) => Some(x),
        None => u.pull(),
    })
}

/// Left application `t b`: embed every element into the context `[] b`.
pub fn app_left(t: &FiniteTrace, b: &Term) -> FiniteTrace {
    t.iter().map(|a| Term::app(a.clone(), b.clone())).collect()
}

/// Left application of a lazy trace.
pub fn app_left_lazy(mut t: LazyTrace, b: &Term) -> LazyTrace {
    let b = b.clone();
    LazyTrace::from_fn(move || t.pull().map(|a| Term::app(a, b.clone())))
}

/// Right application `v t`: embed every element into the context `v []`.
/// Rejects a non-value `v`.
pub fn app_right(v: &Term, t: &FiniteTrace) -> Result<FiniteTrace, NonValue> {
    if !v.is_value() {
        return Err(NonValue(v.to_string()));
    }
    Ok(t.iter().map(|a| Term::app(v.clone(), a.clone())).collect())
}

/// Right application of a lazy trace. Rejects a non-value `v`.
pub fn app_right_lazy(v: &Term, mut t: LazyTrace) -> Result<LazyTrace, NonValue> {
    if !v.is_value() {
        return Err(NonValue(v.to_string()));
    }
    let v = v.clone();
    Ok(LazyTrace::from_fn(move || {
        t.pull().map(|a| Term::app(v.clone(), a))
    }))
}

/// The k-th approximant of trace bisimilarity: true iff the first `k`
/// elements of both streams exist and are pairwise equal terms.
pub fn bisim_to_depth(t1: &mut LazyTrace, t2: &mut LazyTrace, k: usize) -> bool {
    for _ in 0..k {
        match (t1.pull(), t2.pull()) {
            (Some(a), Some(b)) if a == b => {}
            _ => return false,
        }
    }
    true
}
