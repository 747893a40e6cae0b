//! Depth-indexed denotational evaluation: the computation of a term at
//! maximal recursion depth `n`, with a three-valued outcome ordered flatly
//! (bottom below everything, everything else only below itself).
//!
//! Implemented by structural recursion on the depth index with an explicit
//! monadic composition operator, independently of the big-step evaluator,
//! so the agreement between the two is a genuine differential check.

use std::fmt;

use crate::syntax::{subst_closed, Term};

/// Three-valued denotational outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Result3 {
    /// The computation cannot complete within the given depth.
    Bottom,
    /// Abrupt termination on a run-time error.
    Err,
    /// Normal termination with this value.
    Val(Term),
}

impl Result3 {
    /// The flat order: `Bottom <= r` and `r <= r`.
    pub fn le(&self, other: &Result3) -> bool {
        matches!(self, Result3::Bottom) || self == other
    }
}

impl fmt::Display for Result3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Result3::Bottom => write!(f, "bottom"),
            Result3::Err => write!(f, "err"),
            Result3::Val(v) => write!(f, "{v}"),
        }
    }
}

/// Monadic composition: bottom and err pass through, a value feeds `f`.
fn bind(r: Result3, f: impl FnOnce(Term) -> Result3) -> Result3 {
    match r {
        Result3::Bottom => Result3::Bottom,
        Result3::Err => Result3::Err,
        Result3::Val(v) => f(v),
    }
}

/// Computation of `t` at maximal recursion depth `n`:
///
/// ```text
/// C 0     a         = bottom
/// C (n+1) x         = err
/// C (n+1) c         = c
/// C (n+1) (\x. a)   = \x. a
/// C (n+1) (a1 a2)   = C n a1 |> (v1 ->
///                     C n a2 |> (v2 ->
///                     if v1 = \x. b then C n (b[x <- v2]) else err))
/// ```
pub fn compute(n: u32, t: &Term) -> Result3 {
    if n == 0 {
        return Result3::Bottom;
    }
    match t {
        Term::Var(_) => Result3::Err,
        Term::Const(_) | Term::Abs(_, _) => Result3::Val(t.clone()),
        Term::App(fun, arg) => bind(compute(n - 1, fun), |v1| {
            bind(compute(n - 1, arg), |v2| match v1 {
                Term::Abs(x, body) => compute(n - 1, &subst_closed(&body, &x, &v2)),
                _ => Result3::Err,
            })
        }),
    }
}

/// Budgeted approximation of the denotation: by monotonicity this equals
/// the true denotation whenever it is not bottom, and bottom means "bottom
/// up to budget N".
pub fn exec_approx(t: &Term, budget: u32) -> Result3 {
    compute(budget, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn p(src: &str) -> Term {
        parse(src).unwrap()
    }

    #[test]
    fn depth_zero_is_bottom() {
        for src in ["0", "x", "\\x. x", "0 0", "@omega"] {
            assert_eq!(compute(0, &p(src)), Result3::Bottom);
        }
    }

    #[test]
    fn constant_application_errors_at_depth_two() {
        assert_eq!(compute(1, &p("0 0")), Result3::Bottom);
        assert_eq!(compute(2, &p("0 0")), Result3::Err);
    }

    #[test]
    fn free_variables_error_immediately() {
        assert_eq!(compute(1, &p("x")), Result3::Err);
    }

    #[test]
    fn omega_is_bottom_at_all_depths() {
        for n in [1, 5, 50, 500] {
            assert_eq!(compute(n, &p("@omega")), Result3::Bottom);
        }
    }

    #[test]
    fn exec_approx_examples() {
        assert_eq!(exec_approx(&p("7"), 1), Result3::Val(p("7")));
        assert_eq!(exec_approx(&p("0 0"), 10), Result3::Err);
        assert_eq!(exec_approx(&p("@omega"), 1000), Result3::Bottom);
    }

    #[test]
    fn flat_order() {
        let a = Result3::Val(p("0"));
        let b = Result3::Val(p("1"));
        assert!(Result3::Bottom.le(&a));
        assert!(Result3::Bottom.le(&Result3::Err));
        assert!(a.le(&a));
        assert!(!a.le(&b));
        assert!(!Result3::Err.le(&a));
        assert!(!a.le(&Result3::Bottom));
    }
}
