//! Fuel-bounded big-step evaluation, big-step trace semantics, and
//! k-indexed approximants of the coinductive divergence and coevaluation
//! relations.
//!
//! Fuel counts rule unfoldings: an application consumes one unit and runs
//! all three premises (function, argument, body) on the remaining budget, so
//! the evaluator is index-compatible with the depth-indexed denotational
//! evaluator and the two can be cross-checked exactly.

use std::collections::VecDeque;

use thiserror::Error;

use crate::syntax::{first_free_var, lookup_macro, subst_closed, Term};
use crate::traces::{app_left, app_right, FiniteTrace, LazyTrace};

/// Recursion-depth budget for the evaluators.
pub type Fuel = u32;

/// Outcome of fuel-bounded evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    /// A finite evaluation derivation of depth within the budget ended in
    /// this value.
    Value(Term),
    /// Evaluation hit a free variable or an application of a constant; the
    /// payload is the offending subterm with evaluated components.
    Wrong(Term),
    /// The budget was exhausted before the derivation completed.
    FuelOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluation requires a closed term: free variable `{0}`")]
pub struct OpenTerm(pub String);

fn check_closed(t: &Term) -> Result<(), OpenTerm> {
    match first_free_var(t) {
        Some(x) => Err(OpenTerm(x)),
        None => Ok(()),
    }
}

/// Big-step evaluation of a closed term with a fuel budget.
pub fn eval_fuel(t: &Term, fuel: Fuel) -> Result<EvalOutcome, OpenTerm> {
    check_closed(t)?;
    Ok(eval(t, fuel))
}

fn eval(t: &Term, fuel: Fuel) -> EvalOutcome {
    if fuel == 0 {
        return EvalOutcome::FuelOut;
    }
    match t {
        Term::Var(_) => EvalOutcome::Wrong(t.clone()),
        Term::Const(_) | Term::Abs(_, _) => EvalOutcome::Value(t.clone()),
        Term::App(fun, arg) => {
            let v1 = match eval(fun, fuel - 1) {
                EvalOutcome::Value(v) => v,
                other => return other,
            };
            let v2 = match eval(arg, fuel - 1) {
                EvalOutcome::Value(v) => v,
                other => return other,
            };
            match v1 {
                Term::Abs(x, body) => eval(&subst_closed(&body, &x, &v2), fuel - 1),
                _ => EvalOutcome::Wrong(Term::app(v1, v2)),
            }
        }
    }
}

/// Big-step evaluation that also builds the trace prescribed by the traced
/// application rule: the function's trace in the context `[] a2`, the
/// argument's trace in the context `(\x. b) []`, the beta-redex source term,
/// then the body's trace. On `Wrong` or `FuelOut` the partial trace
/// accumulated so far is returned.
pub fn eval_trace(t: &Term, fuel: Fuel) -> Result<(FiniteTrace, EvalOutcome), OpenTerm> {
    check_closed(t)?;
    Ok(eval_traced(t, fuel))
}

fn eval_traced(t: &Term, fuel: Fuel) -> (FiniteTrace, EvalOutcome) {
    if fuel == 0 {
        return (Vec::new(), EvalOutcome::FuelOut);
    }
    match t {
        Term::Var(_) => (Vec::new(), EvalOutcome::Wrong(t.clone())),
        Term::Const(_) | Term::Abs(_, _) => (Vec::new(), EvalOutcome::Value(t.clone())),
        Term::App(fun, arg) => {
            let (t1, o1) = eval_traced(fun, fuel - 1);
            let v1 = match o1 {
                EvalOutcome::Value(v) => v,
                other => return (app_left(&t1, arg), other),
            };
            let mut trace = app_left(&t1, arg);
            let (t2, o2) = eval_traced(arg, fuel - 1);
            trace.extend(app_right(&v1, &t2).expect("evaluation produced a value"));
            let v2 = match o2 {
                EvalOutcome::Value(v) => v,
                other => return (trace, other),
            };
            match v1 {
                Term::Abs(x, body) => {
                    trace.push(Term::app(Term::Abs(x.clone(), body.clone()), v2.clone()));
                    let (t3, o3) = eval_traced(&subst_closed(&body, &x, &v2), fuel - 1);
                    trace.extend(t3);
                    (trace, o3)
                }
                _ => (trace, EvalOutcome::Wrong(Term::app(v1, v2))),
            }
        }
    }
}

/// The k-th approximant of the coinductive divergence relation: true at
/// k = 0; at k+1 the term must be an application for which one of the three
/// divergence rules fires, with evaluation premises discharged by
/// [`eval_fuel`] at budget `fuel` and the divergence premise by the (k-1)-th
/// approximant.
pub fn diverges_approx(t: &Term, k: usize, fuel: Fuel) -> bool {
    if k == 0 {
        return true;
    }
    match t {
        Term::App(fun, arg) => {
            // rule app-l: the function part diverges
            if diverges_approx(fun, k - 1, fuel) {
                return true;
            }
            let v1 = match eval(fun, fuel) {
                EvalOutcome::Value(v) => v,
                _ => return false,
            };
            // rule app-r: the argument diverges
            if diverges_approx(arg, k - 1, fuel) {
                return true;
            }
            let v2 = match eval(arg, fuel) {
                EvalOutcome::Value(v) => v,
                _ => return false,
            };
            // rule app-f: the redex body diverges
            match v1 {
                Term::Abs(x, body) => diverges_approx(&subst_closed(&body, &x, &v2), k - 1, fuel),
                _ => false,
            }
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term does not diverge: no divergence rule fires at `{0}`")]
pub struct NotDiverging(pub String);

/// Embedding contexts accumulated while corecursing into a divergence
/// derivation.
enum Ctx {
    LeftOf(Term),
    RightOf(Term),
}

struct DivergeStream {
    fuel: Fuel,
    pending: VecDeque<Term>,
    target: Option<Term>,
    ctx: Vec<Ctx>,
}

impl DivergeStream {
    fn wrap(&self, t: Term) -> Term {
        let mut t = t;
        for c in self.ctx.iter().rev() {
            t = match c {
                Ctx::LeftOf(b) => Term::app(t, b.clone()),
                Ctx::RightOf(v) => Term::app(v.clone(), t),
            };
        }
        t
    }

    fn push_pending(&mut self, ts: FiniteTrace) {
        for t in ts {
            let wrapped = self.wrap(t);
            self.pending.push_back(wrapped);
        }
    }

    /// Unfold the divergence rule that fires at the current target,
    /// emitting its finite trace segments and corecursing on the
    /// diverging premise. The rule is selected with the traceless
    /// evaluator; traces are only built for premises known to converge.
    fn unfold(&mut self) -> Result<(), NotDiverging> {
        let t = match self.target.take() {
            Some(t) => t,
            None => return Err(NotDiverging(String::new())),
        };
        let (fun, arg) = match t {
            Term::App(fun, arg) => ((*fun).clone(), (*arg).clone()),
            other => return Err(NotDiverging(other.to_string())),
        };
        let v1 = match eval(&fun, self.fuel) {
            EvalOutcome::Value(v) => v,
            EvalOutcome::FuelOut => {
                // rule app-l: corecurse on the function part
                self.ctx.push(Ctx::LeftOf(arg));
                self.target = Some(fun);
                return Ok(());
            }
            EvalOutcome::Wrong(at) => return Err(NotDiverging(at.to_string())),
        };
        let (t1, _) = eval_traced(&fun, self.fuel);
        let v2 = match eval(&arg, self.fuel) {
            EvalOutcome::Value(v) => v,
            EvalOutcome::FuelOut => {
                // rule app-r: emit (t1 a2), then corecurse on the argument
                self.push_pending(app_left(&t1, &arg));
                self.ctx.push(Ctx::RightOf(v1));
                self.target = Some(arg);
                return Ok(());
            }
            EvalOutcome::Wrong(at) => return Err(NotDiverging(at.to_string())),
        };
        match v1 {
            Term::Abs(x, body) => {
                // rule app-f: emit (t1 a2), ((\x. b) t2) and the redex,
                // then corecurse on the body
                let (t2, _) = eval_traced(&arg, self.fuel);
                self.push_pending(app_left(&t1, &arg));
                let lam = Term::Abs(x.clone(), body.clone());
                self.push_pending(app_right(&lam, &t2).expect("abstraction is a value"));
                let redex = Term::app(lam, v2.clone());
                let wrapped = self.wrap(redex);
                self.pending.push_back(wrapped);
                self.target = Some(subst_closed(&body, &x, &v2));
                Ok(())
            }
            v1 => Err(NotDiverging(Term::app(v1, v2).to_string())),
        }
    }

    fn next_term(&mut self) -> Result<Term, NotDiverging> {
        loop {
            if let Some(t) = self.pending.pop_front() {
                return Ok(t);
            }
            self.unfold()?;
        }
    }
}

/// The trace of a diverging evaluation of `t`, assembled corecursively from
/// the traced divergence rules. The first element is computed eagerly;
/// `NotDiverging` is reported if no divergence rule fires, either here or at
/// a later unfolding (in which case the stream stalls).
pub fn diverge_trace_stream(t: &Term, fuel: Fuel) -> Result<LazyTrace, NotDiverging> {
    let mut st = DivergeStream {
        fuel,
        pending: VecDeque::new(),
        target: Some(t.clone()),
        ctx: Vec::new(),
    };
    let first = st.next_term()?;
    let mut first = Some(first);
    Ok(LazyTrace::from_fn(move || match first.take() {
        Some(t) => Some(t),
        None => st.next_term().ok(),
    }))
}

/// The k-th approximant of coevaluation, with a witness strategy for the
/// application rule: premises that evaluate within the budget use their
/// value as witness; premises that run out of fuel use `Omega = \x. omega`;
/// premises that go wrong fail. This is a semi-decision: sound for the CPS
/// coevaluation theorem and the counterexample corpus, incomplete in
/// general.
pub fn coeval_approx(t: &Term, v: &Term, k: usize, fuel: Fuel) -> bool {
    if k == 0 {
        return true;
    }
    match t {
        Term::Var(_) => false,
        Term::Const(_) | Term::Abs(_, _) => t == v,
        Term::App(fun, arg) => {
            let w1 = match coeval_witness(fun, fuel) {
                Some(w) => w,
                None => return false,
            };
            let w2 = match coeval_witness(arg, fuel) {
                Some(w) => w,
                None => return false,
            };
            let (x, body) = match &w1 {
                Term::Abs(x, body) => (x.clone(), (**body).clone()),
                _ => return false,
            };
            coeval_approx(fun, &w1, k - 1, fuel)
                && coeval_approx(arg, &w2, k - 1, fuel)
                && coeval_approx(&subst_closed(&body, &x, &w2), v, k - 1, fuel)
        }
    }
}

fn coeval_witness(t: &Term, fuel: Fuel) -> Option<Term> {
    match eval(t, fuel) {
        EvalOutcome::Value(v) => Some(v),
        EvalOutcome::FuelOut => Some(lookup_macro("Omega").expect("builtin").clone()),
        EvalOutcome::Wrong(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallstep::reduct_stream;
    use crate::syntax::parse;
    use crate::traces::bisim_to_depth;

    fn p(src: &str) -> Term {
        parse(src).unwrap()
    }

    #[test]
    fn constants_evaluate_to_themselves() {
        assert_eq!(eval_fuel(&p("0"), 1).unwrap(), EvalOutcome::Value(p("0")));
    }

    #[test]
    fn omega_runs_out_of_fuel_at_every_budget() {
        for n in [1, 2, 10, 100, 1000] {
            assert_eq!(eval_fuel(&p("@omega"), n).unwrap(), EvalOutcome::FuelOut);
        }
    }

    #[test]
    fn constant_application_goes_wrong() {
        assert_eq!(
            eval_fuel(&p("0 0"), 2).unwrap(),
            EvalOutcome::Wrong(p("0 0"))
        );
        // depth 1 is not enough to see the error
        assert_eq!(eval_fuel(&p("0 0"), 1).unwrap(), EvalOutcome::FuelOut);
    }

    #[test]
    fn open_input_is_rejected() {
        assert_eq!(eval_fuel(&p("x y"), 10), Err(OpenTerm("x".into())));
    }

    #[test]
    fn trace_of_single_beta() {
        let (trace, out) = eval_trace(&p("(\\x. x) 0"), 100).unwrap();
        assert_eq!(trace, vec![p("(\\x. x) 0")]);
        assert_eq!(out, EvalOutcome::Value(p("0")));
    }

    #[test]
    fn trace_of_constant_is_empty() {
        let (trace, out) = eval_trace(&p("7"), 100).unwrap();
        assert!(trace.is_empty());
        assert_eq!(out, EvalOutcome::Value(p("7")));
    }

    #[test]
    fn trace_of_nested_application() {
        let (trace, out) = eval_trace(&p("(\\x. x) ((\\y. y) 1)"), 100).unwrap();
        assert_eq!(trace, vec![p("(\\x. x) ((\\y. y) 1)"), p("(\\x. x) 1")]);
        assert_eq!(out, EvalOutcome::Value(p("1")));
    }

    #[test]
    fn divergence_approximant_examples() {
        for k in [0, 1, 2, 10, 200] {
            assert!(diverges_approx(&p("@omega"), k, 100));
        }
        assert!(!diverges_approx(&p("0"), 1, 100));
        assert!(diverges_approx(&p("@omega (0 0)"), 200, 100));
        assert!(!diverges_approx(&p("(\\x. x) 0"), 200, 100));
        assert!(!diverges_approx(&p("0 0"), 2, 100));
    }

    #[test]
    fn diverge_stream_of_omega() {
        let mut s = diverge_trace_stream(&p("@omega"), 100).unwrap();
        assert_eq!(s.take(5), vec![p("@omega"); 5]);
    }

    #[test]
    fn diverge_stream_matches_reducts_for_const_fun() {
        let t = p("(\\x. 0) @omega");
        let mut s = diverge_trace_stream(&t, 100).unwrap();
        let mut r = reduct_stream(&t);
        assert!(bisim_to_depth(&mut s, &mut r, 50));
    }

    #[test]
    fn diverge_stream_rejects_wrong_terms() {
        assert!(diverge_trace_stream(&p("0 0"), 100).is_err());
        assert!(diverge_trace_stream(&p("5"), 100).is_err());
    }

    #[test]
    fn diverge_stream_stalls_when_body_goes_wrong() {
        // the first unfolding emits the redex, the second discovers 0 0
        let mut s = diverge_trace_stream(&p("(\\x. 0 0) 5"), 100).unwrap();
        assert_eq!(s.take(10), vec![p("(\\x. 0 0) 5")]);
    }

    #[test]
    fn omega_coevaluates_to_everything() {
        for v in ["0", "1", "\\x. x", "@delta", "@Omega"] {
            for k in [1, 5, 50, 200] {
                assert!(coeval_approx(&p("@omega"), &p(v), k, 100));
            }
        }
    }

    #[test]
    fn const_fun_of_omega_coevaluates_only_to_its_value() {
        let t = p("(\\x. 0) @omega");
        assert!(coeval_approx(&t, &p("0"), 200, 100));
        assert!(coeval_approx(&t, &p("1"), 1, 100));
        assert!(!coeval_approx(&t, &p("1"), 2, 100));
        assert!(!coeval_approx(&t, &p("1"), 200, 100));
    }

    #[test]
    fn wrong_argument_blocks_coevaluation() {
        for v in ["0", "1", "\\x. x"] {
            assert!(!coeval_approx(&p("@omega (0 0)"), &p(v), 2, 100));
            assert!(!coeval_approx(&p("@omega (0 0)"), &p(v), 200, 100));
        }
    }
}
