//! The cross-semantics checks evaluated for every classified term. Each
//! check is vacuously true when its precondition does not hold, so every
//! check appears in every verdict.

use crate::bigstep::{
    coeval_approx, diverge_trace_stream, diverges_approx, eval_fuel, eval_trace, Fuel,
    EvalOutcome,
};
use crate::denot::{compute, Result3};
use crate::harness::report::TermClass;
use crate::machine::{
    compile, compile_nop, compile_value, compile_value_with, env_eval, flatten_value,
    machine_step, run, Code, EnvEvalOutcome, Instr, MState, RunEnd, StepResult,
};
use crate::smallstep::{reduce_with_trace, reduct_stream, step, ReductionClass, StepOutcome};
use crate::syntax::{lookup_macro, to_debruijn, DbTerm, Term};
use crate::traces::bisim_to_depth;
use crate::types::{infer, instance_of, TypeEnv, TypeGraph};

/// Budgets and depths for a suite run.
#[derive(Debug, Clone)]
pub struct CheckParams {
    pub fuel: Fuel,
    pub limit: usize,
    pub bisim_depth: usize,
    pub coeval_depth: usize,
    pub denot_depth: u32,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams {
            fuel: 1000,
            limit: 10000,
            bisim_depth: 200,
            coeval_depth: 200,
            denot_depth: 50,
        }
    }
}

/// Everything computed once per term and shared by the checks.
pub struct Checks {
    pub term: Term,
    pub eval: EvalOutcome,
    pub class: ReductionClass,
    pub db: DbTerm,
    pub env_out: EnvEvalOutcome,
    pub diverges: bool,
    pub ty: Option<TypeGraph>,
}

pub(super) fn analyze(t: &Term, params: &CheckParams) -> Checks {
    let eval = eval_fuel(t, params.fuel).expect("closed term");
    let class = crate::smallstep::classify(t, params.limit);
    let db = to_debruijn(t).expect("closed term");
    let env_out = env_eval(&Vec::new(), &db, params.fuel);
    let diverges = diverges_approx(t, params.coeval_depth, params.fuel);
    let ty = infer(&TypeEnv::empty(), t).ok();
    Checks {
        term: t.clone(),
        eval,
        class,
        db,
        env_out,
        diverges,
        ty,
    }
}

impl Checks {
    pub(super) fn term_class(&self, params: &CheckParams) -> TermClass {
        match &self.class {
            ReductionClass::ValueReached(v, steps) => TermClass::Converges {
                value: v.to_string(),
                steps: *steps,
            },
            ReductionClass::Stuck(at, _) => TermClass::GoesWrong {
                stuck: at.to_string(),
            },
            ReductionClass::StepLimit(_, _) => {
                if matches!(self.eval, EvalOutcome::FuelOut) && self.diverges {
                    TermClass::DivergesUpTo { fuel: params.fuel }
                } else {
                    TermClass::Unresolved {
                        fuel: params.fuel,
                        limit: params.limit,
                    }
                }
            }
        }
    }

    fn is_diverging(&self, params: &CheckParams) -> bool {
        matches!(self.term_class(params), TermClass::DivergesUpTo { .. })
    }
}

pub(super) fn run_all(a: &Checks, params: &CheckParams) -> Vec<(&'static str, bool)> {
    vec![
        ("eval_classify_value", eval_classify_value(a)),
        ("eval_classify_wrong", eval_classify_wrong(a)),
        ("denot_eval", denot_eval(a, params)),
        ("denot_monotone", denot_monotone(a, params)),
        ("trace_exact", trace_exact(a, params)),
        ("diverge_bisim", diverge_bisim(a, params)),
        ("eval_coeval", eval_coeval(a, params)),
        ("eval_diverges_exclusive", eval_diverges_exclusive(a)),
        ("env_eval_agree", env_eval_agree(a)),
        ("machine_value", machine_value(a, params)),
        ("machine_diverge", machine_diverge(a, params)),
        ("nop_equiv", nop_equiv(a, params)),
        ("typed_progress", typed_progress(a)),
        ("typed_preservation", typed_preservation(a, params)),
        ("cps_coeval", cps_coeval(a, params)),
    ]
}

/// Big-step evaluation yields a value iff bounded reduction reaches one,
/// and then the values coincide.
fn eval_classify_value(a: &Checks) -> bool {
    match (&a.eval, &a.class) {
        (EvalOutcome::Value(v), ReductionClass::ValueReached(w, _)) => v == w,
        (EvalOutcome::Value(_), _) => false,
        (_, ReductionClass::ValueReached(_, _)) => false,
        _ => true,
    }
}

/// Big-step `Wrong` coincides with small-step stuckness.
fn eval_classify_wrong(a: &Checks) -> bool {
    match (&a.eval, &a.class) {
        (EvalOutcome::Wrong(_), ReductionClass::Stuck(_, _)) => true,
        (EvalOutcome::Wrong(_), _) => false,
        (_, ReductionClass::Stuck(_, _)) => false,
        _ => true,
    }
}

/// The depth-indexed denotation agrees with the fuel evaluator pointwise
/// over the depth range.
fn denot_eval(a: &Checks, params: &CheckParams) -> bool {
    for n in 0..=params.denot_depth {
        let d = compute(n, &a.term);
        let e = eval_fuel(&a.term, n).expect("closed term");
        let agrees = match (&d, &e) {
            (Result3::Bottom, EvalOutcome::FuelOut) => true,
            (Result3::Err, EvalOutcome::Wrong(_)) => true,
            (Result3::Val(v), EvalOutcome::Value(w)) => v == w,
            _ => false,
        };
        if !agrees {
            return false;
        }
    }
    true
}

/// The denotation is monotone in the flat order over the depth range.
fn denot_monotone(a: &Checks, params: &CheckParams) -> bool {
    let results: Vec<Result3> = (0..=params.denot_depth)
        .map(|n| compute(n, &a.term))
        .collect();
    for n in 0..results.len() {
        for m in n..results.len() {
            if !results[n].le(&results[m]) {
                return false;
            }
        }
    }
    true
}

/// For terminating terms the big-step trace equals the small-step trace
/// element for element.
fn trace_exact(a: &Checks, params: &CheckParams) -> bool {
    if !matches!(a.class, ReductionClass::ValueReached(_, _)) {
        return true;
    }
    let (big, out) = eval_trace(&a.term, params.fuel).expect("closed term");
    if !matches!(out, EvalOutcome::Value(_)) {
        return false;
    }
    let (small, _) = reduce_with_trace(&a.term, params.limit);
    big == small
}

/// For diverging terms the corecursive divergence trace is bisimilar to the
/// reduct stream up to the configured depth.
fn diverge_bisim(a: &Checks, params: &CheckParams) -> bool {
    if !a.is_diverging(params) {
        return true;
    }
    match diverge_trace_stream(&a.term, params.fuel) {
        Ok(mut ds) => {
            let mut rs = reduct_stream(&a.term);
            bisim_to_depth(&mut ds, &mut rs, params.bisim_depth)
        }
        Err(_) => false,
    }
}

/// Every evaluation is also a coevaluation.
fn eval_coeval(a: &Checks, params: &CheckParams) -> bool {
    match &a.eval {
        EvalOutcome::Value(v) => coeval_approx(&a.term, v, params.coeval_depth, params.fuel),
        _ => true,
    }
}

/// Evaluation and divergence exclude each other at the tested depths.
fn eval_diverges_exclusive(a: &Checks) -> bool {
    !(matches!(a.eval, EvalOutcome::Value(_)) && a.diverges)
}

/// The substitution-based and the closure-based evaluators agree; closure
/// values are compared through environment flattening.
fn env_eval_agree(a: &Checks) -> bool {
    match (&a.eval, &a.env_out) {
        (EvalOutcome::Value(v), EnvEvalOutcome::Value(w)) => {
            to_debruijn(v).map(|dv| flatten_value(w) == dv).unwrap_or(false)
        }
        (EvalOutcome::Wrong(_), EnvEvalOutcome::Wrong(_)) => true,
        (EvalOutcome::FuelOut, EnvEvalOutcome::FuelOut) => true,
        _ => false,
    }
}

/// Terminating terms: the machine halts on the compiled value of the
/// closure evaluator's result. Wrong terms: the machine never halts cleanly.
fn machine_value(a: &Checks, params: &CheckParams) -> bool {
    match &a.env_out {
        EnvEvalOutcome::Value(w) => {
            let (end, _) = run(compile(&a.db), params.limit);
            match end {
                RunEnd::Halt(state) => {
                    state.env.is_empty() && state.final_value() == Some(&compile_value(w))
                }
                _ => false,
            }
        }
        EnvEvalOutcome::Wrong(_) => {
            let (end, _) = run(compile(&a.db), params.limit);
            !matches!(end, RunEnd::Halt(_))
        }
        EnvEvalOutcome::FuelOut => true,
    }
}

/// Diverging terms keep the machine running for the whole step budget.
fn machine_diverge(a: &Checks, params: &CheckParams) -> bool {
    if !a.is_diverging(params) {
        return true;
    }
    let (end, steps) = run(compile(&a.db), params.limit);
    matches!(end, RunEnd::StepLimit(_)) && steps == params.limit
}

/// The nop-compiled machine reaches the same value, in exactly as many
/// extra steps as base-variant `App` transitions.
fn nop_equiv(a: &Checks, params: &CheckParams) -> bool {
    let w = match &a.env_out {
        EnvEvalOutcome::Value(w) => w,
        _ => return true,
    };
    let (base_end, base_steps, base_apps) = run_counting_apps(compile(&a.db), params.limit);
    let (nop_end, nop_steps, _) = run_counting_apps(compile_nop(&a.db), params.limit);
    match (base_end, nop_end) {
        (RunEnd::Halt(b), RunEnd::Halt(n)) => {
            b.final_value() == Some(&compile_value(w))
                && n.final_value() == Some(&compile_value_with(w, true))
                && nop_steps == base_steps + base_apps
        }
        _ => false,
    }
}

fn run_counting_apps(code: Code, limit: usize) -> (RunEnd, usize, usize) {
    let mut s = MState::new(code);
    let mut steps = 0;
    let mut apps = 0;
    loop {
        if steps == limit {
            return (RunEnd::StepLimit(s), steps, apps);
        }
        let is_app = matches!(s.code.remaining().first(), Some(Instr::App));
        match machine_step(s) {
            StepResult::Next(n) => {
                steps += 1;
                if is_app {
                    apps += 1;
                }
                s = n;
            }
            StepResult::Halt(h) => return (RunEnd::Halt(h), steps, apps),
            StepResult::Crash(c) => return (RunEnd::Crash(c), steps, apps),
        }
    }
}

/// Typable terms never get stuck within the step budget.
fn typed_progress(a: &Checks) -> bool {
    if a.ty.is_none() {
        return true;
    }
    !matches!(a.class, ReductionClass::Stuck(_, _))
}

/// Typable terms stay typable at every reduct, and the original principal
/// type remains valid throughout: it is an instance of every reduct's
/// principal type. (Reduction may generalize the principal type, so
/// demanding equal shapes would be too strong.)
fn typed_preservation(a: &Checks, params: &CheckParams) -> bool {
    let original = match &a.ty {
        Some(ty) => ty,
        None => return true,
    };
    let empty = TypeEnv::empty();
    let mut cur = a.term.clone();
    for _ in 0..params.limit {
        match step(&cur) {
            StepOutcome::NoStep => return true,
            StepOutcome::Stepped(next) => {
                cur = next;
                match infer(&empty, &cur) {
                    Ok(ty) => {
                        if !instance_of(original, &ty) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            }
        }
    }
    true
}

/// Closed CPS terms coevaluate to their value when they terminate and to
/// `Omega` when they diverge.
fn cps_coeval(a: &Checks, params: &CheckParams) -> bool {
    if !a.term.is_cps() {
        return true;
    }
    match a.term_class(params) {
        TermClass::Converges { .. } => match &a.eval {
            EvalOutcome::Value(v) => coeval_approx(&a.term, v, params.coeval_depth, params.fuel),
            _ => false,
        },
        TermClass::DivergesUpTo { .. } => {
            let omega_fn = lookup_macro("Omega").expect("builtin");
            coeval_approx(&a.term, omega_fn, params.coeval_depth, params.fuel)
        }
        TermClass::GoesWrong { .. } | TermClass::Unresolved { .. } => true,
    }
}
