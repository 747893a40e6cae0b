//! Property tests for the invariants the modules promise, driven by the
//! deterministic term generator.

use proptest::prelude::*;

use lamsem::bigstep::{coeval_approx, diverges_approx, eval_fuel, eval_trace, EvalOutcome};
use lamsem::denot::{compute, Result3};
use lamsem::harness::{gen_one, gen_terms, GenConfig, GenMode, Rng};
use lamsem::machine::{
    compile, compile_value, env_eval, run_to_state, CodePtr, EnvEvalOutcome, Instr, MState,
    MValue, Slot,
};
use lamsem::smallstep::{classify, reduce_with_trace, reduct_stream, step, ReductionClass, StepOutcome};
use lamsem::syntax::{parse, subst, to_debruijn, Term};
use lamsem::traces::{app_left, app_right, bisim_to_depth, concat};
use lamsem::types::{check_progress, infer, TypeEnv};

fn gen_cps_one(seed: u64, max_size: usize) -> Term {
    gen_terms(&GenConfig {
        seed,
        count: 1,
        max_size,
        mode: GenMode::CpsClosed,
    })
    .unwrap()
    .remove(0)
}

proptest! {
    #[test]
    fn print_parse_roundtrip(seed in any::<u64>()) {
        let t = gen_one(seed, 40);
        prop_assert_eq!(parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn subst_into_closed_term_is_identity(seed in any::<u64>()) {
        let t = gen_one(seed, 30);
        prop_assert_eq!(subst(&t, "q_fresh", &Term::constant(0)).unwrap(), t);
    }

    #[test]
    fn subst_preserves_closedness(seed in any::<u64>()) {
        let t = gen_one(seed, 20);
        let v = gen_one(seed.wrapping_add(1), 10);
        // open the term by applying a free variable to it
        let open = Term::app(Term::var("q"), t);
        let r = subst(&open, "q", &Term::abs("w", v)).unwrap();
        prop_assert!(r.is_closed());
    }

    #[test]
    fn cps_terms_stable_under_atom_substitution(seed in any::<u64>()) {
        let t = gen_cps_one(seed, 25);
        if let Term::Abs(x, body) = &t {
            // the body is a CPS term with at most `x` free
            let atom = Term::abs("q", Term::var("q"));
            prop_assert!(atom.is_atom());
            let r = subst(body, x, &atom).unwrap();
            prop_assert!(r.is_cps(), "not CPS after substitution: {r}");
        }
    }

    #[test]
    fn left_app_height_of_application(seed in any::<u64>()) {
        let a = gen_one(seed, 15);
        let b = gen_one(seed.wrapping_add(1), 15);
        let expected = a.left_app_height() + 1;
        prop_assert_eq!(Term::app(a, b).left_app_height(), expected);
    }

    #[test]
    fn at_most_one_reduction_rule_matches(seed in any::<u64>()) {
        let t = gen_one(seed, 30);
        if let Term::App(fun, arg) = &t {
            let beta = matches!(&**fun, Term::Abs(_, _)) && arg.is_value();
            let app_l = matches!(step(fun), StepOutcome::Stepped(_));
            let app_r = fun.is_value() && matches!(step(arg), StepOutcome::Stepped(_));
            let fired = usize::from(beta) + usize::from(app_l) + usize::from(app_r);
            prop_assert!(fired <= 1, "rules overlap on {t}");
            let steps = matches!(step(&t), StepOutcome::Stepped(_));
            prop_assert_eq!(steps, fired == 1);
        }
    }

    #[test]
    fn classify_respects_value_and_stuck_shapes(seed in any::<u64>()) {
        let t = gen_one(seed, 30);
        match classify(&t, 300) {
            ReductionClass::ValueReached(v, _) => prop_assert!(v.is_value()),
            ReductionClass::Stuck(at, _) => {
                prop_assert!(!at.is_value());
                prop_assert_eq!(step(&at), StepOutcome::NoStep);
            }
            ReductionClass::StepLimit(_, n) => prop_assert_eq!(n, 300),
        }
    }

    #[test]
    fn trace_length_equals_step_count(seed in any::<u64>()) {
        let t = gen_one(seed, 30);
        let (trace, class) = reduce_with_trace(&t, 300);
        let steps = match class {
            ReductionClass::ValueReached(_, n)
            | ReductionClass::Stuck(_, n)
            | ReductionClass::StepLimit(_, n) => n,
        };
        prop_assert_eq!(trace.len(), steps);
    }

    #[test]
    fn reduct_stream_prefix_is_trace_plus_tail(seed in any::<u64>(), n in 0usize..40) {
        let t = gen_one(seed, 25);
        let (trace, class) = reduce_with_trace(&t, n);
        let last = match &class {
            ReductionClass::ValueReached(v, _) => v.clone(),
            ReductionClass::Stuck(at, _) => at.clone(),
            ReductionClass::StepLimit(at, _) => at.clone(),
        };
        let prefix = reduct_stream(&t).take(n + 1);
        for (i, got) in prefix.iter().enumerate() {
            let expected = trace.get(i).unwrap_or(&last);
            prop_assert_eq!(got, expected, "mismatch at {}", i);
        }
    }

    #[test]
    fn concat_is_associative_with_neutral_empty(sa in any::<u64>(), sb in any::<u64>(), sc in any::<u64>()) {
        let t = vec![gen_one(sa, 10), gen_one(sa.wrapping_add(9), 10)];
        let u = vec![gen_one(sb, 10)];
        let w = vec![gen_one(sc, 10), gen_one(sc.wrapping_add(9), 10)];
        prop_assert_eq!(concat(&concat(&t, &u), &w), concat(&t, &concat(&u, &w)));
        prop_assert_eq!(concat(&Vec::new(), &t), t.clone());
        prop_assert_eq!(concat(&t, &Vec::new()), t);
    }

    #[test]
    fn application_commutes_with_concat(sa in any::<u64>(), sb in any::<u64>()) {
        let t = vec![gen_one(sa, 10), gen_one(sa.wrapping_add(9), 10)];
        let u = vec![gen_one(sb, 10)];
        let b = gen_one(sb.wrapping_add(9), 10);
        prop_assert_eq!(
            app_left(&concat(&t, &u), &b),
            concat(&app_left(&t, &b), &app_left(&u, &b))
        );
        let v = Term::abs("x", Term::var("x"));
        prop_assert_eq!(
            app_right(&v, &concat(&t, &u)).unwrap(),
            concat(&app_right(&v, &t).unwrap(), &app_right(&v, &u).unwrap())
        );
    }

    #[test]
    fn bisim_is_downward_monotone(seed in any::<u64>(), k in 1usize..60) {
        let t = gen_one(seed, 20);
        let hold = bisim_to_depth(&mut reduct_stream(&t), &mut reduct_stream(&t), k);
        prop_assert!(hold);
        prop_assert!(bisim_to_depth(&mut reduct_stream(&t), &mut reduct_stream(&t), k / 2));
    }

    #[test]
    fn fuel_is_monotone_once_decided(seed in any::<u64>(), n in 0u32..60, extra in 0u32..40) {
        let t = gen_one(seed, 25);
        let at_n = eval_fuel(&t, n).unwrap();
        if at_n != EvalOutcome::FuelOut {
            prop_assert_eq!(eval_fuel(&t, n + extra).unwrap(), at_n);
        }
    }

    #[test]
    fn evaluation_matches_bounded_reduction(seed in any::<u64>()) {
        let t = gen_one(seed, 25);
        let e = eval_fuel(&t, 200).unwrap();
        let c = classify(&t, 2000);
        match (&e, &c) {
            (EvalOutcome::Value(v), ReductionClass::ValueReached(w, _)) => prop_assert_eq!(v, w),
            (EvalOutcome::Value(_), _) => prop_assert!(false, "eval value but reduction did not reach one"),
            (_, ReductionClass::ValueReached(_, _)) => {
                prop_assert!(matches!(e, EvalOutcome::FuelOut), "reduction reached a value but eval went wrong")
            }
            _ => {}
        }
    }

    #[test]
    fn terminating_traces_agree(seed in any::<u64>()) {
        let t = gen_one(seed, 25);
        if let ReductionClass::ValueReached(_, _) = classify(&t, 2000) {
            let (big, out) = eval_trace(&t, 300).unwrap();
            if matches!(out, EvalOutcome::Value(_)) {
                let (small, _) = reduce_with_trace(&t, 2000);
                prop_assert_eq!(big, small);
            }
        }
    }

    #[test]
    fn every_evaluation_coevaluates(seed in any::<u64>()) {
        let t = gen_one(seed, 25);
        if let EvalOutcome::Value(v) = eval_fuel(&t, 200).unwrap() {
            for k in [1, 10, 60] {
                prop_assert!(coeval_approx(&t, &v, k, 200));
            }
        }
    }

    #[test]
    fn coeval_is_downward_monotone(seed in any::<u64>(), k in 1usize..50) {
        let t = gen_one(seed, 20);
        let v = Term::constant(0);
        if coeval_approx(&t, &v, k, 100) {
            prop_assert!(coeval_approx(&t, &v, k / 2, 100));
        }
    }

    #[test]
    fn diverges_is_downward_monotone(seed in any::<u64>(), k in 1usize..50) {
        let t = gen_one(seed, 20);
        if diverges_approx(&t, k, 100) {
            prop_assert!(diverges_approx(&t, k / 2, 100));
        }
    }

    #[test]
    fn denotation_is_monotone_and_matches_eval(seed in any::<u64>()) {
        let t = gen_one(seed, 25);
        let results: Vec<Result3> = (0..=40).map(|n| compute(n, &t)).collect();
        for n in 0..results.len() {
            for m in n..results.len() {
                prop_assert!(results[n].le(&results[m]), "not monotone at {} <= {}", n, m);
            }
        }
        for (n, r) in results.iter().enumerate() {
            let e = eval_fuel(&t, n as u32).unwrap();
            let ok = matches!(
                (r, &e),
                (Result3::Bottom, EvalOutcome::FuelOut)
                    | (Result3::Err, EvalOutcome::Wrong(_))
            ) || matches!((r, &e), (Result3::Val(v), EvalOutcome::Value(w)) if v == w);
            prop_assert!(ok, "denotation and eval disagree at depth {}", n);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compiled_code_reaches_the_expected_state(seed in any::<u64>()) {
        let t = gen_one(seed, 25);
        let db = to_debruijn(&t).unwrap();
        let v = match env_eval(&Vec::new(), &db, 300) {
            EnvEvalOutcome::Value(v) => v,
            _ => return Ok(()),
        };
        let mut rng = Rng::new(seed.wrapping_mul(3));
        let (suffix, stack) = random_continuation(&mut rng);
        let mut code = (*compile(&db)).clone();
        code.extend(suffix.iter().cloned());
        let start = MState::with(code.into(), stack.clone(), Vec::new());
        let mut target_stack = stack;
        target_stack.push(Slot::Value(compile_value(&v)));
        let target = MState {
            code: CodePtr::new(suffix.into()),
            stack: target_stack,
            env: Vec::new(),
        };
        prop_assert!(run_to_state(start, &target, 100000).is_ok());
    }

    #[test]
    fn typable_terms_make_progress(seed in any::<u64>()) {
        let t = gen_one(seed, 25);
        if infer(&TypeEnv::empty(), &t).is_ok() {
            prop_assert!(check_progress(&t));
            prop_assert!(!matches!(classify(&t, 2000), ReductionClass::Stuck(_, _)));
        }
    }
}

fn random_continuation(rng: &mut Rng) -> (Vec<Instr>, Vec<Slot>) {
    let mut suffix = Vec::new();
    for _ in 0..rng.below(4) {
        suffix.push(match rng.below(4) {
            0 => Instr::Const(rng.below(100) as i64),
            1 => Instr::Var(1 + rng.below(3)),
            2 => Instr::App,
            _ => Instr::Ret,
        });
    }
    let mut stack = Vec::new();
    for _ in 0..rng.below(4) {
        stack.push(match rng.below(3) {
            0 => Slot::Value(MValue::Const(rng.below(100) as i64)),
            1 => Slot::Value(MValue::Clos(
                vec![Instr::Var(1), Instr::Ret].into(),
                vec![MValue::Const(7)],
            )),
            _ => Slot::Frame(
                CodePtr::new(vec![Instr::Const(9)].into()),
                vec![MValue::Const(1)],
            ),
        });
    }
    (suffix, stack)
}
