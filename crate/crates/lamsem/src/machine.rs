//! Closure-based big-step evaluation over de Bruijn terms, compilation to a
//! five-instruction eval-apply machine, and bounded machine execution.
//!
//! De Bruijn variables are 0-based (index 0 is the innermost binder), while
//! the machine's `Var(n)` operand is 1-based: it fetches the n-th value of
//! the environment counting from 1, as in the transition table. The
//! off-by-one lives in [`compile`], which emits `Var(k + 1)` for de Bruijn
//! index `k`.

use std::fmt;
use std::sync::Arc;

use crate::bigstep::Fuel;
use crate::syntax::DbTerm;

/// Machine instructions. `Nop` only appears in code produced by the
/// nop-compilation variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    /// Push the value of variable number `n` (1-based).
    Var(usize),
    /// Push the constant `c`.
    Const(i64),
    /// Push a closure for the given code.
    Clos(Code),
    /// Perform a function application.
    App,
    /// Return to the calling function.
    Ret,
    /// Do nothing.
    Nop,
}

/// An instruction sequence. Shared so that closures and return frames can
/// reference code without copying it.
pub type Code = Arc<Vec<Instr>>;

/// Machine values: constants and code closures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MValue {
    Const(i64),
    Clos(Code, MEnv),
}

/// Machine environments, most recent value first.
pub type MEnv = Vec<MValue>;

impl fmt::Display for MValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MValue::Const(c) => write!(f, "{c}"),
            MValue::Clos(code, env) => write!(f, "clos({} instrs)[{} values]", code.len(), env.len()),
        }
    }
}

// ---------------------------------------------------------------------------
// Source-level closures and the environment evaluator
// ---------------------------------------------------------------------------

/// Source-level closure values produced by the environment evaluator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SValue {
    Const(i64),
    /// An abstraction body closed over its defining environment.
    Clos(DbTerm, SEnv),
}

/// Source-level environments, most recent value first.
pub type SEnv = Vec<SValue>;

impl fmt::Display for SValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SValue::Const(c) => write!(f, "{c}"),
            SValue::Clos(body, env) => write!(f, "(\\. {body})[{} values]", env.len()),
        }
    }
}

/// Outcome of closure-based evaluation; mirrors the fuel discipline of the
/// substitution-based evaluator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvEvalOutcome {
    Value(SValue),
    /// Out-of-range variable or application of a constant; carries the
    /// offending source subterm.
    Wrong(DbTerm),
    FuelOut,
}

/// Closure-based big-step evaluation of `t` in environment `env` with a
/// fuel budget.
pub fn env_eval(env: &SEnv, t: &DbTerm, fuel: Fuel) -> EnvEvalOutcome {
    if fuel == 0 {
        return EnvEvalOutcome::FuelOut;
    }
    match t {
        DbTerm::Var(k) => match env.get(*k) {
            Some(v) => EnvEvalOutcome::Value(v.clone()),
            None => EnvEvalOutcome::Wrong(t.clone()),
        },
        DbTerm::Const(c) => EnvEvalOutcome::Value(SValue::Const(*c)),
        DbTerm::Abs(body) => EnvEvalOutcome::Value(SValue::Clos((**body).clone(), env.clone())),
        DbTerm::App(fun, arg) => {
            let v1 = match env_eval(env, fun, fuel - 1) {
                EnvEvalOutcome::Value(v) => v,
                other => return other,
            };
            let v2 = match env_eval(env, arg, fuel - 1) {
                EnvEvalOutcome::Value(v) => v,
                other => return other,
            };
            match v1 {
                SValue::Clos(body, mut captured) => {
                    captured.insert(0, v2);
                    env_eval(&captured, &body, fuel - 1)
                }
                SValue::Const(_) => EnvEvalOutcome::Wrong(t.clone()),
            }
        }
    }
}

/// Flatten a closure value back into a closed de Bruijn term by
/// substituting its environment into the body; inverse of evaluation on
/// values, used to compare the two evaluator families.
pub fn flatten_value(v: &SValue) -> DbTerm {
    match v {
        SValue::Const(c) => DbTerm::Const(*c),
        SValue::Clos(body, env) => DbTerm::abs(subst_env(body, 1, env)),
    }
}

fn subst_env(t: &DbTerm, depth: usize, env: &SEnv) -> DbTerm {
    match t {
        DbTerm::Var(k) => {
            if *k < depth {
                t.clone()
            } else {
                // values in well-formed environments are closed, so no shift
                flatten_value(&env[*k - depth])
            }
        }
        DbTerm::Const(_) => t.clone(),
        DbTerm::Abs(body) => DbTerm::abs(subst_env(body, depth + 1, env)),
        DbTerm::App(fun, arg) => DbTerm::app(subst_env(fun, depth, env), subst_env(arg, depth, env)),
    }
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

/// Compile a de Bruijn term to machine code.
pub fn compile(t: &DbTerm) -> Code {
    let mut out = Vec::new();
    emit(t, false, &mut out);
    Arc::new(out)
}

/// Compilation variant that prefixes every application with `Nop`.
pub fn compile_nop(t: &DbTerm) -> Code {
    let mut out = Vec::new();
    emit(t, true, &mut out);
    Arc::new(out)
}

fn emit(t: &DbTerm, nop: bool, out: &mut Vec<Instr>) {
    match t {
        DbTerm::Var(k) => out.push(Instr::Var(k + 1)),
        DbTerm::Const(c) => out.push(Instr::Const(*c)),
        DbTerm::Abs(body) => {
            let mut inner = Vec::new();
            emit(body, nop, &mut inner);
            inner.push(Instr::Ret);
            out.push(Instr::Clos(Arc::new(inner)));
        }
        DbTerm::App(fun, arg) => {
            if nop {
                out.push(Instr::Nop);
            }
            emit(fun, nop, out);
            emit(arg, nop, out);
            out.push(Instr::App);
        }
    }
}

/// Compile a source-level value to a machine value.
pub fn compile_value(v: &SValue) -> MValue {
    compile_value_with(v, false)
}

/// Value compilation matching the given compilation variant.
pub fn compile_value_with(v: &SValue, nop: bool) -> MValue {
    match v {
        SValue::Const(c) => MValue::Const(*c),
        SValue::Clos(body, env) => {
            let mut code = Vec::new();
            emit(body, nop, &mut code);
            code.push(Instr::Ret);
            MValue::Clos(Arc::new(code), compile_env_with(env, nop))
        }
    }
}

/// Compile a source-level environment pointwise.
pub fn compile_env(env: &SEnv) -> MEnv {
    compile_env_with(env, false)
}

pub fn compile_env_with(env: &SEnv, nop: bool) -> MEnv {
    env.iter().map(|v| compile_value_with(v, nop)).collect()
}

// ---------------------------------------------------------------------------
// The machine
// ---------------------------------------------------------------------------

/// A position inside a shared code sequence. Two cursors are equal when the
/// instructions remaining after them are equal.
#[derive(Debug, Clone, Eq)]
pub struct CodePtr {
    code: Code,
    pc: usize,
}

impl CodePtr {
    pub fn new(code: Code) -> CodePtr {
        CodePtr { code, pc: 0 }
    }

    pub fn remaining(&self) -> &[Instr] {
        &self.code[self.pc..]
    }

    fn current(&self) -> Option<&Instr> {
        self.code.get(self.pc)
    }

    fn advanced(&self) -> CodePtr {
        CodePtr {
            code: self.code.clone(),
            pc: self.pc + 1,
        }
    }
}

impl PartialEq for CodePtr {
    fn eq(&self, other: &Self) -> bool {
        self.remaining() == other.remaining()
    }
}

/// Stack slots: intermediate values and return frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Value(MValue),
    Frame(CodePtr, MEnv),
}

/// A machine configuration: code, stack, environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MState {
    pub code: CodePtr,
    pub stack: Vec<Slot>,
    pub env: MEnv,
}

impl MState {
    pub fn new(code: Code) -> MState {
        MState {
            code: CodePtr::new(code),
            stack: Vec::new(),
            env: Vec::new(),
        }
    }

    pub fn with(code: Code, stack: Vec<Slot>, env: MEnv) -> MState {
        MState {
            code: CodePtr::new(code),
            stack,
            env,
        }
    }

    /// The single value on the stack of a cleanly halted state, if any.
    pub fn final_value(&self) -> Option<&MValue> {
        match self.stack.as_slice() {
            [Slot::Value(v)] => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for MState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "code:")?;
        for i in self.code.remaining() {
            match i {
                Instr::Var(n) => write!(f, " Var({n})")?,
                Instr::Const(c) => write!(f, " Const({c})")?,
                Instr::Clos(c) => write!(f, " Clos({} instrs)", c.len())?,
                Instr::App => write!(f, " App")?,
                Instr::Ret => write!(f, " Ret")?,
                Instr::Nop => write!(f, " Nop")?,
            }
        }
        write!(f, " | stack:")?;
        for s in &self.stack {
            match s {
                Slot::Value(v) => write!(f, " {v}")?,
                Slot::Frame(c, e) => write!(f, " frame({} instrs, {} values)", c.remaining().len(), e.len())?,
            }
        }
        write!(f, " | env:")?;
        for v in &self.env {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

/// Result of one machine transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepResult {
    Next(MState),
    /// The code is exhausted.
    Halt(MState),
    /// No transition row matches; carries the offending state.
    Crash(MState),
}

/// One transition, dispatched on the first instruction. A crash returns
/// the offending state unchanged.
pub fn machine_step(s: MState) -> StepResult {
    let instr = match s.code.current() {
        Some(i) => i.clone(),
        None => return StepResult::Halt(s),
    };
    match instr {
        Instr::Var(n) => {
            if n >= 1 && n <= s.env.len() {
                let code = s.code.advanced();
                let mut stack = s.stack;
                stack.push(Slot::Value(s.env[n - 1].clone()));
                StepResult::Next(MState {
                    code,
                    stack,
                    env: s.env,
                })
            } else {
                StepResult::Crash(s)
            }
        }
        Instr::Const(c) => {
            let code = s.code.advanced();
            let mut stack = s.stack;
            stack.push(Slot::Value(MValue::Const(c)));
            StepResult::Next(MState {
                code,
                stack,
                env: s.env,
            })
        }
        Instr::Clos(body) => {
            let code = s.code.advanced();
            let mut stack = s.stack;
            stack.push(Slot::Value(MValue::Clos(body, s.env.clone())));
            StepResult::Next(MState {
                code,
                stack,
                env: s.env,
            })
        }
        Instr::App => match s.stack.as_slice() {
            [.., Slot::Value(MValue::Clos(_, _)), Slot::Value(_)] => {
                let ret_code = s.code.advanced();
                let mut stack = s.stack;
                let Some(Slot::Value(v)) = stack.pop() else {
                    unreachable!()
                };
                let Some(Slot::Value(MValue::Clos(body, mut captured))) = stack.pop() else {
                    unreachable!()
                };
                stack.push(Slot::Frame(ret_code, s.env));
                captured.insert(0, v);
                StepResult::Next(MState {
                    code: CodePtr::new(body),
                    stack,
                    env: captured,
                })
            }
            _ => StepResult::Crash(s),
        },
        Instr::Ret => match s.stack.as_slice() {
            [.., Slot::Frame(_, _), Slot::Value(_)] => {
                let mut stack = s.stack;
                let Some(Slot::Value(v)) = stack.pop() else {
                    unreachable!()
                };
                let Some(Slot::Frame(ret_code, ret_env)) = stack.pop() else {
                    unreachable!()
                };
                stack.push(Slot::Value(v));
                StepResult::Next(MState {
                    code: ret_code,
                    stack,
                    env: ret_env,
                })
            }
            _ => StepResult::Crash(s),
        },
        Instr::Nop => StepResult::Next(MState {
            code: s.code.advanced(),
            stack: s.stack,
            env: s.env,
        }),
    }
}

/// Final state of a bounded run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunEnd {
    Halt(MState),
    Crash(MState),
    StepLimit(MState),
}

/// Run the machine from `(code; empty stack; empty env)` for at most
/// `limit` transitions. Returns the end state and the number of
/// transitions performed.
pub fn run(code: Code, limit: usize) -> (RunEnd, usize) {
    run_from(MState::new(code), limit)
}

/// Run the machine from an arbitrary state.
pub fn run_from(state: MState, limit: usize) -> (RunEnd, usize) {
    let mut s = state;
    let mut steps = 0;
    loop {
        if steps == limit {
            return (RunEnd::StepLimit(s), steps);
        }
        match machine_step(s) {
            StepResult::Next(n) => {
                steps += 1;
                s = n;
            }
            StepResult::Halt(h) => return (RunEnd::Halt(h), steps),
            StepResult::Crash(c) => return (RunEnd::Crash(c), steps),
        }
    }
}

/// Step from `state` until `target` is reached, returning the number of
/// transitions taken (at least one). Fails with the actual end if the
/// machine halts, crashes or exceeds the limit first.
pub fn run_to_state(state: MState, target: &MState, limit: usize) -> Result<usize, RunEnd> {
    let mut s = state;
    let mut steps = 0;
    loop {
        if steps == limit {
            return Err(RunEnd::StepLimit(s));
        }
        match machine_step(s) {
            StepResult::Next(n) => {
                steps += 1;
                if &n == target {
                    return Ok(steps);
                }
                s = n;
            }
            StepResult::Halt(h) => return Err(RunEnd::Halt(h)),
            StepResult::Crash(c) => return Err(RunEnd::Crash(c)),
        }
    }
}

/// Render code as assembly, one instruction per line, nested closure
/// bodies indented.
pub fn disassemble(code: &[Instr]) -> String {
    let mut out = String::new();
    render(code, 0, &mut out);
    out
}

fn render(code: &[Instr], indent: usize, out: &mut String) {
    for i in code {
        for _ in 0..indent {
            out.push_str("  ");
        }
        match i {
            Instr::Var(n) => out.push_str(&format!("Var {n}\n")),
            Instr::Const(c) => out.push_str(&format!("Const {c}\n")),
            Instr::Clos(body) => {
                out.push_str("Clos:\n");
                render(body, indent + 1, out);
            }
            Instr::App => out.push_str("App\n"),
            Instr::Ret => out.push_str("Ret\n"),
            Instr::Nop => out.push_str("Nop\n"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, to_debruijn};

    fn db(src: &str) -> DbTerm {
        to_debruijn(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn env_eval_examples() {
        let id = db("\\x. x");
        assert_eq!(
            env_eval(&Vec::new(), &id, 1),
            EnvEvalOutcome::Value(SValue::Clos(DbTerm::Var(0), Vec::new()))
        );
        assert_eq!(
            env_eval(&Vec::new(), &db("@omega"), 1000),
            EnvEvalOutcome::FuelOut
        );
        assert_eq!(
            env_eval(&Vec::new(), &db("(\\x. x) 7"), 10),
            EnvEvalOutcome::Value(SValue::Const(7))
        );
        assert!(matches!(
            env_eval(&Vec::new(), &db("0 0"), 10),
            EnvEvalOutcome::Wrong(_)
        ));
        // out-of-range index
        assert!(matches!(
            env_eval(&Vec::new(), &DbTerm::Var(0), 5),
            EnvEvalOutcome::Wrong(_)
        ));
    }

    #[test]
    fn compile_examples() {
        assert_eq!(*compile(&db("7")), vec![Instr::Const(7)]);
        assert_eq!(
            *compile(&db("\\x. x")),
            vec![Instr::Clos(Arc::new(vec![Instr::Var(1), Instr::Ret]))]
        );
        assert_eq!(
            *compile(&db("(\\x. x) 7")),
            vec![
                Instr::Clos(Arc::new(vec![Instr::Var(1), Instr::Ret])),
                Instr::Const(7),
                Instr::App
            ]
        );
    }

    #[test]
    fn compile_nop_prefixes_applications() {
        assert_eq!(
            *compile_nop(&db("(\\x. x) 7")),
            vec![
                Instr::Nop,
                Instr::Clos(Arc::new(vec![Instr::Var(1), Instr::Ret])),
                Instr::Const(7),
                Instr::App
            ]
        );
    }

    #[test]
    fn value_compilation() {
        assert_eq!(compile_value(&SValue::Const(3)), MValue::Const(3));
        assert_eq!(
            compile_value(&SValue::Clos(DbTerm::Var(0), Vec::new())),
            MValue::Clos(Arc::new(vec![Instr::Var(1), Instr::Ret]), Vec::new())
        );
        assert_eq!(compile_env(&Vec::new()), Vec::<MValue>::new());
    }

    #[test]
    fn identity_applied_to_constant_runs_in_five_steps() {
        let (end, steps) = run(compile(&db("(\\x. x) 7")), 100);
        assert_eq!(steps, 5);
        match end {
            RunEnd::Halt(state) => {
                assert_eq!(state.final_value(), Some(&MValue::Const(7)));
                assert!(state.env.is_empty());
            }
            other => panic!("expected halt, got {other:?}"),
        }
    }

    #[test]
    fn omega_never_halts() {
        let (end, steps) = run(compile(&db("@omega")), 10000);
        assert_eq!(steps, 10000);
        assert!(matches!(end, RunEnd::StepLimit(_)));
    }

    #[test]
    fn wrong_term_crashes() {
        let (end, steps) = run(compile(&db("0 0")), 100);
        assert!(matches!(end, RunEnd::Crash(_)));
        assert_eq!(steps, 2);
    }

    #[test]
    fn ret_on_empty_stack_crashes() {
        let s = MState::new(Arc::new(vec![Instr::Ret]));
        assert!(matches!(machine_step(s), StepResult::Crash(_)));
    }

    #[test]
    fn var_zero_operand_crashes() {
        let s = MState::with(
            Arc::new(vec![Instr::Var(0)]),
            Vec::new(),
            vec![MValue::Const(1)],
        );
        assert!(matches!(machine_step(s), StepResult::Crash(_)));
    }

    #[test]
    fn flatten_closure_with_captured_env() {
        // (\x. \y. x) 5 evaluates to a closure whose flattening is \. 5
        let t = db("(\\x. \\y. x) 5");
        match env_eval(&Vec::new(), &t, 10) {
            EnvEvalOutcome::Value(v) => {
                assert_eq!(flatten_value(&v), DbTerm::abs(DbTerm::Const(5)));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn disassembly_indents_closures() {
        let text = disassemble(&compile(&db("(\\x. x) 7")));
        assert_eq!(text, "Clos:\n  Var 1\n  Ret\nConst 7\nApp\n");
    }
}
