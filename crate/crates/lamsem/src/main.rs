//! Command-line entry point for the semantics workbench.

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lamsem::bigstep::{coeval_approx, diverges_approx, eval_fuel, eval_trace, EvalOutcome};
use lamsem::denot::exec_approx;
use lamsem::harness::{self, CheckParams, GenConfig, GenMode};
use lamsem::machine::{compile, compile_nop, disassemble, machine_step, MState, StepResult};
use lamsem::smallstep::{reduce_with_trace, ReductionClass};
use lamsem::syntax::{parse, to_debruijn, Term};
use lamsem::types::{infer, TypeEnv};

#[derive(Parser)]
#[command(name = "lamsem", about = "Semantics workbench for call-by-value lambda-calculus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a term step by step
    Reduce {
        term: String,
        #[arg(long, default_value_t = 10000)]
        limit: usize,
        /// Print every reduct, one per line
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate a term with the fuel-bounded big-step evaluator
    Eval {
        term: String,
        #[arg(long, default_value_t = 1000)]
        fuel: u32,
        /// Print the evaluation trace, one term per line
        #[arg(long)]
        trace: bool,
    },
    /// Check the coevaluation approximant `term co=> value`
    Coeval {
        term: String,
        value: String,
        #[arg(long, default_value_t = 200)]
        depth: usize,
        #[arg(long, default_value_t = 1000)]
        fuel: u32,
    },
    /// Check the divergence approximant
    Diverges {
        term: String,
        #[arg(long, default_value_t = 200)]
        depth: usize,
        #[arg(long, default_value_t = 1000)]
        fuel: u32,
    },
    /// Denotational evaluation at a given depth
    Denot {
        term: String,
        #[arg(long, default_value_t = 1000)]
        depth: u32,
    },
    /// Infer the principal type of a term
    Typecheck { term: String },
    /// Compile a term and print its assembly
    Compile {
        term: String,
        /// Use the nop-prefixed application scheme
        #[arg(long)]
        nop: bool,
    },
    /// Compile a term and run the abstract machine
    Run {
        term: String,
        #[arg(long, default_value_t = 10000)]
        limit: usize,
        #[arg(long)]
        nop: bool,
        /// Print every machine state
        #[arg(long)]
        dump_states: bool,
    },
    /// Generate terms and run every cross-semantics check on each
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 30)]
        max_size: usize,
        /// any-closed, cps-closed or typable
        #[arg(long, default_value = "any-closed")]
        mode: String,
        #[arg(long, default_value_t = 1000)]
        fuel: u32,
        #[arg(long, default_value_t = 10000)]
        limit: usize,
        /// Write the JSON report to this path
        #[arg(long)]
        json: Option<String>,
    },
}

fn parse_term(src: &str) -> Result<Term, String> {
    parse(src).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Reduce { term, limit, trace } => {
            let t = parse_term(&term)?;
            let (steps, class) = reduce_with_trace(&t, limit);
            if trace {
                for s in &steps {
                    println!("{s}");
                }
            }
            match class {
                ReductionClass::ValueReached(v, n) => println!("value {v} after {n} steps"),
                ReductionClass::Stuck(at, n) => println!("stuck at {at} after {n} steps"),
                ReductionClass::StepLimit(last, n) => println!("step limit at {last} after {n} steps"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval { term, fuel, trace } => {
            let t = parse_term(&term)?;
            if trace {
                let (steps, out) = eval_trace(&t, fuel).map_err(|e| e.to_string())?;
                for s in &steps {
                    println!("{s}");
                }
                print_eval_outcome(&out);
            } else {
                let out = eval_fuel(&t, fuel).map_err(|e| e.to_string())?;
                print_eval_outcome(&out);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Coeval {
            term,
            value,
            depth,
            fuel,
        } => {
            let t = parse_term(&term)?;
            let v = parse_term(&value)?;
            let holds = coeval_approx(&t, &v, depth, fuel);
            println!(
                "{} at depth {depth}",
                if holds { "coevaluates" } else { "does not coevaluate" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Diverges { term, depth, fuel } => {
            let t = parse_term(&term)?;
            let holds = diverges_approx(&t, depth, fuel);
            println!(
                "{} at depth {depth}",
                if holds { "diverges" } else { "does not diverge" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Denot { term, depth } => {
            let t = parse_term(&term)?;
            println!("{}", exec_approx(&t, depth));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Typecheck { term } => {
            let t = parse_term(&term)?;
            match infer(&TypeEnv::empty(), &t) {
                Ok(ty) => {
                    println!("{ty}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    println!("ill-typed: {e}");
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Cmd::Compile { term, nop } => {
            let t = parse_term(&term)?;
            let db = to_debruijn(&t).map_err(|e| e.to_string())?;
            let code = if nop { compile_nop(&db) } else { compile(&db) };
            print!("{}", disassemble(&code));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            term,
            limit,
            nop,
            dump_states,
        } => {
            let t = parse_term(&term)?;
            let db = to_debruijn(&t).map_err(|e| e.to_string())?;
            let code = if nop { compile_nop(&db) } else { compile(&db) };
            let mut state = MState::new(code);
            let mut steps = 0usize;
            loop {
                if dump_states {
                    println!("{state}");
                }
                if steps == limit {
                    println!("step limit after {steps} transitions");
                    return Ok(ExitCode::SUCCESS);
                }
                match machine_step(state) {
                    StepResult::Next(next) => {
                        steps += 1;
                        state = next;
                    }
                    StepResult::Halt(h) => {
                        match h.final_value() {
                            Some(v) => println!("halt with {v} after {steps} transitions"),
                            None => println!("halt after {steps} transitions"),
                        }
                        return Ok(ExitCode::SUCCESS);
                    }
                    StepResult::Crash(c) => {
                        println!("crash after {steps} transitions at: {c}");
                        return Ok(ExitCode::SUCCESS);
                    }
                }
            }
        }
        Cmd::Fuzz {
            seed,
            count,
            max_size,
            mode,
            fuel,
            limit,
            json,
        } => {
            let mode = match mode.as_str() {
                "any-closed" => GenMode::AnyClosed,
                "cps-closed" => GenMode::CpsClosed,
                "typable" => GenMode::Typable,
                other => return Err(format!("unknown mode `{other}`")),
            };
            let cfg = GenConfig {
                seed,
                count,
                max_size,
                mode,
            };
            let params = CheckParams {
                fuel,
                limit,
                ..CheckParams::default()
            };
            let report = harness::run_suite(&cfg, &params).map_err(|e| e.to_string())?;
            for (name, tally) in &report.summary.by_check {
                println!("{name}: {} pass, {} fail", tally.pass, tally.fail);
            }
            println!(
                "terms: {} pass, {} fail",
                report.summary.pass, report.summary.fail
            );
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
                fs::write(&path, text).map_err(|e| e.to_string())?;
                println!("report written to {path}");
            }
            if report.summary.fail > 0 {
                Ok(ExitCode::FAILURE)
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn print_eval_outcome(out: &EvalOutcome) {
    match out {
        EvalOutcome::Value(v) => println!("value {v}"),
        EvalOutcome::Wrong(at) => println!("wrong at {at}"),
        EvalOutcome::FuelOut => println!("fuel exhausted"),
    }
}
