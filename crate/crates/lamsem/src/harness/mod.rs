//! Differential-testing harness: deterministic term generation, per-term
//! verdicts aggregating every cross-semantics check, corpus regressions,
//! and machine-readable reports.

mod checks;
mod report;
mod termgen;

pub use checks::CheckParams;
pub use report::{Report, ReportConfig, Summary, Tally, TermClass, Timings, Verdict};
pub use termgen::{gen_one, gen_terms, GenConfig, GenError, GenMode, Rng};

use std::collections::BTreeMap;
use std::time::Instant;

use crate::syntax::{parse, Term};

/// How a term resolved at the configured budgets, plus the outcome of every
/// enabled cross-check.
pub fn classify_term(t: &Term, fuel: crate::bigstep::Fuel, limit: usize) -> Verdict {
    let params = CheckParams {
        fuel,
        limit,
        ..CheckParams::default()
    };
    classify_term_with(t, &params)
}

/// As [`classify_term`] with explicit depths for the approximant checks.
pub fn classify_term_with(t: &Term, params: &CheckParams) -> Verdict {
    assert!(
        t.is_closed(),
        "classify_term requires a closed term, got `{t}`"
    );
    let started = Instant::now();
    let analysis = checks::analyze(t, params);
    let classify_micros = started.elapsed().as_micros() as u64;

    let started = Instant::now();
    let mut agreements: BTreeMap<String, bool> = BTreeMap::new();
    for (name, ok) in checks::run_all(&analysis, params) {
        agreements.insert(name.to_string(), ok);
    }
    let checks_micros = started.elapsed().as_micros() as u64;

    Verdict {
        term: t.to_string(),
        class: analysis.term_class(params),
        agreements,
        timings: Timings {
            classify_micros,
            checks_micros,
        },
    }
}

/// Generate terms per the config, prepend the corpus regressions, classify
/// everything, and assemble a report sorted by term text.
pub fn run_suite(cfg: &GenConfig, params: &CheckParams) -> Result<Report, GenError> {
    let generated = gen_terms(cfg)?;
    let mut verdicts: Vec<Verdict> = Vec::with_capacity(generated.len());
    for t in corpus_terms().iter().chain(generated.iter()) {
        verdicts.push(classify_term_with(t, params));
    }
    verdicts.sort_by(|a, b| a.term.cmp(&b.term));
    verdicts.dedup_by(|a, b| a.term == b.term);
    Ok(Report::assemble(cfg, params, verdicts))
}

/// The CPS coevaluation suite: the standard suite over CPS-mode generation,
/// where the `cps_coeval` check is live for every term.
pub fn cps_theorem_suite(cfg: &GenConfig, params: &CheckParams) -> Result<Report, GenError> {
    let cfg = GenConfig {
        mode: GenMode::CpsClosed,
        ..cfg.clone()
    };
    run_suite(&cfg, params)
}

const CORPUS: &str = include_str!("../../corpus.txt");

/// Regression terms shipped with the harness; always included in suites.
pub fn corpus_terms() -> Vec<Term> {
    CORPUS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse(l).expect("corpus term parses"))
        .collect()
}

/// Closed values used as coevaluation candidates in counterexample checks.
pub fn corpus_values() -> Vec<Term> {
    ["0", "1", "\\x. x", "@delta", "@Omega"]
        .iter()
        .map(|s| parse(s).expect("corpus value parses"))
        .collect()
}
