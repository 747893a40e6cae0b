//! Machine-readable suite reports. Field names are stable; verdicts are
//! sorted by term text so reports with the same config are identical.

use std::collections::BTreeMap;

use serde::Serialize;

use super::checks::CheckParams;
use super::termgen::GenConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermClass {
    Converges { value: String, steps: usize },
    DivergesUpTo { fuel: u32 },
    GoesWrong { stuck: String },
    /// Step-limited without the divergence evidence the diverging class
    /// requires; did not occur at desk scale.
    Unresolved { fuel: u32, limit: usize },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub classify_micros: u64,
    pub checks_micros: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub term: String,
    pub class: TermClass,
    pub agreements: BTreeMap<String, bool>,
    pub timings: Timings,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.agreements.values().all(|ok| *ok)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub by_check: BTreeMap<String, Tally>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub count: usize,
    pub max_size: usize,
    pub mode: String,
    pub fuel: u32,
    pub limit: usize,
    pub bisim_depth: usize,
    pub coeval_depth: usize,
    pub denot_depth: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: ReportConfig,
    pub verdicts: Vec<Verdict>,
    pub summary: Summary,
}

impl Report {
    pub(super) fn assemble(cfg: &GenConfig, params: &CheckParams, verdicts: Vec<Verdict>) -> Report {
        let mut by_check: BTreeMap<String, Tally> = BTreeMap::new();
        let mut pass = 0;
        let mut fail = 0;
        for v in &verdicts {
            if v.passed() {
                pass += 1;
            } else {
                fail += 1;
            }
            for (name, ok) in &v.agreements {
                let tally = by_check.entry(name.clone()).or_default();
                if *ok {
                    tally.pass += 1;
                } else {
                    tally.fail += 1;
                }
            }
        }
        Report {
            config: ReportConfig {
                seed: cfg.seed,
                count: cfg.count,
                max_size: cfg.max_size,
                mode: cfg.mode.as_str().to_string(),
                fuel: params.fuel,
                limit: params.limit,
                bisim_depth: params.bisim_depth,
                coeval_depth: params.coeval_depth,
                denot_depth: params.denot_depth,
            },
            verdicts,
            summary: Summary {
                pass,
                fail,
                by_check,
            },
        }
    }
}
