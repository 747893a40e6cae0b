//! Deterministic generation of closed terms. Generation is a pure function
//! of the config, independent of platform and library versions, so report
//! seeds stay meaningful over time.

use thiserror::Error;

use crate::syntax::Term;
use crate::types::{infer, TypeEnv};

/// SplitMix64; tiny, seedable and stable.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// Arbitrary closed terms.
    AnyClosed,
    /// Closed terms generated by the CPS grammar (atoms and applications
    /// of CPS terms to atoms).
    CpsClosed,
    /// Closed terms rejection-sampled through type inference.
    Typable,
}

impl GenMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GenMode::AnyClosed => "any-closed",
            GenMode::CpsClosed => "cps-closed",
            GenMode::Typable => "typable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    pub max_size: usize,
    pub mode: GenMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("typable-mode rejection rate exceeded 99%: accepted {accepted} of {attempts}")]
    RejectionRate { accepted: usize, attempts: usize },
}

/// Generate `cfg.count` closed terms of size at most `cfg.max_size`.
pub fn gen_terms(cfg: &GenConfig) -> Result<Vec<Term>, GenError> {
    let mut rng = Rng::new(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count);
    let max_size = cfg.max_size.max(1);
    match cfg.mode {
        GenMode::AnyClosed => {
            for _ in 0..cfg.count {
                let budget = 1 + rng.below(max_size);
                out.push(gen_term(&mut rng, budget, 0));
            }
        }
        GenMode::CpsClosed => {
            for _ in 0..cfg.count {
                let budget = 1 + rng.below(max_size);
                out.push(gen_cps(&mut rng, budget, 0));
            }
        }
        GenMode::Typable => {
            let empty = TypeEnv::empty();
            let mut attempts = 0usize;
            while out.len() < cfg.count {
                attempts += 1;
                let budget = 1 + rng.below(max_size);
                let t = gen_term(&mut rng, budget, 0);
                if infer(&empty, &t).is_ok() {
                    out.push(t);
                }
                if attempts >= 1000 && out.len() * 100 < attempts {
                    return Err(GenError::RejectionRate {
                        accepted: out.len(),
                        attempts,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// One closed term from a bare seed; convenience for property tests.
pub fn gen_one(seed: u64, max_size: usize) -> Term {
    let mut rng = Rng::new(seed);
    let budget = 1 + rng.below(max_size.max(1));
    gen_term(&mut rng, budget, 0)
}

fn binder_name(depth: usize) -> String {
    const POOL: [&str; 10] = ["x", "y", "z", "u", "v", "w", "f", "g", "h", "k"];
    if depth < POOL.len() {
        POOL[depth].to_string()
    } else {
        format!("x{depth}")
    }
}

// Weighted kind selection: App 40, Abs 30, Var 20, Const 10, restricted to
// the kinds the current budget and scope allow.
fn pick_kind(rng: &mut Rng, budget: usize, depth: usize) -> u8 {
    let mut kinds: Vec<(u8, usize)> = vec![(3, 10)]; // Const
    if depth > 0 {
        kinds.push((2, 20)); // Var
    }
    if budget >= 2 {
        kinds.push((1, 30)); // Abs
    }
    if budget >= 3 {
        kinds.push((0, 40)); // App
    }
    let total: usize = kinds.iter().map(|(_, w)| w).sum();
    let mut roll = rng.below(total);
    for (kind, w) in kinds {
        if roll < w {
            return kind;
        }
        roll -= w;
    }
    unreachable!()
}

fn gen_term(rng: &mut Rng, budget: usize, depth: usize) -> Term {
    match pick_kind(rng, budget, depth) {
        0 => {
            let left = 1 + rng.below(budget - 2);
            let right = budget - 1 - left;
            Term::app(
                gen_term(rng, left, depth),
                gen_term(rng, right, depth),
            )
        }
        1 => Term::abs(binder_name(depth), gen_term(rng, budget - 1, depth + 1)),
        2 => Term::var(binder_name(rng.below(depth))),
        _ => Term::constant(rng.below(10) as i64),
    }
}

// The CPS grammar, with variables weighted heavily inside abstraction
// bodies and the self-application atom `\x. x x` as a first-class
// production, so diverging terms are well represented alongside
// terminating and wrong ones.
fn gen_cps(rng: &mut Rng, budget: usize, depth: usize) -> Term {
    if budget >= 3 && rng.below(100) < 50 {
        let left = 1 + rng.below(budget - 2);
        let right = budget - 1 - left;
        Term::app(gen_cps(rng, left, depth), gen_atom(rng, right, depth))
    } else {
        gen_atom(rng, budget, depth)
    }
}

fn gen_atom(rng: &mut Rng, budget: usize, depth: usize) -> Term {
    let mut kinds: Vec<(u8, usize)> = vec![(3, 15)]; // Const
    if depth > 0 {
        kinds.push((2, 45)); // Var
    }
    if budget >= 2 {
        kinds.push((1, 25)); // Abs
    }
    if budget >= 4 {
        kinds.push((4, 25)); // the self-application atom
    }
    let total: usize = kinds.iter().map(|(_, w)| w).sum();
    let mut roll = rng.below(total);
    for (kind, w) in kinds {
        if roll < w {
            return match kind {
                1 => Term::abs(binder_name(depth), gen_cps(rng, budget - 1, depth + 1)),
                2 => Term::var(binder_name(rng.below(depth))),
                4 => {
                    let x = binder_name(depth);
                    Term::abs(
                        x.clone(),
                        Term::app(Term::var(x.clone()), Term::var(x)),
                    )
                }
                _ => Term::constant(rng.below(10) as i64),
            };
        }
        roll -= w;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig {
            seed: 1,
            count: 50,
            max_size: 30,
            mode: GenMode::AnyClosed,
        };
        assert_eq!(gen_terms(&cfg).unwrap(), gen_terms(&cfg).unwrap());
    }

    #[test]
    fn generated_terms_are_closed_and_bounded() {
        let cfg = GenConfig {
            seed: 7,
            count: 500,
            max_size: 30,
            mode: GenMode::AnyClosed,
        };
        for t in gen_terms(&cfg).unwrap() {
            assert!(t.is_closed(), "open term generated: {t}");
            assert!(t.size() <= 30, "oversized term generated: {t}");
        }
    }

    #[test]
    fn cps_mode_generates_closed_cps_terms() {
        let cfg = GenConfig {
            seed: 11,
            count: 500,
            max_size: 30,
            mode: GenMode::CpsClosed,
        };
        for t in gen_terms(&cfg).unwrap() {
            assert!(t.is_closed(), "open CPS term: {t}");
            assert!(t.is_cps(), "non-CPS term from CPS mode: {t}");
        }
    }

    #[test]
    fn typable_mode_generates_typable_terms() {
        let cfg = GenConfig {
            seed: 13,
            count: 200,
            max_size: 25,
            mode: GenMode::Typable,
        };
        let empty = TypeEnv::empty();
        for t in gen_terms(&cfg).unwrap() {
            assert!(infer(&empty, &t).is_ok(), "untypable term: {t}");
        }
    }
}
