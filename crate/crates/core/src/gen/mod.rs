//! Hard and diverse formula datasets.
//!
//! A formula is hard when few strings of the horizon length satisfy it. Diversity comes
//! from chains of mutations where each mutant may accept only a small share of the
//! strings its predecessor accepts.

mod config;
mod io;

use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::{compile, count_accepted, AcceptedSampler, Dfa, LetterSpace};
use crate::ltl::{format, sample_formula_with_size, stats, Alphabet, Formula, FormulaStats, OperatorSet, PropId};

pub use config::{tree_count, GenConfig, PriorShape, SplitSpec, GEN_KEYS};
pub use io::{
    dataset_stats, read_formula_file, stats_table, write_formula_file, ColumnStats, DatasetError, SplitStats,
    SPLIT_FILES,
};

/// One accepted formula with its automaton and size measures.
#[derive(Debug, Clone)]
pub struct Entry {
    pub formula: Formula,
    /// Canonical rendering; the dedup key.
    pub text: String,
    pub dfa: Dfa,
    pub stats: FormulaStats,
}

impl Entry {
    pub fn new(formula: Formula, dfa: Dfa, alphabet: &Alphabet) -> Self {
        let text = format(&formula, alphabet);
        let stats = stats(&formula, &dfa);
        Self { formula, text, dfa, stats }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub name: String,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: GenConfig,
    pub alphabet: Alphabet,
    pub splits: Vec<Split>,
}

impl Dataset {
    pub fn split(&self, name: &str) -> Option<&Split> {
        self.splits.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error(
        "threshold {threshold} is below the smallest positive acceptance ratio 1/{letters}^{horizon}; no formula can pass"
    )]
    Infeasible { threshold: String, letters: u64, horizon: usize },
    #[error("split {split}: only {produced} of {wanted} formulas after {chains} chains")]
    Exhausted { split: String, produced: usize, wanted: usize, chains: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// True iff `f` accepts at least one string of length `n` and at most `threshold` of them.
pub fn hardness_filter(f: &Formula, n: usize, space: LetterSpace, threshold: &BigRational) -> bool {
    hard_dfa(f, n, space, threshold).is_some()
}

fn hard_dfa(f: &Formula, n: usize, space: LetterSpace, threshold: &BigRational) -> Option<Dfa> {
    let dfa = compile(f, space).ok()?;
    let counted = count_accepted(&dfa, n);
    (!counted.accepted_at_n.is_zero() && counted.ratio <= *threshold).then_some(dfa)
}

/// Number of `k` uniform accepted strings of `base` that `candidate` also accepts.
pub fn overlap_hits<R: Rng + ?Sized>(rng: &mut R, base: &AcceptedSampler<'_>, candidate: &Dfa, k: usize) -> usize {
    (0..k).filter(|_| candidate.accepts(&base.sample(rng))).count()
}

/// Whether `hits` of `k` stays within the allowed overlap.
pub fn overlap_ok(hits: usize, k: usize, max_overlap: &BigRational) -> bool {
    BigRational::new(BigUint::from(hits).into(), BigUint::from(k.max(1)).into()) <= *max_overlap
}

/// Smallest positive acceptance ratio: one string out of `letters^n`.
fn threshold_reachable(cfg: &GenConfig) -> bool {
    let total = BigUint::from(cfg.space().letter_count()).pow(cfg.horizon as u32);
    cfg.threshold.clone() * BigRational::from_integer(total.into()) >= BigRational::one()
}

/// Mutates `base` until a hard candidate with low overlap appears, staying within
/// `range` elements. `None` after `cfg.mutation_attempts` failures.
pub fn diversity_step<R: Rng + ?Sized>(
    rng: &mut R,
    base: &Formula,
    cfg: &GenConfig,
    range: (usize, usize),
) -> Option<(Formula, Dfa)> {
    let space = cfg.space();
    let base_dfa = compile(base, space).ok()?;
    let sampler = AcceptedSampler::new(&base_dfa, cfg.horizon).ok()?;
    let props = cfg.props();
    let ops = OperatorSet::with_negation(cfg.negation);
    let total = base.node_count();
    for _ in 0..cfg.mutation_attempts {
        let site = rng.gen_range(0..total);
        let rest = total - base.subtree(site).expect("site in range").node_count();
        let lo = range.0.saturating_sub(rest).max(1);
        let hi = range.1.saturating_sub(rest).min(crate::ltl::MAX_ELEMENTS);
        if range.1 < rest + 1 || lo > hi {
            continue;
        }
        let size = cfg.element_prior(lo, hi).sample(rng);
        let replacement = sample_formula_with_size(rng, size, &props, &ops);
        let candidate = base.replace_subtree(site, replacement).expect("site in range");
        if candidate == *base {
            continue;
        }
        let Some(dfa) = hard_dfa(&candidate, cfg.horizon, space, &cfg.threshold) else { continue };
        let hits = overlap_hits(rng, &sampler, &dfa, cfg.diversity_samples);
        if overlap_ok(hits, cfg.diversity_samples, &cfg.max_overlap) {
            return Some((candidate, dfa));
        }
    }
    None
}

fn fresh_base<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig, spec: &SplitSpec) -> Option<(Formula, Dfa)> {
    let props = cfg.props();
    let ops = OperatorSet::with_negation(cfg.negation);
    let space = cfg.space();
    let prior = cfg.element_prior(spec.min_elements, spec.max_elements);
    for _ in 0..cfg.fresh_attempts {
        let size = prior.sample(rng);
        let f = sample_formula_with_size(rng, size, &props, &ops);
        if let Some(dfa) = hard_dfa(&f, cfg.horizon, space, &cfg.threshold) {
            return Some((f, dfa));
        }
    }
    None
}

const MAX_CHAIN: usize = 64;

/// A fresh hard formula followed by its mutants; each mutant becomes the next base with
/// probability `chain_probability`.
fn run_chain<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig, spec: &SplitSpec) -> Vec<(Formula, Dfa)> {
    let mut out = Vec::new();
    let Some(first) = fresh_base(rng, cfg, spec) else { return out };
    out.push(first);
    while out.len() < MAX_CHAIN {
        let base = &out.last().expect("non-empty").0;
        match diversity_step(rng, base, cfg, (spec.min_elements, spec.max_elements)) {
            Some(next) => out.push(next),
            None => break,
        }
        if !rng.gen_bool(cfg.chain_probability) {
            break;
        }
    }
    out
}

/// Random stream for chain `chain` of split `split`.
fn chain_rng(seed: u64, split: usize, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((split as u64) << 48) | chain as u64);
    rng
}

/// Fills every split. Chains run in parallel batches and are merged in chain order, so the
/// result depends only on the configuration.
pub fn generate_dataset(cfg: &GenConfig) -> Result<Dataset, GenError> {
    cfg.validate().map_err(GenError::Config)?;
    if !threshold_reachable(cfg) {
        return Err(GenError::Infeasible {
            threshold: crate::meta::format_rational(&cfg.threshold),
            letters: cfg.space().letter_count(),
            horizon: cfg.horizon,
        });
    }
    let alphabet = cfg.alphabet();
    let mut seen: HashSet<String> = HashSet::new();
    let mut splits = Vec::with_capacity(cfg.splits.len());
    for (si, spec) in cfg.splits.iter().enumerate() {
        let mut entries: Vec<Entry> = Vec::with_capacity(spec.size);
        let mut chains = 0usize;
        let cap = spec.size.max(1) * cfg.max_chains_per_formula;
        while entries.len() < spec.size {
            if chains >= cap {
                return Err(GenError::Exhausted {
                    split: spec.name.clone(),
                    produced: entries.len(),
                    wanted: spec.size,
                    chains,
                });
            }
            let batch: Vec<usize> = (chains..(chains + cfg.batch).min(cap)).collect();
            chains += batch.len();
            let results: Vec<Vec<(Formula, Dfa)>> = batch
                .par_iter()
                .map(|&c| run_chain(&mut chain_rng(cfg.seed, si, c), cfg, spec))
                .collect();
            for (f, dfa) in results.into_iter().flatten() {
                if entries.len() == spec.size {
                    break;
                }
                let entry = Entry::new(f, dfa, &alphabet);
                if seen.insert(entry.text.clone()) {
                    entries.push(entry);
                }
            }
        }
        splits.push(Split { name: spec.name.clone(), entries });
    }
    Ok(Dataset { config: cfg.clone(), alphabet, splits })
}

/// Ordering key: node count, then depth, then canonical text.
pub fn curriculum_key(e: &Entry) -> (usize, usize, &str) {
    (e.stats.node_count, e.stats.depth, e.text.as_str())
}

/// Training formulas sorted shortest first.
pub fn curriculum_sort(entries: &[Entry]) -> Vec<Entry> {
    let mut out = entries.to_vec();
    out.sort_by(|a, b| curriculum_key(a).cmp(&curriculum_key(b)));
    out
}

/// Propositions formulas are drawn over.
pub(crate) fn all_props(alphabet: &Alphabet) -> Vec<PropId> {
    alphabet.props().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::LetterModel;
    use crate::ltl::parse;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn hardness_examples() {
        let alpha = Alphabet::symbols(5);
        let space = LetterSpace::one_hot(5);
        let t = r(1, 1_000_000);
        let p = |s: &str| parse(s, &alpha).unwrap();
        assert!(!hardness_filter(&p("a | !a"), 15, space, &t));
        assert!(!hardness_filter(&p("F a"), 15, space, &t));
        assert!(hardness_filter(&p("G a"), 15, space, &t));
        assert!(!hardness_filter(&p("G a & F b"), 15, space, &t));
    }

    #[test]
    fn identical_candidate_overlaps_fully() {
        let alpha = Alphabet::symbols(5);
        let space = LetterSpace::one_hot(5);
        let ga = compile(&parse("G a", &alpha).unwrap(), space).unwrap();
        let gb = compile(&parse("G b", &alpha).unwrap(), space).unwrap();
        let sampler = AcceptedSampler::new(&ga, 15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(overlap_hits(&mut rng, &sampler, &ga, 100), 100);
        assert_eq!(overlap_hits(&mut rng, &sampler, &gb, 100), 0);
        assert!(!overlap_ok(100, 100, &r(1, 10)));
        assert!(overlap_ok(10, 100, &r(1, 10)));
        assert!(!overlap_ok(11, 100, &r(1, 10)));
    }

    #[test]
    fn unreachable_threshold_is_reported() {
        let mut cfg = GenConfig::symbol();
        cfg.symbols = 3;
        cfg.horizon = 8;
        cfg.model = LetterModel::OneHot;
        assert!(matches!(generate_dataset(&cfg), Err(GenError::Infeasible { letters: 3, horizon: 8, .. })));
    }

    #[test]
    fn curriculum_breaks_ties_by_depth() {
        let alpha = Alphabet::symbols(3);
        let space = LetterSpace::one_hot(3);
        let entries: Vec<Entry> = ["G (X (F a))", "X (a & b)", "a", "F a"]
            .iter()
            .map(|s| {
                let f = parse(s, &alpha).unwrap();
                let d = compile(&f, space).unwrap();
                Entry::new(f, d, &alpha)
            })
            .collect();
        let sorted = curriculum_sort(&entries);
        let texts: Vec<&str> = sorted.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(texts, ["a", "F a", "X (a & b)", "G (X (F a))"]);
    }

    #[test]
    fn small_run_respects_contract() {
        let mut cfg = GenConfig::symbol();
        cfg.symbols = 3;
        cfg.horizon = 6;
        cfg.threshold = r(1, 100);
        for (s, n) in cfg.splits.iter_mut().zip([12, 4, 4, 4]) {
            s.size = n;
        }
        let ds = generate_dataset(&cfg).unwrap();
        let mut keys = HashSet::new();
        for (split, spec) in ds.splits.iter().zip(&cfg.splits) {
            assert_eq!(split.entries.len(), spec.size);
            for e in &split.entries {
                assert!(hardness_filter(&e.formula, 6, cfg.space(), &cfg.threshold));
                assert!((spec.min_elements..=spec.max_elements).contains(&e.stats.node_count));
                assert!(keys.insert(e.text.clone()));
            }
        }
    }
}
