use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;

use crate::automaton::{LetterModel, LetterSpace};
use crate::domain::Domain;
use crate::ltl::{Alphabet, ElementPrior, OperatorSet, PropId, MAX_ELEMENTS};
use crate::meta::{format_rational, parse_rational, Meta, MetaError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub name: String,
    pub min_elements: usize,
    pub max_elements: usize,
    pub size: usize,
}

impl SplitSpec {
    pub fn new(name: &str, min_elements: usize, max_elements: usize, size: usize) -> Self {
        Self { name: name.to_string(), min_elements, max_elements, size }
    }
}

/// Shape of the element-count prior within a split's range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorShape {
    /// Every count in the range equally likely.
    Uniform,
    /// Weight `m^p` for `m` elements.
    Power(f64),
    /// Weight proportional to the number of distinct trees with `m` elements, so that every
    /// tree within the range is equally likely.
    Trees,
}

impl PriorShape {
    /// Unnormalised weight of `m` elements.
    pub fn weight(self, m: usize, atoms: usize, unary: usize, binary: usize) -> f64 {
        match self {
            PriorShape::Uniform => 1.0,
            PriorShape::Power(p) => (m as f64).powf(p),
            PriorShape::Trees => tree_count(m, atoms, unary, binary),
        }
    }
}

/// Number of labelled trees with `m` nodes.
pub fn tree_count(m: usize, atoms: usize, unary: usize, binary: usize) -> f64 {
    let mut t = vec![0.0f64; m + 1];
    for n in 1..=m {
        t[n] = if n == 1 {
            atoms as f64
        } else {
            unary as f64 * t[n - 1] + binary as f64 * (1..n - 1).map(|i| t[i] * t[n - 1 - i]).sum::<f64>()
        };
    }
    t[m]
}

impl fmt::Display for PriorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorShape::Uniform => f.write_str("uniform"),
            PriorShape::Power(p) => write!(f, "power:{p}"),
            PriorShape::Trees => f.write_str("trees"),
        }
    }
}

impl FromStr for PriorShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(PriorShape::Uniform),
            "trees" => Ok(PriorShape::Trees),
            _ => s
                .strip_prefix("power:")
                .and_then(|p| p.parse().ok())
                .map(PriorShape::Power)
                .ok_or_else(|| format!("unknown prior {s:?} (uniform, trees, power:<p>)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub domain: Domain,
    /// Symbol alphabet size; Craft always uses its eight predicates.
    pub symbols: usize,
    pub model: LetterModel,
    pub horizon: usize,
    /// Largest admissible acceptance ratio.
    pub threshold: BigRational,
    /// Largest admissible share of base strings a mutant may accept.
    pub max_overlap: BigRational,
    pub diversity_samples: usize,
    pub chain_probability: f64,
    pub negation: bool,
    pub prior: PriorShape,
    pub splits: Vec<SplitSpec>,
    pub seed: u64,
    /// Random draws allowed when looking for a fresh hard formula.
    pub fresh_attempts: usize,
    /// Mutations tried per diversity step.
    pub mutation_attempts: usize,
    /// Chains allowed per requested formula before a split is declared infeasible.
    pub max_chains_per_formula: usize,
    /// Chains evaluated per parallel batch.
    pub batch: usize,
}

fn standard_splits(size: usize) -> Vec<SplitSpec> {
    vec![
        SplitSpec::new("train", 1, 10, size),
        SplitSpec::new("test_1_10", 1, 10, size),
        SplitSpec::new("test_10_15", 10, 15, size),
        SplitSpec::new("test_15_20", 15, 20, size),
    ]
}

impl GenConfig {
    /// Five symbols, one-hot letters, horizon 15, ratio at most one in a million.
    pub fn symbol() -> Self {
        Self {
            domain: Domain::Symbol,
            symbols: 5,
            model: LetterModel::OneHot,
            horizon: 15,
            threshold: BigRational::new(1.into(), 1_000_000.into()),
            max_overlap: BigRational::new(1.into(), 10.into()),
            diversity_samples: 100,
            chain_probability: 0.5,
            negation: true,
            prior: PriorShape::Power(4.0),
            splits: standard_splits(10_000),
            seed: 0,
            fresh_attempts: 2_000,
            mutation_attempts: 20,
            max_chains_per_formula: 200,
            batch: 64,
        }
    }

    /// The eight Craft predicates with free letters.
    pub fn craft() -> Self {
        Self { domain: Domain::Craft, model: LetterModel::Free, splits: standard_splits(4_000), ..Self::symbol() }
    }

    pub fn for_domain(domain: Domain) -> Self {
        match domain {
            Domain::Symbol => Self::symbol(),
            Domain::Craft => Self::craft(),
        }
    }

    pub fn with_sizes(mut self, sizes: [usize; 4]) -> Self {
        for (s, n) in self.splits.iter_mut().zip(sizes) {
            s.size = n;
        }
        self
    }

    pub fn alphabet(&self) -> Alphabet {
        self.domain.alphabet(self.symbols)
    }

    pub fn space(&self) -> LetterSpace {
        self.domain.space(self.symbols, self.model)
    }

    pub fn props(&self) -> Vec<PropId> {
        super::all_props(&self.alphabet())
    }

    /// Prior over element counts in `lo..=hi`.
    pub fn element_prior(&self, lo: usize, hi: usize) -> ElementPrior {
        let ops = OperatorSet::with_negation(self.negation);
        let atoms = self.alphabet().len();
        ElementPrior::from_weights(
            (lo..=hi).map(|m| (m, self.prior.weight(m, atoms, ops.unary.len(), ops.binary.len()))),
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.domain == Domain::Symbol && !(1..=26).contains(&self.symbols) {
            return Err(format!("symbols must be in 1..=26, got {}", self.symbols));
        }
        if !(0.0..=1.0).contains(&self.chain_probability) {
            return Err("chain_probability must lie in [0, 1]".into());
        }
        if self.diversity_samples == 0 || self.batch == 0 || self.max_chains_per_formula == 0 {
            return Err("diversity_samples, batch and max_chains_per_formula must be positive".into());
        }
        for s in &self.splits {
            if s.min_elements < 1 || s.min_elements > s.max_elements || s.max_elements > MAX_ELEMENTS {
                return Err(format!("split {}: bad element range {}-{}", s.name, s.min_elements, s.max_elements));
            }
        }
        for (i, s) in self.splits.iter().enumerate() {
            if self.splits[..i].iter().any(|o| o.name == s.name) {
                return Err(format!("duplicate split {}", s.name));
            }
        }
        Ok(())
    }

    pub fn to_meta(&self) -> Meta {
        let mut m = Meta::new();
        m.set("domain", self.domain);
        m.set("symbols", self.symbols);
        m.set("letter_model", self.model);
        m.set("horizon", self.horizon);
        m.set("threshold", format_rational(&self.threshold));
        m.set("max_overlap", format_rational(&self.max_overlap));
        m.set("diversity_samples", self.diversity_samples);
        m.set("chain_probability", self.chain_probability);
        m.set("negation", self.negation);
        m.set("element_prior", self.prior);
        for s in &self.splits {
            m.set(&format!("{}_size", s.name), s.size);
            m.set(&format!("{}_elements", s.name), format!("{}-{}", s.min_elements, s.max_elements));
        }
        m.set("seed", self.seed);
        m.set("fresh_attempts", self.fresh_attempts);
        m.set("mutation_attempts", self.mutation_attempts);
        m.set("max_chains_per_formula", self.max_chains_per_formula);
        m.set("batch", self.batch);
        m
    }

    /// Applies every key present in `m`; `domain` is read first so that its defaults apply.
    pub fn from_meta(m: &Meta) -> Result<Self, MetaError> {
        let domain = m.get_parsed::<Domain>("domain")?.unwrap_or(Domain::Symbol);
        let mut c = Self::for_domain(domain);
        c.apply_meta(m)?;
        Ok(c)
    }

    pub fn apply_meta(&mut self, m: &Meta) -> Result<(), MetaError> {
        m.apply("domain", &mut self.domain)?;
        m.apply("symbols", &mut self.symbols)?;
        m.apply("letter_model", &mut self.model)?;
        m.apply("horizon", &mut self.horizon)?;
        for (key, slot) in [("threshold", &mut self.threshold), ("max_overlap", &mut self.max_overlap)] {
            if let Some(v) = m.get(key) {
                *slot = parse_rational(v)
                    .ok_or_else(|| MetaError::BadValue { key: key.into(), value: v.into() })?;
            }
        }
        m.apply("diversity_samples", &mut self.diversity_samples)?;
        m.apply("chain_probability", &mut self.chain_probability)?;
        m.apply("negation", &mut self.negation)?;
        m.apply("element_prior", &mut self.prior)?;
        for s in &mut self.splits {
            m.apply(&format!("{}_size", s.name), &mut s.size)?;
            let key = format!("{}_elements", s.name);
            if let Some(v) = m.get(&key) {
                let bad = || MetaError::BadValue { key: key.clone(), value: v.into() };
                let (lo, hi) = v.split_once('-').ok_or_else(bad)?;
                s.min_elements = lo.trim().parse().map_err(|_| bad())?;
                s.max_elements = hi.trim().parse().map_err(|_| bad())?;
            }
        }
        m.apply("seed", &mut self.seed)?;
        m.apply("fresh_attempts", &mut self.fresh_attempts)?;
        m.apply("mutation_attempts", &mut self.mutation_attempts)?;
        m.apply("max_chains_per_formula", &mut self.max_chains_per_formula)?;
        m.apply("batch", &mut self.batch)?;
        Ok(())
    }
}

/// Every key understood by [`GenConfig::apply_meta`].
pub const GEN_KEYS: &[&str] = &[
    "domain",
    "symbols",
    "letter_model",
    "horizon",
    "threshold",
    "max_overlap",
    "diversity_samples",
    "chain_probability",
    "negation",
    "element_prior",
    "train_size",
    "train_elements",
    "test_1_10_size",
    "test_1_10_elements",
    "test_10_15_size",
    "test_10_15_elements",
    "test_15_20_size",
    "test_15_20_elements",
    "seed",
    "fresh_attempts",
    "mutation_attempts",
    "max_chains_per_formula",
    "batch",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trip() {
        let mut c = GenConfig::craft().with_sizes([7, 6, 5, 4]);
        c.seed = 99;
        c.threshold = BigRational::new(1.into(), 200.into());
        c.prior = PriorShape::Power(1.5);
        let back = GenConfig::from_meta(&Meta::parse(&c.to_meta().to_text()).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_meta().check_keys(GEN_KEYS).is_ok());
    }
}
