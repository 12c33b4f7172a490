//! LTLf formulas: syntax tree, canonical printing, parsing, and random generation.

mod alphabet;
mod formula;
mod parse;
mod sample;
mod stats;

pub use alphabet::{Alphabet, PropId, CLOSER_PREFIX, CRAFT_PREDICATES, MAX_PROPS};
pub use formula::{format, Formula, FormulaDisplay, NodeKind, Operator};
pub use parse::{parse, ParseError};
pub use sample::{
    mutate_subtree, sample_formula, sample_formula_with_size, ElementPrior, OperatorSet, MAX_ELEMENTS,
};
pub use stats::{stats, FormulaStats};
