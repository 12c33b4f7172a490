use std::fmt;
use std::str::FromStr;

use crate::automaton::{LetterModel, LetterSpace};
use crate::ltl::Alphabet;

/// The two task domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// The agent emits one symbol per step.
    Symbol,
    /// A robot arm in a grid world with resources and structures.
    Craft,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Symbol => "symbol",
            Domain::Craft => "craft",
        }
    }

    /// Alphabet formulas are written over; `symbols` is ignored for Craft.
    pub fn alphabet(self, symbols: usize) -> Alphabet {
        match self {
            Domain::Symbol => Alphabet::symbols(symbols),
            Domain::Craft => Alphabet::craft(),
        }
    }

    pub fn default_model(self) -> LetterModel {
        match self {
            Domain::Symbol => LetterModel::OneHot,
            Domain::Craft => LetterModel::Free,
        }
    }

    pub fn space(self, symbols: usize, model: LetterModel) -> LetterSpace {
        LetterSpace::new(self.alphabet(symbols).len(), model)
    }
}

impl FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "symbol" => Ok(Domain::Symbol),
            "craft" => Ok(Domain::Craft),
            other => Err(format!("unknown domain {other:?} (expected symbol or craft)")),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
