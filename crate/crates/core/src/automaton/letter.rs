use std::fmt;

use crate::ltl::{Alphabet, PropId};

/// Truth assignment to every proposition of an alphabet, one bit per [`PropId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Letter(pub u32);

impl Letter {
    pub fn one_hot(p: PropId) -> Self {
        Letter(1 << p.0)
    }

    pub fn from_props(props: impl IntoIterator<Item = PropId>) -> Self {
        Letter(props.into_iter().fold(0, |m, p| m | (1 << p.0)))
    }

    pub fn holds(self, p: PropId) -> bool {
        self.0 >> p.0 & 1 == 1
    }

    pub fn with(self, p: PropId, value: bool) -> Self {
        if value {
            Letter(self.0 | 1 << p.0)
        } else {
            Letter(self.0 & !(1 << p.0))
        }
    }

    pub fn true_props(self) -> impl Iterator<Item = PropId> {
        (0..32u8).filter(move |&i| self.0 >> i & 1 == 1).map(PropId)
    }

    pub fn display<'a>(self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        struct D<'a>(Letter, &'a Alphabet);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let names: Vec<&str> = self.0.true_props().map(|p| self.1.name(p)).collect();
                write!(f, "{{{}}}", names.join(","))
            }
        }
        D(self, alphabet)
    }
}

/// How letters are formed from the alphabet's propositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LetterModel {
    /// Exactly one proposition holds per step (`k` letters).
    OneHot,
    /// Any subset of propositions may hold (`2^k` letters).
    Free,
}

impl LetterModel {
    /// Number of distinct letters over `k` propositions.
    pub fn letter_count(self, k: usize) -> u64 {
        match self {
            LetterModel::OneHot => k as u64,
            LetterModel::Free => 1u64 << k,
        }
    }

    pub fn admits(self, letter: Letter, k: usize) -> bool {
        let in_range = k >= 32 || letter.0 >> k == 0;
        in_range
            && match self {
                LetterModel::OneHot => letter.0.count_ones() == 1,
                LetterModel::Free => true,
            }
    }

    /// Every letter over `k` propositions, in increasing mask order.
    pub fn letters(self, k: usize) -> Vec<Letter> {
        match self {
            LetterModel::OneHot => (0..k as u8).map(|i| Letter::one_hot(PropId(i))).collect(),
            LetterModel::Free => (0..1u32 << k).map(Letter).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LetterModel::OneHot => "one-hot",
            LetterModel::Free => "free",
        }
    }
}

impl std::str::FromStr for LetterModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-hot" | "onehot" | "one_hot" => Ok(LetterModel::OneHot),
            "free" => Ok(LetterModel::Free),
            other => Err(format!("unknown letter model {other:?} (expected one-hot or free)")),
        }
    }
}

impl fmt::Display for LetterModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
