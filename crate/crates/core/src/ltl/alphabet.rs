use std::fmt;

/// Index of an atomic proposition within its owning [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(pub u8);

impl PropId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Names of the propositions visible to one domain.
///
/// At most 32 propositions are supported so that a letter fits in a `u32` mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

pub const MAX_PROPS: usize = 32;

/// Base predicates of the Craft domain, in proposition-index order.
pub const CRAFT_PREDICATES: [&str; 8] = [
    "gem", "factory", "gold", "grass", "silver", "workbench", "tree", "toolshed",
];

pub const CLOSER_PREFIX: &str = "closer_";

impl Alphabet {
    /// Builds an alphabet from display names.
    ///
    /// Panics if names repeat, are empty, collide with operator keywords, or exceed [`MAX_PROPS`].
    pub fn new<I, T>(names: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        assert!(!names.is_empty(), "alphabet must not be empty");
        assert!(names.len() <= MAX_PROPS, "at most {MAX_PROPS} propositions");
        for (i, n) in names.iter().enumerate() {
            assert!(is_valid_name(n), "invalid proposition name {n:?}");
            assert!(!names[..i].contains(n), "duplicate proposition name {n:?}");
        }
        Self { names }
    }

    /// `k` single-letter symbols `a`, `b`, ... as used by the Symbol domain.
    pub fn symbols(k: usize) -> Self {
        assert!((1..=26).contains(&k), "symbol alphabets hold 1..=26 letters");
        Self::new((0..k).map(|i| ((b'a' + i as u8) as char).to_string()))
    }

    /// The eight Craft predicates.
    pub fn craft() -> Self {
        Self::new(CRAFT_PREDICATES)
    }

    /// Craft predicates followed by one `closer_<p>` proposition per predicate.
    ///
    /// `closer_<p>` has index `p + 8`, so every Craft formula is also valid here.
    pub fn craft_with_closer() -> Self {
        Self::new(
            CRAFT_PREDICATES
                .iter()
                .map(|p| p.to_string())
                .chain(CRAFT_PREDICATES.iter().map(|p| format!("{CLOSER_PREFIX}{p}"))),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, p: PropId) -> &str {
        &self.names[p.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<PropId> {
        self.names.iter().position(|n| n == name).map(|i| PropId(i as u8))
    }

    pub fn props(&self) -> impl Iterator<Item = PropId> + '_ {
        (0..self.names.len()).map(|i| PropId(i as u8))
    }

    pub fn contains(&self, p: PropId) -> bool {
        p.index() < self.names.len()
    }

    /// Returns the proposition `closer_<name of p>` if the alphabet declares it.
    pub fn closer_of(&self, p: PropId) -> Option<PropId> {
        self.lookup(&format!("{CLOSER_PREFIX}{}", self.name(p)))
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(","))
    }
}

pub(crate) const KEYWORDS: [&str; 4] = ["G", "F", "X", "U"];

pub(crate) fn is_valid_name(n: &str) -> bool {
    let mut chars = n.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_names() {
        let a = Alphabet::symbols(5);
        assert_eq!(a.names(), ["a", "b", "c", "d", "e"]);
        assert_eq!(a.lookup("c"), Some(PropId(2)));
        assert_eq!(a.lookup("f"), None);
    }

    #[test]
    fn craft_closer_layout() {
        let a = Alphabet::craft_with_closer();
        assert_eq!(a.len(), 16);
        let gem = a.lookup("gem").unwrap();
        assert_eq!(a.closer_of(gem), Some(PropId(8)));
        assert_eq!(a.name(PropId(9)), "closer_factory");
        assert_eq!(Alphabet::craft().closer_of(gem), None);
    }

    #[test]
    #[should_panic(expected = "duplicate")]
    fn duplicate_names_rejected() {
        Alphabet::new(["a", "a"]);
    }

    #[test]
    fn keywords_are_not_names() {
        assert!(!is_valid_name("G"));
        assert!(!is_valid_name("1a"));
        assert!(is_valid_name("closer_gem"));
    }
}
