use super::formula::Formula;
use crate::automaton::Dfa;

/// Size measures of a formula and its automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormulaStats {
    pub symbol_count: usize,
    pub node_count: usize,
    pub depth: usize,
    pub automaton_states: usize,
}

pub fn stats(f: &Formula, dfa: &Dfa) -> FormulaStats {
    FormulaStats {
        symbol_count: f.symbol_count(),
        node_count: f.node_count(),
        depth: f.depth(),
        automaton_states: dfa.num_states(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{compile, LetterSpace};
    use crate::ltl::{parse, Alphabet};

    #[test]
    fn hand_counts() {
        let alpha = Alphabet::craft();
        let f = parse("(G gem) & (F factory)", &alpha).unwrap();
        let s = stats(&f, &compile(&f, LetterSpace::free(8)).unwrap());
        assert_eq!((s.symbol_count, s.node_count, s.depth), (2, 5, 3));
        let a = parse("a", &Alphabet::symbols(2)).unwrap();
        let s = stats(&a, &compile(&a, LetterSpace::one_hot(2)).unwrap());
        assert_eq!((s.symbol_count, s.node_count, s.depth, s.automaton_states), (1, 1, 1, 3));
    }
}
