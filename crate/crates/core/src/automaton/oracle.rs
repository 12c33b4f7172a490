//! Reference semantics by direct recursion over (formula, position).

use super::letter::Letter;
use crate::ltl::Formula;

/// Whether `trace` satisfies `f` at position 0. The empty trace satisfies nothing.
pub fn brute_force_accepts(f: &Formula, trace: &[Letter]) -> bool {
    !trace.is_empty() && holds(f, trace, 0)
}

fn holds(f: &Formula, trace: &[Letter], i: usize) -> bool {
    let n = trace.len();
    match f {
        Formula::Atom(p) => trace[i].holds(*p),
        Formula::Not(c) => !holds(c, trace, i),
        Formula::And(l, r) => holds(l, trace, i) && holds(r, trace, i),
        Formula::Or(l, r) => holds(l, trace, i) || holds(r, trace, i),
        Formula::Next(c) => i + 1 < n && holds(c, trace, i + 1),
        Formula::Eventually(c) => (i..n).any(|j| holds(c, trace, j)),
        Formula::Always(c) => (i..n).all(|j| holds(c, trace, j)),
        Formula::Until(l, r) => (i..n).any(|j| holds(r, trace, j) && (i..j).all(|k| holds(l, trace, k))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse, Alphabet};

    fn check(text: &str, trace: &[u32]) -> bool {
        let f = parse(text, &Alphabet::symbols(2)).unwrap();
        brute_force_accepts(&f, &trace.iter().map(|&l| Letter(l)).collect::<Vec<_>>())
    }

    #[test]
    fn textbook_cases() {
        assert!(check("G a", &[1, 1, 1]));
        assert!(!check("G a", &[1, 2, 1]));
        assert!(check("a U b", &[1, 1, 2]));
        assert!(!check("a U b", &[1, 1, 1]));
        assert!(!check("X a", &[1]));
        assert!(!check("a | !a", &[]));
    }
}
