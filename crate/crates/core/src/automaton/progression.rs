//! Formula progression over finite traces.
//!
//! A residual is an obligation on the remaining suffix of the trace. Negation is pushed to
//! the literals, which needs weak next and release as duals of next and until. Two
//! constants track whether the suffix is empty: `Alive` (at least one more letter) and
//! `End` (no more letters).
//!
//! Automaton states are disjunctive normal forms over temporal atoms. Every atom is a
//! subformula of the negation normal form (or `Alive`/`End`), so the atom set is finite and
//! absorption keeps the set of reachable normal forms finite as well.

use std::collections::HashMap;
use std::fmt;

use super::letter::Letter;
use crate::ltl::{Alphabet, Formula, PropId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Residual {
    False,
    True,
    Alive,
    End,
    Lit(PropId, bool),
    And(Vec<Residual>),
    Or(Vec<Residual>),
    Next(Box<Residual>),
    WeakNext(Box<Residual>),
    Eventually(Box<Residual>),
    Always(Box<Residual>),
    Until(Box<Residual>, Box<Residual>),
    Release(Box<Residual>, Box<Residual>),
}

use Residual as R;

impl Residual {
    /// Negation normal form of `f` (of `!f` when `negate` is set).
    pub(crate) fn from_formula(f: &Formula, negate: bool) -> Residual {
        let go = |c: &Formula, n: bool| Residual::from_formula(c, n);
        match f {
            Formula::Atom(p) => R::Lit(*p, !negate),
            Formula::Not(c) => go(c, !negate),
            Formula::And(l, r) if !negate => mk_and(vec![go(l, false), go(r, false)]),
            Formula::And(l, r) => mk_or(vec![go(l, true), go(r, true)]),
            Formula::Or(l, r) if !negate => mk_or(vec![go(l, false), go(r, false)]),
            Formula::Or(l, r) => mk_and(vec![go(l, true), go(r, true)]),
            Formula::Next(c) if !negate => mk_next(go(c, false)),
            Formula::Next(c) => mk_weak_next(go(c, true)),
            Formula::Eventually(c) if !negate => mk_eventually(go(c, false)),
            Formula::Eventually(c) => mk_always(go(c, true)),
            Formula::Always(c) if !negate => mk_always(go(c, false)),
            Formula::Always(c) => mk_eventually(go(c, true)),
            Formula::Until(l, r) if !negate => mk_until(go(l, false), go(r, false)),
            Formula::Until(l, r) => mk_release(go(l, true), go(r, true)),
        }
    }

    /// Whether the obligation holds on the empty suffix.
    pub(crate) fn accepts_empty(&self) -> bool {
        match self {
            R::True | R::End | R::WeakNext(_) | R::Always(_) | R::Release(..) => true,
            R::False | R::Alive | R::Lit(..) | R::Next(_) | R::Eventually(_) | R::Until(..) => false,
            R::And(xs) => xs.iter().all(R::accepts_empty),
            R::Or(xs) => xs.iter().any(R::accepts_empty),
        }
    }

    pub(crate) fn display<'a>(&'a self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Residual, &'a Alphabet);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let sub = |r| D(r, self.1);
                match self.0 {
                    R::True => f.write_str("true"),
                    R::False => f.write_str("false"),
                    R::Alive => f.write_str("alive"),
                    R::End => f.write_str("end"),
                    R::Lit(p, true) => f.write_str(self.1.name(*p)),
                    R::Lit(p, false) => write!(f, "!{}", self.1.name(*p)),
                    R::And(xs) | R::Or(xs) => {
                        let sep = if matches!(self.0, R::And(_)) { " & " } else { " | " };
                        f.write_str("(")?;
                        for (i, x) in xs.iter().enumerate() {
                            if i > 0 {
                                f.write_str(sep)?;
                            }
                            write!(f, "{}", sub(x))?;
                        }
                        f.write_str(")")
                    }
                    R::Next(c) => write!(f, "X {}", sub(c)),
                    R::WeakNext(c) => write!(f, "N {}", sub(c)),
                    R::Eventually(c) => write!(f, "F {}", sub(c)),
                    R::Always(c) => write!(f, "G {}", sub(c)),
                    R::Until(l, r) => write!(f, "({} U {})", sub(l), sub(r)),
                    R::Release(l, r) => write!(f, "({} R {})", sub(l), sub(r)),
                }
            }
        }
        D(self, alphabet)
    }
}

pub(crate) fn mk_and(items: Vec<Residual>) -> Residual {
    let mut flat = Vec::with_capacity(items.len());
    for it in items {
        match it {
            R::True => {}
            R::False => return R::False,
            R::And(xs) => flat.extend(xs),
            other => flat.push(other),
        }
    }
    flat.sort();
    flat.dedup();
    let has_alive = flat.contains(&R::Alive);
    if has_alive && flat.contains(&R::End) {
        return R::False;
    }
    if flat.windows(2).any(|w| matches!((&w[0], &w[1]), (R::Lit(p, false), R::Lit(q, true)) if p == q)) {
        return R::False;
    }
    // alive is implied once another conjunct already fails on the empty suffix
    if has_alive && flat.iter().any(|x| *x != R::Alive && !x.accepts_empty()) {
        flat.retain(|x| *x != R::Alive);
    }
    match flat.len() {
        0 => R::True,
        1 => flat.pop().unwrap(),
        _ => R::And(flat),
    }
}

pub(crate) fn mk_or(items: Vec<Residual>) -> Residual {
    let mut flat = Vec::with_capacity(items.len());
    for it in items {
        match it {
            R::False => {}
            R::True => return R::True,
            R::Or(xs) => flat.extend(xs),
            other => flat.push(other),
        }
    }
    flat.sort();
    flat.dedup();
    // p | !p holds exactly when a position exists
    let mut complementary = Vec::new();
    for w in flat.windows(2) {
        if let (R::Lit(p, false), R::Lit(q, true)) = (&w[0], &w[1]) {
            if p == q {
                complementary.push(*p);
            }
        }
    }
    if !complementary.is_empty() {
        flat.retain(|x| !matches!(x, R::Lit(p, _) if complementary.contains(p)));
        flat.push(R::Alive);
        flat.sort();
        flat.dedup();
    }
    let has_end = flat.contains(&R::End);
    if has_end && flat.contains(&R::Alive) {
        return R::True;
    }
    if has_end && flat.iter().any(|x| *x != R::End && x.accepts_empty()) {
        flat.retain(|x| *x != R::End);
    }
    match flat.len() {
        0 => R::False,
        1 => flat.pop().unwrap(),
        _ => R::Or(flat),
    }
}

fn mk_next(c: Residual) -> Residual {
    match c {
        R::False => R::False,
        c => R::Next(Box::new(c)),
    }
}

fn mk_weak_next(c: Residual) -> Residual {
    match c {
        R::True => R::True,
        c => R::WeakNext(Box::new(c)),
    }
}

fn mk_eventually(c: Residual) -> Residual {
    match c {
        R::False => R::False,
        R::True => R::Alive,
        c => R::Eventually(Box::new(c)),
    }
}

fn mk_always(c: Residual) -> Residual {
    match c {
        R::True => R::True,
        R::False => R::End,
        c => R::Always(Box::new(c)),
    }
}

fn mk_until(l: Residual, r: Residual) -> Residual {
    match (l, r) {
        (_, R::False) => R::False,
        (_, R::True) => R::Alive,
        (R::False, r) => mk_and(vec![R::Alive, r]),
        (l, r) => R::Until(Box::new(l), Box::new(r)),
    }
}

fn mk_release(l: Residual, r: Residual) -> Residual {
    match (l, r) {
        (_, R::True) => R::True,
        (_, R::False) => R::End,
        (R::True, r) => mk_or(vec![R::End, r]),
        (l, r) => R::Release(Box::new(l), Box::new(r)),
    }
}

/// Atom ids of one conjunction, sorted and without repeats.
pub(crate) type Cube = Vec<u32>;

/// Disjunction of cubes, sorted, with no cube containing another.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Dnf(Vec<Cube>);

impl Dnf {
    fn top() -> Self {
        Dnf(vec![vec![]])
    }

    fn bottom() -> Self {
        Dnf(vec![])
    }
}

const ALIVE: u32 = 0;
const END: u32 = 1;

/// The normal form grew past the configured number of cubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TooLarge;

/// Interns atoms and memoises their progression.
pub(crate) struct Progressor {
    atoms: Vec<Residual>,
    index: HashMap<Residual, u32>,
    empty_ok: Vec<bool>,
    memo: HashMap<(u32, Letter), Dnf>,
    max_cubes: usize,
}

impl Progressor {
    pub(crate) fn new(max_cubes: usize) -> Self {
        let mut p = Self { atoms: vec![], index: HashMap::new(), empty_ok: vec![], memo: HashMap::new(), max_cubes };
        p.intern(R::Alive);
        p.intern(R::End);
        p
    }

    fn intern(&mut self, r: Residual) -> u32 {
        if let Some(&id) = self.index.get(&r) {
            return id;
        }
        let id = self.atoms.len() as u32;
        self.empty_ok.push(r.accepts_empty());
        self.atoms.push(r.clone());
        self.index.insert(r, id);
        id
    }

    /// Normal form of a residual built by [`Residual::from_formula`].
    pub(crate) fn expand(&mut self, r: &Residual) -> Result<Dnf, TooLarge> {
        match r {
            R::True => Ok(Dnf::top()),
            R::False => Ok(Dnf::bottom()),
            R::And(xs) => {
                let mut acc = Dnf::top();
                for x in xs {
                    let e = self.expand(x)?;
                    acc = self.and(&acc, &e)?;
                }
                Ok(acc)
            }
            R::Or(xs) => {
                let mut cubes = Vec::new();
                for x in xs {
                    cubes.extend(self.expand(x)?.0);
                }
                self.simplify(cubes)
            }
            other => {
                let id = self.intern(other.clone());
                self.simplify(vec![vec![id]])
            }
        }
    }

    pub(crate) fn accepts_empty(&self, d: &Dnf) -> bool {
        d.0.iter().any(|c| c.iter().all(|&a| self.empty_ok[a as usize]))
    }

    fn and(&self, a: &Dnf, b: &Dnf) -> Result<Dnf, TooLarge> {
        let mut cubes = Vec::with_capacity(a.0.len() * b.0.len());
        for x in &a.0 {
            for y in &b.0 {
                let mut c = x.clone();
                c.extend_from_slice(y);
                cubes.push(c);
            }
            if cubes.len() > 4 * self.max_cubes {
                cubes = self.simplify(cubes)?.0;
            }
        }
        self.simplify(cubes)
    }

    fn or(&self, a: Dnf, b: Dnf) -> Result<Dnf, TooLarge> {
        let mut cubes = a.0;
        cubes.extend(b.0);
        self.simplify(cubes)
    }

    /// Canonical cube, or `None` when the cube is unsatisfiable.
    fn normalize_cube(&self, mut c: Cube) -> Option<Cube> {
        c.sort_unstable();
        c.dedup();
        let lits: Vec<(PropId, bool)> = c
            .iter()
            .filter_map(|&a| match self.atoms[a as usize] {
                R::Lit(p, pos) => Some((p, pos)),
                _ => None,
            })
            .collect();
        if lits.iter().any(|&(p, pos)| lits.contains(&(p, !pos))) {
            return None;
        }
        if c.contains(&END) {
            // only obligations that hold on the empty suffix survive the end of the trace
            return c.iter().all(|&a| a == END || self.empty_ok[a as usize]).then(|| vec![END]);
        }
        if c.contains(&ALIVE) && c.iter().any(|&a| !self.empty_ok[a as usize] && a != ALIVE) {
            c.retain(|&a| a != ALIVE);
        }
        Some(c)
    }

    fn complement(&self, a: u32) -> Option<u32> {
        match a {
            ALIVE => Some(END),
            END => Some(ALIVE),
            _ => match self.atoms[a as usize] {
                R::Lit(p, pos) => self.index.get(&R::Lit(p, !pos)).copied(),
                _ => None,
            },
        }
    }

    fn simplify(&self, cubes: Vec<Cube>) -> Result<Dnf, TooLarge> {
        let mut set: Vec<Cube> = cubes.into_iter().filter_map(|c| self.normalize_cube(c)).collect();
        loop {
            set.sort();
            set.dedup();
            absorb(&mut set);
            if set.len() > self.max_cubes {
                return Err(TooLarge);
            }
            // resolution on complementary atoms: (X & p) | (X & !p) = X & alive
            let mut added = Vec::new();
            for c in &set {
                for (i, &a) in c.iter().enumerate() {
                    let Some(b) = self.complement(a) else { continue };
                    let mut twin = c.clone();
                    twin[i] = b;
                    twin.sort_unstable();
                    if set.binary_search(&twin).is_ok() {
                        let mut rest: Cube = c.iter().copied().filter(|&x| x != a).collect();
                        if a != ALIVE && a != END {
                            rest.push(ALIVE);
                        }
                        if let Some(r) = self.normalize_cube(rest) {
                            if !set.iter().any(|s| is_subset(s, &r)) {
                                added.push(r);
                            }
                        }
                    }
                }
            }
            if added.is_empty() {
                return Ok(Dnf(set));
            }
            set.extend(added);
        }
    }

    /// Normal form after reading `letter`.
    pub(crate) fn progress(&mut self, d: &Dnf, letter: Letter) -> Result<Dnf, TooLarge> {
        let mut acc = Dnf::bottom();
        for cube in &d.0 {
            let mut term = Dnf::top();
            for &a in cube {
                let p = self.progress_atom(a, letter)?;
                term = self.and(&term, &p)?;
                if term.0.is_empty() {
                    break;
                }
            }
            acc = self.or(acc, term)?;
        }
        Ok(acc)
    }

    fn progress_atom(&mut self, a: u32, letter: Letter) -> Result<Dnf, TooLarge> {
        if let Some(d) = self.memo.get(&(a, letter)) {
            return Ok(d.clone());
        }
        let atom = self.atoms[a as usize].clone();
        let d = match &atom {
            R::Alive => Dnf::top(),
            R::End => Dnf::bottom(),
            R::Lit(p, pos) => {
                if letter.holds(*p) == *pos {
                    Dnf::top()
                } else {
                    Dnf::bottom()
                }
            }
            R::Next(c) => {
                let c = self.expand(c)?;
                self.and(&Dnf(vec![vec![ALIVE]]), &c)?
            }
            R::WeakNext(c) => {
                let c = self.expand(c)?;
                self.or(Dnf(vec![vec![END]]), c)?
            }
            R::Eventually(c) => {
                let now = self.progress_sub(c, letter)?;
                self.or(now, Dnf(vec![vec![a]]))?
            }
            R::Always(c) => {
                let now = self.progress_sub(c, letter)?;
                self.and(&now, &Dnf(vec![vec![a]]))?
            }
            R::Until(l, r) => {
                let rn = self.progress_sub(r, letter)?;
                let ln = self.progress_sub(l, letter)?;
                let keep = self.and(&ln, &Dnf(vec![vec![a]]))?;
                self.or(rn, keep)?
            }
            R::Release(l, r) => {
                let rn = self.progress_sub(r, letter)?;
                let ln = self.progress_sub(l, letter)?;
                let keep = self.or(ln, Dnf(vec![vec![a]]))?;
                self.and(&rn, &keep)?
            }
            R::True | R::False | R::And(_) | R::Or(_) => unreachable!("boolean structure is never an atom"),
        };
        self.memo.insert((a, letter), d.clone());
        Ok(d)
    }

    fn progress_sub(&mut self, r: &Residual, letter: Letter) -> Result<Dnf, TooLarge> {
        let d = self.expand(r)?;
        self.progress(&d, letter)
    }

    pub(crate) fn into_atoms(self) -> Vec<Residual> {
        self.atoms
    }
}

/// Renders a normal form with the atoms it was built from.
pub(crate) fn display_dnf(atoms: &[Residual], d: &Dnf, alphabet: &Alphabet) -> String {
    if d.0.is_empty() {
        return "false".into();
    }
    let cubes: Vec<String> = d
        .0
        .iter()
        .map(|c| {
            if c.is_empty() {
                return "true".to_string();
            }
            let parts: Vec<String> = c.iter().map(|&a| atoms[a as usize].display(alphabet).to_string()).collect();
            parts.join(" & ")
        })
        .collect();
    cubes.join(" | ")
}

/// Sorted-slice subset test.
fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// Drops every cube that contains another cube of the set.
fn absorb(set: &mut Vec<Cube>) {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by_key(|&i| set[i].len());
    let mut keep: Vec<usize> = Vec::new();
    for i in order {
        if !keep.iter().any(|&k| is_subset(&set[k], &set[i])) {
            keep.push(i);
        }
    }
    keep.sort_unstable();
    let kept: Vec<Cube> = keep.into_iter().map(|i| std::mem::take(&mut set[i])).collect();
    *set = kept;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;

    fn run(text: &str, trace: &[u32]) -> bool {
        let alpha = Alphabet::symbols(3);
        let f = parse(text, &alpha).unwrap();
        let mut p = Progressor::new(1000);
        let mut d = p.expand(&Residual::from_formula(&f, false)).unwrap();
        if trace.is_empty() {
            return false;
        }
        for &l in trace {
            d = p.progress(&d, Letter(l)).unwrap();
        }
        p.accepts_empty(&d)
    }

    #[test]
    fn strong_next_fails_at_end() {
        assert!(!run("X a", &[0b010]));
        assert!(run("X a", &[0b010, 0b001]));
        assert!(run("!(X a)", &[0b001]));
        assert!(!run("X (G a)", &[0b001]));
    }

    #[test]
    fn until_release_duality() {
        assert!(run("a U b", &[1, 1, 2]));
        assert!(!run("a U b", &[1, 1, 1]));
        assert!(run("!(a U b)", &[1, 1, 1]));
        assert!(!run("!(a U b)", &[1, 2]));
    }

    #[test]
    fn excluded_middle_needs_a_position() {
        let alpha = Alphabet::symbols(2);
        let mut p = Progressor::new(100);
        let d = p.expand(&Residual::from_formula(&parse("X (a | !a)", &alpha).unwrap(), false)).unwrap();
        let d = p.progress(&d, Letter(1)).unwrap();
        assert_eq!(d, Dnf(vec![vec![ALIVE]]));
    }

    #[test]
    fn normalisation_is_order_independent() {
        let alpha = Alphabet::symbols(3);
        let mut p = Progressor::new(100);
        let a = p.expand(&Residual::from_formula(&parse("(F a & G b) & F c", &alpha).unwrap(), false)).unwrap();
        let b = p.expand(&Residual::from_formula(&parse("F c & (G b & F a)", &alpha).unwrap(), false)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn absorption_keeps_states_small() {
        // G (a | F b) accumulates F b copies without absorption
        let alpha = Alphabet::symbols(3);
        let mut p = Progressor::new(100);
        let mut d = p.expand(&Residual::from_formula(&parse("G (a | F b)", &alpha).unwrap(), false)).unwrap();
        for _ in 0..10 {
            d = p.progress(&d, Letter(4)).unwrap();
        }
        assert!(d.0.len() <= 2, "{}", display_dnf(&p.atoms, &d, &alpha));
    }
}
