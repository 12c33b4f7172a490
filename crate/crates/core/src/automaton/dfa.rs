use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use super::letter::{Letter, LetterModel};
use super::progression::{display_dnf, Dnf, Progressor, Residual};
use crate::ltl::{Alphabet, Formula, PropId};

pub type StateId = usize;

pub const DEFAULT_MAX_STATES: usize = 10_000;
pub const DEFAULT_MAX_CLASSES: usize = 1 << 16;
pub const DEFAULT_MAX_CUBES: usize = 4096;

/// Proposition count plus the letter model; together they fix the set of letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LetterSpace {
    pub props: usize,
    pub model: LetterModel,
}

impl LetterSpace {
    pub fn new(props: usize, model: LetterModel) -> Self {
        assert!(props >= 1 && props <= crate::ltl::MAX_PROPS);
        Self { props, model }
    }

    pub fn one_hot(props: usize) -> Self {
        Self::new(props, LetterModel::OneHot)
    }

    pub fn free(props: usize) -> Self {
        Self::new(props, LetterModel::Free)
    }

    pub fn letter_count(&self) -> u64 {
        self.model.letter_count(self.props)
    }

    pub fn letters(&self) -> Vec<Letter> {
        self.model.letters(self.props)
    }

    pub fn admits(&self, l: Letter) -> bool {
        self.model.admits(l, self.props)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("automaton exceeds {cap} states")]
    TooManyStates { cap: usize },
    #[error("formula mentions {support} propositions; {classes} letter classes exceed the cap of {cap}")]
    TooManyClasses { support: usize, classes: usize, cap: usize },
    #[error("a progressed formula exceeds {cap} disjuncts")]
    ResidualTooLarge { cap: usize },
    #[error("proposition {0} is outside the letter space")]
    UnknownProposition(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub max_states: usize,
    pub max_classes: usize,
    /// Largest normal form (number of disjuncts) a state may carry.
    pub max_cubes: usize,
    /// Merge language-equivalent states (Moore refinement) after construction.
    pub minimize: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { max_states: DEFAULT_MAX_STATES, max_classes: DEFAULT_MAX_CLASSES, max_cubes: DEFAULT_MAX_CUBES, minimize: true }
    }
}

/// Letters that agree on every proposition the formula mentions behave identically;
/// the automaton works on these classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetterClass {
    /// Number of concrete letters in the class.
    pub size: u64,
    /// One member of the class.
    pub representative: Letter,
}

/// Set of letter classes labelling one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    classes: Vec<u32>,
    size: u64,
}

impl Guard {
    /// Number of concrete letters satisfying the guard.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn contains(&self, dfa: &Dfa, letter: Letter) -> bool {
        self.classes.binary_search(&(dfa.class_of(letter) as u32)).is_ok()
    }
}

/// Deterministic, total finite automaton over letter classes.
#[derive(Debug, Clone)]
pub struct Dfa {
    space: LetterSpace,
    support: Vec<PropId>,
    /// `support_pos[p]` is the position of `p` in `support`, if mentioned.
    support_pos: [Option<u8>; 32],
    classes: Vec<LetterClass>,
    delta: Vec<Vec<StateId>>,
    initial: StateId,
    accepting: Vec<bool>,
    dead: Option<StateId>,
    /// States from which every reachable state accepts.
    settled: Vec<bool>,
    residuals: Vec<Dnf>,
    atoms: Arc<Vec<Residual>>,
}

/// Compiles `f` with the default state cap.
pub fn compile(f: &Formula, space: LetterSpace) -> Result<Dfa, CompileError> {
    compile_with(f, space, CompileOptions::default())
}

pub fn compile_with(f: &Formula, space: LetterSpace, opts: CompileOptions) -> Result<Dfa, CompileError> {
    let support: Vec<PropId> = f.support().into_iter().collect();
    if let Some(p) = support.iter().find(|p| p.index() >= space.props) {
        return Err(CompileError::UnknownProposition(p.0));
    }
    let mut support_pos = [None; 32];
    for (i, p) in support.iter().enumerate() {
        support_pos[p.index()] = Some(i as u8);
    }
    let classes = letter_classes(&support, space, opts.max_classes)?;

    let too_large = |_| CompileError::ResidualTooLarge { cap: opts.max_cubes };
    let mut prog = Progressor::new(opts.max_cubes);
    let root = prog.expand(&Residual::from_formula(f, false)).map_err(too_large)?;
    // state 0 is the initial state; it never accepts because the empty trace is rejected
    let mut residuals = vec![root];
    let mut index: HashMap<Dnf, StateId> = HashMap::new();
    let mut delta: Vec<Vec<StateId>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let mut row = Vec::with_capacity(classes.len());
        for c in &classes {
            let next = prog.progress(&residuals[s], c.representative).map_err(too_large)?;
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = residuals.len();
                    if id >= opts.max_states {
                        return Err(CompileError::TooManyStates { cap: opts.max_states });
                    }
                    index.insert(next.clone(), id);
                    residuals.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        if delta.len() <= s {
            delta.resize(s + 1, Vec::new());
        }
        delta[s] = row;
    }
    let accepting: Vec<bool> = residuals.iter().enumerate().map(|(i, r)| i != 0 && prog.accepts_empty(r)).collect();

    let mut dfa = Dfa {
        space,
        support,
        support_pos,
        classes,
        delta,
        initial: 0,
        accepting,
        dead: None,
        settled: vec![],
        residuals,
        atoms: Arc::new(prog.into_atoms()),
    };
    if opts.minimize {
        dfa = dfa.minimized();
    }
    dfa.finish();
    Ok(dfa)
}

fn letter_classes(support: &[PropId], space: LetterSpace, cap: usize) -> Result<Vec<LetterClass>, CompileError> {
    let m = support.len();
    let k = space.props;
    match space.model {
        LetterModel::Free => {
            let count = 1usize << m;
            if count > cap {
                return Err(CompileError::TooManyClasses { support: m, classes: count, cap });
            }
            let size = 1u64 << (k - m);
            Ok((0..count as u32)
                .map(|bits| {
                    let rep = support
                        .iter()
                        .enumerate()
                        .fold(Letter(0), |l, (i, &p)| l.with(p, bits >> i & 1 == 1));
                    LetterClass { size, representative: rep }
                })
                .collect())
        }
        LetterModel::OneHot => {
            let mut out: Vec<LetterClass> =
                support.iter().map(|&p| LetterClass { size: 1, representative: Letter::one_hot(p) }).collect();
            if k > m {
                let outside = (0..k as u8).map(PropId).find(|p| !support.contains(p)).expect("k > m");
                out.push(LetterClass { size: (k - m) as u64, representative: Letter::one_hot(outside) });
            }
            Ok(out)
        }
    }
}

impl Dfa {
    fn minimized(&self) -> Dfa {
        let n = self.delta.len();
        let mut block: Vec<usize> = self.accepting.iter().map(|&a| a as usize).collect();
        let mut count = {
            let mut b = block.clone();
            b.sort();
            b.dedup();
            b.len()
        };
        loop {
            let mut sigs: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut next = Vec::with_capacity(n);
            for s in 0..n {
                let sig = (block[s], self.delta[s].iter().map(|&t| block[t]).collect::<Vec<_>>());
                let fresh = sigs.len();
                next.push(*sigs.entry(sig).or_insert(fresh));
            }
            let new_count = sigs.len();
            block = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        // renumber blocks in breadth-first order from the initial state
        let mut order = vec![usize::MAX; count];
        let mut reps = Vec::with_capacity(count);
        let mut queue = VecDeque::from([self.initial]);
        order[block[self.initial]] = 0;
        reps.push(self.initial);
        while let Some(s) = queue.pop_front() {
            for &t in &self.delta[s] {
                if order[block[t]] == usize::MAX {
                    order[block[t]] = reps.len();
                    reps.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = reps.iter().map(|&r| self.delta[r].iter().map(|&t| order[block[t]]).collect()).collect();
        Dfa {
            space: self.space,
            support: self.support.clone(),
            support_pos: self.support_pos,
            classes: self.classes.clone(),
            delta,
            initial: 0,
            accepting: reps.iter().map(|&r| self.accepting[r]).collect(),
            dead: None,
            settled: vec![],
            residuals: reps.iter().map(|&r| self.residuals[r].clone()).collect(),
            atoms: self.atoms.clone(),
        }
    }

    /// Computes the dead state and settled flags.
    fn finish(&mut self) {
        let n = self.delta.len();
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (s, row) in self.delta.iter().enumerate() {
            for &t in row {
                rev[t].push(s);
            }
        }
        // co-reachability of an accepting state
        let mut live = self.accepting.clone();
        let mut stack: Vec<StateId> = (0..n).filter(|&s| live[s]).collect();
        while let Some(t) = stack.pop() {
            for &s in &rev[t] {
                if !live[s] {
                    live[s] = true;
                    stack.push(s);
                }
            }
        }
        // reachability of a rejecting state
        let mut unsettled: Vec<bool> = self.accepting.iter().map(|a| !a).collect();
        let mut stack: Vec<StateId> = (0..n).filter(|&s| unsettled[s]).collect();
        while let Some(t) = stack.pop() {
            for &s in &rev[t] {
                if !unsettled[s] {
                    unsettled[s] = true;
                    stack.push(s);
                }
            }
        }
        self.settled = unsettled.iter().map(|u| !u).collect();
        let dead: Vec<StateId> = (0..n).filter(|&s| !live[s]).collect();
        self.dead = match dead.as_slice() {
            [] => None,
            [d] => Some(*d),
            // without minimisation several states can be dead; merge them into the first
            [first, rest @ ..] => {
                let first = *first;
                for row in &mut self.delta {
                    for t in row.iter_mut() {
                        if rest.contains(t) {
                            *t = first;
                        }
                    }
                }
                for row in self.delta[first].iter_mut() {
                    *row = first;
                }
                Some(first)
            }
        };
    }

    pub fn space(&self) -> LetterSpace {
        self.space
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states()).filter(|&s| self.accepting[s])
    }

    pub fn dead(&self) -> Option<StateId> {
        self.dead
    }

    pub fn is_dead(&self, s: StateId) -> bool {
        self.dead == Some(s)
    }

    /// True when every state reachable from `s` (including `s`) accepts.
    pub fn is_settled(&self, s: StateId) -> bool {
        self.settled[s]
    }

    pub fn support(&self) -> &[PropId] {
        &self.support
    }

    pub fn classes(&self) -> &[LetterClass] {
        &self.classes
    }

    /// Letter class of a concrete letter.
    pub fn class_of(&self, letter: Letter) -> usize {
        match self.space.model {
            LetterModel::Free => self
                .support
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &p)| acc | (letter.holds(p) as usize) << i),
            LetterModel::OneHot => letter
                .true_props()
                .find_map(|p| self.support_pos[p.index()])
                .map_or(self.support.len(), |i| i as usize),
        }
    }

    pub fn step(&self, s: StateId, letter: Letter) -> StateId {
        self.delta[s][self.class_of(letter)]
    }

    pub fn step_class(&self, s: StateId, class: usize) -> StateId {
        self.delta[s][class]
    }

    pub fn run(&self, trace: &[Letter]) -> StateId {
        trace.iter().fold(self.initial, |s, &l| self.step(s, l))
    }

    pub fn accepts(&self, trace: &[Letter]) -> bool {
        self.accepting[self.run(trace)]
    }

    /// Outgoing transitions of `s`, one per distinct target, in target order.
    pub fn transitions(&self, s: StateId) -> Vec<(Guard, StateId)> {
        let mut by_target: Vec<(StateId, Vec<u32>)> = Vec::new();
        for (c, &t) in self.delta[s].iter().enumerate() {
            match by_target.iter_mut().find(|(tt, _)| *tt == t) {
                Some((_, cs)) => cs.push(c as u32),
                None => by_target.push((t, vec![c as u32])),
            }
        }
        by_target.sort_by_key(|(t, _)| *t);
        by_target
            .into_iter()
            .map(|(t, classes)| {
                let size = classes.iter().map(|&c| self.classes[c as usize].size).sum();
                (Guard { classes, size }, t)
            })
            .collect()
    }

    /// Concrete letters of a guard. Only sensible for small letter spaces.
    pub fn guard_letters(&self, g: &Guard) -> Vec<Letter> {
        self.space.letters().into_iter().filter(|&l| g.contains(self, l)).collect()
    }

    /// Human-readable guard: an explicit letter set for one-hot spaces, otherwise the
    /// prime implicants over the mentioned propositions.
    pub fn guard_string(&self, g: &Guard, alphabet: &Alphabet) -> String {
        match self.space.model {
            LetterModel::OneHot => {
                let names: Vec<&str> =
                    self.guard_letters(g).iter().flat_map(|l| l.true_props()).map(|p| alphabet.name(p)).collect();
                format!("{{{}}}", names.join(","))
            }
            LetterModel::Free => {
                let m = self.support.len();
                if g.classes.len() == self.classes.len() {
                    return "true".into();
                }
                let cubes = prime_implicants(&g.classes, m);
                let terms: Vec<String> = cubes
                    .iter()
                    .map(|&(value, care)| {
                        let lits: Vec<String> = (0..m)
                            .filter(|i| care >> i & 1 == 1)
                            .map(|i| {
                                let name = alphabet.name(self.support[i]);
                                if value >> i & 1 == 1 {
                                    name.to_string()
                                } else {
                                    format!("!{name}")
                                }
                            })
                            .collect();
                        if lits.is_empty() {
                            "true".to_string()
                        } else {
                            lits.join("&")
                        }
                    })
                    .collect();
                terms.join(" | ")
            }
        }
    }

    /// Text dump used by golden tests and the CLI.
    pub fn dump(&self, alphabet: &Alphabet) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states {}", self.num_states());
        let _ = writeln!(out, "initial {}", self.initial);
        let acc: Vec<String> = self.accepting_states().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "accepting {}", acc.join(" "));
        match self.dead {
            Some(d) => {
                let _ = writeln!(out, "dead {d}");
            }
            None => {
                let _ = writeln!(out, "dead -");
            }
        }
        for s in 0..self.num_states() {
            for (g, t) in self.transitions(s) {
                let _ = writeln!(out, "{s} --[{}]--> {t}", self.guard_string(&g, alphabet));
            }
        }
        out
    }

    /// Progressed formula represented by state `s`.
    pub fn state_label(&self, s: StateId, alphabet: &Alphabet) -> String {
        if s == self.initial {
            format!("init:{}", display_dnf(&self.atoms, &self.residuals[s], alphabet))
        } else {
            display_dnf(&self.atoms, &self.residuals[s], alphabet)
        }
    }
}

impl fmt::Display for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.space.props).map(|i| format!("p{i}")).collect();
        f.write_str(&self.dump(&Alphabet::new(names)))
    }
}

/// All prime implicants of the function whose on-set is `minterms` over `m` variables,
/// as `(value, care)` masks, sorted.
fn prime_implicants(minterms: &[u32], m: usize) -> Vec<(u32, u32)> {
    let full = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut current: Vec<(u32, u32)> = minterms.iter().map(|&v| (v, full)).collect();
    current.sort();
    current.dedup();
    let mut primes = Vec::new();
    while !current.is_empty() {
        let mut merged = vec![false; current.len()];
        let mut next = Vec::new();
        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let (vi, ci) = current[i];
                let (vj, cj) = current[j];
                if ci == cj && (vi ^ vj).count_ones() == 1 {
                    let diff = vi ^ vj;
                    next.push((vi & !diff, ci & !diff));
                    merged[i] = true;
                    merged[j] = true;
                }
            }
        }
        primes.extend(current.iter().zip(&merged).filter(|(_, &m)| !m).map(|(c, _)| *c));
        next.sort();
        next.dedup();
        current = next;
    }
    primes.sort();
    primes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;

    fn dfa(text: &str, k: usize, model: LetterModel) -> (Dfa, Alphabet) {
        let alpha = Alphabet::symbols(k);
        let f = parse(text, &alpha).unwrap();
        (compile(&f, LetterSpace::new(k, model)).unwrap(), alpha)
    }

    #[test]
    fn atom_has_three_states() {
        let (d, alpha) = dfa("a", 2, LetterModel::OneHot);
        assert_eq!(d.num_states(), 3);
        let [a, b] = [Letter(1), Letter(2)];
        assert!(d.accepts(&[a]));
        assert!(!d.accepts(&[b]));
        assert!(!d.accepts(&[]));
        assert!(d.accepts(&[a, b, b]));
        assert_eq!(d.dump(&alpha), "states 3\ninitial 0\naccepting 1\ndead 2\n0 --[{a}]--> 1\n0 --[{b}]--> 2\n1 --[{a,b}]--> 1\n2 --[{a,b}]--> 2\n");
    }

    #[test]
    fn tautology_accepts_every_nonempty_trace() {
        let (d, _) = dfa("a | !a", 5, LetterModel::OneHot);
        assert_eq!(d.num_states(), 2);
        assert!(!d.accepts(&[]));
        assert!(d.accepts(&[Letter(4)]));
        assert!(d.dead().is_none());
        assert!(d.is_settled(1));
    }

    #[test]
    fn always_has_accepting_non_settled_state() {
        let (d, _) = dfa("G a", 2, LetterModel::OneHot);
        let s = d.step(d.initial(), Letter(1));
        assert!(d.is_accepting(s) && !d.is_settled(s));
        assert_eq!(d.step(s, Letter(2)), d.dead().unwrap());
    }

    #[test]
    fn free_model_guards_are_partitions() {
        let (d, alpha) = dfa("a U (b & !c)", 3, LetterModel::Free);
        for s in 0..d.num_states() {
            let total: u64 = d.transitions(s).iter().map(|(g, _)| g.size()).sum();
            assert_eq!(total, 8);
        }
        let dump = d.dump(&alpha);
        assert!(dump.contains("b&!c"), "{dump}");
    }

    #[test]
    fn unsatisfiable_formula_collapses_to_dead_initial() {
        let (d, _) = dfa("G a & F b", 2, LetterModel::OneHot);
        assert_eq!(d.num_states(), 1);
        assert_eq!(d.dead(), Some(d.initial()));
    }

    #[test]
    fn state_cap_reported() {
        let alpha = Alphabet::symbols(3);
        let f = parse("X X X X a", &alpha).unwrap();
        let opts = CompileOptions { max_states: 3, ..Default::default() };
        assert_eq!(
            compile_with(&f, LetterSpace::one_hot(3), opts).unwrap_err(),
            CompileError::TooManyStates { cap: 3 }
        );
    }

    #[test]
    fn class_cap_reported() {
        let alpha = Alphabet::symbols(3);
        let f = parse("a & b & c", &alpha).unwrap();
        let opts = CompileOptions { max_classes: 4, ..Default::default() };
        assert!(matches!(
            compile_with(&f, LetterSpace::free(3), opts),
            Err(CompileError::TooManyClasses { support: 3, classes: 8, cap: 4 })
        ));
    }

    #[test]
    fn prime_implicants_cover() {
        // f(x0,x1) = x0 | x1 -> primes x0 and x1
        let p = prime_implicants(&[1, 2, 3], 2);
        assert_eq!(p, vec![(1, 1), (2, 2)]);
    }
}
