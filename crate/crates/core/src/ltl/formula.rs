use std::collections::BTreeSet;
use std::fmt;

use super::alphabet::{Alphabet, PropId};

/// Temporal and boolean operators of the formula language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    Not,
    And,
    Or,
    Next,
    Eventually,
    Always,
    Until,
}

impl Operator {
    pub const ALL: [Operator; 7] = [
        Operator::Not,
        Operator::And,
        Operator::Or,
        Operator::Next,
        Operator::Eventually,
        Operator::Always,
        Operator::Until,
    ];

    pub fn arity(self) -> usize {
        match self {
            Operator::Not | Operator::Next | Operator::Eventually | Operator::Always => 1,
            Operator::And | Operator::Or | Operator::Until => 2,
        }
    }

    pub fn glyph(self) -> &'static str {
        match self {
            Operator::Not => "!",
            Operator::And => "&",
            Operator::Or => "|",
            Operator::Next => "X",
            Operator::Eventually => "F",
            Operator::Always => "G",
            Operator::Until => "U",
        }
    }

    pub fn from_glyph(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.glyph() == s)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.glyph())
    }
}

/// A node label: either an atomic proposition or an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Atom(PropId),
    Op(Operator),
}

impl NodeKind {
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Atom(_) => 0,
            NodeKind::Op(op) => op.arity(),
        }
    }
}

/// LTLf abstract syntax tree. Arity is enforced by construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(PropId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(p: PropId) -> Self {
        Formula::Atom(p)
    }

    pub fn unary(op: Operator, child: Formula) -> Self {
        let c = Box::new(child);
        match op {
            Operator::Not => Formula::Not(c),
            Operator::Next => Formula::Next(c),
            Operator::Eventually => Formula::Eventually(c),
            Operator::Always => Formula::Always(c),
            _ => panic!("{op:?} is not unary"),
        }
    }

    pub fn binary(op: Operator, lhs: Formula, rhs: Formula) -> Self {
        let (l, r) = (Box::new(lhs), Box::new(rhs));
        match op {
            Operator::And => Formula::And(l, r),
            Operator::Or => Formula::Or(l, r),
            Operator::Until => Formula::Until(l, r),
            _ => panic!("{op:?} is not binary"),
        }
    }

    /// Builds a node from its kind and children; `None` if the arity does not match.
    pub fn from_parts(kind: NodeKind, mut children: Vec<Formula>) -> Option<Self> {
        if children.len() != kind.arity() {
            return None;
        }
        Some(match kind {
            NodeKind::Atom(p) => Formula::Atom(p),
            NodeKind::Op(op) if op.arity() == 1 => Formula::unary(op, children.pop()?),
            NodeKind::Op(op) => {
                let r = children.pop()?;
                let l = children.pop()?;
                Formula::binary(op, l, r)
            }
        })
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            Formula::Atom(p) => NodeKind::Atom(*p),
            Formula::Not(_) => NodeKind::Op(Operator::Not),
            Formula::And(..) => NodeKind::Op(Operator::And),
            Formula::Or(..) => NodeKind::Op(Operator::Or),
            Formula::Next(_) => NodeKind::Op(Operator::Next),
            Formula::Eventually(_) => NodeKind::Op(Operator::Eventually),
            Formula::Always(_) => NodeKind::Op(Operator::Always),
            Formula::Until(..) => NodeKind::Op(Operator::Until),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) => vec![],
            Formula::Not(c) | Formula::Next(c) | Formula::Eventually(c) | Formula::Always(c) => {
                vec![c]
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => vec![l, r],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Formula> {
        match self {
            Formula::Atom(_) => vec![],
            Formula::Not(c) | Formula::Next(c) | Formula::Eventually(c) | Formula::Always(c) => {
                vec![c]
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => vec![l, r],
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }

    /// Total number of nodes (operators plus predicates).
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Number of atom leaves.
    pub fn symbol_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            _ => self.children().iter().map(|c| c.symbol_count()).sum(),
        }
    }

    /// Distinct propositions mentioned by the formula.
    pub fn support(&self) -> BTreeSet<PropId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(p) = f {
                out.insert(*p);
            }
        });
        out
    }

    pub fn contains_op(&self, op: Operator) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= f.kind() == NodeKind::Op(op));
        found
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, visitor: &mut impl FnMut(&'a Formula)) {
        visitor(self);
        for c in self.children() {
            c.visit(visitor);
        }
    }

    /// Nodes in pre-order; index 0 is the root.
    pub fn preorder(&self) -> Vec<&Formula> {
        let mut out = Vec::with_capacity(self.node_count());
        self.visit(&mut |f| out.push(f));
        out
    }

    /// Subtree rooted at pre-order index `site`.
    pub fn subtree(&self, site: usize) -> Option<&Formula> {
        self.preorder().get(site).copied()
    }

    /// Pre-order indices of the path from the root to `site` (inclusive).
    pub fn path_to(&self, site: usize) -> Option<Vec<usize>> {
        fn go(f: &Formula, offset: usize, site: usize, path: &mut Vec<usize>) -> bool {
            path.push(offset);
            if offset == site {
                return true;
            }
            let mut next = offset + 1;
            for c in f.children() {
                let n = c.node_count();
                if site < next + n {
                    return go(c, next, site, path);
                }
                next += n;
            }
            path.pop();
            false
        }
        let mut path = Vec::new();
        go(self, 0, site, &mut path).then_some(path)
    }

    /// Returns a copy with the subtree at pre-order index `site` replaced.
    pub fn replace_subtree(&self, site: usize, replacement: Formula) -> Option<Formula> {
        fn go(f: &mut Formula, site: usize, repl: &mut Option<Formula>) {
            if site == 0 {
                *f = repl.take().expect("replacement used once");
                return;
            }
            let mut offset = 1;
            for c in f.children_mut() {
                let n = c.node_count();
                if site < offset + n {
                    go(c, site - offset, repl);
                    return;
                }
                offset += n;
            }
        }
        if site >= self.node_count() {
            return None;
        }
        let mut out = self.clone();
        go(&mut out, site, &mut Some(replacement));
        Some(out)
    }

    /// Rewrites every atom with `f(polarity, p)`; polarity is `true` under an even number of negations.
    pub fn map_atoms(&self, f: &mut impl FnMut(bool, PropId) -> Formula) -> Formula {
        fn go(node: &Formula, positive: bool, f: &mut impl FnMut(bool, PropId) -> Formula) -> Formula {
            match node {
                Formula::Atom(p) => f(positive, *p),
                Formula::Not(c) => Formula::Not(Box::new(go(c, !positive, f))),
                _ => {
                    let children = node.children().into_iter().map(|c| go(c, positive, f)).collect();
                    Formula::from_parts(node.kind(), children).expect("arity preserved")
                }
            }
        }
        go(self, true, f)
    }

    /// Canonical, fully parenthesised rendering.
    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, alphabet }
    }

    /// Tokens in pre-order, as used by sequence encoders.
    pub fn prefix_tokens(&self) -> Vec<NodeKind> {
        self.preorder().into_iter().map(Formula::kind).collect()
    }
}

/// Formats a formula in canonical form. Identical ASTs give identical strings.
pub fn format(f: &Formula, alphabet: &Alphabet) -> String {
    f.display(alphabet).to_string()
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    alphabet: &'a Alphabet,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self.formula, self.alphabet, f)
    }
}

fn write_operand(node: &Formula, alphabet: &Alphabet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if node.is_atom() {
        write_formula(node, alphabet, f)
    } else {
        f.write_str("(")?;
        write_formula(node, alphabet, f)?;
        f.write_str(")")
    }
}

fn write_formula(node: &Formula, alphabet: &Alphabet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Formula::Atom(p) => f.write_str(alphabet.name(*p)),
        Formula::Not(c) => {
            f.write_str("!")?;
            write_operand(c, alphabet, f)
        }
        Formula::Next(c) | Formula::Eventually(c) | Formula::Always(c) => {
            write!(f, "{} ", node_glyph(node))?;
            write_operand(c, alphabet, f)
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => {
            write_operand(l, alphabet, f)?;
            write!(f, " {} ", node_glyph(node))?;
            write_operand(r, alphabet, f)
        }
    }
}

fn node_glyph(node: &Formula) -> &'static str {
    match node.kind() {
        NodeKind::Op(op) => op.glyph(),
        NodeKind::Atom(_) => unreachable!(),
    }
}
