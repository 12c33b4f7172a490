use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::alphabet::PropId;
use super::formula::{Formula, NodeKind, Operator};

/// Largest element count a prior may put mass on.
pub const MAX_ELEMENTS: usize = 20;

/// Discrete distribution over the total number of formula elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementPrior {
    /// `weights[m - 1]` is the unnormalised mass of `m` elements.
    weights: Vec<f64>,
}

impl ElementPrior {
    /// Builds a prior from `(element_count, weight)` pairs.
    pub fn from_weights(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut weights = vec![0.0; MAX_ELEMENTS];
        for (m, w) in pairs {
            assert!((1..=MAX_ELEMENTS).contains(&m), "element count {m} outside 1..={MAX_ELEMENTS}");
            assert!(w >= 0.0 && w.is_finite());
            weights[m - 1] += w;
        }
        assert!(weights.iter().any(|&w| w > 0.0), "prior has no mass");
        while weights.last() == Some(&0.0) {
            weights.pop();
        }
        Self { weights }
    }

    pub fn uniform(lo: usize, hi: usize) -> Self {
        assert!(lo <= hi);
        Self::from_weights((lo..=hi).map(|m| (m, 1.0)))
    }

    pub fn point(m: usize) -> Self {
        Self::from_weights([(m, 1.0)])
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i + 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        WeightedIndex::new(&self.weights).expect("valid weights").sample(rng) + 1
    }
}

/// Which operators the sampler may emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSet {
    pub unary: Vec<Operator>,
    pub binary: Vec<Operator>,
}

impl OperatorSet {
    pub fn full() -> Self {
        Self {
            unary: vec![Operator::Not, Operator::Next, Operator::Eventually, Operator::Always],
            binary: vec![Operator::And, Operator::Or, Operator::Until],
        }
    }

    pub fn without_negation() -> Self {
        let mut s = Self::full();
        s.unary.retain(|&op| op != Operator::Not);
        s
    }

    pub fn with_negation(negation: bool) -> Self {
        if negation {
            Self::full()
        } else {
            Self::without_negation()
        }
    }
}

impl Default for OperatorSet {
    fn default() -> Self {
        Self::full()
    }
}

/// Draws an element count from `prior` and grows a tree of exactly that size.
///
/// Growth repeatedly picks a uniformly random open slot and fills it with a node kind drawn
/// uniformly from the kinds that keep the remaining budget fillable; atoms are labelled
/// uniformly from `alphabet`.
pub fn sample_formula<R: Rng + ?Sized>(
    rng: &mut R,
    prior: &ElementPrior,
    alphabet: &[PropId],
    ops: &OperatorSet,
) -> Formula {
    let m = prior.sample(rng);
    sample_formula_with_size(rng, m, alphabet, ops)
}

pub fn sample_formula_with_size<R: Rng + ?Sized>(
    rng: &mut R,
    elements: usize,
    alphabet: &[PropId],
    ops: &OperatorSet,
) -> Formula {
    assert!(elements >= 1);
    assert!(!alphabet.is_empty(), "alphabet must not be empty");
    assert!(
        !ops.unary.is_empty() || elements % 2 == 1,
        "no tree with {elements} elements exists without unary operators"
    );

    struct Node {
        kind: NodeKind,
        children: Vec<usize>,
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(elements);
    // (parent, child position); parent == usize::MAX marks the root slot
    let mut open: Vec<(usize, usize)> = vec![(usize::MAX, 0)];
    let mut budget = elements;
    let mut kinds: Vec<(usize, Option<Operator>)> = Vec::new();

    while !open.is_empty() {
        let slot_count = open.len();
        let slot = open.swap_remove(rng.gen_range(0..slot_count));
        kinds.clear();
        let fits = |arity: usize| {
            let s = slot_count - 1 + arity;
            let r = budget - 1;
            s <= r && (s == 0) == (r == 0) && (!ops.unary.is_empty() || (r - s) % 2 == 0)
        };
        if fits(0) {
            kinds.push((0, None));
        }
        if fits(1) {
            kinds.extend(ops.unary.iter().map(|&op| (1, Some(op))));
        }
        if fits(2) {
            kinds.extend(ops.binary.iter().map(|&op| (2, Some(op))));
        }
        let (arity, op) = kinds[rng.gen_range(0..kinds.len())];
        let kind = match op {
            None => NodeKind::Atom(alphabet[rng.gen_range(0..alphabet.len())]),
            Some(op) => NodeKind::Op(op),
        };
        let id = nodes.len();
        nodes.push(Node { kind, children: vec![usize::MAX; arity] });
        if slot.0 != usize::MAX {
            nodes[slot.0].children[slot.1] = id;
        }
        open.extend((0..arity).map(|i| (id, i)));
        budget -= 1;
    }
    debug_assert_eq!(budget, 0);

    fn build(nodes: &[Node], i: usize) -> Formula {
        let children = nodes[i].children.iter().map(|&c| build(nodes, c)).collect();
        Formula::from_parts(nodes[i].kind, children).expect("arity fixed at growth")
    }
    build(&nodes, 0)
}

/// Replaces the subtree at a uniformly chosen node with a fresh draw from `prior`.
pub fn mutate_subtree<R: Rng + ?Sized>(
    rng: &mut R,
    f: &Formula,
    prior: &ElementPrior,
    alphabet: &[PropId],
    ops: &OperatorSet,
) -> Formula {
    let site = rng.gen_range(0..f.node_count());
    let replacement = sample_formula(rng, prior, alphabet, ops);
    f.replace_subtree(site, replacement).expect("site within tree")
}
