use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::params::{ConvParams, GruParams, LinearParams, ParamStore};
use super::tape::{NodeId, Tape};
use crate::envs::{CraftEnv, CROP, CROP_PLANES};
use crate::ltl::{Alphabet, Formula, NodeKind, Operator};
use crate::meta::{Meta, MetaError};
use crate::{Domain, Scalar};

/// Which network family a model belongs to; `Full` is the compositional model, the
/// rest are ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Full,
    NoTime,
    NoStructure,
    NoStructureNoLanguage,
}

impl Architecture {
    pub const ALL: [Architecture; 4] =
        [Architecture::Full, Architecture::NoTime, Architecture::NoStructure, Architecture::NoStructureNoLanguage];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Full => "full",
            Architecture::NoTime => "no_time",
            Architecture::NoStructure => "no_structure",
            Architecture::NoStructureNoLanguage => "no_structure_no_language",
        }
    }

    /// Whether the network is a tree mirroring the formula.
    pub fn is_tree(self) -> bool {
        matches!(self, Architecture::Full | Architecture::NoTime)
    }
}

impl FromStr for Architecture {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown architecture {s:?}"))
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtractorKind {
    /// Observation vector used as is.
    Identity,
    /// Two valid 3x3 convolutions over the egocentric crop, then a projection.
    Craft,
}

impl ExtractorKind {
    pub fn name(self) -> &'static str {
        match self {
            ExtractorKind::Identity => "identity",
            ExtractorKind::Craft => "craft",
        }
    }
}

impl FromStr for ExtractorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(ExtractorKind::Identity),
            "craft" => Ok(ExtractorKind::Craft),
            other => Err(format!("unknown extractor {other:?}")),
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub extractor: ExtractorKind,
    pub obs_dim: usize,
    pub actions: usize,
    pub hidden: usize,
    pub message: usize,
    pub layers: usize,
    /// Width of the formula embedding of the no-structure ablation.
    pub embedding: usize,
    /// Output width of the craft extractor.
    pub features: usize,
    pub conv_channels: (usize, usize),
    pub init_bound: f64,
    pub seed: u64,
    /// Predicate tokens, in registry order.
    pub alphabet: Alphabet,
}

impl ModelConfig {
    pub fn symbol(arch: Architecture, symbols: usize, actions: usize) -> Self {
        Self {
            arch,
            extractor: ExtractorKind::Identity,
            obs_dim: actions + 1,
            actions,
            hidden: 64,
            message: 32,
            layers: 1,
            embedding: 32,
            features: actions + 1,
            conv_channels: (16, 32),
            init_bound: 0.125,
            seed: 0,
            alphabet: Alphabet::symbols(symbols),
        }
    }

    pub fn craft(arch: Architecture) -> Self {
        Self {
            arch,
            extractor: ExtractorKind::Craft,
            obs_dim: CROP_PLANES * CROP * CROP + CraftEnv::FLAT_FEATURES,
            actions: 5,
            hidden: 64,
            message: 32,
            layers: 2,
            embedding: 32,
            features: 64,
            conv_channels: (16, 32),
            init_bound: 0.125,
            seed: 0,
            alphabet: Alphabet::craft_with_closer(),
        }
    }

    pub fn for_domain(domain: Domain, arch: Architecture, symbols: usize, actions: usize) -> Self {
        match domain {
            Domain::Symbol => Self::symbol(arch, symbols, actions),
            Domain::Craft => Self::craft(arch),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self.extractor {
            ExtractorKind::Identity => self.obs_dim,
            ExtractorKind::Craft => self.features,
        }
    }

    pub fn to_meta(&self) -> Meta {
        let mut m = Meta::new();
        m.set("arch", self.arch);
        m.set("extractor", self.extractor);
        m.set("obs_dim", self.obs_dim);
        m.set("actions", self.actions);
        m.set("hidden", self.hidden);
        m.set("message", self.message);
        m.set("layers", self.layers);
        m.set("embedding", self.embedding);
        m.set("features", self.features);
        m.set("conv_channels", format!("{},{}", self.conv_channels.0, self.conv_channels.1));
        m.set("init_bound", self.init_bound);
        m.set("model_seed", self.seed);
        m.set("tokens", self.alphabet.names().join(","));
        m
    }

    pub fn from_meta(m: &Meta) -> Result<Self, MetaError> {
        let need = |k: &str| m.get(k).ok_or_else(|| MetaError::BadValue { key: k.into(), value: "<missing>".into() });
        let bad = |k: &str, v: &str| MetaError::BadValue { key: k.into(), value: v.into() };
        let arch: Architecture = need("arch")?.parse().map_err(|_| bad("arch", m.get("arch").unwrap()))?;
        let extractor: ExtractorKind =
            need("extractor")?.parse().map_err(|_| bad("extractor", m.get("extractor").unwrap()))?;
        let names = need("tokens")?;
        let alphabet = Alphabet::new(names.split(',').filter(|s| !s.is_empty()));
        let mut c = Self { arch, extractor, alphabet, ..Self::symbol(arch, 1, 1) };
        m.apply("obs_dim", &mut c.obs_dim)?;
        m.apply("actions", &mut c.actions)?;
        m.apply("hidden", &mut c.hidden)?;
        m.apply("message", &mut c.message)?;
        m.apply("layers", &mut c.layers)?;
        m.apply("embedding", &mut c.embedding)?;
        m.apply("features", &mut c.features)?;
        if let Some(v) = m.get("conv_channels") {
            let (a, b) = v.split_once(',').ok_or_else(|| bad("conv_channels", v))?;
            c.conv_channels =
                (a.parse().map_err(|_| bad("conv_channels", v))?, b.parse().map_err(|_| bad("conv_channels", v))?);
        }
        m.apply("init_bound", &mut c.init_bound)?;
        m.apply("model_seed", &mut c.seed)?;
        Ok(c)
    }
}

/// Every token a registry over `alphabet` holds, in registry order.
pub fn token_keys(alphabet: &Alphabet) -> Vec<NodeKind> {
    Operator::ALL.iter().map(|&op| NodeKind::Op(op)).chain(alphabet.props().map(NodeKind::Atom)).collect()
}

pub fn token_name(key: NodeKind, alphabet: &Alphabet) -> String {
    match key {
        NodeKind::Atom(p) => format!("prop.{}", alphabet.name(p)),
        NodeKind::Op(op) => match op {
            Operator::Not => "not",
            Operator::And => "and",
            Operator::Or => "or",
            Operator::Next => "next",
            Operator::Eventually => "eventually",
            Operator::Always => "always",
            Operator::Until => "until",
        }
        .to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Gru(GruParams),
    /// Stateless `tanh(W x + b)`.
    Dense(LinearParams),
}

/// Parameters of one token's sub-network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenParams {
    pub cells: Vec<Cell>,
    /// Decodes this node's new state into the message sent to its parent.
    pub up: LinearParams,
    /// Decodes this node's previous state into the message sent to its children.
    pub down: LinearParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CraftExtractor {
    pub conv1: ConvParams,
    pub conv2: ConvParams,
    pub proj: LinearParams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatParams {
    /// Present only when the formula is embedded.
    pub encoder: Option<GruParams>,
    pub trunk: Vec<GruParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<S> {
    pub config: ModelConfig,
    pub store: ParamStore<S>,
    pub extractor: Option<CraftExtractor>,
    tokens: HashMap<NodeKind, TokenParams>,
    pub flat: Option<FlatParams>,
    pub actor: LinearParams,
    pub critic: LinearParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssembleError {
    #[error("predicate #{0} is outside the model alphabet")]
    UnknownPredicate(usize),
}

/// Formula tree flattened in post-order; the root is the last node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub nodes: Vec<AsmNode>,
    /// Prefix token sequence, consumed by the formula encoder.
    pub prefix: Vec<NodeKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsmNode {
    pub key: NodeKind,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

impl Assembly {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Recurrent state of one episode; tape handles are valid for the tape the steps ran on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpisodeState {
    /// Per tree node (or one entry for flat models), one state per layer.
    pub layers: Vec<Vec<NodeId>>,
    pub embedding: Option<NodeId>,
}

impl EpisodeState {
    pub fn is_fresh(&self) -> bool {
        self.layers.is_empty()
    }

    /// Top-layer state of every node.
    pub fn top(&self) -> Vec<NodeId> {
        self.layers.iter().map(|l| *l.last().expect("at least one layer")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutput {
    pub logits: NodeId,
    pub value: NodeId,
    /// State the heads read from.
    pub root: NodeId,
}

impl<S: Scalar> Model<S> {
    /// Builds a model with every parameter drawn from a generator seeded by `config.seed`.
    pub fn new(config: ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let bound = config.init_bound;
        let extractor = match config.extractor {
            ExtractorKind::Identity => None,
            ExtractorKind::Craft => {
                let (c1, c2) = config.conv_channels;
                let conv1 = ConvParams::new(&mut store, &mut rng, "extractor.conv1", CROP_PLANES, c1, 3, bound);
                let conv2 = ConvParams::new(&mut store, &mut rng, "extractor.conv2", c1, c2, 3, bound);
                let side = CROP - 4;
                let flat = config.obs_dim - CROP_PLANES * CROP * CROP;
                let proj = LinearParams::new(
                    &mut store,
                    &mut rng,
                    "extractor.proj",
                    config.features,
                    c2 * side * side + flat,
                    bound,
                );
                Some(CraftExtractor { conv1, conv2, proj })
            }
        };
        let feat = config.feature_dim();
        let (h, msg) = (config.hidden, config.message);
        let mut tokens = HashMap::new();
        let mut flat = None;
        if config.arch.is_tree() {
            let input = feat + 3 * msg;
            for key in token_keys(&config.alphabet) {
                let name = format!("token.{}", token_name(key, &config.alphabet));
                let cells = (0..config.layers)
                    .map(|l| {
                        let width = if l == 0 { input } else { h };
                        let cell_name = format!("{name}.cell{l}");
                        match config.arch {
                            Architecture::NoTime => {
                                Cell::Dense(LinearParams::new(&mut store, &mut rng, &cell_name, h, width, bound))
                            }
                            _ => Cell::Gru(GruParams::new(&mut store, &mut rng, &cell_name, width, h, bound)),
                        }
                    })
                    .collect();
                let up = LinearParams::new(&mut store, &mut rng, &format!("{name}.up"), msg, h, bound);
                let down = LinearParams::new(&mut store, &mut rng, &format!("{name}.down"), msg, h, bound);
                tokens.insert(key, TokenParams { cells, up, down });
            }
        } else {
            let encoder = (config.arch == Architecture::NoStructure).then(|| {
                let vocab = Operator::ALL.len() + config.alphabet.len();
                GruParams::new(&mut store, &mut rng, "encoder", vocab, config.embedding, bound)
            });
            let mut width = feat + encoder.map_or(0, |e| e.hidden);
            let trunk = (0..config.layers)
                .map(|l| {
                    let cell = GruParams::new(&mut store, &mut rng, &format!("trunk.cell{l}"), width, h, bound);
                    width = h;
                    cell
                })
                .collect();
            flat = Some(FlatParams { encoder, trunk });
        }
        let actor = LinearParams::new(&mut store, &mut rng, "actor", config.actions, h, bound);
        let critic = LinearParams::new(&mut store, &mut rng, "critic", 1, h, bound);
        Self { config, store, extractor, tokens, flat, actor, critic }
    }

    /// Rebuilds the layout for `config` and installs saved values.
    pub fn with_values(config: ModelConfig, values: Vec<S>) -> Option<Self> {
        let mut m = Self::new(config);
        if values.len() != m.store.len() {
            return None;
        }
        m.store.data = values;
        Some(m)
    }

    pub fn token(&self, key: NodeKind) -> Option<&TokenParams> {
        self.tokens.get(&key)
    }

    pub fn params(&self) -> &[S] {
        &self.store.data
    }

    pub fn assemble(&self, f: &Formula) -> Result<Assembly, AssembleError> {
        fn walk(f: &Formula, nodes: &mut Vec<AsmNode>) -> usize {
            let children: Vec<usize> = f.children().into_iter().map(|c| walk(c, nodes)).collect();
            let id = nodes.len();
            for &c in &children {
                nodes[c].parent = Some(id);
            }
            nodes.push(AsmNode { key: f.kind(), children, parent: None });
            id
        }
        for p in f.support() {
            if !self.config.alphabet.contains(p) {
                return Err(AssembleError::UnknownPredicate(p.index()));
            }
        }
        let mut nodes = Vec::with_capacity(f.node_count());
        walk(f, &mut nodes);
        Ok(Assembly { nodes, prefix: f.prefix_tokens() })
    }

    fn features(&self, tape: &mut Tape<S>, obs: &[S]) -> NodeId {
        assert_eq!(obs.len(), self.config.obs_dim, "observation width");
        let p = &self.store.data;
        match self.extractor {
            None => tape.input(obs),
            Some(ex) => {
                let split = CROP_PLANES * CROP * CROP;
                let crop = tape.input(&obs[..split]);
                let flat = tape.input(&obs[split..]);
                let c1 = tape.conv2d(p, ex.conv1, crop, CROP, CROP);
                let r1 = tape.relu(c1);
                let c2 = tape.conv2d(p, ex.conv2, r1, CROP - 2, CROP - 2);
                let r2 = tape.relu(c2);
                let cat = tape.concat(&[r2, flat]);
                tape.linear(p, ex.proj, cat)
            }
        }
    }

    fn token_index(&self, key: NodeKind) -> usize {
        match key {
            NodeKind::Op(op) => Operator::ALL.iter().position(|&o| o == op).expect("listed"),
            NodeKind::Atom(p) => Operator::ALL.len() + p.index(),
        }
    }

    /// One time step: updates `state` and returns the head outputs.
    pub fn step(&self, tape: &mut Tape<S>, asm: &Assembly, state: &mut EpisodeState, obs: &[S]) -> StepOutput {
        let feat = self.features(tape, obs);
        let root = if self.config.arch.is_tree() {
            self.tree_step(tape, asm, state, feat)
        } else {
            self.flat_step(tape, asm, state, feat)
        };
        let p = &self.store.data;
        let logits = tape.linear(p, self.actor, root);
        let value = tape.linear(p, self.critic, root);
        StepOutput { logits, value, root }
    }

    fn tree_step(&self, tape: &mut Tape<S>, asm: &Assembly, state: &mut EpisodeState, feat: NodeId) -> NodeId {
        let p = &self.store.data;
        let (h, msg) = (self.config.hidden, self.config.message);
        let zero_msg = tape.zeros(msg);
        let zero_h = tape.zeros(h);
        let fresh = state.is_fresh();
        let stateful = self.config.arch == Architecture::Full;
        let prev_top = if fresh { Vec::new() } else { state.top() };
        let mut next: Vec<Vec<NodeId>> = Vec::with_capacity(asm.len());
        for (i, node) in asm.nodes.iter().enumerate() {
            let tok = &self.tokens[&node.key];
            let down = match node.parent {
                Some(parent) if stateful && !fresh => {
                    tape.linear(p, self.tokens[&asm.nodes[parent].key].down, prev_top[parent])
                }
                _ => zero_msg,
            };
            let mut parts = vec![feat, down];
            for &c in &node.children {
                let child_top = *next[c].last().expect("child evaluated first");
                parts.push(tape.linear(p, self.tokens[&asm.nodes[c].key].up, child_top));
            }
            while parts.len() < 4 {
                parts.push(zero_msg);
            }
            let mut x = tape.concat(&parts);
            let mut layers = Vec::with_capacity(tok.cells.len());
            for (l, cell) in tok.cells.iter().enumerate() {
                x = match *cell {
                    Cell::Gru(g) => {
                        let prev = if fresh { zero_h } else { state.layers[i][l] };
                        tape.gru(p, g, x, prev)
                    }
                    Cell::Dense(lin) => {
                        let y = tape.linear(p, lin, x);
                        tape.tanh(y)
                    }
                };
                layers.push(x);
            }
            next.push(layers);
        }
        state.layers = next;
        *state.layers[asm.root()].last().expect("layers")
    }

    fn flat_step(&self, tape: &mut Tape<S>, asm: &Assembly, state: &mut EpisodeState, feat: NodeId) -> NodeId {
        let p = &self.store.data;
        let flat = self.flat.as_ref().expect("flat model");
        let fresh = state.is_fresh();
        let mut input = feat;
        if let Some(enc) = flat.encoder {
            let emb = match state.embedding {
                Some(e) => e,
                None => {
                    let vocab = enc.input;
                    let mut hstate = tape.zeros(enc.hidden);
                    for &tok in &asm.prefix {
                        let mut onehot = vec![S::zero(); vocab];
                        onehot[self.token_index(tok)] = S::one();
                        let x = tape.input(&onehot);
                        hstate = tape.gru(p, enc, x, hstate);
                    }
                    state.embedding = Some(hstate);
                    hstate
                }
            };
            input = tape.concat(&[feat, emb]);
        }
        let zero_h = if fresh { Some(tape.zeros(self.config.hidden)) } else { None };
        let mut layers = Vec::with_capacity(flat.trunk.len());
        let mut x = input;
        for (l, &cell) in flat.trunk.iter().enumerate() {
            let prev = zero_h.unwrap_or_else(|| state.layers[0][l]);
            x = tape.gru(p, cell, x, prev);
            layers.push(x);
        }
        state.layers = vec![layers];
        x
    }

    /// Flat indices of every parameter the forward pass of `asm` can touch.
    pub fn used_ranges(&self, asm: &Assembly) -> Vec<std::ops::Range<usize>> {
        let mut prefixes: Vec<String> = vec!["extractor.".into(), "actor.".into(), "critic.".into()];
        if self.config.arch.is_tree() {
            for n in &asm.nodes {
                prefixes.push(format!("token.{}.", token_name(n.key, &self.config.alphabet)));
            }
        } else {
            prefixes.push("encoder.".into());
            prefixes.push("trunk.".into());
        }
        self.store
            .entries()
            .iter()
            .filter(|e| prefixes.iter().any(|p| e.name.starts_with(p.as_str())))
            .map(|e| e.range())
            .collect()
    }
}

/// Index of the largest logit, lowest index on ties.
pub fn argmax<S: Scalar>(logits: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax in `f64`.
pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<f64> {
    let xs: Vec<f64> = logits.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;

    fn symbol_model(arch: Architecture) -> Model<f64> {
        Model::new(ModelConfig { seed: 3, ..ModelConfig::symbol(arch, 3, 3) })
    }

    fn run(m: &Model<f64>, text: &str, steps: usize) -> Vec<Vec<f64>> {
        let asm = m.assemble(&parse(text, &m.config.alphabet).unwrap()).unwrap();
        let mut tape = Tape::new();
        let mut st = EpisodeState::default();
        (0..steps)
            .map(|t| {
                let obs = [0.0, 1.0, 0.0, t as f64 / 8.0];
                let out = m.step(&mut tape, &asm, &mut st, &obs);
                tape.value(out.logits).to_vec()
            })
            .collect()
    }

    #[test]
    fn post_order_layout() {
        let m = Model::<f64>::new(ModelConfig::craft(Architecture::Full));
        let f = parse("(G gem) & (F factory)", &m.config.alphabet).unwrap();
        let asm = m.assemble(&f).unwrap();
        assert_eq!(asm.len(), 5);
        assert_eq!(asm.nodes[asm.root()].key, NodeKind::Op(Operator::And));
        assert_eq!(asm.nodes[asm.root()].children, vec![1, 3]);
        assert_eq!(asm.nodes[0].parent, Some(1));
    }

    #[test]
    fn zero_parameters_give_uniform_policy() {
        let mut m = symbol_model(Architecture::Full);
        m.store.data.iter_mut().for_each(|v| *v = 0.0);
        let bias = m.critic.b;
        m.store.data[bias] = 0.25;
        let asm = m.assemble(&parse("a U (b & c)", &m.config.alphabet).unwrap()).unwrap();
        let mut tape = Tape::new();
        let out = m.step(&mut tape, &asm, &mut EpisodeState::default(), &[1.0, 0.0, 0.0, 0.5]);
        assert!(tape.value(out.logits).iter().all(|&v| v == 0.0));
        assert_eq!(tape.value(out.value), &[0.25]);
    }

    #[test]
    fn child_order_matters() {
        let m = symbol_model(Architecture::Full);
        assert_ne!(run(&m, "a & X b", 1), run(&m, "X b & a", 1));
    }

    #[test]
    fn unknown_predicate_rejected() {
        let m = symbol_model(Architecture::Full);
        let f = parse("e", &Alphabet::symbols(5)).unwrap();
        assert_eq!(m.assemble(&f), Err(AssembleError::UnknownPredicate(4)));
    }

    #[test]
    fn no_time_is_stateless() {
        let m = symbol_model(Architecture::NoTime);
        let asm = m.assemble(&parse("F (a & X b)", &m.config.alphabet).unwrap()).unwrap();
        let mut tape = Tape::new();
        let mut st = EpisodeState::default();
        let first = m.step(&mut tape, &asm, &mut st, &[0.0, 0.0, 1.0, 0.0]);
        let first = tape.value(first.logits).to_vec();
        for _ in 0..4 {
            let o = m.step(&mut tape, &asm, &mut st, &[0.0, 0.0, 1.0, 0.0]);
            assert_eq!(tape.value(o.logits), first.as_slice());
        }
    }

    #[test]
    fn language_blind_baseline_ignores_formula() {
        let m = symbol_model(Architecture::NoStructureNoLanguage);
        assert_eq!(run(&m, "G a", 3), run(&m, "F (b U c)", 3));
        let e = symbol_model(Architecture::NoStructure);
        assert_ne!(run(&e, "G a", 1), run(&e, "F (b U c)", 1));
        assert_eq!(e.flat.as_ref().unwrap().encoder.unwrap().hidden, 32);
    }

    #[test]
    fn shapes_stay_fixed_for_deep_trees() {
        let m = Model::<f64>::new(ModelConfig::craft(Architecture::Full));
        let a = &m.config.alphabet;
        let mut f = parse("gem U closer_gold", a).unwrap();
        for op in [Operator::Next, Operator::Always, Operator::Eventually].iter().cycle().take(17) {
            f = Formula::unary(*op, f);
        }
        assert_eq!(f.node_count(), 20);
        let asm = m.assemble(&f).unwrap();
        let mut tape = Tape::new();
        let mut st = EpisodeState::default();
        let obs = vec![0.0; m.config.obs_dim];
        for _ in 0..2 {
            let o = m.step(&mut tape, &asm, &mut st, &obs);
            assert_eq!(tape.value(o.logits).len(), 5);
            assert_eq!(tape.value(o.value).len(), 1);
            assert!(st.layers.iter().all(|l| l.len() == 2 && l.iter().all(|&n| tape.value(n).len() == 64)));
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.5, 1.0, 1.0]), 1);
        let p = softmax(&[0.0f64; 5]);
        assert!((p[3] - 0.2).abs() < 1e-15);
    }
}
