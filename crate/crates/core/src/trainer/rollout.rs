use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::automaton::{compile, CompileError, Dfa, Letter, LetterModel, LetterSpace, MonitorStatus};
use crate::compnet::{argmax, softmax, AssembleError, EpisodeState, Model, StepRecord, Tape};
use crate::envs::{
    transform_closer, CraftConfig, CraftEnv, Environment, Episode, Outcome, RewardSpec, SymbolConfig, SymbolEnv,
};
use crate::ltl::{Alphabet, Formula};
use crate::{Domain, Scalar};

/// Domain-level settings shared by every task of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSetting {
    pub domain: Domain,
    pub symbols: usize,
    pub model: LetterModel,
    pub horizon: usize,
    pub map_size: usize,
    pub spec: RewardSpec,
}

impl TaskSetting {
    pub fn symbol(symbols: usize, horizon: usize) -> Self {
        Self {
            domain: Domain::Symbol,
            symbols,
            model: LetterModel::OneHot,
            horizon,
            map_size: 7,
            spec: RewardSpec::default(),
        }
    }

    pub fn craft(horizon: usize, map_size: usize) -> Self {
        Self { domain: Domain::Craft, symbols: 0, model: LetterModel::Free, horizon, map_size, spec: RewardSpec::default() }
    }

    /// Alphabet the network and the monitor see.
    pub fn network_alphabet(&self) -> Alphabet {
        match self.domain {
            Domain::Symbol => Alphabet::symbols(self.symbols),
            Domain::Craft => Alphabet::craft_with_closer(),
        }
    }

    pub fn monitor_space(&self) -> LetterSpace {
        LetterSpace::new(self.network_alphabet().len(), self.model)
    }

    pub fn action_count(&self) -> usize {
        match self.domain {
            Domain::Symbol => self.model.letter_count(self.symbols) as usize,
            Domain::Craft => 5,
        }
    }

    /// Fresh environment; Craft draws its map from `rng`.
    pub fn env<R: Rng + ?Sized>(&self, rng: &mut R) -> TaskEnv {
        match self.domain {
            Domain::Symbol => TaskEnv::Symbol(SymbolEnv::new(SymbolConfig {
                symbols: self.symbols,
                horizon: self.horizon,
                model: self.model,
            })),
            Domain::Craft => {
                TaskEnv::Craft(CraftEnv::random(CraftConfig { size: self.map_size, horizon: self.horizon }, rng))
            }
        }
    }
}

/// A formula ready for execution: what the network reads and the automaton that judges.
#[derive(Debug, Clone)]
pub struct Task {
    pub text: String,
    pub formula: Formula,
    pub dfa: Arc<Dfa>,
}

impl Task {
    /// Craft formulas are rewritten with progress predicates before compiling.
    pub fn new(setting: &TaskSetting, f: &Formula, text: &str) -> Result<Self, CompileError> {
        let formula = match setting.domain {
            Domain::Symbol => f.clone(),
            Domain::Craft => transform_closer(f),
        };
        let dfa = compile(&formula, setting.monitor_space())?;
        Ok(Self { text: text.to_string(), formula, dfa: Arc::new(dfa) })
    }
}

#[derive(Debug, Clone)]
pub enum TaskEnv {
    Symbol(SymbolEnv),
    Craft(CraftEnv),
}

impl Environment for TaskEnv {
    fn action_count(&self) -> usize {
        match self {
            TaskEnv::Symbol(e) => e.action_count(),
            TaskEnv::Craft(e) => e.action_count(),
        }
    }

    fn obs_dim(&self) -> usize {
        match self {
            TaskEnv::Symbol(e) => e.obs_dim(),
            TaskEnv::Craft(e) => e.obs_dim(),
        }
    }

    fn observe(&self) -> Vec<f64> {
        match self {
            TaskEnv::Symbol(e) => e.observe(),
            TaskEnv::Craft(e) => e.observe(),
        }
    }

    fn apply(&mut self, action: usize) -> Letter {
        match self {
            TaskEnv::Symbol(e) => e.apply(action),
            TaskEnv::Craft(e) => e.apply(action),
        }
    }

    fn action_name(&self, action: usize) -> String {
        match self {
            TaskEnv::Symbol(e) => e.action_name(action),
            TaskEnv::Craft(e) => e.action_name(action),
        }
    }

    fn horizon(&self) -> usize {
        match self {
            TaskEnv::Symbol(e) => e.horizon(),
            TaskEnv::Craft(e) => e.horizon(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Sample from the policy.
    Train,
    /// Highest-probability action, lowest index on ties.
    Eval,
}

/// Everything observable about a finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub actions: Vec<usize>,
    pub letters: Vec<Letter>,
    pub rewards: Vec<f64>,
    pub states: Vec<usize>,
    pub statuses: Vec<MonitorStatus>,
    pub outcome: Outcome,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// A model-driven episode with the tape needed for its gradient.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub tape: Tape<S>,
    pub steps: Vec<StepRecord>,
    pub log: EpisodeLog,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub entropies: Vec<f64>,
}

/// Generator for a (purpose, index) pair of a seeded run.
pub fn derived_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(index);
    rng
}

pub const PURPOSE_ROLLOUT: u64 = 1;
pub const PURPOSE_EVAL: u64 = 2;
pub const PURPOSE_SHUFFLE: u64 = 3;

fn pick<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Runs `model` on `task` until the episode ends.
pub fn run_episode<S: Scalar, R: Rng + ?Sized>(
    model: &Model<S>,
    task: &Task,
    env: TaskEnv,
    spec: RewardSpec,
    mode: Mode,
    rng: &mut R,
) -> Result<Trajectory<S>, AssembleError> {
    let asm = model.assemble(&task.formula)?;
    let mut ep = Episode::new(env, task.dfa.clone(), spec);
    let mut tape = Tape::new();
    let mut state = EpisodeState::default();
    let mut steps = Vec::new();
    let (mut log_probs, mut values, mut entropies) = (Vec::new(), Vec::new(), Vec::new());
    let mut log = EpisodeLog {
        actions: vec![],
        letters: vec![],
        rewards: vec![],
        states: vec![],
        statuses: vec![],
        outcome: Outcome::Timeout,
    };
    while !ep.done() {
        let obs: Vec<S> = ep.observe().into_iter().map(S::of).collect();
        let out = model.step(&mut tape, &asm, &mut state, &obs);
        let logits = tape.value(out.logits);
        let probs = softmax(logits);
        let action = match mode {
            Mode::Train => pick(rng, &probs),
            Mode::Eval => argmax(logits),
        };
        log_probs.push(probs[action].ln());
        entropies.push(-probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>());
        values.push(tape.value(out.value)[0].to_f64().unwrap_or(f64::NAN));
        let r = ep.step(action);
        steps.push(StepRecord { logits: out.logits, value: out.value, action, reward: r.reward });
        log.actions.push(action);
        log.letters.push(r.letter);
        log.rewards.push(r.reward);
        log.states.push(r.monitor.current);
        log.statuses.push(r.monitor.status);
        if let Some(o) = r.outcome {
            log.outcome = o;
        }
    }
    Ok(Trajectory { tape, steps, log, log_probs, values, entropies })
}

/// Runs a hand-written policy; it sees the environment before each step.
pub fn run_scripted(task: &Task, env: TaskEnv, spec: RewardSpec, mut policy: impl FnMut(&TaskEnv) -> usize) -> EpisodeLog {
    let mut ep = Episode::new(env, task.dfa.clone(), spec);
    let mut log = EpisodeLog {
        actions: vec![],
        letters: vec![],
        rewards: vec![],
        states: vec![],
        statuses: vec![],
        outcome: Outcome::Timeout,
    };
    while !ep.done() {
        let action = policy(&ep.env);
        let r = ep.step(action);
        log.actions.push(action);
        log.letters.push(r.letter);
        log.rewards.push(r.reward);
        log.states.push(r.monitor.current);
        log.statuses.push(r.monitor.status);
        if let Some(o) = r.outcome {
            log.outcome = o;
        }
    }
    log
}

/// One episode per task, in parallel; episode `i` uses stream `base_index + i`.
pub fn collect_rollouts<S: Scalar>(
    model: &Model<S>,
    tasks: &[&Task],
    setting: &TaskSetting,
    mode: Mode,
    seed: u64,
    purpose: u64,
    base_index: u64,
) -> Result<Vec<Trajectory<S>>, AssembleError> {
    tasks
        .par_iter()
        .enumerate()
        .map(|(i, task)| {
            let mut rng = derived_rng(seed, purpose, base_index + i as u64);
            let env = setting.env(&mut rng);
            run_episode(model, task, env, setting.spec, mode, &mut rng)
        })
        .collect()
}
