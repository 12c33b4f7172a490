//! Task environments and the automaton reward machine.

mod craft;
mod symbol;

use std::fmt::Write as _;
use std::sync::Arc;

use crate::automaton::{monitor_step, Dfa, Letter, MonitorState, MonitorStatus};
use crate::ltl::Alphabet;

pub use craft::{
    craft_generate_map, eval_predicates, transform_closer, Cell, CraftAction, CraftConfig, CraftEnv, CraftState,
    MapError, Resource, ScriptedFetch, Structure, CROP, CROP_PLANES, MAP_LEGEND,
};
pub use symbol::{SymbolConfig, SymbolEnv};

/// Reward constants of the reward machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSpec {
    pub step_reward: f64,
    pub violation_reward: f64,
    pub accept_reward: f64,
    pub stay_decay: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self { step_reward: 0.1, violation_reward: -1.0, accept_reward: 1.0, stay_decay: 0.8 }
    }
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Violation,
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Violation => "violation",
            Outcome::Timeout => "failed-timeout",
        }
    }
}

/// A simulator whose steps are labelled by letters over the formula alphabet.
pub trait Environment {
    fn action_count(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn observe(&self) -> Vec<f64>;
    /// Applies `action` and returns the letter describing the new state.
    fn apply(&mut self, action: usize) -> Letter;
    fn action_name(&self, action: usize) -> String;
    fn horizon(&self) -> usize;
}

/// Reward and termination for the monitor state reached at step `t` (1-based).
///
/// Episodes stop early on acceptance only when every continuation stays accepting;
/// otherwise the horizon decides.
pub fn reward_for(m: &MonitorState, dfa: &Dfa, t: usize, horizon: usize, spec: &RewardSpec) -> (f64, Option<Outcome>) {
    match m.status {
        MonitorStatus::Violated => (spec.violation_reward, Some(Outcome::Violation)),
        MonitorStatus::Accepting if dfa.is_settled(m.current) || t >= horizon => {
            (spec.accept_reward, Some(Outcome::Success))
        }
        _ if t >= horizon => (0.0, Some(Outcome::Timeout)),
        MonitorStatus::Accepting => (spec.step_reward, None),
        MonitorStatus::Progressing => {
            (spec.step_reward * spec.stay_decay.powi(m.steps_in_state.saturating_sub(1) as i32), None)
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub letter: Letter,
    pub reward: f64,
    pub done: bool,
    pub monitor: MonitorState,
    pub outcome: Option<Outcome>,
}

/// An environment run alongside the automaton of its task formula.
pub struct Episode<E> {
    pub env: E,
    pub dfa: Arc<Dfa>,
    pub monitor: MonitorState,
    pub spec: RewardSpec,
    pub t: usize,
    pub outcome: Option<Outcome>,
}

impl<E: Environment> Episode<E> {
    pub fn new(env: E, dfa: Arc<Dfa>, spec: RewardSpec) -> Self {
        let monitor = MonitorState::start(&dfa);
        Self { env, dfa, monitor, spec, t: 0, outcome: None }
    }

    pub fn done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn observe(&self) -> Vec<f64> {
        self.env.observe()
    }

    /// Advances environment and monitor by one action.
    pub fn step(&mut self, action: usize) -> StepResult {
        assert!(!self.done(), "stepping a finished episode");
        let letter = self.env.apply(action);
        self.t += 1;
        self.monitor = monitor_step(self.monitor, &self.dfa, letter);
        let (reward, outcome) = reward_for(&self.monitor, &self.dfa, self.t, self.env.horizon(), &self.spec);
        self.outcome = outcome;
        StepResult { letter, reward, done: outcome.is_some(), monitor: self.monitor, outcome }
    }
}

/// Recomputes the rewards of a letter sequence from scratch.
pub fn replay_rewards(dfa: &Dfa, letters: &[Letter], horizon: usize, spec: &RewardSpec) -> Vec<f64> {
    let mut m = MonitorState::start(dfa);
    let mut out = Vec::with_capacity(letters.len());
    for (i, &l) in letters.iter().enumerate() {
        m = monitor_step(m, dfa, l);
        let (r, outcome) = reward_for(&m, dfa, i + 1, horizon, spec);
        out.push(r);
        if outcome.is_some() {
            break;
        }
    }
    out
}

/// One logged step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub action: String,
    pub letter: Letter,
    pub state: usize,
    pub reward: f64,
    pub status: String,
}

/// Tab-separated episode log with a header line.
pub fn trace_tsv(rows: &[TraceRow], alphabet: &Alphabet) -> String {
    let mut out = String::from("t\taction\tletter\tstate\treward\tstatus\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.t,
            r.action,
            r.letter.display(alphabet),
            r.state,
            r.reward,
            r.status
        );
    }
    out
}

/// Status column for a step: the outcome once finished, the monitor status before.
pub fn status_label(step: &StepResult) -> String {
    match step.outcome {
        Some(Outcome::Success) => "accepting".into(),
        Some(o) => o.name().into(),
        None => step.monitor.status.name().into(),
    }
}
