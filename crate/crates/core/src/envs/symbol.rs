use super::Environment;
use crate::automaton::{Letter, LetterModel};
use crate::ltl::{Alphabet, PropId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolConfig {
    pub symbols: usize,
    pub horizon: usize,
    /// One-hot: pick one symbol per step. Free: pick any subset.
    pub model: LetterModel,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self { symbols: 5, horizon: 15, model: LetterModel::OneHot }
    }
}

/// Each action emits one letter; the observation is the previous action and the clock.
#[derive(Debug, Clone)]
pub struct SymbolEnv {
    pub config: SymbolConfig,
    pub emitted: Vec<usize>,
}

impl SymbolEnv {
    pub fn new(config: SymbolConfig) -> Self {
        Self { config, emitted: Vec::with_capacity(config.horizon) }
    }

    pub fn letter_of(&self, action: usize) -> Letter {
        match self.config.model {
            LetterModel::OneHot => Letter::one_hot(PropId(action as u8)),
            LetterModel::Free => Letter(action as u32),
        }
    }

    /// Action emitting `letter`, if the letter is admissible.
    pub fn action_of(&self, letter: Letter) -> Option<usize> {
        (0..self.action_count()).find(|&a| self.letter_of(a) == letter)
    }
}

impl Environment for SymbolEnv {
    fn action_count(&self) -> usize {
        self.config.model.letter_count(self.config.symbols) as usize
    }

    fn obs_dim(&self) -> usize {
        self.action_count() + 1
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.obs_dim()];
        if let Some(&a) = self.emitted.last() {
            obs[a] = 1.0;
        }
        obs[self.action_count()] = self.emitted.len() as f64 / self.config.horizon as f64;
        obs
    }

    fn apply(&mut self, action: usize) -> Letter {
        assert!(action < self.action_count(), "action {action} out of range");
        assert!(self.emitted.len() < self.config.horizon, "episode already at the horizon");
        self.emitted.push(action);
        self.letter_of(action)
    }

    fn action_name(&self, action: usize) -> String {
        let alpha = Alphabet::symbols(self.config.symbols);
        let name = self.letter_of(action).display(&alpha).to_string();
        name
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }
}
