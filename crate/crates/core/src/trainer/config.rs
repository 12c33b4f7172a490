use std::path::PathBuf;

use crate::compnet::{Architecture, LossConfig};
use crate::meta::{Meta, MetaError};
use crate::Domain;

/// Training and evaluation settings. Zero-valued `horizon`, `n_step` and `eval_limit`
/// mean "domain default", "Monte Carlo" and "no limit".
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dataset: PathBuf,
    pub arch: Architecture,
    pub updates: usize,
    pub rollouts: usize,
    pub lr: f64,
    pub rms_alpha: f64,
    pub rms_eps: f64,
    /// Global gradient-norm clip; 0 disables.
    pub max_grad_norm: f64,
    pub gamma: f64,
    pub entropy_weight: f64,
    pub value_weight: f64,
    pub n_step: usize,
    pub curriculum: bool,
    pub eval_every: usize,
    pub checkpoint_every: usize,
    pub eval_splits: Vec<String>,
    pub eval_limit: usize,
    /// Maps per formula when evaluating Craft.
    pub eval_maps: usize,
    pub horizon: usize,
    pub map_size: usize,
    pub hidden: usize,
    pub message: usize,
    pub seed: u64,
}

pub const TRAIN_KEYS: &[&str] = &[
    "dataset",
    "arch",
    "updates",
    "rollouts",
    "lr",
    "rms_alpha",
    "rms_eps",
    "max_grad_norm",
    "gamma",
    "entropy_weight",
    "value_weight",
    "n_step",
    "curriculum",
    "eval_every",
    "checkpoint_every",
    "eval_splits",
    "eval_limit",
    "eval_maps",
    "horizon",
    "map_size",
    "hidden",
    "message",
    "seed",
];

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_domain(Domain::Symbol)
    }
}

impl TrainConfig {
    pub fn for_domain(domain: Domain) -> Self {
        let craft = domain == Domain::Craft;
        Self {
            dataset: PathBuf::from("data"),
            arch: Architecture::Full,
            updates: 10_000,
            rollouts: 15,
            lr: 7e-4,
            rms_alpha: 0.99,
            rms_eps: 1e-5,
            max_grad_norm: 0.5,
            gamma: 0.9,
            entropy_weight: 0.1,
            value_weight: 0.5,
            n_step: if craft { 15 } else { 0 },
            curriculum: true,
            eval_every: if craft { 200 } else { 500 },
            checkpoint_every: if craft { 200 } else { 500 },
            eval_splits: ["train", "test_1_10", "test_10_15", "test_15_20"].map(String::from).to_vec(),
            eval_limit: 0,
            eval_maps: 1,
            horizon: 0,
            map_size: 7,
            hidden: 64,
            message: 32,
            seed: 0,
        }
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            gamma: self.gamma,
            entropy_weight: self.entropy_weight,
            value_weight: self.value_weight,
            n_step: (self.n_step > 0).then_some(self.n_step),
        }
    }

    /// Episode length for `domain` given the dataset's hardness horizon.
    pub fn episode_horizon(&self, domain: Domain, dataset_horizon: usize) -> usize {
        match (self.horizon, domain) {
            (0, Domain::Symbol) => dataset_horizon,
            (0, Domain::Craft) => 100,
            (h, _) => h,
        }
    }

    pub fn to_meta(&self) -> Meta {
        let mut m = Meta::new();
        m.set("dataset", self.dataset.display());
        m.set("arch", self.arch);
        m.set("updates", self.updates);
        m.set("rollouts", self.rollouts);
        m.set("lr", self.lr);
        m.set("rms_alpha", self.rms_alpha);
        m.set("rms_eps", self.rms_eps);
        m.set("max_grad_norm", self.max_grad_norm);
        m.set("gamma", self.gamma);
        m.set("entropy_weight", self.entropy_weight);
        m.set("value_weight", self.value_weight);
        m.set("n_step", self.n_step);
        m.set("curriculum", self.curriculum);
        m.set("eval_every", self.eval_every);
        m.set("checkpoint_every", self.checkpoint_every);
        m.set("eval_splits", self.eval_splits.join(","));
        m.set("eval_limit", self.eval_limit);
        m.set("eval_maps", self.eval_maps);
        m.set("horizon", self.horizon);
        m.set("map_size", self.map_size);
        m.set("hidden", self.hidden);
        m.set("message", self.message);
        m.set("seed", self.seed);
        m
    }

    pub fn apply_meta(&mut self, m: &Meta) -> Result<(), MetaError> {
        if let Some(d) = m.get("dataset") {
            self.dataset = PathBuf::from(d);
        }
        m.apply("arch", &mut self.arch)?;
        m.apply("updates", &mut self.updates)?;
        m.apply("rollouts", &mut self.rollouts)?;
        m.apply("lr", &mut self.lr)?;
        m.apply("rms_alpha", &mut self.rms_alpha)?;
        m.apply("rms_eps", &mut self.rms_eps)?;
        m.apply("max_grad_norm", &mut self.max_grad_norm)?;
        m.apply("gamma", &mut self.gamma)?;
        m.apply("entropy_weight", &mut self.entropy_weight)?;
        m.apply("value_weight", &mut self.value_weight)?;
        m.apply("n_step", &mut self.n_step)?;
        m.apply("curriculum", &mut self.curriculum)?;
        m.apply("eval_every", &mut self.eval_every)?;
        m.apply("checkpoint_every", &mut self.checkpoint_every)?;
        if let Some(v) = m.get("eval_splits") {
            self.eval_splits = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
        m.apply("eval_limit", &mut self.eval_limit)?;
        m.apply("eval_maps", &mut self.eval_maps)?;
        m.apply("horizon", &mut self.horizon)?;
        m.apply("map_size", &mut self.map_size)?;
        m.apply("hidden", &mut self.hidden)?;
        m.apply("message", &mut self.message)?;
        m.apply("seed", &mut self.seed)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rollouts == 0 {
            return Err("rollouts must be positive".into());
        }
        if self.eval_every == 0 || self.checkpoint_every == 0 {
            return Err("eval_every and checkpoint_every must be positive".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(format!("bad learning rate {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.rms_alpha) || self.rms_eps <= 0.0 {
            return Err("rms_alpha must lie in [0,1) and rms_eps be positive".into());
        }
        if self.map_size < 6 {
            return Err(format!("map_size {} is below the minimum of 6", self.map_size));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trip() {
        let mut c = TrainConfig::for_domain(Domain::Craft);
        c.arch = Architecture::NoStructure;
        c.eval_splits = vec!["train".into()];
        c.lr = 1e-3;
        let mut back = TrainConfig::default();
        back.apply_meta(&c.to_meta()).unwrap();
        assert_eq!(back, c);
    }
}
