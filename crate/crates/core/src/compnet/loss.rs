//! Advantage actor-critic objective over a recorded trajectory.

use thiserror::Error;

use super::model::{softmax, Model};
use super::tape::{NodeId, Tape};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub gamma: f64,
    pub entropy_weight: f64,
    pub value_weight: f64,
    /// Bootstrapping horizon; `None` uses full Monte Carlo returns.
    pub n_step: Option<usize>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { gamma: 0.9, entropy_weight: 0.1, value_weight: 0.5, n_step: None }
    }
}

/// Tape handles and outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub logits: NodeId,
    pub value: NodeId,
    pub action: usize,
    pub reward: f64,
}

/// Loss components summed over the steps of the trajectories they cover.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub steps: usize,
}

impl LossParts {
    pub fn add(&mut self, o: &LossParts) {
        self.policy += o.policy;
        self.value += o.value;
        self.entropy += o.entropy;
        self.total += o.total;
        self.steps += o.steps;
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.policy *= k;
        self.value *= k;
        self.entropy *= k;
        self.total *= k;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.policy.is_finite() && self.value.is_finite() && self.entropy.is_finite() && self.total.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LossError {
    #[error("trajectory has no steps")]
    EmptyTrajectory,
}

/// Discounted returns; with `n_step` the tail beyond `n` steps is replaced by the
/// value estimate found there. Episodes are treated as terminated at their last step.
pub fn discounted_returns(rewards: &[f64], values: &[f64], gamma: f64, n_step: Option<usize>) -> Vec<f64> {
    let t_len = rewards.len();
    match n_step {
        None => {
            let mut out = vec![0.0; t_len];
            let mut acc = 0.0;
            for t in (0..t_len).rev() {
                acc = rewards[t] + gamma * acc;
                out[t] = acc;
            }
            out
        }
        Some(n) => (0..t_len)
            .map(|t| {
                let end = (t + n).min(t_len);
                let mut r = 0.0;
                let mut g = 1.0;
                for &rw in &rewards[t..end] {
                    r += g * rw;
                    g *= gamma;
                }
                if t + n < t_len {
                    r += g * values[t + n];
                }
                r
            })
            .collect(),
    }
}

/// Returns and advantages computed from the values recorded on `tape`; both are
/// constants for differentiation.
pub fn targets<S: Scalar>(tape: &Tape<S>, steps: &[StepRecord], cfg: &LossConfig) -> (Vec<f64>, Vec<f64>) {
    let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
    let values: Vec<f64> = steps.iter().map(|s| scalar(tape, s.value)).collect();
    let returns = discounted_returns(&rewards, &values, cfg.gamma, cfg.n_step);
    let adv = returns.iter().zip(&values).map(|(r, v)| r - v).collect();
    (returns, adv)
}

fn scalar<S: Scalar>(tape: &Tape<S>, id: NodeId) -> f64 {
    tape.value(id)[0].to_f64().expect("finite scalar")
}

/// Loss with fixed returns and advantages, plus its gradient seeds scaled by `scale`.
pub fn loss_with_targets<S: Scalar>(
    tape: &Tape<S>,
    steps: &[StepRecord],
    returns: &[f64],
    advantages: &[f64],
    cfg: &LossConfig,
    scale: f64,
) -> (LossParts, Vec<(NodeId, Vec<S>)>) {
    let mut parts = LossParts { steps: steps.len(), ..LossParts::default() };
    let mut seeds = Vec::with_capacity(2 * steps.len());
    let beta = cfg.entropy_weight;
    for (i, s) in steps.iter().enumerate() {
        let p = softmax(tape.value(s.logits));
        let logp: Vec<f64> = p.iter().map(|&q| if q > 0.0 { q.ln() } else { f64::NEG_INFINITY }).collect();
        let h: f64 = -p.iter().zip(&logp).filter(|(q, _)| **q > 0.0).map(|(q, l)| q * l).sum::<f64>();
        let a = advantages[i];
        parts.policy -= logp[s.action] * a;
        parts.entropy += h;
        let v = scalar(tape, s.value);
        let err = returns[i] - v;
        parts.value += cfg.value_weight * err * err;
        let dz: Vec<S> = p
            .iter()
            .enumerate()
            .map(|(j, &q)| {
                let onehot = if j == s.action { 1.0 } else { 0.0 };
                let ent = if q > 0.0 { beta * q * (logp[j] + h) } else { 0.0 };
                S::of(scale * (a * (q - onehot) + ent))
            })
            .collect();
        seeds.push((s.logits, dz));
        seeds.push((s.value, vec![S::of(-scale * 2.0 * cfg.value_weight * err)]));
    }
    parts.total = parts.policy + parts.value - beta * parts.entropy;
    (parts.scaled(scale), seeds)
}

/// Accumulates `scale` times the gradient of the trajectory loss into `grads`.
pub fn loss_and_gradients<S: Scalar>(
    model: &Model<S>,
    tape: &Tape<S>,
    steps: &[StepRecord],
    cfg: &LossConfig,
    scale: f64,
    grads: &mut [S],
) -> Result<LossParts, LossError> {
    if steps.is_empty() {
        return Err(LossError::EmptyTrajectory);
    }
    let (returns, adv) = targets(tape, steps, cfg);
    let (parts, seeds) = loss_with_targets(tape, steps, &returns, &adv, cfg, scale);
    tape.backward(model.params(), &seeds, grads);
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monte_carlo_and_n_step_returns() {
        let r = discounted_returns(&[0.1, 0.0, 1.0], &[0.0; 3], 0.9, None);
        assert!((r[0] - (0.1 + 0.81)).abs() < 1e-12 && (r[2] - 1.0).abs() < 1e-12);
        let b = discounted_returns(&[1.0, 1.0, 1.0], &[5.0, 6.0, 7.0], 0.5, Some(1));
        assert_eq!(b, vec![1.0 + 0.5 * 6.0, 1.0 + 0.5 * 7.0, 1.0]);
        assert_eq!(discounted_returns(&[1.0, 2.0], &[9.0, 9.0], 0.9, Some(15)), discounted_returns(&[1.0, 2.0], &[0.0; 2], 0.9, None));
    }

    #[test]
    fn uniform_entropy_and_matched_value() {
        let mut tape = Tape::<f64>::new();
        let logits = tape.input(&[0.3; 5]);
        let value = tape.input(&[1.0]);
        let steps = [StepRecord { logits, value, action: 2, reward: 1.0 }];
        let cfg = LossConfig::default();
        let (ret, adv) = targets(&tape, &steps, &cfg);
        assert_eq!((ret[0], adv[0]), (1.0, 0.0));
        let (parts, _) = loss_with_targets(&tape, &steps, &ret, &adv, &cfg, 1.0);
        assert_eq!(parts.value, 0.0);
        assert!((parts.entropy - 5f64.ln()).abs() < 1e-12);
        assert!((parts.total + 0.1 * 1.6094379124341003).abs() < 1e-12);
    }

    #[test]
    fn zero_advantage_leaves_only_entropy_in_logit_seeds() {
        let mut tape = Tape::<f64>::new();
        let logits = tape.input(&[0.0; 4]);
        let value = tape.input(&[0.5]);
        let steps = [StepRecord { logits, value, action: 0, reward: 0.0 }];
        let (_, seeds) = loss_with_targets(&tape, &steps, &[0.5], &[0.0], &LossConfig::default(), 1.0);
        assert!(seeds[0].1.iter().all(|&g| g.abs() < 1e-15));
        assert_eq!(seeds[1].1, vec![0.0]);
    }
}
