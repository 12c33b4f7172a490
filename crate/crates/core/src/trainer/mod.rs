//! Actor-critic training, ablation baselines and evaluation.

mod config;
mod eval;
mod optim;
mod rollout;
mod train;

pub use config::{TrainConfig, TRAIN_KEYS};
pub use eval::{evaluate, EvalReport, SplitReport};
pub use optim::{clip_grad_norm, grad_norm, RmsProp};
pub use rollout::{
    collect_rollouts, derived_rng, run_episode, run_scripted, EpisodeLog, Mode, Task, TaskEnv, TaskSetting, Trajectory,
    PURPOSE_EVAL, PURPOSE_ROLLOUT, PURPOSE_SHUFFLE,
};
pub use train::{
    a2c_update, build_tasks, curve_tsv, load_model, merged_meta, model_config, parse_curve, task_setting, train,
    CurveError, CurveRow, TrainError, Trainer, UpdateStats, CURVE_HEADER,
};

pub use crate::compnet::Architecture as BaselineKind;

use crate::compnet::Model;
use crate::Real;

/// Fresh model of the given family for the tasks of `setting`.
pub fn build_baseline(kind: BaselineKind, setting: &TaskSetting, cfg: &TrainConfig) -> Model<Real> {
    Model::new(model_config(setting, &TrainConfig { arch: kind, ..cfg.clone() }))
}
