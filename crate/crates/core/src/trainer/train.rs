use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use super::config::TrainConfig;
use super::eval::{evaluate, EvalReport};
use super::optim::{clip_grad_norm, RmsProp};
use super::rollout::{collect_rollouts, derived_rng, Mode, Task, TaskSetting, Trajectory, PURPOSE_ROLLOUT, PURPOSE_SHUFFLE};
use crate::compnet::{
    loss_and_gradients, AssembleError, Checkpoint, CheckpointError, LossError, LossParts, Model, ModelConfig,
};
use crate::gen::{curriculum_key, Dataset, DatasetError};
use crate::meta::{Meta, MetaError};
use crate::{Domain, Real, Scalar};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("formula {text:?}: {msg}")]
    Task { text: String, msg: String },
    #[error("model: {0}")]
    Assemble(#[from] AssembleError),
    #[error("loss: {0}")]
    Loss(#[from] LossError),
    #[error("non-finite loss or gradient at update {update}: {detail}")]
    NonFinite { update: u64, detail: String },
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<MetaError> for TrainError {
    fn from(e: MetaError) -> Self {
        TrainError::Config(e.to_string())
    }
}

/// Diagnostics of one optimizer step; losses are means over trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub loss: LossParts,
    /// Mean policy entropy per step.
    pub entropy: f64,
    pub grad_norm: f64,
    pub success_rate: f64,
    pub mean_length: f64,
}

/// One optimizer step on the mean trajectory loss. Nothing is modified when the loss
/// or gradient is not finite.
pub fn a2c_update<S: Scalar>(
    model: &mut Model<S>,
    opt: &mut RmsProp<S>,
    trajs: &[Trajectory<S>],
    cfg: &TrainConfig,
    frozen: Option<&[bool]>,
) -> Result<UpdateStats, TrainError> {
    if trajs.is_empty() {
        return Err(TrainError::Loss(LossError::EmptyTrajectory));
    }
    let loss_cfg = cfg.loss();
    let scale = 1.0 / trajs.len() as f64;
    let mut grads = vec![S::zero(); model.store.len()];
    let mut parts = LossParts::default();
    for t in trajs {
        parts.add(&loss_and_gradients(model, &t.tape, &t.steps, &loss_cfg, scale, &mut grads)?);
    }
    let steps = parts.steps;
    let bad_grad = grads.iter().position(|g| !g.is_finite());
    if !parts.is_finite() || bad_grad.is_some() {
        let mut detail = format!(
            "policy={} value={} entropy={} total={}",
            parts.policy, parts.value, parts.entropy, parts.total
        );
        if let Some(i) = bad_grad {
            let owner = model.store.owner(i).map_or("?".to_string(), |e| e.name.clone());
            let _ = write!(detail, "; first bad gradient at {i} ({owner})");
        }
        return Err(TrainError::NonFinite { update: opt.updates, detail });
    }
    let grad_norm = clip_grad_norm(&mut grads, cfg.max_grad_norm);
    opt.step(&mut model.store.data, &grads, frozen);
    let n = trajs.len() as f64;
    Ok(UpdateStats {
        loss: parts,
        entropy: parts.entropy / (steps as f64 * scale),
        grad_norm,
        success_rate: trajs.iter().filter(|t| t.log.success()).count() as f64 / n,
        mean_length: trajs.iter().map(|t| t.log.len()).sum::<usize>() as f64 / n,
    })
}

/// One learning-curve row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub update_count: u64,
    pub split: String,
    pub success_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

pub const CURVE_HEADER: &str = "update_count\tsplit\tsuccess_rate\tpolicy_loss\tvalue_loss\tentropy";

pub fn curve_tsv(rows: &[CurveRow]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.update_count, r.split, r.success_rate, r.policy_loss, r.value_loss, r.entropy
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct CurveError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_curve(text: &str) -> Result<Vec<CurveRow>, CurveError> {
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim_end() == CURVE_HEADER => {}
        Some((i, _)) => return Err(CurveError { line: i + 1, msg: "unexpected header".into() }),
        None => return Ok(rows),
    }
    for (i, line) in lines {
        let err = |msg: &str| CurveError { line: i + 1, msg: msg.into() };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(err("expected 6 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        rows.push(CurveRow {
            update_count: f[0].parse().map_err(|_| err("bad update count"))?,
            split: f[1].to_string(),
            success_rate: num(f[2])?,
            policy_loss: num(f[3])?,
            value_loss: num(f[4])?,
            entropy: num(f[5])?,
        });
    }
    Ok(rows)
}

/// Running sums of update diagnostics between evaluation points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Window {
    policy: f64,
    value: f64,
    entropy: f64,
    count: u64,
}

/// Model, optimizer and data of a training run.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub setting: TaskSetting,
    pub model: Model<Real>,
    pub opt: RmsProp<Real>,
    /// Training tasks in curriculum order (or dataset order without curriculum).
    pub train_tasks: Vec<Task>,
    /// Node count of each training formula as written.
    pub train_sizes: Vec<usize>,
    pub eval_sets: Vec<(String, Vec<Task>)>,
    pub curve: Vec<CurveRow>,
    pub frozen: Option<Vec<bool>>,
    window: Window,
    epoch_order: Option<(u64, Vec<usize>)>,
}

/// Settings of the tasks in `dataset` under `cfg`.
pub fn task_setting(dataset: &Dataset, cfg: &TrainConfig) -> TaskSetting {
    let g = &dataset.config;
    let horizon = cfg.episode_horizon(g.domain, g.horizon);
    match g.domain {
        Domain::Symbol => TaskSetting { model: g.model, ..TaskSetting::symbol(g.symbols, horizon) },
        Domain::Craft => TaskSetting::craft(horizon, cfg.map_size),
    }
}

pub fn model_config(setting: &TaskSetting, cfg: &TrainConfig) -> ModelConfig {
    let base = ModelConfig::for_domain(setting.domain, cfg.arch, setting.symbols, setting.action_count());
    ModelConfig { hidden: cfg.hidden, message: cfg.message, seed: cfg.seed, ..base }
}

pub fn build_tasks(setting: &TaskSetting, entries: &[crate::gen::Entry]) -> Result<Vec<Task>, TrainError> {
    entries
        .iter()
        .map(|e| {
            Task::new(setting, &e.formula, &e.text)
                .map_err(|err| TrainError::Task { text: e.text.clone(), msg: err.to_string() })
        })
        .collect()
}

impl Trainer {
    pub fn new(cfg: TrainConfig, dataset: &Dataset) -> Result<Self, TrainError> {
        cfg.validate().map_err(TrainError::Config)?;
        let setting = task_setting(dataset, &cfg);
        let model = Model::new(model_config(&setting, &cfg));
        let opt = RmsProp::new(model.store.len(), cfg.lr, cfg.rms_alpha, cfg.rms_eps);
        let train = dataset.split("train").ok_or_else(|| TrainError::Config("dataset has no train split".into()))?;
        let mut entries = train.entries.clone();
        if cfg.curriculum {
            entries.sort_by(|a, b| curriculum_key(a).cmp(&curriculum_key(b)));
        }
        if entries.is_empty() {
            return Err(TrainError::Config("train split is empty".into()));
        }
        let train_tasks = build_tasks(&setting, &entries)?;
        let train_sizes = entries.iter().map(|e| e.formula.node_count()).collect();
        let mut eval_sets = Vec::new();
        for name in &cfg.eval_splits {
            let split = dataset.split(name).ok_or_else(|| TrainError::Config(format!("no split named {name:?}")))?;
            let take = if cfg.eval_limit == 0 { split.entries.len() } else { cfg.eval_limit.min(split.entries.len()) };
            eval_sets.push((name.clone(), build_tasks(&setting, &split.entries[..take])?));
        }
        Ok(Self {
            cfg,
            setting,
            model,
            opt,
            train_tasks,
            train_sizes,
            eval_sets,
            curve: Vec::new(),
            frozen: None,
            window: Window::default(),
            epoch_order: None,
        })
    }

    pub fn updates_done(&self) -> u64 {
        self.opt.updates
    }

    /// Training-task index of the `k`-th episode of the run. Each epoch visits every task
    /// once: in curriculum order, or in a seeded shuffle without curriculum.
    pub fn schedule(&mut self, k: u64) -> usize {
        let n = self.train_tasks.len() as u64;
        let (epoch, pos) = (k / n, (k % n) as usize);
        if self.cfg.curriculum {
            return pos;
        }
        match &self.epoch_order {
            Some((e, order)) if *e == epoch => order[pos],
            _ => {
                let mut order: Vec<usize> = (0..n as usize).collect();
                order.shuffle(&mut derived_rng(self.cfg.seed, PURPOSE_SHUFFLE, epoch));
                let idx = order[pos];
                self.epoch_order = Some((epoch, order));
                idx
            }
        }
    }

    /// Collects one batch of rollouts and applies one update.
    pub fn update(&mut self) -> Result<UpdateStats, TrainError> {
        let u = self.opt.updates;
        let r = self.cfg.rollouts as u64;
        let picks: Vec<usize> = (0..r).map(|i| self.schedule(u * r + i)).collect();
        let tasks: Vec<&Task> = picks.iter().map(|&i| &self.train_tasks[i]).collect();
        let trajs =
            collect_rollouts(&self.model, &tasks, &self.setting, Mode::Train, self.cfg.seed, PURPOSE_ROLLOUT, u * r)?;
        let stats = a2c_update(&mut self.model, &mut self.opt, &trajs, &self.cfg, self.frozen.as_deref())?;
        self.window.policy += stats.loss.policy;
        self.window.value += stats.loss.value;
        self.window.entropy += stats.entropy;
        self.window.count += 1;
        Ok(stats)
    }

    pub fn evaluate_all(&self) -> Result<EvalReport, TrainError> {
        let mut splits = Vec::new();
        for (name, tasks) in &self.eval_sets {
            splits.push(evaluate(&self.model, name, tasks, &self.setting, self.cfg.eval_maps, self.cfg.seed)?);
        }
        Ok(EvalReport { model: self.cfg.arch.name().to_string(), splits })
    }

    /// Appends one curve row per evaluation split and resets the loss window.
    pub fn log_point(&mut self) -> Result<(), TrainError> {
        let report = self.evaluate_all()?;
        let c = self.window.count.max(1) as f64;
        for s in &report.splits {
            self.curve.push(CurveRow {
                update_count: self.opt.updates,
                split: s.name.clone(),
                success_rate: s.success_rate(),
                policy_loss: self.window.policy / c,
                value_loss: self.window.value / c,
                entropy: self.window.entropy / c,
            });
        }
        self.window = Window::default();
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint<Real> {
        let mut meta = self.model.config.to_meta();
        let train = self.cfg.to_meta();
        for k in train.keys() {
            meta.set(k, train.get(k).unwrap_or_default());
        }
        meta.set("window_policy", self.window.policy);
        meta.set("window_value", self.window.value);
        meta.set("window_entropy", self.window.entropy);
        meta.set("window_count", self.window.count);
        Checkpoint { meta, store: self.model.store.clone(), optimizer: Some(self.opt.snapshot()) }
    }

    /// Restores model, optimizer, loss window and the curve rows up to the checkpoint.
    pub fn restore(&mut self, ck: &Checkpoint<Real>, curve: Vec<CurveRow>) -> Result<(), TrainError> {
        let model = ck.model()?;
        if model.config != self.model.config {
            return Err(TrainError::Config("checkpoint model differs from the configured model".into()));
        }
        self.model = model;
        let snap = ck.optimizer.clone().ok_or_else(|| TrainError::Config("checkpoint has no optimizer state".into()))?;
        self.opt.restore(snap);
        let m = &ck.meta;
        self.window = Window {
            policy: m.get_parsed("window_policy")?.unwrap_or(0.0),
            value: m.get_parsed("window_value")?.unwrap_or(0.0),
            entropy: m.get_parsed("window_entropy")?.unwrap_or(0.0),
            count: m.get_parsed("window_count")?.unwrap_or(0),
        };
        let done = self.opt.updates;
        self.curve = curve.into_iter().filter(|r| r.update_count <= done).collect();
        Ok(())
    }

    /// Trains until the update budget is spent, logging and checkpointing on cadence.
    /// Writes `curve.tsv` and `checkpoint.bin` under `out` when given.
    pub fn run(&mut self, out: Option<&Path>, mut progress: impl FnMut(&Trainer, &UpdateStats)) -> Result<(), TrainError> {
        while (self.opt.updates as usize) < self.cfg.updates {
            let stats = match self.update() {
                Ok(s) => s,
                Err(e) => {
                    if let Some(dir) = out {
                        let _ = std::fs::write(dir.join("diagnostic.txt"), format!("{e}\n"));
                        let _ = self.checkpoint().save(&dir.join("checkpoint.bin"));
                    }
                    return Err(e);
                }
            };
            let done = self.opt.updates as usize;
            progress(self, &stats);
            if done % self.cfg.eval_every == 0 {
                self.log_point()?;
                if let Some(dir) = out {
                    std::fs::write(dir.join("curve.tsv"), curve_tsv(&self.curve))?;
                }
            }
            if let Some(dir) = out {
                if done % self.cfg.checkpoint_every == 0 || done == self.cfg.updates {
                    self.checkpoint().save(&dir.join("checkpoint.bin"))?;
                }
            }
        }
        if let Some(dir) = out {
            std::fs::write(dir.join("curve.tsv"), curve_tsv(&self.curve))?;
            self.checkpoint().save(&dir.join("checkpoint.bin"))?;
        }
        Ok(())
    }
}

/// Loads the dataset named by `cfg` and trains, resuming from `out/checkpoint.bin`
/// when `resume` is set and the file exists.
pub fn train(cfg: TrainConfig, out: &Path, resume: bool) -> Result<Trainer, TrainError> {
    let dataset = Dataset::load(&cfg.dataset)?;
    std::fs::create_dir_all(out)?;
    let mut trainer = Trainer::new(cfg, &dataset)?;
    let ck_path = out.join("checkpoint.bin");
    if resume && ck_path.exists() {
        let ck = Checkpoint::<Real>::load(&ck_path)?;
        let curve = match std::fs::read_to_string(out.join("curve.tsv")) {
            Ok(text) => parse_curve(&text).map_err(|e| TrainError::Config(format!("curve.tsv: {e}")))?,
            Err(_) => Vec::new(),
        };
        trainer.restore(&ck, curve)?;
    }
    trainer.run(Some(out), |_, _| {})?;
    Ok(trainer)
}

/// Rebuilds a model and its training config from a checkpoint.
pub fn load_model(ck: &Checkpoint<Real>) -> Result<(Model<Real>, TrainConfig), TrainError> {
    let model = ck.model()?;
    let mut cfg = TrainConfig::default();
    cfg.apply_meta(&ck.meta)?;
    Ok((model, cfg))
}

/// Meta of a finished run merged from `parts`, later entries winning.
pub fn merged_meta(parts: &[&Meta]) -> Meta {
    let mut m = Meta::new();
    for p in parts {
        for k in p.keys() {
            m.set(k, p.get(k).unwrap_or_default());
        }
    }
    m
}
