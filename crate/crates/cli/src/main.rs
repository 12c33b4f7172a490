//! `ltlforge` command-line driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ltlforge::compnet::Checkpoint;
use ltlforge::envs::{replay_rewards, trace_tsv, CraftConfig, CraftEnv, CraftState, Outcome, Resource, ScriptedFetch, Structure, TraceRow};
use ltlforge::gen::{dataset_stats, generate_dataset, stats_table, Dataset, DatasetError, GenConfig, GenError, GEN_KEYS};
use ltlforge::ltl::{parse, Alphabet};
use ltlforge::meta::{Meta, MetaError};
use ltlforge::trainer::{
    self, build_tasks, derived_rng, evaluate, load_model, parse_curve, run_episode, run_scripted, EpisodeLog, EvalReport,
    Mode, Task, TaskEnv, TaskSetting, TrainConfig, TrainError, TRAIN_KEYS,
};
use ltlforge::{Domain, Real};

const SEED_ENV: &str = "LTLFORGE_SEED";

#[derive(Parser)]
#[command(name = "ltlforge", version, about = "Hard LTLf task generation and compositional A2C agents")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a hard formula dataset (train and three test splits).
    GenFormulas(GenArgs),
    /// Recompute per-split formula statistics of a dataset.
    Stats(StatsArgs),
    /// Train a model with A2C over a dataset.
    Train(TrainArgs),
    /// Evaluate checkpoints on dataset splits with the deterministic policy.
    Eval(EvalArgs),
    /// Run one episode step by step and print its trace.
    Inspect(InspectArgs),
    /// Turn learning-curve files into per-split plot series.
    PlotData(PlotArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Random seed; falls back to the config file, then LTLFORGE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving every output file.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// key=value file of settings; command-line flags take precedence.
    #[arg(long)]
    config_file: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// symbol or craft
    #[arg(long)]
    domain: Option<String>,
    /// Alphabet size of the Symbol domain.
    #[arg(long)]
    symbols: Option<String>,
    /// one-hot or free
    #[arg(long)]
    letter_model: Option<String>,
    /// String length n of the hardness filter.
    #[arg(long)]
    horizon: Option<String>,
    /// Largest accepted fraction of length-n strings (p/q, decimal or 1e-6 form).
    #[arg(long)]
    threshold: Option<String>,
    /// Largest accepted fraction of shared sampled solutions between a formula and its mutant.
    #[arg(long)]
    max_overlap: Option<String>,
    /// Accepted strings sampled per overlap test.
    #[arg(long)]
    diversity_samples: Option<String>,
    /// Probability of continuing a mutation chain.
    #[arg(long)]
    chain_probability: Option<String>,
    /// Whether the sampler may emit negation (true/false).
    #[arg(long)]
    negation: Option<String>,
    /// Element-count prior: uniform, trees or power:<p>.
    #[arg(long)]
    element_prior: Option<String>,
    #[arg(long)]
    train_size: Option<String>,
    /// Element range lo-hi of the train split.
    #[arg(long)]
    train_elements: Option<String>,
    #[arg(long)]
    test_1_10_size: Option<String>,
    #[arg(long)]
    test_1_10_elements: Option<String>,
    #[arg(long)]
    test_10_15_size: Option<String>,
    #[arg(long)]
    test_10_15_elements: Option<String>,
    #[arg(long)]
    test_15_20_size: Option<String>,
    #[arg(long)]
    test_15_20_elements: Option<String>,
    /// Fresh draws per base formula before giving up on it.
    #[arg(long)]
    fresh_attempts: Option<String>,
    /// Mutations tried per chain step.
    #[arg(long)]
    mutation_attempts: Option<String>,
    /// Chains per requested formula before the run is declared exhausted.
    #[arg(long)]
    max_chains_per_formula: Option<String>,
    /// Chains generated per parallel batch.
    #[arg(long)]
    batch: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory.
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory.
    #[arg(long)]
    dataset: Option<String>,
    /// full, no_time, no_structure or no_structure_no_language
    #[arg(long)]
    arch: Option<String>,
    /// Total number of updates.
    #[arg(long)]
    updates: Option<String>,
    /// Episodes per update.
    #[arg(long)]
    rollouts: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    rms_alpha: Option<String>,
    #[arg(long)]
    rms_eps: Option<String>,
    /// Global gradient-norm clip (0 disables).
    #[arg(long)]
    max_grad_norm: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    entropy_weight: Option<String>,
    #[arg(long)]
    value_weight: Option<String>,
    /// Bootstrapping horizon of returns (0 = Monte Carlo).
    #[arg(long)]
    n_step: Option<String>,
    /// Shortest formulas first (true/false).
    #[arg(long)]
    curriculum: Option<String>,
    /// Updates between learning-curve points.
    #[arg(long)]
    eval_every: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<String>,
    /// Comma-separated splits evaluated at each curve point.
    #[arg(long)]
    eval_splits: Option<String>,
    /// Formulas per split at curve points (0 = all).
    #[arg(long)]
    eval_limit: Option<String>,
    /// Maps per formula when evaluating Craft.
    #[arg(long)]
    eval_maps: Option<String>,
    /// Episode length (0 = domain default).
    #[arg(long)]
    horizon: Option<String>,
    /// Craft map side length.
    #[arg(long)]
    map_size: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    message: Option<String>,
    /// Continue from <out-dir>/checkpoint.bin if present.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint file; repeat to compare models.
    #[arg(long, required = true)]
    checkpoint: Vec<PathBuf>,
    /// Dataset directory (default: the one recorded in the checkpoint).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated splits (default: all four).
    #[arg(long)]
    splits: Option<String>,
    /// Maps per formula for Craft.
    #[arg(long)]
    eval_maps: Option<usize>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    formula: String,
    /// Craft map file; implies the Craft domain.
    #[arg(long)]
    map: Option<PathBuf>,
    /// symbol or craft (default: craft with --map, symbol otherwise).
    #[arg(long)]
    domain: Option<String>,
    /// Alphabet size for Symbol.
    #[arg(long, default_value_t = 5)]
    symbols: usize,
    /// Episode length (default: 15 for Symbol, 100 for Craft).
    #[arg(long)]
    horizon: Option<usize>,
    /// scripted:fig2, scripted:fetch:<resource>:<structure>, actions:<i,j,..> or checkpoint:<file>
    #[arg(long)]
    policy: String,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    /// Learning-curve file, optionally as label=path; repeat for several runs.
    #[arg(long, required = true)]
    curve: Vec<String>,
    /// Trailing moving-average window in points.
    #[arg(long, default_value_t = 1)]
    window: usize,
    /// Updates per x unit.
    #[arg(long, default_value_t = 500)]
    unit: u64,
    /// Splits to emit (default: every split found); missing splits give empty series.
    #[arg(long)]
    splits: Option<String>,
}

/// Failure classes; each maps to its own exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    MissingInput(String),
    Config(String),
    BadInput(String),
    Generation(String),
    Training(String),
    Replay(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::MissingInput(_) => 3,
            Failure::Config(_) => 4,
            Failure::BadInput(_) => 5,
            Failure::Generation(_) => 6,
            Failure::Training(_) => 7,
            Failure::Replay(_) => 8,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Io(_) => "io",
            Failure::Usage(_) => "usage",
            Failure::MissingInput(_) => "missing-input",
            Failure::Config(_) => "config",
            Failure::BadInput(_) => "bad-input",
            Failure::Generation(_) => "generation",
            Failure::Training(_) => "training",
            Failure::Replay(_) => "replay-mismatch",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m)
            | Failure::Usage(m)
            | Failure::MissingInput(m)
            | Failure::Config(m)
            | Failure::BadInput(m)
            | Failure::Generation(m)
            | Failure::Training(m)
            | Failure::Replay(m) => m,
        }
    }
}

type Res<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    let msg = format!("{}: {e}", path.display());
    if e.kind() == std::io::ErrorKind::NotFound {
        Failure::MissingInput(msg)
    } else {
        Failure::Io(msg)
    }
}

fn meta_failure(e: MetaError) -> Failure {
    match e {
        MetaError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Failure::MissingInput(io.to_string()),
        other => Failure::Config(other.to_string()),
    }
}

fn dataset_failure(e: DatasetError) -> Failure {
    match e {
        DatasetError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            Failure::MissingInput(format!("{path}: {source}"))
        }
        DatasetError::Io { path, source } => Failure::Io(format!("{path}: {source}")),
        DatasetError::Meta(m) => meta_failure(m),
        other => Failure::BadInput(other.to_string()),
    }
}

fn train_failure(e: TrainError) -> Failure {
    match e {
        TrainError::Dataset(d) => dataset_failure(d),
        TrainError::Config(m) => Failure::Config(m),
        TrainError::Checkpoint(c) => Failure::BadInput(format!("checkpoint: {c}")),
        TrainError::Io(io) => Failure::Io(io.to_string()),
        TrainError::Task { .. } | TrainError::Assemble(_) => Failure::BadInput(e.to_string()),
        other => Failure::Training(other.to_string()),
    }
}

/// Settings from the config file (checked against `known`), then flags, then the seed
/// fallback chain.
fn layered_meta(common: &Common, known: &[&str], flags: &[(&str, &Option<String>)]) -> Res<Meta> {
    let mut meta = match &common.config_file {
        Some(path) => {
            if !path.exists() {
                return Err(Failure::MissingInput(format!("{}: config file not found", path.display())));
            }
            Meta::read(path).map_err(meta_failure)?
        }
        None => Meta::new(),
    };
    meta.check_keys(known).map_err(meta_failure)?;
    for (key, value) in flags {
        if let Some(v) = value {
            meta.set(key, v);
        }
    }
    if let Some(seed) = common.seed {
        meta.set("seed", seed);
    } else if meta.get("seed").is_none() {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed: u64 = v.trim().parse().map_err(|_| Failure::Config(format!("{SEED_ENV}={v:?} is not a u64")))?;
            meta.set("seed", seed);
        }
    }
    Ok(meta)
}

/// Seed from the flag, then the environment, then 0.
fn plain_seed(common: &Common) -> Res<u64> {
    match (common.seed, std::env::var(SEED_ENV)) {
        (Some(s), _) => Ok(s),
        (None, Ok(v)) => v.trim().parse().map_err(|_| Failure::Config(format!("{SEED_ENV}={v:?} is not a u64"))),
        (None, Err(_)) => Ok(0),
    }
}

fn out_dir(common: &Common, default: &str) -> Res<PathBuf> {
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn gen_formulas(a: GenArgs) -> Res<()> {
    let flags = [
        ("domain", &a.domain),
        ("symbols", &a.symbols),
        ("letter_model", &a.letter_model),
        ("horizon", &a.horizon),
        ("threshold", &a.threshold),
        ("max_overlap", &a.max_overlap),
        ("diversity_samples", &a.diversity_samples),
        ("chain_probability", &a.chain_probability),
        ("negation", &a.negation),
        ("element_prior", &a.element_prior),
        ("train_size", &a.train_size),
        ("train_elements", &a.train_elements),
        ("test_1_10_size", &a.test_1_10_size),
        ("test_1_10_elements", &a.test_1_10_elements),
        ("test_10_15_size", &a.test_10_15_size),
        ("test_10_15_elements", &a.test_10_15_elements),
        ("test_15_20_size", &a.test_15_20_size),
        ("test_15_20_elements", &a.test_15_20_elements),
        ("fresh_attempts", &a.fresh_attempts),
        ("mutation_attempts", &a.mutation_attempts),
        ("max_chains_per_formula", &a.max_chains_per_formula),
        ("batch", &a.batch),
    ];
    let meta = layered_meta(&a.common, GEN_KEYS, &flags)?;
    let cfg = GenConfig::from_meta(&meta).map_err(meta_failure)?;
    cfg.validate().map_err(Failure::Config)?;
    let dir = out_dir(&a.common, "data")?;
    let ds = generate_dataset(&cfg).map_err(|e| match e {
        GenError::Config(m) => Failure::Config(m),
        other => Failure::Generation(other.to_string()),
    })?;
    ds.write(&dir).map_err(dataset_failure)?;
    for s in &ds.splits {
        eprintln!("{}: {} formulas", s.name, s.entries.len());
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Res<()> {
    if !a.dataset.join("config.meta").exists() {
        return Err(Failure::MissingInput(format!("{}: no dataset here (config.meta missing)", a.dataset.display())));
    }
    let ds = Dataset::load(&a.dataset).map_err(dataset_failure)?;
    let table = stats_table(&dataset_stats(&ds));
    let dir = a.common.out_dir.clone().unwrap_or_else(|| a.dataset.clone());
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    write(&dir.join("stats.tsv"), &table)?;
    if dir != a.dataset {
        let mut m = Meta::new();
        m.set("dataset", a.dataset.display());
        m.write(&dir.join("config.meta")).map_err(|e| io_failure(&dir, e))?;
    }
    print!("{table}");
    Ok(())
}

fn train(a: TrainArgs) -> Res<()> {
    let flags = [
        ("dataset", &a.dataset),
        ("arch", &a.arch),
        ("updates", &a.updates),
        ("rollouts", &a.rollouts),
        ("lr", &a.lr),
        ("rms_alpha", &a.rms_alpha),
        ("rms_eps", &a.rms_eps),
        ("max_grad_norm", &a.max_grad_norm),
        ("gamma", &a.gamma),
        ("entropy_weight", &a.entropy_weight),
        ("value_weight", &a.value_weight),
        ("n_step", &a.n_step),
        ("curriculum", &a.curriculum),
        ("eval_every", &a.eval_every),
        ("checkpoint_every", &a.checkpoint_every),
        ("eval_splits", &a.eval_splits),
        ("eval_limit", &a.eval_limit),
        ("eval_maps", &a.eval_maps),
        ("horizon", &a.horizon),
        ("map_size", &a.map_size),
        ("hidden", &a.hidden),
        ("message", &a.message),
    ];
    let meta = layered_meta(&a.common, TRAIN_KEYS, &flags)?;
    let dataset = PathBuf::from(meta.get("dataset").unwrap_or("data"));
    if !dataset.join("config.meta").exists() {
        return Err(Failure::MissingInput(format!("{}: no dataset here (config.meta missing)", dataset.display())));
    }
    let domain = Meta::read(&dataset.join("config.meta"))
        .map_err(meta_failure)?
        .get_parsed::<Domain>("domain")
        .map_err(meta_failure)?
        .unwrap_or(Domain::Symbol);
    let mut cfg = TrainConfig::for_domain(domain);
    cfg.apply_meta(&meta).map_err(meta_failure)?;
    cfg.validate().map_err(Failure::Config)?;
    let dir = out_dir(&a.common, "run")?;
    cfg.to_meta().write(&dir.join("config.meta")).map_err(|e| io_failure(&dir, e))?;
    let trainer = trainer::train(cfg, &dir, a.resume).map_err(train_failure)?;
    if let Some(last) = trainer.curve.last() {
        eprintln!("updates={} last {} success={:.4}", last.update_count, last.split, last.success_rate);
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Res<()> {
    let seed = plain_seed(&a.common)?;
    let dir = out_dir(&a.common, ".")?;
    let mut reports = Vec::new();
    let mut echo = Meta::new();
    for (i, path) in a.checkpoint.iter().enumerate() {
        if !path.exists() {
            return Err(Failure::MissingInput(format!("{}: checkpoint not found", path.display())));
        }
        let ck = Checkpoint::<Real>::load(path).map_err(|e| Failure::BadInput(format!("{}: {e}", path.display())))?;
        let (model, mut cfg) = load_model(&ck).map_err(train_failure)?;
        if let Some(d) = &a.dataset {
            cfg.dataset = d.clone();
        }
        if !cfg.dataset.join("config.meta").exists() {
            return Err(Failure::MissingInput(format!("{}: dataset not found", cfg.dataset.display())));
        }
        let ds = Dataset::load(&cfg.dataset).map_err(dataset_failure)?;
        let setting = trainer::task_setting(&ds, &cfg);
        let splits: Vec<String> = match &a.splits {
            Some(s) => s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
            None => ds.splits.iter().map(|s| s.name.clone()).collect(),
        };
        let maps = a.eval_maps.unwrap_or(cfg.eval_maps);
        let mut split_reports = Vec::new();
        for name in &splits {
            let split = ds.split(name).ok_or_else(|| Failure::Config(format!("dataset has no split {name:?}")))?;
            let tasks = build_tasks(&setting, &split.entries).map_err(train_failure)?;
            split_reports.push(evaluate(&model, name, &tasks, &setting, maps, seed).map_err(|e| Failure::BadInput(e.to_string()))?);
        }
        reports.push(EvalReport { model: model.config.arch.name().to_string(), splits: split_reports });
        echo.set(&format!("checkpoint_{i}"), path.display());
        echo.set(&format!("dataset_{i}"), cfg.dataset.display());
        echo.set("splits", splits.join(","));
        echo.set("eval_maps", maps);
    }
    echo.set("seed", seed);
    let table = EvalReport::table_tsv(&reports);
    write(&dir.join("eval.tsv"), &table)?;
    let detail: String = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let d = r.detail_tsv();
            if i == 0 { d } else { d.lines().skip(1).map(|l| format!("{l}\n")).collect() }
        })
        .collect();
    write(&dir.join("eval_detail.tsv"), &detail)?;
    echo.write(&dir.join("config.meta")).map_err(|e| io_failure(&dir, e))?;
    print!("{table}");
    Ok(())
}

fn resource(name: &str) -> Res<Resource> {
    Resource::ALL.into_iter().find(|r| r.name() == name).ok_or_else(|| Failure::Config(format!("unknown resource {name:?}")))
}

fn structure(name: &str, alphabet: &Alphabet) -> Res<Structure> {
    Structure::ALL
        .into_iter()
        .find(|s| s.prop().is_some_and(|p| alphabet.name(p) == name) || format!("{s:?}").eq_ignore_ascii_case(name))
        .ok_or_else(|| Failure::Config(format!("unknown structure {name:?}")))
}

fn inspect(a: InspectArgs) -> Res<()> {
    let domain: Domain = match &a.domain {
        Some(d) => d.parse().map_err(Failure::Config)?,
        None if a.map.is_some() => Domain::Craft,
        None => Domain::Symbol,
    };
    let seed = plain_seed(&a.common)?;
    let horizon = a.horizon.unwrap_or(match domain {
        Domain::Symbol => 15,
        Domain::Craft => 100,
    });
    let (setting, env) = match domain {
        Domain::Symbol => {
            let s = TaskSetting::symbol(a.symbols, horizon);
            let env = s.env(&mut derived_rng(seed, 0, 0));
            (s, env)
        }
        Domain::Craft => {
            let state = match &a.map {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
                    CraftState::parse_map(&text).map_err(|e| Failure::BadInput(format!("{}: {e}", p.display())))?
                }
                None => ltlforge::envs::craft_generate_map(&mut derived_rng(seed, 0, 0), 7),
            };
            let s = TaskSetting::craft(horizon, state.width);
            (s, TaskEnv::Craft(CraftEnv::new(CraftConfig { size: state.width, horizon }, state)))
        }
    };
    let alphabet = domain.alphabet(a.symbols);
    let f = parse(&a.formula, &alphabet).map_err(|e| Failure::BadInput(format!("formula: {e}")))?;
    let task = Task::new(&setting, &f, &a.formula).map_err(|e| Failure::BadInput(format!("formula: {e}")))?;
    let log = run_policy(&a.policy, &task, env, &setting, &alphabet)?;
    let rows = trace_rows(&log, &setting);
    let replayed = replay_rewards(&task.dfa, &log.letters, horizon, &setting.spec);
    if replayed != log.rewards {
        return Err(Failure::Replay(format!("logged rewards {:?} differ from replay {:?}", log.rewards, replayed)));
    }
    let table = trace_tsv(&rows, &setting.network_alphabet());
    print!("{table}");
    eprintln!("outcome={} steps={} total_reward={}", log.outcome.name(), log.len(), log.total_reward());
    if let Some(dir) = &a.common.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        write(&dir.join("trace.tsv"), &table)?;
        let mut m = Meta::new();
        m.set("domain", domain);
        m.set("formula", &a.formula);
        if let Some(p) = &a.map {
            m.set("map", p.display());
        }
        m.set("symbols", a.symbols);
        m.set("horizon", horizon);
        m.set("policy", &a.policy);
        m.set("seed", seed);
        m.write(&dir.join("config.meta")).map_err(|e| io_failure(dir, e))?;
    }
    Ok(())
}

fn run_policy(policy: &str, task: &Task, env: TaskEnv, setting: &TaskSetting, alphabet: &Alphabet) -> Res<EpisodeLog> {
    let parts: Vec<&str> = policy.split(':').collect();
    match parts.as_slice() {
        ["scripted", "fig2"] => fetch_policy(task, env, setting, Resource::Gem, Structure::Factory),
        ["scripted", "fetch", r, s] => fetch_policy(task, env, setting, resource(r)?, structure(s, alphabet)?),
        ["actions", list] => {
            let actions: Vec<usize> = list
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| Failure::Config(format!("bad action {x:?}"))))
                .collect::<Res<_>>()?;
            let count = setting.action_count();
            if let Some(bad) = actions.iter().find(|&&x| x >= count) {
                return Err(Failure::Config(format!("action {bad} out of range (0..{count})")));
            }
            let mut i = 0;
            Ok(run_scripted(task, env, setting.spec, |_| {
                let a = actions.get(i).or(actions.last()).copied().unwrap_or(0);
                i += 1;
                a
            }))
        }
        ["checkpoint", ..] => {
            let path = PathBuf::from(&policy["checkpoint:".len()..]);
            if !path.exists() {
                return Err(Failure::MissingInput(format!("{}: checkpoint not found", path.display())));
            }
            let ck = Checkpoint::<Real>::load(&path).map_err(|e| Failure::BadInput(e.to_string()))?;
            let (model, _) = load_model(&ck).map_err(train_failure)?;
            let mut rng = derived_rng(0, 0, 0);
            run_episode(&model, task, env, setting.spec, Mode::Eval, &mut rng)
                .map(|t| t.log)
                .map_err(|e| Failure::BadInput(e.to_string()))
        }
        _ => Err(Failure::Config(format!("unknown policy {policy:?}"))),
    }
}

fn fetch_policy(task: &Task, env: TaskEnv, setting: &TaskSetting, r: Resource, s: Structure) -> Res<EpisodeLog> {
    if !matches!(env, TaskEnv::Craft(_)) {
        return Err(Failure::Config("scripted fetch policies need the Craft domain".into()));
    }
    let expert = ScriptedFetch { resource: r, structure: s };
    Ok(run_scripted(task, env, setting.spec, |e| match e {
        TaskEnv::Craft(c) => expert.act(&c.state).index(),
        TaskEnv::Symbol(_) => unreachable!("checked above"),
    }))
}

fn trace_rows(log: &EpisodeLog, setting: &TaskSetting) -> Vec<TraceRow> {
    let last = log.len().saturating_sub(1);
    (0..log.len())
        .map(|i| TraceRow {
            t: i + 1,
            action: action_name(setting, log.actions[i]),
            letter: log.letters[i],
            state: log.states[i],
            reward: log.rewards[i],
            status: if i == last {
                match log.outcome {
                    Outcome::Success => "accepting".to_string(),
                    o => o.name().to_string(),
                }
            } else {
                log.statuses[i].name().to_string()
            },
        })
        .collect()
}

fn action_name(setting: &TaskSetting, a: usize) -> String {
    match setting.domain {
        Domain::Craft => ltlforge::envs::CraftAction::ALL[a].name().to_string(),
        Domain::Symbol => setting.network_alphabet().names()[a].clone(),
    }
}

fn plot_data(a: PlotArgs) -> Res<()> {
    if a.window == 0 {
        return Err(Failure::Config("window must be at least 1".into()));
    }
    if a.unit == 0 {
        return Err(Failure::Config("unit must be positive".into()));
    }
    let dir = out_dir(&a.common, ".")?;
    let mut index = String::from("label\tsplit\tpoints\tfile\n");
    for spec in &a.curve {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                // `run/curve.tsv` is labelled `run`, `other.tsv` is labelled `other`.
                let stem = p.file_stem().filter(|s| *s != "curve");
                let label = stem
                    .or_else(|| p.parent().and_then(|d| d.file_name()))
                    .map_or("run".to_string(), |s| s.to_string_lossy().into_owned());
                (label, p)
            }
        };
        let text = std::fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
        let rows = parse_curve(&text).map_err(|e| Failure::BadInput(format!("{}: {e}", path.display())))?;
        let mut splits: Vec<String> = Vec::new();
        match &a.splits {
            Some(s) => splits.extend(s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty())),
            None => {
                for r in &rows {
                    if !splits.contains(&r.split) {
                        splits.push(r.split.clone());
                    }
                }
            }
        }
        for split in splits {
            let ys: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.split == split)
                .map(|r| (r.update_count as f64 / a.unit as f64, r.success_rate))
                .collect();
            let mut out = String::from("x\ty\n");
            for (i, (x, _)) in ys.iter().enumerate() {
                let lo = (i + 1).saturating_sub(a.window);
                let w = &ys[lo..=i];
                let y = w.iter().map(|p| p.1).sum::<f64>() / w.len() as f64;
                let _ = writeln!(out, "{x}\t{y}");
            }
            let file = format!("{label}.{split}.tsv");
            write(&dir.join(&file), &out)?;
            let _ = writeln!(index, "{label}\t{split}\t{}\t{file}", ys.len());
        }
    }
    write(&dir.join("series.tsv"), &index)?;
    let mut m = Meta::new();
    m.set("curves", a.curve.join(","));
    m.set("window", a.window);
    m.set("unit", a.unit);
    if let Some(s) = &a.splits {
        m.set("splits", s);
    }
    m.write(&dir.join("config.meta")).map_err(|e| io_failure(&dir, e))?;
    print!("{index}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            return report(Failure::Usage(first));
        }
    };
    let result = match cli.cmd {
        Command::GenFormulas(a) => gen_formulas(a),
        Command::Stats(a) => stats(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Inspect(a) => inspect(a),
        Command::PlotData(a) => plot_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

/// Prints `error=<kind> code=<n> message=<text>` on one line of stderr.
fn report(f: Failure) -> ExitCode {
    let msg = f.message().replace(['\n', '\r'], " ");
    eprintln!("ltlforge: error={} code={} message={}", f.kind(), f.code(), msg);
    ExitCode::from(f.code())
}
