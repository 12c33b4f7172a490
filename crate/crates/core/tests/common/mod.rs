#![allow(dead_code)]

use ltlforge::automaton::Letter;
use ltlforge::ltl::{sample_formula_with_size, Formula, Operator, OperatorSet, PropId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random ASTs over the first `props` propositions, built bottom-up through the public
/// constructors.
pub fn formula(props: u8, depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = (0..props).prop_map(|p| Formula::atom(PropId(p)));
    leaf.prop_recursive(depth, 24, 2, |inner| {
        let unary = Operator::ALL.into_iter().filter(|o| o.arity() == 1).collect::<Vec<_>>();
        let binary = Operator::ALL.into_iter().filter(|o| o.arity() == 2).collect::<Vec<_>>();
        prop_oneof![
            (proptest::sample::select(unary), inner.clone()).prop_map(|(op, c)| Formula::unary(op, c)),
            (proptest::sample::select(binary), inner.clone(), inner).prop_map(|(op, l, r)| Formula::binary(op, l, r)),
        ]
    })
}

/// Seeded draw of a formula with exactly `nodes` elements over `props` propositions.
pub fn seeded_formula(seed: u64, nodes: usize, props: u8) -> Formula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<PropId> = (0..props).map(PropId).collect();
    sample_formula_with_size(&mut rng, nodes, &alphabet, &OperatorSet::full())
}

/// Every one-hot trace over `k` symbols of exactly `len` letters.
pub fn one_hot_traces(k: usize, len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..k).map(move |p| {
                    let mut t = t.clone();
                    t.push(Letter::one_hot(PropId(p as u8)));
                    t
                })
            })
            .collect();
    }
    out
}

use ltlforge::compnet::{loss_with_targets, targets, Architecture, EpisodeState, LossConfig, Model, ModelConfig, StepRecord, Tape};
use ltlforge::gen::{generate_dataset, Dataset, GenConfig};
use num_rational::BigRational;
use rand::Rng;

/// Small randomized setting for gradient checks.
pub struct GradCase {
    pub formula: Formula,
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

pub const GRAD_OBS: usize = 8;
pub const GRAD_ACTIONS: usize = 3;

pub fn grad_model(arch: Architecture, seed: u64) -> Model<f64> {
    Model::new(ModelConfig {
        hidden: 16,
        message: 8,
        embedding: 8,
        obs_dim: GRAD_OBS,
        features: GRAD_OBS,
        init_bound: 0.3,
        seed,
        ..ModelConfig::symbol(arch, 3, GRAD_ACTIONS)
    })
}

pub fn grad_case(seed: u64) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = rng.gen_range(1..=7);
    let formula = seeded_formula(rng.gen(), nodes, 3);
    let steps = rng.gen_range(2..=3);
    let obs = (0..steps).map(|_| (0..GRAD_OBS).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let actions = (0..steps).map(|_| rng.gen_range(0..GRAD_ACTIONS)).collect();
    let rewards = (0..steps).map(|_| [0.1, 0.08, -1.0, 1.0, 0.0][rng.gen_range(0..5)]).collect();
    GradCase { formula, obs, actions, rewards }
}

fn forward(model: &Model<f64>, case: &GradCase) -> (Tape<f64>, Vec<StepRecord>) {
    let asm = model.assemble(&case.formula).expect("assemble");
    let mut tape = Tape::new();
    let mut state = EpisodeState::default();
    let steps = case
        .obs
        .iter()
        .zip(&case.actions)
        .zip(&case.rewards)
        .map(|((o, &action), &reward)| {
            let out = model.step(&mut tape, &asm, &mut state, o);
            StepRecord { logits: out.logits, value: out.value, action, reward }
        })
        .collect();
    (tape, steps)
}

/// Worst mismatch between the backward pass and central differences of the full loss
/// (returns and advantages held at their unperturbed values, as the update treats them).
pub struct GradReport {
    pub checked: usize,
    pub worst_rel: f64,
    pub failures: usize,
    pub unused_nonzero: usize,
    /// Largest relative error among gradients of magnitude at least 1e-4.
    pub worst_large_rel: f64,
    pub max_abs: f64,
}

pub fn check_gradients(model: &Model<f64>, case: &GradCase) -> GradReport {
    let cfg = LossConfig { n_step: None, ..LossConfig::default() };
    let (tape, steps) = forward(model, case);
    let (returns, adv) = targets(&tape, &steps, &cfg);
    let (_, seeds) = loss_with_targets(&tape, &steps, &returns, &adv, &cfg, 1.0);
    let mut grads = vec![0.0; model.store.len()];
    tape.backward(model.params(), &seeds, &mut grads);

    let asm = model.assemble(&case.formula).unwrap();
    let used: Vec<std::ops::Range<usize>> = model.used_ranges(&asm);
    let mut in_use = vec![false; grads.len()];
    for r in &used {
        in_use[r.clone()].iter_mut().for_each(|u| *u = true);
    }
    let mut probe = model.clone();
    let loss_at = |m: &Model<f64>| {
        let (t, s) = forward(m, case);
        loss_with_targets(&t, &s, &returns, &adv, &cfg, 1.0).0.total
    };
    let eps = 1e-6;
    let mut report =
        GradReport { checked: 0, worst_rel: 0.0, failures: 0, unused_nonzero: 0, worst_large_rel: 0.0, max_abs: 0.0 };
    for i in 0..grads.len() {
        if !in_use[i] {
            report.unused_nonzero += (grads[i] != 0.0) as usize;
            continue;
        }
        let orig = probe.store.data[i];
        probe.store.data[i] = orig + eps;
        let up = loss_at(&probe);
        probe.store.data[i] = orig - eps;
        let down = loss_at(&probe);
        probe.store.data[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let diff = (numeric - grads[i]).abs();
        let rel = diff / numeric.abs().max(grads[i].abs()).max(1e-300);
        report.checked += 1;
        report.max_abs = report.max_abs.max(grads[i].abs());
        if numeric.abs().max(grads[i].abs()) >= 1e-4 {
            report.worst_large_rel = report.worst_large_rel.max(rel);
        }
        if diff > 1e-6 {
            report.worst_rel = report.worst_rel.max(rel);
            report.failures += (rel > 1e-4) as usize;
        }
    }
    report
}

/// Desk-sized Symbol dataset: three one-hot letters, horizon 8.
pub fn small_symbol_dataset(sizes: [usize; 4], threshold: (i64, i64), seed: u64) -> Dataset {
    let cfg = GenConfig {
        symbols: 3,
        horizon: 8,
        threshold: BigRational::new(threshold.0.into(), threshold.1.into()),
        seed,
        ..GenConfig::symbol().with_sizes(sizes)
    };
    generate_dataset(&cfg).expect("generation")
}
