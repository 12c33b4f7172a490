mod common;

use std::sync::Arc;

use common::{formula, one_hot_traces, seeded_formula};
use ltlforge::automaton::{brute_force_accepts, compile, count_accepted, monitor_step, LetterSpace, MonitorState, MonitorStatus};
use ltlforge::compnet::{Architecture, Checkpoint, Model, ModelConfig, OptimizerSnapshot};
use ltlforge::envs::{craft_generate_map, CraftAction, Episode, Outcome, RewardSpec, SymbolConfig, SymbolEnv};
use ltlforge::ltl::{format, mutate_subtree, parse, sample_formula_with_size, Alphabet, ElementPrior, Formula, OperatorSet, PropId};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arity_ok(f: &Formula) -> bool {
    f.children().len() == f.kind().arity() && f.children().into_iter().all(arity_ok)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_inverts_format(f in formula(5, 6)) {
        let alphabet = Alphabet::symbols(5);
        let text = format(&f, &alphabet);
        prop_assert_eq!(parse(&text, &alphabet).unwrap(), f);
    }

    #[test]
    fn constructed_trees_keep_arity(f in formula(3, 8)) {
        prop_assert!(arity_ok(&f));
        prop_assert_eq!(f.preorder().len(), f.node_count());
    }

    #[test]
    fn sampled_size_is_exact(seed in any::<u64>(), m in 1usize..=20) {
        let f = seeded_formula(seed, m, 3);
        prop_assert_eq!(f.node_count(), m);
        prop_assert!(arity_ok(&f));
    }

    #[test]
    fn mutation_touches_one_subtree(seed in any::<u64>(), m in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = [PropId(0), PropId(1), PropId(2)];
        let ops = OperatorSet::full();
        let f = sample_formula_with_size(&mut rng, m, &alphabet, &ops);
        let g = mutate_subtree(&mut rng, &f, &ElementPrior::uniform(1, 5), &alphabet, &ops);
        // Some preorder site of `f`, once given `g`'s subtree there, must reproduce `g`.
        let explained = (0..f.node_count()).any(|site| {
            g.subtree(site).and_then(|sub| f.replace_subtree(site, sub.clone())).as_ref() == Some(&g)
        });
        prop_assert!(explained);
    }

    #[test]
    fn dfa_agrees_with_semantics(f in formula(3, 3)) {
        let dfa = compile(&f, LetterSpace::one_hot(3)).unwrap();
        for len in 0..=4 {
            for t in one_hot_traces(3, len) {
                prop_assert_eq!(dfa.accepts(&t), brute_force_accepts(&f, &t), "{:?}", t);
            }
        }
    }

    #[test]
    fn count_rows_sum_to_all_strings(f in formula(3, 4), free in any::<bool>(), n in 0usize..=7) {
        let space = if free { LetterSpace::free(3) } else { LetterSpace::one_hot(3) };
        let dfa = compile(&f, space).unwrap();
        let res = count_accepted(&dfa, n);
        for (t, row) in res.table.counts.iter().enumerate() {
            let total: BigUint = row.iter().sum();
            prop_assert_eq!(total, BigUint::from(space.letter_count()).pow(t as u32));
        }
    }

    #[test]
    fn count_matches_enumeration(f in formula(3, 3), n in 0usize..=5) {
        let dfa = compile(&f, LetterSpace::one_hot(3)).unwrap();
        let brute = one_hot_traces(3, n).iter().filter(|t| brute_force_accepts(&f, t)).count();
        prop_assert_eq!(count_accepted(&dfa, n).accepted_at_n, BigUint::from(brute));
    }

    #[test]
    fn guards_partition_letters(f in formula(3, 4), free in any::<bool>()) {
        let space = if free { LetterSpace::free(3) } else { LetterSpace::one_hot(3) };
        let dfa = compile(&f, space).unwrap();
        for s in 0..dfa.num_states() {
            let guards = dfa.transitions(s);
            prop_assert_eq!(guards.iter().map(|(g, _)| g.size()).sum::<u64>(), space.letter_count());
            for l in space.letters() {
                let hits: Vec<usize> = guards.iter().filter(|(g, _)| g.contains(&dfa, l)).map(|(_, t)| *t).collect();
                prop_assert_eq!(hits, vec![dfa.step(s, l)]);
            }
        }
    }

    #[test]
    fn monitor_ends_accepting_iff_accepted(f in formula(3, 4), trace in proptest::collection::vec(0u8..3, 1..8)) {
        let dfa = compile(&f, LetterSpace::one_hot(3)).unwrap();
        let letters: Vec<_> = trace.iter().map(|&p| ltlforge::automaton::Letter::one_hot(PropId(p))).collect();
        let m = letters.iter().fold(MonitorState::start(&dfa), |m, &l| monitor_step(m, &dfa, l));
        prop_assert_eq!(m.status == MonitorStatus::Accepting, dfa.accepts(&letters));
    }

    #[test]
    fn symbol_rewards_follow_the_machine(f in formula(3, 4), actions in proptest::collection::vec(0usize..3, 15)) {
        let dfa = Arc::new(compile(&f, LetterSpace::one_hot(3)).unwrap());
        let spec = RewardSpec::default();
        let env = SymbolEnv::new(SymbolConfig { symbols: 3, horizon: 15, ..Default::default() });
        let mut ep = Episode::new(env, dfa.clone(), spec);
        let mut letters = Vec::new();
        let mut last = None;
        for &a in &actions {
            let r = ep.step(a);
            letters.push(r.letter);
            let decayed = spec.step_reward * spec.stay_decay.powi(r.monitor.steps_in_state as i32 - 1);
            let kinds = [
                r.outcome.is_none() && r.monitor.status == MonitorStatus::Progressing && (r.reward - decayed).abs() < 1e-12,
                r.outcome.is_none() && r.monitor.status == MonitorStatus::Accepting && r.reward == spec.step_reward,
                r.outcome == Some(Outcome::Violation) && r.reward == -1.0,
                r.outcome == Some(Outcome::Success) && r.reward == 1.0,
                r.outcome == Some(Outcome::Timeout) && r.reward == 0.0,
            ];
            prop_assert_eq!(kinds.iter().filter(|k| **k).count(), 1, "{:?}", r);
            if r.done {
                last = r.outcome;
                break;
            }
        }
        let success = last == Some(Outcome::Success);
        let never_violated = letters.iter().scan(MonitorState::start(&dfa), |m, &l| {
            *m = monitor_step(*m, &dfa, l);
            Some(m.status)
        }).all(|s| s != MonitorStatus::Violated);
        prop_assert_eq!(success, dfa.accepts(&letters) && never_violated);
    }

    #[test]
    fn craft_moves_are_single_cells(seed in any::<u64>(), actions in proptest::collection::vec(0usize..5, 1..40)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = craft_generate_map(&mut rng, 7);
        for &a in &actions {
            let before = s.clone();
            let action = CraftAction::ALL[a];
            s.apply(action);
            let dist = before.robot.0.abs_diff(s.robot.0) + before.robot.1.abs_diff(s.robot.1);
            if action == CraftAction::Use {
                prop_assert_eq!(dist, 0);
            } else {
                prop_assert!(dist <= 1);
                prop_assert_eq!(before.holding, s.holding);
            }
        }
    }

    #[test]
    fn checkpoints_round_trip_bitwise(seed in any::<u64>(), values in proptest::collection::vec(any::<u32>(), 8)) {
        let mut model = Model::<f32>::new(ModelConfig { seed, hidden: 6, message: 3, ..ModelConfig::symbol(Architecture::Full, 3, 3) });
        for (i, v) in values.iter().enumerate() {
            let n = model.store.len();
            model.store.data[i * 7 % n] = f32::from_bits(*v);
        }
        let ck = Checkpoint {
            meta: model.config.to_meta(),
            store: model.store.clone(),
            optimizer: Some(OptimizerSnapshot { square_avg: model.store.data.iter().map(|v| v.abs()).collect(), updates: seed }),
        };
        let back = Checkpoint::<f32>::from_bytes(&ck.to_bytes()).unwrap();
        let bits = |d: &[f32]| d.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.store.data), bits(&model.store.data));
        prop_assert_eq!(bits(&back.optimizer.as_ref().unwrap().square_avg), bits(&ck.optimizer.as_ref().unwrap().square_avg));
        prop_assert_eq!(back.meta, ck.meta);
    }
}
