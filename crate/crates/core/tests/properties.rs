use std::sync::OnceLock;

use advdialog::adversarial::{intrinsic_reward, DemoBuffer, DemoEpisode};
use advdialog::checkpoint::{Checkpoint, Entry};
use advdialog::config::RunConfig;
use advdialog::domain::features::MATCH_BUCKETS;
use advdialog::domain::{
    featurize, Constraints, DialogueActType, SemanticFrame, Speaker, StateLayout, StateVector, World, ANYTHING,
};
use advdialog::env::{replay_episode, run_episode, DialogueEnv, SimRng};
use advdialog::metrics::{parse_csv, to_csv, MetricsRow};
use advdialog::nn::{softmax, DenseNet, NetShape, RmsProp, RmsPropConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn world() -> &'static World {
    static WORLD: OnceLock<World> = OnceLock::new();
    WORLD.get_or_init(|| RunConfig::default().build_world().unwrap())
}

fn env() -> DialogueEnv {
    RunConfig::default().env_for(world().clone()).unwrap()
}

fn random_policy(k: usize) -> impl FnMut(&StateVector, &advdialog::domain::DialogueTracker, &mut SimRng) -> usize {
    move |_, _, rng| rng.gen_range(0..k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_is_shift_invariant(logits in prop::collection::vec(-30.0f64..30.0, 1..70), c in -100.0f64..100.0) {
        let p = softmax(&logits);
        let shifted: Vec<f64> = logits.iter().map(|x| x + c).collect();
        let q = softmax(&shifted);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!(*a > 0.0);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn intrinsic_reward_is_monotone(a in 1e-6f64..0.999999, b in 1e-6f64..0.999999) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(intrinsic_reward(lo) < intrinsic_reward(hi));
        prop_assert!(intrinsic_reward(lo) > 0.0);
    }

    #[test]
    fn states_are_bounded_one_hot_and_chained(seed in any::<u64>()) {
        let mut env = env();
        let layout = StateLayout::new(world().ontology.len());
        let k = env.num_actions();
        let rec = run_episode(&mut env, &mut random_policy(k), &mut SimRng::seed_from_u64(seed)).unwrap();
        for t in &rec.transitions {
            for s in [&t.s, &t.s_next] {
                prop_assert_eq!(s.len(), 145);
                prop_assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
                for (start, width) in [
                    (layout.user_act(), DialogueActType::COUNT),
                    (layout.agent_act(), DialogueActType::COUNT),
                    (layout.match_bucket(), MATCH_BUCKETS),
                ] {
                    prop_assert!(s[start..start + width].iter().filter(|&&x| x != 0.0).count() <= 1);
                }
            }
        }
        for pair in rec.transitions.windows(2) {
            prop_assert_eq!(&pair[0].s_next, &pair[1].s);
        }
        prop_assert_eq!(rec.transitions.iter().filter(|t| t.terminal).count(), 1);
        let sum: f64 = rec.transitions.iter().map(|t| t.r).sum();
        prop_assert_eq!(sum, rec.total_reward);
    }

    #[test]
    fn replaying_an_episode_reproduces_it(seed in any::<u64>()) {
        let mut env = env();
        let k = env.num_actions();
        let rec = run_episode(&mut env, &mut random_policy(k), &mut SimRng::seed_from_u64(seed)).unwrap();
        let actions: Vec<usize> = rec.transitions.iter().map(|t| t.a).collect();
        let mut i = 0;
        let mut scripted = |_: &StateVector, _: &advdialog::domain::DialogueTracker, _: &mut SimRng| {
            i += 1;
            actions[i - 1]
        };
        let again = replay_episode(&mut env, &mut scripted, rec.goal_index, rec.episode_seed, &mut SimRng::seed_from_u64(0)).unwrap();
        prop_assert_eq!(again, rec);
    }

    #[test]
    fn adding_constraints_never_grows_the_match_set(row in 0usize..1000, picks in prop::collection::vec(0usize..29, 1..8)) {
        let w = world();
        let kb = &w.kb;
        let source = kb.row(row % kb.len());
        let informable: Vec<_> = w.ontology.informable().collect();
        let mut constraints = Constraints::new();
        let mut previous = kb.query(&constraints).unwrap();
        prop_assert_eq!(previous.len(), kb.len());
        for p in picks {
            let slot = informable[p % informable.len()];
            constraints.insert(slot, source.get(slot).to_string());
            let now = kb.query(&constraints).unwrap();
            prop_assert!(now.iter().all(|i| previous.contains(i)));
            prop_assert!(now.contains(&(row % kb.len())));
            previous = now;
        }
    }

    #[test]
    fn frames_render_and_parse_back(
        act in 0usize..DialogueActType::COUNT,
        informs in prop::collection::vec((0usize..29, 0usize..100), 0..4),
        requests in prop::collection::vec(0usize..29, 0..3),
    ) {
        let ont = &world().ontology;
        let ids: Vec<_> = ont.slot_ids().collect();
        let mut frame = SemanticFrame::new(DialogueActType::from_index(act).unwrap(), Speaker::User);
        for (slot, v) in informs {
            let id = ids[slot];
            let values = &ont.slot(id).values;
            let value = if values.is_empty() { ANYTHING.to_string() } else { values[v % values.len()].clone() };
            frame = frame.with_inform(id, value);
        }
        for slot in requests {
            if !frame.inform_slots.contains_key(&ids[slot]) {
                frame = frame.with_request(ids[slot]);
            }
        }
        let text = frame.render(ont);
        prop_assert_eq!(SemanticFrame::parse(&text, Speaker::User, ont).unwrap(), frame);
    }

    #[test]
    fn metrics_csv_round_trips(rows in prop::collection::vec(
        (0usize..100_000, 0.0f64..100.0, -200.0f64..200.0, 1.0f64..40.0, any::<u64>(), "[a-z][a-z0-9-]{0,8}"),
        0..20,
    )) {
        let rows: Vec<MetricsRow> = rows
            .into_iter()
            .map(|(episode, success_rate, avg_reward, avg_turns, seed, agent)| MetricsRow {
                episode, success_rate, avg_reward, avg_turns, seed, agent,
            })
            .collect();
        prop_assert_eq!(parse_csv(&to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly(
        dims in (1usize..6, 1usize..6, 1usize..6),
        seed in any::<u64>(),
        text in "[ -~]{0,40}",
    ) {
        let mut rng = SimRng::seed_from_u64(seed);
        let shape = NetShape::new(dims.0, dims.1, dims.2);
        let params: Vec<f64> = (0..shape.num_params()).map(|_| f64::from_bits(rng.gen::<u64>() >> 2)).collect();
        let net = DenseNet::from_params(shape, params).unwrap();
        let acc: Vec<f64> = (0..shape.num_params()).map(|_| rng.gen::<f64>()).collect();
        let opt = RmsProp::from_accumulators(RmsPropConfig::new(rng.gen()), acc);
        let demos = DemoBuffer::new(vec![DemoEpisode {
            goal_index: rng.gen_range(0..100),
            seed: rng.gen(),
            pairs: (0..3).map(|_| (StateVector((0..dims.0).map(|_| rng.gen()).collect()), rng.gen_range(0..64))).collect(),
        }]);
        let mut c = Checkpoint::new();
        c.insert_net("net", &net, Some(&opt));
        c.insert("demos", Entry::Demos(demos.clone()));
        c.insert("note", Entry::Text(text.clone()));
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        let (net2, opt2) = back.net("net").unwrap();
        prop_assert!(net2.params().iter().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(opt2.unwrap(), opt);
        prop_assert_eq!(back.demos("demos").unwrap(), &demos);
        prop_assert_eq!(back.text("note"), Some(text.as_str()));
    }
}

#[test]
fn featurize_is_pure() {
    let mut env = env();
    env.reset(&mut SimRng::seed_from_u64(3)).unwrap();
    let tracker = env.tracker().unwrap().clone();
    let layout = StateLayout::new(world().ontology.len());
    let matches = tracker.matches().len();
    let a = featurize(layout, &tracker, matches, 1, env.max_turns());
    let b = featurize(layout, &tracker, matches, 1, env.max_turns());
    assert_eq!(a, b);
    assert_eq!(&a, env.state().unwrap());
}
