use std::sync::Arc;

use negosi_core::baselines::cq_style;
use negosi_core::environments::{load_map, GridMap, TaskPlan, World};
use negosi_core::equilibrium::JointAction;
use negosi_core::harness::{pretrain_map, run_rngs, train_source};
use negosi_core::learner::{LearningParams, Pretrained};
use negosi_core::negosi::{CoordinationMode, NegoConfig, SparseLearner, StepRecord};
use negosi_core::transfer::{RelativeState, SourceLibrary};

/// Two rows, agents starting at opposite ends of the top row. Both shortest
/// paths run along the top row, so they meet head-on on the second step.
fn corridor() -> (GridMap, TaskPlan, Vec<Pretrained>) {
    let map =
        load_map("map corridor 2 4 2\n....\n....\nagent 1 start 0 0 goal 0 3\nagent 2 start 0 3 goal 0 0\n").unwrap();
    let (plan, pretrained) = pretrain_map(&map, 500, 3, &LearningParams::pretraining());
    (map, plan, pretrained)
}

fn greedy_config() -> NegoConfig {
    NegoConfig {
        comm_range: None,
        params: LearningParams {
            epsilon: 0.0,
            ..LearningParams::default()
        },
    }
}

fn library() -> Arc<SourceLibrary> {
    let mut lib = SourceLibrary::new();
    lib.insert(train_source(2, 100_000, 0)).unwrap();
    Arc::new(lib)
}

fn episode(learner: &mut SparseLearner, world: &mut World<'_>, cap: usize) -> Vec<StepRecord> {
    world.reset();
    let mut out = Vec::new();
    while !world.is_done() && out.len() < cap {
        out.push(learner.step(world));
    }
    out
}

#[test]
fn first_conflict_expands_then_second_visit_negotiates() {
    let (map, plan, pretrained) = corridor();
    let (rng, nego) = run_rngs(5);
    let mut learner = SparseLearner::new(
        CoordinationMode::Negotiate(library()),
        greedy_config(),
        &pretrained,
        rng,
        nego,
    )
    .unwrap();
    let mut world = World::new(&map, &plan);

    let first = episode(&mut learner, &mut world, 200);
    let clash = first
        .iter()
        .position(|r| r.transition.step.any_collision())
        .expect("greedy paths collide");
    assert!(first[..=clash].iter().all(|r| r.negotiations.is_empty()));
    let pools: Vec<_> = learner.agents().iter().map(|a| a.pool.states().to_vec()).collect();
    assert!(pools.iter().all(|p| !p.is_empty()));
    assert_eq!(pools[0][0].key, pools[1][0].key);
    assert_eq!(pools[0][0].key.participants, vec![0, 1]);
    assert!(!pools[0][0].coordination_pairs.is_empty());

    let second = episode(&mut learner, &mut world, 200);
    let talk = &second[clash];
    assert_eq!(talk.negotiations.len(), 1);
    assert_eq!(talk.negotiations[0].participants, vec![0, 1]);
    assert!(talk.coord.iter().all(Option::is_some));
}

#[test]
fn null_map_never_expands() {
    let map =
        load_map("map apart 3 5 2\n.....\n#####\n.....\nagent 1 start 0 0 goal 0 4\nagent 2 start 2 4 goal 2 0\n")
            .unwrap();
    let (plan, pretrained) = pretrain_map(&map, 300, 1, &LearningParams::pretraining());
    let (rng, nego) = run_rngs(9);
    let config = NegoConfig::default();
    let mut learner =
        SparseLearner::new(CoordinationMode::Negotiate(library()), config, &pretrained, rng, nego).unwrap();
    let mut world = World::new(&map, &plan);
    for _ in 0..50 {
        episode(&mut learner, &mut world, 1000);
    }
    assert_eq!(learner.coordination_states(), 0);
}

#[test]
fn cq_style_repeats_the_collision_on_revisit() {
    let (map, plan, pretrained) = corridor();
    let (rng, nego) = run_rngs(5);
    let mut learner = cq_style(greedy_config(), &pretrained, rng, nego);
    let mut world = World::new(&map, &plan);
    let first = episode(&mut learner, &mut world, 200);
    let k = first.iter().position(|r| r.transition.step.any_collision()).unwrap();
    let crash: Vec<usize> = first[k].transition.actions.iter().map(|a| a.index()).collect();
    // After bouncing, both agents stand where they were, so the very next
    // step revisits the coordination state.
    let talk = &first[k + 1];
    assert_eq!(talk.negotiations.len(), 1);
    // The penalized entry still bootstraps from a positive global value and
    // stays above the untouched zeros, so greedy choice repeats it.
    assert_eq!(talk.negotiations[0].chosen, JointAction(crash));
    assert!(talk.transition.step.any_collision());
}

#[test]
fn distant_relative_states_carry_no_penalty() {
    let q = train_source(2, 200_000, 4);
    for agent in 0..2 {
        for rel in q.relative_states(agent) {
            let c = rel.components();
            let far = c[0].abs().max(c[1].abs()) >= 3;
            if far {
                assert!(q.entry(agent, rel).unwrap().iter().all(|&v| v == 0.0), "{rel}");
            }
        }
    }
    let near = RelativeState::from_components(vec![0, 1]);
    assert!(q.entry(0, &near).is_some_and(|e| e.iter().any(|&v| v == -10.0)));
}
