use rand::Rng as _;

use super::*;
use crate::belief::sigmoid;
use crate::env::{Terrain, TerrainGrid};
use crate::planner::rollout;
use crate::rng::rng_from;

/// log2 M − Σ_I P(I) H(w | I) on the uniform discrete ensemble.
fn direct_info_gain(z: &[f64]) -> f64 {
    let m = z.len() as f64;
    let mut expected_posterior = 0.0;
    for sign in [1.0, -1.0] {
        let lik: Vec<f64> = z.iter().map(|&zi| sigmoid(sign * zi)).collect();
        let total: f64 = lik.iter().sum();
        if total == 0.0 {
            continue;
        }
        let p_i = total / m;
        let h: f64 = lik
            .iter()
            .map(|l| l / total)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum();
        expected_posterior += p_i * h;
    }
    m.log2() - expected_posterior
}

fn random_unit_ball(rng: &mut Rng, d: usize) -> WeightVector {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return WeightVector::new(v);
        }
    }
}

#[test]
fn estimator_matches_direct_entropy_difference() {
    let mut rng = rng_from(1, &[]);
    for _ in 0..100 {
        let m = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let samples: Vec<WeightVector> = (0..m).map(|_| random_unit_ball(&mut rng, d)).collect();
        let scale = [1.0, 5.0, 30.0][rng.random_range(0..3)];
        let fa = FeatureVector::new((0..d).map(|_| rng.random_range(0.0..scale)).collect());
        let fb = FeatureVector::new((0..d).map(|_| rng.random_range(0.0..scale)).collect());
        let g = info_gain(&fa, &fb, &samples).unwrap();
        let z: Vec<f64> = samples.iter().map(|w| w.dot_slice(fa.difference(&fb).unwrap().as_slice())).collect();
        assert!((g - direct_info_gain(&z)).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&g));
        let swapped = info_gain(&fb, &fa, &samples).unwrap();
        assert!((g - swapped).abs() < 1e-12);
    }
}

#[test]
fn two_decisive_samples_give_one_bit() {
    let samples = [WeightVector::new(vec![1.0, 0.0]), WeightVector::new(vec![-1.0, 0.0])];
    let g = info_gain(&FeatureVector::new(vec![100.0, 0.0]), &FeatureVector::new(vec![0.0, 0.0]), &samples).unwrap();
    assert!((g - 1.0).abs() < 1e-12);
}

fn unit(v: &[f64]) -> WeightVector {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    WeightVector::new(v.iter().map(|x| x / n).collect())
}

#[test]
fn seeded_selection_prefers_orthogonal() {
    let s = [unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), unit(&[1.0, 1.0])];
    assert_eq!(greedy_max_min(&s, &[0, 1, 2], 2, 0), vec![0, 1]);
    assert!((cosine_distance(&s[0], &s[2]) - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
}

#[test]
fn selecting_everything_permutes_input() {
    let mut rng = rng_from(2, &[]);
    let s: Vec<WeightVector> = (0..6).map(|_| random_unit_ball(&mut rng, 3)).collect();
    let mut idx = select_diverse_indices(&s, 6).unwrap();
    idx.sort();
    assert_eq!(idx, (0..6).collect::<Vec<_>>());
    assert!(select_diverse_indices(&s, 7).is_err());
}

#[test]
fn zero_weights_are_skipped() {
    let s = [WeightVector::zeros(2), unit(&[1.0, 0.0]), unit(&[0.0, 1.0])];
    let idx = select_diverse_indices(&s, 2).unwrap();
    assert!(!idx.contains(&0));
    assert_eq!(idx.len(), 2);
}

#[test]
fn pair_selection_is_the_farthest_pair() {
    let mut rng = rng_from(5, &[]);
    for _ in 0..50 {
        let s: Vec<WeightVector> = (0..7).map(|_| random_unit_ball(&mut rng, 3)).collect();
        let idx = select_diverse_indices(&s, 2).unwrap();
        let mut best = 0.0f64;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                best = best.max(cosine_distance(&s[i], &s[j]));
            }
        }
        assert!((min_pairwise_distance(&s, &idx) - best).abs() < 1e-12);
    }
}

/// A 5×5 map: grass along the top row and right column, brick along the
/// left column and bottom row, sand everywhere else.
fn two_route_env() -> EnvironmentSpec {
    let mut grid = TerrainGrid::filled(5, Terrain::Sand).unwrap();
    for k in 0..5 {
        grid.set((0, k), Terrain::Grass);
        grid.set((k, 4), Terrain::Grass);
        grid.set((k, 0), Terrain::Brick);
        grid.set((4, k), Terrain::Brick);
    }
    grid.set((4, 4), Terrain::Gravel);
    EnvironmentSpec::grid(grid)
}

fn two_cluster_ensemble() -> BeliefEnsemble {
    let mut rng = rng_from(3, &[]);
    let grass = [-0.5, -0.6, -0.6, 0.1];
    let brick = [0.1, -0.6, -0.6, -0.5];
    let samples = (0..40)
        .map(|i| {
            let base = if i % 2 == 0 { grass } else { brick };
            WeightVector::new(base.iter().map(|b| b + rng.random_range(-0.02..0.02)).collect()).clamped_to_ball()
        })
        .collect();
    BeliefEnsemble::from_samples(samples).unwrap()
}

#[test]
fn counterfactual_pair_separates_the_clusters() {
    let env = two_route_env();
    let ensemble = two_cluster_ensemble();
    let mut cache = PolicyCache::default();
    let mut rng = rng_from(4, &[]);
    let params = QueryParams {
        normalization: FeatureNormalization::None,
        ..QueryParams::default()
    };
    let q = counterfactual_query(&env, &ensemble, &params, &mut cache, &mut rng).unwrap();
    let grass = Terrain::Grass.id();
    let brick = Terrain::Brick.id();
    assert_ne!(q.traj_a.features()[grass], q.traj_b.features()[grass]);
    assert_ne!(q.traj_a.features()[brick], q.traj_b.features()[brick]);
    assert!(q.info_gain > 0.5, "{}", q.info_gain);
    assert_eq!(q.generator, Generator::Counterfactual);
    q.traj_a.validate(&env).unwrap();
    q.traj_b.validate(&env).unwrap();
}

#[test]
fn counterfactual_gain_is_the_best_pair() {
    let env = two_route_env();
    let ensemble = two_cluster_ensemble();
    let params = QueryParams::default();
    let mut rng = rng_from(5, &[]);
    let mut replay = rng.clone();
    let q = counterfactual_query(&env, &ensemble, &params, &mut PolicyCache::default(), &mut rng).unwrap();

    let drawn: Vec<WeightVector> = (0..params.n_samples)
        .map(|_| ensemble.samples[replay.random_range(0..ensemble.len())].clone())
        .collect();
    let planner = Planner::default();
    let mut trajs: Vec<TrajectoryRecord> = Vec::new();
    for w in select_diverse_weights(&drawn, params.n_diverse).unwrap() {
        let policy = planner.solve(&env, &w).unwrap();
        let t = rollout(&env, &policy, 0.0, env.horizon(), 0).unwrap();
        if !trajs.iter().any(|o| o.features() == t.features()) {
            trajs.push(t);
        }
    }
    let mut best: f64 = 0.0;
    for i in 0..trajs.len() {
        for j in i + 1..trajs.len() {
            best = best.max(query_info_gain(&env, &trajs[i], &trajs[j], &ensemble, params.normalization).unwrap());
        }
    }
    assert!((q.info_gain - best).abs() < 1e-12);
}

#[test]
fn identical_weights_are_degenerate() {
    let env = two_route_env();
    let ensemble = BeliefEnsemble::from_samples(vec![WeightVector::new(vec![-0.2, -0.3, -0.5, 0.1]); 10]).unwrap();
    let err = counterfactual_query(
        &env,
        &ensemble,
        &QueryParams::default(),
        &mut PolicyCache::default(),
        &mut rng_from(0, &[]),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DegenerateQuery(_)));
}

#[test]
fn counterfactual_rejects_bad_sizes() {
    let env = two_route_env();
    let ensemble = two_cluster_ensemble();
    let params = QueryParams {
        n_samples: 3,
        n_diverse: 4,
        ..QueryParams::default()
    };
    let r = counterfactual_query(&env, &ensemble, &params, &mut PolicyCache::default(), &mut rng_from(0, &[]));
    assert!(matches!(r, Err(Error::Config(_))));
}

fn best_of(env: &EnvironmentSpec, trajs: &[TrajectoryRecord], ensemble: &BeliefEnsemble) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..trajs.len() {
        for j in i + 1..trajs.len() {
            best = best.max(query_info_gain(env, &trajs[i], &trajs[j], ensemble, QueryParams::default().normalization).unwrap());
        }
    }
    best
}

#[test]
fn random_rollout_query_is_argmax_and_reproducible() {
    let env = two_route_env();
    let ensemble = two_cluster_ensemble();
    let params = QueryParams {
        n_candidates: 12,
        ..QueryParams::default()
    };
    let mut rng = rng_from(6, &[]);
    let mut replay = rng.clone();
    let q = random_rollout_query(&env, &ensemble, &params, &mut rng).unwrap();
    let table = env.move_table();
    let trajs: Vec<TrajectoryRecord> = (0..12)
        .map(|_| rollout_with(&env, &table, env.id(), None, 1.0, env.horizon(), &mut replay).unwrap())
        .collect();
    assert!((q.info_gain - best_of(&env, &trajs, &ensemble)).abs() < 1e-12);
    let again = random_rollout_query(&env, &ensemble, &params, &mut rng_from(6, &[])).unwrap();
    assert_eq!(q, again);
}

#[test]
fn random_rollout_with_two_candidates_uses_them() {
    let env = two_route_env();
    let ensemble = two_cluster_ensemble();
    let params = QueryParams {
        n_candidates: 2,
        ..QueryParams::default()
    };
    let mut rng = rng_from(7, &[]);
    let mut replay = rng.clone();
    let q = random_rollout_query(&env, &ensemble, &params, &mut rng).unwrap();
    let table = env.move_table();
    let a = rollout_with(&env, &table, env.id(), None, 1.0, env.horizon(), &mut replay).unwrap();
    let b = rollout_with(&env, &table, env.id(), None, 1.0, env.horizon(), &mut replay).unwrap();
    assert_eq!((q.traj_a, q.traj_b), (a, b));
}

#[test]
fn mean_belief_query_is_argmax() {
    let env = two_route_env();
    let ensemble = two_cluster_ensemble();
    let params = QueryParams {
        n_candidates: 10,
        ..QueryParams::default()
    };
    let mut rng = rng_from(8, &[]);
    let mut replay = rng.clone();
    let q = mean_belief_query(&env, &ensemble, &params, &mut PolicyCache::default(), &mut rng).unwrap();
    let policy = Planner::default().solve(&env, &ensemble.mean().unwrap()).unwrap();
    let table = env.move_table();
    let trajs: Vec<TrajectoryRecord> = (0..10)
        .map(|_| rollout_with(&env, &table, env.id(), Some(&policy), 0.25, env.horizon(), &mut replay).unwrap())
        .collect();
    assert!((q.info_gain - best_of(&env, &trajs, &ensemble)).abs() < 1e-12);
    assert_eq!(q.generator, Generator::MeanBeliefPolicy);
}

#[test]
fn greedy_mean_belief_rollouts_carry_no_information() {
    let env = two_route_env();
    let params = QueryParams {
        epsilon: 0.0,
        ..QueryParams::default()
    };
    let q = mean_belief_query(
        &env,
        &two_cluster_ensemble(),
        &params,
        &mut PolicyCache::default(),
        &mut rng_from(9, &[]),
    )
    .unwrap();
    assert_eq!(q.traj_a, q.traj_b);
    assert_eq!(q.info_gain, 0.0);
}

#[test]
fn policy_cache_reuses_solutions() {
    let env = two_route_env();
    let id = env.id();
    let mut cache = PolicyCache::default();
    let w = WeightVector::new(vec![0.1, 0.2, 0.3, 0.4]);
    let a = cache.policy(&env, &id, &w).unwrap();
    let b = cache.policy(&env, &id, &WeightVector::new(vec![0.1, 0.2, 0.3, 0.4 + 1e-12])).unwrap();
    assert!(Arc::ptr_eq(&a, &b));
    assert_eq!(cache.len(), 1);
}

#[test]
fn query_json_round_trips() {
    let env = two_route_env();
    let q = random_rollout_query(
        &env,
        &two_cluster_ensemble(),
        &QueryParams {
            n_candidates: 4,
            ..QueryParams::default()
        },
        &mut rng_from(10, &[]),
    )
    .unwrap();
    let json = serde_json::to_string(&q).unwrap();
    assert!(json.contains("\"generator\":\"RR\""));
    let back: PreferenceQuery = serde_json::from_str(&json).unwrap();
    assert_eq!(back, q);
}
