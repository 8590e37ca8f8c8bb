use mbrl_game::dynamics::ReplayBuffer;
use mbrl_game::envs::{make_env, Transition};
use mbrl_game::mdp::random::{perturbed_model, random_distribution, random_mdp, random_policy, RandomMdpSpec};
use mbrl_game::mdp::{kl_divergence, tv_distance, TabularMdp};
use mbrl_game::policy::{gae_advantages, normalized_step};
use mbrl_game::rng;
use mbrl_game::verify::{
    check_error_amplification, check_performance_difference, check_simulation_lemma, check_theorem1, chain_of,
    CheckOptions,
};
use proptest::prelude::*;

fn instance(seed: u64, n: usize, k: usize, mix: f64) -> (TabularMdp, TabularMdp, mbrl_game::mdp::TabularPolicy) {
    let mut r = rng::from_seed(seed);
    let w = random_mdp(&mut r, &RandomMdpSpec { n_states: n, n_actions: k, gamma: None, sparsity: 0.3 });
    let m = perturbed_model(&mut r, &w, mix);
    let pi = random_policy(&mut r, n, k);
    (w, m, pi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_hold_and_tightness_in_unit_interval(seed in any::<u64>(), n in 1usize..=12, k in 1usize..=4, mix in 0.0f64..=1.0) {
        let (w, m, pi) = instance(seed, n, k, mix);
        let opts = CheckOptions::default();
        for rep in [
            check_simulation_lemma(&w, &m, &pi, &opts).unwrap(),
            check_performance_difference(&w, &m, &pi, &opts).unwrap(),
            check_theorem1(&w, &m, &pi, &opts).unwrap(),
        ] {
            prop_assert!(rep.holds, "{rep:?}");
            prop_assert!(rep.tightness >= 0.0 && rep.tightness <= 1.0 + 1e-9, "{rep:?}");
        }
        let (_, rep) = check_error_amplification(&chain_of(&w, &pi).unwrap(), &chain_of(&m, &pi).unwrap(), w.rho(), 30, &opts).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn identical_model_has_zero_model_terms(seed in any::<u64>(), n in 1usize..=10, k in 1usize..=3) {
        let (w, _, pi) = instance(seed, n, k, 0.0);
        let rep = check_theorem1(&w, &w, &pi, &CheckOptions::default()).unwrap();
        prop_assert!(rep.term("model_error").unwrap().abs() < 1e-9);
        prop_assert!(rep.term("domain_adaptation").unwrap().abs() < 1e-9);
    }

    #[test]
    fn distances_are_consistent(seed in any::<u64>(), n in 1usize..=30) {
        let mut r = rng::from_seed(seed);
        let p = random_distribution(&mut r, n, 0.0);
        let q = random_distribution(&mut r, n, 0.0);
        let tv = tv_distance(&p, &q).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!((tv - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!(kl >= -1e-12);
        // Pinsker
        prop_assert!(tv <= (kl / 2.0).sqrt() + 1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn replay_buffer_keeps_latest(cap in 1usize..50, sizes in prop::collection::vec(0usize..40, 1..8)) {
        let mut b = ReplayBuffer::new(Some(cap));
        let mut next = 0usize;
        for s in sizes {
            let batch: Vec<Transition> = (next..next + s)
                .map(|t| Transition { t, state: vec![], action: vec![], reward: 0.0, next_state: vec![], done: false })
                .collect();
            next += s;
            b.insert(batch);
            prop_assert!(b.len() <= cap);
            prop_assert_eq!(b.len(), next.min(cap));
            let ts: Vec<usize> = b.iter().map(|x| x.t).collect();
            let want: Vec<usize> = (next - b.len()..next).collect();
            prop_assert_eq!(ts, want);
        }
    }

    #[test]
    fn gae_with_unit_lambda_is_return_to_go(rewards in prop::collection::vec(-1.0f64..1.0, 1..30), gamma in 0.0f64..0.999) {
        let n = rewards.len();
        let values: Vec<f64> = (0..=n).map(|i| (i as f64).sin()).collect();
        let dones = vec![false; n];
        let (_, targets) = gae_advantages(&rewards, &values, &dones, gamma, 1.0);
        let mut g = values[n];
        for t in (0..n).rev() {
            g = rewards[t] + gamma * g;
            prop_assert!((targets[t] - g).abs() < 1e-9);
        }
    }

    #[test]
    fn normalized_step_meets_trust_region(seed in any::<u64>(), d in 1usize..12, delta in 1e-4f64..1.0) {
        use rand::Rng as _;
        let mut r = rng::from_seed(seed);
        let b: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        // A = B^T B + 0.1 I
        let a: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }).collect())
            .collect();
        let g: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let apply = |v: &[f64]| Ok(a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect());
        let step = normalized_step(&g, apply, delta, 50).unwrap();
        prop_assert!((step.quad_form - delta).abs() <= 1e-6 * delta, "{} vs {}", step.quad_form, delta);
        prop_assert!(step.ascent > 0.0);
    }

    #[test]
    fn grid_cells_round_trip(x in 0usize..8, y in 0usize..8, gx in 0usize..8, gy in 0usize..8) {
        let env = make_env("gridworld-goal").unwrap();
        let grid = env.as_grid().unwrap();
        let s = grid.state((x, y), (gx, gy));
        prop_assert_eq!(grid.position(&s), (x, y));
        prop_assert_eq!(grid.goal(&s), (gx, gy));
        prop_assert_eq!(grid.cell_at(grid.cell_index((x, y))), (x, y));
    }
}
