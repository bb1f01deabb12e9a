use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inst(input: WordId, context: &[WordId]) -> ContextInstance {
    ContextInstance {
        input,
        context: context.to_vec(),
        position: 0,
        doc: 0,
    }
}

/// Gamma-function marginalization of theta and phi for one instance.
fn dirichlet_multinomial_oracle(
    state: &CountState,
    hp: &Hyperparams,
    input: WordId,
    context: &[WordId],
) -> Vec<f64> {
    let beta_sum: f64 = hp.beta.iter().sum();
    let mut logs = Vec::new();
    for k in 0..state.num_topics() {
        let mut l = (state.n_word_topic(input, k) as f64 + hp.alpha[k]).ln();
        for v in 0..state.vocab_size() {
            let n_iv = context.iter().filter(|&&w| w as usize == v).count() as f64;
            let a = state.n_topic_word(k, v as WordId) as f64 + hp.beta[v];
            l += ln_gamma(a + n_iv) - ln_gamma(a);
        }
        let b = state.n_topic(k) as f64 + beta_sum;
        l -= ln_gamma(b + context.len() as f64) - ln_gamma(b);
        logs.push(l);
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    logs.iter().map(|l| (l - m).exp() / s).collect()
}

#[test]
fn empty_context_reduces_to_pseudo_counts() {
    let instances = vec![inst(0, &[1]), inst(0, &[1])];
    let state = CountState::from_assignments(&instances, vec![0, 0], 2, 2);
    let hp = Hyperparams::symmetric(2, 2, 1.0, 0.1);
    let p = gibbs_conditional(&state, &hp, 0, &[]);
    assert!((p[0] - 0.75).abs() < 1e-15);
    assert!((p[1] - 0.25).abs() < 1e-15);
}

#[test]
fn single_word_context_matches_closed_form() {
    let instances = vec![inst(0, &[1]), inst(1, &[0, 1]), inst(0, &[0])];
    let state = CountState::from_assignments(&instances, vec![0, 1, 1], 2, 2);
    let hp = Hyperparams {
        alpha: vec![0.3, 0.7],
        beta: vec![0.2, 0.5],
        ..Hyperparams::symmetric(2, 2, 1.0, 1.0)
    };
    let got = gibbs_conditional(&state, &hp, 1, &[1]);
    let want = dirichlet_multinomial_oracle(&state, &hp, 1, &[1]);
    for (g, w) in got.iter().zip(&want) {
        assert!(((g - w) / w).abs() < 1e-10);
    }
    // (n_wk + alpha)(n_kv + beta)/(n_k + sum beta):
    // k=0: (0+0.3)(1+0.5)/(1+0.7); k=1: (1+0.7)(1+0.5)/(3+0.7)
    let a = 0.3 * 1.5 / 1.7;
    let b = 1.7 * 1.5 / 3.7;
    assert!((got[0] - a / (a + b)).abs() < 1e-14);
}

#[test]
fn repeated_words_use_urn_increments_and_are_exchangeable() {
    let instances = vec![inst(0, &[1, 2]), inst(2, &[0, 0, 1]), inst(1, &[2, 2])];
    let state = CountState::from_assignments(&instances, vec![0, 1, 2], 3, 3);
    let hp = Hyperparams::symmetric(3, 3, 0.5, 0.1);
    let ctx = [2, 1, 2, 2];
    let got = gibbs_conditional(&state, &hp, 0, &ctx);
    let want = dirichlet_multinomial_oracle(&state, &hp, 0, &ctx);
    for (g, w) in got.iter().zip(&want) {
        assert!(((g - w) / w).abs() < 1e-10);
    }
    let permuted = gibbs_conditional(&state, &hp, 0, &[2, 2, 1, 2]);
    for (g, p) in got.iter().zip(&permuted) {
        assert!(((g - p) / g).abs() < 1e-12);
    }
    assert_eq!(urn_offsets(&ctx), vec![0, 0, 1, 2]);
}

#[test]
fn acceptance_probability_examples() {
    assert_eq!(mh_accept_probability(0.3, 0.3, 0.2, 0.2, 1.0), Some(1.0));
    assert!((mh_accept_probability(0.5, 1.0, 0.4, 0.4, 1.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((mh_accept_probability(0.5, 1.0, 0.4, 0.4, 0.5).unwrap() - 0.25).abs() < 1e-15);
    // unnormalized inputs are legal
    let a = mh_accept_probability(0.2, 0.7, 0.1, 0.3, 1.7).unwrap();
    let b = mh_accept_probability(20.0, 70.0, 0.1, 0.3, 1.7).unwrap();
    assert!((a - b).abs() < 1e-14);
    assert_eq!(mh_accept_probability(0.5, 0.0, 0.1, 0.1, 1.0), None);
    assert_eq!(mh_accept_probability(f64::NAN, 1.0, 0.1, 0.1, 1.0), None);
}

#[test]
fn temperature_schedule() {
    let hp = Hyperparams {
        t0: 1e-4,
        kappa: 0.99,
        lambda: 10.0,
        ..Hyperparams::symmetric(2, 2, 1.0, 1.0)
    };
    assert!((hp.temperature(1) - 9.9001).abs() < 1e-12);
    // 0.99^100 = exp(100 ln 0.99)
    let decay = (100.0 * 0.99f64.ln()).exp();
    assert!((hp.temperature(100) - (1e-4 + 10.0 * decay)).abs() < 1e-12);
    assert!((hp.temperature(100) - 3.6604).abs() < 1e-4);
    let mut prev = f64::INFINITY;
    for j in 1..3000 {
        let t = hp.temperature(j);
        assert!(t < prev && t > 1e-4);
        prev = t;
    }
    assert!((hp.temperature(5000) - 1e-4).abs() < 1e-12);
}

#[test]
fn hyperparams_validation() {
    let mut hp = Hyperparams::defaults(4, 10, 5);
    assert!(hp.validate().is_ok());
    assert_eq!(hp.alpha[0], 12.5);
    assert_eq!(hp.lambda, 10.0);
    hp.kappa = 1.0;
    assert!(hp.validate().is_err());
    let mut hp = Hyperparams::defaults(4, 10, 5);
    hp.beta[3] = 0.0;
    assert!(hp.validate().is_err());
}

#[test]
fn theta_and_phi_arithmetic() {
    let instances = vec![
        inst(0, &[1]),
        inst(0, &[1]),
        inst(0, &[1]),
        inst(0, &[1]),
    ];
    let state = CountState::from_assignments(&instances, vec![0, 0, 0, 1], 2, 3);
    let hp = Hyperparams::symmetric(2, 3, 0.5, 1.0);
    let theta = estimate_theta(&state, &hp);
    assert!((theta[[0, 0]] - 0.7).abs() < 1e-15);
    assert!((theta[[0, 1]] - 0.3).abs() < 1e-15);
    // word 2 never appears as input: prior fallback
    assert!((theta[[2, 0]] - 0.5).abs() < 1e-15);

    let single = vec![inst(0, &[1])];
    let state = CountState::from_assignments(&single, vec![1], 2, 2);
    let hp = Hyperparams::symmetric(2, 2, 1.0, 1.0);
    let phi = estimate_phi(&state, &hp);
    assert!((phi[[1, 1]] - 2.0 / 3.0).abs() < 1e-15);
    assert!((phi[[1, 0]] - 1.0 / 3.0).abs() < 1e-15);
    // empty topic is the normalized prior
    assert!((phi[[0, 0]] - 0.5).abs() < 1e-15);
}

#[test]
fn degenerate_state_assigns_own_word() {
    let instances = vec![inst(2, &[0, 1]), inst(0, &[2]), inst(2, &[1])];
    let state = degenerate_assignments(&instances, 3);
    assert_eq!(state.assignments(), &[2, 0, 2]);
    assert_eq!(state.num_topics(), 3);
    let hp = Hyperparams::symmetric(3, 3, 1e-9, 0.5);
    let theta = estimate_theta(&state, &hp);
    assert!(theta[[2, 2]] > 1.0 - 1e-8);
    assert!(theta[[0, 0]] > 1.0 - 1e-8);
    // phi of topic 2 is smoothed co-occurrence with input word 2: counts {0:1, 1:2}
    let phi = estimate_phi(&state, &hp);
    let denom = 3.0 + 1.5;
    assert!((phi[[2, 0]] - 1.5 / denom).abs() < 1e-15);
    assert!((phi[[2, 1]] - 2.5 / denom).abs() < 1e-15);
    assert!((phi[[2, 2]] - 0.5 / denom).abs() < 1e-15);
}

fn random_instances(rng: &mut ChaCha8Rng, n: usize, d: u32, max_ctx: usize) -> Vec<ContextInstance> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=max_ctx);
            let ctx: Vec<WordId> = (0..len).map(|_| rng.random_range(0..d)).collect();
            inst(rng.random_range(0..d), &ctx)
        })
        .collect()
}

#[test]
fn single_topic_chain_is_trivial() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let instances = random_instances(&mut rng, 30, 5, 4);
    let mut hp = Hyperparams::defaults(1, 5, 2);
    hp.iters = 3;
    let (state, est) = run_chain(&instances, &hp, 7).unwrap();
    assert!(state.assignments().iter().all(|&z| z == 0));
    assert!(est.theta.iter().all(|&t| (t - 1.0).abs() < 1e-15));
}

#[test]
fn chain_is_deterministic_for_a_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let instances = random_instances(&mut rng, 200, 12, 6);
    let mut hp = Hyperparams::defaults(4, 12, 3);
    hp.iters = 20;
    let (a, _) = run_chain(&instances, &hp, 99).unwrap();
    let (b, _) = run_chain(&instances, &hp, 99).unwrap();
    assert_eq!(a.assignments(), b.assignments());
    let (c, _) = run_chain(&instances, &hp, 100).unwrap();
    assert_ne!(a.assignments(), c.assignments());
}

#[test]
fn checkpoint_round_trip_resumes_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let instances = random_instances(&mut rng, 100, 8, 5);
    let mut hp = Hyperparams::defaults(3, 8, 2);
    hp.iters = 10;
    let mut chain = TopicChain::new(&instances, hp.clone(), 5).unwrap();
    for _ in 0..4 {
        chain.sweep();
    }
    let mut buf = Vec::new();
    chain.write_checkpoint(&mut buf).unwrap();
    let first = String::from_utf8(buf.clone()).unwrap();
    assert!(first.starts_with("{\"format\":\"mmsg-chain\",\"version\":1"));

    let mut resumed = TopicChain::from_checkpoint(&instances, buf.as_slice()).unwrap();
    assert_eq!(resumed.sweeps_done(), 4);
    chain.run(|_| {});
    resumed.run(|_| {});
    assert_eq!(chain.state(), resumed.state());
}

#[test]
fn checkpoint_rejects_tampered_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let instances = random_instances(&mut rng, 20, 4, 3);
    let chain = TopicChain::new(&instances, Hyperparams::defaults(2, 4, 2), 5).unwrap();
    let mut buf = Vec::new();
    chain.write_checkpoint(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[5] = "{\"n_topic\":[0,0]}".into();
    let tampered = lines.join("\n");
    assert!(TopicChain::from_checkpoint(&instances, tampered.as_bytes()).is_err());
}

#[test]
fn annealing_increases_collapsed_likelihood() {
    // Two clearly separated topics: words 0..3 co-occur, words 4..7 co-occur.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let instances: Vec<ContextInstance> = (0..400)
        .map(|i| {
            let base = if i % 2 == 0 { 0 } else { 4 };
            let ctx: Vec<WordId> = (0..6).map(|_| base + rng.random_range(0..4)).collect();
            inst(base + rng.random_range(0..4), &ctx)
        })
        .collect();
    let mut hp = Hyperparams::defaults(2, 8, 3);
    hp.iters = 60;
    hp.kappa = 0.9;
    let mut chain = TopicChain::new(&instances, hp, 1).unwrap();
    let start = chain.state().log_joint(chain.hyperparams());
    let mut last = None;
    chain.run(|s| last = Some(s.clone()));
    let last = last.unwrap();
    assert!(last.log_joint > start);
    assert_eq!(last.sweep, 60);
    assert!(chain.state().check_invariants(&instances));
    // every instance of a block shares one topic and the two blocks differ
    let z = chain.state().assignments();
    let even = z[0];
    assert!(z.iter().step_by(2).all(|&t| t == even));
    assert!(z.iter().skip(1).step_by(2).all(|&t| t != even));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gibbs_matches_oracle_and_is_exchangeable(
        seed in any::<u64>(),
        k in 1usize..=3,
        d in 1u32..=5,
        len in 0usize..=4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = random_instances(&mut rng, 12, d, 4);
        let z: Vec<u32> = (0..instances.len()).map(|_| rng.random_range(0..k as u32)).collect();
        let state = CountState::from_assignments(&instances, z, k, d as usize);
        let hp = Hyperparams {
            alpha: (0..k).map(|_| rng.random_range(0.05..2.0)).collect(),
            beta: (0..d).map(|_| rng.random_range(0.01..1.0)).collect(),
            ..Hyperparams::symmetric(k, d as usize, 1.0, 1.0)
        };
        let ctx: Vec<WordId> = (0..len).map(|_| rng.random_range(0..d)).collect();
        let input = rng.random_range(0..d);
        let got = gibbs_conditional(&state, &hp, input, &ctx);
        let want = dirichlet_multinomial_oracle(&state, &hp, input, &ctx);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!(((g - w) / w).abs() <= 1e-10);
        }
        let mut rev = ctx.clone();
        rev.reverse();
        let back = gibbs_conditional(&state, &hp, input, &rev);
        for (g, b) in got.iter().zip(&back) {
            prop_assert!(((g - b) / g).abs() <= 1e-12);
        }
    }

    #[test]
    fn counts_conserved_after_every_update(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = random_instances(&mut rng, 15, 6, 5);
        let mut hp = Hyperparams::defaults(k, 6, 2);
        hp.proposals_per_token = 2;
        let mut chain = TopicChain::new(&instances, hp, seed).unwrap();
        for i in 0..instances.len() {
            chain.update_token(i, 0.7);
            prop_assert!(chain.state().check_invariants(&instances));
        }
    }

    #[test]
    fn estimates_are_row_stochastic(seed in any::<u64>(), k in 1usize..6, d in 1u32..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = random_instances(&mut rng, 10, d, 4);
        let z = (0..instances.len()).map(|_| rng.random_range(0..k as u32)).collect();
        let state = CountState::from_assignments(&instances, z, k, d as usize);
        let hp = Hyperparams::symmetric(k, d as usize, rng.random_range(0.01..3.0), rng.random_range(0.001..1.0));
        let est = MembershipEstimate::from_state(&state, &hp);
        for row in est.theta.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x > 0.0));
        }
        for row in est.phi.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x > 0.0));
        }
    }
}

#[test]
fn degenerate_phi_matches_count_state_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let instances = random_instances(&mut rng, 60, 7, 4);
    let hp = Hyperparams::symmetric(7, 7, 0.5, 0.01);
    let want = estimate_phi(&degenerate_assignments(&instances, 7), &hp);
    let got = degenerate_phi(&instances, 7, &hp.beta);
    for (a, b) in got.iter().zip(want.iter()) {
        assert!((a - b).abs() < 1e-15);
    }
}
