//! Annealed Metropolis-Hastings-Walker sampling of context topics on a synthetic corpus.
//!
//! The corpus is drawn from known memberships, so the recovered topics can be compared with
//! the generating ones after matching topic labels.

use mmsg::synthetic::{best_permutation_kl, generate, SyntheticSpec};
use mmsg::topic::{Hyperparams, TopicChain};

fn main() -> mmsg::Result<()> {
    let spec = SyntheticSpec::default();
    let corpus = generate(&spec)?;
    let mut hp = Hyperparams::defaults(spec.topics, spec.vocab_size, spec.context_len / 2);
    hp.iters = 300;
    println!(
        "{} contexts over {} words, K = {}, T0 = {}, lambda = {}, kappa = {}",
        corpus.instances.len(),
        spec.vocab_size,
        spec.topics,
        hp.t0,
        hp.lambda,
        hp.kappa
    );

    let mut chain = TopicChain::new(&corpus.instances, hp, 7)?;
    println!("sweep\ttemperature\tacceptance\tlog joint");
    chain.run(|s| {
        if s.sweep == 1 || s.sweep % 50 == 0 {
            println!("{}\t{:.4}\t{:.4}\t{:.1}", s.sweep, s.temperature, s.acceptance_rate(), s.log_joint);
        }
    });

    let est = chain.estimate();
    let (perm, kls) = best_permutation_kl(&corpus.phi, &est.phi);
    for (k, kl) in kls.iter().enumerate() {
        println!("true topic {k} -> sampled topic {}: KL {kl:.5}", perm[k]);
    }
    Ok(())
}
