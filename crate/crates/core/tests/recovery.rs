use mmsg::embed::{train_embeddings, TrainConfig};
use mmsg::synthetic::{generate, kl_divergence, SyntheticSpec};

#[test]
fn embeddings_recover_generating_topics() {
    let spec = SyntheticSpec {
        vocab_size: 20,
        topics: 3,
        contexts: 20_000,
        seed: 8,
        ..SyntheticSpec::default()
    };
    let corpus = generate(&spec).unwrap();
    let cfg = TrainConfig {
        dim: 8,
        steps: 20_000,
        seed: 3,
        log_every: 0,
        ..TrainConfig::default()
    };
    let (es, summary) =
        train_embeddings(&corpus.instances, &corpus.z, spec.topics, &corpus.unigram_counts(), &cfg, |_| {}).unwrap();
    assert_eq!(summary.skipped_pairs, 0);
    for k in 0..spec.topics {
        let truth = corpus.phi.row(k).to_vec();
        let kl = kl_divergence(&truth, &es.topic_distribution(k));
        assert!(kl <= 0.05, "topic {k}: KL {kl:.4}");
    }
}
