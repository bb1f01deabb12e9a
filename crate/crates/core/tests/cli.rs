use std::path::Path;
use std::process::{Command, Output};

fn mmsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmsg"))
        .args(args)
        .env("MMSG_LOG", "error")
        .output()
        .expect("run mmsg")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_corpus(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let themes = [["river", "boat", "water", "fish"], ["bank", "money", "loan", "credit"]];
    for f in 0..4 {
        let body: Vec<&str> = (0..300usize)
            .map(|i| themes[(i / 15 + f) % 2][(i * 7 + f * 3 + i / 4) % 4])
            .collect();
        std::fs::write(dir.join(format!("doc{f}.txt")), body.join(" ")).unwrap();
    }
}

const SMALL: &[&str] =
    &["--topics", "3", "--dim", "6", "--window", "2", "--min-count", "1", "--iters", "20", "--steps", "200"];

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&mmsg(&["--help"])), 0);
    assert_eq!(code(&mmsg(&["--version"])), 0);
    assert_eq!(code(&mmsg(&["train", "--print-config"])), 0);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&dir.path().join("c"));
    let corpus = dir.path().join("c");
    let out = dir.path().join("m");
    assert_eq!(code(&mmsg(&[])), 1);
    assert_eq!(code(&mmsg(&["frobnicate"])), 1);
    assert_eq!(code(&mmsg(&["train", "--corpus", p(&corpus), "-o", p(&out), "--bogus"])), 1);
    assert_eq!(code(&mmsg(&["train", "--corpus", p(&corpus), "-o", p(&out), "--set", "no_such_key=1"])), 1);
    assert_eq!(code(&mmsg(&["train", "--corpus", p(&corpus), "-o", p(&out), "--topics", "many"])), 1);
    assert_eq!(code(&mmsg(&["train", "--corpus", p(&corpus), "-o", p(&out), "--set", "kappa=1.5"])), 1);

    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "topics = 4\nflavour = mint\n").unwrap();
    let run = mmsg(&["train", "--corpus", p(&corpus), "-o", p(&out), "--config", p(&cfg)]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("flavour"));
    assert!(!out.exists());
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let out = dir.path().join("m");
    assert_eq!(code(&mmsg(&["vocab", p(&missing), "-o", p(&out)])), 2);
    assert_eq!(code(&mmsg(&["train", "--corpus", p(&missing), "-o", p(&out)])), 2);
    assert_eq!(code(&mmsg(&["topics", p(&missing)])), 2);
    assert_eq!(code(&mmsg(&["neighbors", p(&missing), "word"])), 2);
    assert_eq!(code(&mmsg(&["eval", p(&missing), p(&missing)])), 2);
}

#[test]
fn train_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    write_corpus(&corpus);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let mut args = vec!["train", "--corpus", p(&corpus), "-o", p(out)];
        args.extend_from_slice(SMALL);
        let run = mmsg(&args);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    for name in ["manifest.json", "theta.f32", "topic_vectors.f32", "output_vectors.f32", "bias.f32"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    write_corpus(&corpus);
    let vocab = dir.path().join("vocab.tsv");
    let split = dir.path().join("split");
    let model = dir.path().join("model");

    let run = mmsg(&["vocab", p(&corpus), "-o", p(&vocab), "--min-count", "1"]);
    assert_eq!(code(&run), 0);
    let vocab_text = std::fs::read_to_string(&vocab).unwrap();
    assert_eq!(vocab_text.lines().count(), 8);

    let run = mmsg(&["split", p(&corpus), "--vocab", p(&vocab), "-o", p(&split), "--window", "2", "--heldout", "30"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let heldout = split.join("heldout.tsv");
    assert_eq!(std::fs::read_to_string(&heldout).unwrap().lines().count(), 30);

    let instances = split.join("train.tsv");
    let mut args = vec!["train", "--instances", p(&instances), "--vocab", p(&vocab), "-o", p(&model)];
    args.extend_from_slice(SMALL);
    let run = mmsg(&args);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let run = mmsg(&["eval", p(&model), p(&heldout), "--methods", "frequency,prior,posterior,context"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = stdout(&run);
    assert_eq!(report.lines().count(), 5);
    for line in report.lines().skip(1) {
        let mrr: f64 = line.rsplit('\t').next().unwrap().parse().unwrap();
        assert!(mrr > 0.0 && mrr <= 1.0, "{line}");
    }

    let run = mmsg(&["topics", p(&model), "-n", "3"]);
    assert_eq!(code(&run), 0);
    assert_eq!(stdout(&run).lines().count(), 3);

    let run = mmsg(&["neighbors", p(&model), "+river -bank", "-n", "4"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(stdout(&run).lines().count(), 4);
    assert_eq!(code(&mmsg(&["neighbors", p(&model), "+river -river"])), 2);
    assert_eq!(code(&mmsg(&["neighbors", p(&model), "zeppelin"])), 1);

    let vectors = dir.path().join("topics.txt");
    assert_eq!(code(&mmsg(&["export", p(&model), "-o", p(&vectors)])), 0);
    let exported = std::fs::read_to_string(&vectors).unwrap();
    assert_eq!(exported.lines().next().unwrap(), "3 6");
    assert_eq!(exported.lines().count(), 4);

    let run = mmsg(&["export", p(&model), "--which", "documents", "--corpus", p(&corpus)]);
    assert_eq!(code(&run), 0);
    assert_eq!(stdout(&run).lines().next().unwrap(), "4 6");
    assert_eq!(code(&mmsg(&["export", p(&model), "--which", "documents"])), 1);

    let run = mmsg(&["docvec", p(&model), p(&corpus)]);
    assert_eq!(code(&run), 0);
    let rows = stdout(&run);
    assert_eq!(rows.lines().count(), 4);
    for line in rows.lines() {
        let norm: f64 = line.split('\t').skip(1).map(|x| x.parse::<f64>().unwrap().powi(2)).sum();
        assert!((norm - 1.0).abs() < 1e-5, "{line}");
    }
}
