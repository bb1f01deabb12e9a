use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmsg::commands::{self, ExportWhich, PoolKind, TrainInput, VectorFormat};
use mmsg::corpus::Vocabulary;
use mmsg::eval::parse_methods;
use mmsg::persist::load_model;
use mmsg::{Error, Result, RunConfig};

/// Mixed membership skip-gram embeddings and topic models.
///
/// Log verbosity is read from MMSG_LOG (error, warn, info, debug, trace; default info).
/// Exit status: 0 on success, 1 for usage errors, 2 for data errors.
#[derive(Parser)]
#[command(name = "mmsg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count tokens and write the vocabulary as `token<TAB>count` lines.
    Vocab {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Extract context instances and hold out (target, input) pairs.
    Split {
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Directory receiving train.tsv and heldout.tsv.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a model and write a model directory.
    Train {
        /// Raw text corpus (file or directory of .txt files).
        #[arg(long, conflicts_with_all = ["instances", "vocab"])]
        corpus: Option<PathBuf>,
        /// Instance file written by `split`.
        #[arg(long, requires = "vocab")]
        instances: Option<PathBuf>,
        #[arg(long, requires = "instances")]
        vocab: Option<PathBuf>,
        #[arg(short, long, required_unless_present = "print_config")]
        out: Option<PathBuf>,
        /// Print the effective configuration in config-file format and exit.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Mean reciprocal rank of held-out context words.
    Eval {
        model: PathBuf,
        heldout: PathBuf,
        /// Comma-separated: frequency, prior, posterior, context, context-output.
        #[arg(long, default_value = "frequency,prior,posterior")]
        methods: String,
        /// Also write every pair's rank here.
        #[arg(long)]
        ranks: Option<PathBuf>,
    },
    /// Top words per topic, or the top topics of one word.
    Topics {
        model: PathBuf,
        #[arg(short, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        word: Option<String>,
    },
    /// Nearest words or topics to a composed query such as `+speech -object topic:3`.
    Neighbors {
        model: PathBuf,
        query: String,
        #[arg(short, default_value_t = 10)]
        n: usize,
        /// words or topics.
        #[arg(long, default_value = "words")]
        pool: String,
    },
    /// Export vectors in word2vec text format or TSV.
    Export {
        model: PathBuf,
        /// topics, word_priors or documents.
        #[arg(long, default_value = "topics")]
        which: String,
        /// word2vec or tsv.
        #[arg(long, default_value = "word2vec")]
        format: String,
        /// Corpus for document vectors.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Unit-length document vectors as TSV, one row per document.
    Docvec {
        model: PathBuf,
        corpus: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Configuration: a `key = value` file plus per-key overrides. Run `mmsg train
/// --print-config` to see every key with its default.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Configuration file in `key = value` format.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any key, e.g. `--set kappa=0.95`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// mmsg | mmsgtm | sg | sgtm [default: mmsg]
    #[arg(long)]
    mode: Option<String>,
    /// Number of topics [default: 100]
    #[arg(long)]
    topics: Option<String>,
    /// Embedding dimension [default: 128]
    #[arg(long)]
    dim: Option<String>,
    /// Context words on each side [default: 5]
    #[arg(long)]
    window: Option<String>,
    /// Minimum token count [default: 5]
    #[arg(long)]
    min_count: Option<String>,
    /// Annealing sweeps [default: 1000]
    #[arg(long)]
    iters: Option<String>,
    /// NCE minibatches [default: 1000000]
    #[arg(long)]
    steps: Option<String>,
    /// Held-out pairs for `split` [default: 10000]
    #[arg(long)]
    heldout: Option<String>,
    /// Worker threads [default: 1]
    #[arg(long)]
    threads: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let named = [
            ("mode", &self.mode),
            ("topics", &self.topics),
            ("dim", &self.dim),
            ("window", &self.window),
            ("min_count", &self.min_count),
            ("iters", &self.iters),
            ("steps", &self.steps),
            ("heldout", &self.heldout),
            ("threads", &self.threads),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig {
                    field: kv.clone(),
                    reason: "expected KEY=VALUE".into(),
                })?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io {
                context: format!("creating {}", p.display()),
                source: e,
            })?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn flush(mut w: Box<dyn Write>) -> Result<()> {
    w.flush().map_err(|e| Error::Io {
        context: "writing output".into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Vocab { corpus, out, config } => {
            commands::cmd_vocab(&corpus, &config.resolve()?, &out)?;
        }
        Command::Split {
            corpus,
            vocab,
            out,
            config,
        } => {
            let vocab = Vocabulary::load(&vocab)?;
            commands::cmd_split(&corpus, &vocab, &config.resolve()?, &out)?;
        }
        Command::Train {
            corpus,
            instances,
            vocab,
            out,
            print_config,
            config,
        } => {
            let cfg = config.resolve()?;
            if print_config {
                print!("{}", cfg.to_file_string());
                return Ok(());
            }
            let input = match (corpus, instances, vocab) {
                (Some(c), None, None) => TrainInput::Corpus(c),
                (None, Some(instances), Some(vocab)) => TrainInput::Instances { vocab, instances },
                _ => {
                    return Err(Error::InvalidConfig {
                        field: "input".into(),
                        reason: "give --corpus, or --instances with --vocab".into(),
                    })
                }
            };
            commands::cmd_train(&cfg, &input, out.as_deref().expect("required by clap"))?;
        }
        Command::Eval {
            model,
            heldout,
            methods,
            ranks,
        } => {
            let methods = parse_methods(&methods)?;
            let mut out = output(None)?;
            commands::cmd_eval(&model, &heldout, &methods, ranks.as_deref(), &mut out)?;
            flush(out)?;
        }
        Command::Topics { model, n, word } => {
            let (model, _) = load_model(&model)?;
            let mut out = output(None)?;
            commands::cmd_topics(&model, n, word.as_deref(), &mut out)?;
            flush(out)?;
        }
        Command::Neighbors { model, query, n, pool } => {
            let pool: PoolKind = pool.parse()?;
            let (model, _) = load_model(&model)?;
            let mut out = output(None)?;
            commands::cmd_neighbors(&model, &query, pool, n, &mut out)?;
            flush(out)?;
        }
        Command::Export {
            model,
            which,
            format,
            corpus,
            out,
        } => {
            let which: ExportWhich = which.parse()?;
            let format: VectorFormat = format.parse()?;
            let mut w = output(out.as_deref())?;
            commands::cmd_export(&model, which, format, corpus.as_deref(), &mut w)?;
            flush(w)?;
        }
        Command::Docvec { model, corpus, out } => {
            let mut w = output(out.as_deref())?;
            commands::cmd_docvec(&model, &corpus, &mut w)?;
            flush(w)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MMSG_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
