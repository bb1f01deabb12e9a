//! The operations behind the `mmsg` subcommands. Each writes its human- or machine-readable
//! output to a caller-supplied writer so that it can be driven from tests and examples.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;

use crate::config::RunConfig;
use crate::corpus::{
    extract_contexts, load_instances, read_documents, save_heldout, save_instances, split_heldout, DocumentSplit,
    Vocabulary, WordId,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_mrr, export_document_features, write_ranks, write_report, Method, RankingResult};
use crate::inference::{document_queries, nearest_rows, Pool, Term, TokenQuery, TrainedModel};
use crate::persist::{load_model, save_model, Manifest};
use crate::pipeline::{train_model, TrainOutput};

fn out_err(e: std::io::Error) -> Error {
    Error::io("writing output", e)
}

/// Encoded documents (in-vocabulary tokens only) with their names.
pub fn encode_corpus(
    path: &Path,
    vocab: &Vocabulary,
    split: DocumentSplit,
    lowercase: bool,
) -> Result<(Vec<String>, Vec<Vec<WordId>>)> {
    let docs = read_documents(path, split, lowercase)?;
    let names = docs.iter().map(|d| d.name.clone()).collect();
    let encoded = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
    Ok((names, encoded))
}

/// Builds the vocabulary of a corpus and writes it as `token<TAB>count` lines.
pub fn cmd_vocab(corpus: &Path, cfg: &RunConfig, out: &Path) -> Result<Vocabulary> {
    let docs = read_documents(corpus, cfg.split, cfg.lowercase)?;
    let vocab = Vocabulary::build(docs.iter().map(|d| d.tokens.as_slice()), cfg.min_count)?;
    vocab.save(out)?;
    info!("{} types written to {}", vocab.len(), out.display());
    Ok(vocab)
}

/// Paths written by [`cmd_split`].
#[derive(Debug, Clone)]
pub struct SplitFiles {
    pub train: PathBuf,
    pub heldout: PathBuf,
}

/// Extracts context instances and holds out `cfg.heldout` pairs, writing `train.tsv` and
/// `heldout.tsv` into `out_dir`.
pub fn cmd_split(corpus: &Path, vocab: &Vocabulary, cfg: &RunConfig, out_dir: &Path) -> Result<SplitFiles> {
    let (_, docs) = encode_corpus(corpus, vocab, cfg.split, cfg.lowercase)?;
    let instances = extract_contexts(&docs, cfg.window);
    let (train, pairs) = split_heldout(instances, cfg.heldout, cfg.window, cfg.split_seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let files = SplitFiles {
        train: out_dir.join("train.tsv"),
        heldout: out_dir.join("heldout.tsv"),
    };
    save_instances(&files.train, vocab, &train)?;
    save_heldout(&files.heldout, vocab, &pairs)?;
    info!("{} training instances, {} held-out pairs", train.len(), pairs.len());
    Ok(files)
}

/// Where training data comes from.
#[derive(Debug, Clone)]
pub enum TrainInput {
    /// Raw text; the vocabulary and instances are built with the config's settings.
    Corpus(PathBuf),
    /// A vocabulary file and an instance file written by `split`.
    Instances { vocab: PathBuf, instances: PathBuf },
}

/// Trains and writes a model directory. Nothing is left at `out` if training fails.
pub fn cmd_train(cfg: &RunConfig, input: &TrainInput, out: &Path) -> Result<TrainOutput> {
    cfg.validate()?;
    let (vocab, instances) = match input {
        TrainInput::Corpus(path) => {
            let docs = read_documents(path, cfg.split, cfg.lowercase)?;
            let vocab = Vocabulary::build(docs.iter().map(|d| d.tokens.as_slice()), cfg.min_count)?;
            let encoded: Vec<Vec<WordId>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
            let instances = extract_contexts(&encoded, cfg.window);
            (vocab, instances)
        }
        TrainInput::Instances { vocab, instances } => {
            let vocab = Vocabulary::load(vocab)?;
            let instances = load_instances(instances, &vocab)?;
            (vocab, instances)
        }
    };
    let output = train_model(cfg, vocab, &instances)?;
    save_model(out, &output.model, cfg, &output.summary, &output.extra_files())?;
    info!("model written to {}", out.display());
    Ok(output)
}

/// Evaluates every method on the held-out pairs and writes the TSV report.
pub fn cmd_eval<W: Write>(
    model_dir: &Path,
    heldout: &Path,
    methods: &[Method],
    ranks_out: Option<&Path>,
    out: W,
) -> Result<Vec<RankingResult>> {
    if methods.is_empty() {
        return Err(Error::config("methods", "at least one method is required"));
    }
    let (model, _) = load_model(model_dir)?;
    let pairs = crate::corpus::load_heldout(heldout, model.vocab())?;
    let results = methods
        .iter()
        .map(|&m| evaluate_mrr(&model, m, &pairs))
        .collect::<Result<Vec<_>>>()?;
    write_report(out, &results).map_err(out_err)?;
    if let Some(path) = ranks_out {
        let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        write_ranks(std::io::BufWriter::new(file), &results).map_err(out_err)?;
    }
    Ok(results)
}

/// Indices of the `n` largest entries, descending, ties by index.
pub fn top_n(values: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

fn write_topic_line<W: Write>(model: &TrainedModel, k: usize, n: usize, out: &mut W) -> Result<()> {
    let probs = model.topic_word_probs(k);
    let words: Vec<String> = top_n(&probs, n)
        .into_iter()
        .filter(|&v| probs[v] > 0.0)
        .map(|v| format!("{}:{:.4}", model.vocab().token(v as WordId), probs[v]))
        .collect();
    writeln!(out, "{k}\t{}", words.join(" ")).map_err(out_err)
}

/// Lists the top `n` words of every topic, or, given a word, the top words of its three
/// highest-membership topics. Words with zero probability are never listed.
pub fn cmd_topics<W: Write>(model: &TrainedModel, n: usize, word: Option<&str>, mut out: W) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    match word {
        None => {
            for k in 0..model.num_topics() {
                write_topic_line(model, k, n, &mut out)?;
            }
        }
        Some(w) => {
            let id = model.vocab().require(w)?;
            let theta = model.theta().row(id);
            for k in top_n(&theta, 3) {
                if theta[k] <= 0.0 {
                    break;
                }
                write!(out, "{:.4}\t", theta[k]).map_err(out_err)?;
                write_topic_line(model, k, n, &mut out)?;
            }
        }
    }
    Ok(())
}

/// A parsed `+word -word topic:3` composition query.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub plus: Vec<Term>,
    pub minus: Vec<Term>,
}

/// Parses whitespace-separated terms. A leading `-` subtracts, a leading `+` or nothing adds,
/// and `topic:K` refers to a topic vector instead of a word.
pub fn parse_query(expr: &str, vocab: &Vocabulary) -> Result<Query> {
    let mut q = Query {
        plus: Vec::new(),
        minus: Vec::new(),
    };
    for raw in expr.split_whitespace() {
        let (negate, body) = match raw.as_bytes()[0] {
            b'-' => (true, &raw[1..]),
            b'+' => (false, &raw[1..]),
            _ => (false, raw),
        };
        if body.is_empty() {
            return Err(Error::config("query", format!("dangling `{raw}`")));
        }
        let term = match body.strip_prefix("topic:") {
            Some(k) => Term::Topic(
                k.parse()
                    .map_err(|_| Error::config("query", format!("bad topic index `{k}`")))?,
            ),
            None => Term::Word(vocab.require(body)?),
        };
        if negate {
            q.minus.push(term);
        } else {
            q.plus.push(term);
        }
    }
    if q.plus.is_empty() && q.minus.is_empty() {
        return Err(Error::config("query", "empty query"));
    }
    Ok(q)
}

/// Neighbour pools reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Words,
    Topics,
}

impl FromStr for PoolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "words" => Ok(PoolKind::Words),
            "topics" => Ok(PoolKind::Topics),
            other => Err(Error::config("pool", format!("expected words or topics, got `{other}`"))),
        }
    }
}

/// Composes the query and lists its `n` nearest words or topics by cosine similarity.
pub fn cmd_neighbors<W: Write>(
    model: &TrainedModel,
    expr: &str,
    pool: PoolKind,
    n: usize,
    mut out: W,
) -> Result<Vec<(usize, f64)>> {
    let q = parse_query(expr, model.vocab())?;
    let v = model.compose(&q.plus, &q.minus)?;
    let pool = match pool {
        PoolKind::Words => Pool::Words,
        PoolKind::Topics => Pool::Topics,
    };
    let hits = model.nearest(&v, pool, n)?;
    for &(id, sim) in &hits {
        let label = match pool {
            Pool::Words => model.vocab().token(id as WordId).to_string(),
            _ => topic_name(model, id),
        };
        writeln!(out, "{label}\t{sim:.6}").map_err(out_err)?;
    }
    Ok(hits)
}

fn topic_name(model: &TrainedModel, k: usize) -> String {
    if model.mode().is_degenerate() {
        model.vocab().token(k as WordId).to_string()
    } else {
        format!("topic_{k}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportWhich {
    Topics,
    WordPriors,
    Documents,
}

impl FromStr for ExportWhich {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topics" => Ok(ExportWhich::Topics),
            "word_priors" | "words" => Ok(ExportWhich::WordPriors),
            "documents" => Ok(ExportWhich::Documents),
            other => Err(Error::config(
                "which",
                format!("expected topics, word_priors or documents, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    /// `<count> <d>` header then `name v1 ... vd` per line.
    Word2Vec,
    /// `name<TAB>v1<TAB>...` without a header.
    Tsv,
}

impl FromStr for VectorFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec" | "w2v" => Ok(VectorFormat::Word2Vec),
            "tsv" => Ok(VectorFormat::Tsv),
            other => Err(Error::config("format", format!("expected word2vec or tsv, got `{other}`"))),
        }
    }
}

impl fmt::Display for VectorFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorFormat::Word2Vec => "word2vec",
            VectorFormat::Tsv => "tsv",
        })
    }
}

/// Writes named vectors. Values use nine significant digits.
pub fn write_vectors<W: Write>(
    mut out: W,
    names: &[String],
    rows: ndarray::ArrayView2<'_, f64>,
    format: VectorFormat,
) -> Result<()> {
    let sep = match format {
        VectorFormat::Word2Vec => {
            writeln!(out, "{} {}", rows.nrows(), rows.ncols()).map_err(out_err)?;
            ' '
        }
        VectorFormat::Tsv => '\t',
    };
    for (name, row) in names.iter().zip(rows.rows()) {
        // Names must not contain the separator.
        let clean: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        write!(out, "{clean}").map_err(out_err)?;
        for x in row {
            write!(out, "{sep}{x:.8e}").map_err(out_err)?;
        }
        writeln!(out).map_err(out_err)?;
    }
    Ok(())
}

/// Parses word2vec text format back into names and rows.
pub fn read_word2vec(text: &str) -> Result<(Vec<String>, ndarray::Array2<f64>)> {
    let bad = |line: usize, reason: &str| Error::Parse {
        what: "word2vec vectors",
        path: PathBuf::from("<input>"),
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|x| x.parse().map_err(|_| bad(1, "bad header")))
        .collect::<Result<_>>()?;
    let [count, d] = dims[..] else {
        return Err(bad(1, "header must be `<count> <d>`"));
    };
    let mut names = Vec::with_capacity(count);
    let mut m = ndarray::Array2::zeros((count, d));
    for i in 0..count {
        let line = lines.next().ok_or_else(|| bad(i + 2, "missing row"))?;
        let mut parts = line.split(' ');
        names.push(parts.next().unwrap_or_default().to_string());
        let vals: Vec<f64> = parts
            .map(|x| x.parse().map_err(|_| bad(i + 2, "bad number")))
            .collect::<Result<_>>()?;
        if vals.len() != d {
            return Err(bad(i + 2, "wrong number of values"));
        }
        m.row_mut(i).assign(&ndarray::ArrayView1::from(&vals));
    }
    Ok((names, m))
}

/// Document vectors and ids for a corpus, using the model's own tokenization settings.
pub fn corpus_document_vectors(
    model: &TrainedModel,
    manifest: &Manifest,
    corpus: &Path,
) -> Result<(Vec<String>, ndarray::Array2<f64>)> {
    let cfg = &manifest.config;
    let (names, docs) = encode_corpus(corpus, model.vocab(), cfg.split, cfg.lowercase)?;
    let queries: Vec<Vec<TokenQuery>> = docs.iter().map(|d| document_queries(d, cfg.window)).collect();
    let features = export_document_features(model, &queries)?;
    let ids = names
        .iter()
        .enumerate()
        .map(|(i, n)| if cfg.split == DocumentSplit::PerFile { n.clone() } else { format!("{n}#{i}") })
        .collect();
    Ok((ids, features))
}

/// Exports topic vectors, word prior mean vectors or document vectors.
pub fn cmd_export<W: Write>(
    model_dir: &Path,
    which: ExportWhich,
    format: VectorFormat,
    corpus: Option<&Path>,
    out: W,
) -> Result<()> {
    let (model, manifest) = load_model(model_dir)?;
    let es = model.embeddings().ok_or(Error::MissingComponent {
        mode: model.mode().as_str(),
        what: "embeddings",
    })?;
    match which {
        ExportWhich::Topics => {
            let names: Vec<String> = (0..model.num_topics()).map(|k| topic_name(&model, k)).collect();
            write_vectors(out, &names, es.topic_vecs.view(), format)
        }
        ExportWhich::WordPriors => write_vectors(out, model.vocab().tokens(), model.word_prior_matrix()?.view(), format),
        ExportWhich::Documents => {
            let corpus = corpus.ok_or_else(|| Error::config("corpus", "document export needs a corpus"))?;
            let (ids, features) = corpus_document_vectors(&model, &manifest, corpus)?;
            write_vectors(out, &ids, features.view(), format)
        }
    }
}

/// Writes one unit-length document vector per document as TSV rows `id<TAB>values`.
pub fn cmd_docvec<W: Write>(model_dir: &Path, corpus: &Path, out: W) -> Result<usize> {
    let (model, manifest) = load_model(model_dir)?;
    let (ids, features) = corpus_document_vectors(&model, &manifest, corpus)?;
    crate::eval::write_document_features(out, &ids, &features).map_err(out_err)?;
    Ok(ids.len())
}

/// Nearest documents to a composed query, over precomputed document vectors.
pub fn nearest_documents(
    model: &TrainedModel,
    features: &ndarray::Array2<f64>,
    expr: &str,
    n: usize,
) -> Result<Vec<(usize, f64)>> {
    let q = parse_query(expr, model.vocab())?;
    let v = model.compose(&q.plus, &q.minus)?;
    Ok(nearest_rows(&v, features.view(), n))
}
