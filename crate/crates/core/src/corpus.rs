//! Text ingestion, vocabulary construction and (input word, context) instances.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word identifier, dense in `[0, D)`.
pub type WordId = u32;

/// Splits text on Unicode whitespace and strips leading/trailing non-alphanumeric characters.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if t.is_empty() {
                None
            } else if lowercase {
                Some(t.to_lowercase())
            } else {
                Some(t.to_string())
            }
        })
        .collect()
}

/// How raw files are cut into documents. Contexts never cross a document boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocumentSplit {
    /// Each file is one document.
    PerFile,
    /// Documents are separated by blank lines.
    BlankLine,
}

impl FromStr for DocumentSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "file" | "per-file" => Ok(DocumentSplit::PerFile),
            "blank" | "blank-line" => Ok(DocumentSplit::BlankLine),
            other => Err(Error::config(
                "split",
                format!("expected `file` or `blank`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for DocumentSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DocumentSplit::PerFile => "file",
            DocumentSplit::BlankLine => "blank",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub name: String,
    pub tokens: Vec<String>,
}

/// Splits one file's text into documents.
pub fn split_text(name: &str, text: &str, split: DocumentSplit, lowercase: bool) -> Vec<Document> {
    match split {
        DocumentSplit::PerFile => vec![Document {
            name: name.to_string(),
            tokens: tokenize(text, lowercase),
        }],
        DocumentSplit::BlankLine => {
            let mut docs = Vec::new();
            let mut current = String::new();
            let flush = |current: &mut String, docs: &mut Vec<Document>| {
                let tokens = tokenize(current, lowercase);
                if !tokens.is_empty() {
                    docs.push(Document {
                        name: format!("{name}#{}", docs.len()),
                        tokens,
                    });
                }
                current.clear();
            };
            for line in text.lines() {
                if line.trim().is_empty() {
                    flush(&mut current, &mut docs);
                } else {
                    current.push_str(line);
                    current.push('\n');
                }
            }
            flush(&mut current, &mut docs);
            docs
        }
    }
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if meta.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries = fs::read_dir(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    entries.sort();
    for entry in entries {
        let name = entry.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with('.') {
            continue;
        }
        if entry.is_dir() {
            collect_files(&entry, out)?;
        } else if entry.extension().and_then(|e| e.to_str()) == Some("txt") {
            out.push(entry);
        }
    }
    Ok(())
}

/// Reads a UTF-8 file, or every `*.txt` file under a directory in sorted path order.
pub fn read_documents(path: &Path, split: DocumentSplit, lowercase: bool) -> Result<Vec<Document>> {
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    let mut docs = Vec::new();
    for file in files {
        let text =
            fs::read_to_string(&file).map_err(|e| Error::io(file.display().to_string(), e))?;
        let name = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("doc")
            .to_string();
        docs.extend(split_text(&name, &text, split, lowercase));
    }
    Ok(docs)
}

/// Bidirectional token/id map with corpus frequencies.
///
/// Ids are assigned in descending frequency order with ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, WordId>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Counts every token of `documents` and keeps those seen at least `min_count` times.
    pub fn build<'a, I>(documents: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if min_count == 0 {
            return Err(Error::config("min_count", "must be at least 1"));
        }
        let mut raw: HashMap<&str, u64> = HashMap::new();
        for doc in documents {
            for tok in doc {
                *raw.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let kept = raw
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(t, c)| (t.to_string(), c))
            .collect::<Vec<_>>();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        Ok(Self::from_counts(kept))
    }

    pub fn from_text(text: &str, min_count: u64, lowercase: bool) -> Result<Self> {
        let tokens = tokenize(text, lowercase);
        Self::build(std::iter::once(tokens.as_slice()), min_count)
    }

    /// Builds from explicit (token, count) entries, re-sorting them into id order.
    pub fn from_counts(mut entries: Vec<(String, u64)>) -> Self {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        let mut ids = HashMap::with_capacity(entries.len());
        for (i, (t, c)) in entries.into_iter().enumerate() {
            ids.insert(t.clone(), i as WordId);
            tokens.push(t);
            counts.push(c);
        }
        Vocabulary { tokens, ids, counts }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.ids.get(token).copied()
    }

    pub fn require(&self, token: &str) -> Result<WordId> {
        self.id(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Maps tokens to ids, deleting out-of-vocabulary tokens.
    pub fn encode(&self, tokens: &[String]) -> Vec<WordId> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[WordId]) -> Vec<&str> {
        ids.iter().map(|&i| self.token(i)).collect()
    }

    /// One `token<TAB>count` line per token in id order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (t, c) in self.tokens.iter().zip(&self.counts) {
            writeln!(out, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_tsv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            let parse_err = |reason: &str| Error::Parse {
                what: "vocabulary",
                path: path.to_path_buf(),
                line: n + 1,
                reason: reason.to_string(),
            };
            let (tok, count) = line.split_once('\t').ok_or_else(|| parse_err("missing tab"))?;
            let count = count.trim().parse().map_err(|_| parse_err("bad count"))?;
            entries.push((tok.to_string(), count));
        }
        let vocab = Self::from_counts(entries.clone());
        if vocab.tokens.iter().zip(&entries).any(|(t, (e, _))| t != e) {
            return Err(Error::Parse {
                what: "vocabulary",
                path: path.to_path_buf(),
                line: 0,
                reason: "lines are not in id order".into(),
            });
        }
        Ok(vocab)
    }
}

/// One training instance: an input word and the words in its context window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextInstance {
    pub input: WordId,
    pub context: Vec<WordId>,
    /// Token offset of the input word in the encoded corpus.
    pub position: usize,
    /// Index of the document the instance came from.
    pub doc: usize,
}

/// A held-out `(w_c, w_i)` pair together with the remainder of the context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldOutPair {
    pub target: WordId,
    pub input: WordId,
    pub rest: Vec<WordId>,
}

/// Context of the token at `pos`: up to `window` ids on each side, truncated at the edges.
pub fn window_context(doc: &[WordId], pos: usize, window: usize) -> Vec<WordId> {
    let lo = pos.saturating_sub(window);
    let hi = (pos + window + 1).min(doc.len());
    doc[lo..pos].iter().chain(&doc[pos + 1..hi]).copied().collect()
}

/// Emits one instance per token; tokens whose context is empty are dropped.
pub fn extract_contexts(docs: &[Vec<WordId>], window: usize) -> Vec<ContextInstance> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::new();
    let mut offset = 0;
    for (d, doc) in docs.iter().enumerate() {
        for (pos, &input) in doc.iter().enumerate() {
            let context = window_context(doc, pos, window);
            if !context.is_empty() {
                out.push(ContextInstance {
                    input,
                    context,
                    position: offset + pos,
                    doc: d,
                });
            }
        }
        offset += doc.len();
    }
    out
}

/// Samples `n_pairs` (instance, slot) pairs without replacement among instances with a full
/// `2 * window` context, removes the sampled words from the training contexts and returns
/// the held-out pairs. Instances that lose their whole context are dropped.
pub fn split_heldout(
    instances: Vec<ContextInstance>,
    n_pairs: usize,
    window: usize,
    seed: u64,
) -> Result<(Vec<ContextInstance>, Vec<HeldOutPair>)> {
    if n_pairs == 0 {
        return Ok((instances, Vec::new()));
    }
    let full = 2 * window;
    let eligible: Vec<usize> = instances
        .iter()
        .enumerate()
        .filter(|(_, inst)| inst.context.len() == full)
        .map(|(i, _)| i)
        .collect();
    let available = eligible.len() * full;
    if n_pairs > available {
        return Err(Error::InsufficientHeldOut {
            requested: n_pairs,
            available,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, available, n_pairs);

    let mut removed: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut pairs = Vec::with_capacity(n_pairs);
    for flat in picks.iter() {
        let inst_idx = eligible[flat / full];
        let slot = flat % full;
        let inst = &instances[inst_idx];
        let mut rest = inst.context.clone();
        let target = rest.remove(slot);
        pairs.push(HeldOutPair {
            target,
            input: inst.input,
            rest,
        });
        removed.entry(inst_idx).or_default().push(slot);
    }

    let train = instances
        .into_iter()
        .enumerate()
        .filter_map(|(i, mut inst)| {
            if let Some(slots) = removed.get(&i) {
                inst.context = inst
                    .context
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| !slots.contains(s))
                    .map(|(_, &w)| w)
                    .collect();
            }
            (!inst.context.is_empty()).then_some(inst)
        })
        .collect();
    Ok((train, pairs))
}

fn join_tokens(vocab: &Vocabulary, ids: &[WordId]) -> String {
    vocab.decode(ids).join(" ")
}

fn parse_tokens(
    vocab: &Vocabulary,
    field: &str,
    path: &Path,
    line: usize,
    what: &'static str,
) -> Result<Vec<WordId>> {
    field
        .split_whitespace()
        .map(|t| {
            vocab.id(t).ok_or_else(|| Error::Parse {
                what,
                path: path.to_path_buf(),
                line,
                reason: format!("unknown token `{t}`"),
            })
        })
        .collect()
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes held-out pairs as `target<TAB>input<TAB>rest tokens separated by spaces`.
pub fn save_heldout(path: &Path, vocab: &Vocabulary, pairs: &[HeldOutPair]) -> Result<()> {
    let mut s = String::new();
    for p in pairs {
        s.push_str(vocab.token(p.target));
        s.push('\t');
        s.push_str(vocab.token(p.input));
        s.push('\t');
        s.push_str(&join_tokens(vocab, &p.rest));
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn load_heldout(path: &Path, vocab: &Vocabulary) -> Result<Vec<HeldOutPair>> {
    let mut pairs = Vec::new();
    for (n, line) in read_lines(path)?.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                what: "held-out pairs",
                path: path.to_path_buf(),
                line: n + 1,
                reason: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let target = parse_tokens(vocab, fields[0], path, n + 1, "held-out pairs")?;
        let input = parse_tokens(vocab, fields[1], path, n + 1, "held-out pairs")?;
        if target.len() != 1 || input.len() != 1 {
            return Err(Error::Parse {
                what: "held-out pairs",
                path: path.to_path_buf(),
                line: n + 1,
                reason: "target and input must be single tokens".into(),
            });
        }
        pairs.push(HeldOutPair {
            target: target[0],
            input: input[0],
            rest: parse_tokens(vocab, fields[2], path, n + 1, "held-out pairs")?,
        });
    }
    Ok(pairs)
}

/// Writes training instances as `doc<TAB>position<TAB>input<TAB>context tokens`.
pub fn save_instances(path: &Path, vocab: &Vocabulary, instances: &[ContextInstance]) -> Result<()> {
    let mut s = String::new();
    for inst in instances {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            inst.doc,
            inst.position,
            vocab.token(inst.input),
            join_tokens(vocab, &inst.context)
        ));
    }
    write_text(path, &s)
}

pub fn load_instances(path: &Path, vocab: &Vocabulary) -> Result<Vec<ContextInstance>> {
    let mut out = Vec::new();
    for (n, line) in read_lines(path)?.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Parse {
            what: "training instances",
            path: path.to_path_buf(),
            line: n + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        let doc = fields[0].parse().map_err(|_| bad("bad document index"))?;
        let position = fields[1].parse().map_err(|_| bad("bad position"))?;
        let input = vocab.id(fields[2]).ok_or_else(|| bad("unknown input token"))?;
        let context = parse_tokens(vocab, fields[3], path, n + 1, "training instances")?;
        if context.is_empty() {
            return Err(bad("empty context"));
        }
        out.push(ContextInstance {
            input,
            context,
            position,
            doc,
        });
    }
    Ok(out)
}
