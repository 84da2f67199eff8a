//! Vocabulary construction and GloVe-format word vectors.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::corpus::LabeledCorpus;
use crate::textprep::{self, CleanText};
use crate::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Width of the pretrained vectors the models are built around.
pub const GLOVE_DIM: usize = 100;
/// Encoded sequences are truncated to this many tokens.
pub const MAX_LEN: usize = 64;
/// Range of the uniform initialization for rows without a pretrained vector.
pub const OOV_RANGE: f64 = 0.25;

/// Token to index map. Index 0 is padding, index 1 the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds from an explicit token list, prepending PAD and UNK.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        for t in tokens {
            let t = t.into();
            if t != PAD_TOKEN && t != UNK_TOKEN && !all.contains(&t) {
                all.push(t);
            }
        }
        Self::from_full_list(all)
    }

    /// Rebuilds from a stored list whose first two entries are PAD and UNK.
    pub fn from_full_list(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tokenizes cleaned text and maps it to ids, truncating at [`MAX_LEN`].
    pub fn encode(&self, clean: &CleanText) -> Vec<usize> {
        textprep::tokenize(clean)
            .iter()
            .take(MAX_LEN)
            .map(|t| self.id(t))
            .collect()
    }
}

/// Vocabulary over the clean text of `corpus`, keeping tokens seen at least
/// `min_freq` times. Ordered by descending frequency, then lexicographically.
pub fn build_vocab(corpus: &LabeledCorpus, min_freq: usize) -> Vocab {
    build_vocab_from_texts(corpus.samples.iter().map(|s| &s.clean), min_freq)
}

pub fn build_vocab_from_texts<'a>(texts: impl IntoIterator<Item = &'a CleanText>, min_freq: usize) -> Vocab {
    let min_freq = min_freq.max(1);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        for tok in textprep::tokenize(text).iter() {
            *counts.entry(tok.to_string()).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_tokens(kept.into_iter().map(|(t, _)| t))
}

/// `|vocab| x dim` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: Tensor,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.shape[1]
    }

    pub fn rows(&self) -> usize {
        self.matrix.shape[0]
    }

    pub fn row(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.matrix.data[id * d..(id + 1) * d]
    }

    /// Every row except PAD drawn from `uniform(-0.25, 0.25)`.
    pub fn random(vocab: &Vocab, dim: usize, seed: u64) -> Self {
        Self::from_pretrained(&PretrainedVectors::empty(dim), vocab, seed)
    }

    /// Copies pretrained rows where available; PAD is zero and every other
    /// row is seeded uniform noise.
    pub fn from_pretrained(vectors: &PretrainedVectors, vocab: &Vocab, seed: u64) -> Self {
        let dim = vectors.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(vocab.len() * dim);
        for (id, token) in vocab.tokens().iter().enumerate() {
            // draw for every row so OOV values do not depend on file coverage
            let noise: Vec<f64> = (0..dim).map(|_| rng.gen_range(-OOV_RANGE..OOV_RANGE)).collect();
            if id == PAD {
                data.extend(std::iter::repeat_n(0.0, dim));
            } else if let Some(v) = vectors.vectors.get(token) {
                data.extend_from_slice(v);
            } else {
                data.extend(noise);
            }
        }
        Self {
            matrix: Tensor::new(vec![vocab.len(), dim], data).expect("consistent shape"),
        }
    }
}

/// Vectors read from a GloVe text file, restricted to a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedVectors {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl PretrainedVectors {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Reads `token v1 ... v100` lines. Every line is length-checked; only
    /// tokens in `vocab` are parsed and kept.
    pub fn read(path: &Path, vocab: &Vocab) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|p| !p.is_empty());
            let token = parts.next().unwrap_or_default();
            let values: Vec<&str> = parts.collect();
            match dim {
                None => {
                    if values.len() != GLOVE_DIM {
                        return Err(Error::Config(format!(
                            "{}: vectors have dimension {}, expected {GLOVE_DIM}",
                            path.display(),
                            values.len()
                        )));
                    }
                    dim = Some(values.len());
                }
                Some(d) if values.len() != d => {
                    return Err(Error::Parse {
                        path: path.to_owned(),
                        line: line_no,
                        message: format!("expected {d} values, found {}", values.len()),
                    });
                }
                Some(_) => {}
            }
            if vocab.get(token).is_some() {
                let parsed = values
                    .iter()
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse {
                        path: path.to_owned(),
                        line: line_no,
                        message: e.to_string(),
                    })?;
                vectors.insert(token.to_string(), parsed);
            }
        }
        Ok(Self {
            dim: dim.unwrap_or(GLOVE_DIM),
            vectors,
        })
    }
}

/// Reads a GloVe text file and builds the table for `vocab`.
pub fn load_embeddings(path: &Path, vocab: &Vocab, seed: u64) -> Result<EmbeddingTable> {
    let vectors = PretrainedVectors::read(path, vocab)?;
    Ok(EmbeddingTable::from_pretrained(&vectors, vocab, seed))
}
