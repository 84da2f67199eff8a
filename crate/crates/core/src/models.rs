//! BiLSTM and CNN sentence classifiers.
//!
//! Both models start from a trainable embedding table whose PAD row is
//! pinned at zero.
//!
//! The BiLSTM stacks `layers` bidirectional LSTM layers. Recurrence is
//! masked by sequence length (the position after the last non-PAD id), so
//! trailing PAD never changes the output. The classifier reads the final
//! forward state and the backward state at position 0 of the top layer.
//! Dropout is applied to the embeddings and to the classifier input.
//!
//! The CNN runs one convolution branch per filter width over the full
//! embedding width, applies ReLU and max-over-time pooling per branch,
//! concatenates the pooled vectors and classifies them after dropout.
//! Sequences shorter than the widest filter are right-padded with PAD.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Mode, Tensor, Var};
use crate::corpus::TaskSchema;
use crate::embed::{EmbeddingTable, Vocab, GLOVE_DIM, PAD};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstmConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout_keep: f64,
    pub num_classes: usize,
}

impl BiLstmConfig {
    pub fn new(num_classes: usize) -> Self {
        Self {
            embed_dim: GLOVE_DIM,
            hidden: 20,
            layers: 2,
            dropout_keep: 0.5,
            num_classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub embed_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout_keep: f64,
    pub num_classes: usize,
}

impl CnnConfig {
    pub fn new(num_classes: usize) -> Self {
        Self {
            embed_dim: GLOVE_DIM,
            filter_widths: vec![2, 3, 4],
            filters_per_width: 100,
            dropout_keep: 0.5,
            num_classes,
        }
    }

    pub fn max_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    BiLstm,
    Cnn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::BiLstm => "BiLSTM",
            ModelKind::Cnn => "CNN",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bilstm" | "lstm" => Ok(ModelKind::BiLstm),
            "cnn" => Ok(ModelKind::Cnn),
            _ => Err(Error::Argument(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelConfig {
    BiLstm(BiLstmConfig),
    Cnn(CnnConfig),
}

impl ModelConfig {
    /// Default architecture of `kind` over `embed_dim`-wide embeddings.
    pub fn default_for(kind: ModelKind, num_classes: usize, embed_dim: usize) -> Self {
        match kind {
            ModelKind::BiLstm => ModelConfig::BiLstm(BiLstmConfig {
                embed_dim,
                ..BiLstmConfig::new(num_classes)
            }),
            ModelKind::Cnn => ModelConfig::Cnn(CnnConfig {
                embed_dim,
                ..CnnConfig::new(num_classes)
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::BiLstm(_) => ModelKind::BiLstm,
            ModelConfig::Cnn(_) => ModelKind::Cnn,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            ModelConfig::BiLstm(c) => c.num_classes,
            ModelConfig::Cnn(c) => c.num_classes,
        }
    }

    pub fn embed_dim(&self) -> usize {
        match self {
            ModelConfig::BiLstm(c) => c.embed_dim,
            ModelConfig::Cnn(c) => c.embed_dim,
        }
    }

    pub fn dropout_keep(&self) -> f64 {
        match self {
            ModelConfig::BiLstm(c) => c.dropout_keep,
            ModelConfig::Cnn(c) => c.dropout_keep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub tensor: Tensor,
}

/// Architecture, parameters and train/eval flag. Parameter 0 is always the
/// embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub params: Vec<Param>,
    pub mode: Mode,
}

struct Init {
    rng: ChaCha8Rng,
    params: Vec<Param>,
}

impl Init {
    fn new(table: &EmbeddingTable, seed: u64) -> Self {
        let mut matrix = table.matrix.clone();
        matrix.requires_grad = true;
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            params: vec![Param {
                name: "embedding".into(),
                tensor: matrix,
            }],
        }
    }

    fn weight(&mut self, name: String, rows: usize, cols: usize) {
        let bound = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols).map(|_| self.rng.gen_range(-bound..=bound)).collect();
        self.push(name, vec![rows, cols], data);
    }

    fn bias(&mut self, name: String, data: Vec<f64>) {
        let n = data.len();
        self.push(name, vec![n], data);
    }

    fn push(&mut self, name: String, shape: Vec<usize>, data: Vec<f64>) {
        let tensor = Tensor::new(shape, data).expect("init shape").requiring_grad();
        self.params.push(Param { name, tensor });
    }
}

fn check_table(table: &EmbeddingTable, embed_dim: usize, num_classes: usize) -> Result<()> {
    if table.dim() != embed_dim {
        return Err(Error::Config(format!(
            "embedding table has dimension {}, model expects {embed_dim}",
            table.dim()
        )));
    }
    if num_classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {num_classes}")));
    }
    Ok(())
}

fn check_keep(keep: f64) -> Result<()> {
    if keep > 0.0 && keep <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("dropout keep probability {keep} outside (0, 1]")))
    }
}

/// Per direction and layer: `w_ih [in, 4h]`, `w_hh [h, 4h]`, `b [4h]` with
/// gates ordered input, forget, cell, output; then `fc.w [2h, classes]`.
pub fn init_bilstm(config: BiLstmConfig, table: &EmbeddingTable, seed: u64) -> Result<ModelState> {
    check_table(table, config.embed_dim, config.num_classes)?;
    check_keep(config.dropout_keep)?;
    if config.hidden == 0 || config.layers == 0 {
        return Err(Error::Config("hidden size and layer count must be positive".into()));
    }
    let h = config.hidden;
    let mut init = Init::new(table, seed);
    for layer in 0..config.layers {
        let input = if layer == 0 { config.embed_dim } else { 2 * h };
        for dir in ["fwd", "bwd"] {
            let p = format!("lstm.l{layer}.{dir}");
            init.weight(format!("{p}.w_ih"), input, 4 * h);
            init.weight(format!("{p}.w_hh"), h, 4 * h);
            let mut b = vec![0.0; 4 * h];
            b[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
            init.bias(format!("{p}.b"), b);
        }
    }
    init.weight("fc.w".into(), 2 * h, config.num_classes);
    init.bias("fc.b".into(), vec![0.0; config.num_classes]);
    Ok(ModelState {
        config: ModelConfig::BiLstm(config),
        params: init.params,
        mode: Mode::Train,
    })
}

/// One `conv{w}.w [w * embed, filters]` / `conv{w}.b` pair per width, then
/// `fc.w [widths * filters, classes]`.
pub fn init_cnn(config: CnnConfig, table: &EmbeddingTable, seed: u64) -> Result<ModelState> {
    check_table(table, config.embed_dim, config.num_classes)?;
    check_keep(config.dropout_keep)?;
    if config.filter_widths.is_empty() || config.filter_widths.contains(&0) || config.filters_per_width == 0 {
        return Err(Error::Config("filter widths and counts must be positive".into()));
    }
    let f = config.filters_per_width;
    let mut init = Init::new(table, seed);
    for &w in &config.filter_widths {
        init.weight(format!("conv{w}.w"), w * config.embed_dim, f);
        init.bias(format!("conv{w}.b"), vec![0.0; f]);
    }
    let features = f * config.filter_widths.len();
    init.weight("fc.w".into(), features, config.num_classes);
    init.bias("fc.b".into(), vec![0.0; config.num_classes]);
    Ok(ModelState {
        config: ModelConfig::Cnn(config),
        params: init.params,
        mode: Mode::Train,
    })
}

pub fn init_model(config: ModelConfig, table: &EmbeddingTable, seed: u64) -> Result<ModelState> {
    match config {
        ModelConfig::BiLstm(c) => init_bilstm(c, table, seed),
        ModelConfig::Cnn(c) => init_cnn(c, table, seed),
    }
}

/// Length up to and including the last non-PAD id.
pub fn effective_len(ids: &[usize]) -> usize {
    ids.iter().rposition(|&id| id != PAD).map_or(0, |p| p + 1)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl ModelState {
    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes()
    }

    pub fn vocab_size(&self) -> usize {
        self.params[0].tensor.shape[0]
    }

    pub fn embed_dim(&self) -> usize {
        self.config.embed_dim()
    }

    pub fn eval(&mut self) {
        self.mode = Mode::Eval;
    }

    pub fn train(&mut self) {
        self.mode = Mode::Train;
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.tensor)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.iter_mut().find(|p| p.name == name).map(|p| &mut p.tensor)
    }

    /// Trainable scalars: every parameter entry except the PAD embedding row.
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum::<usize>() - self.embed_dim()
    }

    /// Registers the parameters on `g`, differentiable or as constants.
    pub fn bind(&self, g: &mut Graph, differentiable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| {
                if differentiable {
                    g.param(&p.tensor)
                } else {
                    g.constant(p.tensor.clone())
                }
            })
            .collect()
    }

    /// `[batch, classes]` logits for a batch of id sequences.
    pub fn logits(&self, g: &mut Graph, params: &[Var], batch: &[&[usize]]) -> Result<Var> {
        if batch.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        let vocab = self.vocab_size();
        if let Some(&id) = batch.iter().flat_map(|s| s.iter()).find(|&&id| id >= vocab) {
            return Err(Error::Encoding { id, vocab_size: vocab });
        }
        match &self.config {
            ModelConfig::BiLstm(cfg) => {
                let lengths: Vec<usize> = batch.iter().map(|s| effective_len(s)).collect();
                let steps = lengths.iter().copied().max().unwrap_or(0).max(1);
                // time-major: row t * B + b
                let mut ids = Vec::with_capacity(steps * batch.len());
                for t in 0..steps {
                    for (seq, &len) in batch.iter().zip(&lengths) {
                        ids.push(if t < len { seq[t] } else { PAD });
                    }
                }
                let x = g.embedding_lookup(params[0], &ids)?;
                let x = g.dropout(x, cfg.dropout_keep)?;
                self.bilstm_head(g, params, cfg, x, batch.len(), &lengths)
            }
            ModelConfig::Cnn(cfg) => {
                let min_len = cfg.max_width();
                let mut ids = Vec::new();
                let mut lengths = Vec::with_capacity(batch.len());
                for seq in batch {
                    ids.extend_from_slice(seq);
                    let len = seq.len().max(min_len);
                    ids.extend(std::iter::repeat_n(PAD, len - seq.len()));
                    lengths.push(len);
                }
                let x = g.embedding_lookup(params[0], &ids)?;
                self.cnn_head(g, params, cfg, x, &lengths)
            }
        }
    }

    /// `[1, classes]` logits for one sequence given directly as a `[len, dim]`
    /// embedding matrix. No embedding dropout is applied; every row counts
    /// toward the sequence length.
    pub fn logits_from_embedded(&self, g: &mut Graph, params: &[Var], x: Var) -> Result<Var> {
        let shape = g.value(x).shape.clone();
        if shape.len() != 2 || shape[1] != self.embed_dim() {
            return Err(Error::Shape {
                op: "logits_from_embedded",
                lhs: shape,
                rhs: vec![0, self.embed_dim()],
            });
        }
        let len = shape[0];
        match &self.config {
            ModelConfig::BiLstm(cfg) => self.bilstm_head(g, params, cfg, x, 1, &[len]),
            ModelConfig::Cnn(cfg) => {
                let min_len = cfg.max_width();
                let x = if len < min_len {
                    let pad = g.constant(Tensor::zeros(vec![min_len - len, shape[1]]));
                    g.concat(&[x, pad], 0)?
                } else {
                    x
                };
                self.cnn_head(g, params, cfg, x, &[len.max(min_len)])
            }
        }
    }

    fn bilstm_head(
        &self,
        g: &mut Graph,
        params: &[Var],
        cfg: &BiLstmConfig,
        x: Var,
        batch: usize,
        lengths: &[usize],
    ) -> Result<Var> {
        let h = cfg.hidden;
        let steps = g.value(x).rows() / batch;
        let mut inputs: Vec<Var> = (0..steps)
            .map(|t| g.slice_rows(x, t * batch, (t + 1) * batch))
            .collect::<Result<_>>()?;
        let masks: Vec<Vec<bool>> = (0..steps).map(|t| lengths.iter().map(|&l| t < l).collect()).collect();

        let mut finals = (None, None);
        for layer in 0..cfg.layers {
            // params: 1 + layer * 6 + dir * 3 + {w_ih, w_hh, b}
            let base = 1 + layer * 6;
            let fwd = self.run_direction(g, &params[base..base + 3], &inputs, &masks, h, false)?;
            let bwd = self.run_direction(g, &params[base + 3..base + 6], &inputs, &masks, h, true)?;
            finals = (Some(fwd.1), Some(bwd.1));
            inputs = fwd
                .0
                .iter()
                .zip(&bwd.0)
                .map(|(&f, &b)| g.concat(&[f, b], 1))
                .collect::<Result<_>>()?;
        }
        let (f, b) = (finals.0.expect("layers >= 1"), finals.1.expect("layers >= 1"));
        let features = g.concat(&[f, b], 1)?;
        let features = g.dropout(features, cfg.dropout_keep)?;
        let n = params.len();
        let out = g.matmul(features, params[n - 2])?;
        g.add_bias(out, params[n - 1])
    }

    /// Returns per-step outputs (in time order) and the final state.
    fn run_direction(
        &self,
        g: &mut Graph,
        p: &[Var],
        inputs: &[Var],
        masks: &[Vec<bool>],
        hidden: usize,
        reverse: bool,
    ) -> Result<(Vec<Var>, Var)> {
        let batch = masks.first().map_or(1, Vec::len);
        let zeros = g.constant(Tensor::zeros(vec![batch, hidden]));
        let (mut hs, mut cs) = (zeros, zeros);
        let mut outputs = vec![zeros; inputs.len()];
        let order: Vec<usize> = if reverse {
            (0..inputs.len()).rev().collect()
        } else {
            (0..inputs.len()).collect()
        };
        for t in order {
            let xw = g.matmul(inputs[t], p[0])?;
            let hw = g.matmul(hs, p[1])?;
            let pre = g.add(xw, hw)?;
            let gates = g.add_bias(pre, p[2])?;
            let i = g.slice_cols(gates, 0, hidden)?;
            let f = g.slice_cols(gates, hidden, 2 * hidden)?;
            let c_hat = g.slice_cols(gates, 2 * hidden, 3 * hidden)?;
            let o = g.slice_cols(gates, 3 * hidden, 4 * hidden)?;
            let i = g.sigmoid(i);
            let f = g.sigmoid(f);
            let c_hat = g.tanh(c_hat);
            let o = g.sigmoid(o);
            let keep = g.mul(f, cs)?;
            let write = g.mul(i, c_hat)?;
            let c_new = g.add(keep, write)?;
            let c_act = g.tanh(c_new);
            let h_new = g.mul(o, c_act)?;
            if masks[t].iter().all(|&m| m) {
                hs = h_new;
                cs = c_new;
            } else {
                hs = g.select_rows(h_new, hs, &masks[t])?;
                cs = g.select_rows(c_new, cs, &masks[t])?;
            }
            outputs[t] = hs;
        }
        Ok((outputs, hs))
    }

    fn cnn_head(&self, g: &mut Graph, params: &[Var], cfg: &CnnConfig, x: Var, lengths: &[usize]) -> Result<Var> {
        let mut pooled = Vec::with_capacity(cfg.filter_widths.len());
        for (k, &w) in cfg.filter_widths.iter().enumerate() {
            let mut starts = Vec::new();
            let mut counts = Vec::with_capacity(lengths.len());
            let mut offset = 0;
            for &len in lengths {
                starts.extend(offset..offset + len + 1 - w);
                counts.push(len + 1 - w);
                offset += len;
            }
            let win = g.windows(x, &starts, w)?;
            let conv = g.matmul(win, params[1 + 2 * k])?;
            let conv = g.add_bias(conv, params[2 + 2 * k])?;
            let act = g.relu(conv);
            pooled.push(g.max_over_time(act, &counts)?);
        }
        let features = g.concat(&pooled, 1)?;
        let features = g.dropout(features, cfg.dropout_keep)?;
        let n = params.len();
        let out = g.matmul(features, params[n - 2])?;
        g.add_bias(out, params[n - 1])
    }

    fn require_eval(&self) -> Result<()> {
        if self.mode != Mode::Eval {
            return Err(Error::State("model is in train mode; call eval() first".into()));
        }
        Ok(())
    }

    /// Class probabilities for one encoded sequence. Requires eval mode.
    pub fn predict(&self, ids: &[usize]) -> Result<Vec<f64>> {
        Ok(self.predict_batch(&[ids])?.remove(0))
    }

    pub fn predict_batch(&self, batch: &[&[usize]]) -> Result<Vec<Vec<f64>>> {
        self.require_eval()?;
        let mut g = Graph::new(Mode::Eval, 0);
        let params = self.bind(&mut g, false);
        let logits = self.logits(&mut g, &params, batch)?;
        let t = g.value(logits);
        let c = t.cols();
        Ok(t.data.chunks(c).map(softmax).collect())
    }
}

const MAGIC: &[u8; 8] = b"HSCKPT\0\x01";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: ModelConfig,
    schema: TaskSchema,
    vocab: Vec<String>,
    params: Vec<ParamHeader>,
}

#[derive(Serialize, Deserialize)]
struct ParamHeader {
    name: String,
    shape: Vec<usize>,
}

/// Everything needed to run a trained model on raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelState,
    pub vocab: Vocab,
    pub schema: TaskSchema,
}

impl Checkpoint {
    /// Layout: 8-byte magic, `u64` LE header length, UTF-8 JSON header
    /// (config, schema, vocabulary, parameter names and shapes), then every
    /// parameter's values as little-endian `f64` in header order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = CheckpointHeader {
            config: self.model.config.clone(),
            schema: self.schema.clone(),
            vocab: self.vocab.tokens().to_vec(),
            params: self
                .model
                .params
                .iter()
                .map(|p| ParamHeader {
                    name: p.name.clone(),
                    shape: p.tensor.shape.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out =
            Vec::with_capacity(16 + json.len() + 8 * self.model.params.iter().map(|p| p.tensor.numel()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &self.model.params {
            for v in &p.tensor.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |message: &str| Error::Checkpoint {
            path: path.to_owned(),
            message: message.to_string(),
        };
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + len).ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(body).map_err(|e| bad(&format!("header: {e}")))?;

        let mut cursor = 16 + len;
        let mut params = Vec::with_capacity(header.params.len());
        for p in header.params {
            let n: usize = p.shape.iter().product();
            let raw = bytes
                .get(cursor..cursor + 8 * n)
                .ok_or_else(|| bad(&format!("truncated data for `{}`", p.name)))?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            cursor += 8 * n;
            let tensor = Tensor::new(p.shape, data)
                .map_err(|e| bad(&e.to_string()))?
                .requiring_grad();
            params.push(Param { name: p.name, tensor });
        }
        if cursor != bytes.len() {
            return Err(bad("trailing bytes after parameter data"));
        }
        let vocab = Vocab::from_full_list(header.vocab);
        if params.first().map(|p| p.tensor.shape[0]) != Some(vocab.len()) {
            return Err(bad("embedding rows do not match vocabulary size"));
        }
        Ok(Self {
            model: ModelState {
                config: header.config,
                params,
                mode: Mode::Eval,
            },
            vocab,
            schema: header.schema,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
