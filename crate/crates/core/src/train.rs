//! Training protocol: mini-batch optimization under a linear warmup/decay
//! schedule, per-epoch validation, lowest-validation-loss checkpoint
//! selection, and aggregation over several seeds.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Mode, Tensor};
use crate::corpus::{LabeledCorpus, TaskSchema};
use crate::embed::{EmbeddingTable, PretrainedVectors, Vocab, MAX_LEN, PAD};
use crate::metrics::{self, AggregateReport, ConfusionMatrix, ScoreReport};
use crate::models::{init_model, ModelConfig, ModelState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimizer {
    Adam,
    Sgd,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            _ => Err(Error::Config(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub warmup_fraction: f64,
    /// Linear warmup and decay; when false the rate stays at `base_lr`.
    pub linear_schedule: bool,
    pub seeds: Vec<u64>,
    pub optimizer: Optimizer,
    /// Sequences are truncated to this many tokens.
    pub max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 6,
            batch_size: 64,
            base_lr: 1e-3,
            warmup_fraction: 0.1,
            linear_schedule: true,
            seeds: vec![1, 2, 3],
            optimizer: Optimizer::Adam,
            max_len: MAX_LEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("train.{field}: {msg}")));
        if self.epochs == 0 {
            return fail("epochs", "must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be at least 1".into());
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return fail("base_lr", format!("must be positive, got {}", self.base_lr));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return fail(
                "warmup_fraction",
                format!("must lie in [0, 1), got {}", self.warmup_fraction),
            );
        }
        if self.seeds.is_empty() {
            return fail("seeds", "need at least one seed".into());
        }
        if self.max_len == 0 {
            return fail("max_len", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn total_steps(&self, train_size: usize) -> usize {
        self.epochs * train_size.div_ceil(self.batch_size)
    }

    pub fn warmup_steps(&self, total_steps: usize) -> usize {
        ((self.warmup_fraction * total_steps as f64).floor() as usize).min(total_steps.saturating_sub(1))
    }
}

/// Learning rate after `step` updates: linear from 0 to `base_lr` over the
/// warmup, then linear down to 0 at `total_steps`.
pub fn lr_at(step: usize, total_steps: usize, warmup_steps: usize, base_lr: f64) -> Result<f64> {
    if warmup_steps >= total_steps {
        return Err(Error::Argument(format!(
            "warmup steps {warmup_steps} must be below total steps {total_steps}"
        )));
    }
    if step > total_steps {
        return Err(Error::Argument(format!("step {step} beyond total steps {total_steps}")));
    }
    Ok(if step < warmup_steps {
        base_lr * (step as f64 / warmup_steps as f64)
    } else {
        base_lr * ((total_steps - step) as f64 / (total_steps - warmup_steps) as f64)
    })
}

/// 1-based index of the smallest loss, first one on ties.
pub fn choose_epoch(val_losses: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &l) in val_losses.iter().enumerate() {
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((i, l));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// Token ids and label indices, ready for batching.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EncodedSet {
    pub ids: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
}

impl EncodedSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn encode(corpus: &LabeledCorpus, vocab: &Vocab, max_len: usize) -> EncodedSet {
    EncodedSet {
        ids: corpus
            .samples
            .iter()
            .map(|s| {
                let mut ids = vocab.encode(&s.clean);
                ids.truncate(max_len);
                ids
            })
            .collect(),
        labels: corpus.label_indices(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub confusion: ConfusionMatrix,
    pub report: ScoreReport,
    pub predictions: Vec<usize>,
}

const EVAL_BATCH: usize = 256;

/// Mean cross-entropy, confusion matrix and scores in eval mode.
pub fn evaluate(model: &ModelState, data: &EncodedSet, classes: &[String]) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::Argument("cannot evaluate on an empty set".into()));
    }
    let mut loss_sum = 0.0;
    let mut predictions = Vec::with_capacity(data.len());
    for (ids, labels) in data.ids.chunks(EVAL_BATCH).zip(data.labels.chunks(EVAL_BATCH)) {
        let mut g = Graph::new(Mode::Eval, 0);
        let params = model.bind(&mut g, false);
        let batch: Vec<&[usize]> = ids.iter().map(Vec::as_slice).collect();
        let logits = model.logits(&mut g, &params, &batch)?;
        let loss = g.softmax_cross_entropy(logits, labels)?;
        loss_sum += g.value(loss).item() * labels.len() as f64;
        let t = g.value(logits);
        predictions.extend(t.data.chunks(t.cols()).map(crate::models::argmax));
    }
    let confusion = ConfusionMatrix::from_indices(&data.labels, &predictions, classes)?;
    Ok(Evaluation {
        loss: loss_sum / data.len() as f64,
        report: metrics::scores(&confusion),
        confusion,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metrics: ScoreReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub chosen_epoch: usize,
}

impl RunHistory {
    pub fn chosen(&self) -> &EpochRecord {
        &self.epochs[self.chosen_epoch - 1]
    }

    /// One JSON object per epoch, newline separated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            let line = serde_json::json!({
                "seed": self.seed,
                "epoch": e.epoch,
                "train_loss": e.train_loss,
                "val_loss": e.val_loss,
                "val_macro_f1": e.val_metrics.macro_f1,
                "val_accuracy": e.val_metrics.accuracy,
                "chosen": e.epoch == self.chosen_epoch,
            });
            writeln!(out, "{line}").expect("write to string");
        }
        out
    }
}

struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(model: &mut ModelState, grads: &mut [Vec<f64>], adam: &mut AdamState, optimizer: Optimizer, lr: f64) {
    let dim = model.embed_dim();
    grads[0][PAD * dim..(PAD + 1) * dim].iter_mut().for_each(|g| *g = 0.0);
    adam.t += 1;
    let c1 = 1.0 - BETA1.powi(adam.t);
    let c2 = 1.0 - BETA2.powi(adam.t);
    for (k, p) in model.params.iter_mut().enumerate() {
        let g = &grads[k];
        match optimizer {
            Optimizer::Sgd => {
                for (w, gi) in p.tensor.data.iter_mut().zip(g) {
                    *w -= lr * gi;
                }
            }
            Optimizer::Adam => {
                let (m, v) = (&mut adam.m[k], &mut adam.v[k]);
                for i in 0..g.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    p.tensor.data[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

fn mix(seed: u64, epoch: usize, batch: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (epoch as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ (batch as u64).wrapping_mul(0x94d0_49bb_1331_11eb)
}

/// Trains for exactly `cfg.epochs` epochs and returns the parameters from
/// the epoch with the lowest validation loss, in eval mode.
pub fn train_encoded(
    mut model: ModelState,
    train: &EncodedSet,
    dev: &EncodedSet,
    classes: &[String],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ModelState, RunHistory)> {
    cfg.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Argument("train and dev sets must be non-empty".into()));
    }
    let total = cfg.total_steps(train.len());
    let warmup = cfg.warmup_steps(total);
    let mut adam = AdamState {
        m: model.params.iter().map(|p| vec![0.0; p.tensor.numel()]).collect(),
        v: model.params.iter().map(|p| vec![0.0; p.tensor.numel()]).collect(),
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Vec<Tensor>)> = None;

    for epoch in 1..=cfg.epochs {
        model.train();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&[usize]> = chunk.iter().map(|&i| train.ids[i].as_slice()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let mut g = Graph::new(Mode::Train, mix(seed, epoch, b));
            let params = model.bind(&mut g, true);
            let logits = model.logits(&mut g, &params, &batch)?;
            let loss = g.softmax_cross_entropy(logits, &labels)?;
            let value = g.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: b + 1,
                    loss: value,
                });
            }
            loss_sum += value * chunk.len() as f64;
            let mut grads = g.backward(loss)?;
            let mut flat: Vec<Vec<f64>> = params.iter().map(|&p| grads.take(p)).collect();
            let lr = if cfg.linear_schedule {
                lr_at(step, total, warmup, cfg.base_lr)?
            } else {
                cfg.base_lr
            };
            apply_update(&mut model, &mut flat, &mut adam, cfg.optimizer, lr);
            step += 1;
        }

        model.eval();
        let val = evaluate(&model, dev, classes)?;
        if best.as_ref().is_none_or(|(l, _)| val.loss < *l) {
            best = Some((val.loss, model.params.iter().map(|p| p.tensor.clone()).collect()));
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss: val.loss,
            val_metrics: val.report,
        });
    }

    let losses: Vec<f64> = epochs.iter().map(|e| e.val_loss).collect();
    let chosen_epoch = choose_epoch(&losses).expect("at least one epoch");
    let (_, params) = best.expect("at least one epoch");
    for (p, t) in model.params.iter_mut().zip(params) {
        p.tensor = t;
    }
    model.eval();
    Ok((
        model,
        RunHistory {
            seed,
            epochs,
            chosen_epoch,
        },
    ))
}

/// [`train_encoded`] on corpora encoded against `vocab`.
pub fn train(
    model: ModelState,
    vocab: &Vocab,
    train: &LabeledCorpus,
    dev: &LabeledCorpus,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ModelState, RunHistory)> {
    let classes = train.schema.labels.clone();
    train_encoded(
        model,
        &encode(train, vocab, cfg.max_len),
        &encode(dev, vocab, cfg.max_len),
        &classes,
        cfg,
        seed,
    )
}

/// Inputs shared by every run of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct Experiment<'a> {
    pub model: &'a ModelConfig,
    pub vocab: &'a Vocab,
    pub vectors: &'a PretrainedVectors,
    pub train: &'a LabeledCorpus,
    pub dev: &'a LabeledCorpus,
    pub test: Option<&'a LabeledCorpus>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub history: RunHistory,
    pub dev: Evaluation,
    pub test: Option<Evaluation>,
    pub model: ModelState,
}

#[derive(Debug, Clone)]
pub struct AggregatedResult {
    pub model: ModelConfig,
    pub schema: TaskSchema,
    pub runs: Vec<RunResult>,
    pub dev: AggregateReport,
    pub test: Option<AggregateReport>,
}

/// Trains once per seed (seeds run in parallel) and aggregates dev and test
/// scores. Each seed drives embedding noise, initialization, shuffling and
/// dropout of its own run.
pub fn run_experiment(cfg: &TrainConfig, exp: Experiment<'_>) -> Result<AggregatedResult> {
    cfg.validate()?;
    let classes = exp.train.schema.labels.clone();
    let train_set = encode(exp.train, exp.vocab, cfg.max_len);
    let dev_set = encode(exp.dev, exp.vocab, cfg.max_len);
    let test_set = exp.test.map(|t| encode(t, exp.vocab, cfg.max_len));

    let runs: Vec<RunResult> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let table = EmbeddingTable::from_pretrained(exp.vectors, exp.vocab, seed);
            let model = init_model(exp.model.clone(), &table, seed)?;
            let (model, history) = train_encoded(model, &train_set, &dev_set, &classes, cfg, seed)?;
            let dev = evaluate(&model, &dev_set, &classes)?;
            let test = test_set.as_ref().map(|t| evaluate(&model, t, &classes)).transpose()?;
            Ok(RunResult {
                seed,
                history,
                dev,
                test,
                model,
            })
        })
        .collect::<Result<_>>()?;

    let dev_reports: Vec<ScoreReport> = runs.iter().map(|r| r.dev.report.clone()).collect();
    let test = if exp.test.is_some() {
        let reports: Vec<ScoreReport> = runs
            .iter()
            .map(|r| r.test.as_ref().expect("test evaluated").report.clone())
            .collect();
        Some(metrics::aggregate(&reports)?)
    } else {
        None
    };
    Ok(AggregatedResult {
        model: exp.model.clone(),
        schema: exp.train.schema.clone(),
        dev: metrics::aggregate(&dev_reports)?,
        test,
        runs,
    })
}

/// Table rows of `mean (sd)` cells in percent for one model.
pub fn render_table(label: &str, dev: &AggregateReport, test: Option<&AggregateReport>) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<24} {:<7} {:>16} {:>16} {:>16}",
        format!("{label} ({} runs)", dev.runs),
        "split",
        "macro F1",
        "micro F1",
        "weighted F1"
    )
    .expect("write to string");
    let mut row = |split: &str, r: &AggregateReport| {
        writeln!(
            out,
            "{:<24} {:<7} {:>16} {:>16} {:>16}",
            "",
            split,
            r.macro_f1.scaled(100.0).render(),
            r.micro_f1.scaled(100.0).render(),
            r.weighted_f1.scaled(100.0).render()
        )
        .expect("write to string");
    };
    row("dev", dev);
    if let Some(t) = test {
        row("test", t);
    }
    out
}

impl AggregatedResult {
    pub fn render(&self) -> String {
        let label = format!("{} {}", self.model.kind(), self.schema);
        render_table(&label, &self.dev, self.test.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sample;
    use crate::embed::build_vocab;
    use crate::models::{BiLstmConfig, CnnConfig};
    use proptest::prelude::*;

    #[test]
    fn schedule_examples() {
        assert_eq!(lr_at(0, 100, 10, 1e-3).unwrap(), 0.0);
        assert_eq!(lr_at(10, 100, 10, 1e-3).unwrap(), 1e-3);
        let expected = 1e-3 * (100.0 - 55.0) / (100.0 - 10.0);
        assert!((lr_at(55, 100, 10, 1e-3).unwrap() - expected).abs() < 1e-18);
        assert!((lr_at(55, 100, 10, 1e-3).unwrap() - 5.0e-4).abs() < 1e-15);
        assert_eq!(lr_at(100, 100, 10, 1e-3).unwrap(), 0.0);
        assert!(matches!(lr_at(101, 100, 10, 1e-3), Err(Error::Argument(_))));
        assert!(matches!(lr_at(0, 10, 10, 1e-3), Err(Error::Argument(_))));
        // no warmup starts at the peak
        assert_eq!(lr_at(0, 50, 0, 2e-3).unwrap(), 2e-3);
    }

    proptest! {
        #[test]
        fn schedule_shape(total in 2usize..500, frac in 0.0f64..1.0, base in 1e-5f64..1.0) {
            let warmup = ((frac * total as f64) as usize).min(total - 1);
            let lrs: Vec<f64> = (0..=total).map(|s| lr_at(s, total, warmup, base).unwrap()).collect();
            prop_assert!(lrs.iter().all(|&l| l >= 0.0 && l <= base));
            let peaks = lrs.iter().filter(|&&l| l == base).count();
            prop_assert_eq!(peaks, 1);
            prop_assert_eq!(lrs[warmup], base);
            for s in 1..warmup { prop_assert!(lrs[s] > lrs[s - 1]); }
            for s in warmup + 1..=total { prop_assert!(lrs[s] < lrs[s - 1]); }
            // piecewise linear: second differences vanish away from the kink
            for s in 1..total {
                if s != warmup {
                    let d2 = lrs[s + 1] - 2.0 * lrs[s] + lrs[s - 1];
                    prop_assert!(d2.abs() < 1e-12 * base.max(1.0));
                }
            }
        }

        #[test]
        fn choose_epoch_is_first_argmin(losses in prop::collection::vec(0u8..5, 1..12)) {
            let losses: Vec<f64> = losses.into_iter().map(f64::from).collect();
            let chosen = choose_epoch(&losses).unwrap();
            let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(losses[chosen - 1], min);
            prop_assert!(losses[..chosen - 1].iter().all(|&l| l > min));
        }
    }

    #[test]
    fn choose_epoch_examples() {
        assert_eq!(choose_epoch(&[0.9, 0.5, 0.6, 0.55, 0.7, 0.8]), Some(2));
        assert_eq!(choose_epoch(&[0.5, 0.5, 0.7, 0.9, 1.0, 0.6]), Some(1));
        assert_eq!(choose_epoch(&[]), None);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            warmup_fraction: 1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(m)) if m.contains("warmup_fraction")));
        let bad = TrainConfig {
            seeds: vec![],
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(TrainConfig::default().total_steps(130), 6 * 3);
    }

    fn toy_corpus(n: usize, offset: usize) -> LabeledCorpus {
        let schema = TaskSchema::custom(&["HOF", "NOT"]);
        let samples = (0..n)
            .map(|i| {
                let k = i + offset;
                let bad = k.is_multiple_of(3);
                let text = if bad {
                    format!("you are a jerk number w{}", k % 7)
                } else {
                    format!("have a lovely day w{}", k % 7)
                };
                Sample::new(format!("s{k}"), text, if bad { "HOF" } else { "NOT" })
            })
            .collect();
        LabeledCorpus::new(schema, samples).unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 8,
            base_lr: 1e-2,
            seeds: vec![4],
            ..TrainConfig::default()
        }
    }

    fn small_model(vocab: &Vocab, seed: u64) -> ModelState {
        let table = EmbeddingTable::random(vocab, 8, seed);
        init_model(
            ModelConfig::BiLstm(BiLstmConfig {
                embed_dim: 8,
                hidden: 4,
                ..BiLstmConfig::new(2)
            }),
            &table,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn training_is_deterministic_and_restores_chosen_epoch() {
        let (tr, dev) = (toy_corpus(60, 0), toy_corpus(20, 100));
        let vocab = build_vocab(&tr, 1);
        let cfg = small_cfg();
        let (m1, h1) = train(small_model(&vocab, 4), &vocab, &tr, &dev, &cfg, 4).unwrap();
        let (m2, h2) = train(small_model(&vocab, 4), &vocab, &tr, &dev, &cfg, 4).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_eq!(h1.epochs.len(), 3);
        assert_eq!(m1.mode, Mode::Eval);

        let classes = tr.schema.labels.clone();
        let again = evaluate(&m1, &encode(&dev, &vocab, cfg.max_len), &classes).unwrap();
        assert_eq!(again.loss, h1.chosen().val_loss);
        assert_eq!(again.report, h1.chosen().val_metrics);
        assert_eq!(h1.to_jsonl().lines().count(), 3);
    }

    #[test]
    fn pad_row_stays_zero() {
        let (tr, dev) = (toy_corpus(40, 0), toy_corpus(10, 100));
        let vocab = build_vocab(&tr, 1);
        for optimizer in [Optimizer::Adam, Optimizer::Sgd] {
            let cfg = TrainConfig {
                optimizer,
                ..small_cfg()
            };
            let (m, _) = train(small_model(&vocab, 1), &vocab, &tr, &dev, &cfg, 1).unwrap();
            assert!(m.params[0].tensor.data[..8].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn divergence_is_reported() {
        let (tr, dev) = (toy_corpus(20, 0), toy_corpus(5, 100));
        let vocab = build_vocab(&tr, 1);
        let mut model = small_model(&vocab, 0);
        model.param_mut("fc.b").unwrap().data[0] = f64::NAN;
        let err = train(model, &vocab, &tr, &dev, &small_cfg(), 0).unwrap_err();
        assert!(matches!(err, Error::Training { epoch: 1, batch: 1, .. }));
    }

    #[test]
    fn experiment_aggregates_every_seed() {
        let (tr, dev, test) = (toy_corpus(48, 0), toy_corpus(12, 100), toy_corpus(12, 200));
        let vocab = build_vocab(&tr, 1);
        let vectors = PretrainedVectors::empty(8);
        let model = ModelConfig::Cnn(CnnConfig {
            embed_dim: 8,
            filters_per_width: 4,
            ..CnnConfig::new(2)
        });
        let cfg = TrainConfig {
            epochs: 2,
            seeds: vec![1, 2, 3],
            ..small_cfg()
        };
        let exp = Experiment {
            model: &model,
            vocab: &vocab,
            vectors: &vectors,
            train: &tr,
            dev: &dev,
            test: Some(&test),
        };
        let result = run_experiment(&cfg, exp).unwrap();
        assert_eq!(result.runs.len(), 3);
        assert_eq!(result.dev.runs, 3);
        let seeds: Vec<u64> = result.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![1, 2, 3]);
        let macros: Vec<f64> = result
            .runs
            .iter()
            .map(|r| r.test.as_ref().unwrap().report.macro_f1)
            .collect();
        assert_eq!(result.test.as_ref().unwrap().macro_f1, metrics::MeanSd::of(&macros));
        let table = result.render();
        assert!(table.contains("CNN") && table.contains("test"));
    }
}
