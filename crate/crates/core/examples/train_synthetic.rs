//! Trains both models on the planted-keyword corpus with default settings
//! and scores them on held-out text.
//!
//! ```text
//! cargo run --release --example train_synthetic [seed]
//! ```

use std::time::Instant;

use hatespeech::corpus::split_dev;
use hatespeech::embed::{build_vocab, EmbeddingTable, GLOVE_DIM};
use hatespeech::models::{init_model, ModelConfig, ModelKind};
use hatespeech::synthetic::{generate, SyntheticConfig};
use hatespeech::train::{encode, evaluate, train, TrainConfig};

fn main() -> hatespeech::Result<()> {
    let data = generate(&SyntheticConfig::default());
    let (train_set, dev_set) = split_dev(&data.train, 0.1, 0)?;
    let vocab = build_vocab(&train_set, 1);
    let cfg = TrainConfig::default();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let classes = data.train.schema.labels.clone();
    println!(
        "train {} / dev {} / test {}, vocabulary {}",
        train_set.len(),
        dev_set.len(),
        data.test.len(),
        vocab.len()
    );

    for kind in [ModelKind::BiLstm, ModelKind::Cnn] {
        let start = Instant::now();
        let table = EmbeddingTable::random(&vocab, GLOVE_DIM, seed);
        let model = init_model(ModelConfig::default_for(kind, classes.len(), GLOVE_DIM), &table, seed)?;
        let (model, history) = train(model, &vocab, &train_set, &dev_set, &cfg, seed)?;
        for e in &history.epochs {
            println!(
                "{kind:>6} epoch {}: train loss {:.4}, val loss {:.4}, val macro F1 {:.4}",
                e.epoch, e.train_loss, e.val_loss, e.val_metrics.macro_f1
            );
        }
        let test = evaluate(&model, &encode(&data.test, &vocab, cfg.max_len), &classes)?;
        println!(
            "{kind:>6} chose epoch {}; test macro F1 {:.4} ({:.1?})\n{}",
            history.chosen_epoch,
            test.report.macro_f1,
            start.elapsed(),
            test.confusion
        );
    }
    Ok(())
}
