//! Three-seed experiment on the planted-keyword corpus: each seed trains a
//! CNN, and dev and test scores are reported as `mean (sd)`.
//!
//! ```text
//! cargo run --release --example experiment
//! ```

use hatespeech::corpus::split_dev;
use hatespeech::embed::{build_vocab, PretrainedVectors, GLOVE_DIM};
use hatespeech::models::{ModelConfig, ModelKind};
use hatespeech::synthetic::{generate, SyntheticConfig};
use hatespeech::train::{run_experiment, Experiment, TrainConfig};

fn main() -> hatespeech::Result<()> {
    let data = generate(&SyntheticConfig::default());
    let (train, dev) = split_dev(&data.train, 0.1, 0)?;
    let vocab = build_vocab(&train, 1);
    let vectors = PretrainedVectors::empty(GLOVE_DIM);
    let model = ModelConfig::default_for(ModelKind::Cnn, 2, GLOVE_DIM);

    let result = run_experiment(
        &TrainConfig::default(),
        Experiment {
            model: &model,
            vocab: &vocab,
            vectors: &vectors,
            train: &train,
            dev: &dev,
            test: Some(&data.test),
        },
    )?;
    for r in &result.runs {
        println!("seed {}: kept epoch {}", r.seed, r.history.chosen_epoch);
    }
    println!("\n{}", result.render());
    Ok(())
}
