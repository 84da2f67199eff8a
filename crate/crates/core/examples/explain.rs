//! Trains a BiLSTM on the planted-keyword corpus, then writes Integrated
//! Gradients reports for a few test texts.
//!
//! ```text
//! cargo run --release --example explain [out-dir]
//! ```

use std::path::PathBuf;

use hatespeech::attrib::{explain, render_index, render_report, IgConfig};
use hatespeech::corpus::split_dev;
use hatespeech::embed::{build_vocab, EmbeddingTable, GLOVE_DIM, MAX_LEN};
use hatespeech::models::{init_model, Checkpoint, ModelConfig, ModelKind};
use hatespeech::synthetic::{generate, SyntheticConfig};
use hatespeech::train::{train, TrainConfig};

fn main() -> hatespeech::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "explain-out".into()));
    std::fs::create_dir_all(&out).map_err(|e| hatespeech::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let data = generate(&SyntheticConfig::default());
    let (train_set, dev_set) = split_dev(&data.train, 0.1, 0)?;
    let vocab = build_vocab(&train_set, 1);
    let table = EmbeddingTable::random(&vocab, GLOVE_DIM, 1);
    let model = init_model(ModelConfig::default_for(ModelKind::BiLstm, 2, GLOVE_DIM), &table, 1)?;
    let (model, _) = train(model, &vocab, &train_set, &dev_set, &TrainConfig::default(), 1)?;
    let checkpoint = Checkpoint {
        model,
        vocab,
        schema: data.train.schema.clone(),
    };
    println!("planted words include: {:?}", &data.planted[..5]);

    let cfg = IgConfig {
        steps: 300,
        ..IgConfig::default()
    };
    let mut entries = Vec::new();
    for (i, s) in data.test.samples.iter().take(6).enumerate() {
        let report = explain(&checkpoint, &s.raw_text, &cfg, MAX_LEN)?;
        let name = format!("report-{:03}.html", i + 1);
        render_report(&report, &out.join(&name))?;
        let top = report
            .tokens
            .iter()
            .zip(report.toward_hateful())
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, s)| format!("{t} ({s:+.3})"))
            .unwrap_or_default();
        println!(
            "{name}: true {}, predicted {}, strongest push toward HOF: {top}, residual {:.6}",
            s.label, report.predicted, report.residual
        );
        entries.push((name, report));
    }
    std::fs::write(out.join("index.html"), render_index(&entries)).map_err(|e| hatespeech::Error::Io {
        path: out.join("index.html"),
        source: e,
    })?;
    println!("reports written to {}", out.display());
    Ok(())
}
