//! Command-line front end.
//!
//! `hatespeech <command>` with commands `preprocess`, `augment`, `train`,
//! `eval`, `explain` and `report`. Exit status is 0 on success, 1 on a
//! runtime or configuration error and 2 on a usage error.
//!
//! `train` reads a flat configuration file of `section.key = value` lines:
//!
//! ```text
//! # comments start with '#'
//! data.train = train.tsv
//! data.test = test.tsv
//! data.task = hasoc-a
//! model.kind = bilstm
//! train.seeds = 1, 2, 3
//! output.dir = runs/bilstm
//! ```
//!
//! Relative paths are resolved against the configuration file's directory.
//! Every run directory gets a `manifest.json` holding the resolved
//! configuration, the seeds and a SHA-256 digest of every input file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attrib::{self, IgConfig, Target};
use crate::augment::{self, AugmentedCorpus, Provenance};
use crate::corpus::{self, LabeledCorpus, Table, TaskSchema};
use crate::embed::{build_vocab, PretrainedVectors, GLOVE_DIM, MAX_LEN};
use crate::metrics::{self, AggregateReport};
use crate::models::{Checkpoint, ModelConfig, ModelKind};
use crate::train::{self, Experiment, Optimizer, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "hatespeech", version, about = "Hate and offensive speech classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rewrite a dataset file with cleaned text, keeping its columns and format.
    Preprocess {
        #[arg(long)]
        data: PathBuf,
        /// Task selector: olid-a, olid-b, olid-c, hasoc-a or hasoc-b.
        #[arg(long)]
        task: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add boundary-deleted and/or generated samples to a training file.
    Augment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        out: PathBuf,
        /// Offensive word list (one term per line); enables boundary deletion.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Terms to drop from the word list.
        #[arg(long, requires = "lexicon")]
        removals: Option<PathBuf>,
        /// `id<TAB>continuation` file; enables generated samples.
        #[arg(long)]
        continuations: Option<PathBuf>,
    },
    /// Train one model per seed as described by a configuration file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a checkpoint on a labeled file.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        task: String,
    },
    /// Write Integrated Gradients HTML reports for texts.
    Explain {
        #[arg(long)]
        checkpoint: PathBuf,
        /// A single text to explain.
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        text: Option<String>,
        /// File with one text per line.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "explain")]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Class to explain; defaults to the predicted class.
        #[arg(long)]
        target: Option<String>,
    },
    /// Merge run manifests into one comparison table.
    Report {
        /// Run directories or manifest files.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::Preprocess { data, task, out } => preprocess(&data, &task.parse()?, &out),
        Command::Augment {
            data,
            task,
            out,
            lexicon,
            removals,
            continuations,
        } => augment_file(
            &data,
            &task.parse()?,
            &out,
            lexicon.as_deref(),
            removals.as_deref(),
            continuations.as_deref(),
        ),
        Command::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            train_run(&cfg)
        }
        Command::Eval { checkpoint, data, task } => eval(&checkpoint, &data, &task.parse()?),
        Command::Explain {
            checkpoint,
            text,
            input,
            out,
            steps,
            target,
        } => explain(&checkpoint, text, input.as_deref(), &out, steps, target.as_deref()),
        Command::Report { runs, out } => report(&runs, out.as_deref()),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Refuses to write over any of `inputs`.
fn ensure_not_input(out: &Path, inputs: &[Option<&Path>]) -> Result<()> {
    let Ok(target) = out.canonicalize() else {
        return Ok(());
    };
    for input in inputs.iter().flatten() {
        if input.canonicalize().is_ok_and(|p| p == target) {
            return Err(Error::Config(format!(
                "output `{}` would overwrite an input file",
                out.display()
            )));
        }
    }
    Ok(())
}

fn preprocess(data: &Path, schema: &TaskSchema, out: &Path) -> Result<String> {
    ensure_not_input(out, &[Some(data)])?;
    let table = Table::read(data, schema.dataset)?;
    let corpus = corpus::corpus_from_table(&table, schema.clone())?;
    let id_col = table.column(schema.id_column())?;
    let text_col = table.column(schema.text_column())?;
    let by_id = rows_by_id(&table, id_col);
    let rows = corpus
        .samples
        .iter()
        .map(|s| {
            let mut row = by_id[s.id.as_str()].clone();
            row.resize(table.header.len(), String::new());
            row[text_col] = s.clean.as_str().to_string();
            row
        })
        .collect();
    write_table(&table, table.header.clone(), rows, out)?;
    Ok(format!(
        "{} labeled samples of {} rows written to {}\n",
        corpus.len(),
        table.rows.len(),
        out.display()
    ))
}

fn rows_by_id(table: &Table, id_col: usize) -> BTreeMap<&str, &Vec<String>> {
    table
        .rows
        .iter()
        .filter_map(|r| r.get(id_col).map(|id| (id.trim(), r)))
        .collect()
}

/// Writes `rows` with the source table's delimiter and quoting.
fn write_table(source: &Table, header: Vec<String>, rows: Vec<Vec<String>>, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Table {
        path: out.to_owned(),
        delimiter: source.delimiter,
        quoting: source.quoting,
        header,
        rows,
    }
    .write(out)
}

fn augment_file(
    data: &Path,
    schema: &TaskSchema,
    out: &Path,
    lexicon: Option<&Path>,
    removals: Option<&Path>,
    continuations: Option<&Path>,
) -> Result<String> {
    if lexicon.is_none() && continuations.is_none() {
        return Err(Error::Config("augment needs --lexicon, --continuations or both".into()));
    }
    ensure_not_input(out, &[Some(data), lexicon, removals, continuations])?;
    let table = Table::read(data, schema.dataset)?;
    let corpus = corpus::corpus_from_table(&table, schema.clone())?;
    let merged = augment_corpus(&corpus, lexicon, removals, continuations)?;

    let id_col = table.column(schema.id_column())?;
    let text_col = table.column(schema.text_column())?;
    let label_col = table.column(schema.label_column())?;
    let by_id = rows_by_id(&table, id_col);

    let mut header = table.header.clone();
    header.push("provenance".into());
    let mut rows = Vec::with_capacity(merged.len());
    for (s, p) in merged.samples.iter().zip(&merged.provenance) {
        let source_id = match p {
            Provenance::Original => s.id.as_str(),
            _ => s.id.rsplit_once('-').map_or(s.id.as_str(), |(id, _)| id),
        };
        let mut row = by_id[source_id].clone();
        row.resize(table.header.len(), String::new());
        if *p != Provenance::Original {
            row[id_col] = s.id.clone();
            row[text_col] = s.clean.as_str().to_string();
            row[label_col] = s.label.clone();
        }
        row.push(p.to_string());
        rows.push(row);
    }
    write_table(&table, header, rows, out)?;
    Ok(format!(
        "{} originals, {} deleted, {} generated: {} samples written to {}\n",
        merged.count(Provenance::Original),
        merged.count(Provenance::Deleted),
        merged.count(Provenance::Generated),
        merged.len(),
        out.display()
    ))
}

fn augment_corpus(
    corpus: &LabeledCorpus,
    lexicon: Option<&Path>,
    removals: Option<&Path>,
    continuations: Option<&Path>,
) -> Result<AugmentedCorpus> {
    let mut merged = AugmentedCorpus::from_original(corpus);
    if let Some(path) = lexicon {
        let lex = augment::load_wordlist(path, removals)?;
        merged.merge(&augment::deletion_samples(corpus, &lex), Provenance::Deleted)?;
    }
    if let Some(path) = continuations {
        let conts = augment::load_continuations(path)?;
        merged.merge(&augment::generated_samples(corpus, &conts), Provenance::Generated)?;
    }
    Ok(merged)
}

/// `key = value` pairs with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(err(format!("invalid key `{key}`")));
            }
            if entries
                .insert(key.to_string(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(err(format!("`{key}` set twice")));
            }
        }
        Ok(Self {
            path: path.to_owned(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("{key}: expected {expected}, got `{v}`")))
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, expected: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("{key}: expected {expected}, got `{}`", s.trim())))
                    })
                    .collect()
            })
            .transpose()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "data.train",
    "data.dev",
    "data.test",
    "data.task",
    "data.embeddings",
    "data.dev_fraction",
    "data.split_seed",
    "data.min_freq",
    "model.kind",
    "model.embed_dim",
    "model.hidden",
    "model.layers",
    "model.filter_widths",
    "model.filters",
    "model.dropout_keep",
    "train.epochs",
    "train.batch_size",
    "train.base_lr",
    "train.warmup_fraction",
    "train.linear_schedule",
    "train.seeds",
    "train.optimizer",
    "train.max_len",
    "augment.lexicon",
    "augment.removals",
    "augment.continuations",
    "output.dir",
];

/// Everything `train` needs, with paths resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub train_path: PathBuf,
    pub dev_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub task: TaskSchema,
    pub embeddings: Option<PathBuf>,
    pub dev_fraction: f64,
    pub split_seed: u64,
    pub min_freq: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub lexicon: Option<PathBuf>,
    pub removals: Option<PathBuf>,
    pub continuations: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(&ConfigFile::read(path)?)
    }

    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        if let Some((key, (line, _))) = file.entries.iter().find(|(k, _)| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("{key} (line {line}): unknown key")));
        }
        let base = file.path.parent().unwrap_or(Path::new("")).to_path_buf();
        let path = |key: &str| -> Result<Option<PathBuf>> {
            match file.get(key) {
                None | Some("") => Ok(None),
                Some(v) => {
                    let p = base.join(v);
                    if key != "output.dir" && !p.exists() {
                        return Err(Error::Config(format!("{key}: file `{}` does not exist", p.display())));
                    }
                    Ok(Some(p))
                }
            }
        };
        let required =
            |key: &str| -> Result<PathBuf> { path(key)?.ok_or_else(|| Error::Config(format!("{key}: required"))) };

        let task: TaskSchema = file
            .get("data.task")
            .ok_or_else(|| Error::Config("data.task: required".into()))?
            .parse()
            .map_err(|e| Error::Config(format!("data.task: {e}")))?;
        let kind: ModelKind = file
            .get("model.kind")
            .ok_or_else(|| Error::Config("model.kind: required".into()))?
            .parse()
            .map_err(|e| Error::Config(format!("model.kind: {e}")))?;

        let embed_dim = file.typed("model.embed_dim", "an integer")?.unwrap_or(GLOVE_DIM);
        let mut model = ModelConfig::default_for(kind, task.num_classes(), embed_dim);
        let keep = file.typed::<f64>("model.dropout_keep", "a number")?;
        match &mut model {
            ModelConfig::BiLstm(c) => {
                if file.get("model.filter_widths").is_some() || file.get("model.filters").is_some() {
                    return Err(Error::Config(
                        "model.filter_widths/model.filters: only valid for the CNN".into(),
                    ));
                }
                c.hidden = file.typed("model.hidden", "an integer")?.unwrap_or(c.hidden);
                c.layers = file.typed("model.layers", "an integer")?.unwrap_or(c.layers);
                c.dropout_keep = keep.unwrap_or(c.dropout_keep);
            }
            ModelConfig::Cnn(c) => {
                if file.get("model.hidden").is_some() || file.get("model.layers").is_some() {
                    return Err(Error::Config(
                        "model.hidden/model.layers: only valid for the BiLSTM".into(),
                    ));
                }
                c.filter_widths = file
                    .list("model.filter_widths", "integers")?
                    .unwrap_or_else(|| c.filter_widths.clone());
                c.filters_per_width = file
                    .typed("model.filters", "an integer")?
                    .unwrap_or(c.filters_per_width);
                c.dropout_keep = keep.unwrap_or(c.dropout_keep);
            }
        }

        let d = TrainConfig::default();
        let train = TrainConfig {
            epochs: file.typed("train.epochs", "an integer")?.unwrap_or(d.epochs),
            batch_size: file.typed("train.batch_size", "an integer")?.unwrap_or(d.batch_size),
            base_lr: file.typed("train.base_lr", "a number")?.unwrap_or(d.base_lr),
            warmup_fraction: file
                .typed("train.warmup_fraction", "a number")?
                .unwrap_or(d.warmup_fraction),
            linear_schedule: file
                .typed("train.linear_schedule", "true or false")?
                .unwrap_or(d.linear_schedule),
            seeds: file.list("train.seeds", "integers")?.unwrap_or(d.seeds),
            optimizer: file
                .get("train.optimizer")
                .map(|v| {
                    v.parse::<Optimizer>()
                        .map_err(|e| Error::Config(format!("train.optimizer: {e}")))
                })
                .transpose()?
                .unwrap_or(d.optimizer),
            max_len: file.typed("train.max_len", "an integer")?.unwrap_or(MAX_LEN),
        };
        train.validate()?;

        let dev_fraction = file.typed("data.dev_fraction", "a number")?.unwrap_or(0.1);
        if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
            return Err(Error::Config(format!(
                "data.dev_fraction: must lie in (0, 1), got {dev_fraction}"
            )));
        }
        let cfg = Self {
            train_path: required("data.train")?,
            dev_path: path("data.dev")?,
            test_path: path("data.test")?,
            task,
            embeddings: path("data.embeddings")?,
            dev_fraction,
            split_seed: file.typed("data.split_seed", "an integer")?.unwrap_or(0),
            min_freq: file.typed("data.min_freq", "an integer")?.unwrap_or(1),
            model,
            train,
            lexicon: path("augment.lexicon")?,
            removals: path("augment.removals")?,
            continuations: path("augment.continuations")?,
            output_dir: required("output.dir")?,
        };
        if cfg.removals.is_some() && cfg.lexicon.is_none() {
            return Err(Error::Config("augment.removals: needs augment.lexicon".into()));
        }
        Ok(cfg)
    }

    /// Every input file the run reads.
    pub fn inputs(&self) -> Vec<&Path> {
        [
            Some(&self.train_path),
            self.dev_path.as_ref(),
            self.test_path.as_ref(),
            self.embeddings.as_ref(),
            self.lexicon.as_ref(),
            self.removals.as_ref(),
            self.continuations.as_ref(),
        ]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect()
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub chosen_epoch: usize,
    pub checkpoint: PathBuf,
    pub history: PathBuf,
}

/// Written to `manifest.json` in each run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: Option<usize>,
    pub vocab_size: usize,
    pub runs: Vec<SeedSummary>,
    pub dev: AggregateReport,
    pub test: Option<AggregateReport>,
}

fn load_corpus(path: &Path, schema: &TaskSchema) -> Result<LabeledCorpus> {
    corpus::parse(path, schema)
}

/// Runs the configured experiment and writes its artifacts.
pub fn train_run(cfg: &RunConfig) -> Result<String> {
    let inputs = cfg
        .inputs()
        .into_iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.to_owned(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let full = load_corpus(&cfg.train_path, &cfg.task)?;
    let (train_set, dev_set) = match &cfg.dev_path {
        Some(p) => (full, load_corpus(p, &cfg.task)?),
        None => corpus::split_dev(&full, cfg.dev_fraction, cfg.split_seed)?,
    };
    let train_set = if cfg.lexicon.is_some() || cfg.continuations.is_some() {
        augment_corpus(
            &train_set,
            cfg.lexicon.as_deref(),
            cfg.removals.as_deref(),
            cfg.continuations.as_deref(),
        )?
        .into_corpus()?
    } else {
        train_set
    };
    let test_set = cfg.test_path.as_ref().map(|p| load_corpus(p, &cfg.task)).transpose()?;

    let vocab = build_vocab(&train_set, cfg.min_freq);
    let vectors = match &cfg.embeddings {
        Some(p) => PretrainedVectors::read(p, &vocab)?,
        None => PretrainedVectors::empty(cfg.model.embed_dim()),
    };
    if vectors.dim != cfg.model.embed_dim() {
        return Err(Error::Config(format!(
            "model.embed_dim: {} does not match embedding file dimension {}",
            cfg.model.embed_dim(),
            vectors.dim
        )));
    }

    let result = train::run_experiment(
        &cfg.train,
        Experiment {
            model: &cfg.model,
            vocab: &vocab,
            vectors: &vectors,
            train: &train_set,
            dev: &dev_set,
            test: test_set.as_ref(),
        },
    )?;

    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut runs = Vec::new();
    let mut details = String::new();
    for r in &result.runs {
        let dir = out.join(format!("seed-{}", r.seed));
        let ckpt = dir.join("model.ckpt");
        let hist = dir.join("history.jsonl");
        write_file(&hist, r.history.to_jsonl())?;
        Checkpoint {
            model: r.model.clone(),
            vocab: vocab.clone(),
            schema: cfg.task.clone(),
        }
        .save(&ckpt)?;
        runs.push(SeedSummary {
            seed: r.seed,
            chosen_epoch: r.history.chosen_epoch,
            checkpoint: ckpt,
            history: hist,
        });
        let (split, eval) = match &r.test {
            Some(t) => ("test", t),
            None => ("dev", &r.dev),
        };
        writeln!(
            details,
            "\nseed {} (epoch {} kept), {split} confusion matrix:\n{}",
            r.seed, r.history.chosen_epoch, eval.confusion
        )
        .expect("write to string");
    }

    let table = result.render();
    write_file(&out.join("report.txt"), format!("{table}{details}"))?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seeds: cfg.train.seeds.clone(),
        inputs,
        train_size: train_set.len(),
        dev_size: dev_set.len(),
        test_size: test_set.as_ref().map(LabeledCorpus::len),
        vocab_size: vocab.len(),
        runs,
        dev: result.dev.clone(),
        test: result.test.clone(),
    };
    write_manifest(out, &manifest)?;
    Ok(format!("{table}artifacts written to {}\n", out.display()))
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_file(&dir.join("manifest.json"), json + "\n")
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let path = if path.is_dir() {
        path.join("manifest.json")
    } else {
        path.to_owned()
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        line: e.line(),
        message: e.to_string(),
    })
}

fn eval(checkpoint: &Path, data: &Path, schema: &TaskSchema) -> Result<String> {
    let ck = Checkpoint::load(checkpoint)?;
    if ck.schema.labels != schema.labels {
        return Err(Error::Config(format!(
            "checkpoint classes {:?} do not match task {schema} classes {:?}",
            ck.schema.labels, schema.labels
        )));
    }
    let corpus = load_corpus(data, schema)?;
    let encoded = train::encode(&corpus, &ck.vocab, MAX_LEN);
    let result = train::evaluate(&ck.model, &encoded, &schema.labels)?;
    let agg = metrics::aggregate(std::slice::from_ref(&result.report))?;
    let mut out = train::render_table(&format!("{} {schema}", ck.model.kind()), &agg, None);
    out = out.replacen(" dev ", " eval", 1);
    writeln!(out, "\nper class:").expect("write to string");
    for c in &result.report.per_class {
        writeln!(
            out,
            "  {:<6} P {:.4}  R {:.4}  F1 {:.4}  support {}",
            c.class, c.precision, c.recall, c.f1, c.support
        )
        .expect("write to string");
    }
    writeln!(out, "\n{}", result.confusion).expect("write to string");
    for (i, class) in schema.labels.iter().enumerate() {
        writeln!(
            out,
            "{class}: {:.2}% ({} of {}) misclassified",
            100.0 * result.confusion.misclassification_rate(i),
            result.confusion.support(i) - result.confusion.counts[i][i],
            result.confusion.support(i)
        )
        .expect("write to string");
    }
    Ok(out)
}

fn explain(
    checkpoint: &Path,
    text: Option<String>,
    input: Option<&Path>,
    out: &Path,
    steps: usize,
    target: Option<&str>,
) -> Result<String> {
    let ck = Checkpoint::load(checkpoint)?;
    let texts: Vec<String> = match (text, input) {
        (Some(t), _) => vec![t],
        (None, Some(p)) => fs::read_to_string(p)
            .map_err(|e| Error::io(p, e))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect(),
        (None, None) => return Err(Error::Argument("need --text or --input".into())),
    };
    let target =
        match target {
            None => Target::Predicted,
            Some(t) => Target::Class(ck.schema.index_of(t).ok_or_else(|| {
                Error::Argument(format!("unknown class `{t}`; expected one of {:?}", ck.schema.labels))
            })?),
        };
    let cfg = IgConfig {
        steps,
        target,
        ..IgConfig::default()
    };
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut entries = Vec::with_capacity(texts.len());
    let mut summary = String::new();
    for (i, t) in texts.iter().enumerate() {
        let report = attrib::explain(&ck, t, &cfg, MAX_LEN)?;
        let name = format!("report-{:03}.html", i + 1);
        attrib::render_report(&report, &out.join(&name))?;
        writeln!(
            summary,
            "{name}: {} (residual {:.6})",
            report.predicted, report.residual
        )
        .expect("write to string");
        entries.push((name, report));
    }
    write_file(&out.join("index.html"), attrib::render_index(&entries))?;
    writeln!(summary, "index written to {}", out.join("index.html").display()).expect("write to string");
    Ok(summary)
}

fn report(runs: &[PathBuf], out: Option<&Path>) -> Result<String> {
    let mut table = String::new();
    for path in runs {
        let m = read_manifest(path)?;
        let label = format!("{} {}", m.config.model.kind(), m.config.task);
        table.push_str(&train::render_table(&label, &m.dev, m.test.as_ref()));
    }
    if let Some(out) = out {
        write_file(out, &table)?;
    }
    Ok(table)
}
