//! Planted-keyword corpus with a known labeling rule.
//!
//! Texts are random sequences of background words. A text is `HOF` exactly
//! when it contains at least one word from a fixed planted list, otherwise
//! `NOT`. [`oracle_label`] applies that rule directly, so any trained model
//! can be scored against it.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, LabeledCorpus, Sample, Table, Task, TaskSchema};
use crate::textprep;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub background_words: usize,
    pub planted_words: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a text receives planted words.
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            train_size: 2000,
            test_size: 500,
            background_words: 400,
            planted_words: 30,
            min_len: 5,
            max_len: 8,
            positive_rate: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub train: LabeledCorpus,
    pub test: LabeledCorpus,
    pub planted: Vec<String>,
    pub background: Vec<String>,
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "gr", "pl",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

/// `n` distinct lowercase pseudo-words, none of which appear in `avoid`.
fn words(rng: &mut ChaCha8Rng, n: usize, avoid: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let w: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
            .collect();
        if !out.contains(&w) && !avoid.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// `HOF` if any token of the cleaned text is planted, else `NOT`.
pub fn oracle_label(text: &str, planted: &[String]) -> &'static str {
    let tokens = textprep::clean_tokens(text);
    if tokens.iter().any(|t| planted.iter().any(|p| p == t)) {
        "HOF"
    } else {
        "NOT"
    }
}

pub fn schema() -> TaskSchema {
    TaskSchema::new(Dataset::Hasoc2021, Task::A).expect("static schema")
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let planted = words(&mut rng, cfg.planted_words, &[]);
    let background = words(&mut rng, cfg.background_words, &planted);

    let mut make = |prefix: &str, n: usize| {
        let samples = (0..n)
            .map(|i| {
                let len = rng.gen_range(cfg.min_len..=cfg.max_len);
                let mut tokens: Vec<&str> = (0..len)
                    .map(|_| background.choose(&mut rng).unwrap().as_str())
                    .collect();
                if rng.gen_bool(cfg.positive_rate) {
                    for _ in 0..rng.gen_range(1..=2) {
                        let pos = rng.gen_range(0..tokens.len());
                        tokens[pos] = planted.choose(&mut rng).unwrap();
                    }
                }
                let text = tokens.join(" ");
                let label = oracle_label(&text, &planted);
                Sample::new(format!("{prefix}{i:05}"), text, label)
            })
            .collect();
        LabeledCorpus::new(schema(), samples).expect("generated ids are unique")
    };
    let train = make("train", cfg.train_size);
    let test = make("test", cfg.test_size);
    SyntheticCorpus {
        train,
        test,
        planted,
        background,
    }
}

/// Writes a corpus as a HASOC-style TSV (`_id`, `text`, `task_1`, `task_2`).
pub fn write_hasoc_tsv(corpus: &LabeledCorpus, path: &Path) -> Result<()> {
    let table = Table {
        path: path.to_owned(),
        delimiter: b'\t',
        quoting: true,
        header: ["_id", "text", "task_1", "task_2"].map(String::from).to_vec(),
        rows: corpus
            .samples
            .iter()
            .map(|s| {
                let fine = if s.label == "HOF" { "OFFN" } else { "NONE" };
                vec![s.id.clone(), s.raw_text.clone(), s.label.clone(), fine.to_string()]
            })
            .collect(),
    };
    table.write(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_hasoc;

    #[test]
    fn sizes_rule_and_balance() {
        let c = generate(&SyntheticConfig::default());
        assert_eq!((c.train.len(), c.test.len()), (2000, 500));
        assert_eq!(c.planted.len(), 30);
        for s in c.train.samples.iter().chain(&c.test.samples) {
            assert_eq!(s.label, oracle_label(&s.raw_text, &c.planted));
            assert_eq!(s.clean.as_str(), s.raw_text);
        }
        let hof = c.train.samples.iter().filter(|s| s.label == "HOF").count();
        assert!((800..1200).contains(&hof), "{hof}");
        assert!(c.background.iter().all(|w| !c.planted.contains(w)));
    }

    #[test]
    fn seeded() {
        let a = generate(&SyntheticConfig::default());
        let b = generate(&SyntheticConfig::default());
        assert_eq!(a.train, b.train);
        let c = generate(&SyntheticConfig {
            seed: 8,
            ..SyntheticConfig::default()
        });
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn tsv_round_trip() {
        let c = generate(&SyntheticConfig {
            train_size: 20,
            test_size: 5,
            ..SyntheticConfig::default()
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.tsv");
        write_hasoc_tsv(&c.train, &path).unwrap();
        assert_eq!(parse_hasoc(&path, Task::A).unwrap(), c.train);
    }
}
