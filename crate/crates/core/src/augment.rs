//! Training-set augmentation.
//!
//! Technique 1 deletes the first and last token of a sample unless either
//! one is in an offensive-word lexicon. Technique 2 appends an externally
//! generated continuation to each sample; the continuations are read from
//! a file rather than produced here. Both feed [`merge_augmented`], which
//! unions the new samples with the originals and drops exact duplicates of
//! the cleaned text.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, Sample, TaskSchema};
use crate::textprep::{self, tokenize};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OffensiveLexicon {
    words: BTreeSet<String>,
    removed_words: BTreeSet<String>,
}

impl OffensiveLexicon {
    /// Lowercases and deduplicates `terms`, then drops every removal.
    /// Blank entries are ignored.
    pub fn from_terms<I, J, S, T>(terms: I, removals: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let norm = |s: &str| s.trim().to_lowercase();
        let removed_words: BTreeSet<String> = removals
            .into_iter()
            .map(|s| norm(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        let words = terms
            .into_iter()
            .map(|s| norm(s.as_ref()))
            .filter(|s| !s.is_empty() && !removed_words.contains(s))
            .collect();
        Self { words, removed_words }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Removal list as given, for auditing.
    pub fn removed_words(&self) -> impl Iterator<Item = &str> {
        self.removed_words.iter().map(String::as_str)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reads a one-term-per-line word list and an optional removal list in the
/// same format.
pub fn load_wordlist(path: &Path, removals: Option<&Path>) -> Result<OffensiveLexicon> {
    let terms = read_lines(path)?;
    if terms.iter().all(|t| t.trim().is_empty()) {
        return Err(Error::data(path.display().to_string(), "word list is empty"));
    }
    let removals = match removals {
        Some(p) => read_lines(p)?,
        None => Vec::new(),
    };
    Ok(OffensiveLexicon::from_terms(terms, removals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Deleted,
    Generated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Deleted => "deleted",
            Provenance::Generated => "generated",
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Drops the first and last token together, or keeps the text as is when
/// either of them is in `lexicon`. The result carries the id `{id}-del` and
/// the source label; its text may be empty.
pub fn delete_boundary_tokens(sample: &Sample, lexicon: &OffensiveLexicon) -> Sample {
    let tokens = tokenize(&sample.clean);
    let guarded = match (tokens.first(), tokens.last()) {
        (Some(first), Some(last)) => lexicon.contains(first) || lexicon.contains(last),
        _ => true,
    };
    let text = if guarded {
        sample.clean.as_str().to_string()
    } else {
        let inner = tokens.iter().skip(1).take(tokens.len().saturating_sub(2));
        inner.collect::<Vec<_>>().join(" ")
    };
    Sample::new(format!("{}-del", sample.id), text, sample.label.clone())
}

/// Technique 1 over a whole corpus.
pub fn deletion_samples(corpus: &LabeledCorpus, lexicon: &OffensiveLexicon) -> Vec<Sample> {
    corpus
        .samples
        .iter()
        .map(|s| delete_boundary_tokens(s, lexicon))
        .collect()
}

/// Reads `id<TAB>continuation` lines. Blank lines are skipped; a repeated
/// id is an error.
pub fn load_continuations(path: &Path) -> Result<Vec<(String, String)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `id<TAB>text`".into()))?;
        let id = id.trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(parse_err(format!("id `{id}` repeated")));
        }
        out.push((id, text.to_string()));
    }
    Ok(out)
}

/// Technique 2: `clean(original) + " " + clean(continuation)` with id
/// `{id}-gen`. Continuations for ids not in `corpus` are ignored.
pub fn generated_samples(corpus: &LabeledCorpus, continuations: &[(String, String)]) -> Vec<Sample> {
    let by_id: HashMap<&str, &Sample> = corpus.samples.iter().map(|s| (s.id.as_str(), s)).collect();
    continuations
        .iter()
        .filter_map(|(id, cont)| {
            let source = by_id.get(id.as_str())?;
            let tail = textprep::clean(cont);
            let text = format!("{} {}", source.clean, tail);
            Some(Sample::new(format!("{id}-gen"), text, source.label.clone()))
        })
        .collect()
}

/// Corpus whose samples each record where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCorpus {
    pub schema: TaskSchema,
    pub samples: Vec<Sample>,
    pub provenance: Vec<Provenance>,
    seen: HashSet<String>,
}

impl AugmentedCorpus {
    /// Originals only, keeping the first sample for each clean text.
    pub fn from_original(original: &LabeledCorpus) -> Self {
        let mut out = Self {
            schema: original.schema.clone(),
            samples: Vec::with_capacity(original.len()),
            provenance: Vec::with_capacity(original.len()),
            seen: HashSet::with_capacity(original.len()),
        };
        for s in &original.samples {
            if out.seen.insert(s.clean.as_str().to_string()) {
                out.samples.push(s.clone());
                out.provenance.push(Provenance::Original);
            }
        }
        out
    }

    /// Adds samples whose clean text is non-empty and not yet present.
    /// Returns how many were added.
    pub fn merge(&mut self, augmented: &[Sample], provenance: Provenance) -> Result<usize> {
        let ids: HashSet<&str> = self.samples.iter().map(|s| s.id.as_str()).collect();
        let mut added = Vec::new();
        for s in augmented {
            if self.schema.index_of(&s.label).is_none() {
                return Err(Error::data(
                    &s.id,
                    format!("label `{}` not in {:?}", s.label, self.schema.labels),
                ));
            }
            if ids.contains(s.id.as_str()) {
                return Err(Error::data(&s.id, "augmented id collides with an existing sample"));
            }
        }
        for s in augmented {
            if !s.clean.is_empty() && self.seen.insert(s.clean.as_str().to_string()) {
                added.push(s.clone());
            }
        }
        let n = added.len();
        self.provenance.extend(std::iter::repeat_n(provenance, n));
        self.samples.extend(added);
        Ok(n)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.provenance.iter().filter(|&&p| p == provenance).count()
    }

    pub fn into_corpus(self) -> Result<LabeledCorpus> {
        LabeledCorpus::new(self.schema, self.samples)
    }
}

/// Union of `original` and `augmented` with exact clean-text dedup;
/// originals win collisions and empty augmented texts are dropped.
pub fn merge_augmented(
    original: &LabeledCorpus,
    augmented: &[Sample],
    provenance: Provenance,
) -> Result<AugmentedCorpus> {
    let mut out = AugmentedCorpus::from_original(original);
    out.merge(augmented, provenance)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lexicon(words: &[&str]) -> OffensiveLexicon {
        OffensiveLexicon::from_terms(words.iter(), std::iter::empty::<&str>())
    }

    fn corpus(rows: &[(&str, &str, &str)]) -> LabeledCorpus {
        let samples = rows.iter().map(|(id, t, l)| Sample::new(*id, *t, *l)).collect();
        LabeledCorpus::new(TaskSchema::custom(&["HOF", "NOT"]), samples).unwrap()
    }

    #[test]
    fn lexicon_normalizes() {
        let lex = OffensiveLexicon::from_terms(
            ["Idiot", "idiot", " jerk ", "", "african", "Angry"],
            ["AFRICAN", "angry"],
        );
        assert_eq!(lex.words().collect::<Vec<_>>(), vec!["idiot", "jerk"]);
        assert!(lex.removed_words().all(|w| !lex.contains(w)));
    }

    #[test]
    fn empty_wordlist_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("words.txt");
        fs::write(&p, "\n  \n").unwrap();
        assert!(matches!(load_wordlist(&p, None), Err(Error::Data { .. })));
    }

    #[test]
    fn deletion_examples() {
        let lex = lexicon(&["idiot"]);
        let s = Sample::new("1", "hello world today", "NOT");
        assert_eq!(delete_boundary_tokens(&s, &lex).clean.as_str(), "world");
        let s = Sample::new("2", "you are an idiot", "HOF");
        let d = delete_boundary_tokens(&s, &lex);
        assert_eq!(d.clean, s.clean);
        assert_eq!(d.label, "HOF");
        let s = Sample::new("3", "hello", "NOT");
        assert!(delete_boundary_tokens(&s, &lex).clean.is_empty());
    }

    #[test]
    fn merge_drops_duplicates_and_empties() {
        let c = corpus(&[
            ("a", "you are an idiot", "HOF"),
            ("b", "hello world today", "NOT"),
            ("c", "ok", "NOT"),
        ]);
        let lex = lexicon(&["idiot"]);
        let merged = merge_augmented(&c, &deletion_samples(&c, &lex), Provenance::Deleted).unwrap();
        let texts: Vec<&str> = merged.samples.iter().map(|s| s.clean.as_str()).collect();
        assert_eq!(texts, vec!["you are an idiot", "hello world today", "ok", "world"]);
        assert_eq!(merged.count(Provenance::Deleted), 1);
        assert_eq!(merged.provenance[3], Provenance::Deleted);
        assert_eq!(merged.samples[3].id, "b-del");
        merged.into_corpus().unwrap();
    }

    #[test]
    fn generated_example_pair() {
        let c = corpus(&[("7", "SHOOT NOW ASSHOLE", "HOF")]);
        let conts = vec![
            (
                "7".to_string(),
                "Booking was successful. Reference number is : N0LQRA43.".to_string(),
            ),
            ("missing".to_string(), "ignored".to_string()),
        ];
        let gen = generated_samples(&c, &conts);
        assert_eq!(gen.len(), 1);
        let merged = merge_augmented(&c, &gen, Provenance::Generated).unwrap();
        let texts: Vec<&str> = merged.samples.iter().map(|s| s.clean.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "shoot now asshole",
                "shoot now asshole booking was successful reference number is nlqra"
            ]
        );
        assert_eq!(merged.samples[1].id, "7-gen");
    }

    #[test]
    fn schema_mismatch_is_data_error() {
        let c = corpus(&[("a", "x y z", "HOF")]);
        let bad = [Sample::new("z", "new text", "OFF")];
        assert!(matches!(
            merge_augmented(&c, &bad, Provenance::Deleted),
            Err(Error::Data { .. })
        ));
    }

    #[test]
    fn continuations_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gen.tsv");
        fs::write(&p, "1\thello there\n\n2\tgeneral kenobi\n").unwrap();
        assert_eq!(load_continuations(&p).unwrap().len(), 2);
        fs::write(&p, "1\ta\n1\tb\n").unwrap();
        assert!(matches!(load_continuations(&p), Err(Error::Parse { line: 2, .. })));
        fs::write(&p, "no tab here\n").unwrap();
        assert!(matches!(load_continuations(&p), Err(Error::Parse { line: 1, .. })));
    }

    const WORDS: &[&str] = &[
        "idiot", "jerk", "hello", "world", "nice", "day", "you", "are", "so", "dumb",
    ];

    fn arb_corpus() -> impl Strategy<Value = LabeledCorpus> {
        prop::collection::vec((prop::collection::vec(0..WORDS.len(), 0..6), any::<bool>()), 1..30).prop_map(|rows| {
            let samples = rows
                .into_iter()
                .enumerate()
                .map(|(i, (ws, hof))| {
                    let text: Vec<&str> = ws.into_iter().map(|w| WORDS[w]).collect();
                    Sample::new(format!("s{i}"), text.join(" "), if hof { "HOF" } else { "NOT" })
                })
                .collect();
            LabeledCorpus::new(TaskSchema::custom(&["HOF", "NOT"]), samples).unwrap()
        })
    }

    proptest! {
        #[test]
        fn merged_invariants(c in arb_corpus(), conts in prop::collection::vec((0usize..30, 0..WORDS.len()), 0..30)) {
            let lex = lexicon(&["idiot", "jerk", "dumb"]);
            let mut merged = merge_augmented(&c, &deletion_samples(&c, &lex), Provenance::Deleted).unwrap();
            let conts: Vec<(String, String)> = conts
                .into_iter()
                .map(|(i, w)| (format!("s{i}"), WORDS[w].to_string()))
                .collect::<HashMap<_, _>>()
                .into_iter()
                .collect();
            merged.merge(&generated_samples(&c, &conts), Provenance::Generated).unwrap();

            let texts: Vec<&str> = merged.samples.iter().map(|s| s.clean.as_str()).collect();
            let unique: HashSet<&str> = texts.iter().copied().collect();
            prop_assert_eq!(unique.len(), texts.len());

            for s in &c.samples {
                let toks = tokenize(&s.clean);
                let guarded = toks.first().is_some_and(|t| lex.contains(t)) || toks.last().is_some_and(|t| lex.contains(t));
                if guarded {
                    prop_assert_eq!(texts.iter().filter(|&&t| t == s.clean.as_str()).count(), 1);
                }
            }

            let source: HashMap<&str, &str> = c.samples.iter().map(|s| (s.id.as_str(), s.label.as_str())).collect();
            for (s, p) in merged.samples.iter().zip(&merged.provenance) {
                if *p != Provenance::Original {
                    let src = s.id.rsplit_once('-').unwrap().0;
                    prop_assert_eq!(source[src], s.label.as_str());
                    prop_assert!(!s.clean.is_empty());
                }
            }
            prop_assert!(merged.count(Provenance::Generated) <= c.len());
        }
    }
}
