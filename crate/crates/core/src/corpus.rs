//! OLID and HASOC 2021 dataset parsing, label schemas and dev splits.
//!
//! OLID files are tab-separated with an `id tweet subtask_a subtask_b
//! subtask_c` header and no field quoting. HASOC files are comma- or
//! tab-separated (detected from the header line) with `_id,text,task_1,task_2`
//! columns and standard double-quote quoting.
//!
//! Rows whose requested label is empty (`""`, `NULL`, `nan`) are dropped.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::textprep::{self, CleanText};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dataset {
    Olid,
    Hasoc2021,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    A,
    B,
    C,
}

/// Dataset + task pair together with its ordered label set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSchema {
    pub dataset: Dataset,
    pub task: Task,
    pub labels: Vec<String>,
}

impl TaskSchema {
    pub fn new(dataset: Dataset, task: Task) -> Result<Self> {
        let labels: &[&str] = match (dataset, task) {
            (Dataset::Olid, Task::A) => &["OFF", "NOT"],
            (Dataset::Olid, Task::B) => &["TIN", "UNT"],
            (Dataset::Olid, Task::C) => &["IND", "GRP", "OTH"],
            (Dataset::Hasoc2021, Task::A) => &["HOF", "NOT"],
            (Dataset::Hasoc2021, Task::B) => &["HATE", "OFFN", "PRFN", "NONE"],
            (Dataset::Hasoc2021, Task::C) => return Err(Error::Argument("HASOC 2021 has no task C".into())),
        };
        Ok(Self {
            dataset,
            task,
            labels: labels.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Schema with an arbitrary label set, for synthetic data.
    pub fn custom(labels: &[&str]) -> Self {
        Self {
            dataset: Dataset::Hasoc2021,
            task: Task::A,
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Labels that mark the absence of offensive content.
    pub fn is_benign(label: &str) -> bool {
        matches!(label, "NOT" | "NONE")
    }

    /// Column holding this task's label in the dataset's native file.
    pub fn label_column(&self) -> &'static str {
        match (self.dataset, self.task) {
            (Dataset::Olid, Task::A) => "subtask_a",
            (Dataset::Olid, Task::B) => "subtask_b",
            (Dataset::Olid, Task::C) => "subtask_c",
            (Dataset::Hasoc2021, Task::A) => "task_1",
            (Dataset::Hasoc2021, _) => "task_2",
        }
    }

    pub fn id_column(&self) -> &'static str {
        match self.dataset {
            Dataset::Olid => "id",
            Dataset::Hasoc2021 => "_id",
        }
    }

    pub fn text_column(&self) -> &'static str {
        match self.dataset {
            Dataset::Olid => "tweet",
            Dataset::Hasoc2021 => "text",
        }
    }
}

/// Task selector in `dataset-task` form: `olid-a`, `olid-b`, `olid-c`,
/// `hasoc-a`, `hasoc-b`.
impl FromStr for TaskSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (ds, task) = s
            .to_ascii_lowercase()
            .split_once('-')
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .ok_or_else(|| Error::Argument(format!("task selector `{s}` is not dataset-task")))?;
        let dataset = match ds.as_str() {
            "olid" => Dataset::Olid,
            "hasoc" | "hasoc2021" => Dataset::Hasoc2021,
            _ => return Err(Error::Argument(format!("unknown dataset `{ds}`"))),
        };
        let task = match task.as_str() {
            "a" => Task::A,
            "b" => Task::B,
            "c" => Task::C,
            _ => return Err(Error::Argument(format!("unknown task `{task}`"))),
        };
        TaskSchema::new(dataset, task)
    }
}

impl fmt::Display for TaskSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ds = match self.dataset {
            Dataset::Olid => "olid",
            Dataset::Hasoc2021 => "hasoc",
        };
        let task = match self.task {
            Task::A => "a",
            Task::B => "b",
            Task::C => "c",
        };
        write!(f, "{ds}-{task}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub raw_text: String,
    pub clean: CleanText,
    pub label: String,
}

impl Sample {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, label: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        Self {
            id: id.into(),
            clean: textprep::clean(&raw_text),
            raw_text,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub schema: TaskSchema,
    pub samples: Vec<Sample>,
}

impl LabeledCorpus {
    /// Builds a corpus, checking id uniqueness and label membership.
    pub fn new(schema: TaskSchema, samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.id.is_empty() {
                return Err(Error::data("<empty>", "sample id is empty"));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::data(&s.id, "duplicate sample id"));
            }
            if schema.index_of(&s.label).is_none() {
                return Err(Error::data(
                    &s.id,
                    format!("label `{}` not in {:?}", s.label, schema.labels),
                ));
            }
        }
        Ok(Self { schema, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Label indices in sample order.
    pub fn label_indices(&self) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| self.schema.index_of(&s.label).expect("label checked on construction"))
            .collect()
    }
}

/// A delimited file held as a header plus string rows.
///
/// Used by the parsers and by commands that rewrite a corpus file while
/// keeping its schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub delimiter: u8,
    pub quoting: bool,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path, dataset: Dataset) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: format!("not UTF-8: {e}"),
        })?;
        let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

        let (delimiter, quoting) = match dataset {
            Dataset::Olid => (b'\t', false),
            Dataset::Hasoc2021 => {
                let first = text.lines().next().unwrap_or("");
                if first.contains('\t') {
                    (b'\t', true)
                } else {
                    (b',', true)
                }
            }
        };

        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .quoting(quoting)
            .flexible(true)
            .has_headers(false)
            .from_reader(text.as_bytes());

        let mut header = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: e.position().map(|p| p.line() as usize).unwrap_or(i + 1),
                message: e.to_string(),
            })?;
            let fields: Vec<String> = record.iter().map(str::to_owned).collect();
            if i == 0 {
                header = fields.into_iter().map(|h| h.trim().to_string()).collect();
            } else if fields.iter().any(|f| !f.trim().is_empty()) {
                rows.push(fields);
            }
        }

        Ok(Self {
            path: path.to_owned(),
            delimiter,
            quoting,
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: self.path.clone(),
                column: name.to_string(),
            })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .delimiter(self.delimiter)
            .quote_style(if self.quoting {
                csv::QuoteStyle::Necessary
            } else {
                csv::QuoteStyle::Never
            })
            .flexible(true)
            .from_path(path)
            .map_err(|e| csv_io(path, e))?;
        writer.write_record(&self.header).map_err(|e| csv_io(path, e))?;
        for row in &self.rows {
            writer.write_record(row).map_err(|e| csv_io(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn is_missing(label: &str) -> bool {
    let l = label.trim();
    l.is_empty() || l.eq_ignore_ascii_case("null") || l.eq_ignore_ascii_case("nan")
}

/// Extracts one task's labeled corpus from a parsed table.
pub fn corpus_from_table(table: &Table, schema: TaskSchema) -> Result<LabeledCorpus> {
    let id_col = table.column(schema.id_column())?;
    let text_col = table.column(schema.text_column())?;
    let label_col = table.column(schema.label_column())?;

    let mut samples = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let get = |c: usize| row.get(c).map(String::as_str).unwrap_or("");
        let id = get(id_col).trim();
        let row_ref = if id.is_empty() {
            format!("line {}", i + 2)
        } else {
            id.to_string()
        };
        let label = get(label_col).trim();
        if is_missing(label) {
            continue;
        }
        if id.is_empty() {
            return Err(Error::data(row_ref, "empty id"));
        }
        if schema.index_of(label).is_none() {
            return Err(Error::data(row_ref, format!("unknown label `{label}` for {schema}")));
        }
        let text = get(text_col);
        if text.trim().is_empty() {
            return Err(Error::data(row_ref, "empty text"));
        }
        samples.push(Sample::new(id, text, label));
    }
    LabeledCorpus::new(schema, samples)
}

/// Parses an OLID tab-separated file for `task`.
pub fn parse_olid(path: &Path, task: Task) -> Result<LabeledCorpus> {
    let schema = TaskSchema::new(Dataset::Olid, task)?;
    let table = Table::read(path, Dataset::Olid)?;
    corpus_from_table(&table, schema)
}

/// Parses a HASOC 2021 file for task A (`task_1`) or B (`task_2`).
pub fn parse_hasoc(path: &Path, task: Task) -> Result<LabeledCorpus> {
    let schema = TaskSchema::new(Dataset::Hasoc2021, task)?;
    let table = Table::read(path, Dataset::Hasoc2021)?;
    corpus_from_table(&table, schema)
}

/// Dispatches on `schema.dataset`.
pub fn parse(path: &Path, schema: &TaskSchema) -> Result<LabeledCorpus> {
    match schema.dataset {
        Dataset::Olid => parse_olid(path, schema.task),
        Dataset::Hasoc2021 => parse_hasoc(path, schema.task),
    }
}

/// Uniform random train/dev split; `dev` holds `round(fraction * len)`
/// samples. Both halves keep the input order.
pub fn split_dev(corpus: &LabeledCorpus, fraction: f64, seed: u64) -> Result<(LabeledCorpus, LabeledCorpus)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!(
            "dev fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if corpus.is_empty() {
        return Err(Error::Argument("cannot split an empty corpus".into()));
    }
    let n = corpus.len();
    let n_dev = (fraction * n as f64).round() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_dev = vec![false; n];
    for &i in &order[..n_dev] {
        in_dev[i] = true;
    }

    let (mut train, mut dev) = (Vec::with_capacity(n - n_dev), Vec::with_capacity(n_dev));
    for (s, dev_side) in corpus.samples.iter().zip(in_dev) {
        if dev_side {
            dev.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((
        LabeledCorpus {
            schema: corpus.schema.clone(),
            samples: train,
        },
        LabeledCorpus {
            schema: corpus.schema.clone(),
            samples: dev,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn toy(n: usize) -> LabeledCorpus {
        let schema = TaskSchema::new(Dataset::Hasoc2021, Task::A).unwrap();
        let samples = (0..n)
            .map(|i| {
                Sample::new(
                    format!("s{i}"),
                    format!("text {i} word"),
                    if i % 3 == 0 { "HOF" } else { "NOT" },
                )
            })
            .collect();
        LabeledCorpus::new(schema, samples).unwrap()
    }

    #[test]
    fn olid_direct_mapping() {
        let f = write_tmp("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n1\t@USER you are \"great\"\tOFF\tTIN\tIND\n");
        let c = parse_olid(f.path(), Task::A).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.samples[0].label, "OFF");
        assert_eq!(c.samples[0].raw_text, "@USER you are \"great\"");
    }

    #[test]
    fn olid_drops_null_task_c() {
        let f = write_tmp(
            "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n1\thello\tNOT\tNULL\tNULL\n2\tworld\tOFF\tTIN\tGRP\n",
        );
        let c = parse_olid(f.path(), Task::C).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.samples[0].id, "2");
    }

    #[test]
    fn olid_hundred_rows_seven_nulls() {
        let mut s = String::from("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n");
        let nulls = [3, 17, 29, 41, 58, 66, 90];
        for i in 0..100 {
            let c = if nulls.contains(&i) {
                "NULL"
            } else {
                ["IND", "GRP", "OTH"][i % 3]
            };
            s.push_str(&format!("{i}\ttweet number {i}\tOFF\tTIN\t{c}\n"));
        }
        let f = write_tmp(&s);
        assert_eq!(parse_olid(f.path(), Task::C).unwrap().len(), 93);
        assert_eq!(parse_olid(f.path(), Task::A).unwrap().len(), 100);
    }

    #[test]
    fn hasoc_comma_with_quotes() {
        let f = write_tmp(
            "_id,text,task_1,task_2\n\
             60c5d6bf5659ea5e55df0242,miya four creeps into every thought i have what the fuck,NOT,NONE\n\
             x2,\"quoted, with comma and \"\"escaped\"\" quotes\",HOF,PRFN\n",
        );
        let a = parse_hasoc(f.path(), Task::A).unwrap();
        assert_eq!(a.samples[0].label, "NOT");
        assert_eq!(a.samples[1].raw_text, "quoted, with comma and \"escaped\" quotes");
        let b = parse_hasoc(f.path(), Task::B).unwrap();
        assert_eq!(b.samples[0].label, "NONE");
        assert_eq!(b.samples[1].label, "PRFN");
    }

    #[test]
    fn hasoc_tab_detected() {
        let f = write_tmp("_id\ttext\ttask_1\ttask_2\na\tsome, text\tHOF\tHATE\n");
        let c = parse_hasoc(f.path(), Task::B).unwrap();
        assert_eq!(c.samples[0].raw_text, "some, text");
        assert_eq!(c.samples[0].label, "HATE");
    }

    #[test]
    fn header_only_is_empty() {
        let f = write_tmp("_id,text,task_1,task_2\n");
        assert!(parse_hasoc(f.path(), Task::A).unwrap().is_empty());
    }

    #[test]
    fn errors() {
        let missing = parse_olid(Path::new("/nonexistent/olid.tsv"), Task::A).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));

        let f = write_tmp("id\ttweet\tsubtask_a\n1\thi\tOFF\n");
        match parse_olid(f.path(), Task::B).unwrap_err() {
            Error::MissingColumn { column, .. } => assert_eq!(column, "subtask_b"),
            e => panic!("unexpected {e}"),
        }

        let f = write_tmp("_id,text,task_1,task_2\nrow9,hi,MAYBE,NONE\n");
        match parse_hasoc(f.path(), Task::A).unwrap_err() {
            Error::Data { row, .. } => assert_eq!(row, "row9"),
            e => panic!("unexpected {e}"),
        }

        let f = write_tmp("_id,text,task_1,task_2\nd,hi,NOT,NONE\nd,there,HOF,HATE\n");
        assert!(matches!(
            parse_hasoc(f.path(), Task::A).unwrap_err(),
            Error::Data { .. }
        ));

        assert!(TaskSchema::new(Dataset::Hasoc2021, Task::C).is_err());
    }

    #[test]
    fn selector_round_trip() {
        for s in ["olid-a", "olid-b", "olid-c", "hasoc-a", "hasoc-b"] {
            assert_eq!(s.parse::<TaskSchema>().unwrap().to_string(), s);
        }
        assert!("hasoc-c".parse::<TaskSchema>().is_err());
        assert!("nope".parse::<TaskSchema>().is_err());
    }

    #[test]
    fn split_sizes() {
        let (train, dev) = split_dev(&toy(3843), 0.10, 7).unwrap();
        assert_eq!((train.len(), dev.len()), (3459, 384));
        let (train, dev) = split_dev(&toy(10), 0.10, 7).unwrap();
        assert_eq!((train.len(), dev.len()), (9, 1));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(split_dev(&toy(10), f, 0).is_err());
        }
    }

    proptest! {
        #[test]
        fn split_partitions(n in 1usize..300, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let c = toy(n);
            let (train, dev) = split_dev(&c, frac, seed).unwrap();
            let (train2, dev2) = split_dev(&c, frac, seed).unwrap();
            prop_assert_eq!(&train, &train2);
            prop_assert_eq!(&dev, &dev2);

            let t: HashSet<_> = train.samples.iter().map(|s| s.id.clone()).collect();
            let d: HashSet<_> = dev.samples.iter().map(|s| s.id.clone()).collect();
            prop_assert!(t.is_disjoint(&d));
            let all: HashSet<_> = c.samples.iter().map(|s| s.id.clone()).collect();
            prop_assert_eq!(t.union(&d).cloned().collect::<HashSet<_>>(), all);
            prop_assert_eq!(dev.len(), (frac * n as f64).round() as usize);
        }

        #[test]
        fn row_drop_monotone(labels in prop::collection::vec(prop::option::of(0usize..3), 0..60)) {
            let mut s = String::from("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n");
            for (i, l) in labels.iter().enumerate() {
                let c = l.map(|k| ["IND", "GRP", "OTH"][k]).unwrap_or("NULL");
                s.push_str(&format!("{i}\tt {i}\tOFF\tTIN\t{c}\n"));
            }
            let f = write_tmp(&s);
            let c = parse_olid(f.path(), Task::C).unwrap();
            prop_assert!(c.len() <= labels.len());
            prop_assert_eq!(c.len() == labels.len(), labels.iter().all(Option::is_some));
            for sample in &c.samples {
                prop_assert!(c.schema.index_of(&sample.label).is_some());
            }
        }
    }
}
