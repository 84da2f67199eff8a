//! Confusion matrices, precision/recall/F1 and multi-run aggregation.
//!
//! Every ratio with a zero denominator is defined as 0. Macro F1 is the
//! unweighted mean of per-class F1, weighted F1 the support-weighted mean,
//! and micro F1 is computed from pooled counts (equal to accuracy for
//! single-label data).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Counts with rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Fraction of a class's true samples predicted as something else.
    pub fn misclassification_rate(&self, class: usize) -> f64 {
        let support = self.support(class);
        if support == 0 {
            return 0.0;
        }
        (support - self.counts[class][class]) as f64 / support as f64
    }

    /// Builds from class indices instead of labels.
    pub fn from_indices(labels: &[usize], preds: &[usize], classes: &[String]) -> Result<Self> {
        if labels.len() != preds.len() {
            return Err(Error::Argument(format!(
                "{} labels vs {} predictions",
                labels.len(),
                preds.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Argument("confusion matrix of zero samples".into()));
        }
        let k = classes.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in labels.iter().zip(preds) {
            if t >= k || p >= k {
                return Err(Error::Argument(format!("class index {} outside {k} classes", t.max(p))));
            }
            counts[t][p] += 1;
        }
        Ok(Self {
            classes: classes.to_vec(),
            counts,
        })
    }
}

impl fmt::Display for ConfusionMatrix {
    /// Aligned integer grid; rows are true labels, columns predictions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .classes
            .iter()
            .map(String::len)
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1)
            .max(4);
        write!(f, "{:>width$}", "true\\pred")?;
        for c in &self.classes {
            write!(f, " {c:>width$}")?;
        }
        writeln!(f)?;
        for (c, row) in self.classes.iter().zip(&self.counts) {
            write!(f, "{c:>w$}", w = width.max(9))?;
            for n in row {
                write!(f, " {n:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Counts `(label, prediction)` pairs over an ordered class list.
pub fn confusion<S: AsRef<str>>(labels: &[S], preds: &[S], classes: &[String]) -> Result<ConfusionMatrix> {
    let index = |s: &S| -> Result<usize> {
        classes
            .iter()
            .position(|c| c == s.as_ref())
            .ok_or_else(|| Error::Argument(format!("unknown label `{}`", s.as_ref())))
    };
    let l = labels.iter().map(index).collect::<Result<Vec<_>>>()?;
    let p = preds.iter().map(index).collect::<Result<Vec<_>>>()?;
    ConfusionMatrix::from_indices(&l, &p, classes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_class: Vec<ClassScores>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn scores(cm: &ConfusionMatrix) -> ScoreReport {
    let k = cm.classes.len();
    let total = cm.total();
    let mut per_class = Vec::with_capacity(k);
    let mut correct = 0;
    for c in 0..k {
        let tp = cm.counts[c][c];
        let predicted: u64 = (0..k).map(|r| cm.counts[r][c]).sum();
        let support = cm.support(c);
        correct += tp;
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        per_class.push(ClassScores {
            class: cm.classes[c].clone(),
            precision,
            recall,
            f1: f1(precision, recall),
            support,
        });
    }

    let macro_f1 = if k == 0 {
        0.0
    } else {
        per_class.iter().map(|s| s.f1).sum::<f64>() / k as f64
    };
    let weighted_f1 = if total == 0 {
        0.0
    } else {
        per_class.iter().map(|s| s.f1 * s.support as f64).sum::<f64>() / total as f64
    };
    // pooled: every miss is one FP and one FN
    let micro_p = ratio(correct, total);
    let micro_r = ratio(correct, total);

    ScoreReport {
        per_class,
        micro_f1: f1(micro_p, micro_r),
        macro_f1,
        weighted_f1,
        accuracy: ratio(correct, total),
    }
}

/// Mean and population standard deviation of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, sd: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, sd: var.sqrt() }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            sd: self.sd * factor,
        }
    }

    /// `mean (sd)` with two decimals; a zero sd prints as `0`.
    pub fn render(&self) -> String {
        let sd = format!("{:.2}", self.sd);
        let sd = if sd == "0.00" { "0".to_string() } else { sd };
        format!("{:.2} ({sd})", self.mean)
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub micro_f1: MeanSd,
    pub macro_f1: MeanSd,
    pub weighted_f1: MeanSd,
    pub accuracy: MeanSd,
    pub per_class_f1: Vec<(String, MeanSd)>,
}

/// Per-metric mean and population sd over runs.
pub fn aggregate(reports: &[ScoreReport]) -> Result<AggregateReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Argument("aggregate of zero reports".into()))?;
    let collect = |f: &dyn Fn(&ScoreReport) -> f64| MeanSd::of(&reports.iter().map(f).collect::<Vec<_>>());
    let per_class_f1 = first
        .per_class
        .iter()
        .enumerate()
        .map(|(i, c)| (c.class.clone(), collect(&|r| r.per_class[i].f1)))
        .collect();
    Ok(AggregateReport {
        runs: reports.len(),
        micro_f1: collect(&|r| r.micro_f1),
        macro_f1: collect(&|r| r.macro_f1),
        weighted_f1: collect(&|r| r.weighted_f1),
        accuracy: collect(&|r| r.accuracy),
        per_class_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn classes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_counted_matrix() {
        let c = classes(&["NOT", "HOF"]);
        let cm = confusion(&["NOT", "NOT", "HOF", "HOF"], &["NOT", "HOF", "HOF", "HOF"], &c).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 2]]);

        // NOT: P = 1/1, R = 1/2, F1 = 2/3.  HOF: P = 2/3, R = 1, F1 = 0.8.
        // macro = weighted (supports 2/2) = (2/3 + 0.8)/2 = 0.7333..., micro = 3/4.
        let s = scores(&cm);
        assert!((s.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.per_class[1].f1 - 0.8).abs() < 1e-12);
        assert!((s.macro_f1 - 0.733333).abs() < 1e-4);
        assert!((s.weighted_f1 - 0.733333).abs() < 1e-4);
        assert!((s.micro_f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let c = classes(&["A", "B", "C"]);
        let y = ["A", "B", "C", "C"];
        let cm = confusion(&y, &y, &c).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let s = scores(&cm);
        assert_eq!((s.macro_f1, s.weighted_f1, s.micro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_support_class() {
        let c = classes(&["A", "B", "C"]);
        let cm = confusion(&["A", "B"], &["A", "B"], &c).unwrap();
        let s = scores(&cm);
        assert_eq!(s.per_class[2].f1, 0.0);
        assert!((s.macro_f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.weighted_f1, 1.0);
    }

    #[test]
    fn not_row_misclassification() {
        let cm = ConfusionMatrix {
            classes: classes(&["NOT", "HOF"]),
            counts: vec![vec![323, 160], vec![50, 748]],
        };
        assert!((cm.misclassification_rate(0) * 100.0 - 33.13).abs() < 0.005);
    }

    #[test]
    fn argument_errors() {
        let c = classes(&["A", "B"]);
        assert!(confusion(&["A"], &["A", "B"], &c).is_err());
        assert!(confusion::<&str>(&[], &[], &c).is_err());
        assert!(confusion(&["A"], &["Z"], &c).is_err());
    }

    #[test]
    fn aggregation() {
        let m = MeanSd::of(&[0.78]);
        assert_eq!((m.mean, m.sd), (0.78, 0.0));
        let m = MeanSd::of(&[0.78, 0.80]);
        assert!((m.mean - 0.79).abs() < 1e-12 && (m.sd - 0.01).abs() < 1e-12);
        let m = MeanSd::of(&[78.0, 79.0, 80.0]);
        assert!((m.mean - 79.0).abs() < 1e-12 && (m.sd - 0.816497).abs() < 1e-6);
        assert_eq!(MeanSd { mean: 77.19, sd: 0.0 }.render(), "77.19 (0)");
        assert_eq!(
            MeanSd {
                mean: 83.894,
                sd: 0.571
            }
            .render(),
            "83.89 (0.57)"
        );
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn grid_rendering() {
        let cm = ConfusionMatrix {
            classes: classes(&["NOT", "HOF"]),
            counts: vec![vec![323, 160], vec![50, 748]],
        };
        let text = cm.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].trim_start().starts_with("NOT"));
        assert!(lines[1].ends_with("160"));
        assert_eq!(lines[1].len(), lines[2].len());
    }

    fn pairs() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..5).prop_flat_map(|k| (Just(k), prop::collection::vec((0..k, 0..k), 1..200)))
    }

    proptest! {
        #[test]
        fn permutation_invariant((k, mut data) in pairs(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
            let (l, p): (Vec<_>, Vec<_>) = data.iter().cloned().unzip();
            let a = scores(&ConfusionMatrix::from_indices(&l, &p, &names).unwrap());
            data.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (l, p): (Vec<_>, Vec<_>) = data.iter().cloned().unzip();
            let b = scores(&ConfusionMatrix::from_indices(&l, &p, &names).unwrap());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn micro_is_accuracy((k, data) in pairs()) {
            let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
            let (l, p): (Vec<_>, Vec<_>) = data.iter().cloned().unzip();
            let s = scores(&ConfusionMatrix::from_indices(&l, &p, &names).unwrap());
            let acc = data.iter().filter(|(a, b)| a == b).count() as f64 / data.len() as f64;
            prop_assert!((s.micro_f1 - acc).abs() < 1e-12);
            prop_assert!([s.micro_f1, s.macro_f1, s.weighted_f1].iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn macro_equals_weighted_with_equal_support(k in 2usize..5, per in 1usize..20, preds in prop::collection::vec(0usize..4, 80)) {
            let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
            let labels: Vec<usize> = (0..k * per).map(|i| i % k).collect();
            let p: Vec<usize> = labels.iter().enumerate().map(|(i, _)| preds[i % preds.len()] % k).collect();
            let s = scores(&ConfusionMatrix::from_indices(&labels, &p, &names).unwrap());
            prop_assert!((s.macro_f1 - s.weighted_f1).abs() < 1e-12);
        }
    }
}
