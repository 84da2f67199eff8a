//! Integrated Gradients attribution and HTML reports.
//!
//! For input embeddings `x`, baseline `b` and target score `F` (a class
//! logit), the attribution of coordinate `i` is
//!
//! ```text
//! IG_i = (x_i - b_i) * (1/m) * sum_{k=1..m} dF/dx_i at b + (k/m)(x - b)
//! ```
//!
//! a right-endpoint Riemann sum. Path points are evaluated in parallel and
//! accumulated in order of `k`, so results are bit-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Mode, Tensor, Var};
use crate::corpus::TaskSchema;
use crate::embed::{PAD, UNK};
use crate::models::{argmax, effective_len, Checkpoint, ModelKind, ModelState};
use crate::textprep::{self, tokenize};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    /// The embedding of PAD at every position.
    PadSequence,
    ZeroEmbedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Predicted,
    Class(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IgConfig {
    pub steps: usize,
    pub baseline: Baseline,
    pub target: Target,
}

impl Default for IgConfig {
    fn default() -> Self {
        Self {
            steps: 50,
            baseline: Baseline::PadSequence,
            target: Target::Predicted,
        }
    }
}

/// IG of the scalar `f` between `baseline` and `x` with `steps` points.
/// `f` receives a fresh eval-mode graph and the path point as a leaf.
pub fn integrated_gradients_fn<F>(f: F, x: &Tensor, baseline: &Tensor, steps: usize) -> Result<Tensor>
where
    F: Fn(&mut Graph, Var) -> Result<Var> + Sync,
{
    if steps < 1 {
        return Err(Error::Argument("integration needs at least one step".into()));
    }
    if x.shape != baseline.shape {
        return Err(Error::Shape {
            op: "integrated_gradients",
            lhs: x.shape.clone(),
            rhs: baseline.shape.clone(),
        });
    }
    let delta: Vec<f64> = x.data.iter().zip(&baseline.data).map(|(a, b)| a - b).collect();
    let grads: Vec<Vec<f64>> = (1..=steps)
        .into_par_iter()
        .map(|k| {
            let alpha = k as f64 / steps as f64;
            let point = baseline.data.iter().zip(&delta).map(|(b, d)| b + alpha * d).collect();
            let mut g = Graph::new(Mode::Eval, 0);
            let v = g.leaf(Tensor::new(x.shape.clone(), point)?.requiring_grad());
            let out = f(&mut g, v)?;
            Ok(g.backward(out)?.take(v))
        })
        .collect::<Result<_>>()?;

    let mut sum = vec![0.0; delta.len()];
    for grad in &grads {
        for (s, v) in sum.iter_mut().zip(grad) {
            *s += v;
        }
    }
    let data = sum.iter().zip(&delta).map(|(s, d)| d * s / steps as f64).collect();
    Tensor::new(x.shape.clone(), data)
}

/// Raw attributions for one encoded sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// `[len, dim]`, one row per input position.
    pub raw: Tensor,
    pub target: usize,
    pub probabilities: Vec<f64>,
    pub f_input: f64,
    pub f_baseline: f64,
}

impl Attribution {
    /// `|sum of attributions - (F(x) - F(b))|`.
    pub fn residual(&self) -> f64 {
        (self.raw.data.iter().sum::<f64>() - (self.f_input - self.f_baseline)).abs()
    }
}

fn target_logit(model: &ModelState, x: &Tensor, target: usize) -> Result<f64> {
    let mut g = Graph::new(Mode::Eval, 0);
    let params = model.bind(&mut g, false);
    let v = g.leaf(x.clone());
    let logits = model.logits_from_embedded(&mut g, &params, v)?;
    Ok(g.value(logits).data[target])
}

/// IG over the input embeddings of `ids`. For the BiLSTM, trailing PAD is
/// dropped first (it cannot affect the output) and its rows get zero.
pub fn integrated_gradients(model: &ModelState, ids: &[usize], cfg: &IgConfig) -> Result<Attribution> {
    if cfg.steps < 1 {
        return Err(Error::Argument("integration needs at least one step".into()));
    }
    if model.mode != Mode::Eval {
        return Err(Error::State("attribution requires eval mode".into()));
    }
    let used = match model.kind() {
        ModelKind::BiLstm => effective_len(ids),
        ModelKind::Cnn => ids.len(),
    };
    if used == 0 {
        return Err(Error::Argument("nothing to attribute: the sequence is empty".into()));
    }
    let table = &model.params[0].tensor;
    let dim = table.cols();
    if let Some(&id) = ids.iter().find(|&&id| id >= table.rows()) {
        return Err(Error::Encoding {
            id,
            vocab_size: table.rows(),
        });
    }
    let row = |id: usize| &table.data[id * dim..(id + 1) * dim];
    let x = Tensor::matrix(used, dim, ids[..used].iter().flat_map(|&i| row(i).to_vec()).collect())?;
    let b = match cfg.baseline {
        Baseline::PadSequence => Tensor::matrix(used, dim, row(PAD).repeat(used))?,
        Baseline::ZeroEmbedding => Tensor::zeros(vec![used, dim]),
    };

    let probabilities = model.predict(&ids[..used])?;
    let target = match cfg.target {
        Target::Predicted => argmax(&probabilities),
        Target::Class(c) if c < model.num_classes() => c,
        Target::Class(c) => {
            return Err(Error::Argument(format!(
                "target class {c} out of range for {} classes",
                model.num_classes()
            )))
        }
    };
    let raw = integrated_gradients_fn(
        |g, v| {
            let params = model.bind(g, false);
            let logits = model.logits_from_embedded(g, &params, v)?;
            g.pick(logits, target)
        },
        &x,
        &b,
        cfg.steps,
    )?;
    let mut full = raw.data;
    full.resize(ids.len() * dim, 0.0);
    Ok(Attribution {
        raw: Tensor::matrix(ids.len(), dim, full)?,
        target,
        probabilities,
        f_input: target_logit(model, &x, target)?,
        f_baseline: target_logit(model, &b, target)?,
    })
}

/// Sums each row of `[len, dim]` attributions into one score per position.
pub fn token_attributions(raw: &Tensor) -> Vec<f64> {
    let cols = raw.cols().max(1);
    raw.data.chunks(cols).map(|r| r.iter().sum()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub text: String,
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub model: ModelKind,
    pub classes: Vec<String>,
    pub probabilities: Vec<f64>,
    pub predicted: String,
    pub target: String,
    pub f_input: f64,
    pub f_baseline: f64,
    pub residual: f64,
    pub steps: usize,
}

impl AttributionReport {
    /// Scores signed so that positive values push toward a hateful or
    /// offensive label.
    pub fn toward_hateful(&self) -> Vec<f64> {
        let flip = TaskSchema::is_benign(&self.target);
        self.scores.iter().map(|&s| if flip { -s } else { s }).collect()
    }
}

/// Cleans, encodes and attributes `text` with a checkpointed model.
pub fn explain(checkpoint: &Checkpoint, text: &str, cfg: &IgConfig, max_len: usize) -> Result<AttributionReport> {
    let clean = textprep::clean(text);
    let tokens: Vec<String> = tokenize(&clean).iter().take(max_len).map(str::to_owned).collect();
    let ids: Vec<usize> = tokens.iter().map(|t| checkpoint.vocab.get(t).unwrap_or(UNK)).collect();
    let attribution = integrated_gradients(&checkpoint.model, &ids, cfg)?;
    let classes = checkpoint.schema.labels.clone();
    let predicted = classes[argmax(&attribution.probabilities)].clone();
    Ok(AttributionReport {
        text: text.to_string(),
        scores: token_attributions(&attribution.raw),
        tokens,
        model: checkpoint.model.kind(),
        target: classes[attribution.target].clone(),
        residual: attribution.residual(),
        probabilities: attribution.probabilities,
        classes,
        predicted,
        f_input: attribution.f_input,
        f_baseline: attribution.f_baseline,
        steps: cfg.steps,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

const RED: (u8, u8, u8) = (220, 38, 38);
const GREEN: (u8, u8, u8) = (22, 163, 74);

/// Inline style for one token: red toward hateful, green toward benign,
/// opacity `|s| / max|s|`. Zero scores get no highlight.
pub fn token_style(score: f64, max_abs: f64) -> Option<String> {
    if score == 0.0 || max_abs == 0.0 {
        return None;
    }
    let (r, g, b) = if score > 0.0 { RED } else { GREEN };
    Some(format!(
        "background-color: rgba({r}, {g}, {b}, {:.3})",
        score.abs() / max_abs
    ))
}

const STYLE: &str = "body { font-family: sans-serif; max-width: 50em; margin: 2em auto; }
.tokens { font-size: 1.3em; line-height: 2em; }
.tokens span { padding: 0.1em 0.25em; border-radius: 0.2em; }
table { border-collapse: collapse; } td, th { padding: 0.2em 0.8em; text-align: left; }";

pub fn render_html(report: &AttributionReport) -> String {
    let signed = report.toward_hateful();
    let max_abs = signed.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">"
    )
    .unwrap();
    writeln!(
        w,
        "<title>Attribution: {}</title>\n<style>\n{STYLE}\n</style>\n</head>\n<body>",
        escape(&report.predicted)
    )
    .unwrap();
    writeln!(w, "<h1>{} prediction: {}</h1>", report.model, escape(&report.predicted)).unwrap();
    if report.model == ModelKind::Cnn {
        writeln!(
            w,
            "<p><em>IG over the CNN is an extension; the attribution study covers the BiLSTM.</em></p>"
        )
        .unwrap();
    }
    writeln!(w, "<p>Text: {}</p>", escape(&report.text)).unwrap();
    writeln!(w, "<p class=\"tokens\">").unwrap();
    for (tok, &s) in report.tokens.iter().zip(&signed) {
        match token_style(s, max_abs) {
            Some(style) => writeln!(w, "<span style=\"{style}\" title=\"{s:.6}\">{}</span>", escape(tok)).unwrap(),
            None => writeln!(w, "<span title=\"{s:.6}\">{}</span>", escape(tok)).unwrap(),
        }
    }
    writeln!(
        w,
        "</p>\n<p>Red pushes toward a hateful or offensive label, green toward a benign one.</p>"
    )
    .unwrap();
    writeln!(w, "<table>").unwrap();
    writeln!(w, "<tr><th>target class</th><td>{}</td></tr>", escape(&report.target)).unwrap();
    for (c, p) in report.classes.iter().zip(&report.probabilities) {
        writeln!(w, "<tr><th>P({})</th><td>{p:.4}</td></tr>", escape(c)).unwrap();
    }
    writeln!(
        w,
        "<tr><th>F(input) - F(baseline)</th><td>{:.6}</td></tr>",
        report.f_input - report.f_baseline
    )
    .unwrap();
    writeln!(
        w,
        "<tr><th>sum of attributions</th><td>{:.6}</td></tr>",
        report.scores.iter().sum::<f64>()
    )
    .unwrap();
    writeln!(
        w,
        "<tr><th>completeness residual</th><td>{:.6}</td></tr>",
        report.residual
    )
    .unwrap();
    writeln!(w, "<tr><th>integration steps</th><td>{}</td></tr>", report.steps).unwrap();
    writeln!(w, "</table>\n</body>\n</html>").unwrap();
    out
}

pub fn render_report(report: &AttributionReport, out: &Path) -> Result<()> {
    fs::write(out, render_html(report)).map_err(|e| Error::io(out, e))
}

/// Index page linking one report file per entry.
pub fn render_index(entries: &[(String, AttributionReport)]) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Attributions</title>\n<style>\n{STYLE}\n</style>\n</head>\n<body>").unwrap();
    writeln!(
        w,
        "<h1>Attributions</h1>\n<table>\n<tr><th>#</th><th>prediction</th><th>residual</th><th>text</th></tr>"
    )
    .unwrap();
    for (i, (href, r)) in entries.iter().enumerate() {
        writeln!(
            w,
            "<tr><td><a href=\"{}\">{}</a></td><td>{}</td><td>{:.6}</td><td>{}</td></tr>",
            escape(href),
            i + 1,
            escape(&r.predicted),
            r.residual,
            escape(&r.text)
        )
        .unwrap();
    }
    writeln!(w, "</table>\n</body>\n</html>").unwrap();
    out
}
