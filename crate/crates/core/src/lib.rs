//! Offensive and hate speech classification.
//!
//! The crate covers the whole experimental pipeline for tweet-level
//! offensive-language tasks (OLID subtasks A/B/C and HASOC 2021 tasks A/B):
//!
//! - [`corpus`]: dataset parsing, label schemas, dev splits
//! - [`textprep`]: tweet cleaning and tokenization
//! - [`embed`]: vocabulary construction and GloVe-format vectors
//! - [`autodiff`]: a small define-by-run reverse-mode tensor engine
//! - [`models`]: BiLSTM and CNN classifiers plus checkpoint files
//! - [`train`]: Adam/SGD training with linear warmup, best-epoch selection, multi-seed runs
//! - [`augment`]: boundary-token deletion and generated-continuation merging
//! - [`metrics`]: confusion matrices, micro/macro/weighted F1, mean (sd) aggregation
//! - [`attrib`]: Integrated Gradients and HTML attribution reports
//! - [`synthetic`]: a planted-keyword corpus generator for smoke tests
//! - [`cli`]: the `hatespeech` command-line driver
//!
//! Runnable walkthroughs for each capability live in `examples/`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attrib;
pub mod augment;
pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod embed;
mod error;
pub mod metrics;
pub mod models;
pub mod synthetic;
pub mod textprep;
pub mod train;

pub use error::{Error, Result};
