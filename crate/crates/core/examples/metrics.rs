//! Confusion matrix, per-class and averaged F1, and aggregation of several
//! runs into `mean (sd)` cells.
//!
//! ```text
//! cargo run --example metrics
//! ```

use hatespeech::metrics::{aggregate, confusion, scores};
use hatespeech::train::render_table;

fn main() -> hatespeech::Result<()> {
    let classes = vec!["HOF".to_string(), "NOT".to_string()];
    let labels = ["NOT", "NOT", "HOF", "HOF", "NOT", "HOF", "NOT", "NOT"];
    let runs = [
        ["NOT", "HOF", "HOF", "HOF", "NOT", "HOF", "NOT", "NOT"],
        ["NOT", "NOT", "HOF", "NOT", "NOT", "HOF", "HOF", "NOT"],
        ["NOT", "NOT", "HOF", "HOF", "NOT", "HOF", "NOT", "HOF"],
    ];

    let mut reports = Vec::new();
    for (i, preds) in runs.iter().enumerate() {
        let cm = confusion(&labels, preds, &classes)?;
        let r = scores(&cm);
        println!(
            "run {}: macro {:.4}, weighted {:.4}, micro {:.4}",
            i + 1,
            r.macro_f1,
            r.weighted_f1,
            r.micro_f1
        );
        if i == 0 {
            println!("{cm}");
            for (c, class) in classes.iter().enumerate() {
                println!("{class}: {:.2}% misclassified", 100.0 * cm.misclassification_rate(c));
            }
        }
        reports.push(r);
    }

    let agg = aggregate(&reports)?;
    println!("\n{}", render_table("example", &agg, None));
    Ok(())
}
