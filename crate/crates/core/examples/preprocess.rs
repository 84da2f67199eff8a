//! Parses the bundled OLID and HASOC samples and shows what cleaning does
//! to each tweet.
//!
//! ```text
//! cargo run --example preprocess
//! ```

use std::path::Path;

use hatespeech::corpus::{parse_hasoc, parse_olid, split_dev, Task};
use hatespeech::textprep::{clean, tokenize};

fn main() -> hatespeech::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");

    let olid = parse_olid(&data.join("olid_sample.tsv"), Task::C)?;
    println!("OLID task C keeps {} labeled rows (NULL labels dropped):", olid.len());
    for s in &olid.samples {
        println!("  [{}] {}", s.label, s.clean);
    }

    let hasoc = parse_hasoc(&data.join("hasoc_sample.csv"), Task::A)?;
    println!("\nHASOC task A, raw -> clean:");
    for s in hasoc.samples.iter().take(3) {
        println!("  {}\n    -> {}", s.raw_text, s.clean);
    }

    let text = clean("Mail ME at x@y.com, see https://t.co/abc or www.site.org/page !!! #Tag");
    println!("\ntokens: {:?}", tokenize(&text).iter().collect::<Vec<_>>());

    let (train, dev) = split_dev(&hasoc, 0.25, 0)?;
    println!(
        "\nsplit {} samples into {} train / {} dev",
        hasoc.len(),
        train.len(),
        dev.len()
    );
    Ok(())
}
