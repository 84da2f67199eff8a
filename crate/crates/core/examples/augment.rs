//! Boundary-token deletion guarded by an offensive lexicon, plus ingestion
//! of generated continuations, merged with duplicate removal.
//!
//! ```text
//! cargo run --example augment
//! ```

use std::path::Path;

use hatespeech::augment::{
    deletion_samples, generated_samples, load_continuations, load_wordlist, AugmentedCorpus, Provenance,
};
use hatespeech::corpus::{parse_hasoc, Task};

fn main() -> hatespeech::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let lexicon_dir = data.join("lexicon");

    let full = load_wordlist(
        &lexicon_dir.join("wordlist.txt"),
        Some(&lexicon_dir.join("removals.txt")),
    )?;
    println!("placeholder word list: {} terms after removals", full.len());

    let lexicon = load_wordlist(
        &lexicon_dir.join("sample_terms.txt"),
        Some(&lexicon_dir.join("sample_removals.txt")),
    )?;
    let corpus = parse_hasoc(&data.join("hasoc_sample.csv"), Task::A)?;

    let mut merged = AugmentedCorpus::from_original(&corpus);
    let added = merged.merge(&deletion_samples(&corpus, &lexicon), Provenance::Deleted)?;
    println!("boundary deletion added {added} samples");
    let continuations = load_continuations(&data.join("continuations.tsv"))?;
    let added = merged.merge(&generated_samples(&corpus, &continuations), Provenance::Generated)?;
    println!("continuations added {added} samples\n");

    for (s, p) in merged.samples.iter().zip(&merged.provenance) {
        if *p != Provenance::Original {
            println!("{:<9} [{}] {}", p, s.label, s.clean);
        }
    }
    println!("\n{} originals -> {} samples", corpus.len(), merged.len());
    Ok(())
}
