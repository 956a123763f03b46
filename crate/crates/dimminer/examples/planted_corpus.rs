//! Writes a synthetic two-factor corpus (topic and sentiment) and a lexicon
//! of its sentiment words:
//!
//! ```text
//! cargo run --example planted_corpus -- OUT_DIR [SEED]
//! ```

use std::path::PathBuf;

use dimminer::planted::{generate, PlantedSpec};
use dimminer::store::write_jsonl;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "planted".to_string()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let corpus = generate(&PlantedSpec { seed, ..Default::default() });
    std::fs::create_dir_all(&out)?;
    write_jsonl(&out.join("docs.jsonl"), &corpus.docs)?;
    let mut lexicon = String::new();
    for w in &corpus.positive_words {
        lexicon.push_str(&format!("{w}\tpositive\n"));
    }
    for w in &corpus.negative_words {
        lexicon.push_str(&format!("{w}\tnegative\n"));
    }
    std::fs::write(out.join("lexicon.tsv"), lexicon)?;
    println!("wrote {} documents to {}", corpus.docs.len(), out.display());
    Ok(())
}
