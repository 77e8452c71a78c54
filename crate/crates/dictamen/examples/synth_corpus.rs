//! Generate a synthetic corpus directory plus two disputed texts, for
//! exercising the CLI without the published datasets.
//!
//!     cargo run -p dictamen --example synth_corpus -- /tmp/synth 42

use std::path::PathBuf;

use dictamen::synth::{authored_text, forged_text, synth_corpus, write_corpus_dir, SynthSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synth-corpus".into()));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);

    let spec = SynthSpec::desk_scale(seed);
    let corpus = synth_corpus(&spec);
    write_corpus_dir(&corpus, &dir.join("corpus")).expect("write corpus");
    std::fs::write(dir.join("genuine.txt"), authored_text(&spec, "Albus", seed + 1))
        .expect("write genuine");
    std::fs::write(dir.join("forged.txt"), forged_text(&spec, seed + 2)).expect("write forged");

    println!(
        "wrote {} documents to {}, plus genuine.txt (by Albus) and forged.txt",
        corpus.documents.len(),
        dir.join("corpus").display()
    );
}
