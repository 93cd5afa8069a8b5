//! Loads the bundled demo corpus and shows majority-vote labels.

use std::path::Path;

use hot_annotate::corpus::{load_corpus, majority_vote, Concept};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus.jsonl");
    let corpus = load_corpus(&path)?;
    println!("{} comments, fingerprint {}", corpus.len(), corpus.fingerprint());

    for c in Concept::ALL {
        let yes = corpus.records().iter().filter(|r| r.label(c)).count();
        println!("{:<10} {yes:>3} yes / {:>3} no", c.label(), corpus.len() - yes);
    }

    let rec = &corpus.records()[9];
    println!("\n{}: {:?}", rec.id(), rec.comment.text);
    for c in Concept::ALL {
        let votes = rec.votes.get(c);
        let marks: String = votes.iter().map(|&v| if v { 'Y' } else { '.' }).collect();
        println!("  {:<10} {marks} -> {}", c.name(), rec.label(c));
    }

    // Even rater counts have no majority.
    println!("\n4 votes: {:?}", majority_vote(&[true, true, false, false]));
    Ok(())
}
