//! HOT partition, certainty bins, n-grams and seeded sampling on a few
//! labelled explanations.

use hot_annotate::reasoning::{
    certainty_bin, histogram, ngram_counts, sample_cell, venn_partition, AnalysisError, HotTriple, LabeledItem,
    NgramTable,
};

fn main() -> Result<(), AnalysisError> {
    let items: Vec<LabeledItem> = [
        (false, false, false),
        (false, false, true),
        (false, true, true),
        (true, true, true),
        (false, true, true),
        (false, false, true),
        (false, false, false),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(h, o, t))| LabeledItem::complete(format!("c{i}"), h, o, t))
    .collect();
    print!("{}", venn_partition(&items)?.to_csv());

    let cell = HotTriple::new(false, false, true);
    println!("\nsample of {}: {:?}", cell.key(), sample_cell(cell, &items, 1, 42));

    for p in [0.0, 0.2, 0.5, 0.8, 1.0] {
        println!("{p} -> {:?}", certainty_bin(p)?);
    }
    let bins = histogram(&[0.0, 0.05, 0.1, 0.8, 0.95, 1.0], 0.1)?;
    let counts: Vec<usize> = bins.iter().map(|b| b.count).collect();
    println!("histogram {counts:?}");

    let explanations = [
        "The comment does not contain any explicit derogatory language.",
        "The comment does not contain any hurtful, derogatory, or obscene language.",
        "The comment is rude and likely to make readers want to leave the discussion.",
    ];
    let table = ngram_counts(&explanations, 3, 5)?;
    println!("\ntop trigrams ({})", table.tokenizer_id);
    for e in &table.entries {
        println!("  {} {}", NgramTable::render_tuple(&e.tokens), e.count);
    }
    Ok(())
}
