//! Stemmer output against reference vectors from an independent
//! implementation of the original algorithm.

use reqimpact_core::textsim::porter::stem;

#[test]
fn matches_reference_vectors() {
    let data = include_str!("data/porter-vectors.tsv");
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for line in data.lines().filter(|l| !l.starts_with('#')) {
        let (word, expected) = line.split_once('\t').expect("word<TAB>stem");
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: got {got}, expected {expected}"));
        }
        checked += 1;
    }
    assert!(checked > 9000);
    assert!(mismatches.is_empty(), "{} of {checked} differ:\n{}", mismatches.len(), mismatches.join("\n"));
}
