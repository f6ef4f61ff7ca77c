//! Text preprocessing and pairwise similarity measures.
//!
//! Every measure returns a value in `[0, 1]`. Term-distribution measures
//! (VSM, JSD) and n-gram overlap (BLEU) work on token streams directly; the
//! greedy and optimum comparators lift a term-to-term similarity to texts.

mod assignment;
pub mod porter;

pub use assignment::max_weight_assignment;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::num;

/// Lowercase, stemmed, purely alphanumeric terms in text order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    tokens: Vec<String>,
}

impl TokenStream {
    /// Builds a stream from already-normalised terms. Empty terms and
    /// non-alphanumeric characters are dropped to keep the invariant.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens = terms
            .into_iter()
            .map(|t| t.as_ref().chars().filter(|c| c.is_alphanumeric()).collect::<String>())
            .filter(|t| !t.is_empty())
            .collect();
        TokenStream { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn term_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

/// Splits an alphanumeric word at camelCase and letter/digit boundaries:
/// `timeEvent` -> `time`, `Event`; `XMLParser2` -> `XML`, `Parser`, `2`.
pub fn split_identifier(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for w in 1..chars.len() {
        let (idx, c) = chars[w];
        let prev = chars[w - 1].1;
        let next = chars.get(w + 1).map(|&(_, c)| c);
        let boundary = (prev.is_lowercase() && c.is_uppercase())
            || (prev.is_alphabetic() && c.is_numeric())
            || (prev.is_numeric() && c.is_alphabetic())
            || (prev.is_uppercase() && c.is_uppercase() && next.is_some_and(char::is_lowercase));
        if boundary {
            parts.push(&word[start..idx]);
            start = idx;
        }
    }
    if start < word.len() {
        parts.push(&word[start..]);
    }
    parts
}

/// Non-alphanumerics become spaces, identifiers are optionally split,
/// then every word is lowercased and Porter-stemmed. Stop words stay.
pub fn preprocess(text: &str, split_identifiers: bool) -> TokenStream {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut tokens = Vec::new();
    for word in cleaned.split_whitespace() {
        let pieces = if split_identifiers {
            split_identifier(word)
        } else {
            alloc::vec![word]
        };
        for piece in pieces {
            let lower: String = piece.chars().flat_map(char::to_lowercase).collect();
            let stemmed = porter::stem(&lower);
            if !stemmed.is_empty() {
                tokens.push(stemmed);
            }
        }
    }
    TokenStream { tokens }
}

/// Document count and per-term document frequency over a collection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    doc_count: usize,
    doc_freq: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn from_documents<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenStream>,
    {
        let mut stats = CorpusStats::default();
        for doc in docs {
            stats.add_document(doc);
        }
        stats
    }

    pub fn add_document(&mut self, doc: &TokenStream) {
        self.doc_count += 1;
        for term in doc.term_counts().keys() {
            *self.doc_freq.entry(String::from(*term)).or_insert(0) += 1;
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// `ln(N / df)`, with unseen terms counted as `df = 1`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count.max(1) as f64;
        let df = self.doc_freq(term).max(1) as f64;
        num::ln(n / df).max(0.0)
    }
}

/// Cosine between raw-count tf·idf vectors.
pub fn vsm_similarity(a: &TokenStream, b: &TokenStream, stats: &CorpusStats) -> f64 {
    let wa = weighted(a, stats);
    let wb = weighted(b, stats);
    let dot: f64 = wa
        .iter()
        .filter_map(|(t, x)| wb.get(t).map(|y| x * y))
        .sum();
    let na = num::sqrt(wa.values().map(|x| x * x).sum());
    let nb = num::sqrt(wb.values().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    unit_interval(dot / (na * nb))
}

fn weighted<'a>(doc: &'a TokenStream, stats: &CorpusStats) -> BTreeMap<&'a str, f64> {
    doc.term_counts()
        .into_iter()
        .map(|(t, c)| (t, c as f64 * stats.idf(t)))
        .collect()
}

/// Clamps a score to `[0, 1]`, snapping rounding noise within `1e-12` of
/// either end (and `-0.0`) onto the end itself.
fn unit_interval(x: f64) -> f64 {
    if x < 1e-12 {
        0.0
    } else if x > 1.0 - 1e-12 {
        1.0
    } else {
        x
    }
}

/// `1 - JSD(P, Q)` over term relative frequencies, base-2 logarithms.
pub fn jsd_similarity(a: &TokenStream, b: &TokenStream) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let ca = a.term_counts();
    let cb = b.term_counts();
    let (la, lb) = (a.len() as f64, b.len() as f64);
    let mut terms: Vec<&str> = ca.keys().chain(cb.keys()).copied().collect();
    terms.sort_unstable();
    terms.dedup();
    let mut jsd = 0.0;
    for t in terms {
        let p = ca.get(t).copied().unwrap_or(0) as f64 / la;
        let q = cb.get(t).copied().unwrap_or(0) as f64 / lb;
        let m = 0.5 * (p + q);
        if p > 0.0 {
            jsd += 0.5 * p * num::log2(p / m);
        }
        if q > 0.0 {
            jsd += 0.5 * q * num::log2(q / m);
        }
    }
    unit_interval(1.0 - jsd)
}

/// Sentence-level BLEU of `candidate` against one `reference`.
///
/// Uses n-gram orders `1..=min(4, |candidate|)` with uniform weights,
/// clipped counts, a `1 / (2 |candidate|)` floor on any zero precision,
/// and the usual brevity penalty. Not symmetric.
pub fn bleu_similarity(candidate: &TokenStream, reference: &TokenStream) -> f64 {
    let c = candidate.tokens();
    let r = reference.tokens();
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let max_order = c.len().min(4);
    let floor = 1.0 / (2.0 * c.len() as f64);
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let cand = ngram_counts(c, n);
        let refc = ngram_counts(r, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &k)| k.min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if matched == 0 { floor } else { matched as f64 / total as f64 };
        log_sum += num::ln(p);
    }
    let geo = num::exp(log_sum / max_order as f64);
    let bp = if c.len() > r.len() {
        1.0
    } else {
        num::exp(1.0 - r.len() as f64 / c.len() as f64)
    };
    unit_interval(geo * bp)
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Term-to-term similarity used by the greedy and optimum comparators.
pub trait TermSimilarity {
    fn similarity(&self, a: &str, b: &str) -> f64;

    /// True when `similarity` is exactly `1` for equal terms and `0`
    /// otherwise, enabling counting shortcuts.
    fn is_exact_match(&self) -> bool {
        false
    }
}

/// Lexical identity on stemmed terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl TermSimilarity for ExactMatch {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        term_sim_exact(a, b)
    }

    fn is_exact_match(&self) -> bool {
        true
    }
}

impl<F: Fn(&str, &str) -> f64> TermSimilarity for F {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        self(a, b)
    }
}

pub fn term_sim_exact(a: &str, b: &str) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Mean over terms of `a` of their best match in `b`.
pub fn greedy_similarity(a: &TokenStream, b: &TokenStream, sim: &dyn TermSimilarity) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    if sim.is_exact_match() {
        let cb = b.term_counts();
        let hits = a.tokens().iter().filter(|t| cb.contains_key(t.as_str())).count();
        return hits as f64 / a.len() as f64;
    }
    let total: f64 = a
        .tokens()
        .iter()
        .map(|x| {
            b.tokens()
                .iter()
                .map(|y| sim.similarity(x, y))
                .fold(0.0, f64::max)
        })
        .sum();
    unit_interval(total / a.len() as f64)
}

/// Best one-to-one term pairing, normalised by the longer text.
pub fn optimum_similarity(a: &TokenStream, b: &TokenStream, sim: &dyn TermSimilarity) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let denom = a.len().max(b.len()) as f64;
    if sim.is_exact_match() {
        let ca = a.term_counts();
        let cb = b.term_counts();
        let shared: usize = ca
            .iter()
            .map(|(t, &k)| k.min(cb.get(t).copied().unwrap_or(0)))
            .sum();
        return shared as f64 / denom;
    }
    let weights: Vec<Vec<f64>> = a
        .tokens()
        .iter()
        .map(|x| b.tokens().iter().map(|y| sim.similarity(x, y)).collect())
        .collect();
    let (total, _) = max_weight_assignment(&weights);
    unit_interval(total / denom)
}

/// The similarity techniques available for requirement pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technique {
    Vsm,
    Jsd,
    Gc,
    Opc,
    Bc,
}

impl Technique {
    pub const ALL: [Technique; 5] = [Technique::Vsm, Technique::Jsd, Technique::Gc, Technique::Opc, Technique::Bc];

    pub fn code(self) -> &'static str {
        match self {
            Technique::Vsm => "VSM",
            Technique::Jsd => "JSD",
            Technique::Gc => "GC",
            Technique::Opc => "OPC",
            Technique::Bc => "BC",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Technique::ALL.into_iter().find(|t| t.code().eq_ignore_ascii_case(code))
    }

    /// Scores `query` against `other`; BLEU treats `query` as the candidate.
    pub fn score(
        self,
        query: &TokenStream,
        other: &TokenStream,
        stats: &CorpusStats,
        sim: &dyn TermSimilarity,
    ) -> f64 {
        match self {
            Technique::Vsm => vsm_similarity(query, other, stats),
            Technique::Jsd => jsd_similarity(query, other),
            Technique::Gc => greedy_similarity(query, other, sim),
            Technique::Opc => optimum_similarity(query, other, sim),
            Technique::Bc => bleu_similarity(query, other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ts(s: &str) -> TokenStream {
        TokenStream::from_terms(s.split_whitespace())
    }

    #[test]
    fn camel_case_split() {
        assert_eq!(preprocess("timeEvent", true).tokens(), ["time", "event"]);
        assert_eq!(preprocess("timeEvent", false).tokens(), ["timeev"]);
        assert_eq!(split_identifier("XMLParser2go"), vec!["XML", "Parser", "2", "go"]);
        assert_eq!(preprocess("get_user_name", true).tokens(), ["get", "user", "name"]);
    }

    #[test]
    fn preprocess_strips_punctuation_and_stems() {
        assert!(preprocess("", true).is_empty());
        assert_eq!(
            preprocess("Support encryption, over the wire!", false).tokens(),
            ["support", "encrypt", "over", "the", "wire"]
        );
    }

    #[test]
    fn vsm_identity_and_orthogonality() {
        let stats = CorpusStats::from_documents([&ts("a b"), &ts("c d"), &ts("e")]);
        assert!((vsm_similarity(&ts("a b"), &ts("a b"), &stats) - 1.0).abs() < 1e-12);
        assert_eq!(vsm_similarity(&ts("a b"), &ts("c d"), &stats), 0.0);
        assert_eq!(vsm_similarity(&ts(""), &ts(""), &stats), 0.0);
    }

    #[test]
    fn jsd_extremes() {
        assert!((jsd_similarity(&ts("a b a"), &ts("b a a")) - 1.0).abs() < 1e-12);
        assert!(jsd_similarity(&ts("a b"), &ts("c d")).abs() < 1e-12);
        assert_eq!(jsd_similarity(&ts(""), &ts("")), 0.0);
    }

    #[test]
    fn bleu_identity_and_floor() {
        assert!((bleu_similarity(&ts("a b c d e"), &ts("a b c d e")) - 1.0).abs() < 1e-12);
        assert!((bleu_similarity(&ts("a b"), &ts("a b")) - 1.0).abs() < 1e-12);
        let v = bleu_similarity(&ts("a b c d"), &ts("w x y z"));
        assert!(v <= 1.0 / 8.0 + 1e-12 && v > 0.0);
    }

    #[test]
    fn greedy_and_optimum_exact() {
        let a = ts("a b");
        let b = ts("a b c");
        assert_eq!(greedy_similarity(&a, &b, &ExactMatch), 1.0);
        assert_eq!(greedy_similarity(&a, &ts("x y"), &ExactMatch), 0.0);
        assert_eq!(optimum_similarity(&ts("a b c"), &ts("a b c"), &ExactMatch), 1.0);
        assert_eq!(optimum_similarity(&a, &ts("x y"), &ExactMatch), 0.0);
        assert!((optimum_similarity(&a, &b, &ExactMatch) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(greedy_similarity(&ts(""), &b, &ExactMatch), 0.0);
    }

    #[test]
    fn exact_shortcut_agrees_with_general_path() {
        let general = |x: &str, y: &str| term_sim_exact(x, y);
        for (a, b) in [("a a b", "a b b c"), ("x y z", "z z"), ("p q", "q p p q")] {
            let (a, b) = (ts(a), ts(b));
            assert!((greedy_similarity(&a, &b, &ExactMatch) - greedy_similarity(&a, &b, &general)).abs() < 1e-12);
            assert!((optimum_similarity(&a, &b, &ExactMatch) - optimum_similarity(&a, &b, &general)).abs() < 1e-12);
        }
    }

    #[test]
    fn term_sim_exact_values() {
        assert_eq!(term_sim_exact("run", "run"), 1.0);
        assert_eq!(term_sim_exact("run", "walk"), 0.0);
    }

    #[test]
    fn technique_codes_round_trip() {
        for t in Technique::ALL {
            assert_eq!(Technique::from_code(t.code()), Some(t));
        }
        assert_eq!(Technique::from_code("cmc"), None);
    }
}
