//! Economics-term sentence filter.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// A small built-in term list; real runs load a user-supplied lexicon file.
pub const DEFAULT_LEXICON: &[&str] = &[
    "inflation",
    "unemployment",
    "employment",
    "labor market",
    "interest rate",
    "federal funds",
    "funds rate",
    "output",
    "growth",
    "gdp",
    "prices",
    "wages",
    "productivity",
    "recession",
    "monetary policy",
    "tightening",
    "easing",
    "accommodation",
    "demand",
    "supply",
    "credit",
    "yield",
    "treasury",
    "dollar",
    "deficit",
    "consumption",
    "investment",
    "housing",
    "expectations",
];

/// Case-insensitive set of (possibly multi-word) terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    // Each term as its lowercase word sequence.
    terms: BTreeSet<Vec<String>>,
}

impl Lexicon {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<Vec<String>> = terms
            .into_iter()
            .map(|t| words(t.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::Config("lexicon is empty".into()));
        }
        Ok(Self { terms })
    }

    pub fn default_terms() -> Self {
        Self::new(DEFAULT_LEXICON).expect("default lexicon is nonempty")
    }

    /// Reads a newline-delimited term file; `#` starts a comment line.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether any term occurs in `sentence` on word boundaries.
    pub fn matches(&self, sentence: &str) -> bool {
        let tokens = words(sentence);
        self.terms
            .iter()
            .any(|term| tokens.windows(term.len()).any(|w| w == term.as_slice()))
    }

    /// The terms, each rejoined with single spaces.
    pub fn terms(&self) -> impl Iterator<Item = String> + '_ {
        self.terms.iter().map(|t| t.join(" "))
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Keeps the sentences containing at least one lexicon term, in order.
pub fn filter_econ_sentences<S: AsRef<str>>(sentences: &[S], lexicon: &Lexicon) -> Vec<String> {
    sentences
        .iter()
        .map(AsRef::as_ref)
        .filter(|s| lexicon.matches(s))
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent check: scan the lowercased text for each term as a raw
    /// substring and accept hits bounded by non-alphanumeric characters.
    /// Terms here are single words.
    fn naive_contains(sentence: &str, terms: &[&str]) -> bool {
        let lower = sentence.to_lowercase();
        let chars: Vec<char> = lower.chars().collect();
        terms.iter().any(|t| {
            let t: Vec<char> = t.to_lowercase().chars().collect();
            (0..chars.len().saturating_sub(t.len() - 1)).any(|i| {
                chars[i..].starts_with(&t)
                    && (i == 0 || !chars[i - 1].is_alphanumeric())
                    && chars.get(i + t.len()).is_none_or(|c| !c.is_alphanumeric())
            })
        })
    }

    #[test]
    fn keeps_only_econ_sentences() {
        let lex = Lexicon::new(["inflation"]).unwrap();
        let out = filter_econ_sentences(&["Thank you, Chair.", "Inflation is rising."], &lex);
        assert_eq!(out, vec!["Inflation is rising."]);
    }

    #[test]
    fn lexicon_free_input_yields_nothing() {
        let lex = Lexicon::new(["inflation"]).unwrap();
        assert!(filter_econ_sentences(&["Good morning.", "Next slide."], &lex).is_empty());
    }

    #[test]
    fn empty_lexicon_is_config_error() {
        assert!(matches!(Lexicon::new(Vec::<String>::new()), Err(Error::Config(_))));
        assert!(matches!(Lexicon::new(["  ", ""]), Err(Error::Config(_))));
    }

    #[test]
    fn word_boundaries_respected() {
        let lex = Lexicon::new(["rate", "labor market"]).unwrap();
        assert!(!lex.matches("The deliberate pace."));
        assert!(lex.matches("The RATE, again."));
        assert!(lex.matches("the Labor  market is tight"));
        assert!(!lex.matches("labor markets"));
    }

    const VOCAB: &[&str] = &[
        "inflation", "the", "rate", "rates", "growth", "chair", "thank", "outlook", "deflation",
        "prices", "price", "we", "see",
    ];
    const TERMS: &[&str] = &["inflation", "rate", "prices"];

    proptest! {
        #[test]
        fn matches_naive_substring_scan(
            sentences in prop::collection::vec(
                prop::collection::vec((0..VOCAB.len(), 0..4usize), 1..10),
                100,
            )
        ) {
            let seps = [" ", ", ", ". ", "-"];
            let texts: Vec<String> = sentences
                .iter()
                .map(|ws| {
                    let mut s = String::new();
                    for (k, &(w, sep)) in ws.iter().enumerate() {
                        if k > 0 {
                            s.push_str(seps[sep]);
                        }
                        let word = VOCAB[w];
                        if sep == 3 { s.push_str(&word.to_uppercase()); } else { s.push_str(word); }
                    }
                    s
                })
                .collect();
            let lex = Lexicon::new(TERMS).unwrap();
            let got = filter_econ_sentences(&texts, &lex);
            let want: Vec<String> = texts.iter().filter(|s| naive_contains(s, TERMS)).cloned().collect();
            prop_assert_eq!(got, want);
        }
    }
}
