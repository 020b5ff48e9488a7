//! Corpus ingestion: manifest reading, tokenization, and count matrices.
//!
//! Tokenization keeps alphabetic characters from an allowed set of scripts,
//! lowercases them, and treats every other character as a token boundary.
//! The vocabulary is ordered by total corpus frequency so that "the first
//! `mfw` columns" always means "the `mfw` most frequent types".

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One corpus document as listed in the metadata manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub author: String,
    pub title: String,
    pub year: Option<i32>,
    pub path: PathBuf,
}

/// Which alphabets may contribute token characters.
///
/// Characters outside the allowed scripts (digits, punctuation, whitespace,
/// letters of other alphabets) never join a token; they end the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptSet {
    pub latin: bool,
    pub cyrillic: bool,
}

impl Default for ScriptSet {
    fn default() -> Self {
        ScriptSet {
            latin: true,
            cyrillic: true,
        }
    }
}

impl ScriptSet {
    pub fn is_empty(&self) -> bool {
        !(self.latin || self.cyrillic)
    }

    fn allows(&self, c: char) -> bool {
        if !c.is_alphabetic() {
            return false;
        }
        // Block ranges cover the base alphabets plus the extended ranges
        // used by European orthographies; is_alphabetic() already excluded
        // stray symbols inside them.
        match c as u32 {
            0x0041..=0x024F | 0x1E00..=0x1EFF => self.latin,
            0x0400..=0x052F => self.cyrillic,
            _ => false,
        }
    }
}

/// Tokenizer and n-gram settings for corpus construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub scripts: ScriptSet,
    /// Smallest n-gram size; 1 means plain word tokens.
    pub ngram_min: usize,
    /// Largest n-gram size, inclusive.
    pub ngram_max: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            scripts: ScriptSet::default(),
            ngram_min: 1,
            ngram_max: 1,
        }
    }
}

/// Lowercase a raw text into word tokens.
///
/// Allowed-script alphabetic characters extend the current token; every
/// other character closes it. So `"A b2c"` yields `["a", "b", "c"]`: the
/// digit splits `b2c` in two.
pub fn preprocess_text(raw: &str, scripts: ScriptSet) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in raw.chars() {
        if scripts.allows(c) {
            // to_lowercase is one-to-many for a handful of code points.
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Expand word tokens into contiguous n-grams joined by single spaces.
///
/// Output is grouped by size: all `n_min`-grams in document order, then all
/// `(n_min+1)`-grams, and so on. Sizes longer than the document contribute
/// nothing.
pub fn ngramize(tokens: &[String], n_min: usize, n_max: usize) -> Result<Vec<String>> {
    if n_min < 1 || n_min > n_max {
        return Err(Error::InvalidNgramRange {
            min: n_min,
            max: n_max,
        });
    }
    let mut grams = Vec::new();
    for n in n_min..=n_max {
        for window in tokens.windows(n) {
            grams.push(window.join(" "));
        }
    }
    Ok(grams)
}

/// Token types retained for analysis, ordered by descending total corpus
/// frequency with ties broken by the token string.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build from an ordered token list. The order is taken as given; the
    /// corpus builders produce frequency order.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateToken { token: t.clone() });
            }
        }
        Ok(Vocabulary { tokens, index })
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

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// The first `len` tokens as a new vocabulary.
    pub fn truncated(&self, len: usize) -> Vocabulary {
        Vocabulary::new(self.tokens[..len].to_vec()).expect("prefix of unique tokens is unique")
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

/// Document-by-token count matrix with row and column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMatrix {
    docs: Vec<String>,
    vocab: Vocabulary,
    counts: Array2<u64>,
}

impl FrequencyMatrix {
    /// Assemble from parts, checking that dimensions agree and document ids
    /// are unique. The vocabulary is assumed to be in frequency order when
    /// prefix selection matters.
    pub fn from_parts(docs: Vec<String>, vocab: Vocabulary, counts: Array2<u64>) -> Result<Self> {
        if counts.nrows() != docs.len() {
            return Err(Error::LengthMismatch {
                left: docs.len(),
                right: counts.nrows(),
            });
        }
        if counts.ncols() != vocab.len() {
            return Err(Error::VocabularyMismatch {
                expected: vocab.len(),
                found: counts.ncols(),
            });
        }
        let mut seen = HashMap::new();
        for id in &docs {
            if seen.insert(id.clone(), ()).is_some() {
                return Err(Error::DuplicateDocument { id: id.clone() });
            }
        }
        Ok(FrequencyMatrix {
            docs,
            vocab,
            counts,
        })
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_types(&self) -> usize {
        self.vocab.len()
    }
}

/// Read the corpus metadata manifest, a CSV with header
/// `id,author,title,year,path`. Relative paths are resolved against the
/// manifest's own directory; the year column may be empty.
pub fn read_manifest(path: &Path) -> Result<Vec<DocumentRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::MalformedTable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut records = Vec::new();
    let mut seen = HashMap::new();
    for row in reader.deserialize::<DocumentRecord>() {
        let mut record = row.map_err(|e| Error::MalformedTable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if record.author.trim().is_empty() {
            return Err(Error::MissingAuthor {
                id: record.id.clone(),
            });
        }
        if seen.insert(record.id.clone(), ()).is_some() {
            return Err(Error::DuplicateDocument { id: record.id });
        }
        if record.path.is_relative() {
            record.path = base.join(&record.path);
        }
        records.push(record);
    }
    Ok(records)
}

/// Map document ids back to author labels using manifest records.
pub fn authors_for(doc_ids: &[String], records: &[DocumentRecord]) -> Result<Vec<String>> {
    let by_id: HashMap<&str, &str> = records
        .iter()
        .map(|r| (r.id.as_str(), r.author.as_str()))
        .collect();
    doc_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|a| a.to_string())
                .ok_or_else(|| Error::UnknownDocument { id: id.clone() })
        })
        .collect()
}

/// Tokenize manifest documents from disk and count them into a matrix.
///
/// Files are read and tokenized in parallel; the assembled matrix follows
/// manifest order exactly, so results do not depend on scheduling. At most
/// `vocab_cap` types are kept, ranked by total corpus count with ties broken
/// by the token string.
pub fn build_frequency_matrix(
    records: &[DocumentRecord],
    vocab_cap: usize,
    options: &IngestOptions,
) -> Result<FrequencyMatrix> {
    let texts = records
        .par_iter()
        .map(|r| {
            let raw = fs::read_to_string(&r.path).map_err(|e| Error::FileRead {
                path: r.path.clone(),
                source: e,
            })?;
            Ok((r.id.clone(), raw))
        })
        .collect::<Result<Vec<_>>>()?;
    build_frequency_matrix_from_texts(&texts, vocab_cap, options)
}

/// Same as [`build_frequency_matrix`] but with document text already in
/// memory as `(id, raw text)` pairs.
pub fn build_frequency_matrix_from_texts(
    texts: &[(String, String)],
    vocab_cap: usize,
    options: &IngestOptions,
) -> Result<FrequencyMatrix> {
    if texts.len() < 2 {
        return Err(Error::CorpusTooSmall { docs: texts.len() });
    }
    if options.scripts.is_empty() {
        return Err(Error::EmptyScriptSet);
    }
    if vocab_cap == 0 {
        return Err(Error::InvalidParameter(
            "vocab_cap must be at least 1".into(),
        ));
    }

    let tokenized = texts
        .par_iter()
        .map(|(id, raw)| {
            let words = preprocess_text(raw, options.scripts);
            let tokens = ngramize(&words, options.ngram_min, options.ngram_max)?;
            if tokens.is_empty() {
                return Err(Error::EmptyDocument { id: id.clone() });
            }
            Ok((id.clone(), tokens))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut doc_counts: Vec<HashMap<String, u64>> = Vec::with_capacity(tokenized.len());
    let mut totals: HashMap<String, u64> = HashMap::new();
    let mut docs = Vec::with_capacity(tokenized.len());
    for (id, tokens) in tokenized {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for token in tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        for (token, count) in &counts {
            *totals.entry(token.clone()).or_insert(0) += count;
        }
        docs.push(id);
        doc_counts.push(counts);
    }

    let mut ranked: Vec<(String, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(vocab_cap);
    let vocab = Vocabulary::new(ranked.into_iter().map(|(t, _)| t).collect())?;

    let mut counts = Array2::<u64>::zeros((docs.len(), vocab.len()));
    for (i, per_doc) in doc_counts.iter().enumerate() {
        for (token, count) in per_doc {
            if let Some(j) = vocab.position(token) {
                counts[[i, j]] = *count;
            }
        }
    }
    FrequencyMatrix::from_parts(docs, vocab, counts)
}

/// Keep only the `mfw` most frequent types (a column prefix, since columns
/// are frequency-ordered). Rows are unchanged.
pub fn select_mfw(matrix: &FrequencyMatrix, mfw: usize) -> Result<FrequencyMatrix> {
    if mfw < 1 || mfw > matrix.n_types() {
        return Err(Error::MfwOutOfRange {
            requested: mfw,
            available: matrix.n_types(),
        });
    }
    FrequencyMatrix::from_parts(
        matrix.docs.clone(),
        matrix.vocab.truncated(mfw),
        matrix.counts.slice(s![.., ..mfw]).to_owned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn preprocess_splits_on_disallowed_characters() {
        let tokens = preprocess_text("A b2c", ScriptSet::default());
        assert_eq!(tokens, words(&["a", "b", "c"]));
    }

    #[test]
    fn preprocess_lowercases_and_drops_punctuation() {
        let tokens = preprocess_text("Дом, дом! И—дом?", ScriptSet::default());
        assert_eq!(tokens, words(&["дом", "дом", "и", "дом"]));
    }

    #[test]
    fn preprocess_respects_script_choice() {
        let latin_only = ScriptSet {
            latin: true,
            cyrillic: false,
        };
        let tokens = preprocess_text("cafe дом straße", latin_only);
        assert_eq!(tokens, words(&["cafe", "straße"]));
        assert!(preprocess_text("12 45 --", ScriptSet::default()).is_empty());
    }

    #[test]
    fn preprocess_is_idempotent_on_its_own_output() {
        let first = preprocess_text("Mixed-case text, with punctuation!", ScriptSet::default());
        let rejoined = first.join(" ");
        assert_eq!(preprocess_text(&rejoined, ScriptSet::default()), first);
    }

    #[test]
    fn ngramize_produces_windows_grouped_by_size() {
        let tokens = words(&["a", "b", "c"]);
        assert_eq!(ngramize(&tokens, 2, 2).unwrap(), words(&["a b", "b c"]));
        assert_eq!(ngramize(&tokens, 3, 5).unwrap(), words(&["a b c"]));
        assert_eq!(
            ngramize(&tokens, 1, 2).unwrap(),
            words(&["a", "b", "c", "a b", "b c"])
        );
    }

    #[test]
    fn ngramize_rejects_bad_ranges() {
        let tokens = words(&["a"]);
        assert!(matches!(
            ngramize(&tokens, 0, 1),
            Err(Error::InvalidNgramRange { .. })
        ));
        assert!(matches!(
            ngramize(&tokens, 3, 2),
            Err(Error::InvalidNgramRange { .. })
        ));
    }

    fn texts(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items
            .iter()
            .map(|(id, body)| (id.to_string(), body.to_string()))
            .collect()
    }

    #[test]
    fn count_matrix_matches_hand_count() {
        let matrix = build_frequency_matrix_from_texts(
            &texts(&[("d1", "a a b"), ("d2", "a b b")]),
            10,
            &IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(matrix.docs(), &["d1".to_string(), "d2".to_string()]);
        assert_eq!(matrix.vocab().tokens(), &["a".to_string(), "b".to_string()]);
        assert_eq!(matrix.counts()[[0, 0]], 2);
        assert_eq!(matrix.counts()[[0, 1]], 1);
        assert_eq!(matrix.counts()[[1, 0]], 1);
        assert_eq!(matrix.counts()[[1, 1]], 2);
    }

    #[test]
    fn vocabulary_ranks_by_frequency_then_token() {
        let matrix = build_frequency_matrix_from_texts(
            &texts(&[("d1", "cc bb aa aa"), ("d2", "cc bb")]),
            10,
            &IngestOptions::default(),
        )
        .unwrap();
        // Totals: aa=2, bb=2, cc=2 -> a three-way tie, broken lexicographically.
        assert_eq!(
            matrix.vocab().tokens(),
            &["aa".to_string(), "bb".to_string(), "cc".to_string()]
        );
    }

    #[test]
    fn vocabulary_cap_keeps_most_frequent_types() {
        let matrix = build_frequency_matrix_from_texts(
            &texts(&[("d1", "x x x y y z"), ("d2", "x y z z")]),
            2,
            &IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(matrix.vocab().tokens(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn empty_documents_are_rejected() {
        let err = build_frequency_matrix_from_texts(
            &texts(&[("d1", "a b"), ("d2", "123 !?")]),
            10,
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyDocument { id } if id == "d2"));
    }

    #[test]
    fn single_document_corpora_are_rejected() {
        let err =
            build_frequency_matrix_from_texts(&texts(&[("d1", "a b")]), 10, &IngestOptions::default())
                .unwrap_err();
        assert!(matches!(err, Error::CorpusTooSmall { docs: 1 }));
    }

    #[test]
    fn select_mfw_takes_a_column_prefix() {
        let matrix = build_frequency_matrix_from_texts(
            &texts(&[("d1", "x x x y y z"), ("d2", "x y z z")]),
            10,
            &IngestOptions::default(),
        )
        .unwrap();
        let selected = select_mfw(&matrix, 2).unwrap();
        assert_eq!(selected.vocab().tokens(), &matrix.vocab().tokens()[..2]);
        assert_eq!(selected.counts()[[0, 0]], matrix.counts()[[0, 0]]);
        assert!(matches!(
            select_mfw(&matrix, 4),
            Err(Error::MfwOutOfRange { .. })
        ));
        assert!(matches!(
            select_mfw(&matrix, 0),
            Err(Error::MfwOutOfRange { .. })
        ));
    }

    #[test]
    fn manifest_roundtrip_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.csv");
        std::fs::write(
            &manifest,
            "id,author,title,year,path\nd1,Alice,First,1870,texts/d1.txt\nd2,Bob,Second,,d2.txt\n",
        )
        .unwrap();
        let records = read_manifest(&manifest).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].year, Some(1870));
        assert_eq!(records[1].year, None);
        assert_eq!(records[0].path, dir.path().join("texts/d1.txt"));
        assert_eq!(
            authors_for(&["d2".to_string()], &records).unwrap(),
            vec!["Bob".to_string()]
        );
        assert!(matches!(
            authors_for(&["missing".to_string()], &records),
            Err(Error::UnknownDocument { .. })
        ));
    }

    #[test]
    fn manifest_rejects_duplicate_ids_and_empty_authors() {
        let dir = tempfile::tempdir().unwrap();
        let dup = dir.path().join("dup.csv");
        std::fs::write(
            &dup,
            "id,author,title,year,path\nd1,Alice,First,,a.txt\nd1,Bob,Second,,b.txt\n",
        )
        .unwrap();
        assert!(matches!(
            read_manifest(&dup),
            Err(Error::DuplicateDocument { .. })
        ));
        let blank = dir.path().join("blank.csv");
        std::fs::write(&blank, "id,author,title,year,path\nd1, ,First,,a.txt\n").unwrap();
        assert!(matches!(
            read_manifest(&blank),
            Err(Error::MissingAuthor { .. })
        ));
    }

    #[test]
    fn file_backed_build_matches_in_memory_build() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("d1.txt"), "a a b").unwrap();
        std::fs::write(dir.path().join("d2.txt"), "a b b").unwrap();
        let records = vec![
            DocumentRecord {
                id: "d1".into(),
                author: "Alice".into(),
                title: "First".into(),
                year: None,
                path: dir.path().join("d1.txt"),
            },
            DocumentRecord {
                id: "d2".into(),
                author: "Bob".into(),
                title: "Second".into(),
                year: None,
                path: dir.path().join("d2.txt"),
            },
        ];
        let from_files = build_frequency_matrix(&records, 10, &IngestOptions::default()).unwrap();
        let from_texts = build_frequency_matrix_from_texts(
            &texts(&[("d1", "a a b"), ("d2", "a b b")]),
            10,
            &IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(from_files, from_texts);
        let missing = vec![DocumentRecord {
            id: "d3".into(),
            author: "Eve".into(),
            title: "Gone".into(),
            year: None,
            path: dir.path().join("nope.txt"),
        }, records[0].clone()];
        assert!(matches!(
            build_frequency_matrix(&missing, 10, &IngestOptions::default()),
            Err(Error::FileRead { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn row_sums_conserve_token_counts(bodies in proptest::collection::vec("[a-d ]{1,40}", 2..6)) {
                let docs: Vec<(String, String)> = bodies
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (format!("d{i}"), b.clone()))
                    .collect();
                let token_counts: Vec<usize> = docs
                    .iter()
                    .map(|(_, b)| preprocess_text(b, ScriptSet::default()).len())
                    .collect();
                prop_assume!(token_counts.iter().all(|&n| n > 0));
                let matrix =
                    build_frequency_matrix_from_texts(&docs, 1000, &IngestOptions::default())
                        .unwrap();
                for (i, expected) in token_counts.iter().enumerate() {
                    let row_sum: u64 = matrix.counts().row(i).iter().sum();
                    prop_assert_eq!(row_sum as usize, *expected);
                }
            }

            #[test]
            fn vocabulary_totals_never_increase(bodies in proptest::collection::vec("[a-e ]{1,60}", 2..5)) {
                let docs: Vec<(String, String)> = bodies
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (format!("d{i}"), b.clone()))
                    .collect();
                prop_assume!(docs
                    .iter()
                    .all(|(_, b)| !preprocess_text(b, ScriptSet::default()).is_empty()));
                let matrix =
                    build_frequency_matrix_from_texts(&docs, 1000, &IngestOptions::default())
                        .unwrap();
                let totals: Vec<u64> = (0..matrix.n_types())
                    .map(|j| matrix.counts().column(j).iter().sum())
                    .collect();
                for pair in totals.windows(2) {
                    prop_assert!(pair[0] >= pair[1]);
                }
            }

            #[test]
            fn preprocess_output_contains_only_allowed_characters(raw in "\\PC{0,80}") {
                for token in preprocess_text(&raw, ScriptSet::default()) {
                    prop_assert!(!token.is_empty());
                    for c in token.chars() {
                        prop_assert!(c.is_alphabetic());
                        prop_assert!(!c.is_uppercase());
                    }
                }
            }
        }
    }
}
