use std::collections::BTreeMap;

use crate::corpus::tokenize::{TokenizedDoc, Vocabulary};
use crate::error::{Error, Result};

/// The documents-by-terms matrix over a sorted vocabulary.
///
/// `docs` holds the input documents re-encoded against `vocabulary`, so
/// downstream stages index the same term table the statistics describe.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermStats {
    pub vocabulary: Vec<String>,
    pub docs: Vec<TokenizedDoc>,
    /// Sparse rows of `(term index, count)` sorted by term index.
    pub term_counts: Vec<Vec<(usize, u32)>>,
    pub sparsity: f64,
}

impl DocTermStats {
    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn nonzero_cells(&self) -> usize {
        self.term_counts.iter().map(Vec::len).sum()
    }

    /// Mean number of tokens per document.
    pub fn mean_doc_length(&self) -> f64 {
        let tokens: usize = self.docs.iter().map(|d| d.tokens.len()).sum();
        tokens as f64 / self.doc_count() as f64
    }

    pub fn vocabulary_index(&self) -> Vocabulary {
        Vocabulary::from_terms(self.vocabulary.iter().cloned())
    }
}

/// Builds the sparse counts and sparsity of `docs`, whose token indices
/// refer to `vocab`. Every term of `vocab` becomes a column, used or not.
pub fn build_doc_term(docs: &[TokenizedDoc], vocab: &Vocabulary) -> Result<DocTermStats> {
    if docs.iter().all(|d| d.tokens.is_empty()) {
        return Err(Error::DegenerateCorpus("no document has any token".into()));
    }

    let mut ordered: Vec<(&str, usize)> = vocab.terms().iter().map(String::as_str).zip(0..).collect();
    ordered.sort_unstable();

    let mut remap = vec![0; vocab.len()];
    for (new, &(_, old)) in ordered.iter().enumerate() {
        remap[old] = new;
    }
    let vocabulary: Vec<String> = ordered.iter().map(|(t, _)| t.to_string()).collect();

    let docs: Vec<TokenizedDoc> = docs
        .iter()
        .map(|d| TokenizedDoc {
            tweet_id: d.tweet_id.clone(),
            tokens: d.tokens.iter().map(|&t| remap[t]).collect(),
        })
        .collect();

    let term_counts: Vec<Vec<(usize, u32)>> = docs
        .iter()
        .map(|d| {
            let mut row: BTreeMap<usize, u32> = BTreeMap::new();
            for &t in &d.tokens {
                *row.entry(t).or_default() += 1;
            }
            row.into_iter().collect()
        })
        .collect();

    let nonzero: usize = term_counts.iter().map(Vec::len).sum();
    let sparsity = nonzero as f64 / (docs.len() as f64 * vocabulary.len() as f64);

    Ok(DocTermStats {
        vocabulary,
        docs,
        term_counts,
        sparsity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tokens: &[usize]) -> TokenizedDoc {
        TokenizedDoc {
            tweet_id: id.into(),
            tokens: tokens.to_vec(),
        }
    }

    #[test]
    fn three_nonzero_cells_over_twelve() {
        let vocab = Vocabulary::from_terms(["d", "c", "b", "a"]);
        let docs = [doc("1", &[3, 3]), doc("2", &[2]), doc("3", &[0])];
        let stats = build_doc_term(&docs, &vocab).unwrap();
        assert_eq!(stats.vocabulary, ["a", "b", "c", "d"]);
        assert_eq!(stats.nonzero_cells(), 3);
        assert_eq!(stats.sparsity, 0.25);
        assert_eq!(stats.docs[0].tokens, vec![0, 0]);
        assert_eq!(stats.docs[2].tokens, vec![3]);
    }

    #[test]
    fn single_document() {
        let vocab = Vocabulary::from_terms(["a", "b"]);
        let stats = build_doc_term(&[doc("1", &[0, 0, 1])], &vocab).unwrap();
        assert_eq!(stats.term_counts[0], vec![(0, 2), (1, 1)]);
        assert_eq!(stats.sparsity, 1.0);
    }

    #[test]
    fn all_empty_is_degenerate() {
        let vocab = Vocabulary::new();
        assert!(matches!(
            build_doc_term(&[doc("1", &[])], &vocab),
            Err(Error::DegenerateCorpus(_))
        ));
        assert!(build_doc_term(&[], &vocab).is_err());
    }

    #[test]
    fn row_sums_match_token_counts() {
        let vocab = Vocabulary::from_terms(["z", "y", "x"]);
        let docs = [doc("1", &[0, 1, 0, 2]), doc("2", &[2])];
        let stats = build_doc_term(&docs, &vocab).unwrap();
        for (row, d) in stats.term_counts.iter().zip(&stats.docs) {
            assert_eq!(row.iter().map(|(_, c)| *c as usize).sum::<usize>(), d.tokens.len());
        }
        assert_eq!(stats.docs[0].tokens, vec![2, 1, 2, 0]);
    }
}
