//! Biterm topic model: biterm extraction, a collapsed Gibbs sampler, and
//! per-document topic inference.
//!
//! A biterm is an unordered pair of words that co-occur in one short
//! document. Topics are learned from the biterms of the whole corpus, which
//! sidesteps the sparse per-document word counts of tweets.

mod biterm;
mod model;
mod persist;
mod sampler;

pub use biterm::{doc_biterms, extract_biterms, Biterm, BitermSet, Window};
pub use model::{argmax, choose_k, choose_k_for_sparsity, BtmModel, DocTopicDist};
pub use persist::{
    load_model, model_from_str, model_to_string, read_doc_topics, save_model, topic_summary, write_doc_topics,
};
pub use sampler::{fit, BtmConfig, GibbsSampler};

use crate::corpus::TokenizedDoc;

/// Number of top words shown per topic to annotators.
pub const TOP_WORDS: usize = 10;

/// Infers the topic mixture of every document.
pub fn infer_corpus(model: &BtmModel, docs: &[TokenizedDoc], window: Window) -> Vec<DocTopicDist> {
    docs.iter()
        .map(|d| model.infer_doc(&d.tweet_id, &doc_biterms(&d.tokens, window)))
        .collect()
}
