//! Tweet ingestion, keyword filtering, tokenization and the
//! documents-by-terms matrix.

mod docterm;
mod keywords;
mod record;
mod tokenize;

pub use docterm::{build_doc_term, DocTermStats};
pub use keywords::{keyword_filter, match_keywords, KeywordSet, MatchMode, VolumeReport, DEFAULT_DRUGS};
pub use record::{
    format_timestamp, ingest_jsonl, ingest_many, parse_timestamp, read_jsonl, save_jsonl, write_jsonl, SchemaMode,
    TweetRecord,
};
pub use tokenize::{tokenize, Stopwords, TokenizedDoc, Tokenizer, Vocabulary};

use crate::error::Result;

/// Tokenizes `records` into a fresh vocabulary and builds their
/// documents-by-terms statistics.
pub fn prepare(records: &[TweetRecord], tokenizer: &Tokenizer) -> Result<DocTermStats> {
    let mut vocab = Vocabulary::new();
    let docs: Vec<TokenizedDoc> = records.iter().map(|r| tokenize(r, tokenizer, &mut vocab)).collect();
    vocab.freeze();
    build_doc_term(&docs, &vocab)
}

#[cfg(test)]
pub(crate) mod testing {
    use chrono::{TimeZone, Utc};

    use super::TweetRecord;

    pub fn record_with_text(id: &str, text: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_string(),
            created_at: Utc.with_ymd_and_hms(2015, 7, 1, 12, 0, 0).unwrap(),
            text: text.to_string(),
            retweeted_status_present: false,
            retweet_count: 0,
            favorite_count: 0,
            in_reply_to_status_id: None,
            possibly_sensitive: None,
            url_entity_count: 0,
            hashtag_entity_count: 0,
            symbol_entity_count: 0,
            user_id: format!("user-{id}"),
            user_verified: false,
            user_friends_count: 0,
            user_followers_count: 0,
            user_statuses_count: 0,
            user_favourites_count: 0,
            user_created_at: Utc.with_ymd_and_hms(2012, 1, 1, 0, 0, 0).unwrap(),
            matched_keywords: Default::default(),
        }
    }
}
