//! Writes a synthetic keyword-collected tweet corpus as JSONL, plus the
//! planted rogue/non-rogue label of every tweet.
//!
//! ```text
//! cargo run -p pharmwatch --example synth_corpus -- tweets.jsonl truth.csv [seed]
//! ```

use std::fs::File;
use std::io::BufWriter;

use pharmwatch::corpus::{save_jsonl, TweetRecord};
use pharmwatch::screening::write_labels_csv;
use pharmwatch::synth::{tweet_corpus, TweetCorpusConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(tweets), Some(truth)) = (args.first(), args.get(1)) else {
        eprintln!("usage: synth_corpus TWEETS.jsonl TRUTH.csv [SEED]");
        std::process::exit(1);
    };
    let seed = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let corpus = tweet_corpus(&TweetCorpusConfig::default(), seed);
    let records: Vec<TweetRecord> = corpus.iter().map(|t| t.record.clone()).collect();
    save_jsonl(tweets, &records)?;
    let labels: Vec<_> = corpus.iter().map(|t| (t.record.tweet_id.clone(), t.label)).collect();
    write_labels_csv(BufWriter::new(File::create(truth)?), &labels)?;
    println!("wrote {} tweets to {tweets}", records.len());
    Ok(())
}
