//! Detection of tweets that market prescription opioids through illicit
//! online pharmacies.
//!
//! The pipeline ingests keyword-filtered tweets ([`corpus`]), summarises them
//! with a biterm topic model ([`btm`]), isolates rogue tweets through human
//! topic and tweet annotations ([`screening`]), compares rogue and regular
//! tweets on thirteen metadata features ([`features`]) and trains a
//! logistic-regression detector ([`classifier`]).

pub mod btm;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod features;
pub mod screening;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/topics.md")]
    mod topics {}
    #[doc = include_str!("../../../book/src/screening.md")]
    mod screening {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
}
