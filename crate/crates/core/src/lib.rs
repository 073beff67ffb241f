//! Re-initialize the token-embedding table of a pretrained model for a new
//! tokenizer in another language.
//!
//! The pipeline has four stages:
//!
//! 1. [`dictionary`]: load a bilingual word dictionary and turn it into a
//!    symmetric bigram corpus of language-tagged word pairs.
//! 2. [`subword`]: train a character n-gram skipgram model on that corpus so
//!    that translations end up with matching n-gram sums.
//! 3. [`mapper`]: map every target token onto a weighted list of source
//!    tokens (shared tokens, dictionary translations, or nearest neighbors in
//!    the n-gram space).
//! 4. [`convert`]: average the source embedding rows with those weights.
//!
//! [`vocab`] handles the tokenizer vocabularies and the binary embedding
//! exchange format, and [`report`] produces diagnostics over a finished
//! mapping.

pub mod convert;
pub mod dictionary;
mod error;
pub mod mapper;
pub mod report;
pub mod subword;
pub mod vocab;

pub use error::{Error, Result};
