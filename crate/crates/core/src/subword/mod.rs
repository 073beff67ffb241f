//! Character n-gram skipgram embeddings trained with negative sampling.

pub(crate) mod io;
mod model;
mod neighbors;
mod ngrams;
pub mod objective;
mod train;

pub use model::{SubwordConfig, SubwordModel, WordVector};
pub use neighbors::{cosine, nearest_neighbors, NeighborIndex};
pub use ngrams::{extract_ngrams, fnv1a_32, hash_ngram, ngram_buckets};
pub use train::{train, LearningRate};
