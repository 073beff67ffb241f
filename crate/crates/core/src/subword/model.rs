use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ngrams::ngram_buckets;
use crate::{Error, Result};

/// Hyperparameters of the n-gram skipgram model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubwordConfig {
    pub dim: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub epochs: usize,
    pub negatives: usize,
    /// Initial learning rate, decayed linearly to zero over training.
    pub learning_rate: f64,
    pub bucket_count: u64,
    pub seed: u64,
}

impl Default for SubwordConfig {
    fn default() -> Self {
        SubwordConfig {
            dim: 64,
            min_n: 4,
            max_n: 7,
            epochs: 5,
            negatives: 5,
            learning_rate: 0.05,
            bucket_count: 2_000_000,
            seed: 0,
        }
    }
}

impl SubwordConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Validation(format!("subword config: {}", msg)));
        if self.dim == 0 {
            return fail("dim must be positive");
        }
        if self.min_n == 0 || self.min_n > self.max_n {
            return fail("need 1 <= min_n <= max_n");
        }
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if self.negatives == 0 {
            return fail("negatives must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if self.bucket_count == 0 {
            return fail("bucket_count must be positive");
        }
        Ok(())
    }
}

/// A word representation and the number of rows averaged into it.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVector {
    pub values: Vec<f32>,
    pub rows: usize,
}

impl WordVector {
    /// True for an out-of-vocabulary word without any n-gram; `values` is
    /// then all zeros.
    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }
}

/// Trained n-gram embedding model.
#[derive(Clone, Debug, PartialEq)]
pub struct SubwordModel {
    pub(crate) config: SubwordConfig,
    pub(crate) words: Vec<String>,
    pub(crate) counts: Vec<u64>,
    pub(crate) word_index: HashMap<String, usize>,
    pub(crate) word_input: Vec<f32>,
    pub(crate) ngram_input: Vec<f32>,
    pub(crate) output: Vec<f32>,
}

impl SubwordModel {
    pub(crate) fn from_parts(
        config: SubwordConfig,
        words: Vec<String>,
        counts: Vec<u64>,
        word_input: Vec<f32>,
        ngram_input: Vec<f32>,
        output: Vec<f32>,
    ) -> Result<Self> {
        config.validate()?;
        let dim = config.dim;
        if counts.len() != words.len()
            || word_input.len() != words.len() * dim
            || output.len() != words.len() * dim
            || ngram_input.len() as u64 != config.bucket_count * dim as u64
        {
            return Err(Error::Dimension(
                "model matrices do not match vocabulary size and config".to_owned(),
            ));
        }
        let mut word_index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if word_index.insert(w.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary word {:?}", w)));
            }
        }
        Ok(SubwordModel {
            config,
            words,
            counts,
            word_index,
            word_input,
            ngram_input,
            output,
        })
    }

    pub fn config(&self) -> &SubwordConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.word_index.get(word).copied()
    }

    pub fn buckets(&self, word: &str) -> Vec<usize> {
        ngram_buckets(
            word,
            self.config.min_n,
            self.config.max_n,
            self.config.bucket_count,
        )
    }

    pub fn word_input_row(&self, id: usize) -> &[f32] {
        let d = self.dim();
        &self.word_input[id * d..(id + 1) * d]
    }

    pub fn ngram_row(&self, bucket: usize) -> &[f32] {
        let d = self.dim();
        &self.ngram_input[bucket * d..(bucket + 1) * d]
    }

    pub fn output_row(&self, id: usize) -> &[f32] {
        let d = self.dim();
        &self.output[id * d..(id + 1) * d]
    }

    /// Mean of the word's own row (when `in_vocab`) and its n-gram rows.
    pub fn input_vector(&self, word: &str, in_vocab: bool) -> Result<WordVector> {
        let word_id = if in_vocab {
            Some(self.word_id(word).ok_or_else(|| {
                Error::Validation(format!("{:?} is not in the model vocabulary", word))
            })?)
        } else {
            None
        };
        let mut sum = vec![0f32; self.dim()];
        let mut rows = 0;
        if let Some(id) = word_id {
            add_assign(&mut sum, self.word_input_row(id));
            rows += 1;
        }
        for bucket in self.buckets(word) {
            add_assign(&mut sum, self.ngram_row(bucket));
            rows += 1;
        }
        if rows > 0 {
            let scale = 1.0 / rows as f32;
            sum.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(WordVector { values: sum, rows })
    }

    /// [`input_vector`](Self::input_vector), using the word row whenever the
    /// word is in the vocabulary.
    pub fn word_vector(&self, word: &str) -> WordVector {
        let in_vocab = self.word_index.contains_key(word);
        self.input_vector(word, in_vocab)
            .expect("vocabulary membership was checked")
    }
}

fn add_assign(acc: &mut [f32], row: &[f32]) {
    for (a, r) in acc.iter_mut().zip(row) {
        *a += r;
    }
}
