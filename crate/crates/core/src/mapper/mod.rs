//! Map each target token onto a weighted list of source tokens.
//!
//! Tokens are resolved by the first case that applies:
//!
//! 1. special tokens map onto the source token with the same role;
//! 2. non-alphabetic tokens reuse the source token with the same
//!    marker-normalized form, or the source unknown token;
//! 3. word-initial tokens that are dictionary words take their translations;
//! 4. everything else takes its nearest source tokens in the n-gram space.

mod greedy;
mod io;
mod weights;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use greedy::{greedy_tokenize, TokenizationOverrides};
pub use weights::compute_weights;

use crate::dictionary::{Dictionary, Language, LanguageTags};
use crate::subword::{NeighborIndex, SubwordModel};
use crate::vocab::{Position, SpecialRole, TokenShape, Vocabulary};
use crate::{Error, Result};

/// How a single source candidate was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SharedExact,
    Dictionary,
    DictionaryFirstTokenFallback,
    SubwordFasttext,
    SpecialRole,
    UnkFallback,
}

/// Which rule resolved a target token. Every token has exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchCase {
    SpecialRole,
    SharedExact,
    Dictionary,
    SubwordFasttext,
    UnkFallback,
}

impl MatchCase {
    pub const ALL: [MatchCase; 5] = [
        MatchCase::SpecialRole,
        MatchCase::SharedExact,
        MatchCase::Dictionary,
        MatchCase::SubwordFasttext,
        MatchCase::UnkFallback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatchCase::SpecialRole => "special_role",
            MatchCase::SharedExact => "shared_exact",
            MatchCase::Dictionary => "dictionary",
            MatchCase::SubwordFasttext => "subword_fasttext",
            MatchCase::UnkFallback => "unk_fallback",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub source_id: usize,
    pub source_token: String,
    pub weight: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedToken {
    pub target_id: usize,
    pub target_token: String,
    pub case: MatchCase,
    pub candidates: Vec<MatchCandidate>,
}

impl MappedToken {
    /// Shannon entropy of the candidate weights, in nats.
    pub fn weight_entropy(&self) -> f64 {
        -self
            .candidates
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| c.weight * c.weight.ln())
            .sum::<f64>()
    }
}

/// Candidates for every target token, indexed by target id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TokenMapping {
    pub tokens: Vec<MappedToken>,
}

impl TokenMapping {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens resolved by each case, in [`MatchCase::ALL`] order.
    pub fn case_histogram(&self) -> Vec<(MatchCase, usize)> {
        MatchCase::ALL
            .iter()
            .map(|&c| (c, self.tokens.iter().filter(|t| t.case == c).count()))
            .collect()
    }

    /// Check the structural invariants against the vocabularies it maps
    /// between.
    pub fn validate(&self, target: &Vocabulary, source_len: usize) -> Result<()> {
        if self.tokens.len() != target.len() {
            return Err(Error::Validation(format!(
                "mapping covers {} tokens, target vocabulary has {}",
                self.tokens.len(),
                target.len()
            )));
        }
        for (id, t) in self.tokens.iter().enumerate() {
            let fail = |msg: String| {
                Err(Error::Validation(format!("target token {:?}: {}", t.target_token, msg)))
            };
            if t.target_id != id || t.target_token != target.token(id) {
                return fail(format!("entry {} does not match target vocabulary", id));
            }
            if t.candidates.is_empty() {
                return fail("no candidates".to_owned());
            }
            let mut sum = 0.0;
            for c in &t.candidates {
                if c.source_id >= source_len {
                    return fail(format!("source id {} out of range", c.source_id));
                }
                if !(c.weight > 0.0 && c.weight <= 1.0 + 1e-12) {
                    return fail(format!("weight {} outside (0, 1]", c.weight));
                }
                sum += c.weight;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return fail(format!("weights sum to {}", sum));
            }
            if t.candidates.windows(2).any(|p| p[0].weight < p[1].weight) {
                return fail("candidates not sorted by weight".to_owned());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapperConfig {
    /// Most dictionary translations used per target word.
    pub k_max: usize,
    /// Nearest neighbors taken in the subword case.
    pub k: usize,
    /// Retry dictionary lookup in lowercase when the exact form is absent.
    pub case_insensitive_retry: bool,
    pub threads: usize,
}

impl Default for MapperConfig {
    fn default() -> Self {
        MapperConfig {
            k_max: 5,
            k: 3,
            case_insensitive_retry: true,
            threads: 1,
        }
    }
}

/// Dictionary translations grouped by target word.
#[derive(Clone, Debug, Default)]
pub struct TranslationIndex {
    exact: HashMap<String, Vec<(String, u64)>>,
    lowercase: HashMap<String, Vec<(String, u64)>>,
}

impl TranslationIndex {
    pub fn new(dict: &Dictionary) -> Self {
        let mut exact: HashMap<String, Vec<(String, u64)>> = HashMap::new();
        let mut lowercase: HashMap<String, Vec<(String, u64)>> = HashMap::new();
        for e in dict.entries() {
            exact
                .entry(e.target_word.clone())
                .or_default()
                .push((e.source_word.clone(), e.frequency));
            let group = lowercase.entry(e.target_word.to_lowercase()).or_default();
            match group.iter_mut().find(|(s, _)| *s == e.source_word) {
                Some(slot) => slot.1 += e.frequency,
                None => group.push((e.source_word.clone(), e.frequency)),
            }
        }
        for list in exact.values_mut().chain(lowercase.values_mut()) {
            // stable: equal frequencies keep dictionary order
            list.sort_by_key(|e| std::cmp::Reverse(e.1));
        }
        TranslationIndex { exact, lowercase }
    }

    /// Translations of `word` by descending frequency.
    pub fn lookup(&self, word: &str, case_insensitive_retry: bool) -> Option<&[(String, u64)]> {
        self.exact
            .get(word)
            .or_else(|| {
                if case_insensitive_retry {
                    self.lowercase.get(&word.to_lowercase())
                } else {
                    None
                }
            })
            .map(Vec::as_slice)
    }
}

/// String embedded for a token: the language start tag is added to
/// word-initial tokens only, and the end tag is never added.
pub fn tagged_query(shape: &TokenShape, language: Language, tags: &LanguageTags) -> String {
    match shape.position {
        Position::WordInitial => {
            let mut s = String::with_capacity(shape.core_text.len() + 4);
            s.push(tags.start(language));
            s.push_str(&shape.core_text);
            s
        }
        Position::Continuation => shape.core_text.clone(),
    }
}

/// Subword-space vectors of all alphabetic, non-special source tokens.
pub fn build_source_index(
    source: &Vocabulary,
    model: &SubwordModel,
    tags: &LanguageTags,
) -> Result<NeighborIndex<usize>> {
    let candidates = source
        .shapes()
        .iter()
        .filter(|s| s.alphabetic && !s.is_special() && !s.byte_fallback)
        .filter_map(|s| {
            let v = model.word_vector(&tagged_query(s, Language::Source, tags));
            let nonzero = v.values.iter().any(|&x| x != 0.0);
            (!v.is_empty() && nonzero).then_some((s.token_id, v.values))
        })
        .collect();
    NeighborIndex::new(candidates)
}

/// Everything needed to map target tokens, with lookups built once.
pub struct Mapper<'a> {
    target: &'a Vocabulary,
    source: &'a Vocabulary,
    model: &'a SubwordModel,
    tags: &'a LanguageTags,
    config: &'a MapperConfig,
    translations: TranslationIndex,
    source_index: NeighborIndex<usize>,
    overrides: Option<&'a TokenizationOverrides>,
}

impl<'a> Mapper<'a> {
    pub fn new(
        target: &'a Vocabulary,
        source: &'a Vocabulary,
        dict: &Dictionary,
        model: &'a SubwordModel,
        tags: &'a LanguageTags,
        config: &'a MapperConfig,
    ) -> Result<Self> {
        if config.k == 0 || config.k_max == 0 {
            return Err(Error::Validation("k and k_max must be at least 1".to_owned()));
        }
        Ok(Mapper {
            target,
            source,
            model,
            tags,
            config,
            translations: TranslationIndex::new(dict),
            source_index: build_source_index(source, model, tags)?,
            overrides: None,
        })
    }

    /// Use externally supplied source tokenizations instead of
    /// [`greedy_tokenize`] where available.
    pub fn with_overrides(mut self, overrides: &'a TokenizationOverrides) -> Self {
        self.overrides = Some(overrides);
        self
    }

    pub fn source_index(&self) -> &NeighborIndex<usize> {
        &self.source_index
    }

    fn candidate(&self, source_id: usize, weight: f64, provenance: Provenance) -> MatchCandidate {
        MatchCandidate {
            source_id,
            source_token: self.source.token(source_id).to_owned(),
            weight,
            provenance,
            cosine: None,
        }
    }

    fn unk(&self) -> MatchCandidate {
        self.candidate(self.source.unk_id(), 1.0, Provenance::UnkFallback)
    }

    /// Ranked candidates get [`compute_weights`]; repeated source ids are
    /// merged into their first occurrence.
    fn weighted(&self, ranked: Vec<(usize, Provenance, Option<f64>)>) -> Vec<MatchCandidate> {
        let weights = compute_weights(ranked.len()).expect("ranked list is non-empty");
        let mut out: Vec<MatchCandidate> = Vec::with_capacity(ranked.len());
        for ((id, provenance, cosine), w) in ranked.into_iter().zip(weights) {
            match out.iter_mut().find(|c| c.source_id == id) {
                Some(c) => c.weight += w,
                None => {
                    let mut c = self.candidate(id, w, provenance);
                    c.cosine = cosine;
                    out.push(c);
                }
            }
        }
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        out
    }

    /// Non-alphabetic token: the source token with the same normalized form
    /// (byte pieces need the identical string), else the unknown token.
    pub fn match_shared(&self, shape: &TokenShape) -> MatchCandidate {
        let found = if shape.byte_fallback {
            self.source
                .id(self.target.token(shape.token_id))
                .filter(|&id| !self.source.shape(id).is_special())
        } else {
            // Punctuation is word-initial in some conventions and attached in
            // others, so the other position is accepted as a second choice.
            let other = match shape.position {
                Position::WordInitial => Position::Continuation,
                Position::Continuation => Position::WordInitial,
            };
            self.source
                .find_normalized(&shape.core_text, shape.position)
                .or_else(|| self.source.find_normalized(&shape.core_text, other))
        };
        match found {
            Some(id) => self.candidate(id, 1.0, Provenance::SharedExact),
            None => self.unk(),
        }
    }

    /// Word-initial dictionary words map onto their top `k_max` translations.
    pub fn match_dictionary(&self, shape: &TokenShape) -> Option<Vec<MatchCandidate>> {
        if !shape.alphabetic || shape.position != Position::WordInitial {
            return None;
        }
        let translations = self
            .translations
            .lookup(&shape.core_text, self.config.case_insensitive_retry)?;
        let ranked: Vec<_> = translations
            .iter()
            .take(self.config.k_max)
            .map(|(word, _)| match self.source.find_normalized(word, Position::WordInitial) {
                Some(id) => (id, Provenance::Dictionary, None),
                None => {
                    let first = self
                        .overrides
                        .and_then(|o| o.get(word))
                        .map(|ids| ids[0])
                        .unwrap_or_else(|| greedy_tokenize(word, self.source)[0]);
                    (first, Provenance::DictionaryFirstTokenFallback, None)
                }
            })
            .collect();
        if ranked.is_empty() {
            return None;
        }
        Some(self.weighted(ranked))
    }

    /// Nearest source tokens to the token's n-gram vector, or `None` when the
    /// token has no usable vector.
    pub fn match_subword(&self, shape: &TokenShape) -> Option<Vec<MatchCandidate>> {
        let query = tagged_query(shape, Language::Target, self.tags);
        let v = self.model.word_vector(&query);
        if v.is_empty() || self.source_index.is_empty() {
            return None;
        }
        let top = self.source_index.top_k(&v.values, self.config.k).ok()?;
        let ranked = top
            .into_iter()
            .map(|(id, cos)| (id, Provenance::SubwordFasttext, Some(cos)))
            .collect();
        Some(self.weighted(ranked))
    }

    pub fn map_token(&self, target_id: usize) -> MappedToken {
        let shape = self.target.shape(target_id);
        let (case, candidates) = self.resolve(shape);
        MappedToken {
            target_id,
            target_token: self.target.token(target_id).to_owned(),
            case,
            candidates,
        }
    }

    fn resolve(&self, shape: &TokenShape) -> (MatchCase, Vec<MatchCandidate>) {
        if let Some(role) = shape.special {
            return match self.source.special(role) {
                Some(id) => (
                    MatchCase::SpecialRole,
                    vec![self.candidate(id, 1.0, Provenance::SpecialRole)],
                ),
                None if role == SpecialRole::Unk => unreachable!("source vocabularies have an unk"),
                None => (MatchCase::UnkFallback, vec![self.unk()]),
            };
        }
        if !shape.alphabetic {
            let c = self.match_shared(shape);
            let case = match c.provenance {
                Provenance::SharedExact => MatchCase::SharedExact,
                _ => MatchCase::UnkFallback,
            };
            return (case, vec![c]);
        }
        if let Some(c) = self.match_dictionary(shape) {
            return (MatchCase::Dictionary, c);
        }
        match self.match_subword(shape) {
            Some(c) => (MatchCase::SubwordFasttext, c),
            None => (MatchCase::UnkFallback, vec![self.unk()]),
        }
    }

    /// Map every target token. The result does not depend on the thread
    /// count.
    pub fn build(&self) -> Result<TokenMapping> {
        let threads = self.config.threads.max(1);
        let tokens = if threads == 1 {
            (0..self.target.len()).map(|id| self.map_token(id)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Validation(format!("thread pool: {}", e)))?;
            pool.install(|| {
                (0..self.target.len())
                    .into_par_iter()
                    .map(|id| self.map_token(id))
                    .collect()
            })
        };
        Ok(TokenMapping { tokens })
    }
}

/// Map every token of `target` onto weighted source tokens.
pub fn build_mapping(
    target: &Vocabulary,
    source: &Vocabulary,
    dict: &Dictionary,
    model: &SubwordModel,
    tags: &LanguageTags,
    config: &MapperConfig,
) -> Result<TokenMapping> {
    Mapper::new(target, source, dict, model, tags, config)?.build()
}
