use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::vocab::{Position, Vocabulary};
use crate::{Error, Result};

/// Source tokenizations supplied from outside, keyed by word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenizationOverrides {
    words: HashMap<String, Vec<usize>>,
}

impl TokenizationOverrides {
    /// Parse `word<TAB>space-joined source tokens` lines; every token must
    /// exist verbatim in `source`.
    pub fn parse(text: &str, source: &Vocabulary) -> Result<Self> {
        let mut words = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (word, pieces) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected word<TAB>tokens".to_owned()))?;
            let ids = pieces
                .split(' ')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    source
                        .id(p)
                        .ok_or_else(|| parse_err(format!("{:?} is not a source token", p)))
                })
                .collect::<Result<Vec<_>>>()?;
            if ids.is_empty() {
                return Err(parse_err(format!("no tokens for {:?}", word)));
            }
            words.insert(word.to_owned(), ids);
        }
        Ok(TokenizationOverrides { words })
    }

    pub fn load(path: impl AsRef<Path>, source: &Vocabulary) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, source)
    }

    pub fn get(&self, word: &str) -> Option<&[usize]> {
        self.words.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Longest-match-first segmentation of a word into source tokens. The first
/// piece must be word-initial and the rest continuations; a position with no
/// matching piece yields the unknown token and skips one character.
pub fn greedy_tokenize(word: &str, vocab: &Vocabulary) -> Vec<usize> {
    let mut bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).collect();
    bounds.push(word.len());
    let chars = bounds.len() - 1;

    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars {
        let position = if start == 0 {
            Position::WordInitial
        } else {
            Position::Continuation
        };
        let found = (start + 1..=chars).rev().find_map(|end| {
            vocab
                .find_normalized(&word[bounds[start]..bounds[end]], position)
                .map(|id| (id, end))
        });
        match found {
            Some((id, end)) => {
                pieces.push(id);
                start = end;
            }
            None => {
                pieces.push(vocab.unk_id());
                start += 1;
            }
        }
    }
    pieces
}
