//! Tokenizer vocabularies and the embedding exchange format.

mod embeddings;
mod shape;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

pub use embeddings::EmbeddingTable;
pub use shape::{classify_token, Position, TokenShape};

use crate::{Error, Result};

/// Subword marker convention of a tokenizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `##` marks continuation pieces.
    #[serde(rename = "wordpiece", alias = "word_piece")]
    WordPiece,
    /// `Ġ` marks word-initial pieces; tokens are byte-level encoded.
    BpeByte,
    /// `▁` marks word-initial pieces.
    #[serde(rename = "sentencepiece", alias = "sentence_piece")]
    SentencePiece,
    /// No markers; every token is a word.
    Plain,
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wordpiece" | "word_piece" => Ok(Convention::WordPiece),
            "bpe_byte" | "bpe-byte" => Ok(Convention::BpeByte),
            "sentencepiece" | "sentence_piece" => Ok(Convention::SentencePiece),
            "plain" => Ok(Convention::Plain),
            _ => Err(Error::Validation(format!("unknown tokenizer convention {:?}", s))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialRole {
    Unk,
    Pad,
    Cls,
    Sep,
    Mask,
}

impl SpecialRole {
    pub const ALL: [SpecialRole; 5] = [
        SpecialRole::Unk,
        SpecialRole::Pad,
        SpecialRole::Cls,
        SpecialRole::Sep,
        SpecialRole::Mask,
    ];
}

impl fmt::Display for SpecialRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpecialRole::Unk => "unk",
            SpecialRole::Pad => "pad",
            SpecialRole::Cls => "cls",
            SpecialRole::Sep => "sep",
            SpecialRole::Mask => "mask",
        };
        f.write_str(s)
    }
}

/// Token strings recognized for each special role, in order of preference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleTable {
    pub roles: BTreeMap<SpecialRole, Vec<String>>,
}

impl Default for RoleTable {
    fn default() -> Self {
        let pairs = [
            (SpecialRole::Unk, ["[UNK]", "<unk>"]),
            (SpecialRole::Pad, ["[PAD]", "<pad>"]),
            (SpecialRole::Cls, ["[CLS]", "<s>"]),
            (SpecialRole::Sep, ["[SEP]", "</s>"]),
            (SpecialRole::Mask, ["[MASK]", "<mask>"]),
        ];
        RoleTable {
            roles: pairs
                .into_iter()
                .map(|(r, names)| (r, names.iter().map(|s| s.to_string()).collect()))
                .collect(),
        }
    }
}

/// Ordered token list of one tokenizer; the index is the token id.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    tokens: Vec<String>,
    convention: Convention,
    specials: BTreeMap<SpecialRole, usize>,
    shapes: Vec<TokenShape>,
    exact: HashMap<String, usize>,
    normalized: HashMap<(String, Position), usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
            && self.convention == other.convention
            && self.specials == other.specials
    }
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>, convention: Convention, roles: &RoleTable) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Validation("vocabulary is empty".to_owned()));
        }
        let mut exact = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if exact.insert(tok.clone(), id).is_some() {
                return Err(Error::Validation(format!("duplicate token {:?}", tok)));
            }
        }

        let mut specials = BTreeMap::new();
        for (&role, names) in &roles.roles {
            if let Some(&id) = names.iter().find_map(|n| exact.get(n)) {
                specials.insert(role, id);
            }
        }
        if !specials.contains_key(&SpecialRole::Unk) {
            return Err(Error::Validation(
                "vocabulary has no unknown token for the configured role table".to_owned(),
            ));
        }
        let mut role_of: HashMap<usize, SpecialRole> = HashMap::new();
        for (&role, &id) in &specials {
            role_of.entry(id).or_insert(role);
        }

        let mut shapes = Vec::with_capacity(tokens.len());
        let mut normalized = HashMap::new();
        for (id, tok) in tokens.iter().enumerate() {
            let mut shape = classify_token(id, tok, convention);
            shape.special = role_of.get(&id).copied();
            if shape.special.is_none() && !shape.byte_fallback {
                normalized
                    .entry((shape.core_text.clone(), shape.position))
                    .or_insert(id);
            }
            shapes.push(shape);
        }

        Ok(Vocabulary {
            tokens,
            convention,
            specials,
            shapes,
            exact,
            normalized,
        })
    }

    /// Load a vocabulary: JSON `{token: id}` for `.json` files, otherwise one
    /// token per line.
    pub fn load(path: impl AsRef<Path>, convention: Convention, roles: &RoleTable) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let tokens = if is_json {
            parse_json_vocab(&text)?
        } else {
            parse_text_vocab(&text)?
        };
        Self::new(tokens, convention, roles)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.exact.get(token).copied()
    }

    pub fn special(&self, role: SpecialRole) -> Option<usize> {
        self.specials.get(&role).copied()
    }

    pub fn specials(&self) -> &BTreeMap<SpecialRole, usize> {
        &self.specials
    }

    pub fn unk_id(&self) -> usize {
        self.specials[&SpecialRole::Unk]
    }

    pub fn shape(&self, id: usize) -> &TokenShape {
        &self.shapes[id]
    }

    pub fn shapes(&self) -> &[TokenShape] {
        &self.shapes
    }

    /// Token with the given marker-normalized form, across conventions.
    /// Special and byte-fallback tokens are never returned.
    pub fn find_normalized(&self, core_text: &str, position: Position) -> Option<usize> {
        self.normalized
            .get(&(core_text.to_owned(), position))
            .copied()
    }
}

fn parse_text_vocab(text: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty token".to_owned(),
            });
        }
        tokens.push(line.to_owned());
    }
    Ok(tokens)
}

/// JSON object entries in file order, keeping duplicate keys.
struct JsonEntries(Vec<(String, u64)>);

impl<'de> Deserialize<'de> for JsonEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = JsonEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping tokens to integer ids")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<JsonEntries, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, u64>()? {
                    entries.push((k, v));
                }
                Ok(JsonEntries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

fn parse_json_vocab(text: &str) -> Result<Vec<String>> {
    let JsonEntries(mut entries) =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("vocabulary JSON: {}", e)))?;
    let mut seen = HashMap::new();
    for (tok, _) in &entries {
        if seen.insert(tok.as_str(), ()).is_some() {
            return Err(Error::Validation(format!("duplicate token {:?}", tok)));
        }
    }
    entries.sort_by_key(|e| e.1);
    for (expected, (tok, id)) in entries.iter().enumerate() {
        if *id != expected as u64 {
            return Err(Error::Validation(format!(
                "token ids are not dense: {:?} has id {} where {} was expected",
                tok, id, expected
            )));
        }
    }
    Ok(entries.into_iter().map(|(t, _)| t).collect())
}
