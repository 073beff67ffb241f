use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Convention, SpecialRole};

/// Where a token sits inside a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    WordInitial,
    Continuation,
}

/// A token with its subword marker removed and its kind determined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenShape {
    pub token_id: usize,
    pub core_text: String,
    pub position: Position,
    /// At least one Unicode letter in `core_text`.
    pub alphabetic: bool,
    pub special: Option<SpecialRole>,
    /// Raw byte pieces that do not decode to text on their own. These are
    /// only ever matched by their exact string.
    pub byte_fallback: bool,
}

impl TokenShape {
    pub fn is_special(&self) -> bool {
        self.special.is_some()
    }
}

const WORDPIECE_CONTINUATION: &str = "##";
const SENTENCEPIECE_SPACE: char = '\u{2581}';

/// The byte-to-character table of byte-level BPE: printable Latin-1 bytes
/// map to themselves and the rest are shifted to U+0100 and up.
fn byte_decoder() -> &'static [Option<u8>; 324] {
    static TABLE: OnceLock<[Option<u8>; 324]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [None; 324];
        let printable = |b: u8| matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        let mut shifted = 0u32;
        for b in 0..=255u8 {
            let c = if printable(b) {
                u32::from(b)
            } else {
                shifted += 1;
                255 + shifted
            };
            table[c as usize] = Some(b);
        }
        table
    })
}

/// Decode a byte-level BPE token into its raw bytes, or `None` if it contains
/// characters outside the byte alphabet.
fn byte_level_bytes(token: &str) -> Option<Vec<u8>> {
    let table = byte_decoder();
    token
        .chars()
        .map(|c| table.get(c as usize).copied().flatten())
        .collect()
}

fn is_sentencepiece_byte(token: &str) -> bool {
    let b = token.as_bytes();
    b.len() == 6
        && token.starts_with("<0x")
        && token.ends_with('>')
        && b[3].is_ascii_hexdigit()
        && b[4].is_ascii_hexdigit()
}

fn has_letter(s: &str) -> bool {
    s.chars().any(char::is_alphabetic)
}

/// Strip the subword marker of `token` under `convention` and classify it.
/// Pure and total; `special` is left unset.
pub fn classify_token(token_id: usize, token: &str, convention: Convention) -> TokenShape {
    let shape = |core: &str, position: Position, byte_fallback: bool| TokenShape {
        token_id,
        core_text: core.to_owned(),
        position,
        alphabetic: !byte_fallback && has_letter(core),
        special: None,
        byte_fallback,
    };
    match convention {
        Convention::WordPiece => match token.strip_prefix(WORDPIECE_CONTINUATION) {
            Some(rest) => shape(rest, Position::Continuation, false),
            None => shape(token, Position::WordInitial, false),
        },
        Convention::SentencePiece => {
            if is_sentencepiece_byte(token) {
                return shape(token, Position::Continuation, true);
            }
            match token.strip_prefix(SENTENCEPIECE_SPACE) {
                Some(rest) => shape(rest, Position::WordInitial, false),
                None => shape(token, Position::Continuation, false),
            }
        }
        Convention::BpeByte => match byte_level_bytes(token) {
            Some(bytes) => match String::from_utf8(bytes) {
                Ok(text) => match text.strip_prefix(' ') {
                    Some(rest) => shape(rest, Position::WordInitial, false),
                    None => shape(&text, Position::Continuation, false),
                },
                Err(_) => {
                    let position = if token.starts_with('Ġ') {
                        Position::WordInitial
                    } else {
                        Position::Continuation
                    };
                    shape(token, position, true)
                }
            },
            None => match token.strip_prefix('Ġ') {
                Some(rest) => shape(rest, Position::WordInitial, false),
                None => shape(token, Position::Continuation, false),
            },
        },
        Convention::Plain => shape(token, Position::WordInitial, false),
    }
}
