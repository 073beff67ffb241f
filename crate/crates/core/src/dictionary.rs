//! Bilingual dictionaries and the symmetric bigram corpus built from them.
//!
//! Every dictionary entry `(s, t)` becomes the four lines `(ŝ ŝ)`, `(ŝ t̂)`,
//! `(t̂ ŝ)` and `(t̂ t̂)`, where `x̂` is the word wrapped in its language tags.
//! Each word is therefore paired equally often with itself and with its
//! translation, and a word and its translation see the same neighbor
//! distribution.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    Source,
    Target,
}

/// Which of a word's language tags are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TagVariant {
    Full,
    NoStartTag,
    NoEndTag,
}

/// Sentinel characters marking the start and end of a word in each language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageTags {
    pub source_start: char,
    pub source_end: char,
    pub target_start: char,
    pub target_end: char,
}

impl Default for LanguageTags {
    fn default() -> Self {
        LanguageTags {
            source_start: '\u{E000}',
            source_end: '\u{E001}',
            target_start: '\u{E002}',
            target_end: '\u{E003}',
        }
    }
}

impl LanguageTags {
    pub fn start(&self, language: Language) -> char {
        match language {
            Language::Source => self.source_start,
            Language::Target => self.target_start,
        }
    }

    pub fn end(&self, language: Language) -> char {
        match language {
            Language::Source => self.source_end,
            Language::Target => self.target_end,
        }
    }

    pub fn is_sentinel(&self, c: char) -> bool {
        c == self.source_start
            || c == self.source_end
            || c == self.target_start
            || c == self.target_end
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.source_start,
            self.source_end,
            self.target_start,
            self.target_end,
        ];
        for (i, a) in all.iter().enumerate() {
            if a.is_whitespace() {
                return Err(Error::Validation(format!(
                    "tag sentinel {:?} is whitespace",
                    a
                )));
            }
            if all[i + 1..].contains(a) {
                return Err(Error::Validation(format!(
                    "tag sentinel {:?} is used for more than one role",
                    a
                )));
            }
        }
        Ok(())
    }

    /// Wrap `word` in the tags of `language`, dropping one of them for the
    /// partial variants.
    pub fn tag_word(&self, word: &str, language: Language, variant: TagVariant) -> TaggedWord {
        let mut text = String::with_capacity(word.len() + 8);
        if variant != TagVariant::NoStartTag {
            text.push(self.start(language));
        }
        text.push_str(word);
        if variant != TagVariant::NoEndTag {
            text.push(self.end(language));
        }
        TaggedWord {
            text,
            language,
            variant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedWord {
    pub text: String,
    pub language: Language,
    pub variant: TagVariant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DictEntry {
    pub source_word: String,
    pub target_word: String,
    pub frequency: u64,
}

impl DictEntry {
    pub fn new(source_word: impl Into<String>, target_word: impl Into<String>, frequency: u64) -> Self {
        DictEntry {
            source_word: source_word.into(),
            target_word: target_word.into(),
            frequency,
        }
    }
}

fn check_word(word: &str, tags: &LanguageTags) -> std::result::Result<(), String> {
    if word.is_empty() {
        return Err("empty word".to_owned());
    }
    if word.chars().any(char::is_whitespace) {
        return Err(format!("word {:?} contains whitespace", word));
    }
    if let Some(c) = word.chars().find(|&c| tags.is_sentinel(c)) {
        return Err(format!("word {:?} contains tag sentinel {:?}", word, c));
    }
    Ok(())
}

/// Ordered list of word translations. Duplicate pairs are merged on insertion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    entries: Vec<DictEntry>,
}

impl Dictionary {
    /// Build a dictionary, merging repeated `(source, target)` pairs into the
    /// position of their first occurrence with summed frequencies.
    pub fn from_entries<I>(entries: I, tags: &LanguageTags) -> Result<Self>
    where
        I: IntoIterator<Item = DictEntry>,
    {
        let mut merged: Vec<DictEntry> = Vec::new();
        let mut seen: HashMap<(String, String), usize> = HashMap::new();
        for entry in entries {
            for word in [&entry.source_word, &entry.target_word] {
                check_word(word, tags).map_err(Error::Validation)?;
            }
            let key = (entry.source_word.clone(), entry.target_word.clone());
            match seen.get(&key) {
                Some(&idx) => merged[idx].frequency += entry.frequency,
                None => {
                    seen.insert(key, merged.len());
                    merged.push(entry);
                }
            }
        }
        Ok(Dictionary { entries: merged })
    }

    /// Read a `source<TAB>target[<TAB>frequency]` file. Lines starting with
    /// `#` and blank lines are skipped.
    pub fn load_tsv(path: impl AsRef<Path>, tags: &LanguageTags) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(BufReader::new(file), tags)
    }

    pub fn read_tsv<R: BufRead>(reader: R, tags: &LanguageTags) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (source, target, frequency) = match fields.as_slice() {
                [s, t] => (*s, *t, 1),
                [s, t, f] => {
                    let f = f.parse::<u64>().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("invalid frequency {:?}", f),
                    })?;
                    (*s, *t, f)
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
                    })
                }
            };
            for word in [source, target] {
                check_word(word, tags).map_err(|message| Error::Parse {
                    line: lineno,
                    message,
                })?;
            }
            entries.push(DictEntry::new(source, target, frequency));
        }
        Self::from_entries(entries, tags)
    }

    pub fn entries(&self) -> &[DictEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Word pairs, serialized one `left right` pair per line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BigramCorpus {
    pub lines: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CorpusOptions {
    pub augment_compounds: bool,
    pub frequency_weighted: bool,
    pub seed: u64,
}

impl BigramCorpus {
    /// Generate the symmetric bigram corpus of `dict`.
    ///
    /// With `augment_compounds`, each entry additionally contributes the same
    /// four-line block over its `NoStartTag` forms and over its `NoEndTag`
    /// forms, so partial words keep the symmetric neighbor distribution.
    pub fn generate(dict: &Dictionary, tags: &LanguageTags, options: CorpusOptions) -> Result<Self> {
        if dict.is_empty() {
            return Err(Error::Validation("dictionary is empty".to_owned()));
        }

        let variants: &[TagVariant] = if options.augment_compounds {
            &[TagVariant::Full, TagVariant::NoStartTag, TagVariant::NoEndTag]
        } else {
            &[TagVariant::Full]
        };

        let mut lines = Vec::new();
        for entry in dict.entries() {
            let copies = if options.frequency_weighted {
                entry.frequency as usize
            } else {
                1
            };
            for &variant in variants {
                let s = tags.tag_word(&entry.source_word, Language::Source, variant).text;
                let t = tags.tag_word(&entry.target_word, Language::Target, variant).text;
                for _ in 0..copies {
                    lines.push((s.clone(), s.clone()));
                    lines.push((s.clone(), t.clone()));
                    lines.push((t.clone(), s.clone()));
                    lines.push((t.clone(), t.clone()));
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        lines.shuffle(&mut rng);
        Ok(BigramCorpus { lines })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        for (left, right) in &self.lines {
            writeln!(writer, "{} {}", left, right)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(std::io::BufWriter::new(file))
            .map_err(|e| match e {
                Error::Stream(e) => Error::io(path, e),
                e => e,
            })
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    lines.push((l.to_owned(), r.to_owned()))
                }
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: "expected exactly two space-separated words".to_owned(),
                    })
                }
            }
        }
        Ok(BigramCorpus { lines })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn guillemets() -> LanguageTags {
        LanguageTags {
            source_start: '«',
            source_end: '»',
            target_start: '‹',
            target_end: '›',
        }
    }

    fn opts(augment: bool) -> CorpusOptions {
        CorpusOptions {
            augment_compounds: augment,
            frequency_weighted: false,
            seed: 3,
        }
    }

    #[test]
    fn parses_tsv_lines() {
        let tags = LanguageTags::default();
        let d = Dictionary::read_tsv("hond\tdog\t42\n# comment\nkat\tcat\n".as_bytes(), &tags).unwrap();
        assert_eq!(
            d.entries(),
            &[DictEntry::new("hond", "dog", 42), DictEntry::new("kat", "cat", 1)]
        );
    }

    #[test]
    fn merges_duplicates() {
        let tags = LanguageTags::default();
        let d = Dictionary::read_tsv("a\tb\t2\nc\td\na\tb\t3\n".as_bytes(), &tags).unwrap();
        assert_eq!(
            d.entries(),
            &[DictEntry::new("a", "b", 5), DictEntry::new("c", "d", 1)]
        );
    }

    #[test]
    fn reports_malformed_line_number() {
        let tags = LanguageTags::default();
        let err = Dictionary::read_tsv("a\tb\nlonely\n".as_bytes(), &tags).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Dictionary::read_tsv("a\tb\tmany\n".as_bytes(), &tags).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_sentinels() {
        let tags = guillemets();
        let err = Dictionary::read_tsv("a«\tb\n".as_bytes(), &tags).unwrap_err();
        assert!(err.to_string().contains("sentinel"), "{err}");
        let err = Dictionary::from_entries([DictEntry::new("x", "\u{E002}y", 1)], &LanguageTags::default());
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn tags_words() {
        let tags = guillemets();
        assert_eq!(tags.tag_word("dog", Language::Source, TagVariant::Full).text, "«dog»");
        assert_eq!(tags.tag_word("hond", Language::Target, TagVariant::NoEndTag).text, "‹hond");
        assert_eq!(tags.tag_word("dog", Language::Source, TagVariant::NoStartTag).text, "dog»");
    }

    #[test]
    fn four_lines_per_entry() {
        let tags = guillemets();
        let d = Dictionary::from_entries([DictEntry::new("dog", "hond", 1)], &tags).unwrap();
        let corpus = BigramCorpus::generate(&d, &tags, opts(false)).unwrap();
        let mut lines: Vec<String> = corpus.lines.iter().map(|(l, r)| format!("{l} {r}")).collect();
        lines.sort();
        let mut expected = vec!["‹hond› ‹hond›", "‹hond› «dog»", "«dog» ‹hond›", "«dog» «dog»"];
        expected.sort();
        assert_eq!(lines, expected);
    }

    #[test]
    fn augmentation_adds_eight_lines() {
        let tags = guillemets();
        let d = Dictionary::from_entries([DictEntry::new("dog", "hond", 1)], &tags).unwrap();
        let corpus = BigramCorpus::generate(&d, &tags, opts(true)).unwrap();
        assert_eq!(corpus.len(), 12);
        assert!(corpus.lines.contains(&("‹hond".to_owned(), "«dog".to_owned())));
        assert!(corpus.lines.contains(&("dog»".to_owned(), "hond›".to_owned())));
    }

    #[test]
    fn frequency_weighting_replicates() {
        let tags = LanguageTags::default();
        let d = Dictionary::from_entries([DictEntry::new("a", "b", 3)], &tags).unwrap();
        let corpus = BigramCorpus::generate(
            &d,
            &tags,
            CorpusOptions {
                augment_compounds: false,
                frequency_weighted: true,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(corpus.len(), 12);
    }

    #[test]
    fn neighbor_histogram_is_even() {
        let tags = guillemets();
        let d = Dictionary::from_entries([DictEntry::new("b", "a", 1)], &tags).unwrap();
        let corpus = BigramCorpus::generate(&d, &tags, opts(false)).unwrap();
        let mut hist: HashMap<&str, usize> = HashMap::new();
        for (l, r) in &corpus.lines {
            if l == "‹a›" {
                *hist.entry(r).or_default() += 1;
            }
        }
        assert_eq!(hist, HashMap::from([("‹a›", 1), ("«b»", 1)]));
    }

    #[test]
    fn empty_dictionary_is_rejected() {
        let tags = LanguageTags::default();
        let err = BigramCorpus::generate(&Dictionary::default(), &tags, opts(false));
        assert!(err.is_err());
    }

    #[test]
    fn corpus_text_round_trip() {
        let tags = LanguageTags::default();
        let d = Dictionary::from_entries(
            [DictEntry::new("a", "b", 1), DictEntry::new("c", "d", 1)],
            &tags,
        )
        .unwrap();
        let corpus = BigramCorpus::generate(&d, &tags, opts(true)).unwrap();
        let mut buf = Vec::new();
        corpus.write(&mut buf).unwrap();
        assert_eq!(BigramCorpus::read(buf.as_slice()).unwrap(), corpus);
        assert!(BigramCorpus::read("a b c\n".as_bytes()).is_err());
    }
}
