//! Pipeline configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use lexbridge::dictionary::LanguageTags;
use lexbridge::mapper::MapperConfig;
use lexbridge::subword::SubwordConfig;
use lexbridge::vocab::{Convention, RoleTable};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    inputs: RawInputs,
    #[serde(default)]
    corpus: CorpusSection,
    #[serde(default)]
    subword: toml::Table,
    #[serde(default)]
    mapper: toml::Table,
    #[serde(default)]
    report: ReportSection,
    tags: Option<LanguageTags>,
    roles: Option<RoleTable>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInputs {
    dictionary: Option<PathBuf>,
    source_embeddings: Option<PathBuf>,
    source_vocab: Option<PathBuf>,
    target_vocab: Option<PathBuf>,
    source_convention: Option<String>,
    target_convention: Option<String>,
    first_token_overrides: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub augment_compounds: bool,
    pub frequency_weighted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub examples_per_case: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { examples_per_case: 5 }
    }
}

/// An input path as written by the user, and where it points.
#[derive(Clone, Debug)]
pub struct InputPath {
    pub given: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, Default)]
pub struct Inputs {
    pub dictionary: Option<InputPath>,
    pub source_embeddings: Option<InputPath>,
    pub source_vocab: Option<InputPath>,
    pub target_vocab: Option<InputPath>,
    pub first_token_overrides: Option<InputPath>,
}

impl Inputs {
    pub fn named(&self) -> Vec<(&'static str, &InputPath)> {
        [
            ("dictionary", &self.dictionary),
            ("source_embeddings", &self.source_embeddings),
            ("source_vocab", &self.source_vocab),
            ("target_vocab", &self.target_vocab),
            ("first_token_overrides", &self.first_token_overrides),
        ]
        .into_iter()
        .filter_map(|(name, p)| p.as_ref().map(|p| (name, p)))
        .collect()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Conventions {
    pub source: Option<Convention>,
    pub target: Option<Convention>,
}

/// Fully resolved settings. Serializes to the run-defining part that goes
/// into the manifest: paths and output location are kept out of it.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub threads: usize,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub inputs: Inputs,
    pub conventions: Conventions,
    pub corpus: CorpusSection,
    pub subword: SubwordConfig,
    pub mapper: MapperConfig,
    pub report: ReportSection,
    pub tags: LanguageTags,
    pub roles: RoleTable,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

fn section<T: for<'de> Deserialize<'de>>(name: &str, table: toml::Table, reserved: &[&str]) -> Result<T> {
    for key in reserved {
        if table.contains_key(*key) {
            return Err(CliError::invalid(
                format!("{}.{}", name, key),
                format!("set the top-level `{}` instead", key),
            ));
        }
    }
    T::deserialize(toml::Value::Table(table)).map_err(|e| CliError::invalid(name, e.to_string()))
}

fn convention(field: &str, value: Option<String>) -> Result<Option<Convention>> {
    value
        .map(|v| v.parse().map_err(|e: lexbridge::Error| CliError::invalid(field, e.to_string())))
        .transpose()
}

fn input(base: &Path, p: Option<PathBuf>) -> Option<InputPath> {
    p.map(|p| InputPath {
        given: p.to_string_lossy().into_owned(),
        path: base.join(&p),
    })
}

impl PipelineConfig {
    /// Read the config file at `path` (if any); relative paths inside it
    /// are taken relative to the file.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (raw, base) = match path {
            Some(p) => {
                if !p.is_file() {
                    return Err(CliError::invalid("config", format!("{} does not exist", p.display())));
                }
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let raw: RawConfig =
                    toml::from_str(&text).map_err(|e| CliError::invalid("config", e.to_string()))?;
                (raw, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RawConfig::default(), PathBuf::new()),
        };
        let threads = overrides.threads.or(raw.threads).unwrap_or(1);
        if threads == 0 {
            return Err(CliError::invalid("threads", "must be at least 1"));
        }
        let seed = overrides.seed.or(raw.seed);
        let mut subword: SubwordConfig = section("subword", raw.subword, &["seed"])?;
        subword.seed = seed.unwrap_or_default();
        subword
            .validate()
            .map_err(|e| CliError::invalid("subword", e.to_string()))?;
        let mut mapper: MapperConfig = section("mapper", raw.mapper, &["threads"])?;
        mapper.threads = threads;
        if mapper.k == 0 || mapper.k_max == 0 {
            return Err(CliError::invalid("mapper", "k and k_max must be at least 1"));
        }
        let tags = raw.tags.unwrap_or_default();
        tags.validate().map_err(|e| CliError::invalid("tags", e.to_string()))?;
        let i = raw.inputs;
        Ok(PipelineConfig {
            seed,
            threads,
            output_dir: overrides.output_dir.clone().or(raw.output_dir.map(|d| base.join(d))),
            conventions: Conventions {
                source: convention("inputs.source_convention", i.source_convention)?,
                target: convention("inputs.target_convention", i.target_convention)?,
            },
            inputs: Inputs {
                dictionary: input(&base, i.dictionary),
                source_embeddings: input(&base, i.source_embeddings),
                source_vocab: input(&base, i.source_vocab),
                target_vocab: input(&base, i.target_vocab),
                first_token_overrides: input(&base, i.first_token_overrides),
            },
            corpus: raw.corpus,
            subword,
            mapper,
            report: raw.report,
            tags,
            roles: raw.roles.unwrap_or_default(),
        })
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| CliError::invalid("seed", "a seed is required (config `seed` or --seed)"))
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| CliError::invalid("output_dir", "an output directory is required"))
    }

    pub fn source_convention(&self) -> Result<Convention> {
        self.conventions
            .source
            .ok_or_else(|| CliError::invalid("inputs.source_convention", "missing"))
    }

    pub fn target_convention(&self) -> Result<Convention> {
        self.conventions
            .target
            .ok_or_else(|| CliError::invalid("inputs.target_convention", "missing"))
    }
}

/// A required input file: present in the config and existing on disk.
pub fn existing<'a>(field: &str, p: &'a Option<InputPath>) -> Result<&'a Path> {
    let p = p
        .as_ref()
        .ok_or_else(|| CliError::invalid(field, "missing"))?;
    if !p.path.is_file() {
        return Err(CliError::invalid(
            field,
            format!("{} does not exist", p.path.display()),
        ));
    }
    Ok(&p.path)
}

/// An optional input file: must exist when given.
pub fn optional<'a>(field: &str, p: &'a Option<InputPath>) -> Result<Option<&'a Path>> {
    match p {
        Some(_) => existing(field, p).map(Some),
        None => Ok(None),
    }
}
