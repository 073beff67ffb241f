use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use lexbridge::convert::{convert, verify};
use lexbridge::dictionary::{BigramCorpus, CorpusOptions, Dictionary};
use lexbridge::mapper::{Mapper, TokenMapping, TokenizationOverrides};
use lexbridge::report::{neighbor_dump, render_report, summarize};
use lexbridge::subword::{train, SubwordModel};
use lexbridge::vocab::{EmbeddingTable, Vocabulary};
use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{existing, optional, PipelineConfig};
use crate::error::{CliError, Result};

pub const CORPUS: &str = "corpus.txt";
pub const MODEL: &str = "subword.bin";
pub const MAPPING: &str = "mapping.jsonl";
pub const EMBEDDINGS: &str = "target_embeddings.bin";
pub const REPORT: &str = "report.md";
pub const MANIFEST: &str = "manifest.json";

/// `explicit`, or `name` inside the output directory.
pub fn artifact(cfg: &PipelineConfig, explicit: Option<&Path>, name: &str) -> Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p.to_path_buf()),
        None => Ok(cfg.output_dir()?.join(name)),
    }
}

/// A previous stage's output that must already exist.
fn produced(cfg: &PipelineConfig, explicit: Option<&Path>, name: &str, flag: &str) -> Result<PathBuf> {
    let p = artifact(cfg, explicit, name)?;
    if !p.is_file() {
        return Err(CliError::invalid(flag, format!("{} does not exist", p.display())));
    }
    Ok(p)
}

fn prepare(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    prepare(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn load_dictionary(cfg: &PipelineConfig) -> Result<Dictionary> {
    let p = existing("inputs.dictionary", &cfg.inputs.dictionary)?;
    Ok(Dictionary::load_tsv(p, &cfg.tags)?)
}

fn load_source_table(cfg: &PipelineConfig) -> Result<EmbeddingTable> {
    let p = existing("inputs.source_embeddings", &cfg.inputs.source_embeddings)?;
    let table = EmbeddingTable::load(p, cfg.source_convention()?, &cfg.roles)?;
    if let Some(vp) = optional("inputs.source_vocab", &cfg.inputs.source_vocab)? {
        let vocab = Vocabulary::load(vp, cfg.source_convention()?, &cfg.roles)?;
        if vocab.tokens() != table.vocab().tokens() {
            return Err(CliError::invalid(
                "inputs.source_vocab",
                "does not match the vocabulary stored in the source embeddings",
            ));
        }
    }
    Ok(table)
}

fn load_source_vocab(cfg: &PipelineConfig) -> Result<Vocabulary> {
    match optional("inputs.source_vocab", &cfg.inputs.source_vocab)? {
        Some(p) => Ok(Vocabulary::load(p, cfg.source_convention()?, &cfg.roles)?),
        None => Ok(load_source_table(cfg)?.into_parts().0),
    }
}

fn load_target_vocab(cfg: &PipelineConfig) -> Result<Vocabulary> {
    let p = existing("inputs.target_vocab", &cfg.inputs.target_vocab)?;
    Ok(Vocabulary::load(p, cfg.target_convention()?, &cfg.roles)?)
}

pub fn symmetrize(cfg: &PipelineConfig, output: Option<&Path>) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let dict = load_dictionary(cfg)?;
    let out = artifact(cfg, output, CORPUS)?;
    let options = CorpusOptions {
        augment_compounds: cfg.corpus.augment_compounds,
        frequency_weighted: cfg.corpus.frequency_weighted,
        seed,
    };
    let corpus = BigramCorpus::generate(&dict, &cfg.tags, options)?;
    prepare(&out)?;
    corpus.save(&out)?;
    info!("{} dictionary pairs -> {} corpus lines in {}", dict.len(), corpus.len(), out.display());
    Ok(out)
}

pub fn train_subword(cfg: &PipelineConfig, corpus: Option<&Path>, output: Option<&Path>) -> Result<PathBuf> {
    cfg.seed()?;
    let input = produced(cfg, corpus, CORPUS, "--corpus")?;
    let out = artifact(cfg, output, MODEL)?;
    let corpus = BigramCorpus::load(&input)?;
    info!(
        "training on {} lines, dim {}, {} epochs, {} thread(s)",
        corpus.len(),
        cfg.subword.dim,
        cfg.subword.epochs,
        cfg.threads
    );
    let model = train(&corpus, &cfg.subword, cfg.threads)?;
    prepare(&out)?;
    model.save(&out)?;
    info!("{} words -> {}", model.words().len(), out.display());
    Ok(out)
}

pub fn map(cfg: &PipelineConfig, model: Option<&Path>, output: Option<&Path>) -> Result<PathBuf> {
    let model_path = produced(cfg, model, MODEL, "--model")?;
    let out = artifact(cfg, output, MAPPING)?;
    let dict = load_dictionary(cfg)?;
    let source = load_source_vocab(cfg)?;
    let target = load_target_vocab(cfg)?;
    let overrides = match optional("inputs.first_token_overrides", &cfg.inputs.first_token_overrides)? {
        Some(p) => Some(TokenizationOverrides::load(p, &source)?),
        None => None,
    };
    let model = SubwordModel::load(&model_path)?;
    let mut mapper = Mapper::new(&target, &source, &dict, &model, &cfg.tags, &cfg.mapper)?;
    if let Some(o) = &overrides {
        mapper = mapper.with_overrides(o);
    }
    let mapping = mapper.build()?;
    mapping.validate(&target, source.len())?;
    prepare(&out)?;
    mapping.save(&out)?;
    for (case, n) in mapping.case_histogram() {
        info!("{:>18}: {}", case.name(), n);
    }
    Ok(out)
}

pub fn convert_embeddings(cfg: &PipelineConfig, mapping: Option<&Path>, output: Option<&Path>) -> Result<PathBuf> {
    let mapping_path = produced(cfg, mapping, MAPPING, "--mapping")?;
    let out = artifact(cfg, output, EMBEDDINGS)?;
    let source = load_source_table(cfg)?;
    let target = load_target_vocab(cfg)?;
    let mapping = TokenMapping::load(&mapping_path)?;
    let table = convert(&source, &mapping, &target)?;
    let check = verify(&table);
    for v in &check.violations {
        warn!("{}: {}", v.token, v.message);
    }
    info!("{} rows, {} identical to the unknown row", check.rows, check.unk_rows);
    prepare(&out)?;
    table.save(&out)?;
    Ok(out)
}

#[derive(Default)]
pub struct ReportOutputs<'a> {
    pub report: Option<&'a Path>,
    pub stats_json: Option<&'a Path>,
    pub stats_tsv: Option<&'a Path>,
    pub neighbors: Option<&'a Path>,
}

pub fn report(cfg: &PipelineConfig, mapping: Option<&Path>, outputs: &ReportOutputs) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let mapping_path = produced(cfg, mapping, MAPPING, "--mapping")?;
    let out = artifact(cfg, outputs.report, REPORT)?;
    let source = load_source_vocab(cfg)?;
    let target = load_target_vocab(cfg)?;
    let mapping = TokenMapping::load(&mapping_path)?;
    mapping.validate(&target, source.len())?;
    let stats = summarize(&mapping, &target, &source);
    write_text(&out, &render_report(&stats, &mapping, cfg.report.examples_per_case, seed))?;
    if let Some(p) = outputs.stats_json {
        write_text(p, &(stats.to_json() + "\n"))?;
    }
    if let Some(p) = outputs.stats_tsv {
        write_text(p, &stats.to_tsv())?;
    }
    if let Some(p) = outputs.neighbors {
        write_text(p, &neighbor_dump(&mapping))?;
    }
    Ok(out)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a PipelineConfig,
    inputs: BTreeMap<&'static str, InputRecord>,
    artifacts: BTreeMap<&'static str, String>,
}

/// Run every stage into the output directory and write the manifest.
pub fn pipeline(cfg: &PipelineConfig) -> Result<PathBuf> {
    cfg.seed()?;
    let dir = cfg.output_dir()?.to_path_buf();
    // fail on configuration problems before the expensive stages
    load_dictionary(cfg)?;
    load_source_table(cfg)?;
    load_target_vocab(cfg)?;
    optional("inputs.first_token_overrides", &cfg.inputs.first_token_overrides)?;

    symmetrize(cfg, None)?;
    train_subword(cfg, None, None)?;
    map(cfg, None, None)?;
    convert_embeddings(cfg, None, None)?;
    report(cfg, None, &ReportOutputs::default())?;

    let mut inputs = BTreeMap::new();
    for (name, p) in cfg.inputs.named() {
        inputs.insert(
            name,
            InputRecord {
                path: p.given.clone(),
                sha256: sha256_file(&p.path)?,
            },
        );
    }
    let mut artifacts = BTreeMap::new();
    for name in [CORPUS, MODEL, MAPPING, EMBEDDINGS, REPORT] {
        artifacts.insert(name, sha256_file(&dir.join(name))?);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        inputs,
        artifacts,
    };
    let out = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_text(&out, &text)?;
    info!("manifest -> {}", out.display());
    Ok(out)
}
