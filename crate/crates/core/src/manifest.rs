//! Run manifests: which embeddings and word lists to evaluate, and how.
//!
//! A manifest is TOML. Relative paths are taken relative to the manifest's
//! own directory.
//!
//! ```toml
//! name = "liwc-glove"
//! formats = ["table", "csv", "jsonl"]
//!
//! [experiment]
//! iterations = 1000
//! master_seed = 42
//!
//! [[embeddings]]
//! name = "glove"
//! path = "vectors/glove.6B.300d.txt"
//!
//! [[embeddings]]
//! name = "gaussian"
//! random = { dimension = 300, seed = 1, vocabulary_from = "glove" }
//!
//! [[concepts]]
//! name = "family"
//! path = "lists/family.txt"
//! ```

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::concepts::{load_concept, resolve, Concept, ResolvedConcept};
use crate::embedding::{EmbeddingSource, EmbeddingStore, Precision, VectorFormat};
use crate::error::{Error, Result};
use crate::experiment::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Comma-separated table.
    Csv,
    /// One JSON record per line.
    Jsonl,
    /// Fixed-width table for reading.
    Table,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
            OutputFormat::Table => "txt",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            "table" => Ok(OutputFormat::Table),
            other => Err(Error::InvalidInput(format!(
                "unknown format {other:?} (expected csv, jsonl or table)"
            ))),
        }
    }
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Table, OutputFormat::Csv, OutputFormat::Jsonl]
}

fn default_true() -> bool {
    true
}

/// Gaussian N(0, 1) embedding over some vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomEmbeddingSpec {
    pub dimension: usize,
    pub seed: u64,
    /// Reuse the vocabulary of an earlier, file-backed embedding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary_from: Option<String>,
    /// One word per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary_file: Option<PathBuf>,
    /// Synthetic words `w0 .. w{n-1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomEmbeddingSpec>,
    #[serde(default)]
    pub format: VectorFormat,
    #[serde(default = "default_true")]
    pub lowercase: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_words: Option<usize>,
    #[serde(default)]
    pub precision: Precision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptEntry {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    /// Expand trailing-`*` list entries against each embedding's vocabulary.
    #[serde(default)]
    pub expand_wildcards: bool,
    /// Keep the manifest's concept words out of random null lists.
    #[serde(default)]
    pub null_excludes_concepts: bool,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    pub embeddings: Vec<EmbeddingEntry>,
    pub concepts: Vec<ConceptEntry>,
}

impl RunManifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }

    /// Reads a manifest and makes its relative paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.rebase(base);
        Ok(manifest)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for e in &mut self.embeddings {
            if let Some(p) = &mut e.path {
                fix(p);
            }
            if let Some(p) = e.random.as_mut().and_then(|r| r.vocabulary_file.as_mut()) {
                fix(p);
            }
        }
        for c in &mut self.concepts {
            fix(&mut c.path);
        }
        if let Some(out) = &mut self.out {
            fix(out);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// Structural checks plus a readability check on every input file.
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if self.embeddings.is_empty() {
            return Err(Error::Manifest("at least one embedding is required".into()));
        }
        if self.concepts.is_empty() {
            return Err(Error::Manifest("at least one concept is required".into()));
        }
        if self.formats.is_empty() {
            return Err(Error::Manifest("at least one output format is required".into()));
        }
        check_names(self.embeddings.iter().map(|e| e.name.as_str()), "embedding")?;
        check_names(self.concepts.iter().map(|c| c.name.as_str()), "concept")?;

        let mut file_backed = HashSet::new();
        for e in &self.embeddings {
            match (&e.path, &e.random) {
                (Some(path), None) => {
                    check_readable(path)?;
                    if e.max_words == Some(0) {
                        return Err(Error::Manifest(format!("embedding {:?}: max_words must be at least 1", e.name)));
                    }
                    file_backed.insert(e.name.as_str());
                }
                (None, Some(r)) => {
                    if r.dimension == 0 {
                        return Err(Error::Manifest(format!("embedding {:?}: dimension must be positive", e.name)));
                    }
                    let sources = [r.vocabulary_from.is_some(), r.vocabulary_file.is_some(), r.vocabulary_size.is_some()];
                    if sources.iter().filter(|&&s| s).count() != 1 {
                        return Err(Error::Manifest(format!(
                            "embedding {:?}: give exactly one of vocabulary_from, vocabulary_file, vocabulary_size",
                            e.name
                        )));
                    }
                    if let Some(from) = &r.vocabulary_from {
                        if !file_backed.contains(from.as_str()) {
                            return Err(Error::Manifest(format!(
                                "embedding {:?}: vocabulary_from {from:?} must name an earlier file-backed embedding",
                                e.name
                            )));
                        }
                    }
                    if let Some(path) = &r.vocabulary_file {
                        check_readable(path)?;
                    }
                    if r.vocabulary_size == Some(0) {
                        return Err(Error::Manifest(format!("embedding {:?}: vocabulary_size must be positive", e.name)));
                    }
                }
                _ => {
                    return Err(Error::Manifest(format!(
                        "embedding {:?}: give exactly one of `path` or `random`",
                        e.name
                    )))
                }
            }
        }
        for c in &self.concepts {
            check_readable(&c.path)?;
        }
        Ok(())
    }

    pub fn embedding(&self, name: &str) -> Result<&EmbeddingEntry> {
        self.embeddings
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Manifest(format!("no embedding named {name:?}")))
    }

    /// Loads every embedding in manifest order, normalized if the experiment
    /// asks for it.
    pub fn load_embeddings(&self) -> Result<Vec<EmbeddingStore>> {
        let mut raw: HashMap<String, EmbeddingStore> = HashMap::new();
        let mut out = Vec::new();
        for e in &self.embeddings {
            let store = load_entry(e, &raw)?;
            raw.insert(e.name.clone(), store.clone());
            out.push(self.experiment.prepare_store(store)?);
        }
        Ok(out)
    }

    /// Word lists resolved against `store`. Fails on the first unusable list.
    pub fn resolve_concepts(&self, store: &EmbeddingStore) -> Result<Vec<ResolvedConcept>> {
        self.load_concepts(Some(store))?
            .iter()
            .map(|c| resolve(c, store))
            .collect()
    }

    /// Raw word lists. Wildcards expand against `store` when enabled.
    pub fn load_concepts(&self, store: Option<&EmbeddingStore>) -> Result<Vec<Concept>> {
        let expand = if self.expand_wildcards { store } else { None };
        self.concepts
            .iter()
            .map(|c| load_concept(&c.path, &c.name, expand))
            .collect()
    }
}

fn load_entry(e: &EmbeddingEntry, loaded: &HashMap<String, EmbeddingStore>) -> Result<EmbeddingStore> {
    if let Some(path) = &e.path {
        let source = EmbeddingSource {
            name: e.name.clone(),
            path: path.clone(),
            format: e.format,
            lowercase: e.lowercase,
            max_words: e.max_words,
            precision: e.precision,
        };
        return EmbeddingStore::load(&source);
    }
    let r = e
        .random
        .as_ref()
        .ok_or_else(|| Error::Manifest(format!("embedding {:?} has no source", e.name)))?;
    let words: Vec<String> = if let Some(from) = &r.vocabulary_from {
        loaded
            .get(from)
            .ok_or_else(|| Error::Manifest(format!("vocabulary_from {from:?} is not loaded")))?
            .words()
            .to_vec()
    } else if let Some(path) = &r.vocabulary_file {
        read_vocabulary(path, e.lowercase)?
    } else {
        synthetic_vocabulary(r.vocabulary_size.unwrap_or(0))
    };
    EmbeddingStore::random_gaussian(e.name.clone(), words, r.dimension, r.seed, e.precision)
}

/// `w0`, `w1`, ...
pub fn synthetic_vocabulary(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("w{i}")).collect()
}

/// One word per line (first token), deduplicated in order.
pub fn read_vocabulary(path: &Path, lowercase: bool) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut words = Vec::new();
    for line in text.lines() {
        if let Some(w) = line.split_ascii_whitespace().next() {
            let w = if lowercase { w.to_lowercase() } else { w.to_string() };
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
    }
    if words.is_empty() {
        return Err(Error::EmptyFile { path: path.to_path_buf() });
    }
    Ok(words)
}

fn check_names<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if n.is_empty() || n.contains(['/', '\\']) {
            return Err(Error::Manifest(format!("{what} name {n:?} must be non-empty without path separators")));
        }
        if !seen.insert(n) {
            return Err(Error::Manifest(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(())
}

fn check_readable(path: &Path) -> Result<()> {
    File::open(path).map(drop).map_err(|e| Error::io(path, e))
}
