//! Word lists ("concepts"), their resolution against an embedding vocabulary,
//! and random lists for null distributions.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use serde::Serialize;

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::rng::SeedPath;

/// Smallest usable concept: two positives for training and two for testing.
pub const MIN_RESOLVED_SIZE: usize = 4;

/// A named set of lowercase words, in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Concept {
    pub name: String,
    pub words: Vec<String>,
    pub source: String,
}

impl Concept {
    /// Folds to lowercase and removes duplicates and blanks.
    pub fn new<S: AsRef<str>>(
        name: impl Into<String>,
        words: impl IntoIterator<Item = S>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if !w.is_empty() && seen.insert(w.clone()) {
                out.push(w);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyConcept { name });
        }
        Ok(Concept {
            name,
            words: out,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Reads a word list: one word per line, `#` starts a comment line.
/// Entries with a trailing `*` are rejected unless `expand_against` supplies
/// a vocabulary to expand them in.
pub fn load_concept(path: &Path, name: &str, expand_against: Option<&EmbeddingStore>) -> Result<Concept> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_concept(&text, name, &path.display().to_string(), expand_against)
}

pub fn parse_concept(
    text: &str,
    name: &str,
    source: &str,
    expand_against: Option<&EmbeddingStore>,
) -> Result<Concept> {
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        if entry.contains('*') {
            match expand_against {
                Some(store) => words.extend(expand_wildcard(entry, store)),
                None => {
                    return Err(Error::Wildcard {
                        name: name.to_string(),
                        entry: entry.to_string(),
                        line: i + 1,
                    })
                }
            }
        } else {
            words.push(entry.to_string());
        }
    }
    Concept::new(name, words, source)
}

/// Vocabulary words matching `pattern`. A trailing `*` matches any suffix;
/// an entry without one matches only itself.
pub fn expand_wildcard(pattern: &str, store: &EmbeddingStore) -> Vec<String> {
    let pattern = pattern.to_lowercase();
    match pattern.strip_suffix('*') {
        Some(prefix) if !prefix.contains('*') => store
            .words()
            .iter()
            .filter(|w| w.starts_with(prefix))
            .cloned()
            .collect(),
        Some(_) => Vec::new(),
        None => {
            if store.contains(&pattern) {
                vec![pattern]
            } else {
                Vec::new()
            }
        }
    }
}

/// A concept split into words present in and absent from one embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolvedConcept {
    pub concept: Concept,
    pub embedding_name: String,
    pub in_vocab: Vec<String>,
    pub dropped: Vec<String>,
    #[serde(skip)]
    indices: Vec<usize>,
}

impl ResolvedConcept {
    pub fn name(&self) -> &str {
        &self.concept.name
    }

    /// Number of usable words.
    pub fn size(&self) -> usize {
        self.in_vocab.len()
    }

    /// Size of the list before resolution.
    pub fn listed_size(&self) -> usize {
        self.concept.len()
    }

    /// Store row of each `in_vocab` word, same order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

pub fn resolve(concept: &Concept, store: &EmbeddingStore) -> Result<ResolvedConcept> {
    let mut in_vocab = Vec::new();
    let mut indices = Vec::new();
    let mut dropped = Vec::new();
    for w in &concept.words {
        match store.index_of(w) {
            Some(i) => {
                in_vocab.push(w.clone());
                indices.push(i);
            }
            None => dropped.push(w.clone()),
        }
    }
    if in_vocab.len() < MIN_RESOLVED_SIZE {
        return Err(Error::ConceptTooSmall {
            name: concept.name.clone(),
            embedding: store.name().to_string(),
            found: in_vocab.len(),
            listed: concept.len(),
            min: MIN_RESOLVED_SIZE,
        });
    }
    Ok(ResolvedConcept {
        concept: concept.clone(),
        embedding_name: store.name().to_string(),
        in_vocab,
        dropped,
        indices,
    })
}

/// Uniform sample of `size` distinct words from the vocabulary minus
/// `exclude`, named `name`.
pub fn random_concept(
    store: &EmbeddingStore,
    name: &str,
    size: usize,
    exclude: &HashSet<String>,
    seed: u64,
) -> Result<ResolvedConcept> {
    if size < MIN_RESOLVED_SIZE {
        return Err(Error::ConceptTooSmall {
            name: name.to_string(),
            embedding: store.name().to_string(),
            found: size,
            listed: size,
            min: MIN_RESOLVED_SIZE,
        });
    }
    let picked = sample_vocabulary(store, size, exclude, seed)?;
    let words: Vec<String> = picked.iter().map(|&i| store.word(i).to_string()).collect();
    let concept = Concept {
        name: name.to_string(),
        words: words.clone(),
        source: format!("random sample, seed {seed}"),
    };
    Ok(ResolvedConcept {
        concept,
        embedding_name: store.name().to_string(),
        in_vocab: words,
        dropped: Vec::new(),
        indices: picked,
    })
}

/// Store rows of `size` distinct words drawn uniformly from the vocabulary
/// minus `exclude`.
pub fn sample_vocabulary(
    store: &EmbeddingStore,
    size: usize,
    exclude: &HashSet<String>,
    seed: u64,
) -> Result<Vec<usize>> {
    let pool: Vec<usize> = if exclude.is_empty() {
        (0..store.len()).collect()
    } else {
        (0..store.len()).filter(|&i| !exclude.contains(store.word(i))).collect()
    };
    if size > pool.len() {
        return Err(Error::VocabularyTooSmall {
            message: format!(
                "random list of {size} words requested but only {} eligible words in {:?}",
                pool.len(),
                store.name()
            ),
        });
    }
    let mut rng = SeedPath::new(seed).label("random-concept").rng();
    Ok(sample(&mut rng, pool.len(), size).into_iter().map(|k| pool[k]).collect())
}
