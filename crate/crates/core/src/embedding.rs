//! Word embedding storage: text-format loading, lookup, unit normalization and
//! synthetic Gaussian embeddings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::indexed_stream;

/// Layout of a text vector file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorFormat {
    /// Header-prefixed if the first line is exactly two integers, plain otherwise.
    #[default]
    Auto,
    /// Every line is `word v1 .. vd`.
    Plain,
    /// First line is `vocab_count dimension`, followed by plain records.
    HeaderPrefixed,
}

/// Storage width for vector components. Arithmetic is always done in f64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// Where and how to read an embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSource {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: VectorFormat,
    #[serde(default = "default_true")]
    pub lowercase: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_words: Option<usize>,
    #[serde(default)]
    pub precision: Precision,
}

fn default_true() -> bool {
    true
}

impl EmbeddingSource {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        EmbeddingSource {
            name: name.into(),
            path: path.into(),
            format: VectorFormat::Auto,
            lowercase: true,
            max_words: None,
            precision: Precision::F32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Matrix {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl Matrix {
    fn with_capacity(precision: Precision, n: usize) -> Self {
        match precision {
            Precision::F32 => Matrix::F32(Vec::with_capacity(n)),
            Precision::F64 => Matrix::F64(Vec::with_capacity(n)),
        }
    }

    fn extend(&mut self, row: &[f64]) {
        match self {
            Matrix::F32(v) => v.extend(row.iter().map(|&x| x as f32)),
            Matrix::F64(v) => v.extend_from_slice(row),
        }
    }

    fn precision(&self) -> Precision {
        match self {
            Matrix::F32(_) => Precision::F32,
            Matrix::F64(_) => Precision::F64,
        }
    }
}

/// A vocabulary with one dense vector per word.
///
/// Immutable once built. Normalization does not rewrite the stored
/// components: it records each row's Euclidean norm and every read divides by
/// it in f64, so a normalized row has unit length to f64 precision even when
/// components are stored as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    name: String,
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Matrix,
    row_norms: Option<Vec<f64>>,
    skipped_duplicates: usize,
}

impl EmbeddingStore {
    /// Builds a store from explicit rows. Duplicate words are rejected.
    pub fn from_rows<S: Into<String>>(
        name: impl Into<String>,
        words: impl IntoIterator<Item = S>,
        rows: &[Vec<f64>],
        precision: Precision,
    ) -> Result<Self> {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::InvalidInput("embedding vocabulary is empty".into()));
        }
        if words.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} words but {} vectors",
                words.len(),
                rows.len()
            )));
        }
        let dimension = rows[0].len();
        if dimension == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        let mut data = Matrix::with_capacity(precision, dimension * rows.len());
        let mut index = HashMap::with_capacity(words.len());
        for (i, (word, row)) in words.iter().zip(rows).enumerate() {
            if row.len() != dimension {
                return Err(Error::InvalidInput(format!(
                    "vector for {word:?} has {} components, expected {dimension}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("vector for {word:?} is not finite")));
            }
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate word {word:?}")));
            }
            data.extend(row);
        }
        Ok(EmbeddingStore {
            name: name.into(),
            dimension,
            words,
            index,
            data,
            row_norms: None,
            skipped_duplicates: 0,
        })
    }

    /// Reads a text vector file.
    pub fn load(source: &EmbeddingSource) -> Result<Self> {
        if source.max_words == Some(0) {
            return Err(Error::InvalidInput("max_words must be at least 1".into()));
        }
        let file = File::open(&source.path).map_err(|e| Error::io(&source.path, e))?;
        Self::read(source, BufReader::with_capacity(1 << 20, file))
    }

    /// Like [`EmbeddingStore::load`] but from any reader; `source.path` is
    /// only used in error messages.
    pub fn read<R: BufRead>(source: &EmbeddingSource, mut reader: R) -> Result<Self> {
        let path = source.path.as_path();
        let mut buf = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut data = Matrix::with_capacity(source.precision, 0);
        let mut dimension: Option<usize> = None;
        let mut header_dimension: Option<usize> = None;
        let mut skipped = 0usize;
        let mut line_no = 0usize;
        let mut seen_first = false;

        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let line = String::from_utf8_lossy(&buf);
            let line = line.trim_end_matches(['\n', '\r']);
            let mut tokens = line.split_ascii_whitespace();
            let Some(word) = tokens.next() else {
                continue;
            };

            if !seen_first {
                seen_first = true;
                let is_header = is_header_line(line);
                match source.format {
                    VectorFormat::HeaderPrefixed if !is_header => {
                        return Err(parse_err(path, line_no, "expected header `vocab_count dimension`"));
                    }
                    VectorFormat::HeaderPrefixed | VectorFormat::Auto if is_header => {
                        let dim: usize = line.split_ascii_whitespace().nth(1).and_then(|t| t.parse().ok()).unwrap_or(0);
                        if dim == 0 {
                            return Err(parse_err(path, line_no, "header dimension must be positive"));
                        }
                        header_dimension = Some(dim);
                        continue;
                    }
                    _ => {}
                }
            }

            values.clear();
            for token in tokens {
                let v: f64 = token.parse().map_err(|_| {
                    parse_err(path, line_no, &format!("non-numeric token {token:?}"))
                })?;
                if !v.is_finite() {
                    return Err(parse_err(path, line_no, &format!("non-finite value {token:?}")));
                }
                values.push(v);
            }
            if values.is_empty() {
                return Err(parse_err(path, line_no, &format!("word {word:?} has no vector components")));
            }
            let dim = *dimension.get_or_insert(values.len());
            if values.len() != dim {
                return Err(parse_err(
                    path,
                    line_no,
                    &format!("dimension mismatch: expected {dim}, found {}", values.len()),
                ));
            }
            if let Some(hd) = header_dimension {
                if hd != dim {
                    return Err(parse_err(
                        path,
                        line_no,
                        &format!("dimension mismatch: header declares {hd}, found {dim}"),
                    ));
                }
            }

            let key = if source.lowercase {
                word.to_lowercase()
            } else {
                word.to_string()
            };
            if index.contains_key(&key) {
                skipped += 1;
                continue;
            }
            index.insert(key.clone(), words.len());
            words.push(key);
            data.extend(&values);
            if source.max_words.is_some_and(|m| words.len() >= m) {
                break;
            }
        }

        let Some(dimension) = dimension else {
            return Err(Error::EmptyFile {
                path: path.to_path_buf(),
            });
        };
        Ok(EmbeddingStore {
            name: source.name.clone(),
            dimension,
            words,
            index,
            data,
            row_norms: None,
            skipped_duplicates: skipped,
        })
    }

    /// Every component drawn independently from N(0, 1). Row `i` comes from
    /// stream `i` of a ChaCha20 generator keyed by `seed`.
    pub fn random_gaussian<S: Into<String>>(
        name: impl Into<String>,
        vocabulary: impl IntoIterator<Item = S>,
        dimension: usize,
        seed: u64,
        precision: Precision,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        let words: Vec<String> = vocabulary.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::InvalidInput("embedding vocabulary is empty".into()));
        }
        let mut data = Matrix::with_capacity(precision, words.len() * dimension);
        let mut index = HashMap::with_capacity(words.len());
        let mut row = vec![0.0f64; dimension];
        for (i, word) in words.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate word {word:?}")));
            }
            let mut rng = indexed_stream(seed, i as u64);
            for x in row.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            data.extend(&row);
        }
        Ok(EmbeddingStore {
            name: name.into(),
            dimension,
            words,
            index,
            data,
            row_norms: None,
            skipped_duplicates: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Vocabulary in file order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn is_normalized(&self) -> bool {
        self.row_norms.is_some()
    }

    pub fn precision(&self) -> Precision {
        self.data.precision()
    }

    /// Words dropped while loading because an earlier line had the same word.
    pub fn skipped_duplicates(&self) -> usize {
        self.skipped_duplicates
    }

    /// The vector for `word`, or `None` when it is out of vocabulary.
    pub fn lookup(&self, word: &str) -> Option<Vec<f64>> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn row(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.row_into(index, &mut out);
        out
    }

    /// Copies row `index` (normalized if the store is) into `out`.
    pub fn row_into(&self, index: usize, out: &mut [f64]) {
        let d = self.dimension;
        let range = index * d..(index + 1) * d;
        match &self.data {
            Matrix::F32(v) => {
                for (o, &x) in out.iter_mut().zip(&v[range]) {
                    *o = x as f64;
                }
            }
            Matrix::F64(v) => out.copy_from_slice(&v[range]),
        }
        if let Some(norms) = &self.row_norms {
            let norm = norms[index];
            for o in out.iter_mut() {
                *o /= norm;
            }
        }
    }

    /// Row-major `indices.len() x dimension` matrix of the given rows.
    pub fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let d = self.dimension;
        let mut out = vec![0.0; indices.len() * d];
        for (chunk, &i) in out.chunks_exact_mut(d).zip(indices) {
            self.row_into(i, chunk);
        }
        out
    }

    /// Unit-length view of this store. Idempotent.
    pub fn normalize(&self) -> Result<Self> {
        if self.is_normalized() {
            return Ok(self.clone());
        }
        let mut norms = Vec::with_capacity(self.len());
        let mut row = vec![0.0; self.dimension];
        for i in 0..self.len() {
            self.row_into(i, &mut row);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroVector {
                    word: self.words[i].clone(),
                });
            }
            norms.push(norm);
        }
        let mut out = self.clone();
        out.row_norms = Some(norms);
        Ok(out)
    }

    /// Writes the store in text vector format. Values use the shortest
    /// representation that parses back to the same float.
    pub fn write_text<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{} {}", self.len(), self.dimension)?;
        }
        let mut row = vec![0.0; self.dimension];
        for (i, word) in self.words.iter().enumerate() {
            self.row_into(i, &mut row);
            write!(w, "{word}")?;
            match (&self.data, self.is_normalized()) {
                (Matrix::F32(_), false) => {
                    for &x in &row {
                        write!(w, " {}", x as f32)?;
                    }
                }
                _ => {
                    for &x in &row {
                        write!(w, " {x}")?;
                    }
                }
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn save_text(&self, path: &Path, header: bool) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(std::io::BufWriter::new(file), header)
            .map_err(|e| Error::io(path, e))
    }
}

fn is_header_line(line: &str) -> bool {
    let tokens: Vec<&str> = line.split_ascii_whitespace().collect();
    tokens.len() == 2 && tokens.iter().all(|t| t.parse::<u64>().is_ok())
}

fn parse_err(path: &Path, line: usize, message: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}
