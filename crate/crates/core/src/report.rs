//! Report generation for the `eval`, `null` and `compare` commands.
//!
//! Each command builds a [`Report`]: a list of files (relative paths and
//! contents) that is a pure function of the manifest and its input files.
//! [`write_run_dir`] places them under `runs/<timestamp>-<name>/`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::experiment::{
    empirical_p_value, run_concept, run_null, run_null_sized, AggregateResult, IterationRecord, MetricValues,
    NullDistribution, PValue,
};
use crate::manifest::{OutputFormat, RunManifest};
use crate::metrics::Metric;
use crate::stats::{critical_value, wilcoxon_signed_rank, Alternative, Method, WilcoxonOutcome};

/// Conventions in effect for every run, printed in report headers.
pub const RUN_CONVENTIONS: &str = "odd-sized lists give training the extra word; \
train and test negatives are disjoint and resampled every iteration; \
predicted positive iff score >= threshold; precision is 0 when nothing is predicted positive; \
AUC uses raw scores with ties counted as one half; random(max) is a per-metric maximum over lists; \
p = (1 + #null >= observed) / (1 + N)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFile {
    pub path: PathBuf,
    pub contents: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub files: Vec<ReportFile>,
    /// Human-readable digest for the terminal.
    pub summary: String,
}

impl Report {
    fn add(&mut self, path: impl Into<PathBuf>, contents: String) {
        self.files.push(ReportFile {
            path: path.into(),
            contents,
        });
    }

    pub fn file(&self, path: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|f| f.path == Path::new(path))
            .map(|f| f.contents.as_str())
    }
}

/// Creates `root/<timestamp>-<name>` (suffixed if taken) and writes the
/// report into it.
pub fn write_run_dir(root: &Path, name: &str, report: &Report) -> Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let mut dir = root.join(format!("{stamp}-{name}"));
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{stamp}-{name}-{k}"));
        k += 1;
    }
    write_report(&dir, report)?;
    Ok(dir)
}

pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    for f in &report.files {
        let path = dir.join(&f.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, &f.contents).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// One table row: a concept or a random-list summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub embedding: String,
    pub concept: String,
    pub listed_size: usize,
    pub size: usize,
    pub accuracy: f64,
    pub recall: f64,
    pub fpr: f64,
    pub precision: f64,
    pub auc: f64,
    pub accuracy_sd: Option<f64>,
    pub recall_sd: Option<f64>,
    pub fpr_sd: Option<f64>,
    pub precision_sd: Option<f64>,
    pub auc_sd: Option<f64>,
    pub p_auc: Option<f64>,
    pub p_auc_exceedances: Option<usize>,
    pub null_count: Option<usize>,
}

impl TableRow {
    fn new(embedding: &str, concept: &str, listed: usize, size: usize, mean: &MetricValues) -> Self {
        TableRow {
            embedding: embedding.to_string(),
            concept: concept.to_string(),
            listed_size: listed,
            size,
            accuracy: mean.accuracy,
            recall: mean.recall,
            fpr: mean.fpr,
            precision: mean.precision,
            auc: mean.auc,
            accuracy_sd: None,
            recall_sd: None,
            fpr_sd: None,
            precision_sd: None,
            auc_sd: None,
            p_auc: None,
            p_auc_exceedances: None,
            null_count: None,
        }
    }

    fn from_aggregate(agg: &AggregateResult, p: Option<PValue>) -> Self {
        let mut row = TableRow::new(&agg.embedding, &agg.concept, agg.listed_size, agg.size, &agg.mean);
        row.accuracy_sd = Some(agg.std.accuracy);
        row.recall_sd = Some(agg.std.recall);
        row.fpr_sd = Some(agg.std.fpr);
        row.precision_sd = Some(agg.std.precision);
        row.auc_sd = Some(agg.std.auc);
        if let Some(p) = p {
            row.p_auc = Some(p.value);
            row.p_auc_exceedances = Some(p.exceedances);
            row.null_count = Some(p.null_count);
        }
        row
    }

    fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::Recall => self.recall,
            Metric::Fpr => self.fpr,
            Metric::Precision => self.precision,
            Metric::Auc => self.auc,
        }
    }

    fn p_display(&self) -> String {
        match (self.p_auc, self.p_auc_exceedances, self.null_count) {
            (Some(value), Some(exceedances), Some(null_count)) => PValue {
                value,
                exceedances,
                null_count,
            }
            .to_string(),
            _ => "-".into(),
        }
    }
}

pub const RANDOM_MAX: &str = "random(max)";
pub const RANDOM_AVG: &str = "random(avg)";

fn embedding_header(store: &EmbeddingStore) -> serde_json::Value {
    json!({
        "name": store.name(),
        "dimension": store.dimension(),
        "vocabulary": store.len(),
        "normalized": store.is_normalized(),
        "skipped_duplicates": store.skipped_duplicates(),
    })
}

fn header_lines(kind: &str, manifest: &RunManifest, store: Option<&EmbeddingStore>) -> String {
    let mut s = String::new();
    writeln!(s, "# conceptlearn {kind}: {}", manifest.name).unwrap();
    if let Some(store) = store {
        writeln!(
            s,
            "# embedding: {} (dimension {}, {} words, normalized: {}, duplicates skipped: {})",
            store.name(),
            store.dimension(),
            store.len(),
            store.is_normalized(),
            store.skipped_duplicates()
        )
        .unwrap();
    }
    writeln!(s, "# conventions: {RUN_CONVENTIONS}").unwrap();
    writeln!(s, "# manifest: {}", serde_json::to_string(manifest).unwrap()).unwrap();
    s
}

/// Everything needed up front: loaded stores and resolved concepts for each.
struct Prepared {
    stores: Vec<EmbeddingStore>,
    concepts: Vec<Vec<crate::concepts::ResolvedConcept>>,
}

fn prepare(manifest: &RunManifest, only: Option<&[&str]>) -> Result<Prepared> {
    manifest.validate()?;
    if let Some(names) = only {
        for n in names {
            manifest.embedding(n)?;
        }
    }
    let stores: Vec<EmbeddingStore> = manifest
        .load_embeddings()?
        .into_iter()
        .filter(|s| only.is_none_or(|names| names.contains(&s.name())))
        .collect();
    let concepts = stores
        .iter()
        .map(|s| manifest.resolve_concepts(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { stores, concepts })
}

fn null_exclusions(manifest: &RunManifest, concepts: &[crate::concepts::ResolvedConcept]) -> HashSet<String> {
    if manifest.null_excludes_concepts {
        concepts.iter().flat_map(|c| c.in_vocab.iter().cloned()).collect()
    } else {
        HashSet::new()
    }
}

/// Learnability table per embedding, with random-list rows and AUC p-values.
pub fn eval_report(manifest: &RunManifest) -> Result<Report> {
    let prepared = prepare(manifest, None)?;
    let cfg = &manifest.experiment;
    let mut report = Report::default();
    report.add("config.toml", manifest.to_toml());

    for (store, concepts) in prepared.stores.iter().zip(&prepared.concepts) {
        let exclude = null_exclusions(manifest, concepts);
        let null = run_null(store, cfg, &exclude)?;
        let null_auc = null.values(Metric::Auc);

        let mut rows = Vec::new();
        for concept in concepts {
            let agg = run_concept(store, concept, cfg)?;
            let p = if cfg.size_matched_null && concept.size() != cfg.random_list_size {
                let matched = run_null_sized(store, cfg, concept.size(), &exclude)?;
                empirical_p_value(agg.mean.auc, &matched.values(Metric::Auc))?
            } else {
                empirical_p_value(agg.mean.auc, &null_auc)?
            };
            report.add(
                format!("per-iteration/{}/{}.jsonl", store.name(), concept.name()),
                iteration_lines(&agg.records),
            );
            rows.push(TableRow::from_aggregate(&agg, Some(p)));
        }
        rows.push(TableRow::new(store.name(), RANDOM_MAX, null.list_size, null.list_size, &null.max));
        rows.push(TableRow::new(store.name(), RANDOM_AVG, null.list_size, null.list_size, &null.mean));

        let header = header_lines("eval", manifest, Some(store));
        for &format in &manifest.formats {
            let path = format!("aggregates/{}.{}", store.name(), format.extension());
            let contents = match format {
                OutputFormat::Table => format!("{header}{}", render_table(&rows)),
                OutputFormat::Csv => render_csv(&rows)?,
                OutputFormat::Jsonl => render_jsonl("eval", manifest, store, &rows),
            };
            report.add(path, contents);
        }
        add_null_files(&mut report, manifest, store, &null)?;
        writeln!(report.summary, "{}", header_lines("eval", manifest, Some(store)).lines().nth(1).unwrap_or("")).unwrap();
        report.summary.push_str(&render_table(&rows));
        report.summary.push('\n');
    }
    Ok(report)
}

/// Null distribution for one embedding: the two random rows and every list.
pub fn null_report(manifest: &RunManifest, embedding: &str) -> Result<Report> {
    let prepared = prepare(manifest, Some(&[embedding]))?;
    let store = &prepared.stores[0];
    let exclude = null_exclusions(manifest, &prepared.concepts[0]);
    let null = run_null(store, &manifest.experiment, &exclude)?;
    let mut report = Report::default();
    report.add("config.toml", manifest.to_toml());
    add_null_files(&mut report, manifest, store, &null)?;
    report.summary = render_null_table(&null);
    Ok(report)
}

fn add_null_files(report: &mut Report, manifest: &RunManifest, store: &EmbeddingStore, null: &NullDistribution) -> Result<()> {
    for &format in &manifest.formats {
        let path = format!("null/{}.{}", store.name(), format.extension());
        let contents = match format {
            OutputFormat::Table => format!("{}{}", header_lines("null", manifest, Some(store)), render_null_table(null)),
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["list", "name", "seed", "size", "accuracy", "recall", "fpr", "precision", "auc"])
                    .map_err(csv_err)?;
                for l in &null.lists {
                    let mut rec = vec![l.index.to_string(), l.name.clone(), l.seed.to_string(), null.list_size.to_string()];
                    rec.extend(Metric::ALL.iter().map(|&m| l.mean.get(m).to_string()));
                    w.write_record(&rec).map_err(csv_err)?;
                }
                csv_string(w)?
            }
            OutputFormat::Jsonl => {
                let mut s = String::new();
                let header = json!({
                    "record": "header",
                    "command": "null",
                    "embedding": embedding_header(store),
                    "conventions": RUN_CONVENTIONS,
                    "manifest": manifest,
                });
                writeln!(s, "{header}").unwrap();
                writeln!(s, "{}", json!({"record": "random_max", "size": (null.list_size), "metrics": (null.max)})).unwrap();
                writeln!(s, "{}", json!({"record": "random_avg", "size": (null.list_size), "metrics": (null.mean)})).unwrap();
                for l in &null.lists {
                    writeln!(s, "{}", json!({"record": "list", "list": l})).unwrap();
                }
                s
            }
        };
        report.add(path, contents);
    }
    Ok(())
}

fn iteration_lines(records: &[IterationRecord]) -> String {
    let mut s = String::new();
    for r in records {
        writeln!(s, "{}", serde_json::to_string(r).unwrap()).unwrap();
    }
    s
}

/// Fixed-width table, three decimals.
pub fn render_table(rows: &[TableRow]) -> String {
    let width = rows.iter().map(|r| r.concept.len()).max().unwrap_or(1).max(1);
    let mut s = String::new();
    write!(s, "{:<width$}  {:>6}  {:>6}", "L", "Listed", "Size").unwrap();
    for m in Metric::ALL {
        write!(s, "  {:>8}", m.label()).unwrap();
    }
    writeln!(s, "  {:>8}", "p(AUC)").unwrap();
    for r in rows {
        write!(s, "{:<width$}  {:>6}  {:>6}", r.concept, r.listed_size, r.size).unwrap();
        for m in Metric::ALL {
            write!(s, "  {:>8.3}", r.metric(m)).unwrap();
        }
        writeln!(s, "  {:>8}", r.p_display()).unwrap();
    }
    s
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Full-precision rows, one per line after the header.
pub fn render_csv(rows: &[TableRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    csv_string(w)
}

/// Reads rows written by [`render_csv`].
pub fn read_csv_rows(path: &Path) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => csv_err(e),
    })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })
        })
        .collect()
}

fn render_jsonl(command: &str, manifest: &RunManifest, store: &EmbeddingStore, rows: &[TableRow]) -> String {
    let mut s = String::new();
    let header = json!({
        "record": "header",
        "command": command,
        "embedding": embedding_header(store),
        "conventions": RUN_CONVENTIONS,
        "manifest": manifest,
    });
    writeln!(s, "{header}").unwrap();
    for r in rows {
        let kind = match r.concept.as_str() {
            RANDOM_MAX => "random_max",
            RANDOM_AVG => "random_avg",
            _ => "concept",
        };
        let mut v = serde_json::to_value(r).unwrap();
        v.as_object_mut().unwrap().insert("record".into(), kind.into());
        writeln!(s, "{v}").unwrap();
    }
    s
}

pub fn render_null_table(null: &NullDistribution) -> String {
    let mut s = String::new();
    let rows = [
        TableRow::new(&null.embedding, RANDOM_MAX, null.list_size, null.list_size, &null.max),
        TableRow::new(&null.embedding, RANDOM_AVG, null.list_size, null.list_size, &null.mean),
    ];
    s.push_str(&render_table(&rows));
    writeln!(s, "\n{} random lists of {} words", null.lists.len(), null.list_size).unwrap();
    for m in Metric::ALL {
        writeln!(s, "\n{} histogram", m.label()).unwrap();
        s.push_str(&histogram(&null.values(m), 10));
    }
    s
}

fn histogram(values: &[f64], bins: usize) -> String {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = String::new();
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        writeln!(s, "  [{lo:.4}, {hi:.4}]  {}", values.len()).unwrap();
        return s;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1);
    for (b, &c) in counts.iter().enumerate() {
        let left = lo + b as f64 * width;
        let close = if b + 1 == bins { ']' } else { ')' };
        let bar = "#".repeat((c * 40).div_ceil(peak));
        writeln!(s, "  [{left:.4}, {:.4}{close}  {c:>6}  {bar}", left + width).unwrap();
    }
    s
}

/// Published or previously computed statistic to check a recomputation against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub w: Option<f64>,
    pub p: Option<f64>,
}

/// Per-concept AUCs of two embeddings over the same concepts.
#[derive(Debug, Clone, PartialEq)]
pub struct AucComparison {
    pub name_a: String,
    pub name_b: String,
    pub concepts: Vec<String>,
    pub auc_a: Vec<f64>,
    pub auc_b: Vec<f64>,
}

impl AucComparison {
    /// Pairs up two AUC columns by concept name; the concept sets must match.
    pub fn pair(name_a: &str, a: &[(String, f64)], name_b: &str, b: &[(String, f64)]) -> Result<Self> {
        let set_a: BTreeSet<&str> = a.iter().map(|(c, _)| c.as_str()).collect();
        let set_b: BTreeSet<&str> = b.iter().map(|(c, _)| c.as_str()).collect();
        if set_a != set_b || set_a.len() != a.len() || set_b.len() != b.len() {
            let only_a: Vec<&str> = set_a.difference(&set_b).copied().collect();
            let only_b: Vec<&str> = set_b.difference(&set_a).copied().collect();
            return Err(Error::InvalidInput(format!(
                "concept sets differ: only in {name_a}: {only_a:?}; only in {name_b}: {only_b:?}"
            )));
        }
        let concepts: Vec<String> = a.iter().map(|(c, _)| c.clone()).collect();
        let auc_b = concepts
            .iter()
            .map(|c| b.iter().find(|(cb, _)| cb == c).map(|(_, v)| *v).unwrap())
            .collect();
        Ok(AucComparison {
            name_a: name_a.to_string(),
            name_b: name_b.to_string(),
            concepts,
            auc_a: a.iter().map(|(_, v)| *v).collect(),
            auc_b,
        })
    }

    /// Reads `concept,<embedding a>,<embedding b>` with a header row.
    pub fn read_table(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "expected header `concept,<embedding a>,<embedding b>`".into(),
            });
        }
        let mut cmp = AucComparison {
            name_a: headers[1].trim().to_string(),
            name_b: headers[2].trim().to_string(),
            concepts: Vec::new(),
            auc_a: Vec::new(),
            auc_b: Vec::new(),
        };
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k).unwrap_or("").trim().parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: format!("non-numeric AUC {:?}", rec.get(k).unwrap_or("")),
                })
            };
            cmp.concepts.push(rec.get(0).unwrap_or("").trim().to_string());
            cmp.auc_a.push(parse(1)?);
            cmp.auc_b.push(parse(2)?);
        }
        Ok(cmp)
    }

    /// Concept AUCs from two `aggregates/<embedding>.csv` files.
    pub fn from_aggregates(a: &Path, b: &Path) -> Result<Self> {
        let load = |p: &Path| -> Result<(String, Vec<(String, f64)>)> {
            let rows = read_csv_rows(p)?;
            let name = rows
                .first()
                .map(|r| r.embedding.clone())
                .ok_or_else(|| Error::EmptyFile { path: p.to_path_buf() })?;
            let aucs = rows
                .into_iter()
                .filter(|r| r.concept != RANDOM_MAX && r.concept != RANDOM_AVG)
                .map(|r| (r.concept, r.auc))
                .collect();
            Ok((name, aucs))
        };
        let (na, va) = load(a)?;
        let (nb, vb) = load(b)?;
        Self::pair(&na, &va, &nb, &vb)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Outcome of a paired comparison, or why there is none.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonTest {
    Done(WilcoxonOutcome),
    Indistinguishable,
}

/// AUC columns, mean and median rows, and the signed-rank test of a - b.
pub fn compare_aucs(
    cmp: &AucComparison,
    alternative: Alternative,
    reference: Option<ReferenceValues>,
    formats: &[OutputFormat],
    header: &str,
) -> Result<Report> {
    if cmp.concepts.len() < 2 {
        return Err(Error::InvalidInput("comparison needs at least two concepts".into()));
    }
    let test = match wilcoxon_signed_rank(&cmp.auc_a, &cmp.auc_b, alternative) {
        Ok(o) => ComparisonTest::Done(o),
        Err(Error::AllZeroDifferences) => ComparisonTest::Indistinguishable,
        Err(e) => return Err(e),
    };
    let stem = format!("compare/{}-vs-{}", cmp.name_a, cmp.name_b);
    let mut report = Report::default();
    let text = render_comparison_text(cmp, &test, alternative, reference);
    for &format in formats {
        let contents = match format {
            OutputFormat::Table => format!("{header}{text}"),
            OutputFormat::Csv => render_comparison_csv(cmp, &test)?,
            OutputFormat::Jsonl => render_comparison_jsonl(cmp, &test, alternative, reference, header),
        };
        report.add(format!("{stem}.{}", format.extension()), contents);
    }
    report.summary = text;
    Ok(report)
}

/// Evaluates embeddings `a` and `b` on the manifest's concepts and compares
/// their AUCs.
pub fn compare_report(
    manifest: &RunManifest,
    a: &str,
    b: &str,
    alternative: Alternative,
    reference: Option<ReferenceValues>,
) -> Result<Report> {
    if a == b {
        return Err(Error::InvalidInput("compare needs two different embeddings".into()));
    }
    let prepared = prepare(manifest, Some(&[a, b]))?;
    let mut columns = Vec::new();
    let mut report = Report::default();
    report.add("config.toml", manifest.to_toml());
    for (store, concepts) in prepared.stores.iter().zip(&prepared.concepts) {
        let mut col = Vec::new();
        for c in concepts {
            let agg = run_concept(store, c, &manifest.experiment)?;
            report.add(
                format!("per-iteration/{}/{}.jsonl", store.name(), c.name()),
                iteration_lines(&agg.records),
            );
            col.push((c.name().to_string(), agg.mean.auc));
        }
        columns.push((store.name().to_string(), col));
    }
    let (ia, ib) = if columns[0].0 == a { (0, 1) } else { (1, 0) };
    let cmp = AucComparison::pair(&columns[ia].0, &columns[ia].1, &columns[ib].0, &columns[ib].1)?;
    let header = header_lines("compare", manifest, None);
    let inner = compare_aucs(&cmp, alternative, reference, &manifest.formats, &header)?;
    report.files.extend(inner.files);
    report.summary = inner.summary;
    Ok(report)
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

fn render_comparison_text(
    cmp: &AucComparison,
    test: &ComparisonTest,
    alternative: Alternative,
    reference: Option<ReferenceValues>,
) -> String {
    let mut s = String::new();
    let width = cmp.concepts.iter().map(String::len).chain([6]).max().unwrap();
    let col = cmp.name_a.len().max(cmp.name_b.len()).max(7);
    writeln!(s, "{:<width$}  {:>col$}  {:>col$}", "L", cmp.name_a, cmp.name_b).unwrap();
    let cell = |v: f64, other: f64| {
        let mark = if v >= other { "*" } else { " " };
        format!("{v:.3}{mark}")
    };
    let mut line = |label: &str, a: f64, b: f64| {
        writeln!(s, "{label:<width$}  {:>col$} {:>col$}", cell(a, b), cell(b, a)).unwrap();
    };
    for ((c, &a), &b) in cmp.concepts.iter().zip(&cmp.auc_a).zip(&cmp.auc_b) {
        line(c, a, b);
    }
    line("Mean", mean(&cmp.auc_a), mean(&cmp.auc_b));
    line("Median", median(&cmp.auc_a), median(&cmp.auc_b));
    writeln!(s, "(* marks the higher AUC in each row)").unwrap();

    writeln!(
        s,
        "\nWilcoxon signed-rank test: x = {}, y = {}, alternative: {alternative}",
        cmp.name_a, cmp.name_b
    )
    .unwrap();
    let o = match test {
        ComparisonTest::Indistinguishable => {
            writeln!(s, "embeddings indistinguishable: all paired differences are zero").unwrap();
            return s;
        }
        ComparisonTest::Done(o) => o,
    };
    writeln!(s, "pairs: {} ({} zero differences dropped)", o.n_effective, o.n_zero).unwrap();
    writeln!(
        s,
        "W+ = {}  W- = {}  W = {}",
        fmt_num(o.w_plus),
        fmt_num(o.w_minus),
        fmt_num(o.w_statistic)
    )
    .unwrap();
    let how = match o.method {
        Method::ExactEnumeration => format!("exact, all 2^{} sign assignments", o.n_effective),
        Method::NormalApproximation => "normal approximation with tie and continuity correction".to_string(),
    };
    writeln!(s, "p = {:.6} ({how})", o.p_value).unwrap();
    let two_sided = alternative == Alternative::TwoSided;
    for alpha in [0.01, 0.05] {
        let sides = if two_sided { "two-sided" } else { "one-sided" };
        match critical_value(o.n_effective, alpha, two_sided) {
            Some(w) => {
                let verdict = if o.w_statistic <= w as f64 { "reject H0" } else { "do not reject H0" };
                writeln!(s, "critical W (alpha {alpha}, {sides}, n = {}): {w} -> {verdict}", o.n_effective).unwrap()
            }
            None => writeln!(s, "critical W (alpha {alpha}, {sides}, n = {}): none", o.n_effective).unwrap(),
        }
    }
    if let Some(r) = reference {
        s.push_str(&reference_note(o, r));
    }
    s
}

fn reference_note(o: &WilcoxonOutcome, r: ReferenceValues) -> String {
    let mut s = String::new();
    let mut parts = Vec::new();
    if let Some(w) = r.w {
        parts.push(format!("W = {}", fmt_num(w)));
    }
    if let Some(p) = r.p {
        parts.push(format!("p = {p}"));
    }
    writeln!(s, "reference: {}", parts.join(", ")).unwrap();
    let w_differs = r.w.is_some_and(|w| w != o.w_statistic);
    let p_differs = r.p.is_some_and(|p| (p - o.p_value).abs() > 5e-5);
    if w_differs || p_differs {
        writeln!(
            s,
            "note: recomputed W = {} and p = {:.6} differ from the reference. The recomputation ranks the AUCs \
             exactly as given; rounded inputs can tie or reorder differences, so this is reported rather than matched.",
            fmt_num(o.w_statistic),
            o.p_value
        )
        .unwrap();
    } else {
        writeln!(s, "note: recomputation agrees with the reference").unwrap();
    }
    s
}

fn render_comparison_csv(cmp: &AucComparison, test: &ComparisonTest) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["concept", &cmp.name_a, &cmp.name_b, "difference", "signed_rank"])
        .map_err(csv_err)?;
    let ranks: Vec<f64> = match test {
        ComparisonTest::Done(o) => o.signed_ranks.clone(),
        ComparisonTest::Indistinguishable => Vec::new(),
    };
    // signed ranks skip zero differences; walk them alongside
    let mut rank_iter = ranks.iter();
    for ((c, &a), &b) in cmp.concepts.iter().zip(&cmp.auc_a).zip(&cmp.auc_b) {
        let d = a - b;
        let is_zero = (a - b).abs() <= crate::stats::DEFAULT_TIE_TOLERANCE * a.abs().max(b.abs());
        let rank = if is_zero {
            "0".to_string()
        } else {
            rank_iter.next().map(|r| r.to_string()).unwrap_or_default()
        };
        w.write_record([c.clone(), a.to_string(), b.to_string(), d.to_string(), rank])
            .map_err(csv_err)?;
    }
    let (ma, mb) = (mean(&cmp.auc_a), mean(&cmp.auc_b));
    w.write_record(["Mean".into(), ma.to_string(), mb.to_string(), (ma - mb).to_string(), String::new()])
        .map_err(csv_err)?;
    let (da, db) = (median(&cmp.auc_a), median(&cmp.auc_b));
    w.write_record(["Median".into(), da.to_string(), db.to_string(), (da - db).to_string(), String::new()])
        .map_err(csv_err)?;
    csv_string(w)
}

fn render_comparison_jsonl(
    cmp: &AucComparison,
    test: &ComparisonTest,
    alternative: Alternative,
    reference: Option<ReferenceValues>,
    header: &str,
) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{}",
        json!({"record": "header", "x": cmp.name_a, "y": cmp.name_b, "alternative": alternative, "context": header.trim_end()})
    )
    .unwrap();
    for ((c, &a), &b) in cmp.concepts.iter().zip(&cmp.auc_a).zip(&cmp.auc_b) {
        writeln!(s, "{}", json!({"record": "concept", "concept": c, "auc_x": a, "auc_y": b})).unwrap();
    }
    writeln!(s, "{}", json!({"record": "mean", "auc_x": mean(&cmp.auc_a), "auc_y": mean(&cmp.auc_b)})).unwrap();
    writeln!(s, "{}", json!({"record": "median", "auc_x": median(&cmp.auc_a), "auc_y": median(&cmp.auc_b)})).unwrap();
    match test {
        ComparisonTest::Done(o) => {
            let two_sided = alternative == Alternative::TwoSided;
            writeln!(
                s,
                "{}",
                json!({
                    "record": "wilcoxon",
                    "outcome": o,
                    "critical_w_0.01": critical_value(o.n_effective, 0.01, two_sided),
                    "critical_w_0.05": critical_value(o.n_effective, 0.05, two_sided),
                    "reference": reference,
                })
            )
            .unwrap();
        }
        ComparisonTest::Indistinguishable => {
            writeln!(s, "{}", json!({"record": "wilcoxon", "outcome": null, "note": "embeddings indistinguishable"})).unwrap();
        }
    }
    s
}
