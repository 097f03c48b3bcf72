use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conceptlearn::concepts::{expand_wildcard, parse_concept};
use conceptlearn::embedding::{EmbeddingSource, EmbeddingStore, Precision};
use conceptlearn::manifest::{read_vocabulary, synthetic_vocabulary, OutputFormat, RunManifest};
use conceptlearn::report::{self, AucComparison, Report, ReferenceValues};
use conceptlearn::{Alternative, Error, Result};

#[derive(Parser)]
#[command(name = "conceptlearn", version, about = "Measure how learnable word lists are from word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every concept in a manifest against every embedding.
    Eval {
        manifest: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Random-list null distribution for one embedding.
    Null {
        manifest: PathBuf,
        #[arg(long)]
        embedding: String,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Paired comparison of per-concept AUCs between two embeddings.
    Compare(CompareArgs),
    /// Write a Gaussian N(0, 1) embedding as a text vector file.
    GenRandomEmbedding {
        /// Vocabulary file, one word per line.
        #[arg(long, conflicts_with = "words", required_unless_present = "words")]
        vocab: Option<PathBuf>,
        /// Synthetic vocabulary w0 .. w{N-1}.
        #[arg(long)]
        words: Option<usize>,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Start the file with a `<count> <dimension>` line.
        #[arg(long)]
        header: bool,
        #[arg(long, value_parser = ["f32", "f64"], default_value = "f32")]
        precision: String,
    },
    /// Expand trailing-`*` entries of a word list against a vector file's vocabulary.
    ExpandWildcards {
        #[arg(long)]
        list: PathBuf,
        /// Text vector file supplying the vocabulary.
        #[arg(long)]
        embedding: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long = "random-lists")]
    random_lists: Option<usize>,
    #[arg(long = "random-list-size")]
    random_list_size: Option<usize>,
    /// Worker threads (default: all hardware threads).
    #[arg(long)]
    workers: Option<usize>,
    /// Directory that receives run folders (default: `runs`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of table,csv,jsonl.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Args)]
struct CompareArgs {
    manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    a: Option<String>,
    #[arg(long, requires = "manifest")]
    b: Option<String>,
    /// CSV with header `concept,<embedding a>,<embedding b>`.
    #[arg(long, conflicts_with_all = ["manifest", "aggregates"])]
    auc_table: Option<PathBuf>,
    /// Two aggregates CSV files from earlier `eval` runs.
    #[arg(long, num_args = 2, conflicts_with = "manifest")]
    aggregates: Option<Vec<PathBuf>>,
    #[arg(long, default_value = "two-sided")]
    alternative: String,
    /// Published W to check the recomputation against.
    #[arg(long)]
    reference_w: Option<f64>,
    #[arg(long)]
    reference_p: Option<f64>,
    #[command(flatten)]
    run: RunFlags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval { manifest, run } => {
            let m = load_manifest(&manifest, &run)?;
            let r = with_workers(run.workers, || report::eval_report(&m))?;
            finish(&m, &run, &r)
        }
        Command::Null { manifest, embedding, run } => {
            let m = load_manifest(&manifest, &run)?;
            let r = with_workers(run.workers, || report::null_report(&m, &embedding))?;
            finish(&m, &run, &r)
        }
        Command::Compare(args) => compare(args),
        Command::GenRandomEmbedding {
            vocab,
            words,
            dim,
            seed,
            out,
            header,
            precision,
        } => {
            let vocabulary = match (vocab, words) {
                (Some(path), _) => read_vocabulary(&path, false)?,
                (None, Some(n)) if n > 0 => synthetic_vocabulary(n),
                _ => return Err(Error::InvalidInput("--words must be positive".into())),
            };
            let precision = if precision == "f64" { Precision::F64 } else { Precision::F32 };
            let name = out.file_stem().and_then(|s| s.to_str()).unwrap_or("random").to_string();
            let store = EmbeddingStore::random_gaussian(name, vocabulary, dim, seed, precision)?;
            store.save_text(&out, header)?;
            eprintln!("wrote {} words x {} dimensions to {}", store.len(), dim, out.display());
            Ok(())
        }
        Command::ExpandWildcards { list, embedding, out } => {
            let store = EmbeddingStore::load(&EmbeddingSource::new("vocabulary", &embedding))?;
            let text = fs::read_to_string(&list).map_err(|e| io_err(&list, e))?;
            let name = list.file_stem().and_then(|s| s.to_str()).unwrap_or("list").to_string();
            let mut lines = Vec::new();
            let mut unmatched = Vec::new();
            for raw in text.lines() {
                let entry = raw.trim().to_lowercase();
                if entry.is_empty() || entry.starts_with('#') {
                    continue;
                }
                if entry.ends_with('*') {
                    let found = expand_wildcard(&entry, &store);
                    if found.is_empty() {
                        unmatched.push(entry.clone());
                    }
                    lines.extend(found);
                } else {
                    lines.push(entry);
                }
            }
            let concept = parse_concept(&lines.join("\n"), &name, &list.display().to_string(), None)?;
            let mut body = concept.words.join("\n");
            body.push('\n');
            match out {
                Some(path) => fs::write(&path, body).map_err(|e| io_err(&path, e))?,
                None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?,
            }
            for u in unmatched {
                eprintln!("warning: {u} matched no vocabulary word");
            }
            Ok(())
        }
    }
}

fn compare(args: CompareArgs) -> Result<()> {
    let alternative: Alternative = args.alternative.parse()?;
    let reference = (args.reference_w.is_some() || args.reference_p.is_some()).then_some(ReferenceValues {
        w: args.reference_w,
        p: args.reference_p,
    });
    if let Some(path) = &args.manifest {
        let (Some(a), Some(b)) = (&args.a, &args.b) else {
            return Err(Error::InvalidInput("compare with a manifest needs --a and --b".into()));
        };
        let m = load_manifest(path, &args.run)?;
        let r = with_workers(args.run.workers, || report::compare_report(&m, a, b, alternative, reference))?;
        return finish(&m, &args.run, &r);
    }
    let cmp = match (&args.auc_table, &args.aggregates) {
        (Some(table), None) => AucComparison::read_table(table)?,
        (None, Some(files)) => AucComparison::from_aggregates(&files[0], &files[1])?,
        _ => {
            return Err(Error::InvalidInput(
                "compare needs a manifest with --a/--b, --auc-table, or --aggregates".into(),
            ))
        }
    };
    let formats = parse_formats(&args.run)?.unwrap_or_else(|| vec![OutputFormat::Table]);
    let header = format!("# conceptlearn compare: {} vs {}\n", cmp.name_a, cmp.name_b);
    let r = report::compare_aucs(&cmp, alternative, reference, &formats, &header)?;
    print!("{}", r.summary);
    if let Some(root) = &args.run.out {
        let dir = report::write_run_dir(root, "compare", &r)?;
        eprintln!("report written to {}", dir.display());
    }
    Ok(())
}

fn parse_formats(run: &RunFlags) -> Result<Option<Vec<OutputFormat>>> {
    run.format
        .as_ref()
        .map(|fs| fs.iter().map(|f| f.trim().parse()).collect())
        .transpose()
}

fn load_manifest(path: &Path, run: &RunFlags) -> Result<RunManifest> {
    let mut m = RunManifest::load(path)?;
    let e = &mut m.experiment;
    if let Some(s) = run.seed {
        e.master_seed = s;
    }
    if let Some(n) = run.iterations {
        e.iterations = n;
    }
    if run.normalize {
        e.normalize = true;
    }
    if let Some(t) = run.threshold {
        e.threshold = t;
    }
    if let Some(n) = run.random_lists {
        e.random_list_count = n;
    }
    if let Some(n) = run.random_list_size {
        e.random_list_size = n;
    }
    if let Some(formats) = parse_formats(run)? {
        m.formats = formats;
    }
    if run.workers == Some(0) {
        return Err(Error::InvalidInput("--workers must be at least 1".into()));
    }
    Ok(m)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?
            .install(f),
    }
}

fn finish(m: &RunManifest, run: &RunFlags, r: &Report) -> Result<()> {
    let root = run.out.clone().or_else(|| m.out.clone()).unwrap_or_else(|| PathBuf::from("runs"));
    let dir = report::write_run_dir(&root, &m.name, r)?;
    print!("{}", r.summary);
    eprintln!("report written to {}", dir.display());
    Ok(())
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
