//! Acceptance criteria. Each prints one PASS/FAIL line; any failure makes
//! the process exit non-zero.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use conceptlearn::concepts::{random_concept, resolve, Concept};
use conceptlearn::manifest::synthetic_vocabulary;
use conceptlearn::metrics::Metric;
use conceptlearn::perceptron::loss_and_gradient;
use conceptlearn::report::{compare_aucs, AucComparison, ReferenceValues};
use conceptlearn::stats::Method;
use conceptlearn::{
    empirical_p_value, roc_auc, run_concept, wilcoxon_signed_rank, Alternative, EmbeddingStore, ExperimentConfig,
    Precision,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const LIST_SIZES: [(&str, usize); 10] = [
    ("posemo", 392),
    ("negemo", 492),
    ("anger", 184),
    ("bio", 558),
    ("relative", 632),
    ("affect", 908),
    ("social", 396),
    ("work", 322),
    ("family", 54),
    ("health", 232),
];

fn random_embedding_baseline() -> Outcome {
    let store = EmbeddingStore::random_gaussian("gaussian", synthetic_vocabulary(20_000), 300, 2024, Precision::F32)
        .map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        iterations: 200,
        master_seed: 11,
        ..Default::default()
    };
    let mut lo = (f64::INFINITY, String::new());
    let mut hi = (f64::NEG_INFINITY, String::new());
    for (k, (name, size)) in LIST_SIZES.iter().enumerate() {
        let concept = random_concept(&store, name, *size, &HashSet::new(), 500 + k as u64).map_err(|e| e.to_string())?;
        let agg = run_concept(&store, &concept, &cfg).map_err(|e| e.to_string())?;
        for m in Metric::ALL {
            let v = agg.mean.get(m);
            if v < lo.0 {
                lo = (v, format!("{name} {}", m.label()));
            }
            if v > hi.0 {
                hi = (v, format!("{name} {}", m.label()));
            }
            ensure((0.45..=0.55).contains(&v), || format!("{name} (size {size}) {} = {v:.4}", m.label()))?;
        }
    }
    Ok(format!(
        "all 50 means in [0.45, 0.55]; lowest {:.3} ({}), highest {:.3} ({})",
        lo.0, lo.1, hi.0, hi.1
    ))
}

/// P(N(3,1) > N(0,1)) by integrating phi(t - 3) * Phi(t) with Simpson's rule.
fn bayes_auc_by_integration() -> f64 {
    let n01 = Normal::standard();
    let (a, b, steps) = (-12.0, 15.0, 20_000);
    let h = (b - a) / steps as f64;
    let f = |t: f64| n01.pdf(t - 3.0) * n01.cdf(t);
    let mut sum = f(a) + f(b);
    for i in 1..steps {
        let t = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    sum * h / 3.0
}

fn separable_concept() -> Outcome {
    let oracle = bayes_auc_by_integration();
    let closed = Normal::standard().cdf(3.0 / 2f64.sqrt());
    ensure((oracle - closed).abs() < 1e-9, || format!("integration {oracle} vs closed form {closed}"))?;
    ensure((oracle - 0.983).abs() < 5e-4, || format!("Bayes AUC {oracle}"))?;

    let (store, concept) = separable_store(200, 2000, 10, 3.0, 77);
    let resolved = resolve(&concept, &store).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        iterations: 100,
        master_seed: 5,
        ..Default::default()
    };
    let agg = run_concept(&store, &resolved, &cfg).map_err(|e| e.to_string())?;
    ensure(agg.mean.auc >= 0.90, || format!("mean AUC {:.4} < 0.90", agg.mean.auc))?;
    Ok(format!("mean AUC {:.4} (Bayes {oracle:.4})", agg.mean.auc))
}

/// Concept words `c0..` drawn N(shift * e1, I), background `b0..` N(0, I).
fn separable_store(concept: usize, background: usize, dim: usize, shift: f64, seed: u64) -> (EmbeddingStore, Concept) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::new();
    let mut rows = Vec::new();
    for i in 0..concept + background {
        let mut row: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        if i < concept {
            row[0] += shift;
            words.push(format!("c{i}"));
        } else {
            words.push(format!("b{}", i - concept));
        }
        rows.push(row);
    }
    let store = EmbeddingStore::from_rows("separable", words.clone(), &rows, Precision::F64).unwrap();
    let concept = Concept::new("shifted", &words[..concept], "generated").unwrap();
    (store, concept)
}

fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut with_ties = 0;
    for case in 0..1000 {
        let n = rng.random_range(2..=200);
        // coarse grids force ties
        let levels = [0u32, 3, 10, 1000][case % 4];
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if levels == 0 {
                    rng.random::<f64>()
                } else {
                    rng.random_range(0..levels) as f64 / levels as f64
                }
            })
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let distinct: HashSet<u64> = scores.iter().map(|s| s.to_bits()).collect();
        if distinct.len() < n {
            with_ties += 1;
        }
        let fast = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        let slow = brute_force_auc(&scores, &labels);
        worst = worst.max((fast - slow).abs());
        ensure((fast - slow).abs() <= 1e-12, || format!("case {case}: {fast} vs {slow}"))?;
    }
    Ok(format!("1000 instances ({with_ties} with ties), max |diff| {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..100 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(2..=20);
        let l2 = if case % 3 == 0 { rng.random_range(0.0..0.5) } else { 0.0 };
        let x: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);

        let mut grad = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        let (_, grad_b) = loss_and_gradient(&w, b, &x, &labels, l2, &mut grad);
        let loss_at = |w: &[f64], b: f64, scratch: &mut [f64]| loss_and_gradient(w, b, &x, &labels, l2, scratch).0;

        let mut analytic = grad.clone();
        analytic.push(grad_b);
        let mut numeric = Vec::with_capacity(d + 1);
        for k in 0..d {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[k] += h;
            wm[k] -= h;
            numeric.push((loss_at(&wp, b, &mut scratch) - loss_at(&wm, b, &mut scratch)) / (2.0 * h));
        }
        numeric.push((loss_at(&w, b + h, &mut scratch) - loss_at(&w, b - h, &mut scratch)) / (2.0 * h));

        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        let rel = diff / scale;
        worst = worst.max(rel);
        ensure(rel <= 1e-5, || format!("case {case}: relative error {rel:.2e}"))?;
    }
    Ok(format!("100 instances, max relative error {worst:.1e}"))
}

/// p-value by listing all 2^n sign assignments of the average ranks.
fn enumeration_p(x: &[f64], y: &[f64], alt: Alternative) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    // twice the average rank: 2 * (#smaller) + (#equal) + 1
    let r2: Vec<u64> = d
        .iter()
        .map(|di| {
            let smaller = d.iter().filter(|dj| dj.abs() < di.abs()).count() as u64;
            let equal = d.iter().filter(|dj| dj.abs() == di.abs()).count() as u64;
            2 * smaller + equal + 1
        })
        .collect();
    let observed: u64 = d.iter().zip(&r2).filter(|(di, _)| **di > 0.0).map(|(_, r)| r).sum();
    let (mut ge, mut le) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let s: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r2[i]).sum();
        ge += (s >= observed) as u64;
        le += (s <= observed) as u64;
    }
    let all = (1u64 << n) as f64;
    let (upper, lower) = (ge as f64 / all, le as f64 / all);
    match alt {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

const PUBLISHED_AUCS: [(&str, f64, f64); 10] = [
    ("posemo", 0.961, 0.965),
    ("negemo", 0.965, 0.973),
    ("anger", 0.957, 0.970),
    ("bio", 0.960, 0.974),
    ("relative", 0.971, 0.961),
    ("affect", 0.960, 0.958),
    ("social", 0.960, 0.973),
    ("work", 0.947, 0.970),
    ("family", 0.948, 0.963),
    ("health", 0.952, 0.975),
];

fn wilcoxon_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alts = [Alternative::TwoSided, Alternative::Greater, Alternative::Less];
    let mut checked = 0;
    for sample in 0..200 {
        let n = 2 + sample % 11;
        // integer grid: equal magnitudes tie exactly, equal values give zeros
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| if rng.random_bool(0.15) { v } else { rng.random_range(0..8) as f64 / 4.0 })
            .collect();
        for alt in alts {
            match wilcoxon_signed_rank(&x, &y, alt) {
                Ok(o) => {
                    ensure(o.method == Method::ExactEnumeration, || "expected exact method".into())?;
                    let want = enumeration_p(&x, &y, alt);
                    ensure(o.p_value == want, || format!("sample {sample} {alt}: {} vs {want}", o.p_value))?;
                    checked += 1;
                }
                Err(conceptlearn::Error::AllZeroDifferences) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
    }

    let fasttext: Vec<f64> = PUBLISHED_AUCS.iter().map(|r| r.2).collect();
    let glove: Vec<f64> = PUBLISHED_AUCS.iter().map(|r| r.1).collect();
    let o = wilcoxon_signed_rank(&fasttext, &glove, Alternative::Greater).map_err(|e| e.to_string())?;
    ensure(o.w_minus == 5.0 && o.w_plus == 50.0, || format!("W- = {}, W+ = {}", o.w_minus, o.w_plus))?;
    ensure(o.p_value == enumeration_p(&fasttext, &glove, Alternative::Greater), || "table p".into())?;

    let cmp = AucComparison {
        name_a: "fasttext".into(),
        name_b: "glove".into(),
        concepts: PUBLISHED_AUCS.iter().map(|r| r.0.to_string()).collect(),
        auc_a: fasttext,
        auc_b: glove,
    };
    let reference = ReferenceValues {
        w: Some(3.0),
        p: Some(0.0088),
    };
    let report = compare_aucs(&cmp, Alternative::Greater, Some(reference), &[], "").map_err(|e| e.to_string())?;
    let text = report.summary;
    ensure(text.contains("W = 5"), || format!("report lacks W = 5:\n{text}"))?;
    ensure(text.contains("reference: W = 3, p = 0.0088"), || format!("report lacks reference:\n{text}"))?;
    ensure(text.contains("differ from the reference"), || format!("report lacks note:\n{text}"))?;
    Ok(format!(
        "{checked} tests equal enumeration; table pairs give W- = 5, exact p = {:.6}, reference note present",
        o.p_value
    ))
}

fn write_separable_inputs(dir: &Path, random_lists: usize) -> std::path::PathBuf {
    let (store, concept) = separable_store(60, 1200, 6, 3.0, 99);
    store.save_text(&dir.join("vectors.txt"), false).unwrap();
    fs::write(dir.join("shifted.txt"), concept.words.join("\n")).unwrap();
    let (_, other) = separable_store(60, 1200, 6, 3.0, 99);
    fs::write(dir.join("mixed.txt"), other.words[..20].join("\n") + "\nb1\nb2\nb3\nb4\nb5\nb6\n").unwrap();
    let manifest = format!(
        "name = \"accept\"\n\
         null_excludes_concepts = true\n\
         [experiment]\n\
         iterations = 10\n\
         random_list_count = {random_lists}\n\
         random_list_size = 40\n\
         master_seed = 8\n\
         [[embeddings]]\n\
         name = \"sep\"\n\
         path = \"vectors.txt\"\n\
         [[embeddings]]\n\
         name = \"gauss\"\n\
         random = {{ dimension = 6, seed = 3, vocabulary_from = \"sep\" }}\n\
         [[concepts]]\n\
         name = \"shifted\"\n\
         path = \"shifted.txt\"\n\
         [[concepts]]\n\
         name = \"mixed\"\n\
         path = \"mixed.txt\"\n"
    );
    let path = dir.join("manifest.toml");
    fs::write(&path, manifest).unwrap();
    path
}

fn null_p_values() -> Outcome {
    let n: Vec<f64> = (0..1000).map(|i| 0.4 + i as f64 * 1e-4).collect();
    let p = empirical_p_value(0.95, &n).map_err(|e| e.to_string())?;
    ensure(p.value == 1.0 / 1001.0, || format!("p = {}", p.value))?;
    ensure(p.to_string() == "< 0.001", || format!("printed {p}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = write_separable_inputs(dir.path(), 1000);
    let m = conceptlearn::manifest::RunManifest::load(&manifest).map_err(|e| e.to_string())?;
    let report = conceptlearn::report::eval_report(&m).map_err(|e| e.to_string())?;
    let table = report.file("aggregates/sep.txt").ok_or("missing table")?;
    let row = table.lines().find(|l| l.starts_with("shifted")).ok_or("missing row")?;
    ensure(row.ends_with("< 0.001"), || format!("row: {row}"))?;
    let csv = report.file("aggregates/sep.csv").ok_or("missing csv")?;
    let line = csv.lines().find(|l| l.contains(",shifted,")).ok_or("missing csv row")?;
    let expected = (1.0f64 / 1001.0).to_string();
    ensure(line.contains(&format!(",{expected},0,1000")), || format!("csv: {line}"))?;
    Ok("observed above all 1000 nulls prints \"< 0.001\", p = 1/1001".into())
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = write_separable_inputs(dir.path(), 40);
    let mut trees = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("runs-{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_conceptlearn"))
            .args(["eval", manifest.to_str().unwrap(), "--workers", workers, "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        let runs: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        ensure(runs.len() == 1, || format!("{} run folders", runs.len()))?;
        trees.push(read_tree(&runs[0]));
    }
    let (a, b) = (&trees[0], &trees[1]);
    ensure(a.keys().eq(b.keys()), || "file sets differ".into())?;
    for (path, bytes) in a {
        ensure(bytes == &b[path], || format!("{path} differs"))?;
    }
    Ok(format!("{} report files byte-identical at 1 and 8 workers", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 random-embedding baseline", random_embedding_baseline),
        ("2 separable concept", separable_concept),
        ("3 AUC oracle equivalence", auc_oracle),
        ("4 gradient correctness", gradient_check),
        ("5 Wilcoxon exactness", wilcoxon_exactness),
        ("6 null p-values", null_p_values),
        ("7 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let secs = || start.elapsed().as_secs_f64();
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{:.1}s]", secs()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{:.1}s]", secs());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
