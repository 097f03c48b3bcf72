//! The Monte-Carlo protocol: repeated split/train/test per concept, random
//! word-list null distributions, and empirical p-values.
//!
//! Every iteration and every null list draws from its own derived stream and
//! results are reduced in index order, so output does not depend on the
//! number of worker threads.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concepts::{random_concept, ResolvedConcept, MIN_RESOLVED_SIZE};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, Metric, MetricsRecord};
use crate::perceptron::{train, TrainConfig};
use crate::rng::SeedPath;
use crate::splitter::make_split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub iterations: usize,
    pub random_list_count: usize,
    pub random_list_size: usize,
    /// Size each concept's null lists to the concept instead of
    /// `random_list_size`.
    pub size_matched_null: bool,
    pub master_seed: u64,
    /// Classifier inputs are unit-normalized rows.
    pub normalize: bool,
    pub threshold: f64,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            iterations: 1000,
            random_list_count: 1000,
            random_list_size: 400,
            size_matched_null: false,
            master_seed: 0,
            normalize: false,
            threshold: 0.5,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        if self.random_list_count == 0 {
            return Err(Error::InvalidInput("random list count must be at least 1".into()));
        }
        if self.random_list_size < MIN_RESOLVED_SIZE {
            return Err(Error::InvalidInput(format!(
                "random list size must be at least {MIN_RESOLVED_SIZE}"
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        self.train.validate()
    }

    /// The store as the classifier should see it under this config.
    pub fn prepare_store(&self, store: EmbeddingStore) -> Result<EmbeddingStore> {
        if self.normalize {
            store.normalize()
        } else {
            Ok(store)
        }
    }
}

/// One value per reported metric.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricValues {
    pub accuracy: f64,
    pub recall: f64,
    pub fpr: f64,
    pub precision: f64,
    pub auc: f64,
}

impl MetricValues {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Recall => self.recall,
            Metric::Fpr => self.fpr,
            Metric::Precision => self.precision,
            Metric::Auc => self.auc,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Metric) -> f64) -> Self {
        MetricValues {
            accuracy: f(Metric::Accuracy),
            recall: f(Metric::Recall),
            fpr: f(Metric::Fpr),
            precision: f(Metric::Precision),
            auc: f(Metric::Auc),
        }
    }
}

/// Outcome of one split/train/test round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub seed: u64,
    pub metrics: MetricsRecord,
    pub final_train_loss: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub concept: String,
    pub embedding: String,
    pub size: usize,
    pub listed_size: usize,
    pub mean: MetricValues,
    /// Sample standard deviation (0 for a single iteration).
    pub std: MetricValues,
    pub records: Vec<IterationRecord>,
}

fn run_iteration(
    store: &EmbeddingStore,
    resolved: &ResolvedConcept,
    cfg: &ExperimentConfig,
    iteration: usize,
) -> Result<IterationRecord> {
    let split = make_split(resolved, store, iteration, cfg.master_seed)?;
    let model = train(&split, store, &cfg.train)?;
    let (rows, labels) = split.test_set();
    let scores = model.score_rows(store, &rows);
    let metrics = evaluate(&scores, &labels, cfg.threshold)?;
    Ok(IterationRecord {
        iteration,
        seed: split.seed,
        metrics,
        final_train_loss: model.train_loss_trace.last().copied().unwrap_or(f64::NAN),
        epochs_run: model.epochs_run,
    })
}

/// Runs `cfg.iterations` rounds for one concept and aggregates them.
pub fn run_concept(store: &EmbeddingStore, resolved: &ResolvedConcept, cfg: &ExperimentConfig) -> Result<AggregateResult> {
    cfg.validate()?;
    if cfg.normalize && !store.is_normalized() {
        return Err(Error::InvalidInput(format!(
            "config asks for normalized inputs but {:?} is not normalized",
            store.name()
        )));
    }
    let records = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| {
            run_iteration(store, resolved, cfg, i).map_err(|e| Error::Iteration {
                iteration: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (mean, std) = summarize(&records);
    Ok(AggregateResult {
        concept: resolved.name().to_string(),
        embedding: store.name().to_string(),
        size: resolved.size(),
        listed_size: resolved.listed_size(),
        mean,
        std,
        records,
    })
}

fn summarize(records: &[IterationRecord]) -> (MetricValues, MetricValues) {
    let n = records.len() as f64;
    let mean = MetricValues::from_fn(|m| records.iter().map(|r| r.metrics.get(m)).sum::<f64>() / n);
    let std = MetricValues::from_fn(|m| {
        if records.len() < 2 {
            return 0.0;
        }
        let mu = mean.get(m);
        let ss: f64 = records.iter().map(|r| (r.metrics.get(m) - mu).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    (mean, std)
}

/// One random list's averaged metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullList {
    pub index: usize,
    pub name: String,
    pub seed: u64,
    pub mean: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullDistribution {
    pub embedding: String,
    pub list_size: usize,
    pub lists: Vec<NullList>,
    /// Per-metric maximum over lists (each metric maximized independently).
    pub max: MetricValues,
    pub mean: MetricValues,
}

impl NullDistribution {
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.lists.iter().map(|l| l.mean.get(metric)).collect()
    }
}

/// Null distribution from `cfg.random_list_count` lists of
/// `cfg.random_list_size` words.
pub fn run_null(store: &EmbeddingStore, cfg: &ExperimentConfig, exclude: &HashSet<String>) -> Result<NullDistribution> {
    run_null_sized(store, cfg, cfg.random_list_size, exclude)
}

pub fn run_null_sized(
    store: &EmbeddingStore,
    cfg: &ExperimentConfig,
    list_size: usize,
    exclude: &HashSet<String>,
) -> Result<NullDistribution> {
    cfg.validate()?;
    let lists = (0..cfg.random_list_count)
        .into_par_iter()
        .map(|k| {
            let seed = SeedPath::new(cfg.master_seed)
                .label("null")
                .label(store.name())
                .index(list_size as u64)
                .index(k as u64)
                .seed();
            let name = format!("random-{list_size}-{k}");
            let resolved = random_concept(store, &name, list_size, exclude, seed)?;
            let agg = run_concept(store, &resolved, cfg)?;
            Ok(NullList {
                index: k,
                name,
                seed,
                mean: agg.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = lists.len() as f64;
    let max = MetricValues::from_fn(|m| lists.iter().map(|l| l.mean.get(m)).fold(f64::NEG_INFINITY, f64::max));
    let mean = MetricValues::from_fn(|m| lists.iter().map(|l| l.mean.get(m)).sum::<f64>() / n);
    Ok(NullDistribution {
        embedding: store.name().to_string(),
        list_size,
        lists,
        max,
        mean,
    })
}

/// Add-one permutation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValue {
    pub value: f64,
    /// Null values at or above the observation.
    pub exceedances: usize,
    pub null_count: usize,
}

/// `(1 + #{null >= observed}) / (1 + |null|)`. Ties count against the
/// observation.
pub fn empirical_p_value(observed: f64, null_values: &[f64]) -> Result<PValue> {
    if null_values.is_empty() {
        return Err(Error::InvalidInput("null distribution is empty".into()));
    }
    let exceedances = null_values.iter().filter(|&&v| v >= observed).count();
    Ok(PValue {
        value: (1 + exceedances) as f64 / (1 + null_values.len()) as f64,
        exceedances,
        null_count: null_values.len(),
    })
}

impl fmt::Display for PValue {
    /// `< 1/N` (rounded up to a readable decimal) when no null value reached
    /// the observation, the estimate to three decimals otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exceedances == 0 {
            let n = self.null_count as u128;
            let mut digits = 3u32;
            while 10u128.pow(digits) < n {
                digits += 1;
            }
            let scale = 10u128.pow(digits);
            let units = scale.div_ceil(n);
            write!(f, "< {:.*}", digits as usize, units as f64 / scale as f64)
        } else {
            write!(f, "{:.3}", self.value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{resolve, Concept};
    use crate::embedding::Precision;

    #[test]
    fn p_value_examples() {
        let null: Vec<f64> = (0..1000).map(|i| 0.4 + i as f64 * 1e-4).collect();
        let top = empirical_p_value(0.99, &null).unwrap();
        assert_eq!(top.value, 1.0 / 1001.0);
        assert_eq!(top.to_string(), "< 0.001");
        let bottom = empirical_p_value(0.1, &null).unwrap();
        assert_eq!(bottom.value, 1.0);
        assert_eq!(bottom.to_string(), "1.000");
        assert_eq!(empirical_p_value(0.5, &[0.5]).unwrap().value, 1.0);
        assert!(empirical_p_value(0.5, &[]).is_err());
    }

    #[test]
    fn p_value_bound_formatting() {
        let p = |n: usize| empirical_p_value(2.0, &vec![0.0; n]).unwrap().to_string();
        assert_eq!(p(1000), "< 0.001");
        assert_eq!(p(100), "< 0.010");
        assert_eq!(p(300), "< 0.004");
        assert_eq!(p(5000), "< 0.0002");
    }

    fn small_setup() -> (EmbeddingStore, ResolvedConcept) {
        let words: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
        let store = EmbeddingStore::random_gaussian("g", words, 8, 5, Precision::F32).unwrap();
        let c = Concept::new("c", (0..20).map(|i| format!("w{i}")), "t").unwrap();
        let r = resolve(&c, &store).unwrap();
        (store, r)
    }

    #[test]
    fn single_iteration_mean_is_the_record() {
        let (store, r) = small_setup();
        let cfg = ExperimentConfig { iterations: 1, ..Default::default() };
        let agg = run_concept(&store, &r, &cfg).unwrap();
        assert_eq!(agg.records.len(), 1);
        for m in Metric::ALL {
            assert_eq!(agg.mean.get(m), agg.records[0].metrics.get(m));
            assert_eq!(agg.std.get(m), 0.0);
        }
    }

    #[test]
    fn normalization_must_be_prepared() {
        let (store, r) = small_setup();
        let cfg = ExperimentConfig { iterations: 2, normalize: true, ..Default::default() };
        assert!(run_concept(&store, &r, &cfg).is_err());
        let prepared = cfg.prepare_store(store).unwrap();
        assert!(run_concept(&prepared, &r, &cfg).is_ok());
    }

    #[test]
    fn null_with_one_list_has_equal_rows() {
        let (store, _) = small_setup();
        let cfg = ExperimentConfig {
            iterations: 5,
            random_list_count: 1,
            random_list_size: 10,
            ..Default::default()
        };
        let null = run_null(&store, &cfg, &HashSet::new()).unwrap();
        assert_eq!(null.lists.len(), 1);
        assert_eq!(null.max, null.mean);
    }

    #[test]
    fn null_max_dominates() {
        let (store, _) = small_setup();
        let cfg = ExperimentConfig {
            iterations: 4,
            random_list_count: 6,
            random_list_size: 8,
            ..Default::default()
        };
        let null = run_null(&store, &cfg, &HashSet::new()).unwrap();
        for m in Metric::ALL {
            assert!(null.max.get(m) >= null.mean.get(m));
            assert!(null.lists.iter().all(|l| l.mean.get(m) <= null.max.get(m)));
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig { iterations: 0, ..Default::default() }.validate().is_err());
        assert!(ExperimentConfig { random_list_size: 3, ..Default::default() }.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
