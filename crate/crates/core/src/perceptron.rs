//! Single-layer sigmoid classifier trained by full-batch gradient descent on
//! mean binary cross-entropy.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::splitter::EvaluationSplit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Stop once an accepted step lowers the loss by less than this.
    pub early_stop_tol: f64,
    /// L2 penalty `l2 / 2 * |w|^2` on the weights (not the bias).
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 100,
            early_stop_tol: 1e-6,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if self.early_stop_tol.is_nan() || self.early_stop_tol < 0.0 || self.l2.is_nan() || self.l2 < 0.0 {
            return Err(Error::InvalidInput("early_stop_tol and l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerceptronModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Mean training loss of the accepted parameters after each epoch.
    pub train_loss_trace: Vec<f64>,
    pub epochs_run: usize,
    /// Learning rate after any halvings.
    pub final_learning_rate: f64,
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z)
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean cross-entropy of `sigmoid(x . weights + bias)` against `labels`,
/// plus the L2 term. `x` is row-major with `weights.len()` columns. Writes
/// the weight gradient into `grad_w` and returns `(loss, d loss / d bias)`.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    x: &[f64],
    labels: &[bool],
    l2: f64,
    grad_w: &mut [f64],
) -> (f64, f64) {
    let d = weights.len();
    let n = labels.len();
    debug_assert_eq!(x.len(), n * d);
    grad_w.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    let mut grad_b = 0.0;
    for (row, &y) in x.chunks_exact(d).zip(labels) {
        let z = dot(row, weights) + bias;
        let y = if y { 1.0 } else { 0.0 };
        // -[y ln s + (1-y) ln(1-s)] = softplus(z) - y z
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        grad_b += r;
        for (g, &xi) in grad_w.iter_mut().zip(row) {
            *g += r * xi;
        }
    }
    let inv = 1.0 / n as f64;
    loss *= inv;
    grad_b *= inv;
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = *g * inv + l2 * w;
    }
    if l2 > 0.0 {
        loss += 0.5 * l2 * dot(weights, weights);
    }
    (loss, grad_b)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains on a row-major `labels.len() x dimension` matrix.
///
/// Starts from zero weights and bias. A step that raises the loss is
/// rejected and the learning rate halved, so the loss trace never increases.
pub fn train_matrix(x: &[f64], dimension: usize, labels: &[bool], cfg: &TrainConfig) -> Result<PerceptronModel> {
    cfg.validate()?;
    if labels.is_empty() || x.len() != labels.len() * dimension || dimension == 0 {
        return Err(Error::InvalidInput(format!(
            "training matrix has {} values for {} rows of dimension {dimension}",
            x.len(),
            labels.len()
        )));
    }
    let mut lr = cfg.learning_rate;
    let mut weights = vec![0.0; dimension];
    let mut bias = 0.0;
    let mut grad_w = vec![0.0; dimension];
    let (mut loss, mut grad_b) = loss_and_gradient(&weights, bias, x, labels, cfg.l2, &mut grad_w);

    let mut cand_w = vec![0.0; dimension];
    let mut cand_grad_w = vec![0.0; dimension];
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut epochs_run = 0;
    for epoch in 1..=cfg.epochs {
        epochs_run = epoch;
        for ((c, &w), &g) in cand_w.iter_mut().zip(&weights).zip(&grad_w) {
            *c = w - lr * g;
        }
        let cand_b = bias - lr * grad_b;
        let (cand_loss, cand_grad_b) = loss_and_gradient(&cand_w, cand_b, x, labels, cfg.l2, &mut cand_grad_w);
        if !cand_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                learning_rate: lr,
                loss: cand_loss,
            });
        }
        if cand_loss > loss {
            lr *= 0.5;
            trace.push(loss);
            continue;
        }
        let decrease = loss - cand_loss;
        std::mem::swap(&mut weights, &mut cand_w);
        std::mem::swap(&mut grad_w, &mut cand_grad_w);
        bias = cand_b;
        grad_b = cand_grad_b;
        loss = cand_loss;
        trace.push(loss);
        if decrease < cfg.early_stop_tol {
            break;
        }
    }

    Ok(PerceptronModel {
        weights,
        bias,
        train_loss_trace: trace,
        epochs_run,
        final_learning_rate: lr,
    })
}

/// Trains on the split's training half.
pub fn train(split: &EvaluationSplit, store: &EmbeddingStore, cfg: &TrainConfig) -> Result<PerceptronModel> {
    let (rows, labels) = split.train_set();
    let x = store.gather(&rows);
    train_matrix(&x, store.dimension(), &labels, cfg)
}

impl PerceptronModel {
    /// A model that has not been trained: zero weights and bias.
    pub fn zeros(dimension: usize) -> Self {
        PerceptronModel {
            weights: vec![0.0; dimension],
            bias: 0.0,
            train_loss_trace: Vec::new(),
            epochs_run: 0,
            final_learning_rate: 0.0,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(dot(x, &self.weights) + self.bias)
    }

    /// Score for each store row, same order.
    pub fn score_rows(&self, store: &EmbeddingStore, rows: &[usize]) -> Vec<f64> {
        let mut buf = vec![0.0; store.dimension()];
        rows.iter()
            .map(|&i| {
                store.row_into(i, &mut buf);
                self.predict(&buf)
            })
            .collect()
    }

    /// Score for each word. Every word must be in the store.
    pub fn score(&self, store: &EmbeddingStore, words: &[&str]) -> Result<Vec<f64>> {
        let rows = words
            .iter()
            .map(|w| {
                store.index_of(w).ok_or_else(|| Error::OutOfVocabulary {
                    word: w.to_string(),
                    embedding: store.name().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.score_rows(store, &rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Precision;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let big = sigmoid(750.0);
        assert!(big > 0.0 && big <= 1.0);
        let small = sigmoid(-750.0);
        assert!((0.0..1.0).contains(&small));
        for z in [-30.0, -3.3, -0.1, 0.7, 2.0, 12.5, 36.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() <= 1e-15, "z={z}");
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
    }

    // Hand-rolled descent on the two-point problem: x = (1,0) -> 1,
    // x = (-1,0) -> 0. By symmetry the bias gradient is zero and only the
    // first weight moves: g1 = ((s(w)-1)*1 + s(-w)*(-1)) / 2 = s(w) - 1.
    fn two_point_oracle(epochs: usize) -> f64 {
        let mut w = 0.0f64;
        for _ in 0..epochs {
            let s = 1.0 / (1.0 + (-w).exp());
            w -= 0.1 * (s - 1.0);
        }
        w
    }

    #[test]
    fn separable_two_points() {
        let x = [1.0, 0.0, -1.0, 0.0];
        let y = [true, false];
        let three = train_matrix(&x, 2, &y, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
        // epoch 1: w = 0.05; epoch 2: w = 0.05 + 0.1*(1 - s(0.05)) ...
        assert!((three.weights[0] - two_point_oracle(3)).abs() < 1e-14);
        assert!((two_point_oracle(1) - 0.05).abs() < 1e-15);
        assert_eq!(three.weights[1], 0.0);
        assert!(three.bias.abs() < 1e-15);

        let m = train_matrix(&x, 2, &y, &TrainConfig::default()).unwrap();
        assert!(m.epochs_run <= 100);
        let loss = *m.train_loss_trace.last().unwrap();
        assert!(loss < 0.3, "{loss}");
        assert!(m.predict(&[1.0, 0.0]) > 0.5);
        assert!(m.predict(&[-1.0, 0.0]) < 0.5);
    }

    #[test]
    fn identical_inputs_mixed_labels() {
        let x = [0.3, -1.2, 0.3, -1.2, 0.3, -1.2, 0.3, -1.2];
        let y = [true, false, true, false];
        let m = train_matrix(&x, 2, &y, &TrainConfig::default()).unwrap();
        for row in x.chunks(2) {
            assert!((m.predict(row) - 0.5).abs() < 1e-12);
        }
        let loss = *m.train_loss_trace.last().unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn one_epoch_is_one_update() {
        let x = [1.0, 0.0, -1.0, 0.0];
        let m = train_matrix(&x, 2, &[true, false], &TrainConfig { epochs: 1, ..Default::default() }).unwrap();
        assert_eq!(m.epochs_run, 1);
        assert_eq!(m.train_loss_trace.len(), 1);
        assert!((m.weights[0] - 0.05).abs() < 1e-15);
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn large_rate_is_halved_and_trace_never_increases() {
        // overlapping classes: finite optimum that a rate of 50 overshoots
        let x = [1.0, 1.0, 1.0, -1.0, 2.0, -2.0];
        let y = [true, true, false, false, true, true];
        let cfg = TrainConfig { learning_rate: 50.0, epochs: 60, early_stop_tol: 0.0, l2: 0.0 };
        let m = train_matrix(&x, 1, &y, &cfg).unwrap();
        assert!(m.final_learning_rate < 50.0);
        for w in m.train_loss_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn untrained_model_scores_half() {
        let s = EmbeddingStore::from_rows("s", ["a", "b"], &[vec![1.0, 2.0], vec![-3.0, 0.5]], Precision::F32).unwrap();
        let m = PerceptronModel::zeros(2);
        assert_eq!(m.score(&s, &["a", "b"]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(m.score(&s, &["zebra"]), Err(Error::OutOfVocabulary { .. })));
    }

    #[test]
    fn score_is_order_equivariant() {
        let s = EmbeddingStore::from_rows(
            "s",
            ["a", "b", "c"],
            &[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.2, 0.1]],
            Precision::F64,
        )
        .unwrap();
        let m = PerceptronModel { weights: vec![0.4, -0.7], bias: 0.1, ..PerceptronModel::zeros(2) };
        let fwd = m.score(&s, &["a", "b", "c"]).unwrap();
        let rev = m.score(&s, &["c", "b", "a"]).unwrap();
        assert_eq!(fwd, rev.into_iter().rev().collect::<Vec<_>>());
    }

    #[test]
    fn l2_shrinks_weights() {
        let x = [1.0, 0.0, -1.0, 0.0];
        let y = [true, false];
        let plain = train_matrix(&x, 2, &y, &TrainConfig::default()).unwrap();
        let reg = train_matrix(&x, 2, &y, &TrainConfig { l2: 0.5, ..Default::default() }).unwrap();
        assert!(reg.weights[0] < plain.weights[0]);
    }
}
