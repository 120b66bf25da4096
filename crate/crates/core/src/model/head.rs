//! Classification head: hidden state -> 4 punctuation-class logits.
//!
//! Two linear layers with a tanh between them. The head only ever sees the
//! encoder output at mask positions; gathering those rows is the caller's
//! job, which keeps the loss independent of everything the encoder produces
//! at word positions by construction.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::slotmask::PunctClass;

pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone)]
pub struct ClassifierHead {
    pub(crate) w1: Array2<f64>, // dim x hidden
    pub(crate) b1: Array1<f64>, // hidden
    pub(crate) w2: Array2<f64>, // hidden x 4
    pub(crate) b2: Array1<f64>, // 4
}

/// Gradients, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

pub(crate) fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

impl ClassifierHead {
    pub fn new(dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> ClassifierHead {
        ClassifierHead {
            w1: xavier(dim, hidden, rng),
            b1: Array1::zeros(hidden),
            w2: xavier(hidden, NUM_CLASSES, rng),
            b2: Array1::zeros(NUM_CLASSES),
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    /// Forward pass over a batch of gathered mask-position states (n x dim).
    /// Returns the tanh layer activations (kept for backprop) and the logits.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let mut pre = x.dot(&self.w1);
        pre += &self.b1;
        let z = pre.mapv(f64::tanh);
        let mut logits = z.dot(&self.w2);
        logits += &self.b2;
        (z, logits)
    }

    /// Backward pass; accumulates into `grads` and returns the gradient with
    /// respect to the input rows.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        z: &Array2<f64>,
        d_logits: &Array2<f64>,
        grads: &mut HeadGrads,
    ) -> Array2<f64> {
        grads.w2 += &z.t().dot(d_logits);
        grads.b2 += &d_logits.sum_axis(Axis(0));
        let mut d_pre = d_logits.dot(&self.w2.t());
        d_pre.zip_mut_with(z, |d, &zv| *d *= 1.0 - zv * zv);
        grads.w1 += &x.t().dot(&d_pre);
        grads.b1 += &d_pre.sum_axis(Axis(0));
        d_pre.dot(&self.w1.t())
    }

    pub fn zero_grads(&self) -> HeadGrads {
        HeadGrads {
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.raw_dim()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.raw_dim()),
        }
    }
}

/// Row-wise softmax, stabilized by subtracting each row's maximum.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean cross-entropy over the rows, computed from raw logits via the
/// log-sum-exp identity so no probability is materialized.
pub fn cross_entropy_mean(logits: &Array2<f64>, labels: &[PunctClass]) -> f64 {
    assert_eq!(logits.nrows(), labels.len());
    let mut total = 0.0;
    for (row, &label) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[label.index()];
    }
    total / labels.len().max(1) as f64
}

/// Gradient of `scale * sum(cross_entropy)` with respect to the logits:
/// `(softmax - onehot) * scale` per row.
pub fn cross_entropy_grad(logits: &Array2<f64>, labels: &[PunctClass], scale: f64) -> Array2<f64> {
    let mut d = softmax_rows(logits);
    for (i, &label) in labels.iter().enumerate() {
        d[(i, label.index())] -= 1.0;
    }
    d.mapv_inplace(|v| v * scale);
    d
}

/// Argmax per row; ties resolve to the lowest class index.
pub fn argmax_classes(logits: &Array2<f64>) -> Vec<PunctClass> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..NUM_CLASSES {
                if row[c] > row[best] {
                    best = c;
                }
            }
            PunctClass::from_index(best).unwrap()
        })
        .collect()
}
