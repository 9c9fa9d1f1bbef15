use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Multinomial logistic regression.
    Logistic,
    /// One tanh hidden layer of [`HIDDEN_UNITS`] units.
    Perceptron,
}

pub const HIDDEN_UNITS: usize = 32;

/// Shape of a flat parameter vector.
///
/// Logistic: `W[classes][dim]`, then `b[classes]`.
/// Perceptron: `W1[hidden][dim]`, `b1[hidden]`, `W2[classes][hidden]`, `b2[classes]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Logistic { dim: usize, classes: usize },
    Perceptron { dim: usize, hidden: usize, classes: usize },
}

impl Layout {
    pub fn for_kind(kind: ModelKind, dim: usize, classes: usize) -> Self {
        match kind {
            ModelKind::Logistic => Layout::Logistic { dim, classes },
            ModelKind::Perceptron => Layout::Perceptron {
                dim,
                hidden: HIDDEN_UNITS,
                classes,
            },
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Layout::Logistic { dim, .. } | Layout::Perceptron { dim, .. } => dim,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            Layout::Logistic { classes, .. } | Layout::Perceptron { classes, .. } => classes,
        }
    }

    pub fn num_params(&self) -> usize {
        match *self {
            Layout::Logistic { dim, classes } => classes * (dim + 1),
            Layout::Perceptron { dim, hidden, classes } => hidden * (dim + 1) + classes * (hidden + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub layout: Layout,
    pub weights: Vec<f64>,
}

/// Affine map `out = W x + b` where `params` holds `W` row-major then `b`.
fn affine(params: &[f64], input: &[f64], outputs: usize) -> Vec<f64> {
    let width = input.len();
    let (w, b) = params.split_at(outputs * width);
    (0..outputs)
        .map(|o| {
            let row = &w[o * width..(o + 1) * width];
            b[o] + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()
        })
        .collect()
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

impl Model {
    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            weights: vec![0.0; layout.num_params()],
        }
    }

    /// Logistic models start at zero; perceptrons draw from U[-0.1, 0.1].
    pub fn init(layout: Layout, seed: u64) -> Self {
        match layout {
            Layout::Logistic { .. } => Self::zeros(layout),
            Layout::Perceptron { .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let weights = (0..layout.num_params())
                    .map(|_| rng.random_range(-0.1..=0.1))
                    .collect();
                Self { layout, weights }
            }
        }
    }

    pub fn from_weights(layout: Layout, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != layout.num_params() {
            return Err(Error::LayoutMismatch(format!(
                "{layout:?} needs {} weights, got {}",
                layout.num_params(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("weights must be finite"));
        }
        Ok(Self { layout, weights })
    }

    fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.dim() != self.layout.dim() || ds.num_classes() != self.layout.classes() {
            return Err(Error::LayoutMismatch(format!(
                "model expects dim {} / {} classes, dataset has dim {} / {} classes",
                self.layout.dim(),
                self.layout.classes(),
                ds.dim(),
                ds.num_classes()
            )));
        }
        Ok(())
    }

    /// Class probabilities for one sample.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        z
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        match self.layout {
            Layout::Logistic { classes, .. } => affine(&self.weights, x, classes),
            Layout::Perceptron { dim, hidden, classes } => {
                let split = hidden * (dim + 1);
                let h: Vec<f64> = affine(&self.weights[..split], x, hidden)
                    .into_iter()
                    .map(f64::tanh)
                    .collect();
                affine(&self.weights[split..], &h, classes)
            }
        }
    }

    /// Argmax class; ties go to the smallest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let z = self.logits(x);
        let mut best = 0;
        for (k, v) in z.iter().enumerate().skip(1) {
            if *v > z[best] {
                best = k;
            }
        }
        best
    }

    /// Mean cross-entropy over the rows at `indices`.
    pub fn loss(&self, ds: &Dataset, indices: &[usize]) -> Result<f64> {
        self.check_dataset(ds)?;
        if indices.is_empty() {
            return Err(Error::domain("loss over an empty batch"));
        }
        let total: f64 = indices
            .iter()
            .map(|&i| {
                let p = self.probabilities(ds.row(i));
                -p[ds.label(i)].max(f64::MIN_POSITIVE).ln()
            })
            .sum();
        Ok(total / indices.len() as f64)
    }

    /// Analytic gradient of [`Model::loss`] with respect to the weights.
    pub fn gradient(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<f64>> {
        self.check_dataset(ds)?;
        if indices.is_empty() {
            return Err(Error::domain("gradient over an empty batch"));
        }
        let mut grad = vec![0.0; self.weights.len()];
        let scale = 1.0 / indices.len() as f64;
        for &i in indices {
            let x = ds.row(i);
            let y = ds.label(i);
            match self.layout {
                Layout::Logistic { dim, classes } => {
                    let mut delta = self.probabilities(x);
                    delta[y] -= 1.0;
                    let (gw, gb) = grad.split_at_mut(classes * dim);
                    for (k, d) in delta.iter().enumerate() {
                        let d = d * scale;
                        for (g, xj) in gw[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                            *g += d * xj;
                        }
                        gb[k] += d;
                    }
                }
                Layout::Perceptron { dim, hidden, classes } => {
                    let split = hidden * (dim + 1);
                    let h: Vec<f64> = affine(&self.weights[..split], x, hidden)
                        .into_iter()
                        .map(f64::tanh)
                        .collect();
                    let mut delta = affine(&self.weights[split..], &h, classes);
                    softmax_in_place(&mut delta);
                    delta[y] -= 1.0;

                    let w2 = &self.weights[split..split + classes * hidden];
                    let (g1, g2) = grad.split_at_mut(split);
                    let (g2w, g2b) = g2.split_at_mut(classes * hidden);
                    let mut back = vec![0.0; hidden];
                    for (k, d) in delta.iter().enumerate() {
                        let d = d * scale;
                        for j in 0..hidden {
                            g2w[k * hidden + j] += d * h[j];
                            back[j] += d * w2[k * hidden + j];
                        }
                        g2b[k] += d;
                    }
                    let (g1w, g1b) = g1.split_at_mut(hidden * dim);
                    for j in 0..hidden {
                        let dz = back[j] * (1.0 - h[j] * h[j]);
                        for (g, xi) in g1w[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                            *g += dz * xi;
                        }
                        g1b[j] += dz;
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// Fraction of rows whose argmax prediction matches the label.
pub fn evaluate(model: &Model, ds: &Dataset) -> Result<f64> {
    model.check_dataset(ds)?;
    if ds.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty dataset"));
    }
    let correct = (0..ds.len()).filter(|&i| model.predict(ds.row(i)) == ds.label(i)).count();
    Ok(correct as f64 / ds.len() as f64)
}
