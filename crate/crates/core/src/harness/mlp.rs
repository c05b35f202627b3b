use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Two-layer rectifier network: `logits = relu(x·W1 + b1)·W2 + b2`.
///
/// `w1` is `input × hidden` and `w2` is `hidden × classes`, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input: usize,
    hidden: usize,
    classes: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Activations {
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Gradient buffers shaped like the parameters of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(model: &Mlp) -> Self {
        Self {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    pub fn clear(&mut self) {
        for buf in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            buf.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Same layout as [`Mlp::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

impl Mlp {
    /// He-scaled Gaussian weights, zero biases.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        let mut draw = |fan_in: usize, len: usize| -> Vec<f64> {
            let scale = libm::sqrt(2.0 / fan_in as f64);
            (0..len)
                .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut *rng))
                .collect()
        };
        let w1 = draw(input, input * hidden);
        let w2 = draw(hidden, hidden * classes);
        Self {
            input,
            hidden,
            classes,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; classes],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).logits
    }

    pub fn forward_cached(&self, x: &[f64]) -> Activations {
        debug_assert_eq!(x.len(), self.input);
        let mut hidden_pre = self.b1.clone();
        for (xi, row) in x.iter().zip(self.w1.chunks_exact(self.hidden)) {
            for (h, w) in hidden_pre.iter_mut().zip(row) {
                *h += xi * w;
            }
        }
        let hidden: Vec<f64> = hidden_pre.iter().map(|&z| z.max(0.0)).collect();
        let mut logits = self.b2.clone();
        for (hj, row) in hidden.iter().zip(self.w2.chunks_exact(self.classes)) {
            if *hj == 0.0 {
                continue;
            }
            for (l, w) in logits.iter_mut().zip(row) {
                *l += hj * w;
            }
        }
        Activations {
            hidden_pre,
            hidden,
            logits,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.forward(x))
    }

    /// Accumulates the parameter gradient of a loss whose logit gradient is
    /// `dlogits` into `grads`.
    pub fn backward(&self, x: &[f64], act: &Activations, dlogits: &[f64], grads: &mut MlpGrads) {
        for (g, d) in grads.b2.iter_mut().zip(dlogits) {
            *g += d;
        }
        let mut dhidden = vec![0.0; self.hidden];
        for (j, (grow, wrow)) in grads
            .w2
            .chunks_exact_mut(self.classes)
            .zip(self.w2.chunks_exact(self.classes))
            .enumerate()
        {
            let hj = act.hidden[j];
            let mut back = 0.0;
            for ((g, w), d) in grow.iter_mut().zip(wrow).zip(dlogits) {
                *g += hj * d;
                back += w * d;
            }
            // Rectifier: no gradient through inactive units.
            dhidden[j] = if act.hidden_pre[j] > 0.0 { back } else { 0.0 };
        }
        for (g, d) in grads.b1.iter_mut().zip(&dhidden) {
            *g += d;
        }
        for (xi, grow) in x.iter().zip(grads.w1.chunks_exact_mut(self.hidden)) {
            for (g, d) in grow.iter_mut().zip(&dhidden) {
                *g += xi * d;
            }
        }
    }

    /// `θ ← θ − lr · scale · g`.
    pub fn sgd_step(&mut self, grads: &MlpGrads, lr: f64, scale: f64) {
        let step = lr * scale;
        for (params, g) in [
            (&mut self.w1, &grads.w1),
            (&mut self.b1, &grads.b1),
            (&mut self.w2, &grads.w2),
            (&mut self.b2, &grads.b2),
        ] {
            for (p, g) in params.iter_mut().zip(g) {
                *p -= step * g;
            }
        }
    }

    /// All parameters in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn set_parameters(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.parameter_count());
        let mut rest = values;
        for buf in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(buf.len());
            buf.copy_from_slice(head);
            rest = tail;
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}
