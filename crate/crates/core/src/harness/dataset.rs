use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Parameters of a Gaussian-cluster classification problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub classes: usize,
    /// Standard deviation of each cluster around its centre. Centres are drawn
    /// from a unit Gaussian, so larger values mean more class overlap.
    pub overlap: f64,
    /// Fraction of teacher-training labels moved to the next class.
    pub label_noise: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_train: 600,
            n_test: 2000,
            dim: 16,
            classes: 6,
            overlap: 1.0,
            label_noise: 0.0,
        }
    }
}

/// Synthetic features with clean labels for students and evaluation, and a
/// noisy copy of the training labels for the teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub spec: DatasetSpec,
    train_features: Vec<f64>,
    pub train_labels: Vec<usize>,
    pub teacher_labels: Vec<usize>,
    test_features: Vec<f64>,
    pub test_labels: Vec<usize>,
}

impl SyntheticDataset {
    /// Samples are assigned to classes round-robin, so classes are balanced.
    /// The noisy teacher labels flip exactly `round(label_noise · n_train)`
    /// samples from class `k` to class `(k + 1) mod c`.
    pub fn generate(spec: DatasetSpec) -> Result<Self> {
        if spec.n_train == 0 {
            return Err(Error::EmptyDataset);
        }
        if spec.classes < 2 {
            return Err(Error::TooFewLabels(spec.classes));
        }
        if spec.dim == 0 {
            return Err(Error::InvalidSetup("feature dimension must be positive"));
        }
        if !(spec.overlap >= 0.0 && spec.overlap.is_finite()) {
            return Err(Error::InvalidSetup("overlap must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&spec.label_noise) {
            return Err(Error::InvalidFraction(spec.label_noise));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let centers: Vec<f64> = (0..spec.classes * spec.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let draw = |n: usize, rng: &mut ChaCha8Rng| {
            let labels: Vec<usize> = (0..n).map(|k| k % spec.classes).collect();
            let mut features = Vec::with_capacity(n * spec.dim);
            for &label in &labels {
                let center = &centers[label * spec.dim..(label + 1) * spec.dim];
                for &c in center {
                    let noise: f64 = StandardNormal.sample(rng);
                    features.push(c + spec.overlap * noise);
                }
            }
            (features, labels)
        };
        let (train_features, train_labels) = draw(spec.n_train, &mut rng);
        let (test_features, test_labels) = draw(spec.n_test, &mut rng);

        let mut teacher_labels = train_labels.clone();
        let flips = libm::round(spec.label_noise * spec.n_train as f64) as usize;
        for index in rand::seq::index::sample(&mut rng, spec.n_train, flips.min(spec.n_train)) {
            teacher_labels[index] = (teacher_labels[index] + 1) % spec.classes;
        }
        Ok(Self {
            spec,
            train_features,
            train_labels,
            teacher_labels,
            test_features,
            test_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn classes(&self) -> usize {
        self.spec.classes
    }

    pub fn train_len(&self) -> usize {
        self.train_labels.len()
    }

    pub fn test_len(&self) -> usize {
        self.test_labels.len()
    }

    pub fn train_x(&self, index: usize) -> &[f64] {
        &self.train_features[index * self.spec.dim..(index + 1) * self.spec.dim]
    }

    pub fn test_x(&self, index: usize) -> &[f64] {
        &self.test_features[index * self.spec.dim..(index + 1) * self.spec.dim]
    }

    /// Shuffled sample order for one epoch.
    pub(crate) fn permutation<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..self.train_len()).collect();
        order.shuffle(rng);
        order
    }
}
