//! Label-space data model: soft/hard label vectors, mixed hard labels, the
//! order tree they induce, and the sample tensors mixed by augmentation.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::{Error, Result};

/// Whether a [`LabelDistribution`] holds probabilities or raw scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Probability,
    Logit,
}

/// A length-`c` vector over the label space.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    values: Vec<f64>,
    space: Space,
}

impl LabelDistribution {
    /// Allowed deviation of a probability vector's total from 1.
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(values: Vec<f64>, space: Space) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewLabels(values.len()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(index));
        }
        if space == Space::Probability {
            if let Some(index) = values.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeProbability {
                    index,
                    value: values[index],
                });
            }
            let total: f64 = values.iter().sum();
            if (total - 1.0).abs() > Self::SUM_TOLERANCE {
                return Err(Error::NotNormalized(total));
            }
        }
        Ok(Self { values, space })
    }

    pub fn probabilities(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Space::Probability)
    }

    pub fn logits(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Space::Logit)
    }

    /// Callers guarantee the invariants of `space` already hold.
    pub(crate) fn from_parts_unchecked(values: Vec<f64>, space: Space) -> Self {
        debug_assert!(values.len() >= 2);
        Self { values, space }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Number of labels `c`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub(crate) fn expect_space(&self, expected: Space) -> Result<()> {
        if self.space == expected {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected,
                actual: self.space,
            })
        }
    }

    pub(crate) fn expect_len(&self, expected: usize) -> Result<()> {
        if self.values.len() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                actual: self.values.len(),
            })
        }
    }
}

impl Index<usize> for LabelDistribution {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

/// Hard label of a sample mixed from two originals with different labels.
///
/// Construction normalizes the weight into `[0.5, 1]`: a weight below one
/// half swaps the labels, so `label_a` always carries the larger mass. At
/// exactly one half the caller's order is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedHardLabel {
    label_a: usize,
    label_b: usize,
    gamma: f64,
    classes: usize,
}

impl MixedHardLabel {
    pub fn new(label_a: usize, label_b: usize, gamma: f64, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewLabels(classes));
        }
        for label in [label_a, label_b] {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
        }
        if label_a == label_b {
            return Err(Error::IdenticalLabels(label_a));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidGamma(gamma));
        }
        Ok(if gamma < 0.5 {
            Self {
                label_a: label_b,
                label_b: label_a,
                gamma: 1.0 - gamma,
                classes,
            }
        } else {
            Self {
                label_a,
                label_b,
                gamma,
                classes,
            }
        })
    }

    pub fn label_a(&self) -> usize {
        self.label_a
    }

    pub fn label_b(&self) -> usize {
        self.label_b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn is_original(&self, label: usize) -> bool {
        label == self.label_a || label == self.label_b
    }

    /// The two-point hard distribution `ỹ`.
    pub fn expand(&self) -> LabelDistribution {
        let mut values = vec![0.0; self.classes];
        values[self.label_a] = self.gamma;
        values[self.label_b] = 1.0 - self.gamma;
        LabelDistribution::from_parts_unchecked(values, Space::Probability)
    }

    pub fn order_tree(&self) -> OrderTree {
        OrderTree {
            root: self.label_a,
            second: self.label_b,
            classes: self.classes,
        }
    }
}

pub fn expand_hard_label(h: &MixedHardLabel) -> LabelDistribution {
    h.expand()
}

pub fn build_order_tree(h: &MixedHardLabel) -> OrderTree {
    h.order_tree()
}

/// Order constraints of a mixed sample: `root ≥ second` and `second ≥ ℓ` for
/// every other label `ℓ`. Each edge `(i, j)` reads "`i` must not be below `j`".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderTree {
    root: usize,
    second: usize,
    classes: usize,
}

impl OrderTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn second(&self) -> usize {
        self.second
    }

    pub fn node_count(&self) -> usize {
        self.classes
    }

    pub fn edge_count(&self) -> usize {
        self.classes - 1
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes).filter(move |&k| k != self.root && k != self.second)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        core::iter::once((self.root, self.second))
            .chain(self.leaves().map(move |leaf| (self.second, leaf)))
    }
}

/// A `W × H × C` array standing in for an image. Element `(x, y, ch)` lives at
/// `(x·H + y)·C + ch`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTensor {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl SampleTensor {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let shape = (width, height, channels);
        let expected = width * height * channels;
        if width == 0 || height == 0 || channels == 0 || data.len() != expected {
            return Err(Error::InvalidShape {
                shape,
                expected,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(index));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Wraps a feature vector as a `d × 1 × 1` tensor.
    pub fn from_features(features: &[f64]) -> Result<Self> {
        Self::new(features.len(), 1, 1, features.to_vec())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, x: usize, y: usize, ch: usize) -> usize {
        (x * self.height + y) * self.channels + ch
    }

    pub fn get(&self, x: usize, y: usize, ch: usize) -> f64 {
        self.data[self.offset(x, y, ch)]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn expect_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(self.shape(), other.shape()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn edges(tree: &OrderTree) -> Vec<(usize, usize)> {
        tree.edges().collect()
    }

    #[test]
    fn expand_matches_mixture() {
        let h = MixedHardLabel::new(0, 1, 0.7, 4).unwrap();
        assert_eq!(h.expand().values(), &[0.7, 0.30000000000000004, 0.0, 0.0]);
        assert_eq!(h.expand().values()[1], 1.0 - 0.7);

        let h = MixedHardLabel::new(2, 0, 1.0, 3).unwrap();
        assert_eq!(h.expand().values(), &[0.0, 0.0, 1.0]);

        let h = MixedHardLabel::new(1, 3, 0.5, 5).unwrap();
        assert_eq!(h.expand().values(), &[0.0, 0.5, 0.0, 0.5, 0.0]);
        assert_eq!((h.label_a(), h.label_b()), (1, 3));
    }

    #[test]
    fn small_gamma_swaps_labels() {
        let swapped = MixedHardLabel::new(3, 1, 0.25, 5).unwrap();
        let direct = MixedHardLabel::new(1, 3, 0.75, 5).unwrap();
        assert_eq!(swapped, direct);
        assert_eq!(
            MixedHardLabel::new(0, 1, 0.0, 2).unwrap(),
            MixedHardLabel::new(1, 0, 1.0, 2).unwrap()
        );
    }

    #[test]
    fn mixed_label_rejects_bad_input() {
        assert_eq!(
            MixedHardLabel::new(2, 2, 0.7, 4),
            Err(Error::IdenticalLabels(2))
        );
        assert_eq!(
            MixedHardLabel::new(0, 4, 0.7, 4),
            Err(Error::LabelOutOfRange {
                label: 4,
                classes: 4
            })
        );
        assert!(matches!(
            MixedHardLabel::new(0, 1, 1.5, 4),
            Err(Error::InvalidGamma(_))
        ));
        assert!(matches!(
            MixedHardLabel::new(0, 1, f64::NAN, 4),
            Err(Error::InvalidGamma(_))
        ));
    }

    #[test]
    fn order_tree_edges() {
        let tree = MixedHardLabel::new(0, 1, 0.7, 4).unwrap().order_tree();
        assert_eq!(edges(&tree), [(0, 1), (1, 2), (1, 3)]);

        let tree = build_order_tree(&MixedHardLabel::new(2, 0, 0.9, 3).unwrap());
        assert_eq!(edges(&tree), [(2, 0), (0, 1)]);

        let tree = build_order_tree(&MixedHardLabel::new(0, 1, 0.6, 2).unwrap());
        assert_eq!(edges(&tree), [(0, 1)]);
    }

    #[test]
    fn order_tree_has_single_source() {
        for classes in 2..9 {
            for a in 0..classes {
                for b in (0..classes).filter(|&b| b != a) {
                    let tree = MixedHardLabel::new(a, b, 0.8, classes)
                        .unwrap()
                        .order_tree();
                    let mut in_degree = vec![0usize; classes];
                    for (_, child) in tree.edges() {
                        in_degree[child] += 1;
                    }
                    assert_eq!(tree.edges().count(), classes - 1);
                    assert_eq!(in_degree.iter().filter(|&&d| d == 0).count(), 1);
                    assert_eq!(in_degree[a], 0);
                    assert!(in_degree.iter().all(|&d| d <= 1));
                }
            }
        }
    }

    #[test]
    fn probability_validation() {
        assert!(LabelDistribution::probabilities(vec![0.5, 0.5]).is_ok());
        assert_eq!(
            LabelDistribution::probabilities(vec![1.0]),
            Err(Error::TooFewLabels(1))
        );
        assert!(matches!(
            LabelDistribution::probabilities(vec![0.6, 0.5]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            LabelDistribution::probabilities(vec![1.2, -0.2]),
            Err(Error::NegativeProbability { index: 1, .. })
        ));
        assert_eq!(
            LabelDistribution::logits(vec![0.0, f64::INFINITY]),
            Err(Error::NonFinite(1))
        );
        assert!(LabelDistribution::logits(vec![-3.0, 7.5]).is_ok());
    }

    #[test]
    fn tensor_shape_checks() {
        let t = SampleTensor::new(2, 3, 2, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(1, 2, 1), 11.0);
        assert_eq!(t.get(0, 1, 0), 2.0);
        assert!(SampleTensor::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(SampleTensor::new(0, 2, 1, vec![]).is_err());
    }
}
