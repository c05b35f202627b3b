//! Hinge relaxation of the order constraints, applied to student logits.
//!
//! `max(0, s_b − s_a) + max(0, max_{ℓ∉{a,b}} s_ℓ − min(s_a, s_b))` is zero
//! exactly when the logits respect the order tree. One pass over the logits
//! suffices.

use alloc::vec;
use alloc::vec::Vec;

use crate::labels::{LabelDistribution, MixedHardLabel};
use crate::Result;

struct Hinges {
    /// `s_b − s_a`.
    pair_gap: f64,
    /// Largest non-original logit and its label, lowest index on ties.
    top_other: Option<(usize, f64)>,
    /// Smaller original logit's label, lowest index on ties.
    low_original: usize,
}

fn hinges(logits: &[f64], h: &MixedHardLabel) -> Hinges {
    let (a, b) = (h.label_a(), h.label_b());
    let mut top_other: Option<(usize, f64)> = None;
    for (label, &value) in logits.iter().enumerate() {
        if label == a || label == b {
            continue;
        }
        if top_other.is_none_or(|(_, best)| value > best) {
            top_other = Some((label, value));
        }
    }
    let low_original = if logits[a] < logits[b] || (logits[a] == logits[b] && a < b) {
        a
    } else {
        b
    };
    Hinges {
        pair_gap: logits[b] - logits[a],
        top_other,
        low_original,
    }
}

/// Penalty on logits that break the mixed label's order.
///
/// Works on any vector of scores; the value is translation invariant.
pub fn order_penalty(student_logits: &LabelDistribution, h: &MixedHardLabel) -> Result<f64> {
    student_logits.expect_len(h.classes())?;
    let s = student_logits.values();
    let hinge = hinges(s, h);
    let pair = hinge.pair_gap.max(0.0);
    let spread = hinge
        .top_other
        .map_or(0.0, |(_, top)| (top - s[hinge.low_original]).max(0.0));
    Ok(pair + spread)
}

/// A subgradient of [`order_penalty`]. A hinge sitting exactly at its kink
/// contributes nothing.
pub fn order_penalty_gradient(
    student_logits: &LabelDistribution,
    h: &MixedHardLabel,
) -> Result<Vec<f64>> {
    student_logits.expect_len(h.classes())?;
    let s = student_logits.values();
    let mut grad = vec![0.0; s.len()];
    add_penalty_gradient(s, h, 1.0, &mut grad);
    Ok(grad)
}

/// Adds `scale` times the subgradient into `grad`.
pub(crate) fn add_penalty_gradient(s: &[f64], h: &MixedHardLabel, scale: f64, grad: &mut [f64]) {
    let hinge = hinges(s, h);
    if hinge.pair_gap > 0.0 {
        grad[h.label_b()] += scale;
        grad[h.label_a()] -= scale;
    }
    if let Some((top, value)) = hinge.top_other {
        if value > s[hinge.low_original] {
            grad[top] += scale;
            grad[hinge.low_original] -= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotonic::count_violations;

    fn logits(values: &[f64]) -> LabelDistribution {
        LabelDistribution::logits(values.to_vec()).unwrap()
    }

    fn h01(classes: usize) -> MixedHardLabel {
        MixedHardLabel::new(0, 1, 0.7, classes).unwrap()
    }

    #[test]
    fn penalty_examples() {
        let h = h01(4);
        assert_eq!(order_penalty(&logits(&[3.0, 2.0, 1.0, 0.5]), &h), Ok(0.0));
        assert_eq!(order_penalty(&logits(&[2.0, 3.0, 1.0, 0.5]), &h), Ok(1.0));
        assert_eq!(order_penalty(&logits(&[1.0, 0.5, 2.5, 0.0]), &h), Ok(2.0));
    }

    #[test]
    fn gradient_examples() {
        let h = h01(4);
        assert_eq!(
            order_penalty_gradient(&logits(&[3.0, 2.0, 1.0, 0.5]), &h).unwrap(),
            [0.0; 4]
        );
        assert_eq!(
            order_penalty_gradient(&logits(&[2.0, 3.0, 1.0, 0.5]), &h).unwrap(),
            [-1.0, 1.0, 0.0, 0.0]
        );
        // Only the spread hinge is active here; label 1 is the smaller original.
        assert_eq!(
            order_penalty_gradient(&logits(&[1.0, 0.5, 2.5, 0.0]), &h).unwrap(),
            [0.0, -1.0, 1.0, 0.0]
        );
    }

    #[test]
    fn both_hinges_active() {
        let h = h01(4);
        let s = logits(&[1.0, 2.0, 3.0, 0.0]);
        // (2 − 1) + (3 − 1)
        assert_eq!(order_penalty(&s, &h), Ok(3.0));
        assert_eq!(
            order_penalty_gradient(&s, &h).unwrap(),
            [-2.0, 1.0, 1.0, 0.0]
        );
    }

    #[test]
    fn ties_pick_lowest_index() {
        let h = MixedHardLabel::new(2, 0, 0.8, 5).unwrap();
        // Originals tie at 1.0: label 0 is the low one. Others tie at 4.0: label 1 wins.
        let s = logits(&[1.0, 4.0, 1.0, 4.0, 0.0]);
        assert_eq!(order_penalty(&s, &h), Ok(3.0));
        assert_eq!(
            order_penalty_gradient(&s, &h).unwrap(),
            [-1.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn two_labels_use_pair_hinge_only() {
        let h = h01(2);
        assert_eq!(order_penalty(&logits(&[0.0, 1.5]), &h), Ok(1.5));
        assert_eq!(order_penalty(&logits(&[1.5, 0.0]), &h), Ok(0.0));
    }

    #[test]
    fn zero_penalty_matches_feasibility_on_boundary() {
        let h = h01(3);
        let s = logits(&[1.0, 1.0, 1.0]);
        assert_eq!(order_penalty(&s, &h), Ok(0.0));
        assert_eq!(count_violations(&s, &h.order_tree()), Ok(0));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(order_penalty(&logits(&[1.0, 2.0]), &h01(3)).is_err());
        assert!(order_penalty_gradient(&logits(&[1.0, 2.0]), &h01(3)).is_err());
    }
}
