//! Order-violation measurements between soft labels and hard labels.
//!
//! Only pairs whose hard order is known are compared: for a mixed sample every
//! pair involving an original label (`2c − 3` pairs), for an original sample
//! every pair involving its label (`c − 1` pairs). Ties in the soft values
//! count as neither concordant nor discordant.

use alloc::vec::Vec;

use rand::Rng;

use crate::isotonic::{adapted_irt, count_violations};
use crate::labels::{LabelDistribution, MixedHardLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationReport {
    pub kendall_tau: f64,
    pub top2_hit: bool,
    pub violation_count: usize,
    pub known_pair_count: usize,
}

#[derive(Default)]
struct PairTally {
    concordant: usize,
    discordant: usize,
    pairs: usize,
}

impl PairTally {
    /// `hi` is known to rank above `lo`.
    fn record(&mut self, soft: &[f64], hi: usize, lo: usize) {
        self.pairs += 1;
        if soft[hi] > soft[lo] {
            self.concordant += 1;
        } else if soft[hi] < soft[lo] {
            self.discordant += 1;
        }
    }

    fn tau(&self) -> f64 {
        (self.concordant as f64 - self.discordant as f64) / self.pairs as f64
    }
}

fn mixed_tally(soft: &[f64], h: &MixedHardLabel) -> PairTally {
    let (a, b) = (h.label_a(), h.label_b());
    let mut tally = PairTally::default();
    tally.record(soft, a, b);
    for other in (0..soft.len()).filter(|&k| !h.is_original(k)) {
        tally.record(soft, a, other);
        tally.record(soft, b, other);
    }
    tally
}

/// Kendall's τ between `soft` and the mixed hard label over known pairs.
pub fn kendall_tau_known(soft: &LabelDistribution, h: &MixedHardLabel) -> Result<f64> {
    soft.expect_len(h.classes())?;
    Ok(mixed_tally(soft.values(), h).tau())
}

/// Kendall's τ between `soft` and the one-hot label of an original sample.
pub fn kendall_tau_original(soft: &LabelDistribution, label: usize) -> Result<f64> {
    if label >= soft.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: soft.len(),
        });
    }
    let values = soft.values();
    let mut tally = PairTally::default();
    for other in (0..values.len()).filter(|&k| k != label) {
        tally.record(values, label, other);
    }
    Ok(tally.tau())
}

/// Indices of the two largest values, ties broken towards the lower index.
fn top_two(values: &[f64]) -> (usize, usize) {
    let mut first = 0;
    let mut second = usize::MAX;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[first] {
            second = first;
            first = k;
        } else if second == usize::MAX || v > values[second] {
            second = k;
        }
    }
    (first, second)
}

/// Whether either original label is among the two largest soft values.
pub fn top2_contains_original(soft: &LabelDistribution, h: &MixedHardLabel) -> Result<bool> {
    soft.expect_len(h.classes())?;
    let (first, second) = top_two(soft.values());
    Ok(h.is_original(first) || h.is_original(second))
}

/// Report over the known pairs of `h`. A label with `γ = 1` is one-hot and
/// is measured as an original sample of `label_a`.
pub fn violation_report(soft: &LabelDistribution, h: &MixedHardLabel) -> Result<ViolationReport> {
    soft.expect_len(h.classes())?;
    if h.gamma() == 1.0 {
        return original_report(soft, h.label_a());
    }
    let tally = mixed_tally(soft.values(), h);
    Ok(ViolationReport {
        kendall_tau: tally.tau(),
        top2_hit: top2_contains_original(soft, h)?,
        violation_count: count_violations(soft, &h.order_tree())?,
        known_pair_count: tally.pairs,
    })
}

/// Report for an original sample: `label` should beat every other label.
/// Violations are labels strictly above it.
pub fn original_report(soft: &LabelDistribution, label: usize) -> Result<ViolationReport> {
    let kendall_tau = kendall_tau_original(soft, label)?;
    let values = soft.values();
    let (first, second) = top_two(values);
    Ok(ViolationReport {
        kendall_tau,
        top2_hit: label == first || label == second,
        violation_count: values.iter().filter(|&&v| v > values[label]).count(),
        known_pair_count: values.len() - 1,
    })
}

/// Means of a batch of reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub samples: usize,
    pub mean_kendall_tau: f64,
    pub top2_ratio: f64,
    pub mean_violations: f64,
}

impl BatchSummary {
    /// The result does not depend on the order of `reports`.
    pub fn from_reports(reports: &[ViolationReport]) -> Self {
        let n = reports.len();
        if n == 0 {
            return Self {
                samples: 0,
                mean_kendall_tau: 0.0,
                top2_ratio: 0.0,
                mean_violations: 0.0,
            };
        }
        let mut taus: Vec<f64> = reports.iter().map(|r| r.kendall_tau).collect();
        taus.sort_unstable_by(f64::total_cmp);
        let hits = reports.iter().filter(|r| r.top2_hit).count();
        let violations: usize = reports.iter().map(|r| r.violation_count).sum();
        Self {
            samples: n,
            mean_kendall_tau: taus.iter().sum::<f64>() / n as f64,
            top2_ratio: hits as f64 / n as f64,
            mean_violations: violations as f64 / n as f64,
        }
    }
}

/// Calibrates a random `round(fraction · n)` subset of the batch with
/// [`adapted_irt`]; every other entry is returned unchanged.
pub fn calibrate_fraction<R: Rng + ?Sized>(
    batch: &[(LabelDistribution, MixedHardLabel)],
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<LabelDistribution>> {
    let chosen = select_fraction(batch.len(), fraction, rng)?;
    batch
        .iter()
        .zip(chosen)
        .map(|((soft, h), selected)| {
            if selected {
                Ok(adapted_irt(soft, &h.order_tree())?.calibrated)
            } else {
                Ok(soft.clone())
            }
        })
        .collect()
}

/// Marks a uniformly random `round(fraction · n)` subset of `0..n`.
pub fn select_fraction<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidFraction(fraction));
    }
    let count = (libm::round(fraction * n as f64) as usize).min(n);
    let mut chosen = alloc::vec![false; n];
    if count == n {
        chosen.iter_mut().for_each(|c| *c = true);
    } else if count > 0 {
        for index in rand::seq::index::sample(rng, n, count) {
            chosen[index] = true;
        }
    }
    Ok(chosen)
}
