use std::hint::black_box;
use std::time::{Duration, Instant};

use isodistill_core::isotonic::adapted_irt;
use isodistill_core::penalty::order_penalty;
use isodistill_core::{LabelDistribution, MixedHardLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

/// Distinct inputs cycled through per size. Few enough to stay in cache, so
/// the timings reflect the algorithms rather than memory traffic.
const INPUTS_PER_SIZE: usize = 8;
const TRIALS: usize = 7;
/// Allowed slack over the growth in `c` between consecutive sizes.
pub const IRT_SLACK: f64 = 1.5;
pub const PENALTY_SLACK: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub classes: usize,
    /// Best-of-trials mean time per call.
    pub irt: Duration,
    pub penalty: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCheck {
    pub routine: &'static str,
    pub from: usize,
    pub to: usize,
    pub ratio: f64,
    pub bound: f64,
}

impl ScalingCheck {
    pub fn passed(&self) -> bool {
        self.ratio <= self.bound
    }
}

fn inputs(
    classes: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(LabelDistribution, LabelDistribution, MixedHardLabel)> {
    (0..INPUTS_PER_SIZE)
        .map(|_| {
            let raw: Vec<f64> = (0..classes).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let residue = 1.0 - probs.iter().sum::<f64>();
            probs[0] += residue;
            let logits: Vec<f64> = (0..classes).map(|_| rng.random_range(-5.0..5.0)).collect();
            let a = rng.random_range(0..classes);
            let b = (a + rng.random_range(1..classes)) % classes;
            let h = MixedHardLabel::new(a, b, rng.random_range(0.5..1.0), classes)
                .expect("valid label");
            (
                LabelDistribution::probabilities(probs).expect("normalized"),
                LabelDistribution::logits(logits).expect("finite"),
                h,
            )
        })
        .collect()
}

fn best_per_call(reps: usize, mut call: impl FnMut(usize)) -> Duration {
    let calls = reps.max(1);
    (0..TRIALS)
        .map(|_| {
            let start = Instant::now();
            for k in 0..calls {
                call(k % INPUTS_PER_SIZE);
            }
            start.elapsed() / calls as u32
        })
        .min()
        .expect("at least one trial")
}

pub fn run_bench(
    class_counts: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, CliError> {
    if let Some(&c) = class_counts.iter().find(|&&c| c < 2) {
        return Err(CliError::Usage(format!(
            "class counts must be at least 2, got {c}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(class_counts.len());
    for &classes in class_counts {
        let cases = inputs(classes, &mut rng);
        let trees: Vec<_> = cases.iter().map(|(_, _, h)| h.order_tree()).collect();
        let irt = best_per_call(reps, |k| {
            black_box(adapted_irt(black_box(&cases[k].0), &trees[k]).expect("valid input"));
        });
        let penalty = best_per_call(reps, |k| {
            black_box(order_penalty(black_box(&cases[k].1), &cases[k].2).expect("valid input"));
        });
        rows.push(BenchRow {
            classes,
            irt,
            penalty,
        });
    }
    Ok(rows)
}

/// Compares each size with the next larger one.
pub fn scaling_checks(rows: &[BenchRow]) -> Vec<ScalingCheck> {
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| r.classes);
    let mut checks = Vec::new();
    for pair in sorted.windows(2) {
        let (small, large) = (pair[0], pair[1]);
        if small.classes == large.classes {
            continue;
        }
        let growth = large.classes as f64 / small.classes as f64;
        for (routine, slack, before, after) in [
            ("adapted_irt", IRT_SLACK, small.irt, large.irt),
            ("order_penalty", PENALTY_SLACK, small.penalty, large.penalty),
        ] {
            checks.push(ScalingCheck {
                routine,
                from: small.classes,
                to: large.classes,
                ratio: after.as_secs_f64() / before.as_secs_f64().max(1e-12),
                bound: slack * growth,
            });
        }
    }
    checks
}

pub fn render(rows: &[BenchRow], checks: &[ScalingCheck]) -> String {
    let mut out = format!(
        "{:>8}  {:>14}  {:>14}\n",
        "c", "irt_ns/call", "penalty_ns/call"
    );
    for row in rows {
        out.push_str(&format!(
            "{:>8}  {:>14.1}  {:>14.1}\n",
            row.classes,
            row.irt.as_secs_f64() * 1e9,
            row.penalty.as_secs_f64() * 1e9
        ));
    }
    for check in checks {
        out.push_str(&format!(
            "{} c={}->{}: ratio {:.2} (bound {:.2}) {}\n",
            check.routine,
            check.from,
            check.to,
            check.ratio,
            check.bound,
            if check.passed() { "ok" } else { "FAIL" }
        ));
    }
    out
}
