use isodistill_core::isotonic::count_violations;
use isodistill_core::losses::{
    kd_aug_loss, kd_aug_loss_gradient, kd_i_loss, kd_i_loss_gradient, kd_loss, kd_loss_gradient,
    kd_p_loss, kd_p_loss_gradient, DistillConfig,
};
use isodistill_core::penalty::{order_penalty, order_penalty_gradient};
use isodistill_core::{LabelDistribution, MixedHardLabel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const LOSS_TOLERANCE: f64 = 1e-4;

type GradientCase<'a> = (&'a str, Vec<f64>, Box<dyn Fn(&[f64]) -> f64 + 'a>);

fn logits(values: Vec<f64>) -> LabelDistribution {
    LabelDistribution::logits(values).unwrap()
}

fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    (0..at.len())
        .map(|k| {
            let mut up = at.to_vec();
            let mut down = at.to_vec();
            up[k] += STEP;
            down[k] -= STEP;
            (f(&up) - f(&down)) / (2.0 * STEP)
        })
        .collect()
}

/// `‖a − n‖ / max(‖a‖, ‖n‖)`, or the absolute error when both are tiny.
fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-8)
}

/// Random logits whose penalty hinges are all at least `margin` from a kink.
fn away_from_kinks(rng: &mut ChaCha8Rng, h: &MixedHardLabel, margin: f64) -> Vec<f64> {
    loop {
        let s: Vec<f64> = (0..h.classes())
            .map(|_| rng.random_range(-3.0..3.0))
            .collect();
        let (a, b) = (h.label_a(), h.label_b());
        let mut others: Vec<f64> = (0..s.len())
            .filter(|&k| k != a && k != b)
            .map(|k| s[k])
            .collect();
        others.sort_unstable_by(|x, y| y.total_cmp(x));
        let low = s[a].min(s[b]);
        let clear = (s[a] - s[b]).abs() > margin
            && others.first().is_none_or(|&top| (top - low).abs() > margin)
            && (others.len() < 2 || others[0] - others[1] > margin);
        if clear {
            return s;
        }
    }
}

fn random_label(rng: &mut ChaCha8Rng, classes: usize) -> MixedHardLabel {
    let a = rng.random_range(0..classes);
    let b = (a + rng.random_range(1..classes)) % classes;
    MixedHardLabel::new(a, b, rng.random_range(0.05..1.0), classes).unwrap()
}

#[test]
fn penalty_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let c = rng.random_range(3..10);
        let h = random_label(&mut rng, c);
        let s = away_from_kinks(&mut rng, &h, 1e-3);
        let analytic = order_penalty_gradient(&logits(s.clone()), &h).unwrap();
        let numeric = central_difference(|v| order_penalty(&logits(v.to_vec()), &h).unwrap(), &s);
        let err = relative_error(&analytic, &numeric);
        assert!(
            err <= LOSS_TOLERANCE,
            "{s:?} {h:?}: {analytic:?} vs {numeric:?}"
        );
    }
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let configs = [
        DistillConfig::default(),
        DistillConfig::new(1.0, 0.5, 1.0, 0.5).unwrap(),
        DistillConfig::new(2.0, 0.0, 0.0, 0.0).unwrap(),
    ];
    for _ in 0..200 {
        let c = rng.random_range(3..9);
        let h = random_label(&mut rng, c);
        let s = away_from_kinks(&mut rng, &h, 1e-3);
        let t: Vec<f64> = (0..c).map(|_| rng.random_range(-4.0..4.0)).collect();
        let teacher = logits(t);
        let y = h.expand();
        for cfg in &configs {
            let cases: [GradientCase; 4] = [
                (
                    "kd",
                    kd_loss_gradient(&logits(s.clone()), &teacher, &y, cfg).unwrap(),
                    Box::new(|v: &[f64]| kd_loss(&logits(v.to_vec()), &teacher, &y, cfg).unwrap()),
                ),
                (
                    "kd_aug",
                    kd_aug_loss_gradient(&logits(s.clone()), &teacher, &h, cfg).unwrap(),
                    Box::new(|v: &[f64]| {
                        kd_aug_loss(&logits(v.to_vec()), &teacher, &h, cfg).unwrap()
                    }),
                ),
                (
                    "kd_i",
                    kd_i_loss_gradient(&logits(s.clone()), &teacher, &h, cfg).unwrap(),
                    Box::new(|v: &[f64]| {
                        kd_i_loss(&logits(v.to_vec()), &teacher, &h, cfg).unwrap()
                    }),
                ),
                (
                    "kd_p",
                    kd_p_loss_gradient(&logits(s.clone()), &teacher, &h, cfg).unwrap(),
                    Box::new(|v: &[f64]| {
                        kd_p_loss(&logits(v.to_vec()), &teacher, &h, cfg).unwrap()
                    }),
                ),
            ];
            for (name, analytic, f) in cases {
                let numeric = central_difference(f, &s);
                let err = relative_error(&analytic, &numeric);
                assert!(
                    err <= LOSS_TOLERANCE,
                    "{name} {cfg:?}: {analytic:?} vs {numeric:?}"
                );
            }
        }
    }
}

fn logit_case() -> impl Strategy<Value = (Vec<f64>, MixedHardLabel)> {
    (3usize..=10)
        .prop_flat_map(|c| {
            (
                prop::collection::vec(-5.0f64..5.0, c),
                0..c,
                1..c,
                0.0f64..=1.0,
            )
        })
        .prop_map(|(s, a, shift, gamma)| {
            let c = s.len();
            (
                s,
                MixedHardLabel::new(a, (a + shift) % c, gamma, c).unwrap(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn penalty_vanishes_iff_feasible((s, h) in logit_case()) {
        let z = logits(s);
        let penalty = order_penalty(&z, &h).unwrap();
        let violations = count_violations(&z, &h.order_tree()).unwrap();
        prop_assert!(penalty >= 0.0);
        prop_assert_eq!(penalty == 0.0, violations == 0);
    }

    #[test]
    fn penalty_is_translation_invariant((s, h) in logit_case(), shift in -10.0f64..10.0) {
        let base = order_penalty(&logits(s.clone()), &h).unwrap();
        let moved = order_penalty(&logits(s.iter().map(|v| v + shift).collect()), &h).unwrap();
        prop_assert!((base - moved).abs() <= 1e-12 * (1.0 + base.abs() + shift.abs()));
        let g = order_penalty_gradient(&logits(s), &h).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-15);
    }

    #[test]
    fn kd_p_is_at_least_kd_aug((s, h) in logit_case(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let teacher = logits((0..s.len()).map(|_| rng.random_range(-4.0..4.0)).collect());
        let cfg = DistillConfig::default();
        let student = logits(s);
        let aug = kd_aug_loss(&student, &teacher, &h, &cfg).unwrap();
        prop_assert!(kd_p_loss(&student, &teacher, &h, &cfg).unwrap() >= aug);
    }
}
