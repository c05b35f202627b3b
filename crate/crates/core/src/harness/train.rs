use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::SyntheticDataset;
use super::mlp::{Mlp, MlpGrads};
use crate::augment::{cutmix, mixup, sample_gamma};
use crate::diagnostics::calibrate_fraction;
use crate::isotonic::adapted_irt;
use crate::labels::{LabelDistribution, MixedHardLabel, SampleTensor, Space};
use crate::losses::{kd_eval, kd_i_eval, kd_p_eval, softmax_slice, DistillConfig};
use crate::penalty::order_penalty;
use crate::{Error, Result};

// Independent random streams derived from one seed.
const STREAM_INIT: u64 = 0;
const STREAM_SAMPLING: u64 = 1;
const STREAM_CALIBRATION: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
            hidden: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::InvalidSetup(
                "epochs, batch size and hidden width must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidSetup("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Step schedule: the rate drops by ×0.2 at 30%, 60% and 80% of training.
pub fn learning_rate_at(base: f64, epoch: usize, epochs: usize) -> f64 {
    [3, 6, 8]
        .iter()
        .filter(|&&tenths| epoch * 10 >= tenths * epochs)
        .fold(base, |lr, _| lr * 0.2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub learning_rate: f64,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Mlp,
    pub history: Vec<EpochMetrics>,
}

impl TrainedModel {
    pub fn final_test_accuracy(&self) -> f64 {
        self.history.last().map_or(0.0, |m| m.test_accuracy)
    }
}

fn accuracy<'a>(model: &Mlp, samples: impl Iterator<Item = (&'a [f64], usize)>) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for (x, label) in samples {
        hits += usize::from(model.predict(x) == label);
        total += 1;
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn test_accuracy(model: &Mlp, ds: &SyntheticDataset) -> f64 {
    accuracy(
        model,
        (0..ds.test_len()).map(|k| (ds.test_x(k), ds.test_labels[k])),
    )
}

/// Trains a network on the dataset's (possibly noisy) teacher labels with
/// plain cross-entropy and mini-batch SGD.
pub fn train_teacher(ds: &SyntheticDataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if ds.train_len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut model = Mlp::new(
        ds.dim(),
        cfg.hidden,
        ds.classes(),
        &mut stream(cfg.seed, STREAM_INIT),
    );
    let mut rng = stream(cfg.seed, STREAM_SAMPLING);
    let mut grads = MlpGrads::zeros_like(&model);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = learning_rate_at(cfg.learning_rate, epoch, cfg.epochs);
        let mut total_loss = 0.0;
        for batch in ds.permutation(&mut rng).chunks(cfg.batch_size) {
            grads.clear();
            for &index in batch {
                let x = ds.train_x(index);
                let label = ds.teacher_labels[index];
                let act = model.forward_cached(x);
                let mut dlogits = softmax_slice(&act.logits, 1.0);
                total_loss -= libm::log(dlogits[label].max(crate::losses::LOG_FLOOR));
                dlogits[label] -= 1.0;
                model.backward(x, &act, &dlogits, &mut grads);
            }
            model.sgd_step(&grads, lr, 1.0 / batch.len() as f64);
        }
        history.push(EpochMetrics {
            epoch,
            learning_rate: lr,
            mean_loss: total_loss / ds.train_len() as f64,
            train_accuracy: accuracy(
                &model,
                (0..ds.train_len()).map(|k| (ds.train_x(k), ds.teacher_labels[k])),
            ),
            test_accuracy: test_accuracy(&model, ds),
        });
    }
    Ok(TrainedModel { model, history })
}

/// Which objective the student is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistillMode {
    /// Standard distillation on original samples.
    Kd,
    /// Distillation on mixed samples.
    KdAug,
    /// Mixed samples plus the calibrated soft-label term.
    KdI,
    /// Mixed samples plus the order penalty on student logits.
    KdP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Augmentation {
    Mixup,
    /// Features are viewed as an `s × s × channels` grid.
    CutMix {
        channels: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSource {
    /// Fresh `Beta(a, a)` draw per pair.
    Beta(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillSettings {
    pub mode: DistillMode,
    pub loss: DistillConfig,
    pub augmentation: Augmentation,
    pub gamma: GammaSource,
    /// Share of each KD-i batch whose soft labels are calibrated.
    pub calibration_fraction: f64,
    pub train: TrainConfig,
}

impl Default for DistillSettings {
    fn default() -> Self {
        Self {
            mode: DistillMode::KdAug,
            loss: DistillConfig::default(),
            augmentation: Augmentation::Mixup,
            gamma: GammaSource::Beta(1.0),
            calibration_fraction: 1.0,
            train: TrainConfig::default(),
        }
    }
}

/// One input to a distillation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSample {
    pub features: Vec<f64>,
    /// Hard label; original samples use weight 1 on their own label.
    pub label: MixedHardLabel,
    pub teacher_logits: Vec<f64>,
    /// KD-i target. When absent the full projection of the teacher's
    /// tempered soft labels is used.
    pub calibrated: Option<Vec<f64>>,
}

/// Mean loss and mean parameter gradient over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEvaluation {
    pub loss: f64,
    pub grads: MlpGrads,
}

/// Per-sample loss and logit gradient under `mode`.
fn sample_objective(
    mode: DistillMode,
    student_logits: &[f64],
    sample: &StepSample,
    cfg: &DistillConfig,
) -> Result<(f64, Vec<f64>)> {
    let t = &sample.teacher_logits;
    let h = &sample.label;
    let eval = match mode {
        DistillMode::Kd | DistillMode::KdAug => {
            kd_eval(student_logits, t, h.expand().values(), cfg)
        }
        DistillMode::KdI => match &sample.calibrated {
            Some(target) => kd_i_eval(student_logits, t, h, target, cfg),
            None => {
                let soft = LabelDistribution::from_parts_unchecked(
                    softmax_slice(t, cfg.tau),
                    Space::Probability,
                );
                let target = adapted_irt(&soft, &h.order_tree())?.calibrated;
                kd_i_eval(student_logits, t, h, target.values(), cfg)
            }
        },
        DistillMode::KdP => {
            let logits =
                LabelDistribution::from_parts_unchecked(student_logits.to_vec(), Space::Logit);
            let penalty = order_penalty(&logits, h)?;
            kd_p_eval(student_logits, t, h, cfg, penalty)
        }
    };
    Ok((eval.value, eval.grad))
}

/// Loss and backpropagated gradient of `mode` for `student` on `samples`.
pub fn batch_gradient(
    mode: DistillMode,
    student: &Mlp,
    samples: &[StepSample],
    cfg: &DistillConfig,
) -> Result<BatchEvaluation> {
    let mut grads = MlpGrads::zeros_like(student);
    let mut loss = 0.0;
    accumulate(mode, student, samples, cfg, &mut grads, &mut loss)?;
    let scale = 1.0 / samples.len().max(1) as f64;
    for buf in [&mut grads.w1, &mut grads.b1, &mut grads.w2, &mut grads.b2] {
        buf.iter_mut().for_each(|g| *g *= scale);
    }
    Ok(BatchEvaluation {
        loss: loss * scale,
        grads,
    })
}

fn accumulate(
    mode: DistillMode,
    student: &Mlp,
    samples: &[StepSample],
    cfg: &DistillConfig,
    grads: &mut MlpGrads,
    loss: &mut f64,
) -> Result<()> {
    for sample in samples {
        let act = student.forward_cached(&sample.features);
        let (value, dlogits) = sample_objective(mode, &act.logits, sample, cfg)?;
        *loss += value;
        student.backward(&sample.features, &act, &dlogits, grads);
    }
    Ok(())
}

/// Square grid side for CutMix, if `dim` is `side² · channels`.
fn grid_side(dim: usize, channels: usize) -> Option<usize> {
    if channels == 0 || !dim.is_multiple_of(channels) {
        return None;
    }
    let cells = dim / channels;
    let side = libm::round(libm::sqrt(cells as f64)) as usize;
    (side * side == cells).then_some(side)
}

struct PairSampler<'a> {
    ds: &'a SyntheticDataset,
    settings: &'a DistillSettings,
    side: usize,
}

impl PairSampler<'_> {
    /// Draws one training input. The augmented modes consume the random
    /// stream identically, so runs that differ only in mode see the same
    /// pairs. Plain distillation draws the pair alone, which is exactly what
    /// an augmented mode consumes when `γ` is fixed to 1.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, MixedHardLabel)> {
        let ds = self.ds;
        let n = ds.train_len();
        let i = rng.random_range(0..n);
        let j = loop {
            let j = rng.random_range(0..n);
            if ds.train_labels[j] != ds.train_labels[i] {
                break j;
            }
        };
        let (y_i, y_j) = (ds.train_labels[i], ds.train_labels[j]);
        let x_i = ds.train_x(i);
        let gamma = match (self.settings.mode, self.settings.gamma) {
            (DistillMode::Kd, _) => 1.0,
            (_, GammaSource::Beta(a)) => sample_gamma(a, rng)?,
            (_, GammaSource::Fixed(g)) => g,
        };
        if gamma == 1.0 {
            return Ok((
                x_i.to_vec(),
                MixedHardLabel::new(y_i, y_j, 1.0, ds.classes())?,
            ));
        }
        let x_j = ds.train_x(j);
        let (features, weight) = match self.settings.augmentation {
            Augmentation::Mixup => {
                let mixed = mixup(
                    &SampleTensor::from_features(x_i)?,
                    &SampleTensor::from_features(x_j)?,
                    gamma,
                )?;
                (mixed.into_data(), gamma)
            }
            Augmentation::CutMix { channels } => {
                let a = SampleTensor::new(self.side, self.side, channels, x_i.to_vec())?;
                let b = SampleTensor::new(self.side, self.side, channels, x_j.to_vec())?;
                let out = cutmix(&a, &b, gamma, rng)?;
                (out.mixed.into_data(), out.effective_gamma)
            }
        };
        Ok((
            features,
            MixedHardLabel::new(y_i, y_j, weight, ds.classes())?,
        ))
    }
}

/// Distills `teacher` into a fresh student on `ds` and records per-epoch
/// metrics. Deterministic for a given seed and settings.
pub fn distill(
    teacher: &Mlp,
    ds: &SyntheticDataset,
    settings: &DistillSettings,
) -> Result<TrainedModel> {
    settings.loss.validate()?;
    settings.train.validate()?;
    if ds.train_len() == 0 {
        return Err(Error::EmptyDataset);
    }
    if teacher.input_dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            actual: teacher.input_dim(),
        });
    }
    if teacher.classes() != ds.classes() {
        return Err(Error::DimensionMismatch {
            expected: ds.classes(),
            actual: teacher.classes(),
        });
    }
    if !(0.0..=1.0).contains(&settings.calibration_fraction) {
        return Err(Error::InvalidFraction(settings.calibration_fraction));
    }
    if ds.train_labels.iter().all(|&y| y == ds.train_labels[0]) {
        return Err(Error::InvalidSetup(
            "mixing needs at least two classes in the training set",
        ));
    }
    let side = match settings.augmentation {
        Augmentation::Mixup => 0,
        Augmentation::CutMix { channels } => grid_side(ds.dim(), channels).ok_or(
            Error::InvalidSetup("CutMix needs features forming a square grid"),
        )?,
    };
    match settings.gamma {
        GammaSource::Beta(a) if a.is_nan() || a <= 0.0 => return Err(Error::InvalidBetaShape(a)),
        GammaSource::Fixed(g) if !(g > 0.0 && g <= 1.0) => return Err(Error::InvalidGamma(g)),
        _ => {}
    }

    let cfg = &settings.loss;
    let train = &settings.train;
    let sampler = PairSampler { ds, settings, side };
    let mut student = Mlp::new(
        ds.dim(),
        train.hidden,
        ds.classes(),
        &mut stream(train.seed, STREAM_INIT),
    );
    let mut sampling = stream(train.seed, STREAM_SAMPLING);
    let mut calibration = stream(train.seed, STREAM_CALIBRATION);
    let mut grads = MlpGrads::zeros_like(&student);
    let steps = ds.train_len().div_ceil(train.batch_size);
    let mut history = Vec::with_capacity(train.epochs);
    let mut samples: Vec<StepSample> = Vec::with_capacity(train.batch_size);

    for epoch in 0..train.epochs {
        let lr = learning_rate_at(train.learning_rate, epoch, train.epochs);
        let mut total_loss = 0.0;
        for _ in 0..steps {
            samples.clear();
            for _ in 0..train.batch_size {
                let (features, label) = sampler.draw(&mut sampling)?;
                let teacher_logits = teacher.forward(&features);
                samples.push(StepSample {
                    features,
                    label,
                    teacher_logits,
                    calibrated: None,
                });
            }
            if settings.mode == DistillMode::KdI {
                let batch: Vec<(LabelDistribution, MixedHardLabel)> = samples
                    .iter()
                    .map(|s| {
                        let soft = softmax_slice(&s.teacher_logits, cfg.tau);
                        (
                            LabelDistribution::from_parts_unchecked(soft, Space::Probability),
                            s.label,
                        )
                    })
                    .collect();
                let targets =
                    calibrate_fraction(&batch, settings.calibration_fraction, &mut calibration)?;
                for (sample, target) in samples.iter_mut().zip(targets) {
                    sample.calibrated = Some(target.into_values());
                }
            }
            grads.clear();
            accumulate(
                settings.mode,
                &student,
                &samples,
                cfg,
                &mut grads,
                &mut total_loss,
            )?;
            student.sgd_step(&grads, lr, 1.0 / samples.len() as f64);
        }
        history.push(EpochMetrics {
            epoch,
            learning_rate: lr,
            mean_loss: total_loss / (steps * train.batch_size) as f64,
            train_accuracy: accuracy(
                &student,
                (0..ds.train_len()).map(|k| (ds.train_x(k), ds.train_labels[k])),
            ),
            test_accuracy: test_accuracy(&student, ds),
        });
    }
    Ok(TrainedModel {
        model: student,
        history,
    })
}

pub fn evaluate_accuracy(model: &Mlp, ds: &SyntheticDataset) -> f64 {
    test_accuracy(model, ds)
}
