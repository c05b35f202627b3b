//! Distillation objectives on a single sample.
//!
//! Every loss takes raw student and teacher logits. Each has a matching
//! `*_gradient` function returning the derivative with respect to the student
//! logits, which the harness backpropagates through its network.

use alloc::vec;
use alloc::vec::Vec;

use crate::isotonic::adapted_irt;
use crate::labels::{LabelDistribution, MixedHardLabel, Space};
use crate::penalty::{add_penalty_gradient, order_penalty};
use crate::{Error, Result};

/// Predictions are clamped to this floor before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// What the `β`-weighted term of KD-i compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CalibratedTerm {
    /// `CE(softmax(s/τ), m̂)`: the student is pulled towards the calibrated
    /// soft labels.
    #[default]
    StudentVsCalibrated,
    /// `CE(m̂, ỹ)`: the calibrated labels scored against the hard label. It
    /// does not depend on the student and contributes no gradient.
    HardVsCalibrated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillConfig {
    /// Softmax temperature `τ > 0`.
    pub tau: f64,
    /// Soft-loss weight `α ∈ [0, 1]`.
    pub alpha: f64,
    /// Weight of the calibrated-label term in KD-i.
    pub beta: f64,
    /// Weight of the order penalty in KD-p.
    pub sigma: f64,
    pub calibrated_term: CalibratedTerm,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            tau: 4.5,
            alpha: 0.95,
            beta: 3.0,
            sigma: 2.0,
            calibrated_term: CalibratedTerm::default(),
        }
    }
}

impl DistillConfig {
    pub fn new(tau: f64, alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            alpha,
            beta,
            sigma,
            calibrated_term: CalibratedTerm::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidTemperature(self.tau));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig("alpha must lie in [0, 1]"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("beta must be nonnegative"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be nonnegative"));
        }
        Ok(())
    }
}

pub(crate) fn softmax_slice(logits: &[f64], tau: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| libm::exp((z - max) / tau)).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

pub(crate) fn cross_entropy_slice(pred: &[f64], target: &[f64]) -> f64 {
    let acc: f64 = pred
        .iter()
        .zip(target)
        .filter(|&(_, &t)| t != 0.0)
        .map(|(&p, &t)| t * libm::log(p.max(LOG_FLOOR)))
        .sum();
    0.0 - acc
}

/// Adds `scale · ∂/∂s CE(softmax(s/τ), target)` into `grad`, given
/// `pred = softmax(s/τ)`. The log floor is ignored.
fn add_softmax_ce_gradient(pred: &[f64], target: &[f64], tau: f64, scale: f64, grad: &mut [f64]) {
    let mass: f64 = target.iter().sum();
    let factor = scale / tau;
    for ((g, &p), &t) in grad.iter_mut().zip(pred).zip(target) {
        *g += factor * (p * mass - t);
    }
}

/// Temperature-scaled softmax, stabilized by subtracting the maximum.
pub fn softmax_t(logits: &LabelDistribution, tau: f64) -> Result<LabelDistribution> {
    logits.expect_space(Space::Logit)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidTemperature(tau));
    }
    Ok(LabelDistribution::from_parts_unchecked(
        softmax_slice(logits.values(), tau),
        Space::Probability,
    ))
}

/// `−Σ_k target_k · ln(max(pred_k, 1e-12))`.
pub fn cross_entropy(pred: &LabelDistribution, target: &LabelDistribution) -> Result<f64> {
    pred.expect_space(Space::Probability)?;
    target.expect_space(Space::Probability)?;
    target.expect_len(pred.len())?;
    Ok(cross_entropy_slice(pred.values(), target.values()))
}

fn check_logits(
    student: &LabelDistribution,
    teacher: &LabelDistribution,
    classes: usize,
) -> Result<()> {
    student.expect_space(Space::Logit)?;
    teacher.expect_space(Space::Logit)?;
    student.expect_len(classes)?;
    teacher.expect_len(classes)
}

/// Value and student-logit gradient of one objective.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
}

pub(crate) fn kd_eval(
    student: &[f64],
    teacher: &[f64],
    hard: &[f64],
    cfg: &DistillConfig,
) -> Evaluation {
    let tau = cfg.tau;
    let soft_student = softmax_slice(student, tau);
    let soft_teacher = softmax_slice(teacher, tau);
    let hard_student = softmax_slice(student, 1.0);

    let soft = cross_entropy_slice(&soft_student, &soft_teacher);
    let hard_loss = cross_entropy_slice(&hard_student, hard);
    let value = cfg.alpha * tau * tau * soft + (1.0 - cfg.alpha) * hard_loss;

    let mut grad = vec![0.0; student.len()];
    add_softmax_ce_gradient(
        &soft_student,
        &soft_teacher,
        tau,
        cfg.alpha * tau * tau,
        &mut grad,
    );
    add_softmax_ce_gradient(&hard_student, hard, 1.0, 1.0 - cfg.alpha, &mut grad);
    Evaluation { value, grad }
}

/// KD-i with an explicit calibrated target `m̂` (probabilities).
pub(crate) fn kd_i_eval(
    student: &[f64],
    teacher: &[f64],
    h: &MixedHardLabel,
    calibrated: &[f64],
    cfg: &DistillConfig,
) -> Evaluation {
    let hard = h.expand();
    let mut eval = kd_eval(student, teacher, hard.values(), cfg);
    let term = match cfg.calibrated_term {
        CalibratedTerm::StudentVsCalibrated => {
            let pred = softmax_slice(student, cfg.tau);
            add_softmax_ce_gradient(&pred, calibrated, cfg.tau, cfg.beta, &mut eval.grad);
            cross_entropy_slice(&pred, calibrated)
        }
        CalibratedTerm::HardVsCalibrated => cross_entropy_slice(calibrated, hard.values()),
    };
    eval.value += cfg.beta * term;
    eval
}

pub(crate) fn kd_p_eval(
    student: &[f64],
    teacher: &[f64],
    h: &MixedHardLabel,
    cfg: &DistillConfig,
    penalty: f64,
) -> Evaluation {
    let hard = h.expand();
    let mut eval = kd_eval(student, teacher, hard.values(), cfg);
    eval.value += cfg.sigma * penalty;
    add_penalty_gradient(student, h, cfg.sigma, &mut eval.grad);
    eval
}

/// `m̂`: the teacher's tempered soft labels projected onto the order tree.
pub fn calibrated_soft_labels(
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    tau: f64,
) -> Result<LabelDistribution> {
    let soft = softmax_t(teacher_logits, tau)?;
    Ok(adapted_irt(&soft, &h.order_tree())?.calibrated)
}

/// `α·τ²·CE(softmax(s/τ), softmax(t/τ)) + (1 − α)·CE(softmax(s), y)`.
pub fn kd_loss(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    y: &LabelDistribution,
    cfg: &DistillConfig,
) -> Result<f64> {
    Ok(kd_checked(student_logits, teacher_logits, y, cfg)?.value)
}

pub fn kd_loss_gradient(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    y: &LabelDistribution,
    cfg: &DistillConfig,
) -> Result<Vec<f64>> {
    Ok(kd_checked(student_logits, teacher_logits, y, cfg)?.grad)
}

fn kd_checked(
    student: &LabelDistribution,
    teacher: &LabelDistribution,
    y: &LabelDistribution,
    cfg: &DistillConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    y.expect_space(Space::Probability)?;
    check_logits(student, teacher, y.len())?;
    Ok(kd_eval(student.values(), teacher.values(), y.values(), cfg))
}

/// [`kd_loss`] against the mixed hard label `ỹ`.
pub fn kd_aug_loss(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<f64> {
    kd_loss(student_logits, teacher_logits, &h.expand(), cfg)
}

pub fn kd_aug_loss_gradient(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<Vec<f64>> {
    kd_loss_gradient(student_logits, teacher_logits, &h.expand(), cfg)
}

/// KD-aug plus `β` times the calibrated-label term (see [`CalibratedTerm`]).
pub fn kd_i_loss(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<f64> {
    Ok(kd_i_checked(student_logits, teacher_logits, h, None, cfg)?.value)
}

pub fn kd_i_loss_gradient(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<Vec<f64>> {
    Ok(kd_i_checked(student_logits, teacher_logits, h, None, cfg)?.grad)
}

/// [`kd_i_loss`] with a caller-supplied target in place of `m̂`, used when
/// only part of a batch is calibrated.
pub fn kd_i_loss_with_target(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    target: &LabelDistribution,
    cfg: &DistillConfig,
) -> Result<f64> {
    Ok(kd_i_checked(student_logits, teacher_logits, h, Some(target), cfg)?.value)
}

fn kd_i_checked(
    student: &LabelDistribution,
    teacher: &LabelDistribution,
    h: &MixedHardLabel,
    target: Option<&LabelDistribution>,
    cfg: &DistillConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_logits(student, teacher, h.classes())?;
    let calibrated = match target {
        Some(t) => {
            t.expect_space(Space::Probability)?;
            t.expect_len(h.classes())?;
            t.clone()
        }
        None => calibrated_soft_labels(teacher, h, cfg.tau)?,
    };
    Ok(kd_i_eval(
        student.values(),
        teacher.values(),
        h,
        calibrated.values(),
        cfg,
    ))
}

/// KD-aug plus `σ` times the order penalty on the student logits.
pub fn kd_p_loss(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<f64> {
    Ok(kd_p_checked(student_logits, teacher_logits, h, cfg)?.value)
}

pub fn kd_p_loss_gradient(
    student_logits: &LabelDistribution,
    teacher_logits: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<Vec<f64>> {
    Ok(kd_p_checked(student_logits, teacher_logits, h, cfg)?.grad)
}

fn kd_p_checked(
    student: &LabelDistribution,
    teacher: &LabelDistribution,
    h: &MixedHardLabel,
    cfg: &DistillConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_logits(student, teacher, h.classes())?;
    let penalty = order_penalty(student, h)?;
    Ok(kd_p_eval(
        student.values(),
        teacher.values(),
        h,
        cfg,
        penalty,
    ))
}
