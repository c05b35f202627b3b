//! Mixture augmentation: Mixup, CutMix and the mixing-weight sampler.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::labels::SampleTensor;
use crate::{Error, Result};

/// `γ·x_i + (1 − γ)·x_j`, elementwise. The endpoints return an exact copy.
pub fn mixup(x_i: &SampleTensor, x_j: &SampleTensor, gamma: f64) -> Result<SampleTensor> {
    x_i.expect_same_shape(x_j)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    if gamma == 1.0 {
        return Ok(x_i.clone());
    }
    if gamma == 0.0 {
        return Ok(x_j.clone());
    }
    let mut out = x_i.clone();
    for (o, &b) in out.data_mut().iter_mut().zip(x_j.data()) {
        *o = gamma * *o + (1.0 - gamma) * b;
    }
    Ok(out)
}

/// A CutMix patch: the sampled real box and its clipped pixel bounds.
///
/// Pixels `x0 ≤ x < x1`, `y0 ≤ y < y1` come from the second sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchBox {
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub height: f64,
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl PatchBox {
    /// Samples the patch for weight `gamma` on a `width × height` grid.
    pub fn sample<R: Rng + ?Sized>(
        grid_width: usize,
        grid_height: usize,
        gamma: f64,
        rng: &mut R,
    ) -> Self {
        let (w, h) = (grid_width as f64, grid_height as f64);
        let center_x = rng.random::<f64>() * w;
        let center_y = rng.random::<f64>() * h;
        let side = libm::sqrt(1.0 - gamma);
        Self::from_center(
            grid_width,
            grid_height,
            center_x,
            center_y,
            w * side,
            h * side,
        )
    }

    /// Rounds the real box to the nearest pixel edges and clamps it to the grid.
    pub fn from_center(
        grid_width: usize,
        grid_height: usize,
        center_x: f64,
        center_y: f64,
        width: f64,
        height: f64,
    ) -> Self {
        let clip = |edge: f64, limit: usize| libm::round(edge).clamp(0.0, limit as f64) as usize;
        Self {
            center_x,
            center_y,
            width,
            height,
            x0: clip(center_x - width / 2.0, grid_width),
            x1: clip(center_x + width / 2.0, grid_width),
            y0: clip(center_y - height / 2.0, grid_height),
            y1: clip(center_y + height / 2.0, grid_height),
        }
    }

    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// True when the real box lies inside `[0, W] × [0, H]` before clipping.
    pub fn is_interior(&self, grid_width: usize, grid_height: usize) -> bool {
        self.center_x - self.width / 2.0 >= 0.0
            && self.center_x + self.width / 2.0 <= grid_width as f64
            && self.center_y - self.height / 2.0 >= 0.0
            && self.center_y + self.height / 2.0 <= grid_height as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutMix {
    pub mixed: SampleTensor,
    /// `1 − area / (W·H)` for the clipped patch.
    pub effective_gamma: f64,
    pub patch: PatchBox,
}

/// Pastes a patch of `x_j` into `x_i`. The patch is `W√(1−γ) × H√(1−γ)`,
/// centred uniformly at random and clipped to the grid; the label weight is
/// recomputed from the clipped area.
pub fn cutmix<R: Rng + ?Sized>(
    x_i: &SampleTensor,
    x_j: &SampleTensor,
    gamma: f64,
    rng: &mut R,
) -> Result<CutMix> {
    x_i.expect_same_shape(x_j)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let (width, height, channels) = x_i.shape();
    let patch = PatchBox::sample(width, height, gamma, rng);
    let mut mixed = x_i.clone();
    if patch.y1 > patch.y0 {
        for x in patch.x0..patch.x1 {
            // One column of the patch is contiguous.
            let start = x_i.offset(x, patch.y0, 0);
            let end = x_i.offset(x, patch.y1 - 1, channels - 1) + 1;
            mixed.data_mut()[start..end].copy_from_slice(&x_j.data()[start..end]);
        }
    }
    let effective_gamma = 1.0 - patch.area() as f64 / (width * height) as f64;
    Ok(CutMix {
        mixed,
        effective_gamma,
        patch,
    })
}

/// One draw from `Beta(a, a)`, strictly inside `(0, 1)`.
pub fn sample_gamma<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Result<f64> {
    let beta = Beta::new(a, a).map_err(|_| Error::InvalidBetaShape(a))?;
    loop {
        // Small shapes can round a draw onto an endpoint.
        let gamma = beta.sample(rng);
        if gamma > 0.0 && gamma < 1.0 {
            return Ok(gamma);
        }
    }
}
