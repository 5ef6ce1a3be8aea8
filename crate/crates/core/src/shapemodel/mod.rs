//! Per-class statistical shape models: a mean shape plus `k` orthonormal modes
//! of variation with their singular values.
//!
//! A model replaces stored exemplars of an old class. Replay samples are drawn
//! on demand as `mean + alpha * sum_i eps_i * sigma_i * V_i` with standard
//! normal `eps_i`, and never stored.

mod persist;

pub use persist::{
    load_model, read_model, save_model, write_model, ModelManifest, ModelManifestEntry,
    MODEL_MAGIC, MODEL_VERSION,
};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CorrespondedSet, Point, PointCloud};
use crate::linalg::{dot, thin_svd_left};
use crate::rng;

/// Largest supported mode count.
pub const MAX_K: usize = 8;
/// Mean plus two modes, i.e. three stored components per class.
pub const DEFAULT_K: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_NS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeModel {
    pub class_id: String,
    pub mean: Vec<Point>,
    pub modes: Vec<Vec<Point>>,
    pub sigmas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample {
    pub points: Vec<Point>,
    pub class_id: String,
    pub epsilons: Vec<f64>,
    pub alpha: f64,
}

impl GeneratedSample {
    pub fn to_cloud(&self) -> PointCloud {
        PointCloud::labeled(self.points.clone(), self.class_id.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Footprint {
    /// Point-cloud-sized units: the mean and every mode count as one each.
    pub units: usize,
    pub floats: usize,
}

impl ShapeModel {
    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// Largest `|<V_i, V_j> - delta_ij|` over all mode pairs.
    pub fn orthonormality_residual(&self) -> f64 {
        let flat: Vec<Vec<f64>> = self.modes.iter().map(|m| vectorize(m)).collect();
        let mut worst = 0.0f64;
        for i in 0..flat.len() {
            for j in 0..flat.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&flat[i], &flat[j]) - target).abs());
            }
        }
        worst
    }

    pub fn footprint(&self) -> Footprint {
        memory_footprint(std::slice::from_ref(self))
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.sigmas.len() != self.k() {
            return Err(Error::DimensionMismatch(format!(
                "{} sigmas for {} modes",
                self.sigmas.len(),
                self.k()
            )));
        }
        if let Some(m) = self.modes.iter().find(|m| m.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "mode has {} rows, mean has {n}",
                m.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn vectorize(rows: &[Point]) -> Vec<f64> {
    rows.iter().flat_map(|p| p.iter().copied()).collect()
}

fn unvectorize(v: &[f64]) -> Vec<Point> {
    v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Flip `v` so that its largest-magnitude entry (lowest index on ties) is
/// non-negative.
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v.get(idx).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Mean shape and the top `k` left singular vectors of the centered,
/// vectorized members.
pub fn build_shape_model(set: &CorrespondedSet, k: usize) -> Result<ShapeModel> {
    let m = set.m();
    if m == 0 {
        return Err(Error::DimensionMismatch(
            "corresponded set needs m >= 1".into(),
        ));
    }
    let n = set.members[0].len();
    if let Some(bad) = set.members.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "member has {} rows, expected {n}",
            bad.len()
        )));
    }
    let bound = (3 * n).min(m);
    if k > bound {
        return Err(Error::InvalidK { k, bound });
    }
    if set
        .members
        .iter()
        .flatten()
        .flatten()
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("corresponded set"));
    }

    let mut mean = vec![[0.0; 3]; n];
    for member in &set.members {
        for (acc, p) in mean.iter_mut().zip(member) {
            acc[0] += p[0];
            acc[1] += p[1];
            acc[2] += p[2];
        }
    }
    let inv = 1.0 / m as f64;
    for acc in &mut mean {
        acc.iter_mut().for_each(|v| *v *= inv);
    }

    let flat_mean = vectorize(&mean);
    let cols: Vec<Vec<f64>> = set
        .members
        .iter()
        .map(|x| {
            vectorize(x)
                .into_iter()
                .zip(&flat_mean)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();

    let (all_sigmas, all_left) = thin_svd_left(&cols, 3 * n);
    let mut modes = Vec::with_capacity(k);
    let mut sigmas = Vec::with_capacity(k);
    for (sigma, mut u) in all_sigmas.into_iter().zip(all_left).take(k) {
        fix_sign(&mut u);
        modes.push(unvectorize(&u));
        sigmas.push(sigma);
    }

    Ok(ShapeModel {
        class_id: set.class_id.clone(),
        mean,
        modes,
        sigmas,
    })
}

/// `mean + alpha * sum_i eps_i * sigma_i * V_i`.
pub fn generate_sample(
    model: &ShapeModel,
    alpha: f64,
    epsilons: &[f64],
) -> Result<GeneratedSample> {
    if epsilons.len() != model.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} epsilons for a model with k = {}",
            epsilons.len(),
            model.k()
        )));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::DimensionMismatch(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let points = if alpha == 0.0 || model.k() == 0 {
        model.mean.clone()
    } else {
        let coeffs: Vec<f64> = epsilons
            .iter()
            .zip(&model.sigmas)
            .map(|(e, s)| e * s)
            .collect();
        model
            .mean
            .iter()
            .enumerate()
            .map(|(row, base)| {
                let mut out = *base;
                for d in 0..3 {
                    let mut acc = 0.0;
                    for (c, mode) in coeffs.iter().zip(&model.modes) {
                        acc += c * mode[row][d];
                    }
                    out[d] = base[d] + alpha * acc;
                }
                out
            })
            .collect()
    };
    Ok(GeneratedSample {
        points,
        class_id: model.class_id.clone(),
        epsilons: epsilons.to_vec(),
        alpha,
    })
}

/// `n_s` samples with fresh standard-normal coefficients drawn from `rng`,
/// `k` draws per sample in mode order.
pub fn generate_replay_batch_with(
    model: &ShapeModel,
    n_s: usize,
    alpha: f64,
    rng: &mut rng::Rng,
) -> Result<Vec<GeneratedSample>> {
    (0..n_s)
        .map(|_| {
            let eps: Vec<f64> = (0..model.k()).map(|_| rng.sample(StandardNormal)).collect();
            generate_sample(model, alpha, &eps)
        })
        .collect()
}

/// Seeded replay batch; identical seeds give bitwise identical batches.
pub fn generate_replay_batch(
    model: &ShapeModel,
    n_s: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<GeneratedSample>> {
    let mut rng = rng::seeded(seed);
    generate_replay_batch_with(model, n_s, alpha, &mut rng)
}

pub fn memory_footprint(models: &[ShapeModel]) -> Footprint {
    models.iter().fold(
        Footprint {
            units: 0,
            floats: 0,
        },
        |acc, m| Footprint {
            units: acc.units + m.k() + 1,
            floats: acc.floats + 3 * m.n() * (m.k() + 1) + m.k(),
        },
    )
}
