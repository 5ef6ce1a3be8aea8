//! Browser bindings for the demo page: synthetic clouds, a shape-model
//! explorer with per-mode sliders, and focal-loss curves.
//!
//! Clouds cross the boundary as flat `[x0, y0, z0, x1, ...]` arrays.

use wasm_bindgen::prelude::*;

use shapecl::data::{synth_generate, Family, SynthClassSpec};
use shapecl::geometry::{CorrespondedSet, Point};
use shapecl::losses::focal_loss;
use shapecl::shapemodel::{build_shape_model, generate_sample, ShapeModel};

fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flatten().copied().collect()
}

fn family(name: &str) -> Result<Family, String> {
    Family::from_name(name).ok_or_else(|| format!("unknown family `{name}`"))
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Names accepted by [`sample_cloud`] and [`ShapeExplorer::new`].
#[wasm_bindgen]
pub fn families() -> Vec<String> {
    Family::ALL.iter().map(|f| f.name().to_string()).collect()
}

pub fn sample_cloud_native(name: &str, n: usize, seed: u64) -> Result<Vec<f64>, String> {
    let spec = SynthClassSpec::with_defaults(family(name)?, 1);
    let clouds = synth_generate(&spec, n, seed).map_err(|e| e.to_string())?;
    Ok(flatten(&clouds[0].points))
}

/// One normalized synthetic cloud of `n` points.
#[wasm_bindgen]
pub fn sample_cloud(name: &str, n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    sample_cloud_native(name, n, seed as u64).map_err(js)
}

/// Shape model of `m` synthetic clouds of one family.
#[wasm_bindgen]
pub struct ShapeExplorer {
    model: ShapeModel,
}

impl ShapeExplorer {
    pub fn build(name: &str, n: usize, m: usize, k: usize, seed: u64) -> Result<Self, String> {
        let spec = SynthClassSpec::with_defaults(family(name)?, m);
        let clouds = synth_generate(&spec, n, seed).map_err(|e| e.to_string())?;
        let members = clouds.into_iter().map(|c| c.points).collect();
        let set = CorrespondedSet::new(name, members).map_err(|e| e.to_string())?;
        let model = build_shape_model(&set, k).map_err(|e| e.to_string())?;
        Ok(Self { model })
    }

    pub fn model(&self) -> &ShapeModel {
        &self.model
    }
}

#[wasm_bindgen]
impl ShapeExplorer {
    #[wasm_bindgen(constructor)]
    pub fn new(
        name: &str,
        n: usize,
        m: usize,
        k: usize,
        seed: u32,
    ) -> Result<ShapeExplorer, JsError> {
        Self::build(name, n, m, k, seed as u64).map_err(js)
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.model.sigmas.clone()
    }

    pub fn mean(&self) -> Vec<f64> {
        flatten(&self.model.mean)
    }

    /// `mean + alpha * sum_i eps_i sigma_i V_i`; `eps` needs one entry per mode.
    pub fn sample(&self, alpha: f64, eps: Vec<f64>) -> Result<Vec<f64>, JsError> {
        generate_sample(&self.model, alpha, &eps)
            .map(|s| flatten(&s.points))
            .map_err(js)
    }
}

/// Focal loss of a two-class prediction over `steps` values of `p` in
/// `(0, 1]`; `gamma = 0, alpha_t = 1` is cross-entropy.
#[wasm_bindgen]
pub fn loss_curve(gamma: f64, alpha_t: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    (1..=steps)
        .map(|i| {
            let p = i as f64 / steps as f64;
            focal_loss(&[p, 1.0 - p], 0, gamma, alpha_t)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_has_three_coordinates_per_point() {
        let c = sample_cloud_native("torus", 64, 3).unwrap();
        assert_eq!(c.len(), 192);
        assert!(sample_cloud_native("teapot", 64, 3).is_err());
    }

    #[test]
    fn explorer_at_zero_alpha_is_the_mean() {
        let e = ShapeExplorer::build("ellipsoid", 64, 6, 2, 1).unwrap();
        assert_eq!(e.k(), 2);
        assert!(e.sigmas()[0] >= e.sigmas()[1]);
        let s = generate_sample(e.model(), 0.0, &[1.0, -1.0]).unwrap();
        assert_eq!(flatten(&s.points), e.mean());
        assert!(ShapeExplorer::build("ellipsoid", 64, 2, 3, 1).is_err());
    }

    #[test]
    fn curve_decreases_to_zero() {
        let ce = loss_curve(0.0, 1.0, 10).unwrap();
        let fl = loss_curve(2.0, 1.0, 10).unwrap();
        assert_eq!(ce[9], 0.0);
        assert!(ce.windows(2).all(|w| w[0] > w[1]));
        assert!(fl.iter().zip(&ce).all(|(f, c)| f <= c));
    }
}
