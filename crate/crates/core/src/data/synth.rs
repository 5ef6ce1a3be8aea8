//! Parametric shape families used as a small, deterministic benchmark.
//!
//! Point `i` of every sample sits at the same parametric coordinate `(u, v)`,
//! so samples of one family are in correspondence by construction. The
//! coordinates come in pairs `(u, v)` / `(1 - u, v + 1/2)`, which are
//! antipodal on the centrally symmetric families.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize, Point, PointCloud};
use crate::rng;

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sphere,
    Ellipsoid,
    Box,
    Cylinder,
    Cone,
    Torus,
    Pyramid,
    Capsule,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Sphere,
        Family::Ellipsoid,
        Family::Box,
        Family::Cylinder,
        Family::Cone,
        Family::Torus,
        Family::Pyramid,
        Family::Capsule,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sphere => "sphere",
            Family::Ellipsoid => "ellipsoid",
            Family::Box => "box",
            Family::Cylinder => "cylinder",
            Family::Cone => "cone",
            Family::Torus => "torus",
            Family::Pyramid => "pyramid",
            Family::Capsule => "capsule",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Default `[lo, hi]` ranges of the three shape parameters.
    pub fn default_ranges(self) -> [[f64; 2]; 3] {
        match self {
            // radius only; scale is removed by normalization
            Family::Sphere => [[0.8, 1.2], [1.0, 1.0], [1.0, 1.0]],
            // semi-axes
            Family::Ellipsoid => [[1.0, 1.6], [0.5, 0.9], [0.25, 0.5]],
            // half extents
            Family::Box => [[0.8, 1.2], [0.5, 0.9], [0.3, 0.6]],
            // radius, half height
            Family::Cylinder => [[0.4, 0.6], [0.8, 1.2], [1.0, 1.0]],
            // base radius, height
            Family::Cone => [[0.5, 0.8], [1.0, 1.6], [1.0, 1.0]],
            // tube radius relative to a unit ring, vertical squash
            Family::Torus => [[0.2, 0.45], [0.7, 1.0], [1.0, 1.0]],
            // base half width, height
            Family::Pyramid => [[0.5, 0.8], [0.9, 1.5], [1.0, 1.0]],
            // radius, half length of the straight part
            Family::Capsule => [[0.3, 0.5], [0.6, 1.0], [1.0, 1.0]],
        }
    }

    /// Surface point for parameters `a` at parametric coordinate `(u, v)`.
    pub fn surface(self, a: [f64; 3], u: f64, v: f64) -> Point {
        let phi = 2.0 * PI * v;
        let (sp, cp) = phi.sin_cos();
        let sphere_dir = || {
            let (st, ct) = (PI * u).sin_cos();
            [st * cp, st * sp, ct]
        };
        match self {
            Family::Sphere => {
                let d = sphere_dir();
                [a[0] * d[0], a[0] * d[1], a[0] * d[2]]
            }
            Family::Ellipsoid => {
                let d = sphere_dir();
                [a[0] * d[0], a[1] * d[1], a[2] * d[2]]
            }
            Family::Box => {
                let d = sphere_dir();
                let t = 1.0
                    / (d[0].abs() / a[0])
                        .max(d[1].abs() / a[1])
                        .max(d[2].abs() / a[2]);
                [t * d[0], t * d[1], t * d[2]]
            }
            Family::Cylinder => {
                let d = sphere_dir();
                let radial = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let t = 1.0 / (radial / a[0]).max(d[2].abs() / a[1]);
                [t * d[0], t * d[1], t * d[2]]
            }
            Family::Cone | Family::Pyramid => {
                let (r, z) = if u < 0.3 {
                    (a[0] * u / 0.3, 0.0)
                } else {
                    let s = (u - 0.3) / 0.7;
                    (a[0] * (1.0 - s), a[1] * s)
                };
                let scale = if self == Family::Pyramid {
                    1.0 / cp.abs().max(sp.abs())
                } else {
                    1.0
                };
                [r * scale * cp, r * scale * sp, z]
            }
            Family::Torus => {
                let (st, ct) = (2.0 * PI * u).sin_cos();
                let ring = 1.0 + a[0] * ct;
                [ring * cp, ring * sp, a[1] * a[0] * st]
            }
            Family::Capsule => {
                let (r, half) = (a[0], a[1]);
                if u < 0.25 {
                    let (st, ct) = (u / 0.25 * PI / 2.0).sin_cos();
                    [r * st * cp, r * st * sp, half + r * ct]
                } else if u > 0.75 {
                    let (st, ct) = ((1.0 - u) / 0.25 * PI / 2.0).sin_cos();
                    [r * st * cp, r * st * sp, -half - r * ct]
                } else {
                    [r * cp, r * sp, half - (u - 0.25) / 0.5 * 2.0 * half]
                }
            }
        }
    }
}

/// Fixed parametric sweep of `n` coordinates in `[0, 1]^2`.
pub fn parametric_grid(n: usize) -> Vec<(f64, f64)> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut out = Vec::with_capacity(n);
    for j in 0..n / 2 {
        let u = (j as f64 + 0.5) / n as f64;
        let v = (j as f64 * golden).fract();
        out.push((u, v));
        out.push((1.0 - u, (v + 0.5).fract()));
    }
    if n % 2 == 1 {
        out.push((0.5, 0.0));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClassSpec {
    pub family: Family,
    pub ranges: [[f64; 2]; 3],
    pub noise_sigma: f64,
    pub count: usize,
}

impl SynthClassSpec {
    pub fn with_defaults(family: Family, count: usize) -> Self {
        Self {
            family,
            ranges: family.default_ranges(),
            noise_sigma: DEFAULT_NOISE,
            count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for [lo, hi] in self.ranges {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::BadSpec(format!("bad parameter range [{lo}, {hi}]")));
            }
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::BadSpec(format!("noise_sigma {}", self.noise_sigma)));
        }
        Ok(())
    }
}

pub const DEFAULT_NOISE: f64 = 0.01;

/// `spec.count` normalized clouds of `n` points each.
pub fn synth_generate(spec: &SynthClassSpec, n: usize, seed: u64) -> Result<Vec<PointCloud>> {
    spec.validate()?;
    if n < 8 {
        return Err(Error::BadSpec(format!("need n >= 8, got {n}")));
    }
    let grid = parametric_grid(n);
    let mut rng = rng::seeded(seed);
    (0..spec.count)
        .map(|_| {
            let mut a = [0.0; 3];
            for (ai, [lo, hi]) in a.iter_mut().zip(spec.ranges) {
                *ai = rng.random_range(lo..=hi);
            }
            let points: Vec<Point> = grid
                .iter()
                .map(|&(u, v)| {
                    let mut p = spec.family.surface(a, u, v);
                    for c in &mut p {
                        let e: f64 = rng.sample(StandardNormal);
                        *c += spec.noise_sigma * e;
                    }
                    p
                })
                .collect();
            let mut pc = normalize(&PointCloud::new(points))?;
            pc.label = Some(spec.family.name().to_string());
            Ok(pc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{correspond, norm2};

    #[test]
    fn noiseless_fixed_parameters_repeat() {
        let mut spec = SynthClassSpec::with_defaults(Family::Cone, 4);
        spec.noise_sigma = 0.0;
        spec.ranges = [[0.6, 0.6], [1.2, 1.2], [1.0, 1.0]];
        let clouds = synth_generate(&spec, 64, 3).unwrap();
        for c in &clouds[1..] {
            assert_eq!(c.points, clouds[0].points);
        }
    }

    #[test]
    fn noiseless_sphere_lies_on_unit_sphere() {
        let mut spec = SynthClassSpec::with_defaults(Family::Sphere, 3);
        spec.noise_sigma = 0.0;
        for c in synth_generate(&spec, 256, 8).unwrap() {
            for p in &c.points {
                assert!((norm2(p).sqrt() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn seeds_control_output() {
        let spec = SynthClassSpec::with_defaults(Family::Torus, 2);
        let a = synth_generate(&spec, 32, 1).unwrap();
        let b = synth_generate(&spec, 32, 1).unwrap();
        let c = synth_generate(&spec, 32, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bad_specs() {
        let mut spec = SynthClassSpec::with_defaults(Family::Box, 1);
        assert!(synth_generate(&spec, 4, 0).is_err());
        spec.ranges[0] = [1.0, 0.5];
        assert!(matches!(
            synth_generate(&spec, 16, 0),
            Err(Error::BadSpec(_))
        ));
        spec.ranges[0] = [1.0, 1.0];
        spec.noise_sigma = -1.0;
        assert!(matches!(
            synth_generate(&spec, 16, 0),
            Err(Error::BadSpec(_))
        ));
    }

    #[test]
    fn correspondence_recovers_identity_within_family() {
        for family in Family::ALL {
            let mut spec = SynthClassSpec::with_defaults(family, 2);
            spec.noise_sigma = 0.0;
            spec.ranges = family.default_ranges().map(|[lo, _]| [lo, lo]);
            let clouds = synth_generate(&spec, 256, 5).unwrap();
            let rows = correspond(&clouds[0], &clouds[1]).unwrap();
            let same = rows
                .iter()
                .zip(&clouds[1].points)
                .filter(|(a, b)| a == b)
                .count();
            assert!(same as f64 >= 0.95 * 256.0, "{family:?}: {same}");
        }
    }

    #[test]
    fn names_round_trip() {
        for f in Family::ALL {
            assert_eq!(Family::from_name(f.name()), Some(f));
        }
    }
}
