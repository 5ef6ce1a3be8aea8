//! Training objectives: cross-entropy and distillation on new-class samples,
//! focal loss plus Gradient Mode Regularization (GMR) on replayed samples.
//!
//! GMR penalizes `lambda * sum_i <dL_FL/dZ, V_i>^2`, the squared directional
//! derivatives of the focal loss along the shape modes of the sample's class.
//! Its parameter gradient needs a mixed second derivative; it is taken as a
//! central difference of parameter gradients along each mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::network::{self, backward_into, forward, ClassifierParams, GradientBundle};

/// Probabilities are floored here before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub gamma: f64,
    pub alpha_t: f64,
    pub lambda: f64,
    pub kd_factor: f64,
    pub temperature: f64,
    pub fd_step: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha_t: 1.0,
            lambda: 0.01,
            kd_factor: 0.1,
            temperature: 2.0,
            fd_step: 1e-4,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma >= 0.0
            && self.alpha_t > 0.0
            && self.lambda >= 0.0
            && self.kd_factor >= 0.0
            && self.temperature > 0.0
            && self.fd_step > 0.0
            && [
                self.gamma,
                self.alpha_t,
                self.lambda,
                self.kd_factor,
                self.temperature,
                self.fd_step,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid loss config {self:?}")))
        }
    }
}

fn check_label(probs: &[f64], label: usize) -> Result<()> {
    if label >= probs.len() {
        return Err(Error::BadLabel {
            label,
            classes: probs.len(),
        });
    }
    Ok(())
}

/// `1 - p[label]`, summed from the other entries to keep precision near 1.
fn complement(probs: &[f64], label: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label)
        .map(|(_, p)| p)
        .sum()
}

pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    check_label(probs, label)?;
    Ok(-probs[label].max(PROB_FLOOR).ln())
}

/// Gradient of [`cross_entropy`] with respect to the logits.
pub fn cross_entropy_grad(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    check_label(probs, label)?;
    if probs[label] < PROB_FLOOR {
        return Ok(vec![0.0; probs.len()]);
    }
    Ok(probs
        .iter()
        .enumerate()
        .map(|(j, p)| if j == label { p - 1.0 } else { *p })
        .collect())
}

/// `-alpha_t * (1 - p)^gamma * ln p` with `p = probs[label]`.
pub fn focal_loss(probs: &[f64], label: usize, gamma: f64, alpha_t: f64) -> Result<f64> {
    check_label(probs, label)?;
    let p = probs[label];
    let q = complement(probs, label);
    Ok(-alpha_t * q.powf(gamma) * p.max(PROB_FLOOR).ln())
}

/// Gradient of [`focal_loss`] with respect to the logits.
pub fn focal_grad(probs: &[f64], label: usize, gamma: f64, alpha_t: f64) -> Result<Vec<f64>> {
    check_label(probs, label)?;
    let p = probs[label];
    let q = complement(probs, label);
    let log_p = p.max(PROB_FLOOR).ln();
    // d/dp of (1-p)^gamma * ln p
    let mut d_dp = if p >= PROB_FLOOR {
        q.powf(gamma) / p
    } else {
        0.0
    };
    if gamma != 0.0 && q > 0.0 {
        d_dp -= gamma * q.powf(gamma - 1.0) * log_p;
    }
    let d_dp = -alpha_t * d_dp;
    Ok(probs
        .iter()
        .enumerate()
        .map(|(j, pj)| {
            let dp_dz = if j == label { p * (1.0 - pj) } else { -p * pj };
            d_dp * dp_dz
        })
        .collect())
}

fn log_softmax(z: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = z.iter().map(|v| v / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    scaled.into_iter().map(|v| v - lse).collect()
}

fn check_kd(student: &[f64], teacher: &[f64], old_classes: usize, temperature: f64) -> Result<()> {
    if old_classes == 0 || student.len() < old_classes || teacher.len() < old_classes {
        return Err(Error::DimensionMismatch(format!(
            "distillation over {old_classes} classes with {} student and {} teacher logits",
            student.len(),
            teacher.len()
        )));
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::Config(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    Ok(())
}

/// `T^2 * KL(softmax(teacher/T) || softmax(student/T))` over the first
/// `old_classes` logits.
pub fn kd_loss(
    student: &[f64],
    teacher: &[f64],
    old_classes: usize,
    temperature: f64,
) -> Result<f64> {
    check_kd(student, teacher, old_classes, temperature)?;
    let ls = log_softmax(&student[..old_classes], temperature);
    let lt = log_softmax(&teacher[..old_classes], temperature);
    let kl: f64 = lt.iter().zip(&ls).map(|(t, s)| t.exp() * (t - s)).sum();
    Ok(temperature * temperature * kl.max(0.0))
}

/// Gradient of [`kd_loss`] with respect to all student logits (zero past
/// `old_classes`).
pub fn kd_grad(
    student: &[f64],
    teacher: &[f64],
    old_classes: usize,
    temperature: f64,
) -> Result<Vec<f64>> {
    check_kd(student, teacher, old_classes, temperature)?;
    let ls = log_softmax(&student[..old_classes], temperature);
    let lt = log_softmax(&teacher[..old_classes], temperature);
    let mut g = vec![0.0; student.len()];
    for ((gj, s), t) in g.iter_mut().zip(&ls).zip(&lt) {
        *gj = temperature * (s.exp() - t.exp());
    }
    Ok(g)
}

fn frobenius(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2])
        .sum()
}

fn check_modes(d_input: &[Point], modes: &[Vec<Point>]) -> Result<()> {
    if let Some(m) = modes.iter().find(|m| m.len() != d_input.len()) {
        return Err(Error::DimensionMismatch(format!(
            "mode has {} rows, input gradient has {}",
            m.len(),
            d_input.len()
        )));
    }
    Ok(())
}

/// `lambda * sum_i <d_input, V_i>_F^2`.
pub fn gmr_penalty(d_input: &[Point], modes: &[Vec<Point>], lambda: f64) -> Result<f64> {
    check_modes(d_input, modes)?;
    let sum: f64 = modes.iter().map(|v| frobenius(d_input, v).powi(2)).sum();
    Ok(lambda * sum)
}

/// Focal loss at `points` with its full gradient bundle.
pub fn focal_backward(
    params: &ClassifierParams,
    points: &[Point],
    label: usize,
    cfg: &LossConfig,
) -> Result<(f64, GradientBundle)> {
    let rec = forward(params, points)?;
    let value = focal_loss(&rec.probs, label, cfg.gamma, cfg.alpha_t)?;
    let up = focal_grad(&rec.probs, label, cfg.gamma, cfg.alpha_t)?;
    Ok((value, network::backward(params, points, &rec, &up)))
}

fn focal_param_grad_into(
    params: &ClassifierParams,
    points: &[Point],
    label: usize,
    cfg: &LossConfig,
    out: &mut ClassifierParams,
    scale: f64,
) -> Result<()> {
    let rec = forward(params, points)?;
    let mut up = focal_grad(&rec.probs, label, cfg.gamma, cfg.alpha_t)?;
    up.iter_mut().for_each(|v| *v *= scale);
    backward_into(params, points, &rec, &up, out, None);
    Ok(())
}

/// Accumulate `lambda * sum_i 2 g_i dg_i/dtheta` into `out`, given the
/// directional derivatives `g_i = <dL_FL/dZ, V_i>` at `points`.
fn gmr_grad_into(
    params: &ClassifierParams,
    points: &[Point],
    modes: &[Vec<Point>],
    directional: &[f64],
    label: usize,
    cfg: &LossConfig,
    out: &mut ClassifierParams,
) -> Result<()> {
    let h = cfg.fd_step;
    let mut shifted = points.to_vec();
    for (mode, g) in modes.iter().zip(directional) {
        if *g == 0.0 {
            continue;
        }
        // 2 g (grad(Z + hV) - grad(Z - hV)) / 2h, scaled by lambda
        let w = cfg.lambda * g / h;
        for (s, (p, v)) in shifted.iter_mut().zip(points.iter().zip(mode)) {
            for d in 0..3 {
                s[d] = p[d] + h * v[d];
            }
        }
        focal_param_grad_into(params, &shifted, label, cfg, out, w)?;
        for (s, (p, v)) in shifted.iter_mut().zip(points.iter().zip(mode)) {
            for d in 0..3 {
                s[d] = p[d] - h * v[d];
            }
        }
        focal_param_grad_into(params, &shifted, label, cfg, out, -w)?;
    }
    Ok(())
}

/// Parameter gradient of the GMR penalty for one generated sample.
pub fn gmr_param_gradient(
    params: &ClassifierParams,
    points: &[Point],
    modes: &[Vec<Point>],
    label: usize,
    cfg: &LossConfig,
) -> Result<ClassifierParams> {
    check_modes(points, modes)?;
    let mut out = params.zeros_like();
    if cfg.lambda == 0.0 || modes.is_empty() {
        return Ok(out);
    }
    let (_, bundle) = focal_backward(params, points, label, cfg)?;
    let directional: Vec<f64> = modes
        .iter()
        .map(|v| frobenius(&bundle.d_input, v))
        .collect();
    gmr_grad_into(params, points, modes, &directional, label, cfg, &mut out)?;
    if !out.is_finite() {
        return Err(Error::NonFinite("GMR gradient"));
    }
    Ok(out)
}

/// A labelled new-class sample.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub points: &'a [Point],
    pub label: usize,
}

/// A replayed old-class sample with the modes of its class (empty for stored
/// raw exemplars).
#[derive(Debug, Clone, Copy)]
pub struct ReplaySample<'a> {
    pub points: &'a [Point],
    pub label: usize,
    pub modes: &'a [Vec<Point>],
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub value: f64,
    pub d_params: ClassifierParams,
}

/// `sum_new (CE + kd_factor * KD) + sum_replay (FL + GMR)` and its parameter
/// gradient. Both are plain sums; callers divide by the batch size.
pub fn total_loss(
    params: &ClassifierParams,
    teacher: Option<&ClassifierParams>,
    batch: &[Sample<'_>],
    replay: &[ReplaySample<'_>],
    cfg: &LossConfig,
) -> Result<LossOutput> {
    let mut grads = params.zeros_like();
    let mut value = 0.0;

    for s in batch {
        let rec = forward(params, s.points)?;
        value += cross_entropy(&rec.probs, s.label)?;
        let mut up = cross_entropy_grad(&rec.probs, s.label)?;
        if let Some(t) = teacher {
            if cfg.kd_factor != 0.0 {
                let old = t.classes();
                let trec = forward(t, s.points)?;
                value += cfg.kd_factor * kd_loss(&rec.logits, &trec.logits, old, cfg.temperature)?;
                let kg = kd_grad(&rec.logits, &trec.logits, old, cfg.temperature)?;
                up.iter_mut()
                    .zip(&kg)
                    .for_each(|(u, k)| *u += cfg.kd_factor * k);
            }
        }
        backward_into(params, s.points, &rec, &up, &mut grads, None);
    }

    for r in replay {
        check_modes(r.points, r.modes)?;
        let rec = forward(params, r.points)?;
        value += focal_loss(&rec.probs, r.label, cfg.gamma, cfg.alpha_t)?;
        let up = focal_grad(&rec.probs, r.label, cfg.gamma, cfg.alpha_t)?;
        if cfg.lambda == 0.0 || r.modes.is_empty() {
            backward_into(params, r.points, &rec, &up, &mut grads, None);
            continue;
        }
        let mut d_input = vec![[0.0; 3]; r.points.len()];
        backward_into(params, r.points, &rec, &up, &mut grads, Some(&mut d_input));
        let directional: Vec<f64> = r.modes.iter().map(|v| frobenius(&d_input, v)).collect();
        value += cfg.lambda * directional.iter().map(|g| g * g).sum::<f64>();
        gmr_grad_into(
            params,
            r.points,
            r.modes,
            &directional,
            r.label,
            cfg,
            &mut grads,
        )?;
    }

    if !value.is_finite() || !grads.is_finite() {
        return Err(Error::NonFinite("total loss"));
    }
    Ok(LossOutput {
        value,
        d_params: grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    #[test]
    #[allow(clippy::approx_constant)]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        let u = [0.25; 4];
        for label in 0..4 {
            assert!((cross_entropy(&u, label).unwrap() - 4f64.ln()).abs() < 1e-15);
        }
        assert!((cross_entropy(&[0.5, 0.5], 0).unwrap() - 0.693147).abs() < 1e-6);
        assert!(matches!(
            cross_entropy(&u, 4),
            Err(Error::BadLabel {
                label: 4,
                classes: 4
            })
        ));
    }

    #[test]
    fn cross_entropy_is_floored() {
        let v = cross_entropy(&[1.0, 0.0], 1).unwrap();
        assert!((v - (-(1e-12f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn focal_values() {
        let probs = [0.1, 0.6, 0.3];
        for label in 0..3 {
            let ce = cross_entropy(&probs, label).unwrap();
            let fl = focal_loss(&probs, label, 0.0, 0.7).unwrap();
            assert!((fl - 0.7 * ce).abs() <= 1e-12);
        }
        for gamma in [0.0, 0.5, 2.0, 5.0] {
            assert_eq!(focal_loss(&[0.0, 1.0], 1, gamma, 1.0).unwrap(), 0.0);
        }
        let v = focal_loss(&[0.5, 0.5], 0, 2.0, 0.25).unwrap();
        assert!((v - 0.25 * 0.25 * 2f64.ln()).abs() < 1e-15);
        assert!((v - 0.0433217).abs() < 1e-7);
    }

    #[test]
    fn kd_values() {
        let t = [0.3, -1.2, 2.0, 0.5];
        assert_eq!(kd_loss(&t, &t, 3, 2.0).unwrap(), 0.0);
        // two softmaxes by hand: q_t = (e^2, 1)/(e^2+1), q_s = (1, e^2)/(e^2+1)
        // KL = q_t0 * 2 + q_t1 * (-2) = 2 tanh(1)
        let v = kd_loss(&[0.0, 2.0], &[2.0, 0.0], 2, 1.0).unwrap();
        let e2 = 2f64.exp();
        let qt0 = e2 / (e2 + 1.0);
        let hand = qt0 * (qt0 / (1.0 - qt0)).ln() + (1.0 - qt0) * ((1.0 - qt0) / qt0).ln();
        assert!((v - hand).abs() < 1e-14);
        assert!((v - 1.5231883).abs() < 1e-7);
        assert!(kd_loss(&[1.0], &[1.0, 2.0], 2, 1.0).is_err());
    }

    #[test]
    fn kd_is_non_negative() {
        let mut seed = 7u64;
        let mut next = || {
            seed = crate::rng::derive(seed, "kd", 0);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        for _ in 0..200 {
            let s: Vec<f64> = (0..5).map(|_| next()).collect();
            let t: Vec<f64> = (0..4).map(|_| next()).collect();
            assert!(kd_loss(&s, &t, 4, 2.0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn logit_gradients_match_finite_differences() {
        let z = [0.4, -1.1, 2.3, 0.0];
        let teacher = [1.0, 0.2, -0.3];
        let h = 1e-6;
        type Loss = Box<dyn Fn(&[f64]) -> f64>;
        type Grad = Box<dyn Fn(&[f64]) -> Vec<f64>>;
        let cases: Vec<(Loss, Grad)> = vec![
            (
                Box::new(|z| cross_entropy(&network::softmax(z), 2).unwrap()),
                Box::new(|z| cross_entropy_grad(&network::softmax(z), 2).unwrap()),
            ),
            (
                Box::new(|z| focal_loss(&network::softmax(z), 1, 2.0, 0.5).unwrap()),
                Box::new(|z| focal_grad(&network::softmax(z), 1, 2.0, 0.5).unwrap()),
            ),
            (
                Box::new(|z| focal_loss(&network::softmax(z), 3, 0.5, 1.0).unwrap()),
                Box::new(|z| focal_grad(&network::softmax(z), 3, 0.5, 1.0).unwrap()),
            ),
            (
                Box::new(move |z| kd_loss(z, &teacher, 3, 2.0).unwrap()),
                Box::new(move |z| kd_grad(z, &teacher, 3, 2.0).unwrap()),
            ),
        ];
        for (f, g) in cases {
            let analytic = g(&z);
            for j in 0..z.len() {
                let mut zp = z;
                let mut zm = z;
                zp[j] += h;
                zm[j] -= h;
                let fd = (f(&zp) - f(&zm)) / (2.0 * h);
                assert!(
                    (fd - analytic[j]).abs() < 1e-7,
                    "j={j}: fd {fd} vs {}",
                    analytic[j]
                );
            }
        }
    }

    fn orthonormal_modes() -> (Vec<Point>, Vec<Vec<Point>>) {
        let v1 = vec![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let v2 = vec![[0.0, 0.0, 0.0], [0.0, 0.6, 0.8]];
        let orth = vec![[0.0, 1.0, -2.0], [5.0, 0.0, 0.0]];
        (orth, vec![v1, v2])
    }

    #[test]
    fn gmr_penalty_identities() {
        let (orth, modes) = orthonormal_modes();
        assert_eq!(gmr_penalty(&orth, &modes, 0.3).unwrap(), 0.0);
        assert!((gmr_penalty(&modes[0], &modes, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let d = vec![[0.2, -1.0, 0.7], [0.3, 0.4, -0.9]];
        // explicit double loop
        let mut brute = 0.0;
        for v in &modes {
            let mut ip = 0.0;
            for r in 0..2 {
                for c in 0..3 {
                    ip += d[r][c] * v[r][c];
                }
            }
            brute += ip * ip;
        }
        let p = gmr_penalty(&d, &modes, 0.01).unwrap();
        assert!((p - 0.01 * brute).abs() < 1e-15);
        assert_eq!(gmr_penalty(&d, &modes, 0.02).unwrap(), 2.0 * p);
        assert!(gmr_penalty(&d, &[vec![[0.0; 3]; 3]], 1.0).is_err());
    }

    #[test]
    fn gmr_gradient_vanishes_without_lambda() {
        let params = init_params(4, 5, 3, 3, 8);
        let (_, modes) = orthonormal_modes();
        let pts = vec![[0.1, 0.5, -0.3], [0.7, -0.2, 0.4]];
        let cfg = LossConfig {
            lambda: 0.0,
            ..LossConfig::default()
        };
        let g = gmr_param_gradient(&params, &pts, &modes, 1, &cfg).unwrap();
        assert!(g.to_flat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn session_one_value_is_cross_entropy_only() {
        let params = init_params(4, 5, 3, 2, 8);
        let a = vec![[0.1, 0.5, -0.3], [0.7, -0.2, 0.4]];
        let b = vec![[-0.4, 0.1, 0.2], [0.0, 0.9, -0.1]];
        let batch = [
            Sample {
                points: &a,
                label: 0,
            },
            Sample {
                points: &b,
                label: 1,
            },
        ];
        let out = total_loss(&params, None, &batch, &[], &LossConfig::default()).unwrap();
        let ce: f64 = batch
            .iter()
            .map(|s| cross_entropy(&forward(&params, s.points).unwrap().probs, s.label).unwrap())
            .sum();
        assert_eq!(out.value, ce);
    }
}
