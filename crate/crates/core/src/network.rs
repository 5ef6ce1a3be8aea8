//! Mini point network: a shared per-point MLP (3 -> h1 -> h2, ReLU), max
//! pooling over points, and a two-layer head (h2 -> h3 -> C).
//!
//! Backpropagation is written out by hand for this fixed architecture and
//! returns gradients for every parameter and for the input points. ReLU has
//! derivative 0 at 0 and max-pool ties go to the lowest point index, so
//! gradients are deterministic.

use std::fs;
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::io::{ByteReader, ByteWriter};
use crate::rng;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"MIRN";
pub const CHECKPOINT_VERSION: u32 = 1;

pub const DEFAULT_H1: usize = 32;
pub const DEFAULT_H2: usize = 64;
pub const DEFAULT_H3: usize = 32;

/// Fully connected layer, `w` is `outputs x inputs` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            w: vec![0.0; inputs * outputs],
            b: vec![0.0; outputs],
        }
    }

    fn glorot(inputs: usize, outputs: usize, rng: &mut rng::Rng) -> Self {
        let s = glorot_bound(inputs, outputs);
        let w = (0..inputs * outputs)
            .map(|_| uniform_open(rng, s))
            .collect();
        Self {
            inputs,
            outputs,
            w,
            b: vec![0.0; outputs],
        }
    }

    #[inline]
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, bias)) in out
            .iter_mut()
            .zip(self.w.chunks_exact(self.inputs).zip(&self.b))
        {
            let mut acc = *bias;
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            *o = acc;
        }
    }

    /// `out += W^T g`
    #[inline]
    fn apply_transpose(&self, g: &[f64], out: &mut [f64]) {
        for (row, gi) in self.w.chunks_exact(self.inputs).zip(g) {
            if *gi == 0.0 {
                continue;
            }
            for (o, wi) in out.iter_mut().zip(row) {
                *o += wi * gi;
            }
        }
    }

    /// `dW += g x^T`, `db += g`
    #[inline]
    fn accumulate(&mut self, g: &[f64], x: &[f64]) {
        for ((row, gi), bi) in self.w.chunks_exact_mut(self.inputs).zip(g).zip(&mut self.b) {
            if *gi == 0.0 {
                continue;
            }
            *bi += gi;
            for (w, xi) in row.iter_mut().zip(x) {
                *w += gi * xi;
            }
        }
    }
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn uniform_open(rng: &mut rng::Rng, s: f64) -> f64 {
    loop {
        let v = rng.random_range(-s..s);
        if v != -s {
            return v;
        }
    }
}

/// Weights and biases of the classifier. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub l1: Dense,
    pub l2: Dense,
    pub l3: Dense,
    pub head: Dense,
}

impl ClassifierParams {
    pub fn h1(&self) -> usize {
        self.l1.outputs
    }
    pub fn h2(&self) -> usize {
        self.l2.outputs
    }
    pub fn h3(&self) -> usize {
        self.l3.outputs
    }
    pub fn classes(&self) -> usize {
        self.head.outputs
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            l1: Dense::zeros(self.l1.inputs, self.l1.outputs),
            l2: Dense::zeros(self.l2.inputs, self.l2.outputs),
            l3: Dense::zeros(self.l3.inputs, self.l3.outputs),
            head: Dense::zeros(self.head.inputs, self.head.outputs),
        }
    }

    pub fn tensors(&self) -> [&Vec<f64>; 8] {
        [
            &self.l1.w,
            &self.l1.b,
            &self.l2.w,
            &self.l2.b,
            &self.l3.w,
            &self.l3.b,
            &self.head.w,
            &self.head.b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.l1.w,
            &mut self.l1.b,
            &mut self.l2.w,
            &mut self.l2.b,
            &mut self.l3.w,
            &mut self.l3.b,
            &mut self.head.w,
            &mut self.head.b,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v = *it.next().expect("flat vector too short");
            }
        }
    }

    /// `self += scale * other`, tensor by tensor in a fixed order.
    pub fn add_scaled(&mut self, other: &ClassifierParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Row `row` of the class head, seeded independently of the head size.
fn head_row(h3: usize, seed: u64, row: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, "head", row as u64);
    let s = glorot_bound(h3, 1);
    (0..h3).map(|_| uniform_open(&mut rng, s)).collect()
}

/// Glorot-uniform weights with zero biases. Class-head rows are drawn per row
/// with `fan_out = 1`, so a head built at once equals one grown row by row.
pub fn init_params(h1: usize, h2: usize, h3: usize, classes: usize, seed: u64) -> ClassifierParams {
    let mut r1 = rng::stream(seed, "l1", 0);
    let mut r2 = rng::stream(seed, "l2", 0);
    let mut r3 = rng::stream(seed, "l3", 0);
    let mut head = Dense::zeros(h3, classes);
    head.w = (0..classes).flat_map(|r| head_row(h3, seed, r)).collect();
    ClassifierParams {
        l1: Dense::glorot(3, h1, &mut r1),
        l2: Dense::glorot(h1, h2, &mut r2),
        l3: Dense::glorot(h2, h3, &mut r3),
        head,
    }
}

/// Grow the class head to `new_classes` rows; existing rows and all other
/// layers are left untouched.
pub fn expand_head(
    params: &ClassifierParams,
    new_classes: usize,
    seed: u64,
) -> Result<ClassifierParams> {
    let current = params.classes();
    if new_classes < current {
        return Err(Error::ShrinkNotAllowed {
            current,
            requested: new_classes,
        });
    }
    let mut out = params.clone();
    let h3 = params.h3();
    for row in current..new_classes {
        out.head.w.extend(head_row(h3, seed, row));
        out.head.b.push(0.0);
    }
    out.head.outputs = new_classes;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ForwardRecord {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    act1: Vec<f64>,
    /// winning point per pooled channel
    argmax: Vec<usize>,
    pooled: Vec<f64>,
    pre3: Vec<f64>,
    act3: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub d_params: ClassifierParams,
    pub d_input: Vec<Point>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn forward(params: &ClassifierParams, points: &[Point]) -> Result<ForwardRecord> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network input"));
    }
    let (h1, h2) = (params.h1(), params.h2());
    let mut act1 = vec![0.0; points.len() * h1];
    let mut pooled = vec![f64::NEG_INFINITY; h2];
    let mut argmax = vec![0usize; h2];
    let mut pre2 = vec![0.0; h2];
    for (i, (p, a1)) in points.iter().zip(act1.chunks_exact_mut(h1)).enumerate() {
        params.l1.apply(p, a1);
        a1.iter_mut().for_each(|v| *v = v.max(0.0));
        params.l2.apply(a1, &mut pre2);
        for (c, v) in pre2.iter().enumerate() {
            let r = v.max(0.0);
            if r > pooled[c] {
                pooled[c] = r;
                argmax[c] = i;
            }
        }
    }

    let mut pre3 = vec![0.0; params.h3()];
    params.l3.apply(&pooled, &mut pre3);
    let act3: Vec<f64> = pre3.iter().map(|v| v.max(0.0)).collect();
    let mut logits = vec![0.0; params.classes()];
    params.head.apply(&act3, &mut logits);
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let probs = softmax(&logits);
    Ok(ForwardRecord {
        logits,
        probs,
        act1,
        argmax,
        pooled,
        pre3,
        act3,
    })
}

/// Reverse-mode gradient of `<logits, upstream>` with respect to every
/// parameter and every input coordinate.
pub fn backward(
    params: &ClassifierParams,
    points: &[Point],
    record: &ForwardRecord,
    upstream: &[f64],
) -> GradientBundle {
    let mut grads = params.zeros_like();
    let mut d_input = vec![[0.0; 3]; points.len()];
    backward_into(
        params,
        points,
        record,
        upstream,
        &mut grads,
        Some(&mut d_input),
    );
    GradientBundle {
        d_params: grads,
        d_input,
    }
}

/// Like [`backward`] but accumulates parameter gradients into `grads`.
pub fn backward_into(
    params: &ClassifierParams,
    points: &[Point],
    record: &ForwardRecord,
    upstream: &[f64],
    grads: &mut ClassifierParams,
    mut d_input: Option<&mut Vec<Point>>,
) {
    assert_eq!(
        upstream.len(),
        params.classes(),
        "upstream must cover every logit"
    );
    let (h1, h2, h3) = (params.h1(), params.h2(), params.h3());

    grads.head.accumulate(upstream, &record.act3);
    let mut d_pre3 = vec![0.0; h3];
    params.head.apply_transpose(upstream, &mut d_pre3);
    for (g, z) in d_pre3.iter_mut().zip(&record.pre3) {
        if *z <= 0.0 {
            *g = 0.0;
        }
    }
    grads.l3.accumulate(&d_pre3, &record.pooled);
    let mut d_pooled = vec![0.0; h2];
    params.l3.apply_transpose(&d_pre3, &mut d_pooled);

    // Route pooled gradients to the winning points; a channel whose max is 0
    // sits on the ReLU kink or below it and passes nothing back.
    let mut winners: Vec<usize> = (0..h2)
        .filter(|&c| record.pooled[c] > 0.0 && d_pooled[c] != 0.0)
        .map(|c| record.argmax[c])
        .collect();
    winners.sort_unstable();
    winners.dedup();

    let mut d_pre2 = vec![0.0; h2];
    let mut d_pre1 = vec![0.0; h1];
    for &p in &winners {
        for c in 0..h2 {
            d_pre2[c] = if record.argmax[c] == p && record.pooled[c] > 0.0 {
                d_pooled[c]
            } else {
                0.0
            };
        }
        let a1 = &record.act1[p * h1..(p + 1) * h1];
        grads.l2.accumulate(&d_pre2, a1);
        d_pre1.iter_mut().for_each(|v| *v = 0.0);
        params.l2.apply_transpose(&d_pre2, &mut d_pre1);
        for (g, a) in d_pre1.iter_mut().zip(a1) {
            if *a <= 0.0 {
                *g = 0.0;
            }
        }
        grads.l1.accumulate(&d_pre1, &points[p]);
        if let Some(d_in) = d_input.as_deref_mut() {
            let mut dx = [0.0; 3];
            params.l1.apply_transpose(&d_pre1, &mut dx);
            d_in[p] = dx;
        }
    }
}

pub fn write_checkpoint(params: &ClassifierParams) -> Vec<u8> {
    let mut w = ByteWriter::with_header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    for d in [params.h1(), params.h2(), params.h3(), params.classes()] {
        w.u32(d as u32);
    }
    for t in params.tensors() {
        w.f64s(t);
    }
    w.finish()
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ClassifierParams> {
    let mut r = ByteReader::with_header(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let h1 = r.u32()? as usize;
    let h2 = r.u32()? as usize;
    let h3 = r.u32()? as usize;
    let c = r.u32()? as usize;
    let mut params = ClassifierParams {
        l1: Dense::zeros(3, h1),
        l2: Dense::zeros(h1, h2),
        l3: Dense::zeros(h2, h3),
        head: Dense::zeros(h3, c),
    };
    r.expect_remaining(8 * params.num_params())?;
    for t in params.tensors_mut() {
        let len = t.len();
        *t = r.f64_vec(len)?;
    }
    r.finish()?;
    Ok(params)
}

pub fn save_checkpoint(params: &ClassifierParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny() -> ClassifierParams {
        // h1 = 2, h2 = 2, h3 = 2, C = 2
        ClassifierParams {
            l1: Dense {
                inputs: 3,
                outputs: 2,
                w: vec![1.0, 0.0, -1.0, 0.5, 1.0, 0.0],
                b: vec![0.0, 0.1],
            },
            l2: Dense {
                inputs: 2,
                outputs: 2,
                w: vec![1.0, 1.0, -1.0, 2.0],
                b: vec![0.0, -0.5],
            },
            l3: Dense {
                inputs: 2,
                outputs: 2,
                w: vec![1.0, -1.0, 0.5, 0.5],
                b: vec![0.2, 0.0],
            },
            head: Dense {
                inputs: 2,
                outputs: 2,
                w: vec![1.0, 2.0, -1.0, 1.0],
                b: vec![0.0, 0.3],
            },
        }
    }

    #[test]
    fn hand_traced_logits() {
        let pts = [[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]];
        let rec = forward(&tiny(), &pts).unwrap();
        // point 0: pre1 = (1, 0.5+2+0.1) = (1, 2.6) -> act (1, 2.6)
        //          pre2 = (3.6, -1+5.2-0.5) = (3.6, 3.7)
        // point 1: pre1 = (0+0+1, 0+1+0.1) = (1, 1.1)
        //          pre2 = (2.1, -1+2.2-0.5) = (2.1, 0.7)
        // pooled = (3.6, 3.7)
        // pre3 = (3.6-3.7+0.2, 1.8+1.85) = (0.1, 3.65)
        // logits = (0.1+7.3, -0.1+3.65+0.3) = (7.4, 3.85)
        assert!((rec.logits[0] - 7.4).abs() < 1e-12);
        assert!((rec.logits[1] - 3.85).abs() < 1e-12);
        let sum: f64 = rec.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_give_uniform_probs() {
        let mut p = init_params(4, 5, 3, 4, 1);
        p.scale(0.0);
        let rec = forward(&p, &[[0.3, 0.1, -0.2]]).unwrap();
        for q in rec.probs {
            assert_eq!(q, 0.25);
        }
    }

    #[test]
    fn permutation_leaves_logits_bitwise_equal() {
        let p = init_params(8, 16, 8, 5, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point> = (0..40)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let mut shuffled = pts.clone();
        shuffled.reverse();
        shuffled.rotate_left(7);
        let a = forward(&p, &pts).unwrap();
        let b = forward(&p, &shuffled).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_params(6, 7, 5, 3, 11);
        assert_eq!(a, init_params(6, 7, 5, 3, 11));
        assert_ne!(a, init_params(6, 7, 5, 3, 12));
        for layer in [&a.l1, &a.l2, &a.l3] {
            assert!(layer.b.iter().all(|b| *b == 0.0));
            let s = glorot_bound(layer.inputs, layer.outputs);
            assert!(layer.w.iter().all(|w| *w > -s && *w < s));
        }
        let s = glorot_bound(5, 1);
        assert!(a.head.w.iter().all(|w| *w > -s && *w < s));
        assert!(a.head.b.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn expand_preserves_old_logits() {
        let p = init_params(6, 7, 5, 3, 4);
        let pts = [[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0], [0.9, -0.1, 0.2]];
        let before = forward(&p, &pts).unwrap();
        let q = expand_head(&p, 5, 4).unwrap();
        let after = forward(&q, &pts).unwrap();
        assert_eq!(&after.logits[..3], &before.logits[..]);
        assert_eq!(q.l1, p.l1);
        assert_eq!(q.l2, p.l2);
        assert_eq!(q.l3, p.l3);
    }

    #[test]
    fn expand_to_same_size_is_identity_and_shrink_fails() {
        let p = init_params(3, 3, 3, 3, 0);
        assert_eq!(expand_head(&p, 3, 0).unwrap(), p);
        assert!(matches!(
            expand_head(&p, 2, 0),
            Err(Error::ShrinkNotAllowed {
                current: 3,
                requested: 2
            })
        ));
    }

    #[test]
    fn staged_expansion_equals_single_expansion() {
        let p = init_params(4, 4, 4, 2, 21);
        let staged = expand_head(&expand_head(&p, 4, 21).unwrap(), 6, 21).unwrap();
        let single = expand_head(&p, 6, 21).unwrap();
        assert_eq!(staged, single);
        // and a head built at full size
        assert_eq!(init_params(4, 4, 4, 6, 21), single);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = init_params(4, 6, 3, 3, 2);
        let pts = [[0.3, -0.2, 0.5], [0.1, 0.9, -0.4]];
        let rec = forward(&p, &pts).unwrap();
        let g = backward(&p, &pts, &rec, &[0.0; 3]);
        assert!(g.d_params.to_flat().iter().all(|v| *v == 0.0));
        assert!(g.d_input.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = init_params(4, 6, 3, 3, 2);
        let bytes = write_checkpoint(&p);
        assert_eq!(&bytes[..4], b"MIRN");
        let back = read_checkpoint(&bytes).unwrap();
        assert_eq!(back, p);
        assert!(read_checkpoint(&bytes[..bytes.len() - 1]).is_err());
    }
}
