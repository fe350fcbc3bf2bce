//! Multilayer perceptron regressor: ReLU hidden layers, linear output,
//! squared loss with an L2 penalty, trained by Adam on shuffled mini-batches.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use core::ops::{Add, AddAssign, Div, Mul, Sub, SubAssign};

use crate::linalg::{gemm, GemmScalar, MatRef, Matrix};
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_in x fan_out`, row-major.
    pub w: Matrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MlpParams {
    pub alpha: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams { alpha: 1e-4, learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, epochs: 200, batch_size: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Glorot-uniform initialization of weights and biases.
    pub fn init(n_inputs: usize, hidden: &[usize], seed: u64) -> Mlp {
        let mut rng = rng_from(seed, &[0]);
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
                let mut draw = || rng.random_range(-bound..bound);
                let weights: Vec<f64> = (0..fan_in * fan_out).map(|_| draw()).collect();
                let b = (0..fan_out).map(|_| draw()).collect();
                Layer { w: Matrix::from_vec(fan_in, fan_out, weights).expect("shape"), b }
            })
            .collect();
        Mlp { layers }
    }

    /// Trains in single precision; the fitted weights are widened back to `f64`.
    pub fn fit(x: &Matrix, y: &[f64], hidden: &[usize], params: &MlpParams, seed: u64) -> Mlp {
        let mut net: Net<f32> = Net::from_mlp(&Mlp::init(x.cols(), hidden, seed));
        let (n, d) = (x.rows(), x.cols());
        let xs: Vec<f32> = x.as_slice().iter().map(|&v| v as f32).collect();
        let ys: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let batch = params.batch_size.min(n).max(1);
        let mut adam = Adam::new(&net);
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle = rng_from(seed, &[1]);
        let mut ws = Workspace::default();
        let mut xb: Vec<f32> = Vec::with_capacity(batch * d);
        let mut yb: Vec<f32> = Vec::with_capacity(batch);
        let alpha = params.alpha as f32;
        for _ in 0..params.epochs {
            order.shuffle(&mut shuffle);
            for chunk in order.chunks(batch) {
                xb.clear();
                yb.clear();
                for &i in chunk {
                    xb.extend_from_slice(&xs[i * d..(i + 1) * d]);
                    yb.push(ys[i]);
                }
                let (_, grads) = net.loss_grad(&xb, &yb, alpha, &mut ws);
                adam.step(&mut net, &grads, params);
            }
        }
        net.to_mlp()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let net: Net<f64> = Net::from_mlp(self);
        let mut ws = Workspace::default();
        net.forward(x.as_slice(), x.rows(), &mut ws);
        ws.acts.pop().expect("output layer")
    }

    /// Mini-batch objective `mean((y - f)^2)/2 + alpha/(2m) * sum ||W||^2` and its gradient.
    pub fn loss_grad(&self, x: &Matrix, y: &[f64], alpha: f64) -> (f64, Vec<Layer>) {
        let net: Net<f64> = Net::from_mlp(self);
        let (loss, g) = net.loss_grad(x.as_slice(), y, alpha, &mut Workspace::default());
        (loss, Net { layers: g }.to_mlp().layers)
    }

    /// All weights then biases, layer by layer.
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.as_slice().iter().chain(&l.b).copied()).collect()
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let mut it = v.iter().copied();
        for l in &mut self.layers {
            for w in l.w.as_mut_slice() {
                *w = it.next().expect("length");
            }
            for b in &mut l.b {
                *b = it.next().expect("length");
            }
        }
    }
}

/// Flattens gradients in the same order as [`Mlp::flat`].
pub fn flat_grad(g: &[Layer]) -> Vec<f64> {
    g.iter().flat_map(|l| l.w.as_slice().iter().chain(&l.b).copied()).collect()
}

trait Real:
    GemmScalar
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
{
    const ZERO: Self;
    fn of(v: f64) -> Self;
    fn wide(self) -> f64;
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    const ZERO: f64 = 0.0;
    fn of(v: f64) -> f64 {
        v
    }
    fn wide(self) -> f64 {
        self
    }
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
}

impl Real for f32 {
    const ZERO: f32 = 0.0;
    fn of(v: f64) -> f32 {
        v as f32
    }
    fn wide(self) -> f64 {
        self as f64
    }
    fn sqrt(self) -> f32 {
        libm::sqrtf(self)
    }
}

struct RawLayer<T> {
    fan_in: usize,
    fan_out: usize,
    w: Vec<T>,
    b: Vec<T>,
}

struct Net<T> {
    layers: Vec<RawLayer<T>>,
}

struct Workspace<T> {
    acts: Vec<Vec<T>>,
}

impl<T> Default for Workspace<T> {
    fn default() -> Self {
        Workspace { acts: Vec::new() }
    }
}

impl<T: Real> Net<T> {
    fn from_mlp(m: &Mlp) -> Net<T> {
        let layers = m
            .layers
            .iter()
            .map(|l| RawLayer {
                fan_in: l.w.rows(),
                fan_out: l.w.cols(),
                w: l.w.as_slice().iter().map(|&v| T::of(v)).collect(),
                b: l.b.iter().map(|&v| T::of(v)).collect(),
            })
            .collect();
        Net { layers }
    }

    fn to_mlp(&self) -> Mlp {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                w: Matrix::from_vec(l.fan_in, l.fan_out, l.w.iter().map(|v| v.wide()).collect()).expect("shape"),
                b: l.b.iter().map(|v| v.wide()).collect(),
            })
            .collect();
        Mlp { layers }
    }

    /// Leaves the input and every layer's activation in `ws.acts`.
    fn forward(&self, x: &[T], m: usize, ws: &mut Workspace<T>) {
        ws.acts.clear();
        ws.acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let (fan_in, fan_out) = (layer.fan_in, layer.fan_out);
            let mut z = Vec::with_capacity(m * fan_out);
            for _ in 0..m {
                z.extend_from_slice(&layer.b);
            }
            let a = ws.acts.last().expect("input pushed");
            gemm(m, fan_in, fan_out, T::of(1.0), MatRef::row_major(a, fan_in), MatRef::row_major(&layer.w, fan_out), T::of(1.0), &mut z, fan_out);
            if li != last {
                z.iter_mut().for_each(|v| {
                    if *v < T::ZERO {
                        *v = T::ZERO;
                    }
                });
            }
            ws.acts.push(z);
        }
    }

    fn loss_grad(&self, x: &[T], y: &[T], alpha: T, ws: &mut Workspace<T>) -> (f64, Vec<RawLayer<T>>) {
        let m = y.len();
        let mf = T::of(m as f64);
        self.forward(x, m, ws);
        let out = ws.acts.last().expect("output layer");
        let mut sq = 0.0;
        let mut delta: Vec<T> = out
            .iter()
            .zip(y)
            .map(|(&f, &t)| {
                let r = f - t;
                sq += r.wide() * r.wide();
                r / mf
            })
            .collect();
        let penalty: f64 = self.layers.iter().map(|l| l.w.iter().map(|w| w.wide() * w.wide()).sum::<f64>()).sum();
        let loss = 0.5 * sq / m as f64 + 0.5 * alpha.wide() * penalty / m as f64;

        let mut grads: Vec<RawLayer<T>> = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let (fan_in, fan_out) = (layer.fan_in, layer.fan_out);
            let a = &ws.acts[li];
            let mut gw: Vec<T> = layer.w.iter().map(|&w| alpha * w / mf).collect();
            gemm(fan_in, m, fan_out, T::of(1.0), MatRef::transposed(a, fan_in), MatRef::row_major(&delta, fan_out), T::of(1.0), &mut gw, fan_out);
            let mut gb = vec![T::ZERO; fan_out];
            for r in delta.chunks(fan_out) {
                for (g, &d) in gb.iter_mut().zip(r) {
                    *g += d;
                }
            }
            if li > 0 {
                let mut prev = vec![T::ZERO; m * fan_in];
                gemm(m, fan_out, fan_in, T::of(1.0), MatRef::row_major(&delta, fan_out), MatRef::transposed(&layer.w, fan_out), T::ZERO, &mut prev, fan_in);
                for (p, &act) in prev.iter_mut().zip(a) {
                    if !(act > T::ZERO) {
                        *p = T::ZERO;
                    }
                }
                delta = prev;
            }
            grads.push(RawLayer { fan_in, fan_out, w: gw, b: gb });
        }
        grads.reverse();
        (loss, grads)
    }
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    fn new(net: &Net<T>) -> Adam<T> {
        let n = net.layers.iter().map(|l| l.w.len() + l.b.len()).sum();
        Adam { m: vec![T::ZERO; n], v: vec![T::ZERO; n], t: 0 }
    }

    fn step(&mut self, net: &mut Net<T>, grads: &[RawLayer<T>], p: &MlpParams) {
        self.t += 1;
        let lr = T::of(p.learning_rate * libm::sqrt(1.0 - libm::pow(p.beta2, self.t as f64)) / (1.0 - libm::pow(p.beta1, self.t as f64)));
        let (b1, b2, eps) = (T::of(p.beta1), T::of(p.beta2), T::of(p.eps));
        let (c1, c2) = (T::of(1.0 - p.beta1), T::of(1.0 - p.beta2));
        let mut k = 0;
        for (layer, g) in net.layers.iter_mut().zip(grads) {
            for (w, gs) in [(&mut layer.w, &g.w), (&mut layer.b, &g.b)] {
                let len = w.len();
                let ms = &mut self.m[k..k + len];
                let vs = &mut self.v[k..k + len];
                for (((w, &gi), m), v) in w.iter_mut().zip(gs.iter()).zip(ms.iter_mut()).zip(vs.iter_mut()) {
                    *m = b1 * *m + c1 * gi;
                    *v = b2 * *v + c2 * gi * gi;
                    *w -= lr * *m / (v.sqrt() + eps);
                }
                k += len;
            }
        }
    }
}
