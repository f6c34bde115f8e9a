//! Minimal dense-network toolkit with hand-written backpropagation.
//!
//! Batches are row-major `Array2<f64>` with one sample per row. A layer's
//! gradient is stored in a value of the layer's own type, so optimizers and
//! target-network updates work uniformly over [`Params`].

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

/// Flat access to every parameter tensor of a network, in a fixed order.
pub trait Params: Clone {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Shapes as `(rows, cols)`; vectors are `(1, n)`.
    fn shapes(&self) -> Vec<(usize, usize)>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn copy_from(&mut self, src: &Self) {
        for (d, s) in self.tensors_mut().into_iter().zip(src.tensors()) {
            d.copy_from_slice(s);
        }
    }

    /// Polyak averaging: `self ← ρ·self + (1 − ρ)·src`.
    fn soft_update_from(&mut self, src: &Self, rho: f64) {
        for (d, s) in self.tensors_mut().into_iter().zip(src.tensors()) {
            for (x, &y) in d.iter_mut().zip(s) {
                *x = rho * *x + (1.0 - rho) * y;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs × outputs`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Weights and biases uniform in `±1/√inputs`.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut d = Self::zeros(inputs, outputs);
        d.weight
            .mapv_inplace(|_| bound * (2.0 * rng.random::<f64>() - 1.0));
        d.bias.mapv_inplace(|_| bound * (2.0 * rng.random::<f64>() - 1.0));
        d
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulates parameter gradients for upstream gradient `dy` into `grad`.
    pub fn accumulate(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Dense) {
        grad.weight += &x.t().dot(dy);
        grad.bias += &dy.sum_axis(Axis(0));
    }

    /// Gradient with respect to the layer input.
    pub fn input_grad(&self, dy: &Array2<f64>) -> Array2<f64> {
        dy.dot(&self.weight.t())
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [
            self.weight.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.weight.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn shapes(&self) -> [(usize, usize); 2] {
        [(self.inputs(), self.outputs()), (1, self.outputs())]
    }
}

impl Params for Dense {
    fn tensors(&self) -> Vec<&[f64]> {
        Dense::tensors(self).to_vec()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        Dense::tensors_mut(self).into_iter().collect()
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        Dense::shapes(self).to_vec()
    }
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// `dy ⊙ 1[pre > 0]`
pub fn relu_backward(pre: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut out = dy.clone();
    ndarray::Zip::from(&mut out).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    out
}

pub fn tanh(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(f64::tanh)
}

/// `dy ⊙ (1 − y²)` where `y = tanh(pre)`.
pub fn tanh_backward(y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut out = dy.clone();
    ndarray::Zip::from(&mut out)
        .and(y)
        .for_each(|g, &t| *g *= 1.0 - t * t);
    out
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<P: Params> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: P,
    v: P,
    t: i32,
}

impl<P: Params> Adam<P> {
    pub fn new(params: &P, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Descends along `grads`.
    pub fn step(&mut self, params: &mut P, grads: &P) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}
