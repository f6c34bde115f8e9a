//! Actor and critic architectures.
//!
//! Actor: `state → FC → ReLU → FC → ReLU → FC → tanh → (a1, a2)`.
//!
//! Critic: the state passes through `FC → ReLU` giving `L_s`; `L_s` and the
//! action enter two transformation layers of equal width whose outputs are
//! summed with the action layer's bias only,
//! `L_c = L_s·W_τ1 + a·W_τ2 + b_τ2`, then `ReLU → FC → Q`.

use ndarray::{Array1, Array2};
use rand::Rng;

use super::nn::{relu, relu_backward, tanh, tanh_backward, Dense, Params};

pub const STATE_DIM: usize = 23;
pub const ACTION_DIM: usize = 2;

/// Largest magnitude an emitted action component may take, keeping actions
/// strictly inside `(-1, 1)` even where `tanh` rounds to ±1.
pub const ACTION_LIMIT: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ActorNet {
    pub fc1: Dense,
    pub fc2: Dense,
    pub out: Dense,
}

/// Intermediate activations kept for the backward pass.
pub struct ActorCache {
    input: Array2<f64>,
    pre1: Array2<f64>,
    h1: Array2<f64>,
    pre2: Array2<f64>,
    h2: Array2<f64>,
    pub output: Array2<f64>,
}

impl ActorNet {
    pub fn new<R: Rng + ?Sized>(hidden: (usize, usize), rng: &mut R) -> Self {
        Self::with_dims(STATE_DIM, hidden, ACTION_DIM, rng)
    }

    pub fn with_dims<R: Rng + ?Sized>(
        input: usize,
        hidden: (usize, usize),
        output: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            fc1: Dense::init(input, hidden.0, rng),
            fc2: Dense::init(hidden.0, hidden.1, rng),
            out: Dense::init(hidden.1, output, rng),
        }
    }

    pub fn hidden(&self) -> (usize, usize) {
        (self.fc1.outputs(), self.fc2.outputs())
    }

    pub fn forward(&self, states: &Array2<f64>) -> Array2<f64> {
        let h1 = relu(&self.fc1.forward(states));
        let h2 = relu(&self.fc2.forward(&h1));
        tanh(&self.out.forward(&h2)).mapv(|a| a.clamp(-ACTION_LIMIT, ACTION_LIMIT))
    }

    pub fn forward_cached(&self, states: &Array2<f64>) -> ActorCache {
        let pre1 = self.fc1.forward(states);
        let h1 = relu(&pre1);
        let pre2 = self.fc2.forward(&h1);
        let h2 = relu(&pre2);
        let output = tanh(&self.out.forward(&h2));
        ActorCache {
            input: states.clone(),
            pre1,
            h1,
            pre2,
            h2,
            output,
        }
    }

    /// Parameter gradients for upstream gradient `d_out` on the tanh output.
    pub fn backward(&self, cache: &ActorCache, d_out: &Array2<f64>) -> ActorNet {
        let mut grad = self.zeros_like();
        let d3 = tanh_backward(&cache.output, d_out);
        self.out.accumulate(&cache.h2, &d3, &mut grad.out);
        let d2 = relu_backward(&cache.pre2, &self.out.input_grad(&d3));
        self.fc2.accumulate(&cache.h1, &d2, &mut grad.fc2);
        let d1 = relu_backward(&cache.pre1, &self.fc2.input_grad(&d2));
        self.fc1.accumulate(&cache.input, &d1, &mut grad.fc1);
        grad
    }

    pub fn act(&self, state: &[f64]) -> [f64; 2] {
        let x = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row vector");
        let y = self.forward(&x);
        [y[[0, 0]], y[[0, 1]]]
    }
}

impl Params for ActorNet {
    fn tensors(&self) -> Vec<&[f64]> {
        [self.fc1.tensors(), self.fc2.tensors(), self.out.tensors()].concat()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(6);
        v.extend(self.fc1.tensors_mut());
        v.extend(self.fc2.tensors_mut());
        v.extend(self.out.tensors_mut());
        v
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        [self.fc1.shapes(), self.fc2.shapes(), self.out.shapes()].concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticNet {
    /// state → `L_s`
    pub state_fc: Dense,
    /// `W_τ1`, no bias
    pub tfc_state: Array2<f64>,
    /// `W_τ2` and `b_τ2`
    pub tfc_action: Dense,
    pub head: Dense,
}

pub struct CriticCache {
    states: Array2<f64>,
    actions: Array2<f64>,
    pre_s: Array2<f64>,
    ls: Array2<f64>,
    pre_c: Array2<f64>,
    lc: Array2<f64>,
    pub q: Array2<f64>,
}

impl CriticNet {
    pub fn new<R: Rng + ?Sized>(hidden: (usize, usize), rng: &mut R) -> Self {
        Self::with_dims(STATE_DIM, ACTION_DIM, hidden, rng)
    }

    pub fn with_dims<R: Rng + ?Sized>(
        state: usize,
        action: usize,
        hidden: (usize, usize),
        rng: &mut R,
    ) -> Self {
        let state_fc = Dense::init(state, hidden.0, rng);
        let tfc_state = Dense::init(hidden.0, hidden.1, rng).weight;
        let tfc_action = Dense::init(action, hidden.1, rng);
        let head = Dense::init(hidden.1, 1, rng);
        Self {
            state_fc,
            tfc_state,
            tfc_action,
            head,
        }
    }

    pub fn zeros(state: usize, action: usize, hidden: (usize, usize)) -> Self {
        Self {
            state_fc: Dense::zeros(state, hidden.0),
            tfc_state: Array2::zeros((hidden.0, hidden.1)),
            tfc_action: Dense::zeros(action, hidden.1),
            head: Dense::zeros(hidden.1, 1),
        }
    }

    pub fn hidden(&self) -> (usize, usize) {
        (self.state_fc.outputs(), self.tfc_state.ncols())
    }

    /// Pre-activation of the combined layer, `L_s·W_τ1 + a·W_τ2 + b_τ2`.
    pub fn combine(&self, ls: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
        ls.dot(&self.tfc_state) + self.tfc_action.forward(actions)
    }

    pub fn forward(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Array1<f64> {
        let ls = relu(&self.state_fc.forward(states));
        let lc = relu(&self.combine(&ls, actions));
        self.head.forward(&lc).column(0).to_owned()
    }

    pub fn forward_cached(&self, states: &Array2<f64>, actions: &Array2<f64>) -> CriticCache {
        let pre_s = self.state_fc.forward(states);
        let ls = relu(&pre_s);
        let pre_c = self.combine(&ls, actions);
        let lc = relu(&pre_c);
        let q = self.head.forward(&lc);
        CriticCache {
            states: states.clone(),
            actions: actions.clone(),
            pre_s,
            ls,
            pre_c,
            lc,
            q,
        }
    }

    fn combined_grad(&self, cache: &CriticCache, dq: &Array2<f64>) -> Array2<f64> {
        relu_backward(&cache.pre_c, &self.head.input_grad(dq))
    }

    /// Parameter gradients for upstream gradient `dq` (`batch × 1`).
    pub fn backward(&self, cache: &CriticCache, dq: &Array2<f64>) -> CriticNet {
        let mut grad = self.zeros_like();
        self.head.accumulate(&cache.lc, dq, &mut grad.head);
        let dc = self.combined_grad(cache, dq);
        grad.tfc_state += &cache.ls.t().dot(&dc);
        self.tfc_action.accumulate(&cache.actions, &dc, &mut grad.tfc_action);
        let ds = relu_backward(&cache.pre_s, &dc.dot(&self.tfc_state.t()));
        self.state_fc.accumulate(&cache.states, &ds, &mut grad.state_fc);
        grad
    }

    /// Gradient of the output with respect to the action input.
    pub fn action_grad(&self, cache: &CriticCache, dq: &Array2<f64>) -> Array2<f64> {
        self.tfc_action.input_grad(&self.combined_grad(cache, dq))
    }
}

impl Params for CriticNet {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.state_fc.tensors().to_vec();
        v.push(self.tfc_state.as_slice().expect("standard layout"));
        v.extend(self.tfc_action.tensors());
        v.extend(self.head.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(7);
        v.extend(self.state_fc.tensors_mut());
        v.push(self.tfc_state.as_slice_mut().expect("standard layout"));
        v.extend(self.tfc_action.tensors_mut());
        v.extend(self.head.tensors_mut());
        v
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        let mut v = self.state_fc.shapes().to_vec();
        v.push(self.tfc_state.dim());
        v.extend(self.tfc_action.shapes());
        v.extend(self.head.shapes());
        v
    }
}
