use ndarray::{Array1, Array2};
use rand::Rng;

use super::networks::{ACTION_DIM, STATE_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: [f64; STATE_DIM],
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_state: [f64; STATE_DIM],
    /// Terminal (goal or collision); truncated steps are not done.
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub dones: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(ts: &[Transition]) -> Self {
        let n = ts.len();
        Self {
            states: Array2::from_shape_fn((n, STATE_DIM), |(i, j)| ts[i].state[j]),
            actions: Array2::from_shape_fn((n, ACTION_DIM), |(i, j)| ts[i].action[j]),
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_states: Array2::from_shape_fn((n, STATE_DIM), |(i, j)| ts[i].next_state[j]),
            dones: ts.iter().map(|t| f64::from(u8::from(t.done))).collect(),
        }
    }
}

/// Fixed-capacity FIFO of finalized transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: Vec::new(),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Transition>) {
        for t in ts {
            self.push(t);
        }
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        if self.items.len() < batch {
            return Err(Error::BufferUnderfull {
                have: self.items.len(),
                need: batch,
            });
        }
        let picked: Vec<Transition> = (0..batch)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect();
        Ok(Batch::from_transitions(&picked))
    }
}
