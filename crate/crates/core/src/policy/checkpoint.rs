//! Binary checkpoint format.
//!
//! ```text
//! magic      8 bytes   "GDAECKPT"
//! version    u32 LE    1
//! nets       u32 LE    number of networks (actor, critic1, critic2)
//! per network:
//!   kind     u8        0 = actor, 1 = critic
//!   tensors  u32 LE
//!   shapes   tensors × (rows u32 LE, cols u32 LE)
//! payload    f64 LE    every tensor of every network, in header order
//! ```
//!
//! Actor tensor order: `fc1.w, fc1.b, fc2.w, fc2.b, out.w, out.b`.
//! Critic tensor order: `state_fc.w, state_fc.b, W_τ1, W_τ2, b_τ2, head.w, head.b`.
//! Weights are row-major `inputs × outputs`.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::networks::{ActorNet, CriticNet};
use super::nn::{Dense, Params};
use crate::error::{Error, Result};

/// Kind tag, tensor shapes and tensor data of one network.
type NetEntry<'a> = (u8, Vec<(usize, usize)>, Vec<&'a [f64]>);

pub const MAGIC: &[u8; 8] = b"GDAECKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub actor: ActorNet,
    pub critics: Vec<CriticNet>,
}

impl Checkpoint {
    pub fn actor_only(actor: ActorNet) -> Self {
        Self {
            actor,
            critics: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut nets: Vec<NetEntry> =
            vec![(0, self.actor.shapes(), self.actor.tensors())];
        for c in &self.critics {
            nets.push((1, c.shapes(), c.tensors()));
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
        for (kind, shapes, _) in &nets {
            out.push(*kind);
            out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
            for &(r, c) in shapes {
                out.extend_from_slice(&(r as u32).to_le_bytes());
                out.extend_from_slice(&(c as u32).to_le_bytes());
            }
        }
        for (_, _, tensors) in &nets {
            for t in tensors {
                for v in *t {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let mut headers = Vec::with_capacity(n);
        for _ in 0..n {
            let kind = r.take(1)?[0];
            let count = r.u32()? as usize;
            let shapes = (0..count)
                .map(|_| Ok((r.u32()? as usize, r.u32()? as usize)))
                .collect::<Result<Vec<_>>>()?;
            headers.push((kind, shapes));
        }
        let mut actor = None;
        let mut critics = Vec::new();
        for (kind, shapes) in headers {
            let tensors = shapes
                .iter()
                .map(|&(rows, cols)| r.f64s(rows * cols).map(|v| (rows, cols, v)))
                .collect::<Result<Vec<_>>>()?;
            match kind {
                0 => actor = Some(build_actor(tensors)?),
                1 => critics.push(build_critic(tensors)?),
                k => return Err(Error::Checkpoint(format!("unknown network kind {k}"))),
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let actor = actor.ok_or_else(|| Error::Checkpoint("no actor network".into()))?;
        Ok(Self { actor, critics })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingCheckpoint(path.display().to_string()));
        }
        Self::from_bytes(&std::fs::read(path)?)
    }
}

type Tensor = (usize, usize, Vec<f64>);

fn matrix((r, c, v): Tensor) -> Result<Array2<f64>> {
    Array2::from_shape_vec((r, c), v).map_err(|e| Error::Checkpoint(e.to_string()))
}

fn vector((r, c, v): Tensor) -> Result<Array1<f64>> {
    if r != 1 {
        return Err(Error::Checkpoint(format!("expected a vector, got {r}×{c}")));
    }
    Ok(Array1::from(v))
}

fn dense(w: Tensor, b: Tensor) -> Result<Dense> {
    let d = Dense {
        weight: matrix(w)?,
        bias: vector(b)?,
    };
    if d.weight.ncols() != d.bias.len() {
        return Err(Error::Checkpoint("bias width mismatch".into()));
    }
    Ok(d)
}

fn build_actor(t: Vec<Tensor>) -> Result<ActorNet> {
    let [w1, b1, w2, b2, w3, b3]: [Tensor; 6] = t
        .try_into()
        .map_err(|_| Error::Checkpoint("actor needs 6 tensors".into()))?;
    let a = ActorNet {
        fc1: dense(w1, b1)?,
        fc2: dense(w2, b2)?,
        out: dense(w3, b3)?,
    };
    if a.fc1.outputs() != a.fc2.inputs() || a.fc2.outputs() != a.out.inputs() {
        return Err(Error::Checkpoint("actor layer shapes do not chain".into()));
    }
    Ok(a)
}

fn build_critic(t: Vec<Tensor>) -> Result<CriticNet> {
    let [ws, bs, wt1, wt2, bt2, wq, bq]: [Tensor; 7] = t
        .try_into()
        .map_err(|_| Error::Checkpoint("critic needs 7 tensors".into()))?;
    let c = CriticNet {
        state_fc: dense(ws, bs)?,
        tfc_state: matrix(wt1)?,
        tfc_action: dense(wt2, bt2)?,
        head: dense(wq, bq)?,
    };
    if c.state_fc.outputs() != c.tfc_state.nrows()
        || c.tfc_state.ncols() != c.tfc_action.outputs()
        || c.tfc_action.outputs() != c.head.inputs()
    {
        return Err(Error::Checkpoint("critic layer shapes do not chain".into()));
    }
    Ok(c)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Checkpoint {
            actor: ActorNet::new((5, 4), &mut rng),
            critics: vec![CriticNet::new((5, 4), &mut rng), CriticNet::new((5, 4), &mut rng)],
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(Checkpoint::from_bytes(&c.to_bytes()).unwrap(), c);
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..8], b"GDAECKPT");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
        assert_eq!(bytes[16], 0);
        assert_eq!(u32::from_le_bytes(bytes[17..21].try_into().unwrap()), 6);
        // first actor tensor is 23 × 5
        assert_eq!(u32::from_le_bytes(bytes[21..25].try_into().unwrap()), 23);
        assert_eq!(u32::from_le_bytes(bytes[25..29].try_into().unwrap()), 5);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(Checkpoint::from_bytes(&bytes).is_err());
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            Checkpoint::load("/nonexistent/x.ckpt"),
            Err(Error::MissingCheckpoint(_))
        ));
    }
}
