//! Named trainable parameters and seeded initialization.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{Real, Shape5, Tensor};

/// 64-bit seed from which every random stream of a run is derived.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent generator for one purpose (`stream`) of this seed.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Generator for the data of training step `step`; disjoint from every
    /// [`stream`] id.
    pub fn step_rng(self, step: u64) -> ChaCha8Rng {
        self.rng(stream::PER_STEP | step)
    }
}

/// Stream ids handed to [`RngSeed::rng`].
pub mod stream {
    pub const GENERATOR_INIT: u64 = 1;
    pub const DISCRIMINATOR_INIT: u64 = 2;
    pub const DATA: u64 = 3;
    pub const SYNTH: u64 = 4;
    /// High bit marks per-step streams.
    pub const PER_STEP: u64 = 1 << 63;
}

/// A named leaf tensor that requires grad.
#[derive(Clone, Debug)]
pub struct ParamTensor<T: Real = f32> {
    pub name: String,
    pub value: Tensor<T>,
}

impl<T: Real> ParamTensor<T> {
    pub fn new(name: impl Into<String>, shape: Shape5, data: Vec<T>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Contract("parameter name must be nonempty".into()));
        }
        Ok(ParamTensor {
            name,
            value: Tensor::leaf(shape, data, true)?,
        })
    }

    pub fn shape(&self) -> Shape5 {
        self.value.shape()
    }

    /// Replaces the value with a fresh leaf; the old graph and grad are dropped.
    pub fn set(&mut self, data: Vec<T>) -> Result<()> {
        self.value = Tensor::leaf(self.value.shape(), data, true)?;
        Ok(())
    }
}

/// A parameter collection: ordered named tensors plus non-trainable buffers.
pub trait Params<T: Real> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>));

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>));

    /// Non-trainable state (batch-norm running statistics).
    fn visit_buffers(&self, _f: &mut dyn FnMut(&str, &[T])) {}

    fn visit_buffers_mut(&mut self, _f: &mut dyn FnMut(&str, &mut Vec<T>)) {}

    fn values(&self) -> Vec<Tensor<T>> {
        let mut out = Vec::new();
        self.visit(&mut |p| out.push(p.value.clone()));
        out
    }

    fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |p| out.push(p.name.clone()));
        out
    }

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |p| n += p.value.len());
        n
    }

    /// Substitutes every value in visiting order. Values must match shapes
    /// and need not be leaves.
    fn load_values(&mut self, values: &[Tensor<T>]) -> Result<()> {
        let mut it = values.iter();
        let mut err = None;
        let mut count = 0;
        self.visit_mut(&mut |p| {
            count += 1;
            match it.next() {
                Some(v) if v.shape() == p.value.shape() => p.value = v.clone(),
                Some(v) if err.is_none() => {
                    err = Some(Error::Contract(format!(
                        "{}: expected shape {}, got {}",
                        p.name,
                        p.value.shape(),
                        v.shape()
                    )))
                }
                _ => {}
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if count != values.len() {
            return Err(Error::Contract(format!("expected {count} parameter values, got {}", values.len())));
        }
        Ok(())
    }

    /// Checks that names are nonempty and unique and values require grad.
    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut err = None;
        self.visit(&mut |p| {
            if err.is_some() {
                return;
            }
            if p.name.is_empty() || !seen.insert(p.name.clone()) {
                err = Some(Error::DuplicateParam(p.name.clone()));
            } else if !p.value.requires_grad() {
                err = Some(Error::Contract(format!("{} does not require grad", p.name)));
            } else if !p.value.all_finite() {
                err = Some(Error::NonFinite(p.name.clone()));
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn zero_grads(&self) {
        self.visit(&mut |p| p.value.zero_grad());
    }

    /// Euclidean norm of all accumulated gradients.
    fn grad_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit(&mut |p| {
            if let Some(g) = p.value.grad() {
                s += g.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>();
            }
        });
        s.sqrt()
    }
}

/// Seeded parameter factory.
pub struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    pub fn new(seed: RngSeed, stream: u64) -> Self {
        Init { rng: seed.rng(stream) }
    }

    /// He-normal: `N(0, 2/fan_in)`. Draws in double precision so `f32` and
    /// `f64` networks built from one seed agree up to rounding.
    pub fn he<T: Real>(&mut self, name: impl Into<String>, shape: Shape5, fan_in: usize) -> Result<ParamTensor<T>> {
        let std = (2.0 / fan_in.max(1) as f64).sqrt();
        let data = (0..shape.numel())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                T::of(z * std)
            })
            .collect();
        ParamTensor::new(name, shape, data)
    }

    pub fn constant<T: Real>(&mut self, name: impl Into<String>, shape: Shape5, value: f64) -> Result<ParamTensor<T>> {
        ParamTensor::new(name, shape, vec![T::of(value); shape.numel()])
    }
}
