//! Parameterized layers shared by the generator and discriminator.

use crate::error::Result;
use crate::param::{Init, ParamTensor, Params};
use crate::tensor::{
    batch_norm, conv2d, conv3d, conv_transpose3d, fully_connected, prelu, BnMode, ConvSpec, Real, RunningStats, Shape5,
    Tensor,
};

#[derive(Clone, Debug)]
pub struct Conv3d<T: Real> {
    pub weight: ParamTensor<T>,
    pub bias: ParamTensor<T>,
    pub spec: ConvSpec,
}

impl<T: Real> Conv3d<T> {
    pub fn new(init: &mut Init, name: &str, cin: usize, cout: usize, k: [usize; 3], spec: ConvSpec) -> Result<Self> {
        Ok(Conv3d {
            weight: init.he(format!("{name}.weight"), Shape5::of(cout, cin, k[0], k[1], k[2]), cin * k.iter().product::<usize>())?,
            bias: init.constant(format!("{name}.bias"), Shape5::vector(cout), 0.0)?,
            spec,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        conv3d(x, &self.weight.value, Some(&self.bias.value), self.spec)
    }
}

#[derive(Clone, Debug)]
pub struct ConvTranspose3d<T: Real> {
    /// `Cin×Cout×kd×kh×kw`.
    pub weight: ParamTensor<T>,
    pub bias: ParamTensor<T>,
    pub spec: ConvSpec,
}

impl<T: Real> ConvTranspose3d<T> {
    pub fn new(init: &mut Init, name: &str, cin: usize, cout: usize, k: [usize; 3], spec: ConvSpec) -> Result<Self> {
        // each output voxel sees roughly Cin·|k|/|stride| taps
        let taps = cin * k.iter().product::<usize>() / spec.stride.iter().product::<usize>();
        Ok(ConvTranspose3d {
            weight: init.he(format!("{name}.weight"), Shape5::of(cin, cout, k[0], k[1], k[2]), taps)?,
            bias: init.constant(format!("{name}.bias"), Shape5::vector(cout), 0.0)?,
            spec,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        conv_transpose3d(x, &self.weight.value, Some(&self.bias.value), self.spec)
    }
}

/// 2D convolution over `N×C×1×H×W` tensors.
#[derive(Clone, Debug)]
pub struct Conv2d<T: Real> {
    pub weight: ParamTensor<T>,
    pub bias: ParamTensor<T>,
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

impl<T: Real> Conv2d<T> {
    pub fn new(init: &mut Init, name: &str, cin: usize, cout: usize, k: usize, stride: usize, padding: usize) -> Result<Self> {
        Ok(Conv2d {
            weight: init.he(format!("{name}.weight"), Shape5::of(cout, cin, 1, k, k), cin * k * k)?,
            bias: init.constant(format!("{name}.bias"), Shape5::vector(cout), 0.0)?,
            stride: [stride; 2],
            padding: [padding; 2],
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        conv2d(x, &self.weight.value, Some(&self.bias.value), self.stride, self.padding)
    }
}

/// PReLU with one learnable slope.
#[derive(Clone, Debug)]
pub struct PRelu<T: Real> {
    pub alpha: ParamTensor<T>,
}

impl<T: Real> PRelu<T> {
    pub fn new(init: &mut Init, name: &str, alpha: f64) -> Result<Self> {
        Ok(PRelu {
            alpha: init.constant(format!("{name}.alpha"), Shape5::scalar(), alpha)?,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        prelu(x, &self.alpha.value)
    }
}

#[derive(Clone, Debug)]
pub struct BatchNorm<T: Real> {
    pub gamma: ParamTensor<T>,
    pub beta: ParamTensor<T>,
    pub running: RunningStats<T>,
    name: String,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(init: &mut Init, name: &str, channels: usize) -> Result<Self> {
        Ok(BatchNorm {
            gamma: init.constant(format!("{name}.gamma"), Shape5::vector(channels), 1.0)?,
            beta: init.constant(format!("{name}.beta"), Shape5::vector(channels), 0.0)?,
            running: RunningStats::new(channels),
            name: name.to_string(),
        })
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: BnMode) -> Result<Tensor<T>> {
        batch_norm(x, &self.gamma.value, &self.beta.value, &mut self.running, mode)
    }
}

#[derive(Clone, Debug)]
pub struct Linear<T: Real> {
    /// `M×K`.
    pub weight: ParamTensor<T>,
    pub bias: ParamTensor<T>,
}

impl<T: Real> Linear<T> {
    pub fn new(init: &mut Init, name: &str, inputs: usize, outputs: usize) -> Result<Self> {
        Ok(Linear {
            weight: init.he(format!("{name}.weight"), Shape5::matrix(outputs, inputs), inputs)?,
            bias: init.constant(format!("{name}.bias"), Shape5::vector(outputs), 0.0)?,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        fully_connected(x, &self.weight.value, &self.bias.value)
    }
}

macro_rules! weight_bias_params {
    ($($ty:ident),*) => {$(
        impl<T: Real> Params<T> for $ty<T> {
            fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
                f(&self.weight);
                f(&self.bias);
            }

            fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
                f(&mut self.weight);
                f(&mut self.bias);
            }
        }
    )*};
}

weight_bias_params!(Conv3d, ConvTranspose3d, Conv2d, Linear);

impl<T: Real> Params<T> for PRelu<T> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
        f(&self.alpha);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
        f(&mut self.alpha);
    }
}

impl<T: Real> Params<T> for BatchNorm<T> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
        f(&self.gamma);
        f(&self.beta);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&str, &[T])) {
        f(&format!("{}.running_mean", self.name), &self.running.mean);
        f(&format!("{}.running_var", self.name), &self.running.var);
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&str, &mut Vec<T>)) {
        f(&format!("{}.running_mean", self.name), &mut self.running.mean);
        f(&format!("{}.running_var", self.name), &mut self.running.var);
    }
}
