//! Generator: shallow 3D feature extraction, a chain of residual attention
//! blocks, and transposed-convolution reconstruction.

use std::fmt;
use std::str::FromStr;

use crate::attention::{csa_apply, CsaParams};
use crate::error::{Error, Result};
use crate::layers::{Conv3d, ConvTranspose3d, PRelu};
use crate::param::{stream, Init, ParamTensor, Params, RngSeed};
use crate::tensor::{add, ConvSpec, Real, Tensor};

/// Output geometry: space-time, spatial-only or temporal-only upscaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SrMode {
    #[default]
    Stsr,
    Ssr,
    Tsr,
}

impl SrMode {
    pub const ALL: [SrMode; 3] = [SrMode::Stsr, SrMode::Ssr, SrMode::Tsr];

    pub fn spatial_factor(self) -> usize {
        match self {
            SrMode::Stsr | SrMode::Ssr => 4,
            SrMode::Tsr => 1,
        }
    }

    pub fn upsamples_time(self) -> bool {
        self != SrMode::Ssr
    }

    /// Output frame count for `n` input frames.
    pub fn output_frames(self, n: usize) -> usize {
        if self.upsamples_time() {
            2 * n - 1
        } else {
            n
        }
    }

    /// Kernel, stride and padding of the two transposed-conv stages.
    pub fn stages(self) -> [([usize; 3], ConvSpec); 2] {
        match self {
            SrMode::Stsr => [
                ([3, 4, 4], ConvSpec::new([1, 2, 2], [1, 1, 1])),
                ([3, 4, 4], ConvSpec::new([2, 2, 2], [1, 1, 1])),
            ],
            SrMode::Ssr => [
                ([3, 4, 4], ConvSpec::new([1, 2, 2], [1, 1, 1])),
                ([3, 4, 4], ConvSpec::new([1, 2, 2], [1, 1, 1])),
            ],
            SrMode::Tsr => [
                ([3, 3, 3], ConvSpec::new([1, 1, 1], [1, 1, 1])),
                ([3, 3, 3], ConvSpec::new([2, 1, 1], [1, 1, 1])),
            ],
        }
    }

    /// Numeric code used in checkpoints.
    pub fn code(self) -> u64 {
        match self {
            SrMode::Stsr => 0,
            SrMode::Ssr => 1,
            SrMode::Tsr => 2,
        }
    }

    pub fn from_code(code: u64) -> Result<Self> {
        SrMode::ALL
            .into_iter()
            .find(|m| m.code() == code)
            .ok_or_else(|| Error::Malformed(format!("unknown mode code {code}")))
    }
}

impl fmt::Display for SrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SrMode::Stsr => "stsr",
            SrMode::Ssr => "ssr",
            SrMode::Tsr => "tsr",
        })
    }
}

impl FromStr for SrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stsr" => Ok(SrMode::Stsr),
            "ssr" => Ok(SrMode::Ssr),
            "tsr" => Ok(SrMode::Tsr),
            _ => Err(Error::Config(format!("unknown mode {s:?} (expected stsr, ssr or tsr)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub in_channels: usize,
    pub feat_channels: usize,
    pub num_rabs: usize,
    pub mode: SrMode,
    pub prelu_init_alpha: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            in_channels: 1,
            feat_channels: 16,
            num_rabs: 3,
            mode: SrMode::Stsr,
            prelu_init_alpha: 0.25,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.in_channels, 1 | 3) {
            return Err(Error::Config(format!("in_channels must be 1 or 3, got {}", self.in_channels)));
        }
        if self.feat_channels == 0 {
            return Err(Error::Config("feat_channels must be >= 1".into()));
        }
        if self.num_rabs == 0 {
            return Err(Error::Config("num_rabs must be >= 1".into()));
        }
        if !self.prelu_init_alpha.is_finite() {
            return Err(Error::Config("prelu_init_alpha must be finite".into()));
        }
        Ok(())
    }
}

/// One residual attention block: `F_n = CSA(PReLU(conv(F_{n−1}))) + F_{n−1}`.
#[derive(Clone, Debug)]
pub struct RabParams<T: Real> {
    pub conv: Conv3d<T>,
    pub act: PRelu<T>,
    pub csa: CsaParams<T>,
}

impl<T: Real> Params<T> for RabParams<T> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
        self.conv.visit(f);
        self.act.visit(f);
        self.csa.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
        self.conv.visit_mut(f);
        self.act.visit_mut(f);
        self.csa.visit_mut(f);
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorParams<T: Real> {
    pub config: GeneratorConfig,
    pub shallow: Conv3d<T>,
    pub shallow_act: PRelu<T>,
    pub rabs: Vec<RabParams<T>>,
    pub up1: ConvTranspose3d<T>,
    pub up1_act: PRelu<T>,
    pub up2: ConvTranspose3d<T>,
    pub up2_act: PRelu<T>,
    pub recon: Conv3d<T>,
}

impl<T: Real> GeneratorParams<T> {
    /// He-initialized weights, zero biases, PReLU slopes at
    /// `config.prelu_init_alpha`.
    pub fn init(config: &GeneratorConfig, seed: RngSeed) -> Result<Self> {
        config.validate()?;
        let mut init = Init::new(seed, stream::GENERATOR_INIT);
        let (cin, cf, alpha) = (config.in_channels, config.feat_channels, config.prelu_init_alpha);
        let k3 = [3, 3, 3];
        let shallow = Conv3d::new(&mut init, "gen.shallow", cin, cf, k3, ConvSpec::same3())?;
        let shallow_act = PRelu::new(&mut init, "gen.shallow_act", alpha)?;
        let rabs = (0..config.num_rabs)
            .map(|i| {
                let name = format!("gen.rab{i}");
                Ok(RabParams {
                    conv: Conv3d::new(&mut init, &format!("{name}.conv"), cf, cf, k3, ConvSpec::same3())?,
                    act: PRelu::new(&mut init, &format!("{name}.act"), alpha)?,
                    csa: CsaParams::new(&mut init, &format!("{name}.csa"), cf)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let [(k1, s1), (k2, s2)] = config.mode.stages();
        let up1 = ConvTranspose3d::new(&mut init, "gen.up1", cf, cf, k1, s1)?;
        let up1_act = PRelu::new(&mut init, "gen.up1_act", alpha)?;
        let up2 = ConvTranspose3d::new(&mut init, "gen.up2", cf, cf, k2, s2)?;
        let up2_act = PRelu::new(&mut init, "gen.up2_act", alpha)?;
        let recon = Conv3d::new(&mut init, "gen.recon", cf, cin, k3, ConvSpec::same3())?;
        let params = GeneratorParams {
            config: config.clone(),
            shallow,
            shallow_act,
            rabs,
            up1,
            up1_act,
            up2,
            up2_act,
            recon,
        };
        params.validate()?;
        Ok(params)
    }
}

impl<T: Real> Params<T> for GeneratorParams<T> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
        self.shallow.visit(f);
        self.shallow_act.visit(f);
        for rab in &self.rabs {
            rab.visit(f);
        }
        self.up1.visit(f);
        self.up1_act.visit(f);
        self.up2.visit(f);
        self.up2_act.visit(f);
        self.recon.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
        self.shallow.visit_mut(f);
        self.shallow_act.visit_mut(f);
        for rab in &mut self.rabs {
            rab.visit_mut(f);
        }
        self.up1.visit_mut(f);
        self.up1_act.visit_mut(f);
        self.up2.visit_mut(f);
        self.up2_act.visit_mut(f);
        self.recon.visit_mut(f);
    }
}

/// `PReLU(conv3d(v_in))`: `N×Cin×n×h×w → N×Cf×n×h×w`.
pub fn shallow_extract<T: Real>(v_in: &Tensor<T>, params: &GeneratorParams<T>) -> Result<Tensor<T>> {
    params.shallow_act.forward(&params.shallow.forward(v_in)?)
}

pub fn rab_forward<T: Real>(f_prev: &Tensor<T>, block: &RabParams<T>) -> Result<Tensor<T>> {
    let branch = csa_apply(&block.act.forward(&block.conv.forward(f_prev)?)?, &block.csa)?;
    add(&branch, f_prev)
}

/// Two transposed-conv stages (each followed by PReLU) and a linear 3×3×3
/// conv back to `Cin` channels.
pub fn reconstruct<T: Real>(features: &Tensor<T>, params: &GeneratorParams<T>) -> Result<Tensor<T>> {
    let mode = params.config.mode;
    if mode.upsamples_time() && features.shape().d < 2 {
        return Err(Error::geometry(
            "reconstruct",
            format!("{mode} needs at least 2 input frames, got {}", features.shape().d),
        ));
    }
    let x = params.up1_act.forward(&params.up1.forward(features)?)?;
    let x = params.up2_act.forward(&params.up2.forward(&x)?)?;
    params.recon.forward(&x)
}

pub fn generator_forward<T: Real>(v_in: &Tensor<T>, params: &GeneratorParams<T>) -> Result<Tensor<T>> {
    let mut f = shallow_extract(v_in, params)?;
    for rab in &params.rabs {
        f = rab_forward(&f, rab)?;
    }
    reconstruct(&f, params)
}
