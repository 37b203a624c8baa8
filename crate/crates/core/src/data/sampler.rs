use super::{crop_patches, stack_clips, PatchSpec, VideoClip};
use crate::error::{Error, Result};
use crate::param::RngSeed;
use crate::tensor::{Real, Tensor};
use crate::training::BatchSource;

use rand::Rng;

/// Random aligned crops from a pool of HR clips. The crops for step `s`
/// come from `seed.step_rng(s)` alone.
#[derive(Clone, Debug)]
pub struct PatchSampler {
    pub clips: Vec<VideoClip>,
    pub seed: RngSeed,
    pub batch: usize,
    pub patch: PatchSpec,
}

impl PatchSampler {
    pub fn new(clips: Vec<VideoClip>, seed: RngSeed, batch: usize, patch: PatchSpec) -> Result<Self> {
        if clips.is_empty() || batch == 0 {
            return Err(Error::Contract("sampler needs at least one clip and batch >= 1".into()));
        }
        if let Some(c) = clips.iter().find(|c| c.channels != clips[0].channels) {
            return Err(Error::Contract(format!(
                "clips mix {} and {} channels",
                clips[0].channels, c.channels
            )));
        }
        Ok(PatchSampler {
            clips,
            seed,
            batch,
            patch,
        })
    }

    /// The `(lr, hr)` clip pairs of one step.
    pub fn sample(&self, step: u64) -> Result<Vec<(VideoClip, VideoClip)>> {
        let mut rng = self.seed.step_rng(step);
        (0..self.batch)
            .map(|_| {
                let clip = &self.clips[rng.random_range(0..self.clips.len())];
                crop_patches(clip, self.patch, &mut rng)
            })
            .collect()
    }
}

impl<T: Real> BatchSource<T> for PatchSampler {
    fn batch(&self, step: u64) -> Result<(Tensor<T>, Tensor<T>)> {
        let (lr, hr): (Vec<_>, Vec<_>) = self.sample(step)?.into_iter().unzip();
        Ok((stack_clips(&lr)?, stack_clips(&hr)?))
    }
}

/// The same batch at every step.
#[derive(Clone, Debug)]
pub struct FixedBatch<T: Real = f32> {
    pub lr: Tensor<T>,
    pub hr: Tensor<T>,
}

impl<T: Real> FixedBatch<T> {
    pub fn from_clips(pairs: &[(VideoClip, VideoClip)]) -> Result<Self> {
        let (lr, hr): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        Ok(FixedBatch {
            lr: stack_clips(&lr)?,
            hr: stack_clips(&hr)?,
        })
    }
}

impl<T: Real> BatchSource<T> for FixedBatch<T> {
    fn batch(&self, _step: u64) -> Result<(Tensor<T>, Tensor<T>)> {
        Ok((self.lr.clone(), self.hr.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::SrMode;

    #[test]
    fn step_batches_are_reproducible_and_vary() {
        let clip = VideoClip::from_fn(9, 1, 16, 16, |t, _, y, x| ((t * 31 + y * 7 + x * 3) % 17) as f64 / 16.0).unwrap();
        let spec = PatchSpec {
            frames: 3,
            height: 8,
            width: 8,
            mode: SrMode::Stsr,
        };
        let s = PatchSampler::new(vec![clip], RngSeed(5), 2, spec).unwrap();
        let a: (Tensor<f32>, Tensor<f32>) = s.batch(3).unwrap();
        let b: (Tensor<f32>, Tensor<f32>) = s.batch(3).unwrap();
        assert_eq!(a.1.data(), b.1.data());
        assert_eq!(a.0.shape().n, 2);
        let differs = (0..20).any(|k| BatchSource::<f32>::batch(&s, k).unwrap().1.data() != a.1.data());
        assert!(differs);
    }
}
