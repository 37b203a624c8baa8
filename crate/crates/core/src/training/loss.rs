//! Reconstruction and least-squares adversarial losses.

use crate::error::Result;
use crate::tensor::{mse, Real, Tensor};

/// Mean squared error between prediction and ground truth.
pub fn sr_loss<T: Real>(i_sr: &Tensor<T>, i_hr: &Tensor<T>) -> Result<Tensor<T>> {
    mse(i_sr, i_hr)
}

/// `mean((D(x) − b)²) + mean((D(G(z)) − a)²)`.
pub fn lsgan_d_loss<T: Real>(score_real: &Tensor<T>, score_fake: &Tensor<T>, a: f64, b: f64) -> Result<Tensor<T>> {
    let real = score_real.add_scalar(T::of(-b)).square().mean();
    let fake = score_fake.add_scalar(T::of(-a)).square().mean();
    crate::tensor::add(&real, &fake)
}

/// `mean((D(G(z)) − b)²)`.
pub fn lsgan_g_loss<T: Real>(score_fake: &Tensor<T>, b: f64) -> Tensor<T> {
    score_fake.add_scalar(T::of(-b)).square().mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape5;

    fn s(v: &[f64]) -> Tensor<f64> {
        Tensor::new(Shape5::matrix(v.len(), 1), v.to_vec()).unwrap()
    }

    #[test]
    fn values_at_the_labels() {
        assert_eq!(lsgan_d_loss(&s(&[1.0]), &s(&[0.0]), 0.0, 1.0).unwrap().item(), 0.0);
        assert_eq!(lsgan_d_loss(&s(&[0.5]), &s(&[0.5]), 0.0, 1.0).unwrap().item(), 0.5);
        assert_eq!(lsgan_g_loss(&s(&[1.0]), 1.0).item(), 0.0);
        assert_eq!(lsgan_g_loss(&s(&[0.0]), 1.0).item(), 1.0);
        assert_eq!(lsgan_g_loss(&s(&[0.5]), 1.0).item(), 0.25);
    }

    #[test]
    fn sr_loss_constant_difference() {
        let a = Tensor::<f64>::full(Shape5::of(1, 1, 2, 3, 3), 3.0).unwrap();
        let b = Tensor::<f64>::full(Shape5::of(1, 1, 2, 3, 3), 1.0).unwrap();
        assert_eq!(sr_loss(&a, &b).unwrap().item(), 4.0);
        assert_eq!(sr_loss(&a, &a).unwrap().item(), 0.0);
        let c = Tensor::<f64>::zeros(Shape5::of(1, 1, 2, 3, 4)).unwrap();
        assert!(sr_loss(&a, &c).is_err());
    }
}
