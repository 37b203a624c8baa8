use super::{record_branches, GradFn, Real, Tensor};
use crate::error::{Error, Result};

/// Logistic function, kept strictly inside (0, 1) even where the exact
/// value rounds to an endpoint.
fn sigmoid_scalar<T: Real>(x: T) -> T {
    let y = if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    };
    let below_one = T::one() - T::epsilon() / T::of(2.0);
    y.max(T::min_positive_value()).min(below_one)
}

struct Sigmoid;

impl<T: Real> GradFn<T> for Sigmoid {
    fn name(&self) -> &'static str {
        "sigmoid"
    }

    fn backward(&self, g: &[T], out: &[T], _p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.iter().zip(out).map(|(&g, &y)| g * y * (T::one() - y)).collect())]
    }
}

pub fn sigmoid<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let data = x.data().iter().map(|&v| sigmoid_scalar(v)).collect();
    Tensor::from_op(x.shape(), data, vec![x.clone()], Sigmoid)
}

/// Negative-side slope; the derivative at exactly zero is taken from the positive side.
fn rectify<T: Real>(x: T, slope: T) -> T {
    if x >= T::zero() {
        x
    } else {
        slope * x
    }
}

fn record_signs<T: Real>(x: &Tensor<T>) {
    record_branches(|| x.data().iter().map(|&v| (v >= T::zero()) as u64).collect());
}

struct LeakyRelu<T> {
    slope: T,
}

impl<T: Real> GradFn<T> for LeakyRelu<T> {
    fn name(&self) -> &'static str {
        "leaky_relu"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let gi = g
            .iter()
            .zip(p[0].data())
            .map(|(&g, &x)| if x >= T::zero() { g } else { g * self.slope })
            .collect();
        vec![Some(gi)]
    }
}

/// LeakyReLU with a fixed negative slope.
pub fn leaky_relu<T: Real>(x: &Tensor<T>, slope: T) -> Tensor<T> {
    record_signs(x);
    let data = x.data().iter().map(|&v| rectify(v, slope)).collect();
    Tensor::from_op(x.shape(), data, vec![x.clone()], LeakyRelu { slope })
}

struct Prelu;

impl<T: Real> GradFn<T> for Prelu {
    fn name(&self) -> &'static str {
        "prelu"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (x, alpha) = (&p[0], &p[1]);
        let a = alpha.data()[0];
        let gx = x.requires_grad().then(|| {
            g.iter()
                .zip(x.data())
                .map(|(&g, &x)| if x >= T::zero() { g } else { g * a })
                .collect()
        });
        let ga = alpha.requires_grad().then(|| {
            let s = g
                .iter()
                .zip(x.data())
                .filter(|(_, &x)| x < T::zero())
                .fold(T::zero(), |acc, (&g, &x)| acc + g * x);
            vec![s]
        });
        vec![gx, ga]
    }
}

/// PReLU with one learnable negative slope shared by the whole layer.
pub fn prelu<T: Real>(x: &Tensor<T>, alpha: &Tensor<T>) -> Result<Tensor<T>> {
    if alpha.len() != 1 {
        return Err(Error::Dimension {
            op: "prelu",
            axis: "n",
            expected: 1,
            got: alpha.len(),
        });
    }
    let a = alpha.data()[0];
    record_signs(x);
    let data = x.data().iter().map(|&v| rectify(v, a)).collect();
    Ok(Tensor::from_op(
        x.shape(),
        data,
        vec![x.clone(), alpha.clone()],
        Prelu,
    ))
}
