use crate::error::{Error, Result};
use crate::param::Params;
use crate::tensor::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per parameter, in visiting order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T: Real> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new<P: Params<T> + ?Sized>(params: &P) -> Self {
        let mut m = Vec::new();
        params.visit(&mut |p| m.push(vec![T::zero(); p.value.len()]));
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

/// One bias-corrected Adam step using the gradients accumulated on `params`.
///
/// Parameters without a gradient are treated as having a zero gradient.
/// Any non-finite gradient rejects the whole step before anything changes.
pub fn adam_update<T: Real, P: Params<T> + ?Sized>(params: &mut P, state: &mut AdamState<T>, hp: AdamHyper) -> Result<()> {
    let mut grads = Vec::new();
    let mut bad = None;
    params.visit(&mut |p| {
        let g = p.value.grad().unwrap_or_else(|| vec![T::zero(); p.value.len()]);
        if bad.is_none() && g.iter().any(|v| !v.is_finite()) {
            bad = Some(p.name.clone());
        }
        grads.push(g);
    });
    if let Some(name) = bad {
        return Err(Error::NonFinite(format!("gradient of {name}")));
    }
    if grads.len() != state.m.len() || grads.iter().zip(&state.m).any(|(g, m)| g.len() != m.len()) {
        return Err(Error::Contract("optimizer state does not match parameters".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(hp.beta1), T::of(hp.beta2));
    let (one, eps, lr) = (T::one(), T::of(hp.eps), T::of(hp.lr));
    let c1 = one - T::of(hp.beta1.powi(t));
    let c2 = one - T::of(hp.beta2.powi(t));
    let mut idx = 0;
    let mut result = Ok(());
    params.visit_mut(&mut |p| {
        let (g, m, v) = (&grads[idx], &mut state.m[idx], &mut state.v[idx]);
        idx += 1;
        let mut data = p.value.to_vec();
        for i in 0..data.len() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            data[i] = data[i] - lr * mhat / (vhat.sqrt() + eps);
        }
        if let Err(e) = p.set(data) {
            result = Err(e);
        }
    });
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamTensor;
    use crate::tensor::{mul, Shape5, Tensor};

    struct One(ParamTensor<f64>);

    impl Params<f64> for One {
        fn visit(&self, f: &mut dyn FnMut(&ParamTensor<f64>)) {
            f(&self.0)
        }

        fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<f64>)) {
            f(&mut self.0)
        }
    }

    fn seed_grad(p: &ParamTensor<f64>, g: &[f64]) {
        let c = Tensor::new(p.shape(), g.to_vec()).unwrap();
        mul(&p.value, &c).unwrap().sum().backward().unwrap();
    }

    fn one(v: Vec<f64>) -> One {
        One(ParamTensor::new("p", Shape5::vector(v.len()), v).unwrap())
    }

    #[test]
    fn zero_grad_leaves_params_and_counts_step() {
        let mut p = one(vec![1.0, -2.0]);
        let mut st = AdamState::new(&p);
        adam_update(&mut p, &mut st, AdamHyper::default()).unwrap();
        assert_eq!(p.0.value.data(), &[1.0, -2.0]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = one(vec![0.0; 4]);
        let g = [3.0, -0.5, 0.1, -40.0];
        seed_grad(&p.0, &g);
        let mut st = AdamState::new(&p);
        let hp = AdamHyper::default();
        adam_update(&mut p, &mut st, hp).unwrap();
        for (x, gv) in p.0.value.data().iter().zip(g) {
            assert!((x + hp.lr * gv.signum()).abs() <= 1e-6 * hp.lr, "{x}");
        }
    }

    #[test]
    fn non_finite_grad_rejected_without_change() {
        let mut p = one(vec![1.0, 2.0]);
        seed_grad(&p.0, &[f64::NAN, 1.0]);
        let mut st = AdamState::new(&p);
        assert!(matches!(adam_update(&mut p, &mut st, AdamHyper::default()), Err(Error::NonFinite(_))));
        assert_eq!(p.0.value.data(), &[1.0, 2.0]);
        assert_eq!(st.t, 0);
    }
}
