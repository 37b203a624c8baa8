use super::{check_same_shape, GradFn, Real, Shape5, Tensor, AXIS_NAMES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum BinKind {
    Add,
    Sub,
    Mul,
}

impl BinKind {
    fn name(self) -> &'static str {
        match self {
            BinKind::Add => "add",
            BinKind::Sub => "sub",
            BinKind::Mul => "mul",
        }
    }
}

/// Output shape of a broadcast binary op: per axis the extents agree or one is 1.
fn broadcast_shape(op: &'static str, a: Shape5, b: Shape5) -> Result<Shape5> {
    let (da, db) = (a.dims(), b.dims());
    let mut out = [0; 5];
    for axis in 0..5 {
        out[axis] = match (da[axis], db[axis]) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            (x, y) => {
                return Err(Error::Dimension {
                    op,
                    axis: AXIS_NAMES[axis],
                    expected: x,
                    got: y,
                })
            }
        };
    }
    Shape5::from_dims(out)
}

fn broadcast_strides(s: Shape5, out: Shape5) -> [usize; 5] {
    let mut st = s.strides();
    let (ds, dout) = (s.dims(), out.dims());
    for axis in 0..5 {
        if ds[axis] == 1 && dout[axis] != 1 {
            st[axis] = 0;
        }
    }
    st
}

/// Visits every output position with the matching offsets into both operands.
fn walk(out: Shape5, sa: [usize; 5], sb: [usize; 5], mut f: impl FnMut(usize, usize, usize)) {
    let mut o = 0;
    for n in 0..out.n {
        for c in 0..out.c {
            for d in 0..out.d {
                for h in 0..out.h {
                    let ba = n * sa[0] + c * sa[1] + d * sa[2] + h * sa[3];
                    let bb = n * sb[0] + c * sb[1] + d * sb[2] + h * sb[3];
                    for w in 0..out.w {
                        f(o, ba + w * sa[4], bb + w * sb[4]);
                        o += 1;
                    }
                }
            }
        }
    }
}

struct Binary {
    kind: BinKind,
    out: Shape5,
}

impl<T: Real> GradFn<T> for Binary {
    fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn backward(&self, g: &[T], _out: &[T], parents: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (a, b) = (&parents[0], &parents[1]);
        let sa = broadcast_strides(a.shape(), self.out);
        let sb = broadcast_strides(b.shape(), self.out);
        let mut ga = a.requires_grad().then(|| vec![T::zero(); a.len()]);
        let mut gb = b.requires_grad().then(|| vec![T::zero(); b.len()]);
        let (ad, bd) = (a.data(), b.data());
        walk(self.out, sa, sb, |o, ia, ib| {
            let (da, db) = match self.kind {
                BinKind::Add => (g[o], g[o]),
                BinKind::Sub => (g[o], -g[o]),
                BinKind::Mul => (g[o] * bd[ib], g[o] * ad[ia]),
            };
            if let Some(ga) = ga.as_mut() {
                ga[ia] = ga[ia] + da;
            }
            if let Some(gb) = gb.as_mut() {
                gb[ib] = gb[ib] + db;
            }
        });
        vec![ga, gb]
    }
}

fn binary<T: Real>(kind: BinKind, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let out = broadcast_shape(kind.name(), a.shape(), b.shape())?;
    let f = |x: T, y: T| match kind {
        BinKind::Add => x + y,
        BinKind::Sub => x - y,
        BinKind::Mul => x * y,
    };
    let data = if a.shape() == b.shape() {
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
    } else {
        let mut data = vec![T::zero(); out.numel()];
        let (ad, bd) = (a.data(), b.data());
        walk(
            out,
            broadcast_strides(a.shape(), out),
            broadcast_strides(b.shape(), out),
            |o, ia, ib| data[o] = f(ad[ia], bd[ib]),
        );
        data
    };
    Ok(Tensor::from_op(out, data, vec![a.clone(), b.clone()], Binary { kind, out }))
}

/// Elementwise sum with size-1 broadcasting on either side.
pub fn add<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    binary(BinKind::Add, a, b)
}

pub fn sub<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    binary(BinKind::Sub, a, b)
}

/// Elementwise (Hadamard) product with size-1 broadcasting on either side.
pub fn mul<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    binary(BinKind::Mul, a, b)
}

struct Affine<T> {
    scale: T,
}

impl<T: Real> GradFn<T> for Affine<T> {
    fn name(&self) -> &'static str {
        "affine"
    }

    fn backward(&self, g: &[T], _out: &[T], _p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.iter().map(|&v| v * self.scale).collect())]
    }
}

pub(crate) fn scale<T: Real>(x: &Tensor<T>, s: T) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v * s).collect();
    Tensor::from_op(x.shape(), data, vec![x.clone()], Affine { scale: s })
}

pub(crate) fn add_scalar<T: Real>(x: &Tensor<T>, s: T) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v + s).collect();
    Tensor::from_op(x.shape(), data, vec![x.clone()], Affine { scale: T::one() })
}

struct Square;

impl<T: Real> GradFn<T> for Square {
    fn name(&self) -> &'static str {
        "square"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let two = T::of(2.0);
        vec![Some(g.iter().zip(p[0].data()).map(|(&g, &x)| two * x * g).collect())]
    }
}

pub(crate) fn square<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v * v).collect();
    Tensor::from_op(x.shape(), data, vec![x.clone()], Square)
}

struct SumAxes {
    axes: [bool; 5],
    mean: bool,
    count: usize,
}

impl<T: Real> GradFn<T> for SumAxes {
    fn name(&self) -> &'static str {
        if self.mean {
            "mean_axes"
        } else {
            "sum_axes"
        }
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let inp = p[0].shape();
        let out = reduced_shape(inp, self.axes);
        let so = broadcast_strides(out, inp);
        let k = if self.mean {
            T::one() / T::of(self.count as f64)
        } else {
            T::one()
        };
        let mut gi = vec![T::zero(); inp.numel()];
        walk(inp, inp.strides(), so, |i, _, io| gi[i] = g[io] * k);
        vec![Some(gi)]
    }
}

fn reduced_shape(s: Shape5, axes: [bool; 5]) -> Shape5 {
    let mut dims = s.dims();
    for axis in 0..5 {
        if axes[axis] {
            dims[axis] = 1;
        }
    }
    Shape5::of(dims[0], dims[1], dims[2], dims[3], dims[4])
}

pub(crate) fn sum_axes<T: Real>(x: &Tensor<T>, axes: [bool; 5], mean: bool) -> Tensor<T> {
    let inp = x.shape();
    let out = reduced_shape(inp, axes);
    let count = inp.numel() / out.numel();
    let mut data = vec![T::zero(); out.numel()];
    let so = broadcast_strides(out, inp);
    let xd = x.data();
    walk(inp, inp.strides(), so, |i, _, io| data[io] = data[io] + xd[i]);
    if mean {
        let k = T::of(count as f64);
        data.iter_mut().for_each(|v| *v = *v / k);
    }
    Tensor::from_op(out, data, vec![x.clone()], SumAxes { axes, mean, count })
}

pub(crate) fn sum<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    sum_axes(x, [true; 5], false)
}

pub(crate) fn mean<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    sum_axes(x, [true; 5], true)
}

struct Mse;

impl<T: Real> GradFn<T> for Mse {
    fn name(&self) -> &'static str {
        "mse"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (a, b) = (&p[0], &p[1]);
        let k = T::of(2.0) * g[0] / T::of(a.len() as f64);
        let diff: Vec<T> = a.data().iter().zip(b.data()).map(|(&x, &y)| (x - y) * k).collect();
        let gb = b.requires_grad().then(|| diff.iter().map(|&v| -v).collect());
        vec![a.requires_grad().then_some(diff), gb]
    }
}

/// Mean of squared differences over all elements; a scalar.
pub fn mse<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape("mse", a, b)?;
    let total = a
        .data()
        .iter()
        .zip(b.data())
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
    let v = total / T::of(a.len() as f64);
    Ok(Tensor::from_op(Shape5::scalar(), vec![v], vec![a.clone(), b.clone()], Mse))
}
