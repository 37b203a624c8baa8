use std::fmt;

use crate::error::{Error, Result};

/// Names of the five tensor axes, in storage order.
pub const AXIS_NAMES: [&str; 5] = ["n", "c", "d", "h", "w"];

/// Extent of a dense 5-axis tensor: batch, channels, depth (time), height, width.
///
/// 4-axis image batches use `d = 1`; vectors and matrices put their extents
/// in the leading axes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape5 {
    pub n: usize,
    pub c: usize,
    pub d: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape5 {
    pub fn new(n: usize, c: usize, d: usize, h: usize, w: usize) -> Result<Self> {
        Self::from_dims([n, c, d, h, w])
    }

    pub fn from_dims(dims: [usize; 5]) -> Result<Self> {
        let s = Shape5 {
            n: dims[0],
            c: dims[1],
            d: dims[2],
            h: dims[3],
            w: dims[4],
        };
        s.validate()?;
        Ok(s)
    }

    /// Unchecked constructor; tensors validate their shape when built.
    pub const fn of(n: usize, c: usize, d: usize, h: usize, w: usize) -> Self {
        Shape5 { n, c, d, h, w }
    }

    pub const fn scalar() -> Self {
        Shape5::of(1, 1, 1, 1, 1)
    }

    /// A vector of `len` entries laid out along the leading axis.
    pub const fn vector(len: usize) -> Self {
        Shape5::of(len, 1, 1, 1, 1)
    }

    pub const fn matrix(rows: usize, cols: usize) -> Self {
        Shape5::of(rows, cols, 1, 1, 1)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if dims.iter().any(|&x| x == 0) || self.checked_numel().is_none() {
            return Err(Error::InvalidShape(dims));
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 5] {
        [self.n, self.c, self.d, self.h, self.w]
    }

    fn checked_numel(&self) -> Option<usize> {
        self.dims()
            .iter()
            .try_fold(1usize, |acc, &x| acc.checked_mul(x))
            .filter(|&n| n <= isize::MAX as usize)
    }

    pub fn numel(&self) -> usize {
        self.n * self.c * self.d * self.h * self.w
    }

    /// Number of elements in one (d, h, w) volume.
    pub fn volume(&self) -> usize {
        self.d * self.h * self.w
    }

    /// Row-major strides, `w` fastest.
    pub fn strides(&self) -> [usize; 5] {
        let [_, c, d, h, w] = self.dims();
        [c * d * h * w, d * h * w, h * w, w, 1]
    }

    pub fn with_axis(&self, axis: usize, len: usize) -> Shape5 {
        let mut dims = self.dims();
        dims[axis] = len;
        Shape5::of(dims[0], dims[1], dims[2], dims[3], dims[4])
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }
}

impl fmt::Debug for Shape5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}×{}×{}×{}×{}", self.n, self.c, self.d, self.h, self.w)
    }
}

impl fmt::Display for Shape5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_axes() {
        assert!(Shape5::new(1, 0, 1, 1, 1).is_err());
        assert!(Shape5::new(1, 1, 1, 1, 1).is_ok());
    }

    #[test]
    fn rejects_overflowing_element_count() {
        let big = usize::MAX / 2;
        assert!(matches!(
            Shape5::new(big, big, 1, 1, 1),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn strides_are_row_major() {
        let s = Shape5::new(2, 3, 4, 5, 6).unwrap();
        assert_eq!(s.strides(), [360, 120, 30, 6, 1]);
        assert_eq!(s.numel(), 720);
    }
}
