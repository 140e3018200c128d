//! Dense row-major, channel-last tensors of rank 2 `(H, W)` or rank 3 `(H, W, C)`.
//!
//! Tensors are immutable from the caller's point of view: every operation
//! returns a fresh tensor. The 1-D helpers [`reflect_pad_1d`] and
//! [`zero_pad_1d`] work on plain row vectors.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

use crate::error::{Error, Result};

/// Floating point element type. Implemented for `f32` (training) and `f64`
/// (gradient checks).
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to any float")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dimensions of a tensor, ordered height, width, channels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::InvalidShape { dims: dims.to_vec(), reason: "rank must be 2 or 3" });
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape { dims: dims.to_vec(), reason: "every dim must be >= 1" });
        }
        Ok(Shape { dims: dims.to_vec() })
    }

    pub fn d2(height: usize, width: usize) -> Result<Self> {
        Self::new(&[height, width])
    }

    pub fn d3(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(&[height, width, channels])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn height(&self) -> usize {
        self.dims[0]
    }

    pub fn width(&self) -> usize {
        self.dims[1]
    }

    /// Channel count; a rank-2 shape has one implicit channel.
    pub fn channels(&self) -> usize {
        self.dims.get(2).copied().unwrap_or(1)
    }

    pub fn numel(&self) -> usize {
        self.dims.iter().product()
    }

    /// Same rank, spatial dims grown by `2 * margin`.
    pub fn grown(&self, margin: usize) -> Shape {
        let mut dims = self.dims.clone();
        dims[0] += 2 * margin;
        dims[1] += 2 * margin;
        Shape { dims }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new_filled(shape: Shape, value: T) -> Self {
        let data = vec![value; shape.numel()];
        Tensor { shape, data }
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::new_filled(shape, T::zero())
    }

    /// Wraps a buffer; rejects a length mismatch or any non-finite element.
    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {} elements for shape {:?}",
                data.len(),
                shape.dims()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Tensor::from_vec"));
        }
        Ok(Tensor { shape, data })
    }

    /// Builds a 2-D tensor from equal-length rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let shape = Shape::d2(height, width)?;
        Self::from_vec(shape, rows.concat())
    }

    /// Skips validation; callers guarantee the length matches.
    pub(crate) fn from_raw(shape: Shape, data: Vec<T>) -> Self {
        debug_assert_eq!(shape.numel(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height()
    }

    pub fn width(&self) -> usize {
        self.shape.width()
    }

    pub fn channels(&self) -> usize {
        self.shape.channels()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, c: usize) -> usize {
        (i * self.width() + j) * self.channels() + c
    }

    /// Element at row `i`, column `j`, channel `c`. Panics when out of range.
    #[inline]
    pub fn at(&self, i: usize, j: usize, c: usize) -> T {
        assert!(i < self.height() && j < self.width() && c < self.channels());
        self.data[self.offset(i, j, c)]
    }

    fn require_2d(&self, op: &str) -> Result<()> {
        if self.shape.rank() != 2 {
            return Err(Error::ShapeMismatch(format!("{op} needs a 2-D tensor, got {:?}", self.shape.dims())));
        }
        Ok(())
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> Result<Vec<T>> {
        self.require_2d("row")?;
        if i >= self.height() {
            return Err(Error::IndexOutOfRange { index: i, len: self.height() });
        }
        let w = self.width();
        Ok(self.data[i * w..(i + 1) * w].to_vec())
    }

    /// Column `j` of a 2-D tensor, transposed into a row vector.
    pub fn col_t(&self, j: usize) -> Result<Vec<T>> {
        self.require_2d("col_t")?;
        if j >= self.width() {
            return Err(Error::IndexOutOfRange { index: j, len: self.width() });
        }
        Ok(self.data.iter().skip(j).step_by(self.width()).copied().collect())
    }

    /// Stacks `self` on top of `other`.
    pub fn vconcat(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        let (a, b) = (&self.shape, &other.shape);
        if a.rank() != b.rank() || a.width() != b.width() || a.channels() != b.channels() {
            return Err(Error::ShapeMismatch(format!(
                "vconcat of {:?} and {:?}",
                a.dims(),
                b.dims()
            )));
        }
        let mut dims = a.dims().to_vec();
        dims[0] += b.height();
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Tensor::from_raw(Shape { dims }, data))
    }

    /// The centred sub-tensor left after removing `margin` rows and columns
    /// from every side.
    pub fn interior(&self, margin: usize) -> Result<Tensor<T>> {
        let (h, w, c) = (self.height(), self.width(), self.channels());
        if h <= 2 * margin || w <= 2 * margin {
            return Err(Error::TooSmall { height: h, width: w, min: 2 * margin + 1 });
        }
        let (ih, iw) = (h - 2 * margin, w - 2 * margin);
        let mut data = Vec::with_capacity(ih * iw * c);
        for i in margin..h - margin {
            let start = self.offset(i, margin, 0);
            data.extend_from_slice(&self.data[start..start + iw * c]);
        }
        let mut dims = self.shape.dims().to_vec();
        dims[0] = ih;
        dims[1] = iw;
        Ok(Tensor::from_raw(Shape { dims }, data))
    }

    /// Channel `c` as a 2-D tensor.
    pub fn channel(&self, c: usize) -> Result<Tensor<T>> {
        let channels = self.channels();
        if c >= channels {
            return Err(Error::IndexOutOfRange { index: c, len: channels });
        }
        let data = self.data.iter().skip(c).step_by(channels).copied().collect();
        Ok(Tensor::from_raw(Shape::d2(self.height(), self.width())?, data))
    }

    /// Interleaves equally shaped 2-D planes into an `(H, W, C)` tensor.
    pub fn from_channels(planes: &[Tensor<T>]) -> Result<Tensor<T>> {
        let first = planes.first().ok_or_else(|| Error::InvalidArgument("no channel planes".into()))?;
        let (h, w) = (first.height(), first.width());
        if planes.iter().any(|p| p.shape.rank() != 2 || p.height() != h || p.width() != w) {
            return Err(Error::ShapeMismatch("channel planes differ in shape".into()));
        }
        let c = planes.len();
        let mut data = vec![T::zero(); h * w * c];
        for (k, plane) in planes.iter().enumerate() {
            for (px, &v) in plane.data.iter().enumerate() {
                data[px * c + k] = v;
            }
        }
        Ok(Tensor::from_raw(Shape::d3(h, w, c)?, data))
    }

    /// Element-wise conversion to another precision.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }

    /// Same data viewed with a different shape of equal element count.
    pub fn reshaped(self, shape: Shape) -> Result<Tensor<T>> {
        if shape.numel() != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot reshape {:?} into {:?}",
                self.shape.dims(),
                shape.dims()
            )));
        }
        Ok(Tensor { shape, data: self.data })
    }
}

/// Mirror padding by one sample on each side, excluding the edge sample:
/// `[a, b, c] -> [b, a, b, c, b]`.
pub fn reflect_pad_1d<T: Copy>(v: &[T]) -> Result<Vec<T>> {
    let n = v.len();
    if n < 2 {
        return Err(Error::RowTooShort { len: n, min: 2 });
    }
    let mut out = Vec::with_capacity(n + 2);
    out.push(v[1]);
    out.extend_from_slice(v);
    out.push(v[n - 2]);
    Ok(out)
}

/// One zero on each side: `v -> [0, v, 0]`.
pub fn zero_pad_1d<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(v.len() + 2);
    out.push(T::zero());
    out.extend_from_slice(v);
    out.push(T::zero());
    out
}
