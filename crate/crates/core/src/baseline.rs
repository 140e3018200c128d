//! Fixed padding methods used as comparators: zero, reflection, replication,
//! and a mean-interpolation stand-in.
//!
//! `pad_mean_interp` is the learnable pipeline frozen at the mean filter
//! `(1/3, 1/3, 1/3)`; it pads with local means of the borders and is a
//! simplification of published mean-interpolation padding, not a
//! reimplementation of it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::padding::{FilterBank, Mode, PaddingModule};
use crate::tensor::{Scalar, Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PadKind {
    Zero,
    Reflect,
    Replicate,
    MeanInterp,
    Module,
}

impl PadKind {
    pub const ALL: [PadKind; 5] = [PadKind::Zero, PadKind::Reflect, PadKind::Replicate, PadKind::MeanInterp, PadKind::Module];

    pub fn name(self) -> &'static str {
        match self {
            PadKind::Zero => "zero",
            PadKind::Reflect => "reflect",
            PadKind::Replicate => "replicate",
            PadKind::MeanInterp => "meaninterp",
            PadKind::Module => "module",
        }
    }
}

impl fmt::Display for PadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PadKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown padding method '{s}'")))
    }
}

/// A padding method and its size in pixels per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PadMethod {
    kind: PadKind,
    size: usize,
}

impl PadMethod {
    pub fn new(kind: PadKind, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("padding size must be at least 1".into()));
        }
        Ok(PadMethod { kind, size })
    }

    pub fn kind(&self) -> PadKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Pads with a fixed method. `Module` needs trained filters, so it is
    /// rejected here; use [`PaddingModule::pad`] instead.
    pub fn apply<T: Scalar>(&self, m: &Tensor<T>) -> Result<Tensor<T>> {
        match self.kind {
            PadKind::Zero => pad_zero(m, self.size),
            PadKind::Reflect => pad_reflect(m, self.size),
            PadKind::Replicate => pad_replicate(m, self.size),
            PadKind::MeanInterp => pad_mean_interp(m, self.size),
            PadKind::Module => Err(Error::InvalidArgument("module padding requires filter weights".into())),
        }
    }
}

/// Source index, if any, for every padded row and column. Zero, reflect and
/// replicate padding are all separable, so a padded pixel `(i, j)` reads
/// source pixel `(rows[i], cols[j])` or is zero when either is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorderMap {
    height: usize,
    width: usize,
    size: usize,
    rows: Vec<Option<usize>>,
    cols: Vec<Option<usize>>,
}

impl BorderMap {
    pub fn new(kind: PadKind, height: usize, width: usize, size: usize) -> Result<Self> {
        if kind == PadKind::Reflect && size >= height.min(width) {
            return Err(Error::InvalidArgument(format!(
                "reflection by {size} needs both dims above {size}, got {height}x{width}"
            )));
        }
        let axis = |len: usize| -> Result<Vec<Option<usize>>> {
            (0..len + 2 * size)
                .map(|p| {
                    let i = p as isize - size as isize;
                    let last = len as isize - 1;
                    Ok(match kind {
                        _ if (0..=last).contains(&i) => Some(i as usize),
                        PadKind::Zero => None,
                        PadKind::Replicate => Some(i.clamp(0, last) as usize),
                        PadKind::Reflect => Some(if i < 0 { -i } else { 2 * last - i } as usize),
                        PadKind::MeanInterp | PadKind::Module => {
                            return Err(Error::InvalidArgument(format!("{kind} padding is not an index map")))
                        }
                    })
                })
                .collect()
        };
        Ok(BorderMap { height, width, size, rows: axis(height)?, cols: axis(width)? })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Spatial dims of the unpadded input this map applies to.
    pub fn apply_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn check(&self, t: &Tensor<impl Scalar>, h: usize, w: usize) -> Result<()> {
        if t.height() != h || t.width() != w {
            return Err(Error::ShapeMismatch(format!("expected {h}x{w} spatial dims, got {:?}", t.shape().dims())));
        }
        Ok(())
    }

    pub fn apply<T: Scalar>(&self, m: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(m, self.height, self.width)?;
        let c = m.channels();
        let (ph, pw) = (self.rows.len(), self.cols.len());
        let mut out = vec![T::zero(); ph * pw * c];
        for (pi, ri) in self.rows.iter().enumerate() {
            let Some(ri) = ri else { continue };
            for (pj, cj) in self.cols.iter().enumerate() {
                let Some(cj) = cj else { continue };
                let src = (ri * self.width + cj) * c;
                let dst = (pi * pw + pj) * c;
                out[dst..dst + c].copy_from_slice(&m.data()[src..src + c]);
            }
        }
        Ok(Tensor::from_raw(m.shape().grown(self.size), out))
    }

    /// Adjoint of [`Self::apply`]: every padded gradient is added back onto the
    /// source pixel it was copied from.
    pub fn adjoint<T: Scalar>(&self, g: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(g, self.rows.len(), self.cols.len())?;
        let c = g.channels();
        let pw = self.cols.len();
        let mut dims = g.shape().dims().to_vec();
        dims[0] = self.height;
        dims[1] = self.width;
        let mut out = vec![T::zero(); self.height * self.width * c];
        for (pi, ri) in self.rows.iter().enumerate() {
            let Some(ri) = ri else { continue };
            for (pj, cj) in self.cols.iter().enumerate() {
                let Some(cj) = cj else { continue };
                let dst = (ri * self.width + cj) * c;
                let src = (pi * pw + pj) * c;
                for (o, &v) in out[dst..dst + c].iter_mut().zip(&g.data()[src..src + c]) {
                    *o += v;
                }
            }
        }
        Ok(Tensor::from_raw(Shape::new(&dims)?, out))
    }
}

fn check_size(s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidArgument("padding size must be at least 1".into()));
    }
    Ok(())
}

pub fn pad_zero<T: Scalar>(m: &Tensor<T>, s: usize) -> Result<Tensor<T>> {
    check_size(s)?;
    BorderMap::new(PadKind::Zero, m.height(), m.width(), s)?.apply(m)
}

/// Every new pixel copies the nearest existing one.
pub fn pad_replicate<T: Scalar>(m: &Tensor<T>, s: usize) -> Result<Tensor<T>> {
    check_size(s)?;
    BorderMap::new(PadKind::Replicate, m.height(), m.width(), s)?.apply(m)
}

/// Mirror across the border without repeating it; needs `s < min(H, W)`.
pub fn pad_reflect<T: Scalar>(m: &Tensor<T>, s: usize) -> Result<Tensor<T>> {
    check_size(s)?;
    BorderMap::new(PadKind::Reflect, m.height(), m.width(), s)?.apply(m)
}

/// The padding pipeline with every filter frozen at the local mean.
pub fn mean_interp_module<T: Scalar>(channels: usize, s: usize) -> Result<PaddingModule<T>> {
    let mut module = PaddingModule::new(FilterBank::mean(channels)?, s)?;
    module.set_mode(Mode::Eval);
    Ok(module)
}

pub fn pad_mean_interp<T: Scalar>(m: &Tensor<T>, s: usize) -> Result<Tensor<T>> {
    mean_interp_module(m.channels(), s)?.pad(m)
}
