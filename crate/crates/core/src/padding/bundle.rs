//! Border bundles: the four border-related row vectors of a single channel,
//! always ordered top, bottom, left (transposed), right (transposed).

use crate::error::{Error, Result};
use crate::tensor::{reflect_pad_1d, zero_pad_1d, Scalar, Tensor};

/// Index of a row inside a bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Top = 0,
    Bottom = 1,
    Left = 2,
    Right = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Bottom, Side::Left, Side::Right];
}

/// Four row vectors with `len(top) == len(bottom)` and `len(left) == len(right)`.
///
/// Used for the ground truth borders, the neighbours of those borders, the
/// borders of the tensor being padded, and the predicted padding rows.
#[derive(Clone, Debug, PartialEq)]
pub struct BorderBundle<T> {
    rows: [Vec<T>; 4],
}

impl<T: Scalar> BorderBundle<T> {
    pub fn new(top: Vec<T>, bottom: Vec<T>, left: Vec<T>, right: Vec<T>) -> Result<Self> {
        if top.len() != bottom.len() || left.len() != right.len() {
            return Err(Error::ShapeMismatch(format!(
                "border bundle lengths ({}, {}, {}, {})",
                top.len(),
                bottom.len(),
                left.len(),
                right.len()
            )));
        }
        Ok(BorderBundle { rows: [top, bottom, left, right] })
    }

    pub fn rows(&self) -> &[Vec<T>; 4] {
        &self.rows
    }

    pub fn side(&self, side: Side) -> &[T] {
        &self.rows[side as usize]
    }

    pub fn lengths(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|k| self.rows[k].len())
    }

    /// Total number of entries over the four rows.
    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A bundle whose rows were each reflect-padded and then zero-padded by one
/// sample per side, so every row is 4 longer than its source and starts and
/// ends with an exact zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorBundle<T> {
    rows: [Vec<T>; 4],
}

impl<T: Scalar> PredictorBundle<T> {
    pub fn rows(&self) -> &[Vec<T>; 4] {
        &self.rows
    }

    pub fn side(&self, side: Side) -> &[T] {
        &self.rows[side as usize]
    }

    pub fn lengths(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|k| self.rows[k].len())
    }
}

fn require_2d<T: Scalar>(m: &Tensor<T>, min: usize) -> Result<(usize, usize)> {
    if m.shape().rank() != 2 {
        return Err(Error::ShapeMismatch(format!("expected a single channel plane, got {:?}", m.shape().dims())));
    }
    let (r, c) = (m.height(), m.width());
    if r < min || c < min {
        return Err(Error::TooSmall { height: r, width: c, min });
    }
    Ok((r, c))
}

/// Ground truth: the full top, bottom, left and right borders of `m`.
/// Requires both dims to be at least 4 so that [`extract_neighbors`] is
/// well-formed on the same input.
pub fn extract_target<T: Scalar>(m: &Tensor<T>) -> Result<BorderBundle<T>> {
    let (r, c) = require_2d(m, 4)?;
    BorderBundle::new(m.row(0)?, m.row(r - 1)?, m.col_t(0)?, m.col_t(c - 1)?)
}

/// The rows and columns adjacent to the borders, with the entries that
/// overlap the border itself sliced off (`[1 : len-1]`).
pub fn extract_neighbors<T: Scalar>(m: &Tensor<T>) -> Result<BorderBundle<T>> {
    let (r, c) = require_2d(m, 4)?;
    let top = m.row(1)?[1..c - 1].to_vec();
    let bottom = m.row(r - 2)?[1..c - 1].to_vec();
    let left = m.col_t(1)?[1..r - 1].to_vec();
    let right = m.col_t(c - 2)?[1..r - 1].to_vec();
    BorderBundle::new(top, bottom, left, right)
}

/// Full borders of the tensor currently being padded, corners included.
pub fn extract_borders<T: Scalar>(m: &Tensor<T>) -> Result<BorderBundle<T>> {
    let (r, c) = require_2d(m, 2)?;
    BorderBundle::new(m.row(0)?, m.row(r - 1)?, m.col_t(0)?, m.col_t(c - 1)?)
}

/// Reflect-pads then zero-pads every row by one sample per side.
pub fn build_predictor<T: Scalar>(b: &BorderBundle<T>) -> Result<PredictorBundle<T>> {
    let mut rows: [Vec<T>; 4] = Default::default();
    for (out, src) in rows.iter_mut().zip(b.rows()) {
        *out = zero_pad_1d(&reflect_pad_1d(src)?);
    }
    Ok(PredictorBundle { rows })
}

/// Valid 1x3 correlation with stride 1: `out[j] = θ₀·x[j] + θ₁·x[j+1] + θ₂·x[j+2]`.
pub fn correlate3<T: Scalar>(theta: [T; 3], row: &[T]) -> Vec<T> {
    row.windows(3)
        .map(|w| theta[0] * w[0] + theta[1] * w[1] + theta[2] * w[2])
        .collect()
}

/// Applies `theta` to every predictor row. Output rows are 2 shorter than the
/// predictor rows.
pub fn predict_with<T: Scalar>(theta: [T; 3], p: &PredictorBundle<T>) -> BorderBundle<T> {
    let [a, b, c, d] = p.rows().clone().map(|row| correlate3(theta, &row));
    BorderBundle { rows: [a, b, c, d] }
}

/// Surrounds `m` (an `r x c` plane) with one ring taken from the predicted rows
/// `o`, whose lengths must be `(c+2, c+2, r+2, r+2)`.
///
/// The top and bottom rows are copied from `o`; the left and right columns
/// are added on top of a zero column; the four corners therefore receive two
/// contributions and are halved.
pub fn assemble_padded<T: Scalar>(m: &Tensor<T>, o: &BorderBundle<T>) -> Result<Tensor<T>> {
    let (r, c) = require_2d(m, 1)?;
    if o.lengths() != [c + 2, c + 2, r + 2, r + 2] {
        return Err(Error::ShapeMismatch(format!(
            "predicted rows {:?} do not fit a {r}x{c} plane",
            o.lengths()
        )));
    }
    let (h, w) = (r + 2, c + 2);
    let mut out = vec![T::zero(); h * w];
    out[..w].copy_from_slice(o.side(Side::Top));
    out[(h - 1) * w..].copy_from_slice(o.side(Side::Bottom));
    for (i, src) in m.data().chunks_exact(c).enumerate() {
        out[(i + 1) * w + 1..(i + 1) * w + 1 + c].copy_from_slice(src);
    }
    let (left, right) = (o.side(Side::Left), o.side(Side::Right));
    for i in 0..h {
        out[i * w] += left[i];
        out[i * w + w - 1] += right[i];
    }
    let two = T::one() + T::one();
    for k in [0, w - 1, (h - 1) * w, h * w - 1] {
        out[k] /= two;
    }
    Tensor::from_vec(crate::tensor::Shape::d2(h, w)?, out).map_err(|_| Error::NonFinite("assemble_padded"))
}

/// Sum of squared residuals between `theta`-predictions over `p` and the
/// targets `t`.
pub fn squared_error_sum<T: Scalar>(theta: [T; 3], p: &PredictorBundle<T>, t: &BorderBundle<T>) -> Result<T> {
    check_fit(p, t)?;
    let mut sum = T::zero();
    for (prow, trow) in p.rows().iter().zip(t.rows()) {
        for (w, &target) in prow.windows(3).zip(trow) {
            let e = theta[0] * w[0] + theta[1] * w[1] + theta[2] * w[2] - target;
            sum += e * e;
        }
    }
    Ok(sum)
}

/// Local loss: mean squared residual over all entries of the four rows.
pub fn mse<T: Scalar>(theta: [T; 3], p: &PredictorBundle<T>, t: &BorderBundle<T>) -> Result<T> {
    let sum = squared_error_sum(theta, p, t)?;
    Ok(sum / T::of(t.len() as f64))
}

/// Gradient of [`mse`] with respect to the three filter weights:
/// `(2/Z) Σ (θ·window − target) · window[m]`.
pub fn mse_grad<T: Scalar>(theta: [T; 3], p: &PredictorBundle<T>, t: &BorderBundle<T>) -> Result<[T; 3]> {
    check_fit(p, t)?;
    let mut g = [T::zero(); 3];
    for (prow, trow) in p.rows().iter().zip(t.rows()) {
        for (w, &target) in prow.windows(3).zip(trow) {
            let e = theta[0] * w[0] + theta[1] * w[1] + theta[2] * w[2] - target;
            g[0] += e * w[0];
            g[1] += e * w[1];
            g[2] += e * w[2];
        }
    }
    let scale = T::of(2.0 / t.len() as f64);
    Ok(g.map(|v| v * scale))
}

fn check_fit<T: Scalar>(p: &PredictorBundle<T>, t: &BorderBundle<T>) -> Result<()> {
    let fits = p.lengths().iter().zip(t.lengths()).all(|(&pl, tl)| pl == tl + 2);
    if !fits || t.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "predictor rows {:?} cannot predict targets {:?}",
            p.lengths(),
            t.lengths()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m4() -> Tensor<f64> {
        Tensor::from_rows(&[
            vec![1., 2., 3., 4.],
            vec![5., 6., 7., 8.],
            vec![9., 10., 11., 12.],
            vec![13., 14., 15., 16.],
        ])
        .unwrap()
    }

    fn constant(r: usize, c: usize, v: f64) -> Tensor<f64> {
        Tensor::new_filled(crate::tensor::Shape::d2(r, c).unwrap(), v)
    }

    #[test]
    fn target_of_m4() {
        let t = extract_target(&m4()).unwrap();
        assert_eq!(t.side(Side::Top), &[1., 2., 3., 4.]);
        assert_eq!(t.side(Side::Bottom), &[13., 14., 15., 16.]);
        assert_eq!(t.side(Side::Left), &[1., 5., 9., 13.]);
        assert_eq!(t.side(Side::Right), &[4., 8., 12., 16.]);

        let t5 = extract_target(&constant(4, 4, 5.0)).unwrap();
        assert!(t5.rows().iter().all(|r| r == &vec![5.0; 4]));

        assert!(matches!(extract_target(&constant(3, 4, 1.0)), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn neighbors_of_m4() {
        let n = extract_neighbors(&m4()).unwrap();
        assert_eq!(n.rows(), &[vec![6., 7.], vec![10., 11.], vec![6., 10.], vec![7., 11.]]);
        let n5 = extract_neighbors(&constant(4, 4, 5.0)).unwrap();
        assert!(n5.rows().iter().all(|r| r == &vec![5.0; 2]));
        assert_eq!(extract_neighbors(&constant(5, 5, 0.0)).unwrap().lengths(), [3; 4]);
        assert!(extract_neighbors(&constant(4, 3, 0.0)).is_err());
    }

    #[test]
    fn neighbors_of_rectangular_input() {
        let m = Tensor::from_vec(crate::tensor::Shape::d2(4, 6).unwrap(), (0..24).map(f64::from).collect()).unwrap();
        let n = extract_neighbors(&m).unwrap();
        assert_eq!(n.lengths(), [4, 4, 2, 2]);
        assert_eq!(n.side(Side::Top), &[7., 8., 9., 10.]);
        assert_eq!(n.side(Side::Right), &[10., 16.]);
    }

    #[test]
    fn borders_include_corners() {
        assert_eq!(extract_borders(&m4()).unwrap(), extract_target(&m4()).unwrap());
        let b = extract_borders(&constant(3, 3, 5.0)).unwrap();
        assert!(b.rows().iter().all(|r| r == &vec![5.0; 3]));
        let small = Tensor::from_rows(&[vec![1., 2.], vec![3., 4.]]).unwrap();
        let b = extract_borders(&small).unwrap();
        assert_eq!(b.rows(), &[vec![1., 2.], vec![3., 4.], vec![1., 3.], vec![2., 4.]]);
        assert!(extract_borders(&constant(1, 3, 0.0)).is_err());
    }

    #[test]
    fn predictor_rows() {
        let p = build_predictor(&extract_neighbors(&m4()).unwrap()).unwrap();
        assert_eq!(p.side(Side::Top), &[0., 7., 6., 7., 6., 0.]);
        assert_eq!(p.lengths(), [6; 4]);
        let b = BorderBundle::new(vec![5.; 3], vec![5.; 3], vec![5.; 3], vec![5.; 3]).unwrap();
        assert_eq!(build_predictor(&b).unwrap().side(Side::Left), &[0., 5., 5., 5., 5., 5., 0.]);
        let short = BorderBundle::new(vec![1.], vec![1.], vec![1., 2.], vec![1., 2.]).unwrap();
        assert!(matches!(build_predictor(&short), Err(Error::RowTooShort { .. })));
    }

    #[test]
    fn bundle_rejects_unbalanced_rows() {
        assert!(BorderBundle::new(vec![1.0f64], vec![1., 2.], vec![], vec![]).is_err());
    }

    #[test]
    fn correlation_examples() {
        let row = [0., 7., 6., 7., 6., 0.];
        assert_eq!(correlate3([0., 1., 0.], &row), vec![7., 6., 7., 6.]);
        let third: f64 = 1.0 / 3.0;
        let mean = correlate3([third; 3], &row);
        let expected = [13.0 / 3.0, 20.0 / 3.0, 19.0 / 3.0, 13.0 / 3.0];
        for (a, b) in mean.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(correlate3([0.; 3], &row), vec![0.; 4]);
    }

    #[test]
    fn assemble_with_identity_filter() {
        let m = constant(3, 3, 5.0);
        let o = predict_with([0., 1., 0.], &build_predictor(&extract_borders(&m).unwrap()).unwrap());
        let out = assemble_padded(&m, &o).unwrap();
        assert_eq!(out.shape().dims(), &[5, 5]);
        assert!(out.data().iter().all(|&v| v == 5.0));
        assert_eq!(out.interior(1).unwrap(), m);
    }

    #[test]
    fn assemble_rejects_wrong_lengths() {
        let m = constant(3, 3, 5.0);
        let o = BorderBundle::new(vec![1.; 4], vec![1.; 4], vec![1.; 5], vec![1.; 5]).unwrap();
        assert!(assemble_padded(&m, &o).is_err());
    }

    #[test]
    fn corners_average_two_contributions() {
        let m = constant(2, 2, 0.0);
        let o = BorderBundle::new(
            vec![1., 2., 3., 4.],
            vec![5., 6., 7., 8.],
            vec![10., 20., 30., 40.],
            vec![50., 60., 70., 80.],
        )
        .unwrap();
        let out = assemble_padded(&m, &o).unwrap();
        assert_eq!(out.row(0).unwrap(), vec![5.5, 2., 3., 27.]);
        assert_eq!(out.row(1).unwrap(), vec![20., 0., 0., 60.]);
        assert_eq!(out.row(3).unwrap(), vec![22.5, 6., 7., 44.]);
    }

    #[test]
    fn loss_on_m4_with_identity_filter() {
        let m = m4();
        let p = build_predictor(&extract_neighbors(&m).unwrap()).unwrap();
        let t = extract_target(&m).unwrap();
        assert_eq!(squared_error_sum([0., 1., 0.], &p, &t).unwrap(), 408.0);
        assert_eq!(mse([0., 1., 0.], &p, &t).unwrap(), 25.5);
    }

    #[test]
    fn constant_input_is_a_perfect_fit_for_identity() {
        let m = constant(4, 4, 5.0);
        let p = build_predictor(&extract_neighbors(&m).unwrap()).unwrap();
        let t = extract_target(&m).unwrap();
        assert_eq!(mse([0., 1., 0.], &p, &t).unwrap(), 0.0);
        assert_eq!(mse_grad([0., 1., 0.], &p, &t).unwrap(), [0.0; 3]);
    }

    #[test]
    fn symmetric_rows_give_symmetric_gradient() {
        let row: Vec<f64> = vec![0.2, 0.5, 0.9, 0.5, 0.2];
        let b = BorderBundle::new(row.clone(), row.clone(), row.clone(), row.clone()).unwrap();
        let p = build_predictor(&b).unwrap();
        let t = BorderBundle::new(vec![0.3; 7], vec![0.3; 7], vec![0.3; 7], vec![0.3; 7]).unwrap();
        let g = mse_grad([0.1, 0.4, 0.1], &p, &t).unwrap();
        assert!((g[0] - g[2]).abs() < 1e-15);
    }

    #[test]
    fn loss_rejects_misaligned_targets() {
        let p = build_predictor(&extract_neighbors(&m4()).unwrap()).unwrap();
        let t = BorderBundle::new(vec![1.; 3], vec![1.; 3], vec![1.; 4], vec![1.; 4]).unwrap();
        assert!(mse([0., 1., 0.], &p, &t).is_err());
        assert!(mse_grad([0., 1., 0.], &p, &t).is_err());
    }
}
