//! Central finite-difference checks of analytic gradients, in double
//! precision.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::PadKind;
use crate::nn::conv::{Conv2d, ConvPadding};
use crate::nn::layers::Dense;
use crate::padding::{build_predictor, extract_neighbors, extract_target, mse, mse_grad};
use crate::tensor::{Shape, Tensor};

pub const FD_STEP: f64 = 1e-4;

/// Components whose magnitudes are both below this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every component `i`.
pub fn central_difference(f: &Objective, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub type Objective = dyn Fn(&[f64]) -> f64;

/// One randomly drawn check: a scalar function, the point, and the analytic
/// gradient at that point.
pub struct GradProblem {
    pub params: Vec<f64>,
    pub analytic: Vec<f64>,
    pub f: Box<Objective>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Offender {
    pub trial: usize,
    pub component: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    pub trials: usize,
    pub components: usize,
    pub tol: f64,
    pub max_rel_err: f64,
    pub failures: usize,
    pub worst: Option<Offender>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<27} {} trials, {} components, max rel err {:.3e} (tol {:.1e}): {}",
            self.name,
            self.trials,
            self.components,
            self.max_rel_err,
            self.tol,
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        if let (false, Some(w)) = (self.passed(), &self.worst) {
            write!(
                f,
                "\n    worst: trial {} component {} analytic {:.12e} numeric {:.12e} rel err {:.3e}",
                w.trial, w.component, w.analytic, w.numeric, w.rel_err
            )?;
        }
        Ok(())
    }
}

/// Draws `trials` problems from `draw` with a seeded generator and compares
/// every analytic component against central differences.
pub fn finite_diff_check(
    name: &str,
    trials: usize,
    tol: f64,
    seed: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> GradProblem,
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        name: name.to_string(),
        trials,
        components: 0,
        tol,
        max_rel_err: 0.0,
        failures: 0,
        worst: None,
    };
    for trial in 0..trials {
        let problem = draw(&mut rng);
        let numeric = central_difference(problem.f.as_ref(), &problem.params, FD_STEP);
        for (component, (&a, &n)) in problem.analytic.iter().zip(&numeric).enumerate() {
            let rel_err = relative_error(a, n);
            report.components += 1;
            if rel_err > tol {
                report.failures += 1;
            }
            if report.worst.is_none() || rel_err > report.max_rel_err {
                report.max_rel_err = rel_err;
                report.worst = Some(Offender { trial, component, analytic: a, numeric: n, rel_err });
            }
        }
    }
    report
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Local padding loss against its analytic filter gradient, on random
/// single-channel inputs between 4x4 and 8x8 with values in `[0, 1)` and
/// filters in `[-1, 1)`.
pub fn draw_module_local(rng: &mut ChaCha8Rng) -> GradProblem {
    let (h, w) = (rng.gen_range(4..=8), rng.gen_range(4..=8));
    let plane = Tensor::from_vec(Shape::d2(h, w).unwrap(), uniform_vec(rng, h * w, 0.0, 1.0)).unwrap();
    let theta = uniform_vec(rng, 3, -1.0, 1.0);
    let p = build_predictor(&extract_neighbors(&plane).unwrap()).unwrap();
    let t = extract_target(&plane).unwrap();
    let analytic = mse_grad([theta[0], theta[1], theta[2]], &p, &t).unwrap().to_vec();
    GradProblem {
        params: theta,
        analytic,
        f: Box::new(move |th: &[f64]| mse([th[0], th[1], th[2]], &p, &t).unwrap()),
    }
}

/// `sum(r * conv(x))` for a random 3x3 convolution, checked over the
/// weights, the bias and the input together.
pub fn draw_conv(rng: &mut ChaCha8Rng, kind: PadKind) -> GradProblem {
    let (ci, co) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
    let (h, w) = (rng.gen_range(3..=6), rng.gen_range(3..=6));
    let nw = 9 * ci * co;
    let weights = uniform_vec(rng, nw, -1.0, 1.0);
    let bias = uniform_vec(rng, co, -1.0, 1.0);
    let x = uniform_vec(rng, h * w * ci, 0.0, 1.0);
    let r = uniform_vec(rng, h * w * co, -1.0, 1.0);

    let split = move |p: &[f64]| {
        let conv = Conv2d::new(3, ci, co, p[..nw].to_vec(), p[nw..nw + co].to_vec(), ConvPadding::Fixed(kind)).unwrap();
        let x = Tensor::from_vec(Shape::d3(h, w, ci).unwrap(), p[nw + co..].to_vec()).unwrap();
        (conv, x)
    };
    let params: Vec<f64> = [weights, bias, x].concat();
    let (mut conv, input) = split(&params);
    conv.forward(&[input], true).unwrap();
    let dy = Tensor::from_vec(Shape::d3(h, w, co).unwrap(), r.clone()).unwrap();
    let dx = conv.backward(&[dy], true).unwrap();
    let analytic = [conv.grad_weights(), conv.grad_bias(), dx[0].data()].concat();

    GradProblem {
        params,
        analytic,
        f: Box::new(move |p: &[f64]| {
            let (mut conv, x) = split(p);
            let y = conv.forward(&[x], false).unwrap();
            y[0].data().iter().zip(&r).map(|(a, b)| a * b).sum()
        }),
    }
}

/// `sum(r * dense(x))` over weights, bias and input.
pub fn draw_dense(rng: &mut ChaCha8Rng) -> GradProblem {
    let (ni, no) = (rng.gen_range(1..=12), rng.gen_range(1..=10));
    let params = uniform_vec(rng, ni * no + no + ni, -1.0, 1.0);
    let r = uniform_vec(rng, no, -1.0, 1.0);
    let split = move |p: &[f64]| {
        let d = Dense::new(ni, no, p[..ni * no].to_vec(), p[ni * no..ni * no + no].to_vec()).unwrap();
        let x = Tensor::from_vec(Shape::d2(1, ni).unwrap(), p[ni * no + no..].to_vec()).unwrap();
        (d, x)
    };
    let (mut dense, x) = split(&params);
    dense.forward(&[x], true).unwrap();
    let dx = dense.backward(&[Tensor::from_vec(Shape::d2(1, no).unwrap(), r.clone()).unwrap()]).unwrap();
    let analytic = [dense.grad_weights(), dense.grad_bias(), dx[0].data()].concat();
    GradProblem {
        params,
        analytic,
        f: Box::new(move |p: &[f64]| {
            let (mut d, x) = split(p);
            d.forward(&[x], false).unwrap()[0].data().iter().zip(&r).map(|(a, b)| a * b).sum()
        }),
    }
}

/// The suites run by the command-line `gradcheck`: the module's local loss
/// first, then each layer with a differentiable padding.
pub fn standard_suites(trials: usize, tol: f64, seed: u64) -> Vec<GradCheckReport> {
    let layer_trials = trials.div_ceil(10).max(1);
    let mut reports = vec![finite_diff_check("module local loss", trials, tol, seed, draw_module_local)];
    for kind in [PadKind::Zero, PadKind::Reflect, PadKind::Replicate] {
        reports.push(finite_diff_check(&format!("conv2d ({kind} padding)"), layer_trials, tol, seed, |rng| {
            draw_conv(rng, kind)
        }));
    }
    reports.push(finite_diff_check("dense", layer_trials, tol, seed, draw_dense));
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_is_exact() {
        let report = finite_diff_check("bowl", 20, 1e-9, 7, |rng| {
            let x = uniform_vec(rng, 5, -2.0, 2.0);
            let analytic = x.iter().enumerate().map(|(i, v)| 2.0 * (i as f64 + 1.0) * v).collect();
            GradProblem {
                params: x,
                analytic,
                f: Box::new(|x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum()),
            }
        });
        assert!(report.passed(), "{report}");
        assert!(report.max_rel_err < 1e-9);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let report = finite_diff_check("bad", 3, 1e-6, 1, |rng| GradProblem {
            params: uniform_vec(rng, 2, 1.0, 2.0),
            analytic: vec![0.0, 0.0],
            f: Box::new(|x: &[f64]| x[0] * x[1]),
        });
        assert!(!report.passed());
        assert_eq!(report.failures, 6);
        assert!(report.to_string().contains("worst"));
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
        assert!(relative_error(1e-12, 2e-12) < 1e-3);
    }
}
