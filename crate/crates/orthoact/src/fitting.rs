//! Fit a learnable activation to a target activation.
//!
//! "Lagrange" mode matches function values only; "Hermite interpolation"
//! matches values and first derivatives jointly (not to be confused with the
//! Hermite polynomial basis). Both are realized as least squares on a dense
//! grid. Linear-in-parameter families (Hermite always, Fourier with frozen
//! harmonic frequencies) are solved directly; tropical rational fits use
//! subgradient descent.

use crate::activations::{
    Activation, FourierActivation, HermiteActivation, TropicalPolynomial,
    TropicalRationalActivation,
};
use crate::basis::{factorial, hermite_recursive};
use crate::gains::Family;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, SQRT_2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("design matrix is numerically singular (condition {0:.3e} after scaling)")]
    RankDeficient(f64),
    #[error("descent did not converge within {0} iterations")]
    NonConvergent(usize),
    #[error("family {0} is not fittable by direct least squares")]
    UnsupportedFamily(&'static str),
}

/// Uniform fitting grid on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl FitGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self, FitError> {
        if !(lo < hi) {
            return Err(FitError::InvalidGrid(format!("lo {lo} must be < hi {hi}")));
        }
        if points < 2 {
            return Err(FitError::InvalidGrid(format!(
                "need at least 2 points, got {points}"
            )));
        }
        Ok(FitGrid { lo, hi, points })
    }

    /// Fig. 2/3-style default window.
    pub fn default_window() -> Self {
        FitGrid {
            lo: -4.0,
            hi: 4.0,
            points: 401,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitMode {
    /// Match function values only.
    Lagrange,
    /// Match function values and first derivatives jointly (weight 1 each).
    HermiteInterp,
}

impl std::str::FromStr for FitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lagrange" => Ok(FitMode::Lagrange),
            "hermite" | "hermite-interp" => Ok(FitMode::HermiteInterp),
            other => Err(format!("unknown fit mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub activation: Activation,
    pub value_rmse: f64,
    pub deriv_rmse: f64,
    pub grid: FitGrid,
    pub mode: FitMode,
    /// 0 for a direct solve.
    pub iterations: usize,
}

/// Basis values `phi_k(x)` and derivatives `phi'_k(x)` of a linear family.
fn basis_rows(family: Family, degree: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    match family {
        Family::Hermite => {
            let he = hermite_recursive(x, degree);
            let vals: Vec<f64> = he
                .iter()
                .enumerate()
                .map(|(k, &h)| h / factorial(k as u32))
                .collect();
            let derivs = (0..=degree)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        he[k - 1] / factorial(k as u32 - 1)
                    }
                })
                .collect();
            (vals, derivs)
        }
        Family::Fourier => {
            // frozen harmonic frequencies f_k = k, phases pi/4
            let mut vals = vec![1.0];
            let mut derivs = vec![0.0];
            for k in 1..=degree {
                let kf = k as f64;
                let theta = kf * x - FRAC_PI_4;
                vals.push(SQRT_2 * theta.cos() / factorial(k as u32));
                derivs.push(-SQRT_2 * kf * theta.sin() / factorial(k as u32));
            }
            (vals, derivs)
        }
        Family::Tropical => unreachable!("tropical fits use subgradient descent"),
    }
}

fn rmse(errs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for e in errs {
        sum += e * e;
        n += 1;
    }
    (sum / n as f64).sqrt()
}

fn evaluate_fit(
    activation: Activation,
    target: &Activation,
    grid: FitGrid,
    mode: FitMode,
    iterations: usize,
) -> FitResult {
    let xs = grid.xs();
    let value_rmse = rmse(xs.iter().map(|&x| activation.eval(x) - target.eval(x)));
    let deriv_rmse = rmse(xs.iter().map(|&x| activation.deriv(x) - target.deriv(x)));
    FitResult {
        activation,
        value_rmse,
        deriv_rmse,
        grid,
        mode,
        iterations,
    }
}

/// Direct least-squares fit of a Hermite or Fourier activation to `target`.
pub fn fit(
    target: &Activation,
    family: Family,
    degree: usize,
    grid: FitGrid,
    mode: FitMode,
) -> Result<FitResult, FitError> {
    if family == Family::Tropical {
        return Err(FitError::UnsupportedFamily("Tropical"));
    }
    let n_params = degree + 1;
    if grid.points < 2 * n_params {
        return Err(FitError::InvalidGrid(format!(
            "{} points < 2 x {} free parameters",
            grid.points, n_params
        )));
    }
    let xs = grid.xs();
    let n_rows = match mode {
        FitMode::Lagrange => xs.len(),
        FitMode::HermiteInterp => 2 * xs.len(),
    };
    let mut a = DMatrix::zeros(n_rows, n_params);
    let mut b = DVector::zeros(n_rows);
    for (i, &x) in xs.iter().enumerate() {
        let (vals, derivs) = basis_rows(family, degree, x);
        for j in 0..n_params {
            a[(i, j)] = vals[j];
        }
        b[i] = target.eval(x);
        if mode == FitMode::HermiteInterp {
            for j in 0..n_params {
                a[(xs.len() + i, j)] = derivs[j];
            }
            b[xs.len() + i] = target.deriv(x);
        }
    }

    // column scaling keeps the conditioning honest at higher degrees
    let col_norms: Vec<f64> = (0..n_params)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for j in 0..n_params {
        let s = 1.0 / col_norms[j];
        a.column_mut(j).scale_mut(s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin.max(f64::MIN_POSITIVE);
    if cond > 1e12 {
        return Err(FitError::RankDeficient(cond));
    }
    let scaled = svd
        .solve(&b, 0.0)
        .map_err(|_| FitError::RankDeficient(cond))?;
    let coeffs: Vec<f64> = (0..n_params).map(|j| scaled[j] / col_norms[j]).collect();

    let activation = match family {
        Family::Hermite => Activation::Hermite(HermiteActivation::new(coeffs)),
        Family::Fourier => {
            Activation::Fourier(FourierActivation::new(coeffs[0], coeffs[1..].to_vec()))
        }
        Family::Tropical => unreachable!(),
    };
    Ok(evaluate_fit(activation, target, grid, mode, 0))
}

/// Supporting lines of a (locally convex) function at the given anchors.
fn supporting_lines(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, anchors: &[f64]) -> TropicalPolynomial {
    let slopes: Vec<f64> = anchors.iter().map(|&x| df(x)).collect();
    let offsets: Vec<f64> = anchors
        .iter()
        .zip(&slopes)
        .map(|(&x, &s)| f(x) - s * x)
        .collect();
    TropicalPolynomial::new(slopes, offsets)
}

fn anchors(grid: FitGrid, count: usize) -> Vec<f64> {
    let span = grid.hi - grid.lo;
    (0..count)
        .map(|j| grid.lo + span * (j as f64 + 0.5) / count as f64)
        .collect()
}

const DESCENT_CAP: usize = 100_000;

/// Adam-damped subgradient descent over the slopes and offsets of the pieces.
/// The denominator may be `None` for a single convex polynomial fit.
fn tropical_descent(
    mut num: TropicalPolynomial,
    mut den: Option<TropicalPolynomial>,
    target: &Activation,
    grid: FitGrid,
) -> Result<(TropicalPolynomial, Option<TropicalPolynomial>, usize), FitError> {
    let xs = grid.xs();
    let targets: Vec<(f64, f64)> = xs.iter().map(|&x| (target.eval(x), target.deriv(x))).collect();
    // derivative residuals are meaningless where the target itself has a
    // subgradient jump (e.g. the ReLU kink); value residuals still apply
    let deriv_ok: Vec<bool> = xs
        .iter()
        .map(|&x| (target.deriv(x + 1e-3) - target.deriv(x - 1e-3)).abs() < 1e-3)
        .collect();
    let n_num = num.slopes.len();
    let dim = 2 * n_num + den.as_ref().map_or(0, |d| 2 * d.slopes.len());
    let (mut m1, mut m2) = (vec![0.0; dim], vec![0.0; dim]);
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let lr0 = 0.02;
    let mut prev_loss = f64::INFINITY;
    let mut quiet = 0;
    for t in 0..DESCENT_CAP {
        let mut grad = vec![0.0; dim];
        let mut loss = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let (gv, gd) = targets[i];
            let ni = num.argmax(x);
            let fv = num.eval(x) - den.as_ref().map_or(0.0, |d| d.eval(x));
            let fd = num.slopes[ni] - den.as_ref().map_or(0.0, |d| d.subgradient(x));
            let ev = fv - gv;
            let ed = if deriv_ok[i] { fd - gd } else { 0.0 };
            loss += ev * ev + ed * ed;
            // numerator: value error hits the active offset/slope; the
            // derivative error hits the active slope directly
            grad[2 * ni] += 2.0 * ev;
            grad[2 * ni + 1] += 2.0 * ev * x + 2.0 * ed;
            if let Some(d) = &den {
                let di = d.argmax(x);
                let base = 2 * n_num;
                grad[base + 2 * di] -= 2.0 * ev;
                grad[base + 2 * di + 1] -= 2.0 * ev * x + 2.0 * ed;
            }
        }
        let n = xs.len() as f64;
        loss /= n;
        for g in &mut grad {
            *g /= n;
        }
        let lr = lr0 / (1.0 + t as f64 / 2000.0);
        for j in 0..dim {
            m1[j] = beta1 * m1[j] + (1.0 - beta1) * grad[j];
            m2[j] = beta2 * m2[j] + (1.0 - beta2) * grad[j] * grad[j];
            let mhat = m1[j] / (1.0 - beta1.powi(t as i32 + 1));
            let vhat = m2[j] / (1.0 - beta2.powi(t as i32 + 1));
            let step = lr * mhat / (vhat.sqrt() + eps);
            if j < 2 * n_num {
                if j % 2 == 0 {
                    num.offsets[j / 2] -= step;
                } else {
                    num.slopes[j / 2] -= step;
                }
            } else if let Some(d) = &mut den {
                let jj = j - 2 * n_num;
                if jj % 2 == 0 {
                    d.offsets[jj / 2] -= step;
                } else {
                    d.slopes[jj / 2] -= step;
                }
            }
        }
        if (prev_loss - loss).abs() <= 1e-10 * loss.max(1e-12) {
            quiet += 1;
            if quiet >= 20 {
                return Ok((num, den, t + 1));
            }
        } else {
            quiet = 0;
        }
        prev_loss = loss;
    }
    Err(FitError::NonConvergent(DESCENT_CAP))
}

/// Joint value+derivative fit of a tropical rational activation. The pieces
/// are seeded from supporting lines of the convex split
/// `target + c x^2/2  minus  c x^2/2` and refined by subgradient descent.
pub fn fit_tropical_rational(
    target: &Activation,
    deg_num: usize,
    deg_den: usize,
    grid: FitGrid,
) -> Result<FitResult, FitError> {
    if deg_num < 1 || deg_den < 1 {
        return Err(FitError::InvalidGrid(
            "tropical rational degrees must be >= 1".into(),
        ));
    }
    // curvature shift making the numerator target convex on the grid
    let xs = grid.xs();
    let h = 1e-4;
    let min_dd = xs
        .iter()
        .map(|&x| (target.deriv(x + h) - target.deriv(x - h)) / (2.0 * h))
        .fold(f64::INFINITY, f64::min);
    let c = (-min_dd).max(0.0) + 0.5;

    let num = supporting_lines(
        |x| target.eval(x) + 0.5 * c * x * x,
        |x| target.deriv(x) + c * x,
        &anchors(grid, deg_num + 1),
    );
    let den = supporting_lines(
        |x| 0.5 * c * x * x,
        |x| c * x,
        &anchors(grid, deg_den + 1),
    );
    let (num, den, iters) = tropical_descent(num, Some(den), target, grid)?;
    let activation = Activation::TropicalRational(TropicalRationalActivation {
        numerator: num,
        denominator: den.unwrap(),
    });
    Ok(evaluate_fit(
        activation,
        target,
        grid,
        FitMode::HermiteInterp,
        iters,
    ))
}

/// Fit a single (convex) tropical polynomial; useful as the convex baseline
/// the rational fit is compared against.
pub fn fit_tropical_poly(
    target: &Activation,
    degree: usize,
    grid: FitGrid,
) -> Result<FitResult, FitError> {
    let num = supporting_lines(
        |x| target.eval(x),
        |x| target.deriv(x),
        &anchors(grid, degree + 1),
    );
    let (num, _, iters) = tropical_descent(num, None, target, grid)?;
    let activation = Activation::TropicalRational(TropicalRationalActivation {
        numerator: num,
        denominator: TropicalPolynomial::new(vec![0.0], vec![0.0]),
    });
    Ok(evaluate_fit(
        activation,
        target,
        grid,
        FitMode::HermiteInterp,
        iters,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_linear_fit_has_residual() {
        let r = fit(
            &Activation::relu(),
            Family::Hermite,
            1,
            FitGrid::new(-4.0, 4.0, 101).unwrap(),
            FitMode::Lagrange,
        )
        .unwrap();
        assert!(r.value_rmse > 0.1, "{}", r.value_rmse);
    }

    #[test]
    fn gelu_hermite_fit_improves_with_degree() {
        let grid = FitGrid::default_window();
        let d3 = fit(&Activation::gelu(), Family::Hermite, 3, grid, FitMode::HermiteInterp).unwrap();
        let d8 = fit(&Activation::gelu(), Family::Hermite, 8, grid, FitMode::HermiteInterp).unwrap();
        assert!(d8.value_rmse < d3.value_rmse, "{} vs {}", d8.value_rmse, d3.value_rmse);
    }

    #[test]
    fn monotone_improvement_in_degree() {
        let grid = FitGrid::default_window();
        let mut prev = f64::INFINITY;
        for degree in 1..=8 {
            let r = fit(&Activation::gelu(), Family::Hermite, degree, grid, FitMode::Lagrange).unwrap();
            assert!(r.value_rmse <= prev + 1e-12, "degree {degree}");
            prev = r.value_rmse;
        }
    }

    #[test]
    fn fourier_lagrange_aliases_in_derivative() {
        let grid = FitGrid::default_window();
        let lag = fit(&Activation::gelu(), Family::Fourier, 6, grid, FitMode::Lagrange).unwrap();
        let her = fit(&Activation::gelu(), Family::Fourier, 6, grid, FitMode::HermiteInterp).unwrap();
        assert!(
            lag.deriv_rmse > her.deriv_rmse,
            "{} vs {}",
            lag.deriv_rmse,
            her.deriv_rmse
        );
    }

    #[test]
    fn hermite_interp_dominates_on_derivatives() {
        let grid = FitGrid::default_window();
        for family in [Family::Hermite, Family::Fourier] {
            let lag = fit(&Activation::gelu(), family, 5, grid, FitMode::Lagrange).unwrap();
            let her = fit(&Activation::gelu(), family, 5, grid, FitMode::HermiteInterp).unwrap();
            assert!(her.deriv_rmse <= lag.deriv_rmse + 1e-12, "{family:?}");
        }
    }

    #[test]
    fn self_recovery_is_exact() {
        let grid = FitGrid::default_window();
        let g = Activation::Hermite(HermiteActivation::new(vec![0.3, 1.0, -0.4, 0.2, 0.05]));
        let r = fit(&g, Family::Hermite, 4, grid, FitMode::HermiteInterp).unwrap();
        assert!(r.value_rmse <= 1e-10, "{}", r.value_rmse);
        if let (Activation::Hermite(orig), Activation::Hermite(fitted)) = (&g, &r.activation) {
            for (a, b) in orig.coeffs.iter().zip(&fitted.coeffs) {
                assert!((a - b).abs() <= 1e-8);
            }
        } else {
            panic!();
        }

        let f = Activation::Fourier(FourierActivation::new(0.7, vec![1.0, -0.5, 0.2]));
        let r = fit(&f, Family::Fourier, 3, grid, FitMode::Lagrange).unwrap();
        assert!(r.value_rmse <= 1e-10, "{}", r.value_rmse);
    }

    #[test]
    fn too_small_grid_rejected() {
        let grid = FitGrid::new(-4.0, 4.0, 10).unwrap();
        assert!(matches!(
            fit(&Activation::gelu(), Family::Hermite, 8, grid, FitMode::Lagrange),
            Err(FitError::InvalidGrid(_))
        ));
        assert!(FitGrid::new(4.0, -4.0, 100).is_err());
        assert!(FitGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn parabola_supporting_lines_exact_at_integers() {
        // max_{k=-3..3} {kx - k^2/2} touches x^2/2 at integer x
        let slopes: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        let offsets: Vec<f64> = (-3..=3).map(|k| -(k * k) as f64 / 2.0).collect();
        let p = TropicalPolynomial::new(slopes, offsets);
        for k in -3..=3 {
            let x = k as f64;
            assert!((p.eval(x) - x * x / 2.0).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn relu_tropical_fit_is_exact() {
        let r = fit_tropical_poly(&Activation::relu(), 1, FitGrid::default_window()).unwrap();
        assert!(r.value_rmse <= 1e-9, "{}", r.value_rmse);
    }

    #[test]
    fn rational_beats_convex_on_gelu() {
        let grid = FitGrid::default_window();
        let rational = fit_tropical_rational(&Activation::gelu(), 6, 6, grid).unwrap();
        let convex = fit_tropical_poly(&Activation::gelu(), 6, grid).unwrap();
        assert!(
            rational.value_rmse < convex.value_rmse,
            "{} vs {}",
            rational.value_rmse,
            convex.value_rmse
        );
    }
}
