//! Learnable activation families: Hermite, Fourier (amplitude-phase form),
//! tropical polynomial, tropical rational, plus the classical references
//! (ReLU, exact GELU, SiLU) used as fitting targets and baselines.

use crate::basis::{factorial, hermite_recursive};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::sync::atomic::{AtomicU64, Ordering};

/// Diagnostic-only counter of non-finite activation outputs. Inputs are never
/// clamped; this only records that an overflow happened.
static NON_FINITE_EVALS: AtomicU64 = AtomicU64::new(0);

pub fn non_finite_eval_count() -> u64 {
    NON_FINITE_EVALS.load(Ordering::Relaxed)
}

fn record(y: f64) -> f64 {
    if !y.is_finite() {
        NON_FINITE_EVALS.fetch_add(1, Ordering::Relaxed);
    }
    y
}

/// `F(x) = sum_{k=0}^{n} a_k He_k(x) / k!`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteActivation {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl HermiteActivation {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        HermiteActivation {
            degree: coeffs.len() - 1,
            coeffs,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let he = hermite_recursive(x, self.degree);
        let mut acc = 0.0;
        for (k, (&a, &h)) in self.coeffs.iter().zip(&he).enumerate() {
            acc += a / factorial(k as u32) * h;
        }
        acc
    }

    pub fn deriv(&self, x: f64) -> f64 {
        // F'(x) = sum_{k=1}^{n} a_k He_{k-1}(x) / (k-1)!
        if self.degree == 0 {
            return 0.0;
        }
        let he = hermite_recursive(x, self.degree - 1);
        let mut acc = 0.0;
        for k in 1..=self.degree {
            acc += self.coeffs[k] / factorial(k as u32 - 1) * he[k - 1];
        }
        acc
    }

    /// `dF/da_k = He_k(x)/k!`
    pub fn param_grad(&self, x: f64) -> Vec<f64> {
        hermite_recursive(x, self.degree)
            .iter()
            .enumerate()
            .map(|(k, &h)| h / factorial(k as u32))
            .collect()
    }

    /// Second derivative, used by derivative-matching fits of the basis itself.
    pub fn param_grad_deriv(&self, x: f64) -> Vec<f64> {
        // d/dx of He_k(x)/k! = He_{k-1}(x)/(k-1)!
        let he = if self.degree >= 1 {
            hermite_recursive(x, self.degree - 1)
        } else {
            vec![]
        };
        (0..=self.degree)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    he[k - 1] / factorial(k as u32 - 1)
                }
            })
            .collect()
    }
}

/// `F(x) = a0 + sqrt(2) sum_{k=1}^{n} a_k cos(f_k w' x - phi_k) / k!`
///
/// With `f_k = k`, `phi_k = pi/4`, `w' = 1` this is the sine-cosine series
/// with equal cosine and sine coefficients, since
/// `sqrt(2) cos(t - pi/4) = cos(t) + sin(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierActivation {
    pub degree: usize,
    pub a0: f64,
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    #[serde(default = "one")]
    pub fundamental_scale: f64,
    #[serde(default = "yes")]
    pub learnable_frequencies: bool,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

/// Fundamental-frequency rescale for inputs uniform on `(-sqrt(3), sqrt(3))`.
pub const FUNDAMENTAL_SCALE_UNIT_VARIANCE: f64 = std::f64::consts::PI / 1.732_050_807_568_877_2;

impl FourierActivation {
    pub fn new(a0: f64, amplitudes: Vec<f64>) -> Self {
        let n = amplitudes.len();
        assert!(n >= 1);
        FourierActivation {
            degree: n,
            a0,
            amplitudes,
            frequencies: (1..=n).map(|k| k as f64).collect(),
            phases: vec![FRAC_PI_4; n],
            fundamental_scale: 1.0,
            learnable_frequencies: true,
        }
    }

    fn theta(&self, k: usize, x: f64) -> f64 {
        self.frequencies[k] * self.fundamental_scale * x - self.phases[k]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.a0;
        for k in 0..self.degree {
            acc += SQRT_2 * self.amplitudes[k] * self.theta(k, x).cos() / factorial(k as u32 + 1);
        }
        acc
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let w = self.fundamental_scale;
        let mut acc = 0.0;
        for k in 0..self.degree {
            acc -= SQRT_2 * self.amplitudes[k] * self.frequencies[k] * w * self.theta(k, x).sin()
                / factorial(k as u32 + 1);
        }
        acc
    }

    /// Gradient over `[a0, amplitudes.., frequencies.., phases..]`.
    pub fn param_grad(&self, x: f64) -> Vec<f64> {
        let w = self.fundamental_scale;
        let n = self.degree;
        let mut g = Vec::with_capacity(1 + 3 * n);
        g.push(1.0);
        for k in 0..n {
            g.push(SQRT_2 * self.theta(k, x).cos() / factorial(k as u32 + 1));
        }
        for k in 0..n {
            g.push(
                -SQRT_2 * self.amplitudes[k] * w * x * self.theta(k, x).sin()
                    / factorial(k as u32 + 1),
            );
        }
        for k in 0..n {
            g.push(SQRT_2 * self.amplitudes[k] * self.theta(k, x).sin() / factorial(k as u32 + 1));
        }
        g
    }

    /// Equivalent sine-cosine coefficients `(a_k, b_k)`; only meaningful when
    /// the frequencies are harmonic (`f_k = k`).
    pub fn sine_cosine_coeffs(&self) -> Vec<(f64, f64)> {
        (0..self.degree)
            .map(|k| {
                let a = SQRT_2 * self.amplitudes[k] * self.phases[k].cos();
                let b = SQRT_2 * self.amplitudes[k] * self.phases[k].sin();
                (a, b)
            })
            .collect()
    }

    pub fn has_harmonic_frequencies(&self) -> bool {
        self.frequencies
            .iter()
            .enumerate()
            .all(|(k, &f)| (f - (k as f64 + 1.0)).abs() < 1e-12)
            && (self.fundamental_scale - 1.0).abs() < 1e-12
    }
}

/// Scaled tropical polynomial `F(x) = scale * max_k { a_k + k x }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalActivation {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub scale: f64,
}

impl TropicalActivation {
    pub fn new(coeffs: Vec<f64>, scale: f64) -> Self {
        assert!(coeffs.len() >= 2);
        TropicalActivation {
            degree: coeffs.len() - 1,
            coeffs,
            scale,
        }
    }

    /// Index of the maximal affine piece; ties resolve to the largest k.
    pub fn argmax(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (k, &a) in self.coeffs.iter().enumerate() {
            let v = a + k as f64 * x;
            if v >= best_v {
                best_v = v;
                best = k;
            }
        }
        best
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| a + k as f64 * x)
            .fold(f64::NEG_INFINITY, f64::max);
        self.scale * m
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.scale * self.argmax(x) as f64
    }

    pub fn param_grad(&self, x: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.coeffs.len()];
        g[self.argmax(x)] = self.scale;
        g
    }
}

/// Tropical polynomial in the general sense: arbitrary real slopes per piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalPolynomial {
    pub slopes: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl TropicalPolynomial {
    pub fn new(slopes: Vec<f64>, offsets: Vec<f64>) -> Self {
        assert_eq!(slopes.len(), offsets.len());
        assert!(!slopes.is_empty());
        TropicalPolynomial { slopes, offsets }
    }

    pub fn argmax(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..self.slopes.len() {
            let v = self.offsets[i] + self.slopes[i] * x;
            if v >= best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }

    pub fn eval(&self, x: f64) -> f64 {
        (0..self.slopes.len())
            .map(|i| self.offsets[i] + self.slopes[i] * x)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn subgradient(&self, x: f64) -> f64 {
        self.slopes[self.argmax(x)]
    }
}

/// Tropical quotient `F(x) = F1(x) - F2(x)`: a difference of convex
/// piecewise-affine functions, so it can be non-convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalRationalActivation {
    pub numerator: TropicalPolynomial,
    pub denominator: TropicalPolynomial,
}

impl TropicalRationalActivation {
    pub fn eval(&self, x: f64) -> f64 {
        self.numerator.eval(x) - self.denominator.eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.numerator.subgradient(x) - self.denominator.subgradient(x)
    }

    /// Gradient over `[numerator offsets.., denominator offsets..]`.
    pub fn param_grad(&self, x: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.numerator.offsets.len() + self.denominator.offsets.len()];
        g[self.numerator.argmax(x)] = 1.0;
        g[self.numerator.offsets.len() + self.denominator.argmax(x)] = -1.0;
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicalKind {
    ReLU,
    GELU,
    SiLU,
}

impl ClassicalKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ClassicalKind::ReLU => x.max(0.0),
            // exact erf-based form, not the tanh approximation
            ClassicalKind::GELU => 0.5 * x * (1.0 + libm::erf(x / SQRT_2)),
            ClassicalKind::SiLU => x * sigmoid(x),
        }
    }

    pub fn deriv(self, x: f64) -> f64 {
        match self {
            ClassicalKind::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ClassicalKind::GELU => {
                let cdf = 0.5 * (1.0 + libm::erf(x / SQRT_2));
                let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
                cdf + x * pdf
            }
            ClassicalKind::SiLU => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Union of every supported activation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Activation {
    Hermite(HermiteActivation),
    Fourier(FourierActivation),
    Tropical(TropicalActivation),
    TropicalRational(TropicalRationalActivation),
    Classical { kind: ClassicalKind },
}

impl Activation {
    pub fn relu() -> Self {
        Activation::Classical {
            kind: ClassicalKind::ReLU,
        }
    }

    pub fn gelu() -> Self {
        Activation::Classical {
            kind: ClassicalKind::GELU,
        }
    }

    pub fn silu() -> Self {
        Activation::Classical {
            kind: ClassicalKind::SiLU,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        record(match self {
            Activation::Hermite(a) => a.eval(x),
            Activation::Fourier(a) => a.eval(x),
            Activation::Tropical(a) => a.eval(x),
            Activation::TropicalRational(a) => a.eval(x),
            Activation::Classical { kind } => kind.eval(x),
        })
    }

    pub fn deriv(&self, x: f64) -> f64 {
        record(match self {
            Activation::Hermite(a) => a.deriv(x),
            Activation::Fourier(a) => a.deriv(x),
            Activation::Tropical(a) => a.deriv(x),
            Activation::TropicalRational(a) => a.deriv(x),
            Activation::Classical { kind } => kind.deriv(x),
        })
    }

    /// Gradient of `F(x)` with respect to every learnable field, in the same
    /// order as [`Activation::params`]. Classical activations have none.
    pub fn param_grad(&self, x: f64) -> Vec<f64> {
        match self {
            Activation::Hermite(a) => a.param_grad(x),
            Activation::Fourier(a) => a.param_grad(x),
            Activation::Tropical(a) => a.param_grad(x),
            Activation::TropicalRational(a) => a.param_grad(x),
            Activation::Classical { .. } => vec![],
        }
    }

    pub fn eval_batch(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn deriv_batch(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.deriv(x)).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Activation::Hermite(a) => a.coeffs.clone(),
            Activation::Fourier(a) => {
                let mut p = vec![a.a0];
                p.extend(&a.amplitudes);
                p.extend(&a.frequencies);
                p.extend(&a.phases);
                p
            }
            Activation::Tropical(a) => a.coeffs.clone(),
            Activation::TropicalRational(a) => {
                let mut p = a.numerator.offsets.clone();
                p.extend(&a.denominator.offsets);
                p
            }
            Activation::Classical { .. } => vec![],
        }
    }

    pub fn set_params(&mut self, params: &[f64]) {
        match self {
            Activation::Hermite(a) => {
                assert_eq!(params.len(), a.coeffs.len());
                a.coeffs.copy_from_slice(params);
            }
            Activation::Fourier(a) => {
                let n = a.degree;
                assert_eq!(params.len(), 1 + 3 * n);
                a.a0 = params[0];
                a.amplitudes.copy_from_slice(&params[1..1 + n]);
                a.frequencies.copy_from_slice(&params[1 + n..1 + 2 * n]);
                a.phases.copy_from_slice(&params[1 + 2 * n..]);
            }
            Activation::Tropical(a) => {
                assert_eq!(params.len(), a.coeffs.len());
                a.coeffs.copy_from_slice(params);
            }
            Activation::TropicalRational(a) => {
                let m = a.numerator.offsets.len();
                assert_eq!(params.len(), m + a.denominator.offsets.len());
                a.numerator.offsets.copy_from_slice(&params[..m]);
                a.denominator.offsets.copy_from_slice(&params[m..]);
            }
            Activation::Classical { .. } => assert!(params.is_empty()),
        }
    }

    /// Which entries of [`Activation::params`] are trainable. Frequencies and
    /// phases of a Fourier activation can be frozen for ablation parity.
    pub fn trainable_mask(&self) -> Vec<bool> {
        match self {
            Activation::Fourier(a) => {
                let mut m = vec![true; 1 + a.degree];
                m.extend(vec![a.learnable_frequencies; 2 * a.degree]);
                m
            }
            other => vec![true; other.params().len()],
        }
    }

    /// Per-evaluation FLOP accounting: tropical `3d+1`, Fourier `7d+1`,
    /// Hermite `4d+1`, GELU 12.
    pub fn flops_per_eval(&self) -> u64 {
        match self {
            Activation::Hermite(a) => 4 * a.degree as u64 + 1,
            Activation::Fourier(a) => 7 * a.degree as u64 + 1,
            Activation::Tropical(a) => 3 * a.degree as u64 + 1,
            Activation::TropicalRational(a) => {
                let m = a.numerator.slopes.len() as u64 - 1;
                let n = a.denominator.slopes.len() as u64 - 1;
                (3 * m + 1) + (3 * n + 1) + 1
            }
            Activation::Classical { kind } => match kind {
                ClassicalKind::ReLU => 1,
                ClassicalKind::GELU => 12,
                ClassicalKind::SiLU => 5,
            },
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Activation::Hermite(_) => "Hermite",
            Activation::Fourier(_) => "Fourier",
            Activation::Tropical(_) => "Tropical",
            Activation::TropicalRational(_) => "Tropical_rational",
            Activation::Classical { kind } => match kind {
                ClassicalKind::ReLU => "ReLU",
                ClassicalKind::GELU => "GELU",
                ClassicalKind::SiLU => "SiLU",
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn fd_deriv(act: &Activation, x: f64) -> f64 {
        let h = 1e-5;
        (act.eval(x + h) - act.eval(x - h)) / (2.0 * h)
    }

    #[test]
    fn tropical_all_pieces_equal() {
        let a = Activation::Tropical(TropicalActivation::new(vec![1.0, 1.0, 1.0], SQRT_2 / 2.0));
        assert!((a.eval(0.0) - SQRT_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn hermite_identity_term() {
        let a = Activation::Hermite(HermiteActivation::new(vec![0.0, 1.0, 0.0, 0.0]));
        assert!((a.eval(5.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_single_term() {
        let a = Activation::Fourier(FourierActivation::new(0.0, vec![1.0]));
        // sqrt(2) * cos(-pi/4) = 1
        assert!((a.eval(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermite_deriv_quadratic() {
        // F = (x^2-1)/2 so F' = x
        let a = Activation::Hermite(HermiteActivation::new(vec![0.0, 0.0, 1.0, 0.0]));
        assert!((a.deriv(2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tropical_top_slope() {
        let a = Activation::Tropical(TropicalActivation::new(vec![1.0; 7], SQRT_2 / 6.0));
        assert!((a.deriv(1.0) - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn all_families_match_finite_difference() {
        let acts = vec![
            Activation::Hermite(HermiteActivation::new(vec![0.3, 1.0, -0.5, 0.2])),
            Activation::Fourier(FourierActivation::new(0.4, vec![1.0, -0.7, 0.3])),
            Activation::Tropical(TropicalActivation::new(vec![1.0, 0.5, -0.2, 0.8], 0.3)),
            Activation::TropicalRational(TropicalRationalActivation {
                numerator: TropicalPolynomial::new(vec![0.0, 1.0, 2.0], vec![0.1, -0.3, 0.2]),
                denominator: TropicalPolynomial::new(vec![-1.0, 0.5], vec![0.0, 0.4]),
            }),
            Activation::gelu(),
            Activation::silu(),
        ];
        let rng = CounterRng::new(3);
        for act in &acts {
            let piecewise = matches!(
                act,
                Activation::Tropical(_) | Activation::TropicalRational(_)
            );
            let mut checked = 0;
            let mut i = 0;
            while checked < 200 {
                let x = rng.uniform(i, -3.0, 3.0);
                i += 1;
                if piecewise {
                    // skip near breakpoints where the subgradient jumps
                    let d1 = act.deriv(x - 2e-3);
                    let d2 = act.deriv(x + 2e-3);
                    if (d1 - d2).abs() > 1e-9 {
                        continue;
                    }
                }
                let fd = fd_deriv(act, x);
                assert!(
                    (act.deriv(x) - fd).abs() <= 1e-6,
                    "{}: x={x} {} vs {fd}",
                    act.family_name(),
                    act.deriv(x)
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn hermite_param_grad_at_zero() {
        let a = Activation::Hermite(HermiteActivation::new(vec![0.0, 0.0, 0.0]));
        assert_eq!(a.param_grad(0.0), vec![1.0, 0.0, -0.5]);
    }

    #[test]
    fn tropical_param_grad_unique_argmax() {
        let scale = 0.7;
        let a = Activation::Tropical(TropicalActivation::new(vec![5.0, 0.0, 0.0], scale));
        assert_eq!(a.param_grad(0.0), vec![scale, 0.0, 0.0]);
    }

    #[test]
    fn fourier_param_grad_matches_finite_difference() {
        let act = Activation::Fourier(FourierActivation::new(0.3, vec![0.8, -0.5]));
        let rng = CounterRng::new(9);
        let h = 1e-6;
        for i in 0..20 {
            let x = rng.uniform(i, -2.0, 2.0);
            let grad = act.param_grad(x);
            let params = act.params();
            for (j, g) in grad.iter().enumerate() {
                let mut plus = act.clone();
                let mut minus = act.clone();
                let mut p = params.clone();
                p[j] += h;
                plus.set_params(&p);
                p[j] -= 2.0 * h;
                minus.set_params(&p);
                let fd = (plus.eval(x) - minus.eval(x)) / (2.0 * h);
                assert!((g - fd).abs() <= 1e-6, "param {j}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn batch_is_identical_to_scalar() {
        let act = Activation::Hermite(HermiteActivation::new(vec![0.5, 1.0, -0.3]));
        let xs = [-2.0, 0.0, 1.5];
        let batch = act.eval_batch(&xs);
        let dbatch = act.deriv_batch(&xs);
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(batch[i].to_bits(), act.eval(x).to_bits());
            assert_eq!(dbatch[i].to_bits(), act.deriv(x).to_bits());
        }
    }

    #[test]
    fn flop_accounting_matches_table() {
        let trop = Activation::Tropical(TropicalActivation::new(vec![1.0; 7], SQRT_2 / 6.0));
        let four = Activation::Fourier(FourierActivation::new(1.0, vec![1.0; 6]));
        let herm = Activation::Hermite(HermiteActivation::new(vec![1.0; 4]));
        assert_eq!(trop.flops_per_eval(), 19);
        assert_eq!(four.flops_per_eval(), 43);
        assert_eq!(herm.flops_per_eval(), 13);
        assert_eq!(Activation::gelu().flops_per_eval(), 12);
    }

    #[test]
    fn amplitude_phase_equals_sine_cosine_form() {
        // with f_k = k, phi_k = pi/4: F(x) = a0 + sum (a_k cos(kx) + a_k sin(kx))/k!
        let amps = vec![0.7, -0.4, 1.2];
        let act = FourierActivation::new(0.3, amps.clone());
        let rng = CounterRng::new(5);
        for i in 0..1000 {
            let x = rng.uniform(i, -6.0, 6.0);
            let mut direct = 0.3;
            for (k, &a) in amps.iter().enumerate() {
                let kk = k as f64 + 1.0;
                direct += a * ((kk * x).cos() + (kk * x).sin()) / factorial(k as u32 + 1);
            }
            assert!((act.eval(x) - direct).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn tropical_matches_scaled_relu() {
        let n = 6;
        let act = TropicalActivation::new(vec![1.0; n + 1], SQRT_2 / n as f64);
        let rng = CounterRng::new(8);
        for i in 0..1000 {
            let x = rng.uniform(i, -8.0, 8.0);
            let want = SQRT_2 * x.max(0.0) + SQRT_2 / n as f64;
            assert!((act.eval(x) - want).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn fourier_deriv_is_bounded() {
        // |F'| <= sum sqrt(a_k^2 + b_k^2)/(k-1)! <= e * max_k sqrt(a_k^2 + b_k^2)
        let act = FourierActivation::new(0.5, vec![1.0, 1.0, 1.0, 1.0]);
        let bound = std::f64::consts::E
            * act
                .sine_cosine_coeffs()
                .iter()
                .map(|&(a, b)| a.hypot(b))
                .fold(0.0, f64::max);
        let rng = CounterRng::new(2);
        for i in 0..100_000 {
            let x = rng.uniform(i, -50.0, 50.0);
            assert!(act.deriv(x).abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn hermite_deriv_grows_unbounded() {
        let act = HermiteActivation::new(vec![
            (1.0f64 - 1.0 / 6.0).sqrt(),
            1.0,
            1.0,
            1.0,
        ]);
        assert!(act.deriv(10.0).abs() > act.deriv(2.0).abs());
    }

    #[test]
    fn non_finite_propagates_and_is_counted() {
        let act = Activation::Hermite(HermiteActivation::new(vec![0.0, 1.0]));
        let before = non_finite_eval_count();
        assert!(act.eval(f64::NAN).is_nan());
        assert!(non_finite_eval_count() > before);
    }

    #[test]
    fn serde_round_trip_is_lossless() {
        let acts = vec![
            Activation::Hermite(HermiteActivation::new(vec![0.1234567890123456, -1.0 / 3.0])),
            Activation::Fourier(FourierActivation::new(std::f64::consts::PI, vec![1e-17, 2.5])),
            Activation::Tropical(TropicalActivation::new(vec![1.0, 0.3], SQRT_2 / 6.0)),
            Activation::gelu(),
        ];
        for act in acts {
            let json = serde_json::to_string(&act).unwrap();
            let back: Activation = serde_json::from_str(&json).unwrap();
            assert_eq!(act, back, "{json}");
        }
    }
}
