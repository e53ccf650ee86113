//! Second moments, forward/backward gains, and the variance-preserving
//! initializers, with Monte-Carlo verification.
//!
//! Gains follow the convention of the initialization analysis: the input
//! signal is normalized to unit variance, so the forward gain is
//! `1 / E[F(x)^2]` and the backward gain `1 / E[F'(x)^2]`, with the
//! expectation taken under the family's reference distribution (standard
//! normal for Hermite and ReLU, uniform for Fourier).

use crate::activations::{Activation, ClassicalKind, FourierActivation, TropicalActivation};
use crate::basis::factorial;
use crate::rng::CounterRng;
use serde::Serialize;
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GainError {
    #[error("no closed-form second moment for family {0}")]
    UnsupportedFamily(&'static str),
    #[error("activation is degenerate: {0}")]
    DegenerateActivation(&'static str),
    #[error("Fourier closed form requires harmonic frequencies (f_k = k, unit fundamental)")]
    NonHarmonicFrequencies,
    #[error("at least {0} samples required")]
    TooFewSamples(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InputDist {
    StdNormal,
    /// Uniform on (-pi, pi); the Fourier orthogonality interval.
    UniformPi,
    /// Uniform on (-sqrt(3), sqrt(3)); unit variance.
    UniformSqrt3,
}

impl InputDist {
    pub fn sample(self, rng: &CounterRng, index: u64) -> f64 {
        match self {
            InputDist::StdNormal => rng.normal(index),
            InputDist::UniformPi => {
                rng.uniform(index, -std::f64::consts::PI, std::f64::consts::PI)
            }
            InputDist::UniformSqrt3 => {
                let s = 1.732_050_807_568_877_2;
                rng.uniform(index, -s, s)
            }
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            InputDist::StdNormal => 1.0,
            InputDist::UniformPi => std::f64::consts::PI * std::f64::consts::PI / 3.0,
            InputDist::UniformSqrt3 => 1.0,
        }
    }
}

impl std::str::FromStr for InputDist {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "stdnormal" | "gauss" => Ok(InputDist::StdNormal),
            "uniform-pi" | "uniformpi" => Ok(InputDist::UniformPi),
            "uniform-sqrt3" | "uniformsqrt3" => Ok(InputDist::UniformSqrt3),
            other => Err(format!("unknown input distribution '{other}'")),
        }
    }
}

/// Analytic and Monte-Carlo gains for one activation.
#[derive(Debug, Clone, Serialize)]
pub struct GainReport {
    pub family: String,
    pub input_dist: InputDist,
    pub samples: u64,
    pub analytic_forward: Option<f64>,
    pub analytic_backward: Option<f64>,
    pub mc_forward: f64,
    pub mc_backward: f64,
    pub rel_err_forward: Option<f64>,
    pub rel_err_backward: Option<f64>,
    /// Samples whose activation value or derivative was non-finite; these are
    /// excluded from the moment estimates.
    pub non_finite_samples: u64,
    /// Empirical coefficient of variation of F(x)^2, for error bars.
    pub cv_forward: f64,
}

/// Closed-form `(E[F^2], E[F'^2])` under the family's reference distribution.
pub fn analytic_second_moment(activation: &Activation) -> Result<(f64, f64), GainError> {
    match activation {
        Activation::Hermite(a) => {
            let fwd: f64 = a
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * c / factorial(k as u32))
                .sum();
            let bwd: f64 = a
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * c / factorial(k as u32 - 1))
                .sum();
            Ok((fwd, bwd))
        }
        Activation::Fourier(f) => {
            if !f.has_harmonic_frequencies() {
                return Err(GainError::NonHarmonicFrequencies);
            }
            let sc = f.sine_cosine_coeffs();
            let mut fwd = f.a0 * f.a0;
            let mut bwd = 0.0;
            for (i, &(a, b)) in sc.iter().enumerate() {
                let k = i as u32 + 1;
                fwd += 0.5 * (a * a + b * b) / (factorial(k) * factorial(k));
                bwd += 0.5 * (a * a + b * b) / (factorial(k - 1) * factorial(k - 1));
            }
            Ok((fwd, bwd))
        }
        Activation::Classical {
            kind: ClassicalKind::ReLU,
        } => Ok((0.5, 0.5)),
        other => Err(GainError::UnsupportedFamily(other.family_name())),
    }
}

/// Closed-form `(alpha, alpha')`.
pub fn analytic_gains(activation: &Activation) -> Result<(f64, f64), GainError> {
    let (fwd, bwd) = analytic_second_moment(activation)?;
    if fwd == 0.0 {
        return Err(GainError::DegenerateActivation("E[F^2] = 0"));
    }
    if bwd == 0.0 {
        return Err(GainError::DegenerateActivation(
            "E[F'^2] = 0 (constant activation)",
        ));
    }
    Ok((1.0 / fwd, 1.0 / bwd))
}

/// The reference distribution each family's closed form assumes.
pub fn reference_dist(activation: &Activation) -> InputDist {
    match activation {
        Activation::Fourier(_) => InputDist::UniformPi,
        _ => InputDist::StdNormal,
    }
}

struct ChunkMoments {
    sum_f2: f64,
    sum_f4: f64,
    sum_d2: f64,
    count: u64,
    non_finite: u64,
}

fn chunk_moments(activation: &Activation, dist: InputDist, rng: &CounterRng, lo: u64, hi: u64) -> ChunkMoments {
    let mut m = ChunkMoments {
        sum_f2: 0.0,
        sum_f4: 0.0,
        sum_d2: 0.0,
        count: 0,
        non_finite: 0,
    };
    for i in lo..hi {
        let x = dist.sample(rng, i);
        let f = activation.eval(x);
        let d = activation.deriv(x);
        if f.is_finite() && d.is_finite() {
            m.sum_f2 += f * f;
            m.sum_f4 += f * f * f * f;
            m.sum_d2 += d * d;
            m.count += 1;
        } else {
            m.non_finite += 1;
        }
    }
    m
}

fn worker_count() -> usize {
    let cap = std::env::var("ORTHOACT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    cap.unwrap_or(avail).max(1)
}

/// Estimate the gains by sampling. Deterministic given `seed` and independent
/// of the worker count: samples are indexed by a counter-based stream and
/// fixed-size chunks are merged in index order.
pub fn monte_carlo_gains(
    activation: &Activation,
    dist: InputDist,
    samples: u64,
    seed: u64,
) -> Result<GainReport, GainError> {
    if samples < 10_000 {
        return Err(GainError::TooFewSamples(10_000));
    }
    let rng = CounterRng::new(seed);
    const CHUNK: u64 = 65_536;
    let n_chunks = samples.div_ceil(CHUNK);
    let workers = worker_count().min(n_chunks as usize);

    let mut chunks: Vec<Option<ChunkMoments>> = Vec::with_capacity(n_chunks as usize);
    chunks.resize_with(n_chunks as usize, || None);
    let chunks = std::sync::Mutex::new(chunks);
    let next = std::sync::atomic::AtomicU64::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let c = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if c >= n_chunks {
                    break;
                }
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(samples);
                let m = chunk_moments(activation, dist, &rng, lo, hi);
                chunks.lock().unwrap()[c as usize] = Some(m);
            });
        }
    });
    let chunks = chunks.into_inner().unwrap();

    let (mut sum_f2, mut sum_f4, mut sum_d2) = (0.0, 0.0, 0.0);
    let (mut count, mut non_finite) = (0u64, 0u64);
    for m in chunks.into_iter().flatten() {
        sum_f2 += m.sum_f2;
        sum_f4 += m.sum_f4;
        sum_d2 += m.sum_d2;
        count += m.count;
        non_finite += m.non_finite;
    }
    if count == 0 {
        return Err(GainError::DegenerateActivation("all samples non-finite"));
    }
    let n = count as f64;
    let ef2 = sum_f2 / n;
    let ed2 = sum_d2 / n;
    let mc_forward = 1.0 / ef2;
    let mc_backward = 1.0 / ed2;
    let cv_forward = if ef2 > 0.0 {
        ((sum_f4 / n - ef2 * ef2).max(0.0)).sqrt() / ef2
    } else {
        0.0
    };

    let analytic = analytic_gains(activation).ok();
    let (analytic_forward, analytic_backward) = match analytic {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let rel = |mc: f64, an: Option<f64>| an.map(|a| (mc - a).abs() / a.abs());
    Ok(GainReport {
        family: activation.family_name().to_string(),
        input_dist: dist,
        samples,
        analytic_forward,
        analytic_backward,
        mc_forward,
        mc_backward,
        rel_err_forward: rel(mc_forward, analytic_forward),
        rel_err_backward: rel(mc_backward, analytic_backward),
        non_finite_samples: non_finite,
        cv_forward,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Hermite,
    Fourier,
    Tropical,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hermite" => Ok(Family::Hermite),
            "fourier" => Ok(Family::Fourier),
            "tropical" => Ok(Family::Tropical),
            other => Err(format!("unknown learnable family '{other}'")),
        }
    }
}

/// `I_0(2) = sum_k 1/(k!)^2`, the limit of the Fourier gain sums.
pub fn bessel_i0_of_2() -> f64 {
    (0..30)
        .map(|k| {
            let f = factorial(k);
            1.0 / (f * f)
        })
        .sum()
}

/// Theorem-based variance-preserving initialization. With `unit_gain` the
/// coefficients are rescaled by `1/sqrt(e)` (Hermite) or `1/sqrt(I_0(2))`
/// (Fourier) so the limit gains become unitary. Tropical init is already the
/// scaled form.
pub fn init_theorem(family: Family, degree: usize, unit_gain: bool) -> Activation {
    match family {
        Family::Hermite => {
            let n = degree;
            let mut coeffs = vec![1.0; n + 1];
            coeffs[0] = (1.0 - 1.0 / factorial(n as u32)).sqrt();
            if unit_gain {
                let s = std::f64::consts::E.sqrt();
                for c in &mut coeffs {
                    *c /= s;
                }
            }
            Activation::Hermite(crate::activations::HermiteActivation::new(coeffs))
        }
        Family::Fourier => {
            assert!(degree >= 1, "Fourier theorem init needs degree >= 1");
            let nf = factorial(degree as u32);
            let mut a0 = (1.0 - 1.0 / (nf * nf)).sqrt();
            let mut amplitudes = vec![1.0; degree];
            if unit_gain {
                let s = bessel_i0_of_2().sqrt();
                a0 /= s;
                for a in &mut amplitudes {
                    *a /= s;
                }
            }
            Activation::Fourier(FourierActivation::new(a0, amplitudes))
        }
        Family::Tropical => {
            assert!(degree >= 1, "tropical init needs degree >= 1");
            Activation::Tropical(TropicalActivation::new(
                vec![1.0; degree + 1],
                SQRT_2 / degree as f64,
            ))
        }
    }
}

/// He-style weight standard deviation `sqrt(gain / fan_in)`.
pub fn he_style_weight_std(fan_in: usize, gain: f64) -> f64 {
    assert!(fan_in >= 1 && gain > 0.0);
    (gain / fan_in as f64).sqrt()
}
