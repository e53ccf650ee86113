//! Probabilist Hermite polynomials `He_k` and their derivatives.
//!
//! Two evaluation routes are provided: an explicit monomial-table formula
//! (O(degree^2) work, parallelizable over table entries) and the three-term
//! recurrence (O(degree), the default inside activations). They cross-check
//! each other in the tests.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BasisError {
    #[error("degree must be non-negative, got {0}")]
    NegativeDegree(i64),
}

/// Precomputed monomial coefficients of `He_i(x)/i!` for `i = 0..=degree`.
///
/// Entry `(i, j)` holds the coefficient `(-1)^j / (j! (i-2j)! 2^j)` of the
/// monomial `x^(i-2j)`, zero when `j > i/2`. Coefficients are formed in
/// log-space so the table stays finite well past degree 30.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    degree: usize,
    coeff_grid: Vec<Vec<f64>>,
    power_grid: Vec<Vec<u32>>,
}

impl HermiteTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeff_grid[i][j]
    }

    pub fn power(&self, i: usize, j: usize) -> u32 {
        self.power_grid[i][j]
    }
}

/// Natural log of `n!`, summed term by term.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

/// `n!` as a float; overflows to infinity past 170.
pub fn factorial(n: u32) -> f64 {
    if n <= 170 {
        (1..=n as u64).map(|k| k as f64).product()
    } else {
        f64::INFINITY
    }
}

pub fn build_hermite_table(degree: i64) -> Result<HermiteTable, BasisError> {
    if degree < 0 {
        return Err(BasisError::NegativeDegree(degree));
    }
    let n = degree as usize;
    let cols = n / 2 + 1;
    let mut coeff_grid = vec![vec![0.0; cols]; n + 1];
    let mut power_grid = vec![vec![0u32; cols]; n + 1];
    for i in 0..=n {
        for j in 0..cols {
            if 2 * j <= i {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let log_mag = -ln_factorial(j as u32)
                    - ln_factorial((i - 2 * j) as u32)
                    - j as f64 * std::f64::consts::LN_2;
                coeff_grid[i][j] = sign * log_mag.exp();
                power_grid[i][j] = (i - 2 * j) as u32;
            }
        }
    }
    Ok(HermiteTable {
        degree: n,
        coeff_grid,
        power_grid,
    })
}

/// Signed power `x^p` as `|x|^p * sign(x)^p`, with `0^0 = 1`.
fn signed_pow(x: f64, p: u32) -> f64 {
    x.abs().powi(p as i32) * x.signum().powi(p as i32)
}

/// Evaluate `[He_0(x)/0!, ..., He_n(x)/n!]` from the explicit table.
pub fn hermite_explicit(x: f64, table: &HermiteTable) -> Vec<f64> {
    (0..=table.degree)
        .map(|i| {
            table.coeff_grid[i]
                .iter()
                .zip(&table.power_grid[i])
                .map(|(&c, &p)| c * signed_pow(x, p))
                .sum()
        })
        .collect()
}

/// Evaluate `[He_0(x), ..., He_n(x)]` by the three-term recurrence
/// `He_k = x He_{k-1} - (k-1) He_{k-2}`.
pub fn hermite_recursive(x: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(x);
    }
    for k in 2..=degree {
        let next = x * out[k - 1] - (k as f64 - 1.0) * out[k - 2];
        out.push(next);
    }
    out
}

/// Derivatives `He'_k(x) = k He_{k-1}(x)` from already-evaluated basis values.
pub fn hermite_derivative_basis(he_values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(he_values.len());
    out.push(0.0);
    for k in 1..he_values.len() {
        out.push(k as f64 * he_values[k - 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_table() {
        let t = build_hermite_table(0).unwrap();
        assert_eq!(t.coeff(0, 0), 1.0);
        assert_eq!(t.power(0, 0), 0);
    }

    #[test]
    fn rejects_negative_degree() {
        assert_eq!(build_hermite_table(-1), Err(BasisError::NegativeDegree(-1)));
    }

    #[test]
    fn degree_two_row() {
        // He_2(x)/2! = (x^2 - 1)/2
        let t = build_hermite_table(2).unwrap();
        assert!((t.coeff(2, 0) - 0.5).abs() < 1e-15);
        assert!((t.coeff(2, 1) + 0.5).abs() < 1e-15);
        assert_eq!(t.power(2, 0), 2);
        assert_eq!(t.power(2, 1), 0);
    }

    #[test]
    fn table_entry_matches_exact_rational() {
        // entry (12, 6): (-1)^6 / (6! * 0! * 2^6)
        let t = build_hermite_table(12).unwrap();
        let exact = 1.0 / (720.0 * 64.0);
        let got = t.coeff(12, 6);
        assert!(got.is_finite());
        assert!((got - exact).abs() <= 1e-15 * exact.abs());
    }

    #[test]
    fn explicit_first_terms() {
        // He_3(x) = x^3 - 3x, so He_3(2)/3! = 2/6
        let t = build_hermite_table(3).unwrap();
        let v = hermite_explicit(2.0, &t);
        assert!((v[3] - 1.0 / 3.0).abs() < 1e-14);
        // He_2(0)/2! = -1/2
        let v0 = hermite_explicit(0.0, &t);
        assert!((v0[2] + 0.5).abs() < 1e-15);
        assert_eq!(v0[0], 1.0);
    }

    #[test]
    fn explicit_matches_recursive() {
        let t = build_hermite_table(8).unwrap();
        let exp = hermite_explicit(1.5, &t);
        let rec = hermite_recursive(1.5, 8);
        for k in 0..=8 {
            assert!(
                (exp[k] - rec[k] / factorial(k as u32)).abs() <= 1e-10,
                "k={k}: {} vs {}",
                exp[k],
                rec[k]
            );
        }
    }

    #[test]
    fn recursive_first_terms() {
        assert_eq!(hermite_recursive(2.0, 3), vec![1.0, 2.0, 3.0, 2.0]);
        assert_eq!(hermite_recursive(0.0, 4), vec![1.0, 0.0, -1.0, 0.0, 3.0]);
    }

    #[test]
    fn recursive_matches_explicit_negative_x() {
        let t = build_hermite_table(10).unwrap();
        let exp = hermite_explicit(-1.3, &t);
        let rec = hermite_recursive(-1.3, 10);
        for k in 0..=10 {
            let want = exp[k] * factorial(k as u32);
            assert!(
                (rec[k] - want).abs() <= 1e-9 * want.abs().max(1.0),
                "k={k}: {} vs {want}",
                rec[k]
            );
        }
    }

    #[test]
    fn derivative_basis_first_terms() {
        // At x=1: He_0..He_3 = [1, 1, 0, -2], derivatives [0, 1, 2, 0]
        let he = hermite_recursive(1.0, 3);
        assert_eq!(he, vec![1.0, 1.0, 0.0, -2.0]);
        assert_eq!(hermite_derivative_basis(&he), vec![0.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-5;
        let x = 0.7;
        let he = hermite_recursive(x, 6);
        let deriv = hermite_derivative_basis(&he);
        let plus = hermite_recursive(x + h, 6);
        let minus = hermite_recursive(x - h, 6);
        for k in 0..=6 {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((deriv[k] - fd).abs() <= 1e-6, "k={k}: {} vs {fd}", deriv[k]);
        }
    }

    #[test]
    fn derivative_identity_random_points() {
        let rng = crate::rng::CounterRng::new(11);
        for i in 0..200 {
            let x = rng.uniform(i, -4.0, 4.0);
            let he = hermite_recursive(x, 10);
            let deriv = hermite_derivative_basis(&he);
            for k in 1..=10 {
                assert_eq!(deriv[k], k as f64 * he[k - 1]);
            }
        }
    }

    #[test]
    fn non_finite_input_propagates() {
        let t = build_hermite_table(4).unwrap();
        assert!(hermite_explicit(f64::NAN, &t)[3].is_nan());
        assert!(!hermite_recursive(f64::INFINITY, 4)[4].is_finite());
    }
}
