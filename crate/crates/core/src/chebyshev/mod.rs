//! Chebyshev polynomials `X_n(x) = U_n(x/2)` and the measures they are
//! paired with on `[-2, 2]`.
//!
//! `X_n` satisfies `X_0 = 1`, `X_1 = x`, `X_{n+1} = x X_n - X_{n-1}`, the same
//! recurrence as the normalized Hecke operators `T_{p^n}`. The family is
//! orthonormal for `mu_inf`, and its `mu_p` moments are `1_{2|n} p^{-n/2}`.

mod measure;
mod quadrature;
mod sampling;

pub use measure::MeasureP;
pub use quadrature::{
    cdf, integrate, integrate_theta, CdfTable, DEFAULT_CDF_TOL, DEFAULT_MOMENT_TOL,
};
pub use sampling::{sample, BISECTION_TOL};

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::numtheory::{Prime, Rational};

/// Largest degree for which exact coefficients are produced.
pub const MAX_EXACT_DEGREE: usize = 64;

/// `X_n` with exact integer coefficients in the monomial basis
/// (`coeffs[j]` multiplies `x^j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChebyshevX {
    coeffs: Vec<i64>,
}

impl ChebyshevX {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Horner evaluation in the monomial basis. Loses accuracy near `|x| = 2`
    /// for large degree; prefer [`cheb_eval`].
    pub fn eval_monomial(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }
}

/// Exact coefficients of `X_n` for `n <= 64`.
pub fn cheb_coeffs(n: usize) -> Result<ChebyshevX> {
    if n > MAX_EXACT_DEGREE {
        return Err(Error::domain(format!(
            "exact coefficients are limited to degree {MAX_EXACT_DEGREE}, got {n}"
        )));
    }
    let mut prev: Vec<i64> = vec![1];
    if n == 0 {
        return Ok(ChebyshevX { coeffs: prev });
    }
    let mut cur: Vec<i64> = vec![0, 1];
    for _ in 1..n {
        let mut next = vec![0i64; cur.len() + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] = c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] = next[j]
                .checked_sub(c)
                .ok_or_else(|| Error::domain("coefficient overflow"))?;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(ChebyshevX { coeffs: cur })
}

/// `X_n(x)` by the three-term recurrence.
pub fn cheb_eval(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0f64, x);
    match n {
        0 => prev,
        _ => {
            for _ in 1..n {
                let next = x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `[X_0(x), ..., X_{n_max}(x)]` in one pass of the recurrence.
pub fn cheb_eval_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(x);
    }
    for n in 2..=n_max {
        out.push(x * out[n - 1] - out[n - 2]);
    }
    out
}

/// `int X_n d(mu_p) = 1_{2|n} p^{-n/2}` as an exact rational.
pub fn moment_closed_form(n: u32, p: Prime) -> Rational {
    if n % 2 == 1 {
        return Rational::from_integer(BigInt::from(0));
    }
    let mut den = BigInt::one();
    for _ in 0..n / 2 {
        den *= p.get();
    }
    Rational::new(BigInt::one(), den)
}

/// Truncation defect of the even-part generating-function identity:
/// `| sum_{k <= K, k even} 2 p^{-k/2} X_k(x) - 2 mu_p(x)/mu_inf(x) |`.
pub fn even_part_identity_check(p: Prime, x: f64, terms: usize) -> Result<f64> {
    if !(x.abs() < 2.0) {
        return Err(Error::domain(format!(
            "x = {x} must lie strictly inside (-2, 2)"
        )));
    }
    let values = cheb_eval_all(terms, x);
    let t = 1.0 / (p.get() as f64).sqrt();
    let mut partial = 0.0;
    let mut weight = 2.0;
    for (k, v) in values.iter().enumerate() {
        if k % 2 == 0 {
            partial += weight * v;
            weight *= t * t;
        }
    }
    let ratio = MeasureP::Prime(p).density(x)? / MeasureP::Infinity.density(x)?;
    Ok((partial - 2.0 * ratio).abs())
}
