//! Exact arithmetic for the multiplicative functions behind the dimension
//! main term of a newspace with nebentypus.
//!
//! Everything here is exact: values are [`Rational`]s (big rationals), and
//! integer inputs are factored completely before any function is evaluated.
//!
//! The main term of `Tr T_m^new(N, k, chi)` (normalized) is
//!
//! ```text
//!   1_{m square} / sqrt(m) * (k - 1)/12 * psi_new_f(N),
//!   psi_new_f(N) = psi(f) * (beta * psi_f)(N / f),
//! ```
//!
//! where `f` is the conductor of `chi`. Only the main term is exposed; the
//! error term has no computable constant.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational number (arbitrary precision, always in lowest terms).
pub type Rational = num_rational::BigRational;

/// Largest accepted input, `2^63 - 1`.
pub const MAX_INPUT: u64 = i64::MAX as u64;

/// A rational prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::domain(format!("{p} is not prime")))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Prime-power decomposition of a positive integer.
///
/// Primes are strictly increasing and every exponent is at least one; the
/// factorization of 1 is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn one() -> Self {
        Factorization {
            n: 1,
            factors: Vec::new(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Exponent of `p` in `n` (zero when `p` does not divide `n`).
    pub fn valuation(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    pub fn divides(&self, other: &Factorization) -> bool {
        other.n.is_multiple_of(self.n)
    }

    /// `other / self`, failing when `self` does not divide `other`.
    pub fn quotient_of(&self, other: &Factorization) -> Result<Factorization> {
        if !self.divides(other) {
            return Err(Error::domain(format!(
                "{} does not divide {}",
                self.n, other.n
            )));
        }
        let factors = other
            .factors
            .iter()
            .filter_map(|&(p, e)| {
                let rest = e - self.valuation(p);
                (rest > 0).then_some((p, rest))
            })
            .collect();
        Ok(Factorization {
            n: other.n / self.n,
            factors,
        })
    }

    /// All positive divisors, in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    pub fn is_square(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e % 2 == 0)
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases are a proof for
/// every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Brent's variant of Pollard rho. `n` must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = num_integer::gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn split_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    split_into(d, out);
    split_into(n / d, out);
}

/// Complete factorization of `1 <= n <= 2^63 - 1`.
///
/// Trial division by small primes, then Miller-Rabin on the cofactor and
/// Pollard rho if it is still composite.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::domain("cannot factor 0"));
    }
    if n > MAX_INPUT {
        return Err(Error::domain(format!(
            "{n} exceeds the supported bound 2^63 - 1"
        )));
    }
    let mut primes = Vec::new();
    let mut rest = n;
    for p in 2u64..1000 {
        if p * p > rest {
            break;
        }
        while rest.is_multiple_of(p) {
            primes.push(p);
            rest /= p;
        }
    }
    split_into(rest, &mut primes);
    primes.sort_unstable();

    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    Ok(Factorization { n, factors })
}

/// Number of distinct prime divisors.
pub fn omega(n: &Factorization) -> usize {
    n.factors.len()
}

fn big_pow(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// `psi(p^r) = p^r (1 + 1/p)`, extended multiplicatively.
pub fn psi(n: &Factorization) -> Rational {
    let value = n
        .factors
        .iter()
        .map(|&(p, r)| big_pow(p, r - 1) * (p + 1))
        .product::<BigInt>();
    Rational::from_integer(value)
}

/// Local factor of `beta * psi_f` at `p^r`.
///
/// `p^r (1 - 1/p - [1/p^2]_{r>=2} + [1/p^3]_{r>=3})` when `p` does not divide
/// `f`, and `p^r (1 - 2/p + [1/p^2]_{r>=2})` when it does.
fn beta_psi_local(p: u64, r: u32, p_divides_f: bool) -> BigInt {
    let term = |drop: u32| {
        if r >= drop {
            big_pow(p, r - drop)
        } else {
            BigInt::zero()
        }
    };
    if p_divides_f {
        term(0) - 2 * term(1) + term(2)
    } else {
        term(0) - term(1) - term(2) + term(3)
    }
}

/// `beta * psi_f(n)`, multiplicative in `n`; `f` only decides which local
/// formula applies at each prime.
pub fn beta_psi_f(n: &Factorization, f: &Factorization) -> Rational {
    let value = n
        .factors
        .iter()
        .map(|&(p, r)| beta_psi_local(p, r, f.valuation(p) > 0))
        .product::<BigInt>();
    Rational::from_integer(value)
}

/// `psi_new_f(N) = psi(f) * (beta * psi_f)(N / f)`.
pub fn psi_new(level: &Factorization, f: &Factorization) -> Result<Rational> {
    let cofactor = f.quotient_of(level)?;
    Ok(psi(f) * beta_psi_f(&cofactor, f))
}

/// True when `2 | f` and `2 || N/f`, the case where the newspace is zero.
pub fn is_exceptional(level: &Factorization, f: &Factorization) -> Result<bool> {
    let cofactor = f.quotient_of(level)?;
    Ok(f.n.is_multiple_of(2) && cofactor.valuation(2) == 1)
}

/// Main term of the normalized trace of `T_m` on the newspace.
///
/// Zero unless `m` is a perfect square, otherwise
/// `(k - 1)/12 * psi_new_f(N) / sqrt(m)`.
pub fn main_term_trace(
    m: &Factorization,
    level: &Factorization,
    f: &Factorization,
    k: u32,
) -> Result<Rational> {
    main_term_trace_factored(m.factors(), level, f, k)
}

/// [`main_term_trace`] for `m` given only by its prime powers, so that `m`
/// may exceed 64 bits (e.g. `m = p^n`).
pub fn main_term_trace_factored(
    m: &[(u64, u32)],
    level: &Factorization,
    f: &Factorization,
    k: u32,
) -> Result<Rational> {
    if k < 2 {
        return Err(Error::domain(format!("weight k = {k} must be at least 2")));
    }
    let psi_new = psi_new(level, f)?;
    if m.iter().any(|&(_, e)| e % 2 == 1) {
        return Ok(Rational::zero());
    }
    let root: BigInt = m.iter().map(|&(p, e)| big_pow(p, e / 2)).product();
    let scale = Rational::new(BigInt::from(k - 1), BigInt::from(12u32) * root);
    Ok(scale * psi_new)
}

/// Limit of the `n`-th Chebyshev moment: `1_{2|n} p^{-n/2}`.
pub fn predicted_moment(n: u32, p: Prime) -> Rational {
    if n % 2 == 1 {
        return Rational::zero();
    }
    Rational::new(BigInt::one(), big_pow(p.get(), n / 2))
}

/// Renders a rational as `num/den`, or just `num` when integral.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Converts an exact rational to the nearest `f64` (correct to within one
/// ulp for the magnitudes that occur here).
pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
