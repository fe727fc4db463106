//! Invariant suite behind the `check` command.
//!
//! Each check compares two independent computations of the same quantity and
//! reports the worst discrepancy found.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::characters::{DirichletCharacter, Parity};
use crate::chebyshev::{
    cheb_eval, even_part_identity_check, integrate, moment_closed_form, MeasureP,
};
use crate::equidist::trace_ratio_prediction;
use crate::error::Result;
use crate::numtheory::{
    factorize, is_exceptional, omega, psi_new, rational_to_f64, Prime, Rational,
};
use crate::spectra::{denormalize, normalize_ap, NormalizeTol};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Size of the ranges each check sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub max_degree: u32,
    pub max_level: u64,
    pub max_char_modulus: u64,
}

impl Scope {
    pub const QUICK: Scope = Scope {
        max_degree: 12,
        max_level: 500,
        max_char_modulus: 40,
    };
    pub const FULL: Scope = Scope {
        max_degree: 20,
        max_level: 5000,
        max_char_modulus: 200,
    };
}

const PRIMES: [u64; 5] = [2, 3, 5, 7, 11];
const QUAD_TOL: f64 = 1e-12;

fn primes() -> impl Iterator<Item = Prime> {
    PRIMES
        .into_iter()
        .map(|p| Prime::new(p).expect("small prime"))
}

fn moments(scope: Scope) -> Result<Check> {
    let mut worst = 0.0f64;
    for p in primes() {
        for n in 0..=scope.max_degree {
            let q = integrate(|x| cheb_eval(n as usize, x), MeasureP::Prime(p), QUAD_TOL)?;
            worst = worst.max((q - rational_to_f64(&moment_closed_form(n, p))).abs());
        }
    }
    Ok(Check::new(
        "moment identity",
        worst <= 1e-10,
        format!("max error {worst:.3e}"),
    ))
}

fn orthonormality(scope: Scope) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 0..=scope.max_degree as usize {
        for k in n..=scope.max_degree as usize {
            let q = integrate(
                |x| cheb_eval(n, x) * cheb_eval(k, x),
                MeasureP::Infinity,
                QUAD_TOL,
            )?;
            worst = worst.max((q - if n == k { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(Check::new(
        "orthonormality",
        worst <= 1e-10,
        format!("max error {worst:.3e}"),
    ))
}

fn even_part() -> Result<Check> {
    let mut worst = 0.0f64;
    for p in primes().take(3) {
        for i in 0..=100 {
            let x = -1.9 + 3.8 * i as f64 / 100.0;
            worst = worst.max(even_part_identity_check(p, x, 60)?);
        }
    }
    Ok(Check::new(
        "even-part identity",
        worst <= 1e-8,
        format!("max defect {worst:.3e}"),
    ))
}

fn psi_bound(scope: Scope) -> Result<Check> {
    let mut violations = 0usize;
    let mut checked = 0usize;
    for n in 1..=scope.max_level {
        let level = factorize(n)?;
        let bound = Rational::new(
            BigInt::from(n),
            num_traits::pow(BigInt::from(4u32), omega(&level)),
        );
        for f in level.divisors() {
            let f = factorize(f)?;
            let value = psi_new(&level, &f)?;
            let exceptional = is_exceptional(&level, &f)?;
            checked += 1;
            if exceptional != value.is_zero() || (!exceptional && value < bound) {
                violations += 1;
            }
        }
    }
    Ok(Check::new(
        "psi_new lower bound",
        violations == 0,
        format!(
            "{violations} violations over {checked} pairs (f | N <= {})",
            scope.max_level
        ),
    ))
}

fn two_routes() -> Result<Check> {
    let mut mismatches = 0usize;
    for p in primes() {
        for n in 0..=30 {
            let level = if p.get() == 7 { 11 } else { 7 };
            if trace_ratio_prediction(level, 1, 2, p, n)?.predicted != moment_closed_form(n, p) {
                mismatches += 1;
            }
        }
    }
    Ok(Check::new(
        "trace ratio vs closed form",
        mismatches == 0,
        format!("{mismatches} mismatches"),
    ))
}

fn characters(scope: Scope) -> Result<Check> {
    let mut failures = Vec::new();
    for n in 1..=scope.max_char_modulus {
        for chi in DirichletCharacter::all(n)? {
            let minus_one = chi.evaluate(-1).expect("-1 is a unit");
            let parity = if minus_one.is_one() {
                Parity::Even
            } else {
                Parity::Odd
            };
            // Least divisor d of N with chi trivial on units that are 1 mod d.
            let conductor = factorize(n)?
                .divisors()
                .into_iter()
                .find(|&d| {
                    (1..n)
                        .step_by(d as usize)
                        .all(|a| chi.evaluate(a as i64).is_none_or(|v| v.is_one()))
                })
                .expect("N itself qualifies");
            if parity != chi.parity() || conductor != chi.conductor() {
                failures.push(chi.canonical_label());
            }
        }
    }
    Ok(Check::new(
        "character conductor and parity",
        failures.is_empty(),
        if failures.is_empty() {
            format!("all characters mod N <= {}", scope.max_char_modulus)
        } else {
            format!("mismatch at {}", failures.join(", "))
        },
    ))
}

fn normalize_round_trip() -> Result<Check> {
    let mut worst = 0.0f64;
    let tol = NormalizeTol::default();
    for chi in DirichletCharacter::all(13)? {
        for k in 2..=12u32 {
            if chi.parity() != Parity::of_weight(k) {
                continue;
            }
            for p in primes() {
                let chi_p = chi.value_at_prime(p.get())?;
                for i in 0..=40 {
                    let lambda = -2.0 + 4.0 * i as f64 / 40.0;
                    let back = normalize_ap(denormalize(lambda, chi_p, p, k), chi_p, p, k, tol)?;
                    worst = worst.max((back - lambda).abs());
                }
            }
        }
    }
    Ok(Check::new(
        "normalize round trip",
        worst <= 1e-10,
        format!("max error {worst:.3e}"),
    ))
}

fn report(name: &'static str, outcome: Result<Check>) -> Check {
    outcome.unwrap_or_else(|e| Check::new(name, false, format!("error: {e}")))
}

/// Runs every check; a check that cannot run is reported as failed.
pub fn run(scope: Scope) -> Vec<Check> {
    vec![
        report("moment identity", moments(scope)),
        report("orthonormality", orthonormality(scope)),
        report("even-part identity", even_part()),
        report("psi_new lower bound", psi_bound(scope)),
        report("trace ratio vs closed form", two_routes()),
        report("character conductor and parity", characters(scope)),
        report("normalize round trip", normalize_round_trip()),
    ]
}
