use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numtheory::Prime;

/// The measures `mu_p` (for a prime `p`) and `mu_inf` on `[-2, 2]`.
///
/// ```text
/// mu_inf(x) = (1/pi) sqrt(1 - x^2/4)
/// mu_p(x)   = (p+1)/pi * sqrt(1 - x^2/4) / ((p^(1/2) + p^(-1/2))^2 - x^2)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureP {
    Infinity,
    Prime(Prime),
}

impl MeasureP {
    pub fn prime(p: u64) -> Result<Self> {
        Prime::new(p).map(MeasureP::Prime)
    }

    /// Density at `x` in `[-2, 2]`.
    pub fn density(self, x: f64) -> Result<f64> {
        if !(-2.0..=2.0).contains(&x) {
            return Err(Error::domain(format!("x = {x} lies outside [-2, 2]")));
        }
        let root = (1.0 - x * x / 4.0).max(0.0).sqrt();
        Ok(match self {
            MeasureP::Infinity => root / PI,
            MeasureP::Prime(p) => {
                let p = p.get() as f64;
                (p + 1.0) / PI * root / (pole_square(p) - x * x)
            }
        })
    }

    /// Density after `x = 2 cos(theta)`, including the Jacobian `2 sin(theta)`,
    /// for `theta` in `[0, pi]`.
    pub fn theta_weight(self, theta: f64) -> f64 {
        let s = theta.sin();
        match self {
            MeasureP::Infinity => 2.0 / PI * s * s,
            MeasureP::Prime(p) => {
                let p = p.get() as f64;
                let c = theta.cos();
                2.0 * (p + 1.0) / PI * s * s / (pole_square(p) - 4.0 * c * c)
            }
        }
    }
}

/// `(p^(1/2) + p^(-1/2))^2 = p + 2 + 1/p`.
fn pole_square(p: f64) -> f64 {
    p + 2.0 + 1.0 / p
}

impl fmt::Display for MeasureP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureP::Infinity => write!(f, "inf"),
            MeasureP::Prime(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for MeasureP {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" => Ok(MeasureP::Infinity),
            _ => {
                let p: u64 = s
                    .parse()
                    .map_err(|_| Error::domain(format!("expected a prime or 'inf', got {s:?}")))?;
                MeasureP::prime(p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_examples() {
        assert!((MeasureP::Infinity.density(0.0).unwrap() - 1.0 / PI).abs() < 1e-16);
        let mu2 = MeasureP::prime(2).unwrap();
        assert!((mu2.density(0.0).unwrap() - 2.0 / (3.0 * PI)).abs() < 1e-16);
        for mu in [MeasureP::Infinity, mu2, MeasureP::prime(7).unwrap()] {
            assert_eq!(mu.density(2.0).unwrap(), 0.0);
            assert_eq!(mu.density(-2.0).unwrap(), 0.0);
            assert!(mu.density(2.0001).is_err());
        }
    }

    #[test]
    fn theta_weight_is_density_times_jacobian() {
        for mu in [MeasureP::Infinity, MeasureP::prime(3).unwrap()] {
            for i in 1..50 {
                let theta = PI * i as f64 / 50.0;
                let x = 2.0 * theta.cos();
                let expected = mu.density(x).unwrap() * 2.0 * theta.sin();
                assert!((mu.theta_weight(theta) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("inf".parse::<MeasureP>().unwrap(), MeasureP::Infinity);
        assert_eq!("5".parse::<MeasureP>().unwrap().to_string(), "5");
        assert!("6".parse::<MeasureP>().is_err());
    }
}
