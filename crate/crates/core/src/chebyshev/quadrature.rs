//! Composite Gauss-Legendre quadrature after the substitution `x = 2 cos(theta)`.
//!
//! Both densities carry a factor `sqrt(1 - x^2/4)`, whose derivative blows up
//! at `x = +-2`. In `theta` the integrands become smooth trigonometric
//! functions on `[0, pi]` (`mu_inf` turns into `(2/pi) sin^2(theta)`), so a
//! fixed-order rule with panel doubling converges geometrically.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::MeasureP;
use crate::error::{Error, Result};

pub const DEFAULT_MOMENT_TOL: f64 = 1e-12;
pub const DEFAULT_CDF_TOL: f64 = 1e-10;

const ORDER: usize = 20;
const FIRST_PANELS: usize = 2;
const MAX_DOUBLINGS: u32 = 14;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

// Nodes on [-1, 1] by Newton's method on P_ORDER, starting from the
// Chebyshev-like guesses cos(pi (i - 1/4) / (n + 1/2)).
fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let sum: f64 = r
        .nodes
        .iter()
        .zip(&r.weights)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum();
    sum * half
}

fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| panel(f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}

/// `int_a^b f` by composite Gauss-Legendre, doubling the panel count until
/// two successive estimates differ by at most `tol / 2`.
pub fn integrate_theta<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut panels = FIRST_PANELS;
    let mut prev = composite(&f, a, b, panels);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let next = composite(&f, a, b, panels);
        change = (next - prev).abs();
        if change <= tol / 2.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numeric {
        last_estimate: prev,
        last_change: change,
    })
}

/// `int_{-2}^{2} g(x) d mu(x)`, computed as
/// `int_0^pi g(2 cos t) w(t) dt` with `w` the substituted density.
pub fn integrate<G: Fn(f64) -> f64>(g: G, mu: MeasureP, tol: f64) -> Result<f64> {
    integrate_theta(|t| g(2.0 * t.cos()) * mu.theta_weight(t), 0.0, PI, tol)
}

fn theta_of(x: f64) -> Result<f64> {
    if !(-2.0..=2.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} lies outside [-2, 2]")));
    }
    Ok((x / 2.0).acos())
}

/// Both measures are probability measures without atoms at `-2` or `2`.
fn endpoint_cdf(x: f64) -> Option<f64> {
    if x <= -2.0 {
        Some(0.0)
    } else if x >= 2.0 {
        Some(1.0)
    } else {
        None
    }
}

/// `mu((-2, x])` by adaptive quadrature over `[acos(x/2), pi]`.
pub fn cdf(mu: MeasureP, x: f64, tol: f64) -> Result<f64> {
    let theta = theta_of(x)?;
    if let Some(end) = endpoint_cdf(x) {
        return Ok(end);
    }
    let value = integrate_theta(|t| mu.theta_weight(t), theta, PI, tol)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Precomputed CDF: exact-to-rounding panel integrals on a uniform grid in
/// `theta`, summed from the right, plus one Gauss-Legendre panel for the
/// partial cell. Used wherever the CDF is evaluated many times (sampling,
/// KS statistics).
#[derive(Debug)]
pub struct CdfTable {
    mu: MeasureP,
    /// `tail[j] = mu(x <= 2 cos(theta_j))` with `theta_j = j pi / CELLS`.
    tail: Vec<f64>,
}

impl CdfTable {
    const CELLS: usize = 256;

    pub fn new(mu: MeasureP) -> Self {
        let h = PI / Self::CELLS as f64;
        let w = |t: f64| mu.theta_weight(t);
        let cells: Vec<f64> = (0..Self::CELLS)
            .map(|j| panel(&w, j as f64 * h, (j + 1) as f64 * h))
            .collect();
        let mut tail = vec![0.0; Self::CELLS + 1];
        for j in (0..Self::CELLS).rev() {
            tail[j] = tail[j + 1] + cells[j];
        }
        CdfTable { mu, tail }
    }

    /// Shared table per measure, built on first use.
    pub fn shared(mu: MeasureP) -> Arc<CdfTable> {
        static CACHE: OnceLock<Mutex<HashMap<MeasureP, Arc<CdfTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("cdf table cache");
        Arc::clone(
            guard
                .entry(mu)
                .or_insert_with(|| Arc::new(CdfTable::new(mu))),
        )
    }

    pub fn measure(&self) -> MeasureP {
        self.mu
    }

    /// Total mass as accumulated by the table (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.tail[0]
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let theta = theta_of(x)?;
        Ok(endpoint_cdf(x).unwrap_or_else(|| self.cdf_theta(theta)))
    }

    fn cdf_theta(&self, theta: f64) -> f64 {
        let h = PI / Self::CELLS as f64;
        let j = ((theta / h) as usize).min(Self::CELLS - 1);
        let right = (j + 1) as f64 * h;
        let partial = panel(&|t: f64| self.mu.theta_weight(t), theta, right);
        (self.tail[j + 1] + partial).clamp(0.0, 1.0)
    }
}
