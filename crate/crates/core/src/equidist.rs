//! Finite-family checks of `mu_p`-equidistribution.
//!
//! Two diagnostics per space: the Kolmogorov-Smirnov distance between the
//! empirical eigenvalue distribution and `mu_p`, and the Chebyshev moments
//! `(1/dim) sum X_n(lambda)` against their limits `1_{2|n} p^{-n/2}`.
//! Convergence in `N + k` is reported as a family sorted by `N + k`.

use serde::{Deserialize, Serialize};

use crate::characters::BRANCH_CONVENTION;
use crate::chebyshev::{cdf, CdfTable, MeasureP};
use crate::error::{Error, Result};
use crate::exec;
use crate::numtheory::{
    factorize, format_rational, is_exceptional, main_term_trace_factored, predicted_moment,
    rational_to_f64, Prime, Rational,
};
use crate::output::format_float;
use crate::spectra::{sum_xn_upto, EigenMultiset, NormalizeTol};

/// Default highest Chebyshev degree in moment tests.
pub const DEFAULT_N_MAX: usize = 10;

/// Precision of the cached CDF table; smaller tolerances fall back to
/// adaptive quadrature per point.
const TABLE_TOL: f64 = 1e-13;

/// Two-sided KS distance `sup |F_emp - F_mu|` of a sample against `mu`.
pub fn ks_distance(values: &[f64], mu: MeasureP, tol: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("KS statistic of an empty sample"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdfs: Vec<f64> = if tol >= TABLE_TOL {
        let table = CdfTable::shared(mu);
        exec::map(&sorted, |&x| table.cdf(x))
            .into_iter()
            .collect::<Result<_>>()?
    } else {
        exec::map(&sorted, |&x| cdf(mu, x, tol))
            .into_iter()
            .collect::<Result<_>>()?
    };
    let n = sorted.len() as f64;
    let d = cdfs
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
        .fold(0.0f64, f64::max);
    Ok(d.clamp(0.0, 1.0))
}

/// KS statistic of a space's eigenvalues against `mu_p`.
pub fn ks_statistic(ms: &EigenMultiset, p: Prime, tol: f64) -> Result<f64> {
    if ms.key.p != p {
        return Err(Error::domain(format!(
            "multiset {} is for p = {}, not {p}",
            ms.key, ms.key.p
        )));
    }
    if ms.is_empty() {
        return Err(Error::domain(format!(
            "no eigenvalues for {}: dim S_k^new(N, k, chi) = 0",
            ms.key
        )));
    }
    ks_distance(ms.values(), MeasureP::Prime(p), tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub empirical: f64,
    /// Exact limit `1_{2|n} p^{-n/2}` as `num/den`.
    pub predicted: String,
    pub predicted_value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnostic {
    pub n_max: usize,
    pub rows: Vec<MomentRow>,
    pub max_abs_error: f64,
}

/// Empirical Chebyshev moments `0..=n_max` against their predicted limits.
pub fn moment_test(ms: &EigenMultiset, n_max: usize) -> Result<MomentDiagnostic> {
    if n_max < 1 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let dim = ms.normalizer()? as f64;
    let sums = sum_xn_upto(ms.values(), n_max);
    let rows: Vec<MomentRow> = sums
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let exact = predicted_moment(n as u32, ms.key.p);
            let predicted_value = rational_to_f64(&exact);
            let empirical = s / dim;
            MomentRow {
                n,
                empirical,
                predicted: format_rational(&exact),
                predicted_value,
                abs_error: (empirical - predicted_value).abs(),
            }
        })
        .collect();
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(MomentDiagnostic {
        n_max,
        rows,
        max_abs_error,
    })
}

/// Predicted limit of `Tr T_{p^n} / Tr T_1` together with the two main terms
/// whose quotient it is.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePrediction {
    pub predicted: Rational,
    /// Main term of `Tr T_{p^n}`.
    pub numerator: Rational,
    /// Main term of `Tr T_1`, i.e. of the dimension.
    pub denominator: Rational,
}

/// Limit of the trace ratio for the space `(N, f = f(chi), k)` at `p^n`,
/// computed as the quotient of the two trace main terms.
pub fn trace_ratio_prediction(
    level: u64,
    conductor: u64,
    weight: u32,
    p: Prime,
    n: u32,
) -> Result<TracePrediction> {
    let (level_f, f) = (factorize(level)?, factorize(conductor)?);
    if level.is_multiple_of(p.get()) {
        return Err(Error::domain(format!("p = {p} divides N = {level}")));
    }
    if is_exceptional(&level_f, &f)? {
        return Err(Error::domain(format!(
            "N = {level}, f = {conductor}: 2 | f and 2 || N/f, so dim S_k^new(N, k, chi) = 0"
        )));
    }
    let numerator = main_term_trace_factored(&[(p.get(), n)], &level_f, &f, weight)?;
    let denominator = main_term_trace_factored(&[], &level_f, &f, weight)?;
    let predicted = &numerator / &denominator;
    Ok(TracePrediction {
        predicted,
        numerator,
        denominator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub level: u64,
    pub weight: u32,
    pub char_label: String,
    pub conductor: u64,
    pub p: u64,
    /// Number of eigenvalues in the data.
    pub size: usize,
    /// Dimension used for moments, when known.
    pub dimension: Option<usize>,
    /// `(k - 1)/12 * psi_new_f(N)`, the main term of the dimension.
    pub dimension_main_term: Option<String>,
    pub ks: f64,
    pub moments: Option<MomentDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub first_ks: f64,
    pub last_ks: f64,
    /// KS strictly decreases along the family.
    pub ks_strictly_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTolerances {
    pub cdf_tol: f64,
    pub im_tol: f64,
    pub edge_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub p: u64,
    pub n_max: usize,
    pub branch_convention: String,
    pub tolerances: ReportTolerances,
    /// Sorted by `N + k` ascending.
    pub family: Vec<SpaceReport>,
    pub trend: Trend,
}

fn space_report(ms: &EigenMultiset, p: Prime, n_max: usize, cdf_tol: f64) -> Result<SpaceReport> {
    let ks = ks_statistic(ms, p, cdf_tol)?;
    let moments = match ms.normalizer() {
        Ok(_) => Some(moment_test(ms, n_max)?),
        Err(_) => None,
    };
    let conductor = ms.conductor();
    let dimension_main_term = trace_ratio_prediction(ms.key.level, conductor, ms.key.weight, p, 0)
        .ok()
        .map(|t| format_rational(&t.denominator));
    Ok(SpaceReport {
        level: ms.key.level,
        weight: ms.key.weight,
        char_label: ms.key.char_label.clone(),
        conductor,
        p: p.get(),
        size: ms.len(),
        dimension: ms.normalizer().ok(),
        dimension_main_term,
        ks,
        moments,
    })
}

/// KS and moment diagnostics for every space of a family sharing `p`.
pub fn build_report(
    family: &[EigenMultiset],
    p: Prime,
    n_max: usize,
    cdf_tol: f64,
    normalize_tol: NormalizeTol,
) -> Result<EquidistReport> {
    if family.is_empty() {
        return Err(Error::domain("empty family"));
    }
    if let Some(ms) = family.iter().find(|ms| ms.key.p != p) {
        return Err(Error::domain(format!(
            "mixed p: {} is for p = {}, report is for {p}",
            ms.key, ms.key.p
        )));
    }
    if let Some(ms) = family.iter().find(|ms| ms.is_empty()) {
        return Err(Error::domain(format!(
            "space {} has no eigenvalues (dim S_k^new(N, k, chi) = 0)",
            ms.key
        )));
    }
    let mut ordered: Vec<&EigenMultiset> = family.iter().collect();
    ordered.sort_by_key(|ms| ms.key.size_order());
    let spaces = exec::map(&ordered, |ms| space_report(ms, p, n_max, cdf_tol))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let trend = Trend {
        first_ks: spaces[0].ks,
        last_ks: spaces[spaces.len() - 1].ks,
        ks_strictly_decreasing: spaces.windows(2).all(|w| w[1].ks < w[0].ks),
    };
    Ok(EquidistReport {
        p: p.get(),
        n_max,
        branch_convention: BRANCH_CONVENTION.to_string(),
        tolerances: ReportTolerances {
            cdf_tol,
            im_tol: normalize_tol.im_tol,
            edge_tol: normalize_tol.edge_tol,
        },
        family: spaces,
        trend,
    })
}

impl EquidistReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per `(space, n)`:
    /// `N,k,char_label,p,n,empirical_moment,predicted_moment,abs_error`.
    pub fn moments_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "N",
            "k",
            "char_label",
            "p",
            "n",
            "empirical_moment",
            "predicted_moment",
            "abs_error",
        ];
        w.write_record(header).map_err(csv_err)?;
        for s in &self.family {
            let Some(m) = &s.moments else { continue };
            for r in &m.rows {
                w.write_record([
                    s.level.to_string(),
                    s.weight.to_string(),
                    s.char_label.clone(),
                    s.p.to_string(),
                    r.n.to_string(),
                    format_float(r.empirical),
                    r.predicted.clone(),
                    format_float(r.abs_error),
                ])
                .map_err(csv_err)?;
            }
        }
        finish_csv(w)
    }

    /// One row per space: `N,k,char_label,p,size,ks`.
    pub fn ks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["N", "k", "char_label", "p", "size", "ks"])
            .map_err(csv_err)?;
        for s in &self.family {
            w.write_record([
                s.level.to_string(),
                s.weight.to_string(),
                s.char_label.clone(),
                s.p.to_string(),
                s.size.to_string(),
                format_float(s.ks),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
