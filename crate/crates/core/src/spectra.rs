//! Normalized eigenvalue multisets and their Chebyshev power sums.
//!
//! A newform's `p`-th coefficient `a_p` is normalized to
//! `lambda = a_p * chi(p)^(-1/2) * p^(-(k-1)/2)`, which is real and lies in
//! `[-2, 2]`. Because `T_{p^n}` obeys the Chebyshev recurrence, the power sum
//! `sum_i X_n(lambda_i)` over a newspace equals the normalized trace of
//! `T_{p^n}` there.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characters::{
    inv_sqrt_of_value, principal_sqrt, DirichletCharacter, Parity, RootOfUnity,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::numtheory::Prime;

/// Tolerances applied when turning floating-point data into eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTol {
    /// Largest accepted `|Im lambda|` before the imaginary part is dropped.
    pub im_tol: f64,
    /// Largest accepted overshoot of `|lambda|` beyond 2 before clamping.
    pub edge_tol: f64,
}

impl Default for NormalizeTol {
    fn default() -> Self {
        NormalizeTol {
            im_tol: 1e-8,
            edge_tol: 1e-8,
        }
    }
}

/// Identifies a newspace `S_k^new(N, chi)` together with the prime `p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpaceKey {
    pub level: u64,
    pub weight: u32,
    pub char_label: String,
    pub p: Prime,
}

impl SpaceKey {
    /// Sort key for families: `N + k` first.
    pub fn size_order(&self) -> (u64, u64, u32, String) {
        (
            self.level + self.weight as u64,
            self.level,
            self.weight,
            self.char_label.clone(),
        )
    }
}

impl fmt::Display for SpaceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(N={}, k={}, chi={}, p={})",
            self.level, self.weight, self.char_label, self.p
        )
    }
}

fn check_space(level: u64, weight: u32, chi: &DirichletCharacter, p: Prime) -> Result<()> {
    if level == 0 {
        return Err(Error::domain("level must be positive"));
    }
    if weight < 2 {
        return Err(Error::domain(format!("weight {weight} must be at least 2")));
    }
    if level.is_multiple_of(p.get()) {
        return Err(Error::domain(format!("p divides N: p = {p}, N = {level}")));
    }
    if chi.modulus() != level {
        return Err(Error::domain(format!(
            "character modulus {} differs from level {level}",
            chi.modulus()
        )));
    }
    if chi.parity() != Parity::of_weight(weight) {
        return Err(Error::domain(format!(
            "chi(-1) = {} but (-1)^k = {} for k = {weight}",
            chi.parity().sign(),
            Parity::of_weight(weight).sign()
        )));
    }
    Ok(())
}

/// `a_p * chi(p)^(-1/2) * p^(-(k-1)/2)`, checked to be real and in `[-2, 2]`.
pub fn normalize_ap(
    ap: Complex64,
    chi_p: RootOfUnity,
    p: Prime,
    weight: u32,
    tol: NormalizeTol,
) -> Result<f64> {
    let scale = (p.get() as f64).powf(-(weight as f64 - 1.0) / 2.0);
    let v = ap * inv_sqrt_of_value(Some(chi_p))? * scale;
    if v.im.abs() > tol.im_tol {
        return Err(Error::ImaginaryResidue {
            im: v.im,
            tol: tol.im_tol,
        });
    }
    clamp_lambda(v.re, tol.edge_tol)
}

/// Inverse of [`normalize_ap`] on the same branch:
/// `a_p = lambda * chi(p)^(1/2) * p^((k-1)/2)`.
pub fn denormalize(lambda: f64, chi_p: RootOfUnity, p: Prime, weight: u32) -> Complex64 {
    let scale = (p.get() as f64).powf((weight as f64 - 1.0) / 2.0);
    principal_sqrt(chi_p) * (lambda * scale)
}

fn clamp_lambda(x: f64, edge_tol: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 2.0 + edge_tol {
        return Err(Error::RamanujanBound {
            re: x,
            tol: edge_tol,
        });
    }
    Ok(x.clamp(-2.0, 2.0))
}

/// One newform's data at one prime.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRecord {
    pub level: u64,
    pub weight: u32,
    pub character: DirichletCharacter,
    /// Label the character was given under (Conrey label or canonical form).
    pub char_label: String,
    pub p: Prime,
    pub lambda: Option<f64>,
    pub ap: Option<Complex64>,
    /// `[K_f : Q]`.
    pub field_degree: Option<u32>,
    pub form_id: Option<String>,
}

impl EigenRecord {
    /// Record carrying a normalized eigenvalue.
    pub fn with_lambda(
        level: u64,
        weight: u32,
        character: DirichletCharacter,
        p: Prime,
        lambda: f64,
    ) -> Result<Self> {
        let rec = EigenRecord {
            level,
            weight,
            char_label: character.canonical_label(),
            character,
            p,
            lambda: Some(lambda),
            ap: None,
            field_degree: None,
            form_id: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Record carrying a raw `a_p`.
    pub fn with_ap(
        level: u64,
        weight: u32,
        character: DirichletCharacter,
        p: Prime,
        ap: Complex64,
    ) -> Result<Self> {
        let rec = EigenRecord {
            level,
            weight,
            char_label: character.canonical_label(),
            character,
            p,
            lambda: None,
            ap: Some(ap),
            field_degree: None,
            form_id: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Checks the space hypotheses (`gcd(p, N) = 1`, parity, weight) and that
    /// the record carries an eigenvalue.
    pub fn validate(&self) -> Result<()> {
        check_space(self.level, self.weight, &self.character, self.p)?;
        if self.lambda.is_none() && self.ap.is_none() {
            return Err(Error::integrity("record carries neither lambda nor ap"));
        }
        if self.field_degree == Some(0) {
            return Err(Error::integrity("field_degree must be positive"));
        }
        Ok(())
    }

    pub fn key(&self) -> SpaceKey {
        SpaceKey {
            level: self.level,
            weight: self.weight,
            char_label: self.char_label.clone(),
            p: self.p,
        }
    }

    /// The normalized eigenvalue. A supplied `lambda` wins; if `a_p` is also
    /// present it must normalize to the same value within `im_tol`.
    pub fn normalize(&self, tol: NormalizeTol) -> Result<f64> {
        if self.level.is_multiple_of(self.p.get()) {
            return Err(Error::domain(format!(
                "p divides N: p = {}, N = {}",
                self.p, self.level
            )));
        }
        let from_ap = match self.ap {
            Some(ap) => {
                let chi_p = self.character.value_at_prime(self.p.get())?;
                Some(normalize_ap(ap, chi_p, self.p, self.weight, tol)?)
            }
            None => None,
        };
        match (self.lambda, from_ap) {
            (Some(lambda), Some(check)) => {
                let lambda = clamp_lambda(lambda, tol.edge_tol)?;
                if (lambda - check).abs() > tol.im_tol {
                    return Err(Error::integrity(format!(
                        "lambda = {lambda} disagrees with normalized a_p = {check}"
                    )));
                }
                Ok(lambda)
            }
            (Some(lambda), None) => clamp_lambda(lambda, tol.edge_tol),
            (None, Some(v)) => Ok(v),
            (None, None) => Err(Error::integrity("record carries neither lambda nor ap")),
        }
    }
}

/// The normalized eigenvalues of `T_p` on one newspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMultiset {
    pub key: SpaceKey,
    pub character: DirichletCharacter,
    values: Vec<f64>,
    /// Whether `values` exhausts the newspace.
    pub complete: bool,
    /// `dim S_k^new(N, chi)` when known independently of the data.
    pub dimension: Option<usize>,
}

impl EigenMultiset {
    pub fn new(
        key: SpaceKey,
        character: DirichletCharacter,
        values: Vec<f64>,
        complete: bool,
    ) -> Result<Self> {
        check_space(key.level, key.weight, &character, key.p)?;
        if let Some(bad) = values.iter().find(|v| !(-2.0..=2.0).contains(*v)) {
            return Err(Error::RamanujanBound { re: *bad, tol: 0.0 });
        }
        Ok(EigenMultiset {
            key,
            character,
            values,
            complete,
            dimension: None,
        })
    }

    pub fn with_dimension(mut self, dimension: usize) -> Self {
        self.dimension = Some(dimension);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Conductor of the nebentypus.
    pub fn conductor(&self) -> u64 {
        self.character.conductor()
    }

    /// The divisor used for moments: the supplied dimension, or the
    /// multiset size when the data is complete.
    pub fn normalizer(&self) -> Result<usize> {
        let n = match (self.dimension, self.complete) {
            (Some(d), _) => d,
            (None, true) => self.values.len(),
            (None, false) => {
                return Err(Error::domain(format!(
                    "multiset for {} is incomplete; supply dim S_k^new explicitly",
                    self.key
                )))
            }
        };
        if n == 0 {
            return Err(Error::domain(format!(
                "no eigenvalues for {}: dim S_k^new(N, k, chi) = 0 (the exceptional case 2 | f(chi), 2 || N/f(chi) has an empty newspace)",
                self.key
            )));
        }
        Ok(n)
    }
}

// X_n over a slice by running the recurrence on the whole slice at once.
fn chunk_sum_xn(chunk: &[f64], n: usize) -> f64 {
    if n == 0 {
        return chunk.len() as f64;
    }
    let mut prev = vec![1.0f64; chunk.len()];
    let mut cur = chunk.to_vec();
    for _ in 1..n {
        for ((p, c), &x) in prev.iter_mut().zip(cur.iter_mut()).zip(chunk) {
            let next = x * *c - *p;
            *p = *c;
            *c = next;
        }
    }
    exec::neumaier_sum(cur)
}

/// `sum_i X_n(lambda_i)`: the normalized trace of `T_{p^n}` on the space
/// the multiset came from.
pub fn sum_xn(values: &[f64], n: usize) -> f64 {
    exec::chunked_sum(values, |c| chunk_sum_xn(c, n))
}

/// `[sum_i X_0(lambda_i), ..., sum_i X_{n_max}(lambda_i)]`.
pub fn sum_xn_upto(values: &[f64], n_max: usize) -> Vec<f64> {
    let partials = exec::map_chunks(values, |chunk| {
        let mut sums = vec![0.0f64; n_max + 1];
        sums[0] = chunk.len() as f64;
        if n_max == 0 {
            return sums;
        }
        let mut prev = vec![1.0f64; chunk.len()];
        let mut cur = chunk.to_vec();
        sums[1] = exec::neumaier_sum(cur.iter().copied());
        for s in sums.iter_mut().skip(2) {
            for ((p, c), &x) in prev.iter_mut().zip(cur.iter_mut()).zip(chunk) {
                let next = x * *c - *p;
                *p = *c;
                *c = next;
            }
            *s = exec::neumaier_sum(cur.iter().copied());
        }
        sums
    });
    (0..=n_max)
        .map(|n| exec::neumaier_sum(partials.iter().map(|p| p[n])))
        .collect()
}

/// `(1 / dim) sum_i X_n(lambda_i)`.
pub fn empirical_moment(ms: &EigenMultiset, n: usize) -> Result<f64> {
    let dim = ms.normalizer()?;
    if n == 0 && dim == ms.len() {
        return Ok(1.0);
    }
    Ok(sum_xn(ms.values(), n) / dim as f64)
}

/// Groups validated records into one multiset per space, ordered by key.
pub fn group_records(
    records: &[EigenRecord],
    tol: NormalizeTol,
    complete: bool,
) -> Result<Vec<EigenMultiset>> {
    let mut groups: BTreeMap<SpaceKey, (DirichletCharacter, Vec<f64>)> = BTreeMap::new();
    for rec in records {
        let lambda = rec.normalize(tol)?;
        groups
            .entry(rec.key())
            .or_insert_with(|| (rec.character.clone(), Vec::new()))
            .1
            .push(lambda);
    }
    groups
        .into_iter()
        .map(|(key, (chi, values))| EigenMultiset::new(key, chi, values, complete))
        .collect()
}

/// Counts `s(N, k, chi)_r` of newforms whose coefficient field has degree `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub key: SpaceKey,
    /// Number of newforms (records) in the space, with or without a degree.
    pub total: usize,
    pub counts: BTreeMap<u32, usize>,
    /// `counts[r] / total`.
    pub proportions: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub spaces: Vec<DegreeHistogram>,
    /// Records without `field_degree`.
    pub skipped: usize,
}

/// Histogram of coefficient-field degrees `r <= r_max` per space.
pub fn degree_histogram(records: &[EigenRecord], r_max: u32) -> DegreeReport {
    let mut groups: BTreeMap<SpaceKey, (usize, BTreeMap<u32, usize>)> = BTreeMap::new();
    let mut skipped = 0;
    for rec in records {
        let entry = groups.entry(rec.key()).or_default();
        entry.0 += 1;
        match rec.field_degree {
            Some(r) if r <= r_max => *entry.1.entry(r).or_default() += 1,
            Some(_) => {}
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} record(s) without field_degree skipped in degree histogram");
    }
    let spaces = groups
        .into_iter()
        .map(|(key, (total, counts))| {
            let proportions = counts
                .iter()
                .map(|(&r, &c)| (r, c as f64 / total as f64))
                .collect();
            DegreeHistogram {
                key,
                total,
                counts,
                proportions,
            }
        })
        .collect();
    DegreeReport { spaces, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::cheb_eval;
    use proptest::prelude::*;

    fn prime(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn multiset(values: Vec<f64>) -> EigenMultiset {
        let chi = DirichletCharacter::trivial(11).unwrap();
        let key = SpaceKey {
            level: 11,
            weight: 2,
            char_label: "11.1".into(),
            p: prime(2),
        };
        EigenMultiset::new(key, chi, values, true).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let tol = NormalizeTol::default();
        let one = RootOfUnity::ONE;
        assert_eq!(
            normalize_ap(Complex64::new(0.0, 0.0), one, prime(5), 4, tol).unwrap(),
            0.0
        );
        let ap = Complex64::new(2.0 * 5f64.powf(1.5), 0.0);
        assert!((normalize_ap(ap, one, prime(5), 4, tol).unwrap() - 2.0).abs() < 1e-15);
        let i = RootOfUnity::new(1, 4).unwrap();
        let ap = Complex64::new(1.0, 1.0) * 3f64.powf(0.5);
        let got = normalize_ap(ap, i, prime(3), 2, tol).unwrap();
        assert!((got - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalize_errors() {
        let tol = NormalizeTol::default();
        let i = RootOfUnity::new(1, 4).unwrap();
        // a branch mismatch leaves an imaginary part
        let ap = Complex64::new(1.0, -1.0);
        assert!(matches!(
            normalize_ap(ap, i, prime(2), 2, tol),
            Err(Error::ImaginaryResidue { .. })
        ));
        let ap = Complex64::new(2.5 * 2f64.sqrt(), 0.0);
        assert!(matches!(
            normalize_ap(ap, RootOfUnity::ONE, prime(2), 2, tol),
            Err(Error::RamanujanBound { .. })
        ));
        let ap = Complex64::new(2.0 * 2f64.sqrt() + 1e-9, 0.0);
        assert_eq!(
            normalize_ap(ap, RootOfUnity::ONE, prime(2), 2, tol).unwrap(),
            2.0
        );
    }

    #[test]
    fn record_rejects_p_dividing_level() {
        let chi = DirichletCharacter::trivial(10).unwrap();
        let err = EigenRecord::with_lambda(10, 2, chi, prime(5), 0.3).unwrap_err();
        assert!(err.to_string().contains("p divides N"));
    }

    #[test]
    fn record_rejects_wrong_parity() {
        let odd = DirichletCharacter::from_label("5.2").unwrap();
        assert!(EigenRecord::with_lambda(5, 2, odd.clone(), prime(2), 0.0).is_err());
        assert!(EigenRecord::with_lambda(5, 3, odd, prime(2), 0.0).is_ok());
    }

    #[test]
    fn lambda_wins_but_is_cross_checked() {
        let chi = DirichletCharacter::from_label("5.2").unwrap();
        let chi_p = chi.evaluate(3).unwrap();
        let mut rec = EigenRecord::with_lambda(5, 3, chi, prime(3), 0.75).unwrap();
        rec.ap = Some(denormalize(0.75, chi_p, prime(3), 3));
        assert!((rec.normalize(NormalizeTol::default()).unwrap() - 0.75).abs() < 1e-15);
        rec.ap = Some(denormalize(0.70, chi_p, prime(3), 3));
        assert!(matches!(
            rec.normalize(NormalizeTol::default()),
            Err(Error::DataIntegrity(_))
        ));
    }

    #[test]
    fn sum_xn_examples() {
        assert_eq!(sum_xn(&[2.0], 1), 2.0);
        assert_eq!(sum_xn(&[0.0, 0.0], 2), -2.0);
        assert_eq!(sum_xn(&[], 5), 0.0);
        let xs: Vec<f64> = (0..100)
            .map(|i| -2.0 + 4.0 * ((i * 37 % 100) as f64 + 0.5) / 100.0)
            .collect();
        let direct: f64 = xs.iter().map(|&x| cheb_eval(6, x)).sum();
        assert!((sum_xn(&xs, 6) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn sum_xn_upto_matches_single_sums() {
        let xs: Vec<f64> = (0..3000).map(|i| 2.0 * (i as f64 * 0.731).sin()).collect();
        let all = sum_xn_upto(&xs, 9);
        for (n, s) in all.iter().enumerate() {
            assert!((s - sum_xn(&xs, n)).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn empirical_moment_examples() {
        assert_eq!(empirical_moment(&multiset(vec![0.0]), 0).unwrap(), 1.0);
        assert_eq!(
            empirical_moment(&multiset(vec![1.0, -1.0]), 1).unwrap(),
            0.0
        );
        let l = 0.3;
        assert!((empirical_moment(&multiset(vec![l]), 2).unwrap() - (l * l - 1.0)).abs() < 1e-16);
    }

    #[test]
    fn empty_multiset_cites_zero_dimension() {
        let err = empirical_moment(&multiset(vec![]), 1).unwrap_err();
        assert!(err.to_string().contains("dim S_k^new(N, k, chi) = 0"));
    }

    #[test]
    fn incomplete_multiset_needs_dimension() {
        let mut ms = multiset(vec![0.5, -0.5]);
        ms.complete = false;
        assert!(empirical_moment(&ms, 2).is_err());
        let ms = ms.with_dimension(4);
        assert!((empirical_moment(&ms, 0).unwrap() - 0.5).abs() < 1e-16);
    }

    fn with_degree(deg: Option<u32>) -> EigenRecord {
        let chi = DirichletCharacter::trivial(23).unwrap();
        let mut rec = EigenRecord::with_lambda(23, 2, chi, prime(2), 0.1).unwrap();
        rec.field_degree = deg;
        rec
    }

    #[test]
    fn degree_histogram_examples() {
        let empty = degree_histogram(&[], 3);
        assert!(empty.spaces.is_empty() && empty.skipped == 0);

        let two = degree_histogram(&[with_degree(Some(1)), with_degree(Some(1))], 3);
        assert_eq!(two.spaces[0].counts, BTreeMap::from([(1, 2)]));
        assert_eq!(two.spaces[0].proportions, BTreeMap::from([(1, 1.0)]));

        let recs: Vec<_> = [1, 2, 2, 5]
            .into_iter()
            .map(|d| with_degree(Some(d)))
            .collect();
        let h = degree_histogram(&recs, 2);
        assert_eq!(h.spaces[0].counts, BTreeMap::from([(1, 1), (2, 2)]));
        assert_eq!(
            h.spaces[0].proportions,
            BTreeMap::from([(1, 0.25), (2, 0.5)])
        );

        let mixed = degree_histogram(&[with_degree(Some(2)), with_degree(None)], 5);
        assert_eq!(mixed.skipped, 1);
        assert_eq!(mixed.spaces[0].proportions[&2], 0.5);
    }

    proptest! {
        #[test]
        fn normalize_inverts_denormalize(lambda in -2.0f64..=2.0, a in 0u64..120, m in 1u64..120, k in 2u32..=50, pi in 0usize..6) {
            let p = prime([2, 3, 5, 7, 11, 13][pi]);
            let z = RootOfUnity::new(a, m).unwrap();
            let ap = denormalize(lambda, z, p, k);
            let back = normalize_ap(ap, z, p, k, NormalizeTol::default()).unwrap();
            prop_assert!((back - lambda).abs() <= 1e-10);
        }

        #[test]
        fn zeroth_moment_is_one(values in proptest::collection::vec(-2.0f64..=2.0, 1..500)) {
            prop_assert_eq!(empirical_moment(&multiset(values), 0).unwrap(), 1.0);
        }

        #[test]
        fn proportions_sum_to_at_most_one(degs in proptest::collection::vec(proptest::option::of(1u32..8), 1..40)) {
            let recs: Vec<_> = degs.iter().map(|&d| with_degree(d)).collect();
            let h = degree_histogram(&recs, 8);
            let total: f64 = h.spaces[0].proportions.values().sum();
            prop_assert!(total <= 1.0 + 1e-12);
            if degs.iter().all(|d| d.is_some()) {
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
