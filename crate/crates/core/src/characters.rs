//! Dirichlet characters modulo `N` with exact root-of-unity values.
//!
//! A character is stored as the images of a fixed generating set of
//! `(Z/NZ)^*`. The generating set is built prime by prime and lifted by CRT:
//!
//! * odd `p^e`: the least `g` that is a primitive root modulo `p` and modulo
//!   `p^2` (hence modulo every `p^e`);
//! * `4`: `-1`;
//! * `2^e`, `e >= 3`: `-1` and `3`.
//!
//! Discrete logarithms are read from tables built by enumerating the powers
//! of each local generator.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::factorize;

/// Tag recorded in datasets and reports for the square-root branch used in
/// the eigenvalue normalization.
pub const BRANCH_CONVENTION: &str =
    "chi(p)^(-1/2) = exp(-pi*i*t) where chi(p) = exp(2*pi*i*t), t in [0,1)";

/// `exp(2 pi i a / m)` kept in lowest terms with `0 <= a < m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootOfUnity {
    num: u64,
    order: u64,
}

impl RootOfUnity {
    pub const ONE: RootOfUnity = RootOfUnity { num: 0, order: 1 };

    pub fn new(a: u64, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("root of unity with order 0"));
        }
        let a = a % m;
        let g = a.gcd(&m);
        Ok(RootOfUnity {
            num: a / g,
            order: m / g,
        })
    }

    /// Numerator of the reduced fraction `t = a/m`.
    pub fn numerator(self) -> u64 {
        self.num
    }

    /// Exact multiplicative order.
    pub fn order(self) -> u64 {
        self.order
    }

    /// The angle fraction `t` in `[0, 1)`.
    pub fn fraction(self) -> f64 {
        self.num as f64 / self.order as f64
    }

    pub fn is_one(self) -> bool {
        self.num == 0
    }

    pub fn pow(self, k: u64) -> RootOfUnity {
        let a = (self.num as u128 * k as u128) % self.order as u128;
        RootOfUnity::new(a as u64, self.order).expect("nonzero order")
    }

    pub fn inverse(self) -> RootOfUnity {
        RootOfUnity::new(self.order - self.num, self.order).expect("nonzero order")
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * self.fraction())
    }
}

impl std::ops::Mul for RootOfUnity {
    type Output = RootOfUnity;

    fn mul(self, other: RootOfUnity) -> RootOfUnity {
        let l = self.order.lcm(&other.order) as u128;
        let a = self.num as u128 * (l / self.order as u128)
            + other.num as u128 * (l / other.order as u128);
        RootOfUnity::new((a % l) as u64, l as u64).expect("nonzero order")
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.order) {
            (0, _) => write!(f, "1"),
            (1, 2) => write!(f, "-1"),
            (a, m) => write!(f, "e({a}/{m})"),
        }
    }
}

/// `chi(p)^(-1/2)` on the fixed branch: `exp(2 pi i t) -> exp(-pi i t)`.
pub fn principal_inv_sqrt(z: RootOfUnity) -> Complex64 {
    let angle = std::f64::consts::PI * z.fraction();
    Complex64::new(angle.cos(), -angle.sin())
}

/// The square root on the same branch, `exp(2 pi i t) -> exp(pi i t)`.
pub fn principal_sqrt(z: RootOfUnity) -> Complex64 {
    principal_inv_sqrt(z).conj()
}

/// [`principal_inv_sqrt`] for a character value that may be zero.
pub fn inv_sqrt_of_value(value: Option<RootOfUnity>) -> Result<Complex64> {
    value.map(principal_inv_sqrt).ok_or_else(|| {
        Error::domain("chi(p) = 0: p divides the level, the level must be coprime to p")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    /// Parity `(-1)^k` required of a nebentypus in weight `k`.
    pub fn of_weight(k: u32) -> Parity {
        if k.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let e = (a as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let (mut acc, mut b) = (1u128 % m as u128, base as u128 % m as u128);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        exp >>= 1;
    }
    acc as u64
}

fn is_primitive_root(g: u64, p: u64) -> bool {
    let phi = p - 1;
    factorize(phi)
        .expect("p - 1 is positive")
        .factors()
        .iter()
        .all(|&(q, _)| pow_mod(g, phi / q, p) != 1)
}

/// Least primitive root modulo `p` that stays primitive modulo `p^2`.
fn odd_prime_generator(p: u64) -> u64 {
    (2..p)
        .find(|&g| is_primitive_root(g, p) && pow_mod(g, p - 1, p * p) != 1)
        .expect("odd primes have primitive roots")
}

#[derive(Debug)]
enum LocalKind {
    /// Cyclic group with generator `g`; `dlog[x]` is the exponent of `x`.
    Cyclic { g: u64 },
    /// `(Z/2^e)^*`, `e >= 2`: `x = (-1)^s 3^j`, stored as `j | s << 31`.
    TwoPower,
    /// `(Z/2)^*`, the trivial group.
    Trivial,
}

#[derive(Debug)]
struct LocalComponent {
    p: u64,
    e: u32,
    pe: u64,
    kind: LocalKind,
    dlog: Vec<u32>,
    /// Index of the first generator of this component in the flat list.
    first_gen: usize,
}

const NOT_A_UNIT: u32 = u32::MAX;
const SIGN_BIT: u32 = 1 << 31;

impl LocalComponent {
    fn new(p: u64, e: u32, first_gen: usize) -> Self {
        let pe = p.pow(e);
        let mut dlog = vec![NOT_A_UNIT; pe as usize];
        let kind = if p == 2 && e == 1 {
            dlog[1] = 0;
            LocalKind::Trivial
        } else if p == 2 {
            let mut x = 1u64;
            for j in 0..pe / 4 {
                dlog[x as usize] = j as u32;
                dlog[(pe - x) as usize] = j as u32 | SIGN_BIT;
                x = x * 3 % pe;
            }
            LocalKind::TwoPower
        } else {
            let g = odd_prime_generator(p);
            let mut x = 1u64;
            for j in 0..pe / p * (p - 1) {
                dlog[x as usize] = j as u32;
                x = x * g % pe;
            }
            LocalKind::Cyclic { g }
        };
        LocalComponent {
            p,
            e,
            pe,
            kind,
            dlog,
            first_gen,
        }
    }

    /// Local generators as `(residue mod p^e, order)`.
    fn generators(&self) -> Vec<(u64, u64)> {
        match self.kind {
            LocalKind::Trivial => vec![],
            LocalKind::Cyclic { g } => vec![(g, self.pe / self.p * (self.p - 1))],
            LocalKind::TwoPower if self.e == 2 => vec![(self.pe - 1, 2)],
            LocalKind::TwoPower => vec![(self.pe - 1, 2), (3, self.pe / 4)],
        }
    }

    /// Coordinates of the unit `x mod p^e` along the local generators.
    fn coordinates(&self, x: u64) -> Option<Vec<u64>> {
        let d = self.dlog[(x % self.pe) as usize];
        if d == NOT_A_UNIT {
            return None;
        }
        Some(match self.kind {
            LocalKind::Trivial => vec![],
            LocalKind::Cyclic { .. } => vec![d as u64],
            LocalKind::TwoPower => {
                let sign = u64::from(d & SIGN_BIT != 0);
                if self.e == 2 {
                    vec![sign]
                } else {
                    vec![sign, (d & !SIGN_BIT) as u64]
                }
            }
        })
    }
}

/// The unit group `(Z/NZ)^*` with its fixed generators and discrete-log tables.
#[derive(Debug)]
pub struct UnitGroup {
    modulus: u64,
    components: Vec<LocalComponent>,
    generators: Vec<(u64, u64)>,
}

impl UnitGroup {
    pub fn new(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::domain("modulus must be positive"));
        }
        let mut components = Vec::new();
        let mut generators = Vec::new();
        for &(p, e) in factorize(modulus)?.factors() {
            if p.pow(e) > u32::MAX as u64 / 2 {
                return Err(Error::domain(format!(
                    "prime power {p}^{e} too large for discrete-log tables"
                )));
            }
            let comp = LocalComponent::new(p, e, generators.len());
            let rest = modulus / comp.pe;
            for (g, order) in comp.generators() {
                generators.push((crt_lift(g, comp.pe, rest), order));
            }
            components.push(comp);
        }
        Ok(UnitGroup {
            modulus,
            components,
            generators,
        })
    }

    /// Shared instance for `modulus`; construction cost is linear in the
    /// largest prime power dividing it.
    pub fn shared(modulus: u64) -> Result<Arc<UnitGroup>> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<UnitGroup>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(g) = cache.lock().expect("unit group cache").get(&modulus) {
            return Ok(Arc::clone(g));
        }
        let group = Arc::new(UnitGroup::new(modulus)?);
        let mut guard = cache.lock().expect("unit group cache");
        Ok(Arc::clone(guard.entry(modulus).or_insert(group)))
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `(generator mod N, order)` pairs; the orders multiply to `phi(N)`.
    pub fn generators(&self) -> &[(u64, u64)] {
        &self.generators
    }

    pub fn order(&self) -> u64 {
        self.generators.iter().map(|&(_, o)| o).product()
    }

    /// Exponents `c_j` with `a = prod g_j^{c_j} mod N`, or `None` when
    /// `gcd(a, N) > 1`.
    pub fn coordinates(&self, a: i64) -> Option<Vec<u64>> {
        let a = a.rem_euclid(self.modulus as i64) as u64;
        if a.gcd(&self.modulus) != 1 {
            return None;
        }
        let mut out = Vec::with_capacity(self.generators.len());
        for comp in &self.components {
            debug_assert_eq!(out.len(), comp.first_gen);
            out.extend(comp.coordinates(a)?);
        }
        Some(out)
    }
}

/// The unique `x mod (m * rest)` with `x = r mod m` and `x = 1 mod rest`.
fn crt_lift(r: u64, m: u64, rest: u64) -> u64 {
    if rest == 1 {
        return r % m;
    }
    // x = 1 + rest * t, with rest * t = r - 1 (mod m)
    let inv = mod_inverse(rest % m, m) as u128;
    let t = ((r + m - 1) % m) as u128 * inv % m as u128;
    (1 + rest as u128 * t) as u64 % (m * rest)
}

/// Generators and orders of `(Z/NZ)^*` in the fixed convention of this crate.
pub fn unit_group_structure(modulus: u64) -> Result<Vec<(u64, u64)>> {
    Ok(UnitGroup::new(modulus)?.generators)
}

/// A Dirichlet character modulo `N`, given by the images of the generators
/// of [`UnitGroup`].
#[derive(Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    images: Vec<RootOfUnity>,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletCharacter")
            .field("modulus", &self.modulus())
            .field("images", &self.images)
            .finish()
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.modulus() == other.modulus() && self.images == other.images
    }
}

impl Eq for DirichletCharacter {}

impl DirichletCharacter {
    /// Builds a character from generator images; each image's order must
    /// divide the order of its generator.
    pub fn new(modulus: u64, images: Vec<RootOfUnity>) -> Result<Self> {
        let group = UnitGroup::shared(modulus)?;
        if images.len() != group.generators.len() {
            return Err(Error::domain(format!(
                "modulus {modulus} has {} generators, got {} images",
                group.generators.len(),
                images.len()
            )));
        }
        for (&(g, order), z) in group.generators.iter().zip(&images) {
            if order % z.order() != 0 {
                return Err(Error::domain(format!(
                    "image {z} of generator {g} has order {} not dividing {order}",
                    z.order()
                )));
            }
        }
        Ok(DirichletCharacter { group, images })
    }

    pub fn trivial(modulus: u64) -> Result<Self> {
        let group = UnitGroup::shared(modulus)?;
        let images = vec![RootOfUnity::ONE; group.generators.len()];
        Ok(DirichletCharacter { group, images })
    }

    /// The character sending generator `j` to `exp(2 pi i c_j / order_j)`.
    pub fn from_exponents(modulus: u64, exponents: &[u64]) -> Result<Self> {
        let group = UnitGroup::shared(modulus)?;
        if exponents.len() != group.generators.len() {
            return Err(Error::domain(
                "exponent count does not match generator count",
            ));
        }
        let images = group
            .generators
            .iter()
            .zip(exponents)
            .map(|(&(_, order), &c)| RootOfUnity::new(c, order))
            .collect::<Result<_>>()?;
        Ok(DirichletCharacter { group, images })
    }

    /// Every character modulo `N`, in lexicographic order of exponents.
    pub fn all(modulus: u64) -> Result<Vec<Self>> {
        let group = UnitGroup::shared(modulus)?;
        let orders: Vec<u64> = group.generators.iter().map(|&(_, o)| o).collect();
        let mut out = Vec::with_capacity(group.order() as usize);
        let mut exps = vec![0u64; orders.len()];
        loop {
            out.push(Self::from_exponents(modulus, &exps)?);
            let mut i = exps.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                exps[i] += 1;
                if exps[i] < orders[i] {
                    break;
                }
                exps[i] = 0;
            }
        }
    }

    /// The Conrey character `chi_N(c, .)`.
    pub fn from_conrey(modulus: u64, index: u64) -> Result<Self> {
        if modulus == 0 || index.gcd(&modulus) != 1 || (modulus > 1 && index >= modulus) {
            return Err(Error::domain(format!(
                "{modulus}.{index} is not a Conrey label (need 1 <= c < N, gcd(c, N) = 1)"
            )));
        }
        let group = UnitGroup::shared(modulus)?;
        let images = group
            .generators
            .iter()
            .map(|&(g, _)| conrey_value(modulus, index, g))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .map(|v| v.expect("generators are units"))
            .collect();
        Self::new(modulus, images)
    }

    /// Parses a Conrey label `"N.c"`.
    pub fn from_label(label: &str) -> Result<Self> {
        let parse = || -> Option<(u64, u64)> {
            let (n, c) = label.split_once('.')?;
            Some((n.parse().ok()?, c.parse().ok()?))
        };
        let (n, c) =
            parse().ok_or_else(|| Error::domain(format!("malformed character label {label:?}")))?;
        Self::from_conrey(n, c)
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn group(&self) -> &UnitGroup {
        &self.group
    }

    pub fn images(&self) -> &[RootOfUnity] {
        &self.images
    }

    /// `chi(a)`, with `None` standing for the value 0 when `gcd(a, N) > 1`.
    pub fn evaluate(&self, a: i64) -> Option<RootOfUnity> {
        let coords = self.group.coordinates(a)?;
        Some(
            coords
                .iter()
                .zip(&self.images)
                .fold(RootOfUnity::ONE, |acc, (&c, z)| acc * z.pow(c)),
        )
    }

    pub fn order(&self) -> u64 {
        self.images.iter().fold(1, |acc, z| acc.lcm(&z.order()))
    }

    pub fn is_principal(&self) -> bool {
        self.images.iter().all(|z| z.is_one())
    }

    pub fn parity(&self) -> Parity {
        match self.evaluate(-1) {
            Some(z) if !z.is_one() => Parity::Odd,
            _ => Parity::Even,
        }
    }

    /// Least `f | N` through which the character factors.
    ///
    /// Computed prime by prime: the `p`-part of the conductor is the least
    /// `p^c` such that the local character kills the units `= 1 mod p^c`,
    /// a cyclic group generated by `1 + p^c` (for `c >= 1`, `c >= 2` at 2).
    pub fn conductor(&self) -> u64 {
        let n = self.modulus();
        let mut f = 1u64;
        for comp in &self.group.components {
            let rest = n / comp.pe;
            let local = |x: u64| {
                self.evaluate(crt_lift(x, comp.pe, rest) as i64)
                    .expect("unit")
            };
            let gens = &self.images[comp.first_gen..comp.first_gen + comp.generators().len()];
            if gens.iter().all(|z| z.is_one()) {
                continue;
            }
            let start = if comp.p == 2 { 2 } else { 1 };
            let c = (start..=comp.e)
                .find(|&c| c == comp.e || local(1 + comp.p.pow(c)).is_one())
                .expect("c = e always works");
            f *= comp.p.pow(c);
        }
        f
    }

    /// The character modulo `multiple` induced from this one.
    pub fn extend_to(&self, multiple: u64) -> Result<Self> {
        if multiple == 0 || !multiple.is_multiple_of(self.modulus()) {
            return Err(Error::domain(format!(
                "{} does not divide {multiple}",
                self.modulus()
            )));
        }
        let group = UnitGroup::shared(multiple)?;
        let images = group
            .generators
            .iter()
            .map(|&(g, _)| self.evaluate(g as i64).expect("units of N are units of f"))
            .collect();
        Self::new(multiple, images)
    }

    /// Character value at a prime for use in the eigenvalue normalization.
    pub fn value_at_prime(&self, p: u64) -> Result<RootOfUnity> {
        self.evaluate(p as i64).ok_or_else(|| {
            Error::domain(format!(
                "p = {p} divides the level {}, which must be coprime to p",
                self.modulus()
            ))
        })
    }

    /// Canonical text label, `N.[t_1,t_2,...]` with `t_j` the image fractions.
    pub fn canonical_label(&self) -> String {
        let parts: Vec<String> = self
            .images
            .iter()
            .map(|z| format!("{}/{}", z.numerator(), z.order()))
            .collect();
        format!("{}.[{}]", self.modulus(), parts.join(","))
    }

    pub fn to_record(&self) -> CharacterRecord {
        CharacterRecord {
            modulus: self.modulus(),
            images: self
                .group
                .generators
                .iter()
                .zip(&self.images)
                .map(|(&(g, _), z)| [g, z.numerator(), z.order()])
                .collect(),
        }
    }
}

/// Serialized form `{"modulus": N, "images": [[g, a, m], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterRecord {
    pub modulus: u64,
    pub images: Vec<[u64; 3]>,
}

impl TryFrom<&CharacterRecord> for DirichletCharacter {
    type Error = Error;

    fn try_from(rec: &CharacterRecord) -> Result<Self> {
        let group = UnitGroup::shared(rec.modulus)?;
        let mut images = Vec::with_capacity(group.generators.len());
        for &(g, _) in &group.generators {
            let hits: Vec<_> = rec.images.iter().filter(|img| img[0] == g).collect();
            match hits.as_slice() {
                [img] => images.push(RootOfUnity::new(img[1], img[2])?),
                [] => {
                    return Err(Error::domain(format!(
                        "no image given for generator {g} mod {}",
                        rec.modulus
                    )))
                }
                _ => return Err(Error::domain(format!("generator {g} listed twice"))),
            }
        }
        if rec.images.len() != images.len() {
            return Err(Error::domain(format!(
                "images list names generators outside the fixed set {:?}",
                group.generators
            )));
        }
        DirichletCharacter::new(rec.modulus, images)
    }
}

impl Serialize for DirichletCharacter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DirichletCharacter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = CharacterRecord::deserialize(d)?;
        DirichletCharacter::try_from(&rec).map_err(serde::de::Error::custom)
    }
}

/// Value of the Conrey character `chi_N(m, n)`.
///
/// Odd `p^e`: `e(log m * log n / phi(p^e))` with logs to the Conrey
/// generator. `2^e`: writing `x = eps_x 5^{a_x}`,
/// `e((1 - eps_m)(1 - eps_n)/8 + a_m a_n / 2^(e-2))`.
pub fn conrey_value(modulus: u64, m: u64, n: u64) -> Result<Option<RootOfUnity>> {
    if m.gcd(&modulus) != 1 {
        return Err(Error::domain(format!(
            "Conrey index {m} is not a unit mod {modulus}"
        )));
    }
    if n.gcd(&modulus) != 1 {
        return Ok(None);
    }
    let mut acc = RootOfUnity::ONE;
    for &(p, e) in factorize(modulus)?.factors() {
        let pe = p.pow(e);
        let (ml, nl) = (m % pe, n % pe);
        let local = if p == 2 {
            match e {
                1 => RootOfUnity::ONE,
                2 => RootOfUnity::new(u64::from(ml % 4 == 3 && nl % 4 == 3), 2)?,
                _ => {
                    let split = |x: u64| -> (bool, u64) {
                        let neg = x % 4 == 3;
                        let target = if neg { pe - x } else { x };
                        let mut y = 1u64;
                        let mut a = 0u64;
                        while y != target {
                            y = y * 5 % pe;
                            a += 1;
                        }
                        (neg, a)
                    };
                    let ((sm, am), (sn, an)) = (split(ml), split(nl));
                    let sign = RootOfUnity::new(u64::from(sm && sn), 2)?;
                    sign * RootOfUnity::new(
                        (am as u128 * an as u128 % (pe / 4) as u128) as u64,
                        pe / 4,
                    )?
                }
            }
        } else {
            let g = odd_prime_generator(p);
            let phi = pe / p * (p - 1);
            let log = |x: u64| -> u64 {
                let mut y = 1u64;
                let mut a = 0u64;
                while y != x {
                    y = y * g % pe;
                    a += 1;
                }
                a
            };
            RootOfUnity::new(
                (log(ml) as u128 * log(nl) as u128 % phi as u128) as u64,
                phi,
            )?
        };
        acc = acc * local;
    }
    Ok(Some(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rou(a: u64, m: u64) -> RootOfUnity {
        RootOfUnity::new(a, m).unwrap()
    }

    #[test]
    fn unit_group_examples() {
        assert_eq!(unit_group_structure(1).unwrap(), vec![]);
        assert_eq!(unit_group_structure(5).unwrap(), vec![(2, 4)]);
        assert_eq!(unit_group_structure(8).unwrap(), vec![(7, 2), (3, 2)]);
    }

    // Brute force: the generators span a group of size phi(N) with the
    // stated orders.
    #[test]
    fn unit_group_brute_force() {
        for n in 1..=300u64 {
            let gens = unit_group_structure(n).unwrap();
            let phi = (1..=n).filter(|a| a.gcd(&n) == 1).count() as u64;
            assert_eq!(
                gens.iter().map(|g| g.1).product::<u64>(),
                phi.max(1),
                "N = {n}"
            );
            for &(g, order) in &gens {
                let mut x = 1u64 % n;
                for k in 1..=order {
                    x = x * g % n;
                    assert_eq!(x == 1 % n, k == order, "order of {g} mod {n}");
                }
            }
            let mut span = std::collections::HashSet::from([1 % n]);
            for &(g, order) in &gens {
                let current: Vec<u64> = span.iter().copied().collect();
                for x in current {
                    let mut y = x;
                    for _ in 1..order {
                        y = y * g % n;
                        span.insert(y);
                    }
                }
            }
            assert_eq!(span.len() as u64, phi.max(1), "span mod {n}");
        }
    }

    #[test]
    fn evaluate_examples() {
        let trivial = DirichletCharacter::trivial(1).unwrap();
        assert_eq!(trivial.evaluate(7), Some(RootOfUnity::ONE));

        let chi5 = DirichletCharacter::new(5, vec![rou(1, 4)]).unwrap();
        assert_eq!(chi5.evaluate(4), Some(rou(1, 2)));
        assert_eq!(chi5.evaluate(-1), Some(rou(1, 2)));
        assert_eq!(chi5.evaluate(5), None);

        for chi in DirichletCharacter::all(6).unwrap() {
            assert_eq!(chi.evaluate(3), None);
        }
    }

    #[test]
    fn conductor_examples() {
        assert_eq!(DirichletCharacter::trivial(12).unwrap().conductor(), 1);
        let chi5 = DirichletCharacter::new(5, vec![rou(1, 4)]).unwrap();
        assert_eq!(chi5.conductor(), 5);
        let quad5 = DirichletCharacter::new(5, vec![rou(1, 2)]).unwrap();
        assert_eq!(quad5.extend_to(10).unwrap().conductor(), 5);
    }

    #[test]
    fn parity_examples() {
        assert_eq!(
            DirichletCharacter::trivial(9).unwrap().parity(),
            Parity::Even
        );
        let chi5 = DirichletCharacter::new(5, vec![rou(1, 4)]).unwrap();
        assert_eq!(chi5.parity(), Parity::Odd);
        let chi8 = DirichletCharacter::new(8, vec![rou(1, 2), RootOfUnity::ONE]).unwrap();
        assert_eq!(chi8.parity().sign(), -1);
    }

    #[test]
    fn principal_inv_sqrt_examples() {
        let close = |a: Complex64, b: Complex64| (a - b).norm() < 1e-15;
        assert!(close(
            principal_inv_sqrt(RootOfUnity::ONE),
            Complex64::new(1.0, 0.0)
        ));
        assert!(close(
            principal_inv_sqrt(rou(1, 2)),
            Complex64::new(0.0, -1.0)
        ));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(principal_inv_sqrt(rou(1, 4)), Complex64::new(r, -r)));
        assert!(matches!(inv_sqrt_of_value(None), Err(Error::Domain(_))));
    }

    #[test]
    fn inv_sqrt_squares_back() {
        for m in 1..=100u64 {
            for a in 0..m {
                let z = rou(a, m);
                let w = principal_inv_sqrt(z);
                let one = w * w * z.to_complex();
                assert!(
                    (one.re - 1.0).abs() <= 1e-14 && one.im.abs() <= 1e-14,
                    "{a}/{m}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_images() {
        assert!(DirichletCharacter::new(5, vec![rou(1, 3)]).is_err());
        assert!(DirichletCharacter::new(8, vec![rou(1, 2)]).is_err());
    }

    #[test]
    fn conrey_known_characters() {
        let c52 = DirichletCharacter::from_label("5.2").unwrap();
        assert_eq!(c52.evaluate(2), Some(rou(1, 4)));
        let c43 = DirichletCharacter::from_label("4.3").unwrap();
        assert_eq!(c43.evaluate(3), Some(rou(1, 2)));
        // 8.5 is the Kronecker symbol (2/.), 8.3 is (-2/.)
        let c85 = DirichletCharacter::from_label("8.5").unwrap();
        let c83 = DirichletCharacter::from_label("8.3").unwrap();
        let sign =
            |chi: &DirichletCharacter, a| chi.evaluate(a).map(|z| if z.is_one() { 1 } else { -1 });
        assert_eq!(
            [3, 5, 7].map(|a| sign(&c85, a)),
            [Some(-1), Some(-1), Some(1)]
        );
        assert_eq!(
            [3, 5, 7].map(|a| sign(&c83, a)),
            [Some(1), Some(-1), Some(-1)]
        );
        assert_eq!((c85.conductor(), c85.parity()), (8, Parity::Even));
        assert_eq!((c83.conductor(), c83.parity()), (8, Parity::Odd));
        assert!(DirichletCharacter::from_label("1.1")
            .unwrap()
            .is_principal());
        assert!(DirichletCharacter::from_label("6.3").is_err());
        assert!(DirichletCharacter::from_label("six").is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let chi = DirichletCharacter::from_label("40.27").unwrap();
        let text = serde_json::to_string(&chi).unwrap();
        assert!(text.starts_with("{\"modulus\":40,\"images\":[["));
        let back: DirichletCharacter = serde_json::from_str(&text).unwrap();
        assert_eq!(back, chi);
        let bad = r#"{"modulus":5,"images":[[3,1,4]]}"#;
        assert!(serde_json::from_str::<DirichletCharacter>(bad).is_err());
    }

    proptest! {
        #[test]
        fn evaluate_is_multiplicative(n in 1u64..=1000, a in 0i64..100_000, b in 0i64..100_000, seed in any::<u64>()) {
            let group = UnitGroup::shared(n).unwrap();
            let exps: Vec<u64> = group.generators().iter().enumerate()
                .map(|(i, &(_, o))| seed.rotate_left(7 * i as u32) % o).collect();
            let chi = DirichletCharacter::from_exponents(n, &exps).unwrap();
            match (chi.evaluate(a), chi.evaluate(b)) {
                (Some(x), Some(y)) => prop_assert_eq!(chi.evaluate(a * b), Some(x * y)),
                _ => prop_assert_eq!(chi.evaluate(a * b), None),
            }
        }

        #[test]
        fn conrey_is_symmetric_and_multiplicative(n in 2u64..=400, a in 1u64..400, b in 1u64..400, x in 1u64..400) {
            let (a, b, x) = (a % n, b % n, x % n);
            prop_assume!(a.gcd(&n) == 1 && b.gcd(&n) == 1);
            prop_assert_eq!(conrey_value(n, a, x).unwrap(), if x.gcd(&n) == 1 { conrey_value(n, x, a).unwrap() } else { None });
            let lhs = DirichletCharacter::from_conrey(n, a * b % n).unwrap();
            let rhs_a = DirichletCharacter::from_conrey(n, a).unwrap();
            let rhs_b = DirichletCharacter::from_conrey(n, b).unwrap();
            let prod: Vec<_> = rhs_a.images().iter().zip(rhs_b.images()).map(|(u, v)| *u * *v).collect();
            prop_assert_eq!(lhs.images(), prod.as_slice());
        }

        #[test]
        fn parity_squares_to_one(n in 1u64..=500, seed in any::<u64>()) {
            let all = DirichletCharacter::all(n).unwrap();
            let chi = &all[(seed % all.len() as u64) as usize];
            prop_assert_eq!(chi.parity().sign().pow(2), 1);
        }
    }
}
