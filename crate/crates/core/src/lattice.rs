//! Picard lattice of the Hirzebruch surface `Σ_n` and the closed-form
//! numerology built on it.
//!
//! Classes are stored in the `(L0, F)` basis. The `(L∞, F)` basis is
//! available as a view through [`DivisorClass::linf_coords`] and
//! [`DivisorClass::from_linf`], using `L0 ≡ nF + L∞`.
//!
//! All arithmetic is checked `i64`; an overflow is reported as
//! [`LatticeError::Overflow`] rather than wrapping. Every halving is checked
//! for parity.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("surface mismatch: n={left} vs n={right}")]
    SurfaceMismatch { left: u32, right: u32 },
    #[error("non-effective class {d}L0{k:+}F")]
    NonEffective { d: i64, k: i64 },
    #[error("genus exceeds arithmetic genus: g={g}, arithmetic genus {max}")]
    GenusOutOfRange { g: i64, max: i64 },
    #[error("degree d={0} must be at least 1")]
    DegreeTooSmall(i64),
    #[error("negative argument: {0}")]
    Negative(&'static str),
    #[error("odd value {0} where an even one is required")]
    Parity(i64),
    #[error("integer overflow")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// The Hirzebruch index `n` of `Σ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurfaceParam(u32);

impl SurfaceParam {
    pub const fn new(n: u32) -> Self {
        Self(n)
    }

    pub const fn n(self) -> u32 {
        self.0
    }

    fn n_i64(self) -> i64 {
        i64::from(self.0)
    }
}

impl fmt::Display for SurfaceParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Σ_{}", self.0)
    }
}

/// A class `d·L0 + k·F` in `Pic(Σ_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DivisorClass {
    pub surface: SurfaceParam,
    pub d: i64,
    pub k: i64,
}

impl DivisorClass {
    pub const fn new(surface: SurfaceParam, d: i64, k: i64) -> Self {
        Self { surface, d, k }
    }

    pub const fn l0(surface: SurfaceParam) -> Self {
        Self::new(surface, 1, 0)
    }

    pub const fn fiber(surface: SurfaceParam) -> Self {
        Self::new(surface, 0, 1)
    }

    /// `L∞ ≡ L0 − nF`.
    pub fn linf(surface: SurfaceParam) -> Self {
        Self::new(surface, 1, -surface.n_i64())
    }

    /// Builds `a·L∞ + b·F`.
    pub fn from_linf(surface: SurfaceParam, a: i64, b: i64) -> Result<Self> {
        let shift = a.checked_mul(surface.n_i64()).ok_or(LatticeError::Overflow)?;
        let k = b.checked_sub(shift).ok_or(LatticeError::Overflow)?;
        Ok(Self::new(surface, a, k))
    }

    /// Coordinates `(a, b)` with `self ≡ a·L∞ + b·F`, i.e. `(d, k + n·d)`.
    pub fn linf_coords(&self) -> Result<(i64, i64)> {
        let shift = self.d.checked_mul(self.surface.n_i64()).ok_or(LatticeError::Overflow)?;
        let b = self.k.checked_add(shift).ok_or(LatticeError::Overflow)?;
        Ok((self.d, b))
    }

    /// Effective classes of curves not containing `L∞`: both coefficients
    /// non-negative in the `(L0, F)` basis.
    pub fn is_effective(&self) -> bool {
        self.d >= 0 && self.k >= 0
    }

    fn ensure_effective(&self) -> Result<()> {
        if self.is_effective() {
            Ok(())
        } else {
            Err(LatticeError::NonEffective { d: self.d, k: self.k })
        }
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        same_surface(&self, &other)?;
        Ok(Self::new(
            self.surface,
            self.d.checked_add(other.d).ok_or(LatticeError::Overflow)?,
            self.k.checked_add(other.k).ok_or(LatticeError::Overflow)?,
        ))
    }

    pub fn checked_scale(self, s: i64) -> Result<Self> {
        Ok(Self::new(
            self.surface,
            self.d.checked_mul(s).ok_or(LatticeError::Overflow)?,
            self.k.checked_mul(s).ok_or(LatticeError::Overflow)?,
        ))
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}L0{:+}F on {}", self.d, self.k, self.surface)
    }
}

// The operator impls panic on overflow or mismatched surfaces; the checked
// methods above are the fallible forms.
impl Add for DivisorClass {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("divisor addition")
    }
}

impl Sub for DivisorClass {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for DivisorClass {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(self.surface, -self.d, -self.k)
    }
}

impl Mul<DivisorClass> for i64 {
    type Output = DivisorClass;
    fn mul(self, rhs: DivisorClass) -> DivisorClass {
        rhs.checked_scale(self).expect("divisor scaling")
    }
}

fn same_surface(a: &DivisorClass, b: &DivisorClass) -> Result<()> {
    if a.surface == b.surface {
        Ok(())
    } else {
        Err(LatticeError::SurfaceMismatch { left: a.surface.n(), right: b.surface.n() })
    }
}

fn half_exact(x: i64) -> Result<i64> {
    if x % 2 != 0 {
        return Err(LatticeError::Parity(x));
    }
    Ok(x / 2)
}

/// Checked evaluation of small integer expressions.
macro_rules! checked {
    ($a:expr, +, $b:expr) => { i64::checked_add($a, $b).ok_or(LatticeError::Overflow)? };
    ($a:expr, -, $b:expr) => { i64::checked_sub($a, $b).ok_or(LatticeError::Overflow)? };
    ($a:expr, *, $b:expr) => { i64::checked_mul($a, $b).ok_or(LatticeError::Overflow)? };
}

/// Intersection number, `a.d·b.d·n + a.d·b.k + a.k·b.d` in the `(L0, F)` basis.
pub fn intersect(a: &DivisorClass, b: &DivisorClass) -> Result<i64> {
    same_surface(a, b)?;
    let n = a.surface.n_i64();
    let dd = checked!(checked!(a.d, *, b.d), *, n);
    let dk = checked!(a.d, *, b.k);
    let kd = checked!(a.k, *, b.d);
    Ok(checked!(checked!(dd, +, dk), +, kd))
}

/// `K ≡ −(L0 + L∞ + 2F) = −2·L0 + (n − 2)·F`.
pub fn canonical_class(s: SurfaceParam) -> DivisorClass {
    DivisorClass::new(s, -2, s.n_i64() - 2)
}

/// Genus `(d−1)(dn+2k−2)/2` of a smooth curve in `|dL0 + kF|`.
pub fn smooth_genus(c: &DivisorClass) -> Result<i64> {
    c.ensure_effective()?;
    let n = c.surface.n_i64();
    let second = checked!(checked!(checked!(c.d, *, n), +, checked!(2, *, c.k)), -, 2);
    half_exact(checked!(c.d - 1, *, second))
}

/// Genus by adjunction, `1 + (C² + C·K)/2`.
pub fn adjunction_genus(c: &DivisorClass) -> Result<i64> {
    let self_int = intersect(c, c)?;
    let with_k = intersect(c, &canonical_class(c.surface))?;
    Ok(checked!(1, +, half_exact(checked!(self_int, +, with_k))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeveriNumerology {
    /// Geometric genus.
    pub g: i64,
    /// Prescribed number of nodes.
    pub delta: i64,
    /// Nodes of the degenerate curve `L_1 ∪ … ∪ L_d ∪ F_1 ∪ … ∪ F_k`.
    pub delta_prime: i64,
    pub dim_lin_sys: i64,
    pub dim_severi: i64,
    /// Order of the maximal irreducible markings on the degenerate curve.
    pub r_max: i64,
}

/// Dimension counts of the Severi variety `V_{g,d,k}` on `Σ_n`.
pub fn severi_numerology(s: SurfaceParam, d: i64, k: i64, g: i64) -> Result<SeveriNumerology> {
    if d < 1 {
        return Err(LatticeError::DegreeTooSmall(d));
    }
    if k < 0 {
        return Err(LatticeError::NonEffective { d, k });
    }
    let n = s.n_i64();
    let p_a = smooth_genus(&DivisorClass::new(s, d, k))?;
    if g < 0 || g > p_a {
        return Err(LatticeError::GenusOutOfRange { g, max: p_a });
    }
    let nd = checked!(n, *, d);
    let two_k = checked!(2, *, k);
    let ll_pairs = half_exact(checked!(d, *, d - 1))?;
    let delta_prime = checked!(checked!(d, *, k), +, checked!(n, *, ll_pairs));
    let dim_lin_sys = checked!(half_exact(checked!(d + 1, *, checked!(checked!(nd, +, two_k), +, 2)))?, -, 1);
    let dim_severi = checked!(checked!(checked!(nd, +, two_k), +, checked!(checked!(2, *, d), +, g)), -, 1);
    let r_max = checked!(checked!(checked!(k, *, d - 1), +, checked!(n, *, ll_pairs)), -, d - 1);
    Ok(SeveriNumerology {
        g,
        delta: p_a - g,
        delta_prime,
        dim_lin_sys,
        dim_severi,
        r_max,
    })
}

/// Upper bound `−C·K + g − 1` on the dimension of a family of genus-`g`
/// curves in the class of `c`.
pub fn dim_bound_severi(c: &DivisorClass, g: i64) -> Result<i64> {
    c.ensure_effective()?;
    if g < 0 {
        return Err(LatticeError::Negative("g"));
    }
    let ck = intersect(c, &canonical_class(c.surface))?;
    Ok(checked!(checked!(0, -, ck), +, g - 1))
}

/// Bound `−C·K + g − 1 − L·C` for families with prescribed tangency to a
/// curve of class `L`.
pub fn dim_bound_tangency(c: &DivisorClass, g: i64, l_dot_c: i64) -> Result<i64> {
    if l_dot_c < 0 {
        return Err(LatticeError::Negative("lDotC"));
    }
    Ok(checked!(dim_bound_severi(c, g)?, -, l_dot_c))
}

/// [`dim_bound_tangency`] with `L = L0 + L∞`; always equals `2d + g − 1`.
pub fn dim_bound_tangency_sections(c: &DivisorClass, g: i64) -> Result<i64> {
    let l = DivisorClass::l0(c.surface).checked_add(DivisorClass::linf(c.surface))?;
    dim_bound_tangency(c, g, intersect(c, &l)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: u32) -> SurfaceParam {
        SurfaceParam::new(n)
    }

    #[test]
    fn intersection_examples() {
        let l0 = DivisorClass::l0(s(2));
        assert_eq!(intersect(&l0, &l0).unwrap(), 2);
        assert_eq!(intersect(&l0, &DivisorClass::linf(s(2))).unwrap(), 0);

        let a = DivisorClass::new(s(1), 3, 2);
        let b = DivisorClass::l0(s(1)) + DivisorClass::linf(s(1)) + 2 * DivisorClass::fiber(s(1));
        assert_eq!(intersect(&a, &b).unwrap(), 13);
    }

    #[test]
    fn intersection_rejects_mixed_surfaces() {
        let err = intersect(&DivisorClass::l0(s(1)), &DivisorClass::l0(s(2))).unwrap_err();
        assert_eq!(err, LatticeError::SurfaceMismatch { left: 1, right: 2 });
        assert!(err.to_string().contains("surface mismatch"));
    }

    #[test]
    fn linf_basis_values() {
        for n in 0..5 {
            let f = DivisorClass::fiber(s(n));
            let linf = DivisorClass::linf(s(n));
            assert_eq!(intersect(&f, &f).unwrap(), 0);
            assert_eq!(intersect(&linf, &linf).unwrap(), -(n as i64));
            assert_eq!(intersect(&f, &linf).unwrap(), 1);
        }
    }

    #[test]
    fn canonical_class_examples() {
        assert_eq!(canonical_class(s(0)), DivisorClass::new(s(0), -2, -2));
        assert_eq!(canonical_class(s(2)), DivisorClass::new(s(2), -2, 0));
        assert_eq!(canonical_class(s(1)), DivisorClass::new(s(1), -2, -1));
        // K ≡ −(2L∞ + (2+n)F)
        for n in 0..6 {
            assert_eq!(canonical_class(s(n)), DivisorClass::from_linf(s(n), -2, -(2 + n as i64)).unwrap());
        }
    }

    #[test]
    fn genus_examples() {
        for n in 0..4 {
            for k in 0..5 {
                assert_eq!(smooth_genus(&DivisorClass::new(s(n), 1, k)).unwrap(), 0);
            }
        }
        assert_eq!(smooth_genus(&DivisorClass::new(s(1), 3, 2)).unwrap(), 5);
        assert_eq!(adjunction_genus(&DivisorClass::new(s(1), 3, 2)).unwrap(), 5);
        assert_eq!(smooth_genus(&DivisorClass::new(s(0), 2, 2)).unwrap(), 1);
        assert!(matches!(
            smooth_genus(&DivisorClass::new(s(0), -1, 2)),
            Err(LatticeError::NonEffective { .. })
        ));
    }

    #[test]
    fn numerology_examples() {
        let num = severi_numerology(s(1), 2, 1, 0).unwrap();
        assert_eq!(num.delta_prime, 3);
        assert_eq!(num.r_max, 1);
        assert_eq!(num.delta, 1);
        assert_eq!(num.dim_lin_sys, 8);
        // nd + 2k + 2d + g − 1 = 2 + 2 + 4 + 0 − 1
        assert_eq!(num.dim_severi, 7);

        assert_eq!(severi_numerology(s(2), 1, 2, 0).unwrap().dim_lin_sys, 7);

        let num = severi_numerology(s(2), 2, 1, 0).unwrap();
        assert_eq!((num.delta_prime, num.r_max), (4, 2));

        assert_eq!(severi_numerology(s(1), 3, 2, 5).unwrap().dim_severi, 17);
    }

    #[test]
    fn numerology_rejects_large_genus() {
        let err = severi_numerology(s(0), 1, 0, 1).unwrap_err();
        assert_eq!(err, LatticeError::GenusOutOfRange { g: 1, max: 0 });
        assert!(err.to_string().contains("genus exceeds arithmetic genus"));
        assert!(severi_numerology(s(0), 0, 3, 0).is_err());
        assert!(severi_numerology(s(1), 2, 1, -1).is_err());
    }

    #[test]
    fn dimension_bounds() {
        assert_eq!(dim_bound_severi(&DivisorClass::new(s(1), 3, 2), 5).unwrap(), 17);
        assert_eq!(dim_bound_severi(&DivisorClass::l0(s(0)), 0).unwrap(), 1);

        assert_eq!(dim_bound_tangency_sections(&DivisorClass::new(s(1), 3, 2), 5).unwrap(), 10);
        assert_eq!(dim_bound_tangency_sections(&DivisorClass::new(s(2), 2, 1), 0).unwrap(), 3);

        let c = DivisorClass::new(s(3), 2, 4);
        assert_eq!(dim_bound_tangency(&c, 2, 0).unwrap(), dim_bound_severi(&c, 2).unwrap());
        assert!(dim_bound_tangency(&c, 2, -1).is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        let big = DivisorClass::new(s(4), i64::MAX / 2, 0);
        assert_eq!(intersect(&big, &big), Err(LatticeError::Overflow));
    }
}
