//! Discrete distributions: explicit finite supports and the built-in
//! families with analytic tails.
//!
//! Atoms are indexed 1, 2, 3, ... in enumeration order. For
//! `DyadicReciprocal` the enumeration order is *descending* in point
//! value (atom `n` is the point `1/n`); every other kind enumerates
//! points in ascending order. All atom points and masses are exact
//! rationals; only the infinite tail sums of `DyadicReciprocal` are
//! irrational and those are computed in float mode with a geometric
//! remainder bound.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::{Fp, Scalar, GUARD_BITS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistError {
    DuplicatePoint { index: usize },
    NonPositiveMass { index: usize },
    MassSumMismatch { sum: String },
    IndexOutOfRange { index: usize, size: usize },
    InvalidParameter { what: String },
    EmptyInput,
    LengthMismatch { points: usize, masses: usize },
}

impl fmt::Display for DistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistError::DuplicatePoint { index } => {
                write!(f, "duplicate support point at sorted index {}", index)
            }
            DistError::NonPositiveMass { index } => {
                write!(f, "non-positive mass at index {}", index)
            }
            DistError::MassSumMismatch { sum } => {
                write!(f, "masses sum to {} instead of 1", sum)
            }
            DistError::IndexOutOfRange { index, size } => {
                write!(f, "index {} out of range for support of size {}", index, size)
            }
            DistError::InvalidParameter { what } => write!(f, "invalid parameter: {}", what),
            DistError::EmptyInput => write!(f, "empty support"),
            DistError::LengthMismatch { points, masses } => {
                write!(f, "{} points but {} masses", points, masses)
            }
        }
    }
}

impl std::error::Error for DistError {}

/// Finite support: strictly ascending points with positive masses
/// summing to one.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    points: Vec<Scalar>,
    masses: Vec<Scalar>,
}

impl FiniteDistribution {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Scalar {
        &self.points[i - 1]
    }

    pub fn mass(&self, i: usize) -> &Scalar {
        &self.masses[i - 1]
    }

    pub fn points(&self) -> &[Scalar] {
        &self.points
    }

    pub fn masses(&self) -> &[Scalar] {
        &self.masses
    }
}

/// Built-in families with closed-form or rigorously bounded tail sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailFamily {
    /// Support `n`, mass `2^-n` for n = 1, 2, 3, ...
    GeometricNaturals,
    /// Support `1/n`, mass `2^-n` for n = 1, 2, 3, ... (points descend).
    DyadicReciprocal,
    /// Support `{1..m}` with masses `x, (1-x)x, ..., (1-x)^{m-2}x, (1-x)^{m-1}`.
    GeometricTruncated { m: usize, x: BigRational },
    /// Support all naturals with masses `(1-x)^{j-1} x`.
    GeometricInfinite { x: BigRational },
}

#[derive(Debug, Clone)]
pub enum DiscreteDistribution {
    Finite(FiniteDistribution),
    Family(TailFamily),
}

/// Suffix sums from index `k` to the end of the support:
/// `m0 = sum p_n`, `m1 = sum x_n p_n`, `m2 = sum x_n^2 p_n`.
#[derive(Debug, Clone)]
pub struct TailMoments {
    pub m0: Scalar,
    pub m1: Scalar,
    pub m2: Scalar,
}

fn check_unit_interval(x: &BigRational) -> Result<(), DistError> {
    if x <= &BigRational::zero() || x >= &BigRational::one() {
        Err(DistError::InvalidParameter {
            what: format!("x = {} not in (0, 1)", x),
        })
    } else {
        Ok(())
    }
}

/// Validate and build a finite distribution. Points are sorted (with
/// their masses); duplicates are rejected rather than merged.
pub fn make_finite(
    points: Vec<Scalar>,
    masses: Vec<Scalar>,
) -> Result<DiscreteDistribution, DistError> {
    make_finite_impl(points, masses, false)
}

/// Same as [`make_finite`] but rescales the masses to sum to one
/// instead of rejecting a mismatched sum.
pub fn make_finite_normalized(
    points: Vec<Scalar>,
    masses: Vec<Scalar>,
) -> Result<DiscreteDistribution, DistError> {
    make_finite_impl(points, masses, true)
}

fn make_finite_impl(
    points: Vec<Scalar>,
    masses: Vec<Scalar>,
    normalize: bool,
) -> Result<DiscreteDistribution, DistError> {
    if points.is_empty() {
        return Err(DistError::EmptyInput);
    }
    if points.len() != masses.len() {
        return Err(DistError::LengthMismatch {
            points: points.len(),
            masses: masses.len(),
        });
    }
    for (i, m) in masses.iter().enumerate() {
        if !(&Scalar::zero() < m) {
            return Err(DistError::NonPositiveMass { index: i + 1 });
        }
    }
    let mut pairs: Vec<(Scalar, Scalar)> = points.into_iter().zip(masses).collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    for (i, w) in pairs.windows(2).enumerate() {
        if w[0].0 == w[1].0 {
            return Err(DistError::DuplicatePoint { index: i + 1 });
        }
    }
    let mut sum = Scalar::zero();
    for (_, m) in &pairs {
        sum = &sum + m;
    }
    let (points, masses): (Vec<_>, Vec<_>) = if normalize {
        pairs.into_iter().unzip()
    } else {
        let tolerance = match sum.precision() {
            None => Scalar::zero(),
            Some(p) => Scalar::pow2_rational(-(p as i64) + 8),
        };
        if (&sum - &Scalar::one()).abs() > tolerance {
            return Err(DistError::MassSumMismatch {
                sum: sum.decimal_string(20),
            });
        }
        pairs.into_iter().unzip()
    };
    let masses = if normalize {
        masses.iter().map(|m| m / &sum).collect()
    } else {
        masses
    };
    Ok(DiscreteDistribution::Finite(FiniteDistribution {
        points,
        masses,
    }))
}

fn pow_ratio(base: &BigRational, exp: usize) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

impl DiscreteDistribution {
    pub fn geometric_naturals() -> Self {
        DiscreteDistribution::Family(TailFamily::GeometricNaturals)
    }

    pub fn dyadic_reciprocal() -> Self {
        DiscreteDistribution::Family(TailFamily::DyadicReciprocal)
    }

    pub fn geometric_truncated(m: usize, x: BigRational) -> Result<Self, DistError> {
        check_unit_interval(&x)?;
        if m < 3 {
            return Err(DistError::InvalidParameter {
                what: format!("m = {} below minimum of 3", m),
            });
        }
        Ok(DiscreteDistribution::Family(TailFamily::GeometricTruncated {
            m,
            x,
        }))
    }

    pub fn geometric_infinite(x: BigRational) -> Result<Self, DistError> {
        check_unit_interval(&x)?;
        Ok(DiscreteDistribution::Family(TailFamily::GeometricInfinite {
            x,
        }))
    }

    /// Number of atoms, `None` for infinite supports.
    pub fn size(&self) -> Option<usize> {
        match self {
            DiscreteDistribution::Finite(d) => Some(d.len()),
            DiscreteDistribution::Family(TailFamily::GeometricTruncated { m, .. }) => Some(*m),
            DiscreteDistribution::Family(_) => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.size().is_none()
    }

    /// Whether every quantity derived from this distribution is exactly
    /// representable as a rational (false only for `DyadicReciprocal`,
    /// whose tail sums involve log 2 and pi^2, and for finite supports
    /// holding float data).
    pub fn is_exact(&self) -> bool {
        match self {
            DiscreteDistribution::Finite(d) => {
                d.points.iter().all(Scalar::is_exact) && d.masses.iter().all(Scalar::is_exact)
            }
            DiscreteDistribution::Family(TailFamily::DyadicReciprocal) => false,
            DiscreteDistribution::Family(_) => true,
        }
    }

    /// Whether points ascend with the atom index (false for
    /// `DyadicReciprocal`).
    pub fn points_ascending(&self) -> bool {
        !matches!(
            self,
            DiscreteDistribution::Family(TailFamily::DyadicReciprocal)
        )
    }

    /// Atom `i >= 1` as `(point, mass)`, both exact rationals.
    pub fn atom(&self, i: usize) -> Result<(Scalar, Scalar), DistError> {
        assert!(i >= 1, "atom indices start at 1");
        if let Some(size) = self.size() {
            if i > size {
                return Err(DistError::IndexOutOfRange { index: i, size });
            }
        }
        Ok(match self {
            DiscreteDistribution::Finite(d) => (d.point(i).clone(), d.mass(i).clone()),
            DiscreteDistribution::Family(TailFamily::GeometricNaturals) => {
                (Scalar::from_int(i as i64), Scalar::pow2_rational(-(i as i64)))
            }
            DiscreteDistribution::Family(TailFamily::DyadicReciprocal) => (
                Scalar::from_ratio(1, i as i64),
                Scalar::pow2_rational(-(i as i64)),
            ),
            DiscreteDistribution::Family(TailFamily::GeometricTruncated { m, x }) => {
                let q = BigRational::one() - x;
                let mass = if i == *m {
                    pow_ratio(&q, m - 1)
                } else {
                    pow_ratio(&q, i - 1) * x
                };
                (Scalar::from_int(i as i64), Scalar::Rational(mass))
            }
            DiscreteDistribution::Family(TailFamily::GeometricInfinite { x }) => {
                let q = BigRational::one() - x;
                (
                    Scalar::from_int(i as i64),
                    Scalar::Rational(pow_ratio(&q, i - 1) * x),
                )
            }
        })
    }

    /// First `count` atoms in enumeration order.
    pub fn enumerate_prefix(&self, count: usize) -> Result<Vec<(Scalar, Scalar)>, DistError> {
        if count == 0 {
            return Err(DistError::InvalidParameter {
                what: "count must be at least 1".into(),
            });
        }
        if let Some(size) = self.size() {
            if count > size {
                return Err(DistError::IndexOutOfRange {
                    index: count,
                    size,
                });
            }
        }
        (1..=count).map(|i| self.atom(i)).collect()
    }

    /// Suffix moments from atom `k` to the end of the support. Exact
    /// rationals for every kind except `DyadicReciprocal`, which returns
    /// floats with absolute error below `2^-precision`.
    pub fn tail_moments(&self, k: usize, precision: u32) -> Result<TailMoments, DistError> {
        assert!(k >= 1, "atom indices start at 1");
        if let Some(size) = self.size() {
            if k > size {
                return Err(DistError::IndexOutOfRange { index: k, size });
            }
        }
        Ok(match self {
            DiscreteDistribution::Finite(_)
            | DiscreteDistribution::Family(TailFamily::GeometricTruncated { .. }) => {
                let size = self.size().unwrap();
                let mut m0 = Scalar::zero();
                let mut m1 = Scalar::zero();
                let mut m2 = Scalar::zero();
                for i in k..=size {
                    let (p, w) = self.atom(i)?;
                    m0 = &m0 + &w;
                    m1 = &m1 + &(&p * &w);
                    m2 = &m2 + &(&p.square() * &w);
                }
                TailMoments { m0, m1, m2 }
            }
            DiscreteDistribution::Family(TailFamily::GeometricNaturals) => {
                geometric_tail(k, &BigRational::new(BigInt::one(), BigInt::from(2)))
            }
            DiscreteDistribution::Family(TailFamily::GeometricInfinite { x }) => {
                geometric_tail(k, x)
            }
            DiscreteDistribution::Family(TailFamily::DyadicReciprocal) => {
                dyadic_reciprocal_tail(k, precision)
            }
        })
    }
}

/// Closed-form suffix moments for masses `(1-x)^{j-1} x` on points `j`:
/// with `q = 1 - x`,
/// `M0(k) = q^{k-1}`,
/// `M1(k) = q^{k-1} ((k-1) x + 1) / x`,
/// `M2(k) = q^{k-1} ((k-1)^2 x^2 + (2k-3) x + 2) / x^2`.
fn geometric_tail(k: usize, x: &BigRational) -> TailMoments {
    let q = BigRational::one() - x;
    let qk = pow_ratio(&q, k - 1);
    let kr = BigRational::from_integer(BigInt::from(k as i64));
    let one = BigRational::one();
    let m0 = qk.clone();
    let m1 = &qk * ((&kr - &one) * x + &one) / x;
    let m2 = &qk
        * ((&kr - &one) * (&kr - &one) * x * x
            + (BigRational::from_integer(BigInt::from(2)) * &kr
                - BigRational::from_integer(BigInt::from(3)))
                * x
            + BigRational::from_integer(BigInt::from(2)))
        / (x * x);
    TailMoments {
        m0: Scalar::Rational(m0),
        m1: Scalar::Rational(m1),
        m2: Scalar::Rational(m2),
    }
}

/// Suffix moments for the reciprocal family by direct summation.
/// `M0(k) = 2^{1-k}` exactly. `M1` and `M2` sum terms `2^-n / n` and
/// `2^-n / n^2`; terms at least halve from one index to the next, so
/// after summing `precision + GUARD_BITS + 8` of them the omitted
/// remainder is below `2^-(precision + GUARD_BITS + 6)` of the total.
fn dyadic_reciprocal_tail(k: usize, precision: u32) -> TailMoments {
    let m0 = Scalar::Float(Fp::pow2(1 - k as i64, precision));
    let mut m1 = Scalar::Float(Fp::zero(precision));
    let mut m2 = Scalar::Float(Fp::zero(precision));
    let last = k + precision as usize + GUARD_BITS as usize + 8;
    for n in k..=last {
        let num = BigRational::new(BigInt::one(), BigInt::from(n as i64) << n);
        let t1 = Scalar::Float(Fp::from_rational(&num, precision));
        let t2 = Scalar::Float(Fp::from_rational(
            &(&num / BigRational::from_integer(BigInt::from(n as i64))),
            precision,
        ));
        m1 = &m1 + &t1;
        m2 = &m2 + &t2;
    }
    TailMoments { m0, m1, m2 }
}
