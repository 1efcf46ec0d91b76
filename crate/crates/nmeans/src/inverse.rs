//! Inverse quantizer design: given the prescribed optimal-set family
//! `{1, 2, ..., n-1, Av[n, end)}`, recover the range of the geometric
//! probability-vector parameter `x` for which those sets are optimal at
//! every level.
//!
//! Feasibility of an `x` is a conjunction of exact rational
//! inequalities: the boundary-midpoint constraints
//! `n-1 <= (n-1 + Av[n, end))/2 <= n` for every level, and the
//! two-means comparison
//! `V(P; {1, Av[2, end)}) <= V(P; {Av[1,2], Av[3, end)})`.
//! The infimum of the feasible range is located by bisection with exact
//! evaluation at rational points, so the only approximation is the
//! final decimal rounding — reported both to nearest (the conventional
//! ten-digit form) and rounded up (guaranteed feasible).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::distribution::DiscreteDistribution;
use crate::interval::{PrefixSumCache, RangeEnd};
use crate::scalar::Scalar;
use crate::solver::{solve, solve_infinite, Mode, SolveError};

/// Probability-vector family being designed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseFamily {
    /// `m` atoms: `x, (1-x)x, ..., (1-x)^{m-2}x, (1-x)^{m-1}`.
    Truncated { m: usize },
    /// All naturals: `(1-x)^{j-1} x`.
    Infinite,
}

/// Midpoint constraints of the infinite family are checked level by
/// level up to this bound, plus the closed-form limit (the offset
/// `Av[n, inf) - (n-1)` is constant in `n`, so the limit constraint is
/// a single inequality).
const INFINITE_LEVEL_CHECK: usize = 64;

const GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InverseError {
    /// No sampled parameter satisfies every constraint.
    Infeasible,
    Solve(SolveError),
}

impl fmt::Display for InverseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseError::Infeasible => write!(f, "no feasible parameter in (0, 1)"),
            InverseError::Solve(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for InverseError {}

impl From<SolveError> for InverseError {
    fn from(e: SolveError) -> Self {
        InverseError::Solve(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConstraintId {
    /// `Av[n, end) >= n - 1` (lower midpoint inequality).
    MidLower { n: usize },
    /// `Av[n, end) <= n + 1` (upper midpoint inequality).
    MidUpper { n: usize },
    /// Limit of the upper inequality as the level grows (infinite
    /// family only; the offset is constant in `n`).
    MidLimit,
    /// `V(P; {1, Av[2,end)}) <= V(P; {Av[1,2], Av[3,end)})`.
    TwoMeansOrder,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::MidLower { n } => write!(f, "midpoint-lower(n={})", n),
            ConstraintId::MidUpper { n } => write!(f, "midpoint-upper(n={})", n),
            ConstraintId::MidLimit => write!(f, "midpoint-upper(limit)"),
            ConstraintId::TwoMeansOrder => write!(f, "two-means-order"),
        }
    }
}

/// Per-constraint activity certificate.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    pub name: String,
    /// Bisection bracket of this constraint's own boundary; `None` when
    /// the constraint holds at every sampled parameter (inactive).
    pub threshold: Option<(BigRational, BigRational)>,
    /// Whether this constraint determines the overall threshold.
    pub binding: bool,
}

/// Feasible parameter range `[lower, 1)`.
#[derive(Debug, Clone)]
pub struct FeasibleInterval {
    /// Ten-digit-style decimal, rounded to nearest (the conventional
    /// reported form; may sit a hair below the true infimum).
    pub lower: BigRational,
    /// Decimal rounded up: guaranteed feasible.
    pub lower_feasible: BigRational,
    /// Raw bisection bracket (`.0` infeasible, `.1` feasible).
    pub bracket: (BigRational, BigRational),
    pub digits: u32,
    pub certificates: Vec<ConstraintReport>,
}

impl FeasibleInterval {
    pub fn lower_string(&self) -> String {
        decimal_fixed(&self.lower, self.digits)
    }

    pub fn lower_feasible_string(&self) -> String {
        decimal_fixed(&self.lower_feasible, self.digits)
    }
}

/// Fixed-point decimal rendering with exactly `digits` fractional
/// digits (trailing zeros kept).
pub fn decimal_fixed(r: &BigRational, digits: u32) -> String {
    let ten = BigInt::from(10u32).pow(digits);
    let scaled = r * BigRational::from_integer(ten.clone());
    let n = scaled.round().to_integer();
    let (int, frac) = (&n / &ten, (&n % &ten).magnitude().clone());
    format!("{}.{:0>width$}", int, frac.to_string(), width = digits as usize)
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn constraint_ids(family: InverseFamily) -> Vec<ConstraintId> {
    let mut ids = Vec::new();
    let levels = match family {
        InverseFamily::Truncated { m } => 2..=m,
        InverseFamily::Infinite => 2..=INFINITE_LEVEL_CHECK,
    };
    for n in levels {
        ids.push(ConstraintId::MidLower { n });
        ids.push(ConstraintId::MidUpper { n });
    }
    if family == InverseFamily::Infinite {
        ids.push(ConstraintId::MidLimit);
    }
    ids.push(ConstraintId::TwoMeansOrder);
    ids
}

fn family_dist(family: InverseFamily, x: &BigRational) -> DiscreteDistribution {
    match family {
        InverseFamily::Truncated { m } => {
            DiscreteDistribution::geometric_truncated(m, x.clone()).expect("validated parameters")
        }
        InverseFamily::Infinite => {
            DiscreteDistribution::geometric_infinite(x.clone()).expect("validated parameters")
        }
    }
}

fn family_end(family: InverseFamily) -> RangeEnd {
    match family {
        InverseFamily::Truncated { m } => RangeEnd::At(m),
        InverseFamily::Infinite => RangeEnd::Infinity,
    }
}

/// `sum over the range of p * (point - c)^2` for a fixed code point:
/// the cell's own deviation plus the mass-weighted offset from its mean.
fn cost_about(cache: &mut PrefixSumCache, k: usize, end: RangeEnd, c: &Scalar) -> Scalar {
    let m0 = cache.mass(k, end).expect("in range");
    let av = cache.av(k, end).expect("positive mass");
    let er = cache.er(k, end).expect("in range");
    &er + &(&m0 * &(&av - c).square())
}

/// Distortion of a two-point codebook `{a, b}` with `a < b` under the
/// nearest-point rule (boundary ties split at equal cost).
fn two_point_distortion(
    cache: &mut PrefixSumCache,
    family: InverseFamily,
    a: &Scalar,
    b: &Scalar,
) -> Scalar {
    let mid = &(a + b) / &Scalar::from_int(2);
    // Atoms are the integers 1..: the cell of `a` is every atom at or
    // below the midpoint.
    let split = mid.as_rational().floor().to_integer();
    let mut j = if split < BigInt::one() {
        0usize
    } else {
        use num_traits::ToPrimitive;
        split.to_usize().unwrap_or(usize::MAX)
    };
    if let InverseFamily::Truncated { m } = family {
        j = j.min(m);
    }
    let end = family_end(family);
    if j == 0 {
        return cost_about(cache, 1, end, b);
    }
    let mut total = cost_about(cache, 1, RangeEnd::At(j), a);
    match family {
        InverseFamily::Truncated { m } => {
            if j < m {
                total = &total + &cost_about(cache, j + 1, end, b);
            }
        }
        InverseFamily::Infinite => {
            total = &total + &cost_about(cache, j + 1, end, b);
        }
    }
    total
}

fn constraint_holds(family: InverseFamily, id: ConstraintId, x: &BigRational) -> bool {
    let dist = family_dist(family, x);
    let mut cache = PrefixSumCache::new(dist, 64);
    constraint_holds_on(&mut cache, family, id)
}

/// Conditional mean of the suffix from atom `n`, via the closed-form
/// tail moments (avoids building the whole cache table for one query).
fn av_tail(dist: &DiscreteDistribution, n: usize) -> Scalar {
    let t = dist.tail_moments(n, 64).expect("in range");
    &t.m1 / &t.m0
}

fn constraint_holds_on(cache: &mut PrefixSumCache, family: InverseFamily, id: ConstraintId) -> bool {
    let end = family_end(family);
    match id {
        ConstraintId::MidLower { n } => {
            let av = av_tail(cache.dist(), n);
            av >= Scalar::from_int((n - 1) as i64)
        }
        ConstraintId::MidUpper { n } => {
            let av = av_tail(cache.dist(), n);
            av <= Scalar::from_int((n + 1) as i64)
        }
        ConstraintId::MidLimit => {
            // Av[n, inf) - (n-1) is constant in n for the memoryless
            // family; evaluate one level past the per-level checks.
            let n = INFINITE_LEVEL_CHECK + 1;
            let av = av_tail(cache.dist(), n);
            &av - &Scalar::from_int((n - 1) as i64) <= Scalar::from_int(2)
        }
        ConstraintId::TwoMeansOrder => {
            let a2 = cache.av(2, end).expect("positive mass");
            let lhs = two_point_distortion(cache, family, &Scalar::one(), &a2);
            let a12 = cache.av(1, RangeEnd::At(2)).expect("positive mass");
            let a3 = cache.av(3, end).expect("positive mass");
            let rhs = two_point_distortion(cache, family, &a12, &a3);
            lhs <= rhs
        }
    }
}

fn all_hold(family: InverseFamily, x: &BigRational) -> bool {
    let dist = family_dist(family, x);
    let mut cache = PrefixSumCache::new(dist, 64);
    constraint_ids(family)
        .into_iter()
        .all(|id| constraint_holds_on(&mut cache, family, id))
}

/// Bisect the boundary of an up-closed predicate over (0, 1). Returns
/// `Ok(None)` when the predicate holds at every grid sample (no binding
/// boundary) and `Err(Infeasible)` when it holds nowhere.
fn bisect_boundary<F>(pred: F, width: &BigRational) -> Result<Option<(BigRational, BigRational)>, InverseError>
where
    F: Fn(&BigRational) -> bool,
{
    let grid = BigInt::from(GRID as i64);
    let mut hi: Option<BigRational> = None;
    let mut lo: Option<BigRational> = None;
    // Scan down from 1 until the predicate first fails.
    for i in (1..GRID).rev() {
        let x = BigRational::new(BigInt::from(i as i64), grid.clone());
        if pred(&x) {
            hi = Some(x);
        } else {
            lo = Some(x);
            break;
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        (None, Some(_)) => return Ok(None),
        _ => return Err(InverseError::Infeasible),
    };
    while &hi - &lo > *width {
        let mid = (&hi + &lo) / ratio(2, 1);
        if pred(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some((lo, hi)))
}

fn pow10_inv(digits: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u32).pow(digits))
}

fn round_decimal_nearest(r: &BigRational, digits: u32) -> BigRational {
    let ten = BigRational::from_integer(BigInt::from(10u32).pow(digits));
    BigRational::from_integer((r * &ten).round().to_integer()) / ten
}

fn round_decimal_up(r: &BigRational, digits: u32) -> BigRational {
    let ten = BigRational::from_integer(BigInt::from(10u32).pow(digits));
    BigRational::from_integer((r * &ten).ceil().to_integer()) / ten
}

/// Infimum of the feasible parameter range, reported to `digits`
/// decimal digits, with per-constraint activity certificates.
pub fn feasible_x(family: InverseFamily, digits: u32) -> Result<FeasibleInterval, InverseError> {
    assert!(digits >= 1, "at least one decimal digit");
    if let InverseFamily::Truncated { m } = family {
        assert!(m >= 3, "truncated family needs at least three atoms");
    }
    // Bisect to 1e-12 or finer so the rounded decimals are unambiguous.
    let mut width = pow10_inv(12.max(digits + 3));
    let (mut lo, mut hi) = bisect_boundary(|x| all_hold(family, x), &width)?
        .ok_or(InverseError::Infeasible)?;
    // Narrow further if the bracket endpoints still round apart.
    let limit = pow10_inv(digits + 9);
    while round_decimal_nearest(&lo, digits) != round_decimal_nearest(&hi, digits) && width > limit
    {
        width = &width / &ratio(2, 1);
        let mid = (&hi + &lo) / ratio(2, 1);
        if all_hold(family, &mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // Certificates: one shared sweep over the grid, then a private
    // bisection for each constraint that showed a boundary.
    let ids = constraint_ids(family);
    let grid = BigInt::from(GRID as i64);
    let mut grid_flags: Vec<Vec<bool>> = Vec::with_capacity(GRID - 1);
    for i in 1..GRID {
        let x = BigRational::new(BigInt::from(i as i64), grid.clone());
        let dist = family_dist(family, &x);
        let mut cache = PrefixSumCache::new(dist, 64);
        grid_flags.push(
            ids.iter()
                .map(|&id| constraint_holds_on(&mut cache, family, id))
                .collect(),
        );
    }
    let cert_width = pow10_inv(12);
    let mut certificates = Vec::new();
    let mut best: Option<BigRational> = None;
    for (idx, &id) in ids.iter().enumerate() {
        let fail = (0..GRID - 1).rev().find(|&i| !grid_flags[i][idx]);
        let bracket = match fail {
            None => None,
            // Failing at the top grid point leaves no bracket to bisect.
            Some(i) if i + 2 == GRID => None,
            Some(i) => {
                let mut c_lo = BigRational::new(BigInt::from((i + 1) as i64), grid.clone());
                let mut c_hi = BigRational::new(BigInt::from((i + 2) as i64), grid.clone());
                while &c_hi - &c_lo > cert_width {
                    let mid = (&c_hi + &c_lo) / ratio(2, 1);
                    if constraint_holds(family, id, &mid) {
                        c_hi = mid;
                    } else {
                        c_lo = mid;
                    }
                }
                Some((c_lo, c_hi))
            }
        };
        if let Some((_, h)) = &bracket {
            best = Some(match best {
                None => h.clone(),
                Some(b) => b.max(h.clone()),
            });
        }
        certificates.push(ConstraintReport {
            name: id.to_string(),
            threshold: bracket,
            binding: false,
        });
    }
    if let Some(best) = best {
        let tol = pow10_inv(10);
        for cert in &mut certificates {
            if let Some((_, h)) = &cert.threshold {
                cert.binding = (h - &best).abs() <= tol;
            }
        }
    }

    Ok(FeasibleInterval {
        lower: round_decimal_nearest(&hi, digits),
        lower_feasible: round_decimal_up(&hi, digits),
        bracket: (lo, hi),
        digits,
        certificates,
    })
}


/// Per-level outcome of checking the conjectured structure at one `x`.
#[derive(Debug, Clone)]
pub struct ConjectureCheck {
    pub n: usize,
    /// The conjectured codebook `{1, ..., n-1, Av[n, end)}` is optimal.
    pub pass: bool,
    /// It is the only optimum.
    pub unique: bool,
    pub num_optima: usize,
    /// Diagnostic slack of the midpoint constraints at this level:
    /// `min(Av - (n-1), (n+1) - Av)`; negative means violated.
    pub midpoint_slack: Option<Scalar>,
}

#[derive(Debug, Clone)]
pub struct ConjectureReport {
    pub x: BigRational,
    pub checks: Vec<ConjectureCheck>,
}

impl ConjectureReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<usize> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.n).collect()
    }
}

/// Run the exact solver for levels `1..=n_max` and check that each set
/// of optima contains the conjectured codebook (singleton prefix plus
/// one final cell).
pub fn verify_conjecture(
    family: InverseFamily,
    x: &BigRational,
    n_max: usize,
) -> Result<ConjectureReport, InverseError> {
    assert!(
        x > &BigRational::zero() && x < &BigRational::one(),
        "x must lie in (0, 1)"
    );
    let dist = family_dist(family, x);
    let levels = match family {
        InverseFamily::Truncated { m } => 1..=n_max.min(m),
        InverseFamily::Infinite => 1..=n_max,
    };
    let mut checks = Vec::new();
    for n in levels {
        let result = match family {
            InverseFamily::Truncated { .. } => solve(&dist, n, Mode::All)?,
            InverseFamily::Infinite => solve_infinite(&dist, n, Mode::All, 64)?,
        };
        let conjectured: Vec<usize> = (1..n).collect();
        let pass = result.optima.iter().any(|cb| cb.cuts == conjectured);
        let num_optima = result.optima.len();
        let midpoint_slack = if n >= 2 {
            let mut cache = PrefixSumCache::new(dist.clone(), 64);
            let av = cache.av(n, family_end(family)).expect("positive mass");
            let lower = &av - &Scalar::from_int((n - 1) as i64);
            let upper = &Scalar::from_int((n + 1) as i64) - &av;
            Some(lower.min(upper))
        } else {
            None
        };
        checks.push(ConjectureCheck {
            n,
            pass,
            unique: pass && num_optima == 1,
            num_optima,
            midpoint_slack,
        });
    }
    Ok(ConjectureReport {
        x: x.clone(),
        checks,
    })
}
