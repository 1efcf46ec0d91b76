//! Conditional means and mass-weighted squared deviations over index
//! ranges, in O(1) per query from cached prefix sums and tail moments.
//!
//! For a range of atoms `k..=l` (or the tail `k..`), `av` is the
//! conditional expectation and `er` the expected squared deviation about
//! it, weighted by the unnormalized masses of the range. These are the
//! cell statistics every solver consumes: the cost of a quantizer cell
//! is exactly `er` over its atoms, and its code point is `av`.
//!
//! Finite supports cache cumulative prefix sums. Infinite families cache
//! suffix (tail) moments instead and answer range queries as tail
//! differences: adjacent tails share magnitude, so the float-mode
//! subtraction loses only a couple of bits even hundreds of atoms deep,
//! where prefix differencing would cancel catastrophically.

use std::fmt;

use crate::distribution::{DiscreteDistribution, TailMoments};
use crate::scalar::{Fp, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatsError {
    /// The queried range carries no mass.
    EmptyRangeMass { k: usize },
    /// Range end exceeds a finite support.
    OutOfRange { index: usize, size: usize },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::EmptyRangeMass { k } => {
                write!(f, "range starting at atom {} has zero mass", k)
            }
            StatsError::OutOfRange { index, size } => {
                write!(f, "range end {} exceeds support size {}", index, size)
            }
        }
    }
}

impl std::error::Error for StatsError {}

/// Inclusive range end: a concrete atom index or the whole tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeEnd {
    At(usize),
    Infinity,
}

enum Store {
    /// s*[j] = sum over atoms 1..=j; s*[0] = 0.
    Prefix {
        s0: Vec<Scalar>,
        s1: Vec<Scalar>,
        s2: Vec<Scalar>,
    },
    /// tails[k-1] = suffix moments from atom k, for k = 1..=K+1.
    Tails(Vec<TailMoments>),
}

/// Cached cumulative moments for one distribution. Grows on demand by
/// doubling (infinite supports only). Queries are pure; growth is the
/// only mutation, so a cache is owned per solver instance.
pub struct PrefixSumCache {
    dist: DiscreteDistribution,
    precision: u32,
    exact: bool,
    // 2^(-precision/2), the cancellation-guard factor (float mode).
    loss_factor: Scalar,
    store: Store,
}

impl PrefixSumCache {
    pub fn new(dist: DiscreteDistribution, precision: u32) -> Self {
        let exact = dist.is_exact();
        let store = match dist.size() {
            Some(size) => {
                let mut s0 = Vec::with_capacity(size + 1);
                let mut s1 = Vec::with_capacity(size + 1);
                let mut s2 = Vec::with_capacity(size + 1);
                let zero = if exact {
                    Scalar::zero()
                } else {
                    Scalar::Float(Fp::zero(precision))
                };
                s0.push(zero.clone());
                s1.push(zero.clone());
                s2.push(zero);
                for i in 1..=size {
                    let (p, w) = dist.atom(i).expect("atom within support");
                    let (p, w) = if exact {
                        (p, w)
                    } else {
                        (p.to_float(precision), w.to_float(precision))
                    };
                    s0.push(&s0[i - 1] + &w);
                    s1.push(&s1[i - 1] + &(&p * &w));
                    s2.push(&s2[i - 1] + &(&p.square() * &w));
                }
                Store::Prefix { s0, s1, s2 }
            }
            None => Store::Tails(Vec::new()),
        };
        let mut cache = PrefixSumCache {
            dist,
            precision,
            exact,
            loss_factor: Scalar::Float(Fp::pow2(-(precision as i64) / 2, precision)),
            store,
        };
        if cache.dist.is_infinite() {
            cache.ensure(16);
        }
        cache
    }

    pub fn dist(&self) -> &DiscreteDistribution {
        &self.dist
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Highest atom index covered by the cache.
    pub fn horizon(&self) -> usize {
        match &self.store {
            Store::Prefix { s0, .. } => s0.len() - 1,
            Store::Tails(t) => t.len().saturating_sub(1),
        }
    }

    /// Cover atoms up to index `k` (doubling growth; no-op for finite
    /// supports, which are fully cached at construction).
    pub fn ensure(&mut self, k: usize) {
        let have = match &self.store {
            Store::Prefix { .. } => {
                let size = self.dist.size().unwrap();
                assert!(k <= size, "finite cache cannot grow past the support");
                return;
            }
            Store::Tails(t) => t.len(),
        };
        if k < have {
            return;
        }
        let mut target = self.horizon().max(16);
        while target < k {
            target *= 2;
        }
        let fresh = build_tails(&self.dist, target, self.precision, self.exact);
        self.store = Store::Tails(fresh);
    }

    fn tail(&mut self, k: usize) -> TailMoments {
        match &self.store {
            Store::Prefix { .. } => {
                let size = self.dist.size().unwrap();
                self.moment_diff(k, size)
            }
            Store::Tails(_) => {
                self.ensure(k);
                match &self.store {
                    Store::Tails(t) => t[k - 1].clone(),
                    Store::Prefix { .. } => unreachable!(),
                }
            }
        }
    }

    fn moment_diff(&mut self, k: usize, l: usize) -> TailMoments {
        match &self.store {
            Store::Prefix { s0, s1, s2 } => TailMoments {
                m0: &s0[l] - &s0[k - 1],
                m1: &s1[l] - &s1[k - 1],
                m2: &s2[l] - &s2[k - 1],
            },
            Store::Tails(_) => {
                self.ensure(l + 1);
                match &self.store {
                    Store::Tails(t) => TailMoments {
                        m0: &t[k - 1].m0 - &t[l].m0,
                        m1: &t[k - 1].m1 - &t[l].m1,
                        m2: &t[k - 1].m2 - &t[l].m2,
                    },
                    Store::Prefix { .. } => unreachable!(),
                }
            }
        }
    }

    fn range_moments(&mut self, k: usize, end: RangeEnd) -> Result<TailMoments, StatsError> {
        assert!(k >= 1, "atom indices start at 1");
        let size = self.dist.size();
        match end {
            RangeEnd::Infinity => {
                if let Some(size) = size {
                    if k > size {
                        return Err(StatsError::OutOfRange { index: k, size });
                    }
                }
                Ok(self.tail(k))
            }
            RangeEnd::At(l) => {
                assert!(k <= l, "range must be non-empty");
                if let Some(size) = size {
                    if l > size {
                        return Err(StatsError::OutOfRange { index: l, size });
                    }
                }
                Ok(self.moment_diff(k, l))
            }
        }
    }

    /// Mass of the range.
    pub fn mass(&mut self, k: usize, end: RangeEnd) -> Result<Scalar, StatsError> {
        Ok(self.range_moments(k, end)?.m0)
    }

    /// Conditional mean of the range (the centroid of a cell).
    pub fn av(&mut self, k: usize, end: RangeEnd) -> Result<Scalar, StatsError> {
        let m = self.range_moments(k, end)?;
        if m.m0.is_zero() {
            return Err(StatsError::EmptyRangeMass { k });
        }
        Ok(&m.m1 / &m.m0)
    }

    /// Mass-weighted squared deviation about the range mean: the exact
    /// distortion contributed by a cell spanning the range.
    pub fn er(&mut self, k: usize, end: RangeEnd) -> Result<Scalar, StatsError> {
        if let RangeEnd::At(l) = end {
            if k == l {
                // Single atom: exactly zero, skip the formula.
                self.range_moments(k, end)?;
                return Ok(Scalar::zero());
            }
        }
        let m = self.range_moments(k, end)?;
        if m.m0.is_zero() {
            return Err(StatsError::EmptyRangeMass { k });
        }
        let raw = &m.m2 - &(&m.m1.square() / &m.m0);
        if self.exact {
            return Ok(raw);
        }
        // Cancellation guard: when nearly all of m2 cancels, the
        // subtraction has burned more than precision/2 bits; recompute
        // with the two-pass (shifted) formula.
        let loss_floor = &m.m2 * &self.loss_factor;
        if raw.is_negative() || raw < loss_floor {
            let av = &m.m1 / &m.m0;
            return Ok(self.two_pass_er(k, end, &av));
        }
        Ok(raw)
    }

    fn two_pass_er(&mut self, k: usize, end: RangeEnd, av: &Scalar) -> Scalar {
        let l = match end {
            RangeEnd::At(l) => l,
            // Tail: masses decay geometrically, so the remainder beyond
            // precision + guard + slack terms is below the budget.
            RangeEnd::Infinity => self
                .dist
                .size()
                .unwrap_or(k + self.precision as usize + crate::scalar::GUARD_BITS as usize + 8),
        };
        let mut acc = Scalar::Float(Fp::zero(self.precision));
        for i in k..=l {
            let (p, w) = match self.dist.atom(i) {
                Ok(a) => a,
                Err(_) => break,
            };
            let p = p.to_float(self.precision);
            let w = w.to_float(self.precision);
            let d = &p - av;
            acc = &acc + &(&d.square() * &w);
        }
        acc
    }

    /// `(mean, variance)` of the whole distribution.
    pub fn global_mean_variance(&mut self) -> (Scalar, Scalar) {
        let end = match self.dist.size() {
            Some(size) => RangeEnd::At(size),
            None => RangeEnd::Infinity,
        };
        let mean = self.av(1, end).expect("whole support has mass 1");
        let var = self.er(1, end).expect("whole support has mass 1");
        (mean, var)
    }
}

fn build_tails(
    dist: &DiscreteDistribution,
    upto: usize,
    precision: u32,
    exact: bool,
) -> Vec<TailMoments> {
    if exact {
        return (1..=upto + 1)
            .map(|k| {
                dist.tail_moments(k, precision)
                    .expect("infinite support has all tails")
            })
            .collect();
    }
    // Float mode: one direct summation at the far end, then a backward
    // recurrence T(k) = T(k+1) + atom(k), one rounding per step.
    let mut t = dist
        .tail_moments(upto + 2, precision)
        .expect("infinite support has all tails");
    let mut rev: Vec<TailMoments> = Vec::with_capacity(upto + 1);
    for k in (1..=upto + 1).rev() {
        let (p, w) = dist.atom(k).expect("atom within support");
        let p = p.to_float(precision);
        let w = w.to_float(precision);
        t = TailMoments {
            m0: &t.m0 + &w,
            m1: &t.m1 + &(&p * &w),
            m2: &t.m2 + &(&p.square() * &w),
        };
        rev.push(t.clone());
    }
    rev.reverse();
    rev
}

/// Convenience wrapper building a throwaway cache.
pub fn global_mean_variance(dist: &DiscreteDistribution, precision: u32) -> (Scalar, Scalar) {
    PrefixSumCache::new(dist.clone(), precision).global_mean_variance()
}
