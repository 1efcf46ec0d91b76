//! Dual-mode arithmetic: exact rationals, or binary floats with
//! explicit precision and guarded rounding.
//!
//! A [`Scalar`] is either an exact `BigRational` or an [`Fp`] float
//! `mantissa * 2^exp` whose mantissa carries `precision + GUARD_BITS`
//! bits. Every operation rounds to that width, so one operation
//! contributes relative error below `2^-(precision + GUARD_BITS - 1)`;
//! the guard bits absorb accumulation across long summations, keeping
//! results correct to well past the declared precision. Mixed-mode
//! operations convert the rational operand and inherit the float
//! operand's precision (result precision = min of operands). Alignment
//! in add/sub is exact, so cancellation never loses information beyond
//! what the inputs already lost.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Guard bits kept beyond the declared precision of every float value.
pub const GUARD_BITS: u32 = 64;

/// Default working precision in bits for inexact computations.
pub const DEFAULT_PRECISION: u32 = 256;

/// Arbitrary-precision binary float `mantissa * 2^exp`. Nonzero values
/// are normalized so the mantissa has exactly `precision + GUARD_BITS`
/// significant bits.
#[derive(Clone, Debug)]
pub struct Fp {
    mantissa: BigInt,
    exp: i64,
    precision: u32,
}

fn shift_round(m: &BigInt, bits: u64) -> BigInt {
    if bits == 0 {
        return m.clone();
    }
    // Round half away from zero on the magnitude.
    let half = BigUint::one() << (bits - 1) as usize;
    let (sign, mag) = (m.sign(), m.magnitude());
    let rounded = (mag + half) >> bits as usize;
    match sign {
        Sign::Minus => -BigInt::from(rounded),
        _ => BigInt::from(rounded),
    }
}

/// Rounded integer division, half away from zero.
fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    let neg = num.is_negative() != den.is_negative();
    let n = num.magnitude();
    let d = den.magnitude();
    let q = (n + (d >> 1usize)) / d;
    if neg {
        -BigInt::from(q)
    } else {
        BigInt::from(q)
    }
}

impl Fp {
    fn width(precision: u32) -> u64 {
        precision as u64 + GUARD_BITS as u64
    }

    fn make(mantissa: BigInt, exp: i64, precision: u32) -> Fp {
        let width = Fp::width(precision);
        let mut m = mantissa;
        let mut e = exp;
        loop {
            if m.is_zero() {
                return Fp {
                    mantissa: m,
                    exp: 0,
                    precision,
                };
            }
            let bits = m.magnitude().bits();
            if bits == width {
                return Fp {
                    mantissa: m,
                    exp: e,
                    precision,
                };
            }
            if bits < width {
                m <<= (width - bits) as usize;
                e -= (width - bits) as i64;
            } else {
                m = shift_round(&m, bits - width);
                e += (bits - width) as i64;
                // A carry can add one bit; loop once more.
            }
        }
    }

    pub fn zero(precision: u32) -> Self {
        Fp {
            mantissa: BigInt::zero(),
            exp: 0,
            precision,
        }
    }

    /// `2^exp` at the given precision (always exact).
    pub fn pow2(exp: i64, precision: u32) -> Self {
        Fp::make(BigInt::one(), exp, precision)
    }

    pub fn from_rational(r: &BigRational, precision: u32) -> Self {
        if r.is_zero() {
            return Fp::zero(precision);
        }
        let width = Fp::width(precision);
        let nbits = r.numer().magnitude().bits() as i64;
        let dbits = r.denom().magnitude().bits() as i64;
        // Shift so the quotient has a couple of bits beyond the width.
        let shift = width as i64 + 2 + dbits - nbits;
        let (num, den) = if shift >= 0 {
            (r.numer() << shift as usize, r.denom().clone())
        } else {
            (r.numer().clone(), r.denom() << (-shift) as usize)
        };
        Fp::make(round_div(&num, &den), -shift, precision)
    }

    /// Exact rational value of the stored float.
    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mantissa << self.exp as usize)
        } else {
            BigRational::new(self.mantissa.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn magnitude_bit(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mantissa.magnitude().bits() as i64)
        }
    }

    fn rescale(&self, precision: u32) -> Fp {
        Fp::make(self.mantissa.clone(), self.exp, precision)
    }

    fn add_signed(&self, other: &Fp, negate_other: bool) -> Fp {
        let precision = self.precision.min(other.precision);
        let rhs_mantissa = |m: &BigInt| if negate_other { -m } else { m.clone() };
        if self.is_zero() {
            return Fp::make(rhs_mantissa(&other.mantissa), other.exp, precision);
        }
        if other.is_zero() {
            return Fp::make(self.mantissa.clone(), self.exp, precision);
        }
        // Alignment is exact; operands farther apart than the mantissa
        // width cannot interact beyond a sub-guard perturbation, so the
        // smaller one is dropped.
        let width = Fp::width(precision) as i64;
        let gap = self.exp - other.exp;
        if gap > 2 * width + 8 {
            return Fp::make(self.mantissa.clone(), self.exp, precision);
        }
        if gap < -(2 * width + 8) {
            return Fp::make(rhs_mantissa(&other.mantissa), other.exp, precision);
        }
        let (m, e) = if gap >= 0 {
            ((&self.mantissa << gap as usize) + rhs_mantissa(&other.mantissa), other.exp)
        } else {
            (&self.mantissa + (rhs_mantissa(&other.mantissa) << (-gap) as usize), self.exp)
        };
        Fp::make(m, e, precision)
    }

    fn mul_fp(&self, other: &Fp) -> Fp {
        let precision = self.precision.min(other.precision);
        Fp::make(&self.mantissa * &other.mantissa, self.exp + other.exp, precision)
    }

    fn div_fp(&self, other: &Fp) -> Fp {
        assert!(!other.mantissa.is_zero(), "float division by zero");
        let precision = self.precision.min(other.precision);
        if self.is_zero() {
            return Fp::zero(precision);
        }
        let shift = Fp::width(precision) as i64 + 2;
        let num = &self.mantissa << shift as usize;
        Fp::make(
            round_div(&num, &other.mantissa),
            self.exp - other.exp - shift,
            precision,
        )
    }

    fn cmp_fp(&self, other: &Fp) -> Ordering {
        let s1 = self.mantissa.sign();
        let s2 = other.mantissa.sign();
        if s1 != s2 {
            return match (s1, s2) {
                (Sign::Minus, _) => Ordering::Less,
                (_, Sign::Minus) => Ordering::Greater,
                (Sign::NoSign, Sign::Plus) => Ordering::Less,
                (Sign::Plus, Sign::NoSign) => Ordering::Greater,
                _ => Ordering::Equal,
            };
        }
        if s1 == Sign::NoSign {
            return Ordering::Equal;
        }
        // Same sign, both nonzero: compare top-bit positions first.
        let top1 = self.exp + self.mantissa.magnitude().bits() as i64;
        let top2 = other.exp + other.mantissa.magnitude().bits() as i64;
        let by_magnitude = if top1 != top2 {
            top1.cmp(&top2)
        } else {
            let gap = self.exp - other.exp;
            if gap >= 0 {
                (&self.mantissa << gap as usize).cmp(&other.mantissa)
            } else {
                self.mantissa.cmp(&(&other.mantissa << (-gap) as usize))
            }
        };
        if s1 == Sign::Minus {
            by_magnitude.reverse()
        } else {
            by_magnitude
        }
    }
}

/// Exact rational or precision-tracked float.
#[derive(Clone, Debug)]
pub enum Scalar {
    Rational(BigRational),
    Float(Fp),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Rational(r)
    }

    /// `2^exp` as an exact rational.
    pub fn pow2_rational(exp: i64) -> Self {
        let r = if exp >= 0 {
            BigRational::from_integer(BigInt::one() << exp as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-exp) as usize)
        };
        Scalar::Rational(r)
    }

    /// Convert to float mode at the given precision (floats already at a
    /// lower precision are returned unchanged).
    pub fn to_float(&self, precision: u32) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Float(Fp::from_rational(r, precision)),
            Scalar::Float(f) => {
                if f.precision <= precision {
                    self.clone()
                } else {
                    Scalar::Float(f.rescale(precision))
                }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    pub fn precision(&self) -> Option<u32> {
        match self {
            Scalar::Rational(_) => None,
            Scalar::Float(f) => Some(f.precision),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(f) => f.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_negative(),
            Scalar::Float(f) => f.is_negative(),
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Bit position just above the top set bit of `|v|` (so `v` lies in
    /// `[2^(b-1), 2^b)`), `None` for zero. For rationals the value may
    /// be off by one; callers use it only as a magnitude pre-filter.
    pub fn magnitude_bit(&self) -> Option<i64> {
        match self {
            Scalar::Rational(r) => {
                if r.is_zero() {
                    None
                } else {
                    Some(
                        r.numer().magnitude().bits() as i64
                            - r.denom().magnitude().bits() as i64
                            + 1,
                    )
                }
            }
            Scalar::Float(f) => f.magnitude_bit(),
        }
    }

    pub fn square(&self) -> Scalar {
        self * self
    }

    /// Exact rational view: identity for rationals, the stored binary
    /// value for floats.
    pub fn as_rational(&self) -> BigRational {
        match self {
            Scalar::Rational(r) => r.clone(),
            Scalar::Float(f) => f.to_rational(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => ratio_to_f64(r),
            Scalar::Float(f) => ratio_to_f64(&f.to_rational()),
        }
    }

    /// Significant digits justified by the precision: `floor(p*log10 2) - 5`
    /// for floats, a fixed preview width for exact rationals.
    pub fn justified_digits(&self) -> usize {
        match self {
            Scalar::Rational(_) => 20,
            Scalar::Float(f) => justified_digits(f.precision),
        }
    }

    /// Decimal rendering with `sig` significant digits. Rationals get
    /// trailing zeros stripped (the exact value lives in `p/q` form);
    /// floats keep every digit.
    pub fn decimal_string(&self, sig: usize) -> String {
        let (r, strip) = match self {
            Scalar::Rational(r) => (r.clone(), true),
            Scalar::Float(f) => (f.to_rational(), false),
        };
        format_decimal(&r, sig, strip)
    }

    /// `p/q` string for exact values, `None` for floats.
    pub fn rational_string(&self) -> Option<String> {
        match self {
            Scalar::Rational(r) => Some(format_ratio(r)),
            Scalar::Float(_) => None,
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    // Shift huge numerator/denominator pairs down before the lossy cast.
    let nbits = r.numer().bits();
    let dbits = r.denom().bits();
    let drop = nbits.min(dbits).saturating_sub(512);
    let n = r.numer() >> drop as usize;
    let d = r.denom() >> drop as usize;
    n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
}

pub fn justified_digits(precision: u32) -> usize {
    let digits = (precision as u64 * 30103 / 100000) as i64 - 5;
    digits.max(6) as usize
}

fn format_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// First `sig` significant decimal digits of `r`, positional for moderate
/// exponents, scientific otherwise.
fn format_decimal(r: &BigRational, sig: usize, strip_trailing: bool) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    let (mut digits, exp10) = decimal_digits(&num, &den, sig);
    if strip_trailing {
        while digits.len() > 1 && digits.ends_with('0') {
            digits.pop();
        }
    }
    let body = if (-6..=18).contains(&exp10) {
        positional(&digits, exp10)
    } else {
        let mut s = String::new();
        s.push(digits.as_bytes()[0] as char);
        if digits.len() > 1 {
            s.push('.');
            s.push_str(&digits[1..]);
        }
        format!("{}e{}", s, exp10)
    };
    if neg {
        format!("-{}", body)
    } else {
        body
    }
}

fn positional(digits: &str, exp10: i64) -> String {
    let n = digits.len() as i64;
    if exp10 >= n - 1 {
        let mut s = digits.to_string();
        s.push_str(&"0".repeat((exp10 - (n - 1)) as usize));
        s
    } else if exp10 >= 0 {
        let cut = (exp10 + 1) as usize;
        format!("{}.{}", &digits[..cut], &digits[cut..])
    } else {
        format!("0.{}{}", "0".repeat((-exp10 - 1) as usize), digits)
    }
}

/// Leading `sig` rounded significant digits of `num/den > 0` and the
/// base-10 exponent of the first digit.
fn decimal_digits(num: &BigUint, den: &BigUint, sig: usize) -> (String, i64) {
    assert!(sig >= 1 && !num.is_zero());
    let bit_diff = num.bits() as i64 - den.bits() as i64;
    let mut exp10 = (bit_diff as f64 * std::f64::consts::LOG10_2).floor() as i64 - 1;
    loop {
        let q = scaled_digits(num, den, sig as i64 - 1 - exp10);
        let len = q.to_string().len() as i64;
        if len == sig as i64 {
            return (q.to_string(), exp10);
        }
        exp10 += len - sig as i64;
    }
}

/// round(num/den * 10^shift)
fn scaled_digits(num: &BigUint, den: &BigUint, shift: i64) -> BigUint {
    let (n, d) = if shift >= 0 {
        (num * BigUint::from(10u32).pow(shift as u32), den.clone())
    } else {
        (num.clone(), den * BigUint::from(10u32).pow((-shift) as u32))
    };
    (&n + (&d >> 1usize)) / d
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.cmp_fp(b),
            // Mixed compares are exact: a binary float is a rational.
            (Scalar::Rational(a), Scalar::Float(b)) => a.cmp(&b.to_rational()),
            (Scalar::Float(a), Scalar::Rational(b)) => a.to_rational().cmp(b),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $ratop:tt, $fpcall:ident) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a $ratop b),
                    (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a.$fpcall(b)),
                    (Scalar::Rational(a), Scalar::Float(b)) => {
                        Scalar::Float(Fp::from_rational(a, b.precision).$fpcall(b))
                    }
                    (Scalar::Float(a), Scalar::Rational(b)) => {
                        Scalar::Float(a.$fpcall(&Fp::from_rational(b, a.precision)))
                    }
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

impl Fp {
    fn add_call(&self, other: &Fp) -> Fp {
        self.add_signed(other, false)
    }
    fn sub_call(&self, other: &Fp) -> Fp {
        self.add_signed(other, true)
    }
}

scalar_binop!(Add, add, +, add_call);
scalar_binop!(Sub, sub, -, sub_call);
scalar_binop!(Mul, mul, *, mul_fp);
scalar_binop!(Div, div, /, div_fp);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Float(f) => Scalar::Float(Fp {
                mantissa: -&f.mantissa,
                exp: f.exp,
                precision: f.precision,
            }),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{}", format_ratio(r)),
            Scalar::Float(fp) => {
                write!(f, "{}", self.decimal_string(justified_digits(fp.precision)))
            }
        }
    }
}

/// Parse "p/q", an integer, or a plain decimal ("0.65", "-3.5") into an
/// exact rational scalar.
impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseScalarError(s.to_string()));
        }
        if let Some((num, den)) = s.split_once('/') {
            let n = BigInt::from_str(num.trim()).map_err(|_| ParseScalarError(s.to_string()))?;
            let d = BigInt::from_str(den.trim()).map_err(|_| ParseScalarError(s.to_string()))?;
            if d.is_zero() {
                return Err(ParseScalarError(s.to_string()));
            }
            return Ok(Scalar::Rational(BigRational::new(n, d)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseScalarError(s.to_string()));
            }
            let neg = int_part.starts_with('-');
            let int_digits = int_part.strip_prefix(['-', '+']).unwrap_or(int_part);
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) || int_digits.is_empty() {
                return Err(ParseScalarError(s.to_string()));
            }
            let joined = format!("{}{}", int_digits, frac_part);
            let num = BigInt::from_str(&joined).map_err(|_| ParseScalarError(s.to_string()))?;
            let den = BigInt::from(10u32).pow(frac_part.len() as u32);
            let r = BigRational::new(if neg { -num } else { num }, den);
            return Ok(Scalar::Rational(r));
        }
        let n = BigInt::from_str(s).map_err(|_| ParseScalarError(s.to_string()))?;
        Ok(Scalar::Rational(BigRational::from_integer(n)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseScalarError(pub String);

impl fmt::Display for ParseScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scalar literal: {:?}", self.0)
    }
}

impl std::error::Error for ParseScalarError {}
