//! Arbitrary-precision binary floating point on top of `BigInt`, plus the
//! elementary functions and constant oracles the verification engine needs.
//!
//! A value is `mantissa * 2^exponent` held to a stated working precision in
//! bits.  Every arithmetic result is correct to within 2 ulp at that
//! precision; the constant oracles (pi, sqrt 2, sqrt 3, ln 2, ln 3) are
//! computed by methods independent of any series the engine verifies, and pi
//! is additionally cross-checked against a second arctangent decomposition.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BigFloatError {
    #[error("constant oracle disagreement for {name} at {bits} bits")]
    OracleMismatch { name: &'static str, bits: u32 },
    #[error("domain error: {0}")]
    DomainError(String),
}

pub const MIN_PRECISION: u32 = 64;

/// Binary big float: value = mantissa * 2^exponent, tracked at `precision` bits.
#[derive(Debug, Clone)]
pub struct BigFloat {
    mantissa: BigInt,
    exponent: i64,
    precision: u32,
}

fn two_pow(e: u64) -> BigInt {
    BigInt::one() << e
}

/// Integer division rounded to nearest, ties away from zero.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(!b.is_zero());
    let (mut q, r) = a.div_rem(b);
    let two_r = BigInt::from(2) * r.abs();
    if two_r >= b.abs() {
        if (a.sign() == Sign::Minus) != (b.sign() == Sign::Minus) {
            q -= 1;
        } else {
            q += 1;
        }
    }
    q
}

impl BigFloat {
    pub fn zero(precision: u32) -> Self {
        BigFloat { mantissa: BigInt::zero(), exponent: 0, precision: precision.max(MIN_PRECISION) }
    }

    pub fn from_bigint(m: BigInt, precision: u32) -> Self {
        BigFloat { mantissa: m, exponent: 0, precision: precision.max(MIN_PRECISION) }.normalized()
    }

    pub fn from_i64(v: i64, precision: u32) -> Self {
        Self::from_bigint(BigInt::from(v), precision)
    }

    /// Raw constructor for mantissa * 2^exponent.
    pub fn from_scaled(mantissa: BigInt, exponent: i64, precision: u32) -> Self {
        BigFloat { mantissa, exponent, precision: precision.max(MIN_PRECISION) }.normalized()
    }

    /// Round a rational to the working precision.
    pub fn from_rational(q: &BigRational, precision: u32) -> Self {
        let precision = precision.max(MIN_PRECISION);
        if q.is_zero() {
            return Self::zero(precision);
        }
        let num = q.numer();
        let den = q.denom();
        let shift = (precision as i64 + 2 + den.bits() as i64 - num.bits() as i64).max(0) as u64;
        let m = div_round(&(num << shift), den);
        BigFloat { mantissa: m, exponent: -(shift as i64), precision }.normalized()
    }

    /// Exact rational value of this float.
    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << self.exponent as u64)
        } else {
            BigRational::new(self.mantissa.clone(), two_pow(-self.exponent as u64))
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

    /// Exponent of the most significant bit: |value| is in [2^(t-1), 2^t).
    pub fn top_exp(&self) -> i64 {
        debug_assert!(!self.is_zero());
        self.exponent + self.mantissa.bits() as i64
    }

    /// Exponent of one unit in the last place at the stated precision.
    pub fn ulp_exp(&self) -> i64 {
        self.top_exp() - self.precision as i64
    }

    fn normalized(mut self) -> Self {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return self;
        }
        let bits = self.mantissa.bits();
        let prec = self.precision as u64;
        if bits > prec {
            let shift = bits - prec;
            let half = two_pow(shift - 1);
            let rounded = if self.mantissa.is_negative() {
                -div_floor_pos(&(-&self.mantissa + &half), shift)
            } else {
                div_floor_pos(&(&self.mantissa + &half), shift)
            };
            self.mantissa = rounded;
            self.exponent += shift as i64;
        }
        // Strip trailing zero bits; keeps mantissas small and the
        // (top_exp, ulp_exp) bookkeeping unchanged.
        if !self.mantissa.is_zero() {
            let tz = self.mantissa.trailing_zeros().unwrap_or(0);
            if tz > 0 {
                self.mantissa >>= tz;
                self.exponent += tz as i64;
            }
        }
        self
    }

    pub fn with_precision(mut self, precision: u32) -> Self {
        self.precision = precision.max(MIN_PRECISION);
        self.normalized()
    }

    pub fn neg(&self) -> Self {
        BigFloat { mantissa: -&self.mantissa, exponent: self.exponent, precision: self.precision }
    }

    pub fn abs(&self) -> Self {
        BigFloat { mantissa: self.mantissa.abs(), exponent: self.exponent, precision: self.precision }
    }

    /// Exact sum (no rounding); used by the ulp comparison helpers.
    pub fn add_exact(&self, other: &Self) -> Self {
        let precision = self.precision.max(other.precision);
        if self.is_zero() {
            let mut r = other.clone();
            r.precision = precision;
            return r;
        }
        if other.is_zero() {
            let mut r = self.clone();
            r.precision = precision;
            return r;
        }
        let e = self.exponent.min(other.exponent);
        let m = (&self.mantissa << (self.exponent - e) as u64)
            + (&other.mantissa << (other.exponent - e) as u64);
        BigFloat { mantissa: m, exponent: e, precision }
    }

    pub fn sub_exact(&self, other: &Self) -> Self {
        self.add_exact(&other.neg())
    }

    pub fn add(&self, other: &Self) -> Self {
        let precision = self.precision.max(other.precision);
        if self.is_zero() || other.is_zero() {
            return self.add_exact(other).normalized();
        }
        // If one operand sits entirely below the other's rounding error it
        // cannot affect the result; skip the (potentially huge) alignment.
        let (hi, lo) = if self.top_exp() >= other.top_exp() { (self, other) } else { (other, self) };
        if lo.top_exp() < hi.top_exp() - (precision as i64) - 66 {
            let mut r = hi.clone();
            r.precision = precision;
            return r.normalized();
        }
        self.add_exact(other).with_precision(precision)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let precision = self.precision.max(other.precision);
        BigFloat {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
            precision,
        }
        .normalized()
    }

    pub fn mul_rational(&self, q: &BigRational) -> Self {
        self.mul(&BigFloat::from_rational(q, self.precision + 2))
            .with_precision(self.precision)
    }

    pub fn mul_pow2(&self, e: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        BigFloat { mantissa: self.mantissa.clone(), exponent: self.exponent + e, precision: self.precision }
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero BigFloat");
        let precision = self.precision.max(other.precision);
        if self.is_zero() {
            return Self::zero(precision);
        }
        let shift = (precision as i64 + 2 + other.mantissa.bits() as i64
            - self.mantissa.bits() as i64)
            .max(0) as u64;
        let m = div_round(&(&self.mantissa << shift), &other.mantissa);
        BigFloat {
            mantissa: m,
            exponent: self.exponent - other.exponent - shift as i64,
            precision,
        }
        .normalized()
    }

    pub fn sqrt(&self) -> Result<Self, BigFloatError> {
        if self.is_negative() {
            return Err(BigFloatError::DomainError("sqrt of negative value".into()));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let precision = self.precision;
        // Scale the mantissa so the integer square root carries ~precision+2
        // bits and the exponent to halve is even.
        let bits = self.mantissa.bits() as i64;
        let mut shift = (2 * (precision as i64 + 2) - bits).max(0);
        if (self.exponent - shift) % 2 != 0 {
            shift += 1;
        }
        let scaled: BigInt = &self.mantissa << shift as u64;
        let root = scaled.sqrt();
        Ok(BigFloat { mantissa: root, exponent: (self.exponent - shift) / 2, precision }.normalized())
    }

    /// Exact value comparison.
    pub fn cmp_value(&self, other: &Self) -> std::cmp::Ordering {
        let d = self.sub_exact(other);
        if d.mantissa.is_zero() {
            std::cmp::Ordering::Equal
        } else if d.mantissa.is_negative() {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    }

    /// |self| <= 2^e, decided exactly.
    pub fn abs_le_pow2(&self, e: i64) -> bool {
        if self.is_zero() {
            return true;
        }
        let m = self.mantissa.abs();
        let d = e - self.exponent;
        if d < 0 {
            false
        } else {
            m <= two_pow(d as u64)
        }
    }

    /// |self - other| <= n ulp, at the coarser of the two ulp scales.
    pub fn within_ulps(&self, other: &Self, n: u64) -> bool {
        let d = self.sub_exact(other);
        if d.is_zero() {
            return true;
        }
        if self.is_zero() || other.is_zero() {
            let u = if self.is_zero() { other.ulp_exp() } else { self.ulp_exp() };
            return d.abs().to_rational() <= pow2_rational(u) * BigRational::from_integer(n.into());
        }
        let u = self.ulp_exp().max(other.ulp_exp());
        d.abs().to_rational() <= pow2_rational(u) * BigRational::from_integer(n.into())
    }

    /// Approximate base-10 logarithm of |self|; fine for digit-count profiles.
    pub fn log10_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let m = self.mantissa.abs();
        let bits = m.bits();
        let shift = bits.saturating_sub(53);
        let top = (m >> shift).to_f64().unwrap_or(f64::MAX);
        top.log10() + (shift as i64 + self.exponent) as f64 * std::f64::consts::LOG10_2
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let m = &self.mantissa;
        let bits = m.bits();
        let shift = bits.saturating_sub(53);
        let top = (m >> shift).to_f64().unwrap_or(f64::NAN);
        let e = shift as i64 + self.exponent;
        if e > 1020 {
            if m.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY }
        } else if e < -1060 {
            0.0
        } else {
            top * 2f64.powi(e as i32)
        }
    }

    /// Decimal rendering with `digits` significant digits (round to nearest).
    pub fn to_decimal(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return "0".into();
        }
        let sign = if self.mantissa.is_negative() { "-" } else { "" };
        let value = self.to_rational().abs();

        // Decimal exponent d10 with 10^d10 <= value < 10^(d10+1).
        let mut d10 = ((self.top_exp() - 1) as f64 * std::f64::consts::LOG10_2).floor() as i64;
        while value < pow10_rational(d10) {
            d10 -= 1;
        }
        while value >= pow10_rational(d10 + 1) {
            d10 += 1;
        }

        // digits significant digits: round(value * 10^(digits-1-d10)).
        let scale = digits as i64 - 1 - d10;
        let scaled = &value * pow10_rational(scale);
        let mut int_digits = div_round(scaled.numer(), scaled.denom());
        if int_digits >= BigInt::from(10).pow(digits as u32) {
            int_digits /= 10;
            d10 += 1;
        }
        let s = int_digits.to_string();
        debug_assert_eq!(s.len(), digits);

        if d10 >= 0 && (d10 as usize) < digits.max(21) && (d10 as usize) < digits {
            let (int_part, frac_part) = s.split_at(d10 as usize + 1);
            if frac_part.is_empty() {
                format!("{sign}{int_part}")
            } else {
                format!("{sign}{int_part}.{frac_part}")
            }
        } else if (-6..0).contains(&d10) {
            let zeros = "0".repeat((-d10 - 1) as usize);
            format!("{sign}0.{zeros}{s}")
        } else {
            let (first, rest) = s.split_at(1);
            if rest.is_empty() {
                format!("{sign}{first}e{d10}")
            } else {
                format!("{sign}{first}.{rest}e{d10}")
            }
        }
    }
}

fn div_floor_pos(a: &BigInt, shift: u64) -> BigInt {
    a >> shift
}

fn pow2_rational(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(two_pow(e as u64))
    } else {
        BigRational::new(BigInt::one(), two_pow(-e as u64))
    }
}

fn pow10_rational(e: i64) -> BigRational {
    let p = BigInt::from(10).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

// ---------------------------------------------------------------------------
// Fixed-point series kernels. All work on integers scaled by 2^wp.
// ---------------------------------------------------------------------------

/// arctan(1/x) * 2^wp for integer x >= 2, truncated series; error is a few
/// units at scale 2^-wp.
fn atan_recip_fixed(x: u64, wp: u64) -> BigInt {
    assert!(x >= 2);
    let x2 = BigInt::from(x) * BigInt::from(x);
    let mut term = two_pow(wp) / BigInt::from(x);
    let mut sum = term.clone();
    let mut j = 1u64;
    while !term.is_zero() {
        term /= &x2;
        if term.is_zero() {
            break;
        }
        let contrib = &term / BigInt::from(2 * j + 1);
        if j % 2 == 1 {
            sum -= contrib;
        } else {
            sum += contrib;
        }
        j += 1;
    }
    sum
}

/// artanh(1/x) * 2^wp for integer x >= 2.
fn atanh_recip_fixed(x: u64, wp: u64) -> BigInt {
    assert!(x >= 2);
    let x2 = BigInt::from(x) * BigInt::from(x);
    let mut term = two_pow(wp) / BigInt::from(x);
    let mut sum = term.clone();
    let mut j = 1u64;
    while !term.is_zero() {
        term /= &x2;
        if term.is_zero() {
            break;
        }
        sum += &term / BigInt::from(2 * j + 1);
        j += 1;
    }
    sum
}

/// arctan(1/m) as a BigFloat; exposed because Machin-style machinery is
/// occasionally useful on its own.
pub fn atan_recip(m: u64, precision: u32) -> Result<BigFloat, BigFloatError> {
    if m < 2 {
        return Err(BigFloatError::DomainError(
            "atan_recip requires an integer argument >= 2".into(),
        ));
    }
    let precision = precision.max(MIN_PRECISION);
    let wp = precision as u64 + 32;
    Ok(BigFloat::from_scaled(atan_recip_fixed(m, wp), -(wp as i64), precision))
}

// ---------------------------------------------------------------------------
// Constant oracles.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    Sqrt2,
    Sqrt3,
    Ln2,
    Ln3,
}

impl Constant {
    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::Sqrt2 => "sqrt2",
            Constant::Sqrt3 => "sqrt3",
            Constant::Ln2 => "ln2",
            Constant::Ln3 => "ln3",
        }
    }
}

fn oracle_cache() -> &'static Mutex<HashMap<(Constant, u32), BigFloat>> {
    static CACHE: OnceLock<Mutex<HashMap<(Constant, u32), BigFloat>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn compute_constant(c: Constant, precision: u32) -> Result<BigFloat, BigFloatError> {
    let wp = precision as u64 + 32;
    match c {
        Constant::Pi => {
            // Machin: pi = 16 arctan(1/5) - 4 arctan(1/239), cross-checked
            // against Hutton: pi = 8 arctan(1/3) + 4 arctan(1/7).
            let machin = BigInt::from(16) * atan_recip_fixed(5, wp)
                - BigInt::from(4) * atan_recip_fixed(239, wp);
            let hutton = BigInt::from(8) * atan_recip_fixed(3, wp)
                + BigInt::from(4) * atan_recip_fixed(7, wp);
            let a = BigFloat::from_scaled(machin, -(wp as i64), precision);
            let b = BigFloat::from_scaled(hutton, -(wp as i64), precision);
            if !a.within_ulps(&b, 4) {
                return Err(BigFloatError::OracleMismatch { name: "pi", bits: precision });
            }
            Ok(a)
        }
        Constant::Sqrt2 => BigFloat::from_i64(2, precision).sqrt(),
        Constant::Sqrt3 => BigFloat::from_i64(3, precision).sqrt(),
        Constant::Ln2 => {
            // ln 2 = 2 artanh(1/3).
            let v = BigInt::from(2) * atanh_recip_fixed(3, wp);
            Ok(BigFloat::from_scaled(v, -(wp as i64), precision))
        }
        Constant::Ln3 => {
            // ln 3 = ln 2 + 2 artanh(1/5), since artanh(1/5) = ln(3/2)/2.
            let v = BigInt::from(2) * atanh_recip_fixed(3, wp)
                + BigInt::from(2) * atanh_recip_fixed(5, wp);
            Ok(BigFloat::from_scaled(v, -(wp as i64), precision))
        }
    }
}

/// Cached constant oracle, keyed by (constant, precision).
pub fn constant_oracle(c: Constant, precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    if precision_bits < MIN_PRECISION {
        return Err(BigFloatError::DomainError(format!(
            "oracle precision must be at least {MIN_PRECISION} bits"
        )));
    }
    {
        let cache = oracle_cache().lock().unwrap();
        if let Some(v) = cache.get(&(c, precision_bits)) {
            return Ok(v.clone());
        }
    }
    let v = compute_constant(c, precision_bits)?;
    oracle_cache().lock().unwrap().insert((c, precision_bits), v.clone());
    Ok(v)
}

pub fn oracle_pi(precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    constant_oracle(Constant::Pi, precision_bits)
}

pub fn oracle_sqrt2(precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    constant_oracle(Constant::Sqrt2, precision_bits)
}

pub fn oracle_sqrt3(precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    constant_oracle(Constant::Sqrt3, precision_bits)
}

pub fn oracle_ln2(precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    constant_oracle(Constant::Ln2, precision_bits)
}

pub fn oracle_ln3(precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    constant_oracle(Constant::Ln3, precision_bits)
}

// ---------------------------------------------------------------------------
// Elementary functions.
// ---------------------------------------------------------------------------

/// Natural logarithm. Splits off the binary exponent, then uses
/// ln v = 2 artanh((v-1)/(v+1)) on the remaining v in [1, 2).
pub fn ln(x: &BigFloat) -> Result<BigFloat, BigFloatError> {
    if x.is_zero() || x.is_negative() {
        return Err(BigFloatError::DomainError("ln requires a positive argument".into()));
    }
    let precision = x.precision;
    let wp = precision as u64 + 32;

    let bits = x.mantissa.bits();
    let e_val = x.exponent + bits as i64 - 1; // x = v * 2^e_val, v in [1,2)
    let m = x.mantissa.clone();
    let high = two_pow(bits - 1);
    // y = (v-1)/(v+1) = (m - 2^(bits-1)) / (m + 2^(bits-1)), in [0, 1/3).
    let y = ((&m - &high) << wp) / (&m + &high);

    let mut ln_v = BigInt::zero();
    if !y.is_zero() {
        let y2 = (&y * &y) >> wp;
        let mut term = y.clone();
        let mut sum = y.clone();
        let mut j = 1u64;
        while !term.is_zero() {
            term = (&term * &y2) >> wp;
            if term.is_zero() {
                break;
            }
            sum += &term / BigInt::from(2 * j + 1);
            j += 1;
        }
        ln_v = BigInt::from(2) * sum;
    }

    let ln2_fixed = BigInt::from(2) * atanh_recip_fixed(3, wp);
    let total = ln_v + BigInt::from(e_val) * ln2_fixed;
    Ok(BigFloat::from_scaled(total, -(wp as i64), precision))
}

/// Exponential. Argument-reduced by the nearest multiple of ln 2, then a
/// scaled Taylor series with 16 squarings.
pub fn exp(x: &BigFloat) -> Result<BigFloat, BigFloatError> {
    let precision = x.precision;
    if x.is_zero() {
        return Ok(BigFloat::from_i64(1, precision));
    }
    if x.top_exp() > 50 {
        return Err(BigFloatError::DomainError("exp argument magnitude too large".into()));
    }
    const SQUARINGS: u64 = 16;
    let wp = precision as u64 + 64 + 2 * SQUARINGS;

    // x = k ln2 + r with |r| <= ln2.
    let ln2_fixed = BigInt::from(2) * atanh_recip_fixed(3, wp);
    let x_fixed = {
        let shift = wp as i64 + x.exponent;
        if shift >= 0 {
            &x.mantissa << shift as u64
        } else {
            &x.mantissa >> (-shift) as u64
        }
    };
    let k_int = div_round(&x_fixed, &ln2_fixed);
    let k = k_int.to_i64().expect("reduced exponent fits i64");
    let r = &x_fixed - &k_int * &ln2_fixed;

    // exp(r) via exp(u)^(2^s) with u = r / 2^s.
    let u = &r >> SQUARINGS;
    let one = two_pow(wp);
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut j = 1u64;
    loop {
        term = (&term * &u) >> wp;
        term /= BigInt::from(j);
        if term.is_zero() {
            break;
        }
        sum += &term;
        j += 1;
    }
    let mut acc = sum;
    for _ in 0..SQUARINGS {
        acc = (&acc * &acc) >> wp;
    }
    Ok(BigFloat::from_scaled(acc, -(wp as i64) + k, precision))
}

/// cos(pi * q) for rational q, with exact range reduction: returns exactly
/// +-1 at integers and exactly 0 at half-integers.
pub fn cos_pi(q: &BigRational, precision: u32) -> Result<BigFloat, BigFloatError> {
    let precision = precision.max(MIN_PRECISION);
    // Reduce modulo 2 into [0, 2).
    let two = BigRational::from_integer(2.into());
    let floored = (q / &two).floor();
    let mut r = q - floored * &two;
    let mut sign = 1i64;
    let one = BigRational::one();
    if r > one {
        r = &two - &r; // cos is even about pi
    }
    let half = BigRational::new(BigInt::one(), 2.into());
    if r > half {
        sign = -sign;
        r = &one - &r; // cos(pi - t) = -cos t
    }
    if r.is_zero() {
        return Ok(BigFloat::from_i64(sign, precision));
    }
    if r == half {
        return Ok(BigFloat::zero(precision));
    }

    // z = pi * r in (0, pi/2); Taylor series in fixed point.
    let wp = precision as u64 + 32;
    let pi = oracle_pi(precision + 64)?;
    let z = pi.mul_rational(&r);
    let z_fixed = {
        let shift = wp as i64 + z.exponent;
        if shift >= 0 {
            &z.mantissa << shift as u64
        } else {
            &z.mantissa >> (-shift) as u64
        }
    };
    let z2 = (&z_fixed * &z_fixed) >> wp;
    let mut term = two_pow(wp);
    let mut sum = term.clone();
    let mut j = 1u64;
    loop {
        term = (&term * &z2) >> wp;
        term /= BigInt::from((2 * j - 1) * (2 * j));
        if term.is_zero() {
            break;
        }
        if j % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        j += 1;
    }
    Ok(BigFloat::from_scaled(BigInt::from(sign) * sum, -(wp as i64), precision))
}

// ---------------------------------------------------------------------------
// Gamma at positive rational arguments.
// ---------------------------------------------------------------------------

/// Bernoulli numbers B_2, B_4, ..., B_{2n} via the integer tangent-number
/// triangle (all operations are BigInt adds and small multiplies, so even
/// B_600-class requests stay fast).
fn bernoulli_even(n: usize) -> Vec<BigRational> {
    // Tangent numbers T_1..T_n.
    let mut t: Vec<BigInt> = Vec::with_capacity(n + 1);
    t.push(BigInt::zero()); // index 0 unused
    t.push(BigInt::one());
    for k in 2..=n {
        let prev = t[k - 1].clone();
        t.push(BigInt::from(k as u64 - 1) * prev);
    }
    for k in 2..=n {
        for j in k..=n {
            let a = BigInt::from((j - k) as u64) * &t[j - 1];
            let b = BigInt::from((j - k + 2) as u64) * &t[j];
            t[j] = a + b;
        }
    }
    // B_{2m} = (-1)^(m-1) * 2m * T_m / (2^{2m} (2^{2m} - 1)).
    (1..=n)
        .map(|m| {
            let num = BigInt::from(2 * m as u64) * &t[m];
            let p = two_pow(2 * m as u64);
            let den = &p * (&p - BigInt::one());
            let signed = if m % 2 == 1 { num } else { -num };
            BigRational::new(signed, den)
        })
        .collect()
}

fn bernoulli_cache() -> &'static Mutex<Vec<BigRational>> {
    static CACHE: OnceLock<Mutex<Vec<BigRational>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// B_{2m} for m = 1..=n, from a process-wide cache.
fn bernoulli_upto(n: usize) -> Vec<BigRational> {
    let mut cache = bernoulli_cache().lock().unwrap();
    if cache.len() < n {
        *cache = bernoulli_even(n);
    }
    cache[..n].to_vec()
}

/// log2 |q| estimated from numerator/denominator bit lengths.
fn log2_rational(q: &BigRational) -> f64 {
    q.numer().bits() as f64 - q.denom().bits() as f64
}

/// Gamma at a positive rational argument via an upward shift and the
/// Stirling series, with the first omitted term below 2^-(precision+8).
pub fn gamma_rational(q: &BigRational, precision_bits: u32) -> Result<BigFloat, BigFloatError> {
    if !q.is_positive() {
        return Err(BigFloatError::DomainError(
            "gamma_rational requires a positive argument".into(),
        ));
    }
    let precision = precision_bits.max(MIN_PRECISION);
    let wp = precision + 64;

    // Series depth grows slowly with precision; the shift is then chosen so
    // the first omitted term B_{2J+2} / ((2J+2)(2J+1) z^{2J+1}) is below the
    // target.
    let j_terms = 64 + precision as usize / 16;
    let bern = bernoulli_upto(j_terms + 1);
    let b_next = &bern[j_terms]; // B_{2(J+1)}
    let log2_b = log2_rational(b_next);
    let target = -(precision as f64) - 8.0;
    let need_log2_z =
        (log2_b - ((2 * j_terms + 2) as f64 * (2 * j_terms + 1) as f64).log2() - target)
            / (2 * j_terms + 1) as f64;
    let z_min = need_log2_z.exp2().max(2.0);
    let q_f64 = q.numer().to_f64().unwrap_or(f64::MAX) / q.denom().to_f64().unwrap_or(1.0);
    let shift = if q_f64 >= z_min { 0u64 } else { (z_min - q_f64).ceil() as u64 + 1 };

    let z = q + BigRational::from_integer(BigInt::from(shift));
    let z_bf = BigFloat::from_rational(&z, wp);

    // ln Gamma(z) = (z - 1/2) ln z - z + ln(2 pi)/2 + sum_j B_2j / (2j (2j-1) z^(2j-1)).
    let ln_z = ln(&z_bf)?;
    let half = BigRational::new(BigInt::one(), 2.into());
    let zm_half = BigFloat::from_rational(&(&z - &half), wp);
    let pi = oracle_pi(wp)?;
    let ln_2pi = ln(&pi.mul_pow2(1))?;

    let mut lng = zm_half.mul(&ln_z).sub(&z_bf).add(&ln_2pi.mul_pow2(-1));

    let z2 = &z * &z;
    let mut z_pow = z.clone(); // z^(2j-1)
    for (idx, b) in bern.iter().take(j_terms).enumerate() {
        let j = idx + 1;
        let coeff = b / (BigRational::from_integer(BigInt::from((2 * j) as u64 * (2 * j - 1) as u64))
            * &z_pow);
        lng = lng.add(&BigFloat::from_rational(&coeff, wp));
        z_pow *= &z2;
    }

    // Gamma(q) = exp(ln Gamma(z)) / prod_{i=0}^{shift-1} (q + i); the product
    // is kept as exact integers (numerator of q plus multiples of its
    // denominator, over denom^shift).
    let g_z = exp(&lng)?;
    if shift == 0 {
        return Ok(g_z.with_precision(precision));
    }
    let a = q.numer();
    let b = q.denom();
    let mut prod_num = BigInt::one();
    for i in 0..shift {
        prod_num *= a + b * BigInt::from(i);
    }
    let prod = BigFloat::from_rational(&BigRational::new(prod_num, b.pow(shift as u32)), wp);
    Ok(g_z.div(&prod).with_precision(precision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use std::str::FromStr;

    const PI_50: &str = "3.1415926535897932384626433832795028841971693993751";
    const SQRT2_50: &str = "1.4142135623730950488016887242096980785696718753769";
    const SQRT3_50: &str = "1.7320508075688772935274463415058723669428052538104";
    const LN2_36: &str = "0.693147180559945309417232121458176568";
    const E_50: &str = "2.7182818284590452353602874713526624977572470936999";
    const GAMMA_HALF_51: &str = "1.772453850905516027298167483341145182797549456122387";

    fn dec(s: &str) -> BigRational {
        let neg = s.starts_with('-');
        let s = s.trim_start_matches('-');
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let digits = format!("{int_part}{frac_part}");
        let num = BigInt::from_str(&digits).unwrap();
        let den = BigInt::from(10).pow(frac_part.len() as u32);
        let q = BigRational::new(num, den);
        if neg {
            -q
        } else {
            q
        }
    }

    fn close_to(x: &BigFloat, expect: &str, tol_log10: i32) {
        let diff = (x.to_rational() - dec(expect)).abs();
        let tol = BigRational::new(BigInt::one(), BigInt::from(10).pow(tol_log10 as u32));
        assert!(
            diff <= tol,
            "value {} differs from {} by more than 1e-{}",
            x.to_decimal(tol_log10 as usize + 2),
            expect,
            tol_log10
        );
    }

    #[test]
    fn basic_arithmetic_round_trips() {
        let a = BigFloat::from_rational(&rat(1, 3), 128);
        let b = BigFloat::from_rational(&rat(1, 7), 128);
        let s = a.add(&b);
        close_to(&s, "0.476190476190476190476190476190476190", 35);
        let p = a.mul(&b);
        close_to(&p, "0.047619047619047619047619047619047619", 35);
        let d = a.div(&b);
        close_to(&d, "2.333333333333333333333333333333333333", 34);
        assert_eq!(a.sub(&a).to_rational(), BigRational::zero());
    }

    #[test]
    fn division_by_self_is_exactly_one() {
        let pi = oracle_pi(256).unwrap();
        let one = pi.div(&pi);
        assert_eq!(one.to_rational(), BigRational::one());
    }

    #[test]
    fn negligible_addend_is_dropped_safely() {
        let big = BigFloat::from_i64(1, 128);
        let tiny = BigFloat::from_scaled(BigInt::one(), -100_000, 128);
        let s = big.add(&tiny);
        assert!(s.within_ulps(&big, 1));
    }

    #[test]
    fn pi_oracle_matches_reference_digits() {
        let pi = oracle_pi(256).unwrap();
        close_to(&pi, PI_50, 49);
        // 64-bit request: accurate to its own ulp, i.e. ~19 leading digits.
        let pi64 = oracle_pi(64).unwrap();
        close_to(&pi64, PI_50, 18);
    }

    #[test]
    fn pi_precision_is_monotone() {
        let lo = oracle_pi(64).unwrap();
        let hi = oracle_pi(128).unwrap().with_precision(64);
        assert!(lo.within_ulps(&hi, 2));
        let a = oracle_pi(1024).unwrap();
        let b = oracle_pi(2048).unwrap();
        assert!(a.within_ulps(&b.with_precision(1024), 2));
    }

    #[test]
    fn sqrt_oracles_match_reference_digits() {
        close_to(&oracle_sqrt2(256).unwrap(), SQRT2_50, 49);
        close_to(&oracle_sqrt3(256).unwrap(), SQRT3_50, 49);
        let s = oracle_sqrt2(256).unwrap();
        let back = s.mul(&s).sub(&BigFloat::from_i64(2, 256));
        assert!(back.abs_le_pow2(-254));
    }

    #[test]
    fn ln_oracles_match_reference_digits() {
        close_to(&oracle_ln2(256).unwrap(), LN2_36, 35);
        let three = BigFloat::from_i64(3, 256);
        assert!(ln(&three).unwrap().within_ulps(&oracle_ln3(256).unwrap(), 4));
    }

    #[test]
    fn ln_and_exp_are_inverse() {
        for v in [2i64, 3, 10, 641, 1_000_003] {
            // Composition amplifies error by the condition number ln(v), so
            // run the intermediate step with headroom and compare at 320.
            let x = BigFloat::from_i64(v, 320);
            let l = ln(&x.clone().with_precision(448)).unwrap();
            let back = exp(&l).unwrap().with_precision(320);
            assert!(back.within_ulps(&x, 4), "round trip failed for {v}");
        }
        let e1 = exp(&BigFloat::from_i64(1, 256)).unwrap();
        close_to(&e1, E_50, 49);
        assert_eq!(
            exp(&BigFloat::zero(128)).unwrap().to_rational(),
            BigRational::one()
        );
        assert!(ln(&BigFloat::zero(128)).is_err());
        assert!(ln(&BigFloat::from_i64(-2, 128)).is_err());
    }

    #[test]
    fn cos_pi_exact_points() {
        assert_eq!(cos_pi(&int(3), 128).unwrap().to_rational(), -BigRational::one());
        assert_eq!(cos_pi(&int(0), 128).unwrap().to_rational(), BigRational::one());
        assert_eq!(cos_pi(&int(-4), 128).unwrap().to_rational(), BigRational::one());
        assert!(cos_pi(&rat(1, 2), 128).unwrap().is_zero());
        assert!(cos_pi(&rat(-7, 2), 128).unwrap().is_zero());
    }

    #[test]
    fn cos_pi_series_points() {
        // cos(pi/3) = 1/2 exactly.
        let c = cos_pi(&rat(1, 3), 256).unwrap();
        let half = BigFloat::from_rational(&rat(1, 2), 256);
        assert!(c.within_ulps(&half, 2));
        // cos(pi/4) = sqrt2/2.
        let c = cos_pi(&rat(1, 4), 256).unwrap();
        let target = oracle_sqrt2(256).unwrap().mul_pow2(-1);
        assert!(c.within_ulps(&target, 2));
        // cos(-pi/3) = cos(pi/3).
        let c2 = cos_pi(&rat(-1, 3), 256).unwrap();
        assert!(c2.within_ulps(&half, 2));
        // cos(2pi/3) = -1/2.
        let c3 = cos_pi(&rat(2, 3), 256).unwrap();
        assert!(c3.within_ulps(&half.neg(), 2));
    }

    #[test]
    fn bernoulli_numbers_match_known_values() {
        let b = bernoulli_even(6);
        assert_eq!(b[0], rat(1, 6));
        assert_eq!(b[1], rat(-1, 30));
        assert_eq!(b[2], rat(1, 42));
        assert_eq!(b[3], rat(-1, 30));
        assert_eq!(b[4], rat(5, 66));
        assert_eq!(b[5], rat(-691, 2730));
    }

    #[test]
    fn gamma_known_points() {
        let g = gamma_rational(&rat(1, 2), 256).unwrap();
        close_to(&g, GAMMA_HALF_51, 49);
        let g1 = gamma_rational(&int(1), 128).unwrap();
        assert!(g1.within_ulps(&BigFloat::from_i64(1, 128), 4));
        let g5 = gamma_rational(&int(5), 128).unwrap();
        assert!(g5.within_ulps(&BigFloat::from_i64(24, 128), 8));
        // Gamma(3/2) = sqrt(pi)/2.
        let g32 = gamma_rational(&rat(3, 2), 256).unwrap();
        let target = oracle_pi(256).unwrap().sqrt().unwrap().mul_pow2(-1);
        assert!(g32.within_ulps(&target, 8));
        assert!(gamma_rational(&int(0), 128).is_err());
        assert!(gamma_rational(&rat(-3, 2), 128).is_err());
    }

    #[test]
    fn gamma_squared_half_is_pi_at_many_precisions() {
        for bits in [256u32, 1024] {
            let g = gamma_rational(&rat(1, 2), bits).unwrap();
            let pi = oracle_pi(bits).unwrap();
            assert!(g.mul(&g).within_ulps(&pi, 8), "failed at {bits} bits");
        }
    }

    #[test]
    fn gamma_recurrence_holds() {
        // Gamma(q+1) = q Gamma(q) for assorted rationals.
        for (num, den) in [(1i64, 3i64), (7, 2), (13, 5), (29, 4), (97, 10)] {
            let q = rat(num, den);
            let lhs = gamma_rational(&(&q + BigRational::one()), 192).unwrap();
            let rhs = gamma_rational(&q, 192).unwrap().mul_rational(&q);
            assert!(lhs.within_ulps(&rhs, 8), "recurrence failed at {num}/{den}");
        }
    }

    #[test]
    fn decimal_rendering_handles_scales() {
        assert_eq!(BigFloat::from_i64(0, 64).to_decimal(10), "0");
        assert_eq!(BigFloat::from_i64(1, 64).to_decimal(4), "1.000");
        assert_eq!(BigFloat::from_i64(-3, 64).to_decimal(3), "-3.00");
        let x = BigFloat::from_rational(&rat(1, 8), 64);
        assert_eq!(x.to_decimal(3), "0.125");
        let tiny = BigFloat::from_rational(&rat(1, 100_000_000), 64);
        assert_eq!(tiny.to_decimal(2), "1.0e-8");
        let big = BigFloat::from_i64(123_456, 64);
        assert_eq!(big.to_decimal(4), "1.235e5");
        assert_eq!(big.to_decimal(8), "123456.00");
    }

    #[test]
    fn to_decimal_rounds_carry_across_all_nines() {
        let x = BigFloat::from_rational(&rat(9_999_999, 10_000_000), 128);
        assert_eq!(x.to_decimal(3), "1.00");
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        assert!(BigFloat::from_i64(-1, 64).sqrt().is_err());
        assert!(atan_recip(1, 64).is_err());
    }
}
