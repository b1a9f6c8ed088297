//! Proper hypergeometric terms t(n, k): typed factor products with a rational
//! prefactor, exact evaluation at integer n and rational k, shift-ratio
//! extraction t(n+1,k)/t(n,k) and t(n,k+1)/t(n,k) as rational functions, and
//! the four binomial-quotient simplification identities.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bigfloat::{self, BigFloat};
use crate::exact::{
    binomial, factorial, int, pochhammer, ratfun_eval, ExactError, Poly2, RationalFunction2,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("pole at (n, k) = ({n}, {k})")]
    Pole { n: String, k: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("improper term: {0}")]
    Improper(String),
}

impl From<ExactError> for TermError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Pole { n, k } => TermError::Pole { n, k },
            ExactError::Parse(msg) => TermError::Domain(msg),
        }
    }
}

/// a·n + b·k + c with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub coeff_n: BigRational,
    pub coeff_k: BigRational,
    pub constant: BigRational,
}

impl LinearForm {
    pub fn new(coeff_n: BigRational, coeff_k: BigRational, constant: BigRational) -> Self {
        LinearForm { coeff_n, coeff_k, constant }
    }

    pub fn eval(&self, n: &BigRational, k: &BigRational) -> BigRational {
        &self.coeff_n * n + &self.coeff_k * k + &self.constant
    }

    pub fn to_poly(&self) -> Poly2 {
        let mut p = Poly2::zero();
        p.add_term(1, 0, self.coeff_n.clone());
        p.add_term(0, 1, self.coeff_k.clone());
        p.add_term(0, 0, self.constant.clone());
        p
    }

    pub fn is_k_only(&self) -> bool {
        self.coeff_n.is_zero()
    }

    /// The form plus an integer offset.
    pub fn offset(&self, i: i64) -> LinearForm {
        LinearForm::new(self.coeff_n.clone(), self.coeff_k.clone(), &self.constant + int(i))
    }

    fn sub(&self, other: &LinearForm) -> LinearForm {
        LinearForm::new(
            &self.coeff_n - &other.coeff_n,
            &self.coeff_k - &other.coeff_k,
            &self.constant - &other.constant,
        )
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

impl FromStr for LinearForm {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p: Poly2 = s.parse()?;
        if p.degree_n() > 1 || p.degree_k() > 1 || p.terms().any(|(&(a, b), _)| a + b > 1) {
            return Err(ExactError::Parse(format!("not a linear form: {s:?}")));
        }
        let mut lf = LinearForm::new(BigRational::zero(), BigRational::zero(), BigRational::zero());
        for (&(a, b), c) in p.terms() {
            match (a, b) {
                (1, 0) => lf.coeff_n = c.clone(),
                (0, 1) => lf.coeff_k = c.clone(),
                (0, 0) => lf.constant = c.clone(),
                _ => unreachable!(),
            }
        }
        Ok(lf)
    }
}

impl Serialize for LinearForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LinearForm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e: ExactError| D::Error::custom(e.to_string()))
    }
}

/// One multiplicative factor of a hypergeometric term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    /// binom(top, bottom)^exp with the generalized falling-factorial rule.
    Binom { top: LinearForm, bottom: LinearForm, exp: i32 },
    /// base^(linear form), base a positive integer.
    ConstPow { base: u32, exp: LinearForm },
    /// (−1)^(linear form); also stands in for cos πk at integer k.
    SignPow { exp: LinearForm },
    /// Rising factorial (arg)_n^exp; arg is a linear form in k alone.
    Poch { arg: LinearForm, exp: i32 },
    /// (n!)^exp.
    FactorialPow { exp: i32 },
}

impl Factor {
    pub fn binom(top: &str, bottom: &str, exp: i32) -> Factor {
        Factor::Binom {
            top: top.parse().expect("binom top parses"),
            bottom: bottom.parse().expect("binom bottom parses"),
            exp,
        }
    }

    pub fn constpow(base: u32, exp: &str) -> Factor {
        assert!(base > 0, "constpow base must be positive");
        Factor::ConstPow { base, exp: exp.parse().expect("constpow exponent parses") }
    }

    pub fn signpow(exp: &str) -> Factor {
        Factor::SignPow { exp: exp.parse().expect("signpow exponent parses") }
    }

    pub fn poch(arg: &str, exp: i32) -> Factor {
        let arg: LinearForm = arg.parse().expect("poch argument parses");
        assert!(arg.is_k_only(), "poch argument must be a form in k alone");
        Factor::Poch { arg, exp }
    }

    pub fn factorialpow(exp: i32) -> Factor {
        Factor::FactorialPow { exp }
    }
}

/// A proper hypergeometric term: prefactor(n,k) · ∏ factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperTerm {
    pub factors: Vec<Factor>,
    pub prefactor: RationalFunction2,
}

impl HyperTerm {
    pub fn new(factors: Vec<Factor>, prefactor_num: &str, prefactor_den: &str) -> Self {
        HyperTerm {
            factors,
            prefactor: RationalFunction2::new(
                prefactor_num.parse().expect("prefactor numerator parses"),
                prefactor_den.parse().expect("prefactor denominator parses"),
            ),
        }
    }

    /// True when some factor forces k to be an integer for exact evaluation.
    pub fn requires_integer_k(&self) -> bool {
        self.factors.iter().any(|f| match f {
            Factor::Binom { top, bottom, .. } => {
                !top.coeff_k.is_zero() || !bottom.coeff_k.is_zero()
            }
            Factor::SignPow { exp } => !exp.coeff_k.is_zero(),
            _ => false,
        })
    }
}

fn rat_pow(v: &BigRational, e: i32, at: (&BigRational, &BigRational)) -> Result<BigRational, TermError> {
    if e == 0 {
        return Ok(BigRational::one());
    }
    if v.is_zero() && e < 0 {
        return Err(TermError::Pole { n: at.0.to_string(), k: at.1.to_string() });
    }
    let mut acc = BigRational::one();
    for _ in 0..e.unsigned_abs() {
        acc *= v;
    }
    if e < 0 {
        acc = acc.recip();
    }
    Ok(acc)
}

fn base_pow(base: u32, e: &BigInt) -> BigRational {
    let p = BigInt::from(base).pow(e.magnitude().to_u32().expect("constpow exponent fits u32"));
    if e.is_negative() {
        BigRational::new(BigInt::one(), p)
    } else {
        BigRational::from_integer(p)
    }
}

/// Exact value of the term at integer n ≥ 0 and rational k (2k an integer for
/// the catalog's use; any rational k works when the factors allow it).
pub fn eval_term(t: &HyperTerm, n: u64, k: &BigRational) -> Result<BigRational, TermError> {
    let nq = int(n as i64);
    let at = (&nq, k);
    let mut acc = ratfun_eval(&t.prefactor, &nq, k)?;
    let k_is_int = k.is_integer();
    for f in &t.factors {
        match f {
            Factor::Binom { top, bottom, exp } => {
                if !k_is_int && (!top.coeff_k.is_zero() || !bottom.coeff_k.is_zero()) {
                    return Err(TermError::Domain(
                        "binomial factor requires integer k for exact evaluation".into(),
                    ));
                }
                let b = bottom.eval(&nq, k);
                if !b.is_integer() {
                    return Err(TermError::Domain(format!(
                        "binomial lower index {b} is not an integer"
                    )));
                }
                let bi = b.to_integer();
                let v = if bi.is_negative() {
                    BigRational::zero() // binom(x, m) = 0 for integer m < 0
                } else {
                    let m = bi.to_u64().ok_or_else(|| {
                        TermError::Domain("binomial lower index too large".into())
                    })?;
                    binomial(&top.eval(&nq, k), m)
                };
                acc *= rat_pow(&v, *exp, at)?;
            }
            Factor::ConstPow { base, exp } => {
                let e = exp.eval(&nq, k);
                if !e.is_integer() {
                    return Err(TermError::Domain(format!(
                        "exponent {e} of base {base} is not an integer"
                    )));
                }
                acc *= base_pow(*base, &e.to_integer());
            }
            Factor::SignPow { exp } => {
                let e = exp.eval(&nq, k);
                if !e.is_integer() {
                    return Err(TermError::Domain(format!(
                        "sign exponent {e} is not an integer"
                    )));
                }
                if e.to_integer().is_odd() {
                    acc = -acc;
                }
            }
            Factor::Poch { arg, exp } => {
                let a = arg.eval(&BigRational::zero(), k);
                let v = pochhammer(&a, n);
                acc *= rat_pow(&v, *exp, at)?;
            }
            Factor::FactorialPow { exp } => {
                let v = BigRational::from_integer(factorial(n));
                acc *= rat_pow(&v, *exp, at)?;
            }
        }
    }
    Ok(acc)
}

/// Numeric value of the term at rational k. Equal to the exact value when all
/// exponents stay integral; non-integer ConstPow exponents are lifted through
/// exp/ln. Binomial factors involving k still demand integer k.
pub fn eval_term_float(
    t: &HyperTerm,
    n: u64,
    k: &BigRational,
    precision: u32,
) -> Result<BigFloat, TermError> {
    let nq = int(n as i64);
    let at = (&nq, k);
    let mut acc = ratfun_eval(&t.prefactor, &nq, k)?;
    let mut float_part: Option<BigFloat> = None;
    let wp = precision + 32;
    let k_is_int = k.is_integer();
    for f in &t.factors {
        match f {
            Factor::Binom { top, bottom, exp } => {
                if !k_is_int && (!top.coeff_k.is_zero() || !bottom.coeff_k.is_zero()) {
                    return Err(TermError::Domain(
                        "binomial factor not defined at non-integer k; use a pochhammer form".into(),
                    ));
                }
                let b = bottom.eval(&nq, k);
                if !b.is_integer() {
                    return Err(TermError::Domain(format!(
                        "binomial lower index {b} is not an integer"
                    )));
                }
                let bi = b.to_integer();
                let v = if bi.is_negative() {
                    BigRational::zero()
                } else {
                    binomial(&top.eval(&nq, k), bi.to_u64().unwrap_or(u64::MAX))
                };
                acc *= rat_pow(&v, *exp, at)?;
            }
            Factor::ConstPow { base, exp } => {
                let e = exp.eval(&nq, k);
                if e.is_integer() {
                    acc *= base_pow(*base, &e.to_integer());
                } else {
                    let ln_b = bigfloat::ln(&BigFloat::from_i64(*base as i64, wp))
                        .map_err(|e| TermError::Domain(e.to_string()))?;
                    let p = bigfloat::exp(&ln_b.mul_rational(&e))
                        .map_err(|e| TermError::Domain(e.to_string()))?;
                    float_part = Some(match float_part {
                        Some(acc_f) => acc_f.mul(&p),
                        None => p,
                    });
                }
            }
            Factor::SignPow { exp } => {
                let e = exp.eval(&nq, k);
                if !e.is_integer() {
                    return Err(TermError::Domain(format!(
                        "sign exponent {e} is not an integer"
                    )));
                }
                if e.to_integer().is_odd() {
                    acc = -acc;
                }
            }
            Factor::Poch { arg, exp } => {
                let a = arg.eval(&BigRational::zero(), k);
                let v = pochhammer(&a, n);
                acc *= rat_pow(&v, *exp, at)?;
            }
            Factor::FactorialPow { exp } => {
                let v = BigRational::from_integer(factorial(n));
                acc *= rat_pow(&v, *exp, at)?;
            }
        }
    }
    let exact = BigFloat::from_rational(&acc, wp);
    Ok(match float_part {
        Some(fp) => exact.mul(&fp).with_precision(precision),
        None => exact.with_precision(precision),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    K,
}

fn axis_coeff(lf: &LinearForm, axis: Axis) -> &BigRational {
    match axis {
        Axis::N => &lf.coeff_n,
        Axis::K => &lf.coeff_k,
    }
}

fn integer_step(lf: &LinearForm, axis: Axis, what: &str) -> Result<i64, TermError> {
    let c = axis_coeff(lf, axis);
    if !c.is_integer() {
        return Err(TermError::Improper(format!(
            "{what} argument {lf} shifts by non-integer step {c}"
        )));
    }
    c.to_integer()
        .to_i64()
        .ok_or_else(|| TermError::Improper(format!("{what} shift step too large")))
}

/// Γ(x + d + 1)/Γ(x + 1) as (numerator, denominator) polynomial products.
fn gamma_shift(x: &LinearForm, d: i64) -> (Poly2, Poly2) {
    let mut num = Poly2::one();
    let mut den = Poly2::one();
    if d >= 0 {
        for i in 1..=d {
            num = num.mul(&x.offset(i).to_poly());
        }
    } else {
        for i in 0..(-d) {
            den = den.mul(&x.offset(-i).to_poly());
        }
    }
    (num, den)
}

fn pow_ratfun(f: &RationalFunction2, e: i32) -> RationalFunction2 {
    let mut acc = RationalFunction2::one();
    for _ in 0..e.unsigned_abs() {
        acc = acc.mul(f);
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

fn factor_ratio(f: &Factor, axis: Axis) -> Result<RationalFunction2, TermError> {
    Ok(match f {
        Factor::Binom { top, bottom, exp } => {
            let dt = integer_step(top, axis, "binomial top")?;
            let db = integer_step(bottom, axis, "binomial bottom")?;
            // binom = Γ(T+1) / (Γ(B+1) Γ(T−B+1)); the shift ratio is a product
            // of three Γ-quotients, each a finite product of linear forms.
            let (tn, td) = gamma_shift(top, dt);
            let (bn, bd) = gamma_shift(bottom, db);
            let (cn, cd) = gamma_shift(&top.sub(bottom), dt - db);
            let base = RationalFunction2::new(tn.mul(&bd).mul(&cd), td.mul(&bn).mul(&cn));
            pow_ratfun(&base, *exp)
        }
        Factor::ConstPow { base, exp } => {
            let c = integer_step(exp, axis, "constant-power")?;
            RationalFunction2::constant(base_pow(*base, &BigInt::from(c)))
        }
        Factor::SignPow { exp } => {
            let c = integer_step(exp, axis, "sign-power")?;
            RationalFunction2::constant(if c % 2 == 0 { int(1) } else { int(-1) })
        }
        Factor::Poch { arg, exp } => match axis {
            Axis::N => {
                // (arg)_{n+1} / (arg)_n = arg + n.
                let mut p = arg.to_poly();
                p.add_term(1, 0, BigRational::one());
                pow_ratfun(&RationalFunction2::from_poly(p), *exp)
            }
            Axis::K => {
                let c = integer_step(arg, axis, "pochhammer")?;
                // (arg+c)_n / (arg)_n telescopes into |c| linear-form quotients.
                let mut num = Poly2::one();
                let mut den = Poly2::one();
                let n_plus = |lf: &LinearForm| {
                    let mut p = lf.to_poly();
                    p.add_term(1, 0, BigRational::one());
                    p
                };
                if c >= 0 {
                    for i in 0..c {
                        num = num.mul(&n_plus(&arg.offset(i)));
                        den = den.mul(&arg.offset(i).to_poly());
                    }
                } else {
                    for i in 1..=(-c) {
                        num = num.mul(&arg.offset(-i).to_poly());
                        den = den.mul(&n_plus(&arg.offset(-i)));
                    }
                }
                pow_ratfun(&RationalFunction2::new(num, den), *exp)
            }
        },
        Factor::FactorialPow { exp } => match axis {
            Axis::N => {
                let mut p = Poly2::one();
                p.add_term(1, 0, BigRational::one());
                pow_ratfun(&RationalFunction2::from_poly(p), *exp)
            }
            Axis::K => RationalFunction2::one(),
        },
    })
}

/// Exact shift ratio t(n+1,k)/t(n,k) (axis n) or t(n,k+1)/t(n,k) (axis k).
pub fn shift_ratio(t: &HyperTerm, axis: Axis) -> Result<RationalFunction2, TermError> {
    let one = int(1);
    let (num_s, den_s) = match axis {
        Axis::N => (t.prefactor.num.shift_n(&one), t.prefactor.den.shift_n(&one)),
        Axis::K => (t.prefactor.num.shift_k(&one), t.prefactor.den.shift_k(&one)),
    };
    let mut ratio = RationalFunction2::new(
        num_s.mul(&t.prefactor.den),
        den_s.mul(&t.prefactor.num),
    );
    for f in &t.factors {
        ratio = ratio.mul(&factor_ratio(f, axis)?);
    }
    Ok(ratio)
}

// ---------------------------------------------------------------------------
// Binomial-quotient simplification identities.
// ---------------------------------------------------------------------------

/// The four binomial-quotient rewrite rules used by the discovery sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinomIdentity {
    /// binom(2n+2k, n+k)/binom(2n, n) = ∏_{j=1..2k}(2n+j) / ∏_{j=1..k}(n+j)².
    Central2,
    /// binom(4n+2k, 2n+k)/binom(4n, 2n) = ∏_{j=1..2k}(4n+j) / ∏_{j=1..k}(2n+j)².
    Central4,
    /// binom(n+k, k) = ∏_{j=1..k}(n+j) / k!.
    UpperShift,
    /// binom(2n−1/2, k) = ∏_{j=1..k}(2n+1/2−j) / k!.
    HalfTop,
}

/// A scalar times a quotient of linear-form products (all forms in n only
/// once k has been specialized).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorProduct {
    pub scalar: BigRational,
    pub numer: Vec<LinearForm>,
    pub denom: Vec<LinearForm>,
}

impl FactorProduct {
    pub fn eval(&self, n: &BigRational) -> Result<BigRational, TermError> {
        let k0 = BigRational::zero();
        let mut acc = self.scalar.clone();
        for lf in &self.numer {
            acc *= lf.eval(n, &k0);
        }
        for lf in &self.denom {
            let v = lf.eval(n, &k0);
            if v.is_zero() {
                return Err(TermError::Pole { n: n.to_string(), k: "0".into() });
            }
            acc /= v;
        }
        Ok(acc)
    }

    pub fn to_ratfun(&self) -> RationalFunction2 {
        let mut num = Poly2::constant(self.scalar.clone());
        let mut den = Poly2::one();
        for lf in &self.numer {
            num = num.mul(&lf.to_poly());
        }
        for lf in &self.denom {
            den = den.mul(&lf.to_poly());
        }
        RationalFunction2::new(num, den)
    }
}

/// Expand one simplification identity at a fixed nonnegative integer k.
pub fn simplify_binom_shift(which: BinomIdentity, k: u64) -> FactorProduct {
    let lf = |cn: i64, c: BigRational| LinearForm::new(int(cn), BigRational::zero(), c);
    let mut numer = Vec::new();
    let mut denom = Vec::new();
    let mut scalar = BigRational::one();
    match which {
        BinomIdentity::Central2 => {
            for j in 1..=2 * k {
                numer.push(lf(2, int(j as i64)));
            }
            for j in 1..=k {
                let f = lf(1, int(j as i64));
                denom.push(f.clone());
                denom.push(f);
            }
        }
        BinomIdentity::Central4 => {
            for j in 1..=2 * k {
                numer.push(lf(4, int(j as i64)));
            }
            for j in 1..=k {
                let f = lf(2, int(j as i64));
                denom.push(f.clone());
                denom.push(f);
            }
        }
        BinomIdentity::UpperShift => {
            for j in 1..=k {
                numer.push(lf(1, int(j as i64)));
            }
            scalar = BigRational::new(BigInt::one(), factorial(k));
        }
        BinomIdentity::HalfTop => {
            for j in 1..=k {
                numer.push(lf(2, crate::exact::rat(1, 2) - int(j as i64)));
            }
            scalar = BigRational::new(BigInt::one(), factorial(k));
        }
    }
    FactorProduct { scalar, numer, denom }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exact::{rat, ratfun_equal};

    /// The alternating (4n+1) generator: sign (−1)^(n+k), weight 2^(−6n−4k),
    /// binom(2n,n)³ binom(2k,k)² over binom(n−1/2,k) binom(n+k,n).
    pub fn sample_generator() -> HyperTerm {
        HyperTerm::new(
            vec![
                Factor::signpow("n + k"),
                Factor::constpow(2, "-6*n - 4*k"),
                Factor::binom("2*n", "n", 3),
                Factor::binom("2*k", "k", 2),
                Factor::binom("n - 1/2", "k", -1),
                Factor::binom("n + k", "n", -1),
            ],
            "4*n + 1",
            "1",
        )
    }

    /// Pochhammer form of the (6n+2k+1) series.
    pub fn sample_poch() -> HyperTerm {
        HyperTerm::new(
            vec![
                Factor::constpow(2, "-2*n"),
                Factor::poch("1/2", 1),
                Factor::poch("1/2 - k", 1),
                Factor::poch("1/2 + k", 1),
                Factor::factorialpow(-2),
                Factor::poch("1 + k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
        )
    }

    fn ev(t: &HyperTerm, n: u64, k: i64) -> BigRational {
        eval_term(t, n, &int(k)).unwrap()
    }

    #[test]
    fn generator_point_values() {
        let g = sample_generator();
        assert_eq!(ev(&g, 0, 0), int(1));
        assert_eq!(ev(&g, 1, 0), rat(-5, 8));
        assert_eq!(ev(&g, 0, 1), rat(1, 2));
        assert_eq!(ev(&g, 1, 1), rat(5, 32));
        assert_eq!(ev(&g, 2, 2), rat(243, 8192));
    }

    #[test]
    fn poch_point_values() {
        let t = sample_poch();
        assert_eq!(ev(&t, 0, 0), int(1));
        assert_eq!(ev(&t, 1, 0), rat(7, 32));
        assert_eq!(ev(&t, 1, 1), rat(-27, 64));
    }

    #[test]
    fn poch_truncates_at_half_k() {
        let t = sample_poch();
        let half = rat(1, 2);
        assert_eq!(eval_term(&t, 0, &half).unwrap(), int(2));
        for n in 1..6 {
            assert!(eval_term(&t, n, &half).unwrap().is_zero(), "n = {n}");
        }
    }

    #[test]
    fn binom_form_rejects_half_integer_k() {
        let g = sample_generator();
        let err = eval_term(&g, 1, &rat(1, 2)).unwrap_err();
        assert!(matches!(err, TermError::Domain(_)));
        let err = eval_term_float(&g, 1, &rat(1, 2), 128).unwrap_err();
        assert!(matches!(err, TermError::Domain(_)));
    }

    #[test]
    fn float_eval_matches_exact_at_integer_k() {
        let g = sample_generator();
        for (n, k) in [(0u64, 0i64), (1, 0), (2, 1), (5, 3)] {
            let exact = ev(&g, n, k);
            let f = eval_term_float(&g, n, &int(k), 192).unwrap();
            assert!(f.within_ulps(&BigFloat::from_rational(&exact, 192), 2));
        }
    }

    #[test]
    fn float_eval_handles_fractional_constpow() {
        // 2^(2k) at k = 1/2 must come out as sqrt 2.
        let t = HyperTerm::new(vec![Factor::constpow(2, "k")], "1", "1");
        let v = eval_term_float(&t, 0, &rat(1, 2), 256).unwrap();
        let s2 = bigfloat::oracle_sqrt2(256).unwrap();
        assert!(v.within_ulps(&s2, 4));
    }

    #[test]
    fn shift_ratio_known_forms() {
        // Central binomial, axis n: 2(2n+1)/(n+1).
        let t = HyperTerm::new(vec![Factor::binom("2*n", "n", 1)], "1", "1");
        let r = shift_ratio(&t, Axis::N).unwrap();
        let expect = RationalFunction2::new(
            "4*n + 2".parse().unwrap(),
            "n + 1".parse().unwrap(),
        );
        assert!(ratfun_equal(&r, &expect));

        // Constant base, axis n: 2^(−6n) → 1/64.
        let t = HyperTerm::new(vec![Factor::constpow(2, "-6*n")], "1", "1");
        let r = shift_ratio(&t, Axis::N).unwrap();
        assert!(ratfun_equal(&r, &RationalFunction2::constant(rat(1, 64))));

        // binom(n−1/2, k), axis k: (2n−2k−1)/(2k+2).
        let t = HyperTerm::new(vec![Factor::binom("n - 1/2", "k", 1)], "1", "1");
        let r = shift_ratio(&t, Axis::K).unwrap();
        let expect = RationalFunction2::new(
            "2*n - 2*k - 1".parse().unwrap(),
            "2*k + 2".parse().unwrap(),
        );
        assert!(ratfun_equal(&r, &expect));
    }

    #[test]
    fn shift_ratio_rejects_half_steps() {
        // (1/4 − k/2)_n shifts by −1/2 on the k axis: not a rational function.
        let t = HyperTerm::new(vec![Factor::poch("1/4 - 1/2*k", 1)], "1", "1");
        assert!(matches!(shift_ratio(&t, Axis::K), Err(TermError::Improper(_))));
        // ...but the n axis is always fine.
        assert!(shift_ratio(&t, Axis::N).is_ok());
    }

    fn check_ratio_consistency(t: &HyperTerm, axis: Axis, n_max: u64, k_max: i64) {
        let r = shift_ratio(t, axis).unwrap();
        for n in 0..=n_max {
            for k in 0..=k_max {
                let here = eval_term(t, n, &int(k)).unwrap();
                if here.is_zero() {
                    continue;
                }
                let (next, nn, kk) = match axis {
                    Axis::N => (eval_term(t, n + 1, &int(k)).unwrap(), int(n as i64), int(k)),
                    Axis::K => (eval_term(t, n, &int(k + 1)).unwrap(), int(n as i64), int(k)),
                };
                // A pole in the ratio representation is allowed; skip it.
                if let Ok(v) = ratfun_eval(&r, &nn, &kk) {
                    assert_eq!(v, next / here, "axis {axis:?} at ({n}, {k})");
                }
            }
        }
    }

    #[test]
    fn ratios_agree_with_point_quotients() {
        for t in [sample_generator(), sample_poch()] {
            check_ratio_consistency(&t, Axis::N, 12, 4);
        }
        check_ratio_consistency(&sample_generator(), Axis::K, 12, 4);
    }

    #[test]
    fn simplification_identities_match_binomial_quotients() {
        for k in 0u64..=6 {
            let id1 = simplify_binom_shift(BinomIdentity::Central2, k);
            let id2 = simplify_binom_shift(BinomIdentity::Central4, k);
            let id3 = simplify_binom_shift(BinomIdentity::UpperShift, k);
            let id4 = simplify_binom_shift(BinomIdentity::HalfTop, k);
            for n in 0i64..=20 {
                let nq = int(n);
                let expect1 = binomial(&int(2 * n + 2 * k as i64), (n + k as i64) as u64)
                    / binomial(&int(2 * n), n as u64);
                assert_eq!(id1.eval(&nq).unwrap(), expect1, "id1 n={n} k={k}");
                let expect2 = binomial(&int(4 * n + 2 * k as i64), (2 * n + k as i64) as u64)
                    / binomial(&int(4 * n), 2 * n as u64);
                assert_eq!(id2.eval(&nq).unwrap(), expect2, "id2 n={n} k={k}");
                let expect3 = binomial(&int(n + k as i64), k);
                assert_eq!(id3.eval(&nq).unwrap(), expect3, "id3 n={n} k={k}");
                let expect4 = binomial(&(int(2 * n) - rat(1, 2)), k);
                assert_eq!(id4.eval(&nq).unwrap(), expect4, "id4 n={n} k={k}");
            }
        }
    }

    #[test]
    fn simplification_examples() {
        // Identity 1 at k=1: (2n+1)(2n+2)/(n+1)².
        let p = simplify_binom_shift(BinomIdentity::Central2, 1);
        assert_eq!(p.numer.len(), 2);
        assert_eq!(p.denom.len(), 2);
        assert_eq!(p.eval(&int(3)).unwrap(), rat(7 * 8, 16));
        // Identity 4 at k=2: (2n−1/2)(2n−3/2)/2!.
        let p = simplify_binom_shift(BinomIdentity::HalfTop, 2);
        assert_eq!(p.eval(&int(1)).unwrap(), rat(3, 2) * rat(1, 2) / int(2));
        // k=0: empty product.
        for which in [
            BinomIdentity::Central2,
            BinomIdentity::Central4,
            BinomIdentity::UpperShift,
            BinomIdentity::HalfTop,
        ] {
            assert_eq!(simplify_binom_shift(which, 0).eval(&int(5)).unwrap(), int(1));
        }
    }

    #[test]
    fn serde_round_trip() {
        let g = sample_generator();
        let json = serde_json::to_string(&g).unwrap();
        let back: HyperTerm = serde_json::from_str(&json).unwrap();
        assert_eq!(g, back);
        let t = sample_poch();
        let json = serde_json::to_string(&t).unwrap();
        let back: HyperTerm = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn negative_lower_index_is_zero_not_error() {
        // binom(2n−2k, n−k) hits negative lower index when k > n.
        let t = HyperTerm::new(vec![Factor::binom("2*n - 2*k", "n - k", 1)], "1", "1");
        assert_eq!(ev(&t, 1, 3), int(0));
        // ...unless it sits in the denominator.
        let t = HyperTerm::new(vec![Factor::binom("2*n - 2*k", "n - k", -1)], "1", "1");
        assert!(matches!(eval_term(&t, 1, &int(3)), Err(TermError::Pole { .. })));
    }
}
