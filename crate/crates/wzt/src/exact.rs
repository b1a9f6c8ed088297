//! Exact arithmetic: arbitrary-size rationals, bivariate polynomials in (n, k)
//! and quotients of such polynomials.
//!
//! Everything downstream (term shift ratios, certificates, partial sums) keeps
//! its coefficients here, so this module has no floating point at all.
//! `BigRational` comes from the `num` family and is always stored reduced with
//! a positive denominator, which is exactly the invariant we need.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use num_rational::BigRational;

/// Convenience constructor for small rational constants.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Convenience constructor for small integers.
pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// n! as a big integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Generalized binomial coefficient binom(x, m) = x(x-1)...(x-m+1)/m! for a
/// rational upper argument and a nonnegative integer lower argument.
pub fn binomial(x: &BigRational, m: u64) -> BigRational {
    let mut num = BigRational::one();
    for i in 0..m {
        num *= x - int(i as i64);
    }
    num / BigRational::from_integer(factorial(m))
}

/// Rising factorial (x)_m = x(x+1)...(x+m-1).
pub fn pochhammer(x: &BigRational, m: u64) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..m {
        acc *= x + int(i as i64);
    }
    acc
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ExactError {
    #[error("denominator vanishes at ({n}, {k})")]
    Pole { n: String, k: String },
    #[error("malformed polynomial text: {0}")]
    Parse(String),
}

/// A polynomial in the two symbols `n` and `k` with rational coefficients.
///
/// Monomials are keyed by (degree_n, degree_k); the map never stores a zero
/// coefficient, so equality is structural and iteration order is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2 { terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly2::zero();
        p.add_term(0, 0, c);
        p
    }

    pub fn one() -> Self {
        Poly2::constant(BigRational::one())
    }

    /// The monomial n^a k^b with coefficient c.
    pub fn monomial(a: u32, b: u32, c: BigRational) -> Self {
        let mut p = Poly2::zero();
        p.add_term(a, b, c);
        p
    }

    pub fn add_term(&mut self, deg_n: u32, deg_k: u32, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((deg_n, deg_k)).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(deg_n, deg_k));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_n(&self) -> u32 {
        self.terms.keys().map(|&(a, _)| a).max().unwrap_or(0)
    }

    pub fn degree_k(&self) -> u32 {
        self.terms.keys().map(|&(_, b)| b).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &BigRational)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&(a, b), c) in &other.terms {
            out.add_term(a, b, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), c) in &self.terms {
            out.add_term(a, b, -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly2) -> Poly2 {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &other.terms {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), coeff) in &self.terms {
            out.add_term(a, b, coeff * c);
        }
        out
    }

    pub fn eval(&self, n: &BigRational, k: &BigRational) -> BigRational {
        // Cache the powers; degrees stay small (certificates are quartic at worst).
        let dn = self.degree_n() as usize;
        let dk = self.degree_k() as usize;
        let mut npow = Vec::with_capacity(dn + 1);
        let mut kpow = Vec::with_capacity(dk + 1);
        npow.push(BigRational::one());
        kpow.push(BigRational::one());
        for i in 1..=dn {
            let prev = npow[i - 1].clone();
            npow.push(prev * n);
        }
        for i in 1..=dk {
            let prev = kpow[i - 1].clone();
            kpow.push(prev * k);
        }
        let mut acc = BigRational::zero();
        for (&(a, b), c) in &self.terms {
            acc += c * &npow[a as usize] * &kpow[b as usize];
        }
        acc
    }

    /// Substitute n -> n + delta (delta rational), leaving k alone.
    pub fn shift_n(&self, delta: &BigRational) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), c) in &self.terms {
            // (n + delta)^a expanded by the binomial theorem.
            let mut dpow = BigRational::one();
            for i in (0..=a).rev() {
                let coeff = c * binomial(&int(a as i64), (a - i) as u64) * &dpow;
                out.add_term(i, b, coeff);
                dpow *= delta;
            }
        }
        out
    }

    /// Substitute k -> k + delta.
    pub fn shift_k(&self, delta: &BigRational) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), c) in &self.terms {
            let mut dpow = BigRational::one();
            for i in (0..=b).rev() {
                let coeff = c * binomial(&int(b as i64), (b - i) as u64) * &dpow;
                out.add_term(a, i, coeff);
                dpow *= delta;
            }
        }
        out
    }

    /// Specialize k to a fixed rational, producing coefficients of a
    /// univariate polynomial in n indexed by degree.
    pub fn coeffs_in_n(&self, k: &BigRational) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.degree_n() as usize + 1];
        for (&(a, b), c) in &self.terms {
            let mut kp = BigRational::one();
            for _ in 0..b {
                kp *= k;
            }
            out[a as usize] += c * kp;
        }
        while out.len() > 1 && out.last().map(|c| c.is_zero()).unwrap_or(false) {
            out.pop();
        }
        out
    }

    /// True when every monomial has degree_n >= 1, i.e. n divides the polynomial.
    pub fn divisible_by_n(&self) -> bool {
        !self.is_zero() && self.terms.keys().all(|&(a, _)| a >= 1)
    }

    /// Substitute n -> n_repl(n,k), k -> k_repl(n,k) simultaneously.
    pub fn compose(&self, n_repl: &Poly2, k_repl: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), c) in &self.terms {
            let mut m = Poly2::constant(c.clone());
            for _ in 0..a {
                m = m.mul(n_repl);
            }
            for _ in 0..b {
                m = m.mul(k_repl);
            }
            out = out.add(&m);
        }
        out
    }
}

fn render_monomial(deg_n: u32, deg_k: u32, c: &BigRational) -> String {
    let mut parts: Vec<String> = Vec::new();
    let coeff_needed = c.abs() != BigRational::one() || (deg_n == 0 && deg_k == 0);
    if coeff_needed {
        parts.push(format!("{}", c.abs()));
    }
    for (sym, deg) in [("n", deg_n), ("k", deg_k)] {
        match deg {
            0 => {}
            1 => parts.push(sym.to_string()),
            d => parts.push(format!("{}^{}", sym, d)),
        }
    }
    parts.join("*")
}

impl fmt::Display for Poly2 {
    /// Canonical text form: monomials in descending lexicographic order by
    /// (degree_n, degree_k), joined with " + " / " - ".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(a, b), c) in self.terms.iter().rev() {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{}", render_monomial(a, b, c))?;
        }
        Ok(())
    }
}

impl FromStr for Poly2 {
    type Err = ExactError;

    /// Parse the canonical text grammar: '+'/'-'-separated monomials, each a
    /// '*'-separated product of an optional rational coefficient and symbol
    /// powers "n", "k", "n^3", "k^2".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ExactError::Parse("empty polynomial".into()));
        }
        let mut out = Poly2::zero();
        // Split on top-level + and - (no parentheses in the grammar).
        let mut chunks: Vec<(i32, String)> = Vec::new();
        let mut cur = String::new();
        let mut sign = 1;
        let mut prev_was_op = true;
        for ch in s.chars() {
            match ch {
                '+' | '-' if !prev_was_op => {
                    chunks.push((sign, cur.trim().to_string()));
                    sign = if ch == '-' { -1 } else { 1 };
                    cur = String::new();
                    prev_was_op = true;
                }
                '-' if prev_was_op => {
                    sign = -sign;
                    prev_was_op = false;
                }
                '+' if prev_was_op => {
                    prev_was_op = false;
                }
                c if c.is_whitespace() => {}
                c => {
                    cur.push(c);
                    prev_was_op = false;
                }
            }
        }
        chunks.push((sign, cur.trim().to_string()));

        for (sgn, chunk) in chunks {
            if chunk.is_empty() {
                return Err(ExactError::Parse(format!("dangling sign in {s:?}")));
            }
            let mut coeff = BigRational::from_integer(BigInt::from(sgn));
            let mut deg_n = 0u32;
            let mut deg_k = 0u32;
            for atom in chunk.split('*') {
                let atom = atom.trim();
                if atom.is_empty() {
                    return Err(ExactError::Parse(format!("empty factor in {chunk:?}")));
                }
                if let Some(rest) = atom.strip_prefix('n') {
                    deg_n += parse_power(rest, &chunk)?;
                } else if let Some(rest) = atom.strip_prefix('k') {
                    deg_k += parse_power(rest, &chunk)?;
                } else {
                    let c = BigRational::from_str(atom)
                        .map_err(|_| ExactError::Parse(format!("bad coefficient {atom:?}")))?;
                    coeff *= c;
                }
            }
            out.add_term(deg_n, deg_k, coeff);
        }
        Ok(out)
    }
}

fn parse_power(rest: &str, chunk: &str) -> Result<u32, ExactError> {
    if rest.is_empty() {
        Ok(1)
    } else if let Some(d) = rest.strip_prefix('^') {
        d.parse::<u32>()
            .map_err(|_| ExactError::Parse(format!("bad exponent in {chunk:?}")))
    } else {
        Err(ExactError::Parse(format!("bad symbol power in {chunk:?}")))
    }
}

/// A quotient of two `Poly2`. Kept unreduced: bivariate gcd is deliberately
/// out of scope, so equality is decided by cross-multiplication instead.
///
/// The derived `PartialEq` is structural (same numerator and denominator
/// representation); use [`ratfun_equal`] for equality as functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFunction2 {
    pub num: Poly2,
    pub den: Poly2,
}

impl RationalFunction2 {
    pub fn new(num: Poly2, den: Poly2) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        RationalFunction2 { num, den }
    }

    pub fn from_poly(p: Poly2) -> Self {
        RationalFunction2::new(p, Poly2::one())
    }

    pub fn one() -> Self {
        RationalFunction2::from_poly(Poly2::one())
    }

    pub fn constant(c: BigRational) -> Self {
        RationalFunction2::from_poly(Poly2::constant(c))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn mul(&self, other: &Self) -> Self {
        RationalFunction2::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalFunction2::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        RationalFunction2::new(
            self.num.mul(&other.den).sub(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn recip(&self) -> Self {
        assert!(!self.num.is_zero(), "reciprocal of zero rational function");
        RationalFunction2::new(self.den.clone(), self.num.clone())
    }

    pub fn shift_n(&self, delta: &BigRational) -> Self {
        RationalFunction2::new(self.num.shift_n(delta), self.den.shift_n(delta))
    }

    pub fn shift_k(&self, delta: &BigRational) -> Self {
        RationalFunction2::new(self.num.shift_k(delta), self.den.shift_k(delta))
    }
}

impl serde::Serialize for RationalFunction2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalFunction2", 2)?;
        st.serialize_field("num", &self.num.to_string())?;
        st.serialize_field("den", &self.den.to_string())?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for RationalFunction2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            num: String,
            den: String,
        }
        let raw = Raw::deserialize(d)?;
        let num: Poly2 = raw.num.parse().map_err(serde::de::Error::custom)?;
        let den: Poly2 = raw.den.parse().map_err(serde::de::Error::custom)?;
        if den.is_zero() {
            return Err(serde::de::Error::custom("rational function with zero denominator"));
        }
        Ok(RationalFunction2 { num, den })
    }
}

/// Equality by cross-multiplication: a/b == c/d iff a*d - c*b == 0.
pub fn ratfun_equal(x: &RationalFunction2, y: &RationalFunction2) -> bool {
    x.num.mul(&y.den).sub(&y.num.mul(&x.den)).is_zero()
}

/// Evaluate at a point; a vanishing denominator is a `Pole` error.
pub fn ratfun_eval(
    f: &RationalFunction2,
    n: &BigRational,
    k: &BigRational,
) -> Result<BigRational, ExactError> {
    let den = f.den.eval(n, k);
    if den.is_zero() {
        return Err(ExactError::Pole { n: n.to_string(), k: k.to_string() });
    }
    Ok(f.num.eval(n, k) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly2 {
        s.parse().unwrap()
    }

    #[test]
    fn monomial_rendering_is_canonical() {
        let mut poly = Poly2::zero();
        poly.add_term(2, 0, int(84));
        poly.add_term(1, 1, int(56));
        poly.add_term(1, 0, int(52));
        poly.add_term(0, 2, int(4));
        poly.add_term(0, 1, int(12));
        poly.add_term(0, 0, int(5));
        assert_eq!(poly.to_string(), "84*n^2 + 56*n*k + 52*n + 4*k^2 + 12*k + 5");
        assert_eq!(p(&poly.to_string()), poly);
    }

    #[test]
    fn parse_accepts_signs_and_halves() {
        let poly = p("2*n - 1/2*k + 3");
        assert_eq!(poly.eval(&int(1), &int(2)), int(4));
        assert_eq!(p("-n + 1").to_string(), "-n + 1");
        assert_eq!(p("0").to_string(), "0");
        assert_eq!(p("n^2*k"), Poly2::monomial(2, 1, int(1)));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("".parse::<Poly2>().is_err());
        assert!("2**n".parse::<Poly2>().is_err());
        assert!("n^".parse::<Poly2>().is_err());
        assert!("q + 1".parse::<Poly2>().is_err());
    }

    #[test]
    fn shift_matches_eval() {
        let poly = p("3*n^2*k - n*k^2 + 7*k - 2");
        let shifted = poly.shift_n(&int(1));
        for n in -3..4 {
            for k in -3..4 {
                assert_eq!(
                    shifted.eval(&int(n), &int(k)),
                    poly.eval(&int(n + 1), &int(k)),
                    "n={n} k={k}"
                );
            }
        }
        let shifted_k = poly.shift_k(&rat(1, 2));
        assert_eq!(
            shifted_k.eval(&int(2), &int(1)),
            poly.eval(&int(2), &rat(3, 2))
        );
    }

    #[test]
    fn cross_multiplied_equality_ignores_common_factors() {
        // (n+k)/(n-k) == (n+k)(n+1) / (n-k)(n+1) without any gcd.
        let a = RationalFunction2::new(p("n + k"), p("n - k"));
        let b = RationalFunction2::new(
            p("n + k").mul(&p("n + 1")),
            p("n - k").mul(&p("n + 1")),
        );
        assert!(ratfun_equal(&a, &b));
        let c = RationalFunction2::new(p("n + k"), p("n - k + 1"));
        assert!(!ratfun_equal(&a, &c));
    }

    #[test]
    fn eval_reports_poles() {
        let f = RationalFunction2::new(p("1"), p("n - k"));
        assert_eq!(
            ratfun_eval(&f, &int(2), &int(2)),
            Err(ExactError::Pole { n: "2".into(), k: "2".into() })
        );
        assert_eq!(ratfun_eval(&f, &int(3), &int(2)).unwrap(), int(1));
    }

    #[test]
    fn generalized_binomial_handles_half_integers() {
        // binom(-1/2, 1) = -1/2 and binom(n - 1/2, k) patterns rely on this.
        assert_eq!(binomial(&rat(-1, 2), 1), rat(-1, 2));
        assert_eq!(binomial(&rat(3, 2), 2), rat(3, 8));
        assert_eq!(binomial(&int(4), 2), int(6));
        assert_eq!(binomial(&int(2), 0), int(1));
        assert_eq!(pochhammer(&rat(1, 2), 3), rat(15, 8));
    }
}
