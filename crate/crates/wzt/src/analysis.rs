//! Numeric summation of hypergeometric series with certified tail bounds.
//!
//! Three summation regimes:
//!  * geometric — the term-ratio modulus is certified ≤ ρ < 1 from some index
//!    on, giving the tail bound |a_N|·ρ/(1−ρ);
//!  * alternating — the ratio modulus tends to 1 but the signs are certified
//!    to alternate with decreasing magnitude, giving the bound |a_N|;
//!  * accelerated — conditionally convergent alternating series are resummed
//!    with the exact-rational Chebyshev acceleration scheme, validated by
//!    agreement between two acceleration orders.
//!
//! All certificates are coefficient-sign arguments on the exact shift-ratio
//! rational function; no floating-point heuristics decide a bound.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::bigfloat::{self, BigFloat, BigFloatError};
use crate::exact::{int, ratfun_eval, Poly2, RationalFunction2};
use crate::term::{eval_term, shift_ratio, Axis, HyperTerm, TermError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Numeric(#[from] BigFloatError),
    #[error("series diverges: {0}")]
    Divergent(String),
    #[error("no tail bound certificate within {0} terms")]
    CannotBound(usize),
    #[error("tolerance not reached within {max_terms} terms (bound ~1e{achieved:.1})")]
    MaxTerms { max_terms: usize, achieved: f64 },
}

/// How a sum's tail was controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    Geometric,
    AlternatingTail,
    AlternatingAccel,
}

/// A numeric sum together with its rigor bookkeeping.
#[derive(Debug, Clone)]
pub struct SeriesSum {
    pub value: BigFloat,
    pub tail_bound: BigFloat,
    pub terms_used: usize,
    pub method: SumMethod,
}

// ---------------------------------------------------------------------------
// Exact term streaming.
// ---------------------------------------------------------------------------

/// Iterator over exact term values t(0,k), t(1,k), ... driven by the shift
/// ratio (one rational multiply per step) with direct evaluation as fallback
/// whenever the current term vanishes or the ratio representation has a
/// spurious pole.
pub struct TermStream<'a> {
    term: &'a HyperTerm,
    k: BigRational,
    ratio: RationalFunction2,
    cur: Option<BigRational>,
    n: u64,
}

impl<'a> TermStream<'a> {
    pub fn new(term: &'a HyperTerm, k: &BigRational) -> Result<Self, AnalysisError> {
        let ratio = shift_ratio(term, Axis::N)?;
        Ok(TermStream { term, k: k.clone(), ratio, cur: None, n: 0 })
    }
}

impl Iterator for TermStream<'_> {
    type Item = Result<BigRational, TermError>;

    fn next(&mut self) -> Option<Self::Item> {
        let next_val = match &self.cur {
            None => eval_term(self.term, 0, &self.k),
            Some(prev) if !prev.is_zero() => {
                match ratfun_eval(&self.ratio, &int(self.n as i64 - 1), &self.k) {
                    Ok(r) => Ok(prev * r),
                    Err(_) => eval_term(self.term, self.n, &self.k),
                }
            }
            Some(_) => eval_term(self.term, self.n, &self.k),
        };
        self.n += 1;
        match next_val {
            Ok(v) => {
                self.cur = Some(v.clone());
                Some(Ok(v))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

/// Exact partial sum of the first `n_terms` terms.
pub fn partial_sum_exact(
    term: &HyperTerm,
    k: &BigRational,
    n_terms: usize,
) -> Result<BigRational, AnalysisError> {
    let mut acc = BigRational::zero();
    for t in TermStream::new(term, k)?.take(n_terms) {
        acc += t?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Ratio analysis and tail certificates.
// ---------------------------------------------------------------------------

/// The shift ratio at fixed k as a univariate quotient in n, as coefficient
/// polynomials (stored with degree in the n slot of `Poly2`).
fn ratio_in_n(term: &HyperTerm, k: &BigRational) -> Result<(Poly2, Poly2), AnalysisError> {
    let r = shift_ratio(term, Axis::N)?;
    let to_uni = |p: &Poly2| {
        let coeffs = p.coeffs_in_n(k);
        let mut out = Poly2::zero();
        for (i, c) in coeffs.into_iter().enumerate() {
            out.add_term(i as u32, 0, c);
        }
        out
    };
    let num = to_uni(&r.num);
    let den = to_uni(&r.den);
    if den.is_zero() {
        return Err(AnalysisError::Divergent(
            "shift ratio denominator vanishes identically at this k".into(),
        ));
    }
    Ok((num, den))
}

fn leading_coeff(p: &Poly2) -> BigRational {
    let d = p.degree_n();
    p.terms()
        .find(|(&(a, _), _)| a == d)
        .map(|(_, c)| c.clone())
        .unwrap_or_else(BigRational::zero)
}

/// lim_{n→∞} t(n+1,k)/t(n,k), an exact rational (0 when the numerator degree
/// drops; an error when the ratio grows without bound).
pub fn ratio_limit(term: &HyperTerm, k: &BigRational) -> Result<BigRational, AnalysisError> {
    let (num, den) = ratio_in_n(term, k)?;
    if num.is_zero() {
        return Ok(BigRational::zero());
    }
    match num.degree_n().cmp(&den.degree_n()) {
        std::cmp::Ordering::Less => Ok(BigRational::zero()),
        std::cmp::Ordering::Equal => Ok(leading_coeff(&num) / leading_coeff(&den)),
        std::cmp::Ordering::Greater => Err(AnalysisError::Divergent(
            "term ratio grows without bound".into(),
        )),
    }
}

/// Decimal digits gained per extra term in the limit: −log10 of the
/// ratio-limit modulus. See [`digits_per_term`] for the finite-N average.
pub fn asymptotic_digits_per_term(
    term: &HyperTerm,
    k: &BigRational,
) -> Result<f64, AnalysisError> {
    let l = ratio_limit(term, k)?;
    if l.is_zero() {
        return Ok(f64::INFINITY);
    }
    let l_abs = l.abs();
    if l_abs >= BigRational::one() {
        return Err(AnalysisError::Divergent(format!(
            "ratio limit {l} has modulus at least 1"
        )));
    }
    let v = l_abs.numer().to_f64().unwrap_or(f64::NAN).log10()
        - l_abs.denom().to_f64().unwrap_or(f64::NAN).log10();
    Ok(-v)
}

/// Every coefficient of p is ≥ 0 (p may be zero).
fn coeffs_nonneg(p: &Poly2) -> bool {
    p.terms().all(|(_, c)| !c.is_negative())
}

/// Normalize p so its leading coefficient is positive, returning None when
/// the coefficients are of mixed sign (the certificate cannot conclude).
fn definite_positive_form(p: &Poly2) -> Option<Poly2> {
    if p.is_zero() {
        return Some(p.clone());
    }
    if coeffs_nonneg(p) {
        Some(p.clone())
    } else {
        let q = p.neg();
        if coeffs_nonneg(&q) {
            Some(q)
        } else {
            None
        }
    }
}

/// Certificate: |num(n)/den(n)| ≤ ρ for all n ≥ start.
///
/// Shift both polynomials by `start`; when each has all coefficients of one
/// sign, the values keep that sign for every n ≥ start, and the comparison
/// reduces to ρ·|den| − |num| having nonnegative coefficients.
fn ratio_bounded_from(num: &Poly2, den: &Poly2, start: u64, rho: &BigRational) -> bool {
    let s = int(start as i64);
    let num_s = match definite_positive_form(&num.shift_n(&s)) {
        Some(p) => p,
        None => return false,
    };
    let den_s = match definite_positive_form(&den.shift_n(&s)) {
        Some(p) if !p.is_zero() => p,
        _ => return false,
    };
    coeffs_nonneg(&den_s.scale(rho).sub(&num_s))
}

/// Certificate that the ratio is ≤ 0 for all n ≥ start (sign alternation).
fn ratio_nonpositive_from(num: &Poly2, den: &Poly2, start: u64) -> bool {
    let s = int(start as i64);
    let num_s = num.shift_n(&s);
    let den_s = den.shift_n(&s);
    let opposite = (coeffs_nonneg(&num_s.neg()) && coeffs_nonneg(&den_s))
        || (coeffs_nonneg(&num_s) && coeffs_nonneg(&den_s.neg()));
    opposite && !den_s.is_zero()
}

/// Certificate that |ratio| < 1 eventually forces |a_n| → 0: we need
/// 1 − |r(n)| ≥ c/n for large n, i.e. |den| − |num| nonzero with degree no
/// more than one below deg den, all shifted coefficients nonnegative.
fn magnitude_decays_from(num: &Poly2, den: &Poly2, start: u64) -> bool {
    let s = int(start as i64);
    let num_s = match definite_positive_form(&num.shift_n(&s)) {
        Some(p) => p,
        None => return false,
    };
    let den_s = match definite_positive_form(&den.shift_n(&s)) {
        Some(p) if !p.is_zero() => p,
        _ => return false,
    };
    let gap = den_s.sub(&num_s);
    if gap.is_zero() || !coeffs_nonneg(&gap) {
        return false;
    }
    gap.degree_n() + 1 >= den_s.degree_n()
}

const CERT_STARTS: [u64; 8] = [0, 2, 4, 8, 16, 32, 64, 128];

enum TailPlan {
    /// |tail after index n| ≤ |a_n|·ρ/(1−ρ) once n ≥ start.
    Geometric { start: u64, rho: BigRational },
    /// |tail after index n| ≤ |a_{n}| (first omitted term) once n ≥ start.
    Alternating { start: u64 },
}

fn make_tail_plan(term: &HyperTerm, k: &BigRational) -> Result<TailPlan, AnalysisError> {
    let (num, den) = ratio_in_n(term, k)?;
    let limit = ratio_limit(term, k)?.abs();
    if limit < BigRational::one() {
        // Candidate ρ strictly between |L| and 1.
        let rho = (&limit * int(3) + BigRational::one()) / int(4);
        for &start in &CERT_STARTS {
            if ratio_bounded_from(&num, &den, start, &rho) {
                return Ok(TailPlan::Geometric { start, rho });
            }
        }
        Err(AnalysisError::CannotBound(*CERT_STARTS.last().unwrap() as usize))
    } else if limit == BigRational::one() {
        let one = BigRational::one();
        for &start in &CERT_STARTS {
            if ratio_nonpositive_from(&num, &den, start)
                && ratio_bounded_from(&num, &den, start, &one)
                && magnitude_decays_from(&num, &den, start)
            {
                return Ok(TailPlan::Alternating { start });
            }
        }
        Err(AnalysisError::Divergent(
            "ratio modulus tends to 1 and no alternating certificate applies".into(),
        ))
    } else {
        Err(AnalysisError::Divergent(format!(
            "term ratio modulus tends to {limit} > 1"
        )))
    }
}

fn plan_bound(plan: &TailPlan, first_omitted: &BigRational, n: u64) -> Option<BigRational> {
    match plan {
        // |a_N| + |a_{N+1}| + ... ≤ |a_N|(1 + ρ + ρ² + ...) = |a_N|/(1−ρ).
        TailPlan::Geometric { start, rho } => {
            (n >= *start).then(|| first_omitted.abs() / (BigRational::one() - rho))
        }
        TailPlan::Alternating { start } => (n >= *start).then(|| first_omitted.abs()),
    }
}

fn method_of(plan: &TailPlan) -> SumMethod {
    match plan {
        TailPlan::Geometric { .. } => SumMethod::Geometric,
        TailPlan::Alternating { .. } => SumMethod::AlternatingTail,
    }
}

/// Sum exactly `n_terms` terms and attach the certified tail bound at that
/// truncation point.
pub fn sum_fixed(
    term: &HyperTerm,
    k: &BigRational,
    n_terms: usize,
    precision: u32,
) -> Result<SeriesSum, AnalysisError> {
    let plan = make_tail_plan(term, k)?;
    let mut acc = BigRational::zero();
    let mut stream = TermStream::new(term, k)?;
    for _ in 0..n_terms {
        acc += stream.next().expect("stream is infinite")?;
    }
    let first_omitted = stream.next().expect("stream is infinite")?;
    let bound = plan_bound(&plan, &first_omitted, n_terms as u64)
        .ok_or(AnalysisError::CannotBound(n_terms))?;
    Ok(SeriesSum {
        value: BigFloat::from_rational(&acc, precision),
        tail_bound: BigFloat::from_rational(&bound, precision),
        terms_used: n_terms,
        method: method_of(&plan),
    })
}

/// Sum until the certified tail bound drops below `eps`.
pub fn sum_until(
    term: &HyperTerm,
    k: &BigRational,
    eps: &BigFloat,
    precision: u32,
    max_terms: usize,
) -> Result<SeriesSum, AnalysisError> {
    let plan = make_tail_plan(term, k)?;
    let eps_q = eps.abs().to_rational();
    let mut acc = BigRational::zero();
    let mut stream = TermStream::new(term, k)?;
    let mut pending = stream.next().expect("stream is infinite")?;
    for n in 0..=max_terms {
        if let Some(bound) = plan_bound(&plan, &pending, n as u64) {
            if bound <= eps_q {
                return Ok(SeriesSum {
                    value: BigFloat::from_rational(&acc, precision),
                    tail_bound: BigFloat::from_rational(&bound, precision),
                    terms_used: n,
                    method: method_of(&plan),
                });
            }
        }
        acc += &pending;
        pending = stream.next().expect("stream is infinite")?;
    }
    let achieved = plan_bound(&plan, &pending, max_terms as u64)
        .map(|b| {
            b.numer().to_f64().unwrap_or(f64::NAN).log10()
                - b.denom().to_f64().unwrap_or(f64::NAN).log10()
        })
        .unwrap_or(f64::NAN);
    Err(AnalysisError::MaxTerms { max_terms, achieved })
}

// ---------------------------------------------------------------------------
// Exact alternating-series acceleration (Chebyshev scheme).
// ---------------------------------------------------------------------------

/// d_M = ((3+√8)^M + (3−√8)^M)/2 via the integer recurrence d_{m+1} = 6d_m − d_{m−1}.
fn chebyshev_d(m: usize) -> BigInt {
    let mut a = BigInt::one();
    let mut b = BigInt::from(3);
    if m == 0 {
        return a;
    }
    for _ in 1..m {
        let next = BigInt::from(6) * &b - &a;
        a = std::mem::replace(&mut b, next);
    }
    b
}

/// Accelerated estimate of Σ_{j≥0} (−1)^j a_j from a_0..a_{M−1}, exact in
/// rationals. The weights come from shifted Chebyshev polynomials; for a
/// totally monotone |a| the error decays like (3+√8)^{−M}.
fn alternating_accel_core(a: &[BigRational]) -> BigRational {
    let m = a.len();
    let d = BigRational::from_integer(chebyshev_d(m));
    let mut b = -BigRational::one();
    let mut c = -d.clone();
    let mut s = BigRational::zero();
    for (j, aj) in a.iter().enumerate() {
        c = &b - &c;
        s += &c * aj;
        let jj = j as i64;
        let mm = m as i64;
        b = b * int(2) * int(jj + mm) * int(jj - mm) / (int(2 * jj + 1) * int(jj + 1));
    }
    s / d
}

/// Acceleration orders chosen so that the scheme's (3+√8)^{−M} decay leaves
/// comfortable headroom below the requested tolerance.
fn accel_order_for(eps: &BigFloat) -> usize {
    let digits = (-eps.log10_abs()).max(1.0);
    // log10(3+√8) ≈ 0.7656; 25% headroom plus a constant pad.
    ((digits / 0.7656) * 1.25 + 12.0).ceil() as usize
}

/// Sum a conditionally convergent alternating series: direct head until the
/// signs settle into strict alternation, then the exact Chebyshev-accelerated
/// tail at two orders (M and M+40) whose agreement yields the error estimate.
pub fn sum_alternating_accel(
    term: &HyperTerm,
    k: &BigRational,
    eps: &BigFloat,
    precision: u32,
) -> Result<SeriesSum, AnalysisError> {
    let m = accel_order_for(eps);
    let m_hi = m + 40;
    // Collect enough exact terms for the longest run plus sign scouting.
    let scout = 24usize;
    let total = m_hi + scout;
    let mut terms = Vec::with_capacity(total);
    for t in TermStream::new(term, k)?.take(total) {
        terms.push(t?);
    }
    // Find the head length: the earliest n0 from which signs strictly
    // alternate across everything we collected.
    let mut n0 = None;
    'outer: for cand in 0..scout {
        for w in terms[cand..].windows(2) {
            if w[0].is_zero() || w[1].is_zero() || w[0].is_positive() == w[1].is_positive() {
                continue 'outer;
            }
        }
        n0 = Some(cand);
        break;
    }
    let n0 = n0.ok_or_else(|| {
        AnalysisError::Divergent("terms do not settle into strict sign alternation".into())
    })?;
    if n0 + m_hi > terms.len() {
        return Err(AnalysisError::CannotBound(terms.len()));
    }
    let head: BigRational = terms[..n0].iter().sum();
    let sigma = if terms[n0].is_positive() { int(1) } else { int(-1) };
    let magnitudes: Vec<BigRational> = terms[n0..n0 + m_hi].iter().map(|t| t.abs()).collect();
    let lo = alternating_accel_core(&magnitudes[..m]);
    let hi = alternating_accel_core(&magnitudes);
    let value = &head + &sigma * &hi;
    // Error estimate: cross-order agreement with a safety factor, floored by
    // the scheme's nominal decay at the higher order.
    let diff = (&lo - &hi).abs();
    let nominal = {
        let d = chebyshev_d(m_hi);
        let scale = magnitudes.first().cloned().unwrap_or_else(BigRational::one);
        scale * int(4) / BigRational::from_integer(d)
    };
    let bound_q = diff * int(16) + nominal;
    Ok(SeriesSum {
        value: BigFloat::from_rational(&value, precision),
        tail_bound: BigFloat::from_rational(&bound_q, precision),
        terms_used: n0 + m_hi,
        method: SumMethod::AlternatingAccel,
    })
}

/// Sum to tolerance, choosing the accelerated path automatically when the
/// ratio modulus tends to 1 (conditional convergence).
pub fn sum_auto(
    term: &HyperTerm,
    k: &BigRational,
    eps: &BigFloat,
    precision: u32,
    max_terms: usize,
) -> Result<SeriesSum, AnalysisError> {
    let limit = ratio_limit(term, k)?.abs();
    if limit > BigRational::one() {
        return Err(AnalysisError::Divergent(format!(
            "term ratio modulus tends to {limit} > 1"
        )));
    }
    if limit == BigRational::one() {
        let out = sum_alternating_accel(term, k, eps, precision)?;
        if out.tail_bound.cmp_value(&eps.abs()) == std::cmp::Ordering::Greater {
            return Err(AnalysisError::MaxTerms {
                max_terms: out.terms_used,
                achieved: out.tail_bound.log10_abs(),
            });
        }
        Ok(out)
    } else {
        sum_until(term, k, eps, precision, max_terms)
    }
}

// ---------------------------------------------------------------------------
// Digit asymptotics.
// ---------------------------------------------------------------------------

/// Digit counts d(N) = Σ_{n=0}^{N−1} log10|a(n)/a(n+1)| at the requested N,
/// accumulated from the exact shift-ratio values (one rational evaluation and
/// one logarithm per n). Errors if any term in range vanishes.
pub fn digit_counts(
    term: &HyperTerm,
    k: &BigRational,
    ns: &[u64],
    precision: u32,
) -> Result<Vec<(u64, BigFloat)>, AnalysisError> {
    let mut wanted: Vec<u64> = ns.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let max_n = *wanted.last().unwrap_or(&0);
    let ratio = shift_ratio(term, Axis::N)?;
    let ln10 = bigfloat::ln(&BigFloat::from_i64(10, precision))?;
    let mut acc = BigFloat::zero(precision);
    let mut out = Vec::with_capacity(wanted.len());
    let mut next = wanted.iter().peekable();
    for n in 0..=max_n {
        while next.peek() == Some(&&n) {
            out.push((n, acc.clone()));
            next.next();
        }
        if n == max_n {
            break;
        }
        let r = ratfun_eval(&ratio, &int(n as i64), k).map_err(TermError::from)?;
        if r.is_zero() {
            return Err(AnalysisError::Term(TermError::Domain(format!(
                "term vanishes at n = {}",
                n + 1
            ))));
        }
        // log10|a(n)/a(n+1)| = −log10|r(n)|.
        let step = bigfloat::ln(&BigFloat::from_rational(&r.abs(), precision))?;
        acc = acc.sub(&step.div(&ln10));
    }
    Ok(out)
}

/// d(N)/N: mean decimal digits gained per term over the first N terms.
pub fn digits_per_term(
    term: &HyperTerm,
    k: &BigRational,
    n_terms: u64,
    precision: u32,
) -> Result<BigFloat, AnalysisError> {
    let d = digit_counts(term, k, &[n_terms], precision)?;
    let (_, total) = d.into_iter().next().expect("one sample");
    Ok(total.div(&BigFloat::from_i64(n_terms as i64, precision)))
}

/// Fit of the digit-count curve d(N) ≈ slope·N + log_coeff·log10 N + constant
/// with the linear slope pinned by the caller.
#[derive(Debug, Clone)]
pub struct ConvergenceProfile {
    /// Sampled (N, d(N)) points.
    pub points: Vec<(u64, f64)>,
    /// The pinned linear coefficient (decimal digits per term).
    pub slope: f64,
    /// Fitted coefficient of log10 N.
    pub log_coeff: f64,
    /// Fitted constant offset.
    pub constant: f64,
    /// Largest |fit residual| over the sampled points.
    pub max_residual: f64,
}

/// Compute exact digit counts over `ns` and least-squares fit the log term:
/// minimizes Σ (d(N) − slope·N − B·log10 N − C)² over (B, C).
pub fn check_digit_asymptotic(
    term: &HyperTerm,
    k: &BigRational,
    slope: f64,
    ns: &[u64],
    precision: u32,
) -> Result<ConvergenceProfile, AnalysisError> {
    let counts = digit_counts(term, k, ns, precision)?;
    let points: Vec<(u64, f64)> = counts
        .into_iter()
        .filter(|(n, _)| *n > 0)
        .map(|(n, d)| (n, d.to_f64()))
        .collect();
    if points.len() < 3 {
        return Err(AnalysisError::CannotBound(points.len()));
    }
    // Normal equations for u = B·t + C with t = log10 N, u = d − slope·N.
    let m = points.len() as f64;
    let (mut st, mut stt, mut su, mut stu) = (0.0f64, 0.0, 0.0, 0.0);
    for &(n, d) in &points {
        let t = (n as f64).log10();
        let u = d - slope * n as f64;
        st += t;
        stt += t * t;
        su += u;
        stu += t * u;
    }
    let det = stt * m - st * st;
    let log_coeff = (stu * m - st * su) / det;
    let constant = (stt * su - st * stu) / det;
    let max_residual = points
        .iter()
        .map(|&(n, d)| {
            (d - slope * n as f64 - log_coeff * (n as f64).log10() - constant).abs()
        })
        .fold(0.0f64, f64::max);
    Ok(ConvergenceProfile { points, slope, log_coeff, constant, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::{oracle_ln2, oracle_pi};
    use crate::exact::rat;
    use crate::term::Factor;

    fn eps_pow10(digits: i64, precision: u32) -> BigFloat {
        // 10^(−digits) as an exact rational power.
        let q = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(digits as u32));
        BigFloat::from_rational(&q, precision)
    }

    /// Σ binom(2n,n)³/2^(8n)·(6n+1) = 4/π.
    fn fast_pi_series() -> HyperTerm {
        HyperTerm::new(
            vec![Factor::constpow(2, "-8*n"), Factor::binom("2*n", "n", 3)],
            "6*n + 1",
            "1",
        )
    }

    #[test]
    fn geometric_sum_hits_pi_target() {
        let prec = 400;
        let eps = eps_pow10(40, prec);
        let out = sum_until(&fast_pi_series(), &int(0), &eps, prec, 1000).unwrap();
        assert_eq!(out.method, SumMethod::Geometric);
        let pi = oracle_pi(prec).unwrap();
        let target = BigFloat::from_i64(4, prec).div(&pi);
        let diff = out.value.sub(&target).abs();
        assert!(diff.cmp_value(&eps) != std::cmp::Ordering::Greater, "diff {}", diff.to_decimal(5));
        // The certified bound really did go below eps.
        assert!(out.tail_bound.cmp_value(&eps) != std::cmp::Ordering::Greater);
    }

    #[test]
    fn ratio_limit_and_digits_per_term() {
        let t = fast_pi_series();
        assert_eq!(ratio_limit(&t, &int(0)).unwrap(), rat(1, 4));
        let d = asymptotic_digits_per_term(&t, &int(0)).unwrap();
        assert!((d - 0.60206).abs() < 1e-6);
    }

    #[test]
    fn alternating_tail_bound_certifies() {
        let g = crate::term::tests::sample_generator();
        let prec = 192;
        let out = sum_fixed(&g, &int(0), 160, prec).unwrap();
        assert_eq!(out.method, SumMethod::AlternatingTail);
        // Value within its own bound of 2/π.
        let pi = oracle_pi(prec).unwrap();
        let target = BigFloat::from_i64(2, prec).div(&pi);
        let diff = out.value.sub(&target).abs();
        assert!(diff.cmp_value(&out.tail_bound) != std::cmp::Ordering::Greater);
    }

    #[test]
    fn acceleration_reproduces_ln2() {
        // Σ (−1)^n/(n+1) = ln 2, the canonical conditionally convergent check.
        let t = HyperTerm::new(vec![Factor::signpow("n")], "1", "n + 1");
        let prec = 256;
        let eps = eps_pow10(35, prec);
        let out = sum_alternating_accel(&t, &int(0), &eps, prec).unwrap();
        let ln2 = oracle_ln2(prec).unwrap();
        let diff = out.value.sub(&ln2).abs();
        assert!(
            diff.cmp_value(&eps) != std::cmp::Ordering::Greater,
            "diff {}",
            diff.to_decimal(5)
        );
        assert!(out.tail_bound.cmp_value(&eps) != std::cmp::Ordering::Greater);
    }

    #[test]
    fn acceleration_handles_modulus_one_generator() {
        // The (4n+1) generator at k=0 converges only conditionally; the
        // accelerated sum must still land on 2/π.
        let g = crate::term::tests::sample_generator();
        let prec = 384;
        let eps = eps_pow10(32, prec);
        let out = sum_auto(&g, &int(0), &eps, prec, 400).unwrap();
        assert_eq!(out.method, SumMethod::AlternatingAccel);
        let pi = oracle_pi(prec).unwrap();
        let target = BigFloat::from_i64(2, prec).div(&pi);
        let diff = out.value.sub(&target).abs();
        assert!(
            diff.cmp_value(&eps) != std::cmp::Ordering::Greater,
            "diff {}",
            diff.to_decimal(5)
        );
        assert!(out.terms_used <= 300, "terms used: {}", out.terms_used);
    }

    #[test]
    fn divergent_inputs_are_rejected() {
        // Σ 2^n diverges: ratio limit 2.
        let t = HyperTerm::new(vec![Factor::constpow(2, "n")], "1", "1");
        assert!(matches!(
            sum_until(&t, &int(0), &eps_pow10(10, 64), 64, 100),
            Err(AnalysisError::Divergent(_))
        ));
    }

    #[test]
    fn geometric_control_digits_per_term_is_exact() {
        // Σ 2^(−n): every ratio is exactly 1/2, so d(N)/N = log10 2.
        let t = HyperTerm::new(vec![Factor::constpow(2, "-n")], "1", "1");
        let d = digits_per_term(&t, &int(0), 64, 128).unwrap();
        let ln2 = oracle_ln2(128).unwrap();
        let ln10 = crate::bigfloat::ln(&BigFloat::from_i64(10, 128)).unwrap();
        let expect = ln2.div(&ln10);
        let diff = d.sub(&expect).abs();
        let tol = BigFloat::from_rational(
            &BigRational::new(BigInt::one(), BigInt::from(10u64).pow(12)),
            128,
        );
        assert!(diff.cmp_value(&tol) != std::cmp::Ordering::Greater, "{}", diff.to_decimal(4));
    }

    #[test]
    fn digit_counts_are_cumulative_ratio_logs() {
        // For Σ binom³(6n+1)/2^(8n): d(N) = log10|a(0)/a(N)| by telescoping.
        let t = fast_pi_series();
        let counts = digit_counts(&t, &int(0), &[5, 20], 128).unwrap();
        assert_eq!(counts.len(), 2);
        let a0 = eval_term(&t, 0, &int(0)).unwrap();
        let a20 = eval_term(&t, 20, &int(0)).unwrap();
        let expect = (a0 / a20).abs();
        let lhs = counts[1].1.to_f64();
        let rhs = expect.numer().to_f64().unwrap().log10() - expect.denom().to_f64().unwrap().log10();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn digit_asymptotic_fit_finds_log_coefficient() {
        // Fast 4/π series: a(n) ~ C·4^(−n)·n^(−1/2) (binomial³ gives n^(−3/2),
        // the prefactor gives n), so d(N) ≈ N·log10 4 + (1/2)·log10 N + C.
        let t = fast_pi_series();
        let slope = 4f64.log10();
        let ns: Vec<u64> = (1..=20).map(|i| 40 * i).collect();
        let fit = check_digit_asymptotic(&t, &int(0), slope, &ns, 128).unwrap();
        assert!((fit.log_coeff - 0.5).abs() < 0.1, "log coeff {}", fit.log_coeff);
        assert!(fit.max_residual < 0.05, "residual {}", fit.max_residual);
    }

    #[test]
    fn exact_partial_sum_matches_stream() {
        let g = crate::term::tests::sample_generator();
        let s = partial_sum_exact(&g, &int(1), 6).unwrap();
        let mut direct = BigRational::zero();
        for n in 0..6 {
            direct += eval_term(&g, n, &int(1)).unwrap();
        }
        assert_eq!(s, direct);
    }
}
