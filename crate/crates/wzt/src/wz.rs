//! WZ-pair certification and the constructions built on top of it.
//!
//! A pair is a term G(n,k) together with a certificate C(n,k) defining
//! F = C·G. The pair is certified when F(n+1,k) − F(n,k) = G(n,k+1) − G(n,k)
//! holds as an exact rational-function identity; dividing through by G(n,k)
//! this becomes
//!
//!   C(n+1,k)·r_n(n,k) − C(n,k) = r_k(n,k) − 1
//!
//! with r_n, r_k the two shift ratios of G, and is decided by polynomial
//! cross-multiplication — no gcd, no floating point.

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, SeriesSum};
use crate::bigfloat::BigFloat;
use crate::exact::{int, rat, ratfun_eval, RationalFunction2};
use crate::term::{eval_term, shift_ratio, Axis, Factor, HyperTerm, LinearForm, TermError};

#[derive(Debug, Error)]
pub enum WzError {
    #[error("certificate invalid: residual {residual} at (n, k) = ({n}, {k})")]
    CertificateInvalid { residual: BigRational, n: i64, k: i64 },
    #[error("F does not vanish at n = 0: {0}")]
    FNotVanishing(String),
    #[error("series does not truncate at k = 1/2: {0}")]
    NotTruncating(String),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// A generator with its certificate; F = certificate · G.
#[derive(Debug, Clone, PartialEq)]
pub struct WzPair {
    pub g: HyperTerm,
    pub certificate: RationalFunction2,
}

impl WzPair {
    pub fn new(g: HyperTerm, certificate: RationalFunction2) -> Self {
        WzPair { g, certificate }
    }

    /// F(n, k) = C(n, k) · G(n, k), exact.
    pub fn eval_f(&self, n: u64, k: &BigRational) -> Result<BigRational, TermError> {
        let g = eval_term(&self.g, n, k)?;
        if g.is_zero() {
            // A zero G forces F = 0 regardless of the certificate value.
            return Ok(BigRational::zero());
        }
        let c = ratfun_eval(&self.certificate, &int(n as i64), k)?;
        Ok(c * g)
    }
}

/// Locate a small integer point where a nonzero rational function is defined
/// and does not vanish, for error reporting.
fn witness_point(f: &RationalFunction2) -> (BigRational, i64, i64) {
    for n in 0..12i64 {
        for k in 0..12i64 {
            if let Ok(v) = ratfun_eval(f, &int(n), &int(k)) {
                if !v.is_zero() {
                    return (v, n, k);
                }
            }
        }
    }
    (BigRational::zero(), -1, -1)
}

/// Decide the WZ identity for the pair exactly.
pub fn certify(pair: &WzPair) -> Result<(), WzError> {
    let r_n = shift_ratio(&pair.g, Axis::N)?;
    let r_k = shift_ratio(&pair.g, Axis::K)?;
    let c_next = pair.certificate.shift_n(&BigRational::one());
    let lhs = c_next.mul(&r_n).sub(&pair.certificate);
    let rhs = r_k.sub(&RationalFunction2::one());
    let residual = lhs.sub(&rhs);
    if residual.num.is_zero() {
        Ok(())
    } else {
        let (value, n, k) = witness_point(&residual);
        Err(WzError::CertificateInvalid { residual: value, n, k })
    }
}

/// Check F(0, k) = 0: the certificate numerator must be divisible by n, and
/// the actual products F(0, k) are spot-evaluated for k = 0..=10.
pub fn check_f_vanishes(pair: &WzPair) -> Result<(), WzError> {
    if !pair.certificate.num.divisible_by_n() {
        return Err(WzError::FNotVanishing(format!(
            "certificate numerator {} is not divisible by n",
            pair.certificate.num
        )));
    }
    for k in 0..=10i64 {
        let f = pair.eval_f(0, &int(k))?;
        if !f.is_zero() {
            return Err(WzError::FNotVanishing(format!("F(0, {k}) = {f}")));
        }
    }
    Ok(())
}

/// Finite telescoping check: Σ_{n<N} [G(n,k+1) − G(n,k)] = F(N,k) − F(0,k),
/// exact in rationals. Holds for every certified pair; exposed for property
/// tests and diagnostics.
pub fn telescoping_defect(
    pair: &WzPair,
    k: i64,
    big_n: u64,
) -> Result<BigRational, WzError> {
    let kq = int(k);
    let kq1 = int(k + 1);
    let mut lhs = BigRational::zero();
    for n in 0..big_n {
        lhs += eval_term(&pair.g, n, &kq1)? - eval_term(&pair.g, n, &kq)?;
    }
    let rhs = pair.eval_f(big_n, &kq)? - pair.eval_f(0, &kq)?;
    Ok(lhs - rhs)
}

// ---------------------------------------------------------------------------
// Sum invariance in k.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct InvarianceEntry {
    pub k: i64,
    pub sum: SeriesSum,
}

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub entries: Vec<InvarianceEntry>,
    /// Worst pairwise |S_i − S_j| − (bound_i + bound_j), negative when all
    /// pairs agree comfortably inside their tail bounds.
    pub worst_excess: BigFloat,
    pub pass: bool,
}

/// Sum the generator at each k with a fixed number of terms and verify that
/// all values agree pairwise within their certified tail bounds plus `slack`.
pub fn sum_invariance(
    term: &HyperTerm,
    ks: &[i64],
    n_terms: usize,
    precision: u32,
    slack: &BigFloat,
) -> Result<InvarianceReport, WzError> {
    let mut entries = Vec::with_capacity(ks.len());
    for &k in ks {
        let sum = analysis::sum_fixed(term, &int(k), n_terms, precision)?;
        entries.push(InvarianceEntry { k, sum });
    }
    let mut pass = true;
    let mut worst: Option<BigFloat> = None;
    for i in 0..entries.len() {
        for j in (i + 1)..entries.len() {
            let a = &entries[i].sum;
            let b = &entries[j].sum;
            let gap = a.value.sub(&b.value).abs();
            let allowance = a.tail_bound.add(&b.tail_bound).add(slack);
            let excess = gap.sub(&allowance);
            if worst
                .as_ref()
                .is_none_or(|w| excess.cmp_value(w) == std::cmp::Ordering::Greater)
            {
                worst = Some(excess.clone());
            }
            if gap.cmp_value(&allowance) == std::cmp::Ordering::Greater {
                pass = false;
            }
        }
    }
    let worst_excess = worst.unwrap_or_else(|| BigFloat::zero(precision));
    Ok(InvarianceReport { entries, worst_excess, pass })
}

// ---------------------------------------------------------------------------
// Second-order generator: G₂(n,k) = F₁(n+1, n+k) + G₁(n, n+k).
// ---------------------------------------------------------------------------

/// G₂ represented as the sum of two explicit terms (the F part carries the
/// certificate folded into its prefactor).
#[derive(Debug, Clone)]
pub struct SecondOrder {
    pub part_f: HyperTerm,
    pub part_g: HyperTerm,
}

fn compose_linear(lf: &LinearForm, n_repl: &LinearForm, k_repl: &LinearForm) -> LinearForm {
    LinearForm::new(
        &lf.coeff_n * &n_repl.coeff_n + &lf.coeff_k * &k_repl.coeff_n,
        &lf.coeff_n * &n_repl.coeff_k + &lf.coeff_k * &k_repl.coeff_k,
        &lf.coeff_n * &n_repl.constant + &lf.coeff_k * &k_repl.constant + &lf.constant,
    )
}

/// Substitute (n, k) -> (n_repl, k_repl) throughout a term. Pochhammer and
/// factorial factors are tied to the literal symbol n and cannot absorb a
/// general linear substitution.
pub fn substitute(
    t: &HyperTerm,
    n_repl: &LinearForm,
    k_repl: &LinearForm,
) -> Result<HyperTerm, TermError> {
    let np = n_repl.to_poly();
    let kp = k_repl.to_poly();
    let mut factors = Vec::with_capacity(t.factors.len());
    for f in &t.factors {
        factors.push(match f {
            Factor::Binom { top, bottom, exp } => Factor::Binom {
                top: compose_linear(top, n_repl, k_repl),
                bottom: compose_linear(bottom, n_repl, k_repl),
                exp: *exp,
            },
            Factor::ConstPow { base, exp } => Factor::ConstPow {
                base: *base,
                exp: compose_linear(exp, n_repl, k_repl),
            },
            Factor::SignPow { exp } => Factor::SignPow {
                exp: compose_linear(exp, n_repl, k_repl),
            },
            Factor::Poch { .. } | Factor::FactorialPow { .. } => {
                return Err(TermError::Improper(
                    "pochhammer and factorial factors do not support substitution".into(),
                ));
            }
        });
    }
    let prefactor = RationalFunction2::new(
        t.prefactor.num.compose(&np, &kp),
        t.prefactor.den.compose(&np, &kp),
    );
    Ok(HyperTerm { factors, prefactor })
}

/// Build G₂ from a certified pair.
pub fn build_second_order(pair: &WzPair) -> Result<SecondOrder, WzError> {
    let n_plus_1: LinearForm = "n + 1".parse().expect("literal parses");
    let n_plus_k: LinearForm = "n + k".parse().expect("literal parses");
    let n_id: LinearForm = "n".parse().expect("literal parses");

    // F₁(n+1, n+k) = C(n+1, n+k) · G(n+1, n+k).
    let mut part_f = substitute(&pair.g, &n_plus_1, &n_plus_k)?;
    let c_sub = RationalFunction2::new(
        pair.certificate.num.compose(&n_plus_1.to_poly(), &n_plus_k.to_poly()),
        pair.certificate.den.compose(&n_plus_1.to_poly(), &n_plus_k.to_poly()),
    );
    part_f.prefactor = part_f.prefactor.mul(&c_sub);

    let part_g = substitute(&pair.g, &n_id, &n_plus_k)?;
    Ok(SecondOrder { part_f, part_g })
}

impl SecondOrder {
    pub fn eval(&self, n: u64, k: &BigRational) -> Result<BigRational, TermError> {
        Ok(eval_term(&self.part_f, n, k)? + eval_term(&self.part_g, n, k)?)
    }

    /// Σ_n G₂(n, k) to tolerance, summing the two parts independently and
    /// combining values and certified bounds.
    pub fn sum(
        &self,
        k: &BigRational,
        eps: &BigFloat,
        precision: u32,
        max_terms: usize,
    ) -> Result<SeriesSum, WzError> {
        let half = eps.mul_pow2(-1);
        let a = analysis::sum_until(&self.part_f, k, &half, precision, max_terms)?;
        let b = analysis::sum_until(&self.part_g, k, &half, precision, max_terms)?;
        Ok(SeriesSum {
            value: a.value.add(&b.value),
            tail_bound: a.tail_bound.add(&b.tail_bound),
            terms_used: a.terms_used.max(b.terms_used),
            method: a.method,
        })
    }
}

// ---------------------------------------------------------------------------
// Truncation at k = 1/2.
// ---------------------------------------------------------------------------

/// When the term carries a literal (1/2 − k)_n factor with positive exponent,
/// every n ≥ 1 term vanishes at k = 1/2 and the series collapses to its n = 0
/// term, returned exactly. Terms without that literal factor are rejected,
/// even when they happen to truncate for other reasons.
pub fn constant_at_half_k(term: &HyperTerm) -> Result<BigRational, WzError> {
    let wanted = LinearForm::new(BigRational::zero(), int(-1), rat(1, 2));
    let has = term.factors.iter().any(
        |f| matches!(f, Factor::Poch { arg, exp } if *exp >= 1 && *arg == wanted),
    );
    if !has {
        return Err(WzError::NotTruncating(
            "no (1/2 - k) pochhammer factor with positive exponent".into(),
        ));
    }
    Ok(eval_term(term, 0, &rat(1, 2))?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bigfloat::oracle_pi;
    use crate::exact::Poly2;
    use crate::term::tests::{sample_generator, sample_poch};

    fn poly(s: &str) -> Poly2 {
        s.parse().unwrap()
    }

    /// Alternating (4n+1) pair: certificate 4n²/((4n+1)(2n−2k−1)).
    pub fn sample_pair() -> WzPair {
        WzPair::new(
            sample_generator(),
            RationalFunction2::new(
                "4*n^2".parse().unwrap(),
                poly("4*n + 1").mul(&poly("2*n - 2*k - 1")),
            ),
        )
    }

    /// The 3^(k−2n)-weighted (8n+2k+1) pair with its corrected certificate
    /// 36n²/((8n+2k+1)(4n−2k−1)).
    pub fn triple_weight_pair() -> WzPair {
        WzPair::new(
            HyperTerm::new(
                vec![
                    Factor::signpow("k"),
                    Factor::constpow(3, "k - 2*n"),
                    Factor::constpow(2, "-8*n - 6*k"),
                    Factor::binom("2*n", "n", 1),
                    Factor::binom("4*n", "2*n", 1),
                    Factor::binom("2*k", "k", 1),
                    Factor::binom("2*n + 2*k", "n + k", 1),
                    Factor::binom("2*n - 1/2", "k", -1),
                ],
                "8*n + 2*k + 1",
                "1",
            ),
            RationalFunction2::new(
                "36*n^2".parse().unwrap(),
                poly("8*n + 2*k + 1").mul(&poly("4*n - 2*k - 1")),
            ),
        )
    }

    #[test]
    fn sample_pair_certifies() {
        certify(&sample_pair()).unwrap();
    }

    #[test]
    fn triple_weight_pair_certifies_with_corrected_denominator() {
        certify(&triple_weight_pair()).unwrap();
    }

    #[test]
    fn shallow_denominator_variant_fails() {
        // Same generator, but certificate denominator using (2n−2k−1) instead
        // of (4n−2k−1): the identity must fail with a nonzero residual.
        let mut pair = triple_weight_pair();
        pair.certificate = RationalFunction2::new(
            "36*n^2".parse().unwrap(),
            poly("8*n + 2*k + 1").mul(&poly("2*n - 2*k - 1")),
        );
        let err = certify(&pair).unwrap_err();
        match err {
            WzError::CertificateInvalid { residual, .. } => assert!(!residual.is_zero()),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wrong_certificate_fails_with_residual() {
        // The (6n+2k+1)-style certificate on the (4n+1) generator.
        let mut pair = sample_pair();
        pair.certificate = RationalFunction2::new(
            "16*n^2".parse().unwrap(),
            poly("6*n + 2*k + 1").mul(&poly("2*n - 2*k - 1")),
        );
        assert!(matches!(certify(&pair), Err(WzError::CertificateInvalid { .. })));
    }

    #[test]
    fn common_factor_does_not_break_certification() {
        // Multiplying numerator and denominator by (n+k+1) leaves the
        // certificate valid: equality is by cross-multiplication.
        let mut pair = sample_pair();
        let extra = poly("n + k + 1");
        pair.certificate = RationalFunction2::new(
            pair.certificate.num.mul(&extra),
            pair.certificate.den.mul(&extra),
        );
        certify(&pair).unwrap();
    }

    #[test]
    fn f_vanishes_at_n_zero() {
        check_f_vanishes(&sample_pair()).unwrap();
        check_f_vanishes(&triple_weight_pair()).unwrap();
        // A certificate with constant numerator cannot vanish at n = 0.
        let mut pair = sample_pair();
        pair.certificate =
            RationalFunction2::new("1".parse().unwrap(), "4*n + 1".parse().unwrap());
        assert!(matches!(check_f_vanishes(&pair), Err(WzError::FNotVanishing(_))));
    }

    #[test]
    fn finite_telescoping_is_exact() {
        let pair = sample_pair();
        for k in 0..4 {
            for big_n in [1u64, 5, 20] {
                assert_eq!(
                    telescoping_defect(&pair, k, big_n).unwrap(),
                    BigRational::zero(),
                    "k={k} N={big_n}"
                );
            }
        }
    }

    #[test]
    fn invariance_of_sample_generator() {
        let pair = sample_pair();
        let prec = 160;
        let slack = BigFloat::from_i64(1, prec).mul_pow2(-100);
        let report = sum_invariance(&pair.g, &[0, 1, 2, 3], 120, prec, &slack).unwrap();
        assert!(report.pass, "worst excess {}", report.worst_excess.to_decimal(4));
        assert!(report.worst_excess.is_negative());
    }

    #[test]
    fn second_order_point_values_and_sum() {
        let pair = sample_pair();
        let so = build_second_order(&pair).unwrap();
        // G₂(0,0) = F(1,0) + G(0,0) = −1/2 + 1.
        assert_eq!(so.eval(0, &int(0)).unwrap(), rat(1, 2));
        // Term-wise G₂(n,0) = 1/2 · (6n+1)·binom(2n,n)³/2^(8n).
        let half_fast = HyperTerm::new(
            vec![Factor::constpow(2, "-8*n"), Factor::binom("2*n", "n", 3)],
            "6*n + 1",
            "2",
        );
        for n in 0..12 {
            assert_eq!(
                so.eval(n, &int(0)).unwrap(),
                eval_term(&half_fast, n, &int(0)).unwrap(),
                "n = {n}"
            );
        }
        // Σ G₂(n,0) = 2/π.
        let prec = 256;
        let eps = BigFloat::from_i64(1, prec).mul_pow2(-90);
        let s = so.sum(&int(0), &eps, prec, 500).unwrap();
        let target = BigFloat::from_i64(2, prec).div(&oracle_pi(prec).unwrap());
        let diff = s.value.sub(&target).abs();
        assert!(
            diff.cmp_value(&eps.mul_pow2(2)) != std::cmp::Ordering::Greater,
            "diff {}",
            diff.to_decimal(6)
        );
    }

    #[test]
    fn second_order_sum_matches_first_order_sum_at_positive_k() {
        // Σ_n G₂(n,k) = Σ_n G₁(n,k): check at k = 2 where the first-order
        // series converges geometrically enough for a tight direct bound.
        let pair = sample_pair();
        let so = build_second_order(&pair).unwrap();
        let prec = 224;
        let eps = BigFloat::from_i64(1, prec).mul_pow2(-70);
        let s2 = so.sum(&int(2), &eps, prec, 600).unwrap();
        let s1 = analysis::sum_fixed(&pair.g, &int(2), 700, prec).unwrap();
        let diff = s2.value.sub(&s1.value).abs();
        let allowance = s2.tail_bound.add(&s1.tail_bound);
        assert!(
            diff.cmp_value(&allowance) != std::cmp::Ordering::Greater,
            "diff {} vs allowance {}",
            diff.to_decimal(6),
            allowance.to_decimal(6)
        );
    }

    #[test]
    fn half_k_truncation() {
        // Pochhammer form truncates: value 2 at k = 1/2.
        assert_eq!(constant_at_half_k(&sample_poch()).unwrap(), int(2));
        // Binomial form has no (1/2 − k)_n factor.
        assert!(matches!(
            constant_at_half_k(&sample_generator()),
            Err(WzError::NotTruncating(_))
        ));
        // A (1/4 − k/2)_n form truncates mathematically but is rejected by the
        // literal-factor rule.
        let t = HyperTerm::new(
            vec![Factor::poch("1/4 - 1/2*k", 1), Factor::factorialpow(-1)],
            "20*n + 2*k + 3",
            "1",
        );
        assert!(matches!(constant_at_half_k(&t), Err(WzError::NotTruncating(_))));
    }
}
