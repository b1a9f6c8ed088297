//! Integer-relation detection (PSLQ) and the exponent-template sweep that
//! rediscovers a catalog row from numerics alone.
//!
//! The sweep enumerates templates
//!
//! ```text
//! B(n,k) = [C(2n+2k,n+k)/C(2n,n)]^p · [C(4n+2k,2n+k)/C(2n,n... 4n,2n)]^q ·
//!          C(n+k,n)^r · C(4n,2n)·C(2n,n)² / C(2n−1/2,k)
//! ```
//!
//! weighted by 2^(w₂n)·3^(w₃n), sums S₀(k) = Σ B(n,k)·w(n) and
//! S₁(k) = Σ B(n,k)·n·w(n) at a few integer k, and asks PSLQ for integer
//! relations among (S₀, S₁, target). A template is a hit when the relations
//! at all sampled k interpolate linearly in k, which pins the prefactor
//! an + bk + c; the residual k-dependence f(k) is then matched against a
//! small hypothesis family by exact ratio comparison.

use std::collections::BTreeMap;
use std::f64::consts::LOG2_10;
use std::path::Path;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::bigfloat::{BigFloat, BigFloatError};
use crate::catalog::{constant_value, CatalogError};
use crate::exact::{Poly2, RationalFunction2};
use crate::term::{simplify_binom_shift, BinomIdentity, Factor, HyperTerm, TermError};

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Numeric(#[from] BigFloatError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("status file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("status file parse error: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Fixed-point helpers (value · 2^wp as BigInt).
// ---------------------------------------------------------------------------

/// Nearest integer to a/b (ties away from zero); b must be nonzero.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if &r.abs() * 2 >= b.abs() {
        let bump = if (a.sign() == num_bigint::Sign::Minus) ^ (b.sign() == num_bigint::Sign::Minus)
        {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        q + bump
    } else {
        q
    }
}

fn mul_fx(a: &BigInt, b: &BigInt, wp: u32) -> BigInt {
    (a * b) >> wp
}

fn div_fx(a: &BigInt, b: &BigInt, wp: u32) -> BigInt {
    round_div(&(a << wp), b)
}

/// Fixed-point square root of a nonnegative fixed-point value.
fn sqrt_fx(a: &BigInt, wp: u32) -> BigInt {
    debug_assert!(!a.is_negative());
    (a << wp).sqrt()
}

fn fx_from_rational(q: &BigRational, wp: u32) -> BigInt {
    round_div(&(q.numer() << wp), q.denom())
}

// ---------------------------------------------------------------------------
// PSLQ.
// ---------------------------------------------------------------------------

/// An integer relation Σ coeffs·x = 0 (to within `residual`).
#[derive(Debug, Clone)]
pub struct Relation {
    /// gcd-reduced, first nonzero coefficient positive.
    pub coeffs: Vec<BigInt>,
    /// |Σ coeffs·x| over the original inputs.
    pub residual: BigFloat,
    /// Euclidean norm of the coefficient vector.
    pub norm: BigFloat,
}

fn normalize_coeffs(mut coeffs: Vec<BigInt>) -> Vec<BigInt> {
    let mut g = BigInt::zero();
    for c in &coeffs {
        g = g.gcd(c);
    }
    if !g.is_zero() && !g.is_one() {
        for c in &mut coeffs {
            *c /= &g;
        }
    }
    if let Some(first) = coeffs.iter().find(|c| !c.is_zero()) {
        if first.is_negative() {
            for c in &mut coeffs {
                *c = -c.clone();
            }
        }
    }
    coeffs
}

fn relation_from(coeffs: Vec<BigInt>, xs: &[BigFloat]) -> Relation {
    let coeffs = normalize_coeffs(coeffs);
    let prec = xs.iter().map(|x| x.precision()).max().unwrap_or(64);
    let mut dot = BigFloat::zero(prec);
    let mut norm_sq = BigInt::zero();
    for (c, x) in coeffs.iter().zip(xs) {
        dot = dot.add(&x.mul_rational(&BigRational::from_integer(c.clone())));
        norm_sq += c * c;
    }
    let norm = BigFloat::from_bigint(norm_sq, prec).sqrt().expect("norm square nonnegative");
    Relation { coeffs, residual: dot.abs(), norm }
}

/// 10^(−ceil(digits/2)) as a BigFloat: the detection threshold.
fn detection_threshold(digits: u32, precision: u32) -> BigFloat {
    let q = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(digits.div_ceil(2)));
    BigFloat::from_rational(&q, precision)
}

/// PSLQ integer-relation search over `xs`.
///
/// `digits` is the requested detection precision: a relation is reported when
/// its scaled residual drops below 10^(−digits/2); the fixed-point working
/// precision is 4·digits decimal digits plus guard bits. Returns `Ok(None)`
/// when the PSLQ norm lower bound proves no relation with coefficients below
/// 2^max_coeff_bits exists, and `PrecisionExhausted` when the iteration stalls
/// before either outcome.
pub fn pslq(
    xs: &[BigFloat],
    max_coeff_bits: u32,
    digits: u32,
) -> Result<Option<Relation>, DiscoveryError> {
    let n = xs.len();
    if n < 2 {
        return Err(DiscoveryError::BadInput("need at least two inputs".into()));
    }
    if digits < 10 {
        return Err(DiscoveryError::BadInput("need at least 10 digits".into()));
    }
    // A literal zero input is its own relation.
    if let Some(i) = xs.iter().position(|x| x.is_zero()) {
        let mut coeffs = vec![BigInt::zero(); n];
        coeffs[i] = BigInt::one();
        return Ok(Some(relation_from(coeffs, xs)));
    }

    let wp = ((4 * digits) as f64 * LOG2_10).ceil() as u32 + 64;
    let one_fx = BigInt::one() << wp;
    let tol: BigInt = &one_fx / BigInt::from(10u32).pow(digits.div_ceil(2));
    let coeff_limit = BigInt::one() << max_coeff_bits;
    let threshold = detection_threshold(digits, xs[0].precision().max(64));

    // Normalize by the largest input so the working vector is within [−1, 1].
    let mxq = xs
        .iter()
        .map(|x| x.to_rational().abs())
        .max()
        .expect("nonempty");
    let scaled_threshold = threshold.mul_rational(&mxq);
    let mut y: Vec<BigInt> =
        xs.iter().map(|x| fx_from_rational(&(x.to_rational() / &mxq), wp)).collect();

    // Partial norms s[j] = sqrt(Σ_{i≥j} y_i²).
    let mut s = vec![BigInt::zero(); n];
    {
        let mut acc = BigInt::zero();
        for j in (0..n).rev() {
            acc += mul_fx(&y[j], &y[j], wp);
            s[j] = sqrt_fx(&acc, wp);
        }
    }
    let t0 = s[0].clone();
    if t0.is_zero() {
        return Err(DiscoveryError::BadInput("all inputs are zero".into()));
    }
    for v in y.iter_mut() {
        *v = div_fx(v, &t0, wp);
    }
    for v in s.iter_mut() {
        *v = div_fx(v, &t0, wp);
    }

    // Lower trapezoidal H (n rows, n−1 columns).
    let mut h = vec![vec![BigInt::zero(); n - 1]; n];
    for i in 0..n {
        for j in 0..n - 1 {
            if i < j {
                continue;
            }
            h[i][j] = if i == j {
                div_fx(&s[j + 1], &s[j], wp)
            } else {
                let num = mul_fx(&y[i], &y[j], wp);
                let den = mul_fx(&s[j], &s[j + 1], wp);
                -div_fx(&num, &den, wp)
            };
        }
    }
    // B tracks the inverse column operations; column j of B is a candidate
    // relation whenever y_j collapses.
    let mut b: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();

    let reduce = |y: &mut Vec<BigInt>,
                      h: &mut Vec<Vec<BigInt>>,
                      b: &mut Vec<Vec<BigInt>>,
                      start_col: usize| {
        for i in 1..n {
            let jtop = start_col.min(i - 1);
            for j in (0..=jtop).rev() {
                if h[j][j].is_zero() {
                    continue;
                }
                let t = round_div(&h[i][j], &h[j][j]);
                if t.is_zero() {
                    continue;
                }
                let ty = &t * &y[i];
                y[j] += ty;
                let (head, tail) = h.split_at_mut(i);
                for (hik, hjk) in tail[0].iter_mut().zip(head[j].iter().take(j + 1)) {
                    *hik -= &t * hjk;
                }
                for row in b.iter_mut() {
                    let d = &t * &row[i];
                    row[j] += d;
                }
            }
        }
    };

    reduce(&mut y, &mut h, &mut b, n - 1);

    let detect = |y: &[BigInt]| -> Option<usize> {
        let mut best: Option<(usize, BigInt)> = None;
        for (i, v) in y.iter().enumerate() {
            let a = v.abs();
            match &best {
                Some((_, cur)) if *cur <= a => {}
                _ => best = Some((i, a)),
            }
        }
        let (i, min_abs) = best.expect("nonempty");
        (min_abs < tol).then_some(i)
    };

    // γ = sqrt(4/3) powers for the pivot rule.
    let g_fx = sqrt_fx(&round_div(&(&one_fx * 4), &BigInt::from(3)), wp);
    let gamma_pows: Vec<BigInt> = {
        let mut v = Vec::with_capacity(n - 1);
        let mut cur = g_fx.clone();
        for _ in 0..n - 1 {
            v.push(cur.clone());
            cur = mul_fx(&cur, &g_fx, wp);
        }
        v
    };

    let max_steps = 1024 + 64 * max_coeff_bits as usize;
    for _ in 0..max_steps {
        if let Some(i) = detect(&y) {
            let coeffs: Vec<BigInt> = (0..n).map(|r| b[r][i].clone()).collect();
            if coeffs.iter().all(|c| c.is_zero()) {
                return Err(DiscoveryError::PrecisionExhausted(
                    "zero candidate column".into(),
                ));
            }
            let rel = relation_from(coeffs, xs);
            if rel.residual.cmp_value(&scaled_threshold) == std::cmp::Ordering::Greater {
                return Err(DiscoveryError::PrecisionExhausted(format!(
                    "candidate residual {} above threshold",
                    rel.residual.to_decimal(4)
                )));
            }
            if rel.coeffs.iter().any(|c| c.abs() > coeff_limit) {
                return Ok(None);
            }
            return Ok(Some(rel));
        }

        // Pivot: maximize γ^(i+1)·|H_ii|.
        let mut m = 0usize;
        let mut best = BigInt::from(-1);
        for (i, gp) in gamma_pows.iter().enumerate() {
            let v = mul_fx(gp, &h[i][i].abs(), wp);
            if v > best {
                best = v;
                m = i;
            }
        }
        y.swap(m, m + 1);
        h.swap(m, m + 1);
        for row in b.iter_mut() {
            row.swap(m, m + 1);
        }
        if m < n - 2 {
            // Givens rotation to restore the trapezoidal shape.
            let t0 = sqrt_fx(
                &(mul_fx(&h[m][m], &h[m][m], wp) + mul_fx(&h[m][m + 1], &h[m][m + 1], wp)),
                wp,
            );
            if t0.is_zero() {
                return Err(DiscoveryError::PrecisionExhausted("degenerate corner".into()));
            }
            let c = div_fx(&h[m][m], &t0, wp);
            let sn = div_fx(&h[m][m + 1], &t0, wp);
            for row in h.iter_mut().skip(m) {
                let t3 = row[m].clone();
                let t4 = row[m + 1].clone();
                row[m] = mul_fx(&c, &t3, wp) + mul_fx(&sn, &t4, wp);
                row[m + 1] = mul_fx(&c, &t4, wp) - mul_fx(&sn, &t3, wp);
            }
        }
        reduce(&mut y, &mut h, &mut b, m + 1);

        // Norm lower bound: every relation has Euclidean norm ≥ 1/max|H_jj|.
        let mut maxdiag = BigInt::zero();
        for (j, row) in h.iter().enumerate().take(n - 1) {
            let v = row[j].abs();
            if v > maxdiag {
                maxdiag = v;
            }
        }
        if maxdiag.is_zero() {
            return Err(DiscoveryError::PrecisionExhausted("vanishing diagonal".into()));
        }
        let bound_fx = div_fx(&one_fx, &maxdiag, wp);
        if bound_fx > (&coeff_limit << wp) {
            return Ok(None);
        }
    }
    Err(DiscoveryError::PrecisionExhausted(format!(
        "no decision after {max_steps} iterations"
    )))
}

// ---------------------------------------------------------------------------
// The exponent-template sweep.
// ---------------------------------------------------------------------------

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchTemplate {
    /// Inclusive exponent ranges for the three template powers.
    pub p_range: (i32, i32),
    pub q_range: (i32, i32),
    pub r_range: (i32, i32),
    /// Radix weights: the summand carries 2^(two_exp·n)·3^(three_exp·n).
    pub two_exp: i64,
    pub three_exp: i64,
    /// Target constant rational·√surd·π^pi_power.
    #[serde(with = "rational_string")]
    pub target_rational: BigRational,
    pub target_surd: u32,
    pub target_pi_power: i32,
    /// Sampled k values (at least three, distinct).
    pub ks: Vec<u32>,
    /// Detection precision in decimal digits.
    pub digits: u32,
    pub max_terms: usize,
    pub max_coeff_bits: u32,
}

impl Default for SearchTemplate {
    /// The template of the worked example: weight 1/(2^{8n}3^{2n}), target
    /// √3/π, exponent cube [−3,3]³.
    fn default() -> Self {
        SearchTemplate {
            p_range: (-3, 3),
            q_range: (-3, 3),
            r_range: (-3, 3),
            two_exp: -8,
            three_exp: -2,
            target_rational: BigRational::one(),
            target_surd: 3,
            target_pi_power: -1,
            ks: vec![0, 1, 2],
            digits: 60,
            max_terms: 2000,
            max_coeff_bits: 24,
        }
    }
}

impl SearchTemplate {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        let ranges = [self.p_range, self.q_range, self.r_range];
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return Err(DiscoveryError::BadInput("inverted exponent range".into()));
        }
        if self.ks.len() < 3 || !self.ks.windows(2).all(|w| w[0] < w[1]) {
            return Err(DiscoveryError::BadInput(
                "need at least three strictly increasing k samples".into(),
            ));
        }
        if self.digits < 20 {
            return Err(DiscoveryError::BadInput("need at least 20 digits".into()));
        }
        if self.max_terms == 0 {
            return Err(DiscoveryError::BadInput("max_terms must be positive".into()));
        }
        Ok(())
    }

    /// FNV-1a over the canonical JSON encoding; keys the resume status file.
    pub fn hash(&self) -> String {
        let data = serde_json::to_string(self).expect("template serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in data.as_bytes() {
            h ^= u64::from(*byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    fn target(&self, precision: u32) -> Result<BigFloat, DiscoveryError> {
        Ok(constant_value(
            &self.target_rational,
            self.target_surd,
            self.target_pi_power,
            precision,
        )?)
    }
}

fn ratfun_pow(base: &RationalFunction2, e: i32) -> RationalFunction2 {
    let mut acc = RationalFunction2::one();
    for _ in 0..e.unsigned_abs() {
        acc = acc.mul(base);
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// The summand of S₀(k) (or S₁ with `extra_n`) for one template cell, built
/// from the k=0 core and the four binomial-shift simplification identities.
pub fn cell_term(
    tpl: &SearchTemplate,
    p: i32,
    q: i32,
    r: i32,
    k: u32,
    extra_n: bool,
) -> HyperTerm {
    let mut factors = vec![Factor::binom("4*n", "2*n", 1), Factor::binom("2*n", "n", 2)];
    if tpl.two_exp != 0 {
        factors.push(Factor::constpow(2, &format!("{}*n", tpl.two_exp)));
    }
    if tpl.three_exp != 0 {
        factors.push(Factor::constpow(3, &format!("{}*n", tpl.three_exp)));
    }
    let kk = u64::from(k);
    let mut pre = ratfun_pow(&simplify_binom_shift(BinomIdentity::Central2, kk).to_ratfun(), p);
    pre = pre.mul(&ratfun_pow(
        &simplify_binom_shift(BinomIdentity::Central4, kk).to_ratfun(),
        q,
    ));
    pre = pre.mul(&ratfun_pow(
        &simplify_binom_shift(BinomIdentity::UpperShift, kk).to_ratfun(),
        r,
    ));
    pre = pre.mul(&simplify_binom_shift(BinomIdentity::HalfTop, kk).to_ratfun().recip());
    if extra_n {
        pre = pre.mul(&RationalFunction2::from_poly(Poly2::monomial(1, 0, BigRational::one())));
    }
    HyperTerm { factors, prefactor: pre }
}

/// One relation at one sampled k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRelation {
    pub k: u32,
    /// Coefficients on (S₀(k), S₁(k), target), as decimal strings.
    pub coeffs: Vec<String>,
}

impl KRelation {
    fn from_relation(k: u32, rel: &Relation) -> Self {
        KRelation { k, coeffs: rel.coeffs.iter().map(|c| c.to_string()).collect() }
    }

    fn coeff(&self, i: usize) -> Result<BigInt, DiscoveryError> {
        self.coeffs
            .get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DiscoveryError::BadInput(format!("bad relation coefficient {i}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    /// Relations at every sampled k, linearly consistent: prefactor an+bk+c.
    Hit { a: i64, b: i64, c: i64, relations: Vec<KRelation> },
    /// PSLQ proved no relation (within the coefficient bound) at this k.
    NoRelation { k: u32, found: Vec<KRelation> },
    /// Relations found but their k-dependence is not linear.
    Inconsistent { detail: String, relations: Vec<KRelation> },
    /// The cell's series diverges and was skipped.
    Divergent,
    /// PSLQ or summation could not decide at the configured precision.
    Unresolved { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub p: i32,
    pub q: i32,
    pub r: i32,
    #[serde(flatten)]
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// The template, echoed so reports are self-describing; defaults follow
    /// the worked example (ranges ±3, weight 2^{−8n}3^{−2n}, 60 digits).
    pub template: SearchTemplate,
    pub template_hash: String,
    pub cells: Vec<CellReport>,
}

impl SweepReport {
    pub fn hits(&self) -> Vec<&CellReport> {
        self.cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::Hit { .. }))
            .collect()
    }
}

/// Sum S₀(k) and S₁(k) for one cell at the template's precision.
fn cell_sums(
    tpl: &SearchTemplate,
    p: i32,
    q: i32,
    r: i32,
    k: u32,
    digits: u32,
) -> Result<(BigFloat, BigFloat), DiscoveryError> {
    let wp = ((4 * digits) as f64 * LOG2_10).ceil() as u32 + 64;
    // Summed until the certified tail bound is below 10^(−digits−5).
    let eps = BigFloat::from_rational(
        &BigRational::new(BigInt::one(), BigInt::from(10u32).pow(digits + 5)),
        wp,
    );
    let t0 = cell_term(tpl, p, q, r, k, false);
    let t1 = cell_term(tpl, p, q, r, k, true);
    let s0 = analysis::sum_until(&t0, &BigRational::zero(), &eps, wp, tpl.max_terms)?;
    let s1 = analysis::sum_until(&t1, &BigRational::zero(), &eps, wp, tpl.max_terms)?;
    Ok((s0.value, s1.value))
}

/// Run PSLQ on (S₀(k), S₁(k), target) for every sampled k; `None` in the
/// result marks a proven no-relation at that k.
/// Scan outcome for one cell: `Ok` when every sampled k yields a relation,
/// `Err` carries the first k without one plus the relations found so far.
type CellScan = Result<Vec<KRelation>, (u32, Vec<KRelation>)>;

fn cell_relations(
    tpl: &SearchTemplate,
    p: i32,
    q: i32,
    r: i32,
    digits: u32,
) -> Result<CellScan, DiscoveryError> {
    let wp = ((4 * digits) as f64 * LOG2_10).ceil() as u32 + 64;
    let target = tpl.target(wp)?;
    let mut found = Vec::new();
    for &k in &tpl.ks {
        let (s0, s1) = cell_sums(tpl, p, q, r, k, digits)?;
        match pslq(&[s0, s1, target.clone()], tpl.max_coeff_bits, digits)? {
            Some(rel) => found.push(KRelation::from_relation(k, &rel)),
            None => return Ok(Err((k, found))),
        }
    }
    Ok(Ok(found))
}

/// Extract (a, b, c) from per-k relations: u₀/u₁ must equal (bk+c)/a exactly
/// and linearly in k across all samples.
fn extract_abc(relations: &[KRelation]) -> Result<(i64, i64, i64), String> {
    if relations.len() < 3 {
        return Err("need at least three k samples".into());
    }
    let mut rhos = Vec::new();
    for rel in relations {
        let u0 = rel.coeff(0).map_err(|e| e.to_string())?;
        let u1 = rel.coeff(1).map_err(|e| e.to_string())?;
        if u1.is_zero() {
            return Err(format!("relation at k={} has no S1 component", rel.k));
        }
        rhos.push((
            BigRational::from_integer(rel.k.into()),
            BigRational::new(u0, u1),
        ));
    }
    let (k0, r0) = &rhos[0];
    let (k1, r1) = &rhos[1];
    let slope = (r1 - r0) / (k1 - k0);
    let intercept = r0 - &slope * k0;
    for (k, rho) in &rhos[2..] {
        if &(&slope * k) + &intercept != *rho {
            return Err(format!("relation ratios not linear in k at k={k}"));
        }
    }
    // a = smallest positive integer clearing both b/a and c/a.
    let a_big = slope.denom().lcm(intercept.denom());
    let b_big = (&slope * BigRational::from_integer(a_big.clone())).to_integer();
    let c_big = (&intercept * BigRational::from_integer(a_big.clone())).to_integer();
    let g = a_big.gcd(&b_big).gcd(&c_big);
    let to_i64 = |v: BigInt| -> Result<i64, String> {
        v.to_i64().ok_or_else(|| "prefactor coefficient overflows i64".to_string())
    };
    Ok((
        to_i64(a_big / &g)?,
        to_i64(b_big / &g)?,
        to_i64(c_big / &g)?,
    ))
}

fn run_cell(tpl: &SearchTemplate, p: i32, q: i32, r: i32) -> CellReport {
    let status = run_cell_status(tpl, p, q, r);
    CellReport { p, q, r, status }
}

fn run_cell_status(tpl: &SearchTemplate, p: i32, q: i32, r: i32) -> CellStatus {
    // Convergence gate on the k=0 series.
    let probe = cell_term(tpl, p, q, r, 0, false);
    match analysis::ratio_limit(&probe, &BigRational::zero()) {
        Ok(l) if l.abs() < BigRational::one() => {}
        Ok(_) | Err(AnalysisError::Divergent(_)) => return CellStatus::Divergent,
        Err(e) => return CellStatus::Unresolved { detail: e.to_string() },
    }
    let first = match cell_relations(tpl, p, q, r, tpl.digits) {
        Ok(Ok(rels)) => rels,
        Ok(Err((k, found))) => return CellStatus::NoRelation { k, found },
        Err(e) => return CellStatus::Unresolved { detail: e.to_string() },
    };
    let (a, b, c) = match extract_abc(&first) {
        Ok(v) => v,
        Err(detail) => return CellStatus::Inconsistent { detail, relations: first },
    };
    // Confirmation re-run at doubled precision must reproduce the relations.
    match cell_relations(tpl, p, q, r, tpl.digits * 2) {
        Ok(Ok(second)) if second == first => CellStatus::Hit { a, b, c, relations: first },
        Ok(Ok(_)) => CellStatus::Unresolved {
            detail: "confirmation at doubled precision changed the relations".into(),
        },
        Ok(Err((k, _))) => CellStatus::Unresolved {
            detail: format!("confirmation at doubled precision lost the relation at k={k}"),
        },
        Err(e) => CellStatus::Unresolved { detail: e.to_string() },
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StatusFile {
    template_hash: String,
    cells: Vec<CellReport>,
}

fn load_status(path: &Path, hash: &str) -> Result<BTreeMap<(i32, i32, i32), CellReport>, DiscoveryError> {
    let mut done = BTreeMap::new();
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        let file: StatusFile = serde_json::from_str(&text)?;
        if file.template_hash == hash {
            for cell in file.cells {
                done.insert((cell.p, cell.q, cell.r), cell);
            }
        }
    }
    Ok(done)
}

fn store_status(
    path: &Path,
    hash: &str,
    done: &BTreeMap<(i32, i32, i32), CellReport>,
) -> Result<(), DiscoveryError> {
    let file = StatusFile {
        template_hash: hash.to_string(),
        cells: done.values().cloned().collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Run the sweep. Cells are independent and execute in parallel; the merged
/// report is ordered by (p, q, r) so output is deterministic. `seed` only
/// shuffles the work order (load balancing) and never changes the report.
/// When `status_path` is given, completed cells are checkpointed there and
/// reused by later runs with the same template.
pub fn sweep(
    tpl: &SearchTemplate,
    status_path: Option<&Path>,
    seed: u64,
) -> Result<SweepReport, DiscoveryError> {
    tpl.validate()?;
    let hash = tpl.hash();
    let done: BTreeMap<(i32, i32, i32), CellReport> = match status_path {
        Some(p) => load_status(p, &hash)?,
        None => BTreeMap::new(),
    };
    let mut todo = Vec::new();
    for p in tpl.p_range.0..=tpl.p_range.1 {
        for q in tpl.q_range.0..=tpl.q_range.1 {
            for r in tpl.r_range.0..=tpl.r_range.1 {
                if !done.contains_key(&(p, q, r)) {
                    todo.push((p, q, r));
                }
            }
        }
    }
    todo.sort_by_key(|&(p, q, r)| {
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
        for v in [p, q, r] {
            for byte in v.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    });
    let shared = Mutex::new(done);
    use rayon::prelude::*;
    todo.par_iter().for_each(|&(p, q, r)| {
        let cell = run_cell(tpl, p, q, r);
        let mut guard = shared.lock().expect("status lock");
        guard.insert((p, q, r), cell);
        if let Some(path) = status_path {
            // Checkpoint after every cell; failures only cost resumability.
            let _ = store_status(path, &hash, &guard);
        }
    });
    let done = shared.into_inner().expect("status lock");
    if let Some(path) = status_path {
        store_status(path, &hash, &done)?;
    }
    let mut cells: Vec<CellReport> = Vec::new();
    for p in tpl.p_range.0..=tpl.p_range.1 {
        for q in tpl.q_range.0..=tpl.q_range.1 {
            for r in tpl.r_range.0..=tpl.r_range.1 {
                cells.push(done.get(&(p, q, r)).cloned().expect("all cells complete"));
            }
        }
    }
    Ok(SweepReport { template: tpl.clone(), template_hash: hash, cells })
}

// ---------------------------------------------------------------------------
// f(k) hypothesis fitting.
// ---------------------------------------------------------------------------

/// One member of the hypothesis family f(k) = (−1)^k·α^k·2^(−βk)·C(2k,k)^γ
/// (plus the constant identity member).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub alternating: bool,
    pub alpha: u32,
    pub beta: u32,
    pub gamma: i32,
}

impl FamilyMember {
    pub fn all() -> Vec<FamilyMember> {
        let mut v = vec![FamilyMember { alternating: false, alpha: 1, beta: 0, gamma: 0 }];
        for alpha in [1u32, 3] {
            for beta in [2u32, 4, 6] {
                for gamma in [-1i32, 0, 1] {
                    v.push(FamilyMember { alternating: true, alpha, beta, gamma });
                }
            }
        }
        v
    }

    /// Exact ratio f(k+1)/f(k).
    pub fn ratio(&self, k: u32) -> BigRational {
        let mut r = BigRational::new(
            BigInt::from(self.alpha),
            BigInt::one() << self.beta,
        );
        if self.alternating {
            r = -r;
        }
        // C(2k+2,k+1)/C(2k,k) = 2(2k+1)/(k+1).
        let central = BigRational::new(BigInt::from(2 * (2 * k + 1)), BigInt::from(k + 1));
        let mut acc = BigRational::one();
        for _ in 0..self.gamma.unsigned_abs() {
            acc *= &central;
        }
        if self.gamma < 0 {
            acc = acc.recip();
        }
        r * acc
    }
}

impl std::fmt::Display for FamilyMember {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if !self.alternating && self.alpha == 1 && self.beta == 0 && self.gamma == 0 {
            return write!(f, "1");
        }
        write!(f, "cos(pi k)")?;
        if self.alpha != 1 {
            write!(f, " · {}^k", self.alpha)?;
        }
        if self.beta != 0 {
            write!(f, " · 2^(-{}k)", self.beta)?;
        }
        match self.gamma {
            0 => {}
            1 => write!(f, " · C(2k,k)")?,
            -1 => write!(f, " / C(2k,k)")?,
            g => write!(f, " · C(2k,k)^{g}")?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    Matched(Vec<FamilyMember>),
    /// No family member matches: report the observed ratios, never guess.
    UnrecognizedRatios(Vec<(u32, String)>),
}

#[derive(Debug, Clone)]
pub struct FitReport {
    /// Empirical f̂(k) = (k=0 constant) / Σ B(n,k)(an+bk+c)w(n).
    pub fhat: Vec<(u32, BigFloat)>,
    pub outcome: FitOutcome,
}

/// Match the empirical values against the family by their consecutive ratios;
/// a member matches when |f̂(k+1)/f̂(k) − ratio(k)| ≤ tol for every k.
pub fn match_ratio_family(fhat: &[(u32, BigFloat)], tol: &BigFloat) -> FitOutcome {
    let mut measured = Vec::new();
    for w in fhat.windows(2) {
        let (k, ref a) = w[0];
        let (k2, ref b) = w[1];
        debug_assert_eq!(k2, k + 1);
        measured.push((k, b.div(a)));
    }
    let mut matches = Vec::new();
    for member in FamilyMember::all() {
        let ok = measured.iter().all(|(k, got)| {
            let want = BigFloat::from_rational(&member.ratio(*k), got.precision());
            got.sub(&want).abs().cmp_value(tol) != std::cmp::Ordering::Greater
        });
        if ok {
            matches.push(member);
        }
    }
    if matches.is_empty() {
        FitOutcome::UnrecognizedRatios(
            measured.into_iter().map(|(k, v)| (k, v.to_decimal(25))).collect(),
        )
    } else {
        FitOutcome::Matched(matches)
    }
}

/// Empirically determine f(k) for the hit cell `(p, q, r)` with fitted
/// prefactor coefficients `(a, b, c)` and test the hypothesis family.
pub fn fit_f_of_k(
    tpl: &SearchTemplate,
    cell: (i32, i32, i32),
    coeffs: (i64, i64, i64),
    k_max: u32,
) -> Result<FitReport, DiscoveryError> {
    let (p, q, r) = cell;
    let (a, b, c) = coeffs;
    let digits = tpl.digits;
    let mut fhat = Vec::new();
    let mut base: Option<BigFloat> = None;
    for k in 0..=k_max {
        let (s0, s1) = cell_sums(tpl, p, q, r, k, digits)?;
        let lin = BigRational::from_integer(BigInt::from(b) * BigInt::from(k) + BigInt::from(c));
        let denom = s1
            .mul_rational(&BigRational::from_integer(a.into()))
            .add(&s0.mul_rational(&lin));
        if denom.is_zero() {
            return Err(DiscoveryError::BadInput(format!("zero normalized sum at k={k}")));
        }
        if base.is_none() {
            base = Some(denom.clone());
        }
        let t0 = base.as_ref().expect("base set").clone();
        fhat.push((k, t0.div(&denom)));
    }
    let tol = detection_threshold(digits, fhat[0].1.precision());
    let outcome = match_ratio_family(&fhat, &tol);
    Ok(FitReport { fhat, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::{exp, oracle_pi, oracle_sqrt3};
    use crate::exact::{int, rat};
    use crate::term::eval_term;

    fn bits(digits: u32) -> u32 {
        (digits as f64 * LOG2_10).ceil() as u32 + 32
    }

    #[test]
    fn round_div_rounds_to_nearest() {
        let d = |a: i64, b: i64| round_div(&BigInt::from(a), &BigInt::from(b));
        assert_eq!(d(7, 2), BigInt::from(4));
        assert_eq!(d(-7, 2), BigInt::from(-4));
        assert_eq!(d(5, 3), BigInt::from(2));
        assert_eq!(d(-5, 3), BigInt::from(-2));
        assert_eq!(d(4, 3), BigInt::from(1));
    }

    #[test]
    fn pslq_finds_golden_ratio_relation() {
        let prec = bits(4 * 60);
        let phi = BigFloat::from_i64(1, prec)
            .add(&BigFloat::from_i64(5, prec).sqrt().unwrap())
            .mul_rational(&rat(1, 2));
        let xs = vec![BigFloat::from_i64(1, prec), phi.clone(), phi.mul(&phi)];
        let rel = pslq(&xs, 16, 60).unwrap().expect("relation exists");
        let want: Vec<BigInt> = [1, 1, -1].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(rel.coeffs, want);
    }

    #[test]
    fn pslq_finds_integer_relation() {
        let prec = bits(4 * 40);
        let xs: Vec<BigFloat> =
            [1i64, 2, 3].iter().map(|&v| BigFloat::from_i64(v, prec)).collect();
        let rel = pslq(&xs, 16, 40).unwrap().expect("relation exists");
        let want: Vec<BigInt> = [1, 1, -1].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(rel.coeffs, want);
    }

    #[test]
    fn pslq_proves_absence_for_pi_and_e() {
        let prec = bits(4 * 60);
        let pi = oracle_pi(prec).unwrap();
        let e = exp(&BigFloat::from_i64(1, prec)).unwrap();
        let xs = vec![BigFloat::from_i64(1, prec), pi, e];
        assert!(pslq(&xs, 20, 60).unwrap().is_none());
    }

    #[test]
    fn pslq_handles_zero_input() {
        let prec = 256;
        let xs = vec![oracle_pi(prec).unwrap(), BigFloat::zero(prec)];
        let rel = pslq(&xs, 10, 30).unwrap().unwrap();
        assert_eq!(rel.coeffs, vec![BigInt::zero(), BigInt::one()]);
        assert!(rel.residual.is_zero());
    }

    #[test]
    fn pslq_recovers_quadratic_minimal_polynomials() {
        // x = (a+√b)/c satisfies c²x² − 2ac·x + (a²−b) = 0.
        let prec = bits(4 * 50);
        let cases = [(1i64, 2i64, 3i64), (2, 7, 1), (3, 10, 4), (5, 13, 2)];
        for (a, bb, c) in cases {
            let x = BigFloat::from_i64(a, prec)
                .add(&BigFloat::from_i64(bb, prec).sqrt().unwrap())
                .mul_rational(&rat(1, c));
            let xs = vec![BigFloat::from_i64(1, prec), x.clone(), x.mul(&x)];
            let rel = pslq(&xs, 24, 50).unwrap().expect("relation exists");
            let want = normalize_coeffs(vec![
                BigInt::from(a * a - bb),
                BigInt::from(-2 * a * c),
                BigInt::from(c * c),
            ]);
            assert_eq!(rel.coeffs, want, "case ({a},{bb},{c})");
        }
    }

    #[test]
    fn cell_term_matches_direct_factors_at_k_zero_and_two() {
        let tpl = SearchTemplate::default();
        // (p,q,r) = (1,0,0) is the worked example's hit; compare against the
        // directly-assembled factor form at a couple of points.
        let direct = HyperTerm::new(
            vec![
                Factor::constpow(2, "-8*n"),
                Factor::constpow(3, "-2*n"),
                Factor::binom("2*n", "n", 1),
                Factor::binom("4*n", "2*n", 1),
                Factor::binom("2*n + 2*k", "n + k", 1),
                Factor::binom("2*n - 1/2", "k", -1),
            ],
            "1",
            "1",
        );
        for k in [0u32, 2] {
            let cell = cell_term(&tpl, 1, 0, 0, k, false);
            for n in 0..6u64 {
                let got = eval_term(&cell, n, &int(0)).unwrap();
                let want = eval_term(&direct, n, &int(i64::from(k))).unwrap();
                assert_eq!(got, want, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn extract_abc_recovers_linear_prefactors() {
        // Synthetic relations mimicking f(k)·((bk+c)·S0 + a·S1) = 2·target
        // for (a,b,c) = (8,2,1) and f(k) = (−1)^k·3^k·C(2k,k)/2^{6k}.
        let f = |k: u32| -> BigRational {
            let m = FamilyMember { alternating: true, alpha: 3, beta: 6, gamma: 1 };
            let mut acc = BigRational::one();
            for j in 0..k {
                acc *= m.ratio(j);
            }
            acc
        };
        let rels: Vec<KRelation> = (0..3u32)
            .map(|k| {
                let fk = f(k);
                let u0 = &fk * BigRational::from_integer((2 * k + 1).into());
                let u1 = &fk * BigRational::from_integer(8.into());
                let den = u0.denom().lcm(u1.denom());
                let coeffs = normalize_coeffs(vec![
                    (&u0 * BigRational::from_integer(den.clone())).to_integer(),
                    (&u1 * BigRational::from_integer(den.clone())).to_integer(),
                    -BigInt::from(2) * den,
                ]);
                KRelation { k, coeffs: coeffs.iter().map(|c| c.to_string()).collect() }
            })
            .collect();
        assert_eq!(extract_abc(&rels).unwrap(), (8, 2, 1));
    }

    #[test]
    fn fit_family_identifies_and_rejects() {
        let prec = 256;
        let member = FamilyMember { alternating: true, alpha: 3, beta: 6, gamma: 1 };
        // Build exact f̂ values for that member.
        let mut vals = Vec::new();
        let mut acc = BigRational::one();
        for k in 0..5u32 {
            vals.push((k, BigFloat::from_rational(&acc, prec)));
            acc *= member.ratio(k);
        }
        let tol = detection_threshold(40, prec);
        match match_ratio_family(&vals, &tol) {
            FitOutcome::Matched(ms) => assert_eq!(ms, vec![member]),
            other => panic!("expected match, got {other:?}"),
        }
        // Constant series matches the identity member.
        let ones: Vec<(u32, BigFloat)> =
            (0..4).map(|k| (k, BigFloat::from_i64(1, prec))).collect();
        match match_ratio_family(&ones, &tol) {
            FitOutcome::Matched(ms) => {
                assert_eq!(ms, vec![FamilyMember { alternating: false, alpha: 1, beta: 0, gamma: 0 }]);
            }
            other => panic!("expected identity match, got {other:?}"),
        }
        // A relative perturbation of 1e−6 breaks every member.
        let noise = BigFloat::from_rational(&rat(1_000_001, 1_000_000), prec);
        let mut perturbed = vals.clone();
        perturbed[2].1 = perturbed[2].1.mul(&noise);
        assert!(matches!(
            match_ratio_family(&perturbed, &tol),
            FitOutcome::UnrecognizedRatios(_)
        ));
    }

    #[test]
    fn template_hash_is_stable_and_sensitive() {
        let tpl = SearchTemplate::default();
        assert_eq!(tpl.hash(), tpl.hash());
        let mut other = tpl.clone();
        other.digits = 80;
        assert_ne!(tpl.hash(), other.hash());
    }

    #[test]
    fn hit_cell_sums_satisfy_the_expected_relation() {
        // Direct numeric check that S0(0) + 8·S1(0) = 2√3/π for the worked
        // example's hit cell, before any PSLQ is involved.
        let tpl = SearchTemplate::default();
        let (s0, s1) = cell_sums(&tpl, 1, 0, 0, 0, 40).unwrap();
        let prec = s0.precision();
        let target = BigFloat::from_i64(2, prec)
            .mul(&oracle_sqrt3(prec).unwrap())
            .div(&oracle_pi(prec).unwrap());
        let lhs = s0.add(&s1.mul_rational(&rat(8, 1)));
        let diff = lhs.sub(&target).abs();
        let tol = BigFloat::from_rational(
            &BigRational::new(BigInt::one(), BigInt::from(10u32).pow(40)),
            prec,
        );
        assert!(diff.cmp_value(&tol) != std::cmp::Ordering::Greater, "{}", diff.to_decimal(6));
    }
}
