//! The builtin formula catalog and its JSON interchange format ("wzt-1").
//!
//! Every entry carries a typed term (factors + rational prefactor), an exact
//! target constant of the shape rational · √surd · π^pi_power · kfactor(k),
//! and optional extras: a certificate (for the five generator/certificate
//! pairs), a companion id linking a pochhammer form to its binomial twin, and
//! per-entry summation budgets.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bigfloat::{
    self, gamma_rational, oracle_pi, oracle_sqrt2, oracle_sqrt3, BigFloat, BigFloatError,
};
use crate::exact::{binomial, int, rat, RationalFunction2};
use crate::term::{eval_term, Factor, HyperTerm, TermError};
use crate::wz::WzPair;

pub const FORMAT_TAG: &str = "wzt-1";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported catalog format {0:?} (expected {FORMAT_TAG:?})")]
    Format(String),
    #[error("validation failed for {id:?}: {reason}")]
    Validation { id: String, reason: String },
    #[error("unknown formula id {0:?}")]
    UnknownId(String),
    #[error("catalog i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Numeric(#[from] BigFloatError),
}

/// Which factor model an entry uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Binom,
    Pochhammer,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Binom => write!(f, "binom"),
            Form::Pochhammer => write!(f, "pochhammer"),
        }
    }
}

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

/// rational · √surd · π^pi_power · ∏ kfactor(k). The kfactor normalizes the
/// right-hand side of k-parametrized identities and must equal 1 at k = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    #[serde(with = "rational_string")]
    pub rational: BigRational,
    pub surd: u32,
    pub pi_power: i32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kfactor: Vec<Factor>,
}

fn default_terms() -> usize {
    200
}

fn default_tolerance() -> u32 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub id: String,
    pub form: Form,
    pub factors: Vec<Factor>,
    pub prefactor: RationalFunction2,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<RationalFunction2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion: Option<String>,
    #[serde(default = "default_terms")]
    pub terms_needed: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance_digits: u32,
    pub provenance: String,
}

fn bf_powi(x: &BigFloat, e: i32, precision: u32) -> BigFloat {
    let mut acc = BigFloat::from_i64(1, precision);
    for _ in 0..e.unsigned_abs() {
        acc = acc.mul(x);
    }
    if e < 0 {
        BigFloat::from_i64(1, precision).div(&acc)
    } else {
        acc
    }
}

/// Value of a k-only factor at rational k, extended through Γ at non-integer
/// binomial lower arguments and non-integer constant-power exponents.
fn kfactor_value(f: &Factor, k: &BigRational, precision: u32) -> Result<BigFloat, CatalogError> {
    let zero = BigRational::zero();
    Ok(match f {
        Factor::Binom { top, bottom, exp } => {
            let x = top.eval(&zero, k);
            let y = bottom.eval(&zero, k);
            let base = if y.is_integer() && !y.is_negative() {
                let m = y.to_integer().try_into().map_err(|_| CatalogError::Validation {
                    id: String::new(),
                    reason: "binomial lower index too large".into(),
                })?;
                BigFloat::from_rational(&binomial(&x, m), precision)
            } else {
                // binom(x, y) = Γ(x+1) / (Γ(y+1) Γ(x−y+1)).
                let a = gamma_rational(&(&x + BigRational::one()), precision)?;
                let b = gamma_rational(&(&y + BigRational::one()), precision)?;
                let c = gamma_rational(&(&x - &y + BigRational::one()), precision)?;
                a.div(&b.mul(&c))
            };
            bf_powi(&base, *exp, precision)
        }
        Factor::ConstPow { base, exp } => {
            let e = exp.eval(&zero, k);
            if e.is_integer() {
                let p = BigFloat::from_i64(*base as i64, precision);
                let v = bf_powi(&p, 1, precision);
                // Integer power of the base with possibly large exponent.
                let ei: i64 = e.to_integer().try_into().map_err(|_| {
                    CatalogError::Validation {
                        id: String::new(),
                        reason: "constant-power exponent too large".into(),
                    }
                })?;
                let mut acc = BigFloat::from_i64(1, precision);
                for _ in 0..ei.unsigned_abs() {
                    acc = acc.mul(&v);
                }
                if ei < 0 {
                    acc = BigFloat::from_i64(1, precision).div(&acc);
                }
                acc
            } else {
                let ln_b = bigfloat::ln(&BigFloat::from_i64(*base as i64, precision))?;
                bigfloat::exp(&ln_b.mul_rational(&e))?
            }
        }
        Factor::SignPow { exp } => {
            let e = exp.eval(&zero, k);
            if !e.is_integer() {
                return Err(CatalogError::Term(TermError::Domain(
                    "sign exponent not an integer in target factor".into(),
                )));
            }
            use num_integer::Integer;
            if e.to_integer().is_odd() {
                BigFloat::from_i64(-1, precision)
            } else {
                BigFloat::from_i64(1, precision)
            }
        }
        // At the conventional n = 0 these are identically 1; validation
        // rejects them in kfactor lists anyway.
        Factor::Poch { .. } | Factor::FactorialPow { .. } => BigFloat::from_i64(1, precision),
    })
}

impl Entry {
    /// The series term t(n, k).
    pub fn term(&self) -> HyperTerm {
        HyperTerm { factors: self.factors.clone(), prefactor: self.prefactor.clone() }
    }

    /// The (G, C) pair when a certificate is attached.
    pub fn pair(&self) -> Option<WzPair> {
        self.certificate
            .as_ref()
            .map(|c| WzPair::new(self.term(), c.clone()))
    }

    /// The kfactor as a k-only term (1 when no kfactor is present).
    pub fn kfactor_term(&self) -> HyperTerm {
        HyperTerm {
            factors: self.target.kfactor.clone(),
            prefactor: RationalFunction2::one(),
        }
    }

    /// Exact kfactor value at integer k.
    pub fn kfactor_exact(&self, k: &BigRational) -> Result<BigRational, TermError> {
        eval_term(&self.kfactor_term(), 0, k)
    }

    /// Numeric target value rational·√surd·π^pi_power·kfactor(k).
    pub fn target_value(&self, k: &BigRational, precision: u32) -> Result<BigFloat, CatalogError> {
        let wp = precision + 32;
        let mut acc =
            constant_value(&self.target.rational, self.target.surd, self.target.pi_power, wp)?;
        for f in &self.target.kfactor {
            acc = acc.mul(&kfactor_value(f, k, wp)?);
        }
        Ok(acc.with_precision(precision))
    }

    /// Tolerance as a float: 10^(−tolerance_digits).
    pub fn tolerance(&self, precision: u32) -> BigFloat {
        let q = BigRational::new(1.into(), num_bigint::BigInt::from(10u32).pow(self.tolerance_digits));
        BigFloat::from_rational(&q, precision)
    }
}

/// rational·√surd·π^pi_power at the requested precision, straight from the
/// constant oracles.
pub fn constant_value(
    rational: &BigRational,
    surd: u32,
    pi_power: i32,
    precision: u32,
) -> Result<BigFloat, CatalogError> {
    let mut acc = BigFloat::from_rational(rational, precision);
    match surd {
        1 => {}
        2 => acc = acc.mul(&oracle_sqrt2(precision)?),
        3 => acc = acc.mul(&oracle_sqrt3(precision)?),
        s => {
            return Err(CatalogError::Validation {
                id: String::new(),
                reason: format!("unsupported surd {s}"),
            })
        }
    }
    match pi_power {
        0 => {}
        -1 => acc = acc.div(&oracle_pi(precision)?),
        -2 => {
            let pi = oracle_pi(precision)?;
            acc = acc.div(&pi).div(&pi);
        }
        p => {
            return Err(CatalogError::Validation {
                id: String::new(),
                reason: format!("unsupported pi power {p}"),
            })
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    format: String,
    entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub entries: Vec<Entry>,
}

impl Catalog {
    pub fn get(&self, id: &str) -> Result<&Entry, CatalogError> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| CatalogError::UnknownId(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile { format: FORMAT_TAG.to_string(), entries: self.entries.clone() };
        let mut s = serde_json::to_string_pretty(&file).expect("catalog serializes");
        s.push('\n');
        s
    }

    pub fn save_path(&self, path: &Path) -> Result<(), CatalogError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Catalog, CatalogError> {
        let file: CatalogFile = serde_json::from_str(text)?;
        if file.format != FORMAT_TAG {
            return Err(CatalogError::Format(file.format));
        }
        let catalog = Catalog { entries: file.entries };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn load_path(path: &Path) -> Result<Catalog, CatalogError> {
        let text = std::fs::read_to_string(path)?;
        Catalog::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let err = |id: &str, reason: String| CatalogError::Validation {
            id: id.to_string(),
            reason,
        };
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.id.is_empty() {
                return Err(err(&e.id, "empty id".into()));
            }
            if !seen.insert(e.id.clone()) {
                return Err(err(&e.id, "duplicate id".into()));
            }
            let has_poch = e
                .factors
                .iter()
                .any(|f| matches!(f, Factor::Poch { .. } | Factor::FactorialPow { .. }));
            match e.form {
                Form::Binom if has_poch => {
                    return Err(err(&e.id, "binom entry carries pochhammer factors".into()))
                }
                Form::Pochhammer if !has_poch => {
                    return Err(err(&e.id, "pochhammer entry has no pochhammer factor".into()))
                }
                _ => {}
            }
            for f in e.factors.iter().chain(&e.target.kfactor) {
                if let Factor::Binom { bottom, .. } = f {
                    if bottom.coeff_n.is_zero()
                        && bottom.coeff_k.is_zero()
                        && bottom.constant.is_negative()
                    {
                        return Err(err(
                            &e.id,
                            format!("binomial lower index {bottom} is a negative constant"),
                        ));
                    }
                }
                if let Factor::ConstPow { base, .. } = f {
                    if *base == 0 {
                        return Err(err(&e.id, "constant power with base 0".into()));
                    }
                }
            }
            for f in &e.target.kfactor {
                let k_only = match f {
                    Factor::Binom { top, bottom, .. } => {
                        top.coeff_n.is_zero() && bottom.coeff_n.is_zero()
                    }
                    Factor::ConstPow { exp, .. } | Factor::SignPow { exp } => exp.coeff_n.is_zero(),
                    Factor::Poch { .. } | Factor::FactorialPow { .. } => false,
                };
                if !k_only {
                    return Err(err(&e.id, "kfactor must involve k only".into()));
                }
            }
            let kf0 = e
                .kfactor_exact(&BigRational::zero())
                .map_err(|te| err(&e.id, format!("kfactor not evaluable at k = 0: {te}")))?;
            if !kf0.is_one() {
                return Err(err(&e.id, format!("kfactor(0) = {kf0}, expected 1")));
            }
            if !matches!(e.target.surd, 1..=3) {
                return Err(err(&e.id, format!("unsupported surd {}", e.target.surd)));
            }
            if !matches!(e.target.pi_power, -2..=0) {
                return Err(err(&e.id, format!("unsupported pi power {}", e.target.pi_power)));
            }
            if e.terms_needed == 0 || e.tolerance_digits == 0 {
                return Err(err(&e.id, "zero summation budget".into()));
            }
            if e.certificate.is_some() && e.form != Form::Binom {
                return Err(err(&e.id, "certificate on a non-binom entry".into()));
            }
        }
        for e in &self.entries {
            if let Some(c) = &e.companion {
                if !self.entries.iter().any(|o| &o.id == c) {
                    return Err(err(&e.id, format!("companion {c:?} not in catalog")));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Builtin entries.
// ---------------------------------------------------------------------------

struct Builder {
    e: Entry,
}

fn entry(id: &str, form: Form, factors: Vec<Factor>, num: &str, den: &str, prov: &str) -> Builder {
    Builder {
        e: Entry {
            id: id.to_string(),
            form,
            factors,
            prefactor: RationalFunction2::new(
                num.parse().expect("prefactor numerator parses"),
                den.parse().expect("prefactor denominator parses"),
            ),
            target: Target {
                rational: BigRational::one(),
                surd: 1,
                pi_power: 0,
                kfactor: Vec::new(),
            },
            certificate: None,
            companion: None,
            terms_needed: default_terms(),
            tolerance_digits: default_tolerance(),
            provenance: prov.to_string(),
        },
    }
}

impl Builder {
    fn target(mut self, rational: BigRational, surd: u32, pi_power: i32) -> Self {
        self.e.target.rational = rational;
        self.e.target.surd = surd;
        self.e.target.pi_power = pi_power;
        self
    }

    fn kf(mut self, kfactor: Vec<Factor>) -> Self {
        self.e.target.kfactor = kfactor;
        self
    }

    fn cert(mut self, num: &str, den_factors: &[&str]) -> Self {
        let mut den = crate::exact::Poly2::one();
        for f in den_factors {
            den = den.mul(&f.parse().expect("certificate factor parses"));
        }
        self.e.certificate =
            Some(RationalFunction2::new(num.parse().expect("certificate numerator parses"), den));
        self
    }

    fn comp(mut self, id: &str) -> Self {
        self.e.companion = Some(id.to_string());
        self
    }

    fn terms(mut self, t: usize) -> Self {
        self.e.terms_needed = t;
        self
    }

    fn done(self) -> Entry {
        self.e
    }
}

fn kf_pow2_over_central(two_exp: &str, central_exp: i32) -> Vec<Factor> {
    vec![Factor::constpow(2, two_exp), Factor::binom("2*k", "k", central_exp)]
}

fn kf_pow2_third() -> Vec<Factor> {
    vec![
        Factor::constpow(2, "4*k"),
        Factor::constpow(3, "-k"),
        Factor::binom("2*k", "k", -1),
    ]
}

/// The builtin catalog: five generator/certificate pairs, the two-column
/// constant table they telescope into, the k-parametrized families (binomial
/// and pochhammer forms), and the stand-alone 1/π² series.
pub fn builtin() -> Catalog {
    use Factor as F;
    let b = |t: &str, bo: &str, e: i32| F::binom(t, bo, e);
    let cp = |base: u32, e: &str| F::constpow(base, e);
    let sp = |e: &str| F::signpow(e);
    let ph = |a: &str, e: i32| F::poch(a, e);
    let fp = |e: i32| F::factorialpow(e);

    let entries = vec![
        // -- Generator/certificate pairs ------------------------------------
        entry(
            "t1.r1",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-6*n - 4*k"),
                b("2*n", "n", 3),
                b("2*k", "k", 2),
                b("n - 1/2", "k", -1),
                b("n + k", "n", -1),
            ],
            "4*n + 1",
            "1",
            "t1",
        )
        .target(int(2), 1, -1)
        .cert("4*n^2", &["4*n + 1", "2*n - 2*k - 1"])
        .terms(300)
        .done(),
        entry(
            "t1.r2",
            Form::Binom,
            vec![
                sp("k"),
                cp(2, "-8*n - 4*k"),
                b("2*n", "n", 2),
                b("2*k", "k", 1),
                b("2*n + 2*k", "n + k", 1),
                b("n - 1/2", "k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
            "t1",
        )
        .target(int(4), 1, -1)
        .cert("16*n^2", &["6*n + 2*k + 1", "2*n - 2*k - 1"])
        .done(),
        entry(
            "t1.r3",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-9*n - 5*k"),
                b("2*n", "n", 1),
                b("n + k", "n", 1),
                b("2*n + 2*k", "n + k", 2),
                b("n - 1/2", "k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
            "t1",
        )
        .target(int(2), 2, -1)
        .cert("16*n^2", &["6*n + 2*k + 1", "2*n - 2*k - 1"])
        .done(),
        entry(
            "t1.r4",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-10*n - 4*k"),
                b("2*n", "n", 2),
                b("2*k", "k", 2),
                b("4*n", "2*n", 1),
                b("2*n - 1/2", "k", -1),
                b("n + k", "n", -1),
            ],
            "20*n + 2*k + 3",
            "1",
            "t1",
        )
        .target(int(8), 1, -1)
        .cert("64*n^2", &["20*n + 2*k + 3", "4*n - 2*k - 1"])
        .done(),
        entry(
            "t1.r5",
            Form::Binom,
            vec![
                sp("k"),
                cp(3, "k - 2*n"),
                cp(2, "-8*n - 6*k"),
                b("2*n", "n", 1),
                b("4*n", "2*n", 1),
                b("2*k", "k", 1),
                b("2*n + 2*k", "n + k", 1),
                b("2*n - 1/2", "k", -1),
            ],
            "8*n + 2*k + 1",
            "1",
            "t1",
        )
        .target(int(2), 3, -1)
        .cert("36*n^2", &["8*n + 2*k + 1", "4*n - 2*k - 1"])
        .done(),
        // -- Constant table, left and right columns -------------------------
        entry(
            "t2.r1.g1",
            Form::Binom,
            vec![sp("n"), cp(2, "-6*n"), b("2*n", "n", 3)],
            "4*n + 1",
            "1",
            "t2",
        )
        .target(int(2), 1, -1)
        .terms(300)
        .done(),
        entry(
            "t2.r1.g2",
            Form::Binom,
            vec![cp(2, "-8*n"), b("2*n", "n", 3)],
            "6*n + 1",
            "1",
            "t2",
        )
        .target(int(4), 1, -1)
        .done(),
        entry(
            "t2.r2.g1",
            Form::Binom,
            vec![cp(2, "-8*n"), b("2*n", "n", 3)],
            "6*n + 1",
            "1",
            "t2",
        )
        .target(int(4), 1, -1)
        .done(),
        entry(
            "t2.r2.g2",
            Form::Binom,
            vec![sp("n"), cp(2, "-10*n"), b("4*n", "2*n", 1), b("2*n", "n", 2)],
            "20*n + 3",
            "1",
            "t2",
        )
        .target(int(8), 1, -1)
        .done(),
        entry(
            "t2.r3.g1",
            Form::Binom,
            vec![sp("n"), cp(2, "-9*n"), b("2*n", "n", 3)],
            "6*n + 1",
            "1",
            "t2",
        )
        .target(int(2), 2, -1)
        .done(),
        entry(
            "t2.r3.g2",
            Form::Binom,
            vec![cp(2, "-12*n"), b("4*n", "2*n", 2), b("2*n", "n", 1)],
            "48*n^2 + 32*n + 3",
            "2*n + 1",
            "t2",
        )
        .target(int(8), 2, -1)
        .done(),
        entry(
            "t2.r4.g1",
            Form::Binom,
            vec![sp("n"), cp(2, "-10*n"), b("4*n", "2*n", 1), b("2*n", "n", 2)],
            "20*n + 3",
            "1",
            "t2",
        )
        .target(int(8), 1, -1)
        .done(),
        entry(
            "t2.r4.g2",
            Form::Binom,
            vec![cp(2, "-12*n"), b("2*n", "n", 3)],
            "42*n + 5",
            "1",
            "t2",
        )
        .target(int(16), 1, -1)
        .done(),
        entry(
            "t2.r5.g1",
            Form::Binom,
            vec![cp(2, "-8*n"), cp(3, "-2*n"), b("4*n", "2*n", 1), b("2*n", "n", 2)],
            "8*n + 1",
            "1",
            "t2",
        )
        .target(int(2), 3, -1)
        .done(),
        entry(
            "t2.r5.g2",
            Form::Binom,
            vec![sp("n"), cp(2, "-12*n"), cp(3, "-n"), b("4*n", "2*n", 1), b("2*n", "n", 2)],
            "28*n + 3",
            "1",
            "t2",
        )
        .target(rat(16, 3), 3, -1)
        .done(),
        // -- First group of k-generators ------------------------------------
        entry(
            "fg.1",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-6*n - 4*k"),
                b("2*n", "n", 3),
                b("2*k", "k", 2),
                b("n - 1/2", "k", -1),
                b("n + k", "n", -1),
            ],
            "4*n + 1",
            "1",
            "fg",
        )
        .target(int(2), 1, -1)
        .terms(300)
        .done(),
        entry(
            "fg.2",
            Form::Binom,
            vec![
                sp("k"),
                cp(2, "-8*n - 4*k"),
                b("2*n", "n", 2),
                b("2*k", "k", 1),
                b("2*n + 2*k", "n + k", 1),
                b("n - 1/2", "k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
            "fg",
        )
        .target(int(4), 1, -1)
        .done(),
        entry(
            "fg.3",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-9*n - 5*k"),
                b("2*n", "n", 1),
                b("n + k", "n", 1),
                b("2*n + 2*k", "n + k", 2),
                b("n - 1/2", "k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
            "fg",
        )
        .target(int(2), 2, -1)
        .done(),
        entry(
            "fg.4",
            Form::Binom,
            vec![
                sp("k"),
                cp(2, "-12*n - 4*k"),
                b("2*n", "n", 2),
                b("2*n + 2*k", "n + k", 2),
                b("n + k", "n", 1),
                b("n - 1/2", "k", -1),
                b("2*n + k", "n", -1),
            ],
            "84*n^2 + 56*n*k + 52*n + 4*k^2 + 12*k + 5",
            "2*n + k + 1",
            "fg",
        )
        .target(int(16), 1, -1)
        .done(),
        // -- Second group ----------------------------------------------------
        entry(
            "sg.1",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-10*n - 4*k"),
                b("2*n", "n", 2),
                b("2*k", "k", 2),
                b("4*n", "2*n", 1),
                b("2*n - 1/2", "k", -1),
                b("n + k", "n", -1),
            ],
            "20*n + 2*k + 3",
            "1",
            "sg",
        )
        .target(int(8), 1, -1)
        .done(),
        entry(
            "sg.2",
            Form::Binom,
            vec![
                sp("k"),
                cp(3, "k - 2*n"),
                cp(2, "-8*n - 6*k"),
                b("2*n", "n", 1),
                b("4*n", "2*n", 1),
                b("2*k", "k", 1),
                b("2*n + 2*k", "n + k", 1),
                b("2*n - 1/2", "k", -1),
            ],
            "8*n + 2*k + 1",
            "1",
            "sg",
        )
        .target(int(2), 3, -1)
        .done(),
        entry(
            "sg.3",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(3, "k - n"),
                cp(2, "-12*n - 6*k"),
                b("2*n", "n", 1),
                b("2*n + 2*k", "n + k", 1),
                b("4*n + 2*k", "2*n + k", 1),
                b("n + k", "n", 1),
                b("n - 1/2", "k", -1),
            ],
            "56*n^2 + 36*n*k + 34*n + 4*k^2 + 8*k + 3",
            "2*n + k + 1",
            "sg",
        )
        .target(rat(16, 3), 3, -1)
        .done(),
        // -- Quadratic-prefactor generators for 1/π² -------------------------
        entry(
            "nk.8",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-12*n - 6*k"),
                b("2*n", "n", 4),
                b("2*n + 2*k", "n + k", 1),
                b("2*k", "k", 2),
                b("n - 1/2", "k", -1),
                b("n + k", "n", -1),
            ],
            "20*n^2 + 12*n*k + 8*n + 2*k + 1",
            "1",
            "nk",
        )
        .target(int(8), 1, -2)
        .done(),
        entry(
            "nk.32",
            Form::Binom,
            vec![
                sp("k"),
                cp(2, "-16*n - 6*k"),
                b("2*n", "n", 4),
                b("4*n", "2*n", 1),
                b("2*k", "k", 3),
                b("2*n - 1/2", "k", -1),
                b("n + k", "n", -2),
            ],
            "120*n^2 + 84*n*k + 34*n + 10*k + 3",
            "1",
            "nk",
        )
        .target(int(32), 1, -2)
        .done(),
        entry(
            "nk.128",
            Form::Binom,
            vec![
                sp("n + k"),
                cp(2, "-20*n - 6*k"),
                b("2*n", "n", 4),
                b("2*n + 2*k", "n + k", 3),
                b("n + k", "n", 1),
                b("n - 1/2", "k", -1),
                b("2*n + k", "n", -2),
            ],
            "3280*n^4 + 4592*n^3*k + 4000*n^3 + 2160*n^2*k^2 + 3816*n^2*k + 1592*n^2 \
             + 336*n*k^3 + 1008*n*k^2 + 884*n*k + 232*n + 40*k^3 + 92*k^2 + 62*k + 13",
            "4*n^2 + 4*n*k + 4*n + k^2 + 2*k + 1",
            "nk",
        )
        .target(int(128), 1, -2)
        .done(),
        // -- Stand-alone 1/π² series -----------------------------------------
        entry(
            "pi2.20",
            Form::Binom,
            vec![sp("n"), cp(2, "-12*n"), b("2*n", "n", 5)],
            "20*n^2 + 8*n + 1",
            "1",
            "pi2",
        )
        .target(int(8), 1, -2)
        .done(),
        entry(
            "pi2.120",
            Form::Binom,
            vec![cp(2, "-16*n"), b("2*n", "n", 4), b("4*n", "2*n", 1)],
            "120*n^2 + 34*n + 3",
            "1",
            "pi2",
        )
        .target(int(32), 1, -2)
        .done(),
        entry(
            "pi2.820",
            Form::Binom,
            vec![sp("n"), cp(2, "-20*n"), b("2*n", "n", 5)],
            "820*n^2 + 180*n + 13",
            "1",
            "pi2",
        )
        .target(int(128), 1, -2)
        .terms(60)
        .done(),
        // -- Further generators without the cosine factor ---------------------
        entry(
            "more.1",
            Form::Binom,
            vec![cp(2, "-8*n - 4*k"), b("2*n", "n", 3), b("2*k", "k", 2), b("n + k", "n", -2)],
            "6*n + 4*k + 1",
            "1",
            "more",
        )
        .target(int(4), 1, -1)
        .done(),
        entry(
            "more.2",
            Form::Binom,
            vec![
                sp("n"),
                cp(2, "-6*n - 4*k"),
                b("2*n", "n", 2),
                b("2*n + 2*k", "n + k", 1),
                b("2*k", "k", 1),
                b("n + k", "n", -1),
            ],
            "4*n + 2*k + 1",
            "1",
            "more",
        )
        .target(int(2), 1, -1)
        .terms(300)
        .done(),
        entry(
            "more.3",
            Form::Binom,
            vec![
                sp("n"),
                cp(2, "-12*n - 8*k"),
                b("2*n", "n", 5),
                b("2*k", "k", 4),
                b("n + k", "n", -4),
            ],
            "20*n^2 + 24*n*k + 8*n + 8*k^2 + 4*k + 1",
            "1",
            "more",
        )
        .target(int(8), 1, -2)
        .done(),
        // -- Pochhammer (rate-of-convergence) forms ---------------------------
        entry(
            "rc.1",
            Form::Pochhammer,
            vec![
                cp(2, "-2*n"),
                ph("1/2", 1),
                ph("1/2 - k", 1),
                ph("1/2 + k", 1),
                fp(-2),
                ph("1 + k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
            "rc",
        )
        .target(int(4), 1, -1)
        .kf(kf_pow2_over_central("2*k", -1))
        .comp("fg.2")
        .done(),
        entry(
            "rc.2",
            Form::Pochhammer,
            vec![
                sp("n"),
                cp(2, "-3*n"),
                ph("1/2 - k", 1),
                ph("1/2 + k", 2),
                fp(-2),
                ph("1 + k", -1),
            ],
            "6*n + 2*k + 1",
            "1",
            "rc",
        )
        .target(int(2), 2, -1)
        .kf(kf_pow2_over_central("3*k", -1))
        .comp("fg.3")
        .done(),
        entry(
            "rc.3",
            Form::Pochhammer,
            vec![
                cp(2, "-6*n"),
                ph("1/2", 1),
                ph("1/2 - k", 1),
                ph("1/2 + k", 2),
                fp(-2),
                ph("1 + 1/2*k", -1),
                ph("1/2 + 1/2*k", -1),
            ],
            "84*n^2 + 56*n*k + 52*n + 4*k^2 + 12*k + 5",
            "2*n + k + 1",
            "rc",
        )
        .target(int(16), 1, -1)
        .kf(kf_pow2_over_central("2*k", -1))
        .comp("fg.4")
        .done(),
        entry(
            "rc.4",
            Form::Pochhammer,
            vec![
                sp("n"),
                cp(2, "-2*n"),
                ph("1/2", 1),
                ph("1/4 - 1/2*k", 1),
                ph("3/4 - 1/2*k", 1),
                fp(-2),
                ph("1 + k", -1),
            ],
            "20*n + 2*k + 3",
            "1",
            "rc",
        )
        .target(int(8), 1, -1)
        .kf(kf_pow2_over_central("2*k", -1))
        .comp("sg.1")
        .done(),
        entry(
            "rc.5",
            Form::Pochhammer,
            vec![
                cp(3, "-2*n"),
                ph("1/2 + k", 1),
                ph("1/4 - 1/2*k", 1),
                ph("3/4 - 1/2*k", 1),
                fp(-2),
                ph("1 + k", -1),
            ],
            "8*n + 2*k + 1",
            "1",
            "rc",
        )
        .target(int(2), 3, -1)
        .kf(kf_pow2_third())
        .comp("sg.2")
        .done(),
        entry(
            "rc.6",
            Form::Pochhammer,
            vec![
                sp("n"),
                cp(2, "-4*n"),
                cp(3, "-n"),
                ph("1/2 - k", 1),
                ph("1/4 + 1/2*k", 1),
                ph("3/4 + 1/2*k", 1),
                ph("1/2 + k", 1),
                fp(-2),
                ph("1 + 1/2*k", -1),
                ph("1/2 + 1/2*k", -1),
            ],
            "56*n^2 + 36*n*k + 34*n + 4*k^2 + 8*k + 3",
            "2*n + k + 1",
            "rc",
        )
        .target(rat(16, 3), 3, -1)
        .kf(kf_pow2_third())
        .comp("sg.3")
        .done(),
        entry(
            "rc.5f4.8",
            Form::Pochhammer,
            vec![
                sp("n"),
                cp(2, "-2*n"),
                ph("1/2", 3),
                ph("1/2 - k", 1),
                ph("1/2 + k", 1),
                fp(-3),
                ph("1 + k", -2),
            ],
            "20*n^2 + 12*n*k + 8*n + 2*k + 1",
            "1",
            "rc",
        )
        .target(int(8), 1, -2)
        .kf(kf_pow2_over_central("4*k", -2))
        .comp("nk.8")
        .done(),
        entry(
            "rc.5f4.32",
            Form::Pochhammer,
            vec![
                cp(2, "-4*n"),
                ph("1/2", 3),
                ph("1/4 - 1/2*k", 1),
                ph("3/4 - 1/2*k", 1),
                fp(-3),
                ph("1 + k", -2),
            ],
            "120*n^2 + 84*n*k + 34*n + 10*k + 3",
            "1",
            "rc",
        )
        .target(int(32), 1, -2)
        .kf(kf_pow2_over_central("4*k", -2))
        .comp("nk.32")
        .done(),
        entry(
            "rc.32s2",
            Form::Pochhammer,
            vec![
                sp("n"),
                cp(3, "3*n"),
                cp(2, "-9*n"),
                ph("1/2 - k", 1),
                ph("1/6 + 1/3*k", 1),
                ph("5/6 + 1/3*k", 1),
                ph("1/2 + k", 1),
                ph("1/2 + 1/3*k", 1),
                fp(-2),
                ph("1 + 1/2*k", -1),
                ph("1/2 + 1/2*k", -1),
                ph("1/2", -1),
            ],
            "616*n^3 + 440*n^2*k + 676*n^2 + 88*n*k^2 + 312*n*k + 214*n + 8*k^3 \
             + 36*k^2 + 46*k + 15",
            "4*n^2 + 2*n*k + 4*n + k + 1",
            "rc",
        )
        .target(int(32), 2, -1)
        .kf(kf_pow2_over_central("3*k", -1))
        .done(),
    ];
    Catalog { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis;
    use crate::exact::ratfun_eval;

    #[test]
    fn builtin_validates_and_has_pinned_ids() {
        let c = builtin();
        c.validate().unwrap();
        assert_eq!(c.entries.len(), 40);
        for id in [
            "t1.r1", "t1.r5", "t2.r1.g1", "t2.r5.g2", "fg.1", "fg.4", "sg.3", "nk.128",
            "pi2.820", "more.3", "rc.1", "rc.5f4.32", "rc.32s2",
        ] {
            assert!(c.get(id).is_ok(), "missing {id}");
        }
        assert!(matches!(c.get("bogus.id"), Err(CatalogError::UnknownId(_))));
        // All five pair rows carry certificates; nothing else does.
        let with_cert: Vec<&str> = c
            .entries
            .iter()
            .filter(|e| e.certificate.is_some())
            .map(|e| e.id.as_str())
            .collect();
        assert_eq!(with_cert, ["t1.r1", "t1.r2", "t1.r3", "t1.r4", "t1.r5"]);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let c = builtin();
        let s1 = c.to_json();
        let c2 = Catalog::from_json(&s1).unwrap();
        assert_eq!(c, c2);
        let s2 = c2.to_json();
        assert_eq!(s1, s2);
    }

    #[test]
    fn unknown_fields_are_rejected_with_position() {
        let text = r#"{
  "format": "wzt-1",
  "entries": [
    {
      "id": "x",
      "form": "binom",
      "factors": [],
      "prefactor": {"num": "1", "den": "1"},
      "target": {"rational": "1", "surd": 1, "pi_power": 0},
      "bogus": true,
      "provenance": "t1"
    }
  ]
}"#;
        let err = Catalog::from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn bad_format_tag_is_rejected() {
        let err = Catalog::from_json(r#"{"format": "wzt-0", "entries": []}"#).unwrap_err();
        assert!(matches!(err, CatalogError::Format(_)));
    }

    #[test]
    fn kfactor_must_be_one_at_zero() {
        let mut c = builtin();
        c.entries[0].target.kfactor = vec![Factor::constpow(2, "k + 1")];
        let err = c.validate().unwrap_err();
        assert!(matches!(err, CatalogError::Validation { .. }), "{err}");
    }

    #[test]
    fn negative_constant_binom_bottom_is_rejected() {
        let mut c = builtin();
        c.entries[0].factors.push(Factor::binom("2*n", "-3", 1));
        assert!(matches!(c.validate(), Err(CatalogError::Validation { .. })));
    }

    #[test]
    fn point_values_match_hand_computations() {
        let c = builtin();
        let at = |id: &str, n: u64, k: i64| {
            eval_term(&c.get(id).unwrap().term(), n, &int(k)).unwrap()
        };
        assert_eq!(at("t1.r1", 0, 0), int(1));
        assert_eq!(at("t1.r1", 1, 0), rat(-5, 8));
        assert_eq!(at("t1.r4", 0, 0), int(3));
        assert_eq!(at("t1.r5", 1, 0), rat(3, 32));
        assert_eq!(at("nk.128", 0, 0), int(13));
        assert_eq!(at("rc.32s2", 0, 0), int(15));
        assert_eq!(at("rc.1", 1, 0), rat(7, 32));
        assert_eq!(at("rc.5f4.8", 1, 0), rat(-29, 128));
    }

    /// Frozen limits of t(n+1,k)/t(n,k) at k = 0, derived independently from
    /// the factor growth rates. A transcription slip in any exponent or weight
    /// would show up here immediately.
    #[test]
    fn ratio_limits_at_k_zero_are_frozen() {
        let expected: &[(&str, i64, i64)] = &[
            ("t1.r1", -1, 1),
            ("t1.r2", 1, 4),
            ("t1.r3", -1, 8),
            ("t1.r4", -1, 4),
            ("t1.r5", 1, 9),
            ("t2.r1.g1", -1, 1),
            ("t2.r1.g2", 1, 4),
            ("t2.r2.g1", 1, 4),
            ("t2.r2.g2", -1, 4),
            ("t2.r3.g1", -1, 8),
            ("t2.r3.g2", 1, 4),
            ("t2.r4.g1", -1, 4),
            ("t2.r4.g2", 1, 64),
            ("t2.r5.g1", 1, 9),
            ("t2.r5.g2", -1, 48),
            ("fg.1", -1, 1),
            ("fg.2", 1, 4),
            ("fg.3", -1, 8),
            ("fg.4", 1, 64),
            ("sg.1", -1, 4),
            ("sg.2", 1, 9),
            ("sg.3", -1, 48),
            ("nk.8", -1, 4),
            ("nk.32", 1, 16),
            ("nk.128", -1, 1024),
            ("pi2.20", -1, 4),
            ("pi2.120", 1, 16),
            ("pi2.820", -1, 1024),
            ("more.1", 1, 4),
            ("more.2", -1, 1),
            ("more.3", -1, 4),
            ("rc.1", 1, 4),
            ("rc.2", -1, 8),
            ("rc.3", 1, 64),
            ("rc.4", -1, 4),
            ("rc.5", 1, 9),
            ("rc.6", -1, 48),
            ("rc.5f4.8", -1, 4),
            ("rc.5f4.32", 1, 16),
            ("rc.32s2", -27, 512),
        ];
        let c = builtin();
        assert_eq!(expected.len(), c.entries.len());
        for &(id, num, den) in expected {
            let t = c.get(id).unwrap().term();
            let l = analysis::ratio_limit(&t, &int(0)).unwrap();
            assert_eq!(l, rat(num, den), "{id}");
        }
    }

    #[test]
    fn every_entry_sums_to_its_target_at_k_zero_coarsely() {
        // Fast 12-digit gate across the whole catalog; the acceptance suite
        // repeats this at 30 digits over k = 0..3.
        let c = builtin();
        let prec = 160;
        let eps = BigFloat::from_rational(
            &BigRational::new(1.into(), num_bigint::BigInt::from(10u64).pow(12)),
            prec,
        );
        for e in &c.entries {
            let sum = analysis::sum_auto(&e.term(), &BigRational::zero(), &eps, prec, 4000)
                .unwrap_or_else(|err| panic!("{}: {err}", e.id));
            let target = e.target_value(&BigRational::zero(), prec).unwrap();
            let diff = sum.value.sub(&target).abs();
            let budget = eps.mul_pow2(2);
            assert!(
                diff.cmp_value(&budget) != std::cmp::Ordering::Greater,
                "{}: diff {}",
                e.id,
                diff.to_decimal(6)
            );
        }
    }

    #[test]
    fn companion_terms_match_through_kfactor() {
        // poch(n, k) = binom(n, k) · kfactor(k) exactly, term by term.
        let c = builtin();
        for e in &c.entries {
            let Some(comp) = &e.companion else { continue };
            let twin = c.get(comp).unwrap().term();
            let mine = e.term();
            for k in 0..4i64 {
                let kf = e.kfactor_exact(&int(k)).unwrap();
                for n in 0..6u64 {
                    let lhs = eval_term(&mine, n, &int(k)).unwrap();
                    let rhs = eval_term(&twin, n, &int(k)).unwrap() * &kf;
                    assert_eq!(lhs, rhs, "{} vs {comp} at ({n}, {k})", e.id);
                }
            }
        }
    }

    #[test]
    fn target_values_at_half_k_use_gamma() {
        // binom(2k,k) at k = 1/2 is 4/π, so rc.1's target at k = 1/2 is
        // (4/π)·2/(4/π) = 2.
        let c = builtin();
        let prec = 192;
        let v = c.get("rc.1").unwrap().target_value(&rat(1, 2), prec).unwrap();
        let two = BigFloat::from_i64(2, prec);
        let diff = v.sub(&two).abs();
        assert!(diff.abs_le_pow2(-150), "rc.1 target(1/2) = {}", v.to_decimal(30));
    }

    #[test]
    fn certificates_evaluate_like_their_display_form() {
        let c = builtin();
        let e = c.get("t1.r1").unwrap();
        let cert = e.certificate.as_ref().unwrap();
        // 4n²/((4n+1)(2n−2k−1)) at (2, 0) = 16/(9·3).
        assert_eq!(ratfun_eval(cert, &int(2), &int(0)).unwrap(), rat(16, 27));
    }
}
