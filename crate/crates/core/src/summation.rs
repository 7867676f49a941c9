//! Numeric regularization methods: classical, Cesaro `C_k` and Abel.
//!
//! This engine shares nothing with the closed-form reduction in
//! [`crate::regularize`] beyond the term sequences themselves, which is what
//! makes it usable as an oracle for that module.
//!
//! Cesaro sums are computed on exact iterated partial sums and only the final
//! ratio `sigma^{k+1}[a](n) / binom(n+k, k)` is rounded to `f64`. Abel sums
//! evaluate `sum a_n t^n` in floating point at a schedule of `t -> 1^-` and
//! extrapolate polynomially in `1 - t`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{binomial, factorial, format_rational, int, to_f64, ParseError, Rational};

pub const DEFAULT_TERMS: usize = 4000;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_K_MAX: usize = 10;
/// Upper bound on the Cesaro order tried by [`cesaro_auto`].
pub const MAX_CESARO_ORDER: usize = 12;

#[derive(Debug, Error, Clone)]
pub enum SummationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series not summable by {} within budget (residual {:.3e})", .0.method_used, .0.residual)]
    NotSummable(Box<ConvergenceReport>),
    #[error("invalid series literal: {0}")]
    Parse(#[from] ParseError),
    #[error("cannot read table file {path}: {msg}")]
    Table { path: String, msg: String },
}

/// A closed-form value: exact when rational, otherwise a float (e.g. `log 2`).
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Rational(Rational),
    Real(f64),
}

impl ClosedForm {
    pub fn to_f64(&self) -> f64 {
        match self {
            ClosedForm::Rational(q) => to_f64(q),
            ClosedForm::Real(x) => *x,
        }
    }
}

pub type TermFn = Arc<dyn Fn(usize) -> Rational + Send + Sync>;
pub type BatchFn = Arc<dyn Fn(usize) -> Vec<Rational> + Send + Sync>;
pub type FloatTermFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;
/// `(k, c, method) -> f^(k)(c)_mu` when a closed form is known.
pub type RegDerivFn = Arc<dyn Fn(usize, &Rational, &SummationMethod) -> Option<ClosedForm> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesKind {
    /// `a_n = (-1)^n`, the coefficients of `1/(1+t)`.
    AltGeometric,
    /// `a_0 = 0`, `a_n = (-1)^{n+1}/n`, the coefficients of `log(1+t)`.
    AltLog,
    /// `a_n = r^n`.
    Geometric(Rational),
    /// Finite table, zero past its end.
    Table(Vec<Rational>),
    Custom(String),
}

/// A coefficient sequence `n -> a_n`, read either as the terms of a series
/// `sum a_n` or as the Taylor coefficients of `f(t) = sum a_n t^n`.
#[derive(Clone)]
pub struct SeriesSpec {
    kind: SeriesKind,
    term: TermFn,
    batch: Option<BatchFn>,
    term_f64: Option<FloatTermFn>,
    exact_reg_deriv: Option<RegDerivFn>,
    support: Option<usize>,
}

impl fmt::Debug for SeriesSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeriesSpec")
            .field("kind", &self.kind)
            .field("closed_form", &self.exact_reg_deriv.is_some())
            .finish()
    }
}

fn sign(n: usize) -> i64 {
    if n % 2 == 0 {
        1
    } else {
        -1
    }
}

fn is_cesaro_or_abel(method: &SummationMethod) -> bool {
    matches!(method.tag, MethodTag::Cesaro(_) | MethodTag::Abel)
}

impl SeriesSpec {
    pub fn custom(name: impl Into<String>, term: impl Fn(usize) -> Rational + Send + Sync + 'static) -> Self {
        SeriesSpec {
            kind: SeriesKind::Custom(name.into()),
            term: Arc::new(term),
            batch: None,
            term_f64: None,
            exact_reg_deriv: None,
            support: None,
        }
    }

    /// `a_n = (-1)^n`. At `c = 1` its Cesaro/Abel derivatives are
    /// `f^(k)(1) = (-1)^k k! / 2^{k+1}`.
    pub fn alt_geometric() -> Self {
        SeriesSpec {
            kind: SeriesKind::AltGeometric,
            term: Arc::new(|n| int(sign(n))),
            batch: None,
            term_f64: Some(Arc::new(|n| sign(n) as f64)),
            exact_reg_deriv: Some(Arc::new(|k, c, method| {
                (c.is_one() && is_cesaro_or_abel(method)).then(|| {
                    ClosedForm::Rational(
                        int(sign(k)) * Rational::new(factorial(k), BigInt::one() << (k + 1)),
                    )
                })
            })),
            support: None,
        }
    }

    /// `a_n = (-1)^{n+1}/n` for `n >= 1`. At `c = 1` its regularized
    /// derivatives are those of `log(2 + r)` at `r = 0`: `log 2` for `k = 0`,
    /// then `(-1)^{k-1} (k-1)! / 2^k`.
    pub fn alt_log() -> Self {
        SeriesSpec {
            kind: SeriesKind::AltLog,
            term: Arc::new(|n| {
                if n == 0 {
                    Rational::zero()
                } else {
                    Rational::new(BigInt::from(-sign(n)), BigInt::from(n))
                }
            }),
            batch: None,
            term_f64: Some(Arc::new(|n| if n == 0 { 0.0 } else { -sign(n) as f64 / n as f64 })),
            exact_reg_deriv: Some(Arc::new(|k, c, method| {
                if !c.is_one() {
                    return None;
                }
                match k {
                    // the plain series already converges
                    0 => Some(ClosedForm::Real(std::f64::consts::LN_2)),
                    _ if is_cesaro_or_abel(method) => Some(ClosedForm::Rational(
                        int(sign(k - 1)) * Rational::new(factorial(k - 1), BigInt::one() << k),
                    )),
                    _ => None,
                }
            })),
            support: None,
        }
    }

    /// `a_n = r^n`.
    pub fn geometric(r: Rational) -> Self {
        let rf = to_f64(&r);
        let rr = r.clone();
        let rb = r.clone();
        SeriesSpec {
            kind: SeriesKind::Geometric(r),
            term: Arc::new(move |n| num_traits::pow(rr.clone(), n)),
            batch: Some(Arc::new(move |len| {
                // r is reduced, so every power p^n/q^n is too
                let (mut num, mut den) = (BigInt::one(), BigInt::one());
                (0..len)
                    .map(|_| {
                        let cur = Rational::new_raw(num.clone(), den.clone());
                        num *= rb.numer();
                        den *= rb.denom();
                        cur
                    })
                    .collect()
            })),
            term_f64: Some(Arc::new(move |n| rf.powi(n.min(i32::MAX as usize) as i32))),
            exact_reg_deriv: None,
            support: None,
        }
    }

    /// Finitely supported sequence; entries past the end are zero.
    pub fn table(values: Vec<Rational>) -> Self {
        let shared: Arc<Vec<Rational>> = Arc::new(values.clone());
        let floats: Arc<Vec<f64>> = Arc::new(values.iter().map(to_f64).collect());
        let support = values.len();
        let s1 = shared.clone();
        SeriesSpec {
            kind: SeriesKind::Table(values),
            term: Arc::new(move |n| s1.get(n).cloned().unwrap_or_else(Rational::zero)),
            batch: None,
            term_f64: Some(Arc::new(move |n| floats.get(n).copied().unwrap_or(0.0))),
            exact_reg_deriv: None,
            support: Some(support),
        }
    }

    pub fn with_batch(mut self, batch: impl Fn(usize) -> Vec<Rational> + Send + Sync + 'static) -> Self {
        self.batch = Some(Arc::new(batch));
        self
    }

    pub fn with_float_terms(mut self, f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        self.term_f64 = Some(Arc::new(f));
        self
    }

    pub fn with_exact_reg_deriv(
        mut self,
        f: impl Fn(usize, &Rational, &SummationMethod) -> Option<ClosedForm> + Send + Sync + 'static,
    ) -> Self {
        self.exact_reg_deriv = Some(Arc::new(f));
        self
    }

    pub fn kind(&self) -> &SeriesKind {
        &self.kind
    }

    /// Human readable name, matching the CLI literal for builtins.
    pub fn name(&self) -> String {
        match &self.kind {
            SeriesKind::AltGeometric => "alt".into(),
            SeriesKind::AltLog => "altlog".into(),
            SeriesKind::Geometric(r) => format!("geom:{}", format_rational(r)),
            SeriesKind::Table(v) => format!(
                "table:[{}]",
                v.iter().map(format_rational).collect::<Vec<_>>().join(",")
            ),
            SeriesKind::Custom(name) => name.clone(),
        }
    }

    pub fn term(&self, n: usize) -> Rational {
        (self.term)(n)
    }

    /// `a_0 .. a_{len-1}`.
    pub fn terms(&self, len: usize) -> Vec<Rational> {
        match &self.batch {
            Some(b) => b(len),
            None => (0..len).map(|n| (self.term)(n)).collect(),
        }
    }

    pub fn term_f64(&self, n: usize) -> f64 {
        match &self.term_f64 {
            Some(f) => f(n),
            None => to_f64(&(self.term)(n)),
        }
    }

    /// Length past which every term is zero, if known.
    pub fn support(&self) -> Option<usize> {
        self.support
    }

    /// Closed-form `f^(k)(c)_mu`, if this series carries one for `(k, c, mu)`.
    pub fn exact_reg_deriv(&self, k: usize, c: &Rational, method: &SummationMethod) -> Option<ClosedForm> {
        self.exact_reg_deriv.as_ref().and_then(|f| f(k, c, method))
    }

    pub fn has_closed_forms(&self) -> bool {
        self.exact_reg_deriv.is_some()
    }

    /// `n -> a_{n+1}`.
    pub fn shifted(&self) -> SeriesSpec {
        let a = self.clone();
        let b = self.clone();
        let mut out = SeriesSpec::custom(format!("shift({})", self.name()), move |n| a.term(n + 1));
        out.batch = self.batch.as_ref().map(|_| {
            let f: BatchFn = Arc::new(move |len| {
                let mut v = b.terms(len + 1);
                v.remove(0);
                v
            });
            f
        });
        if self.term_f64.is_some() {
            let c = self.clone();
            out.term_f64 = Some(Arc::new(move |n| c.term_f64(n + 1)));
        }
        out.support = self.support.map(|s| s.saturating_sub(1));
        out
    }
}

impl FromStr for SeriesSpec {
    type Err = SummationError;

    /// `alt`, `altlog`, `geom:p/q`, `table:[a,b,...]` or `table:@file.json`
    /// (a JSON array of `"p/q"` strings).
    fn from_str(text: &str) -> Result<Self, SummationError> {
        let text = text.trim();
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim())),
            None => (text, None),
        };
        let offset = text.find(':').map_or(0, |i| i + 1);
        match (head, rest) {
            ("alt", None) => Ok(SeriesSpec::alt_geometric()),
            ("altlog", None) => Ok(SeriesSpec::alt_log()),
            ("geom", Some(r)) => Ok(SeriesSpec::geometric(
                crate::algebra::parse_rational(r).map_err(|e| ParseError::new(e.pos + offset, e.msg))?,
            )),
            ("table", Some(r)) if r.starts_with('@') => {
                let path = &r[1..];
                let raw = std::fs::read_to_string(path).map_err(|e| SummationError::Table {
                    path: path.into(),
                    msg: e.to_string(),
                })?;
                Ok(SeriesSpec::table(parse_table_json(&raw).map_err(|msg| {
                    SummationError::Table {
                        path: path.into(),
                        msg,
                    }
                })?))
            }
            ("table", Some(r)) => Ok(SeriesSpec::table(crate::operator::parse_list(r, offset)?)),
            _ => Err(ParseError::new(
                0,
                format!("unknown series '{text}' (expected alt, altlog, geom:r, table:[...], table:@file.json)"),
            )
            .into()),
        }
    }
}

/// JSON array of `"p/q"` strings (bare JSON integers are accepted too).
pub fn parse_table_json(raw: &str) -> Result<Vec<Rational>, String> {
    let value: Value = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    let items = value.as_array().ok_or("expected a JSON array")?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::String(s) => crate::algebra::parse_rational(s).map_err(|e| format!("entry {i}: {e}")),
            Value::Number(n) if n.is_i64() => Ok(int(n.as_i64().unwrap())),
            _ => Err(format!("entry {i}: expected a \"p/q\" string")),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CesaroOrder {
    Fixed(usize),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Classical,
    Cesaro(CesaroOrder),
    Abel,
}

/// A regularization method together with its numeric budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SummationMethod {
    pub tag: MethodTag,
    /// Term budget for Cesaro/classical summation.
    pub n_max: usize,
    pub tol: f64,
    /// Highest order tried by automatic Cesaro escalation.
    pub k_max: usize,
}

impl SummationMethod {
    pub fn new(tag: MethodTag) -> Self {
        SummationMethod {
            tag,
            n_max: DEFAULT_TERMS,
            tol: DEFAULT_TOL,
            k_max: DEFAULT_K_MAX,
        }
    }

    pub fn classical() -> Self {
        Self::new(MethodTag::Classical)
    }

    pub fn cesaro(k: usize) -> Self {
        Self::new(MethodTag::Cesaro(CesaroOrder::Fixed(k)))
    }

    pub fn cesaro_auto() -> Self {
        Self::new(MethodTag::Cesaro(CesaroOrder::Auto))
    }

    pub fn abel() -> Self {
        Self::new(MethodTag::Abel)
    }

    pub fn with_terms(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }
}

impl fmt::Display for SummationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            MethodTag::Classical => f.write_str("classical"),
            MethodTag::Cesaro(CesaroOrder::Fixed(k)) => write!(f, "cesaro:{k}"),
            MethodTag::Cesaro(CesaroOrder::Auto) => f.write_str("cesaro:auto"),
            MethodTag::Abel => f.write_str("abel"),
        }
    }
}

impl FromStr for SummationMethod {
    type Err = ParseError;

    /// `classical`, `abel`, `cesaro`, `cesaro:k` or `cesaro:auto`.
    fn from_str(text: &str) -> Result<Self, ParseError> {
        let tag = match text.trim() {
            "classical" => MethodTag::Classical,
            "abel" => MethodTag::Abel,
            "cesaro" | "cesaro:auto" => MethodTag::Cesaro(CesaroOrder::Auto),
            other => match other.strip_prefix("cesaro:").map(str::parse::<usize>) {
                Some(Ok(k)) => MethodTag::Cesaro(CesaroOrder::Fixed(k)),
                _ => {
                    return Err(ParseError::new(
                        0,
                        format!("unknown method '{other}' (expected classical, abel, cesaro[:k|:auto])"),
                    ))
                }
            },
        };
        Ok(SummationMethod::new(tag))
    }
}

/// Outcome of a numeric summation.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub value: f64,
    /// Set when the value came from an exact path rather than a numeric limit.
    pub exact: Option<Rational>,
    pub method_used: SummationMethod,
    /// Cesaro order, or Richardson order for Abel.
    pub order_used: usize,
    pub terms_used: usize,
    pub converged: bool,
    /// Largest gap between the final estimate and its comparison estimates.
    pub residual: f64,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> Value {
        json!({
            "value": round_sig(self.value),
            "exact": self.exact.as_ref().map(format_rational),
            "method": self.method_used.to_string(),
            "order_used": self.order_used,
            "terms_used": self.terms_used,
            "converged": self.converged,
            "residual": round_sig(self.residual),
        })
    }
}

/// Rounds to 12 significant digits, the precision every printed float uses.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Sequence of partial sums `sigma[a](n) = sum_{k<=n} a(k)`.
pub fn partial_sums(a: &SeriesSpec) -> SeriesSpec {
    let term_src = a.clone();
    let batch_src = a.clone();
    SeriesSpec::custom(format!("partial_sums({})", a.name()), move |n| {
        term_src.terms(n + 1).into_iter().fold(Rational::zero(), |acc, x| acc + x)
    })
    .with_batch(move |len| {
        let mut acc = Rational::zero();
        batch_src
            .terms(len)
            .into_iter()
            .map(|x| {
                acc += x;
                acc.clone()
            })
            .collect()
    })
}

/// Cauchy product `(a * b)(n) = sum_{i<=n} a(n-i) b(i)`.
pub fn cauchy_product(a: &SeriesSpec, b: &SeriesSpec) -> SeriesSpec {
    let (ta, tb) = (a.clone(), b.clone());
    let (ba, bb) = (a.clone(), b.clone());
    SeriesSpec::custom(format!("cauchy({},{})", a.name(), b.name()), move |n| {
        (0..=n).fold(Rational::zero(), |acc, i| acc + ta.term(n - i) * tb.term(i))
    })
    .with_batch(move |len| convolve(&ba.terms(len), &bb.terms(len)))
}

/// Exact truncated convolution, done on integer numerators over a common
/// denominator.
fn convolve(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let (na, da) = common_denominator(a);
    let (nb, db) = common_denominator(b);
    let denom = da * db;
    (0..a.len().min(b.len()))
        .map(|n| {
            let mut acc = BigInt::zero();
            for i in 0..=n {
                if !na[n - i].is_zero() && !nb[i].is_zero() {
                    acc += &na[n - i] * &nb[i];
                }
            }
            Rational::new(acc, denom.clone())
        })
        .collect()
}

/// Writes every term as `numerator / L` with `L` the lcm of the denominators.
pub(crate) fn common_denominator(terms: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let denoms: Vec<&BigInt> = terms.iter().map(|q| q.denom()).filter(|d| !d.is_one()).collect();
    let lcm = lcm_tree(&denoms);
    let nums = terms
        .iter()
        .map(|q| {
            if q.denom().is_one() {
                q.numer() * &lcm
            } else {
                q.numer() * (&lcm / q.denom())
            }
        })
        .collect();
    (nums, lcm)
}

/// Balanced lcm: keeps operands of similar size, which is much cheaper than a
/// left fold once the running lcm is large.
fn lcm_tree(values: &[&BigInt]) -> BigInt {
    match values {
        [] => BigInt::one(),
        [one] => (*one).clone(),
        _ => {
            let (l, r) = values.split_at(values.len() / 2);
            let (l, r) = (lcm_tree(l), lcm_tree(r));
            if l == r {
                l
            } else {
                l.lcm(&r)
            }
        }
    }
}

/// Applies the partial-sum operator `times` times in place.
fn iterate_partial_sums(values: &mut [BigInt], times: usize) {
    for _ in 0..times {
        let mut acc = BigInt::zero();
        for v in values.iter_mut() {
            acc += &*v;
            v.clone_from(&acc);
        }
    }
}

/// `sigma^{times}[a]` for the first `len` terms, exactly.
pub fn iterated_partial_sums(a: &SeriesSpec, times: usize, len: usize) -> Vec<Rational> {
    let (mut nums, lcm) = common_denominator(&a.terms(len));
    iterate_partial_sums(&mut nums, times);
    nums.into_iter().map(|x| Rational::new(x, lcm.clone())).collect()
}

struct CesaroEstimate {
    value: f64,
    residual: f64,
}

/// Cesaro mean of order `k` read off `sigma^{k+1}[a]`, scaled by `lcm`.
///
/// Estimates are taken at `N/4`, `N/2`, `N` and also at `N - 1`: a mean that
/// is still oscillating with the parity of `n` would otherwise look
/// converged when every checkpoint is even. The residual estimates the error
/// at `N` under the usual `1/n` approach, so the `N/4 -> N/2` gap counts half.
fn cesaro_on_sums(s: &[BigInt], lcm: &BigInt, k: usize) -> CesaroEstimate {
    let n_max = s.len() - 1;
    let estimate = |n: usize| -> f64 {
        let denom = lcm * binomial(n + k, k);
        to_f64(&Rational::new(s[n].clone(), denom))
    };
    let e_quarter = estimate(n_max / 4);
    let e_half = estimate(n_max / 2);
    let e_prev = estimate(n_max - 1);
    let e_last = estimate(n_max);
    let residual = [
        (e_half - e_quarter).abs() / 2.0,
        (e_last - e_half).abs(),
        (e_last - e_prev).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    CesaroEstimate {
        value: e_last,
        residual: if residual.is_nan() { f64::INFINITY } else { residual },
    }
}

fn check_budget(n: usize, tol: f64) -> Result<(), SummationError> {
    if n < 16 {
        return Err(SummationError::InvalidParameter(format!("term budget {n} < 16")));
    }
    if !(tol > 0.0) {
        return Err(SummationError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

/// `C_k` sum of the series `sum a(n)`: `lim sigma^{k+1}[a](n) / binom(n+k, k)`
/// estimated from `a_0..a_N`. Non-convergence is reported, never an error.
pub fn cesaro_limit(a: &SeriesSpec, k: usize, n: usize, tol: f64) -> Result<ConvergenceReport, SummationError> {
    check_budget(n, tol)?;
    let (mut sums, lcm) = common_denominator(&a.terms(n + 1));
    iterate_partial_sums(&mut sums, k + 1);
    let est = cesaro_on_sums(&sums, &lcm, k);
    let tag = if k == 0 {
        MethodTag::Classical
    } else {
        MethodTag::Cesaro(CesaroOrder::Fixed(k))
    };
    Ok(ConvergenceReport {
        value: est.value,
        exact: None,
        method_used: SummationMethod::new(tag).with_terms(n).with_tol(tol),
        order_used: k,
        terms_used: n + 1,
        converged: est.residual <= tol,
        residual: est.residual,
    })
}

/// Tries `C_0, C_1, ..., C_{k_max}` and returns the first order that
/// converges, or the last attempt when none does.
pub fn cesaro_auto(a: &SeriesSpec, k_max: usize, n: usize, tol: f64) -> Result<ConvergenceReport, SummationError> {
    check_budget(n, tol)?;
    if k_max > MAX_CESARO_ORDER {
        return Err(SummationError::InvalidParameter(format!(
            "k_max {k_max} exceeds {MAX_CESARO_ORDER}"
        )));
    }
    let (mut sums, lcm) = common_denominator(&a.terms(n + 1));
    let mut last = None;
    for k in 0..=k_max {
        iterate_partial_sums(&mut sums, 1);
        let est = cesaro_on_sums(&sums, &lcm, k);
        let report = ConvergenceReport {
            value: est.value,
            exact: None,
            method_used: SummationMethod::cesaro_auto()
                .with_terms(n)
                .with_tol(tol)
                .with_k_max(k_max),
            order_used: k,
            terms_used: n + 1,
            converged: est.residual <= tol,
            residual: est.residual,
        };
        if report.converged {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("k_max >= 0"))
}

/// Cesaro sum with the `1/n` tail of the means extrapolated away.
///
/// The `C_k` mean approaches its limit like `1/n`, which is slow when the
/// terms are large. For sequences like `(-1)^n q(n)` with `q` polynomial, the
/// mean restricted to even `n` (and to odd `n`) is a rational function of
/// `n`, so its limit is extrapolated in `1/n` from the even checkpoints
/// `N/16, ..., N/2, N`. The residual compares that extrapolant with the one
/// from the previous window and with the one from the odd checkpoints.
/// Orders `0..=k_max` are tried in turn as in [`cesaro_auto`].
pub fn cesaro_extrapolated(
    a: &SeriesSpec,
    k_max: usize,
    n: usize,
    tol: f64,
) -> Result<ConvergenceReport, SummationError> {
    check_budget(n, tol)?;
    if n < 64 {
        return Err(SummationError::InvalidParameter(format!("term budget {n} < 64")));
    }
    if k_max > MAX_CESARO_ORDER {
        return Err(SummationError::InvalidParameter(format!(
            "k_max {k_max} exceeds {MAX_CESARO_ORDER}"
        )));
    }
    let evens: Vec<usize> = [16, 8, 4, 2, 1].iter().map(|d| (n / d) & !1).collect();
    let odds: Vec<usize> = evens.iter().map(|m| m - 1).collect();
    let (mut sums, lcm) = common_denominator(&a.terms(n + 1));
    let mut last = None;
    for k in 0..=k_max {
        iterate_partial_sums(&mut sums, 1);
        let extrapolate = |points: &[usize]| -> f64 {
            let xs: Vec<f64> = points.iter().map(|&m| 1.0 / m as f64).collect();
            let ys: Vec<f64> = points
                .iter()
                .map(|&m| to_f64(&Rational::new(sums[m].clone(), &lcm * binomial(m + k, k))))
                .collect();
            extrapolate_to_zero(&xs, &ys)
        };
        let value = extrapolate(&evens[1..]);
        let residual = (value - extrapolate(&evens[..4]))
            .abs()
            .max((value - extrapolate(&odds[1..])).abs());
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        let report = ConvergenceReport {
            value,
            exact: None,
            method_used: SummationMethod::cesaro_auto()
                .with_terms(n)
                .with_tol(tol)
                .with_k_max(k_max),
            order_used: k,
            terms_used: n + 1,
            converged: residual <= tol,
            residual,
        };
        if report.converged {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("k_max >= 0"))
}

/// Schedule and extrapolation settings for [`abel_limit`].
#[derive(Clone)]
pub struct AbelConfig {
    /// Points `t_j` in `(0, 1)`, strictly increasing.
    pub schedule: Vec<f64>,
    /// Number of terms summed at a given `t`.
    pub budget: Arc<dyn Fn(f64) -> usize + Send + Sync>,
    /// Degree of the extrapolating polynomial in `1 - t`.
    pub richardson_order: usize,
    pub tol: f64,
}

impl fmt::Debug for AbelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbelConfig")
            .field("schedule", &self.schedule)
            .field("richardson_order", &self.richardson_order)
            .field("tol", &self.tol)
            .finish()
    }
}

impl Default for AbelConfig {
    /// `t_j = 1 - 2^{-j}` for `j = 3..=14`, `ceil(60 / (1 - t_j))` terms per
    /// point (so `t^N <= e^{-60}`), quadratic extrapolation.
    fn default() -> Self {
        AbelConfig {
            schedule: (3..=14).map(|j| 1.0 - 0.5f64.powi(j)).collect(),
            budget: Arc::new(|t| (60.0 / (1.0 - t)).ceil() as usize),
            richardson_order: 2,
            tol: DEFAULT_TOL,
        }
    }
}

impl AbelConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Compensated (Neumaier) summation.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Value at 0 of the polynomial through `(xs[i], ys[i])` (Neville's scheme).
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (-xs[i + m] * p[i] + xs[i] * p[i + 1]) / (xs[i] - xs[i + m]);
        }
    }
    p[0]
}

/// Abel sum `lim_{t -> 1^-} sum a_n t^n` of the series.
///
/// Each `g(t_j)` is summed in floating point over `budget(t_j)` terms (fewer
/// when the sequence has finite support); the limit is extrapolated from
/// consecutive windows of `richardson_order + 1` points, and the last two
/// window extrapolants must agree within `tol`.
pub fn abel_limit(a: &SeriesSpec, config: &AbelConfig) -> Result<ConvergenceReport, SummationError> {
    let sched = &config.schedule;
    if sched.is_empty() || sched.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(SummationError::InvalidParameter("schedule must lie in (0, 1)".into()));
    }
    if sched.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SummationError::InvalidParameter("schedule must be strictly increasing".into()));
    }
    let window = config.richardson_order + 1;
    if sched.len() < window + 1 {
        return Err(SummationError::InvalidParameter(format!(
            "need at least {} schedule points for order {}",
            window + 1,
            config.richardson_order
        )));
    }
    let budgets: Vec<usize> = sched
        .iter()
        .map(|&t| {
            let b = (config.budget)(t);
            a.support().map_or(b, |s| b.min(s))
        })
        .collect();
    let max_terms = budgets.iter().copied().max().unwrap_or(0);
    let floats: Vec<f64> = (0..max_terms).map(|n| a.term_f64(n)).collect();

    let values: Vec<f64> = sched
        .iter()
        .zip(&budgets)
        .map(|(&t, &len)| {
            let mut acc = Neumaier::default();
            let mut power = 1.0;
            for x in &floats[..len] {
                acc.add(x * power);
                power *= t;
            }
            acc.total()
        })
        .collect();
    let eps: Vec<f64> = sched.iter().map(|t| 1.0 - t).collect();
    let extrapolants: Vec<f64> = (0..=sched.len() - window)
        .map(|i| extrapolate_to_zero(&eps[i..i + window], &values[i..i + window]))
        .collect();
    let last = extrapolants[extrapolants.len() - 1];
    let prev = extrapolants[extrapolants.len() - 2];
    let residual = (last - prev).abs();
    let residual = if residual.is_nan() { f64::INFINITY } else { residual };
    Ok(ConvergenceReport {
        value: last,
        exact: None,
        method_used: SummationMethod::abel().with_tol(config.tol),
        order_used: config.richardson_order,
        terms_used: max_terms,
        converged: residual <= config.tol,
        residual,
    })
}

/// Sums `sum a(n)` with `method`, failing with `NotSummable` when the
/// estimate does not settle within budget.
pub fn sum_series(a: &SeriesSpec, method: &SummationMethod) -> Result<ConvergenceReport, SummationError> {
    let report = match method.tag {
        MethodTag::Classical => cesaro_limit(a, 0, method.n_max, method.tol)?,
        MethodTag::Cesaro(CesaroOrder::Fixed(k)) => cesaro_limit(a, k, method.n_max, method.tol)?,
        MethodTag::Cesaro(CesaroOrder::Auto) => cesaro_auto(a, method.k_max, method.n_max, method.tol)?,
        MethodTag::Abel => abel_limit(a, &AbelConfig::default().with_tol(method.tol))?,
    };
    if report.converged {
        Ok(report)
    } else {
        Err(SummationError::NotSummable(Box::new(report)))
    }
}

/// Both sides of `sum_{n>=0} a(n) = a(0) + sum_{n>=1} a(n)` under `method`.
pub fn shift_check(a: &SeriesSpec, method: &SummationMethod) -> Result<(f64, f64), SummationError> {
    let lhs = sum_series(a, method)?.value;
    let tail = sum_series(&a.shifted(), method)?.value;
    Ok((lhs, a.term_f64(0) + tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn assert_close(x: f64, y: f64, tol: f64) {
        assert!((x - y).abs() <= tol, "{x} vs {y} (tol {tol})");
    }

    fn signed_power(m: u32) -> SeriesSpec {
        SeriesSpec::custom(format!("(-1)^n n^{m}"), move |n| {
            int(sign(n)) * int(n as i64).pow(m as i32)
        })
    }

    #[test]
    fn partial_sums_examples() {
        let ones = SeriesSpec::geometric(int(1));
        assert_eq!(partial_sums(&ones).terms(4), vec![int(1), int(2), int(3), int(4)]);
        assert_eq!(partial_sums(&ones).term(9), int(10));
        let alt = partial_sums(&SeriesSpec::alt_geometric());
        assert_eq!(alt.terms(4), vec![int(1), int(0), int(1), int(0)]);
    }

    #[test]
    fn partial_sums_of_alternating_binomials_match_generating_series() {
        let k = 2usize;
        let beta = SeriesSpec::custom("beta", move |n| {
            int(sign(n)) * Rational::from_integer(binomial(n, k - 1))
        });
        let summed = (0..=k).fold(beta, |s, _| partial_sums(&s));
        let vals = summed.terms(30);
        for (n, v) in vals.iter().enumerate() {
            let expect = if n + 1 < k {
                0
            } else {
                let mu = if (n + k) % 2 == 0 { (n - k) / 2 } else { (n + 1 - k) / 2 };
                -(binomial(mu + k, k).to_string().parse::<i64>().unwrap())
            };
            assert_eq!(v, &int(expect), "n={n}");
        }
    }

    #[test]
    fn iterated_sums_match_convolution_formula() {
        // sigma^{k+1}[a](n) = sum_{v<=n} binom(v+k, k) a(n-v)
        let a = SeriesSpec::custom("mixed", |n| rat(sign(n) * (n as i64 * n as i64 - 3), n as i64 % 5 + 1));
        let terms = a.terms(201);
        for k in 0..=4 {
            let fast = iterated_partial_sums(&a, k + 1, 201);
            for n in [0usize, 1, 7, 50, 199, 200] {
                let direct = (0..=n).fold(Rational::zero(), |acc, v| {
                    acc + Rational::from_integer(binomial(v + k, k)) * &terms[n - v]
                });
                assert_eq!(fast[n], direct, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn cesaro_examples() {
        let r = cesaro_limit(&SeriesSpec::alt_geometric(), 1, 2000, 1e-3).unwrap();
        assert!(r.converged);
        assert_close(r.value, 0.5, 1e-3);

        let r = cesaro_limit(&SeriesSpec::geometric(rat(1, 2)), 0, 4000, 1e-3).unwrap();
        assert!(r.converged);
        assert_close(r.value, 2.0, 1e-12);

        let r = cesaro_limit(&signed_power(1), 2, 4000, 1e-3).unwrap();
        assert!(r.converged);
        assert_close(r.value, -0.25, 1e-3);
    }

    #[test]
    fn parity_oscillation_is_not_convergence() {
        // C_1 means of (-1)^n n are 0 at even n and about -1/2 at odd n
        let r = cesaro_limit(&signed_power(1), 1, 4000, 1e-3).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn cesaro_auto_examples() {
        let r = cesaro_auto(&signed_power(3), 5, 4000, 1e-3).unwrap();
        assert!(r.converged);
        assert!(r.order_used <= 5);
        assert_close(r.value, 0.125, 1e-3);

        let r = cesaro_auto(&SeriesSpec::geometric(rat(-1, 3)), 5, 4000, 1e-3).unwrap();
        assert!(r.converged);
        assert_eq!(r.order_used, 0);
        assert_close(r.value, 0.75, 1e-9);

        let r = cesaro_auto(&SeriesSpec::geometric(int(1)), 12, 4000, 1e-3).unwrap();
        assert!(!r.converged);
        assert!(r.residual > 1e-3);
    }

    #[test]
    fn extrapolation_handles_large_terms() {
        // 40000 (-1)^n n^3 sums to 5000; the plain C_k means miss at n = 4000
        let big = SeriesSpec::custom("40000 (-1)^n n^3", |n| int(40000 * sign(n)) * int(n as i64).pow(3));
        let r = cesaro_auto(&big, 6, 4000, 1e-3).unwrap();
        assert!(!r.converged);
        let r = cesaro_extrapolated(&big, 6, 4000, 1e-3).unwrap();
        assert!(r.converged, "{r:?}");
        assert_close(r.value, 5000.0, 1e-3);

        // C_1 of (-1)^n n has the right even-n limit but oscillates
        let r = cesaro_extrapolated(&signed_power(1), 1, 4000, 1e-3).unwrap();
        assert!(!r.converged);
        let r = cesaro_extrapolated(&signed_power(1), 3, 4000, 1e-3).unwrap();
        assert!(r.converged);
        assert_close(r.value, -0.25, 1e-6);

        let r = cesaro_extrapolated(&SeriesSpec::geometric(rat(1, 2)), 3, 4000, 1e-6).unwrap();
        assert_close(r.value, 2.0, 1e-6);
        let r = cesaro_extrapolated(&SeriesSpec::geometric(int(1)), 6, 4000, 1e-3).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn invalid_parameters() {
        let a = SeriesSpec::alt_geometric();
        assert!(cesaro_limit(&a, 1, 8, 1e-3).is_err());
        assert!(cesaro_limit(&a, 1, 100, 0.0).is_err());
        assert!(cesaro_auto(&a, 13, 100, 1e-3).is_err());
        let bad = AbelConfig {
            schedule: vec![0.5, 0.4, 0.9, 0.95],
            ..AbelConfig::default()
        };
        assert!(abel_limit(&a, &bad).is_err());
    }

    #[test]
    fn regularity_on_convergent_series() {
        // The C_k mean of a convergent series carries a bias of roughly
        // k * sum_j (S - s_j) / n, so the budget scales with that mass.
        for (a, sum, n) in [
            (SeriesSpec::geometric(rat(1, 2)), 2.0, 16_000),
            (SeriesSpec::geometric(rat(-2, 3)), 0.6, 4_000),
            (SeriesSpec::table(vec![int(3), rat(-1, 2), int(4)]), 6.5, 100_000),
        ] {
            for k in 0..=4 {
                let r = cesaro_limit(&a, k, n, 1e-3).unwrap();
                assert!(r.converged, "{} k={k}", a.name());
                assert_close(r.value, sum, 1e-3);
            }
            let abel = abel_limit(&a, &AbelConfig::default()).unwrap();
            assert_close(abel.value, sum, 2e-3);
        }
    }

    #[test]
    fn abel_examples() {
        let r = abel_limit(&SeriesSpec::alt_geometric(), &AbelConfig::default()).unwrap();
        assert!(r.converged);
        assert_close(r.value, 0.5, 1e-4);
        let r = abel_limit(&SeriesSpec::alt_log(), &AbelConfig::default()).unwrap();
        assert!(r.converged);
        assert_close(r.value, std::f64::consts::LN_2, 1e-4);
    }

    #[test]
    fn cesaro_and_abel_agree() {
        for a in [SeriesSpec::alt_geometric(), SeriesSpec::alt_log(), signed_power(1)] {
            let c = cesaro_auto(&a, 6, 4000, 1e-3).unwrap();
            let ab = abel_limit(&a, &AbelConfig::default()).unwrap();
            assert!(c.converged && ab.converged, "{}", a.name());
            assert_close(c.value, ab.value, 2e-3);
        }
    }

    #[test]
    fn cauchy_product_examples() {
        let delta = SeriesSpec::table(vec![int(1)]);
        assert_eq!(cauchy_product(&delta, &delta).terms(4), vec![int(1), int(0), int(0), int(0)]);
        let alt = SeriesSpec::alt_geometric();
        let sq = cauchy_product(&alt, &alt);
        let expect: Vec<Rational> = (0..12).map(|n| int(sign(n) * (n as i64 + 1))).collect();
        assert_eq!(sq.terms(12), expect);
        assert_eq!(sq.term(11), expect[11]);
        let r = cesaro_limit(&sq, 2, 4000, 1e-3).unwrap();
        assert!(r.converged);
        assert_close(r.value, 0.25, 1e-3);
    }

    #[test]
    fn cauchy_product_with_fractions() {
        let a = SeriesSpec::alt_log();
        let b = SeriesSpec::geometric(rat(1, 3));
        let fast = cauchy_product(&a, &b).terms(20);
        for n in [0usize, 1, 5, 19] {
            let direct = (0..=n).fold(Rational::zero(), |acc, i| acc + a.term(n - i) * b.term(i));
            assert_eq!(fast[n], direct);
        }
    }

    #[test]
    fn shift_invariance_examples() {
        let (l, r) = shift_check(&SeriesSpec::alt_geometric(), &SummationMethod::cesaro(1)).unwrap();
        assert_close(l, 0.5, 1e-3);
        assert_close(l, r, 1e-3);
        let (l, r) = shift_check(&SeriesSpec::geometric(rat(1, 2)), &SummationMethod::classical()).unwrap();
        assert_close(l, 2.0, 1e-9);
        assert_close(r, 2.0, 1e-9);
        let alt = SeriesSpec::alt_geometric();
        let sq = cauchy_product(&alt, &alt);
        let (l, r) = shift_check(&sq, &SummationMethod::cesaro(2)).unwrap();
        assert_close(l, 0.25, 1e-3);
        assert_close(r, 0.25, 1e-3);
        let tail = sum_series(&sq.shifted(), &SummationMethod::cesaro(2)).unwrap();
        assert_close(tail.value, -0.75, 1e-3);
    }

    #[test]
    fn not_summable_is_an_error_only_in_sum_series() {
        let ones = SeriesSpec::geometric(int(1));
        assert!(matches!(
            sum_series(&ones, &SummationMethod::cesaro(3)),
            Err(SummationError::NotSummable(_))
        ));
    }

    #[test]
    fn literals() {
        assert_eq!("alt".parse::<SeriesSpec>().unwrap().kind(), &SeriesKind::AltGeometric);
        assert_eq!("altlog".parse::<SeriesSpec>().unwrap().kind(), &SeriesKind::AltLog);
        assert_eq!(
            "geom:-1/2".parse::<SeriesSpec>().unwrap().kind(),
            &SeriesKind::Geometric(rat(-1, 2))
        );
        let t: SeriesSpec = "table:[1, -1/2, 3]".parse().unwrap();
        assert_eq!(t.terms(5), vec![int(1), rat(-1, 2), int(3), int(0), int(0)]);
        assert!("geom:x".parse::<SeriesSpec>().is_err());
        assert!("bogus".parse::<SeriesSpec>().is_err());
        assert!(matches!(
            "table:@/nonexistent/file.json".parse::<SeriesSpec>(),
            Err(SummationError::Table { .. })
        ));
        assert_eq!(parse_table_json(r#"["1/2", 3, "-4"]"#).unwrap(), vec![rat(1, 2), int(3), int(-4)]);
        assert!(parse_table_json(r#"{"a": 1}"#).is_err());

        for m in ["classical", "abel", "cesaro:3", "cesaro:auto"] {
            assert_eq!(m.parse::<SummationMethod>().unwrap().to_string(), m);
        }
        assert!("cesaro:x".parse::<SummationMethod>().is_err());
    }

    #[test]
    fn report_json_uses_twelve_digits() {
        let r = cesaro_limit(&SeriesSpec::alt_geometric(), 1, 100, 1.0).unwrap();
        let v = r.to_json();
        assert_eq!(v["method"], "cesaro:1");
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(v["value"].as_f64().is_some());
    }
}
