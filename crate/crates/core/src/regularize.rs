//! Finite evaluation of regularized operator series.
//!
//! Given `f(t) = sum a_n t^n`, an operator `T` with `c = c_0(T)` and a method
//! `mu`, the series `sum a_n T^n P(x)` is `mu`-summable as soon as every
//! derived series `sum a_n [n]_k c^{n-k}` is, and its sum is
//!
//! ```text
//! f(T)_mu P(x) = sum_{k <= deg P} f^(k)(c)_mu / k! (T - c)^k P(x)
//! ```
//!
//! because `R = T - c` has a symbol without constant term and therefore
//! kills `P` after `deg P + 1` applications. The regularized derivatives
//! `f^(k)(c)_mu` come from closed forms when the series carries them and
//! from [`crate::summation`] otherwise.
//!
//! The module also hosts the Euler numbers and the closed forms they give for
//! alternating sums `sum (-1)^n P(x + n h)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{binomial, factorial, int, pow, to_f64, Polynomial, Rational};
use crate::operator::{OperatorError, OperatorSpec};
use crate::power_series::PowerSeries;
use crate::summation::{
    cauchy_product, round_sig, sum_series, ClosedForm, ConvergenceReport, MethodTag, SeriesSpec,
    SummationError, SummationMethod,
};

#[derive(Debug, Error)]
pub enum RegularizeError {
    /// The derived series of order `k` did not settle within budget, so the
    /// regularity hypothesis could not be confirmed.
    #[error("f^({k})(c) is not summable by {} within budget (residual {:.3e})", .report.method_used, .report.residual)]
    NotRegular { k: usize, report: Box<ConvergenceReport> },
    #[error("no closed-form value for f^({k})(c); exact evaluation unavailable")]
    NotExact { k: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Summation(SummationError),
}

/// Where a regularized derivative came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Rational closed form carried by the series.
    ExactClosedForm,
    /// Closed form with an irrational value (e.g. `log 2`), rounded to `f64`.
    ClosedFormReal,
    /// `c = 0`: only `n = k` contributes, so the value is `k! a_k`.
    DirectCoefficient,
    NumericClassical,
    NumericCesaro,
    NumericAbel,
}

impl Provenance {
    pub fn is_exact(self) -> bool {
        matches!(self, Provenance::ExactClosedForm | Provenance::DirectCoefficient)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ExactClosedForm => "exact-closed-form",
            Provenance::ClosedFormReal => "closed-form-real",
            Provenance::DirectCoefficient => "exact-coefficient",
            Provenance::NumericClassical => "numeric-classical",
            Provenance::NumericCesaro => "numeric-cesaro",
            Provenance::NumericAbel => "numeric-abel",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DerivativeEntry {
    pub value: ClosedForm,
    pub provenance: Provenance,
    /// Numeric summation report, for numerically obtained entries.
    pub report: Option<ConvergenceReport>,
}

/// `f^(k)(c)_mu` for `k = 0..=k_max`.
#[derive(Debug, Clone)]
pub struct RegularizedDerivatives {
    pub c: Rational,
    pub entries: Vec<DerivativeEntry>,
    pub method: SummationMethod,
}

impl RegularizedDerivatives {
    pub fn k_max(&self) -> Option<usize> {
        self.entries.len().checked_sub(1)
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|e| e.provenance.is_exact())
    }

    /// Exact value of entry `k`, if it has one.
    pub fn exact(&self, k: usize) -> Option<&Rational> {
        match &self.entries.get(k)?.value {
            ClosedForm::Rational(q) if self.entries[k].provenance.is_exact() => Some(q),
            _ => None,
        }
    }

    pub fn to_f64(&self, k: usize) -> f64 {
        self.entries[k].value.to_f64()
    }

    /// Largest Cesaro (or Richardson) order used by any numeric entry.
    pub fn order_used(&self) -> usize {
        self.entries
            .iter()
            .filter_map(|e| e.report.as_ref().map(|r| r.order_used))
            .max()
            .unwrap_or(0)
    }

    pub fn terms_used(&self) -> usize {
        self.entries
            .iter()
            .filter_map(|e| e.report.as_ref().map(|r| r.terms_used))
            .max()
            .unwrap_or(0)
    }

    /// Entries as rationals: exact entries verbatim, floats by their exact
    /// binary value.
    fn rational_values(&self) -> Vec<Rational> {
        self.entries
            .iter()
            .map(|e| match &e.value {
                ClosedForm::Rational(q) => q.clone(),
                ClosedForm::Real(x) => BigRational::from_float(*x).unwrap_or_else(Rational::zero),
            })
            .collect()
    }
}

/// The sequence `n -> a_n [n]_k c^{n-k}`, whose `mu`-sum is `f^(k)(c)_mu`.
/// Terms with `n < k` vanish and no negative power of `c` is ever formed.
pub fn derived_series(f: &SeriesSpec, k: usize, c: &Rational) -> SeriesSpec {
    let falling = move |n: usize| -> BigInt {
        (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i))
    };
    let (ft, ct) = (f.clone(), c.clone());
    let (fb, cb) = (f.clone(), c.clone());
    let (ff, cf) = (f.clone(), to_f64(c));
    SeriesSpec::custom(format!("d^{k}[{}]", f.name()), move |n| {
        if n < k {
            return Rational::zero();
        }
        ft.term(n) * Rational::from_integer(falling(n)) * pow(&ct, (n - k) as i64)
    })
    .with_batch(move |len| {
        let terms = fb.terms(len);
        let mut out = vec![Rational::zero(); len.min(k)];
        let mut c_pow = Rational::one();
        for (n, a) in terms.into_iter().enumerate().skip(k) {
            out.push(if a.is_zero() {
                a
            } else {
                a * Rational::from_integer(falling(n)) * &c_pow
            });
            c_pow *= &cb;
        }
        out
    })
    .with_float_terms(move |n| {
        if n < k {
            return 0.0;
        }
        let fall: f64 = (0..k).map(|i| (n - i) as f64).product();
        ff.term_f64(n) * fall * cf.powi((n - k).min(i32::MAX as usize) as i32)
    })
}

fn numeric_provenance(method: &SummationMethod) -> Provenance {
    match method.tag {
        MethodTag::Classical => Provenance::NumericClassical,
        MethodTag::Cesaro(_) => Provenance::NumericCesaro,
        MethodTag::Abel => Provenance::NumericAbel,
    }
}

fn numeric_entry(report: ConvergenceReport, provenance: Provenance) -> DerivativeEntry {
    DerivativeEntry {
        value: ClosedForm::Real(report.value),
        provenance,
        report: Some(report),
    }
}

/// One regularized derivative `f^(k)(c)_mu`.
pub fn reg_derivative(
    f: &SeriesSpec,
    c: &Rational,
    method: &SummationMethod,
    k: usize,
) -> Result<DerivativeEntry, RegularizeError> {
    if let Some(value) = f.exact_reg_deriv(k, c, method) {
        let provenance = match value {
            ClosedForm::Rational(_) => Provenance::ExactClosedForm,
            ClosedForm::Real(_) => Provenance::ClosedFormReal,
        };
        return Ok(DerivativeEntry {
            value,
            provenance,
            report: None,
        });
    }
    if c.is_zero() {
        return Ok(DerivativeEntry {
            value: ClosedForm::Rational(f.term(k) * Rational::from_integer(factorial(k))),
            provenance: Provenance::DirectCoefficient,
            report: None,
        });
    }
    let derived = derived_series(f, k, c);
    if c.abs() < Rational::one() {
        let classical = SummationMethod {
            tag: MethodTag::Classical,
            ..method.clone()
        };
        if let Ok(report) = sum_series(&derived, &classical) {
            return Ok(numeric_entry(report, Provenance::NumericClassical));
        }
    }
    match sum_series(&derived, method) {
        Ok(report) => Ok(numeric_entry(report, numeric_provenance(method))),
        Err(SummationError::NotSummable(report)) => Err(RegularizeError::NotRegular { k, report }),
        Err(e) => Err(RegularizeError::Summation(e)),
    }
}

/// `f^(k)(c)_mu` for every `k <= k_max`.
pub fn reg_derivatives(
    f: &SeriesSpec,
    c: &Rational,
    method: &SummationMethod,
    k_max: usize,
) -> Result<RegularizedDerivatives, RegularizeError> {
    let entries = (0..=k_max)
        .map(|k| reg_derivative(f, c, method, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RegularizedDerivatives {
        c: c.clone(),
        entries,
        method: method.clone(),
    })
}

/// Symbol of `sum_k values[k]/k! R^k` through `t^order`, building the powers
/// of `sigma_R` incrementally.
fn combine_powers(values: &[Rational], remainder: &OperatorSpec, order: usize) -> Result<PowerSeries, OperatorError> {
    let sigma_r = remainder.symbol(order)?;
    let mut power = PowerSeries::one(order);
    let mut acc = PowerSeries::zero(order);
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            power = &power * &sigma_r;
        }
        if !v.is_zero() {
            acc = &acc + &power.scale(&(v / Rational::from_integer(factorial(k))));
        }
    }
    Ok(acc)
}

/// `f(T)_mu` truncated to `degree_cap`, which is exact on every polynomial
/// of degree at most `degree_cap`. Numeric derivative values enter through
/// their exact binary value.
pub fn reg_operator(
    f: &SeriesSpec,
    op: &OperatorSpec,
    method: &SummationMethod,
    degree_cap: usize,
) -> Result<OperatorSpec, RegularizeError> {
    Ok(reg_operator_parts(f, op, method, degree_cap)?.0)
}

fn reg_operator_parts(
    f: &SeriesSpec,
    op: &OperatorSpec,
    method: &SummationMethod,
    degree_cap: usize,
) -> Result<(OperatorSpec, RegularizedDerivatives), RegularizeError> {
    let (c, remainder) = op.remainder()?;
    let derivs = reg_derivatives(f, &c, method, degree_cap)?;
    let symbol = combine_powers(&derivs.rational_values(), &remainder, degree_cap)?;
    let label = format!("{}({})_{}", f.name(), op, method);
    Ok((OperatorSpec::from_symbol(symbol).with_label(label), derivs))
}

/// `p/q` with the denominator always written out.
pub fn fraction(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Result of [`reg_sum`].
#[derive(Debug, Clone)]
pub struct RegSum {
    /// Present when every derivative used was exact.
    pub value_exact: Option<Rational>,
    pub value_float: f64,
    pub derivatives: Option<RegularizedDerivatives>,
    pub method: SummationMethod,
}

impl RegSum {
    pub fn order_used(&self) -> usize {
        self.derivatives.as_ref().map_or(0, |d| d.order_used())
    }

    pub fn terms_used(&self) -> usize {
        self.derivatives.as_ref().map_or(0, |d| d.terms_used())
    }

    pub fn provenance(&self) -> Vec<&'static str> {
        self.derivatives
            .as_ref()
            .map(|d| d.entries.iter().map(|e| e.provenance.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "value_exact": self.value_exact.as_ref().map(fraction),
            "value_float": round_sig(self.value_float),
            "method": self.method.to_string(),
            "order_used": self.order_used(),
            "terms_used": self.terms_used(),
            "provenance": self.provenance(),
        })
    }
}

/// `mu`-sum of `sum a_n (T^n P)(x)`, i.e. `f(T)_mu P` evaluated at `x`.
pub fn reg_sum(
    f: &SeriesSpec,
    op: &OperatorSpec,
    p: &Polynomial,
    x: &Rational,
    method: &SummationMethod,
) -> Result<RegSum, RegularizeError> {
    let Some(deg) = p.degree() else {
        return Ok(RegSum {
            value_exact: Some(Rational::zero()),
            value_float: 0.0,
            derivatives: None,
            method: method.clone(),
        });
    };
    let (reg_op, derivs) = reg_operator_parts(f, op, method, deg)?;
    if derivs.is_exact() {
        let value = reg_op.apply(p)?.eval(x);
        return Ok(RegSum {
            value_float: to_f64(&value),
            value_exact: Some(value),
            derivatives: Some(derivs),
            method: method.clone(),
        });
    }
    // sum_k f^(k)(c)/k! (R^k P)(x) with exact R^k P and float coefficients
    let (_, remainder) = op.remainder()?;
    let mut rk_p = p.clone();
    let mut value = 0.0;
    for k in 0..=deg {
        if k > 0 {
            rk_p = remainder.apply(&rk_p)?;
        }
        let weight = derivs.to_f64(k) / to_f64(&Rational::from_integer(factorial(k)));
        value += weight * to_f64(&rk_p.eval(x));
    }
    Ok(RegSum {
        value_exact: None,
        value_float: value,
        derivatives: Some(derivs),
        method: method.clone(),
    })
}

/// Like [`reg_sum`] but refuses any derivative without an exact value.
pub fn reg_sum_exact(
    f: &SeriesSpec,
    op: &OperatorSpec,
    p: &Polynomial,
    x: &Rational,
    method: &SummationMethod,
) -> Result<Rational, RegularizeError> {
    if let Some(deg) = p.degree() {
        let (c, _) = op.remainder()?;
        for k in 0..=deg {
            let exact = c.is_zero()
                || matches!(f.exact_reg_deriv(k, &c, method), Some(ClosedForm::Rational(_)));
            if !exact {
                return Err(RegularizeError::NotExact { k });
            }
        }
    }
    let sum = reg_sum(f, op, p, x, method)?;
    sum.value_exact.ok_or(RegularizeError::NotExact { k: 0 })
}

/// Euler numbers `E_0..=E_{n_max}`, defined by `1/cosh t = sum E_k t^k / k!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerTable {
    values: Vec<BigInt>,
}

impl EulerTable {
    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn get(&self, k: usize) -> &BigInt {
        &self.values[k]
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Decimal strings, for JSON export.
    pub fn to_json(&self) -> Value {
        Value::Array(self.values.iter().map(|v| Value::String(v.to_string())).collect())
    }
}

/// `E_k = k! [t^k] (cosh t)^{-1}`.
pub fn euler_numbers(n_max: usize) -> EulerTable {
    let sech = PowerSeries::cosh(n_max)
        .inverse()
        .expect("cosh has constant term 1");
    let values = sech
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let e = c * Rational::from_integer(factorial(k));
            debug_assert!(e.is_integer());
            e.to_integer()
        })
        .collect();
    EulerTable { values }
}

/// `1/2 sum_k E_k h^k / (2^k k!) P^(k)(x - h/2)`, the Cesaro sum of
/// `sum_n (-1)^n P(x + n h)` written with Euler numbers.
pub fn euler_alt_sum(p: &Polynomial, h: &Rational, x: &Rational) -> Rational {
    let Some(deg) = p.degree() else {
        return Rational::zero();
    };
    let euler = euler_numbers(deg);
    let at = x - h / int(2);
    let half_h = h / int(2);
    let mut dp = p.clone();
    let mut acc = Rational::zero();
    for k in 0..=deg {
        if k > 0 {
            dp = dp.derivative();
        }
        let e = euler.get(k);
        if e.is_zero() {
            continue;
        }
        let weight = Rational::from_integer(e.clone()) * pow(&half_h, k as i64)
            / Rational::from_integer(factorial(k));
        acc += weight * dp.eval(&at);
    }
    acc / int(2)
}

/// `sum_n (-1)^n n^m` in the Cesaro sense:
/// `2^{-(m+1)} sum_k (-1)^{m-k} E_k binom(m, k)`.
pub fn alt_power_sum(m: usize) -> Rational {
    let euler = euler_numbers(m);
    let sum = (0..=m).fold(BigInt::zero(), |acc, k| {
        let term = euler.get(k) * binomial(m, k);
        if (m - k) % 2 == 0 {
            acc + term
        } else {
            acc - term
        }
    });
    Rational::new(sum, BigInt::one() << (m + 1))
}

/// `sum_n (-1)^n binom(n, m) = (-1)^m / 2^{m+1}` in the Cesaro sense.
pub fn alt_binom_sum(m: usize) -> Rational {
    let sign = if m % 2 == 0 { 1 } else { -1 };
    Rational::new(BigInt::from(sign), BigInt::one() << (m + 1))
}

/// The same value through the difference-operator expansion
/// `1/2 sum_{k=0}^m (-1)^k / 2^k (Delta^k binom(x, m))(0)`, where
/// `Delta^k binom(x, m) = binom(x, m - k)` and `binom(0, j) = [j = 0]`.
pub fn alt_binom_sum_telescoped(m: usize) -> Rational {
    (0..=m).fold(Rational::zero(), |acc, k| {
        let binom_zero = if m == k { Rational::one() } else { Rational::zero() };
        acc + pow(&int(-1), k as i64) / Rational::from_integer(BigInt::one() << k) * binom_zero
    }) / int(2)
}

/// Both sides of the product rule
/// `(f g)^(n)(1)_mu = sum_k binom(n, k) f^(k)(1)_mu g^(n-k)(1)_mu`, the left
/// side computed numerically on the Cauchy product series.
pub fn product_rule_check(
    f: &SeriesSpec,
    g: &SeriesSpec,
    n: usize,
    method: &SummationMethod,
) -> Result<(f64, f64), RegularizeError> {
    let one = Rational::one();
    let product = cauchy_product(f, g);
    let lhs = reg_derivative(&product, &one, method, n)?.value.to_f64();
    let df = reg_derivatives(f, &one, method, n)?;
    let dg = reg_derivatives(g, &one, method, n)?;
    let rhs = (0..=n)
        .map(|k| to_f64(&Rational::from_integer(binomial(n, k))) * df.to_f64(k) * dg.to_f64(n - k))
        .sum();
    Ok((lhs, rhs))
}
