//! Truncated formal power series over [`Rational`].
//!
//! A [`PowerSeries`] knows its coefficients of `t^0 ..= t^order` exactly and
//! nothing beyond. Binary operations produce a result whose order is the
//! minimum of the operand orders, so precision is never silently invented.
//! This module holds no floating point state.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{format_rational, int, parse_rational, ParseError, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("series is not invertible: constant term is zero")]
    NonUnit,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("coefficient t^{n} requested but series is only known to order {order}")]
    OrderExceeded { n: usize, order: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Working order used when a caller does not pick one: the largest degree
/// involved plus a little padding.
pub fn default_order(degree: usize, k_max: usize) -> usize {
    degree.max(k_max) + 4
}

/// Formal power series known up to and including `t^order`.
#[derive(Debug, Clone)]
pub struct PowerSeries {
    coeffs: Vec<Rational>,
    order: usize,
}

impl PowerSeries {
    /// Pads with zeros or truncates `coeffs` to exactly `order + 1` entries.
    pub fn new(mut coeffs: Vec<Rational>, order: usize) -> Self {
        coeffs.resize(order + 1, Rational::zero());
        PowerSeries { coeffs, order }
    }

    pub fn from_fn(order: usize, f: impl FnMut(usize) -> Rational) -> Self {
        PowerSeries {
            coeffs: (0..=order).map(f).collect(),
            order,
        }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::constant(Rational::one(), order)
    }

    pub fn constant(c: Rational, order: usize) -> Self {
        Self::new(vec![c], order)
    }

    /// `c * t^k`.
    pub fn monomial(c: Rational, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// `1/(1 - t) = sum t^n`.
    pub fn geometric(order: usize) -> Self {
        Self::from_fn(order, |_| Rational::one())
    }

    /// `e^{h t} = sum h^n t^n / n!`.
    pub fn exp_linear(h: &Rational, order: usize) -> Self {
        let mut c = Rational::one();
        Self::from_fn(order, |n| {
            if n > 0 {
                c = &c * h / int(n as i64);
            }
            c.clone()
        })
    }

    /// `cosh t`.
    pub fn cosh(order: usize) -> Self {
        let mut fact = Rational::one();
        Self::from_fn(order, |n| {
            if n > 0 {
                fact = &fact / int(n as i64);
            }
            if n % 2 == 0 {
                fact.clone()
            } else {
                Rational::zero()
            }
        })
    }

    /// `log(1 + t) = sum_{n>=1} (-1)^{n+1} t^n / n`.
    pub fn log1p(order: usize) -> Self {
        Self::from_fn(order, |n| match n {
            0 => Rational::zero(),
            n if n % 2 == 1 => Rational::new(BigInt::one(), BigInt::from(n)),
            n => Rational::new(-BigInt::one(), BigInt::from(n)),
        })
    }

    /// `exp(1/(1+t) - 1) = exp(-t/(1+t))`, i.e. the Taylor series of
    /// `e^{1/(1+t)}` divided by `e`.
    ///
    /// Computed from `(1+t)^2 g' = -g`, which gives the three term recurrence
    /// `(n+1) g_{n+1} = -(2n+1) g_n - (n-1) g_{n-1}`. Agrees with
    /// `PowerSeries::exp` applied to `-t/(1+t)` but runs in linear time.
    pub fn exp_reciprocal_shift(order: usize) -> Self {
        let mut coeffs: Vec<Rational> = Vec::with_capacity(order + 1);
        coeffs.push(Rational::one());
        for n in 0..order {
            let mut next = -(int(2 * n as i64 + 1) * &coeffs[n]);
            if n >= 1 {
                next -= int(n as i64 - 1) * &coeffs[n - 1];
            }
            coeffs.push(next / int(n as i64 + 1));
        }
        PowerSeries { coeffs, order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// `[t^n] f`.
    pub fn coeff(&self, n: usize) -> Result<&Rational, SeriesError> {
        self.coeffs.get(n).ok_or(SeriesError::OrderExceeded {
            n,
            order: self.order,
        })
    }

    pub fn constant_term(&self) -> &Rational {
        &self.coeffs[0]
    }

    /// Forgets every coefficient past `order` (no-op if already lower).
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        PowerSeries {
            coeffs: self.coeffs[..=order].to_vec(),
            order,
        }
    }

    /// True when every known coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            order: self.order,
        }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let f0 = &self.coeffs[0];
        if f0.is_zero() {
            return Err(SeriesError::NonUnit);
        }
        let inv0 = f0.recip();
        let mut g: Vec<Rational> = Vec::with_capacity(self.order + 1);
        g.push(inv0.clone());
        for n in 1..=self.order {
            let mut acc = Rational::zero();
            for k in 1..=n {
                if !self.coeffs[k].is_zero() {
                    acc += &self.coeffs[k] * &g[n - k];
                }
            }
            g.push(-acc * &inv0);
        }
        Ok(PowerSeries {
            coeffs: g,
            order: self.order,
        })
    }

    /// Term-wise derivative `D_t`; the order drops by one, so an order-0
    /// series has no known derivative.
    pub fn derivative(&self) -> Result<Self, SeriesError> {
        if self.order == 0 {
            return Err(SeriesError::OrderExceeded { n: 1, order: 0 });
        }
        Ok(PowerSeries {
            coeffs: (1..=self.order)
                .map(|n| &self.coeffs[n] * int(n as i64))
                .collect(),
            order: self.order - 1,
        })
    }

    /// Formal antiderivative with zero constant term; the order rises by one.
    pub fn integral(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.order + 2);
        coeffs.push(Rational::zero());
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c / int(n as i64 + 1)),
        );
        PowerSeries {
            coeffs,
            order: self.order + 1,
        }
    }

    /// Formal `exp(f)`; only defined exactly when `f(0) = 0`.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::Domain(
                "exp needs a zero constant term (e^c is not rational for c != 0)".into(),
            ));
        }
        // g' = f' g  =>  n g_n = sum_{k=1}^n k f_k g_{n-k}
        let mut g: Vec<Rational> = Vec::with_capacity(self.order + 1);
        g.push(Rational::one());
        for n in 1..=self.order {
            let mut acc = Rational::zero();
            for k in 1..=n {
                if !self.coeffs[k].is_zero() {
                    acc += int(k as i64) * &self.coeffs[k] * &g[n - k];
                }
            }
            g.push(acc / int(n as i64));
        }
        Ok(PowerSeries {
            coeffs: g,
            order: self.order,
        })
    }

    /// Formal `log(f)`; requires `f(0) = 1`.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_one() {
            return Err(SeriesError::Domain("log needs constant term 1".into()));
        }
        if self.order == 0 {
            return Ok(Self::zero(0));
        }
        let quotient = &self.derivative()? * &self.inverse()?;
        Ok(quotient.integral())
    }

    /// `f(g(t))`; requires `g(0) = 0` so that every coefficient is a finite sum.
    pub fn compose(&self, inner: &PowerSeries) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::Domain(
                "composition needs the inner series to vanish at 0".into(),
            ));
        }
        let order = self.order.min(inner.order);
        let inner = inner.truncate(order);
        let mut acc = PowerSeries::constant(self.coeffs[order].clone(), order);
        for c in self.coeffs[..order].iter().rev() {
            acc = &acc * &inner;
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Generating series of the partial-sum sequence: multiplication by
    /// `1/(1 - t)`, so coefficient `n` is `sum_{k<=n} [t^k] f`.
    pub fn gen_partial_sums(&self) -> Self {
        let mut acc = Rational::zero();
        PowerSeries {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| {
                    acc += c;
                    acc.clone()
                })
                .collect(),
            order: self.order,
        }
    }

    /// Coefficients as `"p/q"` strings, for JSON exchange.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(format_rational).collect()
    }

    /// Inverse of [`PowerSeries::to_strings`]; order is `len - 1`.
    pub fn from_strings<S: AsRef<str>>(items: &[S]) -> Result<Self, SeriesError> {
        if items.is_empty() {
            return Err(SeriesError::Domain("empty coefficient list".into()));
        }
        let coeffs = items
            .iter()
            .map(|s| parse_rational(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let order = coeffs.len() - 1;
        Ok(PowerSeries { coeffs, order })
    }
}

/// Coefficient-wise equality up to the common order.
impl PartialEq for PowerSeries {
    fn eq(&self, other: &Self) -> bool {
        let n = self.order.min(other.order);
        self.coeffs[..=n] == other.coeffs[..=n]
    }
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order.min(rhs.order);
        PowerSeries::from_fn(order, |n| &self.coeffs[n] + &rhs.coeffs[n])
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order.min(rhs.order);
        PowerSeries::from_fn(order, |n| &self.coeffs[n] - &rhs.coeffs[n])
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order.min(rhs.order);
        let mut out = vec![Rational::zero(); order + 1];
        for (i, a) in self.coeffs[..=order].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs[..=order - i].iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        PowerSeries { coeffs: out, order }
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        self.scale(&-Rational::one())
    }
}

/// `c0 + c1*t + c2*t^2 + O(t^{N+1})`, zero terms omitted.
impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            first = false;
            let mag = c.abs();
            match (n, mag.is_one()) {
                (0, _) => f.write_str(&format_rational(&mag))?,
                (1, true) => f.write_str("t")?,
                (1, false) => write!(f, "{}*t", format_rational(&mag))?,
                (_, true) => write!(f, "t^{n}")?,
                (_, false) => write!(f, "{}*t^{n}", format_rational(&mag))?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(t^{})", self.order + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{factorial, rat};
    use crate::strategies::{arb_nonzero_rational, arb_series};
    use proptest::prelude::*;

    fn ps(c: &[i64], order: usize) -> PowerSeries {
        PowerSeries::new(c.iter().map(|&x| int(x)).collect(), order)
    }

    fn alternating(order: usize) -> PowerSeries {
        PowerSeries::from_fn(order, |n| int(if n % 2 == 0 { 1 } else { -1 }))
    }

    #[test]
    fn ring_examples() {
        assert_eq!(&ps(&[1, 1], 6) * &ps(&[1, -1], 6), ps(&[1, 0, -1], 6));
        let f = ps(&[3, -1, 4, 1, 5], 4);
        assert_eq!(&f * &PowerSeries::one(4), f);
        assert_eq!(&PowerSeries::geometric(10) * &ps(&[1, -1], 10), PowerSeries::one(10));
        assert_eq!((&f * &PowerSeries::one(2)).order(), 2);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(ps(&[1, -1], 8).inverse().unwrap(), PowerSeries::geometric(8));
        assert_eq!(ps(&[1, 1], 8).inverse().unwrap(), alternating(8));
        assert_eq!(ps(&[0, 1], 8).inverse().unwrap_err(), SeriesError::NonUnit);
        let sech = PowerSeries::cosh(8).inverse().unwrap();
        let euler = [1, 0, -1, 0, 5, 0, -61, 0, 1385];
        for (k, e) in euler.iter().enumerate() {
            let expect = int(*e) / Rational::from_integer(factorial(k));
            assert_eq!(sech.coeff(k).unwrap(), &expect);
        }
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(
            PowerSeries::log1p(10).derivative().unwrap(),
            alternating(9)
        );
        assert!(PowerSeries::one(5).derivative().unwrap().is_zero());
        let t4 = PowerSeries::monomial(int(1), 4, 7);
        assert_eq!(t4.derivative().unwrap(), PowerSeries::monomial(int(4), 3, 6));
        assert!(PowerSeries::one(0).derivative().is_err());
    }

    #[test]
    fn exp_log_examples() {
        let h = rat(1, 2);
        let t_h = PowerSeries::monomial(h.clone(), 1, 8);
        assert_eq!(t_h.exp().unwrap(), PowerSeries::exp_linear(&h, 8));
        assert_eq!(
            PowerSeries::exp_linear(&h, 3).coeffs(),
            &[int(1), rat(1, 2), rat(1, 8), rat(1, 48)]
        );
        assert_eq!(ps(&[1, 1], 9).log().unwrap(), PowerSeries::log1p(9));
        let t2 = PowerSeries::monomial(int(1), 2, 9);
        assert_eq!(t2.exp().unwrap().log().unwrap(), t2);
        assert!(matches!(ps(&[1, 1], 3).exp(), Err(SeriesError::Domain(_))));
        assert!(matches!(ps(&[2, 1], 3).log(), Err(SeriesError::Domain(_))));
    }

    #[test]
    fn compose_examples() {
        let f = ps(&[2, -3, 5, 7], 6);
        let t = PowerSeries::monomial(int(1), 1, 6);
        assert_eq!(f.compose(&t).unwrap(), f);
        let t2 = PowerSeries::monomial(int(1), 2, 10);
        let even = PowerSeries::from_fn(10, |n| int(if n % 2 == 0 { 1 } else { 0 }));
        assert_eq!(PowerSeries::geometric(10).compose(&t2).unwrap(), even);
        assert!(f.compose(&PowerSeries::one(6)).is_err());
    }

    #[test]
    fn exp_of_reciprocal_matches_generic_exp() {
        let order = 30;
        // -t/(1+t) = t * -(1+t)^{-1}
        let inner = &PowerSeries::monomial(int(-1), 1, order) * &alternating(order);
        let generic = inner.exp().unwrap();
        let fast = PowerSeries::exp_reciprocal_shift(order);
        assert_eq!(generic, fast);
        assert_eq!(fast.coeffs()[..3], [int(1), int(-1), rat(3, 2)]);

        // e * g(0.1) against direct evaluation of e^{1/(1+z)}
        let z = 0.1f64;
        let approx: f64 = fast
            .coeffs()
            .iter()
            .enumerate()
            .map(|(n, c)| crate::algebra::to_f64(c) * z.powi(n as i32))
            .sum();
        let direct = (1.0 / (1.0 + z)).exp();
        assert!((std::f64::consts::E * approx - direct).abs() < 1e-12);
    }

    #[test]
    fn coefficient_extraction() {
        assert_eq!(ps(&[1, 1], 5).inverse().unwrap().coeff(3).unwrap(), &int(-1));
        // (-t)^{k-1} (1-t)^{-k} at k = 3: leading coefficient of t^2 is 1
        let k = 3;
        let lead = PowerSeries::monomial(int(1), k - 1, 8);
        let pole = (0..k).fold(PowerSeries::one(8), |acc, _| &acc * &PowerSeries::geometric(8));
        assert_eq!((&lead * &pole).coeff(k - 1).unwrap(), &int(1));
        assert_eq!(
            PowerSeries::geometric(6).gen_partial_sums().coeff(4).unwrap(),
            &int(5)
        );
        assert_eq!(
            PowerSeries::one(3).coeff(4).unwrap_err(),
            SeriesError::OrderExceeded { n: 4, order: 3 }
        );
    }

    #[test]
    fn partial_sum_generating_series() {
        assert_eq!(PowerSeries::one(6).gen_partial_sums(), PowerSeries::geometric(6));
        assert_eq!(
            alternating(6).gen_partial_sums(),
            ps(&[1, 0, 1, 0, 1, 0, 1], 6)
        );
    }

    /// Generating series of `(-1)^n binom(n, k-1)` summed `k+1` times equals
    /// `(-1)^{k-1} sum_{n>=k-1} binom(mu(n)+k, k) t^n`.
    #[test]
    fn iterated_partial_sums_of_alternating_binomials() {
        let order = 40;
        for k in 1..=4usize {
            let beta = PowerSeries::from_fn(order, |n| {
                let sign = if n % 2 == 0 { 1 } else { -1 };
                int(sign) * Rational::from_integer(crate::algebra::binomial(n, k - 1))
            });
            let summed = (0..=k).fold(beta, |acc, _| acc.gen_partial_sums());
            let sign = if (k - 1) % 2 == 0 { 1 } else { -1 };
            for n in 0..=order {
                let expect = if n + 1 < k {
                    Rational::zero()
                } else {
                    let mu = if (n + k) % 2 == 0 { (n - k) / 2 } else { (n + 1 - k) / 2 };
                    int(sign) * Rational::from_integer(crate::algebra::binomial(mu + k, k))
                };
                assert_eq!(summed.coeff(n).unwrap(), &expect, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn display_and_strings() {
        let s = PowerSeries::exp_linear(&rat(1, 2), 3);
        assert_eq!(s.to_string(), "1 + 1/2*t + 1/8*t^2 + 1/48*t^3 + O(t^4)");
        assert_eq!(ps(&[0, -1], 2).to_string(), "-t + O(t^3)");
        assert_eq!(PowerSeries::zero(1).to_string(), "0 + O(t^2)");
        let back = PowerSeries::from_strings(&s.to_strings()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.order(), 3);
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_series(6), b in arb_series(6), c in arb_series(5)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn inverse_is_two_sided(mut a in arb_series(8), c0 in arb_nonzero_rational()) {
            a.coeffs[0] = c0;
            let inv = a.inverse().unwrap();
            prop_assert_eq!(&a * &inv, PowerSeries::one(8));
        }

        #[test]
        fn leibniz_rule(a in arb_series(7), b in arb_series(7)) {
            let lhs = (&a * &b).derivative().unwrap();
            let rhs = &(&a.derivative().unwrap() * &b) + &(&a * &b.derivative().unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn partial_sums_are_prefix_sums(a in arb_series(12)) {
            let s = a.gen_partial_sums();
            for n in 0..=12 {
                let direct = a.coeffs()[..=n].iter().fold(Rational::zero(), |acc, c| acc + c);
                prop_assert_eq!(s.coeff(n).unwrap(), &direct);
            }
        }
    }
}
