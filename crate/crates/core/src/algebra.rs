//! Exact rational scalars and dense univariate polynomials over them.
//!
//! Every scalar in the crate is a [`Rational`] (an arbitrary precision
//! fraction kept in lowest terms). [`Polynomial`] stores its coefficients
//! densely, lowest power first, with trailing zeros trimmed so the zero
//! polynomial is the empty coefficient list.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact arbitrary precision rational number, always in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Shorthand for the rational `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Nearest `f64` to `q`.
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `n!` as a big integer.
pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `binom(n, k)` for natural `n`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `q^e` for a (possibly negative) integer exponent. Panics on `0^e`, `e < 0`.
pub fn pow(q: &Rational, e: i64) -> Rational {
    if e >= 0 {
        num_traits::pow(q.clone(), e as usize)
    } else {
        num_traits::pow(q.recip(), e.unsigned_abs() as usize)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    /// Character offset of the offending input.
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    pub(crate) fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError {
            pos,
            msg: msg.into(),
        }
    }
}

/// Parses an integer or `p/q` literal with optional leading sign.
pub fn parse_rational(text: &str) -> Result<Rational, ParseError> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    let negative = cur.eat_minus();
    if !negative {
        cur.eat('+');
    }
    cur.skip_ws();
    let q = cur.rational()?;
    cur.skip_ws();
    if let Some(c) = cur.peek() {
        return Err(ParseError::new(cur.pos, format!("unexpected '{c}'")));
    }
    Ok(if negative { -q } else { q })
}

/// Character cursor shared by the small literal parsers in this crate.
pub(crate) struct Cursor {
    chars: Vec<char>,
    pub(crate) pos: usize,
}

impl Cursor {
    pub(crate) fn new(text: &str) -> Self {
        Cursor {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// ASCII `-` or the unicode minus sign.
    pub(crate) fn eat_minus(&mut self) -> bool {
        self.eat('-') || self.eat('\u{2212}')
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    pub(crate) fn digits(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.peek() {
                Some(c) => ParseError::new(start, format!("expected digits, found '{c}'")),
                None => ParseError::new(start, "expected digits, found end of input"),
            });
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        Ok(s.parse().expect("ascii digits"))
    }

    /// Unsigned `p` or `p/q`.
    pub(crate) fn rational(&mut self) -> Result<Rational, ParseError> {
        let numer = self.digits()?;
        self.skip_ws();
        if self.eat('/') {
            self.skip_ws();
            let at = self.pos;
            let denom = self.digits()?;
            if denom.is_zero() {
                return Err(ParseError::new(at, "zero denominator"));
            }
            Ok(Rational::new(numer, denom))
        } else {
            Ok(Rational::from_integer(numer))
        }
    }
}

/// Dense polynomial in `x` over [`Rational`], lowest power first.
///
/// The highest stored coefficient is nonzero; the zero polynomial stores
/// nothing and has no degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    /// `c * x^k`.
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// `P(x + h)`, expanded through Taylor's formula `sum_n h^n/n! D^n P(x)`.
    pub fn translate(&self, h: &Rational) -> Self {
        let mut out = Polynomial::zero();
        let mut dp = self.clone();
        let mut weight = Rational::one();
        let mut n = 0usize;
        while !dp.is_zero() {
            out = &out + &dp.scale(&weight);
            n += 1;
            weight = weight * h / Rational::from_integer(BigInt::from(n));
            dp = dp.derivative();
        }
        out
    }

    /// Falling factorial `[x]_k = x(x-1)...(x-k+1)`, with `[x]_0 = 1`.
    pub fn falling_factorial(k: usize) -> Self {
        (0..k).fold(Polynomial::one(), |acc, i| {
            &acc * &Polynomial::from_coeffs(vec![-int(i as i64), Rational::one()])
        })
    }

    /// `binom(x, k) = [x]_k / k!`.
    pub fn binomial(k: usize) -> Self {
        Self::falling_factorial(k).scale(&Rational::from_integer(factorial(k)).recip())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

/// Descending powers, `p/q` coefficients, e.g. `3*x^2 - 1/2*x + 7`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            let body = match (k, mag.is_one()) {
                (0, _) => format_rational(&mag),
                (1, true) => "x".to_string(),
                (1, false) => format!("{}*x", format_rational(&mag)),
                (_, true) => format!("x^{k}"),
                (_, false) => format!("{}*x^{k}", format_rational(&mag)),
            };
            f.write_str(&body)?;
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = ParseError;

    /// Terms `c`, `c*x`, `c*x^k`, `x`, `x^k` joined by `+`/`-`; coefficients
    /// are integers or `p/q`. Whitespace is ignored.
    fn from_str(text: &str) -> Result<Self, ParseError> {
        let mut cur = Cursor::new(text);
        let mut coeffs: Vec<Rational> = Vec::new();
        cur.skip_ws();
        if cur.at_end() {
            return Err(ParseError::new(0, "empty polynomial"));
        }
        let mut negative = cur.eat_minus();
        if !negative {
            cur.eat('+');
        }
        loop {
            cur.skip_ws();
            let (c, k) = parse_term(&mut cur)?;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, Rational::zero());
            }
            if negative {
                coeffs[k] -= c;
            } else {
                coeffs[k] += c;
            }
            cur.skip_ws();
            match cur.peek() {
                None => break,
                Some('+') => {
                    cur.pos += 1;
                    negative = false;
                }
                Some('-') | Some('\u{2212}') => {
                    cur.pos += 1;
                    negative = true;
                }
                Some(c) => {
                    return Err(ParseError::new(
                        cur.pos,
                        format!("expected '+' or '-', found '{c}'"),
                    ))
                }
            }
        }
        Ok(Polynomial::from_coeffs(coeffs))
    }
}

fn parse_term(cur: &mut Cursor) -> Result<(Rational, usize), ParseError> {
    let coeff = if cur.peek() == Some('x') {
        Rational::one()
    } else {
        let c = cur.rational()?;
        cur.skip_ws();
        if !cur.eat('*') {
            return Ok((c, 0));
        }
        cur.skip_ws();
        c
    };
    if !cur.eat('x') {
        return Err(match cur.peek() {
            Some(c) => ParseError::new(cur.pos, format!("expected 'x', found '{c}'")),
            None => ParseError::new(cur.pos, "expected 'x', found end of input"),
        });
    }
    cur.skip_ws();
    let power = if cur.eat('^') {
        cur.skip_ws();
        let at = cur.pos;
        cur.digits()?
            .to_usize()
            .ok_or_else(|| ParseError::new(at, "exponent too large"))?
    } else {
        1
    };
    Ok((coeff, power))
}
