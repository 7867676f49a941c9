//! Translation-invariant operators on polynomials, represented by symbol.
//!
//! An operator `T` commuting with `D = d/dx` is determined by its symbol
//! `sigma_T(t) = sum c_n(T) t^n / n!` with `c_n(T) = (T x^n)(0)`, and acts as
//! `T = sum c_n(T)/n! D^n`. Composition of operators is multiplication of
//! symbols. Applying `T` to a polynomial of degree `d` only needs the symbol
//! through `t^d`, so each operator can produce its symbol lazily to any
//! requested order; only operators built from an explicitly truncated power
//! series are limited in what they can be applied to.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{format_rational, int, Cursor, ParseError, Polynomial, Rational};
use crate::power_series::PowerSeries;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("operator symbol is only known to order {available}, order {needed} required")]
    SymbolTruncated { needed: usize, available: usize },
    #[error("invalid operator literal: {0}")]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Diff,
    Shift(Rational),
    Delta(Rational),
    /// Symbol is a polynomial in `t`: exact at every order.
    Finite(Vec<Rational>),
    /// Symbol known only through `t^order`.
    Truncated(PowerSeries),
    Sum(Vec<(Rational, OperatorSpec)>),
    Compose(Box<OperatorSpec>, Box<OperatorSpec>),
    Power(Box<OperatorSpec>, usize),
}

/// A translation-invariant operator given by its symbol.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    kind: Kind,
    label: Option<String>,
}

impl OperatorSpec {
    fn of(kind: Kind) -> Self {
        OperatorSpec { kind, label: None }
    }

    pub fn identity() -> Self {
        Self::of(Kind::Identity)
    }

    /// `D = d/dx`, symbol `t`.
    pub fn diff() -> Self {
        Self::of(Kind::Diff)
    }

    /// `U^h: p(x) -> p(x + h)`, symbol `e^{th}`.
    pub fn shift(h: Rational) -> Self {
        Self::of(Kind::Shift(h))
    }

    /// Forward difference `U^h - I`, symbol `e^{th} - 1`.
    pub fn delta(h: Rational) -> Self {
        Self::of(Kind::Delta(h))
    }

    /// Operator whose symbol is the polynomial `sum coeffs[n] t^n`.
    pub fn from_symbol_coeffs(coeffs: Vec<Rational>) -> Self {
        Self::of(Kind::Finite(coeffs))
    }

    /// Operator with the given truncated symbol (the map `Q`).
    pub fn from_symbol(symbol: PowerSeries) -> Self {
        Self::of(Kind::Truncated(symbol))
    }

    /// `sum c_i T_i`.
    pub fn scaled_sum(terms: Vec<(Rational, OperatorSpec)>) -> Self {
        Self::of(Kind::Sum(terms))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &OperatorSpec) -> Self {
        Self::of(Kind::Compose(Box::new(self.clone()), Box::new(inner.clone())))
    }

    /// `self^k`, with `self^0 = I`.
    pub fn pow(&self, k: usize) -> Self {
        Self::of(Kind::Power(Box::new(self.clone()), k))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Highest order to which the symbol is known, `None` if unbounded.
    pub fn known_order(&self) -> Option<usize> {
        match &self.kind {
            Kind::Identity | Kind::Diff | Kind::Shift(_) | Kind::Delta(_) | Kind::Finite(_) => None,
            Kind::Truncated(s) => Some(s.order()),
            Kind::Sum(terms) => terms.iter().filter_map(|(_, t)| t.known_order()).min(),
            Kind::Compose(a, b) => match (a.known_order(), b.known_order()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
            Kind::Power(_, 0) => None,
            Kind::Power(t, _) => t.known_order(),
        }
    }

    /// The symbol `sigma_T` through `t^order`.
    pub fn symbol(&self, order: usize) -> Result<PowerSeries, OperatorError> {
        if let Some(available) = self.known_order() {
            if available < order {
                return Err(OperatorError::SymbolTruncated {
                    needed: order,
                    available,
                });
            }
        }
        Ok(match &self.kind {
            Kind::Identity => PowerSeries::one(order),
            Kind::Diff => PowerSeries::monomial(Rational::one(), 1, order),
            Kind::Shift(h) => PowerSeries::exp_linear(h, order),
            Kind::Delta(h) => &PowerSeries::exp_linear(h, order) - &PowerSeries::one(order),
            Kind::Finite(c) => PowerSeries::new(c.clone(), order),
            Kind::Truncated(s) => s.truncate(order),
            Kind::Sum(terms) => {
                let mut acc = PowerSeries::zero(order);
                for (c, t) in terms {
                    acc = &acc + &t.symbol(order)?.scale(c);
                }
                acc
            }
            Kind::Compose(a, b) => &a.symbol(order)? * &b.symbol(order)?,
            Kind::Power(t, k) => {
                let base = t.symbol(order)?;
                (0..*k).fold(PowerSeries::one(order), |acc, _| &acc * &base)
            }
        })
    }

    /// `c_0(T) = T 1`.
    pub fn constant_term(&self) -> Result<Rational, OperatorError> {
        Ok(self.symbol(0)?.constant_term().clone())
    }

    /// `c_n(T) = (T x^n)(0)`, read off the symbol.
    pub fn moment(&self, n: usize) -> Result<Rational, OperatorError> {
        let s = self.symbol(n)?;
        Ok(s.coeffs()[n].clone() * Rational::from_integer(crate::algebra::factorial(n)))
    }

    /// `T P = sum_{n <= deg P} c_n(T)/n! D^n P`.
    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, OperatorError> {
        let Some(deg) = p.degree() else {
            return Ok(Polynomial::zero());
        };
        let symbol = self.symbol(deg)?;
        Ok(apply_symbol(&symbol, p))
    }

    /// Splits `T = c + R` with `c = c_0(T)` and `R = T - c I`; the symbol of
    /// `R` has zero constant term so `R^n P = 0` whenever `n > deg P`.
    pub fn remainder(&self) -> Result<(Rational, OperatorSpec), OperatorError> {
        let c = self.constant_term()?;
        let r = OperatorSpec::scaled_sum(vec![
            (Rational::one(), self.clone()),
            (-c.clone(), OperatorSpec::identity()),
        ]);
        Ok((c, r))
    }

    /// Symbol equality through `t^order`.
    pub fn symbol_eq(&self, other: &OperatorSpec, order: usize) -> Result<bool, OperatorError> {
        Ok(self.symbol(order)? == other.symbol(order)?)
    }

    /// Literal form accepted by [`FromStr`] where one exists.
    pub fn literal(&self) -> String {
        match &self.kind {
            Kind::Identity => "identity".into(),
            Kind::Diff => "diff".into(),
            Kind::Shift(h) => format!("shift:{}", format_rational(h)),
            Kind::Delta(h) => format!("delta:{}", format_rational(h)),
            Kind::Finite(c) => format!("symbol:[{}]", join(c)),
            Kind::Truncated(s) => format!("symbol:[{}]", join(s.coeffs())),
            Kind::Sum(terms) => terms
                .iter()
                .map(|(c, t)| format!("{}*({})", format_rational(c), t.literal()))
                .collect::<Vec<_>>()
                .join(" + "),
            Kind::Compose(a, b) => format!("({})∘({})", a.literal(), b.literal()),
            Kind::Power(t, k) => format!("({})^{k}", t.literal()),
        }
    }
}

fn join(c: &[Rational]) -> String {
    c.iter().map(format_rational).collect::<Vec<_>>().join(",")
}

/// `sum_n s_n D^n P` for a symbol known at least through `t^{deg P}`.
pub(crate) fn apply_symbol(symbol: &PowerSeries, p: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero();
    let mut dp = p.clone();
    for s in symbol.coeffs() {
        if dp.is_zero() {
            break;
        }
        if !s.is_zero() {
            out = &out + &dp.scale(s);
        }
        dp = dp.derivative();
    }
    out
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(l) => f.write_str(l),
            None => f.write_str(&self.literal()),
        }
    }
}

impl FromStr for OperatorSpec {
    type Err = OperatorError;

    /// `identity`, `diff`, `shift:h`, `delta:h`, or `symbol:[c0,c1,...]`
    /// where the `c_n` are the symbol coefficients `c_n(T)/n!`.
    fn from_str(text: &str) -> Result<Self, OperatorError> {
        let text = text.trim();
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (text, None),
        };
        let offset = text.len() - rest.map_or(0, str::len);
        let op = match (head, rest) {
            ("identity", None) => OperatorSpec::identity(),
            ("diff", None) => OperatorSpec::diff(),
            ("shift", Some(r)) => OperatorSpec::shift(parse_at(r, offset)?),
            ("delta", Some(r)) => OperatorSpec::delta(parse_at(r, offset)?),
            ("symbol", Some(r)) => OperatorSpec::from_symbol_coeffs(parse_list(r, offset)?),
            _ => {
                return Err(ParseError::new(
                    0,
                    format!("unknown operator '{text}' (expected identity, diff, shift:h, delta:h, symbol:[...])"),
                )
                .into())
            }
        };
        Ok(op.with_label(text))
    }
}

fn parse_at(text: &str, offset: usize) -> Result<Rational, ParseError> {
    crate::algebra::parse_rational(text).map_err(|e| ParseError::new(e.pos + offset, e.msg))
}

/// `[a, b, ...]` of signed rationals.
pub(crate) fn parse_list(text: &str, offset: usize) -> Result<Vec<Rational>, ParseError> {
    let shift = |e: ParseError| ParseError::new(e.pos + offset, e.msg);
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    if !cur.eat('[') {
        return Err(shift(ParseError::new(cur.pos, "expected '['")));
    }
    let mut out = Vec::new();
    loop {
        cur.skip_ws();
        if out.is_empty() && cur.eat(']') {
            break;
        }
        let negative = cur.eat_minus();
        let q = cur.rational().map_err(shift)?;
        out.push(if negative { -q } else { q });
        cur.skip_ws();
        if cur.eat(']') {
            break;
        }
        if !cur.eat(',') {
            return Err(shift(ParseError::new(cur.pos, "expected ',' or ']'")));
        }
    }
    cur.skip_ws();
    if !cur.at_end() {
        return Err(shift(ParseError::new(cur.pos, "trailing input after ']'")));
    }
    if out.is_empty() {
        out.push(int(0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{factorial, rat};
    use crate::strategies::{arb_poly, arb_rational, arb_series};
    use proptest::prelude::*;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    #[test]
    fn from_symbol_examples() {
        let q = p("3*x^3 - x + 2/3");
        assert_eq!(OperatorSpec::from_symbol(PowerSeries::one(5)).apply(&q).unwrap(), q);
        let d = OperatorSpec::from_symbol(PowerSeries::monomial(int(1), 1, 5));
        assert_eq!(d.apply(&q).unwrap(), q.derivative());
        let h = rat(-3, 2);
        let u = OperatorSpec::from_symbol(PowerSeries::exp_linear(&h, 5));
        assert_eq!(u.apply(&q).unwrap(), q.translate(&h));
    }

    #[test]
    fn symbol_examples() {
        let fact = |n: usize| Rational::from_integer(factorial(n)).recip();
        assert_eq!(
            OperatorSpec::shift(int(1)).symbol(6).unwrap(),
            PowerSeries::from_fn(6, fact)
        );
        // e^t - 1, checked against (Delta x^n)(0) computed by application
        let delta = OperatorSpec::delta(int(1));
        let sym = delta.symbol(6).unwrap();
        for n in 0..=6 {
            let applied = delta.apply(&Polynomial::monomial(int(1), n)).unwrap().eval(&int(0));
            assert_eq!(sym.coeffs()[n], applied * fact(n));
        }
        assert_eq!(sym.coeffs()[0], int(0));
        assert_eq!(OperatorSpec::identity().symbol(4).unwrap(), PowerSeries::one(4));
    }

    #[test]
    fn apply_examples() {
        let h = rat(2, 5);
        let u = OperatorSpec::shift(h.clone());
        let x2 = p("x^2");
        let expect = &(&x2 + &Polynomial::monomial(int(2) * &h, 1)) + &Polynomial::constant(&h * &h);
        assert_eq!(u.apply(&x2).unwrap(), expect);
        assert_eq!(u.apply(&x2).unwrap(), x2.translate(&h));
        let ff3 = Polynomial::falling_factorial(3);
        assert_eq!(OperatorSpec::diff().apply(&ff3).unwrap(), ff3.derivative());
        assert_eq!(OperatorSpec::identity().apply(&ff3).unwrap(), ff3);
        assert!(OperatorSpec::diff().apply(&Polynomial::zero()).unwrap().is_zero());
    }

    #[test]
    fn compose_examples() {
        let h = rat(3, 4);
        let round_trip = OperatorSpec::shift(h.clone()).compose(&OperatorSpec::shift(-h.clone()));
        assert!(round_trip.symbol_eq(&OperatorSpec::identity(), 10).unwrap());

        // (1 + Delta/2) ∘ sum (-1)^n/2^n Delta^n = 1 up to the truncation
        let order = 9;
        let delta = OperatorSpec::delta(h.clone());
        let half = OperatorSpec::scaled_sum(vec![(int(1), OperatorSpec::identity()), (rat(1, 2), delta.clone())]);
        let series = OperatorSpec::scaled_sum(
            (0..=order)
                .map(|n| (crate::algebra::pow(&rat(-1, 2), n as i64), delta.pow(n)))
                .collect(),
        );
        assert!(half.compose(&series).symbol_eq(&OperatorSpec::identity(), order).unwrap());

        let du = OperatorSpec::diff().compose(&OperatorSpec::shift(h.clone()));
        let ud = OperatorSpec::shift(h).compose(&OperatorSpec::diff());
        assert!(du.symbol_eq(&ud, 10).unwrap());
    }

    #[test]
    fn constructor_examples() {
        let delta = OperatorSpec::delta(int(1));
        for k in 1..8 {
            assert_eq!(
                delta.apply(&Polynomial::binomial(k)).unwrap(),
                Polynomial::binomial(k - 1)
            );
        }
        assert!(OperatorSpec::shift(int(0)).symbol_eq(&OperatorSpec::identity(), 8).unwrap());
        let avg = OperatorSpec::scaled_sum(vec![
            (rat(1, 2), OperatorSpec::identity()),
            (rat(1, 2), OperatorSpec::shift(int(1))),
        ]);
        assert_eq!(avg.constant_term().unwrap(), int(1));
    }

    #[test]
    fn remainder_examples() {
        let h = rat(-5, 3);
        let (c, r) = OperatorSpec::shift(h.clone()).remainder().unwrap();
        assert_eq!(c, int(1));
        assert!(r.symbol_eq(&OperatorSpec::delta(h), 10).unwrap());
        let t = OperatorSpec::scaled_sum(vec![(int(2), OperatorSpec::identity()), (int(1), OperatorSpec::diff())]);
        let (c, r) = t.remainder().unwrap();
        assert_eq!(c, int(2));
        assert!(r.symbol_eq(&OperatorSpec::diff(), 10).unwrap());
    }

    #[test]
    fn truncated_symbols_refuse_high_degree() {
        let op = OperatorSpec::from_symbol(PowerSeries::exp_linear(&int(1), 2));
        assert_eq!(
            op.apply(&p("x^3")).unwrap_err(),
            OperatorError::SymbolTruncated { needed: 3, available: 2 }
        );
        assert_eq!(op.apply(&p("x^2")).unwrap(), p("x^2 + 2*x + 1"));
        assert_eq!(op.compose(&OperatorSpec::diff()).known_order(), Some(2));
    }

    #[test]
    fn literals() {
        let op: OperatorSpec = "shift:1/2".parse().unwrap();
        assert!(op.symbol_eq(&OperatorSpec::shift(rat(1, 2)), 6).unwrap());
        assert_eq!(op.to_string(), "shift:1/2");
        let op: OperatorSpec = "delta: -2".parse().unwrap();
        assert!(op.symbol_eq(&OperatorSpec::delta(int(-2)), 6).unwrap());
        assert!("diff".parse::<OperatorSpec>().unwrap().symbol_eq(&OperatorSpec::diff(), 4).unwrap());
        assert!("identity".parse::<OperatorSpec>().is_ok());
        let op: OperatorSpec = "symbol:[2, 1, -1/2]".parse().unwrap();
        assert_eq!(op.apply(&p("x^2")).unwrap(), p("2*x^2 + 2*x - 1"));
        assert_eq!(op.known_order(), None);
        let err = "shift:1/x".parse::<OperatorSpec>().unwrap_err();
        assert!(matches!(err, OperatorError::Parse(ParseError { pos: 8, .. })), "{err:?}");
        assert!("rotate:3".parse::<OperatorSpec>().is_err());
        assert!("symbol:[1,2".parse::<OperatorSpec>().is_err());
        let round: OperatorSpec = OperatorSpec::delta(rat(3, 7)).literal().parse().unwrap();
        assert!(round.symbol_eq(&OperatorSpec::delta(rat(3, 7)), 5).unwrap());
    }

    fn arb_operator() -> impl Strategy<Value = OperatorSpec> {
        prop_oneof![
            arb_rational().prop_map(OperatorSpec::shift),
            arb_rational().prop_map(OperatorSpec::delta),
            Just(OperatorSpec::diff()),
            arb_series(8).prop_map(OperatorSpec::from_symbol),
            (arb_rational(), arb_rational(), arb_rational()).prop_map(|(a, b, h)| {
                OperatorSpec::scaled_sum(vec![
                    (a, OperatorSpec::identity()),
                    (b, OperatorSpec::shift(h)),
                ])
            }),
        ]
    }

    proptest! {
        #[test]
        fn symbol_product_is_composition(f in arb_series(8), g in arb_series(8), q in arb_poly(8)) {
            let fg = OperatorSpec::from_symbol(&f * &g);
            let outer = OperatorSpec::from_symbol(f);
            let inner = OperatorSpec::from_symbol(g);
            prop_assert_eq!(fg.apply(&q).unwrap(), outer.apply(&inner.apply(&q).unwrap()).unwrap());
        }

        #[test]
        fn translation_invariance(t in arb_operator(), q in arb_poly(8), h in arb_rational()) {
            prop_assert_eq!(
                t.apply(&q.translate(&h)).unwrap(),
                t.apply(&q).unwrap().translate(&h)
            );
        }

        #[test]
        fn commutes_with_d(t in arb_operator(), q in arb_poly(8)) {
            prop_assert_eq!(t.apply(&q.derivative()).unwrap(), t.apply(&q).unwrap().derivative());
        }

        #[test]
        fn symbol_reconstruction(t in arb_operator()) {
            let sym = t.symbol(8).unwrap();
            for n in 0..=8 {
                let moment = t.apply(&Polynomial::monomial(int(1), n)).unwrap().eval(&int(0));
                prop_assert_eq!(&moment, &t.moment(n).unwrap());
                prop_assert_eq!(&sym.coeffs()[n], &(moment / Rational::from_integer(factorial(n))));
            }
        }

        #[test]
        fn remainder_is_nilpotent(t in arb_operator(), q in arb_poly(6)) {
            let (_, r) = t.remainder().unwrap();
            let d = q.degree().map_or(0, |d| d + 1);
            prop_assert!(r.pow(d).apply(&q).unwrap().is_zero());
            let mut iterated = q.clone();
            for _ in 0..d {
                iterated = r.apply(&iterated).unwrap();
            }
            prop_assert!(iterated.is_zero());
        }
    }
}
