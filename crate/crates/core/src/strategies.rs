//! Proptest strategies shared by the unit tests.

use proptest::prelude::*;

use crate::algebra::{rat, Polynomial, Rational};
use crate::power_series::PowerSeries;

pub fn arb_rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=9).prop_map(|(n, d)| rat(n, d))
}

pub fn arb_nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..=40, 1i64..=9, any::<bool>()).prop_map(|(n, d, neg)| rat(if neg { -n } else { n }, d))
}

pub fn arb_poly(max_deg: usize) -> impl Strategy<Value = Polynomial> {
    proptest::collection::vec(arb_rational(), 0..=max_deg + 1).prop_map(Polynomial::from_coeffs)
}

pub fn arb_series(order: usize) -> impl Strategy<Value = PowerSeries> {
    proptest::collection::vec(arb_rational(), order + 1)
        .prop_map(move |c| PowerSeries::new(c, order))
}
