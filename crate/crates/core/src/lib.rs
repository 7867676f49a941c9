//! Generalized (Cesaro and Abel) sums of divergent series `sum a_n T^n P(x)`
//! where `T` is a translation-invariant operator on polynomials.
//!
//! Because `R = T - c_0(T)` is nilpotent on any fixed polynomial, such a
//! series collapses to a finite combination `sum_k f^(k)(c)_mu / k! R^k P`
//! of regularized derivatives of `f(t) = sum a_n t^n`. The [`regularize`]
//! module evaluates that reduction exactly over the rationals; the
//! [`summation`] module is an independent numeric engine used to check it.

pub mod algebra;
pub mod cli;
pub mod operator;
pub mod power_series;
pub mod regularize;
pub mod summation;

#[cfg(test)]
mod strategies;

pub use algebra::{Polynomial, Rational};
pub use operator::OperatorSpec;
pub use power_series::PowerSeries;
