//! A uniform handle on the closed-form pricers.

use std::fmt;
use std::str::FromStr;

use crate::approximation::{cw_log_price, improved_log_price};
use crate::closed_form::{cir_log_price, vasicek_log_price};
use crate::error::Result;
use crate::model::ModelParams;
use crate::real::Real;

/// A log-price `ln P(τ, r)` that can be evaluated in any [`Real`] scalar.
pub trait LogPriceFn {
    fn log_price<T: Real>(&self, tau: T, r: T) -> Result<T>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    /// First-order approximation.
    Original,
    /// Approximation with the `τ⁵` and `τ⁶` corrections.
    Improved,
    /// Exact, `gamma = 0` only.
    Vasicek,
    /// Exact, `gamma = 1/2` only.
    Cir,
}

impl Formula {
    pub const ALL: [Formula; 4] = [
        Formula::Original,
        Formula::Improved,
        Formula::Vasicek,
        Formula::Cir,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formula::Original => "original",
            Formula::Improved => "improved",
            Formula::Vasicek => "vasicek",
            Formula::Cir => "cir",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Formula::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown formula {s:?}"))
    }
}

/// A formula bound to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pricer {
    pub formula: Formula,
    pub params: ModelParams,
}

impl Pricer {
    pub fn new(formula: Formula, params: ModelParams) -> Self {
        Pricer { formula, params }
    }
}

impl LogPriceFn for Pricer {
    fn log_price<T: Real>(&self, tau: T, r: T) -> Result<T> {
        let p = &self.params;
        match self.formula {
            Formula::Original => cw_log_price(p, tau, r),
            Formula::Improved => improved_log_price(p, tau, r),
            Formula::Vasicek => vasicek_log_price(p, tau, r),
            Formula::Cir => cir_log_price(p, tau, r),
        }
    }
}
