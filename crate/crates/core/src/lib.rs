//! Zero-coupon bond prices under the CKLS short-rate model
//! `dr = (α + βr) dt + σ r^γ dw`.
//!
//! The crate provides closed-form approximate log-prices for any `gamma`,
//! the exact Vasicek and CIR prices, a finite-difference reference solver,
//! and the error analysis that ties them together.

pub mod analysis;
pub mod approximation;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod model;
pub mod pde;
pub mod pricing;
pub mod real;
pub mod tridiag;

pub use approximation::{
    c5, c5_derivatives, c6, cw_log_price, improved_log_price, k4, k5, pde_residual, q_factor,
    ApproxOrder, Derivatives, R_FLOOR,
};
pub use closed_form::{cir_log_price, vasicek_log_price, LogPricePartials};
pub use error::{BondError, Result};
pub use model::{validate_params, LogPriceCurve, MaturityGrid, ModelParams, RateGrid};
pub use pricing::{Formula, LogPriceFn, Pricer};
pub use real::{DoubleDouble, Jet, Real};
