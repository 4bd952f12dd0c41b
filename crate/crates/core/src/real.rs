//! Scalar abstraction shared by the pricing formulas.
//!
//! The closed forms and the asymptotic correction terms are written once,
//! generically over [`Real`]. Three scalars implement it:
//!
//! * `f64` for everyday pricing,
//! * [`DoubleDouble`] (about 32 significant digits) for the small-maturity
//!   asymptotics, where the quantities of interest sit far below the `f64`
//!   resolution of a log-price,
//! * [`Jet`], a truncated Taylor jet carrying `f`, `∂τ f`, `∂r f` and
//!   `∂²r f`, which turns any generic formula into exact partial derivatives.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use qd::Quad as DoubleDouble;

pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Lifts an `f64` constant (exactly) into the scalar type.
    fn cst(x: f64) -> Self;
    /// Leading `f64` value; used for branch decisions and reporting.
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, exponent: f64) -> Self;

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, exponent: f64) -> Self {
        f64::powf(self, exponent)
    }
    #[inline]
    fn powi(self, n: u32) -> Self {
        f64::powi(self, n as i32)
    }
}

impl Real for DoubleDouble {
    fn cst(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
    fn value(self) -> f64 {
        self.0 + self.1
    }
    fn exp(self) -> Self {
        DoubleDouble::exp(self)
    }
    fn exp_m1(self) -> Self {
        if self.0.abs() >= 0.5 {
            return DoubleDouble::exp(self) - DoubleDouble::from_f64(1.0);
        }
        // Plain Taylor sum; |x| < 1/2 keeps it to about 30 terms.
        let mut term = self;
        let mut sum = self;
        let mut k = 1.0;
        while term.0.abs() > 1e-36 * sum.0.abs() {
            k += 1.0;
            term = term * self / DoubleDouble::from_f64(k);
            sum += term;
        }
        sum
    }
    fn ln(self) -> Self {
        DoubleDouble::ln(self)
    }
    fn ln_1p(self) -> Self {
        // 1 + x is exact to about 1e-32 absolute, far below any ln_1p use here.
        DoubleDouble::ln(DoubleDouble::from_f64(1.0) + self)
    }
    fn sqrt(self) -> Self {
        DoubleDouble::sqrt(self)
    }
    fn powf(self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return DoubleDouble::from_f64(1.0);
        }
        if self.0 == 0.0 && self.1 == 0.0 {
            return if exponent > 0.0 {
                DoubleDouble::from_f64(0.0)
            } else {
                DoubleDouble::INFINITY
            };
        }
        if exponent == 1.0 {
            return self;
        }
        (DoubleDouble::from_f64(exponent) * self.ln()).exp()
    }
}

/// Second-order jet in `r`, first-order in `τ`.
///
/// Mixed and higher `τ` derivatives are not tracked; the bond-pricing
/// operator only needs `∂τ`, `∂r` and `∂²r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub d_tau: T,
    pub d_r: T,
    pub d_rr: T,
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        let zero = T::cst(0.0);
        Jet {
            v,
            d_tau: zero,
            d_r: zero,
            d_rr: zero,
        }
    }

    /// Seeds the maturity coordinate.
    pub fn tau(v: T) -> Self {
        Jet {
            d_tau: T::cst(1.0),
            ..Self::constant(v)
        }
    }

    /// Seeds the rate coordinate.
    pub fn rate(v: T) -> Self {
        Jet {
            d_r: T::cst(1.0),
            ..Self::constant(v)
        }
    }

    #[inline]
    fn chain(self, f: T, df: T, d2f: T) -> Self {
        Jet {
            v: f,
            d_tau: df * self.d_tau,
            d_r: df * self.d_r,
            d_rr: d2f * self.d_r * self.d_r + df * self.d_rr,
        }
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Jet {
            v: self.v + o.v,
            d_tau: self.d_tau + o.d_tau,
            d_r: self.d_r + o.d_r,
            d_rr: self.d_rr + o.d_rr,
        }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Jet {
            v: self.v - o.v,
            d_tau: self.d_tau - o.d_tau,
            d_r: self.d_r - o.d_r,
            d_rr: self.d_rr - o.d_rr,
        }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet {
            v: -self.v,
            d_tau: -self.d_tau,
            d_r: -self.d_r,
            d_rr: -self.d_rr,
        }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = T::cst(2.0);
        Jet {
            v: self.v * o.v,
            d_tau: self.d_tau * o.v + self.v * o.d_tau,
            d_r: self.d_r * o.v + self.v * o.d_r,
            d_rr: self.d_rr * o.v + two * self.d_r * o.d_r + self.v * o.d_rr,
        }
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Real> Real for Jet<T> {
    fn cst(x: f64) -> Self {
        Jet::constant(T::cst(x))
    }
    fn value(self) -> f64 {
        self.v.value()
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn exp_m1(self) -> Self {
        let e = self.v.exp();
        self.chain(self.v.exp_m1(), e, e)
    }
    fn ln(self) -> Self {
        let inv = self.v.recip();
        self.chain(self.v.ln(), inv, -(inv * inv))
    }
    fn ln_1p(self) -> Self {
        let inv = (T::cst(1.0) + self.v).recip();
        self.chain(self.v.ln_1p(), inv, -(inv * inv))
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let half_inv = T::cst(0.5) / s;
        self.chain(s, half_inv, -(half_inv / (T::cst(2.0) * self.v)))
    }
    fn powf(self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Self::cst(1.0);
        }
        let e = T::cst(exponent);
        let p = self.v.powf(exponent);
        let inv = self.v.recip();
        let d1 = e * p * inv;
        let d2 = e * T::cst(exponent - 1.0) * p * inv * inv;
        self.chain(p, d1, d2)
    }
    fn recip(self) -> Self {
        let inv = self.v.recip();
        self.chain(inv, -(inv * inv), T::cst(2.0) * inv * inv * inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::from_f64(x)
    }

    #[test]
    fn double_double_exp_m1_matches_series_and_exp() {
        for &x in &[-0.3, -1e-3, 1e-8, 0.2, 0.49, 0.7, -2.0] {
            let a = dd(x).exp_m1();
            let b = dd(x).exp() - dd(1.0);
            // exp(x) - 1 carries an absolute error of about one unit in 1e-32
            assert!((a - b).value().abs() <= 1e-31 + 1e-30 * a.value().abs(), "{x}");
        }
        // exp_m1 at a tiny argument must keep the second-order term.
        let x = dd(1e-10);
        let expect = x + x * x / dd(2.0) + x * x * x / dd(6.0);
        assert!(((x.exp_m1() - expect).value()).abs() < 1e-40);
    }

    #[test]
    fn double_double_powf_consistent_with_sqrt() {
        let r = dd(0.1);
        let a = r.powf(1.5);
        let b = r * r.sqrt();
        assert!((a - b).value().abs() < 1e-31);
        assert_eq!(dd(0.0).powf(0.5).value(), 0.0);
        assert_eq!(dd(0.0).powf(0.0).value(), 1.0);
    }

    #[test]
    fn jet_derivatives_of_a_known_function() {
        // f(τ, r) = exp(τ) * r^{1.5} / (1 + r)
        let tau = Jet::tau(0.3_f64);
        let r = Jet::rate(0.2_f64);
        let f = tau.exp() * r.powf(1.5) / (Jet::cst(1.0) + r);
        let g = |t: f64, x: f64| t.exp() * x.powf(1.5) / (1.0 + x);
        let h = 1e-4;
        let ft = (g(0.3 + h, 0.2) - g(0.3 - h, 0.2)) / (2.0 * h);
        let fr = (g(0.3, 0.2 + h) - g(0.3, 0.2 - h)) / (2.0 * h);
        let frr = (g(0.3, 0.2 + h) - 2.0 * g(0.3, 0.2) + g(0.3, 0.2 - h)) / (h * h);
        assert!((f.v - g(0.3, 0.2)).abs() < 1e-15);
        assert!((f.d_tau - ft).abs() < 1e-7);
        assert!((f.d_r - fr).abs() < 1e-7);
        assert!((f.d_rr - frr).abs() < 1e-5);
    }

    #[test]
    fn jet_log_sqrt_expm1_chain_rules() {
        let r = Jet::rate(0.7_f64);
        let f = r.ln() + r.sqrt() - r.exp_m1();
        assert!((f.d_r - (1.0 / 0.7 + 0.5 / 0.7_f64.sqrt() - 0.7_f64.exp())).abs() < 1e-14);
        let want_rr = -1.0 / 0.49 - 0.25 * 0.7_f64.powf(-1.5) - 0.7_f64.exp();
        assert!((f.d_rr - want_rr).abs() < 1e-13);
    }
}
