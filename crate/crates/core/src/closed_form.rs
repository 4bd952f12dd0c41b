//! Exact log bond prices for the two solvable cases: Vasicek (`gamma = 0`)
//! and CIR (`gamma = 1/2`).
//!
//! Both are affine in the rate, `ln P = A(τ) - B̃(τ) r`. Besides the prices,
//! this module exposes `A`, `B̃` and their maturity derivatives so the PDE
//! residual of either closed form can be checked without differencing.

use crate::error::{BondError, Result};
use crate::model::{ModelParams, BETA_ZERO_THRESHOLD};
use crate::real::Real;

/// Below this `|βτ|` the maturity brackets are summed from their Taylor series.
const SERIES_SWITCH: f64 = 0.25;
const SERIES_TERMS: usize = 32;

/// `θτ` beyond which `e^{θτ}` is factored out of the CIR expressions.
const CIR_OVERFLOW_GUARD: f64 = 30.0;

/// Model parameters lifted into the working scalar; `sig2` is squared there
/// too, so every formula sees the same `σ²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lifted<T> {
    pub alpha: T,
    pub beta: T,
    pub sig2: T,
}

impl<T: Real> Lifted<T> {
    pub fn new(p: &ModelParams) -> Self {
        let sigma = T::cst(p.sigma);
        Lifted {
            alpha: T::cst(p.alpha),
            beta: T::cst(p.beta),
            sig2: sigma * sigma,
        }
    }

    /// `alpha + beta r`
    #[inline]
    pub fn drift(&self, r: T) -> T {
        self.alpha + self.beta * r
    }
}

/// `B(τ) = (e^{βτ} - 1)/β`, with the limit `τ` as `β → 0`.
pub fn b_factor<T: Real>(beta: f64, tau: T) -> T {
    if beta.abs() < BETA_ZERO_THRESHOLD {
        return tau;
    }
    (T::cst(beta) * tau).exp_m1() / T::cst(beta)
}

/// The maturity-only pieces of the affine and approximate log-prices.
///
/// With `B = B(τ)`:
///
/// * `b     = B`
/// * `drift = (τ - B)/β`
/// * `vol   = [B² + (2/β)(τ - B)]/β`
/// * `corr  = [B²(2βτ - 1) - 2B(2τ - 3/β) + 2τ² - 6τ/β]/β²`
///
/// Each is `τ^k F(βτ)` for an entire function `F`; for small `|βτ|` the
/// series of `F` is used, which also covers `β = 0` without any division.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MaturityBrackets<T> {
    pub b: T,
    pub drift: T,
    pub vol: T,
    pub corr: T,
}

impl<T: Real> MaturityBrackets<T> {
    pub fn new(beta: f64, tau: T) -> Self {
        let x = T::cst(beta) * tau;
        if x.value().abs() < SERIES_SWITCH {
            Self::from_series(x, tau)
        } else {
            Self::direct(beta, tau)
        }
    }

    fn direct(beta: f64, tau: T) -> Self {
        let one = T::cst(1.0);
        let two = T::cst(2.0);
        let bt = T::cst(beta);
        let b = b_factor(beta, tau);
        let gap = tau - b;
        let drift = gap / bt;
        let vol = (b * b + two / bt * gap) / bt;
        let corr = (b * b * (two * bt * tau - one) - two * b * (two * tau - T::cst(3.0) / bt)
            + two * tau * tau
            - T::cst(6.0) * tau / bt)
            / (bt * bt);
        MaturityBrackets {
            b,
            drift,
            vol,
            corr,
        }
    }

    /// Coefficients, with `E1 = (e^x-1)/x`, `E2 = (e^x-1-x)/x²`:
    /// `[E1]_k = 1/(k+1)!`, `[E2]_k = 1/(k+2)!`, `[E1²]_k = (2^{k+2}-2)/(k+2)!`,
    /// `vol/τ³ = (E1² - 2E2)/x`, `corr/τ⁴ = [E1²(2x-1) - 4E1 + 2 + 6(E1-1)/x]/x²`.
    fn from_series(x: T, tau: T) -> Self {
        let n = SERIES_TERMS;
        // inv_fact[k] = 1/k!, pow2[k] = 2^k, for k up to n + 4.
        let mut inv_fact = Vec::with_capacity(n + 5);
        let mut pow2 = Vec::with_capacity(n + 5);
        inv_fact.push(T::cst(1.0));
        pow2.push(T::cst(1.0));
        for k in 1..n + 5 {
            inv_fact.push(inv_fact[k - 1] / T::cst(k as f64));
            pow2.push(pow2[k - 1] * T::cst(2.0));
        }
        let e1 = |k: usize| inv_fact[k + 1];
        let e2 = |k: usize| inv_fact[k + 2];
        let e1_sq = |k: usize| (pow2[k + 2] - T::cst(2.0)) * inv_fact[k + 2];
        let f2 = |k: usize| e1_sq(k + 1) - T::cst(2.0) * e2(k + 1);
        let f3 = |k: usize| {
            T::cst(2.0) * e1_sq(k + 1) - e1_sq(k + 2) - T::cst(4.0) * e1(k + 2)
                + T::cst(6.0) * e1(k + 3)
        };
        let horner = |c: &dyn Fn(usize) -> T| {
            let mut acc = c(n - 1);
            for k in (0..n - 1).rev() {
                acc = acc * x + c(k);
            }
            acc
        };
        let tau2 = tau * tau;
        MaturityBrackets {
            b: tau * horner(&e1),
            drift: -(tau2 * horner(&e2)),
            vol: tau2 * tau * horner(&f2),
            corr: tau2 * tau2 * horner(&f3),
        }
    }
}

/// `ln P = a - b r`, together with `∂τ a` and `∂τ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineLogPrice<T> {
    pub a: T,
    pub a_tau: T,
    pub b: T,
    pub b_tau: T,
}

/// Log-price and its partial derivatives at one `(τ, r)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPricePartials<T> {
    pub value: T,
    pub d_tau: T,
    pub d_r: T,
    pub d_rr: T,
}

impl<T: Real> AffineLogPrice<T> {
    pub fn log_price(&self, r: T) -> T {
        self.a - self.b * r
    }

    pub fn partials(&self, r: T) -> LogPricePartials<T> {
        LogPricePartials {
            value: self.log_price(r),
            d_tau: self.a_tau - self.b_tau * r,
            d_r: -self.b,
            d_rr: T::cst(0.0),
        }
    }
}

fn require_gamma(p: &ModelParams, expected: f64, pricer: &'static str) -> Result<()> {
    if p.gamma != expected {
        return Err(BondError::GammaMismatch {
            pricer,
            expected,
            actual: p.gamma,
        });
    }
    Ok(())
}

fn require_maturity(tau: f64) -> Result<()> {
    if tau < 0.0 || tau.is_nan() {
        return Err(BondError::NegativeMaturity(tau));
    }
    Ok(())
}

/// Exact Vasicek log-price.
///
/// This is the approximate formula with `gamma = 0` and it shares its
/// arithmetic exactly, so the two agree bit for bit.
pub fn vasicek_log_price<T: Real>(p: &ModelParams, tau: T, r: T) -> Result<T> {
    require_gamma(p, 0.0, "vasicek")?;
    require_maturity(tau.value())?;
    let lp = Lifted::<T>::new(p);
    let br = MaturityBrackets::new(p.beta, tau);
    let base = -(r * br.b) + lp.alpha * br.drift;
    let vol_term = lp.sig2 / T::cst(4.0) * br.vol;
    Ok(base + vol_term)
}

/// Affine coefficients of the Vasicek price and their maturity derivatives.
pub fn vasicek_affine<T: Real>(p: &ModelParams, tau: T) -> Result<AffineLogPrice<T>> {
    require_gamma(p, 0.0, "vasicek")?;
    require_maturity(tau.value())?;
    let br = MaturityBrackets::new(p.beta, tau);
    let Lifted { alpha, sig2, .. } = Lifted::<T>::new(p);
    let growth = (T::cst(p.beta) * tau).exp();
    Ok(AffineLogPrice {
        a: alpha * br.drift + sig2 / T::cst(4.0) * br.vol,
        // d/dτ drift = -B, d/dτ vol = 2B²
        a_tau: -(alpha * br.b) + sig2 / T::cst(2.0) * br.b * br.b,
        b: br.b,
        b_tau: growth,
    })
}

/// Exact CIR affine coefficients, in the `(alpha, beta, sigma)` drift
/// parametrization: with `θ = sqrt(β² + 2σ²)` and
/// `D(τ) = (θ - β)(e^{θτ} - 1) + 2θ`,
/// `B̃ = 2(e^{θτ} - 1)/D` and
/// `A = (2α/σ²) [ln(2θ) + (θ - β)τ/2 - ln D]`.
pub fn cir_affine<T: Real>(p: &ModelParams, tau: T) -> Result<AffineLogPrice<T>> {
    require_gamma(p, 0.5, "cir")?;
    require_maturity(tau.value())?;
    let one = T::cst(1.0);
    let two = T::cst(2.0);
    let Lifted {
        alpha, beta, sig2, ..
    } = Lifted::<T>::new(p);
    let theta = (beta * beta + two * sig2).sqrt();
    let spread = theta - beta;
    let scale = two * alpha / sig2;
    let theta_tau = theta * tau;

    let (log_d_over_2theta, b, growth_over_d) = if theta_tau.value() <= CIR_OVERFLOW_GUARD {
        let em1 = theta_tau.exp_m1();
        let d = spread * em1 + two * theta;
        (
            (spread * em1 / (two * theta)).ln_1p(),
            two * em1 / d,
            (em1 + one) / d,
        )
    } else {
        let decay = (-theta_tau).exp();
        let d_red = spread * (one - decay) + two * theta * decay;
        (
            theta_tau + (d_red / (two * theta)).ln(),
            two * (one - decay) / d_red,
            one / d_red,
        )
    };
    let half_spread = spread / two;
    Ok(AffineLogPrice {
        a: scale * (half_spread * tau - log_d_over_2theta),
        a_tau: scale * (half_spread - spread * theta * growth_over_d),
        b,
        // 4θ² e^{θτ}/D² = 4θ² (e^{θτ}/D)² e^{-θτ}
        b_tau: T::cst(4.0) * theta * theta * growth_over_d * growth_over_d * (-theta_tau).exp(),
    })
}

/// Exact CIR log-price.
pub fn cir_log_price<T: Real>(p: &ModelParams, tau: T, r: T) -> Result<T> {
    Ok(cir_affine(p, tau)?.log_price(r))
}
