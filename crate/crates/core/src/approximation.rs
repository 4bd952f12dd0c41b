//! Closed-form approximate log bond prices for general `gamma`.
//!
//! [`cw_log_price`] is the first-order approximation, exact for Vasicek.
//! Against the true price its log error is `c5(r) τ⁵ + o(τ⁵)`, with
//! `c5 = -k4/5`, where `k4 τ⁴ + k5 τ⁵` leads the PDE residual of the
//! approximation. [`improved_log_price`] removes the `τ⁵` and `τ⁶` terms.
//!
//! Every coefficient is a short sum of terms `c · s^m / r^n` with
//! `s = r^{2γ}`, so one exponentiation serves the whole sum and the
//! `r`-derivatives are exact term by term.

use crate::closed_form::{Lifted, LogPricePartials, MaturityBrackets};
use crate::error::{BondError, Result};
use crate::model::ModelParams;
use crate::pricing::LogPriceFn;
use crate::real::{Jet, Real};

/// Coefficients with negative powers of `r` are only evaluated for
/// `r >= R_FLOOR`; below it only the CIR limit (`gamma = 1/2`) is available.
pub const R_FLOOR: f64 = 1e-6;

/// Which approximation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApproxOrder {
    Original,
    Improved,
}

/// `q(r) = γ(2γ-1)σ² r^{2(2γ-1)} + 2γ r^{2γ-1}(α + βr)`.
pub fn q_factor<T: Real>(p: &ModelParams, r: T) -> Result<T> {
    if p.gamma == 0.0 {
        return Ok(T::cst(0.0));
    }
    let rv = r.value();
    let e = 2.0 * p.gamma - 1.0;
    if rv < 0.0 || (rv == 0.0 && e < 0.0) {
        return Err(BondError::DomainError { what: "q(r)", r: rv });
    }
    let lp = Lifted::<T>::new(p);
    let g = T::cst(p.gamma);
    // r^{2γ-1}; the first term uses its square
    let u = r.powf(e);
    Ok(g * T::cst(e) * lp.sig2 * u * u + T::cst(2.0) * g * u * lp.drift(r))
}

/// First-order approximate log-price:
///
/// `ln P = -rB + (α/β)(τ-B) + (r^{2γ} + qτ)(σ²/4β)[B² + (2/β)(τ-B)]
///         - q(σ²/8β²)[B²(2βτ-1) - 2B(2τ - 3/β) + 2τ² - 6τ/β]`
///
/// with `B = (e^{βτ}-1)/β`. At `gamma = 0` this is the exact Vasicek price
/// and matches [`crate::closed_form::vasicek_log_price`] bit for bit.
pub fn cw_log_price<T: Real>(p: &ModelParams, tau: T, r: T) -> Result<T> {
    if tau.value() < 0.0 || tau.value().is_nan() {
        return Err(BondError::NegativeMaturity(tau.value()));
    }
    let q = q_factor(p, r)?;
    let lp = Lifted::<T>::new(p);
    let s = if p.gamma == 0.0 {
        T::cst(1.0)
    } else {
        r.powf(2.0 * p.gamma)
    };
    let br = MaturityBrackets::new(p.beta, tau);
    let base = -(r * br.b) + lp.alpha * br.drift;
    let vol_term = lp.sig2 / T::cst(4.0) * br.vol;
    let corr_term = lp.sig2 / T::cst(8.0) * br.corr;
    Ok(base + (s + q * tau) * vol_term - q * corr_term)
}

/// `coef · s^s_pow / r^r_pow`, `s = r^{2γ}`.
#[derive(Debug, Clone, Copy)]
struct PowerTerm<T> {
    coef: T,
    s_pow: u32,
    r_pow: u32,
}

fn term<T>(coef: T, s_pow: u32, r_pow: u32) -> PowerTerm<T> {
    PowerTerm { coef, s_pow, r_pow }
}

/// `deriv`-th `r`-derivative of `Σ coef s^m r^{-n}`.
fn power_sum<T: Real>(terms: &[PowerTerm<T>], r: T, gamma: f64, deriv: u32) -> T {
    let two_gamma = 2.0 * gamma;
    let s = r.powf(two_gamma);
    let inv_r = r.recip();
    let mut acc = T::cst(0.0);
    for t in terms {
        let exponent = two_gamma * t.s_pow as f64 - t.r_pow as f64;
        let mut falling = 1.0;
        for j in 0..deriv {
            falling *= exponent - j as f64;
        }
        if falling == 0.0 {
            continue;
        }
        acc = acc
            + t.coef * T::cst(falling) * s.powi(t.s_pow) * inv_r.powi(t.r_pow + deriv);
    }
    acc
}

/// The bracket shared by `k4` and `c5`, in `k4`'s polynomial form.
fn k4_terms<T: Real>(p: &ModelParams) -> [PowerTerm<T>; 7] {
    let lp = Lifted::<T>::new(p);
    let (a, b, s2) = (lp.alpha, lp.beta, lp.sig2);
    let g = T::cst(p.gamma);
    let c = T::cst;
    [
        term(c(2.0) * a * a * (c(2.0) * g - c(1.0)), 1, 2),
        term(c(4.0) * b * b * g, 1, 0),
        term(-(c(8.0) * s2), 2, 1),
        term(c(2.0) * b * (c(1.0) - c(5.0) * g + c(6.0) * g * g) * s2, 2, 2),
        term(
            s2 * s2 * (c(-3.0) + c(16.0) * g - c(28.0) * g * g + c(16.0) * g * g * g),
            3,
            4,
        ),
        term(c(2.0) * a * b * (c(4.0) * g - c(1.0)), 1, 1),
        term(c(2.0) * a * (c(2.0) - c(7.0) * g + c(6.0) * g * g) * s2, 2, 3),
    ]
}

/// Same bracket in the factored form that appears with `c5`.
fn c5_terms<T: Real>(p: &ModelParams) -> [PowerTerm<T>; 7] {
    let lp = Lifted::<T>::new(p);
    let (a, b, s2) = (lp.alpha, lp.beta, lp.sig2);
    let g = T::cst(p.gamma);
    let c = T::cst;
    let two_g_m1 = c(2.0) * g - c(1.0);
    [
        term(c(2.0) * a * a * two_g_m1, 1, 2),
        term(c(4.0) * b * b * g, 1, 0),
        term(-(c(8.0) * s2), 2, 1),
        term(c(2.0) * b * (c(1.0) - c(5.0) * g + c(6.0) * g * g) * s2, 2, 2),
        term(s2 * s2 * two_g_m1 * two_g_m1 * (c(4.0) * g - c(3.0)), 3, 4),
        term(c(2.0) * a * b * (c(4.0) * g - c(1.0)), 1, 1),
        term(c(2.0) * a * two_g_m1 * (c(3.0) * g - c(2.0)) * s2, 2, 3),
    ]
}

fn k5_terms<T: Real>(p: &ModelParams) -> [PowerTerm<T>; 9] {
    let lp = Lifted::<T>::new(p);
    let (a, b, s2) = (lp.alpha, lp.beta, lp.sig2);
    let g = T::cst(p.gamma);
    let c = T::cst;
    let one_m_2g = c(1.0) - c(2.0) * g;
    [
        term(c(6.0) * a * a * b * (c(2.0) * g - c(1.0)), 1, 2),
        term(c(12.0) * b * b * b * g, 1, 0),
        term(-(c(10.0) * one_m_2g * one_m_2g * s2 * s2), 3, 3),
        term(c(6.0) * b * b * s2 * (c(1.0) - c(5.0) * g + c(6.0) * g * g), 2, 2),
        term(-(c(10.0) * (c(5.0) + c(2.0) * g) * b * s2), 2, 1),
        term(
            c(3.0) * one_m_2g * one_m_2g * (c(4.0) * g - c(3.0)) * b * s2 * s2,
            3,
            4,
        ),
        term(c(6.0) * a * b * b * (c(4.0) * g - c(1.0)), 1, 1),
        term(c(6.0) * a * b * (c(2.0) - c(7.0) * g + c(6.0) * g * g) * s2, 2, 3),
        term(-(c(10.0) * a * (c(2.0) * g - c(1.0)) * s2), 2, 2),
    ]
}

enum Regime {
    /// `gamma = 0`: every correction coefficient vanishes.
    Zero,
    /// `gamma = 1/2` below the rate floor: the coefficients are affine in `r`.
    CirLimit,
    General,
}

fn regime(p: &ModelParams, r: f64, what: &'static str) -> Result<Regime> {
    if p.gamma == 0.0 {
        return Ok(Regime::Zero);
    }
    if r >= R_FLOOR {
        return Ok(Regime::General);
    }
    if p.is_cir() && r >= 0.0 {
        return Ok(Regime::CirLimit);
    }
    Err(BondError::DomainError { what, r })
}

/// Leading coefficient of the PDE residual, `h = k4 τ⁴ + k5 τ⁵ + o(τ⁵)`.
pub fn k4<T: Real>(p: &ModelParams, r: T) -> Result<T> {
    let lp = Lifted::<T>::new(p);
    match regime(p, r.value(), "k4")? {
        Regime::Zero => Ok(T::cst(0.0)),
        Regime::CirLimit => Ok(lp.sig2 / T::cst(24.0)
            * (lp.alpha * lp.beta + r * (lp.beta * lp.beta - T::cst(4.0) * lp.sig2))),
        Regime::General => {
            let pre = T::cst(p.gamma) * lp.sig2 / T::cst(24.0);
            Ok(pre * power_sum(&k4_terms(p), r, p.gamma, 0))
        }
    }
}

/// Second coefficient of the PDE residual.
pub fn k5<T: Real>(p: &ModelParams, r: T) -> Result<T> {
    let lp = Lifted::<T>::new(p);
    match regime(p, r.value(), "k5")? {
        Regime::Zero => Ok(T::cst(0.0)),
        Regime::CirLimit => Ok(lp.beta * lp.sig2 / T::cst(40.0)
            * (lp.alpha * lp.beta + (lp.beta * lp.beta - T::cst(10.0) * lp.sig2) * r)),
        Regime::General => {
            let pre = T::cst(p.gamma) * lp.sig2 / T::cst(120.0);
            Ok(pre * power_sum(&k5_terms(p), r, p.gamma, 0))
        }
    }
}

fn c5_deriv<T: Real>(p: &ModelParams, r: T, deriv: u32, what: &'static str) -> Result<T> {
    let lp = Lifted::<T>::new(p);
    match regime(p, r.value(), what)? {
        Regime::Zero => Ok(T::cst(0.0)),
        Regime::CirLimit => {
            let pre = -(lp.sig2 / T::cst(120.0));
            let slope = lp.beta * lp.beta - T::cst(4.0) * lp.sig2;
            Ok(match deriv {
                0 => pre * (lp.alpha * lp.beta + r * slope),
                1 => pre * slope,
                _ => T::cst(0.0),
            })
        }
        Regime::General => {
            let pre = -(T::cst(p.gamma) * lp.sig2 / T::cst(120.0));
            Ok(pre * power_sum(&c5_terms(p), r, p.gamma, deriv))
        }
    }
}

/// `τ⁵` coefficient of `ln P^ap - ln P^ex`; identically `-k4/5`.
///
/// Singular as `r → 0` for `1/2 < gamma < 1`.
pub fn c5<T: Real>(p: &ModelParams, r: T) -> Result<T> {
    c5_deriv(p, r, 0, "c5")
}

/// `(c5'(r), c5''(r))`.
pub fn c5_derivatives<T: Real>(p: &ModelParams, r: T) -> Result<(T, T)> {
    Ok((c5_deriv(p, r, 1, "c5'")?, c5_deriv(p, r, 2, "c5''")?))
}

/// `c6 = (σ² r^{2γ} c5''/2 + (α + βr) c5' - k5) / 6`.
pub fn c6<T: Real>(p: &ModelParams, r: T) -> Result<T> {
    if p.gamma == 0.0 {
        return Ok(T::cst(0.0));
    }
    let lp = Lifted::<T>::new(p);
    let (d1, d2) = c5_derivatives(p, r)?;
    let diffusion = lp.sig2 * r.powf(2.0 * p.gamma) / T::cst(2.0);
    Ok((diffusion * d2 + lp.drift(r) * d1 - k5(p, r)?) / T::cst(6.0))
}

/// `ln P^ap2 = ln P^ap - c5 τ⁵ - c6 τ⁶`.
pub fn improved_log_price<T: Real>(p: &ModelParams, tau: T, r: T) -> Result<T> {
    let base = cw_log_price(p, tau, r)?;
    if p.gamma == 0.0 {
        return Ok(base);
    }
    let tau5 = tau.powi(5);
    Ok(base - c5(p, r)? * tau5 - c6(p, r)? * tau5 * tau)
}

pub fn approx_log_price<T: Real>(order: ApproxOrder, p: &ModelParams, tau: T, r: T) -> Result<T> {
    match order {
        ApproxOrder::Original => cw_log_price(p, tau, r),
        ApproxOrder::Improved => improved_log_price(p, tau, r),
    }
}

/// How [`pde_residual`] obtains the partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    /// Central differences with one Richardson level.
    FiniteDifference { step_tau: f64, step_r: f64 },
    /// Exact derivatives by forward-mode jets.
    Exact,
}

impl Default for Derivatives {
    fn default() -> Self {
        Derivatives::FiniteDifference {
            step_tau: 1e-5,
            step_r: 1e-5,
        }
    }
}

/// Residual of the log-price equation
/// `-∂τ f + σ² r^{2γ}/2 [(∂r f)² + ∂²r f] + (α + βr) ∂r f - r`
/// for caller-supplied partials.
pub fn pde_residual_from_partials<T: Real>(
    p: &ModelParams,
    r: T,
    f: LogPricePartials<T>,
) -> T {
    let lp = Lifted::<T>::new(p);
    let diffusion = lp.sig2 * r.powf(2.0 * p.gamma) / T::cst(2.0);
    -f.d_tau + diffusion * (f.d_r * f.d_r + f.d_rr) + lp.drift(r) * f.d_r - r
}

/// Residual of `f` in the log-price equation with exact jet derivatives,
/// in any scalar.
pub fn pde_residual_exact<T: Real, F: LogPriceFn>(
    f: &F,
    p: &ModelParams,
    tau: T,
    r: T,
) -> Result<T> {
    let jet = f.log_price(Jet::tau(tau), Jet::rate(r))?;
    Ok(pde_residual_from_partials(
        p,
        r,
        LogPricePartials {
            value: jet.v,
            d_tau: jet.d_tau,
            d_r: jet.d_r,
            d_rr: jet.d_rr,
        },
    ))
}

/// Finite-difference partials of an arbitrary `f(τ, r)`.
pub fn finite_difference_partials<F>(
    f: F,
    tau: f64,
    r: f64,
    step_tau: f64,
    step_r: f64,
) -> Result<LogPricePartials<f64>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if step_tau > tau / 4.0 {
        return Err(BondError::StepTooLarge {
            coordinate: "tau",
            step: step_tau,
            value: tau,
        });
    }
    if step_r > r / 4.0 {
        return Err(BondError::StepTooLarge {
            coordinate: "r",
            step: step_r,
            value: r,
        });
    }
    let center = f(tau, r)?;
    let d1_tau = |h: f64| -> Result<f64> { Ok((f(tau + h, r)? - f(tau - h, r)?) / (2.0 * h)) };
    let d1_r = |h: f64| -> Result<f64> { Ok((f(tau, r + h)? - f(tau, r - h)?) / (2.0 * h)) };
    let d2_r =
        |h: f64| -> Result<f64> { Ok((f(tau, r + h)? - 2.0 * center + f(tau, r - h)?) / (h * h)) };
    let richardson = |coarse: f64, fine: f64| (4.0 * fine - coarse) / 3.0;
    Ok(LogPricePartials {
        value: center,
        d_tau: richardson(d1_tau(step_tau)?, d1_tau(step_tau / 2.0)?),
        d_r: richardson(d1_r(step_r)?, d1_r(step_r / 2.0)?),
        d_rr: richardson(d2_r(step_r)?, d2_r(step_r / 2.0)?),
    })
}

/// Residual `h(τ, r)` of a log-price function in the bond-pricing equation.
pub fn pde_residual<F: LogPriceFn>(
    f: &F,
    p: &ModelParams,
    tau: f64,
    r: f64,
    mode: Derivatives,
) -> Result<f64> {
    match mode {
        Derivatives::Exact => pde_residual_exact(f, p, tau, r),
        Derivatives::FiniteDifference { step_tau, step_r } => {
            let partials =
                finite_difference_partials(|t, x| f.log_price(t, x), tau, r, step_tau, step_r)?;
            Ok(pde_residual_from_partials(p, r, partials))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{cir_log_price, vasicek_log_price};
    use crate::pricing::{Formula, Pricer};

    const PARAMS: ModelParams = ModelParams::benchmark(0.5);

    #[test]
    fn q_factor_special_cases() {
        assert_eq!(q_factor(&ModelParams::benchmark(0.0), 0.3).unwrap(), 0.0);
        for &r in &[0.0, 0.01, 0.1] {
            let q: f64 = q_factor(&PARAMS, r).unwrap();
            assert!((q - PARAMS.drift(r)).abs() < 1e-18);
        }
        // gamma = 1: q = σ² r² + 2 r (α + βr)
        let p = ModelParams::benchmark(1.0);
        let r = 0.1;
        let want = p.sigma * p.sigma * r * r + 2.0 * r * p.drift(r);
        assert!((q_factor(&p, r).unwrap() - want).abs() < 1e-18);
        assert!(matches!(
            q_factor(&ModelParams::benchmark(0.3), 0.0),
            Err(BondError::DomainError { .. })
        ));
    }

    #[test]
    fn q_factor_is_the_generator_of_r_to_two_gamma() {
        // q = L[r^{2γ}] with L = σ² r^{2γ}/2 ∂²r + (α+βr) ∂r, checked by differences.
        for &g in &[0.75, 1.0, 1.32] {
            let p = ModelParams::benchmark(g);
            let r = 0.1;
            let h = 1e-5;
            let f = |x: f64| x.powf(2.0 * g);
            let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
            let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            let gen = 0.5 * p.sigma * p.sigma * r.powf(2.0 * g) * d2 + p.drift(r) * d1;
            let q: f64 = q_factor(&p, r).unwrap();
            assert!(((gen - q) / q).abs() < 1e-5, "g={g}");
        }
    }

    #[test]
    fn zero_maturity_is_par() {
        for &g in &[0.0, 0.5, 0.75, 1.32] {
            let p = ModelParams::benchmark(g);
            assert_eq!(cw_log_price(&p, 0.0, 0.05).unwrap(), 0.0);
            assert_eq!(improved_log_price(&p, 0.0, 0.05).unwrap(), 0.0);
        }
    }

    #[test]
    fn vasicek_case_is_bitwise_exact() {
        let p = ModelParams::benchmark(0.0);
        for &tau in &[0.01, 0.3, 1.0, 4.5, 9.0, 30.0] {
            for &r in &[-0.02, 0.0, 0.05, 0.2] {
                let a: f64 = cw_log_price(&p, tau, r).unwrap();
                let b: f64 = vasicek_log_price(&p, tau, r).unwrap();
                assert_eq!(a.to_bits(), b.to_bits(), "tau={tau} r={r}");
            }
        }
    }

    #[test]
    fn coefficients_vanish_for_vasicek() {
        let p = ModelParams::benchmark(0.0);
        for &r in &[0.0, 0.05] {
            assert_eq!(k4(&p, r).unwrap(), 0.0);
            assert_eq!(k5(&p, r).unwrap(), 0.0);
            assert_eq!(c5(&p, r).unwrap(), 0.0);
            assert_eq!(c6(&p, r).unwrap(), 0.0);
        }
    }

    #[test]
    fn cir_limits_at_zero_rate() {
        let s2 = PARAMS.sigma * PARAMS.sigma;
        let lim: f64 = c5(&PARAMS, 0.0).unwrap();
        assert!((lim + s2 / 120.0 * PARAMS.alpha * PARAMS.beta).abs() < 1e-22);
        // both sides of the floor follow the affine form
        for &r in &[0.5 * R_FLOOR, R_FLOOR, 2.0 * R_FLOOR, 0.1] {
            let got: f64 = c5(&PARAMS, r).unwrap();
            let want = -s2 / 120.0
                * (PARAMS.alpha * PARAMS.beta + r * (PARAMS.beta * PARAMS.beta - 4.0 * s2));
            assert!(((got - want) / want).abs() < 1e-13, "r={r}");
        }
        let (d1, d2): (f64, f64) = c5_derivatives(&PARAMS, 0.0).unwrap();
        let slope = -s2 / 120.0 * (PARAMS.beta * PARAMS.beta - 4.0 * s2);
        assert!((d1 - slope).abs() < 1e-22);
        assert_eq!(d2, 0.0);
    }

    #[test]
    fn singular_coefficients_report_domain_errors() {
        let p = ModelParams::benchmark(0.75);
        for f in [k4::<f64>, k5::<f64>, c5::<f64>, c6::<f64>] {
            assert!(matches!(f(&p, 0.0), Err(BondError::DomainError { .. })));
            assert!(f(&p, 1e-3).is_ok());
        }
        assert!(matches!(
            c5_derivatives::<f64>(&p, 1e-7),
            Err(BondError::DomainError { .. })
        ));
        // the price itself stays regular at r = 0
        assert!(cw_log_price(&p, 1.0, 0.0).unwrap().is_finite());
        assert!(improved_log_price(&p, 1.0, 0.0).is_err());
    }

    #[test]
    fn c5_is_minus_k4_over_five() {
        for &g in &[0.5, 0.6, 0.75, 1.0, 1.32, 1.45] {
            let p = ModelParams::benchmark(g);
            for &r in &[1e-4, 0.01, 0.05, 0.15, 0.3] {
                let a: f64 = c5(&p, r).unwrap();
                let b: f64 = k4(&p, r).unwrap();
                assert!(((a + b / 5.0) / a).abs() < 1e-13, "g={g} r={r}");
            }
        }
    }

    #[test]
    fn c5_derivatives_match_differences() {
        let check = |g: f64, r: f64| {
            let p = ModelParams::benchmark(g);
            let (d1, d2): (f64, f64) = c5_derivatives(&p, r).unwrap();
            let f = |x: f64| c5::<f64>(&p, x).unwrap();
            let h = 1e-3 * r;
            let fd1 = |h: f64| (f(r + h) - f(r - h)) / (2.0 * h);
            let fd2 = |h: f64| (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            let rd1 = (4.0 * fd1(h / 2.0) - fd1(h)) / 3.0;
            let rd2 = (4.0 * fd2(h / 2.0) - fd2(h)) / 3.0;
            assert!(((d1 - rd1) / d1).abs() < 1e-6, "g={g} r={r}: {d1} vs {rd1}");
            assert!(((d2 - rd2) / d2).abs() < 1e-4, "g={g} r={r}: {d2} vs {rd2}");
        };
        check(1.0, 0.1);
        check(0.75, 0.05);
        check(1.32, 0.2);
    }

    #[test]
    fn c6_satisfies_its_recurrence() {
        for &g in &[0.5, 0.75, 1.0, 1.32] {
            let p = ModelParams::benchmark(g);
            let r = 0.08;
            let c6v: f64 = c6(&p, r).unwrap();
            let (d1, d2): (f64, f64) = c5_derivatives(&p, r).unwrap();
            let k5v: f64 = k5(&p, r).unwrap();
            let terms = [
                -6.0 * c6v,
                0.5 * p.sigma * p.sigma * r.powf(2.0 * g) * d2,
                p.drift(r) * d1,
                -k5v,
            ];
            let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
            assert!(terms.iter().sum::<f64>().abs() < 1e-14 * scale, "g={g}");
        }
    }

    #[test]
    fn table_one_corner_values() {
        // τ = 0.25 L∞ of the original approximation against CIR, r ∈ [0, 0.15]
        let mut worst: f64 = 0.0;
        for i in 0..=1500 {
            let r = i as f64 * 1e-4;
            let d = cw_log_price(&PARAMS, 0.25, r).unwrap() - cir_log_price(&PARAMS, 0.25, r).unwrap();
            worst = worst.max(d.abs());
        }
        assert!((worst - 2.876e-10).abs() < 0.01 * 2.876e-10, "{worst:e}");
    }

    #[test]
    fn residual_modes_agree() {
        let pr = Pricer::new(Formula::Original, PARAMS);
        let fd = pde_residual(&pr, &PARAMS, 0.5, 0.1, Derivatives::default()).unwrap();
        let ex = pde_residual(&pr, &PARAMS, 0.5, 0.1, Derivatives::Exact).unwrap();
        assert!((fd - ex).abs() < 1e-9, "{fd:e} {ex:e}");
        // k4 τ⁴ dominates the exact residual
        let k4v: f64 = k4(&PARAMS, 0.1).unwrap();
        assert!(((ex / 0.5f64.powi(4)) - k4v).abs() < 0.2 * k4v.abs());
    }

    #[test]
    fn residual_step_guard() {
        let pr = Pricer::new(Formula::Original, PARAMS);
        let mode = Derivatives::FiniteDifference {
            step_tau: 0.1,
            step_r: 1e-5,
        };
        assert!(matches!(
            pde_residual(&pr, &PARAMS, 0.2, 0.1, mode),
            Err(BondError::StepTooLarge { coordinate: "tau", .. })
        ));
        assert!(matches!(
            pde_residual(&pr, &PARAMS, 1.0, 1e-5, Derivatives::default()),
            Err(BondError::StepTooLarge { coordinate: "r", .. })
        ));
    }

    #[test]
    fn exact_solutions_have_zero_residual_with_jets() {
        let v = ModelParams::benchmark(0.0);
        let h = pde_residual(&Pricer::new(Formula::Vasicek, v), &v, 0.7, 0.06, Derivatives::Exact)
            .unwrap();
        assert!(h.abs() < 1e-15);
        let h = pde_residual(&Pricer::new(Formula::Cir, PARAMS), &PARAMS, 0.5, 0.1, Derivatives::Exact)
            .unwrap();
        assert!(h.abs() < 1e-15);
    }
}
