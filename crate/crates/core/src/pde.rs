//! Finite-difference reference solver for the bond-pricing equation
//!
//! `∂τ P = σ² r^{2γ}/2 ∂²r P + (α + βr) ∂r P - r P`,  `P(0, r) = 1`,
//!
//! on `[0, r_max]`. Time stepping is a θ-scheme, by default Crank–Nicolson
//! after a few fully implicit start-up steps; every step is one tridiagonal
//! solve.

use std::fmt;

use rayon::prelude::*;

use crate::error::{BondError, Result};
use crate::model::{validate_params, LogPriceCurve, MaturityGrid, ModelParams, RateGrid};
use crate::tridiag::Tridiagonal;

/// Exponents at or above this are refused unless explicitly allowed.
pub const GAMMA_LIMIT: f64 = 1.5;

/// Discretization of the drift term at interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DriftScheme {
    #[default]
    Central,
    Upwind,
    /// Central where the cell Péclet number is at most one, upwind elsewhere.
    Hybrid,
}

/// One-sided drift stencil at `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ZeroBoundary {
    /// `α (P₁ - P₀)/h`
    FirstOrder,
    /// `α (-3P₀ + 4P₁ - P₂)/(2h)`
    #[default]
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeConfig {
    pub r_max: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub t_final: f64,
    /// 1 is fully implicit, 0.5 is Crank–Nicolson.
    pub theta: f64,
    /// Fully implicit steps taken before switching to `theta`.
    pub rannacher_steps: usize,
    pub drift: DriftScheme,
    pub zero_boundary: ZeroBoundary,
    pub allow_high_gamma: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            r_max: 0.5,
            n_space: 4001,
            n_time: 40_000,
            t_final: 1.0,
            theta: 0.5,
            rannacher_steps: 10,
            drift: DriftScheme::Central,
            zero_boundary: ZeroBoundary::SecondOrder,
            allow_high_gamma: false,
        }
    }
}

impl PdeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BondError::InvalidConfig(m));
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return bad(format!("r_max must be positive, got {}", self.r_max));
        }
        if self.n_space < 3 {
            return bad(format!("n_space must be at least 3, got {}", self.n_space));
        }
        if self.n_time < 1 {
            return bad("n_time must be at least 1".into());
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0.5, 1], got {}", self.theta));
        }
        Ok(())
    }

    pub fn rate_grid(&self) -> Result<RateGrid> {
        RateGrid::new(0.0, self.r_max, self.n_space)
    }

    pub fn time_step(&self) -> f64 {
        self.t_final / self.n_time as f64
    }

    /// The grid with twice the spacing and four times the step, for error
    /// estimates at second order in space and time.
    pub fn coarsened(&self) -> Result<PdeConfig> {
        if !(self.n_space - 1).is_multiple_of(2) || !self.n_time.is_multiple_of(4) {
            return Err(BondError::InvalidConfig(format!(
                "cannot coarsen {} nodes and {} steps",
                self.n_space, self.n_time
            )));
        }
        Ok(PdeConfig {
            n_space: (self.n_space - 1) / 2 + 1,
            n_time: self.n_time / 4,
            ..*self
        })
    }
}

/// How the two ends of the rate domain are closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPolicy {
    pub zero: ZeroBoundary,
    /// Diffusion survives at `r = 0` only for `gamma = 0`.
    pub diffusion_at_zero: bool,
}

impl fmt::Display for BoundaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = match self.zero {
            ZeroBoundary::FirstOrder => "first",
            ZeroBoundary::SecondOrder => "second",
        };
        write!(
            f,
            "r=0: equation imposed with {order}-order one-sided drift{}; \
             r=r_max: zero curvature (ghost node 2P_N - P_(N-1))",
            if self.diffusion_at_zero {
                " and one-sided diffusion"
            } else {
                ", no diffusion"
            }
        )
    }
}

pub fn boundary_policy(p: &ModelParams, cfg: &PdeConfig) -> BoundaryPolicy {
    BoundaryPolicy {
        zero: cfg.zero_boundary,
        diffusion_at_zero: p.gamma == 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverDiagnostics {
    pub steps: usize,
    pub implicit_steps: usize,
    /// Largest `‖M x - b‖∞` over all linear solves.
    pub max_linear_residual: f64,
    pub min_price: f64,
    pub max_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub config: PdeConfig,
    pub params: ModelParams,
    pub grid: RateGrid,
    pub taus: Vec<f64>,
    /// `log_prices[k][i]` is `ln P(taus[k], r_i)`.
    pub log_prices: Vec<Vec<f64>>,
    pub diagnostics: SolverDiagnostics,
}

/// The spatial operator `L` as three diagonals plus the `P₂` entry of row 0.
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    row0_p2: f64,
}

impl Operator {
    fn new(p: &ModelParams, cfg: &PdeConfig, grid: &RateGrid) -> Self {
        let n = grid.n_points();
        let h = grid.spacing();
        let h2 = h * h;
        let half_sig2 = 0.5 * p.sigma * p.sigma;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];

        for i in 1..n - 1 {
            let r = grid.point(i);
            let d = half_sig2 * r.powf(2.0 * p.gamma);
            let mu = p.drift(r);
            let upwind = match cfg.drift {
                DriftScheme::Central => false,
                DriftScheme::Upwind => true,
                DriftScheme::Hybrid => mu.abs() * h > 2.0 * d,
            };
            lower[i] = d / h2;
            diag[i] = -2.0 * d / h2 - r;
            upper[i] = d / h2;
            if !upwind {
                lower[i] -= mu / (2.0 * h);
                upper[i] += mu / (2.0 * h);
            } else if mu > 0.0 {
                diag[i] -= mu / h;
                upper[i] += mu / h;
            } else {
                lower[i] -= mu / h;
                diag[i] += mu / h;
            }
        }

        let last = n - 1;
        let r = grid.point(last);
        let mu = p.drift(r);
        lower[last] = -mu / h;
        diag[last] = mu / h - r;

        let alpha = p.alpha;
        let mut row0_p2 = 0.0;
        match cfg.zero_boundary {
            ZeroBoundary::FirstOrder => {
                diag[0] = -alpha / h;
                upper[0] = alpha / h;
            }
            ZeroBoundary::SecondOrder => {
                diag[0] = -3.0 * alpha / (2.0 * h);
                upper[0] = 4.0 * alpha / (2.0 * h);
                row0_p2 = -alpha / (2.0 * h);
            }
        }
        if p.gamma == 0.0 {
            // forward second difference
            diag[0] += half_sig2 / h2;
            upper[0] -= 2.0 * half_sig2 / h2;
            row0_p2 += half_sig2 / h2;
        }
        Operator {
            lower,
            diag,
            upper,
            row0_p2,
        }
    }

    /// `y = x + w L x`.
    fn explicit(&self, w: f64, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        y[0] = x[0] + w * (self.diag[0] * x[0] + self.upper[0] * x[1] + self.row0_p2 * x[2]);
        for i in 1..n - 1 {
            y[i] = x[i]
                + w * (self.lower[i] * x[i - 1] + self.diag[i] * x[i] + self.upper[i] * x[i + 1]);
        }
        y[n - 1] = x[n - 1] + w * (self.lower[n - 1] * x[n - 2] + self.diag[n - 1] * x[n - 1]);
    }

    /// `I - w L` with the `P₂` entry of row 0 eliminated against row 1.
    /// Returns the matrix and the multiplier applied to the right-hand side.
    fn implicit(&self, w: f64) -> (Tridiagonal, f64) {
        let n = self.diag.len();
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.lower[i] = -w * self.lower[i];
            m.diag[i] = 1.0 - w * self.diag[i];
            m.upper[i] = -w * self.upper[i];
        }
        m.lower[0] = 0.0;
        m.upper[n - 1] = 0.0;
        let m02 = -w * self.row0_p2;
        let mut k = 0.0;
        if m02 != 0.0 {
            k = m02 / m.upper[1];
            m.diag[0] -= k * m.lower[1];
            m.upper[0] -= k * m.diag[1];
        }
        (m, k)
    }
}

/// Solves the pricing equation and records `ln P` at the requested maturities.
pub fn solve(p: &ModelParams, cfg: &PdeConfig, snapshot_taus: &MaturityGrid) -> Result<PdeSolution> {
    let p = validate_params(*p, false)?;
    cfg.validate()?;
    if p.gamma >= GAMMA_LIMIT && !cfg.allow_high_gamma {
        return Err(BondError::InvalidConfig(format!(
            "gamma = {} is at or above {GAMMA_LIMIT}; set allow_high_gamma to solve anyway",
            p.gamma
        )));
    }
    for &tau in snapshot_taus.as_slice() {
        if tau > cfg.t_final * (1.0 + 1e-12) {
            return Err(BondError::SnapshotOutOfRange {
                tau,
                t_final: cfg.t_final,
            });
        }
    }

    let grid = cfg.rate_grid()?;
    let n = grid.n_points();
    let dt = cfg.time_step();
    let op = Operator::new(&p, cfg, &grid);
    let (mut m_start, k_start) = op.implicit(dt);
    let (mut m_main, k_main) = op.implicit(cfg.theta * dt);
    let explicit_weight = (1.0 - cfg.theta) * dt;

    // Fractional step index of each snapshot.
    let targets: Vec<f64> = snapshot_taus
        .as_slice()
        .iter()
        .map(|&t| (t * cfg.n_time as f64 / cfg.t_final).min(cfg.n_time as f64))
        .collect();
    let mut log_prices = vec![Vec::new(); targets.len()];

    let mut current = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut rhs_copy = vec![0.0; n];
    let mut applied = vec![0.0; n];
    let mut diag = SolverDiagnostics {
        min_price: 1.0,
        max_price: 1.0,
        ..Default::default()
    };

    let record = |level: usize, prev: &[f64], cur: &[f64], out: &mut [Vec<f64>]| {
        for (k, &t) in targets.iter().enumerate() {
            if !out[k].is_empty() {
                continue;
            }
            let lo = level as f64 - 1.0;
            if t <= level as f64 {
                let w = (t - lo).clamp(0.0, 1.0);
                out[k] = if level == 0 || w == 1.0 {
                    cur.iter().map(|v| v.ln()).collect()
                } else {
                    prev.iter()
                        .zip(cur)
                        .map(|(a, b)| ((1.0 - w) * a + w * b).ln())
                        .collect()
                };
            }
        }
    };
    record(0, &current, &current, &mut log_prices);

    for step in 1..=cfg.n_time {
        let start_up = step <= cfg.rannacher_steps;
        let (m, k) = if start_up {
            (&mut m_start, k_start)
        } else {
            (&mut m_main, k_main)
        };
        if start_up {
            next.copy_from_slice(&current);
            diag.implicit_steps += 1;
        } else {
            op.explicit(explicit_weight, &current, &mut next);
        }
        next[0] -= k * next[1];
        rhs_copy.copy_from_slice(&next);
        m.solve_in_place(&mut next)?;
        m.apply(&next, &mut applied);
        let res = applied
            .iter()
            .zip(&rhs_copy)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        diag.max_linear_residual = diag.max_linear_residual.max(res);
        for (i, &v) in next.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(BondError::UnstableSolve { step, node: i });
            }
            diag.min_price = diag.min_price.min(v);
            diag.max_price = diag.max_price.max(v);
        }
        record(step, &current, &next, &mut log_prices);
        std::mem::swap(&mut current, &mut next);
        diag.steps += 1;
    }

    Ok(PdeSolution {
        config: *cfg,
        params: p,
        grid,
        taus: snapshot_taus.as_slice().to_vec(),
        log_prices,
        diagnostics: diag,
    })
}

/// Independent solves in parallel; results keep the input order.
pub fn solve_many(
    jobs: &[(ModelParams, PdeConfig)],
    snapshot_taus: &MaturityGrid,
) -> Vec<Result<PdeSolution>> {
    jobs.par_iter()
        .map(|(p, cfg)| solve(p, cfg, snapshot_taus))
        .collect()
}

impl PdeSolution {
    fn index_of(&self, tau: f64) -> Option<usize> {
        self.taus
            .iter()
            .position(|&t| (t - tau).abs() <= 1e-12 * tau.abs().max(1.0))
    }

    /// `ln P` on the solver grid at a recorded maturity.
    pub fn snapshot(&self, tau: f64) -> Option<&[f64]> {
        self.index_of(tau).map(|k| self.log_prices[k].as_slice())
    }

    /// `ln P` at an arbitrary rate by four-point Lagrange interpolation.
    pub fn interpolate(&self, tau: f64, r: f64) -> Option<f64> {
        let values = self.snapshot(tau)?;
        let h = self.grid.spacing();
        let n = values.len();
        if !(r >= 0.0 && r <= self.grid.r_max() * (1.0 + 1e-12)) {
            return None;
        }
        let x = r / h;
        let base = (x.floor() as usize).saturating_sub(1).min(n.saturating_sub(4));
        let nodes = (base..(base + 4).min(n)).collect::<Vec<_>>();
        let mut acc = 0.0;
        for &j in &nodes {
            let mut w = 1.0;
            for &m in &nodes {
                if m != j {
                    w *= (x - m as f64) / (j as f64 - m as f64);
                }
            }
            acc += w * values[j];
        }
        Some(acc)
    }

    /// The snapshot at `tau` resampled onto `grid`.
    pub fn curve_on(&self, grid: &RateGrid, tau: f64) -> Result<LogPriceCurve> {
        let t_final = self.config.t_final;
        LogPriceCurve::tabulate(*grid, tau, |r| {
            self.interpolate(tau, r)
                .ok_or(BondError::SnapshotOutOfRange { tau, t_final })
        })
    }

    /// `(ρ fine - coarse)/(ρ - 1)` on the coarse nodes, where `self` is the
    /// fine solve and `ratio` = ρ is the factor by which refinement shrinks
    /// the error.
    pub fn richardson(&self, coarse: &PdeSolution, ratio: f64) -> Result<PdeSolution> {
        let stride = self.stride_over(coarse)?;
        let log_prices = self
            .log_prices
            .iter()
            .zip(&coarse.log_prices)
            .map(|(f, c)| {
                c.iter()
                    .enumerate()
                    .map(|(i, cv)| (ratio * f[i * stride] - cv) / (ratio - 1.0))
                    .collect()
            })
            .collect();
        Ok(PdeSolution {
            log_prices,
            grid: coarse.grid,
            config: coarse.config,
            ..self.clone()
        })
    }

    /// `max |fine - coarse| / (ρ - 1)` over coarse nodes in `[0, r_hi]`:
    /// the error of the fine solve when refinement divides it by `ratio` = ρ.
    pub fn error_estimate(
        &self,
        coarse: &PdeSolution,
        tau: f64,
        r_hi: f64,
        ratio: f64,
    ) -> Result<f64> {
        Ok(self.max_difference(coarse, tau, r_hi)? / (ratio - 1.0))
    }

    /// Observed error reduction per refinement from three solves, each one
    /// [`PdeConfig::coarsened`] from the previous.
    pub fn convergence_ratio(
        &self,
        coarse: &PdeSolution,
        coarser: &PdeSolution,
        tau: f64,
        r_hi: f64,
    ) -> Result<f64> {
        let upper = coarse.max_difference(coarser, tau, r_hi)?;
        let lower = self.max_difference(coarse, tau, r_hi)?;
        Ok(upper / lower)
    }

    /// `max |self - coarse|` over coarse nodes in `[0, r_hi]`.
    pub fn max_difference(&self, coarse: &PdeSolution, tau: f64, r_hi: f64) -> Result<f64> {
        let stride = self.stride_over(coarse)?;
        let t_final = self.config.t_final;
        let missing = || BondError::SnapshotOutOfRange { tau, t_final };
        let f = self.snapshot(tau).ok_or_else(missing)?;
        let c = coarse.snapshot(tau).ok_or_else(missing)?;
        Ok(c.iter()
            .enumerate()
            .filter(|(i, _)| coarse.grid.point(*i) <= r_hi * (1.0 + 1e-12))
            .map(|(i, cv)| (f[i * stride] - cv).abs())
            .fold(0.0, f64::max))
    }

    fn stride_over(&self, coarse: &PdeSolution) -> Result<usize> {
        let (nf, nc) = (self.grid.n_points() - 1, coarse.grid.n_points() - 1);
        if self.taus != coarse.taus
            || self.grid.r_max() != coarse.grid.r_max()
            || nc == 0
            || nf % nc != 0
        {
            return Err(BondError::GridMismatch);
        }
        Ok(nf / nc)
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let p = &self.params;
        let mut out = String::new();
        out.push_str(&format!(
            "# params alpha={:?} beta={:?} sigma={:?} gamma={:?}\n",
            p.alpha, p.beta, p.sigma, p.gamma
        ));
        out.push_str(&format!(
            "# config r_max={:?} n_space={} n_time={} t_final={:?} theta={:?} rannacher_steps={} drift={:?} zero_boundary={:?}\n",
            c.r_max, c.n_space, c.n_time, c.t_final, c.theta, c.rannacher_steps, c.drift, c.zero_boundary
        ));
        out.push_str(&format!("# boundary {}\n", boundary_policy(p, c)));
        out.push('r');
        for t in &self.taus {
            out.push_str(&format!(",lnP_tau_{t:?}"));
        }
        out.push('\n');
        for i in 0..self.grid.n_points() {
            out.push_str(&format!("{:?}", self.grid.point(i)));
            for s in &self.log_prices {
                out.push_str(&format!(",{:?}", s[i]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{cir_log_price, vasicek_log_price};

    fn small(n_space: usize, n_time: usize) -> PdeConfig {
        PdeConfig {
            n_space,
            n_time,
            ..PdeConfig::default()
        }
    }

    fn taus(v: &[f64]) -> MaturityGrid {
        MaturityGrid::new(v.to_vec()).unwrap()
    }

    fn cir_error(sol: &PdeSolution, tau: f64) -> f64 {
        let p = sol.params;
        (0..sol.grid.n_points())
            .filter(|&i| sol.grid.point(i) <= 0.15 + 1e-12)
            .map(|i| {
                let r = sol.grid.point(i);
                (sol.snapshot(tau).unwrap()[i] - cir_log_price(&p, tau, r).unwrap()).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn config_validation() {
        assert!(PdeConfig::default().validate().is_ok());
        for bad in [
            PdeConfig { n_space: 2, ..Default::default() },
            PdeConfig { n_time: 0, ..Default::default() },
            PdeConfig { theta: 0.4, ..Default::default() },
            PdeConfig { r_max: 0.0, ..Default::default() },
            PdeConfig { t_final: -1.0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(BondError::InvalidConfig(_))));
        }
        let c = PdeConfig::default().coarsened().unwrap();
        assert_eq!((c.n_space, c.n_time), (2001, 10_000));
        assert!(small(4000, 10).coarsened().is_err());
    }

    #[test]
    fn refuses_high_gamma_without_override() {
        let p = ModelParams::benchmark(1.6);
        let cfg = small(41, 40);
        assert!(matches!(
            solve(&p, &cfg, &taus(&[1.0])),
            Err(BondError::InvalidConfig(_))
        ));
        let cfg = PdeConfig {
            allow_high_gamma: true,
            ..cfg
        };
        assert!(solve(&p, &cfg, &taus(&[1.0])).is_ok());
    }

    #[test]
    fn snapshots_beyond_horizon_are_rejected() {
        let p = ModelParams::benchmark(0.5);
        assert!(matches!(
            solve(&p, &small(41, 40), &taus(&[0.5, 1.5])),
            Err(BondError::SnapshotOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_maturity_snapshot_is_zero() {
        let p = ModelParams::benchmark(0.75);
        let sol = solve(&p, &small(41, 40), &taus(&[1e-300, 1.0])).unwrap();
        assert!(sol.log_prices[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn minimal_grid_runs() {
        let p = ModelParams::benchmark(0.5);
        let sol = solve(&p, &small(3, 1), &taus(&[1.0])).unwrap();
        assert!(sol.log_prices[0].iter().all(|v| v.is_finite()));
        assert_eq!(sol.diagnostics.steps, 1);
    }

    #[test]
    fn second_order_convergence_to_cir() {
        let p = ModelParams::benchmark(0.5);
        let t = taus(&[1.0]);
        let coarse = solve(&p, &small(201, 200), &t).unwrap();
        let fine = solve(&p, &small(401, 800), &t).unwrap();
        let (ec, ef) = (cir_error(&coarse, 1.0), cir_error(&fine, 1.0));
        let order = (ec / ef).log2();
        assert!(order > 1.9, "{ec:e} {ef:e} {order}");
        assert!(fine.diagnostics.max_linear_residual < 1e-13);
        assert!(fine.diagnostics.max_price <= 1.0 + 1e-6);
    }

    #[test]
    fn upwind_drift_is_first_order() {
        let p = ModelParams::benchmark(0.5);
        let t = taus(&[1.0]);
        // enough steps that the time error stays out of the way
        let cfg = |n: usize| PdeConfig {
            drift: DriftScheme::Upwind,
            ..small(n, 4000)
        };
        let ec = cir_error(&solve(&p, &cfg(201), &t).unwrap(), 1.0);
        let ef = cir_error(&solve(&p, &cfg(401), &t).unwrap(), 1.0);
        let order = (ec / ef).log2();
        assert!((0.8..1.3).contains(&order), "{order}");
    }

    #[test]
    fn vasicek_truncation_at_zero_does_not_refine_away() {
        // The Vasicek rate crosses zero; closing the domain there is a
        // modeling error that no refinement removes.
        let p = ModelParams::benchmark(0.0);
        let t = taus(&[1.0]);
        let err_at_zero = |n, m| {
            let sol = solve(&p, &small(n, m), &t).unwrap();
            (sol.log_prices[0][0] - vasicek_log_price(&p, 1.0, 0.0).unwrap()).abs()
        };
        let (ec, ef) = (err_at_zero(401, 800), err_at_zero(801, 3200));
        assert!(ef > 1e-5 && ec / ef < 1.1, "{ec:e} {ef:e}");
    }

    #[test]
    fn interpolation_between_steps_is_linear() {
        let p = ModelParams::benchmark(1.0);
        let cfg = small(41, 10);
        let on = solve(&p, &cfg, &taus(&[0.1, 0.2])).unwrap();
        let mid = solve(&p, &cfg, &taus(&[0.15])).unwrap();
        for i in 0..41 {
            let a = on.log_prices[0][i].exp();
            let b = on.log_prices[1][i].exp();
            let m = mid.log_prices[0][i].exp();
            assert!((m - 0.5 * (a + b)).abs() < 1e-15);
        }
    }

    #[test]
    fn lagrange_interpolation_reproduces_nodes_and_cubics() {
        let p = ModelParams::benchmark(0.5);
        let mut sol = solve(&p, &small(11, 1), &taus(&[1.0])).unwrap();
        let h = sol.grid.spacing();
        sol.log_prices[0] = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        for &r in &[0.0, 0.013, 0.25, 0.49, 0.5] {
            assert!((sol.interpolate(1.0, r).unwrap() - r.powi(3)).abs() < 1e-15);
        }
        assert!(sol.interpolate(1.0, 0.6).is_none());
        assert!(sol.interpolate(0.7, 0.1).is_none());
    }

    #[test]
    fn richardson_and_error_estimate() {
        let p = ModelParams::benchmark(0.5);
        let t = taus(&[1.0]);
        let fine_cfg = small(401, 1600);
        let coarse_cfg = fine_cfg.coarsened().unwrap();
        let fine = solve(&p, &fine_cfg, &t).unwrap();
        let coarse = solve(&p, &coarse_cfg, &t).unwrap();
        let coarser = solve(&p, &coarse_cfg.coarsened().unwrap(), &t).unwrap();
        let ratio = fine.convergence_ratio(&coarse, &coarser, 1.0, 0.15).unwrap();
        assert!((3.5..17.0).contains(&ratio), "{ratio}");
        let est = fine.error_estimate(&coarse, 1.0, 0.15, ratio).unwrap();
        let actual = cir_error(&fine, 1.0);
        assert!(est > 0.5 * actual && est < 2.0 * actual, "{est:e} {actual:e}");
        let extrap = fine.richardson(&coarse, ratio).unwrap();
        assert!(cir_error(&extrap, 1.0) < 0.2 * actual, "{:e}", cir_error(&extrap, 1.0));
        assert!(matches!(coarse.richardson(&fine, 4.0), Err(BondError::GridMismatch)));
    }

    #[test]
    fn boundary_policy_description() {
        let cfg = PdeConfig::default();
        let b = boundary_policy(&ModelParams::benchmark(0.5), &cfg);
        assert!(!b.diffusion_at_zero);
        assert!(b.to_string().contains("second-order"));
        assert!(boundary_policy(&ModelParams::benchmark(0.0), &cfg).diffusion_at_zero);
    }

    #[test]
    fn zero_node_is_unchanged_by_the_first_step_on_constant_data() {
        let p = ModelParams::benchmark(0.5);
        for zb in [ZeroBoundary::FirstOrder, ZeroBoundary::SecondOrder] {
            let cfg = PdeConfig {
                zero_boundary: zb,
                ..small(101, 1000)
            };
            let sol = solve(&p, &cfg, &taus(&[1e-3])).unwrap();
            let p0 = sol.log_prices[0][0].exp();
            assert!(p0 <= 1.0 && p0 > 1.0 - 1e-8, "{p0}");
        }
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::benchmark(0.5);
        let sol = solve(&p, &small(5, 4), &taus(&[0.5, 1.0])).unwrap();
        let csv = sol.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# params"));
        assert_eq!(lines[3], "r,lnP_tau_0.5,lnP_tau_1.0");
        assert_eq!(lines.len(), 4 + 5);
        assert!(lines[4].starts_with("0.0,"));
    }

    #[test]
    fn parallel_solves_match_sequential() {
        let t = taus(&[1.0]);
        let jobs: Vec<_> = [0.5, 0.75, 1.0]
            .iter()
            .map(|&g| (ModelParams::benchmark(g), small(41, 40)))
            .collect();
        let par = solve_many(&jobs, &t);
        for ((p, c), got) in jobs.iter().zip(par) {
            assert_eq!(got.unwrap(), solve(p, c, &t).unwrap());
        }
    }
}
