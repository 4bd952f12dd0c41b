//! Model parameters and the one-dimensional grids shared by every pricer.
//!
//! Rates are annualized decimals (0.15 means 15%), maturities are in years.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{BondError, Result};

/// Risk-neutral CKLS parameters: `dr = (alpha + beta r) dt + sigma r^gamma dw`.
///
/// Mean reversion requires `beta < 0`; other signs are accepted but carry
/// no accuracy claim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub gamma: f64,
}

/// Reference parameter set used throughout the benchmark tables.
pub const BENCHMARK_ALPHA: f64 = 0.00315;
pub const BENCHMARK_BETA: f64 = -0.0555;
pub const BENCHMARK_SIGMA: f64 = 0.0894;

/// `|beta|` below this is treated as zero where a formula divides by `beta`.
pub const BETA_ZERO_THRESHOLD: f64 = 1e-10;

impl ModelParams {
    pub const fn new(alpha: f64, beta: f64, sigma: f64, gamma: f64) -> Self {
        ModelParams {
            alpha,
            beta,
            sigma,
            gamma,
        }
    }

    /// Benchmark drift and volatility with the requested exponent.
    pub const fn benchmark(gamma: f64) -> Self {
        ModelParams::new(BENCHMARK_ALPHA, BENCHMARK_BETA, BENCHMARK_SIGMA, gamma)
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        ModelParams { gamma, ..self }
    }

    pub fn is_vasicek(&self) -> bool {
        self.gamma == 0.0
    }

    pub fn is_cir(&self) -> bool {
        self.gamma == 0.5
    }

    pub fn beta_is_zero(&self) -> bool {
        self.beta.abs() < BETA_ZERO_THRESHOLD
    }

    /// Risk-neutral drift `alpha + beta r`.
    #[inline]
    pub fn drift(&self, r: f64) -> f64 {
        self.alpha + self.beta * r
    }

    /// Serializes to the `key = value` parameter-file format.
    pub fn to_param_file(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("gamma", self.gamma),
        ] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        out
    }

    /// Parses the `key = value` parameter-file format.
    ///
    /// All four keys are required exactly once; `#` starts a comment.
    pub fn from_param_file(text: &str) -> Result<Self> {
        let mut slots: [Option<f64>; 4] = [None; 4];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| BondError::ParamFile {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let slot = match key {
                "alpha" => 0,
                "beta" => 1,
                "sigma" => 2,
                "gamma" => 3,
                other => return Err(err(format!("unknown key `{other}`"))),
            };
            if slots[slot].is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
            let parsed = f64::from_str(value)
                .map_err(|_| err(format!("`{value}` is not a decimal number")))?;
            slots[slot] = Some(parsed);
        }
        let names = ["alpha", "beta", "sigma", "gamma"];
        let mut vals = [0.0; 4];
        for i in 0..4 {
            vals[i] = slots[i].ok_or_else(|| BondError::ParamFile {
                line: 0,
                message: format!("missing key `{}`", names[i]),
            })?;
        }
        Ok(ModelParams::new(vals[0], vals[1], vals[2], vals[3]))
    }
}

/// Checks the parameter invariants and returns the set unchanged.
///
/// The Feller condition `2 alpha >= sigma^2` is enforced only when
/// `requires_cir_condition` is set and `gamma = 1/2`.
pub fn validate_params(p: ModelParams, requires_cir_condition: bool) -> Result<ModelParams> {
    for (name, v) in [
        ("alpha", p.alpha),
        ("beta", p.beta),
        ("sigma", p.sigma),
        ("gamma", p.gamma),
    ] {
        if !v.is_finite() {
            return Err(BondError::NonFiniteParameter { name });
        }
    }
    if p.alpha <= 0.0 {
        return Err(BondError::NonPositiveAlpha(p.alpha));
    }
    if p.sigma <= 0.0 {
        return Err(BondError::NonPositiveSigma(p.sigma));
    }
    if p.gamma < 0.0 {
        return Err(BondError::NegativeGamma(p.gamma));
    }
    if requires_cir_condition && p.is_cir() {
        let two_alpha = 2.0 * p.alpha;
        let sigma_sq = p.sigma * p.sigma;
        if two_alpha < sigma_sq {
            return Err(BondError::FellerViolated {
                two_alpha,
                sigma_sq,
            });
        }
    }
    Ok(p)
}

/// Uniform grid on `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateGrid {
    r_min: f64,
    r_max: f64,
    n_points: usize,
}

impl RateGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite()) {
            return Err(BondError::InvalidGrid("non-finite bounds".into()));
        }
        if r_min < 0.0 || r_min >= r_max {
            return Err(BondError::InvalidGrid(format!(
                "need 0 <= r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if n_points < 2 {
            return Err(BondError::InvalidGrid(format!(
                "need at least 2 points, got {n_points}"
            )));
        }
        Ok(RateGrid {
            r_min,
            r_max,
            n_points,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n_points - 1) as f64
    }

    /// Node `i`; the last node is `r_max` exactly.
    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.r_max
        } else {
            self.r_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }
}

/// Strictly monotone list of positive maturities.
#[derive(Debug, Clone, PartialEq)]
pub struct MaturityGrid {
    taus: Vec<f64>,
}

impl MaturityGrid {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(BondError::InvalidGrid("no maturities".into()));
        }
        if let Some(bad) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(BondError::InvalidGrid(format!(
                "maturities must be positive, got {bad}"
            )));
        }
        let increasing = taus.windows(2).all(|w| w[0] < w[1]);
        let decreasing = taus.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(BondError::InvalidGrid(
                "maturities must be strictly monotone".into(),
            ));
        }
        Ok(MaturityGrid { taus })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.taus.iter().copied().fold(f64::MIN, f64::max)
    }
}

/// Log bond prices on a rate grid at one maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPriceCurve {
    pub grid: RateGrid,
    pub tau: f64,
    pub values: Vec<f64>,
}

impl LogPriceCurve {
    pub fn new(grid: RateGrid, tau: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(BondError::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(BondError::InvalidGrid("non-finite log-price".into()));
        }
        Ok(LogPriceCurve { grid, tau, values })
    }

    /// Samples `f(r)` at every grid node.
    pub fn tabulate<F>(grid: RateGrid, tau: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = grid.points().map(&mut f).collect::<Result<Vec<_>>>()?;
        LogPriceCurve::new(grid, tau, values)
    }

    /// Pointwise `self - other`.
    pub fn difference(&self, other: &LogPriceCurve) -> Result<LogPriceCurve> {
        if self.grid != other.grid || self.tau != other.tau {
            return Err(BondError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(LogPriceCurve {
            grid: self.grid,
            tau: self.tau,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_cir_violates_feller() {
        let p = ModelParams::benchmark(0.5);
        match validate_params(p, true) {
            Err(BondError::FellerViolated { two_alpha, sigma_sq }) => {
                assert!((two_alpha - 0.0063).abs() < 1e-15);
                assert!((sigma_sq - 0.00799236).abs() < 1e-15);
            }
            other => panic!("expected FellerViolated, got {other:?}"),
        }
        assert_eq!(validate_params(p, false), Ok(p));
    }

    #[test]
    fn rejects_bad_parameters() {
        let base = ModelParams::new(-1.0, 0.0, 1.0, 0.5);
        assert_eq!(
            validate_params(base, false),
            Err(BondError::NonPositiveAlpha(-1.0))
        );
        assert_eq!(
            validate_params(ModelParams::new(0.1, 0.0, 0.0, 0.5), false),
            Err(BondError::NonPositiveSigma(0.0))
        );
        assert_eq!(
            validate_params(ModelParams::new(0.1, 0.0, 0.1, -0.1), false),
            Err(BondError::NegativeGamma(-0.1))
        );
        assert!(matches!(
            validate_params(ModelParams::new(f64::NAN, 0.0, 0.1, 0.5), false),
            Err(BondError::NonFiniteParameter { name: "alpha" })
        ));
    }

    #[test]
    fn feller_flag_ignored_away_from_cir() {
        let p = ModelParams::benchmark(1.0);
        assert_eq!(validate_params(p, true), Ok(p));
        let ok = ModelParams::new(0.01, -0.1, 0.1, 0.5);
        assert_eq!(validate_params(ok, true), Ok(ok));
    }

    #[test]
    fn param_file_round_trip_and_comments() {
        let p = ModelParams::new(0.00315, -0.0555, 0.0894, 1.32);
        let text = p.to_param_file();
        assert_eq!(ModelParams::from_param_file(&text), Ok(p));

        let commented = "# benchmark\nalpha = 0.00315  # drift\n\nbeta=-0.0555\nsigma = 0.0894\ngamma = 0.5\n";
        assert_eq!(
            ModelParams::from_param_file(commented),
            Ok(ModelParams::benchmark(0.5))
        );
    }

    #[test]
    fn param_file_errors() {
        assert!(matches!(
            ModelParams::from_param_file("alpha = 1\nalpha = 2"),
            Err(BondError::ParamFile { line: 2, .. })
        ));
        assert!(matches!(
            ModelParams::from_param_file("alpha 1"),
            Err(BondError::ParamFile { line: 1, .. })
        ));
        assert!(matches!(
            ModelParams::from_param_file("alpha = 1\nbeta = 0\nsigma = 1"),
            Err(BondError::ParamFile { .. })
        ));
        assert!(matches!(
            ModelParams::from_param_file("kappa = 1"),
            Err(BondError::ParamFile { line: 1, .. })
        ));
        assert!(matches!(
            ModelParams::from_param_file("alpha = 1,5"),
            Err(BondError::ParamFile { line: 1, .. })
        ));
    }

    #[test]
    fn rate_grid_spacing_and_endpoints() {
        let g = RateGrid::new(0.0, 0.15, 1501).unwrap();
        assert!((g.spacing() - 1e-4).abs() < 1e-18);
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.point(1500), 0.15);
        let pts: Vec<f64> = g.points().collect();
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert!(RateGrid::new(0.1, 0.1, 3).is_err());
        assert!(RateGrid::new(-0.1, 0.1, 3).is_err());
        assert!(RateGrid::new(0.0, 0.1, 1).is_err());
    }

    #[test]
    fn maturity_grid_requires_monotone_positive() {
        assert!(MaturityGrid::new(vec![1.0, 0.75, 0.5, 0.25]).is_ok());
        assert!(MaturityGrid::new(vec![0.25, 0.5]).is_ok());
        assert!(MaturityGrid::new(vec![1.0, 1.0]).is_err());
        assert!(MaturityGrid::new(vec![1.0, 0.5, 0.75]).is_err());
        assert!(MaturityGrid::new(vec![0.0, 1.0]).is_err());
        assert!(MaturityGrid::new(vec![]).is_err());
    }

    #[test]
    fn curve_difference_requires_matching_grid() {
        let g = RateGrid::new(0.0, 0.1, 3).unwrap();
        let a = LogPriceCurve::new(g, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let b = LogPriceCurve::new(g, 1.0, vec![0.5, 0.5, 0.5]).unwrap();
        assert_eq!(a.difference(&b).unwrap().values, vec![0.5, 1.5, 2.5]);
        let c = LogPriceCurve::new(g, 0.5, vec![0.0; 3]).unwrap();
        assert_eq!(a.difference(&c), Err(BondError::GridMismatch));
        assert!(LogPriceCurve::new(g, 1.0, vec![0.0; 2]).is_err());
    }
}
