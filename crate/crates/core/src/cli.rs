//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 method does not apply to the
//! requested `gamma`, 4 golden check failed, 5 PDE solve became unstable.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    build_table, difference_curve, eoc, norm, pde_reference, NormKind, TableId, TableInputs,
    T1_TAUS, T3_GAMMAS,
};
use crate::error::BondError;
use crate::model::{validate_params, MaturityGrid, ModelParams, RateGrid};
use crate::pde::{boundary_policy, solve, DriftScheme, PdeConfig, ZeroBoundary};
use crate::pricing::{Formula, LogPriceFn, Pricer};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_METHOD_MISMATCH: i32 = 3;
pub const EXIT_GOLDEN: i32 = 4;
pub const EXIT_UNSTABLE: i32 = 5;

/// Caps the worker threads; 0 or unset means one per core.
pub const THREADS_ENV: &str = "BONDKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bondkit", version, about = "Zero-coupon bond prices under the CKLS short-rate model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one bond.
    Price(PriceArgs),
    /// Write one of the comparison tables.
    Table(TableArgs),
    /// Orders of convergence of an error sequence.
    Eoc(EocArgs),
    /// Solve the pricing equation numerically and write the snapshots.
    Pde(PdeArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Parameter file with `alpha`, `beta`, `sigma` and `gamma`; flags override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Reject CIR parameters that violate `2 alpha >= sigma^2`.
    #[arg(long)]
    pub require_feller: bool,
    /// Write the effective parameters to this file.
    #[arg(long)]
    pub save_params: Option<PathBuf>,
}

impl ModelArgs {
    fn resolve(&self, default_gamma: f64) -> Result<ModelParams, CliError> {
        let mut p = match &self.params {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read {}: {e}", path.display()))
                })?;
                ModelParams::from_param_file(&text)?
            }
            None => ModelParams::benchmark(default_gamma),
        };
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.sigma {
            p.sigma = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        let p = validate_params(p, self.require_feller)?;
        if let Some(path) = &self.save_params {
            fs::write(path, p.to_param_file()).map_err(|e| {
                CliError::Usage(format!("cannot write {}: {e}", path.display()))
            })?;
        }
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub nspace: Option<usize>,
    #[arg(long)]
    pub ntime: Option<usize>,
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Time-stepping weight: 1 fully implicit, 0.5 Crank–Nicolson.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Fully implicit start-up steps.
    #[arg(long)]
    pub rannacher: Option<usize>,
    #[arg(long, value_enum)]
    pub drift: Option<DriftArg>,
    #[arg(long, value_enum)]
    pub zero_boundary: Option<ZeroBoundaryArg>,
    /// Allow `gamma >= 1.5`.
    #[arg(long)]
    pub allow_high_gamma: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DriftArg {
    Central,
    Upwind,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZeroBoundaryArg {
    First,
    Second,
}

impl SolverArgs {
    fn config(&self, t_final: f64) -> PdeConfig {
        let d = PdeConfig::default();
        PdeConfig {
            r_max: self.rmax.unwrap_or(d.r_max),
            n_space: self.nspace.unwrap_or(d.n_space),
            n_time: self.ntime.unwrap_or(d.n_time),
            t_final,
            theta: self.theta.unwrap_or(d.theta),
            rannacher_steps: self.rannacher.unwrap_or(d.rannacher_steps),
            drift: match self.drift {
                None => d.drift,
                Some(DriftArg::Central) => DriftScheme::Central,
                Some(DriftArg::Upwind) => DriftScheme::Upwind,
                Some(DriftArg::Hybrid) => DriftScheme::Hybrid,
            },
            zero_boundary: match self.zero_boundary {
                None => d.zero_boundary,
                Some(ZeroBoundaryArg::First) => ZeroBoundary::FirstOrder,
                Some(ZeroBoundaryArg::Second) => ZeroBoundary::SecondOrder,
            },
            allow_high_gamma: self.allow_high_gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// First-order approximation.
    #[value(alias = "original")]
    Cw,
    Improved,
    Cir,
    Vasicek,
    Pde,
}

impl Method {
    fn formula(self) -> Option<Formula> {
        match self {
            Method::Cw => Some(Formula::Original),
            Method::Improved => Some(Formula::Improved),
            Method::Cir => Some(Formula::Cir),
            Method::Vasicek => Some(Formula::Vasicek),
            Method::Pde => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rate: f64,
    #[arg(long, value_enum, default_value = "cw")]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// 1, 2, 3 or fig1.
    #[arg(long)]
    pub table: TableId,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Compare against the published values and fail if any cell is out of tolerance.
    #[arg(long)]
    pub check: bool,
    /// Add a generation timestamp to the metadata lines.
    #[arg(long)]
    pub stamp: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EocArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated scales (maturities, or step sizes with --errors).
    #[arg(long, value_delimiter = ',', default_values_t = T1_TAUS.to_vec())]
    pub taus: Vec<f64>,
    /// Two formulas to compare, e.g. `cw,cir`.
    #[arg(long, value_delimiter = ',', default_values = ["cw", "cir"])]
    pub method_pair: Vec<Method>,
    #[arg(long, default_value = "linf")]
    pub norm: NormKind,
    /// Use these errors instead of comparing formulas.
    #[arg(long, value_delimiter = ',')]
    pub errors: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Snapshot maturities.
    #[arg(long, value_delimiter = ',', default_values = ["0.25", "0.5", "0.75", "1"])]
    pub taus: Vec<f64>,
    /// Horizon; defaults to the largest snapshot.
    #[arg(long)]
    pub tfinal: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug)]
pub enum CliError {
    Bond(BondError),
    Usage(String),
    Golden(String),
}

impl From<BondError> for CliError {
    fn from(e: BondError) -> Self {
        CliError::Bond(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Bond(e) => match e {
                BondError::GammaMismatch { .. } | BondError::BetaZeroUnsupportedForClosedForm(_) => {
                    EXIT_METHOD_MISMATCH
                }
                BondError::UnstableSolve { .. } | BondError::TridiagonalSingular { .. } => {
                    EXIT_UNSTABLE
                }
                _ => EXIT_VALIDATION,
            },
            CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Golden(_) => EXIT_GOLDEN,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Bond(e) => e.to_string(),
            CliError::Usage(m) | CliError::Golden(m) => m.clone(),
        }
    }
}

/// `printf("%.17g")`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_output(path: &Option<PathBuf>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(e.to_string())),
    }
}

/// Step count at or above `n_time` that puts every snapshot on a time level,
/// if one exists within a factor of two.
pub fn aligned_steps(n_time: usize, t_final: f64, taus: &[f64]) -> Option<usize> {
    (n_time.max(1)..=2 * n_time.max(1)).find(|&n| {
        taus.iter().all(|&t| {
            let x = t * n as f64 / t_final;
            (x - x.round()).abs() < 1e-9
        })
    })
}

fn cmd_price(a: &PriceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = a.model.resolve(0.5)?;
    if a.tau < 0.0 || a.tau.is_nan() {
        return Err(BondError::NegativeMaturity(a.tau).into());
    }
    let lnp = match a.method.formula() {
        Some(f) => Pricer::new(f, p).log_price(a.tau, a.rate)?,
        None if a.tau == 0.0 => 0.0,
        None => {
            let mut cfg = a.solver.config(a.tau);
            cfg.n_time = aligned_steps(cfg.n_time, a.tau, &[a.tau]).unwrap_or(cfg.n_time);
            let taus = MaturityGrid::new(vec![a.tau])?;
            let sol = solve(&p, &cfg, &taus)?;
            sol.interpolate(a.tau, a.rate).ok_or(BondError::DomainError {
                what: "pde price outside the solver domain",
                r: a.rate,
            })?
        }
    };
    writeln!(out, "lnP={} P={}", format_g17(lnp), format_g17(lnp.exp()))
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn stamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix={secs}")
}

fn cmd_table(a: &TableArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let p = a.model.resolve(0.5)?;
    let mut inputs = TableInputs::default();
    if a.table == TableId::T3 {
        let taus = MaturityGrid::new(vec![0.25, 0.5, 0.75, 1.0])?;
        let mut cfg = a.solver.config(1.0);
        cfg.n_time = aligned_steps(cfg.n_time, 1.0, taus.as_slice()).unwrap_or(cfg.n_time);
        inputs.pde = T3_GAMMAS
            .iter()
            .map(|&g| pde_reference(&p.with_gamma(g), &cfg, &taus))
            .collect::<Result<_, _>>()?;
    }
    let table = build_table(a.table, &p, &inputs)?;
    let stamp = a.stamp.then(stamp);
    let text = match a.format {
        OutputFormat::Csv => table.to_csv(stamp.as_deref()),
        OutputFormat::Text => {
            let body = table.to_text();
            match &stamp {
                Some(s) => format!("# generated {s}\n{body}"),
                None => body,
            }
        }
    };
    write_output(&a.out, &text, out)?;
    if a.check {
        let failures = table.golden_failures();
        let summary = match table.worst_golden() {
            None => "golden check: no published values for this table".to_string(),
            Some(w) => format!(
                "golden check: {} of {} cells within tolerance; worst {} computed {:e} published {:e} ({:?})",
                table.goldens.len() - failures.len(),
                table.goldens.len(),
                w.label,
                w.computed,
                w.reference,
                w.tolerance
            ),
        };
        let sink: &mut dyn Write = if a.out.is_some() { out } else { err };
        writeln!(sink, "{summary}").map_err(|e| CliError::Usage(e.to_string()))?;
        if !failures.is_empty() {
            return Err(CliError::Golden(format!(
                "{} cells outside tolerance",
                failures.len()
            )));
        }
    }
    Ok(())
}

fn cmd_eoc(a: &EocArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let taus = MaturityGrid::new(a.taus.clone())?;
    let mut lines = Vec::new();
    let errs = match &a.errors {
        Some(e) => {
            lines.push("# errors supplied".to_string());
            e.clone()
        }
        None => {
            let p = a.model.resolve(0.5)?;
            let [x, y] = a.method_pair.as_slice() else {
                return Err(CliError::Usage(
                    "--method-pair takes exactly two methods".into(),
                ));
            };
            let (Some(fa), Some(fb)) = (x.formula(), y.formula()) else {
                return Err(CliError::Usage(
                    "--method-pair accepts closed-form methods only".into(),
                ));
            };
            let (pa, pb) = (Pricer::new(fa, p), Pricer::new(fb, p));
            let grid = RateGrid::new(0.0, 0.15, 1501)?;
            lines.push(format!(
                "# {fa} - {fb}, norm {}, alpha={:?} beta={:?} sigma={:?} gamma={:?}",
                a.norm, p.alpha, p.beta, p.sigma, p.gamma
            ));
            taus.as_slice()
                .iter()
                .map(|&t| Ok(norm(a.norm, &difference_curve(&pa, &pb, &grid, t)?)))
                .collect::<Result<Vec<f64>, BondError>>()?
        }
    };
    let rows = eoc(&errs, &taus)?;
    lines.push("tau,err,eoc".into());
    for r in rows {
        lines.push(format!(
            "{:?},{:?},{}",
            r.tau_coarse,
            r.err_coarse,
            r.eoc.map(|e| format!("{e:?}")).unwrap_or_default()
        ));
    }
    let mut text = lines.join("\n");
    text.push('\n');
    write_output(&a.out, &text, out)
}

fn cmd_pde(a: &PdeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let p = a.model.resolve(0.5)?;
    let taus = MaturityGrid::new(a.taus.clone())?;
    let t_final = a.tfinal.unwrap_or_else(|| taus.max());
    let mut cfg = a.solver.config(t_final);
    match aligned_steps(cfg.n_time, t_final, taus.as_slice()) {
        Some(n) => cfg.n_time = n,
        None => {
            let _ = writeln!(err, "note: snapshots fall between time levels and are interpolated");
        }
    }
    let sol = solve(&p, &cfg, &taus)?;
    write_output(&a.out, &sol.to_csv(), out)?;
    let d = &sol.diagnostics;
    let _ = writeln!(
        err,
        "steps={} implicit_steps={} max_linear_residual={:e} min_price={:?} max_price={:?}\nboundary: {}",
        d.steps,
        d.implicit_steps,
        d.max_linear_residual,
        d.min_price,
        d.max_price,
        boundary_policy(&p, &cfg)
    );
    if cfg.n_space < 11 {
        let _ = writeln!(err, "warning: {} spatial nodes is too coarse to trust", cfg.n_space);
    }
    Ok(())
}

fn configure_threads() {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        // a pool already exists when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Price(a) => cmd_price(a, out),
        Command::Table(a) => cmd_table(a, out, err),
        Command::Eoc(a) => cmd_eoc(a, out),
        Command::Pde(a) => cmd_pde(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-0.05), "-0.050000000000000003");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(123456.5), "123456.5");
        assert_eq!(format_g17(1e20), "1e+20");
        for x in [0.951229424500714, -0.0512710963760241, 3.3e-5] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn step_alignment() {
        assert_eq!(aligned_steps(40_000, 1.0, &[0.25, 0.5, 1.0]), Some(40_000));
        assert_eq!(aligned_steps(10, 1.0, &[0.3]), Some(10));
        assert_eq!(aligned_steps(7, 1.0, &[0.25]), Some(8));
        assert_eq!(aligned_steps(3, 1.0, &[0.1234567]), None);
    }

    #[test]
    fn exit_codes() {
        let mismatch = CliError::Bond(BondError::GammaMismatch {
            pricer: "cir",
            expected: 0.5,
            actual: 1.0,
        });
        assert_eq!(mismatch.exit_code(), EXIT_METHOD_MISMATCH);
        assert_eq!(
            CliError::Bond(BondError::UnstableSolve { step: 1, node: 0 }).exit_code(),
            EXIT_UNSTABLE
        );
        assert_eq!(CliError::Bond(BondError::NonPositiveAlpha(0.0)).exit_code(), EXIT_VALIDATION);
        assert_eq!(CliError::Golden(String::new()).exit_code(), EXIT_GOLDEN);
    }
}
