//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numeric domain
//! error, 4 non-elliptic or singular symbol.

pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    compactness_tail, fso_report, hs_trace_report, kernel_decay_fit, lp_bound_report, mikhlin_uniformity,
    schatten_report, DiagnosticsReport,
};
use crate::calculus::{adjoint, compose, parametrix_with, partial_sum, transpose, ExpansionOrder, ParametrixOptions, SymbolExpansion};
use crate::error::{PdzError, Result};
use crate::lattice_fourier::io::write_sequence;
use crate::quantize::io::{write_kernel_csv, write_matrix};
use crate::quantize::{apply, kernel, matrix, PhaseFunction};
use crate::solver::{invert_multiplier_with, solve_elliptic_with, SolveOptions, K_DEPENDENCE_TOL};
use crate::symbol::expr::Expr;
use crate::symbol::io::write_symbol;
use crate::symbol::ellipticity_check;
use config::Job;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_INVERTIBILITY: i32 = 4;

/// Exit code for an error.
pub fn exit_code(e: &PdzError) -> i32 {
    match e {
        PdzError::Config(_) | PdzError::Parse(_) | PdzError::Io(_) | PdzError::Csv(_) | PdzError::Resource { .. } => {
            EXIT_CONFIG
        }
        PdzError::NotElliptic { .. } | PdzError::SingularSymbol { .. } => EXIT_INVERTIBILITY,
        PdzError::Domain(_) | PdzError::NonFinite { .. } | PdzError::KDependent { .. } | PdzError::Divergence { .. } => {
            EXIT_DOMAIN
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pdz", version, about = "Pseudo-difference operators on the lattice Z^n")]
pub struct Cli {
    /// Job configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Box half-width N; the box is {-N..N}^n.
    #[arg(long = "box", global = true, value_name = "N")]
    pub half_width: Option<usize>,
    /// Lattice dimension n.
    #[arg(long, global = true, value_name = "n")]
    pub dim: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Seed for probe-based diagnostics.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply Op(sigma) to a lattice sequence.
    Apply(ApplyArgs),
    /// Export the kernel kappa(k, l) as CSV or the operator matrix as binary.
    Kernel(KernelArgs),
    /// Asymptotic composition symbol of two symbols.
    Compose(ComposeArgs),
    /// Asymptotic adjoint symbol.
    Adjoint(UnaryArgs),
    /// Asymptotic transpose symbol.
    Transpose(UnaryArgs),
    /// Partial sum of the parametrix of an elliptic symbol.
    Parametrix(ParametrixArgs),
    /// Solve Op(sigma) f = g.
    Solve(SolveArgs),
    /// Norm, trace, Schatten, decay, l^p, compactness and Mikhlin diagnostics.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub symbol: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub input: Option<String>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub symbol: Option<String>,
    /// `csv` (kernel entries) or `matrix` (binary operator matrix).
    #[arg(long)]
    pub format: Option<String>,
    /// Omit kernel entries with modulus at most this value.
    #[arg(long, value_name = "FLOAT")]
    pub drop_below: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub left: Option<String>,
    #[arg(long)]
    pub right: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct UnaryArgs {
    #[arg(long)]
    pub symbol: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ParametrixArgs {
    #[arg(long)]
    pub symbol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub m_cut: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub symbol: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub input: Option<String>,
    /// `auto`, `exact` or `parametrix`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Report destination; stdout when the solution goes to a file, stderr otherwise.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub symbol: Option<String>,
    #[arg(long)]
    pub hs: bool,
    #[arg(long)]
    pub trace: bool,
    #[arg(long, value_name = "P", num_args = 1..)]
    pub schatten: Vec<f64>,
    #[arg(long, value_name = "N_T", num_args = 1..)]
    pub decay: Vec<usize>,
    #[arg(long, value_name = "P", num_args = 1..)]
    pub lp: Vec<f64>,
    #[arg(long, value_name = "CUT", num_args = 1..)]
    pub tail: Vec<usize>,
    #[arg(long, value_name = "N", num_args = 1..)]
    pub mikhlin: Vec<usize>,
}

/// Parses `args` (including the program name) and runs the job; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn required(v: Option<String>, what: &str) -> Result<String> {
    v.ok_or_else(|| PdzError::Config(format!("missing {what}")))
}

fn order(v: Option<usize>) -> Result<ExpansionOrder> {
    ExpansionOrder::new(v.unwrap_or(3)).map_err(|e| PdzError::Config(e.to_string()))
}

/// Writes to `path` if given, else to stdout.
fn emit(path: Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(&p).map_err(|e| PdzError::Config(format!("cannot create {}: {e}", p.display())))?;
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_report(rep: &DiagnosticsReport, w: &mut dyn Write) -> Result<()> {
    write!(w, "{rep}")?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| PdzError::Config("--config PATH is required".into()))?;
    let job = Job::load(path, cli.dim, cli.half_width)?;
    let cfg = &job.config;
    let out = |section: Option<&String>| cli.out.clone().or_else(|| section.map(|s| job.path(s)));
    match &cli.command {
        Command::Apply(a) => {
            let sec = cfg.apply.as_ref();
            let name = job.symbol_name(a.symbol.clone().or(sec.and_then(|s| s.symbol.clone())), "apply")?;
            let input = required(a.input.clone().or(sec.and_then(|s| s.input.clone())), "apply input")?;
            let sigma = job.sampled(&name)?;
            let f = job.sequence(&input)?;
            let g = apply(&sigma, &f)?;
            emit(out(sec.and_then(|s| s.output.as_ref())), |w| write_sequence(&g, w))
        }
        Command::Kernel(a) => {
            let sec = cfg.kernel.as_ref();
            let name = job.symbol_name(a.symbol.clone().or(sec.and_then(|s| s.symbol.clone())), "kernel")?;
            let sigma = job.sampled(&name)?;
            let format = a.format.clone().or(sec.and_then(|s| s.format.clone())).unwrap_or_else(|| "csv".into());
            let drop = a.drop_below.or(sec.and_then(|s| s.drop_below)).unwrap_or(1e-13);
            let dst = out(sec.and_then(|s| s.output.as_ref()));
            match format.as_str() {
                "csv" => {
                    let k = kernel(&sigma);
                    emit(dst, |w| write_kernel_csv(&k, w, (drop > 0.0).then_some(drop)))
                }
                "matrix" => {
                    let m = matrix(&sigma)?;
                    emit(dst, |w| write_matrix(&m, w))
                }
                other => Err(PdzError::Config(format!("unknown kernel format '{other}' (csv or matrix)"))),
            }
        }
        Command::Compose(a) => {
            let sec = cfg.compose.as_ref();
            let left = required(a.left.clone().or(sec.and_then(|s| s.left.clone())), "compose left")?;
            let right = required(a.right.clone().or(sec.and_then(|s| s.right.clone())), "compose right")?;
            let n = order(a.order.or(sec.and_then(|s| s.order)))?;
            let c = compose(&job.sampled(&left)?, &job.sampled(&right)?, n)?;
            emit(out(sec.and_then(|s| s.output.as_ref())), |w| write_symbol(&c, w))
        }
        Command::Adjoint(a) | Command::Transpose(a) => {
            let is_adjoint = matches!(cli.command, Command::Adjoint(_));
            let sec = if is_adjoint { cfg.adjoint.as_ref() } else { cfg.transpose.as_ref() };
            let name = job.symbol_name(a.symbol.clone().or(sec.and_then(|s| s.symbol.clone())), "the")?;
            let n = order(a.order.or(sec.and_then(|s| s.order)))?;
            let sigma = job.sampled(&name)?;
            let r = if is_adjoint { adjoint(&sigma, n)? } else { transpose(&sigma, n)? };
            emit(out(sec.and_then(|s| s.output.as_ref())), |w| write_symbol(&r, w))
        }
        Command::Parametrix(a) => {
            let sec = cfg.parametrix.as_ref();
            let name = job.symbol_name(a.symbol.clone().or(sec.and_then(|s| s.symbol.clone())), "parametrix")?;
            let mu = match a.mu.or(sec.and_then(|s| s.mu)) {
                Some(m) => m,
                None => job.declared_mu(&name)?,
            };
            let n = order(a.order.or(sec.and_then(|s| s.order)))?;
            let opts = ParametrixOptions {
                m_cut: a.m_cut.or(sec.and_then(|s| s.m_cut)).unwrap_or(0.0),
                order_step: sec.and_then(|s| s.order_step).unwrap_or(1.0),
            };
            let sigma = job.sampled(&name)?;
            let rep = ellipticity_check(&sigma, mu, opts.m_cut)?;
            let par = parametrix_with(&SymbolExpansion::single(sigma, mu), mu, n, opts)?;
            eprintln!("ellipticity constant = {:e} (mu = {mu}, m_cut = {})", rep.constant, opts.m_cut);
            let b = partial_sum(&par, par.len())?;
            emit(out(sec.and_then(|s| s.output.as_ref())), |w| write_symbol(&b, w))
        }
        Command::Solve(a) => solve(cli, &job, a),
        Command::Diagnose(a) => diagnose(cli, &job, a),
    }
}

fn solve(cli: &Cli, job: &Job, a: &SolveArgs) -> Result<()> {
    let default = Default::default();
    let sec = job.config.solve.as_ref().unwrap_or(&default);
    let name = job.symbol_name(a.symbol.clone().or(sec.symbol.clone()), "solve")?;
    let input = required(a.input.clone().or(sec.input.clone()), "solve input")?;
    let sigma = job.sampled(&name)?;
    let g = job.sequence(&input)?;
    let mut opts = SolveOptions::default();
    if let Some(w) = &sec.weights {
        opts.weights = w.clone();
    }
    if let Some(c) = sec.m_cut {
        opts.parametrix.m_cut = c;
    }
    let method = a.method.clone().or(sec.method.clone()).unwrap_or_else(|| "auto".into());
    let exact = match method.as_str() {
        "exact" => true,
        "parametrix" => false,
        "auto" => sigma.k_deviation() <= K_DEPENDENCE_TOL * sigma.max_abs().max(1.0),
        other => return Err(PdzError::Config(format!("unknown solve method '{other}'"))),
    };
    let report = if exact {
        invert_multiplier_with(&sigma, &g, &opts)?
    } else {
        let mu = match a.mu.or(sec.mu) {
            Some(m) => m,
            None => job.declared_mu(&name)?,
        };
        let n = order(a.order.or(sec.order))?;
        let tol = cli.tol.or(sec.tol).or(job.config.tol).unwrap_or(1e-10);
        let max_iter = a.max_iter.or(sec.max_iter).unwrap_or(100);
        solve_elliptic_with(&sigma, mu, &g, n, max_iter, tol, &opts)?
    };
    let rep = report.to_diagnostics();
    let solution_out = cli.out.clone().or_else(|| sec.output.as_ref().map(|s| job.path(s)));
    let report_out = a.report.clone().or_else(|| sec.report.as_ref().map(|s| job.path(s)));
    match (&solution_out, report_out) {
        (_, Some(p)) => emit(Some(p), |w| write_report(&rep, w))?,
        (Some(_), None) => emit(None, |w| write_report(&rep, w))?,
        (None, None) => eprint!("{rep}"),
    }
    emit(solution_out, |w| write_sequence(&report.solution, w))
}

fn diagnose(cli: &Cli, job: &Job, a: &DiagnoseArgs) -> Result<()> {
    let default = Default::default();
    let sec = job.config.diagnose.as_ref().unwrap_or(&default);
    let name = job.symbol_name(a.symbol.clone().or(sec.symbol.clone()), "diagnose")?;
    let from_flags = a.hs || a.trace || !(a.schatten.is_empty() && a.decay.is_empty() && a.lp.is_empty() && a.tail.is_empty() && a.mikhlin.is_empty());
    let pick = |flag: &Vec<f64>, conf: &Option<Vec<f64>>| if from_flags { flag.clone() } else { conf.clone().unwrap_or_default() };
    let pick_n = |flag: &Vec<usize>, conf: &Option<Vec<usize>>| if from_flags { flag.clone() } else { conf.clone().unwrap_or_default() };
    let any_conf = sec.hs.is_some()
        || sec.trace.is_some()
        || sec.schatten.is_some()
        || sec.decay.is_some()
        || sec.lp.is_some()
        || sec.tail.is_some()
        || sec.mikhlin.is_some()
        || sec.fso_phase.is_some();
    let (hs, tr) = if from_flags {
        (a.hs, a.trace)
    } else if any_conf {
        (sec.hs.unwrap_or(false), sec.trace.unwrap_or(false))
    } else {
        (true, true)
    };
    let sigma = job.sampled(&name)?;
    let seed = cli.seed.or(job.config.seed).unwrap_or(0);
    let mut rep = DiagnosticsReport::new();
    rep.section("symbol")
        .text("name", name.clone())
        .count("dim", job.bx.dim())
        .count("half_width", job.bx.half_width());
    if hs || tr {
        let full = hs_trace_report(&sigma)?;
        for s in full.sections() {
            if (s.name() == "hs" && hs) || (s.name() == "trace" && tr) {
                let dst = rep.section(s.name());
                for (k, v) in s.entries() {
                    dst.put(k.clone(), v.clone());
                }
            }
        }
    }
    for p in pick(&a.schatten, &sec.schatten) {
        rename_merge(&mut rep, schatten_report(&sigma, p)?, &format!("schatten p={p}"));
    }
    let mu = sec.decay_mu.map_or_else(|| job.declared_mu(&name), Ok)?;
    for nt in pick_n(&a.decay, &sec.decay) {
        rename_merge(&mut rep, kernel_decay_fit(&sigma, nt, mu)?, &format!("kernel_decay n_t={nt}"));
    }
    for p in pick(&a.lp, &sec.lp) {
        rename_merge(&mut rep, lp_bound_report(&sigma, p, seed)?, &format!("lp_bound p={p}"));
    }
    let cuts = pick_n(&a.tail, &sec.tail);
    if !cuts.is_empty() {
        let p = sec.tail_p.unwrap_or(2.0);
        let tails = cuts.iter().map(|&c| compactness_tail(&sigma, c, p)).collect::<Result<Vec<f64>>>()?;
        rep.section("compactness")
            .list("cuts", cuts.iter().map(|&c| c as f64).collect())
            .list("tails", tails);
    }
    let sizes = pick_n(&a.mikhlin, &sec.mikhlin);
    if !sizes.is_empty() {
        rep.merge(mikhlin_uniformity(job.definition(&name)?, job.bx.dim(), &sizes)?);
    }
    if let (false, Some(src)) = (from_flags, &sec.fso_phase) {
        let e = Expr::parse(src)?;
        let phi = PhaseFunction::new(src.clone(), move |k, x| e.eval(k, x).re);
        rep.merge(fso_report(&phi, &sigma)?);
    }
    emit(cli.out.clone().or_else(|| sec.output.as_ref().map(|s| job.path(s))), |w| write_report(&rep, w))
}

fn rename_merge(dst: &mut DiagnosticsReport, src: DiagnosticsReport, name: &str) {
    for s in src.sections() {
        let d = dst.section(name);
        for (k, v) in s.entries() {
            d.put(k.clone(), v.clone());
        }
    }
}
