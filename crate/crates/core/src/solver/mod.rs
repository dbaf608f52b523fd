//! Difference equations `Op(sigma) f = g`: exact inversion of multipliers and
//! parametrix-preconditioned iteration for elliptic symbols.

use std::fmt;

use num_complex::Complex64;

use crate::analysis::{weighted_norm, DiagnosticsReport, WeightedNormParams};
use crate::calculus::{parametrix_with, partial_sum, ExpansionOrder, ParametrixOptions, SymbolExpansion};
use crate::error::{PdzError, Result};
use crate::lattice_fourier::{forward_fourier, inverse_fourier, LatticeSequence, TorusFunction};
use crate::quantize::apply;
use crate::symbol::SampledSymbol;

/// Largest row deviation accepted as k-independence.
pub const K_DEPENDENCE_TOL: f64 = 1e-12;
/// Grid values at or below this modulus count as zeros of the symbol.
pub const ZERO_TOL: f64 = 1e-10;
/// Minima below this modulus produce a conditioning warning.
pub const CONDITIONING_WARN: f64 = 1e-6;
/// Consecutive residual increases that count as divergence.
pub const DIVERGENCE_STREAK: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    ExactMultiplier,
    ParametrixIteration,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::ExactMultiplier => "exact-multiplier",
            SolveMethod::ParametrixIteration => "parametrix-iteration",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: LatticeSequence,
    /// `||g - Op(sigma) f||_{l^2}`, recomputed from the original symbol.
    pub residual_l2: f64,
    /// `(s, ||g - Op(sigma) f||_{l^2_s})`.
    pub weighted_residuals: Vec<(f64, f64)>,
    pub iterations: usize,
    pub method: SolveMethod,
    /// Residual after each iteration (empty for exact inversion).
    pub history: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn to_diagnostics(&self) -> DiagnosticsReport {
        let mut rep = DiagnosticsReport::new();
        let sec = rep.section("solve");
        sec.text("method", self.method.to_string())
            .count("iterations", self.iterations)
            .real("residual_l2", self.residual_l2);
        for (s, r) in &self.weighted_residuals {
            sec.real(format!("residual_l2_s{s}"), *r);
        }
        sec.real("solution_l2", self.solution.norm_l2());
        if !self.history.is_empty() {
            sec.list("history", self.history.clone());
        }
        for (i, w) in self.warnings.iter().enumerate() {
            sec.text(format!("warning_{i}"), w.clone());
        }
        rep
    }
}

/// Options shared by the solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Weights `s` of the reported residual norms.
    pub weights: Vec<f64>,
    pub parametrix: ParametrixOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            weights: vec![0.0, 2.0],
            parametrix: ParametrixOptions {
                m_cut: 1.0,
                order_step: 1.0,
            },
        }
    }
}

fn finish(
    sigma: &SampledSymbol,
    g: &LatticeSequence,
    f: LatticeSequence,
    iterations: usize,
    method: SolveMethod,
    weights: &[f64],
) -> Result<SolveReport> {
    let r = g.add_scaled(Complex64::new(-1.0, 0.0), &apply(sigma, &f)?);
    Ok(SolveReport {
        residual_l2: r.norm_l2(),
        weighted_residuals: weights.iter().map(|&s| (s, weighted_norm(&r, WeightedNormParams::l2(s)))).collect(),
        solution: f,
        iterations,
        method,
        history: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Solves `Op(sigma) f = g` for a k-independent `sigma` by division on the torus.
pub fn invert_multiplier(sigma: &SampledSymbol, g: &LatticeSequence) -> Result<SolveReport> {
    invert_multiplier_with(sigma, g, &SolveOptions::default())
}

pub fn invert_multiplier_with(sigma: &SampledSymbol, g: &LatticeSequence, opts: &SolveOptions) -> Result<SolveReport> {
    let bx = *sigma.lattice();
    if g.lattice() != &bx {
        return Err(PdzError::domain("symbol and right-hand side live on different boxes"));
    }
    let deviation = sigma.k_deviation();
    if deviation > K_DEPENDENCE_TOL * sigma.max_abs().max(1.0) {
        return Err(PdzError::KDependent { deviation });
    }
    let row = sigma.row(0);
    let grid = bx.torus();
    let (q, min) = row
        .iter()
        .enumerate()
        .map(|(q, v)| (q, v.norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    if min <= ZERO_TOL {
        return Err(PdzError::SingularSymbol {
            node: grid.node_indices(q),
            x: grid.node(q),
            value: min,
        });
    }
    let mut warnings = Vec::new();
    if min < CONDITIONING_WARN {
        warnings.push(format!("ill-conditioned: min |sigma| = {min:e} at x = {:?}", grid.node(q)));
    }
    let hat = forward_fourier(g, &grid)?;
    let quotient: Vec<Complex64> = hat.values().iter().zip(row).map(|(h, s)| h / s).collect();
    let f = inverse_fourier(&TorusFunction::new(grid, quotient)?, &bx)?;
    let mut report = finish(sigma, g, f, 1, SolveMethod::ExactMultiplier, &opts.weights)?;
    report.warnings = warnings;
    Ok(report)
}

/// Richardson iteration `f <- f + Op(B)(g - Op(sigma) f)` from `f = Op(B) g`, where `B` is the
/// `n_par`-term parametrix of `sigma` of order `mu`.
///
/// `max_iter` bounds the number of correction steps; the reported count is
/// the number of correction steps taken, at least 1.
pub fn solve_elliptic(
    sigma: &SampledSymbol,
    mu: f64,
    g: &LatticeSequence,
    n_par: ExpansionOrder,
    max_iter: usize,
    tol: f64,
) -> Result<SolveReport> {
    solve_elliptic_with(sigma, mu, g, n_par, max_iter, tol, &SolveOptions::default())
}

pub fn solve_elliptic_with(
    sigma: &SampledSymbol,
    mu: f64,
    g: &LatticeSequence,
    n_par: ExpansionOrder,
    max_iter: usize,
    tol: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if g.lattice() != sigma.lattice() {
        return Err(PdzError::domain("symbol and right-hand side live on different boxes"));
    }
    if max_iter == 0 || tol.is_nan() || tol <= 0.0 {
        return Err(PdzError::domain("solve_elliptic needs max_iter >= 1 and tol > 0"));
    }
    let expansion = SymbolExpansion::single(sigma.clone(), mu);
    let par = parametrix_with(&expansion, mu, n_par, opts.parametrix)?;
    let b = partial_sum(&par, par.len())?;
    let target = tol * g.norm_l2();
    let mut f = apply(&b, g)?;
    let mut history = Vec::new();
    let mut streak = 0;
    let mut updates = 0;
    loop {
        let r = g.add_scaled(Complex64::new(-1.0, 0.0), &apply(sigma, &f)?);
        let rn = r.norm_l2();
        if !rn.is_finite() {
            history.push(rn);
            return Err(PdzError::Divergence { history });
        }
        if let Some(&prev) = history.last() {
            streak = if rn > prev { streak + 1 } else { 0 };
        }
        history.push(rn);
        if streak >= DIVERGENCE_STREAK {
            return Err(PdzError::Divergence { history });
        }
        if rn <= target || updates >= max_iter {
            break;
        }
        f = f.add_scaled(Complex64::new(1.0, 0.0), &apply(&b, &r)?);
        updates += 1;
    }
    let iterations = updates.max(1);
    let mut warnings = Vec::new();
    if *history.last().expect("one residual") > target {
        warnings.push(format!("tolerance not reached after {iterations} iterations"));
    }
    let mut report = finish(sigma, g, f, iterations, SolveMethod::ParametrixIteration, &opts.weights)?;
    report.history = history;
    report.warnings = warnings;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_fourier::LatticeBox;
    use crate::quantize::matrix;
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn ch(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }

    fn example3(bx: LatticeBox) -> SampledSymbol {
        SampledSymbol::from_x_fn(bx, |x| Complex64::new(1.0, 2.0 * (2.0 * PI * x[0]).sin())).unwrap()
    }

    #[test]
    fn example3_inverse_matches_forward_and_quadrature() {
        let bx = LatticeBox::new(1, 16).unwrap();
        let s = example3(bx);
        let g = LatticeSequence::delta(bx, &[0]).unwrap();
        let rep = invert_multiplier(&s, &g).unwrap();
        assert_eq!(rep.method, SolveMethod::ExactMultiplier);
        assert!(rep.residual_l2 < 1e-11);
        let quad = |k: i64| -> Complex64 {
            let m = 4096;
            (0..m)
                .map(|j| {
                    let x = j as f64 / m as f64;
                    ch(k as f64 * x) / Complex64::new(1.0, 2.0 * (2.0 * PI * x).sin())
                })
                .sum::<Complex64>()
                / m as f64
        };
        for k in -5..=5 {
            assert!((rep.solution.get(&[k]).unwrap() - quad(k)).norm() < 1e-5, "k={k}");
        }
    }

    #[test]
    fn constant_and_singular_multipliers() {
        let bx = LatticeBox::new(2, 3).unwrap();
        let c = SampledSymbol::constant(bx, Complex64::new(0.0, 4.0));
        let g = LatticeSequence::from_fn(bx, |k| Complex64::new(k[0] as f64, k[1] as f64)).unwrap();
        let rep = invert_multiplier(&c, &g).unwrap();
        for (f, gv) in rep.solution.values().iter().zip(g.values()) {
            assert!((f - gv / Complex64::new(0.0, 4.0)).norm() < 1e-13);
        }
        let d = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) - 1.0).unwrap();
        match invert_multiplier(&d, &LatticeSequence::delta(bx, &[0, 0]).unwrap()) {
            Err(PdzError::SingularSymbol { x, .. }) => assert_eq!(x[0], 0.0),
            other => panic!("{other:?}"),
        }
        let kd = SampledSymbol::from_k_fn(bx, |k| Complex64::new(1.0 + k[0].abs() as f64, 0.0)).unwrap();
        assert!(matches!(invert_multiplier(&kd, &g), Err(PdzError::KDependent { .. })));
    }

    #[test]
    fn near_zero_symbol_warns() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let s = SampledSymbol::from_x_fn(bx, |x| Complex64::new(x[0] + 1e-8, 0.0)).unwrap();
        let rep = invert_multiplier(&s, &LatticeSequence::delta(bx, &[1]).unwrap()).unwrap();
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn k_independent_elliptic_converges_in_one_step() {
        let bx = LatticeBox::new(1, 8).unwrap();
        let s = example3(bx);
        let g = LatticeSequence::from_fn(bx, |k| Complex64::new(1.0 / (1.0 + (k[0] * k[0]) as f64), 0.0)).unwrap();
        let n = ExpansionOrder::new(3).unwrap();
        let it = solve_elliptic(&s, 0.0, &g, n, 50, 1e-10).unwrap();
        let ex = invert_multiplier(&s, &g).unwrap();
        assert_eq!(it.iterations, 1);
        assert!(it.solution.max_abs_diff(&ex.solution) < 1e-12);
    }

    fn fixture(bx: LatticeBox) -> SampledSymbol {
        SampledSymbol::from_fn(bx, |k, x| Complex64::new(1.0 + (k[0] * k[0]) as f64, 0.0) + ch(x[0])).unwrap()
    }

    #[test]
    fn parametrix_iteration_matches_dense_solve() {
        let bx = LatticeBox::new(1, 16).unwrap();
        let s = fixture(bx);
        let g = LatticeSequence::delta(bx, &[0]).unwrap();
        let rep = solve_elliptic(&s, 2.0, &g, ExpansionOrder::new(3).unwrap(), 20, 1e-8).unwrap();
        assert!(rep.residual_l2 <= 1e-8, "{:?}", rep.history);
        let a = matrix(&s).unwrap().to_dmatrix();
        let rhs = DVector::from_column_slice(g.values());
        let exact = a.lu().solve(&rhs).unwrap();
        let diff = rep.solution.values().iter().zip(exact.iter()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-7, "{diff}");
        let again = g.add_scaled(Complex64::new(-1.0, 0.0), &apply(&s, &rep.solution).unwrap()).norm_l2();
        assert!((again - rep.residual_l2).abs() <= 1e-12);
    }

    #[test]
    fn iteration_count_non_increasing_in_parametrix_order() {
        let bx = LatticeBox::new(1, 16).unwrap();
        let s = fixture(bx);
        let g = LatticeSequence::delta(bx, &[0]).unwrap();
        let counts: Vec<usize> = (1..=4)
            .map(|m| solve_elliptic(&s, 2.0, &g, ExpansionOrder::new(m).unwrap(), 200, 1e-8).unwrap().iterations)
            .collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }

    #[test]
    fn non_elliptic_and_divergent_inputs() {
        let bx = LatticeBox::new(1, 6).unwrap();
        let d = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) - 1.0).unwrap();
        let g = LatticeSequence::delta(bx, &[0]).unwrap();
        let n = ExpansionOrder::new(2).unwrap();
        assert!(matches!(solve_elliptic(&d, 0.0, &g, n, 10, 1e-8), Err(PdzError::NotElliptic { .. })));
        let opts = SolveOptions {
            parametrix: ParametrixOptions { m_cut: 0.0, order_step: 1.0 },
            ..SolveOptions::default()
        };
        match solve_elliptic_with(&fixture(bx), 2.0, &g, ExpansionOrder::new(3).unwrap(), 100, 1e-12, &opts) {
            Err(PdzError::Divergence { history }) => assert!(history.len() >= 4),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn report_renders() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let rep = invert_multiplier(&example3(bx), &LatticeSequence::delta(bx, &[0]).unwrap()).unwrap();
        let text = rep.to_diagnostics().to_string();
        assert!(text.starts_with("[solve]\nmethod = \"exact-multiplier\"\niterations = 1\nresidual_l2 = "));
        assert!(text.contains("residual_l2_s2 = "));
    }
}
