//! Norm, trace, Schatten, boundedness and compactness diagnostics.
//!
//! Every routine works on the cyclic model. Dense spectral quantities are
//! only computed under [`DEFAULT_DENSE_CAP`].

mod report;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PdzError, Result};
use crate::lattice_fourier::{LatticeBox, LatticeSequence};
use crate::quantize::{apply, fso_boundedness_check, matrix, PhaseFunction, DEFAULT_DENSE_CAP};
use crate::symbol::{sample, SampledSymbol, SymbolDefinition};

pub use report::{DiagnosticsReport, ReportSection, ReportValue};

/// Tolerance of the power iteration in [`operator_norm_2`].
pub const POWER_ITERATION_TOL: f64 = 1e-8;

/// Parameters of the weighted space `l^p_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormParams {
    pub s: f64,
    pub p: f64,
}

impl WeightedNormParams {
    pub fn new(s: f64, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) || !s.is_finite() {
            return Err(PdzError::domain(format!("weighted norm needs finite s and 1 <= p < inf, got s={s}, p={p}")));
        }
        Ok(WeightedNormParams { s, p })
    }

    pub fn l2(s: f64) -> Self {
        WeightedNormParams { s, p: 2.0 }
    }
}

/// `(sum_k (1+|k|)^{sp} |f(k)|^p)^{1/p}`.
pub fn weighted_norm(f: &LatticeSequence, params: WeightedNormParams) -> f64 {
    let bx = f.lattice();
    let WeightedNormParams { s, p } = params;
    f.values()
        .iter()
        .enumerate()
        .map(|(i, v)| ((1.0 + bx.norm(i)).powf(s) * v.norm()).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `(sum_k M^{-n} sum_x |sigma(k, x)|^2)^{1/2}`.
pub fn hs_norm(sigma: &SampledSymbol) -> f64 {
    let w = sigma.grid().weight();
    (sigma.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
}

/// `sum_k M^{-n} sum_x sigma(k, x)`.
pub fn trace(sigma: &SampledSymbol) -> Complex64 {
    let w = sigma.grid().weight();
    sigma.samples().iter().sum::<Complex64>() * w
}

fn dense(sigma: &SampledSymbol) -> Result<DMatrix<Complex64>> {
    Ok(matrix(sigma)?.to_dmatrix())
}

/// Sum of the eigenvalues of `matrix(sigma)`, from a complex Schur form.
pub fn eigenvalue_sum(sigma: &SampledSymbol) -> Result<Complex64> {
    let (_, t) = dense(sigma)?.schur().unpack();
    Ok(t.diagonal().iter().sum())
}

/// Singular values of `matrix(sigma)`, descending.
pub fn singular_values(sigma: &SampledSymbol) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = dense(sigma)?.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `||A||_2` by power iteration on `A^* A`, stopped when successive estimates agree to [`POWER_ITERATION_TOL`].
pub fn operator_norm_2(a: &DMatrix<Complex64>) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    v /= Complex64::new(v.norm(), 0.0);
    let ah = a.adjoint();
    let mut est = 0.0;
    for _ in 0..100_000 {
        let av = a * &v;
        let next = av.norm();
        let w = &ah * av;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(wn, 0.0);
        if (next - est).abs() <= POWER_ITERATION_TOL * next {
            return next;
        }
        est = next;
    }
    est
}

fn lq_norm(row: &[Complex64], q: f64, w: f64) -> f64 {
    (row.iter().map(|v| v.norm().powf(q)).sum::<f64>() * w).powf(1.0 / q)
}

/// Singular-value quasi-norm `S_p` against the row bound `B_p`.
///
/// `B_p = (sum_k ||sigma(k,.)||_{L^2}^p)^{1/p}` for `p <= 2` and
/// `(sum_k ||sigma(k,.)||_{L^{p'}}^{p'})^{1/p'}` for `p >= 2`.
pub fn schatten_report(sigma: &SampledSymbol, p: f64) -> Result<DiagnosticsReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(PdzError::domain(format!("Schatten exponent must be positive and finite, got {p}")));
    }
    let sv = singular_values(sigma)?;
    let s_p = sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p);
    let w = sigma.grid().weight();
    let bx = sigma.lattice();
    let q = if p <= 2.0 { 2.0 } else { p / (p - 1.0) };
    let e = if p <= 2.0 { p } else { q };
    let norms: Vec<f64> = (0..bx.len()).map(|k| lq_norm(sigma.row(k), q, w)).collect();
    let b_p = norms.iter().map(|r| r.powf(e)).sum::<f64>().powf(1.0 / e);
    let mut rep = DiagnosticsReport::new();
    let sec = rep.section("schatten");
    sec.real("p", p).real("s_p", s_p).real("b_p", b_p).real("largest_singular_value", sv[0]);
    sec.flag(
        "s_p_le_b_p",
        s_p <= b_p * (1.0 + 1e-10),
        format!("s_p={:e} b_p={:e} ratio={:e}", s_p, b_p, s_p / b_p),
    );
    Ok(rep)
}

/// `C = sup |K(k,m)| (1+|k|)^{-mu} (1+|k-m|)^{2 n_t}` over `k, m` with componentwise `|k - m| <= N`.
pub fn kernel_decay_fit(sigma: &SampledSymbol, n_t: usize, mu: f64) -> Result<DiagnosticsReport> {
    let bx = *sigma.lattice();
    if n_t > 3 {
        return Err(PdzError::domain(format!("decay order N_t = {n_t} exceeds 3")));
    }
    if bx.half_width() < 8 {
        return Err(PdzError::domain("kernel decay fit needs a box with N >= 8"));
    }
    let kappa = sigma.kappa();
    let len = bx.len();
    let n = bx.dim();
    let mut best = (0.0, 0usize, 0usize);
    let mut m = vec![0i64; n];
    for p in 0..len {
        let k = bx.point(p);
        let wk = (1.0 + bx.norm(p)).powf(-mu);
        for l in 0..len {
            let d = bx.point(l);
            for a in 0..n {
                m[a] = k[a] - d[a];
            }
            if bx.index_of(&m).is_none() {
                continue;
            }
            let v = kappa[p * len + l].norm() * wk * (1.0 + bx.norm(l)).powi(2 * n_t as i32);
            if v > best.0 {
                best = (v, p, l);
            }
        }
    }
    let (c, p, l) = best;
    let k = bx.point(p);
    let d = bx.point(l);
    let m: Vec<i64> = k.iter().zip(&d).map(|(a, b)| a - b).collect();
    let mut rep = DiagnosticsReport::new();
    rep.section("kernel_decay")
        .count("n_t", n_t)
        .real("mu", mu)
        .count("box_half_width", bx.half_width())
        .real("constant", c)
        .text("witness", format!("k={k:?} m={m:?}"));
    Ok(rep)
}

/// Number of random probes used by [`lp_bound_report`].
pub const LP_RANDOM_PROBES: usize = 32;

fn lp_norm(v: &[Complex64], p: f64) -> f64 {
    v.iter().map(|z| z.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `omega(l) = sup_k |kappa(k, l)|`.
pub fn omega(sigma: &SampledSymbol) -> Vec<f64> {
    let len = sigma.size();
    let kappa = sigma.kappa();
    (0..len)
        .map(|l| (0..len).map(|p| kappa[p * len + l].norm()).fold(0.0, f64::max))
        .collect()
}

/// Empirical `l^p` operator norm against the convolution bound `||omega||_{l^1}`.
///
/// The lower estimate is the largest ratio `||Op(sigma) f||_p / ||f||_p` over
/// all coordinate vectors and [`LP_RANDOM_PROBES`] seeded random inputs.
pub fn lp_bound_report(sigma: &SampledSymbol, p: f64, seed: u64) -> Result<DiagnosticsReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(PdzError::domain(format!("l^p exponent must satisfy 1 <= p < inf, got {p}")));
    }
    let bx = *sigma.lattice();
    let bound: f64 = omega(sigma).iter().sum();
    let mut best = (0.0, String::new());
    let mut probe = |f: LatticeSequence, label: String| -> Result<()> {
        let nf = lp_norm(f.values(), p);
        if nf > 0.0 {
            let r = lp_norm(apply(sigma, &f)?.values(), p) / nf;
            if r > best.0 {
                best = (r, label);
            }
        }
        Ok(())
    };
    for i in 0..bx.len() {
        probe(LatticeSequence::delta(bx, &bx.point(i))?, format!("delta at {:?}", bx.point(i)))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..LP_RANDOM_PROBES {
        let vals = (0..bx.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        probe(LatticeSequence::new(bx, vals)?, format!("random probe {t} (seed {seed})"))?;
    }
    let mut rep = DiagnosticsReport::new();
    rep.section("lp_bound")
        .real("p", p)
        .real("omega_l1", bound)
        .real("empirical_norm", best.0)
        .flag(
            "empirical_le_bound",
            best.0 <= bound * (1.0 + 1e-12) + 1e-14,
            format!("ratio {:e} from {}", best.0, best.1),
        );
    Ok(rep)
}

/// `sup_{|k| > cut} sum_l |kappa(k, l)|`, the row-sum bound of the part of `Op(sigma)` on rows `|k| > cut`.
pub fn compactness_tail(sigma: &SampledSymbol, cut: usize, p: f64) -> Result<f64> {
    let bx = sigma.lattice();
    if !(p >= 1.0 && p.is_finite()) {
        return Err(PdzError::domain(format!("l^p exponent must satisfy 1 <= p < inf, got {p}")));
    }
    if cut >= bx.half_width() {
        return Err(PdzError::domain(format!("cut {cut} must be below N = {}", bx.half_width())));
    }
    let len = bx.len();
    let kappa = sigma.kappa();
    Ok((0..len)
        .filter(|&k| bx.norm(k) > cut as f64)
        .map(|k| kappa[k * len..(k + 1) * len].iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// `||Op(sigma)||_{l^2_s_in -> l^2_s_out}` from the dense matrix.
pub fn weighted_operator_norm(sigma: &SampledSymbol, s_in: f64, s_out: f64) -> Result<f64> {
    let bx = sigma.lattice();
    let mut a = dense(sigma)?;
    let norms = bx.norms();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let w = (1.0 + norms[i]).powf(s_out) * (1.0 + norms[j]).powf(-s_in);
            a[(i, j)] *= w;
        }
    }
    Ok(operator_norm_2(&a))
}

/// `||matrix(sigma)||_2` on `{-N..N}^dim` for each `N` in `sizes`.
pub fn mikhlin_uniformity(def: &SymbolDefinition, dim: usize, sizes: &[usize]) -> Result<DiagnosticsReport> {
    if sizes.is_empty() {
        return Err(PdzError::domain("mikhlin_uniformity needs at least one box size"));
    }
    let mut norms = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let bx = LatticeBox::with_cap(dim, n, DEFAULT_DENSE_CAP)?;
        let sigma = sample(def, &bx, &bx.torus())?;
        norms.push(operator_norm_2(&dense(&sigma)?));
    }
    let max = norms.iter().copied().fold(0.0, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rep = DiagnosticsReport::new();
    rep.section("mikhlin")
        .text("symbol", def.name())
        .list("sizes", sizes.iter().map(|&n| n as f64).collect())
        .list("norms", norms)
        .real("max_over_min", max / min);
    Ok(rep)
}

/// The Fourier series operator boundedness witnesses as a report section.
pub fn fso_report(phi: &PhaseFunction, sigma: &SampledSymbol) -> Result<DiagnosticsReport> {
    let r = fso_boundedness_check(phi, sigma)?;
    let (k, l, x) = &r.separation_witness;
    let mut rep = DiagnosticsReport::new();
    rep.section("fso")
        .text("phase", phi.name())
        .count("max_order", r.max_order)
        .real("symbol_derivatives", r.symbol_derivatives)
        .real("phase_derivatives", r.phase_derivatives)
        .real("separation", r.separation)
        .flag(
            "separated",
            r.separation > 0.0,
            format!("k={k:?} l={l:?} x={x:?}"),
        );
    Ok(rep)
}

/// Frobenius norm, matrix trace and their agreement with [`hs_norm`] and [`trace`].
pub fn hs_trace_report(sigma: &SampledSymbol) -> Result<DiagnosticsReport> {
    let a = matrix(sigma)?;
    let hs = hs_norm(sigma);
    let fro = a.frobenius();
    let tr = trace(sigma);
    let mtr = a.trace();
    let eig = eigenvalue_sum(sigma)?;
    let mut rep = DiagnosticsReport::new();
    let rel = (hs - fro).abs() / fro.max(f64::MIN_POSITIVE);
    rep.section("hs")
        .real("norm", hs)
        .real("frobenius", fro)
        .flag("equal", rel <= 1e-10, format!("relative difference {rel:e}"));
    let scale = mtr.norm().max(1.0);
    rep.section("trace")
        .complex("value", tr)
        .complex("matrix_trace", mtr)
        .complex("eigenvalue_sum", eig)
        .flag(
            "eigenvalue_sum_agrees",
            (eig - tr).norm() <= 1e-8 * scale,
            format!("difference {:e}", (eig - tr).norm()),
        );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::SymbolClassParams;
    use std::f64::consts::PI;

    fn ch(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }

    fn random_symbol(bx: LatticeBox, seed: u64) -> SampledSymbol {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = bx.len();
        SampledSymbol::new(
            bx,
            (0..len * len)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn weighted_norm_cases() {
        let bx = LatticeBox::new(1, 5).unwrap();
        let d0 = LatticeSequence::delta(bx, &[0]).unwrap();
        assert_eq!(weighted_norm(&d0, WeightedNormParams::l2(7.0)), 1.0);
        let d3 = LatticeSequence::delta(bx, &[-3]).unwrap();
        assert!((weighted_norm(&d3, WeightedNormParams::l2(2.0)) - 16.0).abs() < 1e-12);
        let f = LatticeSequence::from_fn(bx, |k| Complex64::new(k[0] as f64, 1.0)).unwrap();
        assert!((weighted_norm(&f, WeightedNormParams::l2(0.0)) - f.norm_l2()).abs() < 1e-12);
        assert!(WeightedNormParams::new(0.0, 0.5).is_err());
    }

    #[test]
    fn hs_and_trace_trivial_cases() {
        let bx = LatticeBox::new(2, 2).unwrap();
        let one = SampledSymbol::constant(bx, Complex64::new(1.0, 0.0));
        assert!((hs_norm(&one) - 5.0).abs() < 1e-12);
        assert!((trace(&one) - Complex64::new(25.0, 0.0)).norm() < 1e-12);
        let single = SampledSymbol::from_k_fn(bx, |k| Complex64::new((k == [0, 0]) as u8 as f64, 0.0)).unwrap();
        assert!((hs_norm(&single) - 1.0).abs() < 1e-14);
        let d = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) - 1.0).unwrap();
        assert!((trace(&d) + Complex64::new(25.0, 0.0)).norm() < 1e-12);
        let zero_mean = SampledSymbol::from_x_fn(bx, |x| ch(x[0])).unwrap();
        assert!(trace(&zero_mean).norm() < 1e-12);
    }

    #[test]
    fn hs_trace_report_on_random_symbol() {
        let bx = LatticeBox::new(1, 6).unwrap();
        let s = random_symbol(bx, 1);
        let rep = hs_trace_report(&s).unwrap();
        assert!(rep.failures().is_empty(), "{rep}");
        let w = SampledSymbol::from_k_fn(bx, |k| Complex64::new(k[0] as f64 * 0.5, 1.0)).unwrap();
        assert!((trace(&w) - Complex64::new(0.0, 13.0)).norm() < 1e-12);
    }

    #[test]
    fn schatten_cases() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let s = random_symbol(bx, 2);
        let r2 = schatten_report(&s, 2.0).unwrap();
        let (s2, b2) = (r2.real("schatten", "s_p").unwrap(), r2.real("schatten", "b_p").unwrap());
        assert!((s2 - hs_norm(&s)).abs() < 1e-10 * s2);
        assert!((b2 - s2).abs() < 1e-10 * s2);
        for p in [1.0, 1.5] {
            assert_eq!(schatten_report(&s, p).unwrap().flag("schatten", "s_p_le_b_p"), Some(true));
        }
        let single = SampledSymbol::from_fn(bx, |k, x| if k[0] == 0 { ch(x[0]) + 0.5 } else { Complex64::new(0.0, 0.0) }).unwrap();
        let r1 = schatten_report(&single, 1.0).unwrap();
        let (s1, b1) = (r1.real("schatten", "s_p").unwrap(), r1.real("schatten", "b_p").unwrap());
        assert!((s1 - 1.25f64.sqrt()).abs() < 1e-12 && (b1 - s1).abs() < 1e-12);
    }

    #[test]
    fn kernel_decay_cases() {
        let smooth = |bx: LatticeBox| SampledSymbol::from_x_fn(bx, |x| Complex64::new(1.0 / (2.0 + (2.0 * PI * x[0]).cos()), 0.0)).unwrap();
        for nt in 1..=3 {
            let c8 = kernel_decay_fit(&smooth(LatticeBox::new(1, 8).unwrap()), nt, 0.0).unwrap();
            let c16 = kernel_decay_fit(&smooth(LatticeBox::new(1, 16).unwrap()), nt, 0.0).unwrap();
            let (a, b) = (c8.real("kernel_decay", "constant").unwrap(), c16.real("kernel_decay", "constant").unwrap());
            assert!(a / b < 2.0 && b / a < 2.0, "{a} {b}");
        }
        let rough = |n: usize| {
            let bx = LatticeBox::new(1, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let row: Vec<Complex64> = (0..bx.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
            let s = SampledSymbol::new(bx, (0..bx.len()).flat_map(|_| row.clone()).collect()).unwrap();
            kernel_decay_fit(&s, 3, 0.0).unwrap().real("kernel_decay", "constant").unwrap()
        };
        assert!(rough(16) > 4.0 * rough(8));
        assert!(kernel_decay_fit(&smooth(LatticeBox::new(1, 4).unwrap()), 1, 0.0).is_err());
    }

    #[test]
    fn lp_bound_cases() {
        let bx = LatticeBox::new(1, 5).unwrap();
        let d = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) - 1.0).unwrap();
        for p in [1.0, 2.0, 4.0] {
            let r = lp_bound_report(&d, p, 0).unwrap();
            assert!((r.real("lp_bound", "omega_l1").unwrap() - 2.0).abs() < 1e-12);
            assert_eq!(r.flag("lp_bound", "empirical_le_bound"), Some(true));
        }
        let one = SampledSymbol::constant(bx, Complex64::new(1.0, 0.0));
        let r = lp_bound_report(&one, 3.0, 0).unwrap();
        assert!((r.real("lp_bound", "omega_l1").unwrap() - 1.0).abs() < 1e-12);
        assert!((r.real("lp_bound", "empirical_norm").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compactness_cases() {
        let bx = LatticeBox::new(1, 10).unwrap();
        let supported = SampledSymbol::from_fn(bx, |k, x| if k[0].abs() <= 3 { ch(x[0]) } else { Complex64::new(0.0, 0.0) }).unwrap();
        assert_eq!(compactness_tail(&supported, 4, 2.0).unwrap(), 0.0);
        let one = SampledSymbol::constant(bx, Complex64::new(1.0, 0.0));
        assert!((compactness_tail(&one, 8, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(compactness_tail(&one, 10, 2.0).is_err());
    }

    #[test]
    fn mikhlin_cases() {
        let one = SymbolDefinition::expression("1", SymbolClassParams::classical(0.0)).unwrap();
        let r = mikhlin_uniformity(&one, 1, &[4, 8]).unwrap();
        assert!(r.list("mikhlin", "norms").unwrap().iter().all(|v| (v - 1.0).abs() < 1e-7));
        let grow = SymbolDefinition::weight(0.5);
        let r = mikhlin_uniformity(&grow, 1, &[4, 8, 16]).unwrap();
        for (v, n) in r.list("mikhlin", "norms").unwrap().iter().zip([4.0f64, 8.0, 16.0]) {
            assert!((v / (1.0 + n).sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn weighted_operator_norm_of_weight() {
        let bx = LatticeBox::new(1, 6).unwrap();
        let w = SampledSymbol::from_k_fn(bx, |k| Complex64::new((1.0 + k[0].abs() as f64).powi(2), 0.0)).unwrap();
        assert!((weighted_operator_norm(&w, 1.0, -1.0).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn fso_report_for_standard_phase() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let s = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) + 2.0).unwrap();
        let r = fso_report(&PhaseFunction::standard(), &s).unwrap();
        assert!((r.real("fso", "separation").unwrap() - 2.0 * PI).abs() < 1e-9);
        assert_eq!(r.flag("fso", "separated"), Some(true));
    }
}
