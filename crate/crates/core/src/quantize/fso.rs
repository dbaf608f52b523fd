use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{PdzError, Result};
use crate::lattice_fourier::{forward_fourier, LatticeBox, LatticeSequence};
use crate::symbol::{forward_difference, x_derivative, MultiIndex, SampledSymbol};

/// Tolerance for the periodicity of `x -> e^{i phi(k, x)}`.
pub const PERIODICITY_TOL: f64 = 1e-10;

type PhaseFn = dyn Fn(&[i64], &[f64]) -> f64 + Send + Sync;

/// A real phase `phi(k, x)` with `x -> e^{i phi(k, x)}` 1-periodic.
#[derive(Clone)]
pub struct PhaseFunction {
    name: String,
    eval: Arc<PhaseFn>,
}

impl fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseFunction").field("name", &self.name).finish()
    }
}

impl PhaseFunction {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[i64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        PhaseFunction {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// `2 pi k.x`, the phase of `Op`.
    pub fn standard() -> Self {
        Self::new("2 pi k.x", |k, x| {
            2.0 * PI * k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: &[i64], x: &[f64]) -> f64 {
        (self.eval)(k, x)
    }

    /// `max |e^{i phi(k, x)} - e^{i phi(k, x + e_j)}|` over the box, grid and axes.
    pub fn periodicity_defect(&self, bx: &LatticeBox) -> f64 {
        let grid = bx.torus();
        let n = bx.dim();
        (0..bx.len())
            .into_par_iter()
            .map(|p| {
                let k = bx.point(p);
                let mut x = vec![0.0; n];
                let mut worst: f64 = 0.0;
                for q in 0..grid.len() {
                    grid.node_into(q, &mut x);
                    let base = Complex64::from_polar(1.0, self.eval(&k, &x));
                    for a in 0..n {
                        x[a] += 1.0;
                        let moved = Complex64::from_polar(1.0, self.eval(&k, &x));
                        x[a] -= 1.0;
                        worst = worst.max((base - moved).norm());
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `T f(k) = M^{-n} sum_x e^{i phi(k, x)} sigma(k, x) f^(x)`.
pub fn apply_fso(phi: &PhaseFunction, sigma: &SampledSymbol, f: &LatticeSequence) -> Result<LatticeSequence> {
    let bx = *sigma.lattice();
    if f.lattice() != &bx {
        return Err(PdzError::domain("symbol and sequence live on different boxes"));
    }
    let defect = phi.periodicity_defect(&bx);
    if defect > PERIODICITY_TOL {
        return Err(PdzError::domain(format!(
            "phase '{}' is not 1-periodic in x (defect {defect:e})",
            phi.name()
        )));
    }
    let grid = bx.torus();
    let hat = forward_fourier(f, &grid)?;
    let hat = hat.values();
    let w = grid.weight();
    let out = (0..bx.len())
        .into_par_iter()
        .map(|p| {
            let k = bx.point(p);
            let mut x = vec![0.0; bx.dim()];
            let row = sigma.row(p);
            let s: Complex64 = (0..grid.len())
                .map(|q| {
                    grid.node_into(q, &mut x);
                    Complex64::from_polar(1.0, phi.eval(&k, &x)) * row[q] * hat[q]
                })
                .sum();
            s * w
        })
        .collect();
    Ok(LatticeSequence::from_vec_unchecked(bx, out))
}

/// Witnessed constants for the boundedness hypotheses of Fourier series operators.
#[derive(Clone, Debug, PartialEq)]
pub struct FsoReport {
    /// Highest derivative order used, `2n + 1`.
    pub max_order: usize,
    /// `max_{|alpha| <= 2n+1} sup |d^alpha_x sigma|`.
    pub symbol_derivatives: f64,
    /// `max_{|alpha| <= 2n+1, |beta| = 1} sup |d^alpha_x Delta^beta_k phi|` over interior rows.
    pub phase_derivatives: f64,
    /// `min_{k != l, x} |grad_x phi(k, x) - grad_x phi(l, x)| / |k - l|`.
    pub separation: f64,
    pub separation_witness: (Vec<i64>, Vec<i64>, Vec<f64>),
}

/// Splits `phi = 2 pi m(k).x + psi(k, x)` with integer winding `m(k)` and periodic `psi`.
fn split_phase(phi: &PhaseFunction, bx: &LatticeBox) -> (Vec<Vec<f64>>, SampledSymbol) {
    let n = bx.dim();
    let winding: Vec<Vec<f64>> = (0..bx.len())
        .map(|p| {
            let k = bx.point(p);
            let zero = vec![0.0; n];
            let base = phi.eval(&k, &zero);
            (0..n)
                .map(|a| {
                    let mut e = zero.clone();
                    e[a] = 1.0;
                    ((phi.eval(&k, &e) - base) / (2.0 * PI)).round()
                })
                .collect()
        })
        .collect();
    let w = &winding;
    let psi = SampledSymbol::from_fn(*bx, |k, x| {
        let m = &w[bx.wrap_index(k)];
        let lin: f64 = m.iter().zip(x).map(|(a, b)| a * b).sum();
        Complex64::new(phi.eval(k, x) - 2.0 * PI * lin, 0.0)
    })
    .expect("finite phase");
    (winding, psi)
}

/// `max sup |d^alpha_x s|` over `min_order <= |alpha| <= max_order` on the selected rows.
///
/// With `lin`, `s` is the periodic part of a real phase whose linear part has
/// slope `2 pi lin[k]`; first derivatives then include that slope.
fn sup_of_derivatives(
    s: &SampledSymbol,
    min_order: usize,
    max_order: usize,
    rows: &[bool],
    lin: Option<&[Vec<f64>]>,
) -> f64 {
    let n = s.lattice().dim();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut best: f64 = 0.0;
    for alpha in MultiIndex::below(n, max_order + 1) {
        let order = alpha.order();
        if order < min_order {
            continue;
        }
        let d = x_derivative(s, &alpha).expect("dimension");
        let factor = two_pi_i.powi(order as i32);
        let axis = alpha.components().iter().position(|&a| a == 1);
        for p in (0..s.size()).filter(|&p| rows[p]) {
            let slope = match (lin, order, axis) {
                (Some(l), 1, Some(a)) => 2.0 * PI * l[p][a],
                _ => 0.0,
            };
            for v in d.row(p) {
                best = best.max((factor * v + slope).norm());
            }
        }
    }
    best
}

/// Numerically witnesses the boundedness hypotheses for a Fourier series operator.
pub fn fso_boundedness_check(phi: &PhaseFunction, sigma: &SampledSymbol) -> Result<FsoReport> {
    let bx = *sigma.lattice();
    let n = bx.dim();
    let max_order = 2 * n + 1;
    let all_rows = vec![true; bx.len()];
    let symbol_derivatives = sup_of_derivatives(sigma, 0, max_order, &all_rows, None);

    let (winding, psi) = split_phase(phi, &bx);
    let half = bx.half_width() as i64;
    let mut phase_derivatives: f64 = 0.0;
    for j in 0..n {
        let interior: Vec<bool> = (0..bx.len()).map(|p| bx.point(p)[j] < half).collect();
        let dpsi = forward_difference(&psi, &MultiIndex::unit(n, j))?;
        let shift = bx.shift_table(j, 1);
        let dm: Vec<Vec<f64>> = (0..bx.len())
            .map(|p| winding[shift[p]].iter().zip(&winding[p]).map(|(a, b)| a - b).collect())
            .collect();
        // Delta_j phi = 2 pi Delta_j m . x + Delta_j psi
        let grid = bx.torus();
        let full = SampledSymbol::from_vec_unchecked(
            bx,
            (0..bx.len() * bx.len())
                .map(|i| {
                    let (p, q) = (i / bx.len(), i % bx.len());
                    let x = grid.node(q);
                    let lin: f64 = dm[p].iter().zip(&x).map(|(a, b)| a * b).sum();
                    dpsi.samples()[i] + 2.0 * PI * lin
                })
                .collect(),
        );
        let zero_order = (0..bx.len())
            .filter(|&p| interior[p])
            .flat_map(|p| full.row(p).iter().map(|v| v.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        let higher = sup_of_derivatives(&dpsi, 1, max_order, &interior, Some(&dm));
        phase_derivatives = phase_derivatives.max(zero_order).max(higher);
    }

    let grid = bx.torus();
    let grads: Vec<Vec<f64>> = {
        let parts: Vec<SampledSymbol> = (0..n)
            .map(|a| x_derivative(&psi, &MultiIndex::unit(n, a)).expect("dimension"))
            .collect();
        (0..bx.len() * bx.len())
            .map(|i| {
                let p = i / bx.len();
                (0..n)
                    .map(|a| 2.0 * PI * winding[p][a] + (Complex64::new(0.0, 2.0 * PI) * parts[a].samples()[i]).re)
                    .collect()
            })
            .collect()
    };
    let len = bx.len();
    let (separation, wk, wl, wq) = (0..len)
        .into_par_iter()
        .map(|p| {
            let k = bx.point(p);
            let mut best = (f64::INFINITY, p, p, 0usize);
            for r in 0..len {
                if r == p {
                    continue;
                }
                let l = bx.point(r);
                let dist = k.iter().zip(&l).map(|(a, b)| ((a - b) * (a - b)) as f64).sum::<f64>().sqrt();
                for q in 0..len {
                    let g1 = &grads[p * len + q];
                    let g2 = &grads[r * len + q];
                    let d = g1.iter().zip(g2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / dist;
                    if d < best.0 {
                        best = (d, p, r, q);
                    }
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, 0, 0, 0), |a, b| if b.0 < a.0 { b } else { a });
    Ok(FsoReport {
        max_order,
        symbol_derivatives,
        phase_derivatives,
        separation,
        separation_witness: (bx.point(wk), bx.point(wl), grid.node(wq)),
    })
}
