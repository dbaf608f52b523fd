//! Symbols `sigma(k, x)` on `Z^n x T^n`, sampled on the box and grid, with
//! the difference operators `Delta^alpha_k`, the derivatives `D^beta_x` and
//! `D^(beta)_x`, seminorm and order estimates, and ellipticity checks.

mod definition;
mod estimates;
pub mod io;
pub mod expr;
mod taylor;

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{PdzError, Result};
use crate::lattice_fourier::{
    ensure_matched, forward_fourier, inverse_fourier, rows_forward, rows_inverse, LatticeBox, LatticeSequence,
    TorusFunction, TorusGrid,
};

pub use definition::{AmplitudeDefinition, AmplitudeFn, SymbolClassParams, SymbolDefinition, SymbolFn};
pub use estimates::{
    ellipticity_check, order_fit, order_fit_in, seminorm_estimate, EllipticityReport, ELLIPTICITY_THRESHOLD,
};
pub use taylor::{periodic_taylor, TaylorExpansion};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest multi-index order supported by the factorial table.
pub const MAX_ORDER: usize = 12;

const FACTORIALS: [f64; MAX_ORDER + 1] = {
    let mut t = [1.0; MAX_ORDER + 1];
    let mut i = 1;
    while i <= MAX_ORDER {
        t[i] = t[i - 1] * i as f64;
        i += 1;
    }
    t
};

/// `l!` for `l <= 12`.
pub fn factorial(l: usize) -> f64 {
    FACTORIALS[l]
}

/// A multi-index `alpha` in `N_0^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit multi-index `e_j` (0-based axis).
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut v = vec![0; n];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|alpha| = sum alpha_j`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `alpha! = prod alpha_j!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    pub fn plus_unit(&self, axis: usize) -> Self {
        let mut v = self.0.clone();
        v[axis] += 1;
        MultiIndex(v)
    }

    /// All multi-indices of order exactly `m`, lexicographic.
    pub fn of_order(n: usize, m: usize) -> Vec<MultiIndex> {
        fn rec(n: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == n {
                cur.push(left as u32);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for a in 0..=left {
                cur.push(a as u32);
                rec(n, left - a, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(n, m, &mut Vec::with_capacity(n), &mut out);
        }
        out
    }

    /// All multi-indices with `|alpha| < m`, by order then lexicographic.
    pub fn below(n: usize, m: usize) -> Vec<MultiIndex> {
        (0..m).flat_map(|o| Self::of_order(n, o)).collect()
    }
}

/// A symbol sampled on box x grid, stored row-major: `samples[k * M^n + x]`.
///
/// The x-Fourier rows `kappa(k, l) = M^{-n} sum_x e^{2 pi i l.x} sigma(k, x)`
/// are computed on first use and cached.
#[derive(Clone, Debug)]
pub struct SampledSymbol {
    bx: LatticeBox,
    grid: TorusGrid,
    samples: Vec<Complex64>,
    kappa: OnceLock<Vec<Complex64>>,
}

impl PartialEq for SampledSymbol {
    fn eq(&self, other: &Self) -> bool {
        self.bx == other.bx && self.samples == other.samples
    }
}

fn check_finite(bx: &LatticeBox, samples: &[Complex64]) -> Result<()> {
    match samples.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        None => Ok(()),
        Some(i) => {
            let len = bx.len();
            Err(PdzError::NonFinite {
                k: bx.point(i / len),
                x: bx.torus().node(i % len),
            })
        }
    }
}

impl SampledSymbol {
    pub fn new(bx: LatticeBox, samples: Vec<Complex64>) -> Result<Self> {
        let len = bx.len();
        if samples.len() != len * len {
            return Err(PdzError::domain(format!(
                "symbol has {} samples, expected {}",
                samples.len(),
                len * len
            )));
        }
        check_finite(&bx, &samples)?;
        Ok(Self::from_vec_unchecked(bx, samples))
    }

    pub(crate) fn from_vec_unchecked(bx: LatticeBox, samples: Vec<Complex64>) -> Self {
        SampledSymbol {
            bx,
            grid: bx.torus(),
            samples,
            kappa: OnceLock::new(),
        }
    }

    /// Builds a symbol from its x-Fourier rows `kappa(k, l)`.
    pub fn from_kappa(bx: LatticeBox, kappa: Vec<Complex64>) -> Result<Self> {
        let len = bx.len();
        if kappa.len() != len * len {
            return Err(PdzError::domain("kappa has the wrong size"));
        }
        check_finite(&bx, &kappa)?;
        Ok(Self::from_kappa_unchecked(bx, kappa))
    }

    pub(crate) fn from_kappa_unchecked(bx: LatticeBox, kappa: Vec<Complex64>) -> Self {
        let samples = rows_forward(&bx, &kappa);
        let s = Self::from_vec_unchecked(bx, samples);
        let _ = s.kappa.set(kappa);
        s
    }

    /// Samples `f(k, x)` directly; fails on the first non-finite value.
    pub fn from_fn(bx: LatticeBox, f: impl Fn(&[i64], &[f64]) -> Complex64 + Sync) -> Result<Self> {
        let len = bx.len();
        let grid = bx.torus();
        let mut samples = vec![ZERO; len * len];
        samples.par_chunks_mut(len).enumerate().for_each_init(
            || (vec![0i64; bx.dim()], vec![0.0; bx.dim()]),
            |(k, x), (p, row)| {
                bx.point_into(p, k);
                for (q, v) in row.iter_mut().enumerate() {
                    grid.node_into(q, x);
                    *v = f(k, x);
                }
            },
        );
        Self::new(bx, samples)
    }

    /// A symbol depending on `k` only.
    pub fn from_k_fn(bx: LatticeBox, f: impl Fn(&[i64]) -> Complex64 + Sync) -> Result<Self> {
        Self::from_fn(bx, |k, _| f(k))
    }

    /// A symbol depending on `x` only.
    pub fn from_x_fn(bx: LatticeBox, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        Self::from_fn(bx, |_, x| f(x))
    }

    pub fn constant(bx: LatticeBox, c: Complex64) -> Self {
        Self::from_vec_unchecked(bx, vec![c; bx.len() * bx.len()])
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Number of lattice points, which is also the number of grid nodes.
    pub fn size(&self) -> usize {
        self.bx.len()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn at(&self, k_idx: usize, x_idx: usize) -> Complex64 {
        self.samples[k_idx * self.size() + x_idx]
    }

    pub fn row(&self, k_idx: usize) -> &[Complex64] {
        let len = self.size();
        &self.samples[k_idx * len..(k_idx + 1) * len]
    }

    /// The x-Fourier rows `kappa(k, l)`, row-major in `(k, l)` box order.
    pub fn kappa(&self) -> &[Complex64] {
        self.kappa.get_or_init(|| rows_inverse(&self.bx, &self.samples))
    }

    pub fn has_kappa_cache(&self) -> bool {
        self.kappa.get().is_some()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> SampledSymbol {
        Self::from_vec_unchecked(self.bx, self.samples.par_iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(
        &self,
        other: &SampledSymbol,
        f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    ) -> Result<SampledSymbol> {
        self.check_same_box(other)?;
        Ok(Self::from_vec_unchecked(
            self.bx,
            self.samples
                .par_iter()
                .zip(other.samples.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &SampledSymbol) -> Result<SampledSymbol> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledSymbol) -> Result<SampledSymbol> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product `sigma(k, x) tau(k, x)`.
    pub fn mul(&self, other: &SampledSymbol) -> Result<SampledSymbol> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> SampledSymbol {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> SampledSymbol {
        self.map(|v| v.conj())
    }

    /// `sigma(k, -x)`, with `-x` taken on the grid cyclically.
    pub fn reflect_x(&self) -> SampledSymbol {
        let refl = self.grid.reflection_table();
        let len = self.size();
        let mut out = vec![ZERO; len * len];
        out.par_chunks_mut(len).enumerate().for_each(|(p, row)| {
            let src = self.row(p);
            for (q, v) in row.iter_mut().enumerate() {
                *v = src[refl[q]];
            }
        });
        Self::from_vec_unchecked(self.bx, out)
    }

    /// Keeps rows with `keep(k)` and zeroes the rest.
    pub fn mask_rows(&self, keep: impl Fn(&[i64]) -> bool) -> SampledSymbol {
        let len = self.size();
        let mut out = self.samples.clone();
        let mut k = vec![0; self.bx.dim()];
        for p in 0..len {
            self.bx.point_into(p, &mut k);
            if !keep(&k) {
                out[p * len..(p + 1) * len].fill(ZERO);
            }
        }
        Self::from_vec_unchecked(self.bx, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SampledSymbol) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max_{k, x} |sigma(k, x) - sigma(k_0, x)|`: zero iff `sigma` does not depend on `k`.
    pub fn k_deviation(&self) -> f64 {
        let first = self.row(0);
        (1..self.size())
            .map(|p| {
                self.row(p)
                    .iter()
                    .zip(first)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_same_box(&self, other: &SampledSymbol) -> Result<()> {
        if self.bx != other.bx {
            return Err(PdzError::domain("symbols live on different boxes"));
        }
        Ok(())
    }

    /// Scales the x-Fourier coefficient at frequency `xi` by `mult(xi)`.
    ///
    /// The coefficient of `e^{2 pi i xi.x}` in row `k` is `kappa(k, -xi)`.
    pub(crate) fn spectral_x(&self, mult: impl Fn(&[i64]) -> f64) -> SampledSymbol {
        let len = self.size();
        let mut xi = vec![0i64; self.bx.dim()];
        let table: Vec<f64> = (0..len)
            .map(|p| {
                self.bx.point_into(p, &mut xi);
                xi.iter_mut().for_each(|c| *c = -*c);
                mult(&xi)
            })
            .collect();
        let kappa = self.kappa();
        let scaled: Vec<Complex64> = kappa
            .par_chunks(len)
            .flat_map_iter(|row| row.iter().zip(&table).map(|(v, &t)| v * t))
            .collect();
        Self::from_kappa_unchecked(self.bx, scaled)
    }

    /// `Delta_axis^times`, cyclic at the box edge.
    pub(crate) fn difference_along(&self, axis: usize, times: usize) -> SampledSymbol {
        if times == 0 {
            return self.clone();
        }
        let len = self.size();
        let shift = self.bx.shift_table(axis, 1);
        let mut cur = self.samples.clone();
        let mut next = vec![ZERO; cur.len()];
        for _ in 0..times {
            next.par_chunks_mut(len).enumerate().for_each(|(p, row)| {
                let a = &cur[shift[p] * len..(shift[p] + 1) * len];
                let b = &cur[p * len..(p + 1) * len];
                for ((o, x), y) in row.iter_mut().zip(a).zip(b) {
                    *o = x - y;
                }
            });
            std::mem::swap(&mut cur, &mut next);
        }
        Self::from_vec_unchecked(self.bx, cur)
    }
}

fn check_index(sigma: &SampledSymbol, alpha: &MultiIndex) -> Result<()> {
    if alpha.dim() != sigma.lattice().dim() {
        return Err(PdzError::domain(format!(
            "multi-index has {} components, dimension is {}",
            alpha.dim(),
            sigma.lattice().dim()
        )));
    }
    Ok(())
}

/// Samples a symbol definition on the box and grid.
pub fn sample(def: &SymbolDefinition, bx: &LatticeBox, grid: &TorusGrid) -> Result<SampledSymbol> {
    ensure_matched(bx, grid)?;
    if def.min_dim() > bx.dim() {
        return Err(PdzError::domain(format!(
            "symbol '{}' needs dimension >= {}, box has {}",
            def.name(),
            def.min_dim(),
            bx.dim()
        )));
    }
    SampledSymbol::from_fn(*bx, |k, x| def.eval(k, x))
}

/// `Delta^alpha_k sigma` with `Delta_j tau(k) = tau(k + v_j) - tau(k)`.
pub fn forward_difference(sigma: &SampledSymbol, alpha: &MultiIndex) -> Result<SampledSymbol> {
    check_index(sigma, alpha)?;
    let mut out = sigma.clone();
    for (axis, &a) in alpha.components().iter().enumerate() {
        out = out.difference_along(axis, a as usize);
    }
    Ok(out)
}

/// The q-difference `(Delta_q tau)(k) = sum_l tau(l) (F^{-1} q)(k - l)`, per x.
pub fn generalized_difference(sigma: &SampledSymbol, q: &TorusFunction) -> Result<SampledSymbol> {
    let bx = *sigma.lattice();
    ensure_matched(&bx, q.grid())?;
    let len = bx.len();
    let grid = bx.torus();
    let columns: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|qx| {
            let col: Vec<Complex64> = (0..len).map(|p| sigma.at(p, qx)).collect();
            let col = LatticeSequence::from_vec_unchecked(bx, col);
            let hat = forward_fourier(&col, &grid).expect("matched");
            let prod: Vec<Complex64> = hat.values().iter().zip(q.values()).map(|(a, b)| a * b).collect();
            let prod = TorusFunction::from_vec_unchecked(grid, prod);
            inverse_fourier(&prod, &bx).expect("matched").into_values()
        })
        .collect();
    let mut out = vec![ZERO; len * len];
    for (qx, col) in columns.iter().enumerate() {
        for (p, v) in col.iter().enumerate() {
            out[p * len + qx] = *v;
        }
    }
    Ok(SampledSymbol::from_vec_unchecked(bx, out))
}

/// `D^beta_x sigma` with `D_{x_j} = (2 pi i)^{-1} d/dx_j`, spectrally.
pub fn x_derivative(sigma: &SampledSymbol, beta: &MultiIndex) -> Result<SampledSymbol> {
    check_index(sigma, beta)?;
    if beta.order() == 0 {
        return Ok(sigma.clone());
    }
    let b = beta.components().to_vec();
    Ok(sigma.spectral_x(|xi| {
        xi.iter()
            .zip(&b)
            .map(|(&f, &e)| (f as f64).powi(e as i32))
            .product()
    }))
}

/// `xi (xi - 1) ... (xi - l + 1)`.
pub fn falling_factorial(xi: i64, l: u32) -> f64 {
    (0..l as i64).map(|m| (xi - m) as f64).product()
}

/// `D^(beta)_x sigma` with `D^(l) = D (D - 1) ... (D - l + 1)` per axis.
pub fn falling_derivative(sigma: &SampledSymbol, beta: &MultiIndex) -> Result<SampledSymbol> {
    check_index(sigma, beta)?;
    if beta.order() == 0 {
        return Ok(sigma.clone());
    }
    let b = beta.components().to_vec();
    Ok(sigma.spectral_x(|xi| xi.iter().zip(&b).map(|(&f, &e)| falling_factorial(f, e)).product()))
}
