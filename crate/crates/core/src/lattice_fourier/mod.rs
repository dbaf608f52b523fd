//! Discrete Fourier analysis between the truncated lattice box `{-N..N}^n`
//! and the matched torus grid `{0, 1/M, .., (M-1)/M}^n`, `M = 2N + 1`.
//!
//! All computation happens on the cyclic group `(Z/MZ)^n`. The forward
//! transform carries no normalisation, the inverse carries `1/M^n` (the
//! quadrature weight of the torus integral), so inversion and Plancherel
//! hold exactly up to roundoff.

mod dft;
pub mod io;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{PdzError, Result};

pub(crate) use dft::{Dft, Sign};

const MAX_DIM: usize = 4;

/// The truncated cyclic lattice `{-N..N}^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    dim: usize,
    half_width: usize,
}

impl LatticeBox {
    /// Default cap on the number of lattice points `M^n`.
    pub const DEFAULT_MAX_POINTS: usize = 1 << 16;

    pub fn new(dim: usize, half_width: usize) -> Result<Self> {
        Self::with_cap(dim, half_width, Self::DEFAULT_MAX_POINTS)
    }

    pub fn with_cap(dim: usize, half_width: usize, cap: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(PdzError::domain(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if half_width == 0 {
            return Err(PdzError::domain("half-width N must be positive"));
        }
        let side = 2 * half_width + 1;
        let len = side
            .checked_pow(dim as u32)
            .ok_or(PdzError::Resource {
                what: "lattice points",
                requested: usize::MAX,
                cap,
            })?;
        if len > cap {
            return Err(PdzError::Resource {
                what: "lattice points",
                requested: len,
                cap,
            });
        }
        Ok(LatticeBox { dim, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Points per axis, `M = 2N + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Total number of lattice points `M^n`.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The torus grid with matching `M` and `n`.
    pub fn torus(&self) -> TorusGrid {
        TorusGrid {
            dim: self.dim,
            side: self.side(),
        }
    }

    /// Writes the lattice point with flat (lexicographic) index `idx` into `out`.
    pub fn point_into(&self, idx: usize, out: &mut [i64]) {
        let m = self.side();
        let n = self.half_width as i64;
        let mut rem = idx;
        for c in out[..self.dim].iter_mut().rev() {
            *c = (rem % m) as i64 - n;
            rem /= m;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim];
        self.point_into(idx, &mut k);
        k
    }

    /// Flat index of `k`, or `None` if `k` lies outside the box.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let n = self.half_width as i64;
        if k.len() != self.dim || k.iter().any(|&c| c < -n || c > n) {
            return None;
        }
        Some(self.wrap_index(k))
    }

    /// Flat index of `k` reduced cyclically into the box.
    pub fn wrap_index(&self, k: &[i64]) -> usize {
        let m = self.side() as i64;
        let n = self.half_width as i64;
        k.iter()
            .fold(0usize, |acc, &c| acc * m as usize + (c + n).rem_euclid(m) as usize)
    }

    /// Euclidean norm `|k|` of the lattice point with flat index `idx`.
    pub fn norm(&self, idx: usize) -> f64 {
        let m = self.side();
        let n = self.half_width as i64;
        let mut rem = idx;
        let mut s = 0.0;
        for _ in 0..self.dim {
            let c = (rem % m) as i64 - n;
            rem /= m;
            s += (c * c) as f64;
        }
        s.sqrt()
    }

    /// All `|k|`, indexed by flat index.
    pub fn norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.norm(i)).collect()
    }

    /// Index table of `k + delta * v_axis` (cyclic).
    pub fn shift_table(&self, axis: usize, delta: i64) -> Vec<usize> {
        let mut k = vec![0; self.dim];
        (0..self.len())
            .map(|i| {
                self.point_into(i, &mut k);
                k[axis] += delta;
                self.wrap_index(&k)
            })
            .collect()
    }

    /// Index table of `-k`.
    pub fn negation_table(&self) -> Vec<usize> {
        let mut k = vec![0; self.dim];
        (0..self.len())
            .map(|i| {
                self.point_into(i, &mut k);
                k.iter_mut().for_each(|c| *c = -*c);
                self.wrap_index(&k)
            })
            .collect()
    }

    /// Index table of `k - m` (cyclic), row-major over `(k, m)`.
    pub(crate) fn difference_table(&self) -> Vec<usize> {
        let len = self.len();
        let mut k = vec![0; self.dim];
        let mut m = vec![0; self.dim];
        let mut d = vec![0; self.dim];
        let mut out = Vec::with_capacity(len * len);
        for i in 0..len {
            self.point_into(i, &mut k);
            for j in 0..len {
                self.point_into(j, &mut m);
                for a in 0..self.dim {
                    d[a] = k[a] - m[a];
                }
                out.push(self.wrap_index(&d));
            }
        }
        out
    }
}

/// The uniform torus grid matched to a lattice box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    side: usize,
}

impl TorusGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `1/M^n`.
    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn node_indices_into(&self, idx: usize, out: &mut [usize]) {
        let mut rem = idx;
        for c in out[..self.dim].iter_mut().rev() {
            *c = rem % self.side;
            rem /= self.side;
        }
    }

    pub fn node_indices(&self, idx: usize) -> Vec<usize> {
        let mut j = vec![0; self.dim];
        self.node_indices_into(idx, &mut j);
        j
    }

    pub fn node_into(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for c in out[..self.dim].iter_mut().rev() {
            *c = (rem % self.side) as f64 / self.side as f64;
            rem /= self.side;
        }
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.node_into(idx, &mut x);
        x
    }

    pub fn index_of(&self, j: &[usize]) -> usize {
        j.iter()
            .fold(0usize, |acc, &c| acc * self.side + c % self.side)
    }

    /// Index table of the reflected node `-x` (cyclic).
    pub fn reflection_table(&self) -> Vec<usize> {
        let mut j = vec![0; self.dim];
        (0..self.len())
            .map(|i| {
                self.node_indices_into(i, &mut j);
                j.iter_mut().for_each(|c| *c = (self.side - *c) % self.side);
                self.index_of(&j)
            })
            .collect()
    }

    /// `e^{2 pi i t/M}` for `t = 0..M`.
    pub(crate) fn roots(&self) -> Vec<Complex64> {
        (0..self.side)
            .map(|t| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / self.side as f64))
            .collect()
    }
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    match values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        None => Ok(()),
        Some(i) => Err(PdzError::domain(format!("non-finite value at flat index {i}"))),
    }
}

/// A complex sequence on the lattice box.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSequence {
    bx: LatticeBox,
    values: Vec<Complex64>,
}

impl LatticeSequence {
    pub fn new(bx: LatticeBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != bx.len() {
            return Err(PdzError::domain(format!(
                "sequence has {} values, box has {} points",
                values.len(),
                bx.len()
            )));
        }
        check_finite(&values)?;
        Ok(LatticeSequence { bx, values })
    }

    pub(crate) fn from_vec_unchecked(bx: LatticeBox, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), bx.len());
        LatticeSequence { bx, values }
    }

    pub fn zeros(bx: LatticeBox) -> Self {
        LatticeSequence {
            bx,
            values: vec![Complex64::new(0.0, 0.0); bx.len()],
        }
    }

    /// The Kronecker delta at `k`.
    pub fn delta(bx: LatticeBox, k: &[i64]) -> Result<Self> {
        let idx = bx
            .index_of(k)
            .ok_or_else(|| PdzError::domain(format!("{k:?} is outside the box")))?;
        let mut s = Self::zeros(bx);
        s.values[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_fn(bx: LatticeBox, mut f: impl FnMut(&[i64]) -> Complex64) -> Result<Self> {
        let mut k = vec![0; bx.dim()];
        let values = (0..bx.len())
            .map(|i| {
                bx.point_into(i, &mut k);
                f(&k)
            })
            .collect();
        Self::new(bx, values)
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        self.bx.index_of(k).map(|i| self.values[i])
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-abs difference to another sequence on the same box.
    pub fn max_abs_diff(&self, other: &LatticeSequence) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: Complex64, other: &LatticeSequence) -> LatticeSequence {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        LatticeSequence::from_vec_unchecked(self.bx, values)
    }
}

/// A complex function sampled on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusFunction {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl TorusFunction {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PdzError::domain(format!(
                "torus function has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(TorusFunction { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, values: Vec<Complex64>) -> Self {
        TorusFunction { grid, values }
    }

    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(&[f64]) -> Complex64) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
}

fn check_matched(bx: &LatticeBox, grid: &TorusGrid) -> Result<()> {
    if bx.dim() != grid.dim() || bx.side() != grid.side() {
        return Err(PdzError::domain(format!(
            "box (n={}, M={}) does not match grid (n={}, M={})",
            bx.dim(),
            bx.side(),
            grid.dim(),
            grid.side()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_matched(bx: &LatticeBox, grid: &TorusGrid) -> Result<()> {
    check_matched(bx, grid)
}

/// `f^(x) = sum_k e^{-2 pi i k.x} f(k)` at the grid nodes.
pub fn forward_fourier(f: &LatticeSequence, grid: &TorusGrid) -> Result<TorusFunction> {
    check_matched(f.lattice(), grid)?;
    let dft = Dft::new(f.lattice());
    let mut out = vec![Complex64::new(0.0, 0.0); dft.len()];
    dft.lattice_to_torus(f.values(), Sign::Minus, &mut out);
    Ok(TorusFunction::from_vec_unchecked(*grid, out))
}

/// `f(k) = M^{-n} sum_x e^{2 pi i k.x} F(x)`.
pub fn inverse_fourier(t: &TorusFunction, bx: &LatticeBox) -> Result<LatticeSequence> {
    check_matched(bx, t.grid())?;
    let dft = Dft::new(bx);
    let mut scratch = vec![Complex64::new(0.0, 0.0); dft.len()];
    let mut out = vec![Complex64::new(0.0, 0.0); dft.len()];
    dft.torus_to_lattice(t.values(), Sign::Plus, &mut scratch, &mut out);
    let w = t.grid().weight();
    out.iter_mut().for_each(|v| *v *= w);
    Ok(LatticeSequence::from_vec_unchecked(*bx, out))
}

/// Row-wise inverse transform of a `(k, x)` array: `kappa(k, l) = M^{-n} sum_x e^{2 pi i l.x} a(k, x)`.
pub(crate) fn rows_inverse(bx: &LatticeBox, rows: &[Complex64]) -> Vec<Complex64> {
    let len = bx.len();
    let w = 1.0 / len as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); rows.len()];
    out.par_chunks_mut(len).zip(rows.par_chunks(len)).for_each_init(
        || (Dft::new(bx), vec![Complex64::new(0.0, 0.0); len]),
        |(dft, scratch), (o, r)| {
            dft.torus_to_lattice(r, Sign::Plus, scratch, o);
            o.iter_mut().for_each(|v| *v *= w);
        },
    );
    out
}

/// Row-wise forward transform: `a(k, x) = sum_l e^{-2 pi i l.x} kappa(k, l)`.
pub(crate) fn rows_forward(bx: &LatticeBox, rows: &[Complex64]) -> Vec<Complex64> {
    let len = bx.len();
    let mut out = vec![Complex64::new(0.0, 0.0); rows.len()];
    out.par_chunks_mut(len)
        .zip(rows.par_chunks(len))
        .for_each_init(|| Dft::new(bx), |dft, (o, r)| dft.lattice_to_torus(r, Sign::Minus, o));
    out
}

/// `| sum_k |f(k)|^2 - M^{-n} sum_x |f^(x)|^2 |`.
pub fn plancherel_defect(f: &LatticeSequence) -> f64 {
    let grid = f.lattice().torus();
    let hat = forward_fourier(f, &grid).expect("matched grid");
    let lhs: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
    let rhs: f64 = hat.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.weight();
    (lhs - rhs).abs()
}
