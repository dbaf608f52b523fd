//! Quantization `Op(sigma) f(k) = M^{-n} sum_x e^{2 pi i k.x} sigma(k, x) f^(x)`,
//! kernels, dense operator matrices and the inverse map from operators to symbols.

mod amplitude;
mod fso;
pub mod io;
mod toroidal;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{PdzError, Result};
use crate::lattice_fourier::{forward_fourier, LatticeBox, LatticeSequence, TorusGrid};
use crate::symbol::SampledSymbol;

pub use amplitude::{amplitude_matrix, amplitude_to_symbol, apply_amplitude};
pub use fso::{apply_fso, fso_boundedness_check, FsoReport, PhaseFunction};
pub use toroidal::{apply_toroidal, link_defect, toroidal_matrix, ToroidalSymbol};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default cap on `M^n` for dense matrices.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Characters `e^{2 pi i k.x}` on the grid via a table of roots of unity.
pub(crate) struct Characters {
    side: usize,
    dim: usize,
    roots: Vec<Complex64>,
    nodes: Vec<usize>,
}

impl Characters {
    pub(crate) fn new(grid: &TorusGrid) -> Self {
        let len = grid.len();
        let dim = grid.dim();
        let mut nodes = vec![0usize; len * dim];
        for q in 0..len {
            grid.node_indices_into(q, &mut nodes[q * dim..(q + 1) * dim]);
        }
        Characters {
            side: grid.side(),
            dim,
            roots: grid.roots(),
            nodes,
        }
    }

    /// `k mod M` per axis.
    pub(crate) fn reduce(&self, k: &[i64], out: &mut [usize]) {
        for (o, &c) in out.iter_mut().zip(k) {
            *o = c.rem_euclid(self.side as i64) as usize;
        }
    }

    /// `e^{2 pi i k.x_q}` for reduced `k`.
    #[inline]
    pub(crate) fn at(&self, kmod: &[usize], q: usize) -> Complex64 {
        let j = &self.nodes[q * self.dim..(q + 1) * self.dim];
        let t = kmod.iter().zip(j).map(|(a, b)| a * b).sum::<usize>() % self.side;
        self.roots[t]
    }
}

fn check_box(sigma: &SampledSymbol, f: &LatticeSequence) -> Result<()> {
    if sigma.lattice() != f.lattice() {
        return Err(PdzError::domain("symbol and sequence live on different boxes"));
    }
    Ok(())
}

/// `Op(sigma) f`, via the FFT of `f` followed by row-wise weighted sums.
pub fn apply(sigma: &SampledSymbol, f: &LatticeSequence) -> Result<LatticeSequence> {
    check_box(sigma, f)?;
    let bx = *sigma.lattice();
    let grid = bx.torus();
    let hat = forward_fourier(f, &grid)?;
    let hat = hat.values();
    let chars = Characters::new(&grid);
    let w = grid.weight();
    let out: Vec<Complex64> = (0..bx.len())
        .into_par_iter()
        .map_init(
            || (vec![0i64; bx.dim()], vec![0usize; bx.dim()]),
            |(k, kmod), p| {
                bx.point_into(p, k);
                chars.reduce(k, kmod);
                let row = sigma.row(p);
                let s: Complex64 = (0..row.len()).map(|q| chars.at(kmod, q) * row[q] * hat[q]).sum();
                s * w
            },
        )
        .collect();
    Ok(LatticeSequence::from_vec_unchecked(bx, out))
}

/// The kernel `kappa(k, l)` and `K(k, m) = kappa(k, k - m)` of `Op(sigma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    bx: LatticeBox,
    kappa: Vec<Complex64>,
}

impl Kernel {
    pub fn lattice(&self) -> &LatticeBox {
        &self.bx
    }

    /// Row-major `(k, l)` in box order.
    pub fn kappa(&self) -> &[Complex64] {
        &self.kappa
    }

    pub fn kappa_at(&self, k: &[i64], l: &[i64]) -> Complex64 {
        self.kappa[self.bx.wrap_index(k) * self.bx.len() + self.bx.wrap_index(l)]
    }

    /// `K(k, m) = kappa(k, k - m)`, indices reduced cyclically.
    pub fn k_at(&self, k: &[i64], m: &[i64]) -> Complex64 {
        let d: Vec<i64> = k.iter().zip(m).map(|(a, b)| a - b).collect();
        self.kappa_at(k, &d)
    }

    /// `sum_m K(k, m) f(m)`.
    pub fn apply(&self, f: &LatticeSequence) -> Result<LatticeSequence> {
        if f.lattice() != &self.bx {
            return Err(PdzError::domain("kernel and sequence live on different boxes"));
        }
        let len = self.bx.len();
        let diff = self.bx.difference_table();
        let fv = f.values();
        let out = (0..len)
            .into_par_iter()
            .map(|p| {
                let row = &self.kappa[p * len..(p + 1) * len];
                let d = &diff[p * len..(p + 1) * len];
                (0..len).map(|m| row[d[m]] * fv[m]).sum()
            })
            .collect();
        Ok(LatticeSequence::from_vec_unchecked(self.bx, out))
    }
}

pub fn kernel(sigma: &SampledSymbol) -> Kernel {
    Kernel {
        bx: *sigma.lattice(),
        kappa: sigma.kappa().to_vec(),
    }
}

/// A dense complex matrix indexed by lattice points `(k, m)`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    bx: LatticeBox,
    data: Vec<Complex64>,
}

fn check_cap(bx: &LatticeBox, cap: usize) -> Result<()> {
    if bx.len() > cap {
        return Err(PdzError::Resource {
            what: "dense matrix side",
            requested: bx.len(),
            cap,
        });
    }
    Ok(())
}

impl OperatorMatrix {
    pub fn new(bx: LatticeBox, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != bx.len() * bx.len() {
            return Err(PdzError::domain("matrix has the wrong number of entries"));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PdzError::domain("matrix has non-finite entries"));
        }
        Ok(OperatorMatrix { bx, data })
    }

    pub fn identity(bx: LatticeBox) -> Self {
        let len = bx.len();
        let mut data = vec![ZERO; len * len];
        for i in 0..len {
            data[i * len + i] = Complex64::new(1.0, 0.0);
        }
        OperatorMatrix { bx, data }
    }

    pub fn from_dmatrix(bx: LatticeBox, m: &DMatrix<Complex64>) -> Result<Self> {
        let len = bx.len();
        if m.nrows() != len || m.ncols() != len {
            return Err(PdzError::domain("matrix shape does not match the box"));
        }
        let mut data = vec![ZERO; len * len];
        for i in 0..len {
            for j in 0..len {
                data[i * len + j] = m[(i, j)];
            }
        }
        Ok(OperatorMatrix { bx, data })
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        let len = self.bx.len();
        DMatrix::from_row_slice(len, len, &self.data)
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn side(&self) -> usize {
        self.bx.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.side() + col]
    }

    pub fn matvec(&self, f: &LatticeSequence) -> Result<LatticeSequence> {
        if f.lattice() != &self.bx {
            return Err(PdzError::domain("matrix and sequence live on different boxes"));
        }
        let len = self.side();
        let fv = f.values();
        let out = self
            .data
            .par_chunks(len)
            .map(|row| row.iter().zip(fv).map(|(a, b)| a * b).sum())
            .collect();
        Ok(LatticeSequence::from_vec_unchecked(self.bx, out))
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.bx != other.bx {
            return Err(PdzError::domain("matrices live on different boxes"));
        }
        Self::from_dmatrix(self.bx, &(self.to_dmatrix() * other.to_dmatrix()))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> OperatorMatrix {
        let len = self.side();
        let mut data = vec![ZERO; len * len];
        for i in 0..len {
            for j in 0..len {
                data[j * len + i] = self.data[i * len + j].conj();
            }
        }
        OperatorMatrix { bx: self.bx, data }
    }

    pub fn transpose(&self) -> OperatorMatrix {
        let len = self.side();
        let mut data = vec![ZERO; len * len];
        for i in 0..len {
            for j in 0..len {
                data[j * len + i] = self.data[i * len + j];
            }
        }
        OperatorMatrix { bx: self.bx, data }
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.bx != other.bx {
            return Err(PdzError::domain("matrices live on different boxes"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(OperatorMatrix { bx: self.bx, data })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.side()).map(|i| self.get(i, i)).sum()
    }
}

/// Dense matrix `[K(k, m)]` of `Op(sigma)`, with the default size cap.
pub fn matrix(sigma: &SampledSymbol) -> Result<OperatorMatrix> {
    matrix_with_cap(sigma, DEFAULT_DENSE_CAP)
}

pub fn matrix_with_cap(sigma: &SampledSymbol, cap: usize) -> Result<OperatorMatrix> {
    let bx = *sigma.lattice();
    check_cap(&bx, cap)?;
    let len = bx.len();
    let kappa = sigma.kappa();
    let diff = bx.difference_table();
    let data = (0..len * len)
        .into_par_iter()
        .map(|i| kappa[(i / len) * len + diff[i]])
        .collect();
    Ok(OperatorMatrix { bx, data })
}

/// `sigma(k, x) = e^{-2 pi i k.x} sum_m A(k, m) e^{2 pi i m.x}` at the grid nodes.
pub fn symbol_from_operator(op: &OperatorMatrix) -> SampledSymbol {
    let bx = *op.lattice();
    let len = bx.len();
    let diff = bx.difference_table();
    // kappa(k, l) = A(k, k - l); `k - m` is an involution in `m` for fixed `k`
    let mut kappa = vec![ZERO; len * len];
    kappa.par_chunks_mut(len).enumerate().for_each(|(p, row)| {
        for m in 0..len {
            row[diff[p * len + m]] = op.data[p * len + m];
        }
    });
    SampledSymbol::from_kappa_unchecked(bx, kappa)
}
