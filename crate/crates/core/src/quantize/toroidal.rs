use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_cap, matrix_with_cap, Characters, DEFAULT_DENSE_CAP, ZERO};
use crate::error::{PdzError, Result};
use crate::lattice_fourier::{inverse_fourier, Dft, LatticeBox, Sign, TorusFunction};
use crate::symbol::SampledSymbol;

/// A toroidal symbol `tau(x, k)`, stored row-major over `(x node, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToroidalSymbol {
    bx: LatticeBox,
    samples: Vec<Complex64>,
}

impl ToroidalSymbol {
    pub fn from_fn(bx: LatticeBox, f: impl Fn(&[f64], &[i64]) -> Complex64) -> Result<Self> {
        let grid = bx.torus();
        let len = bx.len();
        let mut samples = Vec::with_capacity(len * len);
        let mut x = vec![0.0; bx.dim()];
        let mut k = vec![0i64; bx.dim()];
        for q in 0..len {
            grid.node_into(q, &mut x);
            for p in 0..len {
                bx.point_into(p, &mut k);
                let v = f(&x, &k);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(PdzError::NonFinite { k: k.clone(), x: x.clone() });
                }
                samples.push(v);
            }
        }
        Ok(ToroidalSymbol { bx, samples })
    }

    /// `tau(x, k) = conj(sigma(-k, x))`.
    pub fn linked(sigma: &SampledSymbol) -> Self {
        let bx = *sigma.lattice();
        let len = bx.len();
        let neg = bx.negation_table();
        let mut samples = vec![ZERO; len * len];
        for q in 0..len {
            for p in 0..len {
                samples[q * len + p] = sigma.at(neg[p], q).conj();
            }
        }
        ToroidalSymbol { bx, samples }
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn at(&self, x_idx: usize, k_idx: usize) -> Complex64 {
        self.samples[x_idx * self.bx.len() + k_idx]
    }
}

/// `Op_T(tau) v(x) = sum_k e^{2 pi i x.k} tau(x, k) (F_T v)(k)`, `F_T v(k) = M^{-n} sum_x e^{-2 pi i x.k} v(x)`.
pub fn apply_toroidal(tau: &ToroidalSymbol, v: &TorusFunction) -> Result<TorusFunction> {
    let bx = tau.bx;
    let grid = bx.torus();
    if v.grid() != &grid {
        return Err(PdzError::domain("toroidal symbol and function live on different grids"));
    }
    let neg = bx.negation_table();
    let inv = inverse_fourier(v, &bx)?;
    let ft: Vec<Complex64> = (0..bx.len()).map(|p| inv.values()[neg[p]]).collect();
    let chars = Characters::new(&grid);
    let len = bx.len();
    let out: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|q| {
            let mut k = vec![0i64; bx.dim()];
            let mut kmod = vec![0usize; bx.dim()];
            (0..len)
                .map(|p| {
                    bx.point_into(p, &mut k);
                    chars.reduce(&k, &mut kmod);
                    chars.at(&kmod, q) * tau.at(q, p) * ft[p]
                })
                .sum()
        })
        .collect();
    TorusFunction::new(grid, out)
}

/// Matrix of `Op_T(tau)` on grid functions: `T[x, y] = M^{-n} sum_k e^{2 pi i k.(x - y)} tau(x, k)`.
pub fn toroidal_matrix(tau: &ToroidalSymbol) -> Result<DMatrix<Complex64>> {
    let bx = tau.bx;
    check_cap(&bx, DEFAULT_DENSE_CAP)?;
    let grid = bx.torus();
    let len = bx.len();
    let w = grid.weight();
    let rows: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map_init(
            || Dft::new(&bx),
            |dft, q| {
                let mut g = vec![ZERO; len];
                dft.lattice_to_torus(&tau.samples[q * len..(q + 1) * len], Sign::Plus, &mut g);
                let xq = grid.node_indices(q);
                let mut d = vec![0usize; bx.dim()];
                (0..len)
                    .map(|r| {
                        let yr = grid.node_indices(r);
                        for a in 0..bx.dim() {
                            d[a] = (xq[a] + grid.side() - yr[a]) % grid.side();
                        }
                        g[grid.index_of(&d)] * w
                    })
                    .collect()
            },
        )
        .collect();
    Ok(DMatrix::from_fn(len, len, |i, j| rows[i][j]))
}

/// `max |F^{-1} Op_T(tau)^* F - matrix(sigma)|` with `tau(x, k) = conj(sigma(-k, x))`.
pub fn link_defect(sigma: &SampledSymbol) -> Result<f64> {
    let bx = *sigma.lattice();
    check_cap(&bx, DEFAULT_DENSE_CAP)?;
    let len = bx.len();
    let grid = bx.torus();
    let chars = Characters::new(&grid);
    let t = toroidal_matrix(&ToroidalSymbol::linked(sigma))?;
    let mut kmod = vec![0usize; bx.dim()];
    let mut k = vec![0i64; bx.dim()];
    let mut f = DMatrix::from_element(len, len, ZERO);
    for p in 0..len {
        bx.point_into(p, &mut k);
        chars.reduce(&k, &mut kmod);
        for q in 0..len {
            f[(q, p)] = chars.at(&kmod, q).conj();
        }
    }
    let f_inv = f.adjoint() * Complex64::new(grid.weight(), 0.0);
    let lifted = f_inv * t.adjoint() * f;
    let a = matrix_with_cap(sigma, DEFAULT_DENSE_CAP)?;
    let mut worst: f64 = 0.0;
    for i in 0..len {
        for j in 0..len {
            worst = worst.max((lifted[(i, j)] - a.get(i, j)).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ch(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }

    #[test]
    fn identity_on_trig_polynomials() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let one = ToroidalSymbol::from_fn(bx, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let v = TorusFunction::from_fn(bx.torus(), |x| ch(2.0 * x[0]) + 0.5 * ch(-3.0 * x[0])).unwrap();
        let out = apply_toroidal(&one, &v).unwrap();
        assert!(out.values().iter().zip(v.values()).all(|(a, b)| (a - b).norm() < 1e-13));
    }

    #[test]
    fn modulation_and_multiplier() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let grid = bx.torus();
        let modulate = ToroidalSymbol::from_fn(bx, |x, _| ch(x[0])).unwrap();
        let mult = ToroidalSymbol::from_fn(bx, |_, k| Complex64::new(1.0 + k[0] as f64, 0.0)).unwrap();
        for d in -3i64..=3 {
            let v = TorusFunction::from_fn(grid, |x| ch(d as f64 * x[0])).unwrap();
            let a = apply_toroidal(&modulate, &v).unwrap();
            let b = apply_toroidal(&mult, &v).unwrap();
            for q in 0..grid.len() {
                let x = grid.node(q)[0];
                assert!((a.values()[q] - ch((d + 1) as f64 * x)).norm() < 1e-13);
                assert!((b.values()[q] - (1.0 + d as f64) * ch(d as f64 * x)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn matrix_agrees_with_apply() {
        let bx = LatticeBox::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<Complex64> = (0..81).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let tau = ToroidalSymbol { bx, samples: vals };
        let v = TorusFunction::from_fn(bx.torus(), |x| Complex64::new(x[0], x[1] * x[1])).unwrap();
        let t = toroidal_matrix(&tau).unwrap();
        let direct = apply_toroidal(&tau, &v).unwrap();
        for i in 0..9 {
            let s: Complex64 = (0..9).map(|j| t[(i, j)] * v.values()[j]).sum();
            assert!((s - direct.values()[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn link_holds() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let one = SampledSymbol::constant(bx, Complex64::new(1.0, 0.0));
        assert!(link_defect(&one).unwrap() < 1e-13);
        let d = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) - 1.0).unwrap();
        assert!(link_defect(&d).unwrap() < 1e-11);
        let b2 = LatticeBox::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = SampledSymbol::new(
            b2,
            (0..49 * 49).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        assert!(link_defect(&r).unwrap() < 1e-10);
    }
}
