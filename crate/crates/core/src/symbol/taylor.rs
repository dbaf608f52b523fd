use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{MultiIndex, MAX_ORDER};
use crate::error::{PdzError, Result};
use crate::lattice_fourier::{forward_fourier, inverse_fourier, LatticeBox, TorusFunction, TorusGrid};

/// `h(x) = sum_{|a|<N} (e^{2 pi i x} - 1)^a D^(a)h(0) / a! + sum_{|a|=N} h_a(x) (e^{2 pi i x} - 1)^a`.
#[derive(Clone, Debug)]
pub struct TaylorExpansion {
    pub order: usize,
    /// `D^(alpha) h(0)` for `|alpha| < order`.
    pub coefficients: BTreeMap<MultiIndex, Complex64>,
    /// `h_alpha` for `|alpha| = order`.
    pub remainders: BTreeMap<MultiIndex, TorusFunction>,
}

fn power_of_char(grid: &TorusGrid, q: usize, alpha: &MultiIndex) -> Complex64 {
    let x = grid.node(q);
    alpha
        .components()
        .iter()
        .zip(&x)
        .map(|(&a, &t)| (Complex64::from_polar(1.0, 2.0 * PI * t) - 1.0).powi(a as i32))
        .product()
}

impl TaylorExpansion {
    /// Evaluates the right-hand side of the expansion on the grid.
    pub fn reconstruct(&self, grid: &TorusGrid) -> Vec<Complex64> {
        (0..grid.len())
            .map(|q| {
                let poly: Complex64 = self
                    .coefficients
                    .iter()
                    .map(|(a, c)| c / a.factorial() * power_of_char(grid, q, a))
                    .sum();
                let rem: Complex64 = self
                    .remainders
                    .iter()
                    .map(|(a, h)| h.values()[q] * power_of_char(grid, q, a))
                    .sum();
                poly + rem
            })
            .collect()
    }

    /// Max-abs gap between `h` and the reconstruction.
    pub fn reconstruction_defect(&self, h: &TorusFunction) -> f64 {
        self.reconstruct(h.grid())
            .iter()
            .zip(h.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

struct Expander {
    grid: TorusGrid,
    bx: LatticeBox,
    out: TaylorExpansion,
}

impl Expander {
    fn with_axis_zero(&self, q: usize, axis: usize) -> usize {
        let mut j = self.grid.node_indices(q);
        j[axis] = 0;
        self.grid.index_of(&j)
    }

    fn restrict(&self, g: &[Complex64], axis: usize) -> Vec<Complex64> {
        (0..g.len()).map(|q| g[self.with_axis_zero(q, axis)]).collect()
    }

    /// `(g(x) - g(x)|_{x_b = 0}) / (e^{2 pi i x_b} - 1)`, and `D_{x_b} g` on `x_b = 0`.
    fn divide(&self, g: &[Complex64], axis: usize) -> Vec<Complex64> {
        let t = TorusFunction::from_vec_unchecked(self.grid, g.to_vec());
        let mut kappa = inverse_fourier(&t, &self.bx).expect("matched").into_values();
        let mut k = vec![0i64; self.grid.dim()];
        for (p, v) in kappa.iter_mut().enumerate() {
            self.bx.point_into(p, &mut k);
            *v *= -(k[axis] as f64);
        }
        let seq = crate::lattice_fourier::LatticeSequence::from_vec_unchecked(self.bx, kappa);
        let deriv = forward_fourier(&seq, &self.grid).expect("matched").into_values();
        let mut j = vec![0usize; self.grid.dim()];
        (0..g.len())
            .map(|q| {
                self.grid.node_indices_into(q, &mut j);
                if j[axis] == 0 {
                    deriv[q]
                } else {
                    let x = j[axis] as f64 / self.grid.side() as f64;
                    (g[q] - g[self.with_axis_zero(q, axis)]) / (Complex64::from_polar(1.0, 2.0 * PI * x) - 1.0)
                }
            })
            .collect()
    }

    fn expand(&mut self, g: Vec<Complex64>, start: usize, left: usize, alpha: MultiIndex) {
        if left == 0 {
            let h = TorusFunction::from_vec_unchecked(self.grid, g);
            self.out.remainders.insert(alpha, h);
            return;
        }
        self.out.coefficients.insert(alpha.clone(), g[0] * alpha.factorial());
        let mut cur = g;
        for b in start..self.grid.dim() {
            let next = self.divide(&cur, b);
            self.expand(next, b, left - 1, alpha.plus_unit(b));
            cur = self.restrict(&cur, b);
        }
    }
}

/// Periodic Taylor expansion of `h` at `0` up to order `n_order`.
pub fn periodic_taylor(h: &TorusFunction, n_order: usize) -> Result<TaylorExpansion> {
    if n_order == 0 || n_order > MAX_ORDER {
        return Err(PdzError::domain(format!("Taylor order must be in 1..={MAX_ORDER}")));
    }
    let grid = *h.grid();
    let bx = LatticeBox::with_cap(grid.dim(), (grid.side() - 1) / 2, usize::MAX)?;
    let mut ex = Expander {
        grid,
        bx,
        out: TaylorExpansion {
            order: n_order,
            coefficients: BTreeMap::new(),
            remainders: BTreeMap::new(),
        },
    };
    ex.expand(h.values().to_vec(), 0, n_order, MultiIndex::zero(grid.dim()));
    Ok(ex.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ch(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }

    #[test]
    fn constant_function() {
        let grid = LatticeBox::new(1, 4).unwrap().torus();
        let h = TorusFunction::from_fn(grid, |_| Complex64::new(2.0, -1.0)).unwrap();
        let t = periodic_taylor(&h, 3).unwrap();
        assert_eq!(t.coefficients[&MultiIndex::zero(1)], Complex64::new(2.0, -1.0));
        assert!(t.coefficients.values().skip(1).all(|c| c.norm() < 1e-14));
        assert!(t.remainders.values().all(|r| r.values().iter().all(|v| v.norm() < 1e-14)));
    }

    #[test]
    fn character_minus_one() {
        let grid = LatticeBox::new(1, 4).unwrap().torus();
        let h = TorusFunction::from_fn(grid, |y| ch(y[0]) - 1.0).unwrap();
        let t = periodic_taylor(&h, 2).unwrap();
        assert!(t.coefficients[&MultiIndex::new(vec![0])].norm() < 1e-15);
        assert!((t.coefficients[&MultiIndex::new(vec![1])] - 1.0).norm() < 1e-13);
        assert!(t.remainders[&MultiIndex::new(vec![2])].values().iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn coefficients_are_falling_derivatives() {
        // for h = e^{2 pi i d y}: D^(l) h(0) = d (d-1) ... (d-l+1)
        let grid = LatticeBox::new(1, 5).unwrap().torus();
        let h = TorusFunction::from_fn(grid, |y| ch(3.0 * y[0])).unwrap();
        let t = periodic_taylor(&h, 4).unwrap();
        for (l, want) in [1.0, 3.0, 6.0, 6.0].iter().enumerate() {
            assert!((t.coefficients[&MultiIndex::new(vec![l as u32])] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn random_trig_polynomials_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, half) in &[(1usize, 6usize), (2, 3)] {
            let grid = LatticeBox::new(n, half).unwrap().torus();
            let terms: Vec<(Vec<f64>, Complex64)> = (0..6)
                .map(|_| {
                    let f = (0..n).map(|_| rng.random_range(-2..=2) as f64).collect();
                    (f, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                })
                .collect();
            let h = TorusFunction::from_fn(grid, |y| {
                terms
                    .iter()
                    .map(|(f, c)| c * ch(f.iter().zip(y).map(|(a, b)| a * b).sum()))
                    .sum()
            })
            .unwrap();
            let t = periodic_taylor(&h, 3).unwrap();
            assert_eq!(t.remainders.len(), MultiIndex::of_order(n, 3).len());
            assert!(t.reconstruction_defect(&h) <= 1e-10);
        }
    }
}
