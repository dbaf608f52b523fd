//! Asymptotic symbol calculus: composition, adjoint, transpose, finite
//! asymptotic sums and the parametrix of an elliptic symbol.
//!
//! All expansions are finite sums over `|alpha| < N`, evaluated on the
//! cyclic model.

use num_complex::Complex64;

use crate::error::{PdzError, Result};
use crate::quantize::{matrix, symbol_from_operator};
use crate::symbol::{
    ellipticity_check, falling_derivative, forward_difference, MultiIndex, SampledSymbol, MAX_ORDER,
};

/// Cutoff `N` of a sum over `|alpha| < N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExpansionOrder(usize);

impl ExpansionOrder {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ORDER {
            return Err(PdzError::domain(format!("expansion order must be in 1..={MAX_ORDER}, got {n}")));
        }
        Ok(ExpansionOrder(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Terms `sigma_0, sigma_1, ...` with strictly decreasing declared orders.
#[derive(Clone, Debug)]
pub struct SymbolExpansion {
    terms: Vec<SampledSymbol>,
    orders: Vec<f64>,
}

impl SymbolExpansion {
    pub fn new(terms: Vec<SampledSymbol>, orders: Vec<f64>) -> Result<Self> {
        if terms.is_empty() || terms.len() != orders.len() {
            return Err(PdzError::domain("expansion needs one declared order per term"));
        }
        if orders.windows(2).any(|w| w[1] >= w[0]) {
            return Err(PdzError::domain("expansion orders must be strictly decreasing"));
        }
        if terms.iter().any(|t| t.lattice() != terms[0].lattice()) {
            return Err(PdzError::domain("expansion terms live on different boxes"));
        }
        Ok(SymbolExpansion { terms, orders })
    }

    pub fn single(term: SampledSymbol, order: f64) -> Self {
        SymbolExpansion {
            terms: vec![term],
            orders: vec![order],
        }
    }

    pub fn terms(&self) -> &[SampledSymbol] {
        &self.terms
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

fn scaled(s: &SampledSymbol, c: f64) -> SampledSymbol {
    s.scale(Complex64::new(c, 0.0))
}

/// `sum_{|alpha| < N} (1/alpha!) D^(alpha)_x sigma . Delta^alpha_k tau`.
pub fn compose(sigma: &SampledSymbol, tau: &SampledSymbol, n: ExpansionOrder) -> Result<SampledSymbol> {
    sigma.check_same_box(tau)?;
    let dim = sigma.lattice().dim();
    let mut total = SampledSymbol::constant(*sigma.lattice(), Complex64::new(0.0, 0.0));
    for alpha in MultiIndex::below(dim, n.get()) {
        let d = falling_derivative(sigma, &alpha)?;
        if d.max_abs() == 0.0 {
            continue;
        }
        let term = d.mul(&forward_difference(tau, &alpha)?)?;
        total = total.add(&scaled(&term, 1.0 / alpha.factorial()))?;
    }
    Ok(total)
}

fn difference_derivative_sum(base: &SampledSymbol, n: ExpansionOrder) -> Result<SampledSymbol> {
    let dim = base.lattice().dim();
    let mut total = SampledSymbol::constant(*base.lattice(), Complex64::new(0.0, 0.0));
    for alpha in MultiIndex::below(dim, n.get()) {
        let term = forward_difference(&falling_derivative(base, &alpha)?, &alpha)?;
        total = total.add(&scaled(&term, 1.0 / alpha.factorial()))?;
    }
    Ok(total)
}

/// `sum_{|alpha| < N} (1/alpha!) Delta^alpha_k D^(alpha)_x conj(sigma)`.
pub fn adjoint(sigma: &SampledSymbol, n: ExpansionOrder) -> Result<SampledSymbol> {
    difference_derivative_sum(&sigma.conj(), n)
}

/// `sum_{|alpha| < N} (1/alpha!) Delta^alpha_k D^(alpha)_x sigma(k, -x)`.
pub fn transpose(sigma: &SampledSymbol, n: ExpansionOrder) -> Result<SampledSymbol> {
    difference_derivative_sum(&sigma.reflect_x(), n)
}

/// Sum of the first `j` terms.
pub fn partial_sum(exp: &SymbolExpansion, j: usize) -> Result<SampledSymbol> {
    if j == 0 || j > exp.len() {
        return Err(PdzError::domain(format!(
            "partial sum of {j} terms requested from an expansion of {}",
            exp.len()
        )));
    }
    exp.terms[1..j].iter().try_fold(exp.terms[0].clone(), |acc, t| acc.add(t))
}

/// Options for [`parametrix_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParametrixOptions {
    /// Ellipticity is required for `|k| >= m_cut`; correction terms vanish for `|k| < m_cut`.
    pub m_cut: f64,
    /// `rho - delta`, the order drop per term.
    pub order_step: f64,
}

impl Default for ParametrixOptions {
    fn default() -> Self {
        ParametrixOptions {
            m_cut: 0.0,
            order_step: 1.0,
        }
    }
}

/// Parametrix expansion `B_0, .., B_{N-1}` of an elliptic expansion `A_0 + A_1 + ..`.
pub fn parametrix(a: &SymbolExpansion, mu: f64, n: ExpansionOrder) -> Result<SymbolExpansion> {
    parametrix_with(a, mu, n, ParametrixOptions::default())
}

/// `B_0 = 1/A_0`, `B_m = -(1/A_0) sum_{j<m} sum_{l<m} sum_{|g|=m-j-l} (1/g!) D^(g) B_j Delta^g A_l`.
pub fn parametrix_with(
    a: &SymbolExpansion,
    mu: f64,
    n: ExpansionOrder,
    opts: ParametrixOptions,
) -> Result<SymbolExpansion> {
    let a0 = &a.terms[0];
    let bx = *a0.lattice();
    let report = ellipticity_check(a0, mu, opts.m_cut)?;
    if !report.ok {
        return Err(PdzError::NotElliptic {
            k: report.witness_k,
            x: report.witness_x,
            value: report.witness_value,
        });
    }
    let inv = a0.map(|v| if v.norm() > crate::symbol::ELLIPTICITY_THRESHOLD { 1.0 / v } else { Complex64::new(0.0, 0.0) });
    let neg_inv = scaled(&inv, -1.0);
    let m_cut = opts.m_cut;
    let outside = |k: &[i64]| k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt() >= m_cut;
    let dim = bx.dim();
    let mut terms = vec![inv];
    for m in 1..n.get() {
        let mut acc = SampledSymbol::constant(bx, Complex64::new(0.0, 0.0));
        for j in 0..m {
            for l in 0..m.min(a.len()) {
                if j + l > m {
                    continue;
                }
                for gamma in MultiIndex::of_order(dim, m - j - l) {
                    let d = falling_derivative(&terms[j], &gamma)?;
                    if d.max_abs() == 0.0 {
                        continue;
                    }
                    let t = d.mul(&forward_difference(&a.terms[l], &gamma)?)?;
                    acc = acc.add(&scaled(&t, 1.0 / gamma.factorial()))?;
                }
            }
        }
        let bm = neg_inv.mul(&acc)?;
        terms.push(if m_cut > 0.0 { bm.mask_rows(outside) } else { bm });
    }
    let orders = (0..terms.len()).map(|j| -mu - opts.order_step * j as f64).collect();
    SymbolExpansion::new(terms, orders)
}

/// `1 - sigma_{Op(b) Op(a)}`: the symbol of `I - Op(b) Op(a)`, via dense matrices.
pub fn left_residual(b: &SampledSymbol, a: &SampledSymbol) -> Result<SampledSymbol> {
    let prod = matrix(b)?.matmul(&matrix(a)?)?;
    Ok(symbol_from_operator(&prod).map(|v| Complex64::new(1.0, 0.0) - v))
}

/// `1 - sigma_{Op(a) Op(b)}`.
pub fn right_residual(b: &SampledSymbol, a: &SampledSymbol) -> Result<SampledSymbol> {
    left_residual(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_fourier::LatticeBox;
    use crate::quantize::OperatorMatrix;
    use std::f64::consts::PI;

    fn ch(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }

    fn order(n: usize) -> ExpansionOrder {
        ExpansionOrder::new(n).unwrap()
    }

    fn mat(s: &SampledSymbol) -> OperatorMatrix {
        matrix(s).unwrap()
    }

    #[test]
    fn order_bounds() {
        assert!(ExpansionOrder::new(0).is_err());
        assert!(ExpansionOrder::new(13).is_err());
        assert_eq!(order(12).get(), 12);
    }

    #[test]
    fn expansion_validation() {
        let bx = LatticeBox::new(1, 2).unwrap();
        let one = SampledSymbol::constant(bx, Complex64::new(1.0, 0.0));
        assert!(SymbolExpansion::new(vec![one.clone(), one.clone()], vec![0.0, 0.0]).is_err());
        assert!(SymbolExpansion::new(vec![one.clone()], vec![]).is_err());
        let e = SymbolExpansion::new(vec![one.clone(), one.clone()], vec![0.0, -1.0]).unwrap();
        assert_eq!(partial_sum(&e, 2).unwrap().at(0, 0), Complex64::new(2.0, 0.0));
        assert!(partial_sum(&e, 3).is_err());
    }

    #[test]
    fn k_independent_composition_is_pointwise() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let s = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) + 0.3).unwrap();
        let t = SampledSymbol::from_x_fn(bx, |x| ch(-2.0 * x[0]) * 2.0).unwrap();
        let c = compose(&s, &t, order(3)).unwrap();
        assert!(c.max_abs_diff(&s.mul(&t).unwrap()) < 1e-13);
        assert!(mat(&c).max_abs_diff(&mat(&s).matmul(&mat(&t)).unwrap()) < 1e-13);
    }

    #[test]
    fn multiplier_then_shift() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let a = SampledSymbol::from_k_fn(bx, |k| Complex64::new(1.0 + (k[0] * k[0]) as f64, 0.0)).unwrap();
        let e = SampledSymbol::from_x_fn(bx, |x| ch(x[0])).unwrap();
        let exact = mat(&a).matmul(&mat(&e)).unwrap();
        assert!(mat(&compose(&a, &e, order(1)).unwrap()).max_abs_diff(&exact) < 1e-12);
        let exact = mat(&e).matmul(&mat(&a)).unwrap();
        let c2 = compose(&e, &a, order(2)).unwrap();
        assert!(mat(&c2).max_abs_diff(&exact) < 1e-11);
        let shift = bx.shift_table(0, 1);
        for p in 0..bx.len() {
            for q in 0..bx.len() {
                assert!((c2.at(p, q) - e.at(p, q) * a.at(shift[p], 0)).norm() < 1e-12);
            }
        }
        assert!(mat(&compose(&e, &a, order(1)).unwrap()).max_abs_diff(&exact) > 1.0);
    }

    #[test]
    fn adjoint_and_transpose_of_shift() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let e = SampledSymbol::from_x_fn(bx, |x| ch(x[0])).unwrap();
        let inv = SampledSymbol::from_x_fn(bx, |x| ch(-x[0])).unwrap();
        assert!(adjoint(&e, order(2)).unwrap().max_abs_diff(&inv) < 1e-13);
        assert!(transpose(&e, order(2)).unwrap().max_abs_diff(&inv) < 1e-13);
        assert!(mat(&adjoint(&e, order(1)).unwrap()).max_abs_diff(&mat(&e).adjoint()) < 1e-13);
    }

    #[test]
    fn adjoint_with_k_dependence() {
        // w(k) e^{-2 pi i x}: nonpositive frequencies make the expansion finite
        let bx = LatticeBox::new(1, 4).unwrap();
        let s = SampledSymbol::from_fn(bx, |k, x| ch(-x[0]) * (1.0 + 0.5 * k[0] as f64)).unwrap();
        let a = mat(&s);
        assert!(mat(&adjoint(&s, order(2)).unwrap()).max_abs_diff(&a.adjoint()) < 1e-11);
        assert!(mat(&transpose(&s, order(2)).unwrap()).max_abs_diff(&a.transpose()) < 1e-11);
        assert!(mat(&adjoint(&s, order(1)).unwrap()).max_abs_diff(&a.adjoint()) > 0.1);
    }

    #[test]
    fn parametrix_of_multiplier_is_exact() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let a = SampledSymbol::from_x_fn(bx, |x| Complex64::new(3.0, 2.0 * (2.0 * PI * x[0]).sin())).unwrap();
        let b = parametrix(&SymbolExpansion::single(a.clone(), 0.0), 0.0, order(3)).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.terms()[1].max_abs() < 1e-15 && b.terms()[2].max_abs() < 1e-15);
        let prod = mat(&partial_sum(&b, 3).unwrap()).matmul(&mat(&a)).unwrap();
        assert!(prod.max_abs_diff(&OperatorMatrix::identity(bx)) < 1e-11);
        let c = SampledSymbol::constant(bx, Complex64::new(-2.0, 0.0));
        let bc = parametrix(&SymbolExpansion::single(c, 0.0), 0.0, order(2)).unwrap();
        assert!((bc.terms()[0].at(3, 3) + 0.5).norm() < 1e-15);
    }

    #[test]
    fn parametrix_rejects_non_elliptic() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let a = SampledSymbol::from_x_fn(bx, |x| ch(x[0]) - 1.0).unwrap();
        match parametrix(&SymbolExpansion::single(a, 0.0), 0.0, order(2)) {
            Err(PdzError::NotElliptic { x, .. }) => assert_eq!(x, vec![0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parametrix_residual_shrinks() {
        let bx = LatticeBox::new(1, 12).unwrap();
        let a = SampledSymbol::from_fn(bx, |k, x| ch(x[0]) + (1.0 + (k[0] * k[0]) as f64)).unwrap();
        let opts = ParametrixOptions { m_cut: 1.0, order_step: 1.0 };
        let b = parametrix_with(&SymbolExpansion::single(a.clone(), 2.0), 2.0, order(3), opts).unwrap();
        let weighted = |r: &SampledSymbol| {
            (0..bx.len())
                .filter(|&p| bx.norm(p) >= 8.0 && bx.norm(p) <= 9.0)
                .map(|p| r.row(p).iter().map(|v| v.norm()).fold(0.0, f64::max))
                .fold(0.0, f64::max)
        };
        let r1 = weighted(&left_residual(&partial_sum(&b, 1).unwrap(), &a).unwrap());
        let r3 = weighted(&left_residual(&partial_sum(&b, 3).unwrap(), &a).unwrap());
        assert!(r3 < r1 * 0.2, "{r1} {r3}");
    }
}
