use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_cap, Characters, OperatorMatrix, ZERO};
use crate::error::{PdzError, Result};
use crate::lattice_fourier::{LatticeBox, LatticeSequence};
use crate::symbol::{falling_derivative, factorial, AmplitudeDefinition, MultiIndex, SampledSymbol, MAX_ORDER};

/// Entry `(k, m)` of the amplitude operator: `M^{-n} sum_x e^{2 pi i (k-m).x} a(k, m, x)`.
fn entry(
    a: &AmplitudeDefinition,
    bx: &LatticeBox,
    chars: &Characters,
    k: &[i64],
    m: &[i64],
    scratch: &mut (Vec<f64>, Vec<i64>, Vec<usize>),
) -> Complex64 {
    let grid = bx.torus();
    let (x, d, dmod) = scratch;
    for ((o, a), b) in d.iter_mut().zip(k).zip(m) {
        *o = a - b;
    }
    chars.reduce(d, dmod);
    let mut s = ZERO;
    for q in 0..grid.len() {
        grid.node_into(q, x);
        s += chars.at(dmod, q) * a.eval(k, m, x);
    }
    s * grid.weight()
}

/// `Af(k) = sum_m M^{-n} sum_x e^{2 pi i (k-m).x} a(k, m, x) f(m)`.
pub fn apply_amplitude(a: &AmplitudeDefinition, f: &LatticeSequence) -> Result<LatticeSequence> {
    let bx = *f.lattice();
    let chars = Characters::new(&bx.torus());
    let fv = f.values();
    let len = bx.len();
    let n = bx.dim();
    let out: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map_init(
            || (vec![0i64; n], vec![0i64; n], (vec![0.0; n], vec![0i64; n], vec![0usize; n])),
            |(k, m, scratch), p| {
                bx.point_into(p, k);
                let mut s = ZERO;
                for (j, fm) in fv.iter().enumerate() {
                    if *fm == ZERO {
                        continue;
                    }
                    bx.point_into(j, m);
                    s += entry(a, &bx, &chars, k, m, scratch) * fm;
                }
                s
            },
        )
        .collect();
    let seq = LatticeSequence::new(bx, out)?;
    Ok(seq)
}

/// Dense matrix of the amplitude operator on `bx`.
pub fn amplitude_matrix(a: &AmplitudeDefinition, bx: &LatticeBox) -> Result<OperatorMatrix> {
    check_cap(bx, super::DEFAULT_DENSE_CAP)?;
    let chars = Characters::new(&bx.torus());
    let len = bx.len();
    let n = bx.dim();
    let mut data = vec![ZERO; len * len];
    data.par_chunks_mut(len).enumerate().for_each_init(
        || (vec![0i64; n], vec![0i64; n], (vec![0.0; n], vec![0i64; n], vec![0usize; n])),
        |(k, m, scratch), (p, row)| {
            bx.point_into(p, k);
            for (j, v) in row.iter_mut().enumerate() {
                bx.point_into(j, m);
                *v = entry(a, bx, &chars, k, m, scratch);
            }
        },
    );
    OperatorMatrix::new(*bx, data)
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n as usize) / (factorial(k as usize) * factorial((n - k) as usize))
}

fn dominated_by(beta: &MultiIndex, alpha: &MultiIndex) -> bool {
    beta.components().iter().zip(alpha.components()).all(|(b, a)| b <= a)
}

/// `sum_{|alpha| < N} (1/alpha!) Delta^alpha_l D^(alpha)_x a(k, l, x)|_{l = k}`, `l` taken cyclically.
pub fn amplitude_to_symbol(a: &AmplitudeDefinition, bx: &LatticeBox, n_order: usize) -> Result<SampledSymbol> {
    if n_order == 0 || n_order > MAX_ORDER {
        return Err(PdzError::domain(format!("expansion order must be in 1..={MAX_ORDER}")));
    }
    let n = bx.dim();
    let half = bx.half_width() as i64;
    let m = bx.side() as i64;
    let indices = MultiIndex::below(n, n_order);
    // a(k, k + beta, x) for every beta that appears
    let diagonals: Vec<SampledSymbol> = indices
        .iter()
        .map(|beta| {
            SampledSymbol::from_fn(*bx, |k, x| {
                let l: Vec<i64> = k
                    .iter()
                    .zip(beta.components())
                    .map(|(&c, &b)| (c + b as i64 + half).rem_euclid(m) - half)
                    .collect();
                a.eval(k, &l, x)
            })
        })
        .collect::<Result<_>>()?;
    let mut total = SampledSymbol::constant(*bx, ZERO);
    for alpha in &indices {
        let mut diff = SampledSymbol::constant(*bx, ZERO);
        for (beta, s) in indices.iter().zip(&diagonals) {
            if !dominated_by(beta, alpha) {
                continue;
            }
            let sign = if (alpha.order() - beta.order()) % 2 == 0 { 1.0 } else { -1.0 };
            let c: f64 = alpha
                .components()
                .iter()
                .zip(beta.components())
                .map(|(&x, &y)| binomial(x, y))
                .product();
            diff = diff.add(&s.scale(Complex64::new(sign * c, 0.0)))?;
        }
        let term = falling_derivative(&diff, alpha)?;
        total = total.add(&term.scale(Complex64::new(1.0 / alpha.factorial(), 0.0)))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{apply, matrix};
    use crate::symbol::{sample, SymbolDefinition};
    use std::f64::consts::PI;

    fn ch(t: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }

    #[test]
    fn left_amplitude_is_the_symbol() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let def = SymbolDefinition::expression("k_1*exp(2*pi*i*x_1) + cos(2*pi*x_1)", Default::default()).unwrap();
        let s = sample(&def, &bx, &bx.torus()).unwrap();
        let amp = AmplitudeDefinition::from_symbol(&def);
        let f = LatticeSequence::from_fn(bx, |k| Complex64::new(k[0] as f64, 1.0)).unwrap();
        assert!(apply_amplitude(&amp, &f).unwrap().max_abs_diff(&apply(&s, &f).unwrap()) < 1e-12);
        for order in 1..4 {
            assert!(amplitude_to_symbol(&amp, &bx, order).unwrap().max_abs_diff(&s) < 1e-12);
        }
    }

    #[test]
    fn conjugated_right_amplitude_is_the_adjoint() {
        let bx = LatticeBox::new(1, 3).unwrap();
        let def = SymbolDefinition::expression("(1 + k_1^2)*exp(2*pi*i*x_1) + i*k_1", Default::default()).unwrap();
        let s = sample(&def, &bx, &bx.torus()).unwrap();
        let d = def.clone();
        let amp = AmplitudeDefinition::new("adj", move |_, m, x| d.eval(m, x).conj());
        let a = amplitude_matrix(&amp, &bx).unwrap();
        assert!(a.max_abs_diff(&matrix(&s).unwrap().adjoint()) < 1e-12);
    }

    #[test]
    fn unit_amplitude() {
        let bx = LatticeBox::new(2, 1).unwrap();
        let one = AmplitudeDefinition::new("1", |_, _, _| Complex64::new(1.0, 0.0));
        let f = LatticeSequence::from_fn(bx, |k| Complex64::new(k[0] as f64, k[1] as f64)).unwrap();
        assert!(apply_amplitude(&one, &f).unwrap().max_abs_diff(&f) < 1e-14);
        let s = amplitude_to_symbol(&one, &bx, 3).unwrap();
        assert!(s.max_abs_diff(&SampledSymbol::constant(bx, Complex64::new(1.0, 0.0))) < 1e-14);
    }

    #[test]
    fn right_dependent_amplitude_is_exact_at_order_two() {
        let bx = LatticeBox::new(1, 4).unwrap();
        let amp = AmplitudeDefinition::new("tau", |_, l, x| ch(x[0]) * (1.0 + 0.5 * l[0] as f64));
        let a = amplitude_matrix(&amp, &bx).unwrap();
        let s1 = amplitude_to_symbol(&amp, &bx, 1).unwrap();
        let s2 = amplitude_to_symbol(&amp, &bx, 2).unwrap();
        assert!(matrix(&s1).unwrap().max_abs_diff(&a) > 0.1);
        assert!(matrix(&s2).unwrap().max_abs_diff(&a) < 1e-12);
        assert!(matrix(&amplitude_to_symbol(&amp, &bx, 4).unwrap()).unwrap().max_abs_diff(&a) < 1e-12);
    }
}
