use num_complex::Complex64;
use proptest::prelude::*;

use pdz::analysis::{hs_norm, trace};
use pdz::calculus::{adjoint, compose, ExpansionOrder};
use pdz::lattice_fourier::{forward_fourier, inverse_fourier, plancherel_defect, LatticeBox, LatticeSequence};
use pdz::quantize::{apply, kernel, link_defect, matrix, symbol_from_operator};
use pdz::symbol::SampledSymbol;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn lattice_box() -> impl Strategy<Value = LatticeBox> {
    prop_oneof![(1usize..=6).prop_map(|h| (1, h)), (1usize..=2).prop_map(|h| (2, h))]
        .prop_map(|(n, h)| LatticeBox::new(n, h).unwrap())
}

fn sequence_in(bx: LatticeBox) -> impl Strategy<Value = LatticeSequence> {
    prop::collection::vec(complex(), bx.len()).prop_map(move |v| LatticeSequence::new(bx, v).unwrap())
}

fn symbol_in(bx: LatticeBox) -> impl Strategy<Value = SampledSymbol> {
    prop::collection::vec(complex(), bx.len() * bx.len()).prop_map(move |v| SampledSymbol::new(bx, v).unwrap())
}

fn symbol_and_sequence() -> impl Strategy<Value = (SampledSymbol, LatticeSequence)> {
    lattice_box().prop_flat_map(|bx| (symbol_in(bx), sequence_in(bx)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fourier_round_trip(f in lattice_box().prop_flat_map(sequence_in)) {
        let bx = *f.lattice();
        let back = inverse_fourier(&forward_fourier(&f, &bx.torus()).unwrap(), &bx).unwrap();
        let scale = f.norm_inf().max(1e-300);
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * scale);
        prop_assert!(plancherel_defect(&f) <= 1e-12 * f.norm_l2().powi(2).max(1e-300));
    }

    #[test]
    fn three_paths_agree((s, f) in symbol_and_sequence()) {
        let fft = apply(&s, &f).unwrap();
        let ker = kernel(&s).apply(&f).unwrap();
        let dense = matrix(&s).unwrap().matvec(&f).unwrap();
        let tol = 1e-11 * f.norm_inf().max(1e-300);
        prop_assert!(fft.max_abs_diff(&ker) <= tol);
        prop_assert!(fft.max_abs_diff(&dense) <= tol);
    }

    #[test]
    fn apply_is_linear(((s, f), g, a) in symbol_and_sequence().prop_flat_map(|(s, f)| {
        let bx = *f.lattice();
        ((Just(s), Just(f)), sequence_in(bx), complex())
    })) {
        let bx = *f.lattice();
        let combo = LatticeSequence::new(bx, f.values().iter().zip(g.values()).map(|(u, v)| a * u + v).collect()).unwrap();
        let lhs = apply(&s, &combo).unwrap();
        let (sf, sg) = (apply(&s, &f).unwrap(), apply(&s, &g).unwrap());
        let rhs = LatticeSequence::new(bx, sf.values().iter().zip(sg.values()).map(|(u, v)| a * u + v).collect()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + lhs.norm_inf()));
    }

    #[test]
    fn symbol_recovered_from_matrix(s in lattice_box().prop_flat_map(symbol_in)) {
        let back = symbol_from_operator(&matrix(&s).unwrap());
        prop_assert!(back.max_abs_diff(&s) <= 1e-11);
    }

    #[test]
    fn link_holds(s in lattice_box().prop_flat_map(symbol_in)) {
        prop_assert!(link_defect(&s).unwrap() <= 1e-10);
    }

    #[test]
    fn hs_norm_and_trace_match_matrix(s in lattice_box().prop_flat_map(symbol_in)) {
        let m = matrix(&s).unwrap();
        let fro = m.frobenius();
        prop_assert!((hs_norm(&s) - fro).abs() <= 1e-10 * fro.max(1e-300));
        prop_assert!((trace(&s) - m.trace()).norm() <= 1e-12 * (1.0 + fro));
    }

    #[test]
    fn k_independent_composition_is_exact(
        (s, t) in lattice_box().prop_flat_map(|bx| {
            let x_only = move |v: Vec<Complex64>| {
                let len = bx.len();
                SampledSymbol::new(bx, (0..len * len).map(|i| v[i % len]).collect()).unwrap()
            };
            (
                prop::collection::vec(complex(), bx.len()).prop_map(x_only),
                prop::collection::vec(complex(), bx.len()).prop_map(x_only),
            )
        })
    ) {
        let c = compose(&s, &t, ExpansionOrder::new(1).unwrap()).unwrap();
        let dense = matrix(&s).unwrap().matmul(&matrix(&t).unwrap()).unwrap();
        prop_assert!(matrix(&c).unwrap().max_abs_diff(&dense) <= 1e-11);
        let a = adjoint(&s, ExpansionOrder::new(1).unwrap()).unwrap();
        prop_assert!(matrix(&a).unwrap().max_abs_diff(&matrix(&s).unwrap().adjoint()) <= 1e-11);
    }
}
