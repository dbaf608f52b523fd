use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::LatticeBox;

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (len, direction == FftDirection::Forward);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Sign of the exponent in `sum e^{sign 2 pi i k.x}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sign {
    Minus,
    Plus,
}

/// Unnormalised n-dimensional DFT between the lattice box (stored in box
/// order, `p_j = k_j + N`) and the matched torus grid (stored in node order).
pub(crate) struct Dft {
    dim: usize,
    side: usize,
    len: usize,
    /// box-order flat index -> DFT-order flat index (`k mod M` per axis)
    to_dft: Vec<usize>,
    forward: Plan,
    inverse: Plan,
}

impl Dft {
    pub(crate) fn new(bx: &LatticeBox) -> Self {
        let side = bx.side();
        let dim = bx.dim();
        let len = bx.len();
        let shift = bx.half_width() + 1;
        let mut to_dft = vec![0usize; len];
        let mut coords = vec![0usize; dim];
        for (p, slot) in to_dft.iter_mut().enumerate() {
            let mut rem = p;
            for c in coords.iter_mut().rev() {
                *c = rem % side;
                rem /= side;
            }
            let mut q = 0;
            for &c in coords.iter() {
                q = q * side + (c + shift) % side;
            }
            *slot = q;
        }
        Dft {
            dim,
            side,
            len,
            to_dft,
            forward: plan(side, FftDirection::Forward),
            inverse: plan(side, FftDirection::Inverse),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    fn transform(&self, data: &mut [Complex64], sign: Sign) {
        let fft = match sign {
            Sign::Minus => &self.forward,
            Sign::Plus => &self.inverse,
        };
        let m = self.side;
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let mut stride = self.len;
        for _axis in 0..self.dim {
            stride /= m;
            let block = stride * m;
            for outer in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[base + t * stride];
                    }
                    fft.process(&mut line);
                    for (t, v) in line.iter().enumerate() {
                        data[base + t * stride] = *v;
                    }
                }
            }
        }
    }

    /// `out(j) = sum_k e^{sign 2 pi i k.j/M} a(k)`, `a` in box order, `out` in node order.
    pub(crate) fn lattice_to_torus(&self, a: &[Complex64], sign: Sign, out: &mut [Complex64]) {
        debug_assert_eq!(a.len(), self.len);
        for (p, &v) in a.iter().enumerate() {
            out[self.to_dft[p]] = v;
        }
        self.transform(out, sign);
    }

    /// `out(k) = sum_j e^{sign 2 pi i k.j/M} t(j)`, `t` in node order, `out` in box order.
    pub(crate) fn torus_to_lattice(
        &self,
        t: &[Complex64],
        sign: Sign,
        scratch: &mut [Complex64],
        out: &mut [Complex64],
    ) {
        scratch.copy_from_slice(t);
        self.transform(scratch, sign);
        for (p, o) in out.iter_mut().enumerate() {
            *o = scratch[self.to_dft[p]];
        }
    }
}
