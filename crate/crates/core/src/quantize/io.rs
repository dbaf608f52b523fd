//! Kernel CSV and the binary operator-matrix format.
//!
//! Binary layout, all little-endian: the magic bytes `PDZM`, then three
//! `u32` words `n`, `M` and the matrix side `M^n`, then `(M^n)^2` complex
//! entries in row-major order, each as two `f64` (real, imaginary).

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Kernel, OperatorMatrix};
use crate::error::{PdzError, Result};
use crate::lattice_fourier::io::fmt_g17;
use crate::lattice_fourier::LatticeBox;

pub const MATRIX_MAGIC: &[u8; 4] = b"PDZM";

/// Writes `k_1..k_n,l_1..l_n,re,im` rows for every `kappa(k, l)`, lexicographic in `(k, l)`.
///
/// With `drop_below = Some(t)`, entries with `|kappa| <= t` are omitted.
pub fn write_kernel_csv<W: Write>(kernel: &Kernel, w: W, drop_below: Option<f64>) -> Result<()> {
    let bx = kernel.lattice();
    let n = bx.dim();
    let len = bx.len();
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=n).map(|i| format!("k_{i}")).collect();
    header.extend((1..=n).map(|i| format!("l_{i}")));
    header.push("re".into());
    header.push("im".into());
    wr.write_record(&header)?;
    let mut rec = Vec::with_capacity(2 * n + 2);
    for p in 0..len {
        let k = bx.point(p);
        for q in 0..len {
            let v = kernel.kappa()[p * len + q];
            if drop_below.is_some_and(|t| v.norm() <= t) {
                continue;
            }
            rec.clear();
            rec.extend(k.iter().map(|c| c.to_string()));
            rec.extend(bx.point(q).iter().map(|c| c.to_string()));
            rec.push(fmt_g17(v.re));
            rec.push(fmt_g17(v.im));
            wr.write_record(&rec)?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_matrix<W: Write>(op: &OperatorMatrix, mut w: W) -> Result<()> {
    let bx = op.lattice();
    w.write_all(MATRIX_MAGIC)?;
    for word in [bx.dim(), bx.side(), bx.len()] {
        w.write_all(&(word as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(op.data().len() * 16);
    for v in op.data() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<OperatorMatrix> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[0..4] != MATRIX_MAGIC {
        return Err(PdzError::Parse("not a PDZM matrix file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[4 * i..4 * i + 4].try_into().expect("4 bytes")) as usize;
    let (n, m, side) = (word(1), word(2), word(3));
    if m % 2 == 0 {
        return Err(PdzError::Parse(format!("matrix header has even M = {m}")));
    }
    let bx = LatticeBox::with_cap(n, (m - 1) / 2, usize::MAX)?;
    if bx.len() != side {
        return Err(PdzError::Parse(format!("matrix header side {side} != M^n = {}", bx.len())));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != side * side * 16 {
        return Err(PdzError::Parse(format!(
            "matrix body has {} bytes, expected {}",
            bytes.len(),
            side * side * 16
        )));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    OperatorMatrix::new(bx, data)
}
