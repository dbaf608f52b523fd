//! CSV serialization of sampled symbols: one `k_1..k_n,j_1..j_n,re,im` row per
//! lattice point and grid node, lexicographic in `(k, j)`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::SampledSymbol;
use crate::error::{PdzError, Result};
use crate::lattice_fourier::io::{check_header, fmt_g17, parse_f64, parse_int};
use crate::lattice_fourier::LatticeBox;

fn symbol_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("k_{i}")).collect();
    h.extend((1..=dim).map(|i| format!("j_{i}")));
    h.push("re".into());
    h.push("im".into());
    h
}

pub fn write_symbol<W: Write>(sigma: &SampledSymbol, w: W) -> Result<()> {
    let bx = sigma.lattice();
    let grid = sigma.grid();
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(symbol_header(bx.dim()))?;
    let mut rec = Vec::with_capacity(2 * bx.dim() + 2);
    for p in 0..bx.len() {
        let k = bx.point(p);
        for (q, v) in sigma.row(p).iter().enumerate() {
            rec.clear();
            rec.extend(k.iter().map(|c| c.to_string()));
            rec.extend(grid.node_indices(q).iter().map(|c| c.to_string()));
            rec.push(fmt_g17(v.re));
            rec.push(fmt_g17(v.im));
            wr.write_record(&rec)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads a symbol on `bx`; every `(k, j)` pair must appear exactly once.
pub fn read_symbol<R: Read>(bx: LatticeBox, r: R) -> Result<SampledSymbol> {
    let n = bx.dim();
    let grid = bx.torus();
    let len = bx.len();
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    check_header(rd.headers()?, &symbol_header(n))?;
    let mut values = vec![Complex64::new(0.0, 0.0); len * len];
    let mut seen = vec![false; len * len];
    let mut k = vec![0i64; n];
    let mut j = vec![0usize; n];
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 * n + 2 {
            return Err(PdzError::Parse(format!("line {line}: expected {} fields", 2 * n + 2)));
        }
        for a in 0..n {
            k[a] = parse_int(&rec[a], line)?;
            let v = parse_int(&rec[n + a], line)?;
            if v < 0 || v as usize >= grid.side() {
                return Err(PdzError::Parse(format!("line {line}: node index {v} out of range")));
            }
            j[a] = v as usize;
        }
        let p = bx
            .index_of(&k)
            .ok_or_else(|| PdzError::Parse(format!("line {line}: {k:?} is outside the box")))?;
        let idx = p * len + grid.index_of(&j);
        if seen[idx] {
            return Err(PdzError::Parse(format!("line {line}: duplicate entry k={k:?} j={j:?}")));
        }
        seen[idx] = true;
        values[idx] = Complex64::new(parse_f64(&rec[2 * n], line)?, parse_f64(&rec[2 * n + 1], line)?);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(PdzError::Parse(format!(
            "missing entry k={:?} j={:?}",
            bx.point(i / len),
            grid.node_indices(i % len)
        )));
    }
    SampledSymbol::new(bx, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let bx = LatticeBox::new(2, 1).unwrap();
        let s = SampledSymbol::from_fn(bx, |k, x| Complex64::new(k[0] as f64 / 3.0 + x[1], (k[1] as f64 * x[0]).exp())).unwrap();
        let mut buf = Vec::new();
        write_symbol(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k_1,k_2,j_1,j_2,re,im\n-1,-1,0,0,"));
        assert_eq!(text.lines().count(), 1 + 81);
        assert_eq!(read_symbol(bx, buf.as_slice()).unwrap().samples(), s.samples());
        let truncated: String = text.lines().take(50).collect::<Vec<_>>().join("\n");
        assert!(read_symbol(bx, truncated.as_bytes()).is_err());
    }
}
