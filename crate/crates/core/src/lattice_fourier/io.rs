//! CSV serialization of lattice sequences and torus functions.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{LatticeBox, LatticeSequence, TorusFunction, TorusGrid};
use crate::error::{PdzError, Result};

/// Formats a float exactly like C's `%.17g`.
pub fn fmt_g17(v: f64) -> String {
    const P: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let x: i32 = exp.parse().expect("exponent digits");
    if !(-4..P).contains(&x) {
        let mant = strip_zeros(mant);
        let sign = if x < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", x.abs())
    } else {
        let fixed = format!("{:.*}", (P - 1 - x) as usize, v);
        strip_zeros(&fixed).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub(crate) fn header(prefix: &str, dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("{prefix}_{i}")).collect();
    h.push("re".into());
    h.push("im".into());
    h
}

pub(crate) fn check_header(found: &csv::StringRecord, expected: &[String]) -> Result<()> {
    let ok = found.len() == expected.len()
        && found.iter().zip(expected).all(|(a, b)| a.trim() == b);
    if ok {
        Ok(())
    } else {
        Err(PdzError::Parse(format!(
            "expected CSV header {}, found {}",
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )))
    }
}

pub(crate) fn parse_f64(s: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| PdzError::Parse(format!("line {line}: bad number '{s}'")))
}

pub(crate) fn parse_int(s: &str, line: u64) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| PdzError::Parse(format!("line {line}: bad integer '{s}'")))
}

pub fn write_sequence<W: Write>(f: &LatticeSequence, w: W) -> Result<()> {
    let bx = f.lattice();
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header("k", bx.dim()))?;
    let mut k = vec![0i64; bx.dim()];
    let mut rec = Vec::with_capacity(bx.dim() + 2);
    for (i, v) in f.values().iter().enumerate() {
        bx.point_into(i, &mut k);
        rec.clear();
        rec.extend(k.iter().map(|c| c.to_string()));
        rec.push(fmt_g17(v.re));
        rec.push(fmt_g17(v.im));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a sequence on `bx`. Every lattice point must appear exactly once.
pub fn read_sequence<R: Read>(bx: LatticeBox, r: R) -> Result<LatticeSequence> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    check_header(rd.headers()?, &header("k", bx.dim()))?;
    let mut values = vec![Complex64::new(0.0, 0.0); bx.len()];
    let mut seen = vec![false; bx.len()];
    let mut k = vec![0i64; bx.dim()];
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != bx.dim() + 2 {
            return Err(PdzError::Parse(format!("line {line}: expected {} fields", bx.dim() + 2)));
        }
        for (a, c) in k.iter_mut().enumerate() {
            *c = parse_int(&rec[a], line)?;
        }
        let idx = bx
            .index_of(&k)
            .ok_or_else(|| PdzError::domain(format!("line {line}: {k:?} is outside the box")))?;
        if seen[idx] {
            return Err(PdzError::Parse(format!("line {line}: duplicate point {k:?}")));
        }
        seen[idx] = true;
        values[idx] = Complex64::new(parse_f64(&rec[bx.dim()], line)?, parse_f64(&rec[bx.dim() + 1], line)?);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(PdzError::Parse(format!("missing lattice point {:?}", bx.point(i))));
    }
    LatticeSequence::new(bx, values)
}

pub fn write_torus<W: Write>(t: &TorusFunction, w: W) -> Result<()> {
    let grid = t.grid();
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header("j", grid.dim()))?;
    let mut j = vec![0usize; grid.dim()];
    let mut rec = Vec::with_capacity(grid.dim() + 2);
    for (i, v) in t.values().iter().enumerate() {
        grid.node_indices_into(i, &mut j);
        rec.clear();
        rec.extend(j.iter().map(|c| c.to_string()));
        rec.push(fmt_g17(v.re));
        rec.push(fmt_g17(v.im));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_torus<R: Read>(grid: TorusGrid, r: R) -> Result<TorusFunction> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    check_header(rd.headers()?, &header("j", grid.dim()))?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut j = vec![0usize; grid.dim()];
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != grid.dim() + 2 {
            return Err(PdzError::Parse(format!("line {line}: expected {} fields", grid.dim() + 2)));
        }
        for (a, c) in j.iter_mut().enumerate() {
            let v = parse_int(&rec[a], line)?;
            if v < 0 || v as usize >= grid.side() {
                return Err(PdzError::domain(format!("line {line}: node index {v} out of range")));
            }
            *c = v as usize;
        }
        let idx = grid.index_of(&j);
        if seen[idx] {
            return Err(PdzError::Parse(format!("line {line}: duplicate node {j:?}")));
        }
        seen[idx] = true;
        values[idx] = Complex64::new(parse_f64(&rec[grid.dim()], line)?, parse_f64(&rec[grid.dim() + 1], line)?);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(PdzError::Parse(format!("missing node {:?}", grid.node_indices(i))));
    }
    TorusFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_c_printf() {
        // reference strings from printf("%.17g")
        let cases = [
            (1.0, "1"),
            (0.1, "0.10000000000000001"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.33333333333333331"),
            (1e-5, "1.0000000000000001e-05"),
            (123456789012345680.0, "1.2345678901234568e+17"),
            (1e16, "10000000000000000"),
            (0.0001, "0.0001"),
            (6.123233995736766e-17, "6.123233995736766e-17"),
            (100.0, "100"),
            (-0.0, "-0"),
            (std::f64::consts::PI, "3.1415926535897931"),
        ];
        for (v, s) in cases {
            assert_eq!(fmt_g17(v), s, "value {v:e}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for v in [0.1, 1e-300, 7.0e22, -3.3333333333333335, 2f64.sqrt()] {
            assert_eq!(fmt_g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn sequence_csv_round_trip() {
        let bx = LatticeBox::new(2, 1).unwrap();
        let f = LatticeSequence::from_fn(bx, |k| Complex64::new(k[0] as f64 * 0.1, k[1] as f64 / 3.0)).unwrap();
        let mut buf = Vec::new();
        write_sequence(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k_1,k_2,re,im\n-1,-1,-0.10000000000000001,-0.33333333333333331\n"));
        let g = read_sequence(bx, buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn torus_csv_round_trip() {
        let bx = LatticeBox::new(1, 2).unwrap();
        let t = TorusFunction::from_fn(bx.torus(), |x| Complex64::new(x[0], -x[0])).unwrap();
        let mut buf = Vec::new();
        write_torus(&t, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("j_1,re,im\n0,0,-0\n1,0.20000000000000001,"));
        assert_eq!(read_torus(bx.torus(), buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_missing_and_out_of_box_rows() {
        let bx = LatticeBox::new(1, 1).unwrap();
        assert!(read_sequence(bx, "k_1,re,im\n-1,0,0\n0,1,0\n".as_bytes()).is_err());
        assert!(read_sequence(bx, "k_1,re,im\n-1,0,0\n0,1,0\n1,0,0\n2,0,0\n".as_bytes()).is_err());
        assert!(read_sequence(bx, "k,re,im\n-1,0,0\n0,1,0\n1,0,0\n".as_bytes()).is_err());
        assert!(read_sequence(bx, "k_1,re,im\n1,0,0\n0,1,0\n-1,0,0\n".as_bytes()).is_ok());
    }
}
