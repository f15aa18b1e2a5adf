//! Fixture files for matrices and factors.
//!
//! Text form: a header line `n` (symmetric matrix) or `n r` (factor), then one
//! line per row with whitespace-separated entries.
//!
//! Binary form, little-endian throughout:
//!
//! ```text
//! b"SYMF" | n: u64 | n*n f64, row-major
//! b"FACF" | n: u64 | r: u64 | n*r f64, row-major
//! ```

use std::io::{BufRead, Read, Write};

use super::{Factor, SymMatrix};
use crate::error::{Error, Result};

const SYM_MAGIC: &[u8; 4] = b"SYMF";
const FAC_MAGIC: &[u8; 4] = b"FACF";

pub fn write_sym_text(w: &mut impl Write, a: &SymMatrix) -> Result<()> {
    let n = a.n();
    writeln!(w, "{n}")?;
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:e}", a.get(i, j))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_factor_text(w: &mut impl Write, u: &Factor) -> Result<()> {
    writeln!(w, "{} {}", u.n(), u.r())?;
    for i in 0..u.n() {
        let row: Vec<String> = (0..u.r()).map(|j| format!("{:e}", u.get(i, j))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a symmetric matrix; fails if the stored entries are not exactly symmetric.
pub fn read_sym_text(r: impl BufRead) -> Result<SymMatrix> {
    let (header, rows) = read_text(r)?;
    let [n] = header[..] else {
        return Err(Error::Parse(format!("expected header `n`, got {header:?}")));
    };
    let data = collect_rows(rows, n, n)?;
    let a = SymMatrix::from_fn(n, |i, j| data[i * n + j]);
    for i in 0..n {
        for j in 0..i {
            if data[i * n + j] != data[j * n + i] {
                return Err(Error::Parse(format!("entry ({i},{j}) breaks symmetry")));
            }
        }
    }
    Ok(a)
}

pub fn read_factor_text(r: impl BufRead) -> Result<Factor> {
    let (header, rows) = read_text(r)?;
    let [n, k] = header[..] else {
        return Err(Error::Parse(format!("expected header `n r`, got {header:?}")));
    };
    let data = collect_rows(rows, n, k)?;
    Factor::new(nalgebra::DMatrix::from_row_slice(n, k, &data))
}

pub fn write_sym_binary(w: &mut impl Write, a: &SymMatrix) -> Result<()> {
    let n = a.n();
    w.write_all(SYM_MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            w.write_all(&a.get(i, j).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_factor_binary(w: &mut impl Write, u: &Factor) -> Result<()> {
    w.write_all(FAC_MAGIC)?;
    w.write_all(&(u.n() as u64).to_le_bytes())?;
    w.write_all(&(u.r() as u64).to_le_bytes())?;
    for i in 0..u.n() {
        for j in 0..u.r() {
            w.write_all(&u.get(i, j).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_sym_binary(r: &mut impl Read) -> Result<SymMatrix> {
    expect_magic(r, SYM_MAGIC)?;
    let n = read_u64(r)? as usize;
    let data = read_f64s(r, n * n)?;
    for i in 0..n {
        for j in 0..i {
            if data[i * n + j] != data[j * n + i] {
                return Err(Error::Parse(format!("entry ({i},{j}) breaks symmetry")));
            }
        }
    }
    Ok(SymMatrix::from_fn(n, |i, j| data[i * n + j]))
}

pub fn read_factor_binary(r: &mut impl Read) -> Result<Factor> {
    expect_magic(r, FAC_MAGIC)?;
    let n = read_u64(r)? as usize;
    let k = read_u64(r)? as usize;
    let data = read_f64s(r, n * k)?;
    Factor::new(nalgebra::DMatrix::from_row_slice(n, k, &data))
}

fn read_text(r: impl BufRead) -> Result<(Vec<usize>, Vec<String>)> {
    let mut lines = r.lines().filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let header = lines.next().ok_or_else(|| Error::Parse("empty fixture".into()))??;
    let header = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("header: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let rows = lines.collect::<std::io::Result<Vec<_>>>()?;
    Ok((header, rows))
}

fn collect_rows(rows: Vec<String>, n: usize, cols: usize) -> Result<Vec<f64>> {
    if rows.len() != n {
        return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
    }
    let mut data = Vec::with_capacity(n * cols);
    for (i, row) in rows.iter().enumerate() {
        let before = data.len();
        for tok in row.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|e| Error::Parse(format!("row {i}: {e}")))?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {cols}", data.len() - before)));
        }
    }
    Ok(data)
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(Error::Parse(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&buf),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_and_binary_round_trip(n in 1usize..6, r in 1usize..4, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = SymMatrix::random(n, &mut rng);
            let r = r.min(n);
            let u = Factor::from_fn(n, r, |i, j| a.get(i, j) * 0.5 + j as f64);

            let mut buf = Vec::new();
            write_sym_text(&mut buf, &a).unwrap();
            prop_assert_eq!(read_sym_text(&buf[..]).unwrap(), a.clone());
            let mut buf = Vec::new();
            write_sym_binary(&mut buf, &a).unwrap();
            prop_assert_eq!(read_sym_binary(&mut &buf[..]).unwrap(), a);

            let mut buf = Vec::new();
            write_factor_text(&mut buf, &u).unwrap();
            prop_assert_eq!(read_factor_text(&buf[..]).unwrap(), u.clone());
            let mut buf = Vec::new();
            write_factor_binary(&mut buf, &u).unwrap();
            prop_assert_eq!(read_factor_binary(&mut &buf[..]).unwrap(), u);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_sym_text("2\n1 2\n3 4\n".as_bytes()).is_err());
        assert!(read_sym_text("2\n1 2\n".as_bytes()).is_err());
        assert!(read_factor_text("2 1\n1 2\n3\n".as_bytes()).is_err());
        assert!(read_sym_binary(&mut &b"FACF\0\0\0\0\0\0\0\0"[..]).is_err());
    }

    #[test]
    fn text_reads_hand_written_fixture() {
        let a = read_sym_text("3\n2 1 0\n1 2 1\n0 1 2\n".as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.trace(), 6.0);
        let u = read_factor_text("3 2\n1 0\n0 1\n1 1\n".as_bytes()).unwrap();
        assert_eq!(u.get(2, 1), 1.0);
    }
}
