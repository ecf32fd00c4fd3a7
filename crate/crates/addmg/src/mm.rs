//! MatrixMarket coordinate-format import/export, for debugging dumps.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub fn write_matrix_market<W: Write>(w: &mut W, a: &CsrMatrix) -> Result<()> {
    let kind = if a.is_symmetric_flagged() { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let entries: Vec<(usize, usize, f64)> = if a.is_symmetric_flagged() {
        a.iter_triplets().filter(|&(i, j, _)| j <= i).collect()
    } else {
        a.iter_triplets().collect()
    };
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: Read>(r: R) -> Result<CsrMatrix> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket stream".into()))??;
    let header = header.to_ascii_lowercase();
    if !header.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    let symmetric = header.contains("symmetric");

    let mut size_line = None;
    for line in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(trimmed.to_string());
        break;
    }
    let size_line = size_line.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size token {t}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse("size line needs nrows ncols nnz".into()));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);

    let mut triplets = Vec::with_capacity(nnz);
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse(format!("bad entry line: {trimmed}")));
        }
        let i: usize = toks[0].parse().map_err(|_| Error::Parse("bad row index".into()))?;
        let j: usize = toks[1].parse().map_err(|_| Error::Parse("bad col index".into()))?;
        let v: f64 = toks[2].parse().map_err(|_| Error::Parse("bad value".into()))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::Parse(format!("index ({i},{j}) out of range")));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    let mut a = CsrMatrix::from_triplets(nrows, ncols, &triplets)?;
    if symmetric {
        a.set_symmetric_flag(true);
    }
    Ok(a)
}
