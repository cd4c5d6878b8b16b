//! Matrix Market coordinate export (complex general), for debugging dumps.

use crate::sparse::CsrMatrix;
use std::io::{self, Write};
use std::path::Path;

/// Write a CSR matrix in "matrix coordinate complex general" format.
pub fn write_complex_coordinate(path: &Path, m: &CsrMatrix) -> io::Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(f);
    writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
    writeln!(w, "{} {} {}", m.nrows, m.ncols, m.nnz())?;
    for i in 0..m.nrows {
        for k in m.row_ptr[i]..m.row_ptr[i + 1] {
            let v = m.values[k];
            writeln!(w, "{} {} {:.16e} {:.16e}", i + 1, m.col_idx[k] + 1, v.re, v.im)?;
        }
    }
    Ok(())
}
