use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SparseAffinity;
use crate::sparse::CsrMatrix;

/// Header `N nnz`, then one `i j w` line per stored entry in row order.
pub fn affinity_coo_text(w: &SparseAffinity) -> String {
    let mut s = String::new();
    writeln!(s, "{} {}", w.n(), w.nnz()).unwrap();
    for (i, j, v) in w.weights().iter() {
        writeln!(s, "{i} {j} {v:.17e}").unwrap();
    }
    s
}

pub fn write_affinity_coo(path: impl AsRef<Path>, w: &SparseAffinity) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, affinity_coo_text(w)).map_err(|e| Error::io(path, e))
}

pub fn read_affinity_coo(path: impl AsRef<Path>) -> Result<SparseAffinity> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::Format {
        what: "affinity list",
        detail,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let mut head = header.split_whitespace().map(str::parse::<usize>);
    let (n, nnz) = match (head.next(), head.next(), head.next()) {
        (Some(Ok(n)), Some(Ok(nnz)), None) => (n, nnz),
        _ => return Err(bad(format!("bad header `{header}`"))),
    };
    let mut triplets = Vec::with_capacity(nnz);
    for (lineno, line) in lines.enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let parsed = match f.as_slice() {
            [i, j, w] => i
                .parse::<usize>()
                .ok()
                .zip(j.parse::<usize>().ok())
                .zip(w.parse::<f64>().ok()),
            _ => None,
        };
        let ((i, j), w) = parsed.ok_or_else(|| bad(format!("bad entry on line {}", lineno + 2)))?;
        triplets.push((i, j, w));
    }
    if triplets.len() != nnz {
        return Err(bad(format!(
            "header says {nnz} entries, found {}",
            triplets.len()
        )));
    }
    SparseAffinity::new(CsrMatrix::from_triplets(n, n, triplets)?)
}
