//! File formats: plain-text graph/coupling/CSV artifacts and the binary
//! sparse-matrix dump.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which
//! round-trips `f64` exactly, so "rerun equals reread" comparisons can be
//! bitwise. CSV files start with `#`-prefixed `key=value` metadata lines in
//! sorted key order, then one header line, then data rows. Writers emit `\n`
//! line endings unconditionally; readers accept trailing `\r`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::couplings::CouplingSet;
use crate::error::{Error, Result};
use crate::fermion::Parity;
use crate::graph::{Graph, GraphSpec};
use crate::linalg::CsrMatrix;
use crate::stats::Histogram;

/// `#`-line metadata of a CSV artifact: sorted key-value pairs.
pub type Metadata = BTreeMap<String, String>;

/// Canonical decimal form used for every floating-point field.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|e| Error::parse(format!("bad {what} `{s}`: {e}")))
}

fn parse_int<T: std::str::FromStr>(s: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| Error::parse(format!("bad {what} `{s}`: {e}")))
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path)
        .map_err(|e| Error::parse(format!("cannot open {}: {e}", path.display())))?;
    Ok(BufReader::new(file).lines())
}

fn write_metadata(out: &mut impl Write, metadata: &BTreeMap<String, String>) -> Result<()> {
    for (k, v) in metadata {
        if k.contains(['\n', '=']) || v.contains('\n') {
            return Err(Error::validation(format!(
                "metadata key/value must be single-line and the key `=`-free: {k}"
            )));
        }
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

/// Split off leading `# key=value` lines; returns (metadata, data lines).
fn split_metadata(lines: Vec<String>) -> Result<(BTreeMap<String, String>, Vec<String>)> {
    let mut metadata = BTreeMap::new();
    let mut data = Vec::new();
    let mut in_header = true;
    for line in lines {
        if in_header {
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::parse(format!("metadata line without `=`: {line}")))?;
                metadata.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            in_header = false;
        }
        data.push(line);
    }
    Ok((metadata, data))
}

fn collect_lines(path: &Path) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for line in open_lines(path)? {
        let mut line = line?;
        if line.ends_with('\r') {
            line.pop();
        }
        if !line.is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}

/// Write a graph with its generating parameters: line 1 `N k p seed`, then
/// one line `index u v` per edge in storage order.
pub fn write_graph_file(path: &Path, spec: &GraphSpec, graph: &Graph) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "{} {} {} {}",
        spec.n_vertices,
        spec.k,
        fmt_f64(spec.p),
        spec.seed
    )?;
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        writeln!(out, "{e} {u} {v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a graph file back; edge order (the coupling key) is preserved.
pub fn read_graph_file(path: &Path) -> Result<(GraphSpec, Graph)> {
    let lines = collect_lines(path)?;
    let mut it = lines.into_iter();
    let head = it
        .next()
        .ok_or_else(|| Error::parse("empty graph file"))?;
    let fields: Vec<&str> = head.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::parse(format!(
            "graph header needs `N k p seed`, got `{head}`"
        )));
    }
    let spec = GraphSpec {
        n_vertices: parse_int(fields[0], "N")?,
        k: parse_int(fields[1], "k")?,
        p: parse_f64(fields[2], "p")?,
        seed: parse_int(fields[3], "seed")?,
    };
    let mut edges = Vec::new();
    for (i, line) in it.enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(format!(
                "edge line needs `index u v`, got `{line}`"
            )));
        }
        let index: usize = parse_int(fields[0], "edge index")?;
        if index != i {
            return Err(Error::parse(format!(
                "edge index {index} out of order (expected {i})"
            )));
        }
        edges.push((parse_int(fields[1], "u")?, parse_int(fields[2], "v")?));
    }
    let graph = Graph::from_edges(spec.n_vertices, edges)?;
    Ok((spec, graph))
}

/// Write couplings: line 1 `n_E seed sigma`, then `index value` per edge.
pub fn write_coupling_file(path: &Path, couplings: &CouplingSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "{} {} {}",
        couplings.len(),
        couplings.seed,
        fmt_f64(couplings.sigma)
    )?;
    for (e, &v) in couplings.values().iter().enumerate() {
        writeln!(out, "{e} {}", fmt_f64(v))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_coupling_file(path: &Path) -> Result<CouplingSet> {
    let lines = collect_lines(path)?;
    let mut it = lines.into_iter();
    let head = it
        .next()
        .ok_or_else(|| Error::parse("empty coupling file"))?;
    let fields: Vec<&str> = head.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse(format!(
            "coupling header needs `n_E seed sigma`, got `{head}`"
        )));
    }
    let n_e: usize = parse_int(fields[0], "n_E")?;
    let seed: u64 = parse_int(fields[1], "seed")?;
    let sigma = parse_f64(fields[2], "sigma")?;
    let mut values = Vec::with_capacity(n_e);
    for (i, line) in it.enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(format!(
                "coupling line needs `index value`, got `{line}`"
            )));
        }
        let index: usize = parse_int(fields[0], "coupling index")?;
        if index != i {
            return Err(Error::parse(format!(
                "coupling index {index} out of order (expected {i})"
            )));
        }
        values.push(parse_f64(fields[1], "coupling value")?);
    }
    if values.len() != n_e {
        return Err(Error::parse(format!(
            "header promised {n_e} couplings, file holds {}",
            values.len()
        )));
    }
    Ok(CouplingSet::with_metadata(values, sigma, seed))
}

/// Spectrum CSV: metadata, then `index,eigenvalue,residual`. Dense spectra
/// have no residuals; the column is written as exact zero.
pub fn write_spectrum_csv(path: &Path, spectrum: &crate::eigensolve::Spectrum) -> Result<()> {
    let mut metadata = spectrum.metadata.clone();
    if let Some((lo, hi)) = spectrum.window {
        metadata.insert("window_lo".to_string(), fmt_f64(lo));
        metadata.insert("window_hi".to_string(), fmt_f64(hi));
    }
    metadata.insert("complete".to_string(), spectrum.complete.to_string());
    if let Some(est) = spectrum.count_estimate {
        metadata.insert("count_estimate".to_string(), fmt_f64(est));
    }
    let mut out = BufWriter::new(File::create(path)?);
    write_metadata(&mut out, &metadata)?;
    writeln!(out, "index,eigenvalue,residual")?;
    for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
        let r = spectrum.residuals.as_ref().map_or(0.0, |rs| rs[i]);
        writeln!(out, "{i},{},{}", fmt_f64(e), fmt_f64(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Read back a spectrum CSV: metadata plus `(eigenvalue, residual)` rows.
pub fn read_spectrum_csv(path: &Path) -> Result<(Metadata, Vec<(f64, f64)>)> {
    let (metadata, data) = split_metadata(collect_lines(path)?)?;
    let mut it = data.into_iter();
    match it.next().as_deref() {
        Some("index,eigenvalue,residual") => {}
        other => {
            return Err(Error::parse(format!(
                "expected spectrum header, got {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in it.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(format!("bad spectrum row `{line}`")));
        }
        let index: usize = parse_int(fields[0], "row index")?;
        if index != i {
            return Err(Error::parse(format!(
                "spectrum row index {index} out of order (expected {i})"
            )));
        }
        rows.push((
            parse_f64(fields[1], "eigenvalue")?,
            parse_f64(fields[2], "residual")?,
        ));
    }
    Ok((metadata, rows))
}

/// Per-realization r-ratio table: `realization_index,mean_r,count`.
pub fn write_rstats_csv(
    path: &Path,
    metadata: &BTreeMap<String, String>,
    rows: &[(u64, f64, u64)],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_metadata(&mut out, metadata)?;
    writeln!(out, "realization_index,mean_r,count")?;
    for &(i, mean_r, count) in rows {
        writeln!(out, "{i},{},{count}", fmt_f64(mean_r))?;
    }
    out.flush()?;
    Ok(())
}

/// Histogram table: `bin_left,bin_right,count`, with out-of-range counts in
/// the metadata.
pub fn write_histogram_csv(
    path: &Path,
    metadata: &BTreeMap<String, String>,
    hist: &Histogram,
) -> Result<()> {
    let mut metadata = metadata.clone();
    metadata.insert(
        "out_of_range".to_string(),
        hist.out_of_range.to_string(),
    );
    let mut out = BufWriter::new(File::create(path)?);
    write_metadata(&mut out, &metadata)?;
    writeln!(out, "bin_left,bin_right,count")?;
    for (b, &count) in hist.counts.iter().enumerate() {
        writeln!(
            out,
            "{},{},{count}",
            fmt_f64(hist.edges[b]),
            fmt_f64(hist.edges[b + 1])
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Rotated-tensor dump: `a,b,c,d,value` for the stored (above-threshold)
/// entries, 1-based mode indices to match operator labels.
pub fn write_tensor_csv(
    path: &Path,
    metadata: &BTreeMap<String, String>,
    tensor: &crate::dyson::QuarticTensor,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_metadata(&mut out, metadata)?;
    writeln!(out, "a,b,c,d,value")?;
    for &([a, b, c, d], v) in &tensor.entries {
        writeln!(
            out,
            "{},{},{},{},{}",
            a + 1,
            b + 1,
            c + 1,
            d + 1,
            fmt_f64(v)
        )?;
    }
    out.flush()?;
    Ok(())
}

const CSR_MAGIC: &[u8; 8] = b"swsykcsr";
const CSR_VERSION: u64 = 1;

/// Provenance carried in a sparse-matrix dump header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsrHeader {
    pub n_majoranas: u64,
    pub k: u64,
    pub p: f64,
    pub graph_seed: u64,
    pub coupling_seed: u64,
    pub parity: Parity,
}

fn put_u64(out: &mut impl Write, x: u64) -> Result<()> {
    out.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_f64(out: &mut impl Write, x: f64) -> Result<()> {
    out.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get_u64(inp: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    inp.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn get_f64(inp: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    inp.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Binary dump: magic, version, header, `D`, `nnz`, then row pointers
/// (`D + 1`), column indices (`nnz`), and complex values (`2 * nnz` floats),
/// all little-endian 64-bit.
pub fn write_csr_binary(path: &Path, header: &CsrHeader, matrix: &CsrMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(CSR_MAGIC)?;
    put_u64(&mut out, CSR_VERSION)?;
    put_u64(&mut out, header.n_majoranas)?;
    put_u64(&mut out, header.k)?;
    put_f64(&mut out, header.p)?;
    put_u64(&mut out, header.graph_seed)?;
    put_u64(&mut out, header.coupling_seed)?;
    put_u64(&mut out, matches!(header.parity, Parity::Odd) as u64)?;
    let dim = matrix.dim() as u64;
    put_u64(&mut out, dim)?;
    let mut nnz = 0u64;
    for r in 0..matrix.dim() {
        nnz += matrix.row(r).0.len() as u64;
    }
    put_u64(&mut out, nnz)?;
    let mut offset = 0u64;
    put_u64(&mut out, 0)?;
    for r in 0..matrix.dim() {
        offset += matrix.row(r).0.len() as u64;
        put_u64(&mut out, offset)?;
    }
    for r in 0..matrix.dim() {
        for &c in matrix.row(r).0 {
            put_u64(&mut out, c as u64)?;
        }
    }
    for r in 0..matrix.dim() {
        for v in matrix.row(r).1 {
            put_f64(&mut out, v.re)?;
            put_f64(&mut out, v.im)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_csr_binary(path: &Path) -> Result<(CsrHeader, CsrMatrix)> {
    let mut inp = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic)?;
    if &magic != CSR_MAGIC {
        return Err(Error::parse("not a sparse-matrix dump (bad magic)"));
    }
    let version = get_u64(&mut inp)?;
    if version != CSR_VERSION {
        return Err(Error::parse(format!(
            "unsupported dump version {version} (expected {CSR_VERSION})"
        )));
    }
    let header = CsrHeader {
        n_majoranas: get_u64(&mut inp)?,
        k: get_u64(&mut inp)?,
        p: get_f64(&mut inp)?,
        graph_seed: get_u64(&mut inp)?,
        coupling_seed: get_u64(&mut inp)?,
        parity: if get_u64(&mut inp)? == 0 {
            Parity::Even
        } else {
            Parity::Odd
        },
    };
    let dim = get_u64(&mut inp)? as usize;
    let nnz = get_u64(&mut inp)?;
    let mut row_ptr = Vec::with_capacity(dim + 1);
    for _ in 0..=dim {
        row_ptr.push(get_u64(&mut inp)?);
    }
    if row_ptr[0] != 0 || row_ptr[dim] != nnz {
        return Err(Error::parse("row pointers inconsistent with nnz"));
    }
    let mut cols = Vec::with_capacity(nnz as usize);
    for _ in 0..nnz {
        let c = get_u64(&mut inp)?;
        if c >= dim as u64 {
            return Err(Error::parse(format!("column index {c} out of range")));
        }
        cols.push(c as u32);
    }
    let mut rows: Vec<Vec<(u32, Complex64)>> = Vec::with_capacity(dim);
    let mut at = 0usize;
    for r in 0..dim {
        let len = (row_ptr[r + 1] - row_ptr[r]) as usize;
        let mut row = Vec::with_capacity(len);
        for _ in 0..len {
            let re = get_f64(&mut inp)?;
            let im = get_f64(&mut inp)?;
            row.push((cols[at], Complex64::new(re, im)));
            at += 1;
        }
        rows.push(row);
    }
    // values were stored row-major after all columns; re-read pairing above
    // consumed them in the same order, so `rows` is complete
    let matrix = CsrMatrix::from_rows(dim, rows)?;
    Ok((header, matrix))
}
