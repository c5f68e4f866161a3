//! Flat binary serialization for matrices and network weights.
//!
//! Layouts are little-endian and deliberately dumb so other tooling can read
//! them without a library:
//!
//! - Observation matrix: one text header line
//!   `gpca-matrix v1 provenance=<tag> m=<m> seed=<base>:<stream>|none\n`,
//!   then `n` as a `u64`, then the `n²` matrix entries as `f64`, row-major.
//! - ReLU-net weights: one text header line `gpca-relu-net v1\n`, then the
//!   dims `k h n` as three `u64`, then the first-layer matrix (`h×k`) and the
//!   second-layer matrix (`n×h`) as `f64`, each row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::generators::ReluNetWeights;
use crate::models::{ObservationMatrix, Provenance};
use crate::rng::Seed;

const MATRIX_MAGIC: &str = "gpca-matrix v1";
const RELU_MAGIC: &str = "gpca-relu-net v1";

fn write_u64<W: Write>(w: &mut W, value: u64) -> std::io::Result<()> {
    w.write_all(&value.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn write_f64_slice<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64_vec<R: Read>(r: &mut R, len: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

fn read_header_line<R: Read>(r: &mut R) -> std::io::Result<String> {
    // Read byte-wise up to the newline so the binary payload that follows
    // stays untouched.
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "header line too long",
            ));
        }
    }
    String::from_utf8(line)
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "non-utf8 header"))
}

fn seed_tag(seed: Option<Seed>) -> String {
    match seed {
        Some(s) => format!("{}:{}", s.base, s.stream),
        None => "none".to_string(),
    }
}

fn parse_seed_tag(tag: &str) -> Result<Option<Seed>> {
    if tag == "none" {
        return Ok(None);
    }
    let (base, stream) = tag
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("malformed seed tag `{tag}`")))?;
    let base = base
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("malformed seed base `{base}`")))?;
    let stream = stream
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("malformed seed stream `{stream}`")))?;
    Ok(Some(Seed::new(base, stream)))
}

/// Writes an observation matrix in the flat binary layout.
pub fn write_matrix<W: Write>(w: &mut W, matrix: &ObservationMatrix) -> std::io::Result<()> {
    writeln!(
        w,
        "{MATRIX_MAGIC} provenance={} m={} seed={}",
        matrix.provenance(),
        matrix.m(),
        seed_tag(matrix.seed())
    )?;
    write_u64(w, matrix.n() as u64)?;
    let v = matrix.v();
    for row in v.rows() {
        for &entry in row {
            w.write_all(&entry.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix<R: Read>(r: &mut R) -> Result<ObservationMatrix> {
    let header = read_header_line(r).map_err(|e| Error::Parse(format!("matrix header: {e}")))?;
    let mut fields = header.split_whitespace();
    let magic: Vec<&str> = fields.by_ref().take(2).collect();
    if magic.join(" ") != MATRIX_MAGIC {
        return Err(Error::Parse(format!(
            "bad magic `{}`, expected `{MATRIX_MAGIC}`",
            magic.join(" ")
        )));
    }
    let mut provenance = None;
    let mut m = None;
    let mut seed = None;
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header field `{field}`")))?;
        match key {
            "provenance" => provenance = Some(Provenance::parse(value)?),
            "m" => {
                m = Some(value.parse::<usize>().map_err(|_| {
                    Error::Parse(format!("malformed sample count `{value}`"))
                })?)
            }
            "seed" => seed = Some(parse_seed_tag(value)?),
            other => return Err(Error::Parse(format!("unknown header field `{other}`"))),
        }
    }
    let provenance = provenance.ok_or_else(|| Error::Parse("missing provenance".into()))?;
    let m = m.ok_or_else(|| Error::Parse("missing sample count".into()))?;
    let seed = seed.unwrap_or(None);

    let n = read_u64(r).map_err(|e| Error::Parse(format!("matrix dimension: {e}")))? as usize;
    let data =
        read_f64_vec(r, n * n).map_err(|e| Error::Parse(format!("matrix payload: {e}")))?;
    let v = Array2::from_shape_vec((n, n), data).expect("length checked above");
    ObservationMatrix::new(v, m, provenance, seed)
}

pub fn write_matrix_to_path(path: &Path, matrix: &ObservationMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix(&mut w, matrix).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_from_path(path: &Path) -> Result<ObservationMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(&mut BufReader::new(file))
}

/// Writes ReLU-net weights in the flat binary layout.
pub fn write_relu_net<W: Write>(w: &mut W, net: &ReluNetWeights) -> std::io::Result<()> {
    writeln!(w, "{RELU_MAGIC}")?;
    write_u64(w, net.k() as u64)?;
    write_u64(w, net.h() as u64)?;
    write_u64(w, net.n() as u64)?;
    write_f64_slice(w, net.w1().as_slice().expect("w1 is contiguous"))?;
    write_f64_slice(w, net.w2().as_slice().expect("w2 is contiguous"))?;
    Ok(())
}

/// Reads weights written by [`write_relu_net`].
pub fn read_relu_net<R: Read>(r: &mut R) -> Result<ReluNetWeights> {
    let header = read_header_line(r).map_err(|e| Error::Parse(format!("net header: {e}")))?;
    if header.trim() != RELU_MAGIC {
        return Err(Error::Parse(format!(
            "bad magic `{header}`, expected `{RELU_MAGIC}`"
        )));
    }
    let k = read_u64(r).map_err(|e| Error::Parse(format!("net dims: {e}")))? as usize;
    let h = read_u64(r).map_err(|e| Error::Parse(format!("net dims: {e}")))? as usize;
    let n = read_u64(r).map_err(|e| Error::Parse(format!("net dims: {e}")))? as usize;
    let w1 = read_f64_vec(r, h * k).map_err(|e| Error::Parse(format!("net payload: {e}")))?;
    let w2 = read_f64_vec(r, n * h).map_err(|e| Error::Parse(format!("net payload: {e}")))?;
    ReluNetWeights::new(
        Array2::from_shape_vec((h, k), w1).expect("length checked above"),
        Array2::from_shape_vec((n, h), w2).expect("length checked above"),
    )
}

pub fn write_relu_net_to_path(path: &Path, net: &ReluNetWeights) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_relu_net(&mut w, net).map_err(|e| Error::io(path, e))
}

pub fn read_relu_net_from_path(path: &Path) -> Result<ReluNetWeights> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_relu_net(&mut BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{spiked_wigner_matrix, GroundTruth};
    use crate::rng::Rng;
    use ndarray::Array1;

    #[test]
    fn matrix_round_trip_is_exact() {
        let mut rng = Rng::new(Seed::new(20, 0));
        let x = Array1::from_shape_fn(6, |_| rng.gaussian());
        let x = crate::linalg::normalized(x.view()).unwrap();
        let (matrix, _) = spiked_wigner_matrix(&x, 2.0, Seed::new(20, 1)).unwrap();

        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &matrix).unwrap();
        let back = read_matrix(&mut bytes.as_slice()).unwrap();

        assert_eq!(back.n(), matrix.n());
        assert_eq!(back.m(), matrix.m());
        assert_eq!(back.provenance(), matrix.provenance());
        assert_eq!(back.seed(), matrix.seed());
        assert_eq!(back.v().as_slice().unwrap(), matrix.v().as_slice().unwrap());
    }

    #[test]
    fn population_matrix_round_trips_without_seed() {
        let truth = GroundTruth::new(crate::linalg::canonical(4, 1), 2.0, 0.5).unwrap();
        let matrix = crate::models::population_matrix(&truth);
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &matrix).unwrap();
        let back = read_matrix(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.seed(), None);
        assert_eq!(back.v().as_slice().unwrap(), matrix.v().as_slice().unwrap());
    }

    #[test]
    fn truncated_matrix_payload_is_a_parse_error() {
        let truth = GroundTruth::new(crate::linalg::canonical(4, 1), 2.0, 0.5).unwrap();
        let matrix = crate::models::population_matrix(&truth);
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &matrix).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            read_matrix(&mut bytes.as_slice()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn relu_net_round_trip_is_exact() {
        let net = ReluNetWeights::random(10, 5, 3, Seed::new(21, 0));
        let mut bytes = Vec::new();
        write_relu_net(&mut bytes, &net).unwrap();
        let back = read_relu_net(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.k(), 3);
        assert_eq!(back.h(), 5);
        assert_eq!(back.n(), 10);
        assert_eq!(back.w1().as_slice().unwrap(), net.w1().as_slice().unwrap());
        assert_eq!(back.w2().as_slice().unwrap(), net.w2().as_slice().unwrap());
    }
}
