//! Sentence-vector files: a text format (`RRAE-SV1 <dim>` header, one vector
//! per line) and a float32 binary mirror.

use std::fmt::Write as _;
use std::path::Path;

use crate::embeddings::ByteReader;
use crate::error::{Error, Result};
use crate::numerics::Real;

pub const SV_TEXT_MAGIC: &str = "RRAE-SV1";
pub const SV_BINARY_MAGIC: &[u8] = b"RRAE-SV1B";

pub fn write_vectors_text(path: &Path, dim: usize, vectors: &[Vec<Real>]) -> Result<()> {
    let mut s = format!("{SV_TEXT_MAGIC} {dim}\n");
    for v in vectors {
        check_dim(v, dim, path)?;
        let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_vectors_binary(path: &Path, dim: usize, vectors: &[Vec<Real>]) -> Result<()> {
    let mut b = SV_BINARY_MAGIC.to_vec();
    b.extend_from_slice(&(dim as u32).to_le_bytes());
    b.extend_from_slice(&(vectors.len() as u64).to_le_bytes());
    for v in vectors {
        check_dim(v, dim, path)?;
        for &x in v {
            b.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    std::fs::write(path, b).map_err(|e| Error::io(path, e))
}

fn check_dim(v: &[Real], dim: usize, path: &Path) -> Result<()> {
    if v.len() != dim {
        return Err(Error::shape(
            "write_vectors",
            format!("dim {dim}"),
            format!("vector of length {} for {}", v.len(), path.display()),
        ));
    }
    Ok(())
}

/// Reads either format, detected by magic. Returns the dimension and vectors.
pub fn read_vectors(path: &Path) -> Result<(usize, Vec<Vec<Real>>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    if bytes.starts_with(SV_BINARY_MAGIC) {
        let mut r = ByteReader::new(&bytes);
        r.take(SV_BINARY_MAGIC.len());
        let bad = || Error::Validation(format!("{name}: truncated sentence-vector file"));
        let dim = r.u32().ok_or_else(bad)? as usize;
        let n = r.u64().ok_or_else(bad)? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = r.take(dim * 4).ok_or_else(bad)?;
            out.push(
                raw.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as Real)
                    .collect(),
            );
        }
        if r.position() != bytes.len() {
            return Err(Error::Validation(format!("{name}: trailing bytes after {n} vectors")));
        }
        return Ok((dim, out));
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        source_name: name.clone(),
        line: 1,
        msg: "not a sentence-vector file".into(),
    })?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        source_name: name.clone(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let dim = match header.split_whitespace().collect::<Vec<_>>()[..] {
        [SV_TEXT_MAGIC, d] => d
            .parse::<usize>()
            .map_err(|_| parse_err(1, format!("bad dimension `{d}`")))?,
        _ => return Err(parse_err(1, format!("expected `{SV_TEXT_MAGIC} <dim>` header"))),
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let v = line
            .split_whitespace()
            .map(|f| f.parse::<Real>().map_err(|_| parse_err(i + 2, format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != dim {
            return Err(parse_err(i + 2, format!("expected {dim} components, found {}", v.len())));
        }
        out.push(v);
    }
    Ok((dim, out))
}
