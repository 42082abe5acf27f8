//! Word-vector dictionary, special vectors and nearest-word matching.
//!
//! Matching is by cosine similarity. The dictionary is stored once with unit
//! rows (transposed, `dim x V`), so matching `N` outputs is a single
//! `(N x dim) * (dim x V)` product followed by a per-row division by the
//! output norm.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, Matrix, Real};

pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BINARY_MAGIC: &[u8; 9] = b"RRAE-EMB1";

/// Seed used when a loaded file lacks the end-of-sentence or unknown-word rows.
pub const DEFAULT_SPECIAL_SEED: u64 = 0x5eed_e05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub word_id: usize,
    /// Cosine similarity between the output and `vectors[word_id]`.
    pub similarity: Real,
}

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
    norms: Vec<Real>,
    /// Unit-normalized dictionary, transposed to `dim x V`.
    unit_t: Matrix,
    eos: usize,
    unk: usize,
    special: Vec<usize>,
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.vectors == other.vectors
    }
}

impl EmbeddingTable {
    /// Builds a table from words and their vectors. Both the end-of-sentence
    /// and unknown-word tokens must be present.
    pub fn new(words: Vec<String>, vectors: Matrix) -> Result<Self> {
        let table = Self::build(words, vectors)?;
        table.require_specials()?;
        Ok(table)
    }

    /// Like [`Self::new`] but synthesizes missing EOS/UNK rows with
    /// moment-matched Gaussian vectors drawn from `seed`.
    pub fn with_specials(words: Vec<String>, vectors: Matrix, seed: u64) -> Result<Self> {
        let table = Self::build(words, vectors)?;
        let missing: Vec<&str> = [EOS_TOKEN, UNK_TOKEN]
            .into_iter()
            .filter(|t| !table.index.contains_key(*t))
            .collect();
        if missing.is_empty() {
            return Ok(table);
        }
        table.extend_with_specials(&missing, seed)
    }

    fn build(words: Vec<String>, vectors: Matrix) -> Result<Self> {
        if words.len() != vectors.rows() {
            return Err(Error::Validation(format!(
                "{} words but {} vectors",
                words.len(),
                vectors.rows()
            )));
        }
        if vectors.cols() == 0 {
            return Err(Error::Validation("embedding dimension must be positive".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!("invalid token {w:?} at row {i}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate token `{w}`")));
            }
        }
        let norms: Vec<Real> = vectors.iter_rows().map(norm).collect();
        if let Some(i) = norms.iter().position(|&n| !(n > 0.0 && n.is_finite())) {
            return Err(Error::Validation(format!(
                "vector for `{}` has zero or non-finite norm",
                words[i]
            )));
        }
        let mut unit_t = Matrix::zeros(vectors.cols(), vectors.rows());
        for (r, row) in vectors.iter_rows().enumerate() {
            for (c, v) in row.iter().enumerate() {
                unit_t.set(c, r, v / norms[r]);
            }
        }
        let eos = index.get(EOS_TOKEN).copied().unwrap_or(usize::MAX);
        let unk = index.get(UNK_TOKEN).copied().unwrap_or(usize::MAX);
        let special = words
            .iter()
            .enumerate()
            .filter(|(_, w)| *w == EOS_TOKEN || *w == UNK_TOKEN || is_punctuation_token(w))
            .map(|(i, _)| i)
            .collect();
        Ok(EmbeddingTable {
            words,
            index,
            vectors,
            norms,
            unit_t,
            eos,
            unk,
            special,
        })
    }

    fn require_specials(&self) -> Result<()> {
        for (tok, id) in [(EOS_TOKEN, self.eos), (UNK_TOKEN, self.unk)] {
            if id == usize::MAX {
                return Err(Error::Validation(format!("table is missing the `{tok}` token")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, id: usize) -> &[Real] {
        self.vectors.row(id)
    }

    pub fn norms(&self) -> &[Real] {
        &self.norms
    }

    pub fn eos_id(&self) -> usize {
        self.eos
    }

    pub fn unk_id(&self) -> usize {
        self.unk
    }

    /// EOS, UNK, punctuation tokens, and tokens added through
    /// [`Self::make_special_vectors`].
    pub fn special_ids(&self) -> &[usize] {
        &self.special
    }

    /// Short stable fingerprint of the vocabulary (word list and order).
    pub fn vocab_hash(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Returns a table extended with one random vector per token. Components
    /// are drawn i.i.d. from a Gaussian with the table's per-component mean
    /// and standard deviation.
    pub fn make_special_vectors(&self, tokens: &[&str], seed: u64) -> Result<EmbeddingTable> {
        let table = self.extend_with_specials(tokens, seed)?;
        table.require_specials()?;
        Ok(table)
    }

    fn extend_with_specials(&self, tokens: &[&str], seed: u64) -> Result<EmbeddingTable> {
        if self.is_empty() {
            return Err(Error::Validation(
                "cannot derive special-vector statistics from an empty table".into(),
            ));
        }
        for t in tokens {
            if self.contains(t) {
                return Err(Error::Validation(format!("special token `{t}` already in table")));
            }
        }
        let (mean, std) = component_moments(&self.vectors);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = self.words.clone();
        let mut data = self.vectors.data().to_vec();
        for t in tokens {
            for (m, s) in mean.iter().zip(&std) {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push((m + s * z) as Real);
            }
            words.push((*t).to_string());
        }
        let vectors = Matrix::from_vec(words.len(), self.dim(), data)?;
        let mut table = Self::build(words, vectors)?;
        let first_new = self.len();
        for id in first_new..table.len() {
            if !table.special.contains(&id) {
                table.special.push(id);
            }
        }
        for id in &self.special {
            if !table.special.contains(id) {
                table.special.push(*id);
            }
        }
        table.special.sort_unstable();
        Ok(table)
    }

    pub fn match_batch(&self, outputs: &Matrix) -> Result<Vec<MatchResult>> {
        match_batch(outputs, self)
    }

    pub fn match_vector(&self, output: &[Real]) -> Result<MatchResult> {
        let m = Matrix::from_vec(1, output.len(), output.to_vec())?;
        Ok(match_batch(&m, self)?.remove(0))
    }
}

/// Tokens made only of ASCII punctuation (other than `_`) are treated as special.
pub fn is_punctuation_token(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_ascii_punctuation() && c != '_')
}

fn component_moments(vectors: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = vectors.rows() as f64;
    let dim = vectors.cols();
    let mut mean = vec![0.0f64; dim];
    for row in vectors.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += *v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0f64; dim];
    for row in vectors.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (*v as f64 - m).powi(2);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    (mean, std)
}

/// Nearest dictionary word (by cosine) for every row of `outputs`. Ties go to
/// the lowest word index.
pub fn match_batch(outputs: &Matrix, table: &EmbeddingTable) -> Result<Vec<MatchResult>> {
    if outputs.cols() != table.dim() {
        return Err(Error::shape(
            "match_batch",
            outputs.shape(),
            format!("dictionary of dim {}", table.dim()),
        ));
    }
    let out_norms: Vec<Real> = outputs.iter_rows().map(norm).collect();
    if let Some(row) = out_norms.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::Match { row });
    }
    let scores = outputs.matmul(&table.unit_t)?;
    Ok(scores
        .iter_rows()
        .zip(&out_norms)
        .map(|(row, &n)| {
            let mut best = 0;
            for (j, &s) in row.iter().enumerate().skip(1) {
                if s > row[best] {
                    best = j;
                }
            }
            MatchResult {
                word_id: best,
                similarity: (row[best] / n).clamp(-1.0, 1.0),
            }
        })
        .collect())
}

/// True iff the nearest word to `output` is `target_id`.
pub fn is_match(output: &[Real], target_id: usize, table: &EmbeddingTable) -> Result<bool> {
    Ok(table.match_vector(output)?.word_id == target_id)
}

pub fn cosine(a: &[Real], b: &[Real]) -> Real {
    dot(a, b) / (norm(a) * norm(b))
}

/// Loads a table, detecting the binary format by its magic bytes when
/// `format` is `None`. Missing EOS/UNK rows are synthesized with
/// [`DEFAULT_SPECIAL_SEED`].
pub fn load_embeddings(path: &Path, format: Option<EmbeddingFormat>) -> Result<EmbeddingTable> {
    let format = match format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let (words, vectors) = match format {
        EmbeddingFormat::Text => read_text(path)?,
        EmbeddingFormat::Binary => read_binary(path)?,
    };
    EmbeddingTable::with_specials(words, vectors, DEFAULT_SPECIAL_SEED)
}

fn detect_format(path: &Path) -> Result<EmbeddingFormat> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; 9];
    let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(if n == 9 && &buf == BINARY_MAGIC {
        EmbeddingFormat::Binary
    } else {
        EmbeddingFormat::Text
    })
}

fn read_text(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let parse_err = |line: usize, msg: String| Error::Parse {
        source_name: name.clone(),
        line,
        msg,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let mut fields = header.split_whitespace();
    let mut header_num = |what: &str| -> Result<usize> {
        fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| parse_err(1, format!("header must be `V dim`; bad {what}")))
    };
    let v = header_num("V")?;
    let dim = header_num("dim")?;

    let mut words = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * dim);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line");
        let before = data.len();
        for f in fields {
            let x: f64 = f
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number `{f}`")))?;
            data.push(x as Real);
        }
        let got = data.len() - before;
        if got != dim {
            return Err(Error::Validation(format!(
                "{name}:{lineno}: `{word}` has {got} components, expected {dim}"
            )));
        }
        words.push(word.to_string());
    }
    if words.len() != v {
        return Err(Error::Validation(format!(
            "{name}: header declares {v} words but file has {}",
            words.len()
        )));
    }
    Ok((words, Matrix::from_vec(v, dim, data)?))
}

fn read_binary(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&bytes);
    let truncated = || Error::Validation(format!("{}: truncated binary embedding file", path.display()));
    if r.take(9).ok_or_else(truncated)? != BINARY_MAGIC {
        return Err(Error::Validation(format!("{}: bad magic", path.display())));
    }
    let v = r.u32().ok_or_else(truncated)? as usize;
    let dim = r.u32().ok_or_else(truncated)? as usize;
    let mut words = Vec::with_capacity(v);
    for _ in 0..v {
        let n = r.u32().ok_or_else(truncated)? as usize;
        let w = std::str::from_utf8(r.take(n).ok_or_else(truncated)?)
            .map_err(|_| Error::Validation(format!("{}: token is not UTF-8", path.display())))?;
        words.push(w.to_string());
    }
    let mut data = Vec::with_capacity(v * dim);
    for _ in 0..v * dim {
        let b = r.take(4).ok_or_else(truncated)?;
        data.push(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as Real);
    }
    Ok((words, Matrix::from_vec(v, dim, data)?))
}

pub fn save_embeddings(table: &EmbeddingTable, path: &Path, format: EmbeddingFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match format {
        EmbeddingFormat::Text => {
            writeln!(w, "{} {}", table.len(), table.dim()).map_err(io)?;
            for (word, row) in table.words.iter().zip(table.vectors.iter_rows()) {
                write!(w, "{word}").map_err(io)?;
                for x in row {
                    write!(w, " {x}").map_err(io)?;
                }
                writeln!(w).map_err(io)?;
            }
        }
        EmbeddingFormat::Binary => {
            w.write_all(BINARY_MAGIC).map_err(io)?;
            w.write_all(&(table.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(&(table.dim() as u32).to_le_bytes()).map_err(io)?;
            for word in &table.words {
                w.write_all(&(word.len() as u32).to_le_bytes()).map_err(io)?;
                w.write_all(word.as_bytes()).map_err(io)?;
            }
            for x in table.vectors.data() {
                w.write_all(&(*x as f32).to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    pub(crate) fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }
}

/// Deterministic toy dictionary: `n_words` words named `w000`, `w001`, ...
/// followed by EOS and UNK. Rows are Gaussian and accepted only if their
/// angle to every earlier row is at least `min_angle_deg`.
pub fn synthetic_table(n_words: usize, dim: usize, min_angle_deg: f64, seed: u64) -> Result<EmbeddingTable> {
    let total = n_words + 2;
    let max_cos = min_angle_deg.to_radians().cos();
    let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<Real>> = Vec::with_capacity(total);
    let mut attempts = 0usize;
    while rows.len() < total {
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(Error::Validation(format!(
                "could not place {total} vectors in {dim} dims at {min_angle_deg} degrees apart"
            )));
        }
        let v: Vec<Real> = (0..dim).map(|_| normal.sample(&mut rng) as Real).collect();
        if norm(&v) == 0.0 {
            continue;
        }
        if rows.iter().all(|r| cosine(r, &v) as f64 <= max_cos) {
            rows.push(v);
        }
    }
    let mut words: Vec<String> = (0..n_words).map(|i| format!("w{i:03}")).collect();
    words.push(EOS_TOKEN.to_string());
    words.push(UNK_TOKEN.to_string());
    EmbeddingTable::new(words, Matrix::from_rows(&rows)?)
}
