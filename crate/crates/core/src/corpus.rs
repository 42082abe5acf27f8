//! Token-id sentences, their file format, and the synthetic toy corpus.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

pub const TOKEN_FILE_MAGIC: &str = "RRAE-TOK1";

/// A sentence as vocabulary ids, ending with exactly one end-of-sentence id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSequence(Vec<usize>);

impl TokenSequence {
    pub fn new(ids: Vec<usize>, eos: usize) -> Result<Self> {
        match ids.iter().position(|&i| i == eos) {
            Some(p) if p + 1 == ids.len() => Ok(TokenSequence(ids)),
            _ => Err(Error::Validation(
                "token sequence must contain exactly one end-of-sentence id, in last position".into(),
            )),
        }
    }

    /// Appends the end-of-sentence id to `content`.
    pub fn from_content(mut content: Vec<usize>, eos: usize) -> Result<Self> {
        content.push(eos);
        Self::new(content, eos)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    /// Number of positions including the end-of-sentence marker.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of words before the end-of-sentence marker.
    pub fn content_len(&self) -> usize {
        self.0.len() - 1
    }
}

pub fn write_token_file(path: &Path, vocab_hash: &str, sentences: &[TokenSequence]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{TOKEN_FILE_MAGIC} {vocab_hash}").map_err(io)?;
    for s in sentences {
        let line: Vec<String> = s.ids().iter().map(|i| i.to_string()).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a token-id file and checks it against `table`'s vocabulary hash.
pub fn read_token_file(path: &Path, table: &EmbeddingTable) -> Result<Vec<TokenSequence>> {
    let io = |e| Error::io(path, e);
    let name = path.display().to_string();
    let parse_err = |line: usize, msg: String| Error::Parse {
        source_name: name.clone(),
        line,
        msg,
    };
    let mut lines = BufReader::new(File::open(path).map_err(io)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty token file".into()))?
        .map_err(io)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(TOKEN_FILE_MAGIC) {
        return Err(parse_err(1, format!("expected `{TOKEN_FILE_MAGIC} <vocab-hash>` header")));
    }
    let hash = parts.next().unwrap_or("");
    if hash != table.vocab_hash() {
        return Err(Error::Validation(format!(
            "{name} was built for vocabulary {hash}, but the embeddings have {}",
            table.vocab_hash()
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let ids = line
            .split_whitespace()
            .map(|f| {
                f.parse::<usize>()
                    .ok()
                    .filter(|&id| id < table.len())
                    .ok_or_else(|| parse_err(lineno, format!("invalid token id `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let seq = TokenSequence::new(ids, table.eos_id()).map_err(|e| parse_err(lineno, e.to_string()))?;
        out.push(seq);
    }
    Ok(out)
}

/// Uniformly random sentences over the table's ordinary words (specials
/// excluded), with content lengths drawn uniformly from `min_len..=max_len`.
/// Sentences are distinct.
pub fn toy_corpus(table: &EmbeddingTable, n: usize, min_len: usize, max_len: usize, seed: u64) -> Result<Vec<TokenSequence>> {
    if min_len == 0 || min_len > max_len {
        return Err(Error::Usage(format!("invalid length range {min_len}..={max_len}")));
    }
    let words: Vec<usize> = (0..table.len())
        .filter(|i| !table.special_ids().contains(i))
        .collect();
    if words.is_empty() {
        return Err(Error::Usage("table has no ordinary words".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 100 * n + 1000 {
            return Err(Error::Usage(format!("could not draw {n} distinct sentences")));
        }
        let len = rng.random_range(min_len..=max_len);
        let content: Vec<usize> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
        if seen.insert(content.clone()) {
            out.push(TokenSequence::from_content(content, table.eos_id())?);
        }
    }
    Ok(out)
}
