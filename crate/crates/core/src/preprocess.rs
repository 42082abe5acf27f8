//! Corpus pipeline: ASCII normalization, tokenization, punctuation
//! standardization, digit handling, phrase merging, dedup, length filter and
//! seeded splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{write_token_file, TokenSequence};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

pub const DEFAULT_PUNCTUATION: [&str; 11] = [".", ",", "!", "?", "\"", "'", "-", ":", ";", "(", ")"];

/// Stems whose `'s` is a contraction ("it's", "that's"), not a possessive.
const CONTRACTION_STEMS: [&str; 13] = [
    "it", "he", "she", "that", "what", "there", "here", "who", "where", "how", "let", "when", "why",
];

const DIGIT_WORDS: [&str; 10] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DigitMode {
    /// Digits 2-9 become words; 0 and 1 stay digits.
    #[default]
    #[value(name = "split01")]
    #[serde(rename = "split01")]
    Split01,
    /// Every digit becomes a word.
    Words,
    /// Digits stay digits.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Longest sentence kept, in words before the end-of-sentence marker.
    pub max_words: usize,
    /// Train, tune and test fractions.
    pub split_fractions: (f64, f64, f64),
    pub punctuation_set: Vec<String>,
    pub digit_mode: DigitMode,
    pub rng_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_words: 60,
            split_fractions: (0.98, 0.01, 0.01),
            punctuation_set: DEFAULT_PUNCTUATION.iter().map(|s| s.to_string()).collect(),
            digit_mode: DigitMode::Split01,
            rng_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.split_fractions;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::Config {
                field: "splits".into(),
                msg: format!("fractions must be positive and sum to 1, got {a}/{b}/{c}"),
            });
        }
        if !(a > b && a > c) {
            return Err(Error::Config {
                field: "splits".into(),
                msg: "the train fraction must be the largest".into(),
            });
        }
        if self.max_words == 0 {
            return Err(Error::Config {
                field: "max_words".into(),
                msg: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

fn map_special_char(c: char) -> Option<&'static str> {
    Some(match c {
        '\u{2010}'..='\u{2015}' | '\u{2212}' | '\u{fe58}' | '\u{fe63}' | '\u{ff0d}' => "-",
        '\u{201c}' | '\u{201d}' | '\u{201e}' | '\u{201f}' | '\u{00ab}' | '\u{00bb}' | '\u{2033}' | '\u{ff02}' => "\"",
        '\u{2018}' | '\u{2019}' | '\u{201a}' | '\u{201b}' | '\u{2039}' | '\u{203a}' | '\u{2032}' | '\u{00b4}' => "'",
        '\u{2026}' => "...",
        '\u{00a0}' | '\u{2000}'..='\u{200a}' | '\u{202f}' | '\u{3000}' => " ",
        '\u{00df}' => "ss",
        '\u{00e6}' => "ae",
        '\u{00c6}' => "AE",
        '\u{0153}' => "oe",
        '\u{0152}' => "OE",
        '\u{00f8}' => "o",
        '\u{00d8}' => "O",
        '\u{0142}' => "l",
        '\u{0141}' => "L",
        '\u{0111}' | '\u{00f0}' => "d",
        '\u{0110}' | '\u{00d0}' => "D",
        '\u{00fe}' => "th",
        '\u{00de}' => "Th",
        '\u{0131}' => "i",
        _ => return None,
    })
}

/// Transliterates to ASCII: accents are stripped, typographic quotes,
/// dashes and spaces become their ASCII forms, a few ligatures are spelled
/// out, and anything else outside ASCII is removed.
pub fn normalize_ascii(text: &str) -> String {
    if text.is_ascii() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii() {
            out.push(c);
        } else if let Some(s) = map_special_char(c) {
            out.push_str(s);
        } else {
            out.extend(c.nfd().filter(|d| d.is_ascii() && !is_combining_mark(*d)));
        }
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Rule-based tokenizer.
///
/// Whitespace separates chunks. Leading and trailing punctuation is split off
/// (a run of one repeated character stays one token, so `...` is a single
/// token). Inside a word, hyphen runs become their own token. A possessive
/// `'s` becomes a separate `s` token unless the stem is a pronoun-like word,
/// in which case it is a contraction and stays attached, like `wasn't`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        tokenize_chunk(&chars, &mut out);
    }
    out
}

fn tokenize_chunk(chars: &[char], out: &mut Vec<String>) {
    let start = chars.iter().position(|&c| is_word_char(c)).unwrap_or(chars.len());
    let end = chars.iter().rposition(|&c| is_word_char(c)).map_or(start, |p| p + 1);
    push_punct_runs(&chars[..start], out);
    if start < end {
        split_core(&chars[start..end], out);
    }
    push_punct_runs(&chars[end.max(start)..], out);
}

fn push_punct_runs(chars: &[char], out: &mut Vec<String>) {
    let mut i = 0;
    while i < chars.len() {
        let mut j = i + 1;
        while j < chars.len() && chars[j] == chars[i] {
            j += 1;
        }
        out.push(chars[i..j].iter().collect());
        i = j;
    }
}

fn split_core(chars: &[char], out: &mut Vec<String>) {
    if !chars.contains(&'-') {
        push_word(chars.iter().collect(), out);
        return;
    }
    let mut i = 0;
    while i < chars.len() {
        let hyphen = chars[i] == '-';
        let mut j = i;
        while j < chars.len() && (chars[j] == '-') == hyphen {
            j += 1;
        }
        if hyphen {
            out.push(chars[i..j].iter().collect());
        } else {
            tokenize_chunk(&chars[i..j], out);
        }
        i = j;
    }
}

fn push_word(word: String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let lower = word.to_ascii_lowercase();
    if let Some(stem) = lower.strip_suffix("'s") {
        if !stem.is_empty() && !CONTRACTION_STEMS.contains(&stem) {
            let n = word.len() - 2;
            // the stem may now end in punctuation, as in `a{'s`
            let stem: Vec<char> = word[..n].chars().collect();
            tokenize_chunk(&stem, out);
            out.push(word[n + 1..].to_string());
            return;
        }
    }
    out.push(word);
}

fn is_punct_token(t: &str) -> bool {
    !t.is_empty() && !t.chars().any(is_word_char)
}

/// Maps punctuation variants onto the allowed set and drops punctuation that
/// has no place in it. Word tokens pass through untouched.
pub fn standardize_punctuation<S: AsRef<str>>(tokens: &[String], allowed: &[S]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        if !is_punct_token(t) {
            out.push(t.clone());
            continue;
        }
        let ascii = normalize_ascii(t);
        let first = match ascii.chars().next() {
            Some(c) => c,
            None => continue,
        };
        let uniform = ascii.chars().all(|c| c == first);
        let mapped: String = match (first, uniform) {
            ('-' | '~', true) => "-".into(),
            ('`', true) => "\"".into(),
            ('\'', true) if ascii.len() >= 2 => "\"".into(),
            ('.', true) => ".".into(),
            ('!' | '?', true) => first.to_string(),
            ('[' | '{' | '<', true) => "(".into(),
            (']' | '}' | '>', true) => ")".into(),
            _ => ascii,
        };
        if allowed.iter().any(|a| a.as_ref() == mapped) {
            out.push(mapped);
        }
    }
    out
}

/// Splits numbers into digit tokens (with `.`, `,` or `:` separators as their
/// own tokens) and spells digits out according to `mode`.
pub fn digits_to_words(tokens: &[String], mode: DigitMode) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        if !is_number(t) {
            out.push(t.clone());
            continue;
        }
        for c in t.chars() {
            match c.to_digit(10) {
                Some(d) => {
                    let word = match mode {
                        DigitMode::Literal => None,
                        DigitMode::Split01 if d < 2 => None,
                        _ => Some(DIGIT_WORDS[d as usize]),
                    };
                    out.push(word.map_or_else(|| c.to_string(), str::to_string));
                }
                None => out.push(c.to_string()),
            }
        }
    }
    out
}

fn is_number(t: &str) -> bool {
    let b = t.as_bytes();
    !b.is_empty()
        && b[0].is_ascii_digit()
        && b[b.len() - 1].is_ascii_digit()
        && b.iter().all(|c| c.is_ascii_digit() || matches!(c, b'.' | b',' | b':'))
        && !b.windows(2).any(|w| !w[0].is_ascii_digit() && !w[1].is_ascii_digit())
}

/// Greedy leftmost-longest merge of adjacent tokens whose underscore-joined
/// form is in the vocabulary.
pub fn merge_phrases(tokens: &[String], table: &EmbeddingTable) -> Vec<String> {
    let max_span = table
        .words()
        .iter()
        .map(|w| w.split('_').filter(|p| !p.is_empty()).count())
        .max()
        .unwrap_or(1);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut taken = 1;
        for span in (2..=max_span.min(tokens.len() - i)).rev() {
            if table.contains(&tokens[i..i + span].join("_")) {
                taken = span;
                break;
            }
        }
        out.push(if taken == 1 {
            tokens[i].clone()
        } else {
            tokens[i..i + taken].join("_")
        });
        i += taken;
    }
    out
}

/// Every text stage of the pipeline, in order.
pub fn process_sentence(text: &str, cfg: &PipelineConfig, table: &EmbeddingTable) -> Vec<String> {
    let tokens = tokenize(&normalize_ascii(text));
    let tokens = standardize_punctuation(&tokens, &cfg.punctuation_set);
    let tokens = digits_to_words(&tokens, cfg.digit_mode);
    merge_phrases(&tokens, table)
}

/// Maps tokens to ids (unknown tokens to UNK) and appends EOS.
pub fn encode_tokens<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> TokenSequence {
    let ids = tokens
        .iter()
        .map(|t| table.id(t.as_ref()).unwrap_or(table.unk_id()))
        .collect();
    TokenSequence::from_content(ids, table.eos_id()).expect("only the appended id is EOS")
}

/// Maps ids back to tokens, dropping the final EOS.
pub fn decode_tokens(seq: &TokenSequence, table: &EmbeddingTable) -> Vec<String> {
    seq.ids()[..seq.content_len()]
        .iter()
        .map(|&i| table.word(i).to_string())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub input_lines: usize,
    pub empty_removed: usize,
    pub duplicates_removed: usize,
    pub too_long_removed: usize,
    /// Sentences kept after dedup and filtering.
    pub sentences: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
    pub oov_rate: f64,
    pub split_sizes: (usize, usize, usize),
    pub token_histogram: BTreeMap<String, usize>,
    /// Keyed by words before the end-of-sentence marker.
    pub length_histogram: BTreeMap<usize, usize>,
}

/// A processed sentence: its tokens and their ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub ids: TokenSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Sentence>,
    pub tune: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub stats: CorpusStats,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(f)
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.map_err(|e| Error::Parse {
                source_name: path.display().to_string(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Runs the full pipeline over one-sentence-per-line inputs.
pub fn build_dataset(inputs: &[PathBuf], cfg: &PipelineConfig, table: &EmbeddingTable) -> Result<Dataset> {
    cfg.validate()?;
    let per_file = inputs
        .par_iter()
        .map(|p| {
            let lines = read_lines(p)?;
            Ok(lines.iter().map(|l| process_sentence(l, cfg, table)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut stats = CorpusStats::default();
    let mut unique = BTreeSet::new();
    for tokens in per_file.into_iter().flatten() {
        stats.input_lines += 1;
        if tokens.is_empty() {
            stats.empty_removed += 1;
        } else if tokens.len() > cfg.max_words {
            stats.too_long_removed += 1;
        } else if !unique.insert(tokens) {
            stats.duplicates_removed += 1;
        }
    }
    // `unique` is sorted, so the split depends only on content and seed.
    let mut sentences: Vec<Vec<String>> = unique.into_iter().collect();
    sentences.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.rng_seed));
    let n = sentences.len();
    let n_tune = (n as f64 * cfg.split_fractions.1).round() as usize;
    let n_test = ((n as f64 * cfg.split_fractions.2).round() as usize).min(n - n_tune);
    let n_train = n - n_tune - n_test;

    for tokens in &sentences {
        stats.tokens += tokens.len();
        *stats.length_histogram.entry(tokens.len()).or_default() += 1;
        for t in tokens {
            *stats.token_histogram.entry(t.clone()).or_default() += 1;
            if !table.contains(t) {
                stats.oov_tokens += 1;
            }
        }
    }
    stats.sentences = n;
    stats.oov_rate = if stats.tokens == 0 {
        0.0
    } else {
        stats.oov_tokens as f64 / stats.tokens as f64
    };
    stats.split_sizes = (n_train, n_tune, n_test);

    let mut sents = sentences.into_iter().map(|tokens| {
        let ids = encode_tokens(&tokens, table);
        Sentence { tokens, ids }
    });
    let train = sents.by_ref().take(n_train).collect();
    let tune = sents.by_ref().take(n_tune).collect();
    let test = sents.collect();
    Ok(Dataset { train, tune, test, stats })
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "tune", "test"];

/// Writes `<split>.tok`, `<split>.txt` and `stats.json` into `dir`.
pub fn write_dataset(ds: &Dataset, table: &EmbeddingTable, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, split) in SPLIT_NAMES.iter().zip([&ds.train, &ds.tune, &ds.test]) {
        let ids: Vec<TokenSequence> = split.iter().map(|s| s.ids.clone()).collect();
        write_token_file(&dir.join(format!("{name}.tok")), &table.vocab_hash(), &ids)?;
        let mut text = String::new();
        for s in split {
            text.push_str(&s.tokens.join(" "));
            text.push('\n');
        }
        let p = dir.join(format!("{name}.txt"));
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    let p = dir.join("stats.json");
    let json = serde_json::to_string_pretty(&ds.stats).expect("stats serialize");
    std::fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))
}
