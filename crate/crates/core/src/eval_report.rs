//! Length curves and input/output sentence tables.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::TokenSequence;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::trainer::{evaluate, rate, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthRecord {
    /// Words before the end-of-sentence marker.
    pub length: usize,
    pub matched_word_rate: f64,
    pub exact_sentence_rate: f64,
    pub n: usize,
}

pub fn length_curves(params: &ModelParams, dataset: &[TokenSequence], table: &EmbeddingTable) -> Result<Vec<LengthRecord>> {
    Ok(curves_from_report(&evaluate(params, dataset, table)?))
}

pub fn curves_from_report(report: &EvalReport) -> Vec<LengthRecord> {
    report
        .buckets
        .iter()
        .map(|(&length, b)| LengthRecord {
            length,
            matched_word_rate: rate(b.matched_words, b.words),
            exact_sentence_rate: rate(b.exact_sentences, b.sentences),
            n: b.sentences,
        })
        .collect()
}

pub const CURVES_HEADER: &str = "length,matched_word_rate,exact_sentence_rate,n";

pub fn curves_csv(records: &[LengthRecord]) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for r in records {
        writeln!(s, "{},{},{},{}", r.length, r.matched_word_rate, r.exact_sentence_rate, r.n).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceRecord {
    pub input: Vec<String>,
    pub output: Vec<String>,
    /// Positions (end-of-sentence marker included) where the ids differ.
    pub mismatch_positions: Vec<usize>,
}

impl SentenceRecord {
    pub fn new(input: &[usize], output: &[usize], table: &EmbeddingTable) -> Self {
        let words = |ids: &[usize]| ids.iter().map(|&i| table.word(i).to_string()).collect();
        let n = input.len().max(output.len());
        SentenceRecord {
            input: words(input),
            output: words(output),
            mismatch_positions: (0..n).filter(|&i| input.get(i) != output.get(i)).collect(),
        }
    }
}

/// Reconstructs a seeded random sample of `n` sentences.
pub fn sentence_table(
    params: &ModelParams,
    dataset: &[TokenSequence],
    table: &EmbeddingTable,
    n: usize,
    seed: u64,
) -> Result<Vec<SentenceRecord>> {
    sentence_table_with(dataset, table, n, seed, |s| {
        Ok(model::reconstruct(params, table, s.ids())?.ids)
    })
}

/// [`sentence_table`] over an arbitrary reconstruction function.
pub fn sentence_table_with<F>(
    dataset: &[TokenSequence],
    table: &EmbeddingTable,
    n: usize,
    seed: u64,
    reconstruct: F,
) -> Result<Vec<SentenceRecord>>
where
    F: Fn(&TokenSequence) -> Result<Vec<usize>>,
{
    if n > dataset.len() {
        return Err(Error::Usage(format!(
            "cannot sample {n} sentences from a dataset of {}",
            dataset.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, dataset.len(), n)
        .into_iter()
        .map(|i| {
            let s = &dataset[i];
            Ok(SentenceRecord::new(s.ids(), &reconstruct(s)?, table))
        })
        .collect()
}

pub const TABLE_HEADER: &str = "input\toutput\tmismatch_positions";

pub fn sentence_table_tsv(records: &[SentenceRecord]) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for r in records {
        let pos: Vec<String> = r.mismatch_positions.iter().map(|p| p.to_string()).collect();
        writeln!(s, "{}\t{}\t{}", r.input.join(" "), r.output.join(" "), pos.join(";")).unwrap();
    }
    s
}

/// Writes `length_curves.csv` and `sentences.tsv` into `dir`.
pub fn write_report(dir: &Path, curves: &[LengthRecord], sentences: &[SentenceRecord]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join("length_curves.csv");
    std::fs::write(&p, curves_csv(curves)).map_err(|e| Error::io(&p, e))?;
    let p = dir.join("sentences.tsv");
    std::fs::write(&p, sentence_table_tsv(sentences)).map_err(|e| Error::io(&p, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toy_corpus;
    use crate::embeddings::synthetic_table;
    use crate::model::ModelConfig;

    fn setup() -> (EmbeddingTable, Vec<TokenSequence>, ModelParams) {
        let t = synthetic_table(10, 4, 30.0, 2).unwrap();
        let data = toy_corpus(&t, 30, 1, 5, 3).unwrap();
        let p = ModelParams::init(ModelConfig::new(4, 6, 6).unwrap(), 4).unwrap();
        (t, data, p)
    }

    #[test]
    fn buckets_account_for_every_matched_word() {
        let (t, data, p) = setup();
        let curves = length_curves(&p, &data, &t).unwrap();
        let rep = evaluate(&p, &data, &t).unwrap();
        let total: f64 = curves
            .iter()
            .map(|r| r.matched_word_rate * (r.n * r.length) as f64)
            .sum();
        assert_eq!(total.round() as usize, rep.totals.matched_words);
        assert_eq!(curves.iter().map(|r| r.n).sum::<usize>(), data.len());
        for r in &curves {
            let only: Vec<TokenSequence> = data.iter().filter(|s| s.content_len() == r.length).cloned().collect();
            let sub = evaluate(&p, &only, &t).unwrap();
            assert_eq!(sub.matched_word_rate(), r.matched_word_rate);
            assert_eq!(sub.exact_sentence_rate(), r.exact_sentence_rate);
        }
    }

    #[test]
    fn single_length_and_perfect_model() {
        let (t, data, _) = setup();
        let three: Vec<TokenSequence> = data.iter().filter(|s| s.content_len() == 3).cloned().collect();
        let mut rep = EvalReport::default();
        for s in &three {
            rep.add(s, s.ids());
        }
        let curves = curves_from_report(&rep);
        assert_eq!(curves.len(), 1);
        assert_eq!((curves[0].matched_word_rate, curves[0].exact_sentence_rate), (1.0, 1.0));

        let perfect = sentence_table_with(&data, &t, 5, 1, |s| Ok(s.ids().to_vec())).unwrap();
        assert!(perfect.iter().all(|r| r.mismatch_positions.is_empty()));
    }

    #[test]
    fn one_word_off_is_flagged() {
        let (t, data, _) = setup();
        let rows = sentence_table_with(&data, &t, 4, 9, |s| {
            let mut out = s.ids().to_vec();
            out[0] = (out[0] + 1) % 10;
            Ok(out)
        })
        .unwrap();
        for r in &rows {
            assert_eq!(r.mismatch_positions, vec![0]);
        }
    }

    #[test]
    fn flags_match_recount_and_are_seeded() {
        let (t, data, p) = setup();
        let a = sentence_table(&p, &data, &t, 10, 5).unwrap();
        assert_eq!(a, sentence_table(&p, &data, &t, 10, 5).unwrap());
        for r in &a {
            let want: Vec<usize> = (0..r.input.len()).filter(|&i| r.input[i] != r.output[i]).collect();
            assert_eq!(r.mismatch_positions, want);
        }
        assert!(sentence_table(&p, &data, &t, 31, 5).is_err());
    }

    #[test]
    fn output_formats() {
        let recs = vec![LengthRecord {
            length: 3,
            matched_word_rate: 0.5,
            exact_sentence_rate: 0.25,
            n: 4,
        }];
        assert_eq!(curves_csv(&recs), "length,matched_word_rate,exact_sentence_rate,n\n3,0.5,0.25,4\n");
        let row = SentenceRecord {
            input: vec!["a".into(), "b".into()],
            output: vec!["a".into(), "c".into()],
            mismatch_positions: vec![1, 2],
        };
        assert_eq!(sentence_table_tsv(&[row]), "input\toutput\tmismatch_positions\na b\ta c\t1;2\n");
    }
}
