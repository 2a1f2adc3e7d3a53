//! Corpus persistence. A corpus directory holds three files, all plain text
//! so corpora stay diffable and portable:
//!
//! - `manifest.json` — the [`SuiteConfig`] that regenerates the suite;
//! - `program.txt` — the constraint program in the crate's text format;
//! - `boards.jsonl` — one JSON [`BoardRecord`] per line, in suite order.
//!
//! Records carry the full label vector plus the evidence mask; the soft
//! distribution is optional (complete labels imply a one-hot). Loading
//! re-normalizes slightly-off rows (sum within 1e-6 of 1) and reports that
//! it did; rows further off, or with negative entries, are rejected.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::SoftAssignment;
use crate::bench::SuiteConfig;
use crate::format::ParseError;
use crate::program::ConstraintProgram;

/// Loaded rows may be renormalized when their sum is within this of 1.
pub const LOAD_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file} line {line}: {source}")]
    Record {
        file: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error("manifest: {0}")]
    Manifest(serde_json::Error),
    #[error("program: {0}")]
    Program(#[from] ParseError),
    #[error("board {board} row {row}: negative entry")]
    NegativeEntry { board: usize, row: usize },
    #[error("board {board} row {row}: sum {sum} too far from 1 to renormalize")]
    BadRowSum { board: usize, row: usize, sum: f64 },
    #[error("board {board}: dist is {got} rows, expected {expected}")]
    DistShape { board: usize, expected: usize, got: usize },
    #[error("board {board}: no dist and labels are incomplete")]
    NoDistribution { board: usize },
}

/// One stored board: labels, evidence mask, and optionally the soft rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardRecord {
    pub n: usize,
    pub k: usize,
    /// 0/1 per position; u8 keeps the JSON compact.
    pub mask: Vec<u8>,
    /// `-1` for unknown.
    pub labels: Vec<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    /// Inline constraint program (text format); corpus records omit it and
    /// rely on the directory's `program.txt` instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
}

impl BoardRecord {
    /// The stored distribution, or a one-hot from complete labels. The flag
    /// reports whether any row needed renormalizing.
    pub fn to_assignment(&self, board: usize) -> Result<(SoftAssignment, bool), FileError> {
        let Some(dist) = &self.dist else {
            if self.labels.iter().any(|&l| l < 0) {
                return Err(FileError::NoDistribution { board });
            }
            let a = SoftAssignment::one_hot(&self.labels, self.k)
                .expect("complete labels produce a valid one-hot");
            return Ok((a, false));
        };
        if dist.len() != self.n {
            return Err(FileError::DistShape {
                board,
                expected: self.n,
                got: dist.len(),
            });
        }
        let mut renormalized = false;
        let mut data = Vec::with_capacity(self.n * self.k);
        for (row, values) in dist.iter().enumerate() {
            if values.len() != self.k {
                return Err(FileError::DistShape {
                    board,
                    expected: self.n,
                    got: dist.len(),
                });
            }
            if values.iter().any(|&v| v < 0.0) {
                return Err(FileError::NegativeEntry { board, row });
            }
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > LOAD_SUM_TOL {
                return Err(FileError::BadRowSum { board, row, sum });
            }
            if sum != 1.0 {
                renormalized = true;
            }
            data.extend(values.iter().map(|&v| v / sum));
        }
        let a = SoftAssignment::new(self.n, self.k, data)
            .expect("renormalized rows are stochastic");
        Ok((a, renormalized))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: SuiteConfig,
    pub program: ConstraintProgram,
    pub boards: Vec<BoardRecord>,
}

/// Write `manifest.json`, `program.txt`, and `boards.jsonl` under `dir`,
/// creating it if needed. Output is byte-stable for identical input.
pub fn save_corpus(dir: &Path, corpus: &Corpus) -> Result<(), FileError> {
    fs::create_dir_all(dir)?;
    let manifest =
        serde_json::to_string_pretty(&corpus.manifest).map_err(FileError::Manifest)?;
    fs::write(dir.join("manifest.json"), manifest + "\n")?;
    fs::write(
        dir.join("program.txt"),
        crate::format::serialize_program(&corpus.program),
    )?;
    let mut out = fs::File::create(dir.join("boards.jsonl"))?;
    for record in &corpus.boards {
        let line = serde_json::to_string(record).expect("records always serialize");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn load_corpus(dir: &Path) -> Result<Corpus, FileError> {
    let manifest: SuiteConfig =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)
            .map_err(FileError::Manifest)?;
    let program: ConstraintProgram =
        fs::read_to_string(dir.join("program.txt"))?.parse()?;
    let file = dir.join("boards.jsonl");
    let reader = BufReader::new(fs::File::open(&file)?);
    let mut boards = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BoardRecord =
            serde_json::from_str(&line).map_err(|source| FileError::Record {
                file: file.display().to_string(),
                line: idx + 1,
                source,
            })?;
        boards.push(record);
    }
    Ok(Corpus { manifest, program, boards })
}

/// Single standalone board file: one pretty-printed record.
pub fn save_board(path: &Path, record: &BoardRecord) -> Result<(), FileError> {
    let text = serde_json::to_string_pretty(record).expect("records always serialize");
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_board(path: &Path) -> Result<BoardRecord, FileError> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|source| FileError::Record {
        file: path.display().to_string(),
        line: 1,
        source,
    })
}

/// Generate the full corpus for a suite: solved boards, clue masks, and
/// labels (dist omitted — masks plus labels regenerate everything).
pub fn build_corpus(suite: &SuiteConfig) -> Corpus {
    let program = ConstraintProgram::sudoku(suite.box_size);
    let n = program.positions();
    let boards = (0..suite.count)
        .map(|i| {
            let board = crate::oracle::generate_solution(suite.box_size, suite.board_seed(i));
            let mask = crate::oracle::random_clue_mask(n, suite.clue_count, suite.mask_seed(i));
            BoardRecord {
                n,
                k: board.k,
                mask: mask.iter().map(|&m| m as u8).collect(),
                labels: board.cells,
                dist: None,
                program: None,
            }
        })
        .collect();
    Corpus { manifest: *suite, program, boards }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("softcsp-files-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn corpus_round_trips() {
        let suite = SuiteConfig { box_size: 2, count: 5, clue_count: 6, seed: 77 };
        let corpus = build_corpus(&suite);
        let dir = tmp_dir("roundtrip");
        save_corpus(&dir, &corpus).unwrap();
        let loaded = load_corpus(&dir).unwrap();
        assert_eq!(loaded, corpus);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn saves_are_byte_identical() {
        let suite = SuiteConfig { box_size: 2, count: 3, clue_count: 5, seed: 8 };
        let corpus = build_corpus(&suite);
        let (a, b) = (tmp_dir("bytes-a"), tmp_dir("bytes-b"));
        save_corpus(&a, &corpus).unwrap();
        save_corpus(&b, &corpus).unwrap();
        for f in ["manifest.json", "program.txt", "boards.jsonl"] {
            assert_eq!(
                fs::read(a.join(f)).unwrap(),
                fs::read(b.join(f)).unwrap(),
                "{f} differs between identical saves"
            );
        }
        fs::remove_dir_all(&a).unwrap();
        fs::remove_dir_all(&b).unwrap();
    }

    #[test]
    fn complete_labels_become_one_hot() {
        let record = BoardRecord {
            n: 2,
            k: 2,
            mask: vec![1, 0],
            labels: vec![0, 1],
            dist: None,
            program: None,
        };
        let (a, renorm) = record.to_assignment(0).unwrap();
        assert!(!renorm);
        assert_eq!(a.row(0), &[1.0, 0.0]);
        assert_eq!(a.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn missing_dist_with_holes_is_an_error() {
        let record = BoardRecord {
            n: 2,
            k: 2,
            mask: vec![1, 0],
            labels: vec![0, -1],
            dist: None,
            program: None,
        };
        assert!(matches!(
            record.to_assignment(4),
            Err(FileError::NoDistribution { board: 4 })
        ));
    }

    #[test]
    fn slightly_off_rows_are_renormalized() {
        let record = BoardRecord {
            n: 1,
            k: 2,
            mask: vec![0],
            labels: vec![-1],
            dist: Some(vec![vec![0.6, 0.4 + 5e-7]]),
            program: None,
        };
        let (a, renorm) = record.to_assignment(0).unwrap();
        assert!(renorm, "off-by-5e-7 row should be flagged");
        assert!((a.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn far_off_rows_are_rejected() {
        let record = BoardRecord {
            n: 1,
            k: 2,
            mask: vec![0],
            labels: vec![-1],
            dist: Some(vec![vec![0.6, 0.6]]),
            program: None,
        };
        assert!(matches!(
            record.to_assignment(0),
            Err(FileError::BadRowSum { board: 0, row: 0, .. })
        ));
        let negative = BoardRecord {
            dist: Some(vec![vec![1.2, -0.2]]),
            ..record
        };
        assert!(matches!(
            negative.to_assignment(0),
            Err(FileError::NegativeEntry { board: 0, row: 0 })
        ));
    }

    #[test]
    fn standalone_board_round_trips() {
        let program = ConstraintProgram::sudoku(2);
        let record = BoardRecord {
            n: 16,
            k: 4,
            mask: vec![0; 16],
            labels: vec![-1; 16],
            dist: Some(vec![vec![0.25; 4]; 16]),
            program: Some(crate::format::serialize_program(&program)),
        };
        let dir = tmp_dir("standalone");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("board.json");
        save_board(&path, &record).unwrap();
        let loaded = load_board(&path).unwrap();
        assert_eq!(loaded, record);
        let parsed: ConstraintProgram = loaded.program.unwrap().parse().unwrap();
        assert_eq!(parsed, program);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn record_lines_report_their_position() {
        let suite = SuiteConfig { box_size: 2, count: 1, clue_count: 4, seed: 1 };
        let corpus = build_corpus(&suite);
        let dir = tmp_dir("badline");
        save_corpus(&dir, &corpus).unwrap();
        let path = dir.join("boards.jsonl");
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{not json}\n");
        fs::write(&path, text).unwrap();
        match load_corpus(&dir) {
            Err(FileError::Record { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a record error, got {other:?}"),
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
