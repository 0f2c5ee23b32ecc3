//! LIBSVM sparse text format and deterministic train/test splits.
//!
//! Each non-empty line is `<label> <index>:<value> <index>:<value> ...` with
//! 1-based, strictly increasing indices. Binary label sets such as `{-1, 1}`,
//! `{0, 1}` or `{1, 2}` are mapped to `{-1, +1}`, the numerically smaller
//! original label becoming `-1`.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("malformed token `{0}` (expected index:value)")]
    MalformedToken(String),
    #[error("feature index `{0}` is not a positive integer")]
    BadIndex(String),
    #[error("feature indices must increase strictly ({prev} then {got})")]
    NonIncreasingIndex { prev: u32, got: u32 },
    #[error("non-finite feature value `{0}`")]
    NonFiniteValue(String),
    #[error("label `{0}` is not a finite number")]
    BadLabel(String),
    #[error("more than two distinct labels (saw {0})")]
    NonBinaryLabels(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("read failed: {0}")]
    Io(String),
    #[error("train count {train_count} must lie strictly between 0 and {len}")]
    SplitOutOfRange { train_count: usize, len: usize },
    #[error("declared feature count {declared} is below the largest index {seen}")]
    FeatureCount { declared: usize, seen: usize },
}

impl DataError {
    pub fn line(&self) -> Option<usize> {
        match self {
            DataError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Class label normalized to `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "-1",
            Label::Positive => "+1",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: Label,
    /// `(index, value)` with 1-based, strictly increasing indices.
    pub features: Vec<(u32, f64)>,
}

impl Sample {
    /// Writes the dense feature vector (0-based) into `out`, which must hold at
    /// least the largest index.
    pub fn densify_into(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(idx, val) in &self.features {
            out[idx as usize - 1] = val;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseDataset {
    pub samples: Vec<Sample>,
    pub num_features: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    /// Widens the feature space, e.g. to align a train and a test file.
    pub fn with_num_features(mut self, declared: usize) -> Result<Self, DataError> {
        let seen = self.max_index();
        if declared < seen {
            return Err(DataError::FeatureCount { declared, seen });
        }
        self.num_features = declared;
        Ok(self)
    }

    fn max_index(&self) -> usize {
        self.samples
            .iter()
            .filter_map(|s| s.features.last().map(|&(i, _)| i as usize))
            .max()
            .unwrap_or(0)
    }

    fn subset(&self, indices: &[usize]) -> SparseDataset {
        SparseDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            num_features: self.num_features,
        }
    }

    /// Serializes back to LIBSVM text with `±1` labels.
    pub fn write_libsvm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.samples {
            write!(out, "{}", s.label)?;
            for (idx, val) in &s.features {
                write!(out, " {idx}:{val}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct RawSample {
    line: usize,
    label: f64,
    features: Vec<(u32, f64)>,
}

fn parse_line(line_no: usize, line: &str) -> Result<Option<RawSample>, DataError> {
    let err = |kind| DataError::Parse { line: line_no, kind };
    let mut tokens = line.split_ascii_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let label = label_tok
        .parse::<f64>()
        .ok()
        .filter(|l| l.is_finite())
        .ok_or_else(|| err(ParseErrorKind::BadLabel(label_tok.to_string())))?;
    let mut features = Vec::new();
    let mut prev = 0u32;
    for tok in tokens {
        let (idx_s, val_s) = tok
            .split_once(':')
            .ok_or_else(|| err(ParseErrorKind::MalformedToken(tok.to_string())))?;
        let idx = idx_s
            .parse::<u32>()
            .ok()
            .filter(|&i| i > 0)
            .ok_or_else(|| err(ParseErrorKind::BadIndex(idx_s.to_string())))?;
        let val = val_s
            .parse::<f64>()
            .map_err(|_| err(ParseErrorKind::MalformedToken(tok.to_string())))?;
        if !val.is_finite() {
            return Err(err(ParseErrorKind::NonFiniteValue(val_s.to_string())));
        }
        if idx <= prev {
            return Err(err(ParseErrorKind::NonIncreasingIndex { prev, got: idx }));
        }
        prev = idx;
        features.push((idx, val));
    }
    Ok(Some(RawSample { line: line_no, label, features }))
}

/// Parses LIBSVM text. Every failure carries the 1-based line number.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<SparseDataset, DataError> {
    let mut raw = Vec::new();
    let mut distinct: Vec<f64> = Vec::with_capacity(2);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => DataError::Parse {
                line: line_no,
                kind: ParseErrorKind::MalformedToken("<invalid UTF-8>".into()),
            },
            _ => DataError::Io(e.to_string()),
        })?;
        let Some(sample) = parse_line(line_no, &line)? else {
            continue;
        };
        if !distinct.contains(&sample.label) {
            if distinct.len() == 2 {
                let seen = format!("{}, {}, {}", distinct[0], distinct[1], sample.label);
                return Err(DataError::Parse { line: sample.line, kind: ParseErrorKind::NonBinaryLabels(seen) });
            }
            distinct.push(sample.label);
        }
        raw.push(sample);
    }
    let map_label = |value: f64| -> Label {
        match distinct.as_slice() {
            [only] => {
                if *only > 0.0 {
                    Label::Positive
                } else {
                    Label::Negative
                }
            }
            _ => {
                let low = distinct[0].min(distinct[1]);
                if value == low {
                    Label::Negative
                } else {
                    Label::Positive
                }
            }
        }
    };
    let samples: Vec<Sample> = raw
        .into_iter()
        .map(|r| Sample { label: map_label(r.label), features: r.features })
        .collect();
    let mut ds = SparseDataset { samples, num_features: 0 };
    ds.num_features = ds.max_index();
    Ok(ds)
}

pub fn parse_libsvm_str(text: &str) -> Result<SparseDataset, DataError> {
    parse_libsvm(text.as_bytes())
}

/// Train/test index partition. Seed 0 keeps file order; any other seed
/// shuffles with a seeded ChaCha generator first.
pub fn split_indices(len: usize, train_count: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if train_count == 0 || train_count >= len {
        return Err(DataError::SplitOutOfRange { train_count, len });
    }
    let mut order: Vec<usize> = (0..len).collect();
    if seed != 0 {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let test = order.split_off(train_count);
    Ok((order, test))
}

/// Splits a single-file dataset into `(train, test)`; both keep the parent's
/// feature count.
pub fn split(ds: &SparseDataset, train_count: usize, seed: u64) -> Result<(SparseDataset, SparseDataset), DataError> {
    let (train, test) = split_indices(ds.len(), train_count, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}
