//! JSON file formats for masks, sequences, bases and factorization results.
//!
//! Rationals are strings in lowest terms (`"-1/16"`, `"3"`). Output is canonical: object keys are
//! sorted and mask entries appear in lexicographic index order, so identical inputs serialize to
//! identical bytes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::mask::{MatrixMask, MultiIndex, Orientation, VectorSequence};
use crate::rational::{format_rational, parse_rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub index: Vec<i64>,
    pub value: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskFile {
    pub s: usize,
    pub n: usize,
    pub d: usize,
    pub entries: Vec<MaskEntry>,
}

/// A mask after ingestion: support translated into `[0, N]^s`.
#[derive(Clone, Debug)]
pub struct ValidatedMask {
    pub mask: MatrixMask,
    pub shift: MultiIndex,
}

impl ValidatedMask {
    pub fn extent(&self) -> i64 {
        self.mask.extent()
    }
}

fn parse_matrix(rows: &[Vec<String>], n: usize, d: usize, at: &[i64]) -> Result<RatMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape(format!("entry at {at:?} is not {n}x{d}")));
    }
    let parsed = rows
        .iter()
        .map(|r| r.iter().map(|t| parse_rational(t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RatMatrix::from_rows(parsed)
}

fn format_matrix(m: &RatMatrix) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(format_rational).collect()).collect()
}

/// Parses and normalizes a mask description.
pub fn validate_mask(raw: &MaskFile) -> Result<ValidatedMask> {
    if raw.entries.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(raw.entries.len());
    for e in &raw.entries {
        if e.index.len() != raw.s {
            return Err(Error::Shape(format!("index {:?} does not have length s = {}", e.index, raw.s)));
        }
        if !seen.insert(e.index.clone()) {
            return Err(Error::DuplicateIndex(e.index.clone()));
        }
        entries.push((MultiIndex::new(e.index.clone()), parse_matrix(&e.value, raw.n, raw.d, &e.index)?));
    }
    let mask = MatrixMask::new(raw.s, raw.n, raw.d, entries)?;
    let (mask, shift) = mask.normalized();
    Ok(ValidatedMask { mask, shift })
}

impl MaskFile {
    pub fn from_mask(mask: &MatrixMask) -> Self {
        MaskFile {
            s: mask.dim(),
            n: mask.rows(),
            d: mask.cols(),
            entries: mask
                .entries()
                .iter()
                .map(|(k, v)| MaskEntry { index: k.components().to_vec(), value: format_matrix(v) })
                .collect(),
        }
    }
}

pub fn parse_mask_json(text: &str) -> Result<ValidatedMask> {
    let raw: MaskFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate_mask(&raw)
}

pub fn mask_to_json(mask: &MatrixMask) -> String {
    to_canonical_json(&MaskFile::from_mask(mask))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub index: Vec<i64>,
    pub value: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub s: usize,
    pub n: usize,
    #[serde(default = "default_orientation")]
    pub orientation: Orientation,
    pub entries: Vec<SequenceEntry>,
}

fn default_orientation() -> Orientation {
    Orientation::Row
}

impl SequenceFile {
    pub fn from_sequence(seq: &VectorSequence) -> Self {
        SequenceFile {
            s: seq.dim(),
            n: seq.width(),
            orientation: seq.orientation(),
            entries: seq
                .entries()
                .iter()
                .map(|(k, v)| SequenceEntry {
                    index: k.components().to_vec(),
                    value: v.iter().map(format_rational).collect(),
                })
                .collect(),
        }
    }

    pub fn to_sequence(&self) -> Result<VectorSequence> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let v = e.value.iter().map(|t| parse_rational(t)).collect::<Result<Vec<_>>>()?;
                Ok((MultiIndex::new(e.index.clone()), v))
            })
            .collect::<Result<Vec<_>>>()?;
        VectorSequence::new(self.s, self.n, self.orientation, entries)
    }
}

pub fn parse_sequence_json(text: &str) -> Result<VectorSequence> {
    let raw: SequenceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.to_sequence()
}

/// A basis file is a JSON list of row sequences.
pub fn parse_basis_json(text: &str) -> Result<Vec<VectorSequence>> {
    let raw: Vec<SequenceFile> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.iter().map(SequenceFile::to_sequence).collect()
}

pub fn basis_to_json(generators: &[VectorSequence]) -> String {
    let files: Vec<SequenceFile> = generators.iter().map(SequenceFile::from_sequence).collect();
    to_canonical_json(&files)
}

/// Pretty JSON with object keys in sorted order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable report");
    serde_json::to_string_pretty(&v).expect("value serializes")
}
