//! Subject-category similarity space.
//!
//! Co-citation counts are accumulated per epoch window, converted to cosine
//! similarities over count-matrix columns, and looked up by publication year.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, ScId};
use crate::error::{Error, Result};
use crate::scalar::{Real, Weight};

/// Years preceding an epoch year that feed its co-citation counts.
pub const DEFAULT_WINDOW_YEARS: i32 = 5;

/// Largest tolerated |s_ij - s_ji| in a loaded matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Inclusive range of publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearWindow {
    pub lo: i32,
    pub hi: i32,
}

impl YearWindow {
    pub fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    /// The `width` years strictly before `epoch_year`.
    pub fn preceding(epoch_year: i32, width: i32) -> Self {
        Self {
            lo: epoch_year - width,
            hi: epoch_year - 1,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.lo..=self.hi).contains(&year)
    }
}

/// Symmetric K x K count of papers whose references include both categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoCitationCounts {
    pub epoch: String,
    labels: Vec<String>,
    counts: Vec<u64>,
}

impl CoCitationCounts {
    pub fn zeros(labels: Vec<String>, epoch: impl Into<String>) -> Self {
        let k = labels.len();
        Self {
            epoch: epoch.into(),
            labels,
            counts: vec![0; k * k],
        }
    }

    /// Build from a dense row-major matrix; fails when not square or not symmetric.
    pub fn from_dense(labels: Vec<String>, epoch: impl Into<String>, counts: Vec<u64>) -> Result<Self> {
        let k = labels.len();
        if counts.len() != k * k {
            return Err(Error::Dimension {
                expected: k * k,
                found: counts.len(),
            });
        }
        for i in 0..k {
            for j in 0..i {
                if counts[i * k + j] != counts[j * k + i] {
                    return Err(Error::InvalidMatrix(format!("counts not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            epoch: epoch.into(),
            labels,
            counts,
        })
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.k() + j]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    /// Count one paper whose references cover the category set `scs`.
    pub fn add_paper(&mut self, scs: &BTreeSet<ScId>) {
        let k = self.k();
        let ids: Vec<usize> = scs.iter().map(|s| s.index()).collect();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a..] {
                self.counts[i * k + j] += 1;
                if i != j {
                    self.counts[j * k + i] += 1;
                }
            }
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            epoch: self.epoch.clone(),
            labels: self.labels.clone(),
            counts: self.counts.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Co-citation counts over papers published inside `window`.
///
/// Each paper contributes once per unordered category pair (diagonal included)
/// drawn from the set of categories its references touch.
pub fn build_cocitation(corpus: &Corpus, window: YearWindow) -> Result<CoCitationCounts> {
    if corpus.catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    if window.lo > window.hi {
        return Err(Error::Invalid(format!(
            "year window [{}, {}] is empty",
            window.lo, window.hi
        )));
    }
    let labels = corpus.catalog.labels().to_vec();
    let epoch = format!("{}-{}", window.lo, window.hi);
    let empty = CoCitationCounts::zeros(labels, epoch);
    let counts = corpus
        .papers
        .par_iter()
        .filter(|p| window.contains(p.year))
        .fold(
            || empty.clone(),
            |mut acc, paper| {
                acc.add_paper(&corpus.ref_sc_set(paper));
                acc
            },
        )
        .reduce(|| empty.clone(), |a, b| a.merge(&b));
    Ok(counts)
}

/// Elementwise sum; the epoch label joins the inputs' labels with `+`.
pub fn sum_counts(matrices: &[CoCitationCounts]) -> Result<CoCitationCounts> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Invalid("no count matrices to sum".into()))?;
    let mut total = CoCitationCounts::zeros(first.labels.clone(), String::new());
    for m in matrices {
        if m.k() != first.k() {
            return Err(Error::Dimension {
                expected: first.k(),
                found: m.k(),
            });
        }
        total = total.merge(m);
    }
    total.epoch = matrices
        .iter()
        .map(|m| m.epoch.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    CosineOfCounts,
    Fixture,
}

/// Symmetric category similarity with unit diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T = f64> {
    pub epoch: String,
    pub provenance: Provenance,
    labels: Vec<String>,
    values: Vec<T>,
}

impl<T: Weight> SimilarityMatrix<T> {
    /// Validate and wrap a dense row-major matrix. The stored matrix mirrors
    /// the upper triangle so it is exactly symmetric.
    pub fn from_dense(
        labels: Vec<String>,
        epoch: impl Into<String>,
        provenance: Provenance,
        mut values: Vec<T>,
    ) -> Result<Self> {
        let k = labels.len();
        if values.len() != k * k {
            return Err(Error::Dimension {
                expected: k * k,
                found: values.len(),
            });
        }
        let tol = T::from_f64(SYMMETRY_TOLERANCE).unwrap_or_else(T::zero);
        for i in 0..k {
            if values[i * k + i] != T::one() {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..k {
                let v = &values[i * k + j];
                // NaN fails both comparisons
                if !(*v >= T::zero() && *v <= T::one()) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v:?} outside [0, 1]"
                    )));
                }
            }
            for j in (i + 1)..k {
                let (a, b) = (values[i * k + j].clone(), values[j * k + i].clone());
                let diff = if a > b { a.clone() - b } else { b - a.clone() };
                if diff > tol {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
                values[j * k + i] = a;
            }
        }
        Ok(Self {
            epoch: epoch.into(),
            provenance,
            labels,
            values,
        })
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let k = labels.len();
        let mut values = vec![T::zero(); k * k];
        for i in 0..k {
            values[i * k + i] = T::one();
        }
        Self {
            epoch: String::new(),
            provenance: Provenance::Fixture,
            labels,
            values,
        }
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.values[i * self.k() + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    /// Restrict and reorder to `labels`, so that index `i` refers to
    /// `labels[i]`. Fails if a label is absent from the matrix.
    pub fn aligned_to(&self, labels: &[String]) -> Result<Self> {
        if labels == self.labels.as_slice() {
            return Ok(self.clone());
        }
        let index: BTreeMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let src = labels
            .iter()
            .map(|l| {
                index
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidMatrix(format!("category `{l}` missing from the matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = self.k();
        let values = src
            .iter()
            .flat_map(|&i| src.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.values[i * k + j].clone())
            .collect();
        Ok(Self {
            epoch: self.epoch.clone(),
            provenance: self.provenance,
            labels: labels.to_vec(),
            values,
        })
    }

    /// Same matrix with categories relabelled: new index `perm[i]` holds old index `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.k();
        assert_eq!(perm.len(), k, "permutation length");
        let mut values = self.values.clone();
        let mut labels = self.labels.clone();
        for i in 0..k {
            labels[perm[i]] = self.labels[i].clone();
            for j in 0..k {
                values[perm[i] * k + perm[j]] = self.values[i * k + j].clone();
            }
        }
        Self {
            epoch: self.epoch.clone(),
            provenance: self.provenance,
            labels,
            values,
        }
    }
}

/// Cosine similarity between the columns of a co-citation count matrix.
///
/// The diagonal is set to exactly 1; a category with an all-zero column is
/// dissimilar (0) to every other category.
pub fn to_cosine<T: Real>(counts: &CoCitationCounts) -> SimilarityMatrix<T> {
    let k = counts.k();
    let c = counts.as_slice();
    let dot = |i: usize, j: usize| -> u128 {
        (0..k)
            .map(|r| u128::from(c[r * k + i]) * u128::from(c[r * k + j]))
            .sum()
    };
    let norms: Vec<T> = (0..k)
        .map(|i| T::from_u128(dot(i, i)).unwrap_or_else(T::infinity).sqrt())
        .collect();

    let mut values = vec![T::zero(); k * k];
    for i in 0..k {
        values[i * k + i] = T::one();
        for j in (i + 1)..k {
            let denom = norms[i] * norms[j];
            let s = if denom > T::zero() {
                let d = T::from_u128(dot(i, j)).unwrap_or_else(T::infinity);
                (d / denom).min(T::one())
            } else {
                T::zero()
            };
            values[i * k + j] = s;
            values[j * k + i] = s;
        }
    }
    SimilarityMatrix {
        epoch: counts.epoch.clone(),
        provenance: Provenance::CosineOfCounts,
        labels: counts.labels.clone(),
        values,
    }
}

/// Similarity matrices keyed by epoch year.
#[derive(Debug, Clone)]
pub struct EpochRegistry<T = f64> {
    matrices: BTreeMap<i32, SimilarityMatrix<T>>,
}

impl<T> Default for EpochRegistry<T> {
    fn default() -> Self {
        Self {
            matrices: BTreeMap::new(),
        }
    }
}

impl<T> EpochRegistry<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding one matrix used for every year.
    pub fn single(epoch_year: i32, matrix: SimilarityMatrix<T>) -> Self {
        let mut r = Self::new();
        r.insert(epoch_year, matrix);
        r
    }

    pub fn insert(&mut self, epoch_year: i32, matrix: SimilarityMatrix<T>) {
        self.matrices.insert(epoch_year, matrix);
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn epochs(&self) -> impl Iterator<Item = i32> + '_ {
        self.matrices.keys().copied()
    }

    /// Epoch year nearest to `publication_year`; ties go to the earlier epoch.
    pub fn select_epoch(&self, publication_year: i32) -> Result<i32> {
        let mut best: Option<(i32, i64)> = None;
        for &epoch in self.matrices.keys() {
            let d = (i64::from(epoch) - i64::from(publication_year)).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((epoch, d));
            }
        }
        best.map(|(e, _)| e).ok_or(Error::EmptyRegistry)
    }

    pub fn select(&self, publication_year: i32) -> Result<&SimilarityMatrix<T>> {
        let epoch = self.select_epoch(publication_year)?;
        Ok(&self.matrices[&epoch])
    }
}

// ---------------------------------------------------------------------------
// Text format
//
//   K <dim>
//   sc <index> <label>          (one per category)
//   <i> <j> <value>             (upper triangle incl. diagonal, row-major)
//
// Omitted triplets are zero. Lines starting with `#` are comments.
// ---------------------------------------------------------------------------

fn format_header(labels: &[String]) -> String {
    let mut out = format!("K {}\n", labels.len());
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(out, "sc {i} {label}");
    }
    out
}

/// Serialize a similarity matrix; zero off-diagonal entries are omitted.
pub fn similarity_to_text<T: Real>(m: &SimilarityMatrix<T>) -> String {
    let mut out = format_header(m.labels());
    let k = m.k();
    for i in 0..k {
        for j in i..k {
            let v = *m.get(i, j);
            if i == j || v != T::zero() {
                let _ = writeln!(out, "{i} {j} {v:.16e}");
            }
        }
    }
    out
}

/// Serialize a count matrix; zero off-diagonal entries are omitted.
pub fn counts_to_text(m: &CoCitationCounts) -> String {
    let mut out = format_header(m.labels());
    let k = m.k();
    for i in 0..k {
        for j in i..k {
            let v = m.get(i, j);
            if i == j || v != 0 {
                let _ = writeln!(out, "{i} {j} {v}");
            }
        }
    }
    out
}

struct Triplets<V> {
    labels: Vec<String>,
    entries: Vec<(usize, usize, V, usize)>,
}

fn parse_triplets<V: std::str::FromStr>(text: &str, name: &str) -> Result<Triplets<V>> {
    let err = |line: usize, message: String| Error::Parse {
        file: name.to_owned(),
        line,
        message,
    };
    let mut k: Option<usize> = None;
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(dim) = k else {
            let dim = line
                .strip_prefix("K ")
                .and_then(|d| d.trim().parse::<usize>().ok())
                .ok_or_else(|| err(line_no, "expected header `K <dim>`".into()))?;
            k = Some(dim);
            labels = vec![None; dim];
            continue;
        };
        if let Some(rest) = line.strip_prefix("sc ") {
            let (idx, label) = rest
                .trim_start()
                .split_once(char::is_whitespace)
                .ok_or_else(|| err(line_no, "expected `sc <index> <label>`".into()))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(line_no, format!("bad category index `{idx}`")))?;
            let slot = labels
                .get_mut(idx)
                .ok_or_else(|| err(line_no, format!("category index {idx} >= K = {dim}")))?;
            if slot.is_some() {
                return Err(err(line_no, format!("category index {idx} repeated")));
            }
            *slot = Some(label.trim().to_owned());
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(err(line_no, "expected `<i> <j> <value>`".into()));
        };
        let i: usize = i.parse().map_err(|_| err(line_no, format!("bad row `{i}`")))?;
        let j: usize = j.parse().map_err(|_| err(line_no, format!("bad column `{j}`")))?;
        if i >= dim || j >= dim {
            return Err(err(line_no, format!("entry ({i}, {j}) outside K = {dim}")));
        }
        let v: V = v.parse().map_err(|_| err(line_no, format!("bad value `{v}`")))?;
        entries.push((i, j, v, line_no));
    }
    let k = k.ok_or_else(|| err(0, "missing header `K <dim>`".into()))?;
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| err(0, format!("missing label for category {i}"))))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(labels.len(), k);
    Ok(Triplets { labels, entries })
}

/// Parse a similarity matrix from the text format.
pub fn similarity_from_text<T: Real>(text: &str, name: &str) -> Result<SimilarityMatrix<T>> {
    let Triplets { labels, entries } = parse_triplets::<T>(text, name)?;
    let k = labels.len();
    let mut values = vec![T::zero(); k * k];
    let mut set = vec![false; k * k];
    for (i, j, v, line) in entries {
        if !v.is_finite() {
            return Err(Error::InvalidMatrix(format!("{name}:{line}: non-finite value")));
        }
        if set[i * k + j] {
            return Err(Error::Parse {
                file: name.to_owned(),
                line,
                message: format!("entry ({i}, {j}) repeated"),
            });
        }
        set[i * k + j] = true;
        values[i * k + j] = v;
        if !set[j * k + i] {
            values[j * k + i] = v;
        }
    }
    SimilarityMatrix::from_dense(labels, String::new(), Provenance::Fixture, values)
}

/// Load a similarity matrix file; provenance is [`Provenance::Fixture`].
pub fn load_similarity_fixture<T: Real>(path: impl AsRef<Path>) -> Result<SimilarityMatrix<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    similarity_from_text(&text, &path.display().to_string())
}

/// Parse a count matrix from the text format.
pub fn counts_from_text(text: &str, name: &str) -> Result<CoCitationCounts> {
    let Triplets { labels, entries } = parse_triplets::<u64>(text, name)?;
    let k = labels.len();
    let mut counts = vec![0u64; k * k];
    for (i, j, v, _) in entries {
        counts[i * k + j] = v;
        counts[j * k + i] = v;
    }
    CoCitationCounts::from_dense(labels, String::new(), counts)
}
