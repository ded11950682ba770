//! CSV loading, column classification, equal-frequency discretization and
//! seeded train/test splits.
//!
//! Datasets are immutable after construction and safe for concurrent reads.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Missing-value tokens recognized in CSV cells (after trimming).
const MISSING_TOKENS: [&str; 2] = ["", "?"];

/// How many distinct integral values a column may have before it is treated
/// as real-valued and binned, bounding joint-state explosion.
const MAX_INTEGER_LEVELS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Values are a subset of {0, 1}.
    Binary,
    /// All values integral with at most 32 distinct levels.
    Integer,
    /// Everything else; discretization bins these.
    Real,
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub kind: ColumnKind,
}

/// A column-oriented sample matrix plus its class attribute.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<Column>,
    pub label_name: String,
    pub label: Vec<f64>,
    pub label_kind: ColumnKind,
    /// Rows removed during loading because they contained missing values.
    pub rows_dropped: usize,
}

impl Dataset {
    /// Validating constructor: equal lengths, kinds consistent with values,
    /// unique column names.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<(String, Vec<f64>)>,
        label_name: impl Into<String>,
        label: Vec<f64>,
    ) -> Result<Self> {
        let n = label.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        let mut typed = Vec::with_capacity(columns.len());
        for (cname, values) in columns {
            if values.len() != n {
                return Err(Error::LengthMismatch(n, values.len()));
            }
            if !seen.insert(cname.clone()) {
                return Err(Error::DuplicateColumn(cname));
            }
            let kind = infer_kind(&values);
            typed.push(Column {
                name: cname,
                values,
                kind,
            });
        }
        let label_kind = infer_kind(&label);
        Ok(Dataset {
            name: name.into(),
            columns: typed,
            label_name: label_name.into(),
            label,
            label_kind,
            rows_dropped: 0,
        })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.label.len()
    }

    /// Number of feature columns.
    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    fn take_rows(&self, rows: &[usize], suffix: &str) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: rows.iter().map(|&r| c.values[r]).collect(),
                kind: c.kind,
            })
            .collect();
        Dataset {
            name: format!("{}{suffix}", self.name),
            columns,
            label_name: self.label_name.clone(),
            label: rows.iter().map(|&r| self.label[r]).collect(),
            label_kind: self.label_kind,
            rows_dropped: 0,
        }
    }
}

fn infer_kind(values: &[f64]) -> ColumnKind {
    if values.iter().all(|&v| v == 0.0 || v == 1.0) {
        return ColumnKind::Binary;
    }
    if values.iter().all(|&v| v.fract() == 0.0) {
        let distinct: BTreeSet<u64> = values.iter().map(|&v| canonical_bits(v)).collect();
        if distinct.len() <= MAX_INTEGER_LEVELS {
            return ColumnKind::Integer;
        }
    }
    ColumnKind::Real
}

/// Bit pattern used as an exact map key; collapses -0.0 into +0.0.
fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0.0f64.to_bits()
    } else {
        v.to_bits()
    }
}

/// Identifies the label column either by header name or by 0-based index.
#[derive(Debug, Clone)]
pub enum LabelSelector {
    Name(String),
    Index(usize),
}

impl LabelSelector {
    /// Name match first; a purely numeric argument falls back to an index.
    pub fn parse(arg: &str) -> LabelSelector {
        LabelSelector::Name(arg.to_string())
    }

    fn resolve(&self, names: &[String]) -> Result<usize> {
        match self {
            LabelSelector::Index(i) => {
                if *i < names.len() {
                    Ok(*i)
                } else {
                    Err(Error::LabelColumnMissing(format!("index {i}")))
                }
            }
            LabelSelector::Name(name) => {
                if let Some(pos) = names.iter().position(|n| n == name) {
                    return Ok(pos);
                }
                if let Ok(i) = name.parse::<usize>() {
                    if i < names.len() {
                        return Ok(i);
                    }
                }
                Err(Error::LabelColumnMissing(name.clone()))
            }
        }
    }
}

/// Loads a comma-separated, UTF-8, '.'-decimal dataset. Rows containing
/// missing values (empty cells or `?`) are dropped and counted in
/// `rows_dropped`. Column kinds are inferred from the surviving values.
pub fn load_csv(path: &Path, label: &LabelSelector, header: bool) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(false)
        .from_path(path)?;

    let names: Vec<String> = if header {
        reader
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect()
    } else {
        Vec::new()
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0usize;
    let mut width = names.len();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        if width == 0 {
            width = record.len();
        }
        let mut row = Vec::with_capacity(record.len());
        let mut missing = false;
        for (col_idx, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if MISSING_TOKENS.contains(&cell) {
                missing = true;
                break;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row: row_no,
                col: col_idx + 1,
                detail: format!("not a number: {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    col: col_idx + 1,
                    detail: format!("non-finite value: {cell:?}"),
                });
            }
            row.push(value);
        }
        if missing {
            dropped += 1;
        } else {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let names = if header {
        names
    } else {
        (0..width).map(|j| format!("col{j}")).collect()
    };
    let label_idx = label.resolve(&names)?;

    let n = rows.len();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::with_capacity(width.saturating_sub(1));
    let mut label_values = Vec::with_capacity(n);
    for (j, name) in names.iter().enumerate() {
        let values: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        if j == label_idx {
            label_values = values;
        } else {
            columns.push((name.clone(), values));
        }
    }

    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut dataset = Dataset::new(stem, columns, names[label_idx].clone(), label_values)?;
    dataset.rows_dropped = dropped;
    Ok(dataset)
}

/// Deterministic train/test split parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.9,
            seed: 0,
            stratified: false,
        }
    }
}

/// Partitions the rows into disjoint train and test datasets.
///
/// |train| = round(train_fraction * n). A stratified split preserves
/// per-class row counts to within one row via largest-remainder allocation.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0) {
        return Err(Error::InvalidFraction(spec.train_fraction));
    }
    let n = d.n();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let target = (spec.train_fraction * n as f64).round() as usize;
    let target = target.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut train_rows: Vec<usize>;
    if spec.stratified {
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &v) in d.label.iter().enumerate() {
            groups.entry(canonical_bits(v)).or_default().push(i);
        }
        // Floor each class quota, then hand out the remainder to the classes
        // with the largest fractional parts.
        let mut quotas: Vec<(usize, f64, u64)> = Vec::new();
        let mut assigned = 0usize;
        for (&key, rows) in &groups {
            let exact = spec.train_fraction * rows.len() as f64;
            let base = (exact.floor() as usize).min(rows.len());
            assigned += base;
            quotas.push((base, exact - base as f64, key));
        }
        let mut leftover = target.saturating_sub(assigned);
        quotas.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.2.cmp(&b.2)));
        let mut final_quota: BTreeMap<u64, usize> = BTreeMap::new();
        for (base, _, key) in quotas {
            let cap = groups[&key].len();
            let extra = usize::from(leftover > 0 && base < cap);
            leftover -= extra;
            final_quota.insert(key, base + extra);
        }
        train_rows = Vec::with_capacity(target);
        for (key, rows) in &mut groups {
            rows.shuffle(&mut rng);
            train_rows.extend(rows.iter().take(final_quota[key]));
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        train_rows = order[..target].to_vec();
    }

    train_rows.sort_unstable();
    let mut in_train = vec![false; n];
    for &r in &train_rows {
        in_train[r] = true;
    }
    let test_rows: Vec<usize> = (0..n).filter(|&r| !in_train[r]).collect();

    Ok((
        d.take_rows(&train_rows, "[train]"),
        d.take_rows(&test_rows, "[test]"),
    ))
}

/// Maps raw label values to dense class codes, reusable on held-out rows.
#[derive(Debug, Clone)]
pub enum LabelEncoder {
    /// Exact-value mapping for binary/integer labels.
    Discrete(BTreeMap<u64, u32>),
    /// Quantile cut points for real labels; code = number of cuts below v.
    Binned(Vec<f64>),
}

impl LabelEncoder {
    /// Class code for a raw label value. `None` when a discrete value was
    /// never seen at fit time.
    pub fn encode(&self, v: f64) -> Option<u32> {
        match self {
            LabelEncoder::Discrete(map) => map.get(&canonical_bits(v)).copied(),
            LabelEncoder::Binned(cuts) => {
                Some(cuts.iter().filter(|&&c| v > c).count() as u32)
            }
        }
    }
}

/// Integer-coded columns ready for plug-in entropy estimation.
#[derive(Debug, Clone)]
pub struct DiscretizedDataset {
    /// Per-column codes, each value < the column's entry in `cards`.
    pub codes: Vec<Vec<u32>>,
    /// Per-column bin counts B_j.
    pub cards: Vec<u32>,
    pub label_codes: Vec<u32>,
    /// Number of label classes C.
    pub label_card: u32,
    /// Quantile cut points per column; empty for binary/integer columns.
    pub bin_edges: Vec<Vec<f64>>,
    pub label_encoder: LabelEncoder,
    pub column_names: Vec<String>,
    pub n: usize,
    pub m: usize,
}

impl DiscretizedDataset {
    /// Builds an instance directly from integer codes, with identity label
    /// mapping. Handy for synthetic instances; `discretize` is the production
    /// path.
    pub fn from_codes(columns: Vec<Vec<u32>>, label_codes: Vec<u32>) -> Self {
        let n = label_codes.len();
        let m = columns.len();
        for c in &columns {
            assert_eq!(c.len(), n, "column length mismatch");
        }
        let cards: Vec<u32> = columns
            .iter()
            .map(|c| c.iter().max().map_or(1, |&mx| mx + 1))
            .collect();
        let label_card = label_codes.iter().max().map_or(1, |&mx| mx + 1);
        let map: BTreeMap<u64, u32> = (0..label_card)
            .map(|c| (canonical_bits(c as f64), c))
            .collect();
        DiscretizedDataset {
            codes: columns,
            cards,
            label_codes,
            label_card,
            bin_edges: vec![Vec::new(); m],
            label_encoder: LabelEncoder::Discrete(map),
            column_names: (0..m).map(|j| format!("col{j}")).collect(),
            n,
            m,
        }
    }
}

/// Linear-interpolation quantile of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Equal-frequency cut points for `bins` bins; duplicated quantiles merged.
fn quantile_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut cuts = Vec::with_capacity(bins - 1);
    for k in 1..bins {
        let c = quantile_sorted(&sorted, k as f64 / bins as f64);
        if cuts.last() != Some(&c) {
            cuts.push(c);
        }
    }
    cuts
}

fn bin_code(cuts: &[f64], v: f64) -> u32 {
    cuts.iter().filter(|&&c| v > c).count() as u32
}

fn discrete_codes(values: &[f64]) -> (Vec<u32>, u32, BTreeMap<u64, u32>) {
    let distinct: BTreeSet<u64> = values.iter().map(|&v| canonical_bits(v)).collect();
    let map: BTreeMap<u64, u32> = distinct
        .iter()
        .enumerate()
        .map(|(i, &bits)| (bits, i as u32))
        .collect();
    let codes = values.iter().map(|&v| map[&canonical_bits(v)]).collect();
    (codes, map.len() as u32, map)
}

/// Integer-codes every column. Binary/integer columns are relabeled to dense
/// codes without regrouping; real columns are equal-frequency binned into
/// `bins` bins; a real label is binned into `label_bins` classes. The
/// encoding is a deterministic function of the dataset and the bin counts. A
/// constant column is not an error: it yields a single code.
pub fn discretize(d: &Dataset, bins: usize, label_bins: usize) -> Result<DiscretizedDataset> {
    let any_real = d.columns.iter().any(|c| c.kind == ColumnKind::Real);
    if any_real && bins < 2 {
        return Err(Error::InvalidBins {
            bins,
            detail: "real columns require at least 2 bins".into(),
        });
    }
    if d.label_kind == ColumnKind::Real && label_bins < 2 {
        return Err(Error::InvalidBins {
            bins: label_bins,
            detail: "a real label requires at least 2 classes".into(),
        });
    }
    if d.n() == 0 {
        return Err(Error::EmptyDataset);
    }

    let mut codes = Vec::with_capacity(d.m());
    let mut cards = Vec::with_capacity(d.m());
    let mut edges = Vec::with_capacity(d.m());
    for col in &d.columns {
        match col.kind {
            ColumnKind::Binary | ColumnKind::Integer => {
                let (c, card, _) = discrete_codes(&col.values);
                codes.push(c);
                cards.push(card);
                edges.push(Vec::new());
            }
            ColumnKind::Real => {
                let cuts = quantile_cuts(&col.values, bins);
                codes.push(col.values.iter().map(|&v| bin_code(&cuts, v)).collect());
                cards.push(cuts.len() as u32 + 1);
                edges.push(cuts);
            }
        }
    }

    let (label_codes, label_card, encoder) = match d.label_kind {
        ColumnKind::Binary | ColumnKind::Integer => {
            let (c, card, map) = discrete_codes(&d.label);
            (c, card, LabelEncoder::Discrete(map))
        }
        ColumnKind::Real => {
            let cuts = quantile_cuts(&d.label, label_bins);
            let c: Vec<u32> = d.label.iter().map(|&v| bin_code(&cuts, v)).collect();
            let card = cuts.len() as u32 + 1;
            (c, card, LabelEncoder::Binned(cuts))
        }
    };

    Ok(DiscretizedDataset {
        codes,
        cards,
        label_codes,
        label_card,
        bin_edges: edges,
        label_encoder: encoder,
        column_names: d.column_names(),
        n: d.n(),
        m: d.m(),
    })
}
