//! Plug-in (maximum-likelihood) estimators for entropy, mutual information and
//! their conditional variants over integer-coded columns.
//!
//! All quantities are in bits (log base 2). Joint states are encoded by order
//! of first appearance, so only observed tuples are stored: memory per
//! evaluation is bounded by the sample count, never by the Cartesian product
//! of column cardinalities. Every estimator is a pure function of its inputs
//! and safe to evaluate concurrently.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// An information quantity in bits. Always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InfoValue(f64);

impl InfoValue {
    pub(crate) fn new(bits: f64) -> Self {
        debug_assert!(bits.is_finite() && bits >= 0.0);
        InfoValue(bits)
    }

    /// The value in bits.
    pub fn bits(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for InfoValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// A column of dense state codes: one discrete random variable realized over
/// n samples, possibly obtained by fusing several columns into joint states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointStateColumn {
    codes: Vec<u32>,
    cardinality: u32,
}

impl JointStateColumn {
    /// A constant column: conditioning on it is conditioning on nothing.
    pub fn unit(n: usize) -> Self {
        JointStateColumn {
            codes: vec![0; n],
            cardinality: 1,
        }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    /// Count of distinct observed states.
    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Relabels `codes` densely by order of first appearance.
///
/// `hint` is an upper bound on the raw code values when known; it selects a
/// flat lookup table over a hash map when the table stays small.
fn densify(codes: &[u32], hint: Option<usize>) -> (Vec<u32>, u32) {
    let n = codes.len();
    let table_cap = n.saturating_mul(64).saturating_add(1024);
    match hint {
        Some(bound) if bound <= table_cap => {
            let mut table = vec![u32::MAX; bound];
            let mut next = 0u32;
            let out = codes
                .iter()
                .map(|&c| {
                    let slot = &mut table[c as usize];
                    if *slot == u32::MAX {
                        *slot = next;
                        next += 1;
                    }
                    *slot
                })
                .collect();
            (out, next)
        }
        _ => {
            let mut map: HashMap<u32, u32> = HashMap::with_capacity(n.min(1024));
            let mut next = 0u32;
            let out = codes
                .iter()
                .map(|&c| {
                    *map.entry(c).or_insert_with(|| {
                        let code = next;
                        next += 1;
                        code
                    })
                })
                .collect();
            (out, next)
        }
    }
}

/// Fuses two dense columns into one, assigning joint codes by first appearance.
fn combine(cur: &[u32], cur_card: u32, next: &[u32], next_card: u32) -> (Vec<u32>, u32) {
    let n = cur.len();
    let span = cur_card as u64 * next_card as u64;
    let table_cap = (n as u64).saturating_mul(64).saturating_add(1024);
    let mut fresh = 0u32;
    if span <= table_cap {
        let mut table = vec![u32::MAX; span as usize];
        let out = cur
            .iter()
            .zip(next)
            .map(|(&a, &b)| {
                let key = a as usize * next_card as usize + b as usize;
                let slot = &mut table[key];
                if *slot == u32::MAX {
                    *slot = fresh;
                    fresh += 1;
                }
                *slot
            })
            .collect();
        (out, fresh)
    } else {
        let mut map: HashMap<u64, u32> = HashMap::with_capacity(n.min(4096));
        let out = cur
            .iter()
            .zip(next)
            .map(|(&a, &b)| {
                let key = a as u64 * next_card as u64 + b as u64;
                *map.entry(key).or_insert_with(|| {
                    let code = fresh;
                    fresh += 1;
                    code
                })
            })
            .collect();
        (out, fresh)
    }
}

/// Encodes the row-wise tuples of one or more columns as a single dense
/// column. Each distinct tuple maps to a distinct code; codes are assigned in
/// order of first appearance, which makes the result deterministic.
pub fn joint_encode(columns: &[&[u32]]) -> Result<JointStateColumn> {
    let first = *columns.first().ok_or(Error::NoColumns)?;
    for col in columns {
        if col.len() != first.len() {
            return Err(Error::LengthMismatch(first.len(), col.len()));
        }
    }
    let hint = first.iter().max().map(|&mx| mx as usize + 1);
    let (mut codes, mut card) = densify(first, hint);
    for col in &columns[1..] {
        let next_card = col.iter().max().map_or(1, |&mx| mx + 1);
        let (merged, merged_card) = combine(&codes, card, col, next_card);
        codes = merged;
        card = merged_card;
    }
    Ok(JointStateColumn { codes, cardinality: card })
}

/// Fuses two already-encoded columns.
pub fn joint_of(a: &JointStateColumn, b: &JointStateColumn) -> Result<JointStateColumn> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let (codes, cardinality) = combine(&a.codes, a.cardinality, &b.codes, b.cardinality);
    Ok(JointStateColumn { codes, cardinality })
}

fn state_counts(x: &JointStateColumn) -> Vec<u32> {
    let mut counts = vec![0u32; x.cardinality as usize];
    for &c in &x.codes {
        counts[c as usize] += 1;
    }
    counts
}

fn entropy_from_counts(counts: &[u32], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for &c in counts {
        if c > 1 {
            acc += c as f64 * (c as f64).log2();
        }
    }
    let h = (n as f64).log2() - acc / n as f64;
    h.max(0.0)
}

/// Empirical Shannon entropy H(x) = -sum_s q_s log2 q_s, with 0 log 0 := 0.
pub fn entropy(x: &JointStateColumn) -> InfoValue {
    InfoValue::new(entropy_from_counts(&state_counts(x), x.len()))
}

/// Miller-Madow bias-corrected entropy: plug-in plus (K-1)/(2n ln 2) where K
/// is the number of observed states. Off the default path; every other
/// estimator in this module uses the raw plug-in value.
pub fn entropy_miller_madow(x: &JointStateColumn) -> InfoValue {
    let n = x.len();
    if n == 0 {
        return InfoValue::new(0.0);
    }
    let plugin = entropy_from_counts(&state_counts(x), n);
    let k = x.cardinality as f64;
    InfoValue::new(plugin + (k - 1.0) / (2.0 * n as f64 * std::f64::consts::LN_2))
}

/// Mutual information I(u;y) = H(u) + H(y) - H(u,y), clamped into
/// [0, min(H(u), H(y))] against sub-1e-12 floating-point drift.
pub fn mutual_information(u: &JointStateColumn, y: &JointStateColumn) -> Result<InfoValue> {
    let joint = joint_of(u, y)?;
    let hu = entropy(u).bits();
    let hy = entropy(y).bits();
    let huy = entropy(&joint).bits();
    Ok(InfoValue::new((hu + hy - huy).clamp(0.0, hu.min(hy))))
}

/// Conditional entropy H(y|u) = H(y,u) - H(u), clamped into [0, H(y)].
pub fn conditional_entropy(y: &JointStateColumn, u: &JointStateColumn) -> Result<InfoValue> {
    let joint = joint_of(u, y)?;
    let hu = entropy(u).bits();
    let hy = entropy(y).bits();
    let huy = entropy(&joint).bits();
    Ok(InfoValue::new((huy - hu).clamp(0.0, hy)))
}

/// Conditional mutual information I(x;y|u) = I({x} join u; y) - I(u;y).
///
/// Negative floating-point residue (at most ~1e-12 for the plug-in estimator,
/// which is monotone under refinement) is clamped to zero. Summed along any
/// ordering this telescopes to the joint mutual information, so the chain
/// rule holds to within accumulation error.
pub fn conditional_mi(
    x: &JointStateColumn,
    y: &JointStateColumn,
    u: &JointStateColumn,
) -> Result<InfoValue> {
    let xu = joint_of(x, u)?;
    let with_x = mutual_information(&xu, y)?.bits();
    let without = mutual_information(u, y)?.bits();
    Ok(InfoValue::new((with_x - without).max(0.0)))
}
