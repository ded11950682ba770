//! Evaluation protocol: Gaussian class-conditional classifiers, k-NN, the
//! misclassification-error and information-gap metrics, the method-vs-method
//! benchmark and cardinality sweeps.
//!
//! Classifier fitting and metric evaluation are pure per (method, classifier)
//! pair; the benchmark assembles records in a fixed canonical order so
//! reports are reproducible apart from wall-clock fields.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::ce::{self, CEConfig, Mask};
use crate::data::{discretize, split, Dataset, DiscretizedDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::infotheory;
use crate::report::{BenchmarkReport, MetricRecord, SelectionReport};

/// Variance floor for the diagonal Gaussian pathway; keeps it evaluable on
/// within-class-constant columns.
const VARIANCE_FLOOR: f64 = 1e-9;

/// Class code assigned to held-out labels never seen at fit time; it can
/// never equal a prediction, so such rows always count as errors.
pub const UNSEEN_LABEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Per-class means, one covariance pooled across classes.
    GaussianPooled,
    /// Naive Bayes: per-class means and diagonal variances.
    GaussianDiagonal,
    /// Majority vote among the nearest training rows.
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub k_neighbors: usize,
}

impl ClassifierSpec {
    pub fn gaussian_pooled() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::GaussianPooled,
            k_neighbors: 3,
        }
    }

    pub fn gaussian_diagonal() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::GaussianDiagonal,
            k_neighbors: 3,
        }
    }

    pub fn knn(k_neighbors: usize) -> Self {
        ClassifierSpec {
            kind: ClassifierKind::Knn,
            k_neighbors,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            ClassifierKind::GaussianPooled => "nb-pooled".into(),
            ClassifierKind::GaussianDiagonal => "nb-diag".into(),
            ClassifierKind::Knn => format!("knn{}", self.k_neighbors),
        }
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb-pooled" => Ok(ClassifierSpec::gaussian_pooled()),
            "nb-diag" => Ok(ClassifierSpec::gaussian_diagonal()),
            "knn" => Ok(ClassifierSpec::knn(3)),
            other => {
                if let Some(k) = other.strip_prefix("knn") {
                    if let Ok(k) = k.parse::<usize>() {
                        if k >= 1 {
                            return Ok(ClassifierSpec::knn(k));
                        }
                    }
                }
                Err(Error::InvalidConfig(format!(
                    "unknown classifier {other:?}; valid: nb-pooled, nb-diag, knn, knn<k>"
                )))
            }
        }
    }
}

/// Selection methods the benchmark can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ce,
    Mim,
    Cmim,
    Mrmr,
    Disr,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ce,
        Method::Mim,
        Method::Cmim,
        Method::Mrmr,
        Method::Disr,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Ce => "ce",
            Method::Mim => "mim",
            Method::Cmim => "cmim",
            Method::Mrmr => "mrmr",
            Method::Disr => "disr",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(Method::Ce),
            "mim" => Ok(Method::Mim),
            "cmim" => Ok(Method::Cmim),
            "mrmr" => Ok(Method::Mrmr),
            "disr" => Ok(Method::Disr),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}; valid: ce, mim, cmim, mrmr, disr"
            ))),
        }
    }
}

/// Split and discretization settings for the benchmark protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub split: SplitSpec,
    pub bins: usize,
    pub label_bins: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            split: SplitSpec::default(),
            bins: 10,
            label_bins: 5,
        }
    }
}

fn feature_rows(d: &Dataset, selected: &[usize]) -> Vec<Vec<f64>> {
    (0..d.n())
        .map(|r| selected.iter().map(|&j| d.columns[j].values[r]).collect())
        .collect()
}

/// Class codes for held-out labels under the training-split encoding;
/// values never seen at fit time map to [`UNSEEN_LABEL`].
pub fn encode_test_labels(ddata_train: &DiscretizedDataset, test: &Dataset) -> Vec<u32> {
    test.label
        .iter()
        .map(|&v| ddata_train.label_encoder.encode(v).unwrap_or(UNSEEN_LABEL))
        .collect()
}

struct ClassIndex {
    /// Observed class codes, ascending.
    classes: Vec<u32>,
    /// Row indices per class, aligned with `classes`.
    rows: Vec<Vec<usize>>,
}

fn class_index(label_codes: &[u32]) -> Result<ClassIndex> {
    let mut classes: Vec<u32> = label_codes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses);
    }
    let rows = classes
        .iter()
        .map(|&c| {
            label_codes
                .iter()
                .enumerate()
                .filter_map(|(i, &lc)| (lc == c).then_some(i))
                .collect()
        })
        .collect();
    Ok(ClassIndex { classes, rows })
}

fn predict_gaussian_pooled(
    train_x: &[Vec<f64>],
    test_x: &[Vec<f64>],
    index: &ClassIndex,
) -> Result<Vec<u32>> {
    let n = train_x.len();
    let k = train_x[0].len();
    let n_classes = index.classes.len();
    if n <= n_classes {
        return Err(Error::SingularCovariance);
    }

    let means: Vec<DVector<f64>> = index
        .rows
        .iter()
        .map(|rows| {
            let mut mu = DVector::zeros(k);
            for &r in rows {
                mu += DVector::from_column_slice(&train_x[r]);
            }
            mu / rows.len() as f64
        })
        .collect();

    let mut scatter = DMatrix::zeros(k, k);
    for (rows, mu) in index.rows.iter().zip(&means) {
        for &r in rows {
            let d = DVector::from_column_slice(&train_x[r]) - mu;
            scatter += &d * d.transpose();
        }
    }
    let cov = scatter / (n - n_classes) as f64;
    let chol = Cholesky::new(cov).ok_or(Error::SingularCovariance)?;

    let priors: Vec<f64> = index
        .rows
        .iter()
        .map(|rows| (rows.len() as f64 / n as f64).ln())
        .collect();

    Ok(test_x
        .iter()
        .map(|row| {
            let x = DVector::from_column_slice(row);
            let mut best = (index.classes[0], f64::NEG_INFINITY);
            for (ci, mu) in means.iter().enumerate() {
                let d = &x - mu;
                let maha = chol.solve(&d).dot(&d);
                let score = priors[ci] - 0.5 * maha;
                if score > best.1 {
                    best = (index.classes[ci], score);
                }
            }
            best.0
        })
        .collect())
}

fn predict_gaussian_diagonal(
    train_x: &[Vec<f64>],
    test_x: &[Vec<f64>],
    index: &ClassIndex,
) -> Vec<u32> {
    let n = train_x.len();
    let k = train_x[0].len();

    struct ClassStats {
        code: u32,
        mean: Vec<f64>,
        var: Vec<f64>,
        log_prior: f64,
    }
    let stats: Vec<ClassStats> = index
        .rows
        .iter()
        .zip(&index.classes)
        .map(|(rows, &code)| {
            let nc = rows.len() as f64;
            let mut mean = vec![0.0; k];
            for &r in rows {
                for (m, &v) in mean.iter_mut().zip(&train_x[r]) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= nc;
            }
            let mut var = vec![0.0; k];
            for &r in rows {
                for ((s, &v), &m) in var.iter_mut().zip(&train_x[r]).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in &mut var {
                *s = (*s / nc).max(VARIANCE_FLOOR);
            }
            ClassStats {
                code,
                mean,
                var,
                log_prior: (nc / n as f64).ln(),
            }
        })
        .collect();

    test_x
        .iter()
        .map(|row| {
            let mut best = (stats[0].code, f64::NEG_INFINITY);
            for st in &stats {
                let mut ll = st.log_prior;
                for ((&v, &m), &s2) in row.iter().zip(&st.mean).zip(&st.var) {
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2);
                }
                if ll > best.1 {
                    best = (st.code, ll);
                }
            }
            best.0
        })
        .collect()
}

fn predict_knn(
    train_x: &[Vec<f64>],
    train_labels: &[u32],
    test_x: &[Vec<f64>],
    label_card: u32,
    k_neighbors: usize,
) -> Vec<u32> {
    let n = train_x.len();
    let dims = train_x[0].len();

    // z-score standardization from training statistics; a zero spread leaves
    // the column centered but unscaled.
    let mut mean = vec![0.0; dims];
    for row in train_x {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut std = vec![0.0; dims];
    for row in train_x {
        for ((s, &v), &m) in std.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let scale = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .zip(&mean)
            .zip(&std)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    };
    let train_scaled: Vec<Vec<f64>> = train_x.iter().map(|r| scale(r)).collect();
    let k = k_neighbors.min(n);

    test_x
        .iter()
        .map(|row| {
            let x = scale(row);
            let mut dist: Vec<(f64, usize)> = train_scaled
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let d2: f64 = x.iter().zip(t).map(|(&a, &b)| (a - b) * (a - b)).sum();
                    (d2, i)
                })
                .collect();
            // Distance ties break toward the lower training-row index.
            dist.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; label_card as usize];
            for &(_, i) in dist.iter().take(k) {
                votes[train_labels[i] as usize] += 1;
            }
            // Vote ties break toward the smaller class code.
            let mut best = (0u32, 0usize);
            for (code, &v) in votes.iter().enumerate() {
                if v > best.1 {
                    best = (code as u32, v);
                }
            }
            best.0
        })
        .collect()
}

/// Fits the given classifier to the training rows restricted to the mask and
/// predicts class codes for the test rows. The pooled-Gaussian pathway
/// reports `SingularCovariance` when the pooled covariance cannot be
/// inverted; the diagonal pathway never does thanks to its variance floor.
pub fn fit_predict(
    spec: &ClassifierSpec,
    train: &Dataset,
    test: &Dataset,
    mask: &Mask,
    ddata_train: &DiscretizedDataset,
) -> Result<Vec<u32>> {
    let selected = mask.selected_indices();
    if selected.is_empty() {
        return Err(Error::EmptyMask);
    }
    let index = class_index(&ddata_train.label_codes)?;
    let train_x = feature_rows(train, &selected);
    let test_x = feature_rows(test, &selected);
    if test_x.is_empty() {
        return Ok(Vec::new());
    }
    match spec.kind {
        ClassifierKind::GaussianPooled => predict_gaussian_pooled(&train_x, &test_x, &index),
        ClassifierKind::GaussianDiagonal => {
            Ok(predict_gaussian_diagonal(&train_x, &test_x, &index))
        }
        ClassifierKind::Knn => Ok(predict_knn(
            &train_x,
            &ddata_train.label_codes,
            &test_x,
            ddata_train.label_card,
            spec.k_neighbors,
        )),
    }
}

/// Misclassified observations divided by the observation count.
pub fn mce(predicted: &[u32], actual: &[u32]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let wrong = predicted
        .iter()
        .zip(actual)
        .filter(|(p, a)| p != a)
        .count();
    Ok(wrong as f64 / predicted.len() as f64)
}

/// Relative information gap |I(U;y) - H(y)| / I(U;y); +infinity when the
/// selected subset carries no information about the label.
pub fn delta_ir(mask: &Mask, ddata: &DiscretizedDataset) -> f64 {
    let i = ce::score(mask, ddata).bits();
    if i == 0.0 {
        return f64::INFINITY;
    }
    let y = infotheory::joint_encode(&[ddata.label_codes.as_slice()]).expect("non-empty");
    let hy = infotheory::entropy(&y).bits();
    (i - hy).abs() / i
}

fn baseline_order(method: Method, ddata: &DiscretizedDataset, k: usize) -> Result<Vec<usize>> {
    let ranked = match method {
        Method::Mim => baselines::rank_mim(ddata, k)?,
        Method::Cmim => baselines::select_cmim(ddata, k)?,
        Method::Mrmr => baselines::select_mrmr(ddata, k)?,
        Method::Disr => baselines::select_disr(ddata, k)?,
        Method::Ce => unreachable!("ce has no ranked order"),
    };
    Ok(ranked.order)
}

fn not_evaluable(err: &Error) -> bool {
    matches!(err, Error::SingularCovariance | Error::EmptyMask)
}

/// Full protocol: split, discretize the training side, run the cross-entropy
/// selector to fix the cardinality k, run every other requested method at
/// that k, and evaluate each (method, classifier) pair on the held-out rows.
/// Deterministic for a fixed seed except for the wall-clock fields.
pub fn benchmark(
    d: &Dataset,
    methods: &[Method],
    ce_cfg: &CEConfig,
    protocol: &ProtocolConfig,
    specs: &[ClassifierSpec],
) -> Result<BenchmarkReport> {
    let requested: Vec<Method> = Method::ALL
        .iter()
        .copied()
        .filter(|m| methods.contains(m))
        .collect();
    if requested.is_empty() {
        return Ok(BenchmarkReport {
            dataset: d.name.clone(),
            seed: ce_cfg.seed,
            records: Vec::new(),
            ce: None,
            mrmr_variant: None,
        });
    }

    let (train, test) = split(d, &protocol.split)?;
    let ddata_train = discretize(&train, protocol.bins, protocol.label_bins)?;
    let m = ddata_train.m;

    // CE runs first regardless of the requested set: its automatic
    // cardinality fixes k for every baseline.
    let ce_result = ce::run(&ddata_train, ce_cfg)?;
    let k = ce_result.mask.cardinality().clamp(1, m);
    let actual = encode_test_labels(&ddata_train, &test);

    let mut records = Vec::new();
    for method in &requested {
        let (mask, delta_t) = match method {
            Method::Ce => (ce_result.mask.clone(), ce_result.elapsed_seconds),
            baseline => {
                let t0 = Instant::now();
                let order = baseline_order(*baseline, &ddata_train, k)?;
                (Mask::from_indices(m, &order), t0.elapsed().as_secs_f64())
            }
        };
        let dir = delta_ir(&mask, &ddata_train);
        for spec in specs {
            let mce_value = match fit_predict(spec, &train, &test, &mask, &ddata_train) {
                Ok(pred) => Some(mce(&pred, &actual)?),
                Err(ref e) if not_evaluable(e) => None,
                Err(e) => return Err(e),
            };
            records.push(MetricRecord {
                method: method.to_string(),
                classifier: spec.name(),
                cardinality: mask.cardinality(),
                mce: mce_value,
                delta_ir: dir,
                delta_t,
            });
        }
    }

    Ok(BenchmarkReport {
        dataset: d.name.clone(),
        seed: ce_cfg.seed,
        records,
        ce: Some(SelectionReport::new(&ce_result, &ddata_train)),
        mrmr_variant: requested
            .contains(&Method::Mrmr)
            .then(|| "difference".to_string()),
    })
}

/// One point of a cardinality sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub mce: Option<f64>,
    #[serde(with = "crate::report::inf_as_null")]
    pub delta_ir: f64,
}

/// Metric curves against the number of retained features. Baselines
/// contribute prefixes of their ranked order; the cross-entropy method
/// contributes its top-k model coordinates by descending probability.
pub fn sweep_cardinality(
    method: Method,
    train: &Dataset,
    test: &Dataset,
    ddata_train: &DiscretizedDataset,
    k_values: &[usize],
    spec: &ClassifierSpec,
    ce_cfg: &CEConfig,
) -> Result<Vec<SweepPoint>> {
    let m = ddata_train.m;
    if k_values.is_empty() {
        return Err(Error::InvalidK { k: 0, m });
    }
    for &k in k_values {
        if k < 1 || k > m {
            return Err(Error::InvalidK { k, m });
        }
    }
    let max_k = *k_values.iter().max().unwrap();

    let order: Vec<usize> = match method {
        Method::Ce => {
            let result = ce::run(ddata_train, ce_cfg)?;
            let p = result.final_p.probabilities();
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
            idx
        }
        baseline => baseline_order(baseline, ddata_train, max_k)?,
    };

    let actual = encode_test_labels(ddata_train, test);
    let mut points = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mask = Mask::from_indices(m, &order[..k]);
        let mce_value = match fit_predict(spec, train, test, &mask, ddata_train) {
            Ok(pred) => Some(mce(&pred, &actual)?),
            Err(ref e) if not_evaluable(e) => None,
            Err(e) => return Err(e),
        };
        points.push(SweepPoint {
            k,
            mce: mce_value,
            delta_ir: delta_ir(&mask, ddata_train),
        });
    }
    Ok(points)
}
