//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured margin. Tests share a lock so the runtime budgets they assert
//! are measured on an otherwise idle process.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock, PoisonError};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cefs_core::ce::{self, BernoulliModel, CEConfig, Mask};
use cefs_core::data::{discretize, load_csv, split, DiscretizedDataset, LabelSelector, SplitSpec};
use cefs_core::eval::{encode_test_labels, fit_predict, mce, ClassifierSpec};
use cefs_core::infotheory::{
    conditional_mi, entropy, joint_encode, mutual_information, JointStateColumn,
};

static GUARD: Mutex<()> = Mutex::new(());

fn lock() -> MutexGuard<'static, ()> {
    GUARD.lock().unwrap_or_else(PoisonError::into_inner)
}

fn wdbc_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.csv")
}

fn pass(name: &str, elapsed: Duration, detail: &str) {
    println!(
        "criterion {name}: PASS ({:.2}s, {detail})",
        elapsed.as_secs_f64()
    );
}

/// Per-coordinate elite means as exact rationals (count, total).
fn rational_means(masks: &[Mask]) -> Vec<(u64, u64)> {
    let m = masks[0].len();
    (0..m)
        .map(|i| {
            let count = masks.iter().filter(|mask| mask.is_set(i)).count() as u64;
            (count, masks.len() as u64)
        })
        .collect()
}

#[test]
fn criterion_01_closed_form_update_exactness() {
    let _g = lock();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE9);
    let mut checked = 0usize;
    for _ in 0..500 {
        let m = rng.random_range(1..=16);
        let e = rng.random_range(1..=64);
        let masks: Vec<Mask> = (0..e)
            .map(|_| Mask::from_bools((0..m).map(|_| rng.random_bool(0.5)).collect()))
            .collect();
        let elite: Vec<&Mask> = masks.iter().collect();
        let previous = BernoulliModel::uniform(m, rng.random_range(0.01..0.99));
        let updated = ce::update_probabilities(&elite, &previous, 1.0).unwrap();
        for (i, &(num, den)) in rational_means(&masks).iter().enumerate() {
            // The correctly rounded f64 value of the exact rational num/den.
            let expected = num as f64 / den as f64;
            assert_eq!(
                updated.probabilities()[i].to_bits(),
                expected.to_bits(),
                "coordinate {i}: {num}/{den}"
            );
            checked += 1;
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    pass(
        "01 (closed-form update exactness)",
        elapsed,
        &format!("500 elite sets, {checked} coordinates bit-exact"),
    );
}

fn elite_log_likelihood(masks: &[Mask], p: &[f64]) -> f64 {
    masks
        .iter()
        .map(|mask| {
            p.iter()
                .enumerate()
                .map(|(i, &pi)| if mask.is_set(i) { pi.ln() } else { (1.0 - pi).ln() })
                .sum::<f64>()
        })
        .sum()
}

#[test]
fn criterion_02_update_maximizes_likelihood() {
    let _g = lock();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11);
    for _ in 0..100 {
        let m = rng.random_range(1..=16);
        let e = rng.random_range(1..=64);
        let masks: Vec<Mask> = (0..e)
            .map(|_| Mask::from_bools((0..m).map(|_| rng.random_bool(0.5)).collect()))
            .collect();
        let elite: Vec<&Mask> = masks.iter().collect();
        let previous = BernoulliModel::uniform(m, 0.5);
        let fitted = ce::update_probabilities(&elite, &previous, 1.0).unwrap();
        let best = elite_log_likelihood(&masks, fitted.probabilities());
        for _ in 0..1000 {
            let perturbed: Vec<f64> = fitted
                .probabilities()
                .iter()
                .map(|&pi| (pi + rng.random_range(-0.3..0.3)).clamp(0.0, 1.0))
                .collect();
            let ll = elite_log_likelihood(&masks, &perturbed);
            assert!(
                best >= ll - 1e-12,
                "fitted {best} lost to perturbation {ll}"
            );
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(
        "02 (elite likelihood optimality)",
        elapsed,
        "100 elite sets x 1000 perturbations",
    );
}

#[test]
fn criterion_03_chain_rule_identity() {
    let _g = lock();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4A1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(4..=64);
        let k = rng.random_range(1..=5);
        let columns: Vec<Vec<u32>> = (0..k)
            .map(|_| {
                let card = rng.random_range(2..=4);
                (0..n).map(|_| rng.random_range(0..card)).collect()
            })
            .collect();
        let ycard = rng.random_range(2..=3);
        let label: Vec<u32> = (0..n).map(|_| rng.random_range(0..ycard)).collect();
        let y = joint_encode(&[label.as_slice()]).unwrap();

        // Random ordering of the telescoping sum.
        let mut order: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            order.swap(i, rng.random_range(0..=i));
        }

        let mut total = 0.0;
        let mut prefix: Vec<&[u32]> = Vec::new();
        for &j in &order {
            let x = joint_encode(&[columns[j].as_slice()]).unwrap();
            let u = if prefix.is_empty() {
                JointStateColumn::unit(n)
            } else {
                joint_encode(&prefix).unwrap()
            };
            total += conditional_mi(&x, &y, &u).unwrap().bits();
            prefix.push(&columns[j]);
        }
        let direct = mutual_information(&joint_encode(&prefix).unwrap(), &y)
            .unwrap()
            .bits();
        let gap = (total - direct).abs();
        worst = worst.max(gap);
        assert!(gap <= 1e-9, "chain rule broke by {gap}");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass(
        "03 (chain-rule identity)",
        elapsed,
        &format!("200 instances, worst gap {worst:.2e} bits"),
    );
}

fn random_instance(seed: u64, m: usize, n: usize) -> DiscretizedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let columns: Vec<Vec<u32>> = (0..m)
        .map(|_| {
            let card = rng.random_range(2..=3);
            (0..n).map(|_| rng.random_range(0..card)).collect()
        })
        .collect();
    DiscretizedDataset::from_codes(columns, label)
}

#[test]
fn criterion_04_exhaustive_subset_oracle() {
    let _g = lock();
    let t0 = Instant::now();
    let mut hits = 0usize;
    for seed in 0..20u64 {
        let dd = random_instance(1000 + seed, 10, 500);
        // Independent oracle: enumerate all 2^10 subsets.
        let mut exhaustive_max: f64 = 0.0;
        for bits in 1u32..(1 << 10) {
            let mask = Mask::from_bools((0..10).map(|i| bits >> i & 1 == 1).collect());
            exhaustive_max = exhaustive_max.max(ce::score(&mask, &dd).bits());
        }
        // A wider elite than the m/20 default keeps the refit from locking
        // onto the first sampled optimum before the model can mix.
        let cfg = CEConfig {
            seed,
            rho_coefficient: 2.0,
            ..CEConfig::default()
        };
        let result = ce::run(&dd, &cfg).unwrap();
        if (result.objective.bits() - exhaustive_max).abs() <= 1e-9 {
            hits += 1;
        }
        // Monotone tail: extraction may not beat the best sampled threshold
        // by more than extraction mismatch allows.
        let trace_max = result
            .gamma_trace
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            result.objective.bits() >= 0.95 * trace_max,
            "final objective {} below 0.95 x max trace {trace_max}",
            result.objective.bits()
        );
    }
    let elapsed = t0.elapsed();
    assert!(hits >= 18, "only {hits}/20 seeds reached the exhaustive max");
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(
        "04 (exhaustive subset oracle)",
        elapsed,
        &format!("{hits}/20 seeds matched the 2^10 maximum"),
    );
}

struct CardinalityRun {
    exact: bool,
    delta_ir: f64,
    iterations: usize,
    converged: bool,
    elapsed: Duration,
}

/// y is a deterministic parity of exactly features {2, 7, 14} out of m = 20.
fn planted_parity_runs() -> &'static Vec<CardinalityRun> {
    static RUNS: OnceLock<Vec<CardinalityRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        (0..10u64)
            .map(|seed| {
                let m = 20;
                let n = 2000;
                let core = [2usize, 7, 14];
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let columns: Vec<Vec<u32>> = (0..m)
                    .map(|_| (0..n).map(|_| rng.random_range(0..2u32)).collect())
                    .collect();
                let label: Vec<u32> = (0..n)
                    .map(|r| (columns[core[0]][r] + columns[core[1]][r] + columns[core[2]][r]) % 2)
                    .collect();
                let dd = DiscretizedDataset::from_codes(columns, label);
                // The size penalty prunes the plug-in estimator's monotone
                // inflation; the elite width matches criterion 4's choice.
                let cfg = CEConfig {
                    seed,
                    rho_coefficient: 2.5,
                    size_penalty: 0.01,
                    ..CEConfig::default()
                };
                let t0 = Instant::now();
                let result = ce::run(&dd, &cfg).unwrap();
                let elapsed = t0.elapsed();
                let delta_ir = cefs_core::eval::delta_ir(&result.mask, &dd);
                CardinalityRun {
                    exact: result.mask.selected_indices() == core.to_vec()
                        && delta_ir <= 0.05,
                    delta_ir,
                    iterations: result.iterations,
                    converged: result.converged,
                    elapsed,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_05_automatic_cardinality() {
    let _g = lock();
    let t0 = Instant::now();
    let runs = planted_parity_runs();
    let exact = runs.iter().filter(|r| r.exact).count();
    for (seed, run) in runs.iter().enumerate() {
        assert!(
            run.elapsed.as_secs_f64() <= 60.0,
            "seed {seed} took {:?}",
            run.elapsed
        );
    }
    assert!(exact >= 8, "only {exact}/10 seeds recovered the planted triple");
    let worst_dir = runs.iter().map(|r| r.delta_ir).fold(0.0f64, f64::max);
    pass(
        "05 (automatic cardinality)",
        t0.elapsed(),
        &format!("{exact}/10 seeds exact, worst dI_r {worst_dir:.3}"),
    );
}

#[test]
fn criterion_06_convergence_speed() {
    let _g = lock();
    let t0 = Instant::now();
    let runs = planted_parity_runs();
    let mean_iters =
        runs.iter().map(|r| r.iterations).sum::<usize>() as f64 / runs.len() as f64;
    assert!(mean_iters <= 30.0, "mean iterations {mean_iters}");
    assert!(
        runs.iter().all(|r| r.converged),
        "a run hit the iteration cap"
    );
    pass(
        "06 (convergence speed)",
        t0.elapsed(),
        &format!("mean {mean_iters:.1} iterations, all runs converged"),
    );
}

#[test]
fn criterion_07_wdbc_reproduction() {
    let _g = lock();
    let t0 = Instant::now();
    let d = load_csv(&wdbc_path(), &LabelSelector::Name("diagnosis".into()), true).unwrap();
    assert_eq!(d.n(), 569);
    assert!(d.m() <= 32);

    let mut mces = Vec::new();
    let mut cards = Vec::new();
    for seed in 0..10u64 {
        let spec = SplitSpec {
            train_fraction: 0.9,
            seed,
            stratified: false,
        };
        let (train, test) = split(&d, &spec).unwrap();
        let dd = discretize(&train, 10, 5).unwrap();
        let cfg = CEConfig {
            seed,
            ..CEConfig::default()
        };
        let result = ce::run(&dd, &cfg).unwrap();
        let actual = encode_test_labels(&dd, &test);
        let pred = fit_predict(
            &ClassifierSpec::gaussian_diagonal(),
            &train,
            &test,
            &result.mask,
            &dd,
        )
        .unwrap();
        mces.push(mce(&pred, &actual).unwrap());
        cards.push(result.mask.cardinality());
    }
    let mean_mce = mces.iter().sum::<f64>() / mces.len() as f64;
    let mean_card = cards.iter().sum::<usize>() as f64 / cards.len() as f64;
    let elapsed = t0.elapsed();
    assert!(mean_mce <= 0.08, "mean MCE {mean_mce}");
    assert!(
        (12.0..=28.0).contains(&mean_card),
        "mean cardinality {mean_card} outside [12, 28]"
    );
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    pass(
        "07 (WDBC desk-scale reproduction)",
        elapsed,
        &format!("mean MCE {mean_mce:.4} (paper 0.0371), mean cardinality {mean_card:.1} (paper 20)"),
    );
}

#[test]
fn criterion_08_baseline_first_pick_agreement() {
    let _g = lock();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1E5);
    for trial in 0..50 {
        // Random instance with a dominant feature (a noisy label copy), so
        // the relevance argmax is unambiguous and shared by all criteria.
        let n = rng.random_range(30..=60);
        let m = rng.random_range(3..=8);
        let ycard = rng.random_range(2..=3);
        let label: Vec<u32> = (0..n).map(|_| rng.random_range(0..ycard)).collect();
        let strong = rng.random_range(0..m);
        let columns: Vec<Vec<u32>> = (0..m)
            .map(|j| {
                if j == strong {
                    label
                        .iter()
                        .map(|&v| {
                            if rng.random_bool(0.1) {
                                rng.random_range(0..ycard)
                            } else {
                                v
                            }
                        })
                        .collect()
                } else {
                    let card = rng.random_range(2..=4);
                    (0..n).map(|_| rng.random_range(0..card)).collect()
                }
            })
            .collect();
        let dd = DiscretizedDataset::from_codes(columns, label);

        // Independent relevance oracle.
        let y = joint_encode(&[dd.label_codes.as_slice()]).unwrap();
        let relevance: Vec<f64> = dd
            .codes
            .iter()
            .map(|c| {
                let col = joint_encode(&[c.as_slice()]).unwrap();
                mutual_information(&col, &y).unwrap().bits()
            })
            .collect();
        let max = relevance.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let argmax: Vec<usize> = (0..dd.m)
            .filter(|&j| relevance[j] >= max - 1e-12)
            .collect();

        for (name, first) in [
            ("mim", cefs_core::baselines::rank_mim(&dd, 1).unwrap().order[0]),
            ("cmim", cefs_core::baselines::select_cmim(&dd, 1).unwrap().order[0]),
            ("mrmr", cefs_core::baselines::select_mrmr(&dd, 1).unwrap().order[0]),
            ("disr", cefs_core::baselines::select_disr(&dd, 1).unwrap().order[0]),
        ] {
            assert!(
                argmax.contains(&first),
                "trial {trial}: {name} first pick {first} not in argmax {argmax:?}"
            );
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass(
        "08 (baseline first-pick agreement)",
        elapsed,
        "50 instances, 4 selectors each",
    );
}

#[test]
fn criterion_09_not_evaluable_reproduction() {
    let _g = lock();
    let t0 = Instant::now();
    // One feature constant within every class and identical across classes:
    // the pooled covariance gains an exactly zero row.
    let n = 40;
    let label: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let flat = vec![5.0; n];
    let good: Vec<f64> = (0..n)
        .map(|i| (i % 2) as f64 * 10.0 + (i as f64) * 0.01)
        .collect();
    let train = cefs_core::data::Dataset::new(
        "flatline",
        vec![("flat".into(), flat), ("good".into(), good)],
        "y",
        label,
    )
    .unwrap();
    let test = cefs_core::data::Dataset::new(
        "flatline[test]",
        vec![
            ("flat".into(), vec![5.0, 5.0]),
            ("good".into(), vec![0.05, 10.05]),
        ],
        "y",
        vec![0.0, 1.0],
    )
    .unwrap();
    let dd = discretize(&train, 10, 5).unwrap();
    let mask = Mask::from_indices(2, &[0, 1]);

    let pooled = fit_predict(&ClassifierSpec::gaussian_pooled(), &train, &test, &mask, &dd);
    assert!(
        matches!(pooled.unwrap_err(), cefs_core::Error::SingularCovariance),
        "pooled pathway must report not-evaluable"
    );

    let diag = fit_predict(
        &ClassifierSpec::gaussian_diagonal(),
        &train,
        &test,
        &mask,
        &dd,
    )
    .unwrap();
    let actual = encode_test_labels(&dd, &test);
    let e = mce(&diag, &actual).unwrap();
    assert!((0.0..=1.0).contains(&e));
    pass(
        "09 (singular pooled covariance)",
        t0.elapsed(),
        &format!("pooled not evaluable, diagonal MCE {e}"),
    );
}

fn mask_timing(value: &mut serde_json::Value) {
    if let Some(m) = value.pointer_mut("/manifest/created_utc") {
        *m = serde_json::Value::String(String::new());
    }
    if let Some(e) = value.pointer_mut("/result/elapsed_seconds") {
        *e = serde_json::json!(0);
    }
    if let Some(e) = value.pointer_mut("/result/ce/elapsed_seconds") {
        *e = serde_json::json!(0);
    }
    if let Some(records) = value
        .pointer_mut("/result/records")
        .and_then(|r| r.as_array_mut())
    {
        for record in records {
            record["delta_t"] = serde_json::json!(0);
        }
    }
}

#[test]
fn criterion_10_cli_determinism() {
    let _g = lock();
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let mut body = String::from("a,b,c,d,y\n");
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..80 {
        let cls: u32 = rng.random_range(0..2);
        body.push_str(&format!(
            "{:.5},{:.5},{},{},{}\n",
            cls as f64 * 3.0 + rng.random_range(-0.5..0.5),
            rng.random_range(0.0..1.0),
            rng.random_range(0..4),
            rng.random_range(0..2),
            cls
        ));
    }
    let csv = dir.path().join("det.csv");
    std::fs::write(&csv, body).unwrap();

    let select_args = [
        "select",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--seed",
        "42",
    ];
    let bench_args = [
        "benchmark",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--seed",
        "42",
    ];
    for args in [&select_args[..], &bench_args[..]] {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = Command::new(env!("CARGO_BIN_EXE_cefs"))
                .args(args)
                .output()
                .unwrap();
            assert!(
                out.status.code() == Some(0) || out.status.code() == Some(2),
                "stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
            mask_timing(&mut v);
            outputs.push(serde_json::to_string_pretty(&v).unwrap());
        }
        assert_eq!(
            outputs[0].as_bytes(),
            outputs[1].as_bytes(),
            "{:?} runs diverged",
            args[0]
        );
    }
    pass(
        "10 (CLI determinism)",
        t0.elapsed(),
        "select and benchmark byte-identical with timing masked",
    );
}
