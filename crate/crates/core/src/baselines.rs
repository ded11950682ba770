//! Greedy information-theoretic ranking baselines: MIM, CMIM, mRMR and DISR.
//!
//! All four operate on the same plug-in estimators and take the target
//! cardinality k from the caller. Ties always break toward the lower feature
//! index, and per-candidate criterion evaluation within a greedy step runs in
//! parallel without affecting that ordering.

use crate::data::DiscretizedDataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::infotheory::{self, JointStateColumn};

/// Features in selection order with the criterion score of each pick.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSelection {
    pub order: Vec<usize>,
    pub criterion_values: Vec<f64>,
}

struct Context {
    cols: Vec<JointStateColumn>,
    label: JointStateColumn,
    /// I(x_j; y) per feature.
    relevance: Vec<f64>,
}

impl Context {
    fn build(ddata: &DiscretizedDataset) -> Self {
        let cols: Vec<JointStateColumn> = ddata
            .codes
            .iter()
            .map(|c| infotheory::joint_encode(&[c.as_slice()]).expect("non-empty"))
            .collect();
        let label = infotheory::joint_encode(&[ddata.label_codes.as_slice()]).expect("non-empty");
        let relevance = exec::map_ordered(&cols, |c| {
            infotheory::mutual_information(c, &label)
                .expect("equal lengths")
                .bits()
        });
        Context {
            cols,
            label,
            relevance,
        }
    }
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k >= 1 && k <= m {
        Ok(())
    } else {
        Err(Error::InvalidK { k, m })
    }
}

/// Index of the maximal score, ties resolved toward the lower index.
fn argmax(indices: &[usize], scores: &[f64]) -> usize {
    let mut best = indices[0];
    let mut best_score = scores[0];
    for (&i, &s) in indices.iter().zip(scores) {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Ranks features by I(x_j; y) alone and returns the top k.
pub fn rank_mim(ddata: &DiscretizedDataset, k: usize) -> Result<RankedSelection> {
    check_k(k, ddata.m)?;
    let ctx = Context::build(ddata);
    let mut order: Vec<usize> = (0..ddata.m).collect();
    order.sort_by(|&a, &b| {
        ctx.relevance[b]
            .partial_cmp(&ctx.relevance[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let criterion_values = order.iter().map(|&i| ctx.relevance[i]).collect();
    Ok(RankedSelection {
        order,
        criterion_values,
    })
}

/// Shared greedy driver. `term` computes, for a candidate j and the most
/// recently picked feature s, the new quantity folded into the candidate's
/// running state; `score` turns that state into the step criterion.
fn greedy<FTerm, FFold, FScore>(
    ctx: &Context,
    k: usize,
    first_scores: Vec<f64>,
    init: f64,
    term: FTerm,
    fold: FFold,
    score: FScore,
) -> RankedSelection
where
    FTerm: Fn(usize, usize) -> f64 + Sync + Send,
    FFold: Fn(f64, f64) -> f64,
    FScore: Fn(f64, usize, usize) -> f64,
{
    let m = ctx.cols.len();
    let all: Vec<usize> = (0..m).collect();
    let first = argmax(&all, &first_scores);

    let mut order = vec![first];
    let mut criterion_values = vec![first_scores[first]];
    let mut remaining: Vec<usize> = (0..m).filter(|&j| j != first).collect();
    let mut state = vec![init; m];

    while order.len() < k {
        let last = *order.last().unwrap();
        let new_terms = exec::map_ordered(&remaining, |&j| term(j, last));
        for (&j, &t) in remaining.iter().zip(&new_terms) {
            state[j] = fold(state[j], t);
        }
        let scores: Vec<f64> = remaining
            .iter()
            .map(|&j| score(state[j], j, order.len()))
            .collect();
        let pick = argmax(&remaining, &scores);
        let pick_pos = remaining.iter().position(|&j| j == pick).unwrap();
        criterion_values.push(scores[pick_pos]);
        order.push(pick);
        remaining.retain(|&j| j != pick);
    }
    RankedSelection {
        order,
        criterion_values,
    }
}

/// Conditional mutual information maximization: each step picks the candidate
/// maximizing min over already-picked s of I(x_j; y | x_s); the first pick is
/// the plain relevance maximizer.
pub fn select_cmim(ddata: &DiscretizedDataset, k: usize) -> Result<RankedSelection> {
    check_k(k, ddata.m)?;
    let ctx = Context::build(ddata);
    Ok(greedy(
        &ctx,
        k,
        ctx.relevance.clone(),
        f64::INFINITY,
        |j, s| {
            infotheory::conditional_mi(&ctx.cols[j], &ctx.label, &ctx.cols[s])
                .expect("equal lengths")
                .bits()
        },
        f64::min,
        |state, _, _| state,
    ))
}

/// Minimal-redundancy maximal-relevance, difference form: step score
/// I(x_j; y) - mean over picked s of I(x_j; x_s).
pub fn select_mrmr(ddata: &DiscretizedDataset, k: usize) -> Result<RankedSelection> {
    check_k(k, ddata.m)?;
    let ctx = Context::build(ddata);
    let relevance = ctx.relevance.clone();
    Ok(greedy(
        &ctx,
        k,
        relevance,
        0.0,
        |j, s| {
            infotheory::mutual_information(&ctx.cols[j], &ctx.cols[s])
                .expect("equal lengths")
                .bits()
        },
        |acc, t| acc + t,
        |redundancy, j, picked| ctx.relevance[j] - redundancy / picked as f64,
    ))
}

/// Double-input symmetrical relevance for a feature pair and the label; a
/// zero joint entropy contributes zero.
fn disr_term(a: &JointStateColumn, b: &JointStateColumn, y: &JointStateColumn) -> f64 {
    let pair = infotheory::joint_of(a, b).expect("equal lengths");
    let i = infotheory::mutual_information(&pair, y)
        .expect("equal lengths")
        .bits();
    let h = infotheory::entropy(&infotheory::joint_of(&pair, y).expect("equal lengths")).bits();
    if h > 0.0 {
        i / h
    } else {
        0.0
    }
}

/// DISR: step score sum over picked s of I(x_j,x_s; y) / H(x_j,x_s,y); the
/// first pick maximizes the single-feature symmetrical relevance
/// I(x_j; y) / H(x_j, y).
pub fn select_disr(ddata: &DiscretizedDataset, k: usize) -> Result<RankedSelection> {
    check_k(k, ddata.m)?;
    let ctx = Context::build(ddata);
    let first_scores = exec::map_ordered(&ctx.cols, |c| {
        let i = infotheory::mutual_information(c, &ctx.label)
            .expect("equal lengths")
            .bits();
        let h = infotheory::entropy(&infotheory::joint_of(c, &ctx.label).expect("equal lengths"))
            .bits();
        if h > 0.0 {
            i / h
        } else {
            0.0
        }
    });
    Ok(greedy(
        &ctx,
        k,
        first_scores,
        0.0,
        |j, s| disr_term(&ctx.cols[j], &ctx.cols[s], &ctx.label),
        |acc, t| acc + t,
        |acc, _, _| acc,
    ))
}
