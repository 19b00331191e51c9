//! Exploration-adjusted partner sampling.
//!
//! SUCG adds a visit-count exploration bonus to the incompatibility
//! distribution: `score(u) = phi(u) + c * sqrt(sum_i N(i)) / (1 + N(u))`.
//! Scores are normalized at draw time and partners are sampled i.i.d. with
//! replacement; every draw increments the drawn strategy's visit count.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game_graph::StrategyId;
use crate::scalar::{cast, to_f64, Scalar};
use crate::solver::IncompatibilityDistribution;

/// Per-strategy visit counts, persistent across generations within a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisitCounts {
    counts: BTreeMap<StrategyId, u64>,
}

impl VisitCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a strategy with zero visits.
    pub fn insert_new(&mut self, id: StrategyId) {
        self.counts.entry(id).or_insert(0);
    }

    pub fn remove(&mut self, id: StrategyId) {
        self.counts.remove(&id);
    }

    pub fn get(&self, id: StrategyId) -> Option<u64> {
        self.counts.get(&id).copied()
    }

    pub fn increment(&mut self, id: StrategyId) {
        *self.counts.entry(id).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StrategyId, u64)> + '_ {
        self.counts.iter().map(|(&id, &c)| (id, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// SUCG scores, parallel to the ids they were computed for. Kept as written
/// (not normalized) so the exploration bonus stays inspectable.
#[derive(Debug, Clone)]
pub struct SucgScores<S> {
    ids: Vec<StrategyId>,
    scores: Vec<S>,
}

impl<S: Scalar> SucgScores<S> {
    pub fn ids(&self) -> &[StrategyId] {
        &self.ids
    }

    pub fn scores(&self) -> &[S] {
        &self.scores
    }

    /// Construct directly from parallel vectors (tests, standalone analysis).
    pub fn from_parts(ids: Vec<StrategyId>, scores: Vec<S>) -> Self {
        assert_eq!(ids.len(), scores.len());
        SucgScores { ids, scores }
    }
}

/// Evaluate the SUCG formula for every strategy in `ids`.
///
/// `phi` is positional over `ids`; every id must have a visit count.
pub fn sucg_scores<S: Scalar>(
    phi: &IncompatibilityDistribution<S>,
    ids: &[StrategyId],
    counts: &VisitCounts,
    c: S,
) -> Result<SucgScores<S>> {
    assert_eq!(phi.len(), ids.len(), "phi and ids must be parallel");
    let mut total_visits = 0u64;
    for &id in ids {
        total_visits += counts
            .get(id)
            .ok_or(Error::MissingVisitCount { id })?;
    }
    let bonus_root: S = cast((total_visits as f64).sqrt());
    let scores = ids
        .iter()
        .enumerate()
        .map(|(k, &id)| {
            let n_u = counts.get(id).expect("checked above");
            phi.get(k) + c * bonus_root / (S::one() + cast(n_u as f64))
        })
        .collect();
    Ok(SucgScores {
        ids: ids.to_vec(),
        scores,
    })
}

/// Draw `draws` partners i.i.d. with replacement, proportionally to the
/// scores. Each draw increments the drawn id's visit count immediately, so a
/// caller sampling in a loop sees the exploration bonus decay within a batch
/// of draws only through subsequent `sucg_scores` calls.
pub fn sample_partners<S: Scalar, R: Rng>(
    scores: &SucgScores<S>,
    draws: usize,
    counts: &mut VisitCounts,
    rng: &mut R,
) -> Result<Vec<StrategyId>> {
    if draws == 0 {
        return Ok(Vec::new());
    }
    let weights: Vec<f64> = scores.scores().iter().map(|&s| to_f64(s)).collect();
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::NegativeWeight {
            index: weights.iter().position(|&w| w < 0.0).unwrap(),
        });
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroScores);
    }

    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = scores.ids().len() - 1;
        for (k, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let id = scores.ids()[chosen];
        counts.increment(id);
        out.push(id);
    }
    Ok(out)
}
