//! Graphic-form games.
//!
//! A population of strategies with pairwise expected common payoffs is viewed
//! as a complete weighted digraph (the game graph). Keeping, per node, only
//! the maximum-weight out-edge to another node yields the preference graph,
//! whose in-degrees measure how strongly each strategy is preferred as a
//! partner. Preference centrality is `eta(i) = 1 - in_degree(i) / (n - 1)`;
//! `eta = 0` means every other strategy prefers `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cast, from_count, Scalar};

/// Identifier of a strategy, assigned in creation order and never reused.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct StrategyId(pub usize);

impl std::fmt::Display for StrategyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for StrategyId {
    fn from(index: usize) -> Self {
        StrategyId(index)
    }
}

/// Dense n-by-n matrix of expected common payoffs, row-major.
///
/// Entries are validated finite on construction; the `symmetric` flag is
/// detected from the data (exact equality) so it can never be stale.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<S> {
    n: usize,
    entries: Vec<S>,
    symmetric: bool,
}

impl<S: Scalar> PayoffMatrix<S> {
    pub fn new(n: usize, entries: Vec<S>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != n * n {
            return Err(Error::BadDimensions {
                expected: n * n,
                got: entries.len(),
            });
        }
        for (idx, &w) in entries.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / n,
                    col: idx % n,
                });
            }
        }
        let symmetric = (0..n).all(|i| (i + 1..n).all(|j| entries[i * n + j] == entries[j * n + i]));
        Ok(PayoffMatrix {
            n,
            entries,
            symmetric,
        })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(Error::BadDimensions {
                    expected: n * n,
                    got: row.len() * n,
                });
            }
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    /// Build entry-by-entry from a closure over `(row, col)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(n, entries)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> S {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Submatrix over the given row/column positions, in the given order.
    pub fn submatrix(&self, positions: &[usize]) -> Result<Self> {
        Self::from_fn(positions.len(), |a, b| {
            self.entry(positions[a], positions[b])
        })
    }
}

/// Complete weighted digraph over a set of strategies, self-loops included.
#[derive(Debug, Clone)]
pub struct GameGraph<S> {
    nodes: Vec<StrategyId>,
    payoff: PayoffMatrix<S>,
}

impl<S: Scalar> GameGraph<S> {
    /// Graph with nodes labelled by explicit ids (creation order preserved).
    pub fn with_nodes(payoff: PayoffMatrix<S>, nodes: Vec<StrategyId>) -> Result<Self> {
        if nodes.len() != payoff.n() {
            return Err(Error::BadDimensions {
                expected: payoff.n(),
                got: nodes.len(),
            });
        }
        Ok(GameGraph { nodes, payoff })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.payoff.n()
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> S {
        self.payoff.entry(i, j)
    }

    pub fn nodes(&self) -> &[StrategyId] {
        &self.nodes
    }

    pub fn payoff(&self) -> &PayoffMatrix<S> {
        &self.payoff
    }
}

/// Mirror a payoff matrix into a game graph with nodes `0..n`.
pub fn build_game_graph<S: Scalar>(payoff: PayoffMatrix<S>) -> GameGraph<S> {
    let nodes = (0..payoff.n()).map(StrategyId).collect();
    GameGraph { nodes, payoff }
}

/// One argmax out-edge per node, self-loop excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceGraph {
    nodes: Vec<StrategyId>,
    /// `out[k]` is the position (within `nodes`) of the partner `nodes[k]` prefers.
    out: Vec<usize>,
}

impl PreferenceGraph {
    #[inline]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[StrategyId] {
        &self.nodes
    }

    /// Preferred partner of the node at position `k`.
    #[inline]
    pub fn out_position(&self, k: usize) -> usize {
        self.out[k]
    }

    /// Preferred partner by id; `None` if the id is not in the graph.
    pub fn out_edge(&self, id: StrategyId) -> Option<StrategyId> {
        let k = self.nodes.iter().position(|&v| v == id)?;
        Some(self.nodes[self.out[k]])
    }

    /// All edges as `(from, to)` id pairs, in node order.
    pub fn edges(&self) -> impl Iterator<Item = (StrategyId, StrategyId)> + '_ {
        self.nodes
            .iter()
            .zip(&self.out)
            .map(|(&from, &to)| (from, self.nodes[to]))
    }
}

/// Argmax out-edges; ties broken toward the earliest-created (smallest-position)
/// partner so the construction is deterministic.
pub fn build_preference_graph<S: Scalar>(g: &GameGraph<S>) -> Result<PreferenceGraph> {
    let n = g.n();
    if n < 2 {
        return Err(Error::PreferenceUndefined { n });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = usize::MAX;
        let mut best_w = S::neg_infinity();
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = g.weight(i, j);
            if w > best_w {
                best_w = w;
                best = j;
            }
        }
        out.push(best);
    }
    Ok(PreferenceGraph {
        nodes: g.nodes().to_vec(),
        out,
    })
}

/// In-degree preference centrality of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityReport<S> {
    nodes: Vec<StrategyId>,
    in_degree: Vec<usize>,
    eta: Vec<S>,
}

impl<S: Scalar> CentralityReport<S> {
    #[inline]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[StrategyId] {
        &self.nodes
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degree
    }

    pub fn etas(&self) -> &[S] {
        &self.eta
    }

    pub fn eta_of(&self, id: StrategyId) -> Option<S> {
        let k = self.nodes.iter().position(|&v| v == id)?;
        Some(self.eta[k])
    }

    pub fn in_degree_of(&self, id: StrategyId) -> Option<usize> {
        let k = self.nodes.iter().position(|&v| v == id)?;
        Some(self.in_degree[k])
    }
}

/// `eta(i) = 1 - in_degree(i) / (n - 1)`.
pub fn preference_centrality<S: Scalar>(p: &PreferenceGraph) -> CentralityReport<S> {
    let n = p.n();
    let mut in_degree = vec![0usize; n];
    for k in 0..n {
        in_degree[p.out_position(k)] += 1;
    }
    let denom: S = from_count(n - 1);
    let eta = in_degree
        .iter()
        .map(|&d| S::one() - from_count::<S>(d) / denom)
        .collect();
    CentralityReport {
        nodes: p.nodes().to_vec(),
        in_degree,
        eta,
    }
}

/// Preference graph and centrality of every creation-order prefix of length
/// `2..=n`. `order` must be a permutation of the node ids `0..n`; the last
/// entry equals the full-matrix preference graph.
pub fn sub_preference_graphs<S: Scalar>(
    payoff: &PayoffMatrix<S>,
    order: &[StrategyId],
) -> Result<Vec<(PreferenceGraph, CentralityReport<S>)>> {
    let n = payoff.n();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::NotAPermutation { n });
    }
    for id in order {
        if id.0 >= n || seen[id.0] {
            return Err(Error::NotAPermutation { n });
        }
        seen[id.0] = true;
    }
    if n < 2 {
        return Err(Error::PreferenceUndefined { n });
    }

    let positions: Vec<usize> = order.iter().map(|id| id.0).collect();
    let mut result = Vec::with_capacity(n - 1);
    for m in 2..=n {
        let sub = payoff.submatrix(&positions[..m])?;
        let graph = GameGraph::with_nodes(sub, order[..m].to_vec())?;
        let pref = build_preference_graph(&graph)?;
        let report = preference_centrality(&pref);
        result.push((pref, report));
    }
    Ok(result)
}

/// Convex mixture of payoff-matrix rows: `sum_i weights[i] * row_i`.
pub fn gamescape_mixture<S: Scalar>(payoff: &PayoffMatrix<S>, weights: &[S]) -> Result<Vec<S>> {
    let n = payoff.n();
    if weights.len() != n {
        return Err(Error::BadDimensions {
            expected: n,
            got: weights.len(),
        });
    }
    for (index, &w) in weights.iter().enumerate() {
        if w < S::zero() {
            return Err(Error::NegativeWeight { index });
        }
    }
    let sum = weights.iter().fold(S::zero(), |acc, &w| acc + w);
    if (sum - S::one()).abs() > cast(1e-9) {
        return Err(Error::WeightsOffSimplex {
            sum: crate::scalar::to_f64(sum),
        });
    }
    let mut out = vec![S::zero(); n];
    for (i, &w) in weights.iter().enumerate() {
        for (j, v) in payoff.row(i).iter().enumerate() {
            out[j] += w * *v;
        }
    }
    Ok(out)
}
