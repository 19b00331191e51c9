//! Trace analytics: centrality matrices, eta/rank series, incompatibility
//! verdicts, and cross-play evaluation.

use crate::engine::GenerationTrace;
use crate::env::{evaluate_pair, StageGame, Strategy};
use crate::error::{Error, Result};
use crate::game_graph::{sub_preference_graphs, PayoffMatrix, StrategyId};

/// Row = generation, column = strategy creation index, value = that
/// strategy's eta within the generation's preference graph; cells for
/// strategies absent from the snapshot stay blank.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityMatrix {
    pub max_id: usize,
    pub rows: Vec<CentralityMatrixRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityMatrixRow {
    pub generation: u32,
    pub cells: Vec<Option<f64>>,
}

pub fn centrality_matrix(trace: &GenerationTrace) -> Result<CentralityMatrix> {
    let max_id = trace
        .records
        .iter()
        .flat_map(|r| r.pop_ids.iter().map(|id| id.0))
        .max()
        .unwrap_or(0);
    let mut rows = Vec::with_capacity(trace.records.len());
    for (record, snapshot) in trace.records.iter().zip(&trace.snapshots) {
        let n = snapshot.n();
        let order: Vec<StrategyId> = (0..n).map(StrategyId).collect();
        let subs = sub_preference_graphs(snapshot, &order)?;
        let (_, centrality) = subs.last().expect("n >= 2 snapshots");
        let mut cells = vec![None; max_id + 1];
        for (pos, &eta) in centrality.etas().iter().enumerate() {
            cells[record.pop_ids[pos].0] = Some(eta);
        }
        rows.push(CentralityMatrixRow {
            generation: record.generation,
            cells,
        });
    }
    Ok(CentralityMatrix { max_id, rows })
}

/// Per-generation eta/rank series straight from the records.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub generation: u32,
    pub new_id: StrategyId,
    pub eta: f64,
    pub rank: usize,
    pub rank_satisfied: bool,
}

pub fn series(trace: &GenerationTrace) -> Vec<SeriesRow> {
    trace
        .records
        .iter()
        .map(|r| SeriesRow {
            generation: r.generation,
            new_id: r.new_id,
            eta: r.eta,
            rank: r.rank,
            rank_satisfied: r.rank_satisfied,
        })
        .collect()
}

/// Eta and optimistic ascending-eta rank of the node at `position` within a
/// snapshot, recomputed from scratch.
pub fn recompute_rank(snapshot: &PayoffMatrix<f64>, position: usize) -> Result<(f64, usize)> {
    use crate::game_graph::{build_game_graph, build_preference_graph, preference_centrality};
    let pref = build_preference_graph(&build_game_graph(snapshot.clone()))?;
    let report = preference_centrality::<f64>(&pref);
    let eta = report.etas()[position];
    let rank = 1 + report
        .etas()
        .iter()
        .enumerate()
        .filter(|&(k, &e)| k != position && e < eta)
        .count();
    Ok((eta, rank))
}

/// Fraction of generations whose new strategy reached rank <= k, recomputed
/// from the stored snapshots.
pub fn incompatibility_verdict(trace: &GenerationTrace, k: usize) -> Result<f64> {
    if trace.records.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for (record, snapshot) in trace.records.iter().zip(&trace.snapshots) {
        let position = record
            .pop_ids
            .iter()
            .position(|&id| id == record.new_id)
            .ok_or_else(|| Error::Parse {
                line: record.generation as usize,
                message: format!(
                    "generation {}: new_id {} missing from pop_ids",
                    record.generation, record.new_id
                ),
            })?;
        let (_, rank) = recompute_rank(snapshot, position)?;
        if rank <= k {
            hits += 1;
        }
    }
    Ok(hits as f64 / trace.records.len() as f64)
}

/// Cross-play summary of one strategy against a probe set.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPlayRow {
    pub id: StrategyId,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Evaluate every population strategy against every probe.
pub fn crossplay(
    pop: &[Strategy<f64>],
    probes: &[Strategy<f64>],
    env: &StageGame<f64>,
    seed: u64,
) -> Result<Vec<CrossPlayRow>> {
    if probes.is_empty() {
        return Err(Error::InvalidConfig {
            field: "probes".into(),
            message: "probe set must not be empty".into(),
        });
    }
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut rows = Vec::with_capacity(pop.len());
    for s in pop {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for probe in probes {
            let v = evaluate_pair(s, probe, env, seed)?;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        rows.push(CrossPlayRow {
            id: s.id,
            min,
            mean: sum / probes.len() as f64,
            max,
        });
    }
    Ok(rows)
}
