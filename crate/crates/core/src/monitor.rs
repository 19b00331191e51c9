//! Offline convergence diagnostics over generation traces.
//!
//! For each generation the preference graph is recomputed from the stored
//! payoff snapshot. The group `g_t` collects the k lowest-centrality
//! strategies; when the oracle's rank condition held at both ends of a
//! transition, the maximum eta within the group must not increase. The
//! successive ratios of the new-strategy eta sequence diagnose the
//! convergence rate (they approach 1 under in-degree centrality).

use crate::engine::GenerationTrace;
use crate::error::{Error, Result};
use crate::game_graph::{build_game_graph, build_preference_graph, preference_centrality};

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `(generation, max eta within the k lowest-eta strategies)`.
    pub group_max_eta: Vec<(u32, f64)>,
    /// True when no gated transition increased the group maximum.
    pub monotonic: bool,
    /// Generations `t+1` whose gated transition increased the group maximum.
    pub violations: Vec<u32>,
    /// Generations `t+1` excluded from the check because the rank condition
    /// failed at either end of the transition, or because a snapshot holds
    /// fewer than k strategies (the group is undefined there).
    pub excluded_transitions: Vec<u32>,
    /// `(generation t+1, eta_{t+1} / eta_t)` over consecutive new-strategy
    /// etas, skipping pairs with a zero term.
    pub eta_ratios: Vec<(u32, f64)>,
}

pub fn convergence_monitor(trace: &GenerationTrace, k: usize) -> Result<ConvergenceReport> {
    if trace.records.len() < 2 {
        return Err(Error::TraceTooShort {
            got: trace.records.len(),
        });
    }
    assert_eq!(trace.records.len(), trace.snapshots.len());

    let mut group_max_eta = Vec::with_capacity(trace.records.len());
    let mut sizes = Vec::with_capacity(trace.records.len());
    for (record, snapshot) in trace.records.iter().zip(&trace.snapshots) {
        let pref = build_preference_graph(&build_game_graph(snapshot.clone()))?;
        let report = preference_centrality::<f64>(&pref);
        let mut etas: Vec<f64> = report.etas().to_vec();
        etas.sort_by(|a, b| a.partial_cmp(b).expect("finite etas"));
        let take = k.min(etas.len());
        group_max_eta.push((record.generation, etas[take - 1]));
        sizes.push(etas.len());
    }

    let mut violations = Vec::new();
    let mut excluded_transitions = Vec::new();
    for (i, w) in trace.records.windows(2).enumerate() {
        let t_next = w[1].generation;
        let both_satisfied = w[0].rank_satisfied && w[1].rank_satisfied;
        let groups_defined = sizes[i] >= k && sizes[i + 1] >= k;
        if !(both_satisfied && groups_defined) {
            excluded_transitions.push(t_next);
            continue;
        }
        if group_max_eta[i + 1].1 > group_max_eta[i].1 {
            violations.push(t_next);
        }
    }

    let mut eta_ratios = Vec::new();
    for w in trace.records.windows(2) {
        if w[0].eta > 0.0 && w[1].eta > 0.0 {
            eta_ratios.push((w[1].generation, w[1].eta / w[0].eta));
        }
    }

    Ok(ConvergenceReport {
        monotonic: violations.is_empty(),
        group_max_eta,
        violations,
        excluded_transitions,
        eta_ratios,
    })
}

/// Render the report as a stable plain-text block.
pub fn render_report(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("monotonic={}\n", report.monotonic));
    out.push_str(&format!(
        "violations={}\n",
        join_u32(&report.violations)
    ));
    out.push_str(&format!(
        "excluded_transitions={}\n",
        join_u32(&report.excluded_transitions)
    ));
    out.push_str("generation,group_max_eta\n");
    for (t, eta) in &report.group_max_eta {
        out.push_str(&format!("{t},{}\n", crate::csv::fmt_float(*eta)));
    }
    out.push_str("generation,eta_ratio\n");
    for (t, ratio) in &report.eta_ratios {
        out.push_str(&format!("{t},{}\n", crate::csv::fmt_float(*ratio)));
    }
    out
}

fn join_u32(xs: &[u32]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}
