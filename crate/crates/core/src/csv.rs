//! CSV emit/parse for every report format.
//!
//! All formats are plain comma-separated text with floats printed at 17
//! significant digits so that `parse(emit(x)) == x` holds bit-exactly.

use crate::analysis::{CentralityMatrix, CentralityMatrixRow, CrossPlayRow, SeriesRow};
use crate::env::{Strategy, StrategyParams};
use crate::error::{Error, Result};
use crate::game_graph::{CentralityReport, PayoffMatrix, PreferenceGraph, StrategyId};
use crate::sampler::VisitCounts;
use crate::solver::SolverReport;

/// Shortest representation is not stable across values; a fixed 17
/// significant digits round-trips every f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad float {s:?}: {e}"),
    })
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|e| Error::Parse {
        line,
        message: format!("bad integer {s:?}: {e}"),
    })
}

fn split_fields(row: &str, expected: usize, line: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != expected {
        return Err(Error::Parse {
            line,
            message: format!("expected {expected} fields, got {}", fields.len()),
        });
    }
    Ok(fields)
}

// ---------------------------------------------------------------------------
// Payoff matrix: `n=<count>` then n rows of n comma-separated values.
// ---------------------------------------------------------------------------

pub fn write_payoff_csv(m: &PayoffMatrix<f64>) -> String {
    let mut out = format!("n={}\n", m.n());
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_payoff_csv(text: &str) -> Result<PayoffMatrix<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty payoff file".into(),
    })?;
    let n = header
        .trim()
        .strip_prefix("n=")
        .ok_or(Error::Parse {
            line: 1,
            message: "expected `n=<count>` header".into(),
        })
        .and_then(|v| parse_usize(v, 1))?;
    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for (idx, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let fields = split_fields(row, n, idx + 1)?;
        for f in fields {
            entries.push(parse_float(f, idx + 1)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: rows + 1,
            message: format!("expected {n} rows, got {rows}"),
        });
    }
    PayoffMatrix::new(n, entries)
}

// ---------------------------------------------------------------------------
// Preference graph + centrality: `id,out_edge,in_degree,eta`.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceRow {
    pub id: StrategyId,
    pub out_edge: StrategyId,
    pub in_degree: usize,
    pub eta: f64,
}

pub fn write_preference_csv(p: &PreferenceGraph, c: &CentralityReport<f64>) -> String {
    let mut out = String::from("id,out_edge,in_degree,eta\n");
    for (k, (from, to)) in p.edges().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            from,
            to,
            c.in_degrees()[k],
            fmt_float(c.etas()[k])
        ));
    }
    out
}

pub fn read_preference_csv(text: &str) -> Result<Vec<PreferenceRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 4, idx + 1)?;
        rows.push(PreferenceRow {
            id: StrategyId(parse_usize(f[0], idx + 1)?),
            out_edge: StrategyId(parse_usize(f[1], idx + 1)?),
            in_degree: parse_usize(f[2], idx + 1)?,
            eta: parse_float(f[3], idx + 1)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Population snapshot: header names carry the parameter layout.
// ---------------------------------------------------------------------------

pub fn write_population_csv(pop: &[Strategy<f64>]) -> String {
    if pop.is_empty() {
        return String::from("id,birth_generation\n");
    }
    let a = pop[0].params.first_round.len();
    let two_stage = pop[0].params.response.is_some();
    let mut header = String::from("id,birth_generation");
    for i in 0..a {
        header.push_str(&format!(",fr{i}"));
    }
    if two_stage {
        for r in 0..a {
            for b in 0..a {
                header.push_str(&format!(",r{r}_{b}"));
            }
        }
    }
    header.push('\n');

    let mut out = header;
    for s in pop {
        let mut fields = vec![s.id.to_string(), s.birth_generation.to_string()];
        fields.extend(s.params.first_round.iter().map(|&v| fmt_float(v)));
        if let Some(resp) = &s.params.response {
            fields.extend(resp.iter().map(|&v| fmt_float(v)));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn read_population_csv(text: &str) -> Result<Vec<Strategy<f64>>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty population file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "id" || cols[1] != "birth_generation" {
        return Err(Error::Parse {
            line: 1,
            message: "expected `id,birth_generation,...` header".into(),
        });
    }
    let a = cols.iter().filter(|c| c.starts_with("fr")).count();
    let two_stage = cols.iter().any(|c| c.starts_with('r') && c.contains('_'));
    let expected = 2 + a + if two_stage { a * a } else { 0 };
    if cols.len() != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("inconsistent header: {} columns for A = {a}", cols.len()),
        });
    }

    let mut pop = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, expected, idx + 1)?;
        let first_round: Vec<f64> = f[2..2 + a]
            .iter()
            .map(|s| parse_float(s, idx + 1))
            .collect::<Result<_>>()?;
        let response = if two_stage {
            Some(
                f[2 + a..]
                    .iter()
                    .map(|s| parse_float(s, idx + 1))
                    .collect::<Result<Vec<f64>>>()?,
            )
        } else {
            None
        };
        pop.push(Strategy {
            id: StrategyId(parse_usize(f[0], idx + 1)?),
            birth_generation: f[1].trim().parse::<u64>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad generation: {e}"),
            })?,
            params: StrategyParams {
                first_round,
                response,
            },
        });
    }
    Ok(pop)
}

// ---------------------------------------------------------------------------
// Visit counts: `id,visits`.
// ---------------------------------------------------------------------------

pub fn write_visits_csv(counts: &VisitCounts) -> String {
    let mut out = String::from("id,visits\n");
    for (id, n) in counts.iter() {
        out.push_str(&format!("{id},{n}\n"));
    }
    out
}

pub fn read_visits_csv(text: &str) -> Result<Vec<(StrategyId, u64)>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 2, idx + 1)?;
        rows.push((
            StrategyId(parse_usize(f[0], idx + 1)?),
            f[1].trim().parse::<u64>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad count: {e}"),
            })?,
        ));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Solver report: `id,sigma_hat,sigma,shapley,phi` (shapley blank for the
// reward solver).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRow {
    pub id: StrategyId,
    pub sigma_hat: f64,
    pub sigma: f64,
    pub shapley: Option<f64>,
    pub phi: f64,
}

pub fn write_solver_csv(report: &SolverReport<f64>) -> String {
    let mut out = String::from("id,sigma_hat,sigma,shapley,phi\n");
    for k in 0..report.sigma.len() {
        let shapley = report
            .shapley
            .as_ref()
            .map(|est| fmt_float(est.values[k]))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            k,
            fmt_float(report.sigma_hat[k]),
            fmt_float(report.sigma[k]),
            shapley,
            fmt_float(report.phi.get(k))
        ));
    }
    out
}

pub fn read_solver_csv(text: &str) -> Result<Vec<SolverRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 5, idx + 1)?;
        rows.push(SolverRow {
            id: StrategyId(parse_usize(f[0], idx + 1)?),
            sigma_hat: parse_float(f[1], idx + 1)?,
            sigma: parse_float(f[2], idx + 1)?,
            shapley: if f[3].trim().is_empty() {
                None
            } else {
                Some(parse_float(f[3], idx + 1)?)
            },
            phi: parse_float(f[4], idx + 1)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Cross-play report: probe list line, then `id,min,mean,max`.
// ---------------------------------------------------------------------------

pub fn write_crossplay_csv(probe_ids: &[StrategyId], rows: &[CrossPlayRow]) -> String {
    let probes: Vec<String> = probe_ids.iter().map(|id| id.to_string()).collect();
    let mut out = format!("probes={}\n", probes.join(";"));
    out.push_str("id,min,mean,max\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            fmt_float(r.min),
            fmt_float(r.mean),
            fmt_float(r.max)
        ));
    }
    out
}

pub fn read_crossplay_csv(text: &str) -> Result<(Vec<StrategyId>, Vec<CrossPlayRow>)> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty cross-play file".into(),
    })?;
    let probes_str = first.trim().strip_prefix("probes=").ok_or(Error::Parse {
        line: 1,
        message: "expected `probes=<ids>` header".into(),
    })?;
    let probe_ids: Vec<StrategyId> = probes_str
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| parse_usize(s, 1).map(StrategyId))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (idx, line) in lines.skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 4, idx + 1)?;
        rows.push(CrossPlayRow {
            id: StrategyId(parse_usize(f[0], idx + 1)?),
            min: parse_float(f[1], idx + 1)?,
            mean: parse_float(f[2], idx + 1)?,
            max: parse_float(f[3], idx + 1)?,
        });
    }
    Ok((probe_ids, rows))
}

// ---------------------------------------------------------------------------
// Centrality matrix: one row per generation, one column per creation index,
// undefined cells blank.
// ---------------------------------------------------------------------------

pub fn write_centrality_matrix_csv(m: &CentralityMatrix) -> String {
    let mut header = String::from("generation");
    for id in 0..=m.max_id {
        header.push_str(&format!(",s{id}"));
    }
    header.push('\n');
    let mut out = header;
    for row in &m.rows {
        let mut fields = vec![row.generation.to_string()];
        for cell in &row.cells {
            fields.push(cell.map(fmt_float).unwrap_or_default());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn read_centrality_matrix_csv(text: &str) -> Result<CentralityMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty centrality matrix".into(),
    })?;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "expected at least one strategy column".into(),
        });
    }
    let max_id = cols - 2;
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, cols, idx + 1)?;
        let generation = parse_usize(f[0], idx + 1)? as u32;
        let cells = f[1..]
            .iter()
            .map(|s| {
                if s.trim().is_empty() {
                    Ok(None)
                } else {
                    parse_float(s, idx + 1).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(CentralityMatrixRow { generation, cells });
    }
    Ok(CentralityMatrix { max_id, rows })
}

// ---------------------------------------------------------------------------
// Per-generation eta/rank series.
// ---------------------------------------------------------------------------

pub fn write_series_csv(rows: &[SeriesRow]) -> String {
    let mut out = String::from("generation,new_id,eta,rank,rank_satisfied\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.generation,
            r.new_id,
            fmt_float(r.eta),
            r.rank,
            r.rank_satisfied
        ));
    }
    out
}

pub fn read_series_csv(text: &str) -> Result<Vec<SeriesRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 5, idx + 1)?;
        rows.push(SeriesRow {
            generation: parse_usize(f[0], idx + 1)? as u32,
            new_id: StrategyId(parse_usize(f[1], idx + 1)?),
            eta: parse_float(f[2], idx + 1)?,
            rank: parse_usize(f[3], idx + 1)?,
            rank_satisfied: match f[4].trim() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("bad bool {other:?}"),
                    })
                }
            },
        });
    }
    Ok(rows)
}
