//! Generation loop: simulate, solve, train, expand.
//!
//! Each generation completes the payoff matrix (cache-incremental), derives
//! the incompatibility distribution with the configured solver, trains one
//! new strategy through the oracle, appends it, and evicts one of the oldest
//! strategies when the population exceeds its cap. Runs are deterministic
//! given the seed: every random draw comes from a stream derived from
//! (seed, purpose, generation).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::csv;
use crate::env::{complete_payoff_matrix, PairCache, StageGame, Strategy};
use crate::error::{Error, Result};
use crate::game_graph::{PayoffMatrix, StrategyId};
use crate::oracle::{train_oracle, OracleConfig};
use crate::sampler::VisitCounts;
use crate::seeds;
use crate::solver::{
    graphic_shapley_solver, incompatibility_distribution, reward_solver,
    IncompatibilityDistribution, SolverConfig,
};

/// How the random members of the initial population are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InitStyle {
    /// Uniform-simplex draws at every decision point.
    #[default]
    Stochastic,
    /// One pure action per decision point.
    Deterministic,
    /// Stubborn play of one uniformly drawn convention in every round.
    Convention,
    /// Stubborn play of convention `(i - 1) mod A` for the i-th member: one
    /// committed player per convention, cycling.
    Spectrum,
    /// Spectrum stubs first, then a uniform strategy as the newest member
    /// (the first training lineage starts from the uniform).
    SpectrumUniformLast,
}

impl std::str::FromStr for InitStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(InitStyle::Stochastic),
            "deterministic" => Ok(InitStyle::Deterministic),
            "convention" => Ok(InitStyle::Convention),
            "spectrum" => Ok(InitStyle::Spectrum),
            "spectrum-uniform-last" => Ok(InitStyle::SpectrumUniformLast),
            other => Err(Error::InvalidConfig {
                field: "init.style".into(),
                message: format!(
                    "expected `stochastic`, `deterministic`, `convention`, `spectrum` or `spectrum-uniform-last`, got {other:?}"
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverFlag {
    Sv,
    R,
}

impl std::fmt::Display for SolverFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverFlag::Sv => write!(f, "sv"),
            SolverFlag::R => write!(f, "r"),
        }
    }
}

impl std::str::FromStr for SolverFlag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sv" => Ok(SolverFlag::Sv),
            "r" => Ok(SolverFlag::R),
            other => Err(Error::InvalidConfig {
                field: "solver_flag".into(),
                message: format!("expected `sv` or `r`, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub solver_flag: SolverFlag,
    pub generations: u32,
    pub pop_cap: usize,
    pub evict_window: usize,
    pub seed: u64,
    pub sampler_c: f64,
    pub solver: SolverConfig<f64>,
    pub oracle: OracleConfig<f64>,
    pub env: StageGame<f64>,
    /// Initial population size.
    pub init_size: usize,
    pub init_style: InitStyle,
    /// Seed member 0 as the uniform strategy (the rest follow `init_style`).
    pub init_uniform_first: bool,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_cap < 1 {
            return Err(Error::InvalidConfig {
                field: "pop_cap".into(),
                message: "population cap must be at least 1".into(),
            });
        }
        if self.evict_window < 1 || self.evict_window > self.pop_cap {
            return Err(Error::InvalidConfig {
                field: "evict_window".into(),
                message: format!(
                    "eviction window must be within 1..={}, got {}",
                    self.pop_cap, self.evict_window
                ),
            });
        }
        if self.init_size < 1 {
            return Err(Error::InvalidConfig {
                field: "init.size".into(),
                message: "initial population needs at least one strategy".into(),
            });
        }
        if !(self.sampler_c >= 0.0 && self.sampler_c.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "sampler.c".into(),
                message: "exploration constant must be non-negative and finite".into(),
            });
        }
        self.oracle.validate()
    }
}

/// Everything recorded about one generation. `phi` and `payoff_row` are
/// positional over the pre-training population and the snapshot node order
/// respectively; `pop_ids` names the snapshot's rows (new strategy last,
/// captured before eviction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub new_id: StrategyId,
    pub eta: f64,
    pub rank: usize,
    pub rank_satisfied: bool,
    pub phi: Vec<f64>,
    pub payoff_row: Vec<f64>,
    pub evicted_id: Option<StrategyId>,
    pub pop_ids: Vec<StrategyId>,
}

/// Records plus the pre-eviction payoff snapshot per generation.
#[derive(Debug, Clone, Default)]
pub struct GenerationTrace {
    pub records: Vec<GenerationRecord>,
    pub snapshots: Vec<PayoffMatrix<f64>>,
}

/// Uniformly evict one of the `window` oldest strategies when the population
/// exceeds `cap`; drops the evicted strategy's visit counts and cache rows.
pub fn evict_if_full<R: rand::Rng>(
    pop: &mut Vec<Strategy<f64>>,
    cap: usize,
    window: usize,
    counts: &mut VisitCounts,
    cache: &mut PairCache<f64>,
    rng: &mut R,
) -> Option<StrategyId> {
    if pop.len() <= cap {
        return None;
    }
    // The population is kept in creation order, so the oldest sit first.
    let window = window.min(pop.len());
    let idx = rng.random_range(0..window);
    let evicted = pop.remove(idx);
    counts.remove(evicted.id);
    cache.remove_strategy(evicted.id);
    Some(evicted.id)
}

pub struct Engine {
    cfg: EngineConfig,
    pop: Vec<Strategy<f64>>,
    counts: VisitCounts,
    cache: PairCache<f64>,
    next_id: usize,
    generation: u32,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let mut init_rng = seeds::stream(cfg.seed, seeds::tag::INIT, 0);
        let mut pop = Vec::with_capacity(cfg.init_size);
        let mut counts = VisitCounts::new();
        for i in 0..cfg.init_size {
            let strategy = if i == 0 && cfg.init_uniform_first {
                Strategy::uniform(StrategyId(0), 0, &cfg.env)
            } else {
                match cfg.init_style {
                    InitStyle::Stochastic => {
                        Strategy::random(StrategyId(i), 0, &cfg.env, &mut init_rng)
                    }
                    InitStyle::Deterministic => {
                        Strategy::random_deterministic(StrategyId(i), 0, &cfg.env, &mut init_rng)
                    }
                    InitStyle::Convention => {
                        use rand::Rng;
                        let action = init_rng.random_range(0..cfg.env.actions());
                        Strategy::stubborn(StrategyId(i), 0, &cfg.env, action)
                    }
                    InitStyle::Spectrum => {
                        let offset = if cfg.init_uniform_first { i - 1 } else { i };
                        Strategy::stubborn(StrategyId(i), 0, &cfg.env, offset % cfg.env.actions())
                    }
                    InitStyle::SpectrumUniformLast => {
                        if i + 1 == cfg.init_size {
                            Strategy::uniform(StrategyId(i), 0, &cfg.env)
                        } else {
                            let offset = if cfg.init_uniform_first { i - 1 } else { i };
                            Strategy::stubborn(
                                StrategyId(i),
                                0,
                                &cfg.env,
                                offset % cfg.env.actions(),
                            )
                        }
                    }
                }
            };
            counts.insert_new(strategy.id);
            pop.push(strategy);
        }
        Ok(Engine {
            next_id: cfg.init_size,
            generation: 0,
            pop,
            counts,
            cache: PairCache::new(),
            cfg,
        })
    }

    pub fn population(&self) -> &[Strategy<f64>] {
        &self.pop
    }

    pub fn counts(&self) -> &VisitCounts {
        &self.counts
    }

    pub fn cache(&self) -> &PairCache<f64> {
        &self.cache
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Incompatibility distribution for the current population. A payoff
    /// matrix with all-zero off-diagonal entries carries no popularity
    /// information, so the solver's degenerate-graph error falls back to the
    /// uniform distribution rather than aborting the run.
    fn solve_phi(&self, payoff: &PayoffMatrix<f64>, t: u32) -> Result<IncompatibilityDistribution<f64>> {
        let n = payoff.n();
        if n == 1 {
            return Ok(incompatibility_distribution(&[1.0]));
        }
        let solved = match self.cfg.solver_flag {
            SolverFlag::Sv => {
                let mut rng = seeds::stream(self.cfg.seed, seeds::tag::SOLVER, t as u64);
                graphic_shapley_solver(payoff, &self.cfg.solver, &mut rng).map(|r| r.phi)
            }
            SolverFlag::R => reward_solver(payoff, &self.cfg.solver).map(|r| r.phi),
        };
        match solved {
            Ok(phi) => Ok(phi),
            Err(Error::DegenerateGraph) => Ok(incompatibility_distribution(&vec![1.0; n])),
            Err(e) => Err(e),
        }
    }

    /// Run one generation; returns the record and the pre-eviction payoff
    /// snapshot (population plus the freshly trained strategy).
    pub fn run_generation(&mut self) -> Result<(GenerationRecord, PayoffMatrix<f64>)> {
        if self.pop.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let t = self.generation + 1;
        let seed = self.cfg.seed;

        // Step 1: complete the payoff matrix.
        let payoff = complete_payoff_matrix(&self.pop, &self.cfg.env, &mut self.cache, seed)?;

        // Step 2: solve the incompatibility distribution.
        let phi = self.solve_phi(&payoff, t)?;

        // Step 3: approximate the best-preferred strategy.
        let s_init = self.pop.last().expect("non-empty").params.clone();
        let mut oracle_rng = seeds::stream(seed, seeds::tag::ORACLE, t as u64);
        let report = train_oracle(
            &s_init,
            &phi,
            &self.pop,
            &payoff,
            &self.cfg.env,
            &self.cfg.oracle,
            self.cfg.sampler_c,
            &mut self.counts,
            seed,
            &mut oracle_rng,
        )?;

        // Step 4: expand the population.
        let new_id = StrategyId(self.next_id);
        self.next_id += 1;
        let strategy = Strategy::from_params(
            new_id,
            t as u64,
            report.final_params.clone(),
            &self.cfg.env,
        )?;
        self.pop.push(strategy);
        self.counts.insert_new(new_id);

        // Snapshot before eviction so analyses see the full matrix.
        let n = payoff.n();
        let row = &report.payoff_row;
        let snapshot = PayoffMatrix::from_fn(n + 1, |i, j| {
            if i < n && j < n {
                payoff.entry(i, j)
            } else if i == n && j == n {
                row[n]
            } else if i == n {
                row[j]
            } else {
                row[i]
            }
        })?;
        let pop_ids: Vec<StrategyId> = self.pop.iter().map(|s| s.id).collect();

        let mut evict_rng = seeds::stream(seed, seeds::tag::EVICT, t as u64);
        let evicted_id = evict_if_full(
            &mut self.pop,
            self.cfg.pop_cap,
            self.cfg.evict_window,
            &mut self.counts,
            &mut self.cache,
            &mut evict_rng,
        );

        self.generation = t;
        let record = GenerationRecord {
            generation: t,
            new_id,
            eta: report.eta,
            rank: report.rank,
            rank_satisfied: report.rank_satisfied,
            phi: phi.as_slice().to_vec(),
            payoff_row: report.payoff_row,
            evicted_id,
            pop_ids,
        };
        Ok((record, snapshot))
    }
}

/// Run a full experiment in memory.
pub fn run_in_memory(cfg: EngineConfig) -> Result<GenerationTrace> {
    let generations = cfg.generations;
    let mut engine = Engine::new(cfg)?;
    let mut trace = GenerationTrace::default();
    for _ in 0..generations {
        let (record, snapshot) = engine.run_generation()?;
        trace.records.push(record);
        trace.snapshots.push(snapshot);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Run directory: config.snapshot, population/gen_<t>.csv, payoff/gen_<t>.csv,
// trace.jsonl, checkpoint.meta.
// ---------------------------------------------------------------------------

pub struct RunWriter {
    dir: PathBuf,
}

impl RunWriter {
    pub fn create(dir: &Path, config_snapshot_toml: &str) -> Result<Self> {
        fs::create_dir_all(dir.join("population"))?;
        fs::create_dir_all(dir.join("payoff"))?;
        fs::write(dir.join("config.snapshot"), config_snapshot_toml)?;
        fs::write(dir.join("trace.jsonl"), "")?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
        })
    }

    pub fn write_population(&self, t: u32, pop: &[Strategy<f64>], counts: &VisitCounts) -> Result<()> {
        fs::write(
            self.dir.join(format!("population/gen_{t}.csv")),
            csv::write_population_csv(pop),
        )?;
        fs::write(
            self.dir.join(format!("population/gen_{t}_visits.csv")),
            csv::write_visits_csv(counts),
        )?;
        Ok(())
    }

    pub fn append_generation(
        &self,
        record: &GenerationRecord,
        snapshot: &PayoffMatrix<f64>,
        pop: &[Strategy<f64>],
        counts: &VisitCounts,
        seed: u64,
        next_id: usize,
    ) -> Result<()> {
        let t = record.generation;
        fs::write(
            self.dir.join(format!("payoff/gen_{t}.csv")),
            csv::write_payoff_csv(snapshot),
        )?;
        self.write_population(t, pop, counts)?;

        let mut trace = fs::OpenOptions::new()
            .append(true)
            .open(self.dir.join("trace.jsonl"))?;
        let line = serde_json::to_string(record)?;
        trace.write_all(line.as_bytes())?;
        trace.write_all(b"\n")?;

        // The RNG state is fully determined by (seed, generation) under the
        // per-purpose stream derivation.
        fs::write(
            self.dir.join("checkpoint.meta"),
            format!(
                "last_generation={t}\nseed={seed}\nnext_id={next_id}\nrng=derived(seed,purpose,generation)\n"
            ),
        )?;
        Ok(())
    }
}

/// Run a full experiment and persist every generation under `dir`.
///
/// On a generation failure the partial outputs (including trace.jsonl lines
/// already written) are left on disk and the error is returned.
pub fn run_to_dir(
    cfg: EngineConfig,
    config_snapshot_toml: &str,
    dir: &Path,
) -> Result<GenerationTrace> {
    let generations = cfg.generations;
    let seed = cfg.seed;
    let mut engine = Engine::new(cfg)?;
    let writer = RunWriter::create(dir, config_snapshot_toml)?;
    writer.write_population(0, engine.population(), engine.counts())?;
    fs::write(
        dir.join("checkpoint.meta"),
        format!(
            "last_generation=0\nseed={seed}\nnext_id={}\nrng=derived(seed,purpose,generation)\n",
            engine.population().len()
        ),
    )?;

    let mut trace = GenerationTrace::default();
    for _ in 0..generations {
        let (record, snapshot) = engine.run_generation()?;
        writer.append_generation(
            &record,
            &snapshot,
            engine.population(),
            engine.counts(),
            seed,
            engine.next_id,
        )?;
        trace.records.push(record);
        trace.snapshots.push(snapshot);
    }
    Ok(trace)
}

/// A trace loaded back from a run directory. Records whose payoff snapshot
/// was missing or unparsable are dropped and listed in `skipped`.
#[derive(Debug, Default)]
pub struct LoadedRun {
    pub trace: GenerationTrace,
    pub skipped: Vec<(u32, String)>,
    pub total_records: usize,
}

pub fn read_run_dir(dir: &Path) -> Result<LoadedRun> {
    let text = fs::read_to_string(dir.join("trace.jsonl"))?;
    let mut run = LoadedRun::default();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        run.total_records += 1;
        let record: GenerationRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                run.skipped
                    .push((idx as u32 + 1, format!("trace line {}: {e}", idx + 1)));
                continue;
            }
        };
        let t = record.generation;
        let snapshot_path = dir.join(format!("payoff/gen_{t}.csv"));
        let snapshot = match fs::read_to_string(&snapshot_path)
            .map_err(Error::from)
            .and_then(|s| csv::read_payoff_csv(&s))
        {
            Ok(m) => m,
            Err(e) => {
                run.skipped.push((t, format!("payoff/gen_{t}.csv: {e}")));
                continue;
            }
        };
        if snapshot.n() != record.pop_ids.len() {
            run.skipped.push((
                t,
                format!(
                    "payoff/gen_{t}.csv: {} nodes but record names {}",
                    snapshot.n(),
                    record.pop_ids.len()
                ),
            ));
            continue;
        }
        run.trace.records.push(record);
        run.trace.snapshots.push(snapshot);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_convention_game, GameKind};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_config(seed: u64, generations: u32) -> EngineConfig {
        EngineConfig {
            solver_flag: SolverFlag::Sv,
            generations,
            pop_cap: 6,
            evict_window: 3,
            seed,
            sampler_c: 0.5,
            solver: SolverConfig {
                mc_samples: Some(200),
                ..Default::default()
            },
            oracle: OracleConfig {
                inner_updates: 4,
                ..Default::default()
            },
            env: make_convention_game(&[10.0, 8.0, 6.0], 0.0, GameKind::TwoStage, 0.0).unwrap(),
            init_size: 1,
            init_style: InitStyle::Stochastic,
            init_uniform_first: true,
        }
    }

    #[test]
    fn first_generation_from_singleton() {
        let mut engine = Engine::new(small_config(3, 1)).unwrap();
        let (record, snapshot) = engine.run_generation().unwrap();
        assert_eq!(record.generation, 1);
        assert_eq!(record.phi, vec![1.0]);
        assert_eq!(record.new_id, StrategyId(1));
        assert_eq!(engine.population().len(), 2);
        assert_eq!(snapshot.n(), 2);
        assert_eq!(record.pop_ids, vec![StrategyId(0), StrategyId(1)]);
    }

    #[test]
    fn population_respects_the_cap() {
        let cfg = small_config(5, 10);
        let trace = run_in_memory(cfg).unwrap();
        // 1 + 10 strategies created, cap 6: evictions start once full.
        let evictions: Vec<_> = trace
            .records
            .iter()
            .filter_map(|r| r.evicted_id)
            .collect();
        assert_eq!(evictions.len(), 5);
        // Records before the cap have no eviction.
        assert!(trace.records[.. 5].iter().all(|r| r.evicted_id.is_none()));
        // Snapshot sizes grow to cap + 1 and stay there.
        assert_eq!(trace.snapshots.last().unwrap().n(), 7);
    }

    #[test]
    fn ids_are_never_reused() {
        let trace = run_in_memory(small_config(7, 12)).unwrap();
        let new_ids: Vec<usize> = trace.records.iter().map(|r| r.new_id.0).collect();
        assert_eq!(new_ids, (1..=12).collect::<Vec<_>>());
    }

    #[test]
    fn eviction_only_hits_the_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let env = make_convention_game(&[4.0], 0.0, GameKind::OneShot, 0.0).unwrap();
        let mut counts = VisitCounts::new();
        let mut cache = PairCache::new();
        let mut pop: Vec<Strategy<f64>> = (0..5)
            .map(|i| Strategy::uniform(StrategyId(i), i as u64, &env))
            .collect();
        for s in &pop {
            counts.insert_new(s.id);
        }
        // Window of 1 always evicts the single oldest.
        let evicted = evict_if_full(&mut pop, 4, 1, &mut counts, &mut cache, &mut rng);
        assert_eq!(evicted, Some(StrategyId(0)));
        assert_eq!(pop.len(), 4);
        assert!(counts.get(StrategyId(0)).is_none());

        // At cap: no eviction.
        let evicted = evict_if_full(&mut pop, 4, 1, &mut counts, &mut cache, &mut rng);
        assert_eq!(evicted, None);
    }

    #[test]
    fn eviction_is_uniform_over_the_window() {
        let env = make_convention_game(&[4.0], 0.0, GameKind::OneShot, 0.0).unwrap();
        let window = 10;
        let trials = 10_000;
        let mut histogram = vec![0usize; window];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..trials {
            let mut pop: Vec<Strategy<f64>> = (0..12)
                .map(|i| Strategy::uniform(StrategyId(i), i as u64, &env))
                .collect();
            let mut counts = VisitCounts::new();
            let mut cache = PairCache::new();
            let evicted =
                evict_if_full(&mut pop, 11, window, &mut counts, &mut cache, &mut rng).unwrap();
            histogram[evicted.0] += 1;
        }
        for (i, &count) in histogram.iter().enumerate() {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - 0.1).abs() < 0.01,
                "slot {i} frequency {freq}"
            );
        }
    }

    #[test]
    fn solver_flags_share_the_simulation_step() {
        let sv = run_in_memory(small_config(11, 2)).unwrap();
        let r = run_in_memory(EngineConfig {
            solver_flag: SolverFlag::R,
            ..small_config(11, 2)
        })
        .unwrap();
        // Generation 1 starts from the same singleton population, so the
        // payoff entry between the two initial strategies is identical; phi
        // and everything downstream may differ.
        assert_eq!(sv.snapshots[0].entry(0, 0), r.snapshots[0].entry(0, 0));
    }

    #[test]
    fn zero_generations_yield_empty_trace() {
        let trace = run_in_memory(small_config(1, 0)).unwrap();
        assert!(trace.records.is_empty());
    }

    #[test]
    fn reruns_are_bit_identical() {
        let a = run_in_memory(small_config(21, 6)).unwrap();
        let b = run_in_memory(small_config(21, 6)).unwrap();
        assert_eq!(a.records, b.records);
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn trace_rank_matches_snapshot_recomputation() {
        use crate::game_graph::{build_game_graph, build_preference_graph, preference_centrality};
        let trace = run_in_memory(small_config(13, 8)).unwrap();
        for (record, snapshot) in trace.records.iter().zip(&trace.snapshots) {
            let pref = build_preference_graph(&build_game_graph(snapshot.clone())).unwrap();
            let rep = preference_centrality::<f64>(&pref);
            let pos = record
                .pop_ids
                .iter()
                .position(|&id| id == record.new_id)
                .unwrap();
            let eta = rep.etas()[pos];
            let rank = 1 + rep
                .etas()
                .iter()
                .enumerate()
                .filter(|&(k, &e)| k != pos && e < eta)
                .count();
            assert_eq!(eta, record.eta, "generation {}", record.generation);
            assert_eq!(rank, record.rank, "generation {}", record.generation);
        }
    }

    #[test]
    fn init_styles_seed_the_advertised_populations() {
        let mk = |style, size, uniform_first| {
            Engine::new(EngineConfig {
                init_size: size,
                init_style: style,
                init_uniform_first: uniform_first,
                ..small_config(3, 0)
            })
            .unwrap()
        };
        // Spectrum without the uniform member: one stub per convention.
        let engine = mk(InitStyle::Spectrum, 3, false);
        for (i, s) in engine.population().iter().enumerate() {
            let mut expected = vec![0.0; 3];
            expected[i % 3] = 1.0;
            assert_eq!(s.params.first_round, expected);
        }
        // Uniform-first leaves member 0 uniform.
        let engine = mk(InitStyle::Convention, 4, true);
        assert_eq!(engine.population()[0].params.first_round, vec![1.0 / 3.0; 3]);
        for s in &engine.population()[1..] {
            assert_eq!(
                s.params
                    .first_round
                    .iter()
                    .filter(|&&p| p == 1.0)
                    .count(),
                1
            );
        }
        // Spectrum with the uniform last.
        let engine = mk(InitStyle::SpectrumUniformLast, 4, false);
        assert_eq!(
            engine.population().last().unwrap().params.first_round,
            vec![1.0 / 3.0; 3]
        );
    }

    #[test]
    fn degenerate_first_matrix_falls_back_to_uniform_phi() {
        // Three stubborn strategies on disjoint conventions: every cross
        // payoff is zero, so pagerank has nothing to rank.
        let cfg = EngineConfig {
            init_size: 3,
            init_style: InitStyle::Spectrum,
            init_uniform_first: false,
            ..small_config(2, 1)
        };
        let mut engine = Engine::new(cfg).unwrap();
        let (record, _) = engine.run_generation().unwrap();
        assert_eq!(record.phi.len(), 3);
        for p in &record.phi {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn run_dir_round_trips() {
        let dir = std::env::temp_dir().join(format!("opencoop-engine-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let cfg = small_config(17, 4);
        let trace = run_to_dir(cfg, "seed = 17\n", &dir).unwrap();
        let loaded = read_run_dir(&dir).unwrap();
        assert_eq!(loaded.trace.records, trace.records);
        assert!(loaded.skipped.is_empty());
        assert_eq!(loaded.total_records, 4);
        for (a, b) in loaded.trace.snapshots.iter().zip(&trace.snapshots) {
            assert_eq!(a, b);
        }
        assert!(dir.join("config.snapshot").exists());
        assert!(dir.join("population/gen_0.csv").exists());
        assert!(dir.join("population/gen_4_visits.csv").exists());
        assert!(dir.join("checkpoint.meta").exists());
        let meta = fs::read_to_string(dir.join("checkpoint.meta")).unwrap();
        assert!(meta.contains("last_generation=4"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn zero_generation_run_persists_the_initial_population() {
        let dir = std::env::temp_dir().join(format!("opencoop-gen0-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let trace = run_to_dir(small_config(23, 0), "seed = 23
", &dir).unwrap();
        assert!(trace.records.is_empty());
        assert!(dir.join("population/gen_0.csv").exists());
        assert!(dir.join("population/gen_0_visits.csv").exists());
        assert_eq!(fs::read_to_string(dir.join("trace.jsonl")).unwrap(), "");
        let meta = fs::read_to_string(dir.join("checkpoint.meta")).unwrap();
        assert!(meta.contains("last_generation=0"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn corrupt_snapshot_is_skipped_on_load() {
        let dir = std::env::temp_dir().join(format!("opencoop-corrupt-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        run_to_dir(small_config(19, 3), "seed = 19\n", &dir).unwrap();
        fs::write(dir.join("payoff/gen_2.csv"), "garbage\n").unwrap();
        let loaded = read_run_dir(&dir).unwrap();
        assert_eq!(loaded.trace.records.len(), 2);
        assert_eq!(loaded.skipped.len(), 1);
        assert_eq!(loaded.skipped[0].0, 2);
        let _ = fs::remove_dir_all(&dir);
    }
}
