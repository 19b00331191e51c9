//! Run configuration: a flat-keyed TOML file with defaults for everything
//! except the environment's convention payoffs.

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, SolverFlag};
use crate::env::{make_convention_game, GameKind, DEFAULT_NOISE_EPISODES};
use crate::error::{Error, Result};
use crate::oracle::OracleConfig;
use crate::solver::{SolverConfig, WpgConfig};

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_generations")]
    pub generations: u32,
    #[serde(default = "default_pop_cap")]
    pub pop_cap: usize,
    #[serde(default = "default_evict_window")]
    pub evict_window: usize,
    #[serde(default = "default_solver_flag")]
    pub solver_flag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvSection>,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub init: InitSection,
}

fn default_generations() -> u32 {
    60
}
fn default_pop_cap() -> usize {
    50
}
fn default_evict_window() -> usize {
    10
}
fn default_solver_flag() -> String {
    "sv".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conventions: Option<Vec<f64>>,
    #[serde(default)]
    pub off_payoff: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
}

fn default_kind() -> String {
    "two-stage".into()
}
fn default_episodes() -> usize {
    DEFAULT_NOISE_EPISODES
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Individual-to-cooperative sampling ratio, e.g. `"1:3"`.
    #[serde(default = "default_ratio")]
    pub ratio: String,
    #[serde(default = "default_inner_updates")]
    pub inner_updates: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_max_restarts")]
    pub max_restarts: u32,
    #[serde(default)]
    pub exact_one_shot_br: bool,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            alpha: default_alpha(),
            ratio: default_ratio(),
            inner_updates: default_inner_updates(),
            step_size: default_step_size(),
            k: default_k(),
            max_restarts: default_max_restarts(),
            exact_one_shot_br: false,
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}
fn default_ratio() -> String {
    "1:3".into()
}
fn default_inner_updates() -> usize {
    10
}
fn default_step_size() -> f64 {
    0.1
}
fn default_k() -> usize {
    3
}
fn default_max_restarts() -> u32 {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Monte Carlo permutation count; omitted means `max(1000, 200 * n)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            samples: None,
            damping: default_damping(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

fn default_damping() -> f64 {
    0.85
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_c")]
    pub c: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection { c: default_c() }
    }
}

fn default_c() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    /// Initial population size: one uniform strategy plus `size - 1` random
    /// ones.
    #[serde(default = "default_init_size")]
    pub size: usize,
    /// How the non-uniform members are drawn: `stochastic` (uniform-simplex),
    /// `deterministic` (one pure action per decision point), `convention`
    /// (stubborn play of one random convention) or `spectrum` (one stubborn
    /// player per convention, cycling).
    #[serde(default = "default_init_style")]
    pub style: String,
    /// Seed member 0 as the uniform strategy.
    #[serde(default = "default_uniform_first")]
    pub uniform_first: bool,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            size: default_init_size(),
            style: default_init_style(),
            uniform_first: default_uniform_first(),
        }
    }
}

fn default_init_size() -> usize {
    1
}
fn default_init_style() -> String {
    "stochastic".into()
}
fn default_uniform_first() -> bool {
    true
}

fn parse_ratio(s: &str) -> Result<(u32, u32)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(invalid("oracle.ratio", format!("expected `a:b`, got {s:?}")));
    }
    let a = parts[0]
        .trim()
        .parse::<u32>()
        .map_err(|e| invalid("oracle.ratio", format!("bad individual count: {e}")))?;
    let b = parts[1]
        .trim()
        .parse::<u32>()
        .map_err(|e| invalid("oracle.ratio", format!("bad cooperative count: {e}")))?;
    Ok((a, b))
}

fn parse_kind(s: &str) -> Result<GameKind> {
    match s {
        "one-shot" => Ok(GameKind::OneShot),
        "two-stage" => Ok(GameKind::TwoStage),
        other => Err(invalid(
            "env.kind",
            format!("expected `one-shot` or `two-stage`, got {other:?}"),
        )),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid("<config>", e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Command-line seed override, recorded in the snapshot.
    pub fn override_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
        }
    }

    /// Resolved snapshot with every default materialized.
    pub fn snapshot_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid("<config>", e.to_string()))
    }

    /// Validate every field and build the engine configuration.
    pub fn resolve(&self) -> Result<EngineConfig> {
        let env_section = self
            .env
            .as_ref()
            .ok_or_else(|| invalid("env.conventions", "missing required key"))?;
        let conventions = env_section
            .conventions
            .as_ref()
            .ok_or_else(|| invalid("env.conventions", "missing required key"))?;
        if conventions.is_empty() {
            return Err(invalid("env.conventions", "need at least one convention"));
        }
        if env_section.noise_std < 0.0 || !env_section.noise_std.is_finite() {
            return Err(invalid("env.noise_std", "must be non-negative and finite"));
        }
        if env_section.episodes < 1 {
            return Err(invalid("env.episodes", "need at least one episode"));
        }
        let kind = parse_kind(&env_section.kind)?;
        let env = make_convention_game(
            conventions,
            env_section.off_payoff,
            kind,
            env_section.noise_std,
        )
        .map_err(|e| invalid("env.off_payoff", e.to_string()))?
        .with_episodes(env_section.episodes);

        let (ratio_a, ratio_b) = parse_ratio(&self.oracle.ratio)?;
        let oracle = OracleConfig {
            alpha: self.oracle.alpha,
            ratio_a,
            ratio_b,
            inner_updates: self.oracle.inner_updates,
            step_size: self.oracle.step_size,
            k: self.oracle.k,
            max_restarts: self.oracle.max_restarts,
            exact_one_shot_br: self.oracle.exact_one_shot_br,
        };

        if !(self.solver.damping > 0.0 && self.solver.damping < 1.0) {
            return Err(invalid("solver.damping", "must lie strictly in (0, 1)"));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) {
            return Err(invalid("solver.tol", "must be positive"));
        }
        if self.solver.max_iter < 1 {
            return Err(invalid("solver.max_iter", "need at least one iteration"));
        }
        if let Some(samples) = self.solver.samples {
            if samples < 1 {
                return Err(invalid("solver.samples", "need at least one sample"));
            }
        }
        let solver = SolverConfig {
            wpg: WpgConfig {
                damping: self.solver.damping,
                tol: self.solver.tol,
                max_iter: self.solver.max_iter,
            },
            mc_samples: self.solver.samples,
        };

        let cfg = EngineConfig {
            solver_flag: self.solver_flag.parse::<SolverFlag>()?,
            generations: self.generations,
            pop_cap: self.pop_cap,
            evict_window: self.evict_window,
            seed: self.seed,
            sampler_c: self.sampler.c,
            solver,
            oracle,
            env,
            init_size: self.init.size,
            init_style: self.init.style.parse()?,
            init_uniform_first: self.init.uniform_first,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
