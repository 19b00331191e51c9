//! Approximated best-preferred-strategy oracle.
//!
//! Each generation trains a candidate against the mixed objective
//! `J(s) = sum_p phi(p) w(s, p) + alpha w(s, s)` by projected-gradient ascent
//! on the tabular parameters (analytic gradient for one-shot games, central
//! finite differences for two-stage). Training partners are redrawn every
//! round through the SUCG sampler. The finished candidate is ranked by
//! preference centrality on the prospective population graph; if it misses
//! the top-k it retries from a perturbed start.

use rand::Rng;

use crate::env::{expected_payoff_role_averaged, GameKind, StageGame, Strategy, StrategyParams};
use crate::error::{Error, Result};
use crate::game_graph::{
    build_game_graph, build_preference_graph, preference_centrality, PayoffMatrix, StrategyId,
};
use crate::sampler::{sample_partners, sucg_scores, VisitCounts};
use crate::scalar::{cast, Scalar};
use crate::solver::IncompatibilityDistribution;

/// Central-difference step for two-stage gradients.
const FD_STEP: f64 = 1e-5;

/// Perturbation magnitude applied to the initial parameters on a restart.
const RESTART_NOISE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct OracleConfig<S> {
    /// Weight of the individual (self-play) objective term.
    pub alpha: S,
    /// Self-pairing count per round; 0 drops the individual term entirely.
    pub ratio_a: u32,
    /// SUCG partner draws per round.
    pub ratio_b: u32,
    /// Ascent rounds per generation.
    pub inner_updates: usize,
    pub step_size: S,
    /// Preference-centrality rank threshold for accepting a candidate.
    pub k: usize,
    pub max_restarts: u32,
    /// Replace gradient steps with the exact linear best response when the
    /// game is one-shot and the effective alpha is zero.
    pub exact_one_shot_br: bool,
}

impl<S: Scalar> Default for OracleConfig<S> {
    fn default() -> Self {
        OracleConfig {
            alpha: S::one(),
            ratio_a: 1,
            ratio_b: 3,
            inner_updates: 10,
            step_size: cast(0.1),
            k: 3,
            max_restarts: 3,
            exact_one_shot_br: false,
        }
    }
}

impl<S: Scalar> OracleConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.ratio_a + self.ratio_b < 1 {
            return Err(Error::InvalidConfig {
                field: "oracle.ratio".into(),
                message: "ratio a + b must be at least 1".into(),
            });
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig {
                field: "oracle.k".into(),
                message: "rank threshold must be at least 1".into(),
            });
        }
        if self.inner_updates < 1 {
            return Err(Error::InvalidConfig {
                field: "oracle.inner_updates".into(),
                message: "need at least one update round".into(),
            });
        }
        if !(self.step_size >= S::zero() && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "oracle.step_size".into(),
                message: "step size must be a non-negative finite number".into(),
            });
        }
        Ok(())
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex<S: Scalar>(v: &[S]) -> Vec<S> {
    let mut sorted: Vec<S> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    let mut rho = 0usize;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let j1: S = cast((j + 1) as f64);
        let candidate = (cumsum - S::one()) / j1;
        if u - candidate > S::zero() {
            rho = j + 1;
            theta = candidate;
        }
    }
    debug_assert!(rho >= 1);
    v.iter().map(|&x| (x - theta).max(S::zero())).collect()
}

/// Sampled IPI objective: `sum_p weight_p * w(s, p) + alpha * w(s, s)`,
/// with `w` the exact role-averaged expected payoff.
pub fn objective<S: Scalar>(
    s: &StrategyParams<S>,
    partners: &[(&StrategyParams<S>, S)],
    alpha: S,
    env: &StageGame<S>,
) -> S {
    let mut j = S::zero();
    for &(p, weight) in partners {
        j += weight * expected_payoff_role_averaged(s, p, env);
    }
    if alpha != S::zero() {
        j += alpha * expected_payoff_role_averaged(s, s, env);
    }
    j
}

fn param_vector<S: Scalar>(p: &StrategyParams<S>) -> Vec<S> {
    let mut v = p.first_round.clone();
    if let Some(resp) = &p.response {
        v.extend_from_slice(resp);
    }
    v
}

fn params_from_vector<S: Scalar>(v: &[S], template: &StrategyParams<S>) -> StrategyParams<S> {
    let a = template.first_round.len();
    StrategyParams {
        first_round: v[..a].to_vec(),
        response: template.response.as_ref().map(|_| v[a..].to_vec()),
    }
}

/// Analytic objective gradient for one-shot games.
///
/// With `M = (U + U^T) / 2`, the role-averaged payoff is `s^T M p`, so the
/// gradient is `sum_p weight_p * M x_p + 2 alpha M s`.
pub fn gradient_one_shot<S: Scalar>(
    s: &StrategyParams<S>,
    partners: &[(&StrategyParams<S>, S)],
    alpha: S,
    env: &StageGame<S>,
) -> Vec<S> {
    let a = env.actions();
    let half: S = cast(0.5);
    let sym = |i: usize, j: usize| (env.utility(i, j) + env.utility(j, i)) * half;
    let mut grad = vec![S::zero(); a];
    for &(p, weight) in partners {
        for i in 0..a {
            for j in 0..a {
                grad[i] += weight * sym(i, j) * p.first_round[j];
            }
        }
    }
    if alpha != S::zero() {
        let two: S = cast(2.0);
        for i in 0..a {
            for j in 0..a {
                grad[i] += two * alpha * sym(i, j) * s.first_round[j];
            }
        }
    }
    grad
}

/// Central finite-difference objective gradient over all parameters.
/// The objective is polynomial in the raw parameters, so probes may step off
/// the simplex; projection happens only when the ascent step is applied.
pub fn gradient_fd<S: Scalar>(
    s: &StrategyParams<S>,
    partners: &[(&StrategyParams<S>, S)],
    alpha: S,
    env: &StageGame<S>,
) -> Vec<S> {
    let h: S = cast(FD_STEP);
    let two_h = h + h;
    let base = param_vector(s);
    let mut grad = Vec::with_capacity(base.len());
    let mut probe = base.clone();
    for c in 0..base.len() {
        probe[c] = base[c] + h;
        let plus = objective(&params_from_vector(&probe, s), partners, alpha, env);
        probe[c] = base[c] - h;
        let minus = objective(&params_from_vector(&probe, s), partners, alpha, env);
        probe[c] = base[c];
        grad.push((plus - minus) / two_h);
    }
    grad
}

fn project_blocks<S: Scalar>(params: &mut StrategyParams<S>) {
    params.first_round = project_to_simplex(&params.first_round);
    if let Some(resp) = &mut params.response {
        let a = params.first_round.len();
        let mut projected = Vec::with_capacity(resp.len());
        for r in 0..a {
            projected.extend(project_to_simplex(&resp[r * a..(r + 1) * a]));
        }
        *resp = projected;
    }
}

/// One projected-gradient ascent step on the sampled objective.
pub fn best_response_step<S: Scalar>(
    s: &StrategyParams<S>,
    partners: &[(&StrategyParams<S>, S)],
    alpha: S,
    env: &StageGame<S>,
    step_size: S,
) -> Result<StrategyParams<S>> {
    if step_size == S::zero() {
        return Ok(s.clone());
    }
    let grad = match env.kind() {
        GameKind::OneShot => gradient_one_shot(s, partners, alpha, env),
        GameKind::TwoStage => gradient_fd(s, partners, alpha, env),
    };
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    let base = param_vector(s);
    let stepped: Vec<S> = base
        .iter()
        .zip(&grad)
        .map(|(&x, &g)| x + step_size * g)
        .collect();
    let mut out = params_from_vector(&stepped, s);
    project_blocks(&mut out);
    Ok(out)
}

/// Exact best response for one-shot games with a purely cooperative
/// objective: the payoff is linear in `s`, so the argmax is a pure action.
/// Ties break toward the smallest action index.
pub fn exact_one_shot_best_response<S: Scalar>(
    partners: &[(&StrategyParams<S>, S)],
    env: &StageGame<S>,
    template: &StrategyParams<S>,
) -> StrategyParams<S> {
    let a = env.actions();
    let half: S = cast(0.5);
    let mut scores = vec![S::zero(); a];
    for &(p, weight) in partners {
        for i in 0..a {
            for j in 0..a {
                scores[i] +=
                    weight * (env.utility(i, j) + env.utility(j, i)) * half * p.first_round[j];
            }
        }
    }
    let mut best = 0usize;
    for i in 1..a {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    let mut first_round = vec![S::zero(); a];
    first_round[best] = S::one();
    StrategyParams {
        first_round,
        response: template.response.clone(),
    }
}

/// Candidate assessment on the prospective (n+1)-node preference graph.
#[derive(Debug, Clone)]
pub struct RankAssessment<S> {
    pub eta: S,
    /// Ascending-eta rank, ties resolved in the candidate's favor.
    pub rank: usize,
    /// `w(candidate, pop[k])` for every member, then `w(candidate, candidate)`.
    pub payoff_row: Vec<S>,
}

pub fn prospective_rank<S: Scalar>(
    cand: &StrategyParams<S>,
    pop: &[Strategy<S>],
    payoff: &PayoffMatrix<S>,
    env: &StageGame<S>,
    pair_seed: u64,
) -> Result<RankAssessment<S>> {
    let n = pop.len();
    assert_eq!(payoff.n(), n, "payoff matrix must cover the population");
    let mut row = Vec::with_capacity(n + 1);
    for member in pop {
        row.push(crate::env::evaluate_params_pair(
            cand,
            &member.params,
            env,
            pair_seed,
        )?);
    }
    row.push(crate::env::evaluate_params_pair(cand, cand, env, pair_seed)?);

    let extended = PayoffMatrix::from_fn(n + 1, |i, j| {
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
    let pref = build_preference_graph(&build_game_graph(extended))?;
    let report = preference_centrality::<S>(&pref);
    let eta = report.etas()[n];
    let rank = 1 + report.etas()[..n].iter().filter(|&&e| e < eta).count();
    Ok(RankAssessment {
        eta,
        rank,
        payoff_row: row,
    })
}

#[derive(Debug, Clone)]
pub struct TrainReport<S> {
    pub final_params: StrategyParams<S>,
    pub eta: S,
    pub rank: usize,
    pub rank_satisfied: bool,
    pub objective_trace: Vec<S>,
    /// Candidate payoffs against the population (self-pair last).
    pub payoff_row: Vec<S>,
    pub restarts_used: u32,
}

fn perturb<S: Scalar, R: Rng>(params: &StrategyParams<S>, rng: &mut R) -> StrategyParams<S> {
    let noise = |x: S, rng: &mut R| {
        x + cast::<S>((rng.random::<f64>() * 2.0 - 1.0) * RESTART_NOISE)
    };
    let mut out = StrategyParams {
        first_round: params
            .first_round
            .iter()
            .map(|&x| noise(x, rng))
            .collect(),
        response: params
            .response
            .as_ref()
            .map(|resp| resp.iter().map(|&x| noise(x, rng)).collect()),
    };
    project_blocks(&mut out);
    out
}

/// Run one generation of oracle training and rank the candidate.
///
/// Every round redraws `ratio_b` partners through SUCG (mutating the visit
/// counts per draw) and applies one ascent step; training evaluations always
/// use the noiseless game. The rank test runs against the environment as
/// configured. A candidate missing the top-k restarts from a perturbed copy
/// of `s_init`; after `max_restarts` failures the best candidate by
/// `(rank, eta)` is returned with `rank_satisfied = false`.
#[allow(clippy::too_many_arguments)]
pub fn train_oracle<S: Scalar, R: Rng>(
    s_init: &StrategyParams<S>,
    phi: &IncompatibilityDistribution<S>,
    pop: &[Strategy<S>],
    payoff: &PayoffMatrix<S>,
    env: &StageGame<S>,
    cfg: &OracleConfig<S>,
    sampler_c: S,
    counts: &mut VisitCounts,
    pair_seed: u64,
    rng: &mut R,
) -> Result<TrainReport<S>> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    cfg.validate()?;
    assert_eq!(phi.len(), pop.len(), "phi must cover the population");

    let ids: Vec<StrategyId> = pop.iter().map(|s| s.id).collect();
    let train_env = env.noiseless();
    let alpha_eff = if cfg.ratio_a == 0 {
        S::zero()
    } else {
        cfg.alpha
    };

    let mut best: Option<TrainReport<S>> = None;
    for attempt in 0..=cfg.max_restarts {
        let mut params = if attempt == 0 {
            s_init.clone()
        } else {
            perturb(s_init, rng)
        };
        let mut trace = Vec::with_capacity(cfg.inner_updates);
        for _ in 0..cfg.inner_updates {
            let drawn = if cfg.ratio_b > 0 {
                let scores = sucg_scores(phi, &ids, counts, sampler_c)?;
                sample_partners(&scores, cfg.ratio_b as usize, counts, rng)?
            } else {
                Vec::new()
            };
            // The draws already carry phi's weighting, so the expectation
            // term is estimated by the empirical mean over the batch.
            let batch_weight = S::one() / crate::scalar::from_count::<S>(drawn.len().max(1));
            let weighted: Vec<(&StrategyParams<S>, S)> = drawn
                .iter()
                .map(|id| {
                    let pos = ids.iter().position(|v| v == id).expect("drawn from ids");
                    (&pop[pos].params, batch_weight)
                })
                .collect();

            let use_shortcut = cfg.exact_one_shot_br
                && env.kind() == GameKind::OneShot
                && alpha_eff == S::zero()
                && !weighted.is_empty();
            params = if use_shortcut {
                exact_one_shot_best_response(&weighted, &train_env, &params)
            } else {
                best_response_step(&params, &weighted, alpha_eff, &train_env, cfg.step_size)?
            };
            trace.push(objective(&params, &weighted, alpha_eff, &train_env));
        }

        let assessment = prospective_rank(&params, pop, payoff, env, pair_seed)?;
        let report = TrainReport {
            final_params: params,
            eta: assessment.eta,
            rank: assessment.rank,
            rank_satisfied: assessment.rank <= cfg.k,
            objective_trace: trace,
            payoff_row: assessment.payoff_row,
            restarts_used: attempt,
        };
        if report.rank_satisfied {
            return Ok(report);
        }
        let better = match &best {
            None => true,
            Some(b) => (report.rank, report.eta) < (b.rank, b.eta),
        };
        if better {
            best = Some(report);
        }
    }
    Ok(best.expect("at least one attempt ran"))
}
