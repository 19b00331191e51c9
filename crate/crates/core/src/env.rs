//! Two-player common-payoff stage games and exact pairwise evaluation.
//!
//! Strategies are tabular stochastic policies: a first-round action
//! distribution and, for two-stage games, one response row per observed
//! partner action. With zero noise a pairing is scored by exact enumeration
//! of all joint outcomes and role-averaged into a symmetric payoff; with
//! noise it is a seeded Monte Carlo mean over episodes.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::game_graph::{PayoffMatrix, StrategyId};
use crate::scalar::{cast, from_count, to_f64, Scalar};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    OneShot,
    TwoStage,
}

/// A two-player common-payoff stage game with `actions` joint actions per
/// round and a shared utility matrix.
#[derive(Debug, Clone)]
pub struct StageGame<S> {
    kind: GameKind,
    actions: usize,
    utility: Vec<S>,
    noise_std: S,
    episodes: usize,
}

pub const DEFAULT_NOISE_EPISODES: usize = 64;

impl<S: Scalar> StageGame<S> {
    pub fn new(kind: GameKind, utility_rows: Vec<Vec<S>>, noise_std: S) -> Result<Self> {
        let actions = utility_rows.len();
        if actions == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut utility = Vec::with_capacity(actions * actions);
        for row in &utility_rows {
            if row.len() != actions {
                return Err(Error::BadDimensions {
                    expected: actions * actions,
                    got: row.len() * actions,
                });
            }
            for &u in row {
                if !u.is_finite() {
                    return Err(Error::NonFinite {
                        row: utility.len() / actions,
                        col: utility.len() % actions,
                    });
                }
                utility.push(u);
            }
        }
        Ok(StageGame {
            kind,
            actions,
            utility,
            noise_std,
            episodes: DEFAULT_NOISE_EPISODES,
        })
    }

    pub fn with_episodes(mut self, episodes: usize) -> Self {
        self.episodes = episodes.max(1);
        self
    }

    #[inline]
    pub fn kind(&self) -> GameKind {
        self.kind
    }

    #[inline]
    pub fn actions(&self) -> usize {
        self.actions
    }

    #[inline]
    pub fn utility(&self, a: usize, b: usize) -> S {
        self.utility[a * self.actions + b]
    }

    pub fn noise_std(&self) -> S {
        self.noise_std
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    /// Same game with evaluator noise switched off (training evaluations).
    pub fn noiseless(&self) -> StageGame<S> {
        StageGame {
            noise_std: S::zero(),
            ..self.clone()
        }
    }

    /// Smallest and largest single-round utility.
    pub fn utility_range(&self) -> (S, S) {
        let lo = self.utility.iter().fold(S::infinity(), |a, &b| a.min(b));
        let hi = self
            .utility
            .iter()
            .fold(S::neg_infinity(), |a, &b| a.max(b));
        (lo, hi)
    }
}

/// Diagonal convention game: matching on convention `a` pays
/// `conventions[a]`, mismatching pays `off_payoff`.
pub fn make_convention_game<S: Scalar>(
    conventions: &[S],
    off_payoff: S,
    kind: GameKind,
    noise_std: S,
) -> Result<StageGame<S>> {
    if conventions.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let min = conventions.iter().fold(S::infinity(), |a, &b| a.min(b));
    if off_payoff >= min {
        return Err(Error::BadConvention {
            off_payoff: to_f64(off_payoff),
            min_convention: to_f64(min),
        });
    }
    let a = conventions.len();
    let rows = (0..a)
        .map(|i| {
            (0..a)
                .map(|j| if i == j { conventions[i] } else { off_payoff })
                .collect()
        })
        .collect();
    StageGame::new(kind, rows, noise_std)
}

/// Raw policy parameters: probability vectors, one per decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyParams<S> {
    /// Distribution over first-round actions, length A.
    pub first_round: Vec<S>,
    /// For two-stage games: A rows of length A; row `r` is the distribution
    /// over own second-round actions after observing partner action `r`.
    pub response: Option<Vec<S>>,
}

impl<S: Scalar> StrategyParams<S> {
    fn check_simplex(v: &[S]) -> Result<()> {
        let tol: S = cast(1e-9);
        let mut sum = S::zero();
        for &p in v {
            if !p.is_finite() || p < S::zero() {
                return Err(Error::OffSimplex {
                    sum: to_f64(p),
                    tol: 1e-9,
                });
            }
            sum += p;
        }
        if (sum - S::one()).abs() > tol {
            return Err(Error::OffSimplex {
                sum: to_f64(sum),
                tol: 1e-9,
            });
        }
        Ok(())
    }

    pub fn validate(&self, actions: usize, kind: GameKind) -> Result<()> {
        if self.first_round.len() != actions {
            return Err(Error::ShapeMismatch {
                expected: format!("first-round vector of length {actions}"),
                got: format!("length {}", self.first_round.len()),
            });
        }
        Self::check_simplex(&self.first_round)?;
        match (kind, &self.response) {
            (GameKind::OneShot, None) => Ok(()),
            (GameKind::OneShot, Some(_)) => Err(Error::ShapeMismatch {
                expected: "no response table for a one-shot game".into(),
                got: "response table".into(),
            }),
            (GameKind::TwoStage, None) => Err(Error::ShapeMismatch {
                expected: "response table for a two-stage game".into(),
                got: "none".into(),
            }),
            (GameKind::TwoStage, Some(resp)) => {
                if resp.len() != actions * actions {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{actions}x{actions} response table"),
                        got: format!("{} entries", resp.len()),
                    });
                }
                for r in 0..actions {
                    Self::check_simplex(&resp[r * actions..(r + 1) * actions])?;
                }
                Ok(())
            }
        }
    }

    #[inline]
    pub fn response_row(&self, r: usize, actions: usize) -> &[S] {
        let resp = self.response.as_ref().expect("two-stage params");
        &resp[r * actions..(r + 1) * actions]
    }

    /// FNV-1a over the 12-digit decimal serialization of the parameters;
    /// stable across runs and serialization round-trips.
    pub fn content_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(PRIME);
            }
        };
        for &p in &self.first_round {
            eat(format!("{:.12e},", to_f64(p)).as_bytes());
        }
        eat(b"|");
        if let Some(resp) = &self.response {
            for &p in resp {
                eat(format!("{:.12e},", to_f64(p)).as_bytes());
            }
        }
        hash
    }
}

/// A population member: immutable policy parameters plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy<S> {
    pub id: StrategyId,
    pub birth_generation: u64,
    pub params: StrategyParams<S>,
}

impl<S: Scalar> Strategy<S> {
    pub fn from_params(
        id: StrategyId,
        birth_generation: u64,
        params: StrategyParams<S>,
        env: &StageGame<S>,
    ) -> Result<Self> {
        params.validate(env.actions(), env.kind())?;
        Ok(Strategy {
            id,
            birth_generation,
            params,
        })
    }

    /// Uniform distribution at every decision point.
    pub fn uniform(id: StrategyId, birth_generation: u64, env: &StageGame<S>) -> Self {
        let a = env.actions();
        let u: S = S::one() / from_count(a);
        let first_round = vec![u; a];
        let response = match env.kind() {
            GameKind::OneShot => None,
            GameKind::TwoStage => Some(vec![u; a * a]),
        };
        Strategy {
            id,
            birth_generation,
            params: StrategyParams {
                first_round,
                response,
            },
        }
    }

    /// Independent uniform-simplex draws at every decision point.
    pub fn random<R: Rng>(
        id: StrategyId,
        birth_generation: u64,
        env: &StageGame<S>,
        rng: &mut R,
    ) -> Self {
        let a = env.actions();
        let draw = |rng: &mut R| -> Vec<S> {
            let raw: Vec<f64> = (0..a).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| cast(x / total)).collect()
        };
        let first_round = draw(rng);
        let response = match env.kind() {
            GameKind::OneShot => None,
            GameKind::TwoStage => Some((0..a).flat_map(|_| draw(rng)).collect()),
        };
        Strategy {
            id,
            birth_generation,
            params: StrategyParams {
                first_round,
                response,
            },
        }
    }

    /// Uniformly random deterministic policy: one pure action per decision
    /// point. Mirrors how reward-maximizing training tends to land on
    /// committed conventions.
    pub fn random_deterministic<R: Rng>(
        id: StrategyId,
        birth_generation: u64,
        env: &StageGame<S>,
        rng: &mut R,
    ) -> Self {
        let a = env.actions();
        let draw = |rng: &mut R| -> Vec<S> {
            let mut v = vec![S::zero(); a];
            v[rng.random_range(0..a)] = S::one();
            v
        };
        let first_round = draw(rng);
        let response = match env.kind() {
            GameKind::OneShot => None,
            GameKind::TwoStage => Some((0..a).flat_map(|_| draw(rng)).collect()),
        };
        Strategy {
            id,
            birth_generation,
            params: StrategyParams {
                first_round,
                response,
            },
        }
    }

    /// Plays `action` unconditionally in every round.
    pub fn stubborn(
        id: StrategyId,
        birth_generation: u64,
        env: &StageGame<S>,
        action: usize,
    ) -> Self {
        let a = env.actions();
        assert!(action < a, "action out of range");
        let mut one_hot = vec![S::zero(); a];
        one_hot[action] = S::one();
        let response = match env.kind() {
            GameKind::OneShot => None,
            GameKind::TwoStage => Some(
                (0..a)
                    .flat_map(|_| one_hot.clone())
                    .collect(),
            ),
        };
        Strategy {
            id,
            birth_generation,
            params: StrategyParams {
                first_round: one_hot,
                response,
            },
        }
    }

    pub fn content_hash(&self) -> u64 {
        self.params.content_hash()
    }
}

/// Expected payoff of `first` seated as player one against `second`, by exact
/// enumeration over all joint outcomes. No simplex validation: the expression
/// is polynomial in the parameters, which gradient probes exploit.
pub fn expected_payoff_raw<S: Scalar>(
    first: &StrategyParams<S>,
    second: &StrategyParams<S>,
    env: &StageGame<S>,
) -> S {
    let a = env.actions();
    let mut round1 = S::zero();
    for i in 0..a {
        for j in 0..a {
            round1 += first.first_round[i] * second.first_round[j] * env.utility(i, j);
        }
    }
    if env.kind() == GameKind::OneShot {
        return round1;
    }
    let mut round2 = S::zero();
    for i in 0..a {
        let pi = first.first_round[i];
        if pi == S::zero() {
            continue;
        }
        for j in 0..a {
            let pj = second.first_round[j];
            if pj == S::zero() {
                continue;
            }
            // first responds to j, second responds to i.
            let ri = first.response_row(j, a);
            let rj = second.response_row(i, a);
            let mut inner = S::zero();
            for bi in 0..a {
                for bj in 0..a {
                    inner += ri[bi] * rj[bj] * env.utility(bi, bj);
                }
            }
            round2 += pi * pj * inner;
        }
    }
    round1 + round2
}

/// Role-averaged exact payoff: `(play(a as P1, b) + play(b as P1, a)) / 2`.
pub fn expected_payoff_role_averaged<S: Scalar>(
    a: &StrategyParams<S>,
    b: &StrategyParams<S>,
    env: &StageGame<S>,
) -> S {
    let two: S = cast(2.0);
    (expected_payoff_raw(a, b, env) + expected_payoff_raw(b, a, env)) / two
}

fn sample_categorical<S: Scalar, R: Rng>(weights: &[S], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += to_f64(w);
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

fn rollout<S: Scalar, R: Rng>(
    first: &StrategyParams<S>,
    second: &StrategyParams<S>,
    env: &StageGame<S>,
    rng: &mut R,
) -> S {
    let a = env.actions();
    let a1 = sample_categorical(&first.first_round, rng);
    let a2 = sample_categorical(&second.first_round, rng);
    let mut total = env.utility(a1, a2);
    if env.kind() == GameKind::TwoStage {
        let b1 = sample_categorical(first.response_row(a2, a), rng);
        let b2 = sample_categorical(second.response_row(a1, a), rng);
        total += env.utility(b1, b2);
    }
    total
}

/// Evaluate a pairing on raw parameters.
///
/// With `noise_std == 0` this is the exact role-averaged enumeration. With
/// noise, it is a mean over `env.episodes()` sampled episodes, each the
/// role-average of one rollout per seat plus one Gaussian draw; the episode
/// stream is keyed by the parameter content hashes in canonical order, so the
/// result is symmetric in its arguments and reproducible for a given seed.
pub fn evaluate_params_pair<S: Scalar>(
    a: &StrategyParams<S>,
    b: &StrategyParams<S>,
    env: &StageGame<S>,
    seed: u64,
) -> Result<S> {
    a.validate(env.actions(), env.kind())?;
    b.validate(env.actions(), env.kind())?;
    if env.noise_std() == S::zero() {
        return Ok(expected_payoff_role_averaged(a, b, env));
    }

    let (ha, hb) = (a.content_hash(), b.content_hash());
    let (lo, hi) = if ha <= hb { (a, b) } else { (b, a) };
    let mut rng = seeds::stream(seed, seeds::tag::PAIR, seeds::mix2(ha.min(hb), ha.max(hb)));
    let normal = Normal::new(0.0, to_f64(env.noise_std())).expect("finite noise std");
    let two: S = cast(2.0);
    let mut total = S::zero();
    for _ in 0..env.episodes() {
        let v = (rollout(lo, hi, env, &mut rng) + rollout(hi, lo, env, &mut rng)) / two;
        total += v + cast::<S>(normal.sample(&mut rng));
    }
    Ok(total / from_count(env.episodes()))
}

/// Evaluate a pairing of population strategies (the simulator's `M(i,j)`).
pub fn evaluate_pair<S: Scalar>(
    a: &Strategy<S>,
    b: &Strategy<S>,
    env: &StageGame<S>,
    seed: u64,
) -> Result<S> {
    evaluate_params_pair(&a.params, &b.params, env, seed)
}

#[derive(Debug, Clone)]
struct CacheEntry<S> {
    value: S,
    hash_lo: u64,
    hash_hi: u64,
}

/// Memo of evaluated pairs keyed by unordered strategy ids, verified against
/// parameter content hashes so a stale entry can never be served.
#[derive(Debug, Clone, Default)]
pub struct PairCache<S> {
    entries: HashMap<(StrategyId, StrategyId), CacheEntry<S>>,
    evaluations: u64,
}

impl<S: Scalar> PairCache<S> {
    pub fn new() -> Self {
        PairCache {
            entries: HashMap::new(),
            evaluations: 0,
        }
    }

    fn key(a: StrategyId, b: StrategyId) -> (StrategyId, StrategyId) {
        if a.0 <= b.0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn get(&self, a: &Strategy<S>, b: &Strategy<S>) -> Option<S> {
        let key = Self::key(a.id, b.id);
        let entry = self.entries.get(&key)?;
        let (lo, hi) = if a.id.0 <= b.id.0 { (a, b) } else { (b, a) };
        if entry.hash_lo == lo.content_hash() && entry.hash_hi == hi.content_hash() {
            Some(entry.value)
        } else {
            None
        }
    }

    pub fn insert(&mut self, a: &Strategy<S>, b: &Strategy<S>, value: S) {
        let key = Self::key(a.id, b.id);
        let (lo, hi) = if a.id.0 <= b.id.0 { (a, b) } else { (b, a) };
        self.entries.insert(
            key,
            CacheEntry {
                value,
                hash_lo: lo.content_hash(),
                hash_hi: hi.content_hash(),
            },
        );
        self.evaluations += 1;
    }

    /// Drop every cached pair involving `id`.
    pub fn remove_strategy(&mut self, id: StrategyId) {
        self.entries.retain(|&(x, y), _| x != id && y != id);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of fresh evaluations inserted over the cache's lifetime.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Fill the full pairwise payoff matrix for a population, re-evaluating only
/// pairs missing from the cache. Role averaging makes the result symmetric.
pub fn complete_payoff_matrix<S: Scalar>(
    pop: &[Strategy<S>],
    env: &StageGame<S>,
    cache: &mut PairCache<S>,
    seed: u64,
) -> Result<PayoffMatrix<S>> {
    let n = pop.len();
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut entries = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let value = match cache.get(&pop[i], &pop[j]) {
                Some(v) => v,
                None => {
                    let v = evaluate_pair(&pop[i], &pop[j], env, seed)?;
                    cache.insert(&pop[i], &pop[j], v);
                    v
                }
            };
            entries[i * n + j] = value;
            entries[j * n + i] = value;
        }
    }
    PayoffMatrix::new(n, entries)
}
