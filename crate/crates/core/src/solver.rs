//! Cooperative-incompatibility solvers.
//!
//! Both solvers start from weighted-PageRank popularity over the game graph.
//! Its normalized reciprocal `sigma` weights a coalition value
//! `v(C) = sum_{i,j in C} sigma(i) sigma(j) w(i,j) / |C|^2`; the Shapley-value
//! solver distributes `v` over strategies by Monte Carlo permutation
//! sampling, while the reward solver scores each strategy directly by
//! `sum_j sigma(i) sigma(j) w(i,j)`. Either way the raw scores are clamped,
//! normalized and inverted so that strategies that coordinate poorly end up
//! with the most probability mass.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::game_graph::{build_game_graph, GameGraph, PayoffMatrix};
use crate::scalar::{cast, from_count, to_f64, Scalar};

/// Raw scores below this are clamped before normalization; Monte Carlo noise
/// can push marginal sums slightly negative, which would break the
/// normalize-then-invert pipeline.
pub const SCORE_CLAMP: f64 = 1e-9;

/// Exact Shapley enumeration guard.
pub const MAX_EXACT_SHAPLEY: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct WpgConfig<S> {
    pub damping: S,
    pub tol: S,
    pub max_iter: usize,
}

impl<S: Scalar> Default for WpgConfig<S> {
    fn default() -> Self {
        WpgConfig {
            damping: cast(0.85),
            tol: cast(1e-10),
            max_iter: 10_000,
        }
    }
}

/// Weighted PageRank over the game graph.
///
/// Fixed point of
/// `s(u) = (1 - d) + d * sum_{v in B(u)} s(v) * (I_u / sum_{p in R(v)} I_p) * (O_u / sum_{p in R(v)} O_p)`
/// where `B(u)` are the positive-weight predecessors of `u`, `R(v)` the
/// positive-weight successors of `v`, and `I`/`O` are weighted in/out degrees.
/// Self-loops are excluded throughout and non-positive weights are treated as
/// absent edges.
pub fn weighted_pagerank<S: Scalar>(g: &GameGraph<S>, cfg: &WpgConfig<S>) -> Result<Vec<S>> {
    let n = g.n();
    let d = cfg.damping;
    if n == 1 {
        return Ok(vec![S::one() - d]);
    }

    let pos = |w: S| if w > S::zero() { w } else { S::zero() };
    let in_deg: Vec<S> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&j| j != u)
                .fold(S::zero(), |acc, j| acc + pos(g.weight(j, u)))
        })
        .collect();
    let out_deg: Vec<S> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&j| j != u)
                .fold(S::zero(), |acc, j| acc + pos(g.weight(u, j)))
        })
        .collect();
    if out_deg.iter().all(|&o| o == S::zero()) {
        return Err(Error::DegenerateGraph);
    }

    // Degree sums over each node's successor set R(v).
    let mut denom_in = vec![S::zero(); n];
    let mut denom_out = vec![S::zero(); n];
    for v in 0..n {
        for p in 0..n {
            if p != v && g.weight(v, p) > S::zero() {
                denom_in[v] += in_deg[p];
                denom_out[v] += out_deg[p];
            }
        }
    }

    // coef[u][v]: contribution factor of predecessor v to u.
    let mut coef = vec![S::zero(); n * n];
    for u in 0..n {
        for v in 0..n {
            if v != u && g.weight(v, u) > S::zero() {
                coef[u * n + v] = in_deg[u] / denom_in[v] * (out_deg[u] / denom_out[v]);
            }
        }
    }

    let mut scores = vec![S::one(); n];
    let mut next = vec![S::zero(); n];
    let mut residual = S::infinity();
    for _ in 0..cfg.max_iter {
        for u in 0..n {
            let mut acc = S::zero();
            for v in 0..n {
                acc += coef[u * n + v] * scores[v];
            }
            next[u] = (S::one() - d) + d * acc;
        }
        residual = scores
            .iter()
            .zip(&next)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max);
        std::mem::swap(&mut scores, &mut next);
        if residual <= cfg.tol {
            return Ok(scores);
        }
    }
    Err(Error::NoConvergence {
        residual: to_f64(residual),
        iterations: cfg.max_iter,
    })
}

/// Pagerank popularity and its normalized reciprocal (unpopularity).
#[derive(Debug, Clone)]
pub struct UnpopularityWeights<S> {
    pub sigma_hat: Vec<S>,
    pub sigma: Vec<S>,
}

/// `sigma(i)` proportional to `1 / sigma_hat(i)`, normalized to sum 1.
pub fn unpopularity<S: Scalar>(sigma_hat: Vec<S>) -> Result<UnpopularityWeights<S>> {
    for (index, &s) in sigma_hat.iter().enumerate() {
        if s <= S::zero() {
            return Err(Error::NonPositiveScore { index });
        }
    }
    let inv: Vec<S> = sigma_hat.iter().map(|&s| S::one() / s).collect();
    let total = inv.iter().fold(S::zero(), |acc, &x| acc + x);
    let sigma = inv.into_iter().map(|x| x / total).collect();
    Ok(UnpopularityWeights { sigma_hat, sigma })
}

/// Coalition value: uniform expectation of `sigma(i) sigma(j) w(i,j)` over
/// ordered member pairs, self-pairs included. The empty coalition is worth 0.
pub fn coalition_value<S: Scalar>(members: &[usize], sigma: &[S], payoff: &PayoffMatrix<S>) -> S {
    if members.is_empty() {
        return S::zero();
    }
    let mut quad = S::zero();
    for &i in members {
        for &j in members {
            quad += sigma[i] * sigma[j] * payoff.entry(i, j);
        }
    }
    let m: S = from_count(members.len());
    quad / (m * m)
}

fn coalition_value_mask<S: Scalar>(mask: u64, sigma: &[S], payoff: &PayoffMatrix<S>) -> S {
    let members: Vec<usize> = (0..sigma.len()).filter(|&i| mask >> i & 1 == 1).collect();
    coalition_value(&members, sigma, payoff)
}

/// Exact Shapley values of an arbitrary characteristic function over coalition
/// bitmasks, via the subset-weighted marginal formula. Equivalent to averaging
/// marginal contributions over all n! orderings.
pub fn shapley_exact_with<S: Scalar>(n: usize, v: impl Fn(u64) -> S) -> Result<Vec<S>> {
    if n > MAX_EXACT_SHAPLEY {
        return Err(Error::TooManyStrategies {
            n,
            max: MAX_EXACT_SHAPLEY,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // weight[s] = s! (n-1-s)! / n!
    let mut fact = vec![1f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<S> = (0..n)
        .map(|s| cast(fact[s] * fact[n - 1 - s] / fact[n]))
        .collect();

    let table: Vec<S> = (0..1u64 << n).map(&v).collect();
    let mut values = vec![S::zero(); n];
    for i in 0..n {
        let bit = 1u64 << i;
        for mask in 0..1u64 << n {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                values[i] += weight[s] * (table[(mask | bit) as usize] - table[mask as usize]);
            }
        }
    }
    Ok(values)
}

/// Exact graphic Shapley value under the sigma-weighted coalition value.
pub fn shapley_exact<S: Scalar>(payoff: &PayoffMatrix<S>, sigma: &[S]) -> Result<Vec<S>> {
    shapley_exact_with(payoff.n(), |mask| coalition_value_mask(mask, sigma, payoff))
}

#[derive(Debug, Clone)]
pub struct ShapleyEstimate<S> {
    pub values: Vec<S>,
    pub sample_count: usize,
    pub std_error: Vec<S>,
}

/// Monte Carlo permutation-sampling estimate of the graphic Shapley value.
///
/// Each sample draws a uniform ordering and credits every strategy with its
/// marginal coalition value along the prefix. Deterministic given the RNG
/// state.
pub fn shapley_monte_carlo<S: Scalar, R: Rng>(
    payoff: &PayoffMatrix<S>,
    sigma: &[S],
    samples: usize,
    rng: &mut R,
) -> ShapleyEstimate<S> {
    let n = payoff.n();
    assert!(samples >= 1, "need at least one permutation sample");
    assert_eq!(sigma.len(), n);

    let mut sums = vec![S::zero(); n];
    let mut sq_sums = vec![S::zero(); n];
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        perm.shuffle(rng);
        // Incremental quadratic form over the growing prefix.
        let mut quad = S::zero();
        let mut prev_v = S::zero();
        for (pos, &e) in perm.iter().enumerate() {
            let mut cross = S::zero();
            for &j in &perm[..pos] {
                cross += sigma[j] * (payoff.entry(e, j) + payoff.entry(j, e));
            }
            quad += sigma[e] * sigma[e] * payoff.entry(e, e) + sigma[e] * cross;
            let m: S = from_count(pos + 1);
            let value = quad / (m * m);
            let marginal = value - prev_v;
            prev_v = value;
            sums[e] += marginal;
            sq_sums[e] += marginal * marginal;
        }
    }

    let k: S = from_count(samples);
    let values: Vec<S> = sums.iter().map(|&s| s / k).collect();
    let std_error = values
        .iter()
        .zip(&sq_sums)
        .map(|(&mean, &sq)| {
            let var = (sq / k - mean * mean).max(S::zero());
            (var / k).sqrt()
        })
        .collect();
    ShapleyEstimate {
        values,
        sample_count: samples,
        std_error,
    }
}

/// Probability vector placing more mass on strategies that coordinate poorly.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompatibilityDistribution<S> {
    phi: Vec<S>,
}

impl<S: Scalar> IncompatibilityDistribution<S> {
    #[inline]
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.phi
    }

    #[inline]
    pub fn get(&self, k: usize) -> S {
        self.phi[k]
    }

    pub fn into_vec(self) -> Vec<S> {
        self.phi
    }

    /// Validity check: non-negative entries summing to 1 within 1e-9.
    pub fn is_valid(&self) -> bool {
        let sum = self.phi.iter().fold(S::zero(), |acc, &x| acc + x);
        self.phi.iter().all(|&x| x >= S::zero()) && (sum - S::one()).abs() <= cast(1e-9)
    }
}

/// Clamp raw scores at [`SCORE_CLAMP`], normalize to sum 1, then invert as
/// `(1 - phi) / sum(1 - phi)`. A single strategy yields `[1]`.
pub fn incompatibility_distribution<S: Scalar>(values: &[S]) -> IncompatibilityDistribution<S> {
    assert!(!values.is_empty(), "no strategies to distribute over");
    assert!(
        values.iter().all(|v| v.is_finite()),
        "raw solver scores must be finite"
    );
    if values.len() == 1 {
        return IncompatibilityDistribution {
            phi: vec![S::one()],
        };
    }
    let clamp: S = cast(SCORE_CLAMP);
    let clamped: Vec<S> = values.iter().map(|&v| v.max(clamp)).collect();
    let total = clamped.iter().fold(S::zero(), |acc, &x| acc + x);
    let normalized: Vec<S> = clamped.into_iter().map(|v| v / total).collect();
    let inverted: Vec<S> = normalized.iter().map(|&p| S::one() - p).collect();
    let inv_total = inverted.iter().fold(S::zero(), |acc, &x| acc + x);
    IncompatibilityDistribution {
        phi: inverted.into_iter().map(|v| v / inv_total).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig<S> {
    pub wpg: WpgConfig<S>,
    /// Monte Carlo permutation count; `None` means `max(1000, 200 * n)`.
    pub mc_samples: Option<usize>,
}

impl<S: Scalar> Default for SolverConfig<S> {
    fn default() -> Self {
        SolverConfig {
            wpg: WpgConfig::default(),
            mc_samples: None,
        }
    }
}

pub fn default_mc_samples(n: usize) -> usize {
    1000.max(200 * n)
}

/// Everything a solver computed, for diagnostics and reporting.
#[derive(Debug, Clone)]
pub struct SolverReport<S> {
    pub sigma_hat: Vec<S>,
    pub sigma: Vec<S>,
    /// Monte Carlo Shapley estimate; `None` for the reward solver.
    pub shapley: Option<ShapleyEstimate<S>>,
    /// Raw per-strategy scores fed into the clamp/normalize/invert pipeline.
    pub raw_scores: Vec<S>,
    pub phi: IncompatibilityDistribution<S>,
}

/// Shapley-value solver: pagerank -> unpopularity -> Monte Carlo Shapley ->
/// inversion.
pub fn graphic_shapley_solver<S: Scalar, R: Rng>(
    payoff: &PayoffMatrix<S>,
    cfg: &SolverConfig<S>,
    rng: &mut R,
) -> Result<SolverReport<S>> {
    let n = payoff.n();
    let graph = build_game_graph(payoff.clone());
    let sigma_hat = weighted_pagerank(&graph, &cfg.wpg)?;
    let weights = unpopularity(sigma_hat)?;
    let samples = cfg.mc_samples.unwrap_or_else(|| default_mc_samples(n));
    let estimate = shapley_monte_carlo(payoff, &weights.sigma, samples, rng);
    let phi = incompatibility_distribution(&estimate.values);
    Ok(SolverReport {
        sigma_hat: weights.sigma_hat,
        sigma: weights.sigma,
        raw_scores: estimate.values.clone(),
        shapley: Some(estimate),
        phi,
    })
}

/// Reward solver: pagerank -> unpopularity -> weighted average rewards ->
/// inversion. Deterministic (no sampling).
pub fn reward_solver<S: Scalar>(
    payoff: &PayoffMatrix<S>,
    cfg: &SolverConfig<S>,
) -> Result<SolverReport<S>> {
    let n = payoff.n();
    let graph = build_game_graph(payoff.clone());
    let sigma_hat = weighted_pagerank(&graph, &cfg.wpg)?;
    let weights = unpopularity(sigma_hat)?;
    let sigma = &weights.sigma;
    let scores: Vec<S> = (0..n)
        .map(|i| {
            (0..n).fold(S::zero(), |acc, j| {
                acc + sigma[i] * sigma[j] * payoff.entry(i, j)
            })
        })
        .collect();
    let phi = incompatibility_distribution(&scores);
    Ok(SolverReport {
        sigma_hat: weights.sigma_hat,
        sigma: weights.sigma,
        shapley: None,
        raw_scores: scores,
        phi,
    })
}
