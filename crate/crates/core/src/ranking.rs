//! Reputation and quality estimation on a [`RatingGraph`].
//!
//! Four algorithms share one fixed-point engine:
//!
//! | algorithm | quality update | reputation update | initial `R_i` |
//! |-----------|----------------|-------------------|---------------|
//! | Mean | plain mean | none | 1 |
//! | IR | reputation-weighted mean | `(MSE_i + ε)^-β` | 1 |
//! | CR | reputation-weighted mean | Pearson(ratings, qualities), clamped at 0 | `k_i / |O|` |
//! | RR | `F ·` weighted mean, `F` = max rater reputation | `G ·` Pearson, clamped, then redistributed with exponent θ | `k_i / |O|` |
//!
//! Updates are synchronous: every quality is computed from the previous
//! reputations, then every reputation from the new qualities. Iteration
//! stops once the mean squared change of the quality vector drops below
//! `delta`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::RatingGraph;

/// Quality of an item nobody rated. Ranked after every rated item.
pub const UNRATED: f64 = f64::NAN;

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("invalid ranking config: {0}")]
    InvalidConfig(String),
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Mean,
    Ir,
    Cr,
    Rr,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mean, Algorithm::Ir, Algorithm::Cr, Algorithm::Rr];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mean => "mean",
            Algorithm::Ir => "ir",
            Algorithm::Cr => "cr",
            Algorithm::Rr => "rr",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Algorithm::Mean),
            "ir" => Ok(Algorithm::Ir),
            "cr" => Ok(Algorithm::Cr),
            "rr" => Ok(Algorithm::Rr),
            other => Err(format!("unknown algorithm `{other}` (expected mean|ir|cr|rr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingConfig {
    pub algorithm: Algorithm,
    /// IR exponent β.
    pub beta: f64,
    /// IR regularizer ε.
    pub epsilon: f64,
    /// RR redistribution exponent θ.
    pub theta: f64,
    /// Convergence threshold on the quality residual.
    pub delta: f64,
    pub max_iterations: usize,
    /// RR only: scale qualities by the largest rater reputation (`F`).
    pub penalty: bool,
    /// RR only: scale temporal reputations by `lg k_i / max lg k_j` (`G`).
    pub damping: bool,
}

impl RankingConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), RankError> {
        let bad = |msg: String| Err(RankError::InvalidConfig(msg));
        if !(self.delta > 0.0) {
            return bad(format!("delta must be > 0, got {}", self.delta));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return bad(format!("theta must be > 0, got {}", self.theta));
        }
        Ok(())
    }
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Rr,
            beta: 1.0,
            epsilon: 1e-8,
            theta: 5.0,
            delta: 1e-4,
            max_iterations: 1000,
            penalty: true,
            damping: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    /// `R_i` per user.
    pub reputations: Vec<f64>,
    /// `Q_α` per item; [`UNRATED`] for items without ratings.
    pub qualities: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Residual of the last iteration; 0 for Mean.
    pub final_residual: f64,
}

/// State handed to an observer after each iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    /// 1-based.
    pub iteration: usize,
    pub qualities: &'a [f64],
    pub reputations: &'a [f64],
    /// `None` on the first iteration.
    pub residual: Option<f64>,
}

/// Mean squared difference `(1/n) Σ (a_l - b_l)^2`.
///
/// Positions where both entries are [`UNRATED`] contribute 0.
pub fn residual(q_new: &[f64], q_old: &[f64]) -> Result<f64, RankError> {
    if q_new.len() != q_old.len() {
        return Err(RankError::LengthMismatch(q_new.len(), q_old.len()));
    }
    Ok(residual_unchecked(q_new, q_old))
}

fn residual_unchecked(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            if x.is_nan() && y.is_nan() {
                0.0
            } else {
                (x - y) * (x - y)
            }
        })
        .sum();
    sum / a.len() as f64
}

pub fn rank(g: &RatingGraph, cfg: &RankingConfig) -> Result<RankingResult, RankError> {
    rank_observed(g, cfg, |_| {})
}

/// Runs `cfg.algorithm`, calling `observer` after every iteration.
pub fn rank_observed(
    g: &RatingGraph,
    cfg: &RankingConfig,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<RankingResult, RankError> {
    cfg.validate()?;
    Ok(match cfg.algorithm {
        Algorithm::Mean => {
            let result = mean_result(g);
            observer(&IterationState {
                iteration: 1,
                qualities: &result.qualities,
                reputations: &result.reputations,
                residual: None,
            });
            result
        }
        Algorithm::Ir => iterate(g, cfg, vec![1.0; g.num_users()], Ir { cfg }, &mut observer),
        Algorithm::Cr => iterate(
            g,
            cfg,
            degree_share(g),
            Correlation {
                penalty: false,
                damping: false,
                theta: 1.0,
                max_log_degree: 0.0,
            },
            &mut observer,
        ),
        Algorithm::Rr => iterate(
            g,
            cfg,
            degree_share(g),
            Correlation {
                penalty: cfg.penalty,
                damping: cfg.damping,
                theta: cfg.theta,
                max_log_degree: max_log_degree(g),
            },
            &mut observer,
        ),
    })
}

/// Item quality as the plain mean rating; all reputations 1.
pub fn rank_mean(g: &RatingGraph) -> RankingResult {
    mean_result(g)
}

pub fn rank_ir(g: &RatingGraph, cfg: &RankingConfig) -> Result<RankingResult, RankError> {
    rank(g, &RankingConfig { algorithm: Algorithm::Ir, ..*cfg })
}

pub fn rank_cr(g: &RatingGraph, cfg: &RankingConfig) -> Result<RankingResult, RankError> {
    rank(g, &RankingConfig { algorithm: Algorithm::Cr, ..*cfg })
}

pub fn rank_rr(g: &RatingGraph, cfg: &RankingConfig) -> Result<RankingResult, RankError> {
    rank(g, &RankingConfig { algorithm: Algorithm::Rr, ..*cfg })
}

fn mean_result(g: &RatingGraph) -> RankingResult {
    let qualities = (0..g.num_items())
        .map(|a| {
            let (_, ratings) = g.item_ratings(a);
            if ratings.is_empty() {
                UNRATED
            } else {
                ratings.iter().sum::<f64>() / ratings.len() as f64
            }
        })
        .collect();
    RankingResult {
        reputations: vec![1.0; g.num_users()],
        qualities,
        iterations_used: 1,
        converged: true,
        final_residual: 0.0,
    }
}

fn degree_share(g: &RatingGraph) -> Vec<f64> {
    let items = g.num_items() as f64;
    (0..g.num_users())
        .map(|u| g.user_degree(u) as f64 / items)
        .collect()
}

fn max_log_degree(g: &RatingGraph) -> f64 {
    (0..g.num_users())
        .map(|u| g.user_degree(u))
        .filter(|&k| k > 0)
        .map(|k| (k as f64).log10())
        .fold(0.0, f64::max)
}

/// One alternating update scheme.
trait Scheme {
    fn qualities(&self, g: &RatingGraph, reputations: &[f64], out: &mut [f64]);
    fn reputations(&self, g: &RatingGraph, qualities: &[f64], out: &mut [f64]);
}

fn iterate(
    g: &RatingGraph,
    cfg: &RankingConfig,
    mut reputations: Vec<f64>,
    scheme: impl Scheme,
    observer: &mut impl FnMut(&IterationState<'_>),
) -> RankingResult {
    let mut qualities = vec![UNRATED; g.num_items()];
    let mut previous = vec![UNRATED; g.num_items()];
    let mut last_residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations_used = 0;

    for iteration in 1..=cfg.max_iterations {
        iterations_used = iteration;
        scheme.qualities(g, &reputations, &mut qualities);
        scheme.reputations(g, &qualities, &mut reputations);
        let residual = (iteration > 1).then(|| residual_unchecked(&qualities, &previous));
        observer(&IterationState {
            iteration,
            qualities: &qualities,
            reputations: &reputations,
            residual,
        });
        if let Some(r) = residual {
            last_residual = r;
            if r < cfg.delta {
                converged = true;
                break;
            }
        }
        std::mem::swap(&mut qualities, &mut previous);
    }
    if !converged {
        // the freshest qualities sit in `previous` after the final swap
        std::mem::swap(&mut qualities, &mut previous);
    }

    RankingResult {
        reputations,
        qualities,
        iterations_used,
        converged,
        final_residual: last_residual,
    }
}

/// `Σ R_i r_iα / Σ R_i`, falling back to the unweighted mean when every
/// rater has zero reputation.
#[inline]
fn weighted_mean(raters: &[usize], ratings: &[f64], reputations: &[f64]) -> f64 {
    if ratings.is_empty() {
        return UNRATED;
    }
    let mut weight = 0.0;
    let mut total = 0.0;
    for (&u, &r) in raters.iter().zip(ratings) {
        weight += reputations[u];
        total += reputations[u] * r;
    }
    if weight > 0.0 {
        total / weight
    } else {
        ratings.iter().sum::<f64>() / ratings.len() as f64
    }
}

struct Ir<'a> {
    cfg: &'a RankingConfig,
}

impl Scheme for Ir<'_> {
    fn qualities(&self, g: &RatingGraph, reputations: &[f64], out: &mut [f64]) {
        for (a, q) in out.iter_mut().enumerate() {
            let (raters, ratings) = g.item_ratings(a);
            *q = weighted_mean(raters, ratings, reputations);
        }
    }

    fn reputations(&self, g: &RatingGraph, qualities: &[f64], out: &mut [f64]) {
        for (u, rep) in out.iter_mut().enumerate() {
            let (items, ratings) = g.user_ratings(u);
            if items.is_empty() {
                *rep = 0.0;
                continue;
            }
            let mse = items
                .iter()
                .zip(ratings)
                .map(|(&a, &r)| (r - qualities[a]) * (r - qualities[a]))
                .sum::<f64>()
                / items.len() as f64;
            *rep = (mse + self.cfg.epsilon).powf(-self.cfg.beta);
        }
    }
}

/// CR and RR. CR is this scheme with `penalty = damping = false, theta = 1`.
struct Correlation {
    penalty: bool,
    damping: bool,
    theta: f64,
    max_log_degree: f64,
}

impl Scheme for Correlation {
    fn qualities(&self, g: &RatingGraph, reputations: &[f64], out: &mut [f64]) {
        for (a, q) in out.iter_mut().enumerate() {
            let (raters, ratings) = g.item_ratings(a);
            let mean = weighted_mean(raters, ratings, reputations);
            *q = if self.penalty {
                let f = raters.iter().map(|&u| reputations[u]).fold(0.0, f64::max);
                f * mean
            } else {
                mean
            };
        }
    }

    fn reputations(&self, g: &RatingGraph, qualities: &[f64], out: &mut [f64]) {
        for (u, tr) in out.iter_mut().enumerate() {
            let (items, ratings) = g.user_ratings(u);
            let damping = if self.damping {
                if self.max_log_degree > 0.0 && !items.is_empty() {
                    (items.len() as f64).log10() / self.max_log_degree
                } else {
                    0.0
                }
            } else {
                1.0
            };
            let corr = if damping == 0.0 {
                0.0
            } else {
                user_consensus_correlation(items, ratings, qualities)
            };
            *tr = (damping * corr).max(0.0);
        }
        if self.theta != 1.0 {
            redistribute(out, self.theta);
        }
    }
}

/// Pearson correlation between a user's ratings and the current qualities
/// of the items they rated. 0 when either side has zero variance.
fn user_consensus_correlation(items: &[usize], ratings: &[f64], qualities: &[f64]) -> f64 {
    let k = items.len();
    if k < 2 {
        return 0.0;
    }
    let kf = k as f64;
    let mean_r = ratings.iter().sum::<f64>() / kf;
    let mean_q = items.iter().map(|&a| qualities[a]).sum::<f64>() / kf;
    let (mut srr, mut sqq, mut srq) = (0.0, 0.0, 0.0);
    for (&a, &r) in items.iter().zip(ratings) {
        let dr = r - mean_r;
        let dq = qualities[a] - mean_q;
        srr += dr * dr;
        sqq += dq * dq;
        srq += dr * dq;
    }
    if srr <= 0.0 || sqq <= 0.0 {
        return 0.0;
    }
    (srq / (srr * sqq).sqrt()).clamp(-1.0, 1.0)
}

/// `R_i = TR_i^θ · Σ TR_j / Σ TR_j^θ`, all zero if every `TR` is zero.
fn redistribute(tr: &mut [f64], theta: f64) {
    let total: f64 = tr.iter().sum();
    let total_pow: f64 = tr.iter().map(|t| t.powf(theta)).sum();
    if total_pow > 0.0 && total_pow.is_finite() {
        let scale = total / total_pow;
        for t in tr.iter_mut() {
            *t = t.powf(theta) * scale;
        }
    } else {
        tr.iter_mut().for_each(|t| *t = 0.0);
    }
}
