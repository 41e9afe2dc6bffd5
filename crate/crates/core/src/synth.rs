//! Artificial rating networks with a known ground truth.
//!
//! Topology grows by preferential attachment: each new link picks a user
//! with probability proportional to `k_i + 1` and an item proportional to
//! `k_α + 1`, resampling both ends when the pair already exists. Every item
//! gets an intrinsic quality `Q'_α ~ U[q_min, q_max]`, every user an error
//! magnitude `e_i ~ U[δ_min, δ_max)`, and a link's raw rating is
//! `Q'_α + N(0, e_i)` before discretization.
//!
//! Each stage draws from its own ChaCha stream of the master seed, so two
//! specs that differ only in `case` or `spam_fraction` share topology and
//! truth.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::graph::{Link, RatingGraph};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("unknown discretization case `{0}` (expected 0..=4)")]
    UnknownCase(String),
    #[error("empty truth")]
    EmptyTruth,
    #[error("truth file line {line}: {reason}")]
    MalformedTruth { line: usize, reason: String },
    #[error("truth file truncated at line {line}: expected {expected} {section} values, found {found}")]
    TruncatedTruth {
        line: usize,
        section: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How raw continuous ratings become integers.
///
/// Case 0 rounds to the nearest integer and truncates to `[1, 5]`. Cases
/// 1–4 first check a confusion band; a raw value inside it becomes one of
/// two neighbouring integers with equal probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DiscretizationCase {
    #[default]
    Case0,
    Case1,
    Case2,
    Case3,
    Case4,
}

impl DiscretizationCase {
    pub const ALL: [DiscretizationCase; 5] = [
        DiscretizationCase::Case0,
        DiscretizationCase::Case1,
        DiscretizationCase::Case2,
        DiscretizationCase::Case3,
        DiscretizationCase::Case4,
    ];

    pub fn index(&self) -> u8 {
        *self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    /// `(lo, hi, low_value, high_value)` of the confusion band, closed.
    pub fn band(&self) -> Option<(f64, f64, f64, f64)> {
        match self {
            DiscretizationCase::Case0 => None,
            DiscretizationCase::Case1 => Some((0.0, 2.5, 1.0, 2.0)),
            DiscretizationCase::Case2 => Some((1.5, 3.5, 2.0, 3.0)),
            DiscretizationCase::Case3 => Some((2.5, 4.5, 3.0, 4.0)),
            DiscretizationCase::Case4 => Some((3.5, 5.0, 4.0, 5.0)),
        }
    }

    pub fn discretize(&self, raw: f64, rng: &mut impl Rng) -> f64 {
        if let Some((lo, hi, low, high)) = self.band() {
            if (lo..=hi).contains(&raw) {
                return if rng.random_bool(0.5) { low } else { high };
            }
        }
        nearest_rating(raw)
    }
}

impl fmt::Display for DiscretizationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case{}", self.index())
    }
}

impl FromStr for DiscretizationCase {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("case").unwrap_or(s);
        digits
            .parse::<u8>()
            .ok()
            .and_then(Self::from_index)
            .ok_or_else(|| SynthError::UnknownCase(s.to_owned()))
    }
}

/// Nearest integer (halves away from zero), truncated to `[1, 5]`.
pub fn nearest_rating(raw: f64) -> f64 {
    raw.round().clamp(1.0, 5.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub num_links: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub case: DiscretizationCase,
    /// Fraction of links whose rating is replaced by a uniform random one.
    pub spam_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_users: 6000,
            num_items: 4000,
            num_links: 480_000,
            q_min: 1.0,
            q_max: 5.0,
            delta_min: 0.0,
            delta_max: 4.0,
            case: DiscretizationCase::Case0,
            spam_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// One tenth of the default in each dimension: 600 users, 400 items,
    /// 48 000 links (same density).
    pub fn desk_scale() -> Self {
        Self {
            num_users: 600,
            num_items: 400,
            num_links: 48_000,
            ..Self::default()
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.num_users == 0 || self.num_items == 0 {
            return bad("need at least one user and one item".into());
        }
        let capacity = self.num_users as u128 * self.num_items as u128;
        if self.num_links as u128 > capacity {
            return bad(format!(
                "{} links exceed {}x{} possible pairs",
                self.num_links, self.num_users, self.num_items
            ));
        }
        if !(self.q_min < self.q_max) || self.q_min < 1.0 || self.q_max > 5.0 {
            return bad(format!("quality bounds [{}, {}] must satisfy 1 <= min < max <= 5", self.q_min, self.q_max));
        }
        if !(self.delta_min < self.delta_max) || self.delta_min < 0.0 {
            return bad(format!(
                "error bounds [{}, {}) must satisfy 0 <= min < max",
                self.delta_min, self.delta_max
            ));
        }
        if !(0.0..=1.0).contains(&self.spam_fraction) {
            return bad(format!("spam fraction {} outside [0, 1]", self.spam_fraction));
        }
        Ok(())
    }

    /// Independent stream of the master seed for one generation stage.
    pub fn stream(&self, stage: Stage) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stage as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Stage {
    Topology = 1,
    Truth = 2,
    Ratings = 3,
    Spam = 4,
}

/// Hidden ground truth of a synthetic network.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    /// `Q'_α` per item.
    pub intrinsic_quality: Vec<f64>,
    /// `e_i` per user.
    pub error_magnitude: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthNetwork {
    pub graph: RatingGraph,
    pub truth: SynthTruth,
}

/// Full pipeline: topology, truth, ratings, then spam.
pub fn generate(spec: &SynthSpec) -> Result<SynthNetwork, SynthError> {
    spec.validate()?;
    let edges = generate_topology(spec, &mut spec.stream(Stage::Topology))?;
    let truth = generate_truth(spec, &mut spec.stream(Stage::Truth));
    let graph = generate_ratings(
        spec.num_users,
        &edges,
        &truth,
        spec.case,
        &mut spec.stream(Stage::Ratings),
    );
    let graph = inject_spam(&graph, spec.spam_fraction, &mut spec.stream(Stage::Spam))?;
    Ok(SynthNetwork { graph, truth })
}

pub fn generate_truth(spec: &SynthSpec, rng: &mut impl Rng) -> SynthTruth {
    let intrinsic_quality = (0..spec.num_items)
        .map(|_| rng.random_range(spec.q_min..=spec.q_max))
        .collect();
    let error_magnitude = (0..spec.num_users)
        .map(|_| rng.random_range(spec.delta_min..spec.delta_max))
        .collect();
    SynthTruth {
        intrinsic_quality,
        error_magnitude,
    }
}

/// `num_links` distinct `(user, item)` pairs grown by degree-proportional
/// attachment with `+1` smoothing.
pub fn generate_topology(
    spec: &SynthSpec,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    spec.validate()?;
    let total = spec.num_links;
    // Each node holds one ticket plus one per incident link, so a uniform
    // ticket draw selects a node with probability ∝ k + 1.
    let mut user_tickets: Vec<u32> = (0..spec.num_users as u32).collect();
    let mut item_tickets: Vec<u32> = (0..spec.num_items as u32).collect();
    user_tickets.reserve(total);
    item_tickets.reserve(total);
    let mut seen: HashSet<u64> = HashSet::with_capacity(total);
    let mut edges = Vec::with_capacity(total);
    while edges.len() < total {
        let u = user_tickets[rng.random_range(0..user_tickets.len())];
        let a = item_tickets[rng.random_range(0..item_tickets.len())];
        if !seen.insert(((u as u64) << 32) | a as u64) {
            continue;
        }
        user_tickets.push(u);
        item_tickets.push(a);
        edges.push((u as usize, a as usize));
    }
    Ok(edges)
}

/// Rates every edge: raw value `Q'_α + N(0, e_i)`, then discretized.
pub fn generate_ratings(
    num_users: usize,
    edges: &[(usize, usize)],
    truth: &SynthTruth,
    case: DiscretizationCase,
    rng: &mut impl Rng,
) -> RatingGraph {
    assert_eq!(truth.error_magnitude.len(), num_users, "truth/user count mismatch");
    let links = edges
        .iter()
        .map(|&(u, a)| {
            let noise: f64 = rng.sample(StandardNormal);
            let raw = truth.intrinsic_quality[a] + truth.error_magnitude[u] * noise;
            Link::new(u, a, case.discretize(raw, rng))
        })
        .collect();
    RatingGraph::new(num_users, truth.intrinsic_quality.len(), links)
        .expect("generated edges are distinct and in range")
}

/// Replaces the ratings of `⌊p·|links|⌋` uniformly chosen links with
/// uniform integers in `1..=5`.
pub fn inject_spam(g: &RatingGraph, p: f64, rng: &mut impl Rng) -> Result<RatingGraph, SynthError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SynthError::InvalidSpec(format!("spam fraction {p} outside [0, 1]")));
    }
    let total = g.num_links();
    let count = ((p * total as f64) + 1e-9).floor() as usize;
    if count == 0 {
        return Ok(g.clone());
    }
    let mut chosen = index::sample(rng, total, count.min(total)).into_vec();
    chosen.sort_unstable();
    let replacements: Vec<(usize, f64)> = chosen
        .into_iter()
        .map(|idx| (idx, rng.random_range(1..=5u8) as f64))
        .collect();
    let mut next = replacements.into_iter().peekable();
    Ok(g.map_ratings(|idx, r| match next.peek() {
        Some(&(at, value)) if at == idx => {
            next.next();
            value
        }
        _ => r,
    }))
}

/// Writes `truth` as two `index,value` sections with full round-trip
/// precision.
pub fn write_truth(truth: &SynthTruth, header: &[String], mut out: impl Write) -> Result<(), SynthError> {
    if truth.intrinsic_quality.is_empty() || truth.error_magnitude.is_empty() {
        return Err(SynthError::EmptyTruth);
    }
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "items,{}", truth.intrinsic_quality.len())?;
    for (i, q) in truth.intrinsic_quality.iter().enumerate() {
        writeln!(out, "{i},{q}")?;
    }
    writeln!(out, "users,{}", truth.error_magnitude.len())?;
    for (i, e) in truth.error_magnitude.iter().enumerate() {
        writeln!(out, "{i},{e}")?;
    }
    Ok(())
}

pub fn read_truth(source: impl BufRead) -> Result<SynthTruth, SynthError> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(n, l)| l.map(|l| (n + 1, l)))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty() || l.starts_with('#')));

    let mut last_line = 0;
    let mut section = |name: &'static str, last_line: &mut usize| -> Result<Vec<f64>, SynthError> {
        let Some(head) = lines.next() else {
            return Err(SynthError::TruncatedTruth {
                line: *last_line + 1,
                section: name,
                expected: 1,
                found: 0,
            });
        };
        let (line, text) = head?;
        *last_line = line;
        let count = text
            .split_once(',')
            .filter(|(tag, _)| tag.trim() == name)
            .and_then(|(_, n)| n.trim().parse::<usize>().ok())
            .ok_or_else(|| SynthError::MalformedTruth {
                line,
                reason: format!("expected `{name},<count>`"),
            })?;
        let mut values = Vec::with_capacity(count);
        for expected_index in 0..count {
            let Some(next) = lines.next() else {
                return Err(SynthError::TruncatedTruth {
                    line: *last_line + 1,
                    section: name,
                    expected: count,
                    found: values.len(),
                });
            };
            let (line, text) = next?;
            *last_line = line;
            let parsed = text.split_once(',').and_then(|(i, v)| {
                Some((i.trim().parse::<usize>().ok()?, v.trim().parse::<f64>().ok()?))
            });
            match parsed {
                Some((i, v)) if i == expected_index => values.push(v),
                _ => {
                    return Err(SynthError::MalformedTruth {
                        line,
                        reason: format!("expected `{expected_index},<value>`, found `{text}`"),
                    })
                }
            }
        }
        Ok(values)
    };

    let intrinsic_quality = section("items", &mut last_line)?;
    let error_magnitude = section("users", &mut last_line)?;
    if intrinsic_quality.is_empty() || error_magnitude.is_empty() {
        return Err(SynthError::EmptyTruth);
    }
    Ok(SynthTruth {
        intrinsic_quality,
        error_magnitude,
    })
}
