//! Nonlinear remap of the 5-star scale.
//!
//! Ratings 1, 3 and 5 are fixed points. Rating 2 moves to `1 + 2·p1` and
//! rating 4 to `3 + 2·p2`, so `(0.5, 0.5)` is the identity.

use thiserror::Error;

use crate::graph::{RatingGraph, MAX_RATING, MIN_RATING};

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("projection parameter {name} = {value} outside [0, 1]")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("rating {0} outside [1, 5]")]
    RatingOutOfRange(f64),
}

/// The `(p1, p2)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    p1: f64,
    p2: f64,
}

impl ProjectionParams {
    pub const IDENTITY: Self = Self { p1: 0.5, p2: 0.5 };

    pub fn new(p1: f64, p2: f64) -> Result<Self, ProjectionError> {
        for (name, value) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ProjectionError::ParamOutOfRange { name, value });
            }
        }
        Ok(Self { p1, p2 })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Projected value of rating 2.
    pub fn two(&self) -> f64 {
        1.0 + self.p1 * 2.0
    }

    /// Projected value of rating 4.
    pub fn four(&self) -> f64 {
        3.0 + self.p2 * 2.0
    }

    /// Maps a rating that is already known to be in range.
    #[inline]
    pub fn apply(&self, r: f64) -> f64 {
        if r == 2.0 {
            self.two()
        } else if r == 4.0 {
            self.four()
        } else {
            r
        }
    }
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Projects one rating. Values other than exactly 2 or 4 pass through.
pub fn project_rating(r: f64, params: ProjectionParams) -> Result<f64, ProjectionError> {
    if !(MIN_RATING..=MAX_RATING).contains(&r) {
        return Err(ProjectionError::RatingOutOfRange(r));
    }
    Ok(params.apply(r))
}

/// Copy of `g` with every link weight projected.
pub fn project_graph(g: &RatingGraph, params: ProjectionParams) -> RatingGraph {
    g.map_ratings(|_, r| params.apply(r))
}
