//! Uniform cell-centred grid on a domain symmetric about x = 0.
//!
//! Node i sits at x_i = (i + ½ − n/2)·dx, so the hard walls lie half a cell
//! outside the first and last node. Node i and node n−1−i are exact mirror
//! images, which makes parity projection a pure index permutation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_POINTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs a power-of-two number of points, got {0}")]
    NotPowerOfTwo(usize),
    #[error("grid needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid grid range [{x_min}, {x_max}]")]
    InvalidRange { x_min: f64, x_max: f64 },
    #[error("grid range [{x_min}, {x_max}] is not symmetric about 0")]
    NotSymmetric { x_min: f64, x_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    dx: f64,
    x: Vec<f64>,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, GridError> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(GridError::InvalidRange { x_min, x_max });
        }
        if x_min != -x_max {
            return Err(GridError::NotSymmetric { x_min, x_max });
        }
        if n_points < MIN_POINTS {
            return Err(GridError::TooFewPoints(n_points));
        }
        if !n_points.is_power_of_two() {
            return Err(GridError::NotPowerOfTwo(n_points));
        }
        let dx = (x_max - x_min) / n_points as f64;
        let half = n_points as f64 / 2.0;
        let x = (0..n_points)
            .map(|i| (i as f64 + 0.5 - half) * dx)
            .collect();
        Ok(Self { x_min, x_max, dx, x })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    /// Index of the mirror image of node `i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.x.len() - 1 - i
    }

    /// Number of nodes strictly left of `x`.
    pub fn split_index(&self, x: f64) -> usize {
        self.x.partition_point(|&xi| xi < x)
    }

    /// ∫ f dx by the midpoint rule; the walls carry zero weight.
    pub fn integrate<I: IntoIterator<Item = f64>>(&self, values: I) -> f64 {
        values.into_iter().sum::<f64>() * self.dx
    }

    /// ⟨a|b⟩ for real fields.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.integrate(a.iter().zip(b).map(|(p, q)| p * q))
    }

    pub fn norm_sqr(&self, a: &[f64]) -> f64 {
        self.dot(a, a)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len() == other.len() && self.x_min == other.x_min && self.x_max == other.x_max
    }
}
