use serde::{Deserialize, Serialize};

use super::SolverError;

pub const MIN_INTERIOR_NODES: usize = 16;

/// Uniform grid on the fixed transformed interval `[-h0, h0]`.
///
/// Nodes are indexed `0..=m+1`; nodes `0` and `m+1` sit on the fronts.
/// Node coordinates are built from exact integers so that `y[i] == -y[m+1-i]`
/// holds bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    m: usize,
    h0: f64,
    dy: f64,
    y: Vec<f64>,
}

impl Grid {
    pub fn new(m: usize, h0: f64) -> Result<Self, SolverError> {
        if m < MIN_INTERIOR_NODES {
            return Err(SolverError::InvalidNumerics(format!(
                "grid needs at least {MIN_INTERIOR_NODES} interior nodes, got {m}"
            )));
        }
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(SolverError::InvalidNumerics(format!(
                "half-length must be positive and finite, got {h0}"
            )));
        }
        let cells = m + 1;
        let dy = 2.0 * h0 / cells as f64;
        let half = h0 / cells as f64;
        let mut y: Vec<f64> = (0..=cells)
            .map(|i| (2 * i as i64 - cells as i64) as f64 * half)
            .collect();
        y[0] = -h0;
        y[cells] = h0;
        Ok(Self { m, h0, dy, y })
    }

    /// Number of interior nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of nodes including both walls.
    pub fn len(&self) -> usize {
        self.m + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn nodes(&self) -> &[f64] {
        &self.y
    }

    /// Map transformed nodes to physical coordinates for fronts `(g, h)`.
    pub fn physical(&self, g: f64, h: f64) -> Vec<f64> {
        let scale = (h - g) / (2.0 * self.h0);
        let shift = 0.5 * (h + g);
        self.y.iter().map(|&y| y * scale + shift).collect()
    }

    /// Index of the node at `y = 0`, present when `m` is odd.
    pub fn center(&self) -> Option<usize> {
        (self.m % 2 == 1).then_some((self.m + 1) / 2)
    }
}
