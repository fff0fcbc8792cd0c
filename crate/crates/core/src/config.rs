use serde::{Deserialize, Serialize};

/// Shared solver knobs. `tol` is unit-free: iterative solvers stop when the
/// objective's relative change over `window` iterations falls below it, and
/// certificate-based solvers treat it as the duality-gap target in bits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub window: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Cardinality cap for extraction variables; None means k_M + 1.
    pub t_cap: Option<usize>,
    /// Row count for Gaussian extraction matrices; None means d_M.
    pub t_rank: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 100_000,
            window: 50,
            restarts: 16,
            seed: 42,
            t_cap: None,
            t_rank: None,
        }
    }
}

/// Which side plays the unique role in a one-sided quantity such as
/// a deficiency delta(M : X \ Y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// delta(M : X \ Y): what X carries that Y cannot emulate.
    XMinusY,
    /// delta(M : Y \ X).
    YMinusX,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::XMinusY => Direction::YMinusX,
            Direction::YMinusX => Direction::XMinusY,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::XMinusY => "x_minus_y",
            Direction::YMinusX => "y_minus_x",
        }
    }
}
