//! Independent checks on the solvers: exhaustive threshold grids and an
//! agent-level simulation of the model.

pub mod grid;
pub mod monte_carlo;

pub use grid::{grid_best_fair, GridSolution};
pub use monte_carlo::{monte_carlo, CellCounts, EmpiricalMetrics};
