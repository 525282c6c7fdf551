//! Functional families, approximation-gap grids, residual trends and verdicts.

pub mod checks;
mod family;
mod grid;
mod modulus;
mod real;
mod trend;
mod verdict;

pub use checks::*;
pub use family::{BoundFamily, FamilyKind, FunctionalFamily};
pub use grid::{approximation_gap_grid, DiagnosticsGrid, GridCell, GridColumn, CELL_BOUND_TOL, MASS_TOL};
pub use modulus::Modulus;
pub use real::{serde_real, serde_reals};
pub use trend::{classify, windowed_max, ResidualSeries, Trend, TrendSummary, VANISHING_TOL};
pub use verdict::{CheckKind, HypothesisCheck, Signal, Status, Verdict, VerdictBuilder};
