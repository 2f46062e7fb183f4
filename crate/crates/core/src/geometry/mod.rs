//! Boxes, grids, open covers and set cover.

pub mod aabb;
pub mod cover;
pub mod grid;
pub mod pullback;
pub mod setcover;

pub use aabb::{AxisBox, OpenSet};
pub use cover::{OpenCover, Subcover, DEFAULT_EXACT_THRESHOLD};
pub use grid::{Grid, GridRegion};
pub use pullback::{pullback_region, PullbackMode};
pub use setcover::{CoverMethod, SetCoverInstance, SetCoverSolution};
