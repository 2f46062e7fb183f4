//! Grid pullbacks of open sets under a map given by a box-image enclosure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aabb::{AxisBox, OpenSet};
use super::grid::GridRegion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PullbackMode {
    /// Cells whose whole image lies inside one box of the target.
    Inner,
    /// Cells whose image meets the interior of the target.
    Outer,
}

/// Cells of `region` whose enclosed image relates to `target` per `mode`.
///
/// `image` returns a closed enclosure of the image of a closed cell, or
/// `None` when the image is not defined (for example it escapes the model
/// domain); such cells are dropped in both modes.
pub fn pullback_region<F>(region: &GridRegion, image: F, target: &OpenSet, mode: PullbackMode) -> GridRegion
where
    F: Fn(&AxisBox) -> Option<AxisBox> + Sync,
{
    let cells: Vec<usize> = region
        .cells
        .par_iter()
        .filter(|&&c| {
            let Some(img) = image(&region.grid.cell_box(c)) else {
                return false;
            };
            match mode {
                PullbackMode::Inner => target.boxes.iter().any(|b| b.as_open().contains_box(&img)),
                PullbackMode::Outer => target.boxes.iter().any(|b| b.as_open().intersects(&img)),
            }
        })
        .copied()
        .collect();
    GridRegion {
        grid: region.grid.clone(),
        cells,
    }
}
