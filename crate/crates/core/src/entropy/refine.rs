//! Refinement covers `β_j` of the initial states and their growth rates.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tuple::InvarianceTuple;
use crate::error::{Error, Result};
use crate::geometry::setcover::solve;
use crate::geometry::{AxisBox, Grid, SetCoverInstance, DEFAULT_EXACT_THRESHOLD};
use crate::plant::PlantModel;
use crate::reach::{image_overapprox, ObservedMap};

/// Default cap on symbol paths explored from a single cell.
pub const DEFAULT_MAX_PATHS_PER_CELL: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementDiagnostics {
    /// `N(β_j)` for `j = 1, …, j_max`.
    pub n_beta: Vec<usize>,
    /// Whether each count is an exact minimum over the grid sets.
    pub exact: Vec<bool>,
    /// Cycle length `s + τ`.
    pub cycle: usize,
    /// Cells per axis of the grid over X.
    pub resolution: Vec<usize>,
    /// Number of distinct symbol paths met at each depth.
    pub paths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeketeDiagnostics {
    /// `log2 N(β_j) / (j (s + τ))`.
    pub per_j_rates: Vec<f64>,
    pub running_inf: Vec<f64>,
    /// Every per-j rate is at most the `j = 1` rate.
    pub bounded_by_first: bool,
}

/// Whether an open element box meets a closed box.
fn meets(element: &AxisBox, b: &AxisBox) -> bool {
    element.as_open().intersects(&b.as_closed())
}

/// Depth-first walk over symbol paths from one cell, recording each path of
/// length `j` (for every `j ≤ j_max`) whose outer set stays nonempty.
#[allow(clippy::too_many_arguments)]
fn walk(
    map: &ObservedMap,
    tuple: &InvarianceTuple,
    set: &AxisBox,
    path: &mut Vec<u32>,
    j_max: usize,
    out: &mut Vec<Vec<Vec<u32>>>,
    budget: &mut usize,
) -> Result<()> {
    if path.len() == j_max {
        return Ok(());
    }
    let Some(y) = map.observe_box(set) else {
        return Err(Error::Infeasible(format!(
            "trajectory from {:?} leaves the evaluation domain",
            set.center()
        )));
    };
    let seq_prefix = &tuple.v;
    for (i, element) in tuple.alpha.elements.iter().enumerate() {
        if !element.boxes.iter().any(|b| meets(b, &y)) {
            continue;
        }
        if *budget == 0 {
            return Err(Error::Budget(format!(
                "more than {DEFAULT_MAX_PATHS_PER_CELL} symbol paths from one cell"
            )));
        }
        *budget -= 1;
        path.push(i as u32);
        out[path.len() - 1].push(path.clone());
        // States of `set` whose observation can fall in the element.
        let mut pieces: Vec<AxisBox> = Vec::new();
        for b in &element.boxes {
            if !meets(b, &y) {
                continue;
            }
            for src in map.sources(b) {
                if let Some(part) = src.closed_intersection(set) {
                    pieces.push(part);
                }
            }
        }
        if path.len() < j_max {
            if let Some(part) = AxisBox::hull_of(&pieces) {
                let seq = seq_prefix.concat(&tuple.g[i]);
                let next = image_overapprox(map.plant, &part, &seq)?;
                let hull = AxisBox::hull_of(&next).expect("nonempty image");
                walk(map, tuple, &hull, path, j_max, out, budget)?;
            }
        }
        path.pop();
    }
    Ok(())
}

/// Grid outer approximations of `β_1, …, β_{j_max}` over X and their
/// minimal subcover sizes.
pub fn refinement_covers(
    plant: &PlantModel,
    tuple: &InvarianceTuple,
    j_max: usize,
    resolution: &[usize],
) -> Result<RefinementDiagnostics> {
    if j_max == 0 {
        return Err(Error::config("j_max", "must be positive"));
    }
    tuple.check_shape(plant)?;
    let map = ObservedMap::new(plant, &tuple.v)?;
    let grid = Grid::new(plant.x.as_closed(), resolution.to_vec())?;
    let cell = (0..grid.dim()).map(|a| grid.cell_width(a)).fold(0.0, f64::max);
    if map.is_identity() {
        let narrowest = tuple
            .alpha
            .elements
            .iter()
            .flat_map(|e| e.boxes.iter())
            .flat_map(|b| (0..b.dim()).map(move |a| b.width(a)))
            .fold(f64::INFINITY, f64::min);
        if cell >= narrowest {
            let factor = (cell / narrowest).ceil() as usize * 2;
            return Err(Error::Resolution(format!(
                "cells of width {cell} cannot separate elements of width {narrowest}; \
                 refine the grid by a factor of at least {factor}"
            )));
        }
    }

    let per_cell: Vec<Vec<Vec<Vec<u32>>>> = (0..grid.cell_count())
        .into_par_iter()
        .map(|c| {
            let mut out = vec![Vec::new(); j_max];
            let mut budget = DEFAULT_MAX_PATHS_PER_CELL;
            walk(&map, tuple, &grid.cell_box(c), &mut Vec::new(), j_max, &mut out, &mut budget)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut n_beta = Vec::with_capacity(j_max);
    let mut exact = Vec::with_capacity(j_max);
    let mut paths = Vec::with_capacity(j_max);
    for j in 0..j_max {
        let mut index: BTreeMap<&[u32], Vec<u32>> = BTreeMap::new();
        for (c, per_depth) in per_cell.iter().enumerate() {
            for p in &per_depth[j] {
                index.entry(p.as_slice()).or_default().push(c as u32);
            }
        }
        paths.push(index.len());
        let inst = SetCoverInstance {
            n_items: grid.cell_count(),
            sets: index.into_values().collect(),
            ordered: grid.dim() == 1,
        };
        let sol = solve(&inst, DEFAULT_EXACT_THRESHOLD).map_err(|cell| Error::NotACover {
            witness: grid.cell_center(cell),
        })?;
        n_beta.push(sol.chosen.len());
        exact.push(sol.exact);
    }
    Ok(RefinementDiagnostics {
        n_beta,
        exact,
        cycle: tuple.s + tuple.tau,
        resolution: resolution.to_vec(),
        paths,
    })
}

/// Normalised rates `log2 N(β_j) / (j (s + τ))` and their running infimum.
pub fn fekete_diagnostics(diag: &RefinementDiagnostics) -> FeketeDiagnostics {
    let per_j_rates: Vec<f64> = diag
        .n_beta
        .iter()
        .enumerate()
        .map(|(j, &n)| (n as f64).log2() / ((j + 1) * diag.cycle) as f64)
        .collect();
    let running_inf = per_j_rates
        .iter()
        .scan(f64::INFINITY, |m, &r| {
            *m = m.min(r);
            Some(*m)
        })
        .collect();
    let bounded_by_first = per_j_rates.first().is_none_or(|&r1| per_j_rates.iter().all(|&r| r <= r1));
    FeketeDiagnostics {
        per_j_rates,
        running_inf,
        bounded_by_first,
    }
}

/// Pairs `(j, k)` with `j + k ≤ j_max` where `N(β_{j+k}) > N(β_j) N(β_k)`.
pub fn subadditivity_violations(diag: &RefinementDiagnostics) -> Vec<(usize, usize)> {
    let n = &diag.n_beta;
    let mut out = Vec::new();
    for j in 1..=n.len() {
        for k in 1..=n.len() {
            if j + k <= n.len() && n[j + k - 1] > n[j - 1] * n[k - 1] {
                out.push((j, k));
            }
        }
    }
    out
}
