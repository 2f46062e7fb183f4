//! Open covers recovered from a coder-controller's coding regions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{CoderController, CoderLaw};
use crate::entropy::InvarianceTuple;
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, GridRegion, OpenCover, OpenSet};
use crate::plant::{InputSequence, PlantModel};
use crate::reach::{certify, verify_constraint_c, verify_constraint_rc, ObservedMap, DEFAULT_DELTA_K};

const HALVINGS: usize = 60;

/// A target cell, its coded symbol and the pieces each symbol may use there.
type CellCoding = (usize, usize, Vec<(usize, AxisBox)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    /// Grid approximation of each used symbol's coding region, by cell centre.
    pub coding_regions: Vec<GridRegion>,
    /// Symbol of each region.
    pub region_symbols: Vec<usize>,
    pub region_controls: Vec<InputSequence>,
    /// One open set per used symbol, aligned with the regions.
    pub inflated_cover: OpenCover,
    pub tuple: InvarianceTuple,
    /// Inflation radius applied to the closed region pieces.
    pub inflation: f64,
    /// Product of the alphabet sizes over the action phase.
    pub alphabet_product: usize,
}

/// Pieces of `cell` on which the coder may emit each symbol. Element laws
/// give open pieces `A ∩ (cell ⊕ halo)`, table laws closed cell parts.
fn cell_pieces(cc: &CoderController, cell: &AxisBox, halo: f64) -> Vec<(usize, AxisBox)> {
    let mut out = Vec::new();
    match &cc.law {
        CoderLaw::CoverIndex { elements } => {
            let wide = cell.inflate(halo);
            'elements: for (i, e) in elements.iter().enumerate() {
                for b in &e.boxes {
                    if !b.as_open().intersects(cell) {
                        continue;
                    }
                    if let Some(piece) = wide.closed_intersection(b) {
                        out.push((i + 1, piece.as_open()));
                    }
                    if b.as_open().contains_box(cell) {
                        break 'elements;
                    }
                }
            }
        }
        CoderLaw::Table { grid, symbols } => {
            for t in grid.cells_meeting(cell) {
                if let Some(piece) = cell.closed_intersection(&grid.cell_box(t)) {
                    if (0..piece.dim()).all(|a| piece.width(a) > 0.0) || cell.is_point() {
                        out.push((symbols[t], piece));
                    }
                }
            }
        }
    }
    out
}

/// Merges intervals of one kind (all open or all closed) whose union is an
/// interval.
fn merge_1d(mut boxes: Vec<AxisBox>) -> Vec<AxisBox> {
    boxes.sort_by(|a, b| a.lo[0].total_cmp(&b.lo[0]));
    let mut out: Vec<AxisBox> = Vec::new();
    for b in boxes {
        match out.last_mut() {
            Some(last) if b.lo[0] < last.hi[0] || (!b.open && b.lo[0] == last.hi[0]) => {
                last.hi[0] = last.hi[0].max(b.hi[0])
            }
            _ => out.push(b),
        }
    }
    out
}

fn margin_of(map: &ObservedMap, piece: &AxisBox, g: &InputSequence, radius: f64) -> f64 {
    let plant = map.plant;
    if map.is_identity() {
        return match piece.as_closed().inflate(radius).closed_intersection(&plant.x) {
            Some(src) => certify(plant, &src, g, DEFAULT_DELTA_K).margin,
            None => f64::INFINITY,
        };
    }
    map.certify_element(&OpenSet::from_box(piece.clone()), g, DEFAULT_DELTA_K)
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min)
}

/// Recovers a feasible tuple from a coder-controller certified at `q`.
///
/// `q` must be one full cycle `s + τ`. For element laws each symbol's set is
/// the union of its element's parts near the cells it may code; for table
/// laws the closed coding cells are inflated by a radius derived from the
/// certified margins and the endpoint Lipschitz bound.
pub fn extract_cover_from_codec(
    plant: &PlantModel,
    cc: &CoderController,
    q: usize,
    robust_radius: f64,
    resolution: Option<&[usize]>,
) -> Result<ExtractionResult> {
    if !cc.invariance_times.contains(&q) {
        return Err(Error::Refused(format!("q = {q} is not a certified invariance time")));
    }
    if q != cc.cycle() {
        return Err(Error::Refused(format!(
            "extraction reads one cycle: q = {q} differs from s + tau = {}",
            cc.cycle()
        )));
    }
    cc.validate(plant)?;
    let map = ObservedMap::new(plant, &cc.v)?;
    if robust_radius > 0.0 && !map.is_identity() {
        return Err(Error::Refused("a robust radius needs a fully observed plant with s = 0".into()));
    }
    let dim = map.cover_dim();
    let res = match resolution {
        Some(r) => r.to_vec(),
        None => vec![if dim == 1 { 1024 } else { 48 }; dim],
    };
    let target = map.target(&res)?;
    let grid = target.grid.clone();
    let halo = 0.5 * (0..dim).map(|a| grid.cell_width(a)).fold(f64::INFINITY, f64::min);

    let per_cell: Vec<CellCoding> = target
        .cells
        .par_iter()
        .map(|&c| {
            let cell = grid.cell_box(c);
            let centre = grid.cell_center(c);
            let symbol = cc.encode(&centre).map_err(|_| {
                Error::Refused(format!(
                    "the coder has no symbol for the observation of initial state {:?}",
                    map.reconstruct(&centre)
                ))
            })?;
            let pieces = cell_pieces(cc, &cell, halo);
            if pieces.is_empty() {
                return Err(Error::Refused(format!(
                    "the coder leaves observations of {:?} unencoded",
                    map.reconstruct(&centre)
                )));
            }
            Ok((c, symbol, pieces))
        })
        .collect::<Result<_>>()?;

    let mut regions: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut pieces: BTreeMap<usize, Vec<AxisBox>> = BTreeMap::new();
    for (c, symbol, ps) in per_cell {
        regions.entry(symbol).or_default().push(c);
        for (k, p) in ps {
            pieces.entry(k).or_default().push(p);
        }
    }
    let symbols: Vec<usize> = pieces.keys().copied().collect();
    let closed: Vec<Vec<AxisBox>> = symbols
        .iter()
        .map(|k| {
            let mut ps = pieces.remove(k).unwrap();
            ps.dedup();
            if dim == 1 {
                merge_1d(ps)
            } else {
                ps
            }
        })
        .collect();

    // Certified margin of every closed piece under its symbol's inputs.
    let seq = |k: usize| cc.controls[k - 1].clone();
    let margins: Vec<Vec<f64>> = symbols
        .par_iter()
        .zip(&closed)
        .map(|(&k, ps)| ps.iter().map(|p| margin_of(&map, p, &seq(k), robust_radius)).collect())
        .collect();
    for ((&k, ps), ms) in symbols.iter().zip(&closed).zip(&margins) {
        if let Some(j) = ms.iter().position(|&m| m <= DEFAULT_DELTA_K) {
            return Err(Error::Refused(format!(
                "symbol {k} does not steer initial states observed near {:?} into int K",
                map.reconstruct(&ps[j].center())
            )));
        }
    }
    // Only closed pieces are inflated.
    let needs_inflation = closed.iter().flatten().any(|p| !p.open);
    let slack = closed
        .iter()
        .flatten()
        .zip(margins.iter().flatten())
        .filter(|(p, _)| !p.open)
        .map(|(_, m)| m - DEFAULT_DELTA_K)
        .fold(f64::INFINITY, f64::min);
    let lipschitz = map.endpoint_lipschitz(cc.tau).max(1.0);
    let mut eta = match (needs_inflation, slack.is_finite()) {
        (false, _) => 0.0,
        (true, true) => slack / (2.0 * lipschitz),
        (true, false) => halo,
    };

    let build = |eta: f64| -> Vec<OpenSet> {
        closed
            .iter()
            .map(|ps| {
                OpenSet::from_boxes(ps.iter().map(|p| if p.open { p.clone() } else { p.inflate(eta).as_open() }))
            })
            .collect()
    };
    let mut attempt = 0;
    let (elements, tuple) = loop {
        if (needs_inflation && !(eta > 0.0)) || attempt == HALVINGS {
            return Err(Error::Resolution(format!(
                "no positive inflation keeps the regions feasible (last tried {eta:e}); refine the grid"
            )));
        }
        let elements = build(eta);
        let tuple = InvarianceTuple {
            s: cc.s,
            v: cc.v.clone(),
            alpha: OpenCover::new(elements.clone(), target.clone()),
            tau: cc.tau,
            g: symbols.iter().map(|&k| seq(k)).collect(),
            robust_radius,
            delta_k: DEFAULT_DELTA_K,
        };
        let report = if robust_radius > 0.0 {
            verify_constraint_rc(plant, &tuple)?
        } else {
            verify_constraint_c(plant, &tuple)?
        };
        if report.ok && tuple.alpha.is_cover() {
            break (elements, tuple);
        }
        attempt = if needs_inflation { attempt + 1 } else { HALVINGS };
        eta *= 0.5;
    };

    let coding_regions = symbols
        .iter()
        .map(|k| GridRegion::new(grid.clone(), regions.get(k).cloned().unwrap_or_default()))
        .collect::<Result<_>>()?;
    let alphabet_product = cc.action_product();
    debug_assert!(elements.len() <= alphabet_product);
    Ok(ExtractionResult {
        coding_regions,
        region_controls: tuple.g.clone(),
        region_symbols: symbols,
        inflated_cover: OpenCover::new(elements, target),
        tuple,
        inflation: eta,
        alphabet_product,
    })
}
