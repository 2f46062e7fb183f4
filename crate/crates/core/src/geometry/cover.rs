//! Open covers of grid regions and their minimal subcovers.
//!
//! Coverage is decided exactly on the continuum. Inside each target cell the
//! element boundaries cut every axis into points and open intervals; the
//! products of those pieces ("atoms") are each either wholly inside or wholly
//! outside every open box, so a closed cell is covered iff every atom is.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aabb::{AxisBox, OpenSet};
use super::grid::GridRegion;
use super::setcover::{self, CoverMethod, SetCoverInstance};
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_THRESHOLD: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenCover {
    pub elements: Vec<OpenSet>,
    pub target: GridRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subcover {
    /// Indices into the original cover, ascending.
    pub indices: Vec<usize>,
    pub cardinality: usize,
    pub exact: bool,
    pub lower_bound: usize,
    pub method: CoverMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Point(f64),
    Open(f64, f64),
}

impl Piece {
    fn inside(self, lo: f64, hi: f64) -> bool {
        match self {
            Piece::Point(p) => lo < p && p < hi,
            Piece::Open(a, b) => lo <= a && b <= hi,
        }
    }

    fn representative(self) -> f64 {
        match self {
            Piece::Point(p) => p,
            Piece::Open(a, b) => 0.5 * (a + b),
        }
    }
}

/// One atom: a representative point and the sorted elements containing it.
#[derive(Debug, Clone)]
struct Atom {
    point: Vec<f64>,
    owners: Vec<u32>,
}

fn axis_pieces(lo: f64, hi: f64, cuts: &mut Vec<f64>) -> Vec<Piece> {
    cuts.retain(|&c| lo < c && c < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut out = Vec::with_capacity(2 * cuts.len());
    for (k, &c) in cuts.iter().enumerate() {
        out.push(Piece::Point(c));
        if k + 1 < cuts.len() {
            out.push(Piece::Open(c, cuts[k + 1]));
        }
    }
    out
}

/// Atoms of one closed cell against the candidate boxes `(element, box)`.
fn cell_atoms(cell: &AxisBox, boxes: &[(u32, &AxisBox)]) -> Vec<Atom> {
    let d = cell.dim();
    let pieces: Vec<Vec<Piece>> = (0..d)
        .map(|a| {
            let mut cuts: Vec<f64> = boxes.iter().flat_map(|(_, b)| [b.lo[a], b.hi[a]]).collect();
            axis_pieces(cell.lo[a], cell.hi[a], &mut cuts)
        })
        .collect();
    let total: usize = pieces.iter().map(|p| p.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut owners: Vec<u32> = boxes
            .iter()
            .filter(|(_, b)| (0..d).all(|a| pieces[a][idx[a]].inside(b.lo[a], b.hi[a])))
            .map(|(e, _)| *e)
            .collect();
        owners.dedup();
        out.push(Atom {
            point: (0..d).map(|a| pieces[a][idx[a]].representative()).collect(),
            owners,
        });
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < pieces[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

impl OpenCover {
    pub fn new(elements: Vec<OpenSet>, target: GridRegion) -> Self {
        OpenCover { elements, target }
    }

    /// Element boxes bucketed by the target cells they meet.
    fn buckets(&self) -> HashMap<usize, Vec<(u32, usize)>> {
        let mut map: HashMap<usize, Vec<(u32, usize)>> = HashMap::new();
        for (e, set) in self.elements.iter().enumerate() {
            for (k, b) in set.boxes.iter().enumerate() {
                if b.is_empty() {
                    continue;
                }
                for c in self.target.grid.cells_meeting(b) {
                    map.entry(c).or_default().push((e as u32, k));
                }
            }
        }
        map
    }

    fn atoms(&self) -> Vec<Atom> {
        let buckets = self.buckets();
        let empty = Vec::new();
        self.target
            .cells
            .par_iter()
            .map(|&c| {
                let cell = self.target.grid.cell_box(c);
                let refs: Vec<(u32, &AxisBox)> = buckets
                    .get(&c)
                    .unwrap_or(&empty)
                    .iter()
                    .map(|&(e, k)| (e, &self.elements[e as usize].boxes[k]))
                    .collect();
                cell_atoms(&cell, &refs)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    /// A point of the target region not covered by any element, if any.
    pub fn uncovered_witness(&self) -> Option<Vec<f64>> {
        self.atoms()
            .into_iter()
            .find(|a| a.owners.is_empty())
            .map(|a| a.point)
    }

    /// Representative points of uncovered atoms, at most `limit` of them,
    /// sampled evenly across all uncovered atoms.
    pub fn uncovered_witnesses(&self, limit: usize) -> Vec<Vec<f64>> {
        let open: Vec<Vec<f64>> = self
            .atoms()
            .into_iter()
            .filter(|a| a.owners.is_empty())
            .map(|a| a.point)
            .collect();
        if open.len() <= limit {
            return open;
        }
        (0..limit).map(|i| open[i * open.len() / limit].clone()).collect()
    }

    /// Whether the union of the elements contains every closed target cell.
    pub fn is_cover(&self) -> bool {
        !self.target.is_empty() && self.uncovered_witness().is_none()
    }

    pub fn minimal_subcover(&self) -> Result<(OpenCover, Subcover)> {
        self.minimal_subcover_with(DEFAULT_EXACT_THRESHOLD)
    }

    pub fn minimal_subcover_with(&self, exact_threshold: usize) -> Result<(OpenCover, Subcover)> {
        let atoms = self.atoms();
        let one_d = self.target.grid.dim() == 1;
        let (items, points): (Vec<Vec<u32>>, Vec<Vec<f64>>) = if one_d {
            // Atoms are already in ascending order; merging equal neighbours
            // keeps every element's atoms contiguous.
            let mut items: Vec<Vec<u32>> = Vec::new();
            let mut points = Vec::new();
            for a in atoms {
                if items.last() != Some(&a.owners) {
                    items.push(a.owners);
                    points.push(a.point);
                }
            }
            (items, points)
        } else {
            let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
            let mut items = Vec::new();
            let mut points = Vec::new();
            for a in atoms {
                if !seen.contains_key(&a.owners) {
                    seen.insert(a.owners.clone(), items.len());
                    items.push(a.owners);
                    points.push(a.point);
                }
            }
            (items, points)
        };
        let mut sets: Vec<Vec<u32>> = vec![Vec::new(); self.elements.len()];
        for (i, owners) in items.iter().enumerate() {
            for &e in owners {
                sets[e as usize].push(i as u32);
            }
        }
        let inst = SetCoverInstance {
            n_items: items.len(),
            sets,
            ordered: one_d,
        };
        let sol = setcover::solve(&inst, exact_threshold).map_err(|item| Error::NotACover {
            witness: points[item].clone(),
        })?;
        if self.target.is_empty() {
            return Err(Error::Infeasible("empty cover target".into()));
        }
        let sub = OpenCover {
            elements: sol.chosen.iter().map(|&i| self.elements[i].clone()).collect(),
            target: self.target.clone(),
        };
        let cardinality = sol.chosen.len();
        Ok((
            sub,
            Subcover {
                indices: sol.chosen,
                cardinality,
                exact: sol.exact,
                lower_bound: sol.lower_bound,
                method: sol.method,
            },
        ))
    }
}
