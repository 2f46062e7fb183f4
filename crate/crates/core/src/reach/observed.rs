//! The cover space of an observation prefix `v`: the space of output
//! sequences `y_0^s`, with maps back to initial states and forward to
//! endpoints.

use nalgebra::DMatrix;

use super::image::{certify, image_overapprox, ReachCertificate};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Grid, GridRegion, OpenSet};
use crate::plant::observe::observation_matrix;
use crate::plant::{check_observability, Dynamics, InputSequence, ObservabilityReport, PlantModel};

const GENERAL_CELLS_1D: usize = 1024;
const GENERAL_CELLS_2D: usize = 64;

#[derive(Debug, Clone)]
enum Route {
    /// `s = 0` with full observation: the cover space is X itself.
    Identity,
    /// Linear dynamics and output: `y = O x0 + o`.
    Affine {
        o_pinv: DMatrix<f64>,
        offset: Vec<f64>,
    },
    /// Anything else: enclosures over a grid of X.
    General {
        grid: Grid,
        cell_outputs: Vec<Option<AxisBox>>,
    },
}

#[derive(Debug, Clone)]
pub struct ObservedMap<'a> {
    pub plant: &'a PlantModel,
    pub v: InputSequence,
    pub report: ObservabilityReport,
    route: Route,
    space: AxisBox,
}

fn affine_box_image(m: &DMatrix<f64>, shift: &[f64], b: &AxisBox) -> AxisBox {
    let mut lo = Vec::with_capacity(m.nrows());
    let mut hi = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let (mut l, mut h) = (shift[i], shift[i]);
        for j in 0..m.ncols() {
            let (p, q) = (m[(i, j)] * b.lo[j], m[(i, j)] * b.hi[j]);
            l += p.min(q);
            h += p.max(q);
        }
        lo.push(l);
        hi.push(h);
    }
    AxisBox::closed(lo, hi)
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

fn max_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl<'a> ObservedMap<'a> {
    /// Builds the map; refuses unless observability holds on the continuum.
    pub fn new(plant: &'a PlantModel, v: &InputSequence) -> Result<Self> {
        Self::build(plant, v, false)
    }

    /// As [`ObservedMap::new`] but accepts grid-only observability evidence.
    pub fn new_uncertified(plant: &'a PlantModel, v: &InputSequence) -> Result<Self> {
        Self::build(plant, v, true)
    }

    fn build(plant: &'a PlantModel, v: &InputSequence, allow_uncertified: bool) -> Result<Self> {
        let s = v.len();
        let report = check_observability(plant, s, v)?;
        if !report.ok {
            return Err(Error::ObservabilityUncertified {
                s,
                reason: "the output map is not injective on X".into(),
            });
        }
        if !report.certified && !allow_uncertified {
            return Err(Error::ObservabilityUncertified {
                s,
                reason: format!("only grid evidence (separation {:.3e})", report.separation),
            });
        }
        let x = plant.x.as_closed();
        if s == 0 && plant.output.is_identity() {
            return Ok(ObservedMap {
                plant,
                v: v.clone(),
                report,
                route: Route::Identity,
                space: x,
            });
        }
        if let (Some(o), Dynamics::Linear(map)) = (observation_matrix(plant, s), &plant.dynamics) {
            let o_pinv = o
                .clone()
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::Infeasible(format!("pseudo-inverse failed: {e}")))?;
            // Output sequence of the zero state carries the input contribution.
            let mut state = vec![0.0; plant.state_dim];
            let mut offset = plant.output.eval(&state);
            for &u in &v.0 {
                state = map.eval(&state, plant.input(u)?);
                offset.extend(plant.output.eval(&state));
            }
            let space = affine_box_image(&o, &offset, &x);
            return Ok(ObservedMap {
                plant,
                v: v.clone(),
                report,
                route: Route::Affine { o_pinv, offset },
                space,
            });
        }
        let per_axis = if plant.state_dim == 1 { GENERAL_CELLS_1D } else { GENERAL_CELLS_2D };
        let grid = Grid::uniform(x, per_axis)?;
        let cell_outputs: Vec<Option<AxisBox>> = (0..grid.cell_count())
            .map(|c| Self::cell_output_box(plant, v, &grid.cell_box(c)))
            .collect();
        let space = AxisBox::hull_of(&cell_outputs.iter().flatten().cloned().collect::<Vec<_>>())
            .ok_or_else(|| Error::Infeasible("no state of X survives the observation prefix".into()))?;
        Ok(ObservedMap {
            plant,
            v: v.clone(),
            report,
            route: Route::General { grid, cell_outputs },
            space,
        })
    }

    fn cell_output_box(plant: &PlantModel, v: &InputSequence, cell: &AxisBox) -> Option<AxisBox> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for k in 0..=v.len() {
            let prefix = InputSequence(v.0[..k].to_vec());
            let imgs = image_overapprox(plant, cell, &prefix).ok()?;
            let hull = AxisBox::hull_of(&imgs)?;
            let out = plant.output.image(&hull);
            lo.extend(out.lo);
            hi.extend(out.hi);
        }
        Some(AxisBox::closed(lo, hi))
    }

    /// Closed outer box of `g_v(b)` for a box `b` of initial states.
    pub fn observe_box(&self, b: &AxisBox) -> Option<AxisBox> {
        match &self.route {
            Route::Identity => Some(b.as_closed()),
            _ => Self::cell_output_box(self.plant, &self.v, b),
        }
    }

    pub fn s(&self) -> usize {
        self.v.len()
    }

    pub fn cover_dim(&self) -> usize {
        self.space.dim()
    }

    /// Bounding box of `g_v(X)`.
    pub fn space(&self) -> &AxisBox {
        &self.space
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.route, Route::Identity)
    }

    /// Cover-space point `y_0^s` of an initial state.
    pub fn observe(&self, x0: &[f64]) -> Result<Vec<f64>> {
        match &self.route {
            Route::Identity => Ok(x0.to_vec()),
            _ => Ok(self.plant.output_map(x0, &self.v)?.concat()),
        }
    }

    /// Initial state reconstructed from `y_0^s`, clamped into X.
    pub fn reconstruct(&self, y: &[f64]) -> Vec<f64> {
        let x = &self.plant.x;
        let raw = match &self.route {
            Route::Identity => y.to_vec(),
            Route::Affine { o_pinv, offset, .. } => {
                let d: Vec<f64> = y.iter().zip(offset).map(|(a, b)| a - b).collect();
                mat_vec(o_pinv, &d)
            }
            Route::General { grid, cell_outputs } => {
                let best = (0..grid.cell_count())
                    .filter_map(|c| cell_outputs[c].as_ref().map(|b| (c, b.point_margin(y))))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .map(|(c, _)| c)
                    .unwrap_or(0);
                grid.cell_center(best)
            }
        };
        raw.iter()
            .enumerate()
            .map(|(a, &v)| v.clamp(x.lo[a], x.hi[a]))
            .collect()
    }

    /// Closed boxes of X enclosing `g_v^{-1}(closure of b)`.
    pub fn sources(&self, b: &AxisBox) -> Vec<AxisBox> {
        let x = self.plant.x.as_closed();
        match &self.route {
            Route::Identity => b.closed_intersection(&x).into_iter().collect(),
            Route::Affine { o_pinv, offset, .. } => {
                let shift: Vec<f64> = mat_vec(o_pinv, offset).iter().map(|v| -v).collect();
                affine_box_image(o_pinv, &shift, &b.as_closed())
                    .closed_intersection(&x)
                    .into_iter()
                    .collect()
            }
            Route::General { grid, cell_outputs } => {
                let closed = b.as_closed();
                (0..grid.cell_count())
                    .filter(|&c| {
                        cell_outputs[c]
                            .as_ref()
                            .is_some_and(|o| o.closed_intersection(&closed).is_some())
                    })
                    .map(|c| grid.cell_box(c))
                    .collect()
            }
        }
    }

    /// Endpoint enclosure of `x_{s+τ}` over initial states observed in `b`.
    pub fn endpoint_image(&self, b: &AxisBox, g: &InputSequence) -> Result<Vec<AxisBox>> {
        let seq = self.v.concat(g);
        let mut out = Vec::new();
        for src in self.sources(b) {
            out.extend(image_overapprox(self.plant, &src, &seq)?);
        }
        if let (Route::Affine { o_pinv, offset, .. }, Dynamics::Linear(map)) = (&self.route, &self.plant.dynamics) {
            // x_{s+τ} = M O⁺ (y - o) + m exactly on g_v(X).
            let n = self.plant.state_dim;
            let inputs: Vec<&[f64]> = seq.0.iter().map(|&u| self.plant.input(u)).collect::<Result<_>>()?;
            let mut m = DMatrix::<f64>::identity(n, n);
            let a = DMatrix::from_fn(n, n, |i, j| map.a[i][j]);
            let mut shift = vec![0.0; n];
            for u in &inputs {
                m = &a * m;
                shift = map.eval(&shift, u);
            }
            let t = &m * o_pinv;
            let to = mat_vec(&t, offset);
            let total: Vec<f64> = shift.iter().zip(&to).map(|(s, c)| s - c).collect();
            let tight = affine_box_image(&t, &total, &b.as_closed());
            out = out
                .iter()
                .map(|bx| bx.closed_intersection(&tight).unwrap_or_else(|| tight.clone()))
                .collect();
        }
        Ok(out)
    }

    /// One certificate per box of `element`; a box with no source in X is
    /// vacuously certified.
    pub fn certify_element(&self, element: &OpenSet, g: &InputSequence, delta_k: f64) -> Vec<ReachCertificate> {
        let k = &self.plant.k;
        element
            .boxes
            .iter()
            .map(|b| {
                let sources = self.sources(b);
                let source = AxisBox::hull_of(&sources).unwrap_or_else(|| b.as_closed());
                if sources.is_empty() {
                    return ReachCertificate {
                        source,
                        inputs: g.clone(),
                        image_bound: Vec::new(),
                        contained_in_int_k: true,
                        margin: f64::INFINITY,
                    };
                }
                if self.is_identity() {
                    return certify(self.plant, &source, g, delta_k);
                }
                match self.endpoint_image(b, g) {
                    Ok(image_bound) => {
                        let margin = super::image::k_margin(k, &image_bound);
                        ReachCertificate {
                            source,
                            inputs: g.clone(),
                            contained_in_int_k: margin > delta_k,
                            image_bound,
                            margin,
                        }
                    }
                    Err(_) => ReachCertificate {
                        source,
                        inputs: g.clone(),
                        image_bound: Vec::new(),
                        contained_in_int_k: false,
                        margin: f64::NEG_INFINITY,
                    },
                }
            })
            .collect()
    }

    /// Cells of a grid over the cover space that meet `g_v(X)` (outer).
    pub fn target(&self, resolution: &[usize]) -> Result<GridRegion> {
        let grid = Grid::new(self.space.clone(), resolution.to_vec())?;
        let cells = match &self.route {
            Route::Identity => (0..grid.cell_count()).collect(),
            Route::Affine { .. } => (0..grid.cell_count())
                .filter(|&c| !self.sources(&grid.cell_box(c)).is_empty())
                .collect(),
            Route::General { cell_outputs, .. } => {
                let mut cells = Vec::new();
                for o in cell_outputs.iter().flatten() {
                    cells.extend(grid.cells_meeting(o));
                }
                cells
            }
        };
        GridRegion::new(grid, cells)
    }

    /// Max-norm Lipschitz bound of `y ↦ x_{s+τ}` on the cover space.
    pub fn endpoint_lipschitz(&self, tau: usize) -> f64 {
        let l = self.plant.lipschitz_bound().value;
        match &self.route {
            Route::Identity => l.powi(tau as i32),
            Route::Affine { o_pinv, .. } => max_norm(o_pinv) * l.powi((self.s() + tau) as i32),
            Route::General { .. } => {
                let n = self.plant.state_dim as f64;
                n.sqrt() / self.report.separation * l.powi((self.s() + tau) as i32)
            }
        }
    }
}
