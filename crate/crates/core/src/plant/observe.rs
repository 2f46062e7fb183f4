use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dynamics::Dynamics;
use super::model::{InputSequence, OutputMap, PlantModel};
use crate::error::{Error, Result};
use crate::geometry::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservabilityMethod {
    Identity,
    /// Smallest singular value of the stacked observation matrix.
    SingularValue,
    /// Minimum pairwise ratio over grid vertices.
    GridPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityReport {
    pub ok: bool,
    /// Lower bound on `|y(x) - y(x')| / |x - x'|` (Euclidean norms).
    pub separation: f64,
    /// Whether `ok` holds on the continuum rather than on grid samples.
    pub certified: bool,
    pub method: ObservabilityMethod,
}

const GRID_VERTICES_PER_AXIS_2D: usize = 32;
const GRID_VERTICES_PER_AXIS_1D: usize = 512;

/// Stacked `[C; C A; …; C A^s]` for linear dynamics and output.
pub fn observation_matrix(plant: &PlantModel, s: usize) -> Option<DMatrix<f64>> {
    let (Dynamics::Linear(f), OutputMap::Linear { c }) = (&plant.dynamics, &plant.output) else {
        return None;
    };
    let n = plant.state_dim;
    let a = DMatrix::from_fn(n, n, |i, j| f.a[i][j]);
    let c = DMatrix::from_fn(c.len(), n, |i, j| c[i][j]);
    let p = c.nrows();
    let mut o = DMatrix::zeros(p * (s + 1), n);
    let mut block = c;
    for k in 0..=s {
        o.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * &a;
    }
    Some(o)
}

pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn check_observability(plant: &PlantModel, s: usize, v: &InputSequence) -> Result<ObservabilityReport> {
    if v.len() != s {
        return Err(Error::Dimension { expected: s, got: v.len() });
    }
    for &u in &v.0 {
        plant.input(u)?;
    }
    if plant.output.is_identity() {
        return Ok(ObservabilityReport {
            ok: true,
            separation: 1.0,
            certified: true,
            method: ObservabilityMethod::Identity,
        });
    }
    if let Some(o) = observation_matrix(plant, s) {
        let sigma = smallest_singular_value(&o);
        let scale = o.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        let ok = sigma > 1e-12 * scale;
        return Ok(ObservabilityReport {
            ok,
            separation: if ok { sigma } else { 0.0 },
            certified: true,
            method: ObservabilityMethod::SingularValue,
        });
    }
    let per_axis = if plant.state_dim == 1 {
        GRID_VERTICES_PER_AXIS_1D
    } else {
        GRID_VERTICES_PER_AXIS_2D
    };
    let grid = Grid::uniform(plant.x.clone(), per_axis)?;
    let mut samples = Vec::new();
    for x in grid.vertices() {
        match plant.output_map(&x, v) {
            Ok(y) => samples.push((x, y.concat())),
            Err(_) => {
                return Ok(ObservabilityReport {
                    ok: false,
                    separation: 0.0,
                    certified: false,
                    method: ObservabilityMethod::GridPairs,
                })
            }
        }
    }
    let mut sep = f64::INFINITY;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dx = euclid(&samples[i].0, &samples[j].0);
            let dy = euclid(&samples[i].1, &samples[j].1);
            sep = sep.min(dy / dx);
        }
    }
    let ok = sep > 0.0;
    Ok(ObservabilityReport {
        ok,
        separation: if ok { sep } else { 0.0 },
        certified: false,
        method: ObservabilityMethod::GridPairs,
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}
