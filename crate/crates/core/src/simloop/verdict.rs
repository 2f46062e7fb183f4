use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::run_closed_loop;
use crate::codec::CoderController;
use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::plant::{InputSequence, PlantModel};
use crate::reach::{certify, robust_ball, DEFAULT_DELTA_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x0: Vec<f64>,
    /// State at `q`, or the last state reached on a fault.
    pub endpoint: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub q: usize,
    pub radius: f64,
    pub pass: bool,
    pub checked: usize,
    /// Smallest certified distance of an endpoint set to the complement of K.
    pub min_margin: f64,
    pub counterexamples: Vec<Counterexample>,
}

/// Grid vertices followed by cell centres.
pub fn sweep_points(grid: &Grid) -> Vec<Vec<f64>> {
    let mut pts = grid.vertices();
    pts.extend(grid.centers());
    pts
}

fn aggregate(q: usize, radius: f64, results: Vec<std::result::Result<f64, Counterexample>>) -> InvarianceVerdict {
    let checked = results.len();
    let mut min_margin = f64::INFINITY;
    let mut counterexamples = Vec::new();
    for r in results {
        match r {
            Ok(m) => min_margin = min_margin.min(m),
            Err(c) => counterexamples.push(c),
        }
    }
    if !counterexamples.is_empty() {
        min_margin = f64::NEG_INFINITY;
    }
    InvarianceVerdict {
        q,
        radius,
        pass: counterexamples.is_empty(),
        checked,
        min_margin,
        counterexamples,
    }
}

fn nominal(plant: &PlantModel, cc: &CoderController, x0: &[f64], q: usize) -> std::result::Result<(Vec<usize>, Vec<f64>), Counterexample> {
    let trace = run_closed_loop(plant, cc, x0, q);
    if let Some(f) = trace.fault {
        return Err(Counterexample {
            x0: x0.to_vec(),
            endpoint: f.state,
            reason: f.reason,
        });
    }
    Ok((trace.inputs, trace.states[q].clone()))
}

/// Closed-loop sweep from every vertex and centre of `init_grid`; records `q`
/// in `cc.invariance_times` on a pass.
pub fn check_weak_invariance(plant: &PlantModel, cc: &mut CoderController, q: usize, init_grid: &Grid) -> InvarianceVerdict {
    let results: Vec<_> = sweep_points(init_grid)
        .par_iter()
        .map(|x0| {
            let (_, end) = nominal(plant, cc, x0, q)?;
            let margin = plant.k.point_margin(&end);
            if margin > DEFAULT_DELTA_K {
                Ok(margin)
            } else {
                Err(Counterexample {
                    x0: x0.clone(),
                    endpoint: end,
                    reason: format!("x_{q} outside int K (margin {margin:e})"),
                })
            }
        })
        .collect();
    let verdict = aggregate(q, 0.0, results);
    if verdict.pass {
        cc.mark_invariant(q);
    }
    verdict
}

/// Replays each nominal closed-loop input sequence open-loop on the ball of
/// `radius` around the nominal state (clipped to X) and certifies the image.
pub fn check_robust_weak_invariance(
    plant: &PlantModel,
    cc: &mut CoderController,
    q: usize,
    init_grid: &Grid,
    radius: f64,
) -> Result<InvarianceVerdict> {
    if !plant.is_fully_observed() {
        return Err(Error::Refused("robust invariance needs a fully observed plant".into()));
    }
    if !(radius >= 0.0) {
        return Err(Error::config("radius", "must be >= 0"));
    }
    let results: Vec<_> = sweep_points(init_grid)
        .par_iter()
        .map(|x0| {
            let (inputs, end) = nominal(plant, cc, x0, q)?;
            let ball = robust_ball(plant, x0, radius);
            let cert = certify(plant, &ball, &InputSequence(inputs), DEFAULT_DELTA_K);
            if cert.contained_in_int_k {
                Ok(cert.margin)
            } else {
                Err(Counterexample {
                    x0: x0.clone(),
                    endpoint: end,
                    reason: format!("image of the radius-{radius} ball leaves int K (margin {:e})", cert.margin),
                })
            }
        })
        .collect();
    let verdict = aggregate(q, radius, results);
    if verdict.pass {
        cc.mark_invariant(q);
    }
    Ok(verdict)
}
