use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{certify, ReachCertificate};
use super::observed::ObservedMap;
use crate::entropy::InvarianceTuple;
use crate::error::{Error, Result};
use crate::geometry::AxisBox;
use crate::plant::PlantModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub ok: bool,
    /// Whether `alpha` covers its target.
    pub covers: bool,
    /// Certificates per element, one per box.
    pub certificates: Vec<Vec<ReachCertificate>>,
    /// First element whose certificate fails.
    pub failing: Option<usize>,
    pub min_margin: f64,
}

fn summarize(covers: bool, certificates: Vec<Vec<ReachCertificate>>) -> ConstraintReport {
    let failing = certificates
        .iter()
        .position(|c| c.iter().any(|r| !r.contained_in_int_k));
    let min_margin = certificates
        .iter()
        .flatten()
        .map(|r| r.margin)
        .fold(f64::INFINITY, f64::min);
    ConstraintReport {
        ok: covers && failing.is_none(),
        covers,
        certificates,
        failing,
        min_margin,
    }
}

/// Every element, observed through `v` and steered by its `G` entry, lands
/// in int K; `alpha` must cover `g_v(X)`.
pub fn verify_constraint_c(plant: &PlantModel, tuple: &InvarianceTuple) -> Result<ConstraintReport> {
    tuple.check_shape(plant)?;
    let map = ObservedMap::new(plant, &tuple.v)?;
    let covers = tuple.alpha.is_cover();
    let certificates: Vec<Vec<ReachCertificate>> = tuple
        .alpha
        .elements
        .par_iter()
        .zip(&tuple.g)
        .map(|(e, g)| map.certify_element(e, g, tuple.delta_k))
        .collect();
    Ok(summarize(covers, certificates))
}

/// Robust form: every element, inflated by the tuple's radius within X,
/// lands in int K under its `G` entry, with piecewise branches split.
pub fn verify_constraint_rc(plant: &PlantModel, tuple: &InvarianceTuple) -> Result<ConstraintReport> {
    tuple.check_shape(plant)?;
    if !plant.is_fully_observed() || tuple.s != 0 {
        return Err(Error::Refused(
            "the robust constraint needs a fully observed plant and s = 0".into(),
        ));
    }
    let covers = tuple.alpha.is_cover();
    let x = plant.x.as_closed();
    let r = tuple.robust_radius;
    let certificates: Vec<Vec<ReachCertificate>> = tuple
        .alpha
        .elements
        .par_iter()
        .zip(&tuple.g)
        .map(|(e, g)| {
            e.boxes
                .iter()
                .filter_map(|b| b.as_closed().inflate(r).closed_intersection(&x))
                .map(|src: AxisBox| certify(plant, &src, g, tuple.delta_k))
                .collect()
        })
        .collect();
    Ok(summarize(covers, certificates))
}
