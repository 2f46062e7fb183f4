use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AxisBox;
use crate::plant::{AffineMap, Dynamics, InputSequence, PlantModel};

/// Boxes kept per step before a piecewise image collapses to its hull.
const MAX_PIECES: usize = 64;

pub const DEFAULT_DELTA_K: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachCertificate {
    pub source: AxisBox,
    pub inputs: InputSequence,
    pub image_bound: Vec<AxisBox>,
    pub contained_in_int_k: bool,
    /// Distance from the image bound to the complement of K.
    pub margin: f64,
}

/// `A^t` and offset of the composite of a linear map under `inputs`.
fn composite(map: &AffineMap, inputs: &[&[f64]]) -> AffineMap {
    let n = map.state_dim();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    let mut off = vec![0.0; n];
    for u in inputs {
        let next_m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| map.a[i][k] * m[k][j]).sum()).collect())
            .collect();
        off = map.eval(&off, u);
        m = next_m;
    }
    AffineMap::new(m, vec![vec![]; n], off)
}

/// Closed outer approximation of the image of `set` under `seq`.
///
/// Every intermediate enclosure must stay inside the plant's evaluation
/// domain, otherwise a model violation is reported.
pub fn image_overapprox(plant: &PlantModel, set: &AxisBox, seq: &InputSequence) -> Result<Vec<AxisBox>> {
    let start = set.as_closed();
    if !plant.box_in_domain(&start) {
        return Err(Error::ModelViolation {
            step: 0,
            state: start.center(),
        });
    }
    let inputs: Vec<&[f64]> = seq.0.iter().map(|&u| plant.input(u)).collect::<Result<_>>()?;
    let mut cur = vec![start.clone()];
    for (k, u) in inputs.iter().enumerate() {
        let mut next: Vec<AxisBox> = Vec::new();
        for b in &cur {
            for img in plant.dynamics.image(b, u) {
                if !plant.box_in_domain(&img) {
                    return Err(Error::ModelViolation {
                        step: k + 1,
                        state: img.center(),
                    });
                }
                if !next.contains(&img) {
                    next.push(img);
                }
            }
        }
        if next.len() > MAX_PIECES {
            next = vec![AxisBox::hull_of(&next).expect("nonempty")];
        }
        cur = next;
    }
    // Stepwise hulls wrap in two or more dimensions; the composite linear map
    // gives the tight hull of the final image.
    if let Dynamics::Linear(map) = &plant.dynamics {
        if plant.state_dim > 1 && !start.is_point() && !inputs.is_empty() {
            let tight = composite(map, &inputs).image(&start, &[]);
            cur = cur
                .iter()
                .map(|b| b.closed_intersection(&tight).unwrap_or_else(|| tight.clone()))
                .collect();
        }
    }
    Ok(cur)
}

/// Smallest distance from the boxes to the complement of `k`.
pub fn k_margin(k: &AxisBox, boxes: &[AxisBox]) -> f64 {
    boxes
        .iter()
        .map(|b| k.containment_margin(b))
        .fold(f64::INFINITY, f64::min)
}

/// Certifies that the image of `source` under `seq` lies in int K with a
/// margin above `delta_k`. A domain escape yields a failing certificate.
pub fn certify(plant: &PlantModel, source: &AxisBox, seq: &InputSequence, delta_k: f64) -> ReachCertificate {
    match image_overapprox(plant, source, seq) {
        Ok(image_bound) => {
            let margin = k_margin(&plant.k, &image_bound);
            ReachCertificate {
                source: source.clone(),
                inputs: seq.clone(),
                contained_in_int_k: margin > delta_k,
                image_bound,
                margin,
            }
        }
        Err(_) => ReachCertificate {
            source: source.clone(),
            inputs: seq.clone(),
            image_bound: Vec::new(),
            contained_in_int_k: false,
            margin: f64::NEG_INFINITY,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::fixtures::{plant_a, plant_b, plant_c};

    #[test]
    fn linear_image_of_small_interval() {
        let p = plant_a();
        let zero = p.input_index(&[0.0]).unwrap();
        let img = image_overapprox(&p, &AxisBox::open(vec![-0.1], vec![0.1]), &InputSequence(vec![zero])).unwrap();
        assert_eq!(img.len(), 1);
        assert!((img[0].lo[0] + 0.2).abs() < 1e-15 && (img[0].hi[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn piecewise_image_reports_both_branches() {
        let p = plant_c();
        let zero = p.input_index(&[0.0]).unwrap();
        let img = image_overapprox(&p, &AxisBox::open(vec![0.25], vec![0.36]), &InputSequence(vec![zero])).unwrap();
        assert_eq!(img.len(), 2);
        assert!((img[0].lo[0] - 0.5).abs() < 1e-12 && (img[0].hi[0] - 0.6).abs() < 1e-12);
        assert!((img[1].lo[0] - 0.5).abs() < 1e-12 && (img[1].hi[0] - 0.62).abs() < 1e-12);
    }

    #[test]
    fn escape_is_a_model_violation() {
        let p = plant_a();
        let zero = p.input_index(&[0.0]).unwrap();
        let r = image_overapprox(&p, &AxisBox::closed(vec![0.4], vec![0.9]), &InputSequence(vec![zero]));
        assert!(matches!(r, Err(Error::ModelViolation { step: 1, .. })));
    }

    #[test]
    fn composite_hull_is_tighter_than_stepwise() {
        let p = plant_b();
        let zero = p.input_index(&[0.0]).unwrap();
        let b = AxisBox::closed(vec![-0.01, -0.01], vec![0.01, 0.01]);
        let img = image_overapprox(&p, &b, &InputSequence(vec![zero; 2])).unwrap();
        // A^2 = [[1.44, 2.4], [0, 1.44]]: first-row half width 0.01 * 3.84.
        assert!((img[0].hi[0] - 0.0384).abs() < 1e-12);
        assert!((img[0].hi[1] - 0.0144).abs() < 1e-12);
    }
}
