//! Reference plants shipped with the workbench.

use super::dynamics::{AffineMap, Dynamics};
use super::model::{EvaluationDomain, OutputMap, PlantModel};
use crate::error::{Error, Result};
use crate::geometry::AxisBox;

/// Scalar inputs `lo, lo + step, …, hi`.
pub fn input_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0) || !(lo <= hi) {
        return Err(Error::config("inputs", "need step > 0 and lo <= hi"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| vec![lo + k as f64 * step]).collect())
}

fn scalar_affine(a: f64, c: f64) -> AffineMap {
    AffineMap::new(vec![vec![a]], vec![vec![1.0]], vec![c])
}

fn unit_interval() -> AxisBox {
    AxisBox::closed(vec![-1.0], vec![1.0])
}

fn half_interval() -> AxisBox {
    AxisBox::closed(vec![-0.5], vec![0.5])
}

/// `x' = 2x + u` on `[-1, 1]`, `K = [-0.5, 0.5]`, inputs on a 1/64 grid over `[-2, 2]`.
pub fn plant_a() -> PlantModel {
    PlantModel {
        name: "plant_a".into(),
        state_dim: 1,
        inputs: input_grid(-2.0, 2.0, 1.0 / 64.0).unwrap(),
        dynamics: Dynamics::Linear(scalar_affine(2.0, 0.0)),
        output: OutputMap::Identity,
        x: unit_interval(),
        k: half_interval(),
        domain: EvaluationDomain::StateSpace,
        lipschitz: Some(2.0),
    }
}

/// Planar Jordan block with eigenvalue 1.2 observed through its first coordinate.
pub fn plant_b() -> PlantModel {
    PlantModel {
        name: "plant_b".into(),
        state_dim: 2,
        inputs: input_grid(-4.0, 4.0, 1.0 / 8.0).unwrap(),
        dynamics: Dynamics::Linear(AffineMap::new(
            vec![vec![1.2, 1.0], vec![0.0, 1.2]],
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 0.0],
        )),
        output: OutputMap::Linear {
            c: vec![vec![1.0, 0.0]],
        },
        x: AxisBox::closed(vec![-1.0, -1.0], vec![1.0, 1.0]),
        k: AxisBox::closed(vec![-0.5, -0.5], vec![0.5, 0.5]),
        domain: EvaluationDomain::Unbounded,
        lipschitz: Some(2.2),
    }
}

/// `x' = 2x + u` below 0.3 and `2x - jump + u` from 0.3 on.
pub fn plant_c_with_jump(jump: f64) -> PlantModel {
    PlantModel {
        name: if jump == 0.1 { "plant_c".into() } else { format!("plant_c_jump_{jump}") },
        state_dim: 1,
        inputs: input_grid(-2.0, 2.0, 1.0 / 64.0).unwrap(),
        dynamics: Dynamics::PiecewiseAffine {
            regions: vec![
                AxisBox::closed(vec![-1.0], vec![0.3]),
                AxisBox::closed(vec![0.3], vec![1.0]),
            ],
            branches: vec![scalar_affine(2.0, 0.0), scalar_affine(2.0, -jump)],
        },
        output: OutputMap::Identity,
        x: unit_interval(),
        k: half_interval(),
        domain: EvaluationDomain::StateSpace,
        lipschitz: Some(2.0),
    }
}

pub fn plant_c() -> PlantModel {
    plant_c_with_jump(0.1)
}

/// `x' = rate·x + u` with inputs `{-0.25, 0, 0.25}`.
pub fn contracting(rate: f64) -> PlantModel {
    PlantModel {
        name: format!("contracting_{rate}"),
        state_dim: 1,
        inputs: vec![vec![-0.25], vec![0.0], vec![0.25]],
        dynamics: Dynamics::Linear(scalar_affine(rate, 0.0)),
        output: OutputMap::Identity,
        x: unit_interval(),
        k: half_interval(),
        domain: EvaluationDomain::StateSpace,
        lipschitz: Some(rate.abs()),
    }
}

pub fn by_name(name: &str) -> Option<PlantModel> {
    match name {
        "plant_a" => Some(plant_a()),
        "plant_b" => Some(plant_b()),
        "plant_c" => Some(plant_c()),
        _ => None,
    }
}
