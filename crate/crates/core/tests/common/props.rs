//! Property checks with their input strategies.

use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use tfe_core::codec::{synthesize_from_tuple, CoderController, CoderLaw};
use tfe_core::entropy::{build_feasible_tuple, InvarianceTuple};
use tfe_core::geometry::setcover::{solve, SetCoverInstance};
use tfe_core::geometry::{AxisBox, Grid, GridRegion, OpenCover, OpenSet};
use tfe_core::plant::fixtures::{plant_a, plant_c};
use tfe_core::plant::{InputSequence, PlantModel};
use tfe_core::reach::{verify_constraint_c, verify_constraint_rc, DEFAULT_DELTA_K};
use tfe_core::simloop::{check_robust_weak_invariance, check_weak_invariance, run_closed_loop};

type Check = Result<(), TestCaseError>;

/// Smallest subset size whose masks hit every item mask, by enumeration.
fn min_hitting(item_masks: &[u32], n_sets: usize) -> Option<usize> {
    let mut masks = item_masks.to_vec();
    masks.sort_unstable();
    masks.dedup();
    (0u32..1 << n_sets)
        .filter(|&s| masks.iter().all(|&m| m & s != 0))
        .map(|s| s.count_ones() as usize)
        .min()
}

// Set cover.

#[derive(Debug, Clone)]
pub struct RawInstance {
    pub n_items: usize,
    pub sets: Vec<Vec<u32>>,
}

pub fn raw_instance() -> impl Strategy<Value = RawInstance> {
    (1usize..=24, 1usize..=12).prop_flat_map(|(n_items, n_sets)| {
        proptest::collection::vec(proptest::collection::btree_set(0..n_items as u32, 0..=n_items), n_sets).prop_map(
            move |sets| RawInstance {
                n_items,
                sets: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            },
        )
    })
}

pub fn check_raw_setcover(inst: &RawInstance) -> Check {
    let mut item_masks = vec![0u32; inst.n_items];
    for (s, items) in inst.sets.iter().enumerate() {
        for &i in items {
            item_masks[i as usize] |= 1 << s;
        }
    }
    let expected = min_hitting(&item_masks, inst.sets.len());
    let got = solve(
        &SetCoverInstance {
            n_items: inst.n_items,
            sets: inst.sets.clone(),
            ordered: false,
        },
        25,
    );
    match (expected, got) {
        (None, Err(item)) => prop_assert_eq!(item_masks[item], 0),
        (Some(n), Ok(sol)) => {
            prop_assert!(sol.exact);
            prop_assert_eq!(sol.chosen.len(), n);
            for m in &item_masks {
                prop_assert!(sol.chosen.iter().any(|&s| m & (1 << s) != 0));
            }
        }
        (e, g) => prop_assert!(false, "expected {:?}, solver gave {:?}", e, g),
    }
    Ok(())
}

/// A random open cover over a 4-cell-per-axis grid on `[0, 1]^dim`.
#[derive(Debug, Clone)]
pub struct CoverCase {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub elements: Vec<Vec<(Vec<f64>, Vec<f64>)>>,
}

fn lattice_box(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    proptest::collection::vec((-3i32..=17, 3i32..=9), dim).prop_map(|axes| {
        let lo = axes.iter().map(|&(a, _)| a as f64 / 16.0).collect();
        let hi = axes.iter().map(|&(a, w)| (a + w) as f64 / 16.0).collect();
        (lo, hi)
    })
}

pub fn cover_case() -> impl Strategy<Value = CoverCase> {
    (1usize..=2, 4usize..=12).prop_flat_map(|(dim, n)| {
        let cells = 4usize.pow(dim as u32);
        (
            proptest::collection::btree_set(0..cells, 1..=cells),
            proptest::collection::vec(proptest::collection::vec(lattice_box(dim), 1..=3), n),
        )
            .prop_map(move |(cells, elements)| CoverCase {
                dim,
                cells: cells.into_iter().collect(),
                elements,
            })
    })
}

impl CoverCase {
    pub fn cover(&self) -> OpenCover {
        let grid = Grid::uniform(AxisBox::closed(vec![0.0; self.dim], vec![1.0; self.dim]), 4).unwrap();
        let target = GridRegion::new(grid, self.cells.clone()).unwrap();
        let elements = self
            .elements
            .iter()
            .map(|bs| OpenSet::from_boxes(bs.iter().map(|(lo, hi)| AxisBox::open(lo.clone(), hi.clone()))))
            .collect();
        OpenCover::new(elements, target)
    }

    /// Containment masks of sample points that meet every face of the
    /// arrangement formed by the boxes and the grid lines.
    fn point_masks(&self) -> Vec<u32> {
        let mut cuts: Vec<Vec<f64>> = vec![(0..=4).map(|k| k as f64 / 4.0).collect(); self.dim];
        for bs in &self.elements {
            for (lo, hi) in bs {
                for a in 0..self.dim {
                    cuts[a].extend([lo[a], hi[a]]);
                }
            }
        }
        let samples: Vec<Vec<f64>> = cuts
            .into_iter()
            .map(|mut c| {
                c.retain(|v| (0.0..=1.0).contains(v));
                c.sort_by(f64::total_cmp);
                c.dedup();
                let mids: Vec<f64> = c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                c.extend(mids);
                c
            })
            .collect();
        let in_target = |p: &[f64]| {
            self.cells.iter().any(|&c| {
                let idx: Vec<usize> = if self.dim == 1 { vec![c] } else { vec![c / 4, c % 4] };
                (0..self.dim).all(|a| {
                    let lo = idx[a] as f64 / 4.0;
                    lo <= p[a] && p[a] <= lo + 0.25
                })
            })
        };
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for axis in &samples {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
            .into_iter()
            .filter(|p| in_target(p))
            .map(|p| {
                self.elements
                    .iter()
                    .enumerate()
                    .filter(|(_, bs)| {
                        bs.iter()
                            .any(|(lo, hi)| (0..self.dim).all(|a| lo[a] < p[a] && p[a] < hi[a]))
                    })
                    .fold(0u32, |m, (e, _)| m | 1 << e)
            })
            .collect()
    }
}

pub fn check_open_cover(case: &CoverCase) -> Check {
    let cover = case.cover();
    let masks = case.point_masks();
    let expected = min_hitting(&masks, case.elements.len());
    prop_assert_eq!(cover.is_cover(), expected.is_some());
    if let Some(n) = expected {
        let (sub, info) = cover.minimal_subcover().map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(info.exact);
        prop_assert_eq!(info.cardinality, n);
        prop_assert!(sub.is_cover());
    }
    Ok(())
}

// Closed-loop traces.

/// PLANT-A's horizon-1 tuple and coder-controller, built once.
pub fn plant_a_tau1() -> &'static (PlantModel, InvarianceTuple, CoderController) {
    static CELL: OnceLock<(PlantModel, InvarianceTuple, CoderController)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = plant_a();
        let t = build_feasible_tuple(&p, 0, &InputSequence::empty(), 1, 0.0).unwrap();
        let cc = synthesize_from_tuple(&p, &t).unwrap();
        (p, t, cc)
    })
}

pub fn check_trace_replay(x0: f64, horizon: usize) -> Check {
    let (p, _, cc) = plant_a_tau1();
    let a = run_closed_loop(p, cc, &[x0], horizon);
    let b = run_closed_loop(p, cc, &[x0], horizon);
    prop_assert_eq!(&a, &b);
    prop_assert!(a.fault.is_none());
    prop_assert_eq!(a.states.len(), horizon + 1);
    let mut x = vec![x0];
    for (k, &u) in a.inputs.iter().enumerate() {
        prop_assert_eq!(&a.states[k], &x);
        let symbol = cc.encode(&x).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(a.symbols[k].symbol, symbol);
        prop_assert_eq!(u, cc.control(0, symbol));
        x = p.step(&x, u).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    prop_assert_eq!(a.states.last().unwrap(), &x);
    Ok(())
}

// Serialization.

#[derive(Debug, Clone)]
pub struct ArtifactCase {
    pub boxes: Vec<(f64, f64)>,
    pub inputs: Vec<Vec<usize>>,
    pub table: bool,
}

pub fn artifact_case() -> impl Strategy<Value = ArtifactCase> {
    (1usize..=6, 1usize..=3, any::<bool>()).prop_flat_map(|(n, tau, table)| {
        (
            proptest::collection::vec((-1.5f64..1.0, 1e-9f64..1.0), n),
            proptest::collection::vec(proptest::collection::vec(0usize..257, tau), n),
        )
            .prop_map(move |(boxes, inputs)| ArtifactCase {
                boxes: boxes.into_iter().map(|(lo, w)| (lo, lo + w)).collect(),
                inputs,
                table,
            })
    })
}

impl ArtifactCase {
    pub fn tuple(&self, robust_radius: f64) -> InvarianceTuple {
        let p = plant_a();
        let elements = self
            .boxes
            .iter()
            .map(|&(lo, hi)| OpenSet::from_box(AxisBox::open(vec![lo], vec![hi])))
            .collect();
        InvarianceTuple {
            s: 0,
            v: InputSequence::empty(),
            alpha: OpenCover::new(elements, Grid::uniform(p.x.clone(), 16).unwrap().full_region()),
            tau: self.inputs[0].len(),
            g: self.inputs.iter().cloned().map(InputSequence).collect(),
            robust_radius,
            delta_k: DEFAULT_DELTA_K,
        }
    }

    pub fn coder(&self) -> CoderController {
        let t = self.tuple(0.0);
        let law = if self.table {
            let n = t.g.len();
            CoderLaw::Table {
                grid: Grid::uniform(plant_a().x.clone(), 7).unwrap(),
                symbols: (0..7).map(|c| c % n + 1).collect(),
            }
        } else {
            CoderLaw::CoverIndex {
                elements: t.alpha.elements.clone(),
            }
        };
        CoderController::new(t.v.clone(), t.tau, law, t.g.clone()).unwrap()
    }
}

fn round_trip<T>(value: &T) -> Check
where
    T: serde::Serialize + serde::de::DeserializeOwned + PartialEq + std::fmt::Debug,
{
    let text = serde_json::to_string(value).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let back: T = serde_json::from_str(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&back, value);
    Ok(())
}

pub fn check_round_trip(case: &ArtifactCase) -> Check {
    round_trip(&case.tuple(0.0))?;
    round_trip(&case.tuple(1e-3))?;
    round_trip(&case.coder())?;
    let (_, t, cc) = plant_a_tau1();
    round_trip(t)?;
    round_trip(cc)
}

// Radius-zero reduction.

pub fn check_radius_zero(case: &ArtifactCase, sweep: usize) -> Check {
    let p = plant_c();
    let t = case.tuple(0.0);
    let c = verify_constraint_c(&p, &t).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let rc = verify_constraint_rc(&p, &t).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(c.ok, rc.ok);
    prop_assert_eq!(c.failing, rc.failing);
    prop_assert_eq!(c.min_margin.to_bits(), rc.min_margin.to_bits());

    let (pa, _, cc) = plant_a_tau1();
    let grid = Grid::uniform(pa.x.clone(), sweep).unwrap();
    let mut weak_cc = cc.clone();
    let mut robust_cc = cc.clone();
    let weak = check_weak_invariance(pa, &mut weak_cc, 1, &grid);
    let robust = check_robust_weak_invariance(pa, &mut robust_cc, 1, &grid, 0.0)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(weak.pass, robust.pass);
    prop_assert_eq!(weak.checked, robust.checked);
    prop_assert_eq!(weak.min_margin.to_bits(), robust.min_margin.to_bits());
    prop_assert_eq!(weak.counterexamples, robust.counterexamples);
    Ok(())
}
