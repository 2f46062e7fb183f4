//! Seeded construction of feasible tuples: steer seeds, grow maximal
//! certified boxes around them, then keep a minimal subcover.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tuple::InvarianceTuple;
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Grid, OpenCover, OpenSet, Subcover, DEFAULT_EXACT_THRESHOLD};
use crate::plant::{Dynamics, InputSequence, PlantModel};
use crate::reach::{certify, ObservedMap, Steerer, SteeringOptions, DEFAULT_DELTA_K};

const BISECTION_STEPS: usize = 48;
const MAX_SEEDS_1D: usize = 1 << 17;
const MAX_SEEDS_2D: usize = 256;
const MAX_SEEDS_ND: usize = 24;
const REFINE_ROUNDS: usize = 16;
const MAX_REFINE_SEEDS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub robust_radius: f64,
    pub delta_k: f64,
    /// Seeds per cover-space axis; derived from the input spacing if unset.
    pub seeds_per_axis: Option<usize>,
    /// Cells per cover-space axis of the cover target grid.
    pub target_resolution: Option<usize>,
    pub exact_threshold: usize,
    pub steering: SteeringOptions,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        ConstructionParams {
            robust_radius: 0.0,
            delta_k: DEFAULT_DELTA_K,
            seeds_per_axis: None,
            target_resolution: None,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            steering: SteeringOptions::default(),
        }
    }
}

/// A candidate cover element with its steering sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub element: AxisBox,
    pub g: InputSequence,
}

#[derive(Debug, Clone)]
pub struct Construction {
    pub tuple: InvarianceTuple,
    pub subcover: Subcover,
    pub candidates: usize,
    pub seeds: usize,
}

/// Element-level constraint check shared by the nominal and robust cases.
struct Checker<'m, 'p> {
    map: &'m ObservedMap<'p>,
    radius: f64,
    delta_k: f64,
}

impl Checker<'_, '_> {
    fn ok(&self, b: &AxisBox, g: &InputSequence) -> bool {
        let plant = self.map.plant;
        if self.map.is_identity() {
            let Some(src) = b.as_closed().inflate(self.radius).closed_intersection(&plant.x) else {
                return true;
            };
            return certify(plant, &src, g, self.delta_k).contained_in_int_k;
        }
        self.map
            .certify_element(&OpenSet::from_box(b.clone()), g, self.delta_k)
            .iter()
            .all(|c| c.contained_in_int_k)
    }

    /// Largest box around `seed` inside `limit` that passes: a uniform
    /// bisection followed by one bisection per face.
    fn grow(&self, seed: &[f64], g: &InputSequence, limit: &AxisBox) -> Option<AxisBox> {
        if !self.ok(&AxisBox::point(seed), g) {
            return None;
        }
        let d = seed.len();
        let clip = |b: AxisBox| b.closed_intersection(limit).unwrap_or(b);
        let rho_max = limit.max_width();
        let uniform = |rho: f64| clip(AxisBox::ball(seed, rho));
        let rho = if self.ok(&uniform(rho_max), g) {
            rho_max
        } else {
            let (mut lo, mut hi) = (0.0, rho_max);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if self.ok(&uniform(mid), g) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let mut cur = uniform(rho);
        for axis in 0..d {
            for upper in [false, true] {
                let start = if upper { cur.hi[axis] } else { cur.lo[axis] };
                let end = if upper { limit.hi[axis] } else { limit.lo[axis] };
                let with = |v: f64| {
                    let mut b = cur.clone();
                    if upper {
                        b.hi[axis] = v;
                    } else {
                        b.lo[axis] = v;
                    }
                    b
                };
                if self.ok(&with(end), g) {
                    cur = with(end);
                    continue;
                }
                let (mut good, mut bad) = (start, end);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (good + bad);
                    if self.ok(&with(mid), g) {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                cur = with(good);
            }
        }
        (0..d).all(|a| cur.width(a) > 0.0).then(|| cur.as_open())
    }
}

/// Smallest positive gap between scalar inputs.
fn input_spacing(plant: &PlantModel) -> Option<f64> {
    if plant.input_dim() != 1 {
        return None;
    }
    let mut v: Vec<f64> = plant.inputs.iter().map(|u| u[0]).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// Scale of the input term in the dynamics, for seed spacing.
fn input_gain(plant: &PlantModel) -> f64 {
    match &plant.dynamics {
        Dynamics::Linear(m) => m.b.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs())),
        Dynamics::PiecewiseAffine { branches, .. } => branches
            .iter()
            .flat_map(|b| b.b.iter().flatten())
            .fold(0.0, |a: f64, v| a.max(v.abs())),
        Dynamics::Polynomial { b, .. } => b.iter().fold(0.0, |a: f64, v| a.max(v.abs())),
    }
}

fn default_seeds(plant: &PlantModel, map: &ObservedMap, tau: usize) -> usize {
    if map.cover_dim() == 1 {
        // Element positions move in steps of (input spacing)/L^τ.
        if let Some(h) = input_spacing(plant) {
            let l = plant.lipschitz_bound().value.max(1.0);
            let unit = h * input_gain(plant).max(f64::MIN_POSITIVE) / l.powi(tau as i32);
            let n = (map.space().width(0) / unit).ceil() as usize + 1;
            return n.clamp(65, MAX_SEEDS_1D);
        }
        return 4097;
    }
    if map.cover_dim() == 2 {
        48
    } else {
        12
    }
}

/// Seeds per axis spaced at half the median element width, when that beats
/// the current density.
fn denser_seeds(space: &AxisBox, candidates: &[Candidate], current: usize) -> Option<usize> {
    let mut widths: Vec<f64> = candidates
        .iter()
        .map(|c| (0..space.dim()).map(|a| c.element.width(a)).fold(f64::INFINITY, f64::min))
        .filter(|w| w.is_finite() && *w > 0.0)
        .collect();
    if widths.is_empty() {
        return None;
    }
    widths.sort_by(f64::total_cmp);
    let spacing = 0.5 * widths[widths.len() / 2];
    let cap = if space.dim() == 2 { MAX_SEEDS_2D } else { MAX_SEEDS_ND };
    let n = ((space.max_width() / spacing).ceil() as usize + 1).min(cap);
    (n > current).then_some(n)
}

fn default_target_resolution(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 48,
        _ => 8,
    }
}

/// Builds candidates for `(v, τ)` and selects a minimal subcover.
pub fn construct(plant: &PlantModel, v: &InputSequence, tau: usize, params: &ConstructionParams) -> Result<Construction> {
    if tau == 0 {
        return Err(Error::config("tau", "must be positive"));
    }
    let map = ObservedMap::new(plant, v)?;
    let r = params.robust_radius;
    if r > 0.0 && !map.is_identity() {
        return Err(Error::Refused(
            "a robust radius needs a fully observed plant with s = 0".into(),
        ));
    }
    let dim = map.cover_dim();
    let res = params.target_resolution.unwrap_or_else(|| default_target_resolution(dim));
    let target = map.target(&vec![res; dim])?;
    let space = map.space().clone();
    let pad = space.max_width() / 64.0;
    let limit = space.inflate(pad);

    let n_seeds = params.seeds_per_axis.unwrap_or_else(|| default_seeds(plant, &map, tau)).max(2);
    let seed_grid = Grid::uniform(space.clone(), n_seeds - 1)?;
    let seeds: Vec<Vec<f64>> = seed_grid
        .vertices()
        .into_iter()
        .filter(|y| map.is_identity() || target.contains_point(y))
        .collect();

    let steerer = Steerer::new(plant, tau, params.steering.clone())?;
    let exhaustive = steerer.is_exhaustive(tau);
    let checker = Checker {
        map: &map,
        radius: r,
        delta_k: params.delta_k,
    };
    let generate = |seeds: &[Vec<f64>]| -> Result<Vec<Candidate>> {
        let plans: Vec<Vec<InputSequence>> = seeds
            .par_iter()
            .map(|y| {
                let x0 = map.reconstruct(y);
                let Ok(traj) = plant.run_open_loop(&x0, v) else {
                    return Vec::new();
                };
                let xs = traj.last().unwrap();
                if exhaustive {
                    steerer.all_feasible(xs, tau, r).into_iter().map(|(s, _)| s).collect()
                } else {
                    steerer.steer_exact(xs, tau, r).map(|(s, _)| vec![s]).unwrap_or_default()
                }
            })
            .collect();
        if let Some(i) = plans.iter().position(|p| p.is_empty()) {
            return Err(Error::Infeasible(format!(
                "no input sequence of length {tau} steers the state observed as {:?} into int K",
                seeds[i]
            )));
        }
        let mut groups: BTreeMap<&InputSequence, Vec<usize>> = BTreeMap::new();
        for (i, p) in plans.iter().enumerate() {
            for s in p {
                groups.entry(s).or_default().push(i);
            }
        }
        let groups: Vec<(&InputSequence, Vec<usize>)> = groups.into_iter().collect();
        let per_group: Vec<Vec<Candidate>> = groups
            .par_iter()
            .map(|(g, idx)| {
                let mut out: Vec<Candidate> = Vec::new();
                for &i in idx {
                    if out.iter().any(|c| c.element.contains_point(&seeds[i])) {
                        continue;
                    }
                    let grown = checker.grow(&seeds[i], g, &limit);
                    if let Some(element) = grown {
                        if !out.iter().any(|c| c.element == element) {
                            out.push(Candidate {
                                element,
                                g: (*g).clone(),
                            });
                        }
                    }
                }
                out
            })
            .collect();
        Ok(per_group.into_iter().flatten().collect())
    };

    let mut candidates = generate(&seeds)?;
    let mut seed_count = seeds.len();
    if dim > 1 && params.seeds_per_axis.is_none() {
        if let Some(n) = denser_seeds(&space, &candidates, n_seeds) {
            let extra: Vec<Vec<f64>> = Grid::uniform(space.clone(), n - 1)?
                .vertices()
                .into_iter()
                .filter(|y| map.is_identity() || target.contains_point(y))
                .collect();
            seed_count += extra.len();
            candidates.extend(generate(&extra)?);
            candidates = drop_dominated(candidates);
        }
    }
    for _ in 0..REFINE_ROUNDS {
        let cover = OpenCover::new(
            candidates.iter().map(|c| OpenSet::from_box(c.element.clone())).collect(),
            target.clone(),
        );
        let extra = cover.uncovered_witnesses(MAX_REFINE_SEEDS);
        if extra.is_empty() {
            break;
        }
        seed_count += extra.len();
        candidates.extend(generate(&extra)?);
        candidates = drop_dominated(candidates);
    }
    select(plant, v, tau, params, target, candidates, seed_count)
}

/// Keeps a minimal subcover of the candidates and wraps it as a tuple.
fn select(
    plant: &PlantModel,
    v: &InputSequence,
    tau: usize,
    params: &ConstructionParams,
    target: crate::geometry::GridRegion,
    mut candidates: Vec<Candidate>,
    seeds: usize,
) -> Result<Construction> {
    candidates = drop_dominated(candidates);
    // Symbols then follow the elements' lower corners.
    candidates.sort_by(|a, b| {
        let key = |c: &Candidate| c.element.lo.iter().chain(&c.element.hi).copied().collect::<Vec<f64>>();
        key(a)
            .iter()
            .zip(key(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let count = candidates.len();
    let cover = OpenCover::new(
        candidates.iter().map(|c| OpenSet::from_box(c.element.clone())).collect(),
        target,
    );
    let (sub, info) = cover
        .minimal_subcover_with(params.exact_threshold)
        .map_err(|e| match e {
            Error::NotACover { witness } => Error::Infeasible(format!(
                "candidate elements leave {witness:?} uncovered; refine the seeds"
            )),
            other => other,
        })?;
    let g = info.indices.iter().map(|&i| candidates[i].g.clone()).collect();
    let tuple = InvarianceTuple {
        s: v.len(),
        v: v.clone(),
        alpha: sub,
        tau,
        g,
        robust_radius: params.robust_radius,
        delta_k: params.delta_k,
    };
    tuple.check_shape(plant)?;
    Ok(Construction {
        tuple,
        subcover: info,
        candidates: count,
        seeds,
    })
}

/// Removes candidates whose box lies inside another's (first copy of
/// duplicates survives).
fn drop_dominated(candidates: Vec<Candidate>) -> Vec<Candidate> {
    let n = candidates.len();
    if n == 0 {
        return candidates;
    }
    let keep: Vec<bool> = if candidates[0].element.dim() == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (&candidates[i].element, &candidates[j].element);
            a.lo[0]
                .partial_cmp(&b.lo[0])
                .unwrap()
                .then(b.hi[0].partial_cmp(&a.hi[0]).unwrap())
                .then(i.cmp(&j))
        });
        let mut keep = vec![false; n];
        let mut max_hi = f64::NEG_INFINITY;
        for i in order {
            let hi = candidates[i].element.hi[0];
            if hi > max_hi {
                keep[i] = true;
                max_hi = hi;
            }
        }
        keep
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                !(0..n).any(|j| {
                    j != i
                        && contains_closed(&candidates[j].element, &candidates[i].element)
                        && (candidates[j].element != candidates[i].element || j < i)
                })
            })
            .collect()
    };
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

fn contains_closed(outer: &AxisBox, inner: &AxisBox) -> bool {
    (0..outer.dim()).all(|a| outer.lo[a] <= inner.lo[a] && inner.hi[a] <= outer.hi[a])
}

/// Constructs a feasible tuple for `(s, v, τ)` at the given robust radius.
pub fn build_feasible_tuple(
    plant: &PlantModel,
    s: usize,
    v: &InputSequence,
    tau: usize,
    robust_radius: f64,
) -> Result<InvarianceTuple> {
    build_feasible_tuple_with(plant, s, v, tau, &ConstructionParams {
        robust_radius,
        ..ConstructionParams::default()
    })
}

pub fn build_feasible_tuple_with(
    plant: &PlantModel,
    s: usize,
    v: &InputSequence,
    tau: usize,
    params: &ConstructionParams,
) -> Result<InvarianceTuple> {
    if v.len() != s {
        return Err(Error::Dimension { expected: s, got: v.len() });
    }
    Ok(construct(plant, v, tau, params)?.tuple)
}
