//! Steering states into int K, with certified robustness neighborhoods.

use serde::{Deserialize, Serialize};

use super::image::{k_margin, DEFAULT_DELTA_K};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Grid};
use crate::plant::{InputSequence, PlantModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringOptions {
    pub delta_k: f64,
    /// Sequence counts up to this are searched exhaustively.
    pub exhaustive_budget: usize,
    /// Region the guided search keeps trajectories in when the plant's
    /// evaluation domain is unbounded.
    pub steer_box: Option<AxisBox>,
    /// Vertices per axis of the guidance table.
    pub guide_resolution: Option<usize>,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        SteeringOptions {
            delta_k: DEFAULT_DELTA_K,
            exhaustive_budget: 4096,
            steer_box: None,
            guide_resolution: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Steering {
    pub t: usize,
    pub inputs: InputSequence,
    /// Certified margin of the image of the full robust ball around `x`.
    pub margin: f64,
    /// Largest certified dyadic radius ρ: the ball of radius ρ + robust
    /// radius around `x` (within X) still lands in int K.
    pub radius: f64,
    pub neighborhood: AxisBox,
}

/// Why no input sequence of length `t` can work from `x`: every sequence
/// spreads the robust ball wider than K along some axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub x: Vec<f64>,
    pub t: usize,
    pub radius: f64,
    /// Over all sequences, the smallest excess of the image hull width over
    /// the K width on the worst axis.
    pub min_excess: f64,
    pub sequences: usize,
}

/// Full ball of radius `r` around `x`; a point when `r = 0`.
pub fn steer_ball(x: &[f64], r: f64) -> AxisBox {
    if r == 0.0 {
        AxisBox::point(x)
    } else {
        AxisBox::ball(x, r)
    }
}

/// Robust ball around `x` clipped to X; a point when `r = 0`.
pub fn robust_ball(plant: &PlantModel, x: &[f64], r: f64) -> AxisBox {
    if r == 0.0 {
        return AxisBox::point(x);
    }
    AxisBox::ball(x, r)
        .closed_intersection(&plant.x)
        .unwrap_or_else(|| AxisBox::point(x))
}

/// Images of `boxes` under one input, `None` on a domain escape.
fn step_boxes(plant: &PlantModel, boxes: &[AxisBox], u: usize) -> Option<Vec<AxisBox>> {
    let uv = &plant.inputs[u];
    let mut out = Vec::new();
    for b in boxes {
        for img in plant.dynamics.image(b, uv) {
            if !plant.box_in_domain(&img) {
                return None;
            }
            out.push(img);
        }
    }
    Some(out)
}

/// Guided and exhaustive steering for one plant up to a fixed horizon.
pub struct Steerer<'a> {
    plant: &'a PlantModel,
    opts: SteeringOptions,
    region: AxisBox,
    grid: Grid,
    /// `tables[t]`: radius-to-go with `t` steps left, at grid vertices.
    tables: Vec<Vec<f64>>,
    lipschitz: f64,
}

impl<'a> Steerer<'a> {
    pub fn new(plant: &'a PlantModel, t_max: usize, opts: SteeringOptions) -> Result<Self> {
        let region = match (plant.domain_box(), &opts.steer_box) {
            (_, Some(b)) => b.as_closed(),
            (Some(d), None) => d,
            (None, None) => plant.x.as_closed(),
        };
        let per_axis = opts
            .guide_resolution
            .unwrap_or(if plant.state_dim == 1 { 4096 } else { 160 });
        let grid = Grid::uniform(region.clone(), per_axis)?;
        let lipschitz = plant.lipschitz_bound().value.max(f64::MIN_POSITIVE);
        let mut s = Steerer {
            plant,
            opts,
            region,
            grid,
            tables: Vec::new(),
            lipschitz,
        };
        s.build_tables(t_max);
        Ok(s)
    }

    pub fn options(&self) -> &SteeringOptions {
        &self.opts
    }

    fn build_tables(&mut self, t_max: usize) {
        use rayon::prelude::*;
        let verts = self.grid.vertices();
        let k = &self.plant.k;
        let delta = self.opts.delta_k;
        self.tables.push(verts.iter().map(|v| k.point_margin(v) - delta).collect());
        for t in 1..t_max {
            let prev = &self.tables[t - 1];
            let next: Vec<f64> = verts
                .par_iter()
                .map(|x| {
                    (0..self.plant.inputs.len())
                        .map(|u| self.score(x, u, prev))
                        .fold(f64::NEG_INFINITY, f64::max)
                        / self.lipschitz
                })
                .collect();
            self.tables.push(next);
        }
    }

    fn score(&self, x: &[f64], u: usize, table: &[f64]) -> f64 {
        match self.plant.dynamics.eval(x, &self.plant.inputs[u]) {
            Some(y) if self.region.contains_point(&y) && self.plant.in_domain(&y) => {
                self.interpolate(table, &y).min(self.region.point_margin(&y))
            }
            _ => f64::NEG_INFINITY,
        }
    }

    /// Multilinear interpolation of a vertex table.
    fn interpolate(&self, table: &[f64], y: &[f64]) -> f64 {
        let d = self.grid.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let n = self.grid.resolution[a];
            let t = (y[a] - self.region.lo[a]) / self.region.width(a) * n as f64;
            let i = (t.floor().max(0.0) as usize).min(n - 1);
            base[a] = i;
            frac[a] = (t - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for mask in 0..1usize << d {
            let mut w = 1.0;
            let mut flat = 0usize;
            for a in 0..d {
                let bit = mask >> a & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                flat = flat * (self.grid.resolution[a] + 1) + base[a] + bit;
            }
            if w > 0.0 {
                acc += w * table[flat];
            }
        }
        acc
    }

    fn exhaustive(&self, t: usize) -> bool {
        let n = self.plant.inputs.len() as f64;
        n.powi(t as i32) <= self.opts.exhaustive_budget as f64
    }

    /// Best sequence of length `t` for the given source by exhaustive DFS
    /// (max margin, first in lexicographic order on ties).
    fn search_exhaustive(&self, source: &AxisBox, t: usize) -> Option<(InputSequence, f64)> {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut prefix = Vec::with_capacity(t);
        self.dfs(std::slice::from_ref(source), t, &mut prefix, &mut best);
        best.map(|(s, m)| (InputSequence(s), m))
    }

    fn dfs(&self, boxes: &[AxisBox], left: usize, prefix: &mut Vec<usize>, best: &mut Option<(Vec<usize>, f64)>) {
        if left == 0 {
            let m = k_margin(&self.plant.k, boxes);
            if m > self.opts.delta_k && best.as_ref().is_none_or(|b| m > b.1) {
                *best = Some((prefix.clone(), m));
            }
            return;
        }
        for u in 0..self.plant.inputs.len() {
            if let Some(next) = step_boxes(self.plant, boxes, u) {
                prefix.push(u);
                self.dfs(&next, left - 1, prefix, best);
                prefix.pop();
            }
        }
    }

    /// Greedy walk on the radius-to-go tables; the last step maximises the
    /// certified margin directly.
    fn search_guided(&self, x: &[f64], source: &AxisBox, t: usize) -> Option<(InputSequence, f64)> {
        let mut point = x.to_vec();
        let mut boxes = vec![source.clone()];
        let mut seq = Vec::with_capacity(t);
        for step in 0..t {
            let left = t - step;
            let mut best: Option<(usize, f64)> = None;
            for u in 0..self.plant.inputs.len() {
                let score = if left == 1 {
                    match step_boxes(self.plant, &boxes, u) {
                        Some(imgs) => k_margin(&self.plant.k, &imgs),
                        None => f64::NEG_INFINITY,
                    }
                } else {
                    self.score(&point, u, &self.tables[left - 1])
                };
                if score > f64::NEG_INFINITY && best.is_none_or(|b| score > b.1) {
                    best = Some((u, score));
                }
            }
            let (u, _) = best?;
            boxes = step_boxes(self.plant, &boxes, u)?;
            point = self.plant.dynamics.eval(&point, &self.plant.inputs[u])?;
            seq.push(u);
        }
        let m = k_margin(&self.plant.k, &boxes);
        (m > self.opts.delta_k).then_some((InputSequence(seq), m))
    }

    /// Sequence of exactly `t` steps for the robust ball around `x`.
    pub fn steer_exact(&self, x: &[f64], t: usize, robust_radius: f64) -> Option<(InputSequence, f64)> {
        let source = steer_ball(x, robust_radius);
        if self.exhaustive(t) {
            self.search_exhaustive(&source, t)
        } else {
            self.search_guided(x, &source, t)
        }
    }

    /// Whether horizon `t` is searched exhaustively.
    pub fn is_exhaustive(&self, t: usize) -> bool {
        self.exhaustive(t)
    }

    /// Every sequence of length `t` steering the robust ball around `x`,
    /// in lexicographic order. Only for exhaustive horizons.
    pub fn all_feasible(&self, x: &[f64], t: usize, robust_radius: f64) -> Vec<(InputSequence, f64)> {
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(t);
        self.collect(&[steer_ball(x, robust_radius)], t, &mut prefix, &mut out);
        out
    }

    fn collect(&self, boxes: &[AxisBox], left: usize, prefix: &mut Vec<usize>, out: &mut Vec<(InputSequence, f64)>) {
        if left == 0 {
            let m = k_margin(&self.plant.k, boxes);
            if m > self.opts.delta_k {
                out.push((InputSequence(prefix.clone()), m));
            }
            return;
        }
        for u in 0..self.plant.inputs.len() {
            if let Some(next) = step_boxes(self.plant, boxes, u) {
                prefix.push(u);
                self.collect(&next, left - 1, prefix, out);
                prefix.pop();
            }
        }
    }

    /// Margin of the ball of radius `r` around `x` (within X) under `seq`.
    pub fn ball_margin(&self, x: &[f64], r: f64, seq: &InputSequence) -> f64 {
        let source = steer_ball(x, r);
        let mut boxes = vec![source];
        for &u in &seq.0 {
            match step_boxes(self.plant, &boxes, u) {
                Some(b) => boxes = b,
                None => return f64::NEG_INFINITY,
            }
        }
        k_margin(&self.plant.k, &boxes)
    }

    /// Shortest feasible horizon up to `t_max`, then the largest dyadic
    /// neighborhood certified for the chosen sequence.
    pub fn steer(&self, x: &[f64], t_max: usize, robust_radius: f64) -> Result<Steering> {
        for t in 1..=t_max {
            if let Some((inputs, margin)) = self.steer_exact(x, t, robust_radius) {
                let radius = self.dyadic_radius(x, robust_radius, &inputs);
                let neighborhood = robust_ball(self.plant, x, radius);
                return Ok(Steering {
                    t,
                    inputs,
                    margin,
                    radius,
                    neighborhood,
                });
            }
        }
        Err(Error::Infeasible(format!(
            "no input sequence of length <= {t_max} steers {x:?} (robust radius {robust_radius}) into int K"
        )))
    }

    fn dyadic_radius(&self, x: &[f64], r: f64, seq: &InputSequence) -> f64 {
        let width = self.plant.x.max_width();
        let (base, top) = if r > 0.0 {
            (r, (width / r).log2().floor() as i32)
        } else {
            (width, 0)
        };
        for k in (top - 60..=top).rev() {
            let rho = base * 2f64.powi(k);
            if self.ball_margin(x, rho + r, seq) > self.opts.delta_k {
                return rho;
            }
        }
        0.0
    }
}

/// Searches input sequences of length up to `t_max` steering the ball of
/// radius `robust_radius` around `x` into int K.
pub fn synthesize_steering(
    plant: &PlantModel,
    x: &[f64],
    t_max: usize,
    robust_radius: f64,
    opts: &SteeringOptions,
) -> Result<Steering> {
    if !plant.x.as_closed().contains_point(x) {
        return Err(Error::OutOfDomain { point: x.to_vec() });
    }
    Steerer::new(plant, t_max, opts.clone())?.steer(x, t_max, robust_radius)
}

/// Exhaustive proof that no sequence of length `t` can steer the robust
/// ball around `x` into K, by comparing image spreads with K's widths.
/// Domain escapes are ignored: the arithmetic concerns the maps alone.
pub fn steering_separation(
    plant: &PlantModel,
    x: &[f64],
    t: usize,
    robust_radius: f64,
    budget: usize,
) -> Result<Option<SeparationCertificate>> {
    let n = plant.inputs.len();
    if (n as f64).powi(t as i32) > budget as f64 {
        return Err(Error::Budget(format!("{n}^{t} sequences exceed {budget}")));
    }
    let source = steer_ball(x, robust_radius);
    let mut min_excess = f64::INFINITY;
    let mut count = 0usize;
    let mut stack: Vec<(Vec<AxisBox>, usize)> = vec![(vec![source], 0)];
    while let Some((boxes, depth)) = stack.pop() {
        if depth == t {
            count += 1;
            let hull = AxisBox::hull_of(&boxes).expect("nonempty");
            let excess = (0..hull.dim())
                .map(|a| hull.width(a) - plant.k.width(a))
                .fold(f64::NEG_INFINITY, f64::max);
            min_excess = min_excess.min(excess);
            continue;
        }
        for u in (0..n).rev() {
            let next: Vec<AxisBox> = boxes
                .iter()
                .flat_map(|b| plant.dynamics.image(b, &plant.inputs[u]))
                .collect();
            stack.push((next, depth + 1));
        }
    }
    Ok((min_excess > 0.0).then(|| SeparationCertificate {
        x: x.to_vec(),
        t,
        radius: robust_radius,
        min_excess,
        sequences: count,
    }))
}
