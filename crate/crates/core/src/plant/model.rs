use serde::{Deserialize, Serialize};

use super::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::geometry::AxisBox;

/// Sequence of indices into a plant's input list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputSequence(pub Vec<usize>);

impl InputSequence {
    pub fn empty() -> Self {
        InputSequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &InputSequence) -> InputSequence {
        InputSequence(self.0.iter().chain(&other.0).copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputMap {
    Identity,
    /// `y = C x`.
    Linear { c: Vec<Vec<f64>> },
}

impl OutputMap {
    pub fn is_identity(&self) -> bool {
        matches!(self, OutputMap::Identity)
    }

    pub fn output_dim(&self, n: usize) -> usize {
        match self {
            OutputMap::Identity => n,
            OutputMap::Linear { c } => c.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            OutputMap::Identity => x.to_vec(),
            OutputMap::Linear { c } => c
                .iter()
                .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }

    pub fn image(&self, bx: &AxisBox) -> AxisBox {
        match self {
            OutputMap::Identity => bx.as_closed(),
            OutputMap::Linear { c } => {
                let mut lo = Vec::with_capacity(c.len());
                let mut hi = Vec::with_capacity(c.len());
                for r in c {
                    let (mut l, mut h) = (0.0, 0.0);
                    for (j, &a) in r.iter().enumerate() {
                        let (p, q) = (a * bx.lo[j], a * bx.hi[j]);
                        l += p.min(q);
                        h += p.max(q);
                    }
                    lo.push(l);
                    hi.push(h);
                }
                AxisBox::closed(lo, hi)
            }
        }
    }
}

/// Where states may live before the model counts as violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bounds", rename_all = "snake_case")]
#[derive(Default)]
pub enum EvaluationDomain {
    #[default]
    StateSpace,
    Box(AxisBox),
    Unbounded,
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    pub value: f64,
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub name: String,
    pub state_dim: usize,
    pub inputs: Vec<Vec<f64>>,
    pub dynamics: Dynamics,
    pub output: OutputMap,
    pub x: AxisBox,
    pub k: AxisBox,
    #[serde(default)]
    pub domain: EvaluationDomain,
    /// Declared max-norm Lipschitz constant of `f(·, u)` on X, for every u.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

impl PlantModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.state_dim;
        if n == 0 {
            return Err(Error::config("state_dim", "must be positive"));
        }
        if self.x.dim() != n {
            return Err(Error::config("x", format!("expected dimension {n}")));
        }
        if self.k.dim() != n {
            return Err(Error::config("k", format!("expected dimension {n}")));
        }
        if !self.x.as_closed().contains_box(&self.k) {
            return Err(Error::config("k", "K must lie inside X"));
        }
        if (0..n).any(|a| self.k.width(a) <= 0.0) {
            return Err(Error::config("k", "K must have nonempty interior"));
        }
        if (0..n).all(|a| self.k.lo[a] == self.x.lo[a] && self.k.hi[a] == self.x.hi[a]) {
            return Err(Error::config("k", "K must be a proper subset of X"));
        }
        if self.inputs.is_empty() {
            return Err(Error::config("inputs", "input set is empty"));
        }
        let m = self.inputs[0].len();
        if self.inputs.iter().any(|u| u.len() != m) {
            return Err(Error::config("inputs", "inputs have mixed dimensions"));
        }
        self.dynamics.validate(n, m)?;
        if let OutputMap::Linear { c } = &self.output {
            if c.is_empty() || c.iter().any(|r| r.len() != n) {
                return Err(Error::config("output.c", format!("rows must have length {n}")));
            }
        }
        if let Dynamics::PiecewiseAffine { regions, .. } = &self.dynamics {
            self.check_partition(regions)?;
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) {
                return Err(Error::config("lipschitz", "must be positive"));
            }
        }
        Ok(())
    }

    /// Regions must stay in X and together cover X.
    fn check_partition(&self, regions: &[AxisBox]) -> Result<()> {
        use crate::geometry::{Grid, OpenCover, OpenSet};
        for (i, r) in regions.iter().enumerate() {
            if !self.x.as_closed().contains_box(r) {
                return Err(Error::config(format!("dynamics.regions[{i}]"), "region leaves X"));
            }
        }
        // Closed regions cover X iff slightly inflated open copies do; the
        // exact test runs on the region hull grid with zero-width slack.
        let grid = Grid::uniform(self.x.clone(), 1)?;
        let slack = 1e-9 * self.x.max_width();
        let elems = regions
            .iter()
            .map(|r| OpenSet::from_box(r.inflate(slack)))
            .collect();
        let cover = OpenCover::new(elems, grid.full_region());
        if let Some(w) = cover.uncovered_witness() {
            return Err(Error::config(
                "dynamics.regions",
                format!("regions do not cover X near {w:?}"),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.output.output_dim(self.state_dim)
    }

    pub fn is_fully_observed(&self) -> bool {
        self.output.is_identity()
    }

    pub fn domain_box(&self) -> Option<AxisBox> {
        match &self.domain {
            EvaluationDomain::StateSpace => Some(self.x.as_closed()),
            EvaluationDomain::Box(b) => Some(b.as_closed()),
            EvaluationDomain::Unbounded => None,
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.domain_box().is_none_or(|d| d.contains_point(x))
    }

    pub fn box_in_domain(&self, b: &AxisBox) -> bool {
        self.domain_box().is_none_or(|d| d.contains_box(b))
    }

    pub fn input(&self, u: usize) -> Result<&[f64]> {
        self.inputs.get(u).map(|v| v.as_slice()).ok_or(Error::InputNotInSet {
            index: u,
            len: self.inputs.len(),
        })
    }

    /// Index of an input vector in U, if it is a member.
    pub fn input_index(&self, u: &[f64]) -> Option<usize> {
        self.inputs.iter().position(|v| v.as_slice() == u)
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                got: x.len(),
            });
        }
        if !self.in_domain(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        Ok(())
    }

    pub fn step(&self, x: &[f64], u: usize) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let y = self
            .dynamics
            .eval(x, self.input(u)?)
            .ok_or_else(|| Error::OutOfDomain { point: x.to_vec() })?;
        if !self.in_domain(&y) {
            return Err(Error::ModelViolation { step: 1, state: y });
        }
        Ok(y)
    }

    pub fn run_open_loop(&self, x0: &[f64], seq: &InputSequence) -> Result<Vec<Vec<f64>>> {
        self.check_state(x0)?;
        let mut traj = vec![x0.to_vec()];
        for (k, &u) in seq.0.iter().enumerate() {
            let next = self.step(traj.last().unwrap(), u).map_err(|e| match e {
                Error::ModelViolation { state, .. } => Error::ModelViolation { step: k + 1, state },
                other => other,
            })?;
            traj.push(next);
        }
        Ok(traj)
    }

    /// `(g(x_0), …, g(x_s))` along the open-loop run under `v`.
    pub fn output_map(&self, x0: &[f64], v: &InputSequence) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .run_open_loop(x0, v)?
            .iter()
            .map(|x| self.output.eval(x))
            .collect())
    }

    /// Max-norm Lipschitz bound for `f(·, u)` over the evaluation box.
    ///
    /// Uses the declared constant, else the analytic bound, else a sampled
    /// estimate inflated by 1.25.
    pub fn lipschitz_bound(&self) -> LipschitzBound {
        if let Some(value) = self.lipschitz {
            return LipschitzBound { value, estimated: false };
        }
        let region = self.domain_box().unwrap_or_else(|| self.x.as_closed());
        if let Some(value) = self.dynamics.analytic_lipschitz(&region) {
            return LipschitzBound { value, estimated: false };
        }
        LipschitzBound {
            value: 1.25 * self.sampled_lipschitz(&region, 64),
            estimated: true,
        }
    }

    fn sampled_lipschitz(&self, region: &AxisBox, per_axis: usize) -> f64 {
        let grid = crate::geometry::Grid::uniform(region.clone(), per_axis).expect("valid grid");
        let pts = grid.vertices();
        let h = region.max_width() / per_axis as f64;
        let mut best: f64 = 0.0;
        for u in &self.inputs {
            for p in &pts {
                let Some(fp) = self.dynamics.eval(p, u) else { continue };
                for a in 0..self.state_dim {
                    let mut q = p.clone();
                    q[a] += h;
                    if q[a] > region.hi[a] {
                        continue;
                    }
                    if let Some(fq) = self.dynamics.eval(&q, u) {
                        let d = fp.iter().zip(&fq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        best = best.max(d / h);
                    }
                }
            }
        }
        best
    }
}
