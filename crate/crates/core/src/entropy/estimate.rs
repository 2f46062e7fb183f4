use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::construct::{construct, ConstructionParams};
use super::tuple::InvarianceTuple;
use crate::error::{Error, Result};
use crate::plant::{Dynamics, InputSequence, PlantModel};

/// Finite search space for the entropy infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBudget {
    /// Candidate observation prefixes `v` (with `s = |v|`).
    pub prefixes: Vec<InputSequence>,
    pub taus: Vec<usize>,
    pub params: ConstructionParams,
}

impl EstimateBudget {
    pub fn fully_observed(taus: Vec<usize>, params: ConstructionParams) -> Self {
        EstimateBudget {
            prefixes: vec![InputSequence::empty()],
            taus,
            params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundSource {
    /// `|det A|` volume growth for linear dynamics.
    Volume,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// Lower bound on the entropy in bits per sample.
    pub h: f64,
    pub source: LowerBoundSource,
}

/// Outcome for one `(v, τ)` candidate of the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub s: usize,
    pub v: InputSequence,
    pub tau: usize,
    /// `None` when no feasible tuple was found.
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub exact_subcover: bool,
    pub subcover_lower_bound: Option<usize>,
    pub candidates: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Certified upper bound within the budget: `log2 N / (s + τ)`.
    pub h_upper: f64,
    pub witness: InvarianceTuple,
    pub n: usize,
    /// Whether `N` is the exact minimum over the generated candidates.
    pub exact: bool,
    pub lower_bound: Option<LowerBound>,
    pub robust: bool,
    pub table: Vec<CandidateOutcome>,
}

impl EntropyEstimate {
    pub fn gap(&self) -> Option<f64> {
        self.lower_bound.as_ref().map(|lb| self.h_upper - lb.h)
    }
}

/// `log2 |det A|` for linear dynamics.
pub fn volume_rate(plant: &PlantModel) -> Option<f64> {
    let Dynamics::Linear(map) = &plant.dynamics else {
        return None;
    };
    let n = plant.state_dim;
    let a = DMatrix::from_fn(n, n, |i, j| map.a[i][j]);
    Some(a.determinant().abs().log2())
}

/// Smallest `N` any feasible tuple with cycle length `cycle` can have for a
/// linear plant: `|det A|^cycle · vol X / vol K`.
pub fn volume_bound_n(plant: &PlantModel, cycle: usize) -> Option<f64> {
    let rate = volume_rate(plant)?;
    Some(2f64.powf(rate * cycle as f64) * plant.x.volume() / plant.k.volume())
}

fn run(plant: &PlantModel, budget: &EstimateBudget, robust: bool) -> Result<EntropyEstimate> {
    if budget.taus.is_empty() || budget.prefixes.is_empty() {
        return Err(Error::config("budget", "needs at least one tau and one prefix"));
    }
    let jobs: Vec<(&InputSequence, usize)> = budget
        .prefixes
        .iter()
        .flat_map(|v| budget.taus.iter().map(move |&t| (v, t)))
        .collect();
    // Candidates run one after another; each one parallelises internally.
    let results: Vec<(CandidateOutcome, Option<InvarianceTuple>)> = jobs
        .iter()
        .map(|&(v, tau)| match construct(plant, v, tau, &budget.params) {
            Ok(c) => {
                let n = c.tuple.alpha.elements.len();
                (
                    CandidateOutcome {
                        s: v.len(),
                        v: v.clone(),
                        tau,
                        n: Some(n),
                        h: Some(c.tuple.rate()),
                        exact_subcover: c.subcover.exact,
                        subcover_lower_bound: Some(c.subcover.lower_bound),
                        candidates: c.candidates,
                        note: None,
                    },
                    Some(c.tuple),
                )
            }
            Err(e) => (
                CandidateOutcome {
                    s: v.len(),
                    v: v.clone(),
                    tau,
                    n: None,
                    h: None,
                    exact_subcover: false,
                    subcover_lower_bound: None,
                    candidates: 0,
                    note: Some(e.to_string()),
                },
                None,
            ),
        })
        .collect();
    let best = results
        .iter()
        .filter_map(|(o, t)| t.as_ref().map(|t| (o, t)))
        .min_by(|(a, _), (b, _)| {
            a.h.partial_cmp(&b.h)
                .unwrap()
                .then(a.s.cmp(&b.s))
                .then(a.tau.cmp(&b.tau))
                .then(a.v.cmp(&b.v))
        });
    let Some((outcome, witness)) = best else {
        let reasons: Vec<String> = results.iter().filter_map(|(o, _)| o.note.clone()).collect();
        return Err(Error::Infeasible(format!(
            "no feasible tuple within the budget: {}",
            reasons.join("; ")
        )));
    };
    let lower_bound = volume_rate(plant).map(|h| LowerBound {
        h: h.max(0.0),
        source: LowerBoundSource::Volume,
    });
    Ok(EntropyEstimate {
        h_upper: outcome.h.unwrap(),
        n: outcome.n.unwrap(),
        exact: outcome.exact_subcover,
        witness: witness.clone(),
        lower_bound,
        robust,
        table: results.into_iter().map(|(o, _)| o).collect(),
    })
}

/// Smallest `log2 N / (s + τ)` over the budget, with its witness.
pub fn estimate_wtfe(plant: &PlantModel, budget: &EstimateBudget) -> Result<EntropyEstimate> {
    let mut b = budget.clone();
    b.params.robust_radius = 0.0;
    run(plant, &b, false)
}

/// Robust counterpart over `s = 0` triples at the budget's radius.
pub fn estimate_rwtfe(plant: &PlantModel, budget: &EstimateBudget) -> Result<EntropyEstimate> {
    if !plant.is_fully_observed() {
        return Err(Error::Refused("the robust estimate needs a fully observed plant".into()));
    }
    let mut b = budget.clone();
    b.prefixes = vec![InputSequence::empty()];
    run(plant, &b, true)
}
