use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::entropy::InvarianceTuple;
use crate::error::{Error, Result};
use crate::geometry::{Grid, OpenSet};
use crate::plant::{InputSequence, PlantModel};
use crate::reach::{verify_constraint_c, verify_constraint_rc};

/// How the coder turns the cycle's observation `y_0^s` into a symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoderLaw {
    /// Smallest `i` with the observation in element `i` (symbol `i + 1`).
    CoverIndex { elements: Vec<OpenSet> },
    /// One symbol per cell of a grid over the cover space.
    Table { grid: Grid, symbols: Vec<usize> },
}

/// A periodic coder-controller over an errorless channel.
///
/// Within a cycle of length `s + τ` the controller first plays `v` while the
/// coder sends the one-letter symbol; at cycle position `s` the coder sends
/// the symbol for `y_0^s` and the controller plays that symbol's sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoderController {
    pub s: usize,
    pub v: InputSequence,
    pub tau: usize,
    /// Clock period; the cycle restarts whenever the clock wraps.
    pub period: usize,
    /// Alphabet size `μ_k` at each clock position.
    pub alphabets: Vec<usize>,
    /// Cycle position at each clock position.
    pub phase: Vec<usize>,
    pub law: CoderLaw,
    /// Input sequence per symbol (symbol `i` uses entry `i - 1`).
    pub controls: Vec<InputSequence>,
    /// Certified invariance horizons `Q`.
    pub invariance_times: BTreeSet<usize>,
}

impl CoderController {
    /// Plain one-cycle controller with an empty `Q`.
    pub fn new(v: InputSequence, tau: usize, law: CoderLaw, controls: Vec<InputSequence>) -> Result<Self> {
        let s = v.len();
        let m = controls.len();
        let cycle = s + tau;
        let cc = CoderController {
            s,
            v,
            tau,
            period: cycle,
            alphabets: (0..cycle).map(|c| if c == s { m } else { 1 }).collect(),
            phase: (0..cycle).collect(),
            law,
            controls,
            invariance_times: BTreeSet::new(),
        };
        cc.check()?;
        Ok(cc)
    }

    pub fn cycle(&self) -> usize {
        self.s + self.tau
    }

    pub fn symbols(&self) -> usize {
        self.controls.len()
    }

    fn check(&self) -> Result<()> {
        if self.tau == 0 || self.period == 0 {
            return Err(Error::config("tau", "tau and period must be positive"));
        }
        if self.controls.is_empty() {
            return Err(Error::config("controls", "need at least one symbol"));
        }
        if self.alphabets.len() != self.period || self.phase.len() != self.period {
            return Err(Error::Dimension {
                expected: self.period,
                got: self.alphabets.len().min(self.phase.len()),
            });
        }
        if let Some(i) = self.controls.iter().position(|c| c.len() != self.tau) {
            return Err(Error::config(format!("controls[{i}]"), format!("needs {} inputs", self.tau)));
        }
        for (p, (&c, &mu)) in self.phase.iter().zip(&self.alphabets).enumerate() {
            let expected = if c == self.s { self.symbols() } else { 1 };
            if c >= self.cycle() || mu != expected {
                return Err(Error::config(
                    format!("alphabets[{p}]"),
                    format!("position {c} needs alphabet {expected}, got {mu}"),
                ));
            }
        }
        match &self.law {
            CoderLaw::CoverIndex { elements } if elements.len() != self.symbols() => Err(Error::Dimension {
                expected: self.symbols(),
                got: elements.len(),
            }),
            CoderLaw::Table { grid, symbols } => {
                if symbols.len() != grid.cell_count() {
                    return Err(Error::Dimension {
                        expected: grid.cell_count(),
                        got: symbols.len(),
                    });
                }
                match symbols.iter().find(|&&k| k == 0 || k > self.symbols()) {
                    Some(k) => Err(Error::config("symbols", format!("symbol {k} outside 1..={}", self.symbols()))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Checks the shape against a plant's input set.
    pub fn validate(&self, plant: &PlantModel) -> Result<()> {
        self.check()?;
        for &u in self.v.0.iter().chain(self.controls.iter().flat_map(|c| c.0.iter())) {
            plant.input(u)?;
        }
        Ok(())
    }

    /// Symbol for a cover-space observation `y_0^s`.
    pub fn encode(&self, y: &[f64]) -> Result<usize> {
        match &self.law {
            CoderLaw::CoverIndex { elements } => elements
                .iter()
                .position(|e| e.contains_point(y))
                .map(|i| i + 1)
                .ok_or_else(|| Error::OutOfDomain { point: y.to_vec() }),
            CoderLaw::Table { grid, symbols } => {
                if !grid.domain.as_closed().contains_point(y) {
                    return Err(Error::OutOfDomain { point: y.to_vec() });
                }
                Ok(symbols[grid.cell_of(y)?])
            }
        }
    }

    /// Input index at cycle position `c` given the cycle's symbol.
    pub fn control(&self, c: usize, symbol: usize) -> usize {
        if c < self.s {
            self.v.0[c]
        } else {
            self.controls[symbol - 1].0[c - self.s]
        }
    }

    /// Product of the alphabet sizes over the action phase of one cycle.
    pub fn action_product(&self) -> usize {
        (self.s..self.cycle())
            .map(|c| if c == self.s { self.symbols() } else { 1 })
            .product()
    }

    pub(crate) fn mark_invariant(&mut self, q: usize) {
        self.invariance_times.insert(q);
    }
}

/// Coder-controller of a feasible tuple with the min-index coding rule.
pub fn synthesize_from_tuple(plant: &PlantModel, tuple: &InvarianceTuple) -> Result<CoderController> {
    let report = if tuple.is_robust() {
        verify_constraint_rc(plant, tuple)?
    } else {
        verify_constraint_c(plant, tuple)?
    };
    if !report.ok {
        return Err(Error::Refused(format!(
            "tuple is not feasible: element(s) {:?} fail the constraint",
            report.failing
        )));
    }
    let mut cc = CoderController::new(
        tuple.v.clone(),
        tuple.tau,
        CoderLaw::CoverIndex {
            elements: tuple.alpha.elements.clone(),
        },
        tuple.g.clone(),
    )?;
    cc.validate(plant)?;
    // The constraint certificates cover every initial state of X.
    cc.mark_invariant(tuple.s + tuple.tau);
    Ok(cc)
}

/// `q`-periodic extension: the clock restarts every `q` steps.
pub fn periodic_extension(cc: &CoderController, q: usize) -> Result<CoderController> {
    if !cc.invariance_times.contains(&q) {
        return Err(Error::Refused(format!("q = {q} is not a certified invariance time")));
    }
    if q == cc.period {
        return Ok(cc.clone());
    }
    let mut out = cc.clone();
    out.period = q;
    out.alphabets = (0..q).map(|j| cc.alphabets[j % cc.period]).collect();
    out.phase = (0..q).map(|j| cc.phase[j % cc.period]).collect();
    out.invariance_times = BTreeSet::from([q]);
    Ok(out)
}

/// `min_{q ∈ Q} (1/q) Σ_{j<q} log2 μ_j` in bits per sample.
pub fn average_data_rate(cc: &CoderController) -> Result<f64> {
    cc.invariance_times
        .iter()
        .map(|&q| {
            let bits: f64 = (0..q).map(|j| (cc.alphabets[j % cc.period] as f64).log2()).sum();
            bits / q as f64
        })
        .min_by(f64::total_cmp)
        .ok_or(Error::UndefinedRate)
}
