//! Exhaustive coder search for scalar, fully observed plants.
//!
//! A coder with `m` symbols partitions the breakpoint grid points of X into
//! `m` runs of consecutive points and assigns each run one input sequence of
//! length `τ`. A run is admissible when a single sequence sends every point
//! of it into int K. Since sub-runs of admissible runs stay admissible, a
//! partition into `m` runs exists iff the fewest admissible runs covering all
//! points is at most `m`; greedy maximal runs give that fewest count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{InputSequence, PlantModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceLimits {
    pub max_tau: usize,
    pub max_m: usize,
    /// Cap on (sequence, point) evaluations.
    pub max_evaluations: u64,
}

impl Default for BruteForceLimits {
    fn default() -> Self {
        BruteForceLimits {
            max_tau: 2,
            max_m: 8,
            max_evaluations: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    /// First and last grid point of the run.
    pub lo: f64,
    pub hi: f64,
    pub inputs: InputSequence,
}

/// Proof that no `m`-run partition exists: starting at the first point, the
/// longest admissible run from each greedy start is listed; `m` runs end
/// before the last point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionCertificate {
    /// Greedy run starts as grid point indices.
    pub starts: Vec<usize>,
    /// Last point index reachable from each start by one admissible run.
    pub reach: Vec<usize>,
    pub points: usize,
    pub sequences_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceVerdict {
    pub tau: usize,
    pub m: usize,
    pub feasible: bool,
    /// Fewest admissible runs covering the grid, if any cover exists.
    pub min_cells: Option<usize>,
    pub witness: Option<Vec<PartitionCell>>,
    pub certificate: Option<ExhaustionCertificate>,
    pub breakpoint_step: f64,
}

fn sequence(index: usize, n_inputs: usize, tau: usize) -> InputSequence {
    let mut digits = vec![0; tau];
    let mut rest = index;
    for d in digits.iter_mut().rev() {
        *d = rest % n_inputs;
        rest /= n_inputs;
    }
    InputSequence(digits)
}

/// Run ends from every point for one sequence: `end[i]` is the last index of
/// the admissible run starting at `i`, or `None` if point `i` fails.
fn run_ends(plant: &PlantModel, points: &[f64], seq: &InputSequence) -> Vec<Option<usize>> {
    let ok: Vec<bool> = points
        .iter()
        .map(|&p| {
            plant
                .run_open_loop(&[p], seq)
                .is_ok_and(|t| plant.k.point_margin(t.last().unwrap()) > 0.0)
        })
        .collect();
    let mut end = vec![None; points.len()];
    for i in (0..points.len()).rev() {
        if ok[i] {
            end[i] = Some(if i + 1 < points.len() { end[i + 1].unwrap_or(i) } else { i });
        }
    }
    end
}

/// Decides whether some `m`-symbol coder with breakpoints on a grid of step
/// `breakpoint_step` steers every grid state into int K in `τ` steps.
pub fn necessity_bruteforce(
    plant: &PlantModel,
    tau: usize,
    m: usize,
    breakpoint_step: f64,
    limits: &BruteForceLimits,
) -> Result<BruteForceVerdict> {
    if plant.state_dim != 1 || !plant.is_fully_observed() {
        return Err(Error::Refused("exhaustive search needs a scalar, fully observed plant".into()));
    }
    if tau == 0 || m == 0 {
        return Err(Error::config("tau/m", "must be positive"));
    }
    if tau > limits.max_tau || m > limits.max_m {
        return Err(Error::Budget(format!(
            "tau = {tau}, m = {m} exceeds the limits tau <= {}, m <= {}",
            limits.max_tau, limits.max_m
        )));
    }
    if !(breakpoint_step > 0.0) {
        return Err(Error::config("breakpoint_step", "must be positive"));
    }
    let (lo, hi) = (plant.x.lo[0], plant.x.hi[0]);
    let intervals = ((hi - lo) / breakpoint_step).round() as usize;
    if intervals == 0 || ((hi - lo) / intervals as f64 - breakpoint_step).abs() > 1e-9 * breakpoint_step.max(1.0) {
        return Err(Error::Resolution(format!(
            "step {breakpoint_step} does not divide X = [{lo}, {hi}]"
        )));
    }
    let points: Vec<f64> = (0..=intervals)
        .map(|i| if i == intervals { hi } else { lo + (hi - lo) * i as f64 / intervals as f64 })
        .collect();
    let n_inputs = plant.inputs.len();
    let n_seq = (n_inputs as u64).checked_pow(tau as u32).unwrap_or(u64::MAX);
    let evaluations = n_seq.saturating_mul(points.len() as u64);
    if evaluations > limits.max_evaluations {
        return Err(Error::Budget(format!(
            "{evaluations} evaluations exceed the cap of {}",
            limits.max_evaluations
        )));
    }
    let n_seq = n_seq as usize;

    // best[i] = (furthest run end from i, lowest sequence index reaching it).
    let none = vec![None::<(usize, usize)>; points.len()];
    let best = (0..n_seq)
        .into_par_iter()
        .fold(
            || none.clone(),
            |mut acc, s| {
                let ends = run_ends(plant, &points, &sequence(s, n_inputs, tau));
                for (a, e) in acc.iter_mut().zip(ends) {
                    if let Some(e) = e {
                        if a.is_none_or(|(ae, as_)| e > ae || (e == ae && s < as_)) {
                            *a = Some((e, s));
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || none.clone(),
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    if let Some((ye, ys)) = y {
                        if x.is_none_or(|(xe, xs)| ye > xe || (ye == xe && ys < xs)) {
                            *x = Some((ye, ys));
                        }
                    }
                }
                a
            },
        );

    let mut starts = Vec::new();
    let mut reach = Vec::new();
    let mut cells = Vec::new();
    let mut i = 0;
    let mut covered = true;
    while i < points.len() {
        starts.push(i);
        let Some((end, s)) = best[i] else {
            covered = false;
            break;
        };
        reach.push(end);
        cells.push(PartitionCell {
            lo: points[i],
            hi: points[end],
            inputs: sequence(s, n_inputs, tau),
        });
        i = end + 1;
    }
    let min_cells = covered.then_some(cells.len());
    let feasible = min_cells.is_some_and(|c| c <= m && m <= points.len());
    let verdict = if feasible {
        // Split the widest runs until there are exactly m cells.
        while cells.len() < m {
            let k = (0..cells.len())
                .max_by(|&a, &b| (cells[a].hi - cells[a].lo).total_cmp(&(cells[b].hi - cells[b].lo)).then(b.cmp(&a)))
                .unwrap();
            let c = cells[k].clone();
            let first = points.iter().position(|&p| p == c.lo).unwrap();
            let last = points.iter().position(|&p| p == c.hi).unwrap();
            let mid = first + (last - first) / 2;
            cells[k].hi = points[mid];
            cells.insert(
                k + 1,
                PartitionCell {
                    lo: points[mid + 1],
                    hi: c.hi,
                    inputs: c.inputs,
                },
            );
        }
        BruteForceVerdict {
            tau,
            m,
            feasible,
            min_cells,
            witness: Some(cells),
            certificate: None,
            breakpoint_step,
        }
    } else {
        BruteForceVerdict {
            tau,
            m,
            feasible,
            min_cells,
            witness: None,
            certificate: Some(ExhaustionCertificate {
                starts,
                reach,
                points: points.len(),
                sequences_checked: n_seq,
            }),
            breakpoint_step,
        }
    };
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::fixtures::{contracting, plant_a};

    #[test]
    fn sequences_enumerate_in_lexicographic_order() {
        assert_eq!(sequence(0, 3, 2), InputSequence(vec![0, 0]));
        assert_eq!(sequence(5, 3, 2), InputSequence(vec![1, 2]));
    }

    #[test]
    fn one_symbol_cannot_hold_plant_a() {
        let v = necessity_bruteforce(&plant_a(), 1, 1, 0.01, &BruteForceLimits::default()).unwrap();
        assert!(!v.feasible);
        assert_eq!(v.min_cells, Some(5));
    }

    #[test]
    fn contracting_plant_needs_one_symbol() {
        let v = necessity_bruteforce(&contracting(0.4), 1, 1, 0.05, &BruteForceLimits::default()).unwrap();
        assert!(v.feasible);
        assert_eq!(v.witness.unwrap().len(), 1);
    }

    #[test]
    fn limits_are_enforced() {
        let r = necessity_bruteforce(&plant_a(), 3, 2, 0.01, &BruteForceLimits::default());
        assert!(matches!(r, Err(Error::Budget(_))));
    }
}
