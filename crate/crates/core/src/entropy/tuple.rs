use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::OpenCover;
use crate::plant::{InputSequence, PlantModel};
use crate::reach::DEFAULT_DELTA_K;

/// A feasible-set candidate `(s, v, α, τ, G)`; with `s = 0` and full
/// observation it doubles as the robust triple `(α, τ, G)`.
///
/// `alpha` lives in the cover space of `v` (see `ObservedMap`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceTuple {
    pub s: usize,
    pub v: InputSequence,
    pub alpha: OpenCover,
    pub tau: usize,
    /// Steering sequence per element of `alpha`, each of length `tau`.
    pub g: Vec<InputSequence>,
    /// Radius of the ball around each element that must also be steered.
    #[serde(default)]
    pub robust_radius: f64,
    #[serde(default = "default_delta_k")]
    pub delta_k: f64,
}

fn default_delta_k() -> f64 {
    DEFAULT_DELTA_K
}

impl InvarianceTuple {
    pub fn check_shape(&self, plant: &PlantModel) -> Result<()> {
        if self.v.len() != self.s {
            return Err(Error::Dimension {
                expected: self.s,
                got: self.v.len(),
            });
        }
        if self.tau == 0 {
            return Err(Error::config("tau", "must be positive"));
        }
        if self.g.len() != self.alpha.elements.len() {
            return Err(Error::Dimension {
                expected: self.alpha.elements.len(),
                got: self.g.len(),
            });
        }
        for (i, seq) in self.g.iter().enumerate() {
            if seq.len() != self.tau {
                return Err(Error::config(
                    format!("g[{i}]"),
                    format!("expected {} inputs, got {}", self.tau, seq.len()),
                ));
            }
        }
        for &u in self.v.0.iter().chain(self.g.iter().flat_map(|s| s.0.iter())) {
            plant.input(u)?;
        }
        if self.robust_radius < 0.0 || !(self.delta_k > 0.0) {
            return Err(Error::config("robust_radius", "radius must be >= 0 and delta_k > 0"));
        }
        Ok(())
    }

    pub fn cycle_len(&self) -> usize {
        self.s + self.tau
    }

    /// `log2 |α| / (s + τ)`.
    pub fn rate(&self) -> f64 {
        (self.alpha.elements.len() as f64).log2() / self.cycle_len() as f64
    }

    pub fn is_robust(&self) -> bool {
        self.robust_radius > 0.0
    }
}
