use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AxisBox;

/// Affine map `x ↦ A x + B u + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub c: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<f64>) -> Self {
        AffineMap { a, b, c }
    }

    pub fn state_dim(&self) -> usize {
        self.a.len()
    }

    pub fn input_dim(&self) -> usize {
        self.b.first().map_or(0, |r| r.len())
    }

    fn offset(&self, i: usize, u: &[f64]) -> f64 {
        let bu: f64 = self.b[i].iter().zip(u).map(|(b, u)| b * u).sum();
        bu + self.c.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (0..self.state_dim())
            .map(|i| {
                let ax: f64 = self.a[i].iter().zip(x).map(|(a, x)| a * x).sum();
                ax + self.offset(i, u)
            })
            .collect()
    }

    /// Tight box hull of the image of a box.
    pub fn image(&self, bx: &AxisBox, u: &[f64]) -> AxisBox {
        let n = self.state_dim();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for i in 0..n {
            let off = self.offset(i, u);
            let (mut l, mut h) = (off, off);
            for (j, &a) in self.a[i].iter().enumerate() {
                let (p, q) = (a * bx.lo[j], a * bx.hi[j]);
                l += p.min(q);
                h += p.max(q);
            }
            lo.push(l);
            hi.push(h);
        }
        AxisBox::closed(lo, hi)
    }

    /// Operator norm of `A` induced by the max-norm.
    pub fn inf_norm(&self) -> f64 {
        self.a
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.a.len() != n || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::config("dynamics.a", format!("expected a {n}x{n} matrix")));
        }
        if self.b.len() != n || self.b.iter().any(|r| r.len() != m) {
            return Err(Error::config("dynamics.b", format!("expected a {n}x{m} matrix")));
        }
        if !self.c.is_empty() && self.c.len() != n {
            return Err(Error::config("dynamics.c", format!("expected length {n}")));
        }
        Ok(())
    }
}

/// Plant dynamics descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dynamics {
    Linear(AffineMap),
    /// Regions partition X; on shared boundaries the larger index wins.
    PiecewiseAffine {
        regions: Vec<AxisBox>,
        branches: Vec<AffineMap>,
    },
    /// Scalar `x' = Σ coeffs[k] x^k + Σ b[j] u[j]`.
    Polynomial { coeffs: Vec<f64>, b: Vec<f64> },
}

/// Interval power `[lo, hi]^k`.
fn interval_pow(lo: f64, hi: f64, k: usize) -> (f64, f64) {
    if k == 0 {
        return (1.0, 1.0);
    }
    let (a, b) = (lo.powi(k as i32), hi.powi(k as i32));
    if k.is_multiple_of(2) && lo <= 0.0 && hi >= 0.0 {
        (0.0, a.max(b))
    } else {
        (a.min(b), a.max(b))
    }
}

impl Dynamics {
    pub fn state_dim(&self) -> usize {
        match self {
            Dynamics::Linear(m) => m.state_dim(),
            Dynamics::PiecewiseAffine { branches, .. } => branches.first().map_or(0, |b| b.state_dim()),
            Dynamics::Polynomial { .. } => 1,
        }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        match self {
            Dynamics::Linear(map) => map.validate(n, m),
            Dynamics::PiecewiseAffine { regions, branches } => {
                if regions.is_empty() || regions.len() != branches.len() {
                    return Err(Error::config(
                        "dynamics.regions",
                        "need one branch per region and at least one region",
                    ));
                }
                for (i, r) in regions.iter().enumerate() {
                    if r.dim() != n {
                        return Err(Error::config(
                            format!("dynamics.regions[{i}]"),
                            format!("expected dimension {n}"),
                        ));
                    }
                    if (0..n).any(|a| r.width(a) <= 0.0) {
                        return Err(Error::config(
                            format!("dynamics.regions[{i}]"),
                            "region must have nonempty interior",
                        ));
                    }
                }
                branches.iter().try_for_each(|b| b.validate(n, m))
            }
            Dynamics::Polynomial { coeffs, b } => {
                if n != 1 {
                    return Err(Error::config("dynamics", "polynomial dynamics are scalar"));
                }
                if coeffs.is_empty() {
                    return Err(Error::config("dynamics.coeffs", "empty polynomial"));
                }
                if b.len() != m {
                    return Err(Error::config("dynamics.b", format!("expected length {m}")));
                }
                Ok(())
            }
        }
    }

    /// Index of the piecewise region owning `x` (largest index on ties).
    pub fn region_of(&self, x: &[f64]) -> Option<usize> {
        match self {
            Dynamics::PiecewiseAffine { regions, .. } => {
                regions.iter().rposition(|r| r.as_closed().contains_point(x))
            }
            _ => Some(0),
        }
    }

    /// Point evaluation; `None` if a piecewise map has no region for `x`.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Option<Vec<f64>> {
        match self {
            Dynamics::Linear(m) => Some(m.eval(x, u)),
            Dynamics::PiecewiseAffine { branches, .. } => {
                self.region_of(x).map(|i| branches[i].eval(x, u))
            }
            Dynamics::Polynomial { coeffs, b } => {
                let p = coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c);
                Some(vec![p + b.iter().zip(u).map(|(b, u)| b * u).sum::<f64>()])
            }
        }
    }

    /// Closed enclosures of the image of a closed box, one per branch met.
    ///
    /// A degenerate box is evaluated as a point so the tie-break applies.
    pub fn image(&self, bx: &AxisBox, u: &[f64]) -> Vec<AxisBox> {
        if bx.is_point() {
            return self.eval(&bx.lo, u).map(|y| vec![AxisBox::point(&y)]).unwrap_or_default();
        }
        match self {
            Dynamics::Linear(m) => vec![m.image(bx, u)],
            Dynamics::PiecewiseAffine { regions, branches } => {
                let mut out = Vec::new();
                for (i, r) in regions.iter().enumerate() {
                    let Some(piece) = bx.closed_intersection(r) else {
                        continue;
                    };
                    // A sliver on the upper face of region i owned by a later
                    // region never evaluates through branch i.
                    let owned_later = (0..piece.dim()).any(|a| piece.lo[a] == piece.hi[a] && piece.lo[a] == r.hi[a])
                        && regions[i + 1..].iter().any(|q| q.as_closed().contains_box(&piece));
                    if !owned_later {
                        out.push(branches[i].image(&piece, u));
                    }
                }
                out
            }
            Dynamics::Polynomial { coeffs, b } => {
                let bu: f64 = b.iter().zip(u).map(|(b, u)| b * u).sum();
                let (mut lo, mut hi) = (bu, bu);
                for (k, &c) in coeffs.iter().enumerate() {
                    let (pl, ph) = interval_pow(bx.lo[0], bx.hi[0], k);
                    let (p, q) = (c * pl, c * ph);
                    lo += p.min(q);
                    hi += p.max(q);
                }
                vec![AxisBox::closed(vec![lo], vec![hi])]
            }
        }
    }

    /// Analytic max-norm Lipschitz bound on `bx`, when available.
    pub fn analytic_lipschitz(&self, bx: &AxisBox) -> Option<f64> {
        match self {
            Dynamics::Linear(m) => Some(m.inf_norm()),
            Dynamics::PiecewiseAffine { branches, .. } => {
                Some(branches.iter().map(|b| b.inf_norm()).fold(0.0, f64::max))
            }
            Dynamics::Polynomial { coeffs, .. } => {
                // |p'(x)| ≤ Σ k |c_k| r^{k-1} with r = max |x| on the box.
                let r = bx.lo[0].abs().max(bx.hi[0].abs());
                Some(
                    coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, c)| k as f64 * c.abs() * r.powi(k as i32 - 1))
                        .sum(),
                )
            }
        }
    }
}
