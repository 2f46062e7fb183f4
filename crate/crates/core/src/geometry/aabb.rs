use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in R^n, flagged open or closed.
///
/// An open box `(lo, hi)` with `lo[i] == hi[i]` on some axis is empty; a
/// closed box with `lo == hi` is a single point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub open: bool,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, open: bool) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::config("box", format!("invalid bounds lo={lo:?} hi={hi:?}")));
        }
        Ok(AxisBox { lo, hi, open })
    }

    pub fn closed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
        AxisBox { lo, hi, open: false }
    }

    pub fn open(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
        AxisBox { lo, hi, open: true }
    }

    /// Degenerate closed box holding one point.
    pub fn point(x: &[f64]) -> Self {
        AxisBox::closed(x.to_vec(), x.to_vec())
    }

    /// Closed box `x ± r` on every axis.
    pub fn ball(x: &[f64], r: f64) -> Self {
        AxisBox::closed(
            x.iter().map(|v| v - r).collect(),
            x.iter().map(|v| v + r).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        if self.open {
            self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h)
        } else {
            self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
        }
    }

    pub fn is_point(&self) -> bool {
        !self.open && self.lo == self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn radius(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn as_open(&self) -> AxisBox {
        AxisBox { open: true, ..self.clone() }
    }

    pub fn as_closed(&self) -> AxisBox {
        AxisBox { open: false, ..self.clone() }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        if self.open {
            x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l < v && v < h)
        } else {
            x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l <= v && v <= h)
        }
    }

    /// Whether the closure of `other` lies inside `self` (strictly, if `self`
    /// is open).
    pub fn contains_box(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|i| {
            if self.open {
                self.lo[i] < other.lo[i] && other.hi[i] < self.hi[i]
            } else {
                self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i]
            }
        })
    }

    /// Whether the two sets share at least one point, honouring openness.
    pub fn intersects(&self, other: &AxisBox) -> bool {
        let strict = self.open || other.open;
        (0..self.dim()).all(|i| {
            let lo = self.lo[i].max(other.lo[i]);
            let hi = self.hi[i].min(other.hi[i]);
            if strict {
                // An open factor needs an overlap of positive length unless the
                // other factor is a point strictly inside it.
                if self.open && other.open {
                    lo < hi
                } else {
                    let (o, c) = if self.open { (self, other) } else { (other, self) };
                    if c.lo[i] == c.hi[i] {
                        o.lo[i] < c.lo[i] && c.lo[i] < o.hi[i]
                    } else {
                        lo < hi
                    }
                }
            } else {
                lo <= hi
            }
        })
    }

    /// Closed intersection of the closures; `None` if disjoint.
    pub fn closed_intersection(&self, other: &AxisBox) -> Option<AxisBox> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let l = self.lo[i].max(other.lo[i]);
            let h = self.hi[i].min(other.hi[i]);
            if l > h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some(AxisBox::closed(lo, hi))
    }

    pub fn hull(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
            open: self.open && other.open,
        }
    }

    pub fn hull_of(boxes: &[AxisBox]) -> Option<AxisBox> {
        let mut it = boxes.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| acc.hull(b)))
    }

    pub fn inflate(&self, r: f64) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().map(|v| v - r).collect(),
            hi: self.hi.iter().map(|v| v + r).collect(),
            open: self.open,
        }
    }

    /// Signed distance from the closure of `inner` to the complement of
    /// `self`: positive when `inner` sits inside with room to spare.
    pub fn containment_margin(&self, inner: &AxisBox) -> f64 {
        (0..self.dim())
            .map(|i| (inner.lo[i] - self.lo[i]).min(self.hi[i] - inner.hi[i]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from a point to the complement of the box (negative outside).
    pub fn point_margin(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| (x[i] - self.lo[i]).min(self.hi[i] - x[i]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }
}

/// Finite union of open boxes; the only open-set representation in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSet {
    pub boxes: Vec<AxisBox>,
}

impl OpenSet {
    pub fn from_box(b: AxisBox) -> Self {
        OpenSet { boxes: vec![b.as_open()] }
    }

    pub fn from_boxes(boxes: impl IntoIterator<Item = AxisBox>) -> Self {
        OpenSet {
            boxes: boxes.into_iter().map(|b| b.as_open()).collect(),
        }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains_point(x))
    }

    pub fn bounding_box(&self) -> Option<AxisBox> {
        AxisBox::hull_of(&self.boxes)
    }

    pub fn dim(&self) -> usize {
        self.boxes.first().map_or(0, |b| b.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_degenerate_box_is_empty() {
        let b = AxisBox::open(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert!(b.is_empty());
        assert!(!AxisBox::closed(vec![0.0], vec![0.0]).is_empty());
    }

    #[test]
    fn new_rejects_inverted_bounds() {
        assert!(AxisBox::new(vec![1.0], vec![0.0], false).is_err());
        assert!(AxisBox::new(vec![0.0], vec![1.0, 2.0], false).is_err());
    }

    #[test]
    fn open_intersection_needs_overlap() {
        let a = AxisBox::open(vec![-0.6], vec![0.0]);
        let b = AxisBox::open(vec![0.0], vec![0.6]);
        assert!(!a.intersects(&b));
        let p = AxisBox::point(&[0.0]);
        assert!(!a.intersects(&p));
        assert!(AxisBox::open(vec![-0.1], vec![0.1]).intersects(&p));
    }

    #[test]
    fn margin_signs() {
        let k = AxisBox::closed(vec![-0.5], vec![0.5]);
        assert!((k.containment_margin(&AxisBox::closed(vec![-0.1], vec![0.2])) - 0.3).abs() < 1e-15);
        assert!(k.containment_margin(&AxisBox::closed(vec![0.4], vec![0.7])) < 0.0);
    }
}
