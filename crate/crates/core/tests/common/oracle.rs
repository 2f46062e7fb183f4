//! Closed-form interval oracles for the scalar fixtures, written without the
//! crate's geometry or reachability code.

/// Open interval `(lo, hi)`; infinite ends stand for "past the edge of X".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Open {
    pub lo: f64,
    pub hi: f64,
}

/// Fewest open intervals covering the closed interval `[a, b]`, by the
/// classic greedy sweep; `None` when some point stays uncovered.
pub fn greedy_open_cover(intervals: &[Open], a: f64, b: f64) -> Option<usize> {
    let mut point = a;
    let mut count = 0;
    loop {
        let reach = intervals
            .iter()
            .filter(|i| i.lo < point && point < i.hi)
            .map(|i| i.hi)
            .fold(f64::NEG_INFINITY, f64::max);
        if reach == f64::NEG_INFINITY {
            return None;
        }
        count += 1;
        if reach > b {
            return Some(count);
        }
        point = reach;
    }
}

/// Inputs `-2, -2 + 1/64, …, 2` shared by the scalar fixtures.
pub fn scalar_inputs() -> Vec<f64> {
    (0..=256).map(|k| -2.0 + k as f64 / 64.0).collect()
}

/// Minimum number of admissible open sets covering `[-1, 1]` for
/// `x' = 2x + u` and `K = [-0.5, 0.5]` at horizon `tau`.
///
/// After `tau` steps `x_tau = 2^tau x + c` where `c` ranges over the sums
/// `Σ 2^(tau-1-i) u_i`; each `c` admits the open interval where
/// `|x_tau| < 0.5 - delta`. Those intervals are the maximal admissible sets.
pub fn plant_a_n(tau: u32, delta: f64) -> Option<usize> {
    let inputs = scalar_inputs();
    let mut offsets: Vec<f64> = vec![0.0];
    for _ in 0..tau {
        let mut next: Vec<f64> = offsets
            .iter()
            .flat_map(|&c| inputs.iter().map(move |&u| 2.0 * c + u))
            .collect();
        next.sort_by(f64::total_cmp);
        next.dedup();
        offsets = next;
    }
    let gain = 2f64.powi(tau as i32);
    let half = 0.5 - delta;
    let intervals: Vec<Open> = offsets
        .iter()
        .map(|&c| Open {
            lo: (-half - c) / gain,
            hi: (half - c) / gain,
        })
        .collect();
    greedy_open_cover(&intervals, -1.0, 1.0)
}

/// Interval with independent endpoint closure flags.
#[derive(Debug, Clone, Copy)]
struct Span {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl Span {
    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    fn meet(&self, other: &Span) -> Span {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Span { lo, lo_closed, hi, hi_closed }
    }

    fn touches_after(&self, next: &Span) -> bool {
        next.lo < self.hi || (next.lo == self.hi && (self.hi_closed || next.lo_closed))
    }
}

/// Minimum robust cover size at horizon 1 for the scalar plant with a jump
/// at 0.3: `x' = 2x + u` on `[-1, 0.3]`, `2x - jump + u` on `[0.3, 1]`,
/// where the switching point obeys both branches.
///
/// An open interval `A` is admissible for `u` when every state of
/// `cl(A) ⊕ [-r, r]` inside X lands in `(-0.5 + delta, 0.5 - delta)` under
/// every branch owning it. The good set is split by branch, glued at 0.3,
/// then eroded by `r` away from the edges of X.
pub fn plant_c_robust_n1(jump: f64, r: f64, delta: f64) -> Option<usize> {
    let half = 0.5 - delta;
    let mut limits: Vec<Open> = Vec::new();
    for u in scalar_inputs() {
        let good = |shift: f64| Span {
            lo: (-half - u + shift) / 2.0,
            lo_closed: false,
            hi: (half - u + shift) / 2.0,
            hi_closed: false,
        };
        let left = good(0.0).meet(&Span { lo: -1.0, lo_closed: true, hi: 0.3, hi_closed: false });
        let right = good(jump).meet(&Span { lo: 0.3, lo_closed: false, hi: 1.0, hi_closed: true });
        let switch_ok = [good(0.0), good(jump)].iter().all(|s| s.lo < 0.3 && 0.3 < s.hi);
        let mut parts: Vec<Span> = Vec::new();
        for s in [left, right] {
            if !s.is_empty() {
                parts.push(s);
            }
        }
        if switch_ok {
            parts.push(Span { lo: 0.3, lo_closed: true, hi: 0.3, hi_closed: true });
        }
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Span> = Vec::new();
        for p in parts {
            match merged.last_mut() {
                Some(m) if m.touches_after(&p) => {
                    if p.hi > m.hi || (p.hi == m.hi && p.hi_closed) {
                        m.hi = p.hi;
                        m.hi_closed = p.hi_closed;
                    }
                }
                _ => merged.push(p),
            }
        }
        for m in merged {
            let lo = if m.lo == -1.0 && m.lo_closed { f64::NEG_INFINITY } else { m.lo + r };
            let hi = if m.hi == 1.0 && m.hi_closed { f64::INFINITY } else { m.hi - r };
            if lo < hi {
                limits.push(Open { lo, hi });
            }
        }
    }
    greedy_open_cover(&limits, -1.0, 1.0)
}

/// Smallest singular value of the real 2×2 matrix `[[a, b], [c, d]]`.
pub fn sigma_min_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    ((s - (s * s - 4.0 * det * det).sqrt()) / 2.0).sqrt()
}
