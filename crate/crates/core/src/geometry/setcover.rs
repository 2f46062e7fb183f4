//! Minimum set cover over a finite universe.
//!
//! Three solvers share one instance type:
//! - an interval sweep, exact whenever the items are linearly ordered and
//!   every set covers a contiguous run of them (any 1-D box family);
//! - branch-and-bound with item/set dominance reductions, exact, used when
//!   the reduced instance has at most `exact_threshold` sets;
//! - greedy with redundancy elimination plus a packing lower bound.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverMethod {
    IntervalSweep,
    BranchAndBound,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct SetCoverInstance {
    pub n_items: usize,
    /// Items covered by each set, sorted ascending.
    pub sets: Vec<Vec<u32>>,
    /// Items carry a linear order in which contiguity is meaningful.
    pub ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCoverSolution {
    /// Indices into `sets`, ascending.
    pub chosen: Vec<usize>,
    pub exact: bool,
    pub lower_bound: usize,
    pub method: CoverMethod,
}

/// Returns `Err(item)` naming an item no set covers.
pub fn solve(inst: &SetCoverInstance, exact_threshold: usize) -> Result<SetCoverSolution, usize> {
    let mut owners: Vec<Vec<u32>> = vec![Vec::new(); inst.n_items];
    for (s, items) in inst.sets.iter().enumerate() {
        for &i in items {
            owners[i as usize].push(s as u32);
        }
    }
    if let Some(bad) = owners.iter().position(|o| o.is_empty()) {
        return Err(bad);
    }
    if inst.n_items == 0 {
        return Ok(SetCoverSolution {
            chosen: vec![],
            exact: true,
            lower_bound: 0,
            method: CoverMethod::IntervalSweep,
        });
    }
    if inst.ordered {
        if let Some(sol) = interval_sweep(inst) {
            return Ok(sol);
        }
    }
    let greedy_sol = greedy(inst);
    let reduced = Reduced::build(inst, &owners);
    if let Some(reduced) = reduced {
        if reduced.sets.len() <= exact_threshold {
            let best = reduced.branch_and_bound(greedy_sol.len());
            let chosen = match best {
                Some(mut b) => {
                    b.sort_unstable();
                    b
                }
                None => greedy_sol,
            };
            let n = chosen.len();
            return Ok(SetCoverSolution {
                chosen,
                exact: true,
                lower_bound: n,
                method: CoverMethod::BranchAndBound,
            });
        }
    }
    let lb = packing_lower_bound(&owners);
    let exact = lb == greedy_sol.len();
    Ok(SetCoverSolution {
        lower_bound: lb,
        exact,
        chosen: greedy_sol,
        method: CoverMethod::Greedy,
    })
}

fn interval_sweep(inst: &SetCoverInstance) -> Option<SetCoverSolution> {
    let mut runs: Vec<(u32, u32, usize)> = Vec::with_capacity(inst.sets.len());
    for (s, items) in inst.sets.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        let (a, b) = (items[0], *items.last().unwrap());
        if (b - a) as usize + 1 != items.len() {
            return None;
        }
        runs.push((a, b, s));
    }
    runs.sort_unstable_by_key(|&(a, b, s)| (a, Reverse(b), s));
    let n = inst.n_items as u32;
    let mut chosen = Vec::new();
    let mut pos = 0u32;
    let mut k = 0;
    let mut best: Option<(u32, usize)> = None;
    while pos < n {
        while k < runs.len() && runs[k].0 <= pos {
            let (_, b, s) = runs[k];
            if best.is_none_or(|(bb, bs)| b > bb || (b == bb && s < bs)) {
                best = Some((b, s));
            }
            k += 1;
        }
        match best {
            Some((b, s)) if b >= pos => {
                chosen.push(s);
                pos = b + 1;
            }
            _ => return None,
        }
    }
    chosen.sort_unstable();
    let n = chosen.len();
    Some(SetCoverSolution {
        chosen,
        exact: true,
        lower_bound: n,
        method: CoverMethod::IntervalSweep,
    })
}

/// Greedy max-gain selection followed by removal of redundant picks.
pub fn greedy(inst: &SetCoverInstance) -> Vec<usize> {
    let mut covered = vec![false; inst.n_items];
    let mut remaining = inst.n_items;
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = inst
        .sets
        .iter()
        .enumerate()
        .map(|(s, it)| (it.len(), Reverse(s)))
        .collect();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let Some((gain, Reverse(s))) = heap.pop() else { break };
        let fresh = inst.sets[s].iter().filter(|&&i| !covered[i as usize]).count();
        if fresh == 0 {
            continue;
        }
        if fresh < gain {
            heap.push((fresh, Reverse(s)));
            continue;
        }
        for &i in &inst.sets[s] {
            if !covered[i as usize] {
                covered[i as usize] = true;
                remaining -= 1;
            }
        }
        chosen.push(s);
    }
    // Drop picks whose items are all covered elsewhere, latest first.
    let mut count = vec![0u32; inst.n_items];
    for &s in &chosen {
        for &i in &inst.sets[s] {
            count[i as usize] += 1;
        }
    }
    let mut keep = vec![true; chosen.len()];
    for k in (0..chosen.len()).rev() {
        let s = chosen[k];
        if inst.sets[s].iter().all(|&i| count[i as usize] > 1) {
            keep[k] = false;
            for &i in &inst.sets[s] {
                count[i as usize] -= 1;
            }
        }
    }
    let mut out: Vec<usize> = chosen
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    out.sort_unstable();
    out
}

/// Size of a greedily built family of items no two of which share a set.
pub fn packing_lower_bound(owners: &[Vec<u32>]) -> usize {
    let mut order: Vec<usize> = (0..owners.len()).collect();
    order.sort_by_key(|&i| (owners[i].len(), i));
    let n_sets = owners.iter().flatten().map(|&s| s as usize + 1).max().unwrap_or(0);
    let mut used = vec![false; n_sets];
    let mut count = 0;
    for i in order {
        if owners[i].iter().all(|&s| !used[s as usize]) {
            for &s in &owners[i] {
                used[s as usize] = true;
            }
            count += 1;
        }
    }
    count
}

type Bits = Vec<u64>;

fn bits_new(n: usize) -> Bits {
    vec![0; n.div_ceil(64)]
}

fn bit_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bit_get(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn is_subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Instance after dominance reductions, with bitset rows.
struct Reduced {
    /// Original set index per reduced set.
    sets: Vec<usize>,
    rows: Vec<Bits>,
    /// Per reduced item, reduced sets covering it.
    owners: Vec<Vec<usize>>,
    n_items: usize,
}

impl Reduced {
    const MAX_ITEMS: usize = 20_000;
    const MAX_SETS: usize = 400;

    fn build(inst: &SetCoverInstance, owners: &[Vec<u32>]) -> Option<Reduced> {
        // Items with identical or superset owner lists are implied by others.
        let mut item_keys: Vec<&Vec<u32>> = owners.iter().collect();
        item_keys.sort();
        item_keys.dedup();
        if item_keys.len() > Self::MAX_ITEMS {
            return None;
        }
        let m = inst.sets.len();
        let mut item_bits: Vec<Bits> = item_keys
            .iter()
            .map(|o| {
                let mut b = bits_new(m);
                for &s in o.iter() {
                    bit_set(&mut b, s as usize);
                }
                b
            })
            .collect();
        let mut order: Vec<usize> = (0..item_bits.len()).collect();
        order.sort_by_key(|&i| item_keys[i].len());
        let mut kept: Vec<usize> = Vec::new();
        for &i in &order {
            if !kept.iter().any(|&k| is_subset(&item_bits[k], &item_bits[i])) {
                kept.push(i);
            }
        }
        let items: Vec<Bits> = kept.iter().map(|&k| std::mem::take(&mut item_bits[k])).collect();
        let n_items = items.len();
        // Set rows over the kept items.
        let mut rows: Vec<Bits> = vec![bits_new(n_items); m];
        for (j, ib) in items.iter().enumerate() {
            for (s, row) in rows.iter_mut().enumerate() {
                if bit_get(ib, s) {
                    bit_set(row, j);
                }
            }
        }
        let live: Vec<usize> = (0..m).filter(|&s| rows[s].iter().any(|w| *w != 0)).collect();
        if live.len() > Self::MAX_SETS {
            return None;
        }
        // Drop sets dominated by another; on ties keep the lower index.
        let mut alive = vec![true; m];
        for &a in &live {
            for &b in &live {
                if a != b && alive[b] && is_subset(&rows[a], &rows[b]) && (rows[a] != rows[b] || b < a) {
                    alive[a] = false;
                    break;
                }
            }
        }
        let sets: Vec<usize> = live.into_iter().filter(|&s| alive[s]).collect();
        let rows: Vec<Bits> = sets.iter().map(|&s| rows[s].clone()).collect();
        let mut owners = vec![Vec::new(); n_items];
        for (r, row) in rows.iter().enumerate() {
            for (j, o) in owners.iter_mut().enumerate() {
                if bit_get(row, j) {
                    o.push(r);
                }
            }
        }
        for o in owners.iter_mut() {
            o.sort_by_key(|&r| (Reverse(rows[r].iter().map(|w| w.count_ones()).sum::<u32>()), sets[r]));
        }
        Some(Reduced {
            sets,
            rows,
            owners,
            n_items,
        })
    }

    fn branch_and_bound(&self, incumbent: usize) -> Option<Vec<usize>> {
        let max_size = self
            .rows
            .iter()
            .map(|r| r.iter().map(|w| w.count_ones() as usize).sum::<usize>())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut best: Option<Vec<usize>> = None;
        let mut best_len = incumbent;
        let mut stack = Vec::new();
        let covered = bits_new(self.n_items);
        self.dfs(&covered, &mut stack, &mut best, &mut best_len, max_size);
        best.map(|b| b.into_iter().map(|r| self.sets[r]).collect())
    }

    fn dfs(
        &self,
        covered: &Bits,
        stack: &mut Vec<usize>,
        best: &mut Option<Vec<usize>>,
        best_len: &mut usize,
        max_size: usize,
    ) {
        let uncovered = self.n_items - covered.iter().map(|w| w.count_ones() as usize).sum::<usize>();
        if uncovered == 0 {
            if stack.len() < *best_len {
                *best_len = stack.len();
                *best = Some(stack.clone());
            }
            return;
        }
        // The incumbent is already a cover, so only strict improvements count.
        if stack.len() + uncovered.div_ceil(max_size) >= *best_len {
            return;
        }
        // Branch on the uncovered item with the fewest owners.
        let item = (0..self.n_items)
            .filter(|&j| !bit_get(covered, j))
            .min_by_key(|&j| (self.owners[j].len(), j))
            .unwrap();
        for &r in &self.owners[item] {
            let next: Bits = covered.iter().zip(&self.rows[r]).map(|(a, b)| a | b).collect();
            stack.push(r);
            self.dfs(&next, stack, best, best_len, max_size);
            stack.pop();
        }
    }
}
