//! Weighted set cover: lazy greedy plus an exact branch and bound.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::bits::Bits;

/// One candidate set over local element ids `0..n`.
#[derive(Clone, Debug)]
pub(crate) struct CoverSet {
    pub members: Vec<u32>,
    pub cost: f64,
    /// Tie-break data: smaller radius first, then lower center id.
    pub radius: f64,
    pub center: usize,
}

pub(crate) struct CoverOutcome {
    pub chosen: Vec<usize>,
    pub cost: f64,
    pub exact: bool,
}

const REL_TOL: f64 = 1e-12;

fn tol(best: f64) -> f64 {
    REL_TOL * best.abs().max(1.0)
}

/// Lexicographic (cost, count) comparison with a relative cost tolerance.
fn better(cost: f64, count: usize, best_cost: f64, best_count: usize) -> bool {
    let t = tol(best_cost);
    cost < best_cost - t || (cost <= best_cost + t && count < best_count)
}

#[derive(PartialEq)]
struct Key {
    ratio: f64,
    marginal: usize,
    radius: f64,
    center: usize,
    idx: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ratio
            .total_cmp(&o.ratio)
            .then(o.marginal.cmp(&self.marginal))
            .then(self.radius.total_cmp(&o.radius))
            .then(self.center.cmp(&o.center))
            .then(self.idx.cmp(&o.idx))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn key(s: &CoverSet, idx: usize, marginal: usize) -> Key {
    Key {
        ratio: s.cost / marginal as f64,
        marginal,
        radius: s.radius,
        center: s.center,
        idx,
    }
}

/// Greedy by cost per newly covered element. `subset` restricts the sets
/// considered; `elems` are the elements to cover.
fn greedy(sets: &[CoverSet], subset: &[usize], elems: &[usize], n: usize) -> Vec<usize> {
    let mut covered = vec![true; n];
    for &e in elems {
        covered[e] = false;
    }
    let mut left = elems.len();
    let marginal = |i: usize, covered: &[bool]| {
        sets[i]
            .members
            .iter()
            .filter(|&&e| !covered[e as usize])
            .count()
    };
    let mut heap: BinaryHeap<Reverse<Key>> = subset
        .iter()
        .filter_map(|&i| {
            let m = marginal(i, &covered);
            (m > 0).then(|| Reverse(key(&sets[i], i, m)))
        })
        .collect();
    let mut out = Vec::new();
    while left > 0 {
        let Some(Reverse(k)) = heap.pop() else { break };
        let m = marginal(k.idx, &covered);
        if m == 0 {
            continue;
        }
        if m != k.marginal {
            heap.push(Reverse(key(&sets[k.idx], k.idx, m)));
            continue;
        }
        for &e in &sets[k.idx].members {
            if !covered[e as usize] {
                covered[e as usize] = true;
                left -= 1;
            }
        }
        out.push(k.idx);
    }
    out
}

struct Search<'a> {
    /// Elements of each set, and sets of each element.
    sets: Vec<Bits>,
    elems: Vec<Bits>,
    cost: Vec<f64>,
    budget: &'a mut u64,
    exhausted: bool,
}

/// Best known `(cost, count)`; a solution must beat it to be returned.
#[derive(Clone, Copy, Debug)]
struct Bound {
    cost: f64,
    count: usize,
}

impl Bound {
    fn beaten_by(self, cost: f64, count: usize) -> bool {
        better(cost, count, self.cost, self.count)
    }
}

const REDUCE_LIMIT: usize = 1500;

impl Search<'_> {
    fn alive_of(&self, e: usize, alive: &Bits) -> Bits {
        self.elems[e].and(alive)
    }

    /// Forced sets, dominated sets and dominated elements, until stable.
    /// Returns `None` when some element has no set left.
    fn reduce(&self, u: &mut Bits, alive: &mut Bits, taken: &mut Vec<usize>) -> Option<()> {
        loop {
            let mut changed = false;
            let live: Vec<usize> = alive.iter().collect();
            for &s in &live {
                if self.sets[s].and_count(u) == 0 {
                    alive.clear(s);
                }
            }
            let elems: Vec<usize> = u.iter().collect();
            for &e in &elems {
                if !u.get(e) {
                    continue;
                }
                let a = self.alive_of(e, alive);
                match a.first() {
                    None => return None,
                    Some(s) if a.count() == 1 => {
                        taken.push(s);
                        u.and_not_assign(&self.sets[s]);
                        alive.clear(s);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if changed {
                continue;
            }
            let live: Vec<usize> = alive.iter().collect();
            if live.len() <= REDUCE_LIMIT {
                let inter: Vec<Bits> = live.iter().map(|&s| self.sets[s].and(u)).collect();
                for i in 0..live.len() {
                    for j in 0..live.len() {
                        if i == j || !alive.get(live[j]) || !alive.get(live[i]) {
                            continue;
                        }
                        let (ci, cj) = (self.cost[live[i]], self.cost[live[j]]);
                        // i is dropped when j covers as much for no more
                        let cheaper = cj < ci - tol(ci) || (cj <= ci + tol(ci) && (j < i || !inter[j].is_subset(&inter[i])));
                        if cheaper && inter[i].is_subset(&inter[j]) {
                            alive.clear(live[i]);
                            changed = true;
                            break;
                        }
                    }
                }
            }
            let elems: Vec<usize> = u.iter().collect();
            if elems.len() <= REDUCE_LIMIT {
                let lists: Vec<Bits> = elems.iter().map(|&e| self.alive_of(e, alive)).collect();
                for i in 0..elems.len() {
                    for j in 0..elems.len() {
                        if i == j || !u.get(elems[i]) || !u.get(elems[j]) {
                            continue;
                        }
                        // covering e_j covers e_i, so e_i needs no attention
                        let tie_ok = j < i || !lists[i].is_subset(&lists[j]);
                        if tie_ok && lists[j].is_subset(&lists[i]) {
                            u.clear(elems[i]);
                            changed = true;
                            break;
                        }
                    }
                }
            }
            if !changed {
                return Some(());
            }
        }
    }

    fn lower_bound(&self, u: &Bits, alive: &Bits) -> f64 {
        let live: Vec<usize> = alive.iter().collect();
        let mut ratio = vec![f64::INFINITY; self.cost.len()];
        for &s in &live {
            let k = self.sets[s].and_count(u);
            if k > 0 {
                ratio[s] = self.cost[s] / k as f64;
            }
        }
        u.iter()
            .map(|e| self.alive_of(e, alive).iter().map(|s| ratio[s]).fold(f64::INFINITY, f64::min))
            .sum()
    }

    fn split(&self, u: &Bits, alive: &Bits) -> Vec<Bits> {
        let mut rest = u.clone();
        let mut out = Vec::new();
        while let Some(e) = rest.first() {
            let mut comp = Bits::from_indices(u.len(), [e]);
            let mut frontier = comp.clone();
            while !frontier.is_empty() {
                let mut via = Bits::new(alive.len());
                for x in frontier.iter() {
                    via.or_assign(&self.elems[x]);
                }
                let mut reach = Bits::new(u.len());
                for s in via.and(alive).iter() {
                    reach.or_assign(&self.sets[s]);
                }
                let next = reach.and(&rest).and_not(&comp);
                comp.or_assign(&next);
                frontier = next;
            }
            rest.and_not_assign(&comp);
            out.push(comp);
        }
        out
    }

    /// An optimal cover of `u` by `alive` sets if one beats `bound`.
    fn solve(&mut self, mut u: Bits, mut alive: Bits, bound: Bound) -> Option<Vec<usize>> {
        if self.exhausted || *self.budget == 0 {
            self.exhausted = true;
            return None;
        }
        *self.budget -= 1;
        let mut taken = Vec::new();
        self.reduce(&mut u, &mut alive, &mut taken)?;
        let forced: f64 = taken.iter().map(|&s| self.cost[s]).sum();
        if u.is_empty() {
            return bound.beaten_by(forced, taken.len()).then_some(taken);
        }
        let lb = forced + self.lower_bound(&u, &alive);
        if lb > bound.cost + tol(bound.cost) || (lb >= bound.cost - tol(bound.cost) && taken.len() + 1 >= bound.count) {
            return None;
        }
        let comps = self.split(&u, &alive);
        if comps.len() > 1 {
            let lbs: Vec<f64> = comps.iter().map(|c| self.lower_bound(c, &alive)).collect();
            let total: f64 = lbs.iter().sum();
            for (c, l) in comps.into_iter().zip(lbs) {
                let room = bound.cost - forced - (total - l) + tol(bound.cost);
                let part = self.solve(c, alive.clone(), Bound { cost: room, count: usize::MAX })?;
                taken.extend(part);
            }
            let cost: f64 = taken.iter().map(|&s| self.cost[s]).sum();
            return bound.beaten_by(cost, taken.len()).then_some(taken);
        }
        let pick = u
            .iter()
            .min_by_key(|&e| (self.alive_of(e, &alive).count(), e))
            .expect("u is nonempty");
        let mut cands: Vec<usize> = self.alive_of(pick, &alive).iter().collect();
        let inter: Vec<usize> = cands.iter().map(|&s| self.sets[s].and_count(&u)).collect();
        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by(|&a, &b| {
            (self.cost[cands[a]] / inter[a] as f64)
                .total_cmp(&(self.cost[cands[b]] / inter[b] as f64))
                .then(inter[b].cmp(&inter[a]))
                .then(cands[a].cmp(&cands[b]))
        });
        cands = order.into_iter().map(|i| cands[i]).collect();
        let mut best: Option<Vec<usize>> = None;
        let mut cur = Bound {
            cost: bound.cost - forced,
            count: bound.count.saturating_sub(taken.len()),
        };
        for s in cands {
            let sub_bound = Bound {
                cost: cur.cost - self.cost[s],
                count: cur.count.saturating_sub(1),
            };
            if let Some(mut sub) = self.solve(u.and_not(&self.sets[s]), alive.clone(), sub_bound) {
                sub.push(s);
                let c: f64 = sub.iter().map(|&x| self.cost[x]).sum();
                cur = Bound { cost: c, count: sub.len() };
                best = Some(sub);
            }
            // later branches avoid `s`: covers containing it were just explored
            alive.clear(s);
            if self.exhausted {
                break;
            }
        }
        let mut sol = best?;
        sol.extend(taken);
        Some(sol)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Canonical order used for dominance: cheaper, then smaller radius,
/// then lower center, then lower index.
fn canonical(sets: &[CoverSet], a: usize, b: usize) -> Ordering {
    sets[a]
        .cost
        .total_cmp(&sets[b].cost)
        .then(sets[a].radius.total_cmp(&sets[b].radius))
        .then(sets[a].center.cmp(&sets[b].center))
        .then(a.cmp(&b))
}


/// Covers every element of `0..n`. The caller guarantees each element lies
/// in at least one set. Greedy when `exact` is false; otherwise exact until
/// the shared node budget is spent, after which the best cover found so far
/// (never worse than greedy) is returned with `exact = false`.
pub(crate) fn solve_set_cover(n: usize, sets: &[CoverSet], exact: bool, budget: &mut u64) -> CoverOutcome {
    let mut parent: Vec<usize> = (0..n).collect();
    for s in sets {
        if let Some((&first, rest)) = s.members.split_first() {
            let a = find(&mut parent, first as usize);
            for &m in rest {
                let b = find(&mut parent, m as usize);
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for e in 0..n {
        let r = find(&mut parent, e);
        if comp_of[r] == usize::MAX {
            comp_of[r] = comps.len();
            comps.push((Vec::new(), Vec::new()));
        }
        comps[comp_of[r]].0.push(e);
    }
    for (i, s) in sets.iter().enumerate() {
        if let Some(&first) = s.members.first() {
            let r = find(&mut parent, first as usize);
            comps[comp_of[r]].1.push(i);
        }
    }

    let mut chosen = Vec::new();
    let mut all_exact = true;
    for (elems, set_ids) in comps {
        let g = greedy(sets, &set_ids, &elems, n);
        if !exact {
            all_exact = false;
            chosen.extend(g);
            continue;
        }
        let (picked, ok) = exact_component(sets, &elems, set_ids, g, budget);
        all_exact &= ok;
        chosen.extend(picked);
    }
    chosen.sort_unstable();
    let cost = chosen.iter().map(|&i| sets[i].cost).sum();
    CoverOutcome {
        chosen,
        cost,
        exact: all_exact,
    }
}

fn exact_component(
    sets: &[CoverSet],
    elems: &[usize],
    set_ids: Vec<usize>,
    greedy_pick: Vec<usize>,
    budget: &mut u64,
) -> (Vec<usize>, bool) {
    if elems.len() == 1 {
        let best = set_ids
            .iter()
            .copied()
            .min_by(|&a, &b| canonical(sets, a, b))
            .expect("component has a set");
        return (vec![best], true);
    }
    let mut local = std::collections::BTreeMap::new();
    for (i, &e) in elems.iter().enumerate() {
        local.insert(e, i);
    }
    let k = elems.len();
    let mut set_ids = set_ids;
    set_ids.sort_by(|&a, &b| canonical(sets, a, b));
    let bits: Vec<Bits> = set_ids
        .iter()
        .map(|&s| Bits::from_indices(k, sets[s].members.iter().map(|m| local[&(*m as usize)])))
        .collect();
    let ns = set_ids.len();
    let mut elem_bits = vec![Bits::new(ns); k];
    for (i, b) in bits.iter().enumerate() {
        for e in b.iter() {
            elem_bits[e].set(i);
        }
    }
    let greedy_cost: f64 = greedy_pick.iter().map(|&i| sets[i].cost).sum();
    let mut search = Search {
        sets: bits,
        elems: elem_bits,
        cost: set_ids.iter().map(|&s| sets[s].cost).collect(),
        budget,
        exhausted: false,
    };
    let bound = Bound {
        cost: greedy_cost,
        count: greedy_pick.len(),
    };
    let found = search.solve(Bits::full(k), Bits::full(ns), bound);
    let exact = !search.exhausted;
    match found {
        Some(best) => (best.iter().map(|&li| set_ids[li]).collect(), exact),
        None => (greedy_pick, exact),
    }
}
