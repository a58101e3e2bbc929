//! Exact maximum independent set on the conflict graph of a separation query.

use super::bits::Bits;

pub(crate) struct MisOutcome {
    pub set: Vec<usize>,
    pub exact: bool,
}

/// First-fit maximal independent set in index order.
pub(crate) fn greedy_independent_set(adj: &[Vec<u32>]) -> Vec<usize> {
    let mut blocked = vec![false; adj.len()];
    let mut out = Vec::new();
    for u in 0..adj.len() {
        if !blocked[u] {
            out.push(u);
            for &v in &adj[u] {
                blocked[v as usize] = true;
            }
        }
    }
    out
}

fn components(adj: &[Vec<u32>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            for &v in &adj[comp[i]] {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

struct Search<'a> {
    adj: Vec<Bits>,
    budget: &'a mut u64,
    exhausted: bool,
}

impl Search<'_> {
    // greedy clique partition of `p`; its size bounds any independent subset
    fn clique_cover(&self, p: &Bits) -> usize {
        let mut rest = p.clone();
        let mut count = 0;
        while let Some(v) = rest.first() {
            rest.clear(v);
            let mut cand = rest.and(&self.adj[v]);
            while let Some(w) = cand.first() {
                rest.clear(w);
                cand = cand.and(&self.adj[w]);
            }
            count += 1;
        }
        count
    }

    fn greedy(&self, mut p: Bits) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(v) = p.first() {
            out.push(v);
            p.clear(v);
            p.and_not_assign(&self.adj[v]);
        }
        out
    }

    /// Safe reductions: isolated and pendant vertices are taken, and a
    /// vertex whose closed neighborhood contains that of a neighbor is
    /// dropped (swapping it for that neighbor never hurts).
    fn reduce(&self, p: &mut Bits, taken: &mut Vec<usize>) {
        loop {
            let mut changed = false;
            let verts: Vec<usize> = p.iter().collect();
            for v in verts {
                if !p.get(v) {
                    continue;
                }
                let deg = self.adj[v].and_count(p);
                if deg <= 1 {
                    taken.push(v);
                    p.clear(v);
                    p.and_not_assign(&self.adj[v]);
                    changed = true;
                    continue;
                }
                let nbrs: Vec<usize> = self.adj[v].and(p).iter().collect();
                for u in nbrs {
                    if self.adj[v].masked_subset(p, u, &self.adj[u]) {
                        p.clear(u);
                        changed = true;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    fn split(&self, p: &Bits) -> Vec<Bits> {
        let mut rest = p.clone();
        let mut out = Vec::new();
        while let Some(s) = rest.first() {
            let mut comp = Bits::from_indices(p.len(), [s]);
            let mut frontier = comp.clone();
            while !frontier.is_empty() {
                let mut next = Bits::new(p.len());
                for x in frontier.iter() {
                    next.or_assign(&self.adj[x]);
                }
                let next = next.and(&rest).and_not(&comp);
                comp.or_assign(&next);
                frontier = next;
            }
            rest.and_not_assign(&comp);
            out.push(comp);
        }
        out
    }

    /// Maximum independent subset of `p` whenever it beats `lb`; otherwise
    /// some independent subset no larger than the optimum.
    fn solve(&mut self, mut p: Bits, lb: usize) -> Vec<usize> {
        if self.exhausted || *self.budget == 0 {
            self.exhausted = true;
            return self.greedy(p);
        }
        *self.budget -= 1;
        let mut taken = Vec::new();
        self.reduce(&mut p, &mut taken);
        if p.is_empty() {
            return taken;
        }
        let need = lb.saturating_sub(taken.len());
        let ub = self.clique_cover(&p);
        if ub <= need {
            return taken;
        }
        let comps = self.split(&p);
        if comps.len() > 1 {
            let ubs: Vec<usize> = comps.iter().map(|c| self.clique_cover(c)).collect();
            let total_ub: usize = ubs.iter().sum();
            for (c, u) in comps.into_iter().zip(ubs) {
                let lb_c = need.saturating_sub(total_ub - u);
                taken.extend(self.solve(c, lb_c));
            }
            return taken;
        }
        let mut pick = 0;
        let mut max_deg = 0;
        for v in p.iter() {
            let deg = self.adj[v].and_count(&p);
            if deg > max_deg {
                pick = v;
                max_deg = deg;
            }
        }
        let v = pick;
        let mut without_nbhd = p.and_not(&self.adj[v]);
        without_nbhd.clear(v);
        let mut best = self.solve(without_nbhd, need.saturating_sub(1));
        best.push(v);
        let mut without_v = p;
        without_v.clear(v);
        let alt = self.solve(without_v, need.max(best.len()));
        if alt.len() > best.len() {
            best = alt;
        }
        taken.extend(best);
        taken
    }
}

/// Branch and bound with reductions and component splitting; when the node
/// budget runs out the open subproblems are finished greedily.
pub(crate) fn max_independent_set(adj: &[Vec<u32>], budget: &mut u64) -> MisOutcome {
    let mut set = Vec::new();
    let mut exact = true;
    for comp in components(adj) {
        if comp.len() == 1 {
            set.push(comp[0]);
            continue;
        }
        let mut local = vec![usize::MAX; adj.len()];
        for (i, &v) in comp.iter().enumerate() {
            local[v] = i;
        }
        let k = comp.len();
        let ladj: Vec<Bits> = comp
            .iter()
            .map(|&v| Bits::from_indices(k, adj[v].iter().map(|&w| local[w as usize])))
            .collect();
        let ladj_lists: Vec<Vec<u32>> = ladj
            .iter()
            .map(|b| b.iter().map(|i| i as u32).collect())
            .collect();
        let mut search = Search {
            adj: ladj,
            budget: &mut *budget,
            exhausted: false,
        };
        let first = greedy_independent_set(&ladj_lists);
        let mut best = search.solve(Bits::full(k), first.len());
        if search.exhausted {
            exact = false;
        }
        if best.len() < first.len() {
            best = first;
        }
        set.extend(best.iter().map(|&i| comp[i]));
    }
    set.sort_unstable();
    MisOutcome { set, exact }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(adj: &[Vec<u32>]) -> usize {
        let n = adj.len();
        (0u32..1 << n)
            .filter(|&mask| {
                (0..n).all(|u| mask >> u & 1 == 0 || adj[u].iter().all(|&v| mask >> v & 1 == 0))
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn matches_brute_force_on_cycles() {
        for n in 3..12 {
            let adj: Vec<Vec<u32>> = (0..n)
                .map(|i| vec![((i + 1) % n) as u32, ((i + n - 1) % n) as u32])
                .collect();
            let mut budget = 1_000_000;
            let out = max_independent_set(&adj, &mut budget);
            assert!(out.exact);
            assert_eq!(out.set.len(), brute(&adj), "cycle {n}");
        }
    }
}
