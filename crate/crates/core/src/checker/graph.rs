//! Compact transition graph plus the SCC and longest-path passes used for
//! liveness and round bounds.

/// Edge closes a round.
pub(crate) const ROUND: u32 = 1 << 31;
/// Edge stays inside the first phase without reaching a milestone.
pub(crate) const PLATEAU: u32 = 1 << 30;
pub(crate) const INDEX: u32 = PLATEAU - 1;

/// Successor lists in CSR layout. State `i` owns
/// `edges[offsets[i]..offsets[i + 1]]`.
#[derive(Default)]
pub(crate) struct Graph {
    pub offsets: Vec<u64>,
    pub edges: Vec<u32>,
}

impl Graph {
    pub fn new() -> Self {
        Self { offsets: vec![0], edges: Vec::new() }
    }

    /// Closes the successor list of the next state.
    pub fn seal(&mut self) {
        self.offsets.push(self.edges.len() as u64);
    }

    /// States with sealed successor lists.
    pub fn sealed(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn out(&self, u: usize) -> &[u32] {
        if u + 1 >= self.offsets.len() {
            return &[];
        }
        &self.edges[self.offsets[u] as usize..self.offsets[u + 1] as usize]
    }
}

pub(crate) struct Components {
    /// Component of each state. Components are numbered in completion
    /// order, so every edge leads to a component with an equal or smaller id.
    pub comp: Vec<u32>,
    pub count: usize,
}

/// Tarjan's algorithm over the edges accepted by `keep`, iteratively.
pub(crate) fn components(graph: &Graph, states: usize, keep: impl Fn(u32) -> bool) -> Components {
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; states];
    let mut low = vec![0u32; states];
    let mut comp = vec![UNSEEN; states];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut next_index = 0u32;
    let mut count = 0usize;

    for root in 0..states {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root as u32, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root as u32);

        while let Some(&(u, mut pos)) = call.last() {
            let out = graph.out(u as usize);
            let mut child = None;
            while pos < out.len() {
                let e = out[pos];
                pos += 1;
                if !keep(e) {
                    continue;
                }
                let v = (e & INDEX) as usize;
                if index[v] == UNSEEN {
                    child = Some(v);
                    break;
                } else if comp[v] == UNSEEN {
                    low[u as usize] = low[u as usize].min(index[v]);
                }
            }
            call.last_mut().expect("frame").1 = pos;
            if let Some(v) = child {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v as u32);
                call.push((v as u32, 0));
                continue;
            }
            call.pop();
            let u = u as usize;
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[u]);
            }
            if low[u] == index[u] {
                loop {
                    let w = stack.pop().expect("tarjan stack") as usize;
                    comp[w] = count as u32;
                    if w == u {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    Components { comp, count }
}

/// An edge accepted by `keep` that closes a round inside a strongly
/// connected component, if any.
pub(crate) fn round_cycle(graph: &Graph, comps: &Components, keep: impl Fn(u32) -> bool) -> Option<(usize, usize)> {
    (0..graph.sealed()).find_map(|u| {
        graph.out(u).iter().find_map(|&e| {
            let v = (e & INDEX) as usize;
            (keep(e) && e & ROUND != 0 && comps.comp[u] == comps.comp[v]).then_some((u, v))
        })
    })
}

/// Longest round-weighted path from every state over edges accepted by
/// `keep`. Requires that no kept round edge lies on a cycle.
pub(crate) fn longest_rounds(graph: &Graph, comps: &Components, keep: impl Fn(u32) -> bool) -> Vec<u64> {
    let states = comps.comp.len();
    // States grouped by component, components in completion order.
    let mut start = vec![0usize; comps.count + 1];
    for &c in &comps.comp {
        start[c as usize + 1] += 1;
    }
    for c in 0..comps.count {
        start[c + 1] += start[c];
    }
    let mut fill = start.clone();
    let mut order = vec![0u32; states];
    for (u, &c) in comps.comp.iter().enumerate() {
        order[fill[c as usize]] = u as u32;
        fill[c as usize] += 1;
    }

    let mut best_comp = vec![0u64; comps.count];
    for c in 0..comps.count {
        let mut best = 0;
        for &u in &order[start[c]..start[c + 1]] {
            for &e in graph.out(u as usize) {
                if !keep(e) {
                    continue;
                }
                let d = comps.comp[(e & INDEX) as usize] as usize;
                if d != c {
                    best = best.max(best_comp[d] + u64::from(e & ROUND != 0));
                }
            }
        }
        best_comp[c] = best;
    }
    comps.comp.iter().map(|&c| best_comp[c as usize]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(adj: &[&[u32]]) -> Graph {
        let mut g = Graph::new();
        for out in adj {
            g.edges.extend_from_slice(out);
            g.seal();
        }
        g
    }

    #[test]
    fn dag_longest_path() {
        // 0 -> 1 -> 3, 0 -> 2 -> 3, round edges on 0->1 and 1->3.
        let g = graph(&[&[1 | ROUND, 2], &[3 | ROUND], &[3], &[]]);
        let c = components(&g, 4, |_| true);
        assert_eq!(c.count, 4);
        assert!(round_cycle(&g, &c, |_| true).is_none());
        assert_eq!(longest_rounds(&g, &c, |_| true), vec![2, 1, 0, 0]);
    }

    #[test]
    fn zero_weight_cycle_is_harmless() {
        let g = graph(&[&[1], &[0, 2 | ROUND], &[]]);
        let c = components(&g, 3, |_| true);
        assert_eq!(c.count, 2);
        assert!(round_cycle(&g, &c, |_| true).is_none());
        assert_eq!(longest_rounds(&g, &c, |_| true), vec![1, 1, 0]);
    }

    #[test]
    fn round_cycle_is_found() {
        let g = graph(&[&[1], &[2], &[1 | ROUND]]);
        let c = components(&g, 3, |_| true);
        assert_eq!(round_cycle(&g, &c, |_| true), Some((2, 1)));
        // Filtering the round edge out breaks the cycle.
        let c = components(&g, 3, |e| e & ROUND == 0);
        assert!(round_cycle(&g, &c, |e| e & ROUND == 0).is_none());
    }
}
