//! Brute-force versions of the structural queries, built from bit masks
//! without the library's own helpers. Each check returns the first
//! disagreement as an error.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ringgather_core::observation::view_at;
use ringgather_core::ring::{self, Configuration, SymmetryClass};

pub type Check = fn(usize, u32) -> Result<(), String>;

pub const CHECKS: [(&str, Check); 6] = [
    ("holes", holes),
    ("node_blocks", node_blocks),
    ("d_blocks", d_blocks),
    ("classify_symmetry", symmetry),
    ("view_at", views),
    ("view multiplicity", view_multiplicity),
];

/// Every non-empty pattern on 3..=max_n nodes.
pub fn patterns(max_n: usize) -> impl Iterator<Item = (usize, u32)> {
    (3..=max_n).flat_map(|n| (1u32..1 << n).map(move |m| (n, m)))
}

pub fn config(n: usize, mask: u32) -> Configuration {
    let nodes: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
    Configuration::from_occupied(n, &nodes).unwrap()
}

fn occ(n: usize, mask: u32, i: usize) -> bool {
    mask >> (i % n) & 1 == 1
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, n: usize, mask: u32, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what} n={n} mask={mask:0n$b}: got {got:?}, want {want:?}"))
    }
}

/// Maximal runs of nodes with the given occupancy, as (start, length).
fn runs(n: usize, mask: u32, want: bool) -> BTreeSet<(usize, usize)> {
    if (0..n).all(|i| occ(n, mask, i) == want) {
        return BTreeSet::from([(0, n)]);
    }
    let mut out = BTreeSet::new();
    for start in 0..n {
        if occ(n, mask, start) == want && occ(n, mask, start + n - 1) != want {
            let len = (0..n).take_while(|&j| occ(n, mask, start + j) == want).count();
            out.insert((start, len));
        }
    }
    out
}

/// Distances to successive occupied nodes walking one way round from `v`.
fn walk(n: usize, mask: u32, v: usize, cw: bool) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut at, mut dist) = (v, 0);
    loop {
        at = if cw { (at + 1) % n } else { (at + n - 1) % n };
        dist += 1;
        if occ(n, mask, at) {
            out.push(dist);
            dist = 0;
            if at == v {
                return out;
            }
        }
    }
}

fn is_periodic(n: usize, mask: u32) -> bool {
    (1..n).any(|r| (0..n).all(|i| occ(n, mask, i) == occ(n, mask, i + r)))
}

pub fn holes(n: usize, mask: u32) -> Result<(), String> {
    let got: BTreeSet<(usize, usize)> =
        ring::holes(&config(n, mask)).map_err(|e| e.to_string())?.iter().map(|h| (h.start, h.size)).collect();
    let want = if mask.count_ones() as usize == n { BTreeSet::new() } else { runs(n, mask, false) };
    expect("holes", n, mask, got, want)
}

pub fn node_blocks(n: usize, mask: u32) -> Result<(), String> {
    let got: BTreeSet<(usize, usize)> =
        ring::node_blocks(&config(n, mask)).map_err(|e| e.to_string())?.iter().map(|b| (b.start, b.size)).collect();
    expect("node_blocks", n, mask, got, runs(n, mask, true))
}

pub fn d_blocks(n: usize, mask: u32) -> Result<(), String> {
    let occupied: Vec<usize> = (0..n).filter(|&i| occ(n, mask, i)).collect();
    let w = occupied.len();
    if w < 2 {
        return expect("d_blocks undefined", n, mask, ring::d_blocks(&config(n, mask)).is_err(), true);
    }
    let gap = |i: usize| (occupied[(i + 1) % w] + n - occupied[i]) % n;
    let d = (0..w).map(gap).min().unwrap();

    // Robots joined by a gap of exactly d share a label.
    let mut label: Vec<usize> = (0..w).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..w {
            let j = (i + 1) % w;
            if gap(i) == d && label[i] != label[j] {
                let m = label[i].min(label[j]);
                label[i] = m;
                label[j] = m;
                changed = true;
            }
        }
    }
    let mut classes: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for i in 0..w {
        classes.entry(label[i]).or_default().insert(occupied[i]);
    }
    let want_blocks: BTreeSet<BTreeSet<usize>> = classes.values().filter(|s| s.len() >= 2).cloned().collect();
    let want_isolated: BTreeSet<usize> = classes.values().filter(|s| s.len() == 1).flatten().copied().collect();

    let c = config(n, mask);
    let layout = ring::d_blocks(&c).map_err(|e| e.to_string())?;
    expect("d", n, mask, layout.d, d)?;
    expect("inter_distance", n, mask, ring::inter_distance(&c).ok(), Some(d))?;
    let got_blocks: BTreeSet<BTreeSet<usize>> =
        layout.blocks.iter().map(|b| b.members.iter().copied().collect()).collect();
    expect("d.blocks", n, mask, got_blocks, want_blocks)?;
    expect("isolated", n, mask, layout.isolated.iter().copied().collect::<BTreeSet<_>>(), want_isolated)?;
    for b in layout.blocks.iter().filter(|b| b.members.len() < w) {
        for pair in b.members.windows(2) {
            expect("member spacing", n, mask, (pair[1] + n - pair[0]) % n, d)?;
        }
    }
    Ok(())
}

pub fn symmetry(n: usize, mask: u32) -> Result<(), String> {
    let got = ring::classify_symmetry(&config(n, mask));
    let axis = (0..n).find(|&t| (0..n).all(|i| occ(n, mask, i) == occ(n, mask, (t + n - i) % n)));
    let want = match (is_periodic(n, mask), axis) {
        (true, _) => SymmetryClass::Periodic,
        (false, Some(t)) => SymmetryClass::Symmetric { reflection: t },
        (false, None) => SymmetryClass::Rigid,
    };
    expect("classify_symmetry", n, mask, got, want)
}

pub fn views(n: usize, mask: u32) -> Result<(), String> {
    let c = config(n, mask);
    for v in (0..n).filter(|&v| occ(n, mask, v)) {
        let (cw, ccw) = (walk(n, mask, v, true), walk(n, mask, v, false));
        let view = view_at(&c, v).map_err(|e| e.to_string())?;
        expect("view", n, mask, view.sequence, cw.clone().max(ccw.clone()))?;
        expect("view symmetric", n, mask, view.symmetric, cw == ccw)?;
        expect("view multiplicity bit", n, mask, view.multiplicity, false)?;
    }
    Ok(())
}

/// Rigid patterns give every robot its own view; symmetric non-periodic
/// patterns share each view between at most two robots.
pub fn view_multiplicity(n: usize, mask: u32) -> Result<(), String> {
    if is_periodic(n, mask) {
        return Ok(());
    }
    let c = config(n, mask);
    let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for v in c.occupied_nodes() {
        *count.entry(view_at(&c, v).map_err(|e| e.to_string())?.sequence).or_default() += 1;
    }
    let most = count.values().copied().max().unwrap();
    let limit = if ring::classify_symmetry(&c) == SymmetryClass::Rigid { 1 } else { 2 };
    if most > limit {
        return Err(format!("n={n} mask={mask:0n$b}: {most} robots share a view"));
    }
    Ok(())
}
