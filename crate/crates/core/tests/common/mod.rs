//! Brute-force oracles. They share no enumeration code with the library
//! beyond `Tree::children`, `Vertex::father` and vertex weights.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_traits::{Signed, Zero};

use cztree::scalar::{int, Scalar};
use cztree::{FinFunc, Tree, Vertex};

pub fn tree(m: u32) -> Tree {
    Tree::new(m).unwrap()
}

/// Depth of `v` below `a`, found by climbing at most `max` fathers.
pub fn depth_by_walk(v: &Vertex, a: &Vertex, max: u64) -> Option<u64> {
    let mut cur = v.clone();
    for d in 0..=max {
        if &cur == a {
            return Some(d);
        }
        cur = cur.father();
    }
    None
}

pub fn ancestor_by_walk(v: &Vertex, t: u64) -> Vertex {
    (0..t).fold(v.clone(), |cur, _| cur.father())
}

/// Members of `root`'s subtree at depths `lo..=hi`, breadth first through
/// `Tree::children`.
pub fn enumerate_below(tree: &Tree, root: &Vertex, lo: u64, hi: u64) -> Vec<Vertex> {
    let mut out = Vec::new();
    let mut layer = vec![root.clone()];
    for d in 0..=hi {
        if d >= lo {
            out.extend(layer.iter().cloned());
        }
        if d < hi {
            layer = layer.iter().flat_map(|v| tree.children(v)).collect();
        }
    }
    out
}

/// Per-depth vertex counts below `root`, by visiting every vertex.
pub fn count_below(tree: &Tree, root: &Vertex, hi: u64) -> Vec<u64> {
    let mut counts = vec![0u64; hi as usize + 1];
    let mut stack = vec![(root.clone(), 0u64)];
    while let Some((v, d)) = stack.pop() {
        counts[d as usize] += 1;
        if d < hi {
            for digit in 0..tree.m() as u8 {
                stack.push((tree.child(&v, digit), d + 1));
            }
        }
    }
    counts
}

pub fn mass(tree: &Tree, vs: &[Vertex]) -> Scalar {
    vs.iter().fold(Scalar::zero(), |acc, v| acc + tree.weight(v))
}

/// `(lo, hi)` depth range of a CZ set of height `h >= 1`.
pub fn cz_depths(h: u64) -> (u64, u64) {
    (h.div_ceil(2), 4 * h - 1)
}

/// Sum over depths `lo..=hi` of (vertices at that depth) times their weight.
pub fn band_mass(tree: &Tree, root: &Vertex, lo: u64, hi: u64) -> Scalar {
    let m = int(tree.m() as i64);
    let mut total = Scalar::zero();
    let mut count = Scalar::from_integer(1.into());
    for d in 0..=hi {
        if d >= lo {
            total += &count * tree.level_weight(root.level() - d as i64);
        }
        count *= &m;
    }
    total
}

/// Support of a function with each vertex's ancestor chain, found by
/// climbing fathers: `chain[d]` is the ancestor `d` levels up.
pub struct Chains {
    items: Vec<(Scalar, Scalar, Vec<Vertex>)>,
}

impl Chains {
    pub fn new(tree: &Tree, f: &FinFunc, height: u64) -> Chains {
        let items = f
            .iter()
            .map(|(v, c)| {
                let mut chain = vec![v.clone()];
                for _ in 0..height {
                    let up = chain.last().unwrap().father();
                    chain.push(up);
                }
                (c.clone(), tree.weight(v), chain)
            })
            .collect();
        Chains { items }
    }

    /// `(value, weight, depth below root)` for support vertices below `root`.
    fn below<'a>(&'a self, root: &'a Vertex) -> impl Iterator<Item = (&'a Scalar, &'a Scalar, u64)> + 'a {
        self.items.iter().filter_map(move |(c, w, chain)| {
            let d = chain.iter().position(|a| a == root)?;
            Some((c, w, d as u64))
        })
    }

    fn ancestors(&self, t: u64) -> impl Iterator<Item = &Vertex> + '_ {
        self.items.iter().map(move |(_, _, chain)| &chain[t as usize])
    }
}

/// `|x|^q`, exactly for `q = 1, 2`.
fn dev(x: &Scalar, q: u32) -> Scalar {
    match q {
        1 => x.abs(),
        2 => x * x,
        _ => unreachable!("exact oracle handles q = 1, 2"),
    }
}

/// Oscillation of `f` over the vertices `lo..=hi` below `root`: the
/// value for `q = 1`, its square for `q = 2`.
pub fn oscillation_oracle(tree: &Tree, chains: &Chains, root: &Vertex, lo: u64, hi: u64, q: u32) -> Scalar {
    let mu = band_mass(tree, root, lo, hi);
    let inside: Vec<(&Scalar, &Scalar)> = chains
        .below(root)
        .filter(|&(_, _, d)| lo <= d && d <= hi)
        .map(|(c, w, _)| (c, w))
        .collect();
    let mass_in = inside.iter().fold(Scalar::zero(), |acc, (_, w)| acc + *w);
    let avg = inside.iter().fold(Scalar::zero(), |acc, (c, w)| acc + *c * *w) / &mu;
    let on_support = inside
        .iter()
        .fold(Scalar::zero(), |acc, (c, w)| acc + dev(&(*c - &avg), q) * *w);
    (on_support + dev(&avg, q) * (&mu - mass_in)) / mu
}

/// `q`-oscillation in floating point for any `q >= 1`.
pub fn oscillation_oracle_f64(tree: &Tree, chains: &Chains, root: &Vertex, lo: u64, hi: u64, q: f64) -> f64 {
    let f = |x: &Scalar| cztree::scalar::to_f64(x);
    let mu = f(&band_mass(tree, root, lo, hi));
    let inside: Vec<(f64, f64)> = chains
        .below(root)
        .filter(|&(_, _, d)| lo <= d && d <= hi)
        .map(|(c, w, _)| (f(c), f(w)))
        .collect();
    let mass_in: f64 = inside.iter().map(|(_, w)| w).sum();
    let avg = inside.iter().map(|(c, w)| c * w).sum::<f64>() / mu;
    let on_support: f64 = inside.iter().map(|(c, w)| (c - avg).abs().powf(q) * w).sum();
    ((on_support + avg.abs().powf(q) * (mu - mass_in)) / mu).powf(1.0 / q)
}

/// Same quantity as [`oscillation_oracle`] by visiting every member; only
/// for small sets.
pub fn oscillation_by_members(tree: &Tree, f: &FinFunc, root: &Vertex, lo: u64, hi: u64, q: u32) -> Scalar {
    let members = enumerate_below(tree, root, lo, hi);
    let mu = mass(tree, &members);
    let avg = members
        .iter()
        .fold(Scalar::zero(), |acc, v| acc + f.get(v) * tree.weight(v))
        / &mu;
    let total = members
        .iter()
        .fold(Scalar::zero(), |acc, v| acc + dev(&(f.get(v) - &avg), q) * tree.weight(v));
    total / mu
}

/// Heights `h` of CZ sets whose depth range contains `t`.
fn cz_heights(t: u64) -> impl Iterator<Item = u64> {
    (1..=2 * t).filter(move |&h| {
        let (lo, hi) = cz_depths(h);
        lo <= t && t <= hi
    })
}

/// `f^{#,q}(x)` (squared for `q = 2`) over CZ sets rooted at most `span`
/// levels above `x`, with no early stopping.
pub fn sharp_oracle(tree: &Tree, chains: &Chains, q: u32, x: &Vertex, span: u64) -> Scalar {
    let mut best = Scalar::zero();
    let mut root = x.clone();
    for t in 1..=span {
        root = root.father();
        for h in cz_heights(t) {
            let (lo, hi) = cz_depths(h);
            let v = oscillation_oracle(tree, chains, &root, lo, hi, q);
            if v > best {
                best = v;
            }
        }
    }
    best
}

pub fn sharp_oracle_f64(tree: &Tree, chains: &Chains, q: f64, x: &Vertex, span: u64) -> f64 {
    let mut best = 0.0f64;
    let mut root = x.clone();
    for t in 1..=span {
        root = root.father();
        for h in cz_heights(t) {
            let (lo, hi) = cz_depths(h);
            best = best.max(oscillation_oracle_f64(tree, chains, &root, lo, hi, q));
        }
    }
    best
}

/// `M phi(x)` over admissible trapezoids rooted at most `span` levels
/// above `x`, with no early stopping.
pub fn hl_oracle(tree: &Tree, phi: &FinFunc, chains: &Chains, x: &Vertex, span: u64) -> Scalar {
    let mut best = phi.get(x);
    let mut root = x.clone();
    for t in 1..=span {
        root = root.father();
        for h in (1..=t).filter(|&h| t < 2 * h) {
            let mu = band_mass(tree, &root, h, 2 * h - 1);
            let inside = chains
                .below(&root)
                .filter(|&(_, _, d)| h <= d && d < 2 * h)
                .fold(Scalar::zero(), |acc, (c, w, _)| acc + c * w);
            let avg = inside / mu;
            if avg > best {
                best = avg;
            }
        }
    }
    best
}

/// `||f||_BMO_q` (squared for `q = 2`) over CZ sets rooted at most `span`
/// levels above some support vertex. Sets missing the support have zero
/// oscillation, so these are all the sets that matter up to that height.
pub fn bmo_oracle(tree: &Tree, chains: &Chains, q: u32, span: u64) -> Scalar {
    let mut best = Scalar::zero();
    for t in 1..=span {
        let roots: BTreeSet<&Vertex> = chains.ancestors(t).collect();
        for root in roots {
            let deepest = chains.below(root).map(|(_, _, d)| d).max().unwrap();
            for h in 1..=2 * deepest {
                let (lo, hi) = cz_depths(h);
                let v = oscillation_oracle(tree, chains, root, lo, hi, q);
                if v > best {
                    best = v;
                }
            }
        }
    }
    best
}

/// Vertices within distance `r` of some member, by multi-source BFS over
/// `Tree::neighbours`.
pub fn neighbourhood(tree: &Tree, members: &[Vertex], r: u64) -> HashSet<Vertex> {
    let mut seen: HashSet<Vertex> = members.iter().cloned().collect();
    let mut queue: VecDeque<(Vertex, u64)> = members.iter().map(|v| (v.clone(), 0)).collect();
    while let Some((v, d)) = queue.pop_front() {
        if d == r {
            continue;
        }
        for n in tree.neighbours(&v) {
            if seen.insert(n.clone()) {
                queue.push_back((n, d + 1));
            }
        }
    }
    seen
}

/// Ball by BFS over `Tree::neighbours`.
pub fn ball_by_bfs(tree: &Tree, center: &Vertex, r: u64) -> Vec<Vertex> {
    neighbourhood(tree, std::slice::from_ref(center), r).into_iter().collect()
}

/// A binary-tree vertex below a fixed root as `(depth, path bits)`, with
/// the first step in the most significant used bit.
#[derive(Clone, Copy, Debug)]
pub struct BitPath {
    pub depth: u32,
    pub bits: u64,
}

impl BitPath {
    pub fn distance(self, other: BitPath) -> u32 {
        let common = self.depth.min(other.depth);
        let a = self.bits >> (self.depth - common);
        let b = other.bits >> (other.depth - common);
        let diff = a ^ b;
        let shared = if diff == 0 { common } else { common - (64 - diff.leading_zeros()) };
        self.depth + other.depth - 2 * shared
    }

    /// The same vertex in `n:w` coordinates below `root` (m = 2).
    pub fn vertex(self, tree: &Tree, root: &Vertex) -> Vertex {
        (0..self.depth).rev().fold(root.clone(), |v, i| tree.child(&v, ((self.bits >> i) & 1) as u8))
    }
}

/// Every vertex of depth `lo..=hi` below a root of the binary tree.
pub fn bit_paths(lo: u32, hi: u32) -> Vec<BitPath> {
    (lo..=hi)
        .flat_map(|depth| (0..1u64 << depth).map(move |bits| BitPath { depth, bits }))
        .collect()
}

pub fn abs_max(values: impl IntoIterator<Item = Scalar>) -> Scalar {
    values.into_iter().fold(Scalar::zero(), |a, b| if b.abs() > a { b.abs() } else { a })
}
