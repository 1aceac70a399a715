//! Coordinates, metric, levels and the weighted measure of the homogeneous
//! tree of order `m + 1` with a fixed doubly-infinite geodesic.
//!
//! A vertex is stored as `(anchor, word)`: `anchor` indexes the geodesic
//! vertex the word descends from, and each digit picks one of the `m`
//! children. Child `0` of a geodesic vertex is the next geodesic vertex one
//! level down, so a canonical word never starts with `0`. With digits kept
//! most-significant-first, prefix order is ancestry.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{int, pow_i, Scalar};

pub type Word = SmallVec<[u8; 24]>;

/// Largest supported branching factor; digits print as base-36 characters.
pub const MAX_BRANCHING: u32 = 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    m: u32,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    anchor: i64,
    word: Word,
}

impl Vertex {
    /// The origin `o`: geodesic vertex of level 0.
    pub fn origin() -> Vertex {
        Vertex::geodesic(0)
    }

    pub fn geodesic(anchor: i64) -> Vertex {
        Vertex {
            anchor,
            word: Word::new(),
        }
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn is_on_geodesic(&self) -> bool {
        self.word.is_empty()
    }

    pub fn level(&self) -> i64 {
        self.anchor - self.word.len() as i64
    }

    pub fn father(&self) -> Vertex {
        let mut father = self.clone();
        if father.word.pop().is_none() {
            father.anchor += 1;
        }
        father
    }

    /// The ancestor `height` levels up (`height = 0` gives `self`).
    pub fn ancestor(&self, height: u64) -> Vertex {
        let len = self.word.len() as u64;
        if height <= len {
            let mut word = self.word.clone();
            word.truncate((len - height) as usize);
            Vertex {
                anchor: self.anchor,
                word,
            }
        } else {
            Vertex::geodesic(self.anchor + (height - len) as i64)
        }
    }

    /// Length of the common prefix of both lifted words, together with the
    /// lifted lengths, all relative to the anchor `max(anchors)`.
    fn lifted_lcp(&self, other: &Vertex) -> (u64, u64, u64) {
        let top = self.anchor.max(other.anchor);
        let pad_self = (top - self.anchor) as u64;
        let pad_other = (top - other.anchor) as u64;
        let len_self = pad_self + self.word.len() as u64;
        let len_other = pad_other + other.word.len() as u64;
        // A canonical word starts with a nonzero digit, so the zero padding of
        // the lower-anchored vertex can only match the shorter padding.
        let lcp = if pad_self == pad_other {
            pad_self
                + self
                    .word
                    .iter()
                    .zip(other.word.iter())
                    .take_while(|(a, b)| a == b)
                    .count() as u64
        } else {
            pad_self.min(pad_other)
        };
        (lcp, len_self, len_other)
    }

    /// True iff the upward path from `self` passes through `other`.
    pub fn lies_below(&self, other: &Vertex) -> bool {
        let (lcp, len_self, len_other) = self.lifted_lcp(other);
        lcp == len_other && len_self >= len_other
    }

    /// Number of levels from `ancestor` down to `self`, if `self` lies below it.
    pub fn depth_below(&self, ancestor: &Vertex) -> Option<u64> {
        let (lcp, len_self, len_anc) = self.lifted_lcp(ancestor);
        (lcp == len_anc && len_self >= len_anc).then(|| len_self - len_anc)
    }

    pub fn distance(&self, other: &Vertex) -> u64 {
        let (lcp, a, b) = self.lifted_lcp(other);
        (a - lcp) + (b - lcp)
    }

    /// Heights of the join (the vertex where both upward paths meet) above
    /// `self` and above `other`.
    pub fn join_heights(&self, other: &Vertex) -> (u64, u64) {
        let (lcp, a, b) = self.lifted_lcp(other);
        (a - lcp, b - lcp)
    }

    pub fn join(&self, other: &Vertex) -> Vertex {
        let (up, _) = self.join_heights(other);
        self.ancestor(up)
    }

    /// Moves to child `digit` in place; returns whether the geodesic was
    /// followed so that [`Vertex::pop_child`] can undo it.
    pub(crate) fn push_child(&mut self, digit: u8) -> bool {
        if self.word.is_empty() && digit == 0 {
            self.anchor -= 1;
            true
        } else {
            self.word.push(digit);
            false
        }
    }

    pub(crate) fn pop_child(&mut self, followed_geodesic: bool) {
        if followed_geodesic {
            self.anchor += 1;
        } else {
            self.word.pop();
        }
    }

    /// Parses the raw `n:w` text form without canonicalizing.
    fn parse_raw(s: &str) -> Result<(i64, Vec<u8>)> {
        let (n, w) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("vertex {s:?} is not of the form n:w")))?;
        let anchor = n
            .trim()
            .parse::<i64>()
            .map_err(|_| Error::Parse(format!("bad anchor in vertex {s:?}")))?;
        let word = w
            .chars()
            .map(|c| {
                c.to_digit(MAX_BRANCHING)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Parse(format!("bad digit {c:?} in vertex {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok((anchor, word))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.anchor)?;
        for &d in &self.word {
            let c = char::from_digit(d as u32, MAX_BRANCHING).unwrap_or('?');
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({self})")
    }
}

impl Tree {
    pub fn new(m: u32) -> Result<Tree> {
        if !(2..=MAX_BRANCHING).contains(&m) {
            return Err(Error::invalid(format!(
                "branching factor m must lie in 2..={MAX_BRANCHING}, got {m}"
            )));
        }
        Ok(Tree { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Canonical form of `(anchor, word)`: leading zeros move the anchor down.
    pub fn canonicalize(&self, anchor: i64, word: &[u8]) -> Result<Vertex> {
        if let Some(&d) = word.iter().find(|&&d| d as u32 >= self.m) {
            return Err(Error::invalid(format!(
                "digit {d} out of range for m = {}",
                self.m
            )));
        }
        let zeros = word.iter().take_while(|&&d| d == 0).count();
        Ok(Vertex {
            anchor: anchor - zeros as i64,
            word: Word::from_slice(&word[zeros..]),
        })
    }

    /// Parses the `n:w` text form and canonicalizes it.
    pub fn parse_vertex(&self, s: &str) -> Result<Vertex> {
        let (anchor, word) = Vertex::parse_raw(s)?;
        self.canonicalize(anchor, &word)
    }

    /// Checks that every digit of `v` is valid for this tree.
    pub fn validate(&self, v: &Vertex) -> Result<()> {
        self.canonicalize(v.anchor, &v.word).and_then(|c| {
            if &c == v {
                Ok(())
            } else {
                Err(Error::invalid(format!("vertex {v} is not canonical")))
            }
        })
    }

    pub fn child(&self, v: &Vertex, digit: u8) -> Vertex {
        assert!((digit as u32) < self.m, "child digit out of range");
        let mut c = v.clone();
        c.push_child(digit);
        c
    }

    pub fn children(&self, v: &Vertex) -> Vec<Vertex> {
        (0..self.m as u8).map(|d| self.child(v, d)).collect()
    }

    pub fn neighbours(&self, v: &Vertex) -> Vec<Vertex> {
        let mut out = self.children(v);
        out.push(v.father());
        out
    }

    /// `m^level`, the mass every vertex of that level carries.
    pub fn level_weight(&self, level: i64) -> Scalar {
        pow_i(self.m, level)
    }

    pub fn weight(&self, v: &Vertex) -> Scalar {
        self.level_weight(v.level())
    }

    /// Number of vertices exactly `depth` levels below any fixed vertex.
    pub fn count_at_depth(&self, depth: u64) -> Scalar {
        pow_i(self.m, depth as i64)
    }

    /// All vertices within distance `r` of `v`, in breadth-first order.
    pub fn ball(&self, v: &Vertex, r: u64) -> Vec<Vertex> {
        let mut seen: HashSet<Vertex> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(v.clone());
        queue.push_back((v.clone(), 0u64));
        while let Some((u, d)) = queue.pop_front() {
            if d < r {
                for n in self.neighbours(&u) {
                    if seen.insert(n.clone()) {
                        queue.push_back((n, d + 1));
                    }
                }
            }
            order.push(u);
        }
        order
    }

    /// Measure of `ball(v, r)` by summing vertex weights.
    pub fn ball_measure(&self, v: &Vertex, r: u64) -> Scalar {
        self.ball(v, r)
            .iter()
            .fold(Scalar::zero(), |acc, u| acc + self.weight(u))
    }

    /// `m^l(v) (m^(r+1) + m^r - 2) / (m - 1)`. At `r = 0` this reduces to
    /// `m^l(v)`, the mass of `{v}`.
    pub fn ball_measure_closed(&self, v: &Vertex, r: u64) -> Scalar {
        let m = self.m as i64;
        let top = pow_i(self.m, r as i64 + 1) + pow_i(self.m, r as i64) - int(2);
        self.weight(v) * top / int(m - 1)
    }

    /// Vertices exactly `depth` levels below `root`, in lexicographic order of
    /// their descent words.
    pub fn descendants_at_depth(&self, root: &Vertex, depth: u64) -> Vec<Vertex> {
        let mut out = Vec::new();
        self.for_each_below(root, depth, depth, |v, _| out.push(v.clone()));
        out
    }

    /// Depth-first visit of every vertex below `root` whose depth lies in
    /// `min_depth..=max_depth`. Visits `m^d` vertices at each depth `d`.
    pub fn for_each_below<F: FnMut(&Vertex, u64)>(
        &self,
        root: &Vertex,
        min_depth: u64,
        max_depth: u64,
        mut visit: F,
    ) {
        fn go<F: FnMut(&Vertex, u64)>(
            m: u8,
            cur: &mut Vertex,
            depth: u64,
            min_depth: u64,
            max_depth: u64,
            visit: &mut F,
        ) {
            if depth >= min_depth {
                visit(cur, depth);
            }
            if depth < max_depth {
                for d in 0..m {
                    let followed = cur.push_child(d);
                    go(m, cur, depth + 1, min_depth, max_depth, visit);
                    cur.pop_child(followed);
                }
            }
        }
        if min_depth > max_depth {
            return;
        }
        let mut cur = root.clone();
        go(self.m as u8, &mut cur, 0, min_depth, max_depth, &mut visit);
    }

    /// Sum of weights over an explicit vertex collection.
    pub fn mass<'a, I: IntoIterator<Item = &'a Vertex>>(&self, vertices: I) -> Scalar {
        vertices
            .into_iter()
            .fold(Scalar::zero(), |acc, v| acc + self.weight(v))
    }

    pub fn origin_weight(&self) -> Scalar {
        Scalar::one()
    }
}

/// All vertices below `root` down to `depth` levels (inclusive).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub root: Vertex,
    pub depth: u64,
}

impl Window {
    pub fn new(root: Vertex, depth: u64) -> Window {
        Window { root, depth }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.depth_below(&self.root).is_some_and(|d| d <= self.depth)
    }

    pub fn vertices(&self, tree: &Tree) -> Vec<Vertex> {
        let mut out = Vec::new();
        tree.for_each_below(&self.root, 0, self.depth, |v, _| out.push(v.clone()));
        out
    }

    /// Parses `root=<vertex>,depth=<int>`.
    pub fn parse(tree: &Tree, s: &str) -> Result<Window> {
        let mut root = None;
        let mut depth = None;
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad window component {part:?}")))?;
            match key.trim() {
                "root" => root = Some(tree.parse_vertex(value)?),
                "depth" => {
                    depth = Some(
                        value
                            .trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Parse(format!("bad window depth {value:?}")))?,
                    )
                }
                other => return Err(Error::Parse(format!("unknown window key {other:?}"))),
            }
        }
        match (root, depth) {
            (Some(root), Some(depth)) if depth >= 1 => Ok(Window { root, depth }),
            (Some(_), Some(_)) => Err(Error::invalid("window depth must be at least 1")),
            _ => Err(Error::Parse(format!("window {s:?} needs root= and depth="))),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root={},depth={}", self.root, self.depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn v(tree: &Tree, s: &str) -> Vertex {
        tree.parse_vertex(s).unwrap()
    }

    #[test]
    fn canonical_forms() {
        let t2 = Tree::new(2).unwrap();
        assert_eq!(t2.canonicalize(0, &[0]).unwrap(), Vertex::geodesic(-1));
        assert_eq!(t2.canonicalize(0, &[1]).unwrap().to_string(), "0:1");
        let c = t2.canonicalize(2, &[0, 1]).unwrap();
        assert_eq!(c.to_string(), "1:1");
        assert_eq!(t2.canonicalize(c.anchor(), c.word()).unwrap(), c);
        assert!(t2.canonicalize(0, &[2]).is_err());
    }

    #[test]
    fn levels() {
        let t3 = Tree::new(3).unwrap();
        assert_eq!(Vertex::origin().level(), 0);
        assert_eq!(v(&t3, "0:1").level(), -1);
        let x = v(&t3, "3:12");
        assert_eq!(x.level(), 1);
        // father chain reaches the geodesic at anchor 3 after two steps
        assert_eq!(x.father().father(), Vertex::geodesic(3));
    }

    #[test]
    fn father_and_children() {
        let t2 = Tree::new(2).unwrap();
        assert_eq!(v(&t2, "0:1").father(), Vertex::origin());
        assert_eq!(
            t2.children(&Vertex::origin()),
            vec![Vertex::geodesic(-1), v(&t2, "0:1")]
        );
        assert_eq!(Vertex::geodesic(1).father(), Vertex::geodesic(2));
    }

    #[test]
    fn below_relation() {
        let t2 = Tree::new(2).unwrap();
        assert!(v(&t2, "0:1").lies_below(&Vertex::origin()));
        assert!(!Vertex::origin().lies_below(&v(&t2, "0:1")));
        assert!(Vertex::geodesic(-1).lies_below(&Vertex::geodesic(1)));
        assert_eq!(v(&t2, "-1:1").depth_below(&Vertex::geodesic(2)), Some(4));
    }

    #[test]
    fn distances() {
        let t2 = Tree::new(2).unwrap();
        assert_eq!(v(&t2, "0:1").distance(&Vertex::geodesic(-1)), 2);
        assert_eq!(Vertex::origin().distance(&Vertex::origin()), 0);
        assert_eq!(Vertex::origin().distance(&Vertex::geodesic(3)), 3);
        assert_eq!(v(&t2, "2:11").distance(&v(&t2, "-1:1")), 2 + 4);
    }

    #[test]
    fn weights() {
        let t2 = Tree::new(2).unwrap();
        let t3 = Tree::new(3).unwrap();
        assert_eq!(t2.weight(&Vertex::origin()), int(1));
        assert_eq!(t2.weight(&v(&t2, "0:1")), frac(1, 2));
        assert_eq!(t3.weight(&Vertex::geodesic(2)), int(9));
    }

    #[test]
    fn balls() {
        let t2 = Tree::new(2).unwrap();
        let o = Vertex::origin();
        let ball = t2.ball(&o, 1);
        let expected: HashSet<Vertex> = [
            o.clone(),
            Vertex::geodesic(1),
            Vertex::geodesic(-1),
            v(&t2, "0:1"),
        ]
        .into_iter()
        .collect();
        assert_eq!(ball.iter().cloned().collect::<HashSet<_>>(), expected);
        assert_eq!(t2.ball_measure(&o, 1), int(4));
        assert_eq!(t2.ball_measure_closed(&o, 1), int(4));
        assert_eq!(t2.ball_measure(&o, 0), int(1));
        assert_eq!(Tree::new(3).unwrap().ball_measure_closed(&o, 0), int(1));
        let t3 = Tree::new(3).unwrap();
        assert_eq!(t3.ball_measure(&o, 2), int(17));
        assert_eq!(t3.ball_measure_closed(&o, 2), int(17));
    }

    #[test]
    fn streaming_visit_matches_counts() {
        let t3 = Tree::new(3).unwrap();
        let root = v(&t3, "1:2");
        let mut per_depth = [0u64; 5];
        t3.for_each_below(&root, 0, 4, |u, d| {
            assert_eq!(u.depth_below(&root), Some(d));
            per_depth[d as usize] += 1;
        });
        assert_eq!(per_depth, [1, 3, 9, 27, 81]);
        // from a geodesic root the zero child must stay canonical
        let g = Vertex::geodesic(2);
        let below = t3.descendants_at_depth(&g, 2);
        assert_eq!(below.len(), 9);
        assert!(below.contains(&Vertex::origin()));
        for u in &below {
            t3.validate(u).unwrap();
        }
    }

    #[test]
    fn window_parsing() {
        let t2 = Tree::new(2).unwrap();
        let w = Window::parse(&t2, "root=1:,depth=3").unwrap();
        assert_eq!(w.root, Vertex::geodesic(1));
        assert_eq!(w.vertices(&t2).len(), 15);
        assert!(w.contains(&v(&t2, "0:1")));
        assert!(!w.contains(&Vertex::geodesic(2)));
        assert!(Window::parse(&t2, "root=1:,depth=0").is_err());
        assert_eq!(w.to_string(), "root=1:,depth=3");
    }
}
