//! Trapezoids, admissible trapezoids, Calderón–Zygmund sets, enlargements
//! and the nested covering family.
//!
//! Every set here is a [`Band`]: all vertices below a root whose depth lies
//! in an inclusive range. Each full level below a root at level `L` carries
//! mass `m^L`, so measures are `(hi - lo + 1) * m^L`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::scalar::{format_scalar, int, Scalar};
use crate::tree::{Tree, Vertex};

/// Vertices below `root` at depth `lo..=hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Band {
    pub root: Vertex,
    pub lo: u64,
    pub hi: u64,
}

impl Band {
    pub fn new(root: Vertex, lo: u64, hi: u64) -> Band {
        assert!(lo <= hi, "empty band {lo}..={hi}");
        Band { root, lo, hi }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.depth_below(&self.root)
            .is_some_and(|d| self.lo <= d && d <= self.hi)
    }

    pub fn levels(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn measure(&self, tree: &Tree) -> Scalar {
        int(self.levels() as i64) * tree.weight(&self.root)
    }

    /// Number of member vertices, `sum of m^d for d in lo..=hi`.
    pub fn cardinality(&self, tree: &Tree) -> Option<u64> {
        let m = tree.m() as u64;
        (self.lo..=self.hi).try_fold(0u64, |acc, d| {
            let count = m.checked_pow(u32::try_from(d).ok()?)?;
            acc.checked_add(count)
        })
    }

    pub fn members(&self, tree: &Tree) -> Vec<Vertex> {
        let mut out = Vec::new();
        self.for_each_member(tree, |v| out.push(v.clone()));
        out
    }

    pub fn for_each_member<F: FnMut(&Vertex)>(&self, tree: &Tree, mut visit: F) {
        tree.for_each_below(&self.root, self.lo, self.hi, |v, _| visit(v));
    }

    /// Lowest level reached by the band.
    pub fn bottom_level(&self) -> i64 {
        self.root.level() - self.hi as i64
    }
}

/// `{x below root : a <= depth(x) < b}` for rational `0 <= a < b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralTrapezoid {
    pub root: Vertex,
    pub a: Scalar,
    pub b: Scalar,
}

impl GeneralTrapezoid {
    pub fn new(root: Vertex, a: Scalar, b: Scalar) -> Result<GeneralTrapezoid> {
        if a < Scalar::zero() || a >= b {
            return Err(Error::invalid(format!(
                "trapezoid bounds need 0 <= a < b, got a = {}, b = {}",
                format_scalar(&a),
                format_scalar(&b)
            )));
        }
        Ok(GeneralTrapezoid { root, a, b })
    }

    /// Integer depth range `ceil(a)..=ceil(b) - 1`, or `None` when empty.
    pub fn band(&self) -> Option<Band> {
        let lo = self.a.ceil().to_integer().to_u64()?;
        let hi = self.b.ceil().to_integer().to_u64()?.checked_sub(1)?;
        (lo <= hi).then(|| Band::new(self.root.clone(), lo, hi))
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.band().is_some_and(|b| b.contains(v))
    }
}

/// Members of `t`, enumerated down to depth `cap`; fails when `cap < b`.
pub fn trapezoid_members(tree: &Tree, t: &GeneralTrapezoid, cap: u64) -> Result<Vec<Vertex>> {
    if int(cap as i64) < t.b {
        return Err(Error::IncompleteEnumeration(format!(
            "depth cap {cap} is below the trapezoid bound {}",
            format_scalar(&t.b)
        )));
    }
    Ok(t.band().map(|b| b.members(tree)).unwrap_or_default())
}

/// Trapezoid with depth range `[h, 2h)`, or the single vertex `{root}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdmissibleTrapezoid {
    pub root: Vertex,
    pub h: u64,
    pub degenerate: bool,
}

impl AdmissibleTrapezoid {
    pub fn new(root: Vertex, h: u64) -> Result<AdmissibleTrapezoid> {
        if h == 0 {
            return Err(Error::invalid("trapezoid height must be positive"));
        }
        Ok(AdmissibleTrapezoid {
            root,
            h,
            degenerate: false,
        })
    }

    pub fn degenerate(root: Vertex) -> AdmissibleTrapezoid {
        AdmissibleTrapezoid {
            root,
            h: 1,
            degenerate: true,
        }
    }

    pub fn band(&self) -> Band {
        if self.degenerate {
            Band::new(self.root.clone(), 0, 0)
        } else {
            Band::new(self.root.clone(), self.h, 2 * self.h - 1)
        }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.band().contains(v)
    }

    /// `h * m^l(root)`; the degenerate trapezoid is one vertex of that weight.
    pub fn measure(&self, tree: &Tree) -> Scalar {
        int(self.h as i64) * tree.weight(&self.root)
    }

    pub fn members(&self, tree: &Tree) -> Vec<Vertex> {
        self.band().members(tree)
    }

    pub fn envelope(&self) -> CzSet {
        CzSet {
            root: self.root.clone(),
            h: self.h,
            degenerate: self.degenerate,
        }
    }
}

impl fmt::Display for AdmissibleTrapezoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trap root={} h={}", self.root, self.h)?;
        if self.degenerate {
            write!(f, " deg")?;
        }
        Ok(())
    }
}

/// Envelope of an admissible trapezoid: depth range `[ceil(h/2), 4h - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CzSet {
    pub root: Vertex,
    pub h: u64,
    pub degenerate: bool,
}

impl CzSet {
    pub fn new(root: Vertex, h: u64) -> Result<CzSet> {
        if h == 0 {
            return Err(Error::invalid("CZ set height must be positive"));
        }
        Ok(CzSet {
            root,
            h,
            degenerate: false,
        })
    }

    pub fn degenerate(root: Vertex) -> CzSet {
        CzSet {
            root,
            h: 1,
            degenerate: true,
        }
    }

    pub fn band(&self) -> Band {
        if self.degenerate {
            Band::new(self.root.clone(), 0, 0)
        } else {
            Band::new(self.root.clone(), self.h.div_ceil(2), 4 * self.h - 1)
        }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.band().contains(v)
    }

    pub fn measure(&self, tree: &Tree) -> Scalar {
        self.band().measure(tree)
    }

    pub fn members(&self, tree: &Tree) -> Vec<Vertex> {
        self.band().members(tree)
    }

    /// Largest integer distance strictly below `h/4`.
    pub fn enlargement_radius(&self) -> u64 {
        (self.h - 1) / 4
    }

    /// `{x : d(x, S) < h/4}`.
    ///
    /// A vertex outside the cone below the root is at distance at least
    /// `ceil(h/2) + 1` from every member, which exceeds the radius, so the
    /// enlargement only widens the depth range.
    pub fn enlargement(&self) -> Band {
        let band = self.band();
        let r = self.enlargement_radius();
        Band::new(band.root, band.lo - r, band.hi + r)
    }

    pub fn enlargement_measure(&self, tree: &Tree) -> Scalar {
        self.enlargement().measure(tree)
    }

    pub fn to_json(&self, tree: &Tree) -> serde_json::Value {
        json!({
            "root": self.root.to_string(),
            "h": self.h,
            "degenerate": self.degenerate,
            "measure": format_scalar(&self.measure(tree)),
        })
    }

    /// Parses `cz root=<vertex> h=<int> [deg]` against `tree`.
    pub fn parse(tree: &Tree, s: &str) -> Result<CzSet> {
        let raw: RawCzSet = s.parse()?;
        let root = tree.parse_vertex(&raw.root)?;
        if raw.degenerate {
            if raw.h != 1 {
                return Err(Error::invalid("a degenerate CZ set has h = 1"));
            }
            Ok(CzSet::degenerate(root))
        } else {
            CzSet::new(root, raw.h)
        }
    }
}

struct RawCzSet {
    root: String,
    h: u64,
    degenerate: bool,
}

impl FromStr for RawCzSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<RawCzSet> {
        let mut tokens = s.split_whitespace();
        if tokens.next() != Some("cz") {
            return Err(Error::Parse(format!("CZ set {s:?} must start with \"cz\"")));
        }
        let (mut root, mut h, mut degenerate) = (None, None, false);
        for tok in tokens {
            if tok == "deg" {
                degenerate = true;
            } else if let Some(v) = tok.strip_prefix("root=") {
                root = Some(v.to_string());
            } else if let Some(v) = tok.strip_prefix("h=") {
                h = Some(
                    v.parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad height {v:?}")))?,
                );
            } else {
                return Err(Error::Parse(format!("unexpected token {tok:?} in CZ set")));
            }
        }
        match (root, h) {
            (Some(root), Some(h)) => Ok(RawCzSet { root, h, degenerate }),
            _ => Err(Error::Parse(format!("CZ set {s:?} needs root= and h="))),
        }
    }
}

impl fmt::Display for CzSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cz root={} h={}", self.root, self.h)?;
        if self.degenerate {
            write!(f, " deg")?;
        }
        Ok(())
    }
}

/// `(4h - ceil(h/2)) * m^l(root)` for non-degenerate sets.
pub fn cz_measure_closed(tree: &Tree, root: &Vertex, h: u64) -> Scalar {
    int((4 * h - h.div_ceil(2)) as i64) * tree.weight(root)
}

/// Heights `h` for which a CZ set contains a vertex `delta` levels below its
/// root: `ceil((delta + 1)/4) <= h <= 2 delta`. Empty for `delta = 0`.
pub fn heights_meeting_depth(delta: u64) -> std::ops::RangeInclusive<u64> {
    (delta + 1).div_ceil(4).max(1)..=2 * delta
}

/// Heights for which an admissible trapezoid contains a vertex `delta`
/// levels below its root: `ceil((delta + 1)/2) <= h <= delta`.
pub fn trapezoid_heights_meeting_depth(delta: u64) -> std::ops::RangeInclusive<u64> {
    (delta + 1).div_ceil(2).max(1)..=delta
}

/// The `n`-th set of the nested covering family: root on the geodesic at
/// level `n`, height `n + 1`.
pub fn covering_family(n: u64) -> CzSet {
    CzSet::new(Vertex::geodesic(n as i64), n + 1).expect("positive height")
}

/// Smallest `j` with `x` in the `j`-th covering set.
///
/// With `k` the first geodesic index above `x` and `d` the depth of `x`
/// below it, membership needs `j >= k`, `j >= ceil((d - k - 3)/3)` and
/// `ceil((j + 1)/2) <= d + j - k`. The scan starts at the resulting lower
/// bound and terminates after at most two steps.
pub fn covering_index(x: &Vertex) -> u64 {
    let k = x.anchor().max(0);
    let d = k - x.level();
    let mut j = k.max(Integer::div_ceil(&(d - k - 3), &3)).max(2 * (k - d) - 1).max(0) as u64;
    while !covering_family(j).contains(x) {
        j += 1;
    }
    j
}

/// Upper limit on CZ-set measures admitted by an enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureCutoff {
    Unbounded,
    AtMost(Scalar),
}

impl MeasureCutoff {
    pub fn admits(&self, measure: &Scalar) -> bool {
        match self {
            MeasureCutoff::Unbounded => true,
            MeasureCutoff::AtMost(b) => measure <= b,
        }
    }
}

/// Support vertices grouped by their ancestor at a fixed level, with the
/// depth of each below that ancestor.
pub fn group_by_ancestor(support: &[Vertex], level: i64) -> BTreeMap<Vertex, Vec<u64>> {
    let mut groups: BTreeMap<Vertex, Vec<u64>> = BTreeMap::new();
    for v in support {
        let depth = level - v.level();
        if depth >= 0 {
            groups
                .entry(v.ancestor(depth as u64))
                .or_default()
                .push(depth as u64);
        }
    }
    groups
}

/// Lazily enumerates every CZ set that meets a finite support and whose
/// measure passes the cutoff.
///
/// Degenerate sets at support vertices come first and are always yielded.
/// Then root levels ascend; at each level roots are the distinct ancestors
/// of the support, and heights ascend within a root.
pub struct SupersetFamily<'t> {
    tree: &'t Tree,
    support: Vec<Vertex>,
    cutoff: MeasureCutoff,
    pending: std::vec::IntoIter<CzSet>,
    next_level: i64,
    top_level: i64,
    degenerate_done: bool,
}

impl<'t> SupersetFamily<'t> {
    pub fn new(tree: &'t Tree, support: &[Vertex], cutoff: MeasureCutoff) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("superset family needs a nonempty support"));
        }
        let mut support = support.to_vec();
        support.sort();
        support.dedup();
        let bottom = support.iter().map(Vertex::level).min().unwrap();
        let top = support.iter().map(Vertex::level).max().unwrap();
        Ok(SupersetFamily {
            tree,
            support,
            cutoff,
            pending: Vec::new().into_iter(),
            next_level: bottom + 1,
            top_level: top,
            degenerate_done: false,
        })
    }

    /// Smallest measure of a non-degenerate set met at root level `level`
    /// or above.
    pub fn measure_floor(&self, level: i64) -> Scalar {
        let delta = (level - self.top_level).max(1) as u64;
        let h = *heights_meeting_depth(delta).start();
        int((4 * h - h.div_ceil(2)) as i64) * self.tree.level_weight(level)
    }

    fn fill_level(&mut self, level: i64) -> Vec<CzSet> {
        let mut out = Vec::new();
        for (root, depths) in group_by_ancestor(&self.support, level) {
            let lo = depths
                .iter()
                .filter(|&&d| d > 0)
                .map(|&d| *heights_meeting_depth(d).start())
                .min();
            let hi = depths.iter().map(|&d| 2 * d).max().unwrap_or(0);
            let Some(lo) = lo else { continue };
            for h in lo..=hi {
                let band_lo = h.div_ceil(2);
                let band_hi = 4 * h - 1;
                if !depths.iter().any(|&d| band_lo <= d && d <= band_hi) {
                    continue;
                }
                let set = CzSet::new(root.clone(), h).expect("positive height");
                if self.cutoff.admits(&set.measure(self.tree)) {
                    out.push(set);
                }
            }
        }
        out
    }
}

impl Iterator for SupersetFamily<'_> {
    type Item = CzSet;

    fn next(&mut self) -> Option<CzSet> {
        if !self.degenerate_done {
            self.degenerate_done = true;
            let degenerate: Vec<CzSet> = self.support.iter().cloned().map(CzSet::degenerate).collect();
            self.pending = degenerate.into_iter();
        }
        loop {
            if let Some(set) = self.pending.next() {
                return Some(set);
            }
            let level = self.next_level;
            if !self.cutoff.admits(&self.measure_floor(level)) {
                return None;
            }
            self.next_level += 1;
            let batch = self.fill_level(level);
            self.pending = batch.into_iter();
        }
    }
}

/// Smallest-measure CZ set containing every vertex of `support`.
pub fn smallest_cz_containing(tree: &Tree, support: &[Vertex]) -> Result<CzSet> {
    let first = support
        .first()
        .ok_or_else(|| Error::invalid("cannot enclose an empty support"))?;
    if support.iter().all(|v| v == first) {
        return Ok(CzSet::degenerate(first.clone()));
    }
    let join = support[1..]
        .iter()
        .fold(first.clone(), |acc, v| acc.join(v));
    let mut best: Option<(Scalar, CzSet)> = None;
    let mut level = join.level();
    loop {
        let floor = int(3) * tree.level_weight(level);
        if best.as_ref().is_some_and(|(m, _)| floor > *m) {
            break;
        }
        let root = join.ancestor((level - join.level()) as u64);
        let depths: Vec<u64> = support
            .iter()
            .map(|v| v.depth_below(&root).expect("root above join"))
            .collect();
        let dmin = *depths.iter().min().unwrap();
        let dmax = *depths.iter().max().unwrap();
        let h = (dmax + 1).div_ceil(4).max(1);
        if dmin >= 1 && h <= 2 * dmin {
            let set = CzSet::new(root, h).expect("positive height");
            let m = set.measure(tree);
            if best.as_ref().is_none_or(|(b, _)| m < *b) {
                best = Some((m, set));
            }
        }
        level += 1;
    }
    Ok(best.expect("loop exits only with a candidate").1)
}

/// All CZ sets whose band (or enlargement, when `with_enlargement`) lies
/// inside the window.
pub fn cz_sets_in_window(
    tree: &Tree,
    window: &crate::tree::Window,
    with_enlargement: bool,
    include_degenerate: bool,
) -> Vec<CzSet> {
    let mut out = Vec::new();
    tree.for_each_below(&window.root, 0, window.depth, |root, depth| {
        let room = window.depth - depth;
        if include_degenerate {
            out.push(CzSet::degenerate(root.clone()));
        }
        let mut h = 1;
        loop {
            let set = CzSet::new(root.clone(), h).expect("positive height");
            let band = if with_enlargement {
                set.enlargement()
            } else {
                set.band()
            };
            if band.hi > room {
                break;
            }
            out.push(set);
            h += 1;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn t(m: u32) -> Tree {
        Tree::new(m).unwrap()
    }

    #[test]
    fn general_trapezoids() {
        let t2 = t(2);
        let o = Vertex::origin();
        let one = GeneralTrapezoid::new(o.clone(), int(1), int(2)).unwrap();
        assert_eq!(trapezoid_members(&t2, &one, 2).unwrap().len(), 2);
        let top = GeneralTrapezoid::new(o.clone(), int(0), int(1)).unwrap();
        assert_eq!(trapezoid_members(&t2, &top, 1).unwrap(), vec![o.clone()]);
        let two = GeneralTrapezoid::new(o.clone(), int(1), int(3)).unwrap();
        assert_eq!(trapezoid_members(&t2, &two, 3).unwrap().len(), 6);
        assert!(matches!(
            trapezoid_members(&t2, &two, 2),
            Err(Error::IncompleteEnumeration(_))
        ));
        let half = GeneralTrapezoid::new(o, frac(1, 2), frac(3, 2)).unwrap();
        assert_eq!(half.band().map(|b| (b.lo, b.hi)), Some((1, 1)));
    }

    #[test]
    fn admissible_measures() {
        let t2 = t(2);
        let o = Vertex::origin();
        let r = AdmissibleTrapezoid::new(o.clone(), 2).unwrap();
        let members = r.members(&t2);
        assert_eq!(members.len(), 12);
        assert_eq!(t2.mass(&members), int(2));
        assert_eq!(r.measure(&t2), int(2));
        assert_eq!(AdmissibleTrapezoid::degenerate(o).measure(&t2), int(1));
        let t3 = t(3);
        let r3 = AdmissibleTrapezoid::new(Vertex::geodesic(1), 1).unwrap();
        assert_eq!(r3.members(&t3).len(), 3);
        assert_eq!(r3.measure(&t3), int(3));
    }

    #[test]
    fn envelopes_and_cz_measures() {
        let t2 = t(2);
        let o = Vertex::origin();
        let e1 = AdmissibleTrapezoid::new(o.clone(), 1).unwrap().envelope();
        assert_eq!((e1.band().lo, e1.band().hi), (1, 3));
        assert_eq!(e1.members(&t2).len(), 14);
        let e2 = AdmissibleTrapezoid::new(o.clone(), 2).unwrap().envelope();
        assert_eq!((e2.band().lo, e2.band().hi), (1, 7));
        assert!(AdmissibleTrapezoid::degenerate(o.clone()).envelope().degenerate);
        for (h, mu) in [(1, 3), (2, 7), (4, 14)] {
            let s = CzSet::new(o.clone(), h).unwrap();
            assert_eq!(s.measure(&t2), int(mu));
            assert_eq!(cz_measure_closed(&t2, &o, h), int(mu));
        }
        assert_eq!(t2.mass(&e2.members(&t2)), int(7));
    }

    #[test]
    fn enlargement_bands() {
        let o = Vertex::origin();
        for h in [1, 4] {
            let s = CzSet::new(o.clone(), h).unwrap();
            assert_eq!(s.enlargement(), s.band());
        }
        let s8 = CzSet::new(o, 8).unwrap();
        let e = s8.enlargement();
        assert_eq!((e.lo, e.hi), (3, 32));
    }

    #[test]
    fn covering_examples() {
        assert_eq!(covering_family(0), CzSet::new(Vertex::origin(), 1).unwrap());
        assert_eq!(covering_family(1), CzSet::new(Vertex::geodesic(1), 2).unwrap());
        assert_eq!(covering_family(5), CzSet::new(Vertex::geodesic(5), 6).unwrap());
        let t2 = t(2);
        assert_eq!(covering_index(&Vertex::origin()), 1);
        assert_eq!(covering_index(&t2.parse_vertex("0:1").unwrap()), 0);
        assert_eq!(covering_index(&Vertex::geodesic(7)), 15);
        assert!(!covering_family(14).contains(&Vertex::geodesic(7)));
    }

    #[test]
    fn superset_family_order() {
        let t2 = t(2);
        let x = t2.parse_vertex("0:1").unwrap();
        let fam: Vec<CzSet> = SupersetFamily::new(&t2, std::slice::from_ref(&x), MeasureCutoff::AtMost(int(40)))
            .unwrap()
            .take(5)
            .collect();
        let o = Vertex::origin();
        let g1 = Vertex::geodesic(1);
        assert_eq!(
            fam,
            vec![
                CzSet::degenerate(x),
                CzSet::new(o.clone(), 1).unwrap(),
                CzSet::new(o, 2).unwrap(),
                CzSet::new(g1.clone(), 1).unwrap(),
                CzSet::new(g1, 2).unwrap(),
            ]
        );
        let only_deg: Vec<CzSet> =
            SupersetFamily::new(&t2, &[Vertex::origin()], MeasureCutoff::AtMost(int(0)))
                .unwrap()
                .collect();
        assert_eq!(only_deg, vec![CzSet::degenerate(Vertex::origin())]);
        let above: Vec<CzSet> =
            SupersetFamily::new(&t2, &[Vertex::origin()], MeasureCutoff::AtMost(int(30)))
                .unwrap()
                .skip(1)
                .collect();
        assert!(!above.is_empty());
        assert!(above.iter().all(|s| s.root.level() > 0));
        assert!(SupersetFamily::new(&t2, &[], MeasureCutoff::Unbounded).is_err());
    }

    #[test]
    fn smallest_enclosing_set() {
        let t2 = t(2);
        let a = t2.parse_vertex("0:1").unwrap();
        let b = Vertex::geodesic(-1);
        let s = smallest_cz_containing(&t2, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(s, CzSet::new(Vertex::origin(), 1).unwrap());
        assert_eq!(smallest_cz_containing(&t2, std::slice::from_ref(&a)).unwrap(), CzSet::degenerate(a));
    }

    #[test]
    fn text_format() {
        let t2 = t(2);
        let s = CzSet::parse(&t2, "cz root=0: h=3").unwrap();
        assert_eq!(s, CzSet::new(Vertex::origin(), 3).unwrap());
        assert_eq!(s.to_string(), "cz root=0: h=3");
        let d = CzSet::parse(&t2, "cz root=0:1 h=1 deg").unwrap();
        assert!(d.degenerate);
        assert!(CzSet::parse(&t2, "cz root=0: h=0").is_err());
        assert!(CzSet::parse(&t2, "trap root=0: h=1").is_err());
        assert_eq!(s.to_json(&t2)["measure"], "10/1");
    }
}
