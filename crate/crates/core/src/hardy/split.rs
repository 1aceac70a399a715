//! Splitting `g = g^j + sum_k b^j_k` at height `2^j`.
//!
//! `Omega_j` is the set where the maximal function of `|g|^q` exceeds
//! `2^(jq)`. A trapezoid pushes its members into `Omega_j` exactly when its
//! average of `|g|^q` exceeds the threshold, and such a trapezoid must meet
//! the support and have measure below `||g||_q^q / 2^(jq)`; that bounds the
//! enumeration. `Omega_j` is then tiled greedily by admissible trapezoids
//! lying inside it, largest roots first, singletons last.

use std::collections::{BTreeSet, HashMap};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::scalar::{int, pow_i, powu, to_f64, Scalar};
use crate::sets::{group_by_ancestor, trapezoid_heights_meeting_depth, AdmissibleTrapezoid};
use crate::tree::{Tree, Vertex};

/// Size caps for one split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitLimits {
    /// Largest admissible `|Omega_j|`.
    pub max_omega: usize,
}

impl Default for SplitLimits {
    fn default() -> Self {
        SplitLimits { max_omega: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BadPart {
    pub function: FinFunc,
    pub trapezoid: AdmissibleTrapezoid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodBadSplit {
    pub j: i64,
    pub q: u32,
    pub good: FinFunc,
    pub bad_parts: Vec<BadPart>,
    pub omega: BTreeSet<Vertex>,
    /// `max |g^j| / 2^j`.
    pub c_good: Scalar,
    /// `max_k ||b_k||_q^q / (2^(jq) mu(envelope_k))`, the `q`-th power of
    /// the bad-part constant.
    pub c_bad_pow: Scalar,
}

impl GoodBadSplit {
    pub fn c_bad(&self) -> f64 {
        to_f64(&self.c_bad_pow).powf(1.0 / self.q as f64)
    }

    /// Checks the four splitting properties exactly; returns the failures.
    pub fn violations(&self, tree: &Tree, g: &FinFunc) -> Vec<String> {
        let mut out = Vec::new();
        let two_j = pow_i(2, self.j);
        let mut covered = BTreeSet::new();
        for part in &self.bad_parts {
            for v in part.trapezoid.members(tree) {
                if !self.omega.contains(&v) {
                    out.push(format!("tiles-inside-omega: {v} of {} is outside", part.trapezoid));
                }
                if !covered.insert(v.clone()) {
                    out.push(format!("tiles-disjoint: {v} covered twice"));
                }
            }
        }
        for v in &self.omega {
            let enveloped = self
                .bad_parts
                .iter()
                .any(|p| p.trapezoid.envelope().contains(v));
            if !enveloped {
                out.push(format!("omega-inside-envelopes: {v} is not covered"));
            }
        }
        let mut total = self.good.clone();
        for part in &self.bad_parts {
            total = total.add(&part.function);
            let envelope = part.trapezoid.envelope();
            if let Some((v, _)) = part.function.iter().find(|(v, _)| !envelope.contains(v)) {
                out.push(format!("bad-part-support: {v} escapes {envelope}"));
            }
        }
        if total != *g {
            out.push("split-sums-to-g: g^j + sum b_k differs from g".into());
        }
        for (v, c) in self.good.iter() {
            if !self.omega.contains(v) && c.abs() > two_j {
                out.push(format!("good-bounded-off-omega: |g^j({v})| > 2^j"));
            }
            if c.abs() > &self.c_good * &two_j {
                out.push(format!("good-bounded: |g^j({v})| > c_good 2^j"));
            }
        }
        let scale = pow_i(2, self.j * self.q as i64);
        for part in &self.bad_parts {
            if !part.function.integral(tree).is_zero() {
                out.push(format!("bad-part-mean-zero: nonzero integral on {}", part.trapezoid));
            }
            let lhs = part.function.abs_power_sum(tree, self.q);
            let rhs = &self.c_bad_pow * &scale * part.trapezoid.envelope().measure(tree);
            if lhs > rhs {
                out.push(format!("bad-part-size: bound fails on {}", part.trapezoid));
            }
        }
        out
    }
}

/// Vertices where the maximal average of `phi >= 0` exceeds `tau > 0`.
pub(crate) fn level_set(
    tree: &Tree,
    phi: &FinFunc,
    tau: &Scalar,
    limits: SplitLimits,
) -> Result<BTreeSet<Vertex>> {
    let mut omega = BTreeSet::new();
    if phi.is_zero() {
        return Ok(omega);
    }
    let push = |omega: &mut BTreeSet<Vertex>, r: &AdmissibleTrapezoid| -> Result<()> {
        let band = r.band();
        let count = band.cardinality(tree).unwrap_or(u64::MAX);
        if count > limits.max_omega as u64 {
            return Err(Error::IncompleteEnumeration(format!(
                "level set exceeds {} vertices ({r} alone has {count})",
                limits.max_omega
            )));
        }
        band.for_each_member(tree, |v| {
            omega.insert(v.clone());
        });
        if omega.len() > limits.max_omega {
            return Err(Error::IncompleteEnumeration(format!(
                "level set exceeds {} vertices",
                limits.max_omega
            )));
        }
        Ok(())
    };
    for (v, c) in phi.iter() {
        if c > tau {
            push(&mut omega, &AdmissibleTrapezoid::degenerate(v.clone()))?;
        }
    }
    let mass = phi.integral(tree);
    let ceiling = &mass / tau;
    let support = phi.support();
    let weighted: Vec<(Vertex, Scalar)> = phi
        .iter()
        .map(|(v, c)| (v.clone(), c * tree.weight(v)))
        .collect();
    let mut level = support.iter().map(Vertex::level).min().unwrap() + 1;
    while tree.level_weight(level) < ceiling {
        let width = tree.level_weight(level);
        for (root, depths) in group_by_ancestor(&support, level) {
            let mut heights = BTreeSet::new();
            for &d in &depths {
                heights.extend(trapezoid_heights_meeting_depth(d));
            }
            let by_depth: Vec<(u64, &Scalar)> = weighted
                .iter()
                .filter_map(|(v, w)| v.depth_below(&root).map(|d| (d, w)))
                .collect();
            for h in heights {
                let measure = int(h as i64) * &width;
                if measure >= ceiling {
                    break;
                }
                let inside = by_depth
                    .iter()
                    .filter(|(d, _)| h <= *d && *d < 2 * h)
                    .fold(Scalar::zero(), |acc, (_, w)| acc + *w);
                if inside / &measure > *tau {
                    push(&mut omega, &AdmissibleTrapezoid::new(root.clone(), h)?)?;
                }
            }
        }
        level += 1;
    }
    Ok(omega)
}

/// Disjoint admissible trapezoids inside `omega` whose union is `omega`.
fn tile(tree: &Tree, omega: &BTreeSet<Vertex>) -> Vec<AdmissibleTrapezoid> {
    let m = tree.m() as u64;
    let mut max_depth = 0u32;
    while m.pow(max_depth + 1) <= omega.len() as u64 {
        max_depth += 1;
    }
    let mut counts: HashMap<(Vertex, u64), u64> = HashMap::new();
    for v in omega {
        for d in 1..=max_depth as u64 {
            *counts.entry((v.ancestor(d), d)).or_default() += 1;
        }
    }
    let full = |root: &Vertex, d: u64| counts.get(&(root.clone(), d)) == Some(&m.pow(d as u32));
    let roots: BTreeSet<&Vertex> = counts.keys().map(|(r, _)| r).collect();
    let mut candidates: Vec<AdmissibleTrapezoid> = Vec::new();
    for root in roots {
        let mut h = 1u64;
        while 2 * h - 1 <= max_depth as u64 {
            if (h..2 * h).all(|d| full(root, d)) {
                candidates.push(AdmissibleTrapezoid::new(root.clone(), h).expect("positive height"));
            }
            h += 1;
        }
    }
    candidates.sort_by(|a, b| {
        b.root
            .level()
            .cmp(&a.root.level())
            .then(b.h.cmp(&a.h))
            .then(a.root.cmp(&b.root))
    });
    candidates.extend(omega.iter().cloned().map(AdmissibleTrapezoid::degenerate));

    let mut covered: BTreeSet<Vertex> = BTreeSet::new();
    let mut tiles = Vec::new();
    for r in candidates {
        let members = r.members(tree);
        if members.iter().all(|v| !covered.contains(v)) {
            covered.extend(members);
            tiles.push(r);
        }
    }
    tiles
}

/// Good/bad splitting of `g` at height `2^j` for integer `q >= 2`.
///
/// Each bad part is `(g - g_R) 1_R` on a tile `R`, and `g^j` equals `g` off
/// `Omega_j` and the tile average `g_R` on each tile.
pub fn good_bad_split(tree: &Tree, g: &FinFunc, q: &Exponent, j: i64, limits: SplitLimits) -> Result<GoodBadSplit> {
    let k = match q.as_integer() {
        Some(k) if k >= 2 => k,
        _ => {
            return Err(Error::Unsupported(format!(
                "good/bad splitting is exact only for integer q >= 2, got q = {q}"
            )))
        }
    };
    let tau = pow_i(2, j * k as i64);
    let phi = g.map(|c| powu(&c.abs(), k));
    let omega = level_set(tree, &phi, &tau, limits)?;
    let tiles = tile(tree, &omega);

    let mut good = FinFunc::zero();
    for (v, c) in g.iter() {
        if !omega.contains(v) {
            good.set(v.clone(), c.clone());
        }
    }
    let mut bad_parts = Vec::with_capacity(tiles.len());
    let mut c_bad_pow = Scalar::zero();
    for r in tiles {
        let band = r.band();
        let avg = g.average(tree, &band);
        let mut b = FinFunc::zero();
        band.for_each_member(tree, |v| {
            good.set(v.clone(), avg.clone());
            b.set(v.clone(), g.get(v) - &avg);
        });
        let ratio = b.abs_power_sum(tree, k) / (&tau * r.envelope().measure(tree));
        if ratio > c_bad_pow {
            c_bad_pow = ratio;
        }
        bad_parts.push(BadPart {
            function: b,
            trapezoid: r,
        });
    }
    let c_good = good.max_abs() / pow_i(2, j);
    Ok(GoodBadSplit {
        j,
        q: k,
        good,
        bad_parts,
        omega,
        c_good,
        c_bad_pow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    #[test]
    fn worked_split() {
        let t2 = Tree::new(2).unwrap();
        let x = t2.parse_vertex("0:1").unwrap();
        let g = FinFunc::indicator(x.clone());
        let s = good_bad_split(&t2, &g, &Exponent::two(), -1, SplitLimits::default()).unwrap();
        let expected: BTreeSet<Vertex> = [x, Vertex::geodesic(-1)].into_iter().collect();
        assert_eq!(s.omega, expected);
        assert_eq!(s.bad_parts.len(), 1);
        assert_eq!(
            s.bad_parts[0].trapezoid,
            AdmissibleTrapezoid::new(Vertex::origin(), 1).unwrap()
        );
        assert_eq!(s.c_good, int(1));
        assert_eq!(s.c_bad_pow, frac(1, 3));
        assert!(s.violations(&t2, &g).is_empty());
    }

    #[test]
    fn empty_level_set() {
        let t2 = Tree::new(2).unwrap();
        let g = FinFunc::indicator(Vertex::origin()).scale(&frac(1, 2));
        let s = good_bad_split(&t2, &g, &Exponent::two(), 0, SplitLimits::default()).unwrap();
        assert!(s.omega.is_empty());
        assert_eq!(s.good, g);
        let z = good_bad_split(&t2, &FinFunc::zero(), &Exponent::two(), 3, SplitLimits::default()).unwrap();
        assert!(z.bad_parts.is_empty() && z.good.is_zero());
    }

    #[test]
    fn rejects_non_integer_exponents() {
        let t2 = Tree::new(2).unwrap();
        let g = FinFunc::indicator(Vertex::origin());
        let q = Exponent::parse("3/2").unwrap();
        assert!(matches!(
            good_bad_split(&t2, &g, &q, 0, SplitLimits::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn cap_is_reported() {
        let t2 = Tree::new(2).unwrap();
        let g = FinFunc::indicator(Vertex::origin());
        let tight = SplitLimits { max_omega: 8 };
        assert!(matches!(
            good_bad_split(&t2, &g, &Exponent::two(), -6, tight),
            Err(Error::IncompleteEnumeration(_))
        ));
    }
}
