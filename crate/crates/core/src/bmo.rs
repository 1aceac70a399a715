//! BMO norms over CZ sets, the pairing with atoms and the kernel
//! smoothness constant.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::func::{pairing, Exponent, FinFunc};
use crate::hardy::is_atom;
use crate::maximal::{beats, Best, CutoffCertificate, OscillationBound};
use crate::scalar::{parse_scalar, NormValue, Scalar};
use crate::sets::{group_by_ancestor, heights_meeting_depth, CzSet, SupersetFamily, MeasureCutoff};
use crate::tree::{Tree, Vertex, Window};

#[derive(Clone, Debug)]
pub struct BmoReport {
    pub value: NormValue,
    pub q: Exponent,
    pub witness: CzSet,
    pub certificate: CutoffCertificate,
    pub sets_examined: usize,
}

impl BmoReport {
    pub fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "value": self.value,
            "q": self.q.to_string(),
            "witness": self.witness.to_json(tree),
            "certificate": self.certificate.to_json(),
            "sets_examined": self.sets_examined,
        })
    }
}

/// `sup` over CZ sets of the `q`-oscillation of `f`.
///
/// Sets missing the support have zero oscillation. The rest are swept by
/// root level upward; at each level roots are the ancestors of the
/// support. A set rooted at level `L` that meets the support has depth at
/// least `max(1, L - top)` to its nearest support vertex, which fixes the
/// smallest height and so a measure floor. The sweep ends once the
/// oscillation bound at that floor falls below the best value.
pub fn bmo_norm(tree: &Tree, f: &FinFunc, q: &Exponent) -> Result<BmoReport> {
    if q.is_infinite() {
        return Err(Error::invalid("BMO norm needs a finite exponent"));
    }
    let support = f.support();
    let first = support.first().cloned().unwrap_or_else(Vertex::origin);
    let mut best = Best::new(tree, NormValue::zero(), CzSet::degenerate(first.clone()));
    if f.is_zero() {
        return Ok(report(best, q, CutoffCertificate {
            measure_bound: Scalar::zero(),
            stop_level: first.level(),
            rule: "zero input",
        }));
    }
    let bound = OscillationBound::new(tree, f, q);
    let family = SupersetFamily::new(tree, &support, MeasureCutoff::Unbounded)?;
    let bottom = support.iter().map(Vertex::level).min().unwrap();
    let mut level = bottom + 1;
    loop {
        let floor = family.measure_floor(level);
        if bound.below(&floor, &best.value) {
            return Ok(report(best, q, CutoffCertificate {
                measure_bound: floor,
                stop_level: level,
                rule: "(||f||_q^q / mu)^(1/q) + ||f||_1 / mu < best",
            }));
        }
        for (root, depths) in group_by_ancestor(&support, level) {
            let lo = depths
                .iter()
                .filter(|&&d| d > 0)
                .map(|&d| *heights_meeting_depth(d).start())
                .min();
            let Some(lo) = lo else { continue };
            let hi = depths.iter().map(|&d| 2 * d).max().unwrap();
            for h in lo..=hi {
                let set = CzSet::new(root.clone(), h).expect("positive height");
                let band = set.band();
                if depths.iter().any(|d| band.lo <= *d && *d <= band.hi) {
                    let value = f.oscillation(tree, &band, q);
                    best.offer(tree, value, set);
                }
            }
        }
        level += 1;
    }
}

fn report(best: Best<CzSet>, q: &Exponent, certificate: CutoffCertificate) -> BmoReport {
    let r = best.finish(certificate);
    BmoReport {
        value: r.value,
        q: q.clone(),
        witness: r.witness,
        certificate: r.certificate,
        sets_examined: r.sets_examined,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingCheck {
    pub holds: bool,
    pub pairing: Scalar,
    pub bmo1: Scalar,
    /// `bmo1 - |pairing|`.
    pub slack: Scalar,
}

/// Checks `|<f, a>| <= ||f||_BMO1` for a `(1, inf)`-atom `a` on `set`.
pub fn atom_pairing_bound_check(tree: &Tree, f: &FinFunc, a: &FinFunc, set: &CzSet) -> Result<PairingCheck> {
    let check = is_atom(tree, a, set, &Exponent::Infinity);
    if let Some(v) = check.violation {
        return Err(Error::invalid(format!("not a (1,inf)-atom on {set}: {v}")));
    }
    let p = pairing(tree, f, a);
    let norm = bmo_norm(tree, f, &Exponent::one())?;
    let bmo1 = norm.value.exact().cloned().expect("q = 1 is exact");
    let slack = &bmo1 - p.abs();
    Ok(PairingCheck {
        holds: !slack.is_negative(),
        pairing: p,
        bmo1,
        slack,
    })
}

/// Finitely supported kernel `K(y, x)` declared valid on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelWindow {
    pub window: Window,
    pub entries: BTreeMap<(Vertex, Vertex), Scalar>,
}

#[derive(Deserialize)]
struct KernelJson {
    window: WindowJson,
    entries: Vec<KernelEntry>,
}

#[derive(Deserialize)]
struct WindowJson {
    root: String,
    depth: u64,
}

#[derive(Deserialize)]
struct KernelEntry {
    y: String,
    x: String,
    val: String,
}

impl KernelWindow {
    pub fn new(window: Window) -> KernelWindow {
        KernelWindow {
            window,
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, y: Vertex, x: Vertex, val: Scalar) {
        if val.is_zero() {
            self.entries.remove(&(y, x));
        } else {
            self.entries.insert((y, x), val);
        }
    }

    pub fn get(&self, y: &Vertex, x: &Vertex) -> Scalar {
        self.entries
            .get(&(y.clone(), x.clone()))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    /// `K(y, x)` given by `kernel` for every pair of window vertices.
    pub fn from_fn<F: Fn(&Vertex, &Vertex) -> Scalar>(tree: &Tree, window: Window, kernel: F) -> KernelWindow {
        let vertices = window.vertices(tree);
        let mut k = KernelWindow::new(window);
        for y in &vertices {
            for x in &vertices {
                k.set(y.clone(), x.clone(), kernel(y, x));
            }
        }
        k
    }

    pub fn from_json(tree: &Tree, text: &str) -> Result<KernelWindow> {
        let raw: KernelJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("kernel JSON: {e}")))?;
        let window = Window::new(tree.parse_vertex(&raw.window.root)?, raw.window.depth);
        let mut k = KernelWindow::new(window);
        for e in raw.entries {
            let key = (tree.parse_vertex(&e.y)?, tree.parse_vertex(&e.x)?);
            if k.entries.contains_key(&key) {
                return Err(Error::invalid(format!("kernel entry ({}, {}) listed twice", key.0, key.1)));
            }
            k.set(key.0, key.1, parse_scalar(&e.val)?);
        }
        Ok(k)
    }

    pub fn y_support(&self) -> BTreeSet<Vertex> {
        self.entries.keys().map(|(y, _)| y.clone()).collect()
    }

    pub fn x_support(&self) -> BTreeSet<Vertex> {
        self.entries.keys().map(|(_, x)| x.clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct HormanderReport {
    pub value: NormValue,
    /// `(S, y, z)` attaining the value; `None` for an empty family.
    pub witness: Option<(CzSet, Vertex, Vertex)>,
    pub sets_examined: usize,
}

impl HormanderReport {
    pub fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "value": self.value,
            "witness": self.witness.as_ref().map(|(s, y, z)| json!({
                "set": s.to_json(tree),
                "y": y.to_string(),
                "z": z.to_string(),
            })),
            "sets_examined": self.sets_examined,
        })
    }
}

/// `max_S max_{y,z in S} sum_{x outside S*} |K(y,x) - K(z,x)| m^l(x)`.
///
/// The complement of the enlargement `S*` is taken within the kernel's
/// x-support, where the integrand can be nonzero. Points of `S` outside the
/// kernel's y-support all have identical (zero) rows, so one of them
/// stands in for the rest.
pub fn hormander_constant(tree: &Tree, kernel: &KernelWindow, family: &[CzSet]) -> Result<HormanderReport> {
    let window = &kernel.window;
    for (y, x) in kernel.entries.keys() {
        if !window.contains(y) || !window.contains(x) {
            return Err(Error::IncompleteDomain(format!(
                "kernel entry ({y}, {x}) lies outside the window {window}"
            )));
        }
    }
    for set in family {
        let e = set.enlargement();
        let inside = e
            .root
            .depth_below(&window.root)
            .is_some_and(|d| d + e.hi <= window.depth);
        if !inside {
            return Err(Error::IncompleteDomain(format!(
                "{set} or its enlargement escapes the window {window}"
            )));
        }
    }
    let ys = kernel.y_support();
    let xs: Vec<(Vertex, Scalar)> = kernel
        .x_support()
        .into_iter()
        .map(|x| {
            let w = tree.weight(&x);
            (x, w)
        })
        .collect();
    let rows: BTreeMap<&Vertex, BTreeMap<&Vertex, &Scalar>> =
        kernel.entries.iter().fold(BTreeMap::new(), |mut acc, ((y, x), c)| {
            acc.entry(y).or_default().insert(x, c);
            acc
        });
    let zero = Scalar::zero();
    let row_value = |y: &Vertex, x: &Vertex| -> Scalar {
        rows.get(y)
            .and_then(|r| r.get(x))
            .map(|c| (*c).clone())
            .unwrap_or_else(|| zero.clone())
    };

    let per_set: Vec<(Scalar, CzSet, Vertex, Vertex)> = family
        .par_iter()
        .map(|set| {
            let band = set.band();
            let enlarged = set.enlargement();
            let mut points: Vec<Vertex> = ys.iter().filter(|y| band.contains(y)).cloned().collect();
            let count = band.cardinality(tree).unwrap_or(u64::MAX);
            if (points.len() as u64) < count {
                let mut stand_in = None;
                band.for_each_member(tree, |v| {
                    if stand_in.is_none() && !ys.contains(v) {
                        stand_in = Some(v.clone());
                    }
                });
                points.extend(stand_in);
            }
            let outside: Vec<&(Vertex, Scalar)> = xs.iter().filter(|(x, _)| !enlarged.contains(x)).collect();
            let mut best = (Scalar::zero(), set.root.clone(), set.root.clone());
            for (i, y) in points.iter().enumerate() {
                for z in &points[i + 1..] {
                    let total = outside.iter().fold(Scalar::zero(), |acc, (x, w)| {
                        acc + (row_value(y, x) - row_value(z, x)).abs() * w
                    });
                    if total > best.0 {
                        best = (total, y.clone(), z.clone());
                    }
                }
            }
            (best.0, set.clone(), best.1, best.2)
        })
        .collect();

    let mut winner: Option<(Scalar, Scalar, CzSet, Vertex, Vertex)> = None;
    for (value, set, y, z) in per_set {
        let measure = set.measure(tree);
        let better = match &winner {
            None => true,
            Some((bv, bm, bs, _, _)) => beats(
                &NormValue::Exact(value.clone()),
                &measure,
                &set.root,
                &NormValue::Exact(bv.clone()),
                bm,
                &bs.root,
            ),
        };
        if better {
            winner = Some((value, measure, set, y, z));
        }
    }
    Ok(HormanderReport {
        value: NormValue::Exact(winner.as_ref().map(|w| w.0.clone()).unwrap_or_default()),
        witness: winner.map(|(_, _, s, y, z)| (s, y, z)),
        sets_examined: family.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};
    use crate::sets::cz_sets_in_window;

    fn chi() -> (Tree, FinFunc, Vertex) {
        let t2 = Tree::new(2).unwrap();
        let x = t2.parse_vertex("0:1").unwrap();
        (t2, FinFunc::indicator(x.clone()), x)
    }

    #[test]
    fn worked_norm() {
        let (t2, f, _) = chi();
        let r = bmo_norm(&t2, &f, &Exponent::one()).unwrap();
        assert_eq!(r.value, NormValue::Exact(frac(5, 18)));
        assert_eq!(r.witness, CzSet::new(Vertex::origin(), 1).unwrap());
        assert!(bmo_norm(&t2, &FinFunc::zero(), &Exponent::one()).unwrap().value.is_zero());
        let two = bmo_norm(&t2, &f, &Exponent::two()).unwrap();
        assert_ne!(r.value.cmp_value(&two.value), std::cmp::Ordering::Greater);
    }

    #[test]
    fn homogeneity() {
        let (t2, f, _) = chi();
        let g = f.scale(&frac(-7, 3));
        let a = bmo_norm(&t2, &f, &Exponent::one()).unwrap().value;
        let b = bmo_norm(&t2, &g, &Exponent::one()).unwrap().value;
        assert_eq!(b, a.scale(&frac(7, 3)));
    }

    #[test]
    fn pairing_with_worked_atom() {
        let (t2, f, x) = chi();
        let a = FinFunc::from_pairs([(x, frac(1, 3)), (Vertex::geodesic(-1), frac(-1, 3))]).unwrap();
        let set = CzSet::new(Vertex::origin(), 1).unwrap();
        let check = atom_pairing_bound_check(&t2, &f, &a, &set).unwrap();
        assert!(check.holds);
        assert_eq!(check.pairing, frac(1, 6));
        assert_eq!(check.slack, frac(1, 9));
        assert!(atom_pairing_bound_check(&t2, &f, &a.scale(&int(2)), &set).is_err());
    }

    #[test]
    fn trivial_kernels_vanish() {
        let t2 = Tree::new(2).unwrap();
        let w = Window::new(Vertex::origin(), 5);
        let family = cz_sets_in_window(&t2, &w, true, true);
        let diag = KernelWindow::from_fn(&t2, w.clone(), |y, x| if y == x { int(1) } else { int(0) });
        assert!(hormander_constant(&t2, &diag, &family).unwrap().value.is_zero());
        let flat = KernelWindow::from_fn(&t2, w.clone(), |_, x| int(x.level()));
        assert!(hormander_constant(&t2, &flat, &family).unwrap().value.is_zero());
        let escaping = vec![CzSet::new(Vertex::origin(), 2).unwrap()];
        assert!(matches!(
            hormander_constant(&t2, &diag, &escaping),
            Err(Error::IncompleteDomain(_))
        ));
    }

    #[test]
    fn kernel_json() {
        let t2 = Tree::new(2).unwrap();
        let k = KernelWindow::from_json(
            &t2,
            r#"{"window":{"root":"0:","depth":3},"entries":[{"y":"0:1","x":"-1:","val":"1/2"}]}"#,
        )
        .unwrap();
        assert_eq!(k.get(&t2.parse_vertex("0:1").unwrap(), &Vertex::geodesic(-1)), frac(1, 2));
    }
}
