//! Hardy–Littlewood maximal function over admissible trapezoids and the
//! sharp maximal function over CZ sets, with certified cutoffs.
//!
//! Both suprema range over sets rooted on the upward path from `x`. At
//! height `t` above `x` only finitely many heights keep `x` inside the set,
//! and the smallest such set has a measure growing like `m^t`. An average
//! (or oscillation) is bounded by a norm of the input divided by the
//! measure, so once that bound drops below the running best nothing higher
//! can win and the scan stops. The certificate records where.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::scalar::{format_scalar, int, sqrt_plus_lt_sqrt, to_f64, NormValue, Scalar};
use crate::sets::{cz_measure_closed, AdmissibleTrapezoid, Band, CzSet};
use crate::tree::{Tree, Vertex, Window};

/// Where an enumeration stopped and why the rest cannot matter.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffCertificate {
    /// Every set left unexamined has measure at least this.
    pub measure_bound: Scalar,
    /// Root level at which the scan stopped.
    pub stop_level: i64,
    pub rule: &'static str,
}

impl CutoffCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "measure_bound": format_scalar(&self.measure_bound),
            "stop_level": self.stop_level,
            "rule": self.rule,
        })
    }
}

pub trait Witness: Clone {
    fn root(&self) -> &Vertex;
    fn measure(&self, tree: &Tree) -> Scalar;
    fn to_json(&self, tree: &Tree) -> Value;
}

impl Witness for CzSet {
    fn root(&self) -> &Vertex {
        &self.root
    }
    fn measure(&self, tree: &Tree) -> Scalar {
        CzSet::measure(self, tree)
    }
    fn to_json(&self, tree: &Tree) -> Value {
        CzSet::to_json(self, tree)
    }
}

impl Witness for AdmissibleTrapezoid {
    fn root(&self) -> &Vertex {
        &self.root
    }
    fn measure(&self, tree: &Tree) -> Scalar {
        AdmissibleTrapezoid::measure(self, tree)
    }
    fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "root": self.root.to_string(),
            "h": self.h,
            "degenerate": self.degenerate,
            "measure": format_scalar(&self.measure(tree)),
        })
    }
}

#[derive(Clone, Debug)]
pub struct MaximalResult<W> {
    pub value: NormValue,
    pub witness: W,
    pub certificate: CutoffCertificate,
    pub sets_examined: usize,
}

impl<W: Witness> MaximalResult<W> {
    pub fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "value": self.value,
            "witness": self.witness.to_json(tree),
            "certificate": self.certificate.to_json(),
            "sets_examined": self.sets_examined,
        })
    }
}

/// Orders candidates: larger value, then smaller measure, then lower root
/// level, then smaller root word.
pub(crate) fn beats(
    value: &NormValue,
    measure: &Scalar,
    root: &Vertex,
    best_value: &NormValue,
    best_measure: &Scalar,
    best_root: &Vertex,
) -> bool {
    match value.cmp_value(best_value) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            (measure, root.level(), root.word()) < (best_measure, best_root.level(), best_root.word())
        }
    }
}

pub(crate) struct Best<W> {
    pub value: NormValue,
    pub measure: Scalar,
    pub witness: W,
    pub examined: usize,
}

impl<W: Witness> Best<W> {
    pub fn new(tree: &Tree, value: NormValue, witness: W) -> Self {
        Best {
            value,
            measure: witness.measure(tree),
            witness,
            examined: 1,
        }
    }

    pub fn offer(&mut self, tree: &Tree, value: NormValue, witness: W) {
        self.examined += 1;
        let measure = witness.measure(tree);
        if beats(
            &value,
            &measure,
            witness.root(),
            &self.value,
            &self.measure,
            self.witness.root(),
        ) {
            self.value = value;
            self.measure = measure;
            self.witness = witness;
        }
    }

    pub fn finish(self, certificate: CutoffCertificate) -> MaximalResult<W> {
        MaximalResult {
            value: self.value,
            witness: self.witness,
            certificate,
            sets_examined: self.examined,
        }
    }
}

/// `sup` of averages of `phi >= 0` over admissible trapezoids containing `x`.
pub fn hl_maximal(tree: &Tree, phi: &FinFunc, x: &Vertex) -> Result<MaximalResult<AdmissibleTrapezoid>> {
    if phi.iter().any(|(_, c)| c.is_negative()) {
        return Err(Error::invalid("maximal function input must be nonnegative"));
    }
    let mut best = Best::new(
        tree,
        NormValue::Exact(phi.get(x)),
        AdmissibleTrapezoid::degenerate(x.clone()),
    );
    if phi.is_zero() {
        return Ok(best.finish(CutoffCertificate {
            measure_bound: Scalar::zero(),
            stop_level: x.level(),
            rule: "zero input",
        }));
    }
    let mass = phi.integral(tree);
    let weighted: Vec<(Vertex, Scalar)> = phi
        .iter()
        .map(|(v, c)| (v.clone(), c * tree.weight(v)))
        .collect();
    let mut t = 1u64;
    loop {
        let level = x.level() + t as i64;
        let h_min = (t + 1).div_ceil(2);
        let mu_min = int(h_min as i64) * tree.level_weight(level);
        let best_value = best.value.exact().cloned().unwrap_or_else(Scalar::zero);
        if best_value.is_positive() && &mass / &mu_min < best_value {
            return Ok(best.finish(CutoffCertificate {
                measure_bound: mu_min,
                stop_level: level,
                rule: "||phi||_1 / mu < best",
            }));
        }
        let root = x.ancestor(t);
        let by_depth: Vec<(u64, &Scalar)> = weighted
            .iter()
            .filter_map(|(v, w)| v.depth_below(&root).map(|d| (d, w)))
            .collect();
        for h in h_min..=t {
            let inside = by_depth
                .iter()
                .filter(|(d, _)| h <= *d && *d < 2 * h)
                .fold(Scalar::zero(), |acc, (_, w)| acc + *w);
            let r = AdmissibleTrapezoid::new(root.clone(), h)?;
            let avg = inside / r.measure(tree);
            best.offer(tree, NormValue::Exact(avg), r);
        }
        t += 1;
    }
}

/// Upper bound on any oscillation over a set of measure `mu`:
/// `(||f||_q^q / mu)^(1/q) + ||f||_1 / mu`.
pub(crate) struct OscillationBound {
    q: Exponent,
    l1: Scalar,
    /// `||f||_q^q`, exact for integer `q`.
    lq_exact: Option<Scalar>,
    lq_f64: f64,
}

impl OscillationBound {
    pub fn new(tree: &Tree, f: &FinFunc, q: &Exponent) -> OscillationBound {
        let l1 = f.abs_power_sum(tree, 1);
        let lq_exact = q.as_integer().map(|k| f.abs_power_sum(tree, k));
        let lq_f64 = match &lq_exact {
            Some(s) => to_f64(s),
            None => f.lp_norm(tree, q).to_f64().powf(q.to_f64()),
        };
        OscillationBound {
            q: q.clone(),
            l1,
            lq_exact,
            lq_f64,
        }
    }

    /// True when no set of measure `>= mu` can reach `best`.
    pub fn below(&self, mu: &Scalar, best: &NormValue) -> bool {
        if best.is_zero() {
            return false;
        }
        match (self.q.as_integer(), best) {
            (Some(1), NormValue::Exact(b)) => int(2) * &self.l1 / mu < *b,
            (Some(2), b) if b.is_exact() => sqrt_plus_lt_sqrt(
                &(self.lq_exact.as_ref().unwrap() / mu),
                &(&self.l1 / mu),
                &b.exact_square().unwrap(),
            ),
            _ => {
                let muf = to_f64(mu);
                let bound = (self.lq_f64 / muf).powf(1.0 / self.q.to_f64()) + to_f64(&self.l1) / muf;
                bound * (1.0 + 1e-9) < best.to_f64()
            }
        }
    }
}

/// Shared scan over CZ sets containing `x`, evaluating `eval` on each band
/// that meets the support.
fn sup_over_cz_containing<E>(tree: &Tree, f: &FinFunc, q: &Exponent, x: &Vertex, eval: E) -> MaximalResult<CzSet>
where
    E: Fn(&Band) -> NormValue,
{
    let mut best = Best::new(tree, NormValue::zero(), CzSet::degenerate(x.clone()));
    if f.is_zero() {
        return best.finish(CutoffCertificate {
            measure_bound: Scalar::zero(),
            stop_level: x.level(),
            rule: "zero input",
        });
    }
    let bound = OscillationBound::new(tree, f, q);
    let support = f.support();
    let mut t = 1u64;
    loop {
        let level = x.level() + t as i64;
        let h_min = (t + 1).div_ceil(4);
        let root = x.ancestor(t);
        let mu_min = cz_measure_closed(tree, &root, h_min);
        if bound.below(&mu_min, &best.value) {
            return best.finish(CutoffCertificate {
                measure_bound: mu_min,
                stop_level: level,
                rule: "(||f||_q^q / mu)^(1/q) + ||f||_1 / mu < best",
            });
        }
        let depths: Vec<u64> = support.iter().filter_map(|v| v.depth_below(&root)).collect();
        for h in h_min..=2 * t {
            let set = CzSet::new(root.clone(), h).expect("positive height");
            let band = set.band();
            if depths.iter().any(|d| band.lo <= *d && *d <= band.hi) {
                let value = eval(&band);
                best.offer(tree, value, set);
            }
        }
        t += 1;
    }
}

/// `f^{#,q}(x)`: supremum of `q`-oscillations over CZ sets containing `x`.
pub fn sharp_maximal(tree: &Tree, f: &FinFunc, q: &Exponent, x: &Vertex) -> Result<MaximalResult<CzSet>> {
    if q.is_infinite() {
        return Err(Error::invalid("sharp maximal function needs a finite exponent"));
    }
    Ok(sup_over_cz_containing(tree, f, q, x, |band| f.oscillation(tree, band, q)))
}

/// Supremum over CZ sets containing `x` of `inf_c` of the `q`-deviation
/// from `c`. Lies between half the sharp maximal function and the full one.
pub fn infimal_sharp(tree: &Tree, f: &FinFunc, q: &Exponent, x: &Vertex) -> Result<MaximalResult<CzSet>> {
    if q.is_infinite() {
        return Err(Error::invalid("sharp maximal function needs a finite exponent"));
    }
    Ok(sup_over_cz_containing(tree, f, q, x, |band| {
        f.infimal_oscillation(tree, band, q)
    }))
}

/// Pointwise sharp maximal function on every vertex of a window, in parallel.
pub fn sharp_field(
    tree: &Tree,
    f: &FinFunc,
    q: &Exponent,
    window: &Window,
) -> Result<BTreeMap<Vertex, MaximalResult<CzSet>>> {
    window
        .vertices(tree)
        .into_par_iter()
        .map(|v| sharp_maximal(tree, f, q, &v).map(|r| (v, r)))
        .collect()
}

pub fn sharp_field_sequential(
    tree: &Tree,
    f: &FinFunc,
    q: &Exponent,
    window: &Window,
) -> Result<BTreeMap<Vertex, MaximalResult<CzSet>>> {
    window
        .vertices(tree)
        .into_iter()
        .map(|v| sharp_maximal(tree, f, q, &v).map(|r| (v, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn chi() -> (Tree, FinFunc, Vertex) {
        let t2 = Tree::new(2).unwrap();
        let x = t2.parse_vertex("0:1").unwrap();
        (t2, FinFunc::indicator(x.clone()), x)
    }

    #[test]
    fn hl_examples() {
        let (t2, phi, x) = chi();
        let at_x = hl_maximal(&t2, &phi, &x).unwrap();
        assert_eq!(at_x.value, NormValue::Exact(int(1)));
        assert!(at_x.witness.degenerate);
        let at_o = hl_maximal(&t2, &phi, &Vertex::origin()).unwrap();
        assert_eq!(at_o.value, NormValue::Exact(frac(1, 16)));
        assert_eq!(at_o.witness, AdmissibleTrapezoid::new(Vertex::geodesic(2), 2).unwrap());
        let zero = hl_maximal(&t2, &FinFunc::zero(), &x).unwrap();
        assert!(zero.value.is_zero());
        assert!(hl_maximal(&t2, &phi.scale(&int(-1)), &x).is_err());
    }

    #[test]
    fn sharp_examples() {
        let (t2, f, x) = chi();
        let cz = CzSet::new(Vertex::origin(), 1).unwrap();
        for at in [x.clone(), Vertex::geodesic(-1)] {
            let r = sharp_maximal(&t2, &f, &Exponent::one(), &at).unwrap();
            assert_eq!(r.value, NormValue::Exact(frac(5, 18)));
            assert_eq!(r.witness, cz);
        }
        let zero = sharp_maximal(&t2, &FinFunc::zero(), &Exponent::two(), &x).unwrap();
        assert!(zero.value.is_zero());
    }

    #[test]
    fn field_matches_pointwise_and_is_shift_free() {
        let (t2, f, _) = chi();
        let w = Window::new(Vertex::geodesic(1), 3);
        let par = sharp_field(&t2, &f, &Exponent::one(), &w).unwrap();
        let seq = sharp_field_sequential(&t2, &f, &Exponent::one(), &w).unwrap();
        let max = par
            .values()
            .map(|r| r.value.exact().unwrap().clone())
            .max()
            .unwrap();
        assert_eq!(max, frac(5, 18));
        for (v, r) in &par {
            assert_eq!(r.value, seq[v].value);
            assert_eq!(r.witness, seq[v].witness);
        }
    }

    #[test]
    fn infimal_lies_between_half_and_full() {
        let (t2, f, x) = chi();
        for q in [Exponent::one(), Exponent::two()] {
            let s = sharp_maximal(&t2, &f, &q, &x).unwrap().value;
            let b = infimal_sharp(&t2, &f, &q, &x).unwrap().value;
            assert_ne!(b.cmp_value(&s), Ordering::Greater);
            assert_ne!(s.scale(&frac(1, 2)).cmp_value(&b), Ordering::Greater);
        }
    }
}
