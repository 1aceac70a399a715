//! Two-sided estimates of the atomic `H^1` norm: an exact LP over atoms
//! carried by a finite CZ family (upper), and pairings against BMO
//! functions (lower).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use super::simplex::{solve, LinearProgram, LpOutcome};
use crate::bmo::bmo_norm;
use crate::error::{Error, Result};
use crate::func::{pairing, Exponent, FinFunc};
use crate::scalar::{format_scalar, to_f64, NormValue, Scalar};
use crate::sets::CzSet;
use crate::tree::{Tree, Vertex};

pub const MAX_FAMILY: usize = 64;
pub const MAX_UNIVERSE: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeResult {
    pub value: Scalar,
    /// Optimal `(S, b_S, t_S)` with `b_S` a multiple of an atom on `S`.
    pub pieces: Vec<(CzSet, FinFunc, Scalar)>,
    pub family_id: String,
}

impl GaugeResult {
    pub fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "value": format_scalar(&self.value),
            "family": self.family_id,
            "pieces": self.pieces.iter().map(|(s, b, t)| json!({
                "set": s.to_json(tree),
                "coefficient": format_scalar(t),
                "function": b.to_json_value(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Least `sum_S t_S` over `g = sum_S b_S` with `b_S` supported in `S`, of
/// zero integral and `|b_S| <= t_S / mu(S)`. Degenerate sets carry only
/// the zero atom and are skipped.
pub fn h1_lp_gauge(tree: &Tree, g: &FinFunc, family: &[CzSet], family_id: &str) -> Result<GaugeResult> {
    if !g.integral(tree).is_zero() {
        return Err(Error::Infeasible("g has nonzero integral".into()));
    }
    if g.is_zero() {
        return Ok(GaugeResult {
            value: Scalar::zero(),
            pieces: Vec::new(),
            family_id: family_id.to_string(),
        });
    }
    let sets: Vec<&CzSet> = family.iter().filter(|s| !s.degenerate).collect();
    if sets.len() > MAX_FAMILY {
        return Err(Error::InstanceTooLarge(format!(
            "{} sets exceed the family cap {MAX_FAMILY}",
            sets.len()
        )));
    }
    let mut members: Vec<Vec<Vertex>> = Vec::with_capacity(sets.len());
    let mut universe: BTreeSet<Vertex> = BTreeSet::new();
    for s in &sets {
        if s.band().cardinality(tree).is_none_or(|c| c > MAX_UNIVERSE as u64) {
            return Err(Error::InstanceTooLarge(format!("{s} has more than {MAX_UNIVERSE} vertices")));
        }
        let ms = s.members(tree);
        universe.extend(ms.iter().cloned());
        if universe.len() > MAX_UNIVERSE {
            return Err(Error::InstanceTooLarge(format!(
                "family covers more than {MAX_UNIVERSE} vertices"
            )));
        }
        members.push(ms);
    }
    if let Some(v) = g.support().into_iter().find(|v| !universe.contains(v)) {
        return Err(Error::Infeasible(format!("{v} is not covered by the family")));
    }
    let index: BTreeMap<&Vertex, usize> = universe.iter().enumerate().map(|(i, v)| (v, i)).collect();

    // variable layout: for pair k = (S, x): p = 3k, n = 3k + 1, slack = 3k + 2;
    // then one t_S per set
    let pairs: Vec<(usize, &Vertex)> = members
        .iter()
        .enumerate()
        .flat_map(|(s, ms)| ms.iter().map(move |v| (s, v)))
        .collect();
    let n_vars = 3 * pairs.len() + sets.len();
    let t_var = |s: usize| 3 * pairs.len() + s;
    let n_rows = universe.len() + sets.len() + pairs.len();
    let mut a = vec![vec![Scalar::zero(); n_vars]; n_rows];
    let mut b = vec![Scalar::zero(); n_rows];
    let one = Scalar::one();
    for (k, (s, v)) in pairs.iter().enumerate() {
        let row = index[v];
        a[row][3 * k] = one.clone();
        a[row][3 * k + 1] = -one.clone();
        let w = tree.weight(v);
        let mean_row = universe.len() + s;
        a[mean_row][3 * k] = w.clone();
        a[mean_row][3 * k + 1] = -w;
        let cap_row = universe.len() + sets.len() + k;
        a[cap_row][3 * k] = one.clone();
        a[cap_row][3 * k + 1] = one.clone();
        a[cap_row][3 * k + 2] = one.clone();
        a[cap_row][t_var(*s)] = -(one.clone() / sets[*s].measure(tree));
    }
    for (v, c) in g.iter() {
        b[index[v]] = c.clone();
    }
    let mut c = vec![Scalar::zero(); n_vars];
    for s in 0..sets.len() {
        c[t_var(s)] = one.clone();
    }
    match solve(&LinearProgram { a, b, c }) {
        LpOutcome::Optimal { x, value } => {
            let mut pieces = Vec::new();
            for (s, set) in sets.iter().enumerate() {
                let t = x[t_var(s)].clone();
                if t.is_zero() {
                    continue;
                }
                let mut f = FinFunc::zero();
                for (k, (ps, v)) in pairs.iter().enumerate() {
                    if *ps == s {
                        f.set((*v).clone(), &x[3 * k] - &x[3 * k + 1]);
                    }
                }
                pieces.push(((*set).clone(), f, t));
            }
            Ok(GaugeResult {
                value,
                pieces,
                family_id: family_id.to_string(),
            })
        }
        LpOutcome::Infeasible => Err(Error::Infeasible("no decomposition over this family".into())),
        LpOutcome::Unbounded => unreachable!("objective is bounded below by zero"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualityBound {
    pub value: Scalar,
    pub witness: Option<FinFunc>,
    /// Candidates with zero BMO norm.
    pub skipped: usize,
}

/// `max |<f, g>| / ||f||_BMO1` over the candidates.
pub fn h1_duality_lower(tree: &Tree, g: &FinFunc, candidates: &[FinFunc]) -> Result<DualityBound> {
    if !g.integral(tree).is_zero() {
        return Err(Error::invalid("duality bound needs a zero-integral function"));
    }
    let mut best = DualityBound {
        value: Scalar::zero(),
        witness: None,
        skipped: 0,
    };
    if g.is_zero() {
        return Ok(best);
    }
    for f in candidates {
        let norm = bmo_norm(tree, f, &Exponent::one())?;
        let norm = norm.value.exact().cloned().expect("q = 1 is exact");
        if norm.is_zero() {
            best.skipped += 1;
            continue;
        }
        let ratio = pairing(tree, f, g).abs() / norm;
        if ratio > best.value {
            best.value = ratio;
            best.witness = Some(f.clone());
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct H1Estimate {
    pub upper: GaugeResult,
    pub lower: DualityBound,
}

impl H1Estimate {
    /// `upper / lower`, when the lower bound is positive.
    pub fn gap(&self) -> Option<Scalar> {
        (!self.lower.value.is_zero()).then(|| &self.upper.value / &self.lower.value)
    }

    pub fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "upper": NormValue::Exact(self.upper.value.clone()),
            "lower": NormValue::Exact(self.lower.value.clone()),
            "gap": self.gap().map(|g| json!({"exact": format_scalar(&g), "approx": to_f64(&g)})),
            "family": self.upper.family_id,
            "decomposition": self.upper.to_json(tree)["pieces"],
            "lower_witness": self.lower.witness.as_ref().map(FinFunc::to_json_value),
            "skipped_candidates": self.lower.skipped,
        })
    }
}

pub fn h1_estimate(
    tree: &Tree,
    g: &FinFunc,
    family: &[CzSet],
    family_id: &str,
    candidates: &[FinFunc],
) -> Result<H1Estimate> {
    let upper = h1_lp_gauge(tree, g, family, family_id)?;
    let lower = h1_duality_lower(tree, g, candidates)?;
    Ok(H1Estimate { upper, lower })
}
