//! Finitely supported functions, exponents, integrals, norms, averages and
//! oscillations over bands.
//!
//! Oscillations over a set are computed from the support alone: off the
//! support `f = 0`, so the complement of the support inside the set
//! contributes `|c|^q` times its mass.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_scalar, int, parse_scalar, powu, to_f64, NormValue, Scalar};
use crate::sets::Band;
use crate::tree::{Tree, Vertex};

/// Integrability exponent `p >= 1`, possibly infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exponent {
    Finite(Scalar),
    Infinity,
}

impl Exponent {
    pub fn finite(p: Scalar) -> Result<Exponent> {
        if p < Scalar::one() {
            return Err(Error::invalid(format!(
                "exponent must be at least 1, got {}",
                format_scalar(&p)
            )));
        }
        Ok(Exponent::Finite(p))
    }

    pub fn one() -> Exponent {
        Exponent::Finite(Scalar::one())
    }

    pub fn two() -> Exponent {
        Exponent::Finite(int(2))
    }

    /// Accepts `inf`, integers, fractions `p/q` and decimals such as `1.5`.
    pub fn parse(s: &str) -> Result<Exponent> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        let value = match s.split_once('.') {
            Some((whole, frac)) if !s.contains('/') => {
                let digits = format!("{whole}{frac}");
                let scale = format!("1{}", "0".repeat(frac.len()));
                parse_scalar(&format!("{digits}/{scale}"))?
            }
            _ => parse_scalar(s)?,
        };
        Exponent::finite(value)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn value(&self) -> Option<&Scalar> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }

    /// The exponent as a positive integer, if it is one.
    pub fn as_integer(&self) -> Option<u32> {
        self.value()
            .filter(|p| p.is_integer())
            .and_then(|p| p.to_integer().to_u32())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => to_f64(p),
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `p / (p - 1)`, with `1 <-> infinity`.
    pub fn conjugate(&self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::one(),
            Exponent::Finite(p) if p.is_one() => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - Scalar::one())),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) if p.is_integer() => write!(f, "{}", p.numer()),
            Exponent::Finite(p) => write!(f, "{}/{}", p.numer(), p.denom()),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// `|x|^q` exactly when `q` is an integer.
fn abs_pow_exact(x: &Scalar, q: u32) -> Scalar {
    powu(&x.abs(), q)
}

fn abs_pow_f64(x: &Scalar, q: f64) -> f64 {
    to_f64(&x.abs()).powf(q)
}

/// A real rational function with finite support; zero values are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FinFunc {
    values: BTreeMap<Vertex, Scalar>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    v: String,
    val: String,
}

impl FinFunc {
    pub fn zero() -> FinFunc {
        FinFunc::default()
    }

    /// `c` at the single vertex `v`.
    pub fn point(v: Vertex, c: Scalar) -> FinFunc {
        let mut f = FinFunc::zero();
        f.set(v, c);
        f
    }

    pub fn indicator(v: Vertex) -> FinFunc {
        FinFunc::point(v, Scalar::one())
    }

    /// Builds from pairs; a vertex listed twice is an error.
    pub fn from_pairs<I: IntoIterator<Item = (Vertex, Scalar)>>(pairs: I) -> Result<FinFunc> {
        let mut seen = std::collections::BTreeSet::new();
        let mut f = FinFunc::zero();
        for (v, c) in pairs {
            if !seen.insert(v.clone()) {
                return Err(Error::invalid(format!("vertex {v} listed twice")));
            }
            f.set(v, c);
        }
        Ok(f)
    }

    pub fn set(&mut self, v: Vertex, c: Scalar) {
        if c.is_zero() {
            self.values.remove(&v);
        } else {
            self.values.insert(v, c);
        }
    }

    pub fn add_at(&mut self, v: &Vertex, c: &Scalar) {
        let new = self.get(v) + c;
        self.set(v.clone(), new);
    }

    pub fn get(&self, v: &Vertex) -> Scalar {
        self.values.get(v).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vertex, &Scalar)> {
        self.values.iter()
    }

    pub fn support(&self) -> Vec<Vertex> {
        self.values.keys().cloned().collect()
    }

    pub fn max_abs(&self) -> Scalar {
        self.values
            .values()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn map<F: Fn(&Scalar) -> Scalar>(&self, op: F) -> FinFunc {
        let mut out = FinFunc::zero();
        for (v, c) in &self.values {
            out.set(v.clone(), op(c));
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> FinFunc {
        self.map(|x| x * c)
    }

    pub fn abs(&self) -> FinFunc {
        self.map(Signed::abs)
    }

    /// Pointwise combination over the union of supports.
    pub fn zip_with<F: Fn(&Scalar, &Scalar) -> Scalar>(&self, other: &FinFunc, op: F) -> FinFunc {
        let mut keys: Vec<&Vertex> = self.values.keys().chain(other.values.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut out = FinFunc::zero();
        for v in keys {
            out.set(v.clone(), op(&self.get(v), &other.get(v)));
        }
        out
    }

    pub fn add(&self, other: &FinFunc) -> FinFunc {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FinFunc) -> FinFunc {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max(&self, other: &FinFunc) -> FinFunc {
        self.zip_with(other, |a, b| a.max(b).clone())
    }

    pub fn min(&self, other: &FinFunc) -> FinFunc {
        self.zip_with(other, |a, b| a.min(b).clone())
    }

    /// `f` restricted to the band.
    pub fn restrict(&self, band: &Band) -> FinFunc {
        FinFunc {
            values: self
                .values
                .iter()
                .filter(|(v, _)| band.contains(v))
                .map(|(v, c)| (v.clone(), c.clone()))
                .collect(),
        }
    }

    /// `k f / |f|` wherever `|f| > k`, `f` elsewhere.
    pub fn truncate(&self, k: &Scalar) -> FinFunc {
        self.map(|c| {
            if c.abs() > *k {
                if c.is_positive() {
                    k.clone()
                } else {
                    -k.clone()
                }
            } else {
                c.clone()
            }
        })
    }

    pub fn integral(&self, tree: &Tree) -> Scalar {
        self.values
            .iter()
            .fold(Scalar::zero(), |acc, (v, c)| acc + c * tree.weight(v))
    }

    pub fn integral_over(&self, tree: &Tree, band: &Band) -> Scalar {
        self.values
            .iter()
            .filter(|(v, _)| band.contains(v))
            .fold(Scalar::zero(), |acc, (v, c)| acc + c * tree.weight(v))
    }

    /// `sum |f|^p w` exactly, for integer `p`.
    pub fn abs_power_sum(&self, tree: &Tree, p: u32) -> Scalar {
        self.values.iter().fold(Scalar::zero(), |acc, (v, c)| {
            acc + abs_pow_exact(c, p) * tree.weight(v)
        })
    }

    fn abs_power_sum_f64(&self, tree: &Tree, p: f64) -> f64 {
        self.values
            .iter()
            .map(|(v, c)| abs_pow_f64(c, p) * to_f64(&tree.weight(v)))
            .sum()
    }

    pub fn lp_norm(&self, tree: &Tree, p: &Exponent) -> NormValue {
        match p {
            Exponent::Infinity => NormValue::Exact(self.max_abs()),
            Exponent::Finite(q) if q.is_one() => NormValue::Exact(self.abs_power_sum(tree, 1)),
            Exponent::Finite(q) if *q == int(2) => NormValue::Sqrt(self.abs_power_sum(tree, 2)),
            Exponent::Finite(q) => {
                let qf = to_f64(q);
                let sum = match p.as_integer() {
                    Some(k) => to_f64(&self.abs_power_sum(tree, k)),
                    None => self.abs_power_sum_f64(tree, qf),
                };
                NormValue::Approx(sum.powf(1.0 / qf))
            }
        }
    }

    pub fn average(&self, tree: &Tree, band: &Band) -> Scalar {
        self.integral_over(tree, band) / band.measure(tree)
    }

    /// `((1/mu(S)) sum_S |f - f_S|^q w)^(1/q)`.
    pub fn oscillation(&self, tree: &Tree, band: &Band, q: &Exponent) -> NormValue {
        let c = self.average(tree, band);
        self.deviation(tree, band, &c, q)
    }

    /// `((1/mu(S)) sum_S |f - c|^q w)^(1/q)` for a given constant `c`.
    pub fn deviation(&self, tree: &Tree, band: &Band, c: &Scalar, q: &Exponent) -> NormValue {
        let mu = band.measure(tree);
        let inside: Vec<(Scalar, Scalar)> = self
            .values
            .iter()
            .filter(|(v, _)| band.contains(v))
            .map(|(v, f)| (f.clone(), tree.weight(v)))
            .collect();
        let inside_mass = inside.iter().fold(Scalar::zero(), |acc, (_, w)| acc + w);
        let outside_mass = &mu - &inside_mass;
        match q.as_integer() {
            Some(k @ (1 | 2)) => {
                let sum = inside.iter().fold(Scalar::zero(), |acc, (f, w)| {
                    acc + abs_pow_exact(&(f - c), k) * w
                }) + abs_pow_exact(c, k) * &outside_mass;
                let mean = sum / &mu;
                if k == 1 {
                    NormValue::Exact(mean)
                } else {
                    NormValue::Sqrt(mean)
                }
            }
            Some(k) => {
                let sum = inside.iter().fold(Scalar::zero(), |acc, (f, w)| {
                    acc + abs_pow_exact(&(f - c), k) * w
                }) + abs_pow_exact(c, k) * &outside_mass;
                NormValue::Approx(to_f64(&(sum / &mu)).powf(1.0 / k as f64))
            }
            None => {
                let qf = q.to_f64();
                let cf = to_f64(c);
                let sum: f64 = inside
                    .iter()
                    .map(|(f, w)| (to_f64(f) - cf).abs().powf(qf) * to_f64(w))
                    .sum::<f64>()
                    + cf.abs().powf(qf) * to_f64(&outside_mass);
                NormValue::Approx((sum / to_f64(&mu)).powf(1.0 / qf))
            }
        }
    }

    /// `inf_c ((1/mu(S)) sum_S |f - c|^q w)^(1/q)`.
    ///
    /// `q = 1` uses a weighted median and `q = 2` the mean, both exact;
    /// other exponents use golden-section search to `1e-10`.
    pub fn infimal_oscillation(&self, tree: &Tree, band: &Band, q: &Exponent) -> NormValue {
        match q.as_integer() {
            Some(1) => {
                let c = self.weighted_median(tree, band);
                self.deviation(tree, band, &c, q)
            }
            Some(2) => self.oscillation(tree, band, q),
            _ => {
                let mut values: Vec<f64> = self
                    .values
                    .iter()
                    .filter(|(v, _)| band.contains(v))
                    .map(|(_, c)| to_f64(c))
                    .collect();
                values.push(0.0);
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let eval = |c: f64| {
                    let c = Scalar::from_float(c).unwrap_or_else(Scalar::zero);
                    self.deviation(tree, band, &c, q).to_f64()
                };
                let best = golden_section_min(eval, lo, hi, 1e-10);
                NormValue::Approx(best)
            }
        }
    }

    /// A minimiser of `c -> sum_S |f - c| w`, counting the zero mass off
    /// the support.
    pub fn weighted_median(&self, tree: &Tree, band: &Band) -> Scalar {
        let mu = band.measure(tree);
        let mut points: Vec<(Scalar, Scalar)> = self
            .values
            .iter()
            .filter(|(v, _)| band.contains(v))
            .map(|(v, c)| (c.clone(), tree.weight(v)))
            .collect();
        let inside = points.iter().fold(Scalar::zero(), |acc, (_, w)| acc + w);
        let zero_mass = &mu - inside;
        if zero_mass.is_positive() {
            points.push((Scalar::zero(), zero_mass));
        }
        points.sort();
        let half = &mu / int(2);
        let mut acc = Scalar::zero();
        for (c, w) in &points {
            acc += w;
            if acc >= half {
                return c.clone();
            }
        }
        Scalar::zero()
    }

    pub fn validate(&self, tree: &Tree) -> Result<()> {
        self.values.keys().try_for_each(|v| tree.validate(v))
    }

    pub fn from_json(tree: &Tree, text: &str) -> Result<FinFunc> {
        let entries: Vec<Entry> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("function JSON: {e}")))?;
        let pairs = entries
            .into_iter()
            .map(|e| Ok((tree.parse_vertex(&e.v)?, parse_scalar(&e.val)?)))
            .collect::<Result<Vec<_>>>()?;
        FinFunc::from_pairs(pairs)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let entries: Vec<Entry> = self
            .values
            .iter()
            .map(|(v, c)| Entry {
                v: v.to_string(),
                val: format_scalar(c),
            })
            .collect();
        serde_json::to_value(entries).expect("entries serialize")
    }
}

/// Minimum of a unimodal function on `[lo, hi]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    f(lo).min(f(hi)).min(fa).min(fb)
}

/// `sum f g w`.
pub fn pairing(tree: &Tree, f: &FinFunc, g: &FinFunc) -> Scalar {
    let (small, large) = if f.len() <= g.len() { (f, g) } else { (g, f) };
    small.iter().fold(Scalar::zero(), |acc, (v, c)| {
        acc + c * large.get(v) * tree.weight(v)
    })
}
