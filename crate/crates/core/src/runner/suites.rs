use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::report::{ConstantRecord, Counterexample, SuiteReport};
use super::{nonzero_function, random_atom, task_rng, FunctionKind, RunConfig};
use crate::bmo::{atom_pairing_bound_check, bmo_norm};
use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::hardy::{
    good_bad_split, h1_duality_lower, h1_lp_gauge, is_atom, telescoping_h1_upper, SplitLimits,
};
use crate::maximal::{infimal_sharp, sharp_maximal};
use crate::scalar::{format_scalar, frac, int, pow_i, to_f64, NormValue, Scalar};
use crate::sets::{
    covering_family, covering_index, cz_measure_closed, cz_sets_in_window, AdmissibleTrapezoid, Band, CzSet,
};
use crate::tree::{Tree, Vertex, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Sharp,
    Bmo,
    Decompose,
    H1,
    LpRatio,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Geometry,
        Suite::Sharp,
        Suite::Bmo,
        Suite::Decompose,
        Suite::H1,
        Suite::LpRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Sharp => "sharp",
            Suite::Bmo => "bmo",
            Suite::Decompose => "decompose",
            Suite::H1 => "h1",
            Suite::LpRatio => "lp-ratio",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Runs one suite. Tasks run in parallel with per-task generators and are
/// merged in task order, so the report depends only on the config.
pub fn run_suite(config: &RunConfig, suite: Suite) -> Result<SuiteReport> {
    config.validate()?;
    let tree = config.tree()?;
    let mut tally = match suite {
        Suite::Geometry => geometry(&tree, config),
        Suite::Sharp => per_task(config, |i| sharp_task(&tree, config, i))?,
        Suite::Bmo => per_task(config, |i| bmo_task(&tree, config, i))?,
        Suite::Decompose => per_task(config, |i| decompose_task(&tree, config, i))?,
        Suite::H1 => per_task(config, |i| h1_task(&tree, config, i))?,
        Suite::LpRatio => per_task(config, |i| lp_ratio_task(&tree, config, i))?,
    };
    let series = (suite == Suite::LpRatio).then(|| lp_ratio_series(&mut tally));
    Ok(tally.into_report(suite.name(), config, series))
}

fn per_task<F>(config: &RunConfig, task: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<Tally> + Sync,
{
    let parts: Vec<Tally> = (0..config.suite_size as u64)
        .into_par_iter()
        .map(&task)
        .collect::<Result<_>>()?;
    let mut total = Tally::new(config.seed, 0);
    for part in parts {
        total.merge(part);
    }
    Ok(total)
}

struct Extreme {
    property: &'static str,
    ratio: f64,
    exact: Option<Scalar>,
    extremizer: Value,
    task: u64,
    samples: usize,
}

struct Tally {
    seed: u64,
    task: u64,
    checks: usize,
    skipped: usize,
    failures: Vec<Counterexample>,
    extremes: BTreeMap<&'static str, Extreme>,
    values: Vec<f64>,
}

impl Tally {
    fn new(seed: u64, task: u64) -> Tally {
        Tally {
            seed,
            task,
            checks: 0,
            skipped: 0,
            failures: Vec::new(),
            extremes: BTreeMap::new(),
            values: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, property: &str, detail: impl FnOnce() -> Value) {
        self.checks += 1;
        if !ok {
            self.failures.push(Counterexample {
                property: property.to_string(),
                seed: self.seed,
                task: self.task,
                detail: detail(),
            });
        }
    }

    fn observe(
        &mut self,
        name: &'static str,
        property: &'static str,
        ratio: f64,
        exact: Option<Scalar>,
        extremizer: impl FnOnce() -> Value,
    ) {
        let task = self.task;
        let candidate = |extremizer: Value| Extreme {
            property,
            ratio,
            exact: exact.clone(),
            extremizer,
            task,
            samples: 1,
        };
        match self.extremes.get_mut(name) {
            None => {
                self.extremes.insert(name, candidate(extremizer()));
            }
            Some(e) => {
                let samples = e.samples + 1;
                if exceeds(ratio, exact.as_ref(), e) {
                    *e = candidate(extremizer());
                }
                e.samples = samples;
            }
        }
    }

    fn merge(&mut self, other: Tally) {
        self.checks += other.checks;
        self.skipped += other.skipped;
        self.failures.extend(other.failures);
        self.values.extend(other.values);
        for (name, e) in other.extremes {
            match self.extremes.get_mut(name) {
                None => {
                    self.extremes.insert(name, e);
                }
                Some(mine) => {
                    let samples = mine.samples + e.samples;
                    if exceeds(e.ratio, e.exact.as_ref(), mine) {
                        *mine = e;
                    }
                    mine.samples = samples;
                }
            }
        }
    }

    fn into_report(self, suite: &str, config: &RunConfig, series: Option<Value>) -> SuiteReport {
        let records = self
            .extremes
            .into_iter()
            .map(|(name, e)| ConstantRecord {
                name: name.to_string(),
                property: e.property.to_string(),
                max_ratio_exact: e.exact.as_ref().map(format_scalar),
                max_ratio: e.ratio,
                extremizer: e.extremizer,
                seed: self.seed,
                task: e.task,
                samples: e.samples,
            })
            .collect();
        SuiteReport {
            suite: suite.to_string(),
            config: config.to_json(),
            checks: self.checks,
            skipped: self.skipped,
            records,
            failures: self.failures,
            series,
        }
    }
}

/// Strictly larger than the current extreme; earlier tasks win ties.
fn exceeds(ratio: f64, exact: Option<&Scalar>, current: &Extreme) -> bool {
    match (exact, &current.exact) {
        (Some(a), Some(b)) => a > b,
        _ => ratio > current.ratio,
    }
}

const TOLERANCE: f64 = 1e-9;

/// `lhs <= sum_i c_i v_i` for `c_i >= 0`. Exact when no value is
/// approximate and the right side has at most two root terms; otherwise
/// in `f64` with a relative tolerance of `1e-9`.
fn le_combination(lhs: &NormValue, terms: &[(Scalar, &NormValue)]) -> bool {
    let all_exact = std::iter::once(lhs)
        .chain(terms.iter().map(|(_, v)| *v))
        .all(|v| matches!(v, NormValue::Exact(_)));
    if all_exact {
        let rhs = terms
            .iter()
            .fold(Scalar::zero(), |acc, (c, v)| acc + c * v.exact().unwrap());
        return lhs.exact().unwrap() <= &rhs;
    }
    let no_approx = lhs.is_exact() && terms.iter().all(|(_, v)| v.is_exact());
    if no_approx && terms.len() <= 2 {
        let a = lhs.exact_square().unwrap();
        let sq: Vec<(Scalar, Scalar)> = terms
            .iter()
            .map(|(c, v)| (c * c, v.exact_square().unwrap()))
            .collect();
        let d = sq.iter().fold(a, |acc, (c2, s)| acc - c2 * s);
        if !d.is_positive() {
            return true;
        }
        return match sq.as_slice() {
            [(a2, b), (c2, e)] => &d * &d <= int(4) * a2 * c2 * b * e,
            _ => false,
        };
    }
    let rhs: f64 = terms.iter().map(|(c, v)| to_f64(c) * v.to_f64()).sum();
    lhs.to_f64() <= rhs + TOLERANCE * rhs.abs().max(1.0)
}

fn ratio_of(num: &NormValue, den: &NormValue) -> (f64, Option<Scalar>) {
    let exact = match (num, den) {
        (NormValue::Exact(a), NormValue::Exact(b)) if !b.is_zero() => Some(a / b),
        _ => None,
    };
    let f = exact.as_ref().map(to_f64).unwrap_or_else(|| num.to_f64() / den.to_f64());
    (f, exact)
}

fn value_json(v: &NormValue) -> Value {
    serde_json::to_value(v).expect("norm values serialize")
}

/// `inner` lies inside `outer` as vertex sets.
fn band_within(inner: &Band, outer: &Band) -> bool {
    match inner.root.depth_below(&outer.root) {
        Some(k) => inner.lo + k >= outer.lo && inner.hi + k <= outer.hi,
        None => false,
    }
}

// ---------------------------------------------------------------- geometry

const GEOMETRY_MAX_H: u64 = 64;
/// Largest enumeration the geometry suite performs.
const ENUMERATION_CAP: u64 = 1 << 16;

/// Mass of a band by visiting every member, or `None` past the cap.
fn enumerated_mass(tree: &Tree, band: &Band) -> Option<Scalar> {
    band.cardinality(tree).filter(|&c| c <= ENUMERATION_CAP)?;
    let mut per_depth = vec![0u64; band.hi as usize + 1];
    tree.for_each_below(&band.root, band.lo, band.hi, |_, d| per_depth[d as usize] += 1);
    let level = band.root.level();
    Some(per_depth.iter().enumerate().fold(Scalar::zero(), |acc, (d, &n)| {
        acc + int(n as i64) * tree.level_weight(level - d as i64)
    }))
}

fn geometry(tree: &Tree, config: &RunConfig) -> Tally {
    let mut t = Tally::new(config.seed, 0);
    let m = tree.m() as u64;
    let roots: Vec<Vertex> = config.window.vertices(tree).into_iter().take(16).collect();

    for root in &roots {
        for h in 1..=GEOMETRY_MAX_H {
            let r = AdmissibleTrapezoid::new(root.clone(), h).expect("positive height");
            let expected = int(h as i64) * tree.weight(root);
            let measure = enumerated_mass(tree, &r.band()).unwrap_or_else(|| r.measure(tree));
            t.check(measure == expected, "trapezoid-measure", || {
                json!({"trapezoid": r.to_string(), "measure": format_scalar(&measure)})
            });
            let envelope = r.envelope();
            t.check(band_within(&r.band(), &envelope.band()), "envelope-contains-trapezoid", || {
                json!({"trapezoid": r.to_string()})
            });
            let ratio = envelope.measure(tree) / r.measure(tree);
            t.check(ratio <= int(4), "envelope-bound", || {
                json!({"trapezoid": r.to_string(), "ratio": format_scalar(&ratio)})
            });
            t.observe(
                "envelope-over-trapezoid",
                "mu(envelope) <= 4 mu(R)",
                to_f64(&ratio),
                Some(ratio.clone()),
                || json!({"trapezoid": r.to_string()}),
            );

            let set = CzSet::new(root.clone(), h).expect("positive height");
            let closed = cz_measure_closed(tree, root, h);
            let cz_measure = enumerated_mass(tree, &set.band()).unwrap_or_else(|| set.measure(tree));
            t.check(cz_measure == closed, "cz-measure", || {
                json!({"set": set.to_string(), "measure": format_scalar(&cz_measure)})
            });
            t.check(band_within(&set.band(), &set.enlargement()), "enlargement-contains-set", || {
                json!({"set": set.to_string()})
            });
            let grow = set.enlargement_measure(tree) / set.measure(tree);
            t.check(grow <= int(2), "enlargement-bound", || {
                json!({"set": set.to_string(), "ratio": format_scalar(&grow)})
            });
            t.observe(
                "enlargement-over-set",
                "mu(enlargement) <= 2 mu(S)",
                to_f64(&grow),
                Some(grow.clone()),
                || json!({"set": set.to_string()}),
            );
        }
    }

    for root in roots.iter().take(4) {
        for r in 0..=6u64 {
            if m.checked_pow(r as u32 + 1).is_none_or(|c| c > ENUMERATION_CAP) {
                break;
            }
            let enumerated = tree.ball_measure(root, r);
            let closed = tree.ball_measure_closed(root, r);
            t.check(enumerated == closed, "ball-measure", || {
                json!({"center": root.to_string(), "radius": r, "measure": format_scalar(&enumerated)})
            });
        }
    }

    for n in 0..=20 {
        let (a, b) = (covering_family(n), covering_family(n + 1));
        t.check(band_within(&a.band(), &b.band()), "covering-nested", || json!({"n": n}));
    }
    for x in config.window.vertices(tree) {
        let j = covering_index(&x);
        let minimal = j == 0 || !covering_family(j - 1).contains(&x);
        t.check(covering_family(j).contains(&x) && minimal, "covering-index", || {
            json!({"vertex": x.to_string(), "index": j})
        });
    }
    t
}

// ------------------------------------------------------------------ sharp

fn random_points<R: Rng>(tree: &Tree, window: &Window, fs: &[&FinFunc], rng: &mut R) -> Vec<Vertex> {
    let mut points: BTreeSet<Vertex> = fs.iter().flat_map(|f| f.support()).collect();
    let all = window.vertices(tree);
    for _ in 0..2 {
        points.insert(all.choose(rng).unwrap().clone());
    }
    points.into_iter().collect()
}

fn sharp_kind(i: u64) -> FunctionKind {
    match i % 3 {
        0 => FunctionKind::Sparse,
        1 => FunctionKind::Rademacher,
        _ => FunctionKind::AtomCombo,
    }
}

fn sharp_task(tree: &Tree, config: &RunConfig, i: u64) -> Result<Tally> {
    let mut t = Tally::new(config.seed, i);
    let mut rng = task_rng(config.seed, i);
    let q = &config.q;
    let f = nonzero_function(tree, &config.window, sharp_kind(i), &mut rng);
    let g = nonzero_function(tree, &config.window, FunctionKind::Sparse, &mut rng);
    let points = random_points(tree, &config.window, &[&f, &g], &mut rng);
    let (abs_f, sum, diff) = (f.abs(), f.add(&g), f.sub(&g));
    let (max_fg, min_fg) = (f.max(&g), f.min(&g));
    let half = frac(1, 2);
    let one = Scalar::one();
    let inputs = || json!({"f": f.to_json_value(), "g": g.to_json_value(), "q": q.to_string()});

    let mut sup = NormValue::zero();
    for x in &points {
        let sf = sharp_maximal(tree, &f, q, x)?.value;
        let sg = sharp_maximal(tree, &g, q, x)?.value;
        let inf = infimal_sharp(tree, &f, q, x)?.value;
        let s_abs = sharp_maximal(tree, &abs_f, q, x)?.value;
        let s_sum = sharp_maximal(tree, &sum, q, x)?.value;
        let s_diff = sharp_maximal(tree, &diff, q, x)?.value;
        let s_max = sharp_maximal(tree, &max_fg, q, x)?.value;
        let s_min = sharp_maximal(tree, &min_fg, q, x)?.value;
        let at = |lhs: &NormValue, rhs: Value| {
            let mut d = inputs();
            d["x"] = json!(x.to_string());
            d["lhs"] = value_json(lhs);
            d["rhs"] = rhs;
            d
        };

        t.check(
            le_combination(&sf, &[(int(2), &inf)]) && le_combination(&inf, &[(one.clone(), &sf)]),
            "sharp-infimal-sandwich",
            || at(&inf, value_json(&sf)),
        );
        t.check(le_combination(&s_abs, &[(int(2), &sf)]), "sharp-abs", || {
            at(&s_abs, value_json(&sf))
        });
        t.check(
            le_combination(&s_sum, &[(one.clone(), &sf), (one.clone(), &sg)]),
            "sharp-subadditive",
            || at(&s_sum, json!([value_json(&sf), value_json(&sg)])),
        );
        let lattice_rhs = [(half.clone(), &sf), (half.clone(), &sg), (frac(3, 2), &s_diff)];
        for (lhs, id) in [(&s_max, "sharp-max"), (&s_min, "sharp-min")] {
            t.check(le_combination(lhs, &lattice_rhs), id, || {
                at(lhs, json!([value_json(&sf), value_json(&sg), value_json(&s_diff)]))
            });
        }

        if !inf.is_zero() {
            let (r, e) = ratio_of(&sf, &inf);
            t.observe("sharp-over-infimal", "f# <= 2 infimal f#", r, e, || at(&sf, value_json(&inf)));
        }
        if !sf.is_zero() {
            let (r, e) = ratio_of(&s_abs, &sf);
            t.observe("abs-sharp-over-sharp", "|f|# <= 2 f#", r, e, || at(&s_abs, value_json(&sf)));
        }
        let tight = 0.5 * (sf.to_f64() + sg.to_f64()) + s_diff.to_f64();
        if tight > 0.0 {
            t.observe(
                "lattice-sharp-over-bound",
                "max(f,g)# <= (f# + g#)/2 + (f-g)#",
                s_max.to_f64().max(s_min.to_f64()) / tight,
                None,
                || at(&s_max, json!(tight)),
            );
        }
        if f.get(x) != Scalar::zero() && sf.cmp_value(&sup).is_gt() {
            sup = sf.clone();
        }
    }

    // The sup of f# over the support equals the BMO norm when the extremal
    // set meets the support, which it does for every nonzero f.
    let norm = bmo_norm(tree, &f, q)?;
    let certified = f.support().iter().any(|v| norm.witness.contains(v));
    if !certified {
        return Err(Error::IncompleteDomain(format!(
            "BMO witness {} misses the support",
            norm.witness
        )));
    }
    let equal = match (&sup, &norm.value) {
        (NormValue::Approx(_), _) | (_, NormValue::Approx(_)) => {
            (sup.to_f64() - norm.value.to_f64()).abs() <= TOLERANCE * norm.value.to_f64().max(1.0)
        }
        _ => sup.cmp_value(&norm.value).is_eq(),
    };
    t.check(equal, "sharp-sup-equals-bmo", || {
        let mut d = inputs();
        d["sup"] = value_json(&sup);
        d["bmo"] = value_json(&norm.value);
        d
    });
    Ok(t)
}

// -------------------------------------------------------------------- bmo

/// Pairings per function; enough that the default suite size covers 500.
fn pairings_per_function(config: &RunConfig) -> usize {
    500usize.div_ceil(config.suite_size.max(1)).max(3)
}

fn bmo_kind(i: u64) -> FunctionKind {
    match i % 4 {
        0 => FunctionKind::Indicator,
        1 => FunctionKind::Sparse,
        2 => FunctionKind::Rademacher,
        _ => FunctionKind::AtomCombo,
    }
}

fn bmo_task(tree: &Tree, config: &RunConfig, i: u64) -> Result<Tally> {
    let mut t = Tally::new(config.seed, i);
    let mut rng = task_rng(config.seed, i);
    let kind = bmo_kind(i);
    let f = nonzero_function(tree, &config.window, kind, &mut rng);
    let fj = || json!({"f": f.to_json_value()});
    let b1 = bmo_norm(tree, &f, &Exponent::one())?;
    let b2 = bmo_norm(tree, &f, &Exponent::two())?;
    t.check(b1.value.cmp_value(&b2.value).is_le(), "bmo1-below-bmo2", || {
        let mut d = fj();
        d["bmo1"] = value_json(&b1.value);
        d["bmo2"] = value_json(&b2.value);
        d
    });
    if !b1.value.is_zero() {
        let (r, e) = ratio_of(&b2.value, &b1.value);
        t.observe("bmo2-over-bmo1", "||f||_BMO2 / ||f||_BMO1", r, e, fj);
    }
    if kind == FunctionKind::Indicator {
        let (r, e) = ratio_of(&b1.value, &NormValue::Exact(Scalar::one()));
        t.observe("indicator-bmo1", "||1_v||_BMO1", r, e, || {
            let mut d = fj();
            d["witness"] = json!(b1.witness.to_string());
            d
        });
    }
    let c = frac(-3, 2);
    let scaled = bmo_norm(tree, &f.scale(&c), &Exponent::one())?;
    t.check(scaled.value == b1.value.scale(&c), "bmo-homogeneous", fj);

    let b1_exact = b1.value.exact().cloned().expect("q = 1 is exact");
    let sets = cz_sets_in_window(tree, &config.window, false, false);
    if sets.is_empty() {
        return Err(Error::invalid("window holds no CZ set; use depth >= 3"));
    }
    for _ in 0..pairings_per_function(config) {
        let set = sets.choose(&mut rng).unwrap().clone();
        let a = random_atom(tree, &set, &mut rng);
        let check = atom_pairing_bound_check(tree, &f, &a, &set)?;
        t.check(check.holds, "atom-pairing", || {
            let mut d = fj();
            d["atom"] = a.to_json_value();
            d["set"] = json!(set.to_string());
            d["pairing"] = json!(format_scalar(&check.pairing));
            d
        });
        if !b1_exact.is_zero() {
            let ratio = check.pairing.abs() / &b1_exact;
            t.observe("pairing-over-bmo1", "|<f, a>| <= ||f||_BMO1", to_f64(&ratio), Some(ratio), || {
                let mut d = fj();
                d["atom"] = a.to_json_value();
                d["set"] = json!(set.to_string());
                d
            });
        }
    }
    Ok(t)
}

// -------------------------------------------------------------- decompose

/// Smallest `j` with `2^j >= peak`.
fn top_level(peak: &Scalar) -> i64 {
    let mut j = 0i64;
    while pow_i(2, j) < *peak {
        j += 1;
    }
    while pow_i(2, j - 1) >= *peak {
        j -= 1;
    }
    j
}

fn split_exponent(config: &RunConfig, i: u64) -> Exponent {
    match config.q.as_integer() {
        Some(k) if k >= 2 => config.q.clone(),
        _ => Exponent::Finite(int(2 + (i % 2) as i64)),
    }
}

fn decompose_task(tree: &Tree, config: &RunConfig, i: u64) -> Result<Tally> {
    let mut t = Tally::new(config.seed, i);
    let mut rng = task_rng(config.seed, i);
    let kind = if i.is_multiple_of(2) { FunctionKind::Sparse } else { FunctionKind::AtomCombo };
    let g = nonzero_function(tree, &config.window, kind, &mut rng);
    let q = split_exponent(config, i);
    let j = top_level(&g.max_abs()) - rng.random_range(0..=4i64);
    let limits = SplitLimits {
        max_omega: config.max_omega,
    };
    let split = match good_bad_split(tree, &g, &q, j, limits) {
        Ok(s) => s,
        Err(Error::IncompleteEnumeration(_)) => {
            t.skipped += 1;
            return Ok(t);
        }
        Err(e) => return Err(e),
    };
    let instance = || json!({"g": g.to_json_value(), "q": q.to_string(), "j": j});
    let violations = split.violations(tree, &g);
    t.checks += 1;
    for v in violations {
        let id = v.split(':').next().unwrap_or("split").to_string();
        let mut d = instance();
        d["violation"] = json!(v);
        t.failures.push(Counterexample {
            property: id,
            seed: config.seed,
            task: i,
            detail: d,
        });
    }
    t.observe(
        "c-good",
        "|g^j| <= c_good 2^j",
        to_f64(&split.c_good),
        Some(split.c_good.clone()),
        instance,
    );
    if !split.bad_parts.is_empty() {
        t.observe("c-bad", "||b_k||_q <= c_bad 2^j mu(envelope_k)^(1/q)", split.c_bad(), None, instance);
    }
    Ok(t)
}

// --------------------------------------------------------------------- h1

/// Family of all CZ sets inside the window.
pub(crate) fn auto_family(tree: &Tree, window: &Window) -> Vec<CzSet> {
    cz_sets_in_window(tree, window, false, false)
}

pub(crate) fn random_candidates(tree: &Tree, window: &Window, seed: u64, count: usize) -> Vec<FinFunc> {
    (0..count as u64)
        .map(|k| {
            let mut rng = task_rng(seed, k);
            let kind = if k % 2 == 0 { FunctionKind::Rademacher } else { FunctionKind::Sparse };
            nonzero_function(tree, window, kind, &mut rng)
        })
        .collect()
}

const H1_CANDIDATES: usize = 8;

fn h1_task(tree: &Tree, config: &RunConfig, i: u64) -> Result<Tally> {
    let mut t = Tally::new(config.seed, i);
    let mut rng = task_rng(config.seed, i);
    let g = nonzero_function(tree, &config.window, FunctionKind::AtomCombo, &mut rng);
    let family = auto_family(tree, &config.window);
    let mut candidates = random_candidates(tree, &config.window, rng.random(), H1_CANDIDATES);
    candidates.push(g.map(|c| if c.is_positive() { int(1) } else { int(-1) }));
    let gj = || json!({"g": g.to_json_value()});

    let upper = h1_lp_gauge(tree, &g, &family, "auto")?;
    let lower = h1_duality_lower(tree, &g, &candidates)?;
    t.check(lower.value <= upper.value, "h1-lower-below-upper", || {
        let mut d = gj();
        d["lower"] = json!(format_scalar(&lower.value));
        d["upper"] = json!(format_scalar(&upper.value));
        d
    });
    let mut total = FinFunc::zero();
    let mut coefficients = Scalar::zero();
    let mut atoms_ok = true;
    for (set, b, coefficient) in &upper.pieces {
        total = total.add(b);
        coefficients += coefficient;
        if !coefficient.is_zero() {
            let a = b.scale(&(Scalar::one() / coefficient));
            atoms_ok &= is_atom(tree, &a, set, &Exponent::Infinity).valid();
        }
    }
    t.check(total == g && atoms_ok && coefficients == upper.value, "h1-gauge-decomposition", gj);
    if !lower.value.is_zero() {
        let gap = &upper.value / &lower.value;
        t.observe("gauge-over-lower", "duality lower <= LP gauge", to_f64(&gap), Some(gap), gj);
    }

    let (tele, decomposition) = telescoping_h1_upper(tree, &g, &Exponent::two(), SplitLimits::default())?;
    let valid = decomposition.revalidate(tree, &g).is_ok();
    t.check(valid, "telescoping-valid", gj);
    let tele = tele.exact().cloned().expect("telescoping totals are exact");
    t.check(lower.value <= tele, "telescoping-above-lower", gj);
    if !upper.value.is_zero() {
        let overhead = &tele / &upper.value;
        t.observe(
            "telescoping-over-gauge",
            "telescoping total / LP gauge",
            to_f64(&overhead),
            Some(overhead),
            gj,
        );
    }
    Ok(t)
}

// --------------------------------------------------------------- lp-ratio

/// Levels added above the window when enclosing it for the sharp field.
pub const ENCLOSING_PAD: u64 = 2;

/// Enclosing window: `pad` levels above the window root and `pad` below
/// its bottom.
pub fn enclosing_window(window: &Window, pad: u64) -> Window {
    Window::new(window.root.ancestor(pad), window.depth + 2 * pad)
}

/// `||f||_p` over the window divided by `||f^{#,p0}||_p` over the
/// enclosing window. The denominator only sums part of the sharp field,
/// so the ratio overestimates the whole-tree one.
pub fn lp_sharp_ratio(tree: &Tree, f: &FinFunc, config: &RunConfig, enclosing: &Window) -> Result<f64> {
    if let Some(v) = f.support().iter().find(|v| !config.window.contains(v)) {
        return Err(Error::IncompleteDomain(format!("{v} lies outside the window")));
    }
    let p = config.p.to_f64();
    let numerator = f.lp_norm(tree, &config.p).to_f64();
    let mut denominator = 0.0;
    for x in enclosing.vertices(tree) {
        let s = sharp_maximal(tree, f, &config.p0, &x)?.value.to_f64();
        denominator += s.powf(p) * to_f64(&tree.weight(&x));
    }
    let denominator = denominator.powf(1.0 / p);
    if denominator == 0.0 {
        return Err(Error::IncompleteDomain("sharp field vanishes on the enclosing window".into()));
    }
    Ok(numerator / denominator)
}

fn lp_ratio_task(tree: &Tree, config: &RunConfig, i: u64) -> Result<Tally> {
    let mut t = Tally::new(config.seed, i);
    let mut rng = task_rng(config.seed, i);
    let kind = if i.is_multiple_of(2) { FunctionKind::Sparse } else { FunctionKind::Rademacher };
    let f = nonzero_function(tree, &config.window, kind, &mut rng);
    let enclosing = enclosing_window(&config.window, ENCLOSING_PAD);
    let ratio = lp_sharp_ratio(tree, &f, config, &enclosing)?;
    t.check(ratio.is_finite(), "lp-ratio-finite", || json!({"f": f.to_json_value()}));
    t.observe("lp-over-sharp", "||f||_p <= C ||f^{#,p0}||_p", ratio, None, || {
        json!({"f": f.to_json_value(), "enclosing": enclosing.to_string()})
    });
    t.values.push(ratio);
    Ok(t)
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

fn lp_ratio_series(tally: &mut Tally) -> Value {
    let ratios = std::mem::take(&mut tally.values);
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let summary = if sorted.is_empty() {
        Value::Null
    } else {
        json!({
            "p50": percentile(&sorted, 0.5),
            "p90": percentile(&sorted, 0.9),
            "p99": percentile(&sorted, 0.99),
            "max": sorted[sorted.len() - 1],
        })
    };
    json!({"ratios": ratios, "percentiles": summary})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_comparisons() {
        let two = NormValue::Sqrt(int(4));
        let one = NormValue::Exact(int(1));
        assert!(le_combination(&two, &[(int(2), &one)]));
        assert!(!le_combination(&two, &[(frac(3, 2), &one)]));
        // sqrt(8) <= sqrt(2) + sqrt(2), with equality
        let s8 = NormValue::Sqrt(int(8));
        let s2 = NormValue::Sqrt(int(2));
        assert!(le_combination(&s8, &[(int(1), &s2), (int(1), &s2)]));
        assert!(!le_combination(&NormValue::Sqrt(frac(81, 10)), &[(int(1), &s2), (int(1), &s2)]));
    }

    #[test]
    fn zero_function_passes_sharp_checks() {
        let t2 = Tree::new(2).unwrap();
        let zero = FinFunc::zero();
        let x = Vertex::origin();
        let s = sharp_maximal(&t2, &zero, &Exponent::one(), &x).unwrap().value;
        let i = infimal_sharp(&t2, &zero, &Exponent::one(), &x).unwrap().value;
        assert!(s.is_zero() && i.is_zero());
        assert!(le_combination(&s, &[(int(2), &i)]));
        assert!(le_combination(&s, &[(frac(1, 2), &s), (frac(1, 2), &s), (frac(3, 2), &s)]));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert!(Suite::parse("nope").is_err());
    }

    #[test]
    fn geometry_suite_passes() {
        let w = Window::new(Vertex::geodesic(1), 3);
        let report = run_suite(&RunConfig::new(3, w, 0), Suite::Geometry).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        let env = report.record("envelope-over-trapezoid").unwrap();
        assert_eq!(env.max_ratio_exact.as_deref(), Some("7/2"));
    }
}
