//! One function per CLI command. Each returns the JSON document the
//! command prints.

use serde_json::{json, Value};

use super::suites::{auto_family, random_candidates};
use super::{run_suite, ConstantsReport, RunConfig, Suite};
use crate::bmo::{bmo_norm, hormander_constant, KernelWindow};
use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::hardy::{good_bad_split, h1_estimate, telescoping_h1_upper, GoodBadSplit, SplitLimits};
use crate::maximal::{hl_maximal, sharp_field, sharp_maximal};
use crate::scalar::format_scalar;
use crate::sets::{covering_family, covering_index, cz_sets_in_window, AdmissibleTrapezoid, CzSet};
use crate::tree::{Tree, Vertex, Window};

/// `measure` of a vertex (`n:w`), a CZ set (`cz ...`) or an admissible
/// trapezoid (`trap root=<v> h=<int>`).
pub fn measure(tree: &Tree, target: &str) -> Result<Value> {
    let target = target.trim();
    if target.starts_with("cz ") {
        let set = CzSet::parse(tree, target)?;
        return Ok(json!({"set": set.to_string(), "measure": format_scalar(&set.measure(tree))}));
    }
    if let Some(rest) = target.strip_prefix("trap ") {
        let r = parse_trapezoid(tree, rest)?;
        return Ok(json!({"trapezoid": r.to_string(), "measure": format_scalar(&r.measure(tree))}));
    }
    let v = tree.parse_vertex(target)?;
    Ok(json!({"vertex": v.to_string(), "level": v.level(), "measure": format_scalar(&tree.weight(&v))}))
}

fn parse_trapezoid(tree: &Tree, s: &str) -> Result<AdmissibleTrapezoid> {
    let mut root = None;
    let mut h = None;
    for tok in s.split_whitespace() {
        match tok.split_once('=') {
            Some(("root", v)) => root = Some(tree.parse_vertex(v)?),
            Some(("h", v)) => h = Some(v.parse::<u64>().map_err(|_| Error::Parse(format!("bad height {v:?}")))?),
            _ => return Err(Error::Parse(format!("unexpected token {tok:?} in trapezoid"))),
        }
    }
    match (root, h) {
        (Some(root), Some(0)) => Ok(AdmissibleTrapezoid::degenerate(root)),
        (Some(root), Some(h)) => AdmissibleTrapezoid::new(root, h),
        _ => Err(Error::Parse("trapezoid needs root= and h=".into())),
    }
}

pub fn ball(tree: &Tree, center: &Vertex, radius: u64) -> Value {
    let members = tree.ball(center, radius);
    json!({
        "center": center.to_string(),
        "radius": radius,
        "cardinality": members.len(),
        "measure": format_scalar(&tree.mass(&members)),
        "closed_form": format_scalar(&tree.ball_measure_closed(center, radius)),
    })
}

pub fn cz(tree: &Tree, set: &CzSet) -> Value {
    let band = set.band();
    let enlarged = set.enlargement();
    json!({
        "set": set.to_json(tree),
        "depths": [band.lo, band.hi],
        "cardinality": band.cardinality(tree),
        "enlargement": {
            "radius": set.enlargement_radius(),
            "depths": [enlarged.lo, enlarged.hi],
            "measure": format_scalar(&set.enlargement_measure(tree)),
        },
    })
}

/// Covering index of a vertex, or the `n`-th covering set.
pub fn cover(tree: &Tree, at: Option<&Vertex>, n: Option<u64>) -> Result<Value> {
    match (at, n) {
        (Some(x), None) => {
            let j = covering_index(x);
            Ok(json!({"vertex": x.to_string(), "index": j, "set": covering_family(j).to_json(tree)}))
        }
        (None, Some(n)) => Ok(json!({"n": n, "set": covering_family(n).to_json(tree)})),
        _ => Err(Error::invalid("cover takes exactly one of --at and --n")),
    }
}

pub fn bmo(tree: &Tree, f: &FinFunc, q: &Exponent) -> Result<Value> {
    Ok(bmo_norm(tree, f, q)?.to_json(tree))
}

/// Sharp maximal function at one vertex or over a whole window.
pub fn sharp(tree: &Tree, f: &FinFunc, q: &Exponent, at: Option<&Vertex>, window: &Window) -> Result<Value> {
    if let Some(x) = at {
        return Ok(sharp_maximal(tree, f, q, x)?.to_json(tree));
    }
    let field = sharp_field(tree, f, q, window)?;
    let points: Vec<Value> = field
        .iter()
        .map(|(x, r)| {
            let mut v = r.to_json(tree);
            v["vertex"] = json!(x.to_string());
            v
        })
        .collect();
    Ok(json!({"window": window.to_string(), "field": points}))
}

pub fn maximal(tree: &Tree, phi: &FinFunc, at: &Vertex) -> Result<Value> {
    Ok(hl_maximal(tree, phi, at)?.to_json(tree))
}

pub fn split_json(tree: &Tree, g: &FinFunc, s: &GoodBadSplit) -> Value {
    json!({
        "j": s.j,
        "q": s.q,
        "good": s.good.to_json_value(),
        "omega": s.omega.iter().map(Vertex::to_string).collect::<Vec<_>>(),
        "bad_parts": s.bad_parts.iter().map(|b| json!({
            "trapezoid": b.trapezoid.to_string(),
            "envelope": b.trapezoid.envelope().to_string(),
            "function": b.function.to_json_value(),
        })).collect::<Vec<_>>(),
        "c_good": format_scalar(&s.c_good),
        "c_bad": {"value": s.c_bad(), "mode": "approx", "q_power": format_scalar(&s.c_bad_pow)},
        "violations": s.violations(tree, g),
    })
}

pub enum DecomposeMode {
    Level(i64),
    /// Telescope over every level.
    All,
}

pub fn decompose(tree: &Tree, g: &FinFunc, q: &Exponent, mode: DecomposeMode, limits: SplitLimits) -> Result<Value> {
    match mode {
        DecomposeMode::Level(j) => {
            let s = good_bad_split(tree, g, q, j, limits)?;
            Ok(split_json(tree, g, &s))
        }
        DecomposeMode::All => {
            let (total, d) = telescoping_h1_upper(tree, g, q, limits)?;
            let mut out = d.to_json(tree);
            out["upper_bound"] = serde_json::to_value(&total).expect("norm values serialize");
            Ok(out)
        }
    }
}

/// `auto` (the given window) or `auto:root=<v>,depth=<d>`.
pub fn parse_family_window(tree: &Tree, spec: &str, default: &Window) -> Result<Window> {
    match spec {
        "auto" => Ok(default.clone()),
        _ => match spec.strip_prefix("auto:") {
            Some(w) => Window::parse(tree, w),
            None => Err(Error::Parse(format!("family {spec:?} is not auto or auto:<window>"))),
        },
    }
}

/// `random:<seed>:<count>`.
pub fn parse_candidates(tree: &Tree, spec: &str, window: &Window) -> Result<Vec<FinFunc>> {
    let bad = || Error::Parse(format!("candidates {spec:?} are not random:<seed>:<count>"));
    let mut parts = spec.split(':');
    if parts.next() != Some("random") {
        return Err(bad());
    }
    let seed: u64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let count: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(random_candidates(tree, window, seed, count))
}

pub fn h1(tree: &Tree, g: &FinFunc, family: &Window, candidates: &[FinFunc]) -> Result<Value> {
    let sets = auto_family(tree, family);
    let id = format!("auto:{family}");
    Ok(h1_estimate(tree, g, &sets, &id, candidates)?.to_json(tree))
}

/// Hormander constant over every CZ set whose enlargement fits `family`.
pub fn hormander(tree: &Tree, kernel: &KernelWindow, family: &Window) -> Result<Value> {
    let sets = cz_sets_in_window(tree, family, true, false);
    let mut out = hormander_constant(tree, kernel, &sets)?.to_json(tree);
    out["family"] = json!(format!("auto:{family}"));
    out["family_size"] = json!(sets.len());
    Ok(out)
}

/// Runs the suites and reports whether all checks passed.
pub fn check(config: &RunConfig, suites: &[Suite]) -> Result<(ConstantsReport, bool)> {
    let reports = suites
        .iter()
        .map(|&s| run_suite(config, s))
        .collect::<Result<Vec<_>>>()?;
    let report = ConstantsReport {
        config: config.to_json(),
        suites: reports,
    };
    let passed = report.passed();
    Ok((report, passed))
}

/// Compact view of the constants: one line per record.
pub fn constants_summary(report: &ConstantsReport) -> Value {
    let rows: Vec<Value> = report
        .suites
        .iter()
        .flat_map(|s| {
            s.records.iter().map(move |r| {
                json!({
                    "suite": s.suite,
                    "name": r.name,
                    "property": r.property,
                    "max_ratio": r.max_ratio_exact.clone().map(Value::from).unwrap_or_else(|| json!(r.max_ratio)),
                    "approx": r.max_ratio,
                    "samples": r.samples,
                })
            })
        })
        .collect();
    json!({"config": report.config, "constants": rows, "report": report.to_json()})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_targets() {
        let t2 = Tree::new(2).unwrap();
        assert_eq!(measure(&t2, "0:1").unwrap()["measure"], "1/2");
        assert_eq!(measure(&t2, "cz root=0: h=1").unwrap()["measure"], "3/1");
        assert_eq!(measure(&t2, "trap root=0: h=2").unwrap()["measure"], "2/1");
        assert!(measure(&t2, "trap root=0:").is_err());
    }

    #[test]
    fn family_and_candidate_specs() {
        let t2 = Tree::new(2).unwrap();
        let w = Window::new(Vertex::origin(), 4);
        assert_eq!(parse_family_window(&t2, "auto", &w).unwrap(), w);
        let other = parse_family_window(&t2, "auto:root=1:,depth=5", &w).unwrap();
        assert_eq!(other, Window::new(Vertex::geodesic(1), 5));
        assert!(parse_family_window(&t2, "all", &w).is_err());
        assert_eq!(parse_candidates(&t2, "random:3:5", &w).unwrap().len(), 5);
        assert!(parse_candidates(&t2, "random:3", &w).is_err());
    }
}
