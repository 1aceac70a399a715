//! Run configuration, seeded test-function generation, property suites
//! and the command implementations behind the `cztree` binary.

pub mod commands;
mod report;
mod suites;

pub use report::{ConstantRecord, ConstantsReport, Counterexample, SuiteReport};
pub use suites::{enclosing_window, lp_sharp_ratio, run_suite, Suite, ENCLOSING_PAD};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::scalar::{frac, int, Scalar};
use crate::sets::CzSet;
use crate::tree::{Tree, Vertex, Window};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub m: u32,
    pub window: Window,
    pub q: Exponent,
    pub p: Exponent,
    pub p0: Exponent,
    pub seed: u64,
    /// Functions per suite.
    pub suite_size: usize,
    /// Cap on `|Omega_j|` in splitting suites.
    pub max_omega: usize,
}

impl RunConfig {
    pub fn new(m: u32, window: Window, seed: u64) -> RunConfig {
        RunConfig {
            m,
            window,
            q: Exponent::one(),
            p: Exponent::two(),
            p0: Exponent::Finite(frac(3, 2)),
            seed,
            suite_size: 200,
            max_omega: 4096,
        }
    }

    pub fn tree(&self) -> Result<Tree> {
        Tree::new(self.m)
    }

    pub fn validate(&self) -> Result<()> {
        self.tree()?;
        if self.window.depth == 0 {
            return Err(Error::invalid("window depth must be at least 1"));
        }
        let (Some(p), Some(p0)) = (self.p.value(), self.p0.value()) else {
            return Err(Error::invalid("p and p0 must be finite"));
        };
        if p0 >= p {
            return Err(Error::invalid("the sharp-ratio experiment needs p0 < p"));
        }
        if self.q.is_infinite() {
            return Err(Error::invalid("q must be finite"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "window": self.window.to_string(),
            "q": self.q.to_string(),
            "p": self.p.to_string(),
            "p0": self.p0.to_string(),
            "seed": self.seed,
            "suite_size": self.suite_size,
        })
    }
}

/// Independent generator for task `index` of a run.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    Indicator,
    Rademacher,
    Sparse,
    AtomCombo,
}

impl FunctionKind {
    pub fn parse(s: &str) -> Result<FunctionKind> {
        match s {
            "indicator" => Ok(FunctionKind::Indicator),
            "rademacher" => Ok(FunctionKind::Rademacher),
            "sparse" => Ok(FunctionKind::Sparse),
            "atom-combo" => Ok(FunctionKind::AtomCombo),
            _ => Err(Error::Parse(format!("unknown function kind {s:?}"))),
        }
    }
}

fn small_rational<R: Rng>(rng: &mut R) -> Scalar {
    let num = loop {
        let n = rng.random_range(-4i64..=4);
        if n != 0 {
            break n;
        }
    };
    frac(num, rng.random_range(1i64..=3))
}

/// Random function on the window of `config`, reproducible from `rng`.
pub fn generate_function<R: Rng>(tree: &Tree, window: &Window, kind: FunctionKind, rng: &mut R) -> FinFunc {
    let vertices = window.vertices(tree);
    match kind {
        FunctionKind::Indicator => FinFunc::indicator(vertices.choose(rng).unwrap().clone()),
        FunctionKind::Rademacher | FunctionKind::Sparse => {
            let k = rng.random_range(1..=4usize.min(vertices.len()));
            let mut f = FinFunc::zero();
            for v in vertices.choose_multiple(rng, k) {
                let c = if kind == FunctionKind::Sparse {
                    small_rational(rng)
                } else if rng.random_bool(0.5) {
                    int(1)
                } else {
                    int(-1)
                };
                f.set(v.clone(), c);
            }
            f
        }
        FunctionKind::AtomCombo => {
            let sets: Vec<CzSet> = crate::sets::cz_sets_in_window(tree, window, false, false);
            let mut f = FinFunc::zero();
            if sets.is_empty() {
                return f;
            }
            for _ in 0..rng.random_range(1..=2) {
                let set = sets.choose(rng).unwrap();
                f = f.add(&random_atom(tree, set, rng));
            }
            f
        }
    }
}

/// A `(1, inf)`-atom on `set` with two or three point masses.
pub fn random_atom<R: Rng>(tree: &Tree, set: &CzSet, rng: &mut R) -> FinFunc {
    let members = set.members(tree);
    if members.len() < 2 {
        return FinFunc::zero();
    }
    let k = rng.random_range(2..=3usize.min(members.len()));
    let chosen: Vec<&Vertex> = members.choose_multiple(rng, k).collect();
    let mut f = FinFunc::zero();
    for v in &chosen[1..] {
        f.set((*v).clone(), small_rational(rng));
    }
    let rest = f.integral(tree);
    let anchor = chosen[0];
    f.set(anchor.clone(), -rest / tree.weight(anchor));
    if f.is_zero() {
        return f;
    }
    let scale = Scalar::from_integer(1.into()) / (set.measure(tree) * f.max_abs());
    let shrink = frac(rng.random_range(1i64..=4), 4);
    f.scale(&(scale * shrink))
}

/// Random nonzero function; retries until nonzero.
pub(crate) fn nonzero_function<R: Rng>(tree: &Tree, window: &Window, kind: FunctionKind, rng: &mut R) -> FinFunc {
    loop {
        let f = generate_function(tree, window, kind, rng);
        if !f.is_zero() {
            return f;
        }
    }
}
