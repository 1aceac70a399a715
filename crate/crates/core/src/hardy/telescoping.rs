//! Atomic decomposition by telescoping good/bad splits.
//!
//! With `g^j` the good part at height `2^j`, `g = g^{j0} + sum_{j0 <= j < J}
//! (g^{j+1} - g^j)` where `Omega_J` is empty. Each difference is supported
//! in `Omega_j`. When it has zero mean on every tile of level `j` it is cut
//! into one atom per tile; otherwise it is written as `b^j - b^{j+1}` and
//! every bad part becomes its own atom. The scan stops once `g^{j0}`
//! vanishes or the next level set exceeds the size cap; a nonzero `g^{j0}`
//! becomes one more atom on the smallest CZ set holding its support.

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use super::split::{good_bad_split, GoodBadSplit, SplitLimits};
use super::{is_atom, normalize_to_atom, Atom};
use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::scalar::{format_scalar, pow_i, NormValue, Scalar};
use crate::sets::smallest_cz_containing;
use crate::tree::Tree;

/// Deepest level scanned below the top one.
const MAX_LEVELS: i64 = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    /// Splitting level the piece came from; `None` for the residual.
    pub j: Option<i64>,
    pub coefficient: Scalar,
    pub atom: Atom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomposition {
    pub pieces: Vec<Piece>,
    pub j_top: i64,
    pub j_bottom: i64,
    /// Levels whose difference had to be split into separate bad parts.
    pub ungrouped_levels: Vec<i64>,
}

impl AtomicDecomposition {
    pub fn total(&self) -> Scalar {
        self.pieces
            .iter()
            .fold(Scalar::zero(), |acc, p| acc + p.coefficient.abs())
    }

    pub fn sum(&self) -> FinFunc {
        self.pieces.iter().fold(FinFunc::zero(), |acc, p| {
            acc.add(&p.atom.function.scale(&p.coefficient))
        })
    }

    /// Every piece is a `(1, inf)`-atom and the pieces add up to `g`.
    pub fn revalidate(&self, tree: &Tree, g: &FinFunc) -> Result<()> {
        for p in &self.pieces {
            if let Some(v) = is_atom(tree, &p.atom.function, &p.atom.set, &Exponent::Infinity).violation {
                return Err(Error::invalid(format!("piece on {} is not an atom: {v}", p.atom.set)));
            }
        }
        if self.sum() != *g {
            return Err(Error::invalid("pieces do not sum to g"));
        }
        Ok(())
    }

    pub fn to_json(&self, tree: &Tree) -> Value {
        json!({
            "total": format_scalar(&self.total()),
            "j_top": self.j_top,
            "j_bottom": self.j_bottom,
            "ungrouped_levels": self.ungrouped_levels,
            "pieces": self.pieces.iter().map(|p| json!({
                "j": p.j,
                "coefficient": format_scalar(&p.coefficient),
                "set": p.atom.set.to_json(tree),
                "atom": p.atom.function.to_json_value(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn push_atom(tree: &Tree, pieces: &mut Vec<Piece>, j: Option<i64>, f: &FinFunc, set: &crate::sets::CzSet) -> Result<()> {
    if f.is_zero() {
        return Ok(());
    }
    let (atom, coefficient) = normalize_to_atom(tree, f, set)?;
    pieces.push(Piece { j, coefficient, atom });
    Ok(())
}

/// Upper bound for the atomic norm of a zero-mean `g`, with the
/// decomposition that achieves it.
pub fn telescoping_h1_upper(
    tree: &Tree,
    g: &FinFunc,
    q: &Exponent,
    limits: SplitLimits,
) -> Result<(NormValue, AtomicDecomposition)> {
    if !g.integral(tree).is_zero() {
        return Err(Error::invalid("telescoping needs a zero-integral function"));
    }
    if g.is_zero() {
        let empty = AtomicDecomposition {
            pieces: Vec::new(),
            j_top: 0,
            j_bottom: 0,
            ungrouped_levels: Vec::new(),
        };
        return Ok((NormValue::zero(), empty));
    }
    let peak = g.max_abs();
    let mut j_top = 0i64;
    while pow_i(2, j_top) < peak {
        j_top += 1;
    }
    while pow_i(2, j_top - 1) >= peak {
        j_top -= 1;
    }
    // splits[i] is the split at level j_top - i
    let mut splits: Vec<GoodBadSplit> = vec![good_bad_split(tree, g, q, j_top, limits)?];
    debug_assert!(splits[0].omega.is_empty());
    for depth in 1..=MAX_LEVELS {
        if splits.last().unwrap().good.is_zero() {
            break;
        }
        match good_bad_split(tree, g, q, j_top - depth, limits) {
            Ok(s) => splits.push(s),
            Err(Error::IncompleteEnumeration(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let j_bottom = j_top - (splits.len() as i64 - 1);

    let mut pieces = Vec::new();
    let mut ungrouped_levels = Vec::new();
    for i in 1..splits.len() {
        let lower = &splits[i];
        let upper = &splits[i - 1];
        let diff = upper.good.sub(&lower.good);
        let grouped: Vec<FinFunc> = lower
            .bad_parts
            .iter()
            .map(|p| diff.restrict(&p.trapezoid.band()))
            .collect();
        if grouped.iter().all(|f| f.integral(tree).is_zero()) {
            for (f, p) in grouped.iter().zip(&lower.bad_parts) {
                push_atom(tree, &mut pieces, Some(lower.j), f, &p.trapezoid.envelope())?;
            }
        } else {
            ungrouped_levels.push(lower.j);
            for p in &lower.bad_parts {
                push_atom(tree, &mut pieces, Some(lower.j), &p.function, &p.trapezoid.envelope())?;
            }
            for p in &upper.bad_parts {
                let neg = p.function.scale(&-Scalar::one());
                push_atom(tree, &mut pieces, Some(upper.j), &neg, &p.trapezoid.envelope())?;
            }
        }
    }
    let residual = &splits.last().unwrap().good;
    if !residual.is_zero() {
        let set = smallest_cz_containing(tree, &residual.support())?;
        push_atom(tree, &mut pieces, None, residual, &set)?;
    }
    let decomposition = AtomicDecomposition {
        pieces,
        j_top,
        j_bottom,
        ungrouped_levels,
    };
    decomposition.revalidate(tree, g)?;
    Ok((NormValue::Exact(decomposition.total()), decomposition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;
    use crate::tree::Vertex;

    #[test]
    fn worked_atom_decomposes() {
        let t2 = Tree::new(2).unwrap();
        let x = t2.parse_vertex("0:1").unwrap();
        let a = FinFunc::from_pairs([(x, frac(1, 3)), (Vertex::geodesic(-1), frac(-1, 3))]).unwrap();
        let (value, dec) = telescoping_h1_upper(&t2, &a, &Exponent::two(), SplitLimits::default()).unwrap();
        dec.revalidate(&t2, &a).unwrap();
        assert!(value.exact().unwrap() >= &frac(3, 5));
        let (zero, empty) = telescoping_h1_upper(&t2, &FinFunc::zero(), &Exponent::two(), SplitLimits::default()).unwrap();
        assert!(zero.is_zero() && empty.pieces.is_empty());
        assert!(telescoping_h1_upper(&t2, &FinFunc::indicator(Vertex::origin()), &Exponent::two(), SplitLimits::default()).is_err());
    }
}
