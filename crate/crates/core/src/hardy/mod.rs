//! Atoms, the good/bad splitting of a function at a height `2^j`,
//! telescoping atomic decompositions, and two-sided estimates of the
//! atomic Hardy norm.

mod gauge;
pub mod simplex;
mod split;
mod telescoping;

pub use gauge::{h1_duality_lower, h1_estimate, h1_lp_gauge, DualityBound, GaugeResult, H1Estimate};
pub use split::{good_bad_split, BadPart, GoodBadSplit, SplitLimits};
pub use telescoping::{telescoping_h1_upper, AtomicDecomposition, Piece};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::func::{Exponent, FinFunc};
use crate::scalar::{powu, to_f64, Scalar};
use crate::sets::CzSet;
use crate::tree::Tree;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub function: FinFunc,
    pub set: CzSet,
    pub p: Exponent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomCheck {
    /// First failed clause, if any.
    pub violation: Option<String>,
}

impl AtomCheck {
    pub fn valid(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks support, zero integral and `||a||_p <= mu(S)^(1/p - 1)`.
///
/// The size bound is compared as `sum |a|^p w <= mu^(1 - p)`, exact for
/// integer `p` and infinity; other exponents compare in `f64` with a
/// `1e-12` relative margin.
pub fn is_atom(tree: &Tree, a: &FinFunc, set: &CzSet, p: &Exponent) -> AtomCheck {
    let fail = |s: String| AtomCheck { violation: Some(s) };
    let band = set.band();
    if let Some((v, _)) = a.iter().find(|(v, _)| !band.contains(v)) {
        return fail(format!("support-in-set: {v} lies outside {set}"));
    }
    if !a.integral(tree).is_zero() {
        return fail("zero-integral: integral is nonzero".into());
    }
    let mu = set.measure(tree);
    let size_ok = match p {
        Exponent::Infinity => a.max_abs() * &mu <= Scalar::one(),
        _ => match p.as_integer() {
            Some(k) => {
                let lhs = a.abs_power_sum(tree, k);
                lhs * powu(&mu, k - 1) <= Scalar::one()
            }
            None => {
                let pf = p.to_f64();
                let lhs = a.lp_norm(tree, p).to_f64();
                lhs <= to_f64(&mu).powf(1.0 / pf - 1.0) * (1.0 + 1e-12)
            }
        },
    };
    if !size_ok {
        return fail(format!("size-bound: ||a||_{p} exceeds mu(S)^(1/{p} - 1)"));
    }
    AtomCheck { violation: None }
}

/// Writes `g = lambda a` with `a = g / (mu(S) ||g||_inf)` a `(1, inf)`-atom.
pub fn normalize_to_atom(tree: &Tree, g: &FinFunc, set: &CzSet) -> Result<(Atom, Scalar)> {
    if g.is_zero() {
        return Err(Error::invalid("cannot normalize the zero function"));
    }
    let band = set.band();
    if let Some((v, _)) = g.iter().find(|(v, _)| !band.contains(v)) {
        return Err(Error::invalid(format!("{v} lies outside {set}")));
    }
    if !g.integral(tree).is_zero() {
        return Err(Error::invalid("an atom needs zero integral"));
    }
    let lambda = set.measure(tree) * g.max_abs();
    let a = g.scale(&(Scalar::one() / &lambda));
    debug_assert!(is_atom(tree, &a, set, &Exponent::Infinity).valid());
    Ok((
        Atom {
            function: a,
            set: set.clone(),
            p: Exponent::Infinity,
        },
        lambda.abs(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};
    use crate::tree::Vertex;

    fn worked() -> (Tree, FinFunc, CzSet) {
        let t2 = Tree::new(2).unwrap();
        let x = t2.parse_vertex("0:1").unwrap();
        let a = FinFunc::from_pairs([(x, frac(1, 3)), (Vertex::geodesic(-1), frac(-1, 3))]).unwrap();
        (t2, a, CzSet::new(Vertex::origin(), 1).unwrap())
    }

    #[test]
    fn atom_checks() {
        let (t2, a, s) = worked();
        assert!(is_atom(&t2, &a, &s, &Exponent::Infinity).valid());
        assert!(is_atom(&t2, &FinFunc::zero(), &s, &Exponent::Infinity).valid());
        let big = is_atom(&t2, &a.scale(&int(2)), &s, &Exponent::Infinity);
        assert!(big.violation.unwrap().starts_with("size-bound"));
        let lonely = FinFunc::indicator(Vertex::geodesic(-1));
        assert!(is_atom(&t2, &lonely, &s, &Exponent::one())
            .violation
            .unwrap()
            .starts_with("zero-integral"));
        assert!(is_atom(&t2, &a, &s, &Exponent::two()).valid());
        assert!(is_atom(&t2, &a, &s, &Exponent::parse("3/2").unwrap()).valid());
    }

    #[test]
    fn normalization() {
        let (t2, a, s) = worked();
        let (atom, lambda) = normalize_to_atom(&t2, &a, &s).unwrap();
        assert_eq!(lambda, int(1));
        assert_eq!(atom.function, a);
        let (atom6, lambda6) = normalize_to_atom(&t2, &a.scale(&int(6)), &s).unwrap();
        assert_eq!((atom6.function, lambda6), (a, int(6)));
        assert!(normalize_to_atom(&t2, &FinFunc::indicator(Vertex::origin()), &s).is_err());
    }
}
