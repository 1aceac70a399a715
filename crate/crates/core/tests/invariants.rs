mod common;

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use common::tree;
use cztree::bmo::bmo_norm;
use cztree::hardy::simplex::{solve, LinearProgram, LpOutcome};
use cztree::hardy::{good_bad_split, telescoping_h1_upper, SplitLimits};
use cztree::runner::{generate_function, task_rng, FunctionKind};
use cztree::scalar::{frac, int, Scalar};
use cztree::{Exponent, FinFunc, NormValue, Vertex, Window};

fn vertex(m: u32) -> impl Strategy<Value = Vertex> {
    (-4i64..=4, prop::collection::vec(0..m as u8, 0..7))
        .prop_map(move |(anchor, word)| tree(m).canonicalize(anchor, &word).unwrap())
}

fn random_function(m: u32, seed: u64, kind: FunctionKind) -> FinFunc {
    let window = Window::new(Vertex::origin(), 4);
    generate_function(&tree(m), &window, kind, &mut task_rng(seed, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vertex_text_round_trips(v in vertex(3)) {
        prop_assert_eq!(tree(3).parse_vertex(&v.to_string()).unwrap(), v);
    }

    #[test]
    fn distance_is_a_metric(x in vertex(2), y in vertex(2), z in vertex(2)) {
        prop_assert_eq!(x.distance(&y), y.distance(&x));
        prop_assert_eq!(x.distance(&x), 0);
        prop_assert!(x.distance(&z) <= x.distance(&y) + y.distance(&z));
        let (a, b) = x.join_heights(&y);
        prop_assert_eq!(x.distance(&y), a + b);
    }

    #[test]
    fn neighbours_are_at_distance_one(v in vertex(3)) {
        let t = tree(3);
        let n = t.neighbours(&v);
        prop_assert_eq!(n.len(), 4);
        prop_assert!(n.iter().all(|u| u.distance(&v) == 1));
        prop_assert!(t.children(&v).iter().all(|c| c.father() == v));
    }

    #[test]
    fn levels_below_have_m_to_the_depth_members(v in vertex(2), depth in 0u64..6) {
        let t = tree(2);
        let mut count = 0u64;
        t.for_each_below(&v, depth, depth, |u, d| {
            assert_eq!(u.depth_below(&v), Some(d));
            count += 1;
        });
        prop_assert_eq!(count, 1 << depth);
        prop_assert_eq!(t.descendants_at_depth(&v, depth).len() as u64, count);
    }

    #[test]
    fn bmo_is_homogeneous(seed in any::<u64>(), num in 1i64..5, den in 1i64..4) {
        let t = tree(2);
        let f = random_function(2, seed, FunctionKind::Sparse);
        let c = frac(num, den);
        let base = bmo_norm(&t, &f, &Exponent::one()).unwrap().value;
        let scaled = bmo_norm(&t, &f.scale(&-c.clone()), &Exponent::one()).unwrap().value;
        match (base, scaled) {
            (NormValue::Exact(a), NormValue::Exact(b)) => prop_assert_eq!(a * c, b),
            other => prop_assert!(false, "inexact BMO1 values {:?}", other),
        }
    }

    #[test]
    fn splitting_contract_holds(seed in any::<u64>(), below in 0i64..4, q in 2u32..4) {
        let t = tree(2);
        let g = random_function(2, seed, FunctionKind::Rademacher);
        prop_assume!(!g.is_zero());
        let top = g.max_abs().numer().bits() as i64 - g.max_abs().denom().bits() as i64;
        let q = Exponent::finite(int(q as i64)).unwrap();
        if let Ok(s) = good_bad_split(&t, &g, &q, top - below, SplitLimits { max_omega: 4096 }) {
            prop_assert!(s.violations(&t, &g).is_empty(), "{:?}", s.violations(&t, &g));
        }
    }

    #[test]
    fn telescoping_sums_back(seed in any::<u64>()) {
        let t = tree(2);
        let g = random_function(2, seed, FunctionKind::AtomCombo);
        prop_assume!(!g.is_zero());
        let (_, d) = telescoping_h1_upper(&t, &g, &Exponent::two(), SplitLimits { max_omega: 4096 }).unwrap();
        prop_assert!(d.revalidate(&t, &g).is_ok());
        prop_assert_eq!(d.sum(), g);
    }

    #[test]
    fn simplex_solution_is_feasible_and_no_worse(
        a in prop::collection::vec(prop::collection::vec(-3i64..4, 4), 1..4),
        x0 in prop::collection::vec(0i64..4, 4),
        c in prop::collection::vec(0i64..5, 4),
    ) {
        let a: Vec<Vec<Scalar>> = a.into_iter().map(|row| row.into_iter().map(int).collect()).collect();
        let x0: Vec<Scalar> = x0.into_iter().map(int).collect();
        let c: Vec<Scalar> = c.into_iter().map(int).collect();
        let dot = |u: &[Scalar], v: &[Scalar]| u.iter().zip(v).fold(Scalar::zero(), |s, (p, q)| s + p * q);
        let b: Vec<Scalar> = a.iter().map(|row| dot(row, &x0)).collect();
        let lp = LinearProgram { a: a.clone(), b: b.clone(), c: c.clone() };
        match solve(&lp) {
            LpOutcome::Optimal { x, value } => {
                prop_assert!(x.iter().all(|v| !v.is_negative()));
                for (row, rhs) in a.iter().zip(&b) {
                    prop_assert_eq!(&dot(row, &x), rhs);
                }
                prop_assert_eq!(&value, &dot(&c, &x));
                prop_assert!(value <= dot(&c, &x0));
            }
            other => prop_assert!(false, "feasible bounded program gave {:?}", other),
        }
    }
}
