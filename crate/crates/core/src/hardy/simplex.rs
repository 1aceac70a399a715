//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Solves `min c.x` subject to `A x = b`, `x >= 0`.

use num_traits::{Signed, Zero};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub a: Vec<Vec<Scalar>>,
    pub b: Vec<Scalar>,
    pub c: Vec<Scalar>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Scalar>, value: Scalar },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// Constraint rows followed by the objective row; last column is the
    /// right-hand side.
    rows: Vec<Vec<Scalar>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        let pivot_row = self.rows[r].clone();
        let nonzero: Vec<usize> = (0..pivot_row.len()).filter(|&k| !pivot_row[k].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for &k in &nonzero {
                let delta = &factor * &pivot_row[k];
                row[k] -= delta;
            }
        }
        self.basis[r] = c;
    }

    /// Loads reduced costs for `cost` into the objective row.
    fn set_objective(&mut self, cost: &[Scalar]) {
        let m = self.m();
        let width = self.rows[0].len();
        let mut obj = vec![Scalar::zero(); width];
        obj[..cost.len()].clone_from_slice(cost);
        for i in 0..m {
            let cb = cost.get(self.basis[i]).cloned().unwrap_or_default();
            if cb.is_zero() {
                continue;
            }
            for (k, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[k] -= &cb * v;
                }
            }
        }
        self.rows[m] = obj;
    }

    /// Runs Bland's rule over columns `0..allowed`. Returns `false` when
    /// unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let m = self.m();
        let rhs = self.rhs();
        loop {
            let Some(enter) = (0..allowed).find(|&k| self.rows[m][k].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Scalar)> = None;
            for i in 0..m {
                let coef = &self.rows[i][enter];
                if coef.is_positive() {
                    let ratio = &self.rows[i][rhs] / coef;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    assert!(lp.a.iter().all(|row| row.len() == n), "ragged constraint matrix");
    assert_eq!(lp.b.len(), m, "rhs length must match the row count");
    if m == 0 {
        return if lp.c.iter().any(Signed::is_negative) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal {
                x: vec![Scalar::zero(); n],
                value: Scalar::zero(),
            }
        };
    }
    // columns: n originals, m artificials, rhs
    let width = n + m + 1;
    let mut rows = Vec::with_capacity(m + 1);
    for i in 0..m {
        let flip = lp.b[i].is_negative();
        let mut row = vec![Scalar::zero(); width];
        for (k, v) in lp.a[i].iter().enumerate() {
            row[k] = if flip { -v.clone() } else { v.clone() };
        }
        row[n + i] = Scalar::from_integer(1.into());
        row[width - 1] = if flip { -lp.b[i].clone() } else { lp.b[i].clone() };
        rows.push(row);
    }
    rows.push(vec![Scalar::zero(); width]);
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
    };

    let mut phase_one = vec![Scalar::zero(); n + m];
    for v in &mut phase_one[n..] {
        *v = Scalar::from_integer(1.into());
    }
    t.set_objective(&phase_one);
    t.optimize(n + m);
    if !t.rows[m][width - 1].is_zero() {
        return LpOutcome::Infeasible;
    }
    // Drive artificials out of the basis; drop rows that are redundant.
    let mut i = 0;
    while i < t.m() {
        if t.basis[i] >= n {
            match (0..n).find(|&k| !t.rows[i][k].is_zero()) {
                Some(k) => {
                    t.pivot(i, k);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    t.set_objective(&lp.c);
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Scalar::zero(); n];
    let rhs = t.rhs();
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][rhs].clone();
        }
    }
    let value = x
        .iter()
        .zip(&lp.c)
        .fold(Scalar::zero(), |acc, (xi, ci)| acc + xi * ci);
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};

    fn lp(a: &[&[i64]], b: &[i64], c: &[i64]) -> LinearProgram {
        LinearProgram {
            a: a.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
            b: b.iter().map(|&v| int(v)).collect(),
            c: c.iter().map(|&v| int(v)).collect(),
        }
    }

    /// Minimum over all basic feasible solutions, by brute force.
    fn vertex_oracle(p: &LinearProgram) -> Option<Scalar> {
        let m = p.a.len();
        let n = p.c.len();
        let mut best: Option<Scalar> = None;
        let mut cols: Vec<usize> = (0..m).collect();
        loop {
            if let Some(x) = solve_square(p, &cols) {
                if x.iter().all(|v| !v.is_negative()) {
                    let mut full = vec![Scalar::zero(); n];
                    for (k, &c) in cols.iter().enumerate() {
                        full[c] = x[k].clone();
                    }
                    let val = full.iter().zip(&p.c).fold(Scalar::zero(), |a, (x, c)| a + x * c);
                    if best.as_ref().is_none_or(|b| val < *b) {
                        best = Some(val);
                    }
                }
            }
            // next combination
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if cols[i] < n - m + i {
                    cols[i] += 1;
                    for k in i + 1..m {
                        cols[k] = cols[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn solve_square(p: &LinearProgram, cols: &[usize]) -> Option<Vec<Scalar>> {
        let m = cols.len();
        let mut a: Vec<Vec<Scalar>> = (0..m)
            .map(|i| {
                let mut row: Vec<Scalar> = cols.iter().map(|&c| p.a[i][c].clone()).collect();
                row.push(p.b[i].clone());
                row
            })
            .collect();
        for c in 0..m {
            let r = (c..m).find(|&r| !a[r][c].is_zero())?;
            a.swap(c, r);
            let piv = a[c][c].clone();
            for v in a[c].iter_mut() {
                *v /= &piv;
            }
            for r in 0..m {
                if r != c && !a[r][c].is_zero() {
                    let f = a[r][c].clone();
                    let prow = a[c].clone();
                    for (v, pv) in a[r].iter_mut().zip(prow) {
                        *v -= &f * pv;
                    }
                }
            }
        }
        Some(a.into_iter().map(|r| r[m].clone()).collect())
    }

    #[test]
    fn small_programs_match_vertex_enumeration() {
        let cases = [
            lp(&[&[1, 1, 1, 0], &[1, -1, 0, 1]], &[4, 1], &[-1, -2, 0, 0]),
            lp(&[&[2, 1, 1, 0], &[1, 3, 0, 1]], &[8, 9], &[-3, -4, 0, 0]),
            lp(&[&[1, 1, -1, 0], &[1, -1, 0, -1]], &[2, -1], &[1, 1, 0, 0]),
        ];
        for p in &cases {
            let LpOutcome::Optimal { x, value } = solve(p) else {
                panic!("expected an optimum for {p:?}");
            };
            assert_eq!(Some(value), vertex_oracle(p));
            for (row, b) in p.a.iter().zip(&p.b) {
                let lhs = row.iter().zip(&x).fold(Scalar::zero(), |a, (r, x)| a + r * x);
                assert_eq!(&lhs, b);
            }
        }
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // second row is twice the first; optimum puts everything on x2
        let p = lp(&[&[1, 2, 1], &[2, 4, 2]], &[3, 6], &[1, 1, 1]);
        let LpOutcome::Optimal { value, .. } = solve(&p) else {
            panic!("expected an optimum");
        };
        assert_eq!(value, frac(3, 2));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        assert_eq!(solve(&lp(&[&[1, 1]], &[-1], &[1, 1])), LpOutcome::Infeasible);
        assert_eq!(solve(&lp(&[&[1, -1]], &[1], &[-1, 0])), LpOutcome::Unbounded);
    }

    #[test]
    fn fractional_optimum() {
        let p = lp(&[&[3, 1, 1]], &[1], &[-1, 0, 0]);
        assert_eq!(
            solve(&p),
            LpOutcome::Optimal {
                x: vec![frac(1, 3), int(0), int(0)],
                value: frac(-1, 3)
            }
        );
    }
}
