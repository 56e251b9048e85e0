//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Generic over [`Scalar`] so the same code runs in `f64` (with a pivot
//! tolerance) or exactly over arbitrary-precision rationals.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::milp::Sense;

pub trait Scalar: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Sign with the arithmetic's own notion of zero.
    fn sign(&self) -> Ordering;
    fn cmp_val(&self, o: &Self) -> Ordering {
        self.sub(o).sign()
    }
}

const EPS: f64 = 1e-9;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if *self > EPS {
            Ordering::Greater
        } else if *self < -EPS {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite coefficient")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // fall back through integer parts for very large values
            let n: BigInt = self.numer().clone();
            let d: BigInt = self.denom().clone();
            n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
        })
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

/// Sparse row `(terms, sense, rhs)`.
pub type Row<S> = (Vec<(usize, S)>, Sense, S);

/// `min c·x` subject to rows and bounds (bounds may be infinite).
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Clone, Copy)]
enum Map {
    /// x fixed at its bound; no column
    Fixed(f64),
    /// x = shift + y
    Shift(usize, f64),
    /// x = shift - y
    Flip(usize, f64),
    /// x = y⁺ - y⁻
    Split(usize, usize),
}

struct Tableau<S> {
    a: Vec<Vec<S>>,
    /// Reduced costs; the last entry is minus the objective value.
    z: Vec<S>,
    basis: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v = v.div(&p);
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.sign() == Ordering::Equal {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v = v.sub(&f.mul(pv));
            }
        }
        let f = self.z[c].clone();
        if f.sign() != Ordering::Equal {
            for (v, pv) in self.z.iter_mut().zip(&prow) {
                *v = v.sub(&f.mul(pv));
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule iterations over columns `< ncols` allowed by `allowed`.
    /// Returns false if unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        let rhs = self.z.len() - 1;
        loop {
            let Some(c) = (0..rhs).find(|&j| allowed[j] && self.z[j].sign() == Ordering::Less) else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c].sign() != Ordering::Greater {
                    continue;
                }
                let ratio = row[rhs].div(&row[c]);
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => match ratio.cmp_val(&br) {
                        Ordering::Less => Some((i, ratio)),
                        Ordering::Equal if self.basis[i] < self.basis[bi] => Some((i, ratio)),
                        _ => Some((bi, br)),
                    },
                };
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub fn solve_lp<S: Scalar>(lp: &LpProblem) -> LpOutcome {
    let n = lp.cost.len();
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut obj_shift = S::zero();
    let mut rows: Vec<Row<S>> = Vec::new();
    let mut std_cost: Vec<S> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l > u {
            return LpOutcome::Infeasible;
        }
        let m = if l == u {
            obj_shift = obj_shift.add(&S::from_f64(lp.cost[j]).mul(&S::from_f64(l)));
            Map::Fixed(l)
        } else if l.is_finite() {
            std_cost.push(S::from_f64(lp.cost[j]));
            obj_shift = obj_shift.add(&S::from_f64(lp.cost[j]).mul(&S::from_f64(l)));
            if u.is_finite() {
                rows.push((vec![(ncols, S::one())], Sense::Le, S::from_f64(u).sub(&S::from_f64(l))));
            }
            ncols += 1;
            Map::Shift(ncols - 1, l)
        } else if u.is_finite() {
            std_cost.push(S::from_f64(-lp.cost[j]));
            obj_shift = obj_shift.add(&S::from_f64(lp.cost[j]).mul(&S::from_f64(u)));
            ncols += 1;
            Map::Flip(ncols - 1, u)
        } else {
            std_cost.push(S::from_f64(lp.cost[j]));
            std_cost.push(S::from_f64(-lp.cost[j]));
            ncols += 2;
            Map::Split(ncols - 2, ncols - 1)
        };
        maps.push(m);
    }
    for (terms, sense, rhs) in &lp.rows {
        let mut b = S::from_f64(*rhs);
        let mut out = Vec::with_capacity(terms.len());
        for &(j, c) in terms {
            let cs = S::from_f64(c);
            match maps[j] {
                Map::Fixed(s) => b = b.sub(&cs.mul(&S::from_f64(s))),
                Map::Shift(k, s) => {
                    b = b.sub(&cs.mul(&S::from_f64(s)));
                    out.push((k, cs));
                }
                Map::Flip(k, s) => {
                    b = b.sub(&cs.mul(&S::from_f64(s)));
                    out.push((k, S::zero().sub(&cs)));
                }
                Map::Split(p, q) => {
                    out.push((p, cs.clone()));
                    out.push((q, S::zero().sub(&cs)));
                }
            }
        }
        rows.push((out, *sense, b));
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let total = ncols + n_slack + m;
    let art0 = ncols + n_slack;
    let mut a = vec![vec![S::zero(); total + 1]; m];
    let mut slack = ncols;
    for (i, (terms, sense, b)) in rows.into_iter().enumerate() {
        let row = &mut a[i];
        for (k, c) in terms {
            row[k] = row[k].add(&c);
        }
        match sense {
            Sense::Le => {
                row[slack] = S::one();
                slack += 1;
            }
            Sense::Ge => {
                row[slack] = S::zero().sub(&S::one());
                slack += 1;
            }
            Sense::Eq => {}
        }
        row[total] = b;
        if row[total].sign() == Ordering::Less {
            for v in row.iter_mut() {
                *v = S::zero().sub(v);
            }
        }
        row[art0 + i] = S::one();
    }

    // phase 1: minimise the sum of artificials
    let mut z = vec![S::zero(); total + 1];
    for row in &a {
        for j in 0..art0 {
            z[j] = z[j].sub(&row[j]);
        }
        z[total] = z[total].sub(&row[total]);
    }
    let mut t = Tableau {
        a,
        z,
        basis: (art0..art0 + m).collect(),
    };
    let all = vec![true; total];
    t.optimize(&all);
    if t.z[total].sign() == Ordering::Less {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis; drop redundant rows
    let mut r = 0;
    while r < t.a.len() {
        if t.basis[r] >= art0 {
            match (0..art0).find(|&j| t.a[r][j].sign() != Ordering::Equal) {
                Some(c) => t.pivot(r, c),
                None => {
                    t.a.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase 2
    let mut z = vec![S::zero(); total + 1];
    for (j, c) in std_cost.iter().enumerate() {
        z[j] = c.clone();
    }
    for (i, &b) in t.basis.iter().enumerate() {
        if b < std_cost.len() {
            let cb = std_cost[b].clone();
            if cb.sign() != Ordering::Equal {
                for (zv, av) in z.iter_mut().zip(&t.a[i]) {
                    *zv = zv.sub(&cb.mul(av));
                }
            }
        }
    }
    t.z = z;
    let mut allowed = vec![true; total];
    for v in allowed.iter_mut().skip(art0) {
        *v = false;
    }
    if !t.optimize(&allowed) {
        return LpOutcome::Unbounded;
    }

    let mut y = vec![S::zero(); ncols];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < ncols {
            y[b] = t.a[i][total].clone();
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Map::Fixed(s) => s,
            Map::Shift(k, s) => S::from_f64(s).add(&y[k]).to_f64(),
            Map::Flip(k, s) => S::from_f64(s).sub(&y[k]).to_f64(),
            Map::Split(p, q) => y[p].sub(&y[q]).to_f64(),
        })
        .collect();
    let objective = obj_shift.sub(&t.z[total]).to_f64();
    LpOutcome::Optimal { x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(cost: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, rows: Vec<Row<f64>>) -> LpProblem {
        LpProblem {
            cost,
            lower,
            upper,
            rows,
        }
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y; x <= 4; 2y <= 12; 3x + 2y <= 18  → (2, 6), 36
        let p = lp(
            vec![-3.0, -5.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
            vec![
                (vec![(0, 1.0)], Sense::Le, 4.0),
                (vec![(1, 2.0)], Sense::Le, 12.0),
                (vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0),
            ],
        );
        for out in [solve_lp::<f64>(&p), solve_lp::<BigRational>(&p)] {
            match out {
                LpOutcome::Optimal { x, objective } => {
                    assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
                    assert!((objective + 36.0).abs() < 1e-9);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // min x - y with x free, y <= 3 (no lower), x + y = 1, x >= -5
        let p = lp(
            vec![1.0, -1.0],
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![f64::INFINITY, 3.0],
            vec![
                (vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0),
                (vec![(0, 1.0)], Sense::Ge, -5.0),
            ],
        );
        match solve_lp::<f64>(&p) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] + 2.0).abs() < 1e-9, "{x:?}");
                assert!((x[1] - 3.0).abs() < 1e-9);
                assert!((objective + 5.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = lp(
            vec![1.0],
            vec![0.0],
            vec![f64::INFINITY],
            vec![(vec![(0, 1.0)], Sense::Le, 0.0), (vec![(0, 1.0)], Sense::Ge, 1.0)],
        );
        assert_eq!(solve_lp::<f64>(&inf), LpOutcome::Infeasible);
        assert_eq!(solve_lp::<BigRational>(&inf), LpOutcome::Infeasible);
        let unb = lp(vec![-1.0], vec![0.0], vec![f64::INFINITY], vec![]);
        assert_eq!(solve_lp::<f64>(&unb), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example; Bland's rule must terminate at -0.05.
        let p = lp(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
            vec![
                (vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0),
                (vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0),
                (vec![(2, 1.0)], Sense::Le, 1.0),
            ],
        );
        match solve_lp::<BigRational>(&p) {
            LpOutcome::Optimal { objective, .. } => assert!((objective + 0.05).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let p = lp(
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
            vec![
                (vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0),
                (vec![(0, 2.0), (1, 2.0)], Sense::Eq, 4.0),
            ],
        );
        match solve_lp::<f64>(&p) {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
