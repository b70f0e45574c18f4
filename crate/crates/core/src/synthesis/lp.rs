//! Exact feasibility of `a · x >= b` over nonnegative rationals.
//!
//! Dictionary simplex with a single artificial variable for phase one and
//! Bland's rule for pivoting, all in arbitrary-precision rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// One constraint: sparse coefficients and right-hand side.
pub type Row = (Vec<(usize, i64)>, i64);

struct Dictionary {
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    constants: Vec<BigRational>,
    coefs: Vec<Vec<BigRational>>,
    obj_const: BigRational,
    obj: Vec<BigRational>,
}

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl Dictionary {
    /// `basic_i = constants_i + sum_j coefs_ij * nonbasic_j`.
    fn pivot(&mut self, row: usize, col: usize) {
        let a = self.coefs[row][col].clone();
        let inv = a.recip();
        let c = std::mem::take(&mut self.constants[row]);
        self.constants[row] = -c * &inv;
        for j in 0..self.nonbasic.len() {
            if j == col {
                self.coefs[row][j] = inv.clone();
            } else if !self.coefs[row][j].is_zero() {
                self.coefs[row][j] = -&self.coefs[row][j] * &inv;
            }
        }
        let pivot_row = self.coefs[row].clone();
        let pivot_const = self.constants[row].clone();
        for i in 0..self.basic.len() {
            if i == row || self.coefs[i][col].is_zero() {
                continue;
            }
            let t = std::mem::take(&mut self.coefs[i][col]);
            self.constants[i] += &t * &pivot_const;
            for (j, p) in pivot_row.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                if j == col {
                    self.coefs[i][j] = &t * p;
                } else {
                    self.coefs[i][j] += &t * p;
                }
            }
        }
        if !self.obj[col].is_zero() {
            let t = std::mem::take(&mut self.obj[col]);
            self.obj_const += &t * &pivot_const;
            for (j, p) in pivot_row.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                if j == col {
                    self.obj[j] = &t * p;
                } else {
                    self.obj[j] += &t * p;
                }
            }
        }
        std::mem::swap(&mut self.basic[row], &mut self.nonbasic[col]);
    }

    fn optimize(&mut self) {
        loop {
            let entering = (0..self.nonbasic.len())
                .filter(|&j| self.obj[j].is_positive())
                .min_by_key(|&j| self.nonbasic[j]);
            let Some(col) = entering else { return };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.basic.len() {
                if !self.coefs[i][col].is_negative() {
                    continue;
                }
                let ratio = &self.constants[i] / -&self.coefs[i][col];
                let better = match &leave {
                    None => true,
                    Some((r, best)) => ratio < *best || (ratio == *best && self.basic[i] < self.basic[*r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            // the phase-one objective is bounded above by zero
            let (row, _) = leave.expect("bounded objective");
            self.pivot(row, col);
        }
    }
}

/// A nonnegative point satisfying every row, or `None` when infeasible.
pub fn feasible_point(rows: &[Row], nvars: usize) -> Option<Vec<BigRational>> {
    if rows.iter().all(|(_, b)| *b <= 0) {
        return Some(vec![BigRational::zero(); nvars]);
    }
    // slack_i = -b_i + a_i · x + x0, with x0 = variable `nvars`
    let art = nvars;
    let m = rows.len();
    let mut coefs = vec![vec![BigRational::zero(); nvars + 1]; m];
    let mut constants = Vec::with_capacity(m);
    for (i, (a, b)) in rows.iter().enumerate() {
        for &(j, v) in a {
            coefs[i][j] += big(v);
        }
        coefs[i][art] = BigRational::one();
        constants.push(big(-b));
    }
    let mut obj = vec![BigRational::zero(); nvars + 1];
    obj[art] = -BigRational::one();
    let mut d = Dictionary {
        basic: (nvars + 1..nvars + 1 + m).collect(),
        nonbasic: (0..=nvars).collect(),
        constants,
        coefs,
        obj_const: BigRational::zero(),
        obj,
    };
    let worst = (0..m).min_by(|&a, &b| d.constants[a].cmp(&d.constants[b]).then(a.cmp(&b))).unwrap();
    d.pivot(worst, art);
    d.optimize();
    if d.obj_const.is_negative() {
        return None;
    }
    let mut x = vec![BigRational::zero(); nvars];
    for (i, &v) in d.basic.iter().enumerate() {
        if v < nvars {
            x[v] = d.constants[i].clone();
        }
    }
    Some(x)
}

pub fn satisfies(rows: &[Row], x: &[BigRational]) -> bool {
    x.iter().all(|v| !v.is_negative())
        && rows.iter().all(|(a, b)| {
            let lhs: BigRational = a.iter().map(|&(j, v)| &x[j] * big(v)).sum();
            lhs >= big(*b)
        })
}
