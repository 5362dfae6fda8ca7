//! Tableau simplex for the maximin linear program of a matrix game, generic
//! over exact rationals and `f64`.

use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Signed, Zero};

use crate::ratio::Rational;

pub(crate) trait Scalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn positive(&self) -> bool;
    fn negative(&self) -> bool;
}

impl Scalar for Rational {
    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn one() -> Self {
        <Rational as One>::one()
    }
    fn positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

const F64_EPS: f64 = 1e-12;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn positive(&self) -> bool {
        *self > F64_EPS
    }
    fn negative(&self) -> bool {
        *self < -F64_EPS
    }
}

pub(crate) struct Saddle<T> {
    pub value: T,
    pub row: Vec<T>,
    pub col: Vec<T>,
}

/// Solves `max_x min_y xᵀAy` for a non-empty rectangular matrix.
///
/// The payoffs are shifted so every entry is at least 1, then
/// `max Σw s.t. Aw ≤ 1, w ≥ 0` is solved with Bland's rule. The column
/// strategy is `w / Σw`; the row strategy comes from the slack reduced costs.
pub(crate) fn solve<T: Scalar>(payoff: &[Vec<T>]) -> Saddle<T> {
    let rows = payoff.len();
    let cols = payoff[0].len();
    let min = payoff
        .iter()
        .flatten()
        .fold(payoff[0][0].clone(), |m, v| if *v < m { v.clone() } else { m });
    let shift = T::one() - min;

    // Columns: w_0..w_{cols-1}, slack_0..slack_{rows-1}, rhs.
    let width = cols + rows + 1;
    let mut tab: Vec<T> = Vec::with_capacity(rows * width);
    for (i, row) in payoff.iter().enumerate() {
        for v in row {
            tab.push(v.clone() + shift.clone());
        }
        for k in 0..rows {
            tab.push(if k == i { T::one() } else { T::zero() });
        }
        tab.push(T::one());
    }
    // Reduced costs, and the objective value in the last slot.
    let mut obj: Vec<T> = (0..width)
        .map(|j| if j < cols { T::one() } else { T::zero() })
        .collect();
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    while let Some(enter) = (0..cols + rows).find(|&j| obj[j].positive()) {
        let mut leave: Option<(usize, T)> = None;
        for r in 0..rows {
            let a = &tab[r * width + enter];
            if !a.positive() {
                continue;
            }
            let ratio = tab[r * width + width - 1].clone() / a.clone();
            leave = match leave {
                None => Some((r, ratio)),
                Some((best, best_ratio)) => {
                    if ratio < best_ratio || (ratio <= best_ratio && basis[r] < basis[best]) {
                        Some((r, ratio))
                    } else {
                        Some((best, best_ratio))
                    }
                }
            };
        }
        // The feasible region is bounded because every entry is positive.
        let (pivot_row, _) = leave.expect("bounded program");
        pivot(&mut tab, &mut obj, width, rows, pivot_row, enter);
        basis[pivot_row] = enter;
    }

    let mut w = vec![T::zero(); cols];
    for (r, &b) in basis.iter().enumerate() {
        if b < cols {
            w[b] = tab[r * width + width - 1].clone();
        }
    }
    let total = w.iter().fold(T::zero(), |acc, v| acc + v.clone());
    let col: Vec<T> = w.into_iter().map(|v| v / total.clone()).collect();
    let row: Vec<T> = (0..rows)
        .map(|i| {
            let dual = T::zero() - obj[cols + i].clone();
            let dual = if dual.negative() { T::zero() } else { dual };
            dual / total.clone()
        })
        .collect();
    let value = T::one() / total - shift;
    Saddle { value, row, col }
}

fn pivot<T: Scalar>(tab: &mut [T], obj: &mut [T], width: usize, rows: usize, pr: usize, pc: usize) {
    let p = tab[pr * width + pc].clone();
    for j in 0..width {
        let v = tab[pr * width + j].clone() / p.clone();
        tab[pr * width + j] = v;
    }
    let pivot_row: Vec<T> = tab[pr * width..(pr + 1) * width].to_vec();
    for r in 0..rows {
        if r == pr {
            continue;
        }
        let factor = tab[r * width + pc].clone();
        if !factor.positive() && !factor.negative() {
            continue;
        }
        for j in 0..width {
            let v = tab[r * width + j].clone() - factor.clone() * pivot_row[j].clone();
            tab[r * width + j] = v;
        }
    }
    let factor = obj[pc].clone();
    for j in 0..width {
        let v = obj[j].clone() - factor.clone() * pivot_row[j].clone();
        obj[j] = v;
    }
}
