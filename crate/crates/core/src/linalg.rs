//! Exact linear algebra over the rationals.
//!
//! Rows are cleared of denominators and eliminated fraction-free: every
//! update is `lead·row − coef·pivot` followed by division by the row content,
//! so entries stay integral and small. Pivots are chosen by leftmost column,
//! rows are consumed in input order, which makes every result deterministic.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::algebra::Rational;

type SparseRow = Vec<(usize, BigInt)>;

fn clear_denominators(row: &[(usize, Rational)]) -> SparseRow {
    let mut lcm = BigInt::one();
    for (_, c) in row {
        lcm = lcm.lcm(c.denom());
    }
    let mut out: SparseRow =
        row.iter().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (*j, c.numer() * (&lcm / c.denom()))).collect();
    out.sort_by_key(|(j, _)| *j);
    make_primitive(&mut out);
    out
}

fn make_primitive(row: &mut SparseRow) {
    let mut g = BigInt::zero();
    for (_, c) in row.iter() {
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    let negate = row.first().is_some_and(|(_, c)| c.is_negative());
    if g.is_zero() {
        return;
    }
    if negate {
        g = -g;
    }
    if !g.is_one() {
        for (_, c) in row.iter_mut() {
            *c = &*c / &g;
        }
    }
}

/// `a·x − b·y` on sorted sparse rows.
fn combine(a: &BigInt, x: &SparseRow, b: &BigInt, y: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut k) = (0, 0);
    while i < x.len() || k < y.len() {
        let take_x = k >= y.len() || (i < x.len() && x[i].0 < y[k].0);
        let take_y = i >= x.len() || (k < y.len() && y[k].0 < x[i].0);
        if take_x {
            out.push((x[i].0, a * &x[i].1));
            i += 1;
        } else if take_y {
            out.push((y[k].0, -(b * &y[k].1)));
            k += 1;
        } else {
            let v = a * &x[i].1 - b * &y[k].1;
            if !v.is_zero() {
                out.push((x[i].0, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

/// Incremental row echelon form of a sparse rational system.
#[derive(Clone, Debug)]
pub struct RowReducer {
    ncols: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

impl RowReducer {
    pub fn new(ncols: usize) -> Self {
        RowReducer { ncols, pivots: BTreeMap::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.keys().copied().collect()
    }

    fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let mut cursor = 0;
        loop {
            let next = row
                .iter()
                .enumerate()
                .find(|(_, (j, _))| *j >= cursor && self.pivots.contains_key(j))
                .map(|(pos, (j, _))| (pos, *j));
            let Some((pos, col)) = next else { return row };
            let pivot = &self.pivots[&col];
            let lead = &pivot[0].1;
            let coef = row[pos].1.clone();
            let g = lead.gcd(&coef);
            row = combine(&(lead / &g), &row, &(&coef / &g), pivot);
            make_primitive(&mut row);
            cursor = col + 1;
        }
    }

    /// Adds an equation; returns `true` when it increased the rank.
    pub fn add_row(&mut self, row: &[(usize, Rational)]) -> bool {
        debug_assert!(row.iter().all(|(j, _)| *j < self.ncols));
        let reduced = self.reduce(clear_denominators(row));
        match reduced.first() {
            None => false,
            Some((lead, _)) => {
                self.pivots.insert(*lead, reduced);
                true
            }
        }
    }

    pub fn add_dense_row(&mut self, row: &[Rational]) -> bool {
        let sparse: Vec<(usize, Rational)> =
            row.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (j, c.clone())).collect();
        self.add_row(&sparse)
    }

    /// Whether `row` lies in the span of the rows added so far.
    pub fn contains(&self, row: &[Rational]) -> bool {
        let sparse: Vec<(usize, Rational)> =
            row.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (j, c.clone())).collect();
        self.reduce(clear_denominators(&sparse)).is_empty()
    }

    /// Basis of the solution space of `rows · x = 0`. Each vector has a 1 at
    /// its free column, zeros at the other free columns, and is then scaled
    /// so its first nonzero entry is 1.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let free: Vec<usize> = (0..self.ncols).filter(|j| !self.pivots.contains_key(j)).collect();
        let pivots: Vec<(&usize, &SparseRow)> = self.pivots.iter().rev().collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Rational::zero(); self.ncols];
                x[f] = Rational::one();
                for (col, row) in &pivots {
                    let mut acc = Rational::zero();
                    for (j, c) in row.iter().skip(1) {
                        if !x[*j].is_zero() {
                            acc += &x[*j] * Rational::from_integer(c.clone());
                        }
                    }
                    if !acc.is_zero() {
                        x[**col] = -acc / Rational::from_integer(row[0].1.clone());
                    }
                }
                normalize_first_nonzero(&mut x);
                x
            })
            .collect()
    }
}

pub fn normalize_first_nonzero(x: &mut [Rational]) {
    if let Some(first) = x.iter().find(|c| !c.is_zero()).cloned() {
        if !first.is_one() {
            for c in x.iter_mut() {
                *c = &*c / &first;
            }
        }
    }
}

/// Kernel of a dense matrix given by rows.
pub fn nullspace(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut red = RowReducer::new(ncols);
    for row in rows {
        red.add_dense_row(row);
    }
    red.nullspace()
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut red = RowReducer::new(ncols);
    rows.iter().filter(|r| red.add_dense_row(r)).count()
}

/// Indices of a maximal linearly independent subset, chosen greedily in order.
pub fn independent_subset(vectors: &[Vec<Rational>]) -> Vec<usize> {
    let ncols = vectors.first().map_or(0, |r| r.len());
    let mut red = RowReducer::new(ncols);
    (0..vectors.len()).filter(|&i| red.add_dense_row(&vectors[i])).collect()
}

/// Solves `Σ c_i · columns[i] = target`, returning one solution if any exists.
pub fn solve_combination(columns: &[Vec<Rational>], target: &[Rational]) -> Option<Vec<Rational>> {
    let n = columns.len();
    let dim = target.len();
    let mut red = RowReducer::new(n + 1);
    for j in 0..dim {
        let mut row: Vec<(usize, Rational)> = Vec::new();
        for (i, col) in columns.iter().enumerate() {
            if !col[j].is_zero() {
                row.push((i, col[j].clone()));
            }
        }
        if !target[j].is_zero() {
            row.push((n, -target[j].clone()));
        }
        if !row.is_empty() {
            red.add_row(&row);
        }
    }
    if red.pivots.contains_key(&n) {
        return None;
    }
    // particular solution: free unknowns set to 0, augmented column set to 1
    let mut x = vec![Rational::zero(); n + 1];
    x[n] = Rational::one();
    for (col, row) in red.pivots.iter().rev() {
        let mut acc = Rational::zero();
        for (j, c) in row.iter().skip(1) {
            if !x[*j].is_zero() {
                acc += &x[*j] * Rational::from_integer(c.clone());
            }
        }
        x[*col] = -acc / Rational::from_integer(row[0].1.clone());
    }
    x.pop();
    Some(x)
}

/// Determinant of a square matrix by Bareiss fraction-free elimination.
pub fn bareiss_determinant(matrix: &[Vec<Rational>]) -> Rational {
    let n = matrix.len();
    if n == 0 {
        return Rational::one();
    }
    let mut denom_scale = Rational::one();
    let mut a: Vec<Vec<BigInt>> = matrix
        .iter()
        .map(|row| {
            let mut lcm = BigInt::one();
            for c in row {
                lcm = lcm.lcm(c.denom());
            }
            denom_scale /= Rational::from_integer(lcm.clone());
            row.iter().map(|c| c.numer() * (&lcm / c.denom())).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    let mut negate = false;
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return Rational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = Rational::from_integer(a[n - 1][n - 1].clone()) * denom_scale;
    if negate {
        -det
    } else {
        det
    }
}
