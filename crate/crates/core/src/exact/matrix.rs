use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::rat::Rat;

/// Dense rectangular matrix over the rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<Rat>>) -> Self {
        let mut m = RatMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row {i}");
            for (j, v) in r.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        RatMatrix::from_rows(
            cols,
            rows.iter()
                .map(|r| r.iter().map(|&v| Rat::from_integer(v.into())).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: Vec<Rat>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// Rows scaled to integers with duplicates and zero rows dropped.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for i in 0..self.rows {
            let row = self.row(i);
            let lcm = row.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            let ints: Vec<BigInt> = row.iter().map(|r| (r * &lcm).to_integer()).collect();
            let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
            if g.is_zero() {
                continue;
            }
            let ints: Vec<BigInt> = ints.into_iter().map(|x| x / &g).collect();
            if seen.insert(ints.clone()) {
                out.push(ints);
            }
        }
        out
    }

    /// Fraction-free (Bareiss) reduction to row echelon form. Returns the
    /// echelon rows (integer) and their pivot columns.
    fn bareiss_echelon(&self) -> (Vec<Vec<BigInt>>, Vec<usize>) {
        let mut a = self.integer_rows();
        let m = a.len();
        let mut pivots = Vec::new();
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..self.cols {
            if r == m {
                break;
            }
            let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            a.swap(r, p);
            let (head, tail) = a.split_at_mut(r + 1);
            let pivot_row = &head[r];
            let pv = &pivot_row[c];
            for row in tail.iter_mut() {
                let f = row[c].clone();
                for j in c + 1..self.cols {
                    let num = pv * &row[j] - &f * &pivot_row[j];
                    row[j] = if prev.is_one() { num } else { num / &prev };
                }
                row[c] = BigInt::zero();
            }
            prev = a[r][c].clone();
            pivots.push(c);
            r += 1;
        }
        a.truncate(r);
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.bareiss_echelon().1.len()
    }

    /// Exact nullspace basis: one vector per free column, with that column
    /// set to 1 and the other free columns 0.
    pub fn nullspace(&self) -> Vec<Vec<Rat>> {
        let (ech, pivots) = self.bareiss_echelon();
        let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivot_set.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Rat::zero(); self.cols];
                x[f] = Rat::one();
                for (k, &pc) in pivots.iter().enumerate().rev() {
                    let row = &ech[k];
                    let mut acc = Rat::zero();
                    for j in pc + 1..self.cols {
                        if !row[j].is_zero() && !x[j].is_zero() {
                            acc += Rat::from_integer(row[j].clone()) * &x[j];
                        }
                    }
                    x[pc] = -acc / Rat::from_integer(row[pc].clone());
                }
                x
            })
            .collect()
    }

    /// Reduced row echelon form (zero rows removed) and pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let (ech, pivots) = self.bareiss_echelon();
        let mut rows: Vec<Vec<Rat>> = ech
            .into_iter()
            .map(|r| r.into_iter().map(Rat::from_integer).collect())
            .collect();
        for k in (0..rows.len()).rev() {
            let pc = pivots[k];
            let inv = Rat::one() / &rows[k][pc];
            for v in rows[k].iter_mut() {
                *v *= &inv;
            }
            let pivot_row = rows[k].clone();
            for row in rows.iter_mut().take(k) {
                let f = row[pc].clone();
                if f.is_zero() {
                    continue;
                }
                for (j, pv) in pivot_row.iter().enumerate().skip(pc) {
                    if !pv.is_zero() {
                        row[j] -= &f * pv;
                    }
                }
            }
        }
        (RatMatrix::from_rows(self.cols, rows), pivots)
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

/// Free-function form of [`RatMatrix::nullspace`].
pub fn nullspace(m: &RatMatrix) -> Vec<Vec<Rat>> {
    m.nullspace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::int;
    use proptest::prelude::*;

    fn is_null(m: &RatMatrix, v: &[Rat]) -> bool {
        m.mul_vec(v).iter().all(Zero::is_zero)
    }

    #[test]
    fn rank_one_two_by_two() {
        let m = RatMatrix::from_i64(&[&[1, 1], &[2, 2]]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0][0], -ns[0][1].clone());
        assert!(is_null(&m, &ns[0]));
    }

    #[test]
    fn identity_has_trivial_nullspace() {
        assert!(RatMatrix::identity(2).nullspace().is_empty());
    }

    #[test]
    fn single_row_plane() {
        let m = RatMatrix::from_i64(&[&[1, 2, 3]]);
        let ns = m.nullspace();
        assert_eq!(
            ns,
            vec![vec![int(-2), int(1), int(0)], vec![int(-3), int(0), int(1)]]
        );
    }

    #[test]
    fn rref_of_known_matrix() {
        let m = RatMatrix::from_i64(&[&[2, 4, 2], &[1, 3, 4], &[3, 7, 6]]);
        let (r, piv) = m.rref();
        assert_eq!(piv, vec![0, 1]);
        assert_eq!(r, RatMatrix::from_i64(&[&[1, 0, -5], &[0, 1, 3]]));
    }

    proptest! {
        #[test]
        fn rank_nullity(rows in prop::collection::vec(prop::collection::vec(-3i64..4, 5), 1..6)) {
            let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
            let m = RatMatrix::from_i64(&refs);
            let ns = m.nullspace();
            prop_assert_eq!(m.rank() + ns.len(), m.cols());
            for v in &ns {
                prop_assert!(is_null(&m, v));
            }
            // independence: stacking the basis gives full row rank
            if !ns.is_empty() {
                let b = RatMatrix::from_rows(m.cols(), ns.clone());
                prop_assert_eq!(b.rank(), ns.len());
            }
        }
    }
}
