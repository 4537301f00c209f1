//! Square matrices over a [`Field`].

use crate::gf::{Field, FieldElem};

/// Row-major n x n matrix. Entries carry no field reference; callers pass the field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    data: Vec<FieldElem>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![FieldElem::ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = FieldElem::ONE;
        }
        Matrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![FieldElem::ZERO; n * n] }
    }

    /// Builds from rows; `None` if the rows do not form a square matrix.
    pub fn from_rows(rows: Vec<Vec<FieldElem>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Matrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn diag(entries: &[FieldElem]) -> Self {
        let mut m = Matrix::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    /// The 2 x 2 exchange matrix.
    pub fn swap2() -> Self {
        Matrix::from_rows(vec![
            vec![FieldElem::ZERO, FieldElem::ONE],
            vec![FieldElem::ONE, FieldElem::ZERO],
        ])
        .expect("square")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElem {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElem) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<FieldElem>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, field: &Field, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = FieldElem::ZERO;
                for k in 0..n {
                    acc = field.add(acc, field.mul(self.get(i, k), other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn apply(&self, field: &Field, v: &[FieldElem]) -> Vec<FieldElem> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(FieldElem::ZERO, |acc, (&a, &b)| field.add(acc, field.mul(a, b)))
            })
            .collect()
    }

    pub fn det(&self, field: &Field) -> FieldElem {
        let (_, det, _) = self.eliminate(field);
        det
    }

    pub fn inverse(&self, field: &Field) -> Option<Matrix> {
        let (_, det, inv) = self.eliminate(field);
        (!det.is_zero()).then_some(inv)
    }

    pub fn is_invertible(&self, field: &Field) -> bool {
        !self.det(field).is_zero()
    }

    /// Gauss-Jordan elimination: (rank, determinant, inverse-if-full-rank).
    fn eliminate(&self, field: &Field) -> (usize, FieldElem, Matrix) {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let mut det = FieldElem::ONE;
        let mut rank = 0;
        for col in 0..n {
            let Some(piv) = (rank..n).find(|&r| !a.get(r, col).is_zero()) else {
                det = FieldElem::ZERO;
                continue;
            };
            if piv != rank {
                a.swap_rows(piv, rank);
                inv.swap_rows(piv, rank);
                det = field.neg(det);
            }
            let pv = a.get(rank, col);
            det = field.mul(det, pv);
            let pinv = field.inv(pv).expect("pivot is nonzero");
            a.scale_row(field, rank, pinv);
            inv.scale_row(field, rank, pinv);
            for r in 0..n {
                if r != rank {
                    let factor = a.get(r, col);
                    if !factor.is_zero() {
                        a.add_row_multiple(field, r, rank, field.neg(factor));
                        inv.add_row_multiple(field, r, rank, field.neg(factor));
                    }
                }
            }
            rank += 1;
        }
        (rank, det, inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for k in 0..self.n {
            self.data.swap(i * self.n + k, j * self.n + k);
        }
    }

    fn scale_row(&mut self, field: &Field, i: usize, c: FieldElem) {
        for k in 0..self.n {
            let v = self.get(i, k);
            self.set(i, k, field.mul(v, c));
        }
    }

    fn add_row_multiple(&mut self, field: &Field, dst: usize, src: usize, c: FieldElem) {
        for k in 0..self.n {
            let v = field.add(self.get(dst, k), field.mul(c, self.get(src, k)));
            self.set(dst, k, v);
        }
    }
}

/// Basis of the right nullspace `{c : A c = 0}` of a `rows x cols` matrix.
pub fn nullspace(field: &Field, a: &[Vec<FieldElem>], cols: usize) -> Vec<Vec<FieldElem>> {
    let mut m: Vec<Vec<FieldElem>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(piv, r);
        let inv = field.inv(m[r][c]).expect("pivot is nonzero");
        for k in 0..cols {
            m[r][k] = field.mul(m[r][k], inv);
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = field.neg(m[i][c]);
                for k in 0..cols {
                    let v = field.add(m[i][k], field.mul(f, m[r][k]));
                    m[i][k] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![FieldElem::ZERO; cols];
            v[fc] = FieldElem::ONE;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = field.neg(m[row][fc]);
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;

    #[test]
    fn inverse_roundtrip() {
        let f = build_field(5, 1, None).unwrap();
        let e = |i| f.elem(i).unwrap();
        let m = Matrix::from_rows(vec![vec![e(1), e(2)], vec![e(3), e(4)]]).unwrap();
        assert_eq!(m.det(&f), f.from_int(-2));
        let inv = m.inverse(&f).unwrap();
        assert_eq!(m.mul(&f, &inv), Matrix::identity(2));
        let sing = Matrix::from_rows(vec![vec![e(1), e(2)], vec![e(2), e(4)]]).unwrap();
        assert!(sing.inverse(&f).is_none());
    }

    #[test]
    fn nullspace_basis() {
        let f = build_field(3, 1, None).unwrap();
        let e = |i| f.elem(i).unwrap();
        let a = vec![vec![e(1), e(1), e(0)]];
        let ns = nullspace(&f, &a, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(f.add(v[0], v[1]).is_zero());
        }
    }
}
