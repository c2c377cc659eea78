//! Dense exact linear algebra over the rationals.
//!
//! The pivot rule is fixed once and for all: scanning columns left to right,
//! pick the first row (top to bottom) with a nonzero entry. Everything
//! downstream (cohomology representatives, kernel bases, reports) inherits
//! its determinism from this rule.

use crate::scalar::Rat;
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    if other[(k, j)].is_zero() {
                        continue;
                    }
                    let p = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += p;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc += &self[(i, j)] * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].recip();
            for j in c..self.cols {
                let v = &self[(r, j)] * &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let factor = self[(i, c)].clone();
                    for j in c..self.cols {
                        let sub = &factor * &self[(r, j)];
                        self[(i, j)] -= sub;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the null space `{x : Ax = 0}`, deterministic: one vector per
    /// free column, with that free coordinate set to 1.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(ri, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of `Ax = b` (free variables set to 0), or `None`.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.rows, b.len());
        let mut aug = Mat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (ri, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(ri, self.cols)].clone();
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let ai = a * self.cols + j;
            let bi = b * self.cols + j;
            self.data.swap(ai, bi);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

/// Row span of a list of vectors in canonical (RREF, zero rows dropped) form.
pub fn span_canonical(vectors: &[Vec<Rat>], dim: usize) -> Mat {
    let rows: Vec<Vec<Rat>> = vectors.iter().map(|v| {
        assert_eq!(v.len(), dim);
        v.clone()
    }).collect();
    let mut m = if rows.is_empty() { Mat::zeros(0, dim) } else { Mat::from_rows(rows) };
    let pivots = m.rref();
    let mut out = Mat::zeros(pivots.len(), dim);
    for i in 0..pivots.len() {
        for j in 0..dim {
            out[(i, j)] = m[(i, j)].clone();
        }
    }
    out
}

pub fn spans_equal(a: &[Vec<Rat>], b: &[Vec<Rat>], dim: usize) -> bool {
    span_canonical(a, dim) == span_canonical(b, dim)
}

pub fn in_span(vectors: &[Vec<Rat>], v: &[Rat]) -> bool {
    if v.iter().all(|x| x.is_zero()) {
        return true;
    }
    if vectors.is_empty() {
        return false;
    }
    let dim = v.len();
    let cols: Vec<Vec<Rat>> = vectors.to_vec();
    let mut m = Mat::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..dim {
            m[(i, j)] = c[i].clone();
        }
    }
    m.solve(v).is_some()
}

/// Columns of `mat` restricted to an independent subset, scanned left to
/// right: returns the indices of the columns kept.
pub fn independent_columns(mat: &Mat) -> Vec<usize> {
    let mut m = mat.clone();
    m.rref()
}

pub type SparseVec = std::collections::BTreeMap<usize, Rat>;

pub fn sparse_sub_scaled(target: &mut SparseVec, source: &SparseVec, factor: &Rat) {
    if factor.is_zero() {
        return;
    }
    for (&i, v) in source {
        let entry = target.entry(i).or_insert_with(Rat::zero);
        *entry -= factor * v;
        if entry.is_zero() {
            target.remove(&i);
        }
    }
}

/// Incremental row-space reducer over sparse vectors; rows are kept with
/// normalized leading entries, keyed by leading index.
#[derive(Debug, Default, Clone)]
pub struct SparseReducer {
    rows: std::collections::BTreeMap<usize, SparseVec>,
}

impl SparseReducer {
    pub fn new() -> Self {
        SparseReducer::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residual of v modulo the current row space.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut cur = v.clone();
        loop {
            let Some((&lead, _)) = cur.iter().next() else { return cur };
            let Some(row) = self.rows.get(&lead) else { return cur };
            let factor = cur[&lead].clone();
            sparse_sub_scaled(&mut cur, row, &factor);
        }
    }

    /// Insert v if independent; returns true when the rank grew.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let mut cur = self.reduce(v);
        let Some((&lead, _)) = cur.iter().next() else { return false };
        let inv = cur[&lead].recip();
        for val in cur.values_mut() {
            *val *= &inv;
        }
        self.rows.insert(lead, cur);
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }
}

/// Kernel of the linear map sending the j-th standard vector to columns[j]:
/// returns combination vectors c with sum_j c_j columns[j] = 0. Deterministic
/// elimination in column order.
pub fn sparse_kernel(columns: &[SparseVec]) -> Vec<Vec<Rat>> {
    let n = columns.len();
    // rows of the reducer carry a dense tail recording the combination
    let mut rows: std::collections::BTreeMap<usize, (SparseVec, Vec<Rat>)> =
        std::collections::BTreeMap::new();
    let mut kernel = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let mut cur = col.clone();
        let mut tail = vec![Rat::zero(); n];
        tail[j] = Rat::one();
        loop {
            let Some((&lead, _)) = cur.iter().next() else { break };
            let Some((row, row_tail)) = rows.get(&lead) else { break };
            let factor = cur[&lead].clone();
            sparse_sub_scaled(&mut cur, row, &factor);
            for (t, rt) in tail.iter_mut().zip(row_tail) {
                if !rt.is_zero() {
                    *t -= &factor * rt;
                }
            }
        }
        if cur.is_empty() {
            kernel.push(tail);
        } else {
            let lead = *cur.keys().next().unwrap();
            let inv = cur[&lead].recip();
            for val in cur.values_mut() {
                *val *= &inv;
            }
            for t in tail.iter_mut() {
                *t *= &inv;
            }
            rows.insert(lead, (cur, tail));
        }
    }
    kernel
}

/// Solve sum_j c_j columns[j] = target; `None` if inconsistent.
pub fn sparse_solve(columns: &[SparseVec], target: &SparseVec) -> Option<Vec<Rat>> {
    let mut all: Vec<SparseVec> = columns.to_vec();
    all.push(target.clone());
    for combo in sparse_kernel(&all) {
        let last = combo.last().unwrap();
        if !last.is_zero() {
            let inv = -last.recip();
            return Some(combo[..columns.len()].iter().map(|c| c * &inv).collect());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, ratq};

    fn m2(rows: &[&[i64]]) -> Mat {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
    }

    #[test]
    fn rref_and_rank() {
        let m = m2(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        for v in &k {
            assert!(m.apply(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_consistent() {
        let m = m2(&[&[1, 1], &[0, 1]]);
        let x = m.solve(&[rat(3), rat(1)]).unwrap();
        assert_eq!(x, vec![rat(2), rat(1)]);
        let m = m2(&[&[1, 0], &[1, 0]]);
        assert!(m.solve(&[rat(1), rat(2)]).is_none());
    }

    #[test]
    fn span_ops() {
        let a = vec![vec![rat(1), rat(0)], vec![rat(1), rat(1)]];
        let b = vec![vec![rat(0), rat(2)], vec![rat(3), rat(0)]];
        assert!(spans_equal(&a, &b, 2));
        assert!(in_span(&a, &[ratq(1, 2), ratq(-7, 3)]));
        let c = vec![vec![rat(1), rat(1)]];
        assert!(!in_span(&c, &[rat(1), rat(0)]));
    }
}
