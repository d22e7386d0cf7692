use std::sync::Arc;

use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::scalar::Scalar;

/// Compressed-row sparsity pattern of the P1 node adjacency graph.
///
/// Built once per mesh; every assembled operator shares it so values can be
/// refilled in place each stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// `tri_slots[k][a][b]`: value index of (node a, node b) of triangle k.
    tri_slots: Vec<[[usize; 3]; 3]>,
}

impl Pattern {
    pub fn from_mesh<T: Scalar>(mesh: &Mesh<T>) -> Arc<Self> {
        let n = mesh.num_nodes();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for t in mesh.triangles() {
            for &a in &t.nodes {
                adj[a].extend_from_slice(&t.nodes);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let mut p = Pattern {
            n,
            row_ptr,
            cols,
            tri_slots: Vec::with_capacity(mesh.num_triangles()),
        };
        for t in mesh.triangles() {
            let mut s = [[0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    s[a][b] = p.position(t.nodes[a], t.nodes[b]).expect("triangle pair in pattern");
                }
            }
            p.tri_slots.push(s);
        }
        Arc::new(p)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row(i);
        self.cols[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub(crate) fn tri_slots(&self, k: usize) -> &[[usize; 3]; 3] {
        &self.tri_slots[k]
    }
}

/// Square sparse matrix over a shared [`Pattern`].
#[derive(Debug, Clone)]
pub struct SparseMatrix<T> {
    pattern: Arc<Pattern>,
    values: Vec<T>,
    symmetric: bool,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(pattern: &Arc<Pattern>, symmetric: bool) -> Self {
        SparseMatrix {
            pattern: Arc::clone(pattern),
            values: vec![T::zero(); pattern.nnz()],
            symmetric,
        }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Whether the matrix was assembled from a symmetric bilinear form.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub(crate) fn set_symmetric(&mut self, symmetric: bool) {
        self.symmetric = symmetric;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.position(i, j).map_or(T::zero(), |k| self.values[k])
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let p = &*self.pattern;
        y.par_iter_mut().with_min_len(256).enumerate().for_each(|(i, yi)| {
            let mut s = T::zero();
            for k in p.row(i) {
                s += self.values[k] * x[p.cols[k]];
            }
            *yi = s;
        });
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    /// Row sums, i.e. the lumped diagonal of a mass-type matrix.
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.dim())
            .map(|i| self.pattern.row(i).map(|k| self.values[k]).sum())
            .collect()
    }

    /// Column sums, `1^T A`.
    pub fn col_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.dim()];
        for i in 0..self.dim() {
            for k in self.pattern.row(i) {
                s[self.pattern.cols[k]] += self.values[k];
            }
        }
        s
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&mut self, a: T) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`; both must share the same pattern.
    pub fn add_scaled(&mut self, a: T, other: &SparseMatrix<T>) {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern);
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * *o;
        }
        self.symmetric &= other.symmetric;
    }

    /// Largest |A_ij - A_ji| relative to the largest |A_ij|.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.dim() {
            for k in self.pattern.row(i) {
                let j = self.pattern.cols[k];
                scale = scale.max(self.values[k].abs());
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut d = vec![vec![T::zero(); n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.pattern.row(i) {
                row[self.pattern.cols[k]] = self.values[k];
            }
        }
        d
    }

    pub(crate) fn add_at(&mut self, i: usize, j: usize, v: T) {
        let k = self.pattern.position(i, j).expect("entry outside sparsity pattern");
        self.values[k] += v;
    }

    /// Rows split into disjoint mutable slices, for row-parallel filling.
    pub(crate) fn rows_mut(&mut self) -> Vec<(usize, usize, &mut [T])> {
        let mut out = Vec::with_capacity(self.dim());
        let mut rest: &mut [T] = &mut self.values;
        for i in 0..self.pattern.dim() {
            let r = self.pattern.row(i);
            let (head, tail) = rest.split_at_mut(r.end - r.start);
            out.push((i, r.start, head));
            rest = tail;
        }
        out
    }
}
