//! P1 finite elements for Q(φ, φ) = ∫ |∇φ|² + V φ² dx dy on the chart.

use super::mesh::{ConformalMesh, VertexKind, TRI_RULE};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Upper triangle (row ≤ col) of a symmetric matrix in compressed columns,
/// rows sorted within each column.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparse {
    pub dim: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymmetricSparse {
    /// Duplicates are summed. Entries below the diagonal are mirrored up.
    pub fn from_triplets(dim: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        for e in t.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0, e.2);
            }
        }
        // sorting by value too makes the sums independent of input order
        t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)).then(a.2.total_cmp(&b.2)));
        let mut col_ptr = vec![0usize; dim + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..dim {
            col_ptr[c + 1] += col_ptr[c];
        }
        SymmetricSparse { dim, col_ptr, row_idx, values }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// (row, col, value) with row ≤ col.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |c| (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |p| (self.row_idx[p], c, self.values[p])))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let s = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        match s.binary_search(&r) {
            Ok(k) => self.values[self.col_ptr[c] + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        m
    }

    /// self + s·other
    pub fn add_scaled(&self, s: f64, other: &SymmetricSparse) -> SymmetricSparse {
        assert_eq!(self.dim, other.dim);
        let mut t: Vec<_> = self.entries().collect();
        t.extend(other.entries().map(|(r, c, v)| (r, c, s * v)));
        Self::from_triplets(self.dim, t)
    }

    /// Principal submatrix on the given (sorted) indices.
    pub fn principal(&self, keep: &[usize]) -> SymmetricSparse {
        let mut map = vec![usize::MAX; self.dim];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let t = self
            .entries()
            .filter(|&(r, c, _)| map[r] != usize::MAX && map[c] != usize::MAX)
            .map(|(r, c, v)| (map[r], map[c], v))
            .collect();
        Self::from_triplets(keep.len(), t)
    }
}

/// Discrete quadratic form on the free (non-Dirichlet) vertices.
#[derive(Debug, Clone)]
pub struct Assembled {
    /// stiffness + potential
    pub a: SymmetricSparse,
    /// stiffness alone, ∫ |∇φ|²
    pub k: SymmetricSparse,
    /// lumped λ² mass
    pub m: SymmetricSparse,
    /// lumped w(|X|) λ² mass
    pub w: SymmetricSparse,
    /// free vertex of each unknown
    pub free: Vec<usize>,
}

impl Assembled {
    /// Vertex function from a vector of unknowns, zero on Dirichlet vertices.
    pub fn extend(&self, n_vertices: usize, x: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; n_vertices];
        for (k, &v) in self.free.iter().enumerate() {
            f[v] = x[k];
        }
        f
    }

    pub fn restrict(&self, f: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&v| f[v]).collect()
    }
}

struct Local {
    tri: [usize; 3],
    k: [[f64; 3]; 3],
    v: [[f64; 3]; 3],
    area: f64,
}

fn local(mesh: &ConformalMesh, t: usize) -> Local {
    let c = mesh.corners(t);
    let area = mesh.signed_area(t);
    // ∇φᵢ = (b_i, c_i) / (2·area)
    let mut b = [0.0; 3];
    let mut g = [0.0; 3];
    for i in 0..3 {
        let p = c[(i + 1) % 3];
        let q = c[(i + 2) % 3];
        b[i] = p.im - q.im;
        g[i] = q.re - p.re;
    }
    let mut k = [[0.0; 3]; 3];
    let mut v = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + g[i] * g[j]) / (4.0 * area);
        }
    }
    for (q, (bary, wq)) in TRI_RULE.iter().enumerate() {
        let vq = mesh.tri_potential[t][q] * wq * area;
        for i in 0..3 {
            for j in 0..3 {
                v[i][j] += vq * bary[i] * bary[j];
            }
        }
    }
    Local { tri: mesh.triangles[t], k, v, area }
}

/// A, K, M, W on the vertices that are free in the mesh and not listed in
/// `extra_dirichlet`. The potential is integrated with the degree-4 rule at
/// exact sample points, so Q on the P1 space is (up to quadrature error) the
/// restriction of the continuous form and discrete counts stay lower bounds.
pub fn assemble_masked(mesh: &ConformalMesh, extra_dirichlet: &[bool]) -> Assembled {
    let n = mesh.num_vertices();
    let mut map = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in 0..n {
        let d = mesh.boundary_flags[v] == VertexKind::Dirichlet || extra_dirichlet.get(v).copied().unwrap_or(false);
        if !d {
            map[v] = free.len();
            free.push(v);
        }
    }
    let locals: Vec<Local> = (0..mesh.triangles.len()).into_par_iter().map(|t| local(mesh, t)).collect();
    let mut ta = Vec::with_capacity(9 * locals.len());
    let mut tk = Vec::with_capacity(9 * locals.len());
    let mut lumped = vec![0.0; n];
    for l in &locals {
        for i in 0..3 {
            lumped[l.tri[i]] += l.area / 3.0;
            let ia = map[l.tri[i]];
            if ia == usize::MAX {
                continue;
            }
            for j in 0..3 {
                let ib = map[l.tri[j]];
                if ib == usize::MAX || ib < ia {
                    continue;
                }
                tk.push((ia, ib, l.k[i][j]));
                ta.push((ia, ib, l.k[i][j] + l.v[i][j]));
            }
        }
    }
    let dim = free.len();
    let m: Vec<f64> = free.iter().map(|&v| lumped[v] * mesh.lambda2[v]).collect();
    let w: Vec<f64> = free.iter().map(|&v| lumped[v] * mesh.weight[v]).collect();
    Assembled {
        a: SymmetricSparse::from_triplets(dim, ta),
        k: SymmetricSparse::from_triplets(dim, tk),
        m: SymmetricSparse::diagonal(&m),
        w: SymmetricSparse::diagonal(&w),
        free,
    }
}

/// (A, M): the form Q and the area mass on the free vertices.
pub fn assemble_q(mesh: &ConformalMesh) -> (SymmetricSparse, SymmetricSparse) {
    let a = assemble_masked(mesh, &[]);
    (a.a, a.m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_order_does_not_matter() {
        let t = vec![(0, 1, 0.1), (1, 0, 0.2), (1, 1, 1.0), (2, 2, 3.0), (0, 1, 1e-17), (2, 0, -4.0)];
        let mut u = t.clone();
        u.reverse();
        let a = SymmetricSparse::from_triplets(3, t);
        let b = SymmetricSparse::from_triplets(3, u);
        assert_eq!(a, b);
        assert!((a.get(1, 0) - 0.3).abs() < 1e-15);
        assert_eq!(a.get(0, 2), -4.0);
        let x = [1.0, 2.0, 3.0];
        let y = a.matvec(&x);
        let d = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..3 {
            assert!((y[i] - d[i]).abs() < 1e-14);
        }
    }
}
