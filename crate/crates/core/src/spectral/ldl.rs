//! Sparse LDLᵀ without pivoting, ordered by nested dissection, for inertia
//! counts and shifted solves.

use super::assemble::SymmetricSparse;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

const LEAF: usize = 128;
const PIVOT_TOL: f64 = 1e-13;
const PERTURBATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    /// the matrix was perturbed to get past a tiny pivot
    pub perturbed: bool,
}

pub struct Ldl {
    n: usize,
    /// perm[k] = original index of the k-th pivot
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    pub perturbed: bool,
}

fn adjacency(a: &SymmetricSparse) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); a.dim];
    for (r, c, _) in a.entries() {
        if r != c {
            adj[r].push(c);
            adj[c].push(r);
        }
    }
    adj
}

/// BFS levels from `start` inside the vertex set marked `part[v] == tag`.
fn bfs_levels(adj: &[Vec<usize>], part: &[u32], tag: u32, start: usize, level: &mut [usize]) -> Vec<usize> {
    let mut order = vec![start];
    level[start] = 0;
    let mut q = VecDeque::from([start]);
    while let Some(v) = q.pop_front() {
        for &u in &adj[v] {
            if part[u] == tag && level[u] == usize::MAX {
                level[u] = level[v] + 1;
                q.push_back(u);
                order.push(u);
            }
        }
    }
    order
}

/// Nested dissection by BFS level-set separators.
pub fn nested_dissection(a: &SymmetricSparse) -> Vec<usize> {
    let n = a.dim;
    let adj = adjacency(a);
    let mut part = vec![0u32; n];
    let mut level = vec![usize::MAX; n];
    let mut next_tag = 1u32;
    let mut out = Vec::with_capacity(n);
    // stack of (vertex set, tag); separators are emitted after both halves
    enum Job {
        Split(Vec<usize>, u32),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Job::Split((0..n).collect(), 0)];
    while let Some(job) = stack.pop() {
        let (set, tag) = match job {
            Job::Emit(s) => {
                out.extend(s);
                continue;
            }
            Job::Split(s, t) => (s, t),
        };
        if set.len() <= LEAF {
            out.extend(set);
            continue;
        }
        // one connected component at a time
        let start = set[0];
        let comp = bfs_levels(&adj, &part, tag, start, &mut level);
        if comp.len() < set.len() {
            for &v in &comp {
                level[v] = usize::MAX;
            }
            let t1 = next_tag;
            let t2 = next_tag + 1;
            next_tag += 2;
            for &v in &comp {
                part[v] = t1;
            }
            let rest: Vec<usize> = set.iter().copied().filter(|&v| part[v] != t1).collect();
            for &v in &rest {
                part[v] = t2;
            }
            stack.push(Job::Split(rest, t2));
            stack.push(Job::Split(comp, t1));
            continue;
        }
        // pseudo-peripheral start: restart from the farthest vertex once
        let far = *comp.last().unwrap();
        for &v in &comp {
            level[v] = usize::MAX;
        }
        let comp = bfs_levels(&adj, &part, tag, far, &mut level);
        let depth = level[*comp.last().unwrap()];
        if depth < 2 {
            for &v in &comp {
                level[v] = usize::MAX;
            }
            out.extend(comp);
            continue;
        }
        let mut count = vec![0usize; depth + 1];
        for &v in &comp {
            count[level[v]] += 1;
        }
        let half = comp.len() / 2;
        let mut acc = 0;
        let mut sep_level = 1;
        for (l, c) in count.iter().enumerate() {
            acc += c;
            if acc >= half {
                sep_level = l.clamp(1, depth - 1);
                break;
            }
        }
        let (t1, t2, ts) = (next_tag, next_tag + 1, next_tag + 2);
        next_tag += 3;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut sep = Vec::new();
        for &v in &comp {
            let l = level[v];
            level[v] = usize::MAX;
            if l < sep_level {
                part[v] = t1;
                lo.push(v);
            } else if l > sep_level {
                part[v] = t2;
                hi.push(v);
            } else {
                part[v] = ts;
                sep.push(v);
            }
        }
        stack.push(Job::Emit(sep));
        stack.push(Job::Split(hi, t2));
        stack.push(Job::Split(lo, t1));
    }
    out
}

/// Upper CSC of P A Pᵀ, where row k of the result is original index perm[k].
fn permute(a: &SymmetricSparse, perm: &[usize]) -> SymmetricSparse {
    let mut inv = vec![0; a.dim];
    for (k, &i) in perm.iter().enumerate() {
        inv[i] = k;
    }
    SymmetricSparse::from_triplets(a.dim, a.entries().map(|(r, c, v)| (inv[r], inv[c], v)).collect())
}

impl Ldl {
    pub fn factor(a: &SymmetricSparse) -> Result<Ldl> {
        let perm = nested_dissection(a);
        let pa = permute(a, &perm);
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        match Self::numeric(&pa, perm.clone(), scale) {
            Ok(f) => Ok(f),
            Err(Error::SingularPivot { .. }) => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
                let mut last = None;
                for _ in 0..3 {
                    let mut q = pa.clone();
                    for v in q.values.iter_mut() {
                        *v += PERTURBATION * scale * rng.gen_range(-1.0..1.0);
                    }
                    match Self::numeric(&q, perm.clone(), scale) {
                        Ok(mut f) => {
                            f.perturbed = true;
                            return Ok(f);
                        }
                        Err(e) => last = Some(e),
                    }
                }
                Err(last.unwrap())
            }
            Err(e) => Err(e),
        }
    }

    /// Up-looking LDLᵀ on the upper CSC of an already permuted matrix.
    fn numeric(a: &SymmetricSparse, perm: Vec<usize>, scale: f64) -> Result<Ldl> {
        let n = a.dim;
        let (ap, ai, ax) = (&a.col_ptr, &a.row_idx, &a.values);
        // elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &ai[ap[k]..ap[k + 1]] {
                let mut i = i0;
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = usize::MAX);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                if i > k {
                    continue;
                }
                y[i] += ax[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let end = lp[i] + lnz[i];
                for p in lp[i]..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[end] = k;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if d[k].abs() <= PIVOT_TOL * scale {
                return Err(Error::SingularPivot { column: perm[k] });
            }
        }
        Ok(Ldl { n, perm, lp, li, lx, d, perturbed: false })
    }

    pub fn inertia(&self) -> Inertia {
        let mut r = Inertia { positive: 0, negative: 0, zero: 0, perturbed: self.perturbed };
        for &v in &self.d {
            if v > 0.0 {
                r.positive += 1;
            } else if v < 0.0 {
                r.negative += 1;
            } else {
                r.zero += 1;
            }
        }
        r
    }

    pub fn fill(&self) -> usize {
        self.lx.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }
}

/// Number of negative eigenvalues, from the signs of D.
pub fn negative_inertia(a: &SymmetricSparse) -> Result<usize> {
    Ok(inertia(a)?.negative)
}

pub fn inertia(a: &SymmetricSparse) -> Result<Inertia> {
    if a.dim == 0 {
        return Ok(Inertia { positive: 0, negative: 0, zero: 0, perturbed: false });
    }
    Ok(Ldl::factor(a)?.inertia())
}

/// Negative eigenvalue count from a dense symmetric eigensolve.
pub fn dense_negative_count(a: &SymmetricSparse) -> usize {
    if a.dim == 0 {
        return 0;
    }
    nalgebra::SymmetricEigen::new(a.to_dense()).eigenvalues.iter().filter(|&&v| v < 0.0).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(n: usize, shift: f64) -> SymmetricSparse {
        let id = |i: usize, j: usize| i * n + j;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                t.push((id(i, j), id(i, j), 4.0 - shift));
                if i + 1 < n {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                }
                if j + 1 < n {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                }
            }
        }
        SymmetricSparse::from_triplets(n * n, t)
    }

    #[test]
    fn small_inertias() {
        assert_eq!(negative_inertia(&SymmetricSparse::diagonal(&[1.0, 2.0, 3.0])).unwrap(), 0);
        assert_eq!(negative_inertia(&SymmetricSparse::diagonal(&[1.0, -1.0, -2.0])).unwrap(), 2);
    }

    #[test]
    fn ordering_is_a_permutation() {
        let a = grid_laplacian(40, 0.0);
        let mut p = nested_dissection(&a);
        p.sort_unstable();
        assert_eq!(p, (0..1600).collect::<Vec<_>>());
    }

    #[test]
    fn grid_inertia_and_solve_match_dense() {
        // eigenvalues 4 − 2cos(πk/(n+1)) − 2cos(πl/(n+1))
        let n = 20;
        for shift in [0.3, 1.1, 2.7] {
            let a = grid_laplacian(n, shift);
            let exact = (1..=n)
                .flat_map(|k| (1..=n).map(move |l| (k, l)))
                .filter(|&(k, l)| {
                    let c = |m: usize| (std::f64::consts::PI * m as f64 / (n + 1) as f64).cos();
                    4.0 - 2.0 * c(k) - 2.0 * c(l) - shift < 0.0
                })
                .count();
            let f = Ldl::factor(&a).unwrap();
            assert_eq!(f.inertia().negative, exact);
            assert_eq!(dense_negative_count(&a), exact);
            let b: Vec<f64> = (0..n * n).map(|i| (i as f64 * 0.37).sin()).collect();
            let x = f.solve(&b);
            let r = a.matvec(&x);
            let err = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{err}");
        }
    }
}
