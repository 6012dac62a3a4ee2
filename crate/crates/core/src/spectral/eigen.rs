//! Lowest generalized eigenpairs A x = μ B x (B diagonal, positive) by
//! shift-invert subspace iteration, with every eigenvalue count checked
//! against the inertia of A − σB.

use super::assemble::{assemble_masked, SymmetricSparse};
use super::ldl::{inertia, Ldl};
use super::mesh::ConformalMesh;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const TOL: f64 = 1e-8;
const MAX_ITER: usize = 500;
const GUARD: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    /// values at every mesh vertex, zero on Dirichlet vertices
    pub vector: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn neg_count(a: &SymmetricSparse, b: &[f64], sigma: f64) -> Result<usize> {
    let s = a.add_scaled(-sigma, &SymmetricSparse::diagonal(b));
    Ok(inertia(&s)?.negative)
}

/// Rayleigh–Ritz on span(Y): returns B-orthonormal Ritz vectors and values.
fn rayleigh_ritz(a: &SymmetricSparse, b: &[f64], y: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = y.len();
    let ay: Vec<Vec<f64>> = y.iter().map(|v| a.matvec(v)).collect();
    let by: Vec<Vec<f64>> = y.iter().map(|v| v.iter().zip(b).map(|(x, w)| x * w).collect()).collect();
    let mut ap = DMatrix::zeros(m, m);
    let mut bp = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let s = dot(&y[i], &ay[j]);
            let t = dot(&y[i], &by[j]);
            ap[(i, j)] = s;
            ap[(j, i)] = s;
            bp[(i, j)] = t;
            bp[(j, i)] = t;
        }
    }
    // normalize the basis first so the Cholesky factor is well scaled
    let scale: Vec<f64> = (0..m).map(|i| 1.0 / bp[(i, i)].sqrt()).collect();
    for i in 0..m {
        for j in 0..m {
            ap[(i, j)] *= scale[i] * scale[j];
            bp[(i, j)] *= scale[i] * scale[j];
        }
    }
    let be = SymmetricEigen::new(bp.clone());
    let min_eig = be.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_eig > 1e-13) {
        return Err(Error::DegenerateBasis { min_eig });
    }
    // B_p^{-1/2} A_p B_p^{-1/2}
    let inv_sqrt = &be.eigenvectors
        * DMatrix::from_diagonal(&be.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * be.eigenvectors.transpose();
    let c = &inv_sqrt * &ap * &inv_sqrt;
    let e = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let coef = &inv_sqrt * &e.eigenvectors;
    let n = b.len();
    let mut values = Vec::with_capacity(m);
    let mut vecs = Vec::with_capacity(m);
    for &k in &idx {
        values.push(e.eigenvalues[k]);
        let mut v = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            let c = coef[(i, k)] * scale[i];
            if c != 0.0 {
                for (vv, yy) in v.iter_mut().zip(yi) {
                    *vv += c * yy;
                }
            }
        }
        vecs.push(v);
    }
    Ok((values, vecs))
}

fn factor_shifted(a: &SymmetricSparse, b: &[f64], sigma: f64) -> Result<Ldl> {
    Ldl::factor(&a.add_scaled(-sigma, &SymmetricSparse::diagonal(b)))
}

/// Remove the B-components along each locked vector.
fn deflate(z: &mut [f64], locked: &[Vec<f64>], b: &[f64]) {
    for v in locked {
        let c: f64 = v.iter().zip(z.iter()).zip(b).map(|((p, q), w)| p * q * w).sum();
        for (zz, vv) in z.iter_mut().zip(v) {
            *zz -= c * vv;
        }
    }
}

/// k lowest eigenpairs of A x = μ B x, vectors B-normalized.
///
/// Shift-invert subspace iteration with locking: converged leading Ritz
/// pairs are frozen and projected out, and the shift moves up to just below
/// the lowest unconverged Ritz value, but never past an eigenvalue that has
/// not been locked (checked by inertia).
pub fn lowest_generalized(a: &SymmetricSparse, b: &[f64], k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = a.dim;
    if k == 0 || n == 0 {
        return Err(Error::InvalidInput("need k ≥ 1 and a nonempty system".into()));
    }
    if b.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput("mass matrix must be positive".into()));
    }
    let k = k.min(n);
    let block = (k + GUARD).min(n);
    // a shift below the spectrum
    let mut sigma = 0.0;
    if neg_count(a, b, sigma)? > 0 {
        let bmax = b.iter().cloned().fold(0.0, f64::max);
        sigma = -a.max_abs() / bmax;
        let mut tries = 0;
        while neg_count(a, b, sigma)? > 0 {
            sigma *= 4.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::ConvergenceFailure { iterations: 0 });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut random = |m: usize| -> Vec<Vec<f64>> { (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect() };
    let mut locked_vals: Vec<f64>;
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut y = random(block.min(n));
    let mut f = factor_shifted(a, b, sigma)?;
    let mut prev: Option<Vec<f64>> = None;
    let mut since_shift = 0;
    for _ in 0..MAX_ITER {
        let m = y.len().min(n - locked.len());
        let mut z: Vec<Vec<f64>> = y[..m]
            .iter()
            .map(|v| {
                let mut z = f.solve(&v.iter().zip(b).map(|(x, w)| x * w).collect::<Vec<_>>());
                deflate(&mut z, &locked, b);
                deflate(&mut z, &locked, b);
                z
            })
            .collect();
        if z.is_empty() {
            break;
        }
        // locked vectors stay in the Ritz basis so they keep improving
        let nl = locked.len();
        let mut basis = std::mem::take(&mut locked);
        basis.append(&mut z);
        let (mut vals, mut vecs) = rayleigh_ritz(a, b, &basis)?;
        drop(basis);
        let active_vecs = vecs.split_off(nl);
        let active_vals = vals.split_off(nl);
        locked = vecs;
        locked_vals = vals;
        let (vals, vecs) = (active_vals, active_vecs);
        let spread = vals.iter().fold(0.0f64, |s, v| s.max((v - sigma).abs()));
        // leading Ritz pairs that have settled
        let mut nconv = 0;
        if let Some(p) = &prev {
            while nconv < vals.len() && locked.len() + nconv < k {
                let i = nconv;
                let steady = (vals[i] - p[i]).abs() <= TOL * vals[i].abs().max(1e-6 * spread);
                let av = a.matvec(&vecs[i]);
                let res: f64 = av
                    .iter()
                    .zip(&vecs[i])
                    .zip(b)
                    .map(|((ax, x), w)| (ax - vals[i] * w * x).powi(2) / w)
                    .sum::<f64>()
                    .sqrt();
                if steady && res <= 1e-6 * (vals[i].abs() + spread) {
                    nconv += 1;
                } else {
                    break;
                }
            }
        }
        if nconv == 0 {
            since_shift += 1;
            // an early shift toward the lowest Ritz value speeds up the first lock
            if since_shift >= 5 {
                since_shift = 0;
                let s = vals[0] - 0.05 * (vals[vals.len() - 1] - vals[0]).abs();
                if s > sigma && neg_count(a, b, s)? == locked.len() {
                    sigma = s;
                    f = factor_shifted(a, b, sigma)?;
                }
            }
            prev = Some(vals);
            y = vecs;
            continue;
        }
        since_shift = 0;
        for i in 0..nconv {
            locked_vals.push(vals[i]);
            locked.push(vecs[i].clone());
        }
        if locked.len() >= k {
            let mut all = vals.clone();
            all.drain(..nconv);
            let mut check = locked_vals.clone();
            check.extend(all);
            verify_counts(a, b, &check, k)?;
            return Ok(locked_vals.into_iter().zip(locked).collect());
        }
        let mut rest: Vec<Vec<f64>> = vecs.into_iter().skip(nconv).collect();
        let need = (block.min(n - locked.len())).saturating_sub(rest.len());
        rest.extend(random(need));
        y = rest;
        prev = None;
        // move the shift up to just below the next unconverged value
        let next = vals[nconv];
        let last_locked = *locked_vals.last().unwrap();
        let mut d = 0.05 * (vals[vals.len() - 1] - next).abs();
        while d < 0.5 * (next - last_locked).abs() {
            let s = next - d;
            if s > sigma && neg_count(a, b, s)? == locked.len() {
                sigma = s;
                f = factor_shifted(a, b, sigma)?;
                break;
            }
            d *= 4.0;
        }
    }
    Err(Error::ConvergenceFailure { iterations: MAX_ITER })
}

/// Counts below midpoints between consecutive distinct Ritz values must match.
fn verify_counts(a: &SymmetricSparse, b: &[f64], vals: &[f64], k: usize) -> Result<()> {
    for i in 0..k {
        let next = match vals.get(i + 1) {
            Some(&v) => v,
            None => continue,
        };
        let gap = next - vals[i];
        if gap <= 1e-6 * vals[i].abs().max(1e-9) {
            continue;
        }
        let mid = vals[i] + 0.5 * gap;
        let found = neg_count(a, b, mid)?;
        if found != i + 1 {
            return Err(Error::InertiaMismatch { shift: mid, expected: i + 1, found });
        }
    }
    Ok(())
}

/// k lowest eigenpairs of Q φ = μ w(|X|) φ on the mesh. Eigenfunctions are
/// normalized in the weighted norm ∫ w φ² dA and signed with a positive
/// largest entry.
pub fn weighted_eigenpairs(mesh: &ConformalMesh, k: usize) -> Result<Vec<Eigenpair>> {
    let asm = assemble_masked(mesh, &[]);
    let pairs = lowest_generalized(&asm.a, &asm.w.values, k)?;
    Ok(pairs
        .into_iter()
        .map(|(value, x)| {
            let imax = (0..x.len()).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
            let s = if x.get(imax).copied().unwrap_or(1.0) < 0.0 { -1.0 } else { 1.0 };
            let x: Vec<f64> = x.iter().map(|v| s * v).collect();
            Eigenpair { value, vector: asm.extend(mesh.num_vertices(), &x) }
        })
        .collect())
}

/// All generalized eigenvalues from a dense solve, ascending.
pub fn dense_generalized_eigenvalues(a: &SymmetricSparse, b: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = b.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut m = a.to_dense();
    for i in 0..a.dim {
        for j in 0..a.dim {
            m[(i, j)] *= s[i] * s[j];
        }
    }
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    pub relative_changes: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// ∫ |∇f|² of a P1 vertex function; conformally invariant, so the chart
/// value is the intrinsic one.
pub fn dirichlet_energy(mesh: &ConformalMesh, f: &[f64]) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| {
            let c = mesh.corners(t);
            let area = mesh.signed_area(t);
            let tri = mesh.triangles[t];
            let mut gx = 0.0;
            let mut gy = 0.0;
            for i in 0..3 {
                let p = c[(i + 1) % 3];
                let q = c[(i + 2) % 3];
                gx += f[tri[i]] * (p.im - q.im);
                gy += f[tri[i]] * (q.re - p.re);
            }
            (gx * gx + gy * gy) / (4.0 * area)
        })
        .sum()
}

/// Cauchy test on ∫|∇f|² along an exhaustion: passes when the relative
/// change between consecutive stages stays below 2% over the last 3 stages.
pub fn gradient_l2_check(stages: &[(&ConformalMesh, &[f64])]) -> GradientReport {
    let tolerance = 0.02;
    let radii: Vec<f64> = stages.iter().map(|(m, _)| m.region.r).collect();
    let energies: Vec<f64> = stages.iter().map(|(m, f)| dirichlet_energy(m, f)).collect();
    let relative_changes: Vec<f64> =
        energies.windows(2).map(|w| (w[1] - w[0]).abs() / w[1].abs().max(f64::MIN_POSITIVE)).collect();
    let pass = relative_changes.len() >= 2 && relative_changes[relative_changes.len() - 2..].iter().all(|&c| c < tolerance);
    GradientReport { radii, energies, relative_changes, tolerance, pass }
}
