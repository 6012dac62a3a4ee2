//! Reflection-symmetric pieces of the index on the Costa family, and nodal
//! domains of vertex functions.

use super::assemble::assemble_masked;
use super::ldl::inertia;
use super::mesh::{quarter_mesh, ConformalMesh, TAU1_LINE, TAU2_LINE};
use crate::error::Result;
use crate::surface::WeierstrassData;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Even,
    Odd,
}

/// Parity under (τ₁, τ₂), the reflections z ↦ −z̄ and z ↦ z̄ of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Parity {
    pub tau1: Sign,
    pub tau2: Sign,
}

impl Parity {
    pub const ALL: [Parity; 4] = [
        Parity { tau1: Sign::Even, tau2: Sign::Even },
        Parity { tau1: Sign::Even, tau2: Sign::Odd },
        Parity { tau1: Sign::Odd, tau2: Sign::Even },
        Parity { tau1: Sign::Odd, tau2: Sign::Odd },
    ];

    pub fn label(&self) -> String {
        let s = |x: Sign| if x == Sign::Even { '+' } else { '-' };
        format!("{}{}", s(self.tau1), s(self.tau2))
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Extra Dirichlet vertices for a parity: odd reflections vanish on their
/// fixed lines, even ones get the natural condition.
pub fn parity_mask(quarter: &ConformalMesh, p: Parity) -> Vec<bool> {
    quarter
        .mirror
        .iter()
        .map(|&b| (p.tau1 == Sign::Odd && b & TAU1_LINE != 0) || (p.tau2 == Sign::Odd && b & TAU2_LINE != 0))
        .collect()
}

/// Negative eigenvalue count of Q on the quarter domain with the boundary
/// conditions of the given parity.
pub fn restricted_count(quarter: &ConformalMesh, p: Parity) -> Result<usize> {
    let asm = assemble_masked(quarter, &parity_mask(quarter, p));
    Ok(inertia(&asm.a)?.negative)
}

/// w^{±±} for one parity on the region {|X| ≤ r}.
pub fn symmetry_restricted_index(wd: &WeierstrassData, p: Parity, r: f64, delta: f64, h: f64) -> Result<usize> {
    restricted_count(&quarter_mesh(wd, r, delta, h)?, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityCounts {
    pub r: f64,
    pub h: f64,
    /// (label, count) in the order ++, +−, −+, −−
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

pub fn parity_counts(quarter: &ConformalMesh) -> Result<ParityCounts> {
    let mut counts = Vec::new();
    for p in Parity::ALL {
        counts.push((p.label(), restricted_count(quarter, p)?));
    }
    let total = counts.iter().map(|c| c.1).sum();
    Ok(ParityCounts { r: quarter.region.r, h: quarter.region.h, counts, total })
}

/// φ = N · (e₃ × X), the Jacobi field of rotation about the x₃-axis.
pub fn rotational_jacobi_field(mesh: &ConformalMesh) -> Vec<f64> {
    mesh.positions
        .iter()
        .zip(&mesh.normals)
        .map(|(x, n)| n[1] * x[0] - n[0] * x[1])
        .collect()
}

fn edges(mesh: &ConformalMesh) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = mesh
        .triangles
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Components of the graph on the vertices with `sign[v] != 0` whose edges
/// join vertices of equal sign.
fn sign_components(mesh: &ConformalMesh, sign: &[i8]) -> usize {
    let n = mesh.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    for (a, b) in edges(mesh) {
        if sign[a] != 0 && sign[a] == sign[b] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    (0..n).filter(|&v| sign[v] != 0 && find(&mut parent, v) == v).count()
}

/// Connected components of the positive and negative vertex subgraphs,
/// summed. Exact zeros count as +1e−14.
pub fn nodal_domain_count(mesh: &ConformalMesh, f: &[f64]) -> usize {
    let sign: Vec<i8> = f.iter().map(|&v| if v + if v == 0.0 { 1e-14 } else { 0.0 } > 0.0 { 1 } else { -1 }).collect();
    sign_components(mesh, &sign)
}

/// Like `nodal_domain_count`, but vertices with |f| ≤ tol · max|f| form the
/// nodal set and are removed before counting. Needed when f vanishes along
/// whole curves of vertices, where rounding decides the sign.
pub fn nodal_domain_count_with_zero_set(mesh: &ConformalMesh, f: &[f64], tol: f64) -> usize {
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sign: Vec<i8> = f
        .iter()
        .map(|&v| if v.abs() <= tol * fmax { 0 } else if v > 0.0 { 1 } else { -1 })
        .collect();
    sign_components(mesh, &sign)
}
