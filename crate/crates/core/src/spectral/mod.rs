//! Morse index by exhaustion: the Jacobi form on growing regions
//! {|X| ≤ R} of the chart, counted by matrix inertia.

pub mod assemble;
pub mod eigen;
pub mod ldl;
pub mod mesh;
pub mod symmetry;

pub use assemble::{assemble_masked, assemble_q, Assembled, SymmetricSparse};
pub use eigen::{
    dense_generalized_eigenvalues, dirichlet_energy, gradient_l2_check, lowest_generalized, weighted_eigenpairs,
    Eigenpair, GradientReport,
};
pub use ldl::{dense_negative_count, inertia, negative_inertia, Inertia, Ldl};
pub use mesh::{build_mesh, l2star_weight, quarter_mesh, torus_from_quarter, ConformalMesh, MeshKind, Region, VertexKind};
pub use symmetry::{
    nodal_domain_count, nodal_domain_count_with_zero_set, parity_counts, rotational_jacobi_field,
    symmetry_restricted_index, Parity, ParityCounts, Sign,
};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;
use crate::surface::quadrature::local_chart;
use crate::surface::{total_curvature, Puncture, QuadSpec, WeierstrassData};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub radii: Vec<f64>,
    /// relative edge length of the first stage
    pub h0: f64,
    /// smallest h the policy may reach
    pub h_min: f64,
    /// excision radius at the first stage; None picks it from the curvature
    /// budget
    pub delta0: Option<f64>,
    /// eigenvalues of (A, M) reported per stage
    pub eigs_per_stage: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { radii: vec![10.0, 20.0, 40.0, 80.0, 160.0], h0: 0.3, h_min: 0.05, delta0: None, eigs_per_stage: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage {
    pub r: f64,
    pub delta: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub surface: String,
    pub schedule: Vec<Stage>,
    pub counts: Vec<usize>,
    pub vertices: Vec<usize>,
    pub lowest_eigs: Vec<Vec<f64>>,
    pub perturbed: Vec<bool>,
    pub stabilized: bool,
    pub index_estimate: Option<usize>,
}

impl SpectralReport {
    pub fn require_stable(&self) -> Result<usize> {
        self.index_estimate.ok_or_else(|| Error::NotStabilized { counts: self.counts.clone() })
    }
}

const EXCISED_FRACTION: f64 = 1e-3;

/// ∫ |κ| dA over the disk |u| < δ in the local coordinate of a puncture.
fn excised_curvature(wd: &WeierstrassData, p: &Puncture, delta: f64) -> Result<f64> {
    let radial = gauss_legendre_on(16, 0.0, delta);
    let n_theta = 64;
    let mut s = 0.0;
    for &(r, wr) in &radial {
        for j in 0..n_theta {
            let u = num_complex::Complex64::from_polar(r, 2.0 * PI * j as f64 / n_theta as f64);
            let z = local_chart(p, u);
            // |dz/du|² is 1 at finite punctures and |u|⁻⁴ at ∞
            let jac = match p {
                Puncture::Finite(_) => 1.0,
                Puncture::Infinity => r.powi(-4),
            };
            s += wr * r * (2.0 * PI / n_theta as f64) * wd.kappa_lambda2(z)?.abs() * jac;
        }
    }
    Ok(s)
}

/// Largest δ (≤ 0.1) whose excised disks carry less than 1e−3 of ∫|κ| dA.
pub fn default_delta(wd: &WeierstrassData) -> Result<f64> {
    let total = total_curvature(wd, &QuadSpec::default())?.value.abs();
    if total == 0.0 {
        return Ok(0.1);
    }
    let excised = |d: f64| -> Result<f64> {
        let mut s = 0.0;
        for p in &wd.punctures {
            s += excised_curvature(wd, p, d)?;
        }
        Ok(s)
    };
    let target = EXCISED_FRACTION * total;
    let mut hi = 0.1;
    if excised(hi)? < target {
        return Ok(hi);
    }
    let mut lo = hi;
    while excised(lo)? >= target {
        lo *= 0.5;
        if lo < 1e-12 {
            return Ok(lo);
        }
    }
    for _ in 0..40 {
        let m = (lo * hi).sqrt();
        if excised(m)? < target {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(lo)
}

/// Dirichlet index on {|X| ≤ R} for each R of the schedule. δ shrinks like
/// 1/R; h halves for the following stages whenever the count changes.
/// Stabilized means the last three counts agree.
pub fn index_estimate(wd: &WeierstrassData, schedule: &Schedule) -> Result<SpectralReport> {
    if schedule.radii.is_empty() || schedule.radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("schedule radii must be increasing".into()));
    }
    let delta0 = match schedule.delta0 {
        Some(d) => d,
        None => default_delta(wd)?,
    };
    let r0 = schedule.radii[0];
    let mut h = schedule.h0;
    let mut report = SpectralReport {
        surface: wd.name.clone(),
        schedule: vec![],
        counts: vec![],
        vertices: vec![],
        lowest_eigs: vec![],
        perturbed: vec![],
        stabilized: false,
        index_estimate: None,
    };
    for &r in &schedule.radii {
        let delta = delta0 * r0 / r;
        let mesh = build_mesh(wd, r, delta, h)?;
        let asm = assemble_masked(&mesh, &[]);
        let inert = inertia(&asm.a)?;
        let eigs = if schedule.eigs_per_stage > 0 && asm.a.dim > 0 {
            lowest_generalized(&asm.a, &asm.m.values, schedule.eigs_per_stage)?.into_iter().map(|p| p.0).collect()
        } else {
            vec![]
        };
        report.schedule.push(Stage { r, delta, h });
        report.vertices.push(mesh.num_vertices());
        report.perturbed.push(inert.perturbed);
        report.lowest_eigs.push(eigs);
        if report.counts.last().is_some_and(|&c| c != inert.negative) {
            h = (0.5 * h).max(schedule.h_min);
        }
        report.counts.push(inert.negative);
    }
    let n = report.counts.len();
    if n >= 3 && report.counts[n - 3..].iter().all(|&c| c == report.counts[n - 1]) {
        report.stabilized = true;
        report.index_estimate = Some(report.counts[n - 1]);
    }
    Ok(report)
}
