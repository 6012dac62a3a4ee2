//! The weighted space L²* and its harmonic 1-forms: dimension counts, the
//! integrability threshold at an end, the cutoff family φ^α_R, and the
//! reflection-parity bookkeeping on the Costa family.

pub mod basis;
pub mod parity;

pub use basis::{
    basis_topology, dx_form, extrinsic_norms, holomorphic_basis, l2star_gram, star_dx, x_omega, Gram,
    HolomorphicBasis, MeromorphicForm,
};
pub use parity::{
    contradiction_replay, costa_parity_dims, form_parity, parity_decomposition, parity_feasibility, parity_type_of,
    pullback_density, CostaParityDims, Inequality, LemmaSystem, ModelForm, ParityDecomposition, ParityType,
    Reflection, Replay,
};

use crate::complexfn::Poly;
use crate::error::{Error, Result};
use crate::quad::adaptive_gk_scalar;
use crate::topology::{Sidedness, SurfaceTopology};
use serde::Serialize;

/// w(x) = (1 + |x|²)⁻¹ (log(2 + |x|))⁻²
pub fn l2star_weight(x_norm: f64) -> f64 {
    1.0 / ((1.0 + x_norm * x_norm) * (2.0 + x_norm).ln().powi(2))
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct L2StarWeight;

impl L2StarWeight {
    pub fn eval(&self, x_norm: f64) -> f64 {
        l2star_weight(x_norm)
    }

    /// The value at the origin, (log 2)⁻².
    pub fn sup(&self) -> f64 {
        std::f64::consts::LN_2.powi(-2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicDimension {
    pub dim: i64,
    pub formula: String,
    pub note: Option<String>,
}

/// 2g + 2Σ(dⱼ+1) − 2 for two-sided surfaces. For one-sided ones, the
/// anti-invariant part on the double cover, g + 2Σ(dⱼ+1) − 1.
pub fn dim_harmonic_l2star(t: &SurfaceTopology) -> i64 {
    harmonic_dimension(t).dim
}

pub fn harmonic_dimension(t: &SurfaceTopology) -> HarmonicDimension {
    let g = t.genus as i64;
    let s = t.end_sum();
    match t.sided {
        Sidedness::Two => HarmonicDimension { dim: 2 * g + 2 * s - 2, formula: "2g + 2Σ(dⱼ+1) − 2".into(), note: None },
        Sidedness::One => HarmonicDimension {
            dim: g + 2 * s - 1,
            formula: "g + 2Σ(dⱼ+1) − 1".into(),
            note: Some(
                "anti-invariant forms on the two-sided double cover; grouped so that (dim − 3)/3 equals \
                 the one-sided lower bound (g + 2Σ(dⱼ+1) − 4)/3"
                    .into(),
            ),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EndNorm {
    pub l: u32,
    pub d: u32,
    pub epsilon: f64,
    /// ∫_ε^{1/2} r^{2(d−l)+1} (log r)⁻² dr
    pub value: f64,
    pub error: f64,
    /// slope of log(value) against log(1/ε) over [ε, ε²]
    pub growth_rate: f64,
    pub diverges: bool,
}

const DIVERGENCE_RATE: f64 = 0.1;

/// With u = log(1/r) the integral is ∫ e^{−mu} u⁻² du over
/// [log 2, log(1/ε)], m = 2(d − l + 1).
fn end_integral(l: u32, d: u32, epsilon: f64) -> (f64, f64) {
    let m = 2.0 * (d as f64 - l as f64 + 1.0);
    let (a, b) = (2f64.ln(), (1.0 / epsilon).ln());
    // split at unit steps in u so the exponential stays resolved per piece
    let n = ((b - a) * m.abs().max(1.0)).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for k in 0..n {
        let lo = a + k as f64 * h;
        let (v, e, _) = adaptive_gk_scalar(|u| (-m * u).exp() / (u * u), lo, lo + h, 0.0, 1e-13, 64);
        value += v;
        error += e;
    }
    (value, error)
}

/// L²* norm of dz/zˡ over the end {ε < |z| < 1/2} of multiplicity d, up to
/// the constant of the comparison |X| ≃ |z|⁻ᵈ.
pub fn l2star_end_norm(l: u32, d: u32, epsilon: f64) -> Result<EndNorm> {
    if l == 0 || d == 0 || !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidInput(format!("end norm needs l, d ≥ 1 and 0 < ε < 1/2 (l={l}, d={d}, ε={epsilon})")));
    }
    let (value, error) = end_integral(l, d, epsilon);
    // least-squares slope over five points log(1/εₖ) from L to 2L
    let l0 = (1.0 / epsilon).ln();
    let pts: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let big_l = l0 * (1.0 + k as f64 / 4.0);
            (big_l, end_integral(l, d, (-big_l).exp()).0.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 5.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 5.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let growth_rate = sxy / sxx;
    Ok(EndNorm { l, d, epsilon, value, error, growth_rate, diverges: growth_rate > DIVERGENCE_RATE })
}

/// ξ(s) = 10s³ − 15s⁴ + 6s⁵ on [0, 1], clamped outside.
pub fn xi_poly() -> Poly {
    Poly::from_real(&[0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
}

pub fn xi(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

pub fn xi_prime(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

pub fn xi_second(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// sup|ξ′|, attained at s = 1/2.
pub const XI_PRIME_SUP: f64 = 15.0 / 8.0;

/// sup|ξ″| = 10/√3, attained at s = (3 ± √3)/6.
pub fn xi_second_sup() -> f64 {
    10.0 / 3f64.sqrt()
}

/// C(ξ) for the Laplacian witness.
pub fn cutoff_constant() -> f64 {
    XI_PRIME_SUP.max(xi_second_sup())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffFamily {
    pub alpha: f64,
    pub r: f64,
}

impl CutoffFamily {
    pub fn new(alpha: f64, r: f64) -> Result<Self> {
        if !(alpha > 1.0 && r > 1.0 && alpha.is_finite() && r.is_finite()) {
            return Err(Error::InvalidInput(format!("cutoff needs α > 1 and R > 1 (α={alpha}, R={r})")));
        }
        Ok(CutoffFamily { alpha, r })
    }

    /// ψ(x) = 1 + 1/(α−1) − log|x| / ((α−1) log R)
    pub fn psi(&self, x_norm: f64) -> f64 {
        let a1 = self.alpha - 1.0;
        1.0 + 1.0 / a1 - x_norm.ln() / (a1 * self.r.ln())
    }

    pub fn phi(&self, x_norm: f64) -> f64 {
        if x_norm <= self.r {
            return 1.0;
        }
        xi(self.psi(x_norm)).clamp(0.0, 1.0)
    }

    /// dφ/d|x|
    pub fn dphi(&self, x_norm: f64) -> f64 {
        -xi_prime(self.psi(x_norm)) / (x_norm * (self.alpha - 1.0) * self.r.ln())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffValue {
    pub phi: f64,
    /// |x|(α−1)(log R)|∇φ|, bounded by sup|ξ′|
    pub grad_witness: f64,
    /// |Δφ| over the two-term bound
    /// 1/(|x|²(α−1)²log²R) + 2ν²/((α−1)|x|² log R), bounded by C(ξ)
    pub lap_witness: f64,
}

/// φ^α_R at extrinsic radius |x| with the worst-case gradient |∇|x|| = 1.
pub fn cutoff_eval(c: &CutoffFamily, x_norm: f64) -> Result<CutoffValue> {
    cutoff_eval_with_normal(c, x_norm, 0.0)
}

/// As `cutoff_eval`, on a minimal surface where ν = N · x/|x|. Then
/// |∇|x||² = 1 − ν² and Δψ = −2ν² / ((α−1)|x|² log R).
pub fn cutoff_eval_with_normal(c: &CutoffFamily, x_norm: f64, nu: f64) -> Result<CutoffValue> {
    if !(x_norm > 0.0) || !(0.0..=1.0).contains(&nu.abs()) {
        return Err(Error::InvalidInput(format!("cutoff at |x| = {x_norm}, ν = {nu}")));
    }
    let a1 = c.alpha - 1.0;
    let lr = c.r.ln();
    let s = c.psi(x_norm);
    let nu2 = nu * nu;
    let grad_psi = (1.0 - nu2).sqrt() / (x_norm * a1 * lr);
    let lap_psi = -2.0 * nu2 / (a1 * x_norm * x_norm * lr);
    let lap = xi_second(s) * grad_psi * grad_psi + xi_prime(s) * lap_psi;
    let t1 = 1.0 / (x_norm * x_norm * a1 * a1 * lr * lr);
    let t2 = 2.0 * nu2 / (a1 * x_norm * x_norm * lr);
    Ok(CutoffValue {
        phi: c.phi(x_norm),
        grad_witness: xi_prime(s).abs() * (1.0 - nu2).sqrt(),
        lap_witness: lap.abs() / (t1 + t2),
    })
}

/// log-spaced radii on [R, R^α]
pub fn cutoff_sample(c: &CutoffFamily, n: usize) -> Vec<f64> {
    let (a, b) = (c.r.ln(), c.alpha * c.r.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}
