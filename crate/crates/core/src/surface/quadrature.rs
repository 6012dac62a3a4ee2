//! Area quadrature on the punctured chart.
//!
//! Each puncture gets a log-polar patch (r = e^u, Gauss–Legendre panels in u,
//! trapezoid in θ) weighted by a smooth cutoff χ that is 1 near the puncture;
//! the bulk carries 1 − Σχ. The point at infinity is a patch in w = 1/z.
//! The node set integrates dx dy over the chart minus δ-disks.

use super::{Chart, Puncture, WeierstrassData};
use crate::complexfn::C64;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadSpec {
    /// Excision radius in the local coordinate of each puncture.
    pub delta: f64,
    /// Gauss–Legendre nodes per unit of log r.
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Nodes per unit length in the bulk rule.
    pub bulk_density: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { delta: 1e-3, radial_nodes: 16, angular_nodes: 128, bulk_density: 192 }
    }
}

/// C∞ step: 0 for s ≤ 0, 1 for s ≥ 1.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    f(s) / (f(s) + f(1.0 - s))
}

/// χ(r) = 1 for r ≤ ρ/2, 0 for r ≥ ρ.
fn bump(r: f64, rho: f64) -> f64 {
    1.0 - smooth_step(2.0 * r / rho - 1.0)
}

#[derive(Debug, Clone)]
pub struct ChartQuadrature {
    /// (z, weight): Σ w f(z) ≈ ∫ f dx dy over the excised chart.
    pub nodes: Vec<(C64, f64)>,
    pub spec: QuadSpec,
}

struct Layout {
    /// finite centres (all relevant lattice images on the torus)
    centres: Vec<C64>,
    rho: f64,
    /// plane chart: bulk disk radius, with |z| > rb handled in w = 1/z
    rb: f64,
}

fn layout(wd: &WeierstrassData) -> Layout {
    let rho = 0.5 * wd.feature_scale();
    let fp = wd.finite_punctures();
    let centres = match wd.chart {
        Chart::Plane => fp.clone(),
        Chart::Torus { t } => {
            let mut v = Vec::new();
            for p in &fp {
                for m in -1..=1 {
                    for n in -1..=1 {
                        v.push(p + C64::new(m as f64, n as f64 * t));
                    }
                }
            }
            v
        }
    };
    let rb = 2.0 * fp.iter().map(|z| z.norm()).fold(1.0, f64::max);
    Layout { centres, rho, rb }
}

fn log_polar_patch(
    out: &mut Vec<(C64, f64)>,
    spec: &QuadSpec,
    r_lo: f64,
    r_hi: f64,
    map: impl Fn(C64) -> (C64, f64),
    radial_weight: impl Fn(f64) -> f64,
) {
    let (a, b) = (r_lo.ln(), r_hi.ln());
    // narrow panels resolve the cutoff transition
    let panels = ((4.0 * (b - a)).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let m = spec.angular_nodes;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (u, wu) in gauss_legendre_on(spec.radial_nodes, lo, lo + h) {
            let r = u.exp();
            let wr = radial_weight(r);
            if wr == 0.0 {
                continue;
            }
            for k in 0..m {
                let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                let (z, jac) = map(C64::from_polar(r, th));
                // dx dy = r² du dθ
                out.push((z, wu * r * r * (2.0 * PI / m as f64) * wr * jac));
            }
        }
    }
}

impl ChartQuadrature {
    pub fn new(wd: &WeierstrassData, spec: QuadSpec) -> Result<Self> {
        let lay = layout(wd);
        if spec.delta >= 0.5 * lay.rho {
            return Err(Error::InvalidInput(format!(
                "excision radius {} exceeds the patch core {}",
                spec.delta,
                0.5 * lay.rho
            )));
        }
        let mut nodes = Vec::new();
        let chi_sum = |z: C64| -> f64 { lay.centres.iter().map(|c| bump((z - c).norm(), lay.rho)).sum() };
        for p in wd.finite_punctures() {
            log_polar_patch(&mut nodes, &spec, spec.delta, lay.rho, |u| (p + u, 1.0), |r| bump(r, lay.rho));
        }
        match wd.chart {
            Chart::Plane => {
                // bulk disk |z| ≤ rb, polar Gauss–Legendre × trapezoid
                let nr = (spec.bulk_density as f64 * lay.rb / 4.0).ceil() as usize;
                let panels = nr.div_ceil(16).max((8.0 * lay.rb / lay.rho).ceil() as usize);
                let m = (spec.bulk_density as f64 * 2.0 * PI * lay.rb / 4.0).ceil() as usize;
                let m = m.max(spec.angular_nodes);
                let h = lay.rb / panels as f64;
                for pnl in 0..panels {
                    for (r, wr) in gauss_legendre_on(16, pnl as f64 * h, (pnl + 1) as f64 * h) {
                        for k in 0..m {
                            let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                            let z = C64::from_polar(r, th);
                            let w = 1.0 - chi_sum(z);
                            if w > 0.0 {
                                nodes.push((z, wr * r * (2.0 * PI / m as f64) * w));
                            }
                        }
                    }
                }
                if wd.has_infinity() {
                    // |z| ≥ rb as |w| ≤ 1/rb, dx dy = |w|⁻⁴ du dv
                    log_polar_patch(
                        &mut nodes,
                        &spec,
                        spec.delta / lay.rb,
                        1.0 / lay.rb,
                        |w| (1.0 / w, 1.0 / w.norm_sqr().powi(2)),
                        |_| 1.0,
                    );
                }
            }
            Chart::Torus { t } => {
                // periodic trapezoid on the fundamental rectangle
                let nx = spec.bulk_density;
                let ny = ((spec.bulk_density as f64) * t).ceil() as usize;
                let w0 = t / (nx * ny) as f64;
                for i in 0..nx {
                    for j in 0..ny {
                        let z = C64::new((i as f64 + 0.5) / nx as f64, t * (j as f64 + 0.5) / ny as f64);
                        let w = 1.0 - chi_sum(z);
                        if w > 0.0 {
                            nodes.push((z, w0 * w));
                        }
                    }
                }
            }
        }
        Ok(ChartQuadrature { nodes, spec })
    }

    pub fn integrate(&self, f: impl Fn(C64) -> Result<f64> + Sync) -> Result<f64> {
        let parts: Result<Vec<f64>> = self.nodes.par_iter().map(|&(z, w)| Ok(w * f(z)?)).collect();
        // fixed-order sum keeps the result deterministic
        Ok(parts?.iter().sum())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TotalCurvature {
    pub value: f64,
    pub error_estimate: f64,
    /// raw values at δ, δ/2, δ/4
    pub by_delta: Vec<(f64, f64)>,
}

/// ∫ κ dA = ∫ κλ² dx dy, extrapolated to δ → 0 assuming an O(δ²) excision
/// error (the density is bounded at every puncture).
pub fn total_curvature(wd: &WeierstrassData, spec: &QuadSpec) -> Result<TotalCurvature> {
    let mut by_delta = Vec::new();
    for k in 0..3 {
        let mut s = *spec;
        s.delta = spec.delta / 2f64.powi(k);
        let q = ChartQuadrature::new(wd, s)?;
        let v = q.integrate(|z| wd.kappa_lambda2(z))?;
        by_delta.push((s.delta, v));
    }
    let r1 = (4.0 * by_delta[1].1 - by_delta[0].1) / 3.0;
    let r2 = (4.0 * by_delta[2].1 - by_delta[1].1) / 3.0;
    let residual = (r2 - r1).abs();
    if residual > 1e-2 * r2.abs() + 1e-12 {
        return Err(Error::NonConvergent { what: "total curvature".into(), residual, value: r2 });
    }
    Ok(TotalCurvature { value: r2, error_estimate: residual, by_delta })
}

/// −4π(g − 1 + (r + Σd)/2) from the chart data: genus from the chart type
/// and r from the puncture list.
pub fn jorge_meeks_total_curvature(wd: &WeierstrassData, multiplicities: &[u32]) -> f64 {
    let g = match wd.chart {
        Chart::Plane => 0.0,
        Chart::Torus { .. } => 1.0,
    };
    let r = wd.punctures.len() as f64;
    let sd: f64 = multiplicities.iter().map(|&d| d as f64).sum();
    -4.0 * PI * (g - 1.0 + (r + sd) / 2.0)
}

/// Puncture list as local-coordinate maps, shared with the forms module.
pub fn local_chart(p: &Puncture, u: C64) -> C64 {
    match p {
        Puncture::Finite(z0) => z0 + u,
        Puncture::Infinity => 1.0 / u,
    }
}

#[cfg(test)]
mod tests {
    use super::super::catalog::*;
    use super::*;

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nodes_integrate_area_of_a_disk() {
        // ∫ 1_{|z|<1} on the catenoid chart, which has punctures at 0 and ∞
        let cat = catenoid();
        let q = ChartQuadrature::new(&cat, QuadSpec::default()).unwrap();
        let a = q.integrate(|z| Ok(if z.norm() < 1.0 { (-(z.norm_sqr())).exp() } else { 0.0 })).unwrap();
        let exact = PI * (1.0 - (-1.0f64).exp());
        assert!((a - exact).abs() < 2e-3 * exact, "{a} vs {exact}");
    }

    #[test]
    fn torus_nodes_integrate_cell_area() {
        let lat_t = 1.0;
        let c = costa(lat_t).unwrap();
        let q = ChartQuadrature::new(&c, QuadSpec::default()).unwrap();
        let a = q.integrate(|_| Ok(1.0)).unwrap();
        // three excised δ-disks
        let exact = lat_t - 3.0 * PI * 1e-6;
        assert!((a - exact).abs() < 1e-9, "{a}");
    }

    #[test]
    fn catenoid_total_curvature() {
        let tc = total_curvature(&catenoid(), &QuadSpec::default()).unwrap();
        assert!((tc.value + 4.0 * PI).abs() < 1e-6 * 4.0 * PI, "{tc:?}");
    }
}
