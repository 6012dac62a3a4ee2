//! The Weierstrass engine. A surface is a Gauss map g and a height
//! differential dh on a punctured chart; the immersion is
//! X = Re ∫ (½(1/g − g) dh, (i/2)(1/g + g) dh, dh).

pub mod catalog;
pub mod ends;
pub mod quadrature;

use crate::complexfn::{MeroFn, C64};
use crate::error::{Error, Result};
use crate::quad::{adaptive_gk, gauss_legendre_on};
use serde::{Deserialize, Serialize};

pub use catalog::{catenoid, costa, enneper, from_rational, plane};
pub use ends::{curvature_decay, end_analysis, normal_gradient_bound_check, CurvatureDecay, EndData, NormalGradientReport};
pub use quadrature::{jorge_meeks_total_curvature, total_curvature, ChartQuadrature, QuadSpec, TotalCurvature};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    /// The Riemann sphere with finitely many punctures (possibly ∞).
    Plane,
    /// C / L(it).
    Torus { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Puncture {
    Finite(C64),
    Infinity,
}

impl std::fmt::Display for Puncture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Puncture::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            Puncture::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeierstrassData {
    pub name: String,
    pub gauss_map: MeroFn,
    pub dh_density: MeroFn,
    pub chart: Chart,
    pub punctures: Vec<Puncture>,
    pub basepoint: C64,
    /// X at the basepoint; places the surface in its customary position.
    pub base_value: Vec3,
    /// Catalog parameters echoed into reports.
    pub params: Vec<(String, f64)>,
    phi: [MeroFn; 3],
    gauss_inv: MeroFn,
    dg: MeroFn,
    dg_inv: MeroFn,
}

/// Everything geometric at one chart point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfacePoint {
    pub z: C64,
    #[serde(rename = "X")]
    pub x: Vec3,
    #[serde(rename = "N")]
    pub n: Vec3,
    pub lambda: f64,
    pub kappa: f64,
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Stereographic normal of a Gauss map value, stable for large |g|.
pub fn normal_from_gauss(g: C64) -> Vec3 {
    let r2 = g.norm_sqr();
    if r2 <= 1.0 {
        [2.0 * g.re / (r2 + 1.0), 2.0 * g.im / (r2 + 1.0), (r2 - 1.0) / (r2 + 1.0)]
    } else {
        let h = 1.0 / g;
        let s2 = h.norm_sqr();
        [2.0 * h.re / (1.0 + s2), -2.0 * h.im / (1.0 + s2), (1.0 - s2) / (1.0 + s2)]
    }
}

impl WeierstrassData {
    pub fn new(
        name: &str,
        gauss_map: MeroFn,
        dh_density: MeroFn,
        chart: Chart,
        punctures: Vec<Puncture>,
        basepoint: C64,
        base_value: Vec3,
    ) -> Result<Self> {
        let one = match &gauss_map {
            MeroFn::Elliptic(e) => MeroFn::Elliptic(crate::complexfn::EllipticFn::constant(
                e.lattice.clone(),
                C64::new(1.0, 0.0),
            )),
            MeroFn::Rational(_) => MeroFn::Rational(crate::complexfn::RationalMap::constant(
                C64::new(1.0, 0.0),
            )),
        };
        let gauss_inv = one.div(&gauss_map)?;
        let f = dh_density.mul(&gauss_inv)?;
        let gdh = gauss_map.mul(&dh_density)?;
        let phi1 = f.sub(&gdh)?.scale(C64::new(0.5, 0.0));
        let phi2 = f.add(&gdh)?.scale(C64::new(0.0, 0.5));
        let phi3 = dh_density.clone();
        let dg = gauss_map.derivative();
        let dg_inv = gauss_inv.derivative();
        Ok(WeierstrassData {
            name: name.to_string(),
            gauss_map,
            dh_density,
            chart,
            punctures,
            basepoint,
            base_value,
            params: vec![],
            phi: [phi1, phi2, phi3],
            gauss_inv,
            dg,
            dg_inv,
        })
    }

    pub fn phi_functions(&self) -> &[MeroFn; 3] {
        &self.phi
    }

    pub fn lattice_t(&self) -> Option<f64> {
        match self.chart {
            Chart::Torus { t } => Some(t),
            Chart::Plane => None,
        }
    }

    /// Finite puncture representatives.
    pub fn finite_punctures(&self) -> Vec<C64> {
        self.punctures
            .iter()
            .filter_map(|p| match p {
                Puncture::Finite(z) => Some(*z),
                Puncture::Infinity => None,
            })
            .collect()
    }

    pub fn has_infinity(&self) -> bool {
        self.punctures.contains(&Puncture::Infinity)
    }

    /// Chart distance from z to the nearest finite puncture (or lattice image).
    pub fn puncture_distance(&self, z: C64) -> f64 {
        let mut best = f64::INFINITY;
        for p in self.finite_punctures() {
            let d = match self.chart {
                Chart::Plane => (z - p).norm(),
                Chart::Torus { t } => {
                    let w = z - p;
                    let m = w.re.round();
                    let n = (w.im / t).round();
                    C64::new(w.re - m, w.im - n * t).norm()
                }
            };
            best = best.min(d);
        }
        best
    }

    pub fn phi(&self, z: C64) -> Result<[C64; 3]> {
        Ok([self.phi[0].eval(z)?, self.phi[1].eval(z)?, self.phi[2].eval(z)?])
    }

    /// λ from |φ|² = 2λ², which stays regular where g = 0 or ∞.
    pub fn lambda(&self, z: C64) -> Result<f64> {
        let p = self.phi(z)?;
        Ok(((p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr()) / 2.0).sqrt())
    }

    /// κλ² = −4|g′|²/(1+|g|²)², evaluated through 1/g where |g| > 1.
    pub fn kappa_lambda2(&self, z: C64) -> Result<f64> {
        match self.gauss_map.eval(z) {
            Ok(g) if g.norm() <= 1.0 => {
                let d = self.dg.eval(z)?;
                Ok(-4.0 * d.norm_sqr() / (1.0 + g.norm_sqr()).powi(2))
            }
            _ => {
                let h = self.gauss_inv.eval(z)?;
                let d = self.dg_inv.eval(z)?;
                Ok(-4.0 * d.norm_sqr() / (1.0 + h.norm_sqr()).powi(2))
            }
        }
    }

    pub fn unit_normal(&self, z: C64) -> Result<Vec3> {
        match self.gauss_map.eval(z) {
            Ok(g) if g.norm() <= 1.0 => Ok(normal_from_gauss(g)),
            _ => {
                let h = self.gauss_inv.eval(z)?;
                let s2 = h.norm_sqr();
                Ok([2.0 * h.re / (1.0 + s2), -2.0 * h.im / (1.0 + s2), (1.0 - s2) / (1.0 + s2)])
            }
        }
    }

    pub fn gauss_curvature(&self, z: C64) -> Result<f64> {
        let l = self.lambda(z)?;
        Ok(self.kappa_lambda2(z)? / (l * l))
    }

    /// κ from the closed form −16/(|g|+|g|⁻¹)⁴ |(dg/g)/dh|².
    pub fn gauss_curvature_closed_form(&self, z: C64) -> Result<f64> {
        let g = self.gauss_map.eval(z)?;
        let dg = self.dg.eval(z)?;
        let dh = self.dh_density.eval(z)?;
        let a = g.norm() + 1.0 / g.norm();
        Ok(-16.0 / a.powi(4) * ((dg / g) / dh).norm_sqr())
    }

    /// Re ∫ φ along the straight segment a → b.
    pub fn segment_integral(&self, a: C64, b: C64) -> Result<Vec3> {
        let d = b - a;
        if d.norm() == 0.0 {
            return Ok([0.0; 3]);
        }
        let failed = std::cell::Cell::new(None);
        let r = adaptive_gk(
            |s| {
                let z = a + d * s;
                match self.phi(z) {
                    Ok(p) => [(p[0] * d).re, (p[1] * d).re, (p[2] * d).re],
                    Err(e) => {
                        failed.set(Some(e));
                        [0.0; 3]
                    }
                }
            },
            0.0,
            1.0,
            1e-10,
            1e-13,
            4000,
        );
        if let Some(e) = failed.take() {
            return Err(e);
        }
        Ok(r.value)
    }

    /// Fixed Gauss–Legendre rule on a short segment (mesh edges).
    pub fn short_segment_integral(&self, a: C64, b: C64, nodes: &[(f64, f64)]) -> Result<Vec3> {
        let d = b - a;
        let mut acc = [0.0; 3];
        for &(s, w) in nodes {
            let p = self.phi(a + d * s)?;
            for i in 0..3 {
                acc[i] += w * (p[i] * d).re;
            }
        }
        Ok(acc)
    }

    /// Polyline from the basepoint to z that keeps a safe distance from
    /// every puncture.
    pub fn path_to(&self, z: C64) -> Vec<C64> {
        let mut pts = vec![self.basepoint];
        let mut cur = self.basepoint;
        // detour around each puncture image that comes too close to the chord
        for _ in 0..4 {
            match self.closest_obstruction(cur, z) {
                Some(w) => {
                    pts.push(w);
                    cur = w;
                }
                None => break,
            }
        }
        pts.push(z);
        pts
    }

    fn puncture_images_near(&self, a: C64, b: C64) -> Vec<C64> {
        let mut out = Vec::new();
        for p in self.finite_punctures() {
            match self.chart {
                Chart::Plane => out.push(p),
                Chart::Torus { t } => {
                    let lo_x = a.re.min(b.re).floor() - 1.0;
                    let hi_x = a.re.max(b.re).ceil() + 1.0;
                    let lo_y = (a.im.min(b.im) / t).floor() - 1.0;
                    let hi_y = (a.im.max(b.im) / t).ceil() + 1.0;
                    let mut m = lo_x;
                    while m <= hi_x {
                        let mut n = lo_y;
                        while n <= hi_y {
                            out.push(p + C64::new(m, n * t));
                            n += 1.0;
                        }
                        m += 1.0;
                    }
                }
            }
        }
        out
    }

    fn closest_obstruction(&self, a: C64, b: C64) -> Option<C64> {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return None;
        }
        let mut worst: Option<(f64, C64, f64)> = None;
        for p in self.puncture_images_near(a, b) {
            let s = ((p - a) * d.conj()).re / (len * len);
            if s <= 0.0 || s >= 1.0 {
                continue;
            }
            let foot = a + d * s;
            let dist = (p - foot).norm();
            let end_dist = (p - b).norm().min((p - a).norm());
            // only a chord passing by a puncture, not ending near it, needs a detour
            if dist < 0.25 * end_dist.min(self.feature_scale()) && worst.is_none_or(|w| dist < w.0) {
                worst = Some((dist, p, s));
            }
        }
        worst.map(|(_, p, _)| {
            let nrm = C64::new(-d.im, d.re) / len;
            let r = 0.5 * self.feature_scale();
            // pass on the side of the chord the puncture is not on
            let side = if ((p - a) * nrm.conj()).re > 0.0 { -1.0 } else { 1.0 };
            p + nrm * (side * r)
        })
    }

    /// A length scale on which the chart has no features.
    pub fn feature_scale(&self) -> f64 {
        let fp = self.finite_punctures();
        let mut s: f64 = match self.chart {
            Chart::Torus { t } => 0.5 * t.min(1.0),
            Chart::Plane => 1.0,
        };
        for (i, a) in fp.iter().enumerate() {
            for b in fp.iter().skip(i + 1) {
                s = s.min((a - b).norm());
            }
        }
        s
    }

    pub fn path_integral(&self, path: &[C64]) -> Result<Vec3> {
        let mut acc = [0.0; 3];
        for w in path.windows(2) {
            let s = self.segment_integral(w[0], w[1])?;
            for i in 0..3 {
                acc[i] += s[i];
            }
        }
        Ok(acc)
    }

    pub fn immerse(&self, z: C64) -> Result<Vec3> {
        let path = self.path_to(z);
        let v = self.path_integral(&path)?;
        Ok([
            self.base_value[0] + v[0],
            self.base_value[1] + v[1],
            self.base_value[2] + v[2],
        ])
    }

    /// Immersion along a second, homotopically distinct path (looping once
    /// around the puncture nearest the chord); errors with PeriodViolation
    /// when the two values disagree.
    pub fn immerse_checked(&self, z: C64) -> Result<Vec3> {
        let x = self.immerse(z)?;
        let fp = self.finite_punctures();
        if fp.is_empty() && self.chart == Chart::Plane {
            return Ok(x);
        }
        let y = self.immerse_via_loop(z)?;
        let gap = (0..3).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max);
        if gap > 1e-6 {
            return Err(Error::PeriodViolation { gap });
        }
        Ok(x)
    }

    fn immerse_via_loop(&self, z: C64) -> Result<Vec3> {
        let base = self.path_integral(&self.path_to(z))?;
        let mut extra = [0.0; 3];
        match self.chart {
            Chart::Torus { t } => {
                // both lattice cycles through z
                let cycles = [C64::new(1.0, 0.0), C64::new(0.0, t)];
                for w in cycles {
                    let v = self.cycle_integral(z, w)?;
                    for i in 0..3 {
                        extra[i] += v[i];
                    }
                }
            }
            Chart::Plane => {
                let p = self
                    .finite_punctures()
                    .into_iter()
                    .min_by(|a, b| (a - z).norm().partial_cmp(&(b - z).norm()).unwrap())
                    .unwrap();
                let v = self.loop_integral(p, 0.5 * self.feature_scale())?;
                extra = v;
            }
        }
        Ok([
            self.base_value[0] + base[0] + extra[0],
            self.base_value[1] + base[1] + extra[1],
            self.base_value[2] + base[2] + extra[2],
        ])
    }

    /// Re ∮ φ over the circle of radius r about p (trapezoid, exponentially
    /// accurate for the periodic integrand).
    pub fn loop_integral(&self, p: C64, r: f64) -> Result<Vec3> {
        let n = 256;
        let mut acc = [0.0; 3];
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let u = C64::from_polar(r, th);
            let ph = self.phi(p + u)?;
            let dz = C64::new(0.0, 1.0) * u * (2.0 * std::f64::consts::PI / n as f64);
            for i in 0..3 {
                acc[i] += (ph[i] * dz).re;
            }
        }
        Ok(acc)
    }

    /// Re ∫ φ over the straight lattice cycle from z to z + w, split into
    /// pieces that avoid punctures.
    pub fn cycle_integral(&self, z: C64, w: C64) -> Result<Vec3> {
        let n = 64;
        let mut acc = [0.0; 3];
        let mut prev = z;
        for k in 1..=n {
            let next = z + w * (k as f64 / n as f64);
            let path = {
                let mut pts = vec![prev];
                if let Some(d) = self.closest_obstruction(prev, next) {
                    pts.push(d);
                }
                pts.push(next);
                pts
            };
            let v = self.path_integral(&path)?;
            for i in 0..3 {
                acc[i] += v[i];
            }
            prev = next;
        }
        Ok(acc)
    }

    /// Immersion values along a polyline, accumulated edge by edge.
    pub fn immerse_along(&self, points: &[C64]) -> Result<Vec<Vec3>> {
        if points.is_empty() {
            return Ok(vec![]);
        }
        let nodes = gauss_legendre_on(8, 0.0, 1.0);
        let mut out = Vec::with_capacity(points.len());
        let mut x = self.immerse(points[0])?;
        out.push(x);
        for w in points.windows(2) {
            let d = self.short_segment_integral(w[0], w[1], &nodes)?;
            for i in 0..3 {
                x[i] += d[i];
            }
            out.push(x);
        }
        Ok(out)
    }

    pub fn surface_point(&self, z: C64) -> Result<SurfacePoint> {
        let lambda = self.lambda(z)?;
        Ok(SurfacePoint {
            z,
            x: self.immerse(z)?,
            n: self.unit_normal(z)?,
            lambda,
            kappa: self.kappa_lambda2(z)? / (lambda * lambda),
        })
    }

    /// Residue of each φ-component at a finite puncture.
    pub fn residues_at(&self, p: C64) -> Result<[C64; 3]> {
        let r = 0.25 * self.feature_scale();
        let mut out = [C64::new(0.0, 0.0); 3];
        for (i, f) in self.phi.iter().enumerate() {
            out[i] = crate::complexfn::mero::contour_coefficient(|z| f.eval(z), p, r, 0, 512)?;
        }
        Ok(out)
    }
}

pub fn phi_components(wd: &WeierstrassData, z: C64) -> Result<[C64; 3]> {
    wd.phi(z)
}

pub fn immerse(wd: &WeierstrassData, z: C64) -> Result<Vec3> {
    wd.immerse_checked(z)
}

pub fn conformal_factor(wd: &WeierstrassData, z: C64) -> Result<f64> {
    wd.lambda(z)
}

pub fn gauss_curvature(wd: &WeierstrassData, z: C64) -> Result<f64> {
    wd.gauss_curvature(z)
}

pub fn unit_normal(wd: &WeierstrassData, z: C64) -> Result<Vec3> {
    wd.unit_normal(z)
}

/// CSV rows (z.re, z.im, X1, X2, X3, lambda, kappa).
pub fn dump_csv(points: &[SurfacePoint]) -> String {
    let mut s = String::from("z_re,z_im,X1,X2,X3,lambda,kappa\n");
    for p in points {
        s.push_str(&format!(
            "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
            p.z.re, p.z.im, p.x[0], p.x[1], p.x[2], p.lambda, p.kappa
        ));
    }
    s
}
