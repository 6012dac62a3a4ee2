//! End data: multiplicity from pole orders, the leading Laurent coefficient,
//! the limit normal, and the winding cross-check of the blown-down end.

use super::{dot, norm, normal_from_gauss, Puncture, Vec3, WeierstrassData};
use crate::complexfn::mero::{contour_coefficient, winding_number};
use crate::complexfn::{MeroFn, C64};
use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct EndData {
    pub puncture: Puncture,
    pub multiplicity: u32,
    pub spin_coefficient: C64,
    pub normal_limit: Vec3,
    /// Pole orders of (φ₁, φ₂, φ₃) in the local coordinate (0 when regular
    /// or identically zero).
    pub pole_orders: [i32; 3],
    pub winding: i32,
    /// Order of g (or 1/g) at the puncture, the n + 1 of the curvature decay.
    pub gauss_order: u32,
}

/// Local coordinate u at the puncture: z = p + u, or z = 1/u at ∞.
fn to_chart(p: &Puncture, u: C64) -> C64 {
    match p {
        Puncture::Finite(z0) => z0 + u,
        Puncture::Infinity => 1.0 / u,
    }
}

/// Density of φᵢ in the local coordinate.
fn local_phi(wd: &WeierstrassData, p: &Puncture, i: usize, u: C64) -> Result<C64> {
    let z = to_chart(p, u);
    let v = wd.phi_functions()[i].eval(z)?;
    Ok(match p {
        Puncture::Finite(_) => v,
        Puncture::Infinity => -v / (u * u),
    })
}

fn local_radius(wd: &WeierstrassData, p: &Puncture) -> f64 {
    match p {
        Puncture::Finite(_) => 0.05 * wd.feature_scale(),
        Puncture::Infinity => {
            let m = wd
                .finite_punctures()
                .iter()
                .map(|z| z.norm())
                .fold(1.0, f64::max);
            0.05 / m
        }
    }
}

fn is_identically_zero(f: &MeroFn) -> bool {
    matches!(f, MeroFn::Rational(r) if r.is_zero())
}

fn pole_order(wd: &WeierstrassData, p: &Puncture, i: usize) -> i32 {
    let f = &wd.phi_functions()[i];
    if is_identically_zero(f) {
        return 0;
    }
    match (f, p) {
        (MeroFn::Rational(r), Puncture::Finite(z0)) => (-r.order_at(*z0)).max(0),
        (MeroFn::Rational(r), Puncture::Infinity) => (-r.form_at_inverse().order_at(C64::new(0.0, 0.0))).max(0),
        (MeroFn::Elliptic(_), _) => {
            let r = 0.02 * local_radius(wd, p);
            let w = winding_number(|u| local_phi(wd, p, i, u), C64::new(0.0, 0.0), r, 512).unwrap_or(0);
            (-w).max(0)
        }
    }
}

fn gauss_order(wd: &WeierstrassData, p: &Puncture) -> i32 {
    match (&wd.gauss_map, p) {
        (MeroFn::Rational(r), Puncture::Finite(z0)) => r.order_at(*z0),
        (MeroFn::Rational(r), Puncture::Infinity) => r.at_inverse().order_at(C64::new(0.0, 0.0)),
        (MeroFn::Elliptic(_), _) => {
            let r = 0.02 * local_radius(wd, p);
            winding_number(|u| wd.gauss_map.eval(to_chart(p, u)), C64::new(0.0, 0.0), r, 512).unwrap_or(0)
        }
    }
}

fn normal_limit(wd: &WeierstrassData, p: &Puncture) -> Result<Vec3> {
    let ord = gauss_order(wd, p);
    if ord > 0 {
        return Ok([0.0, 0.0, -1.0]);
    }
    if ord < 0 {
        return Ok([0.0, 0.0, 1.0]);
    }
    let g = match (&wd.gauss_map, p) {
        (MeroFn::Rational(r), Puncture::Infinity) => r.at_inverse().eval(C64::new(0.0, 0.0))?,
        (f, _) => f.eval(to_chart(p, C64::new(0.0, 0.0)))?,
    };
    Ok(normal_from_gauss(g))
}

fn orthonormal_complement(n: &Vec3) -> (Vec3, Vec3) {
    let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&a, n);
    let mut e1 = [a[0] - d * n[0], a[1] - d * n[1], a[2] - d * n[2]];
    let l = norm(&e1);
    for v in e1.iter_mut() {
        *v /= l;
    }
    let e2 = super::cross(n, &e1);
    (e1, e2)
}

/// Winding of the projected curve X(p + εe^{iθ}) about the limit normal.
fn end_winding(wd: &WeierstrassData, p: &Puncture, n: &Vec3) -> Result<i32> {
    let eps = 0.02 * local_radius(wd, p);
    let m = 720;
    let pts: Vec<C64> = (0..=m)
        .map(|k| to_chart(p, C64::from_polar(eps, 2.0 * PI * k as f64 / m as f64)))
        .collect();
    let xs = wd.immerse_along(&pts)?;
    let (e1, e2) = orthonormal_complement(n);
    let mut total = 0.0;
    let ang = |x: &Vec3| dot(x, &e2).atan2(dot(x, &e1));
    let mut prev = ang(&xs[0]);
    for x in xs.iter().skip(1) {
        let a = ang(x);
        let mut d = a - prev;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = a;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

pub fn end_analysis(wd: &WeierstrassData, puncture: &Puncture) -> Result<EndData> {
    if !wd.punctures.contains(puncture) {
        return Err(Error::InvalidInput(format!("{puncture} is not a puncture")));
    }
    let orders = [0, 1, 2].map(|i| pole_order(wd, puncture, i));
    let top = *orders.iter().max().unwrap();
    if top < 2 {
        return Err(Error::InvalidInput(format!(
            "puncture {puncture}: pole orders {orders:?} do not describe a complete end"
        )));
    }
    let d = top - 1;
    let lead = (0..3).find(|&i| orders[i] == top).unwrap();
    let r = local_radius(wd, puncture);
    let spin = contour_coefficient(|u| local_phi(wd, puncture, lead, u), C64::new(0.0, 0.0), r, d, 1024)?;
    let n = normal_limit(wd, puncture)?;
    let gauss_order = gauss_order(wd, puncture).unsigned_abs();
    let winding = end_winding(wd, puncture, &n)?;
    if winding.abs() != d {
        return Err(Error::InconsistentMultiplicity {
            puncture: puncture.to_string(),
            algebraic: d,
            winding,
        });
    }
    Ok(EndData {
        puncture: *puncture,
        multiplicity: d as u32,
        spin_coefficient: spin,
        normal_limit: n,
        pole_orders: orders,
        winding,
        gauss_order,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalGradientReport {
    pub puncture: Puncture,
    pub multiplicity: u32,
    /// (|X|, |N·X|/|X|) along the sampled ray
    pub samples: Vec<(f64, f64)>,
    /// Fitted decay exponent; None when N·X vanishes identically.
    pub exponent: Option<f64>,
    pub required: f64,
    pub pass: bool,
}

pub fn normal_gradient_bound_check(wd: &WeierstrassData, end: &EndData) -> Result<NormalGradientReport> {
    let r = local_radius(wd, &end.puncture);
    let theta0: f64 = 0.37;
    let mut samples = Vec::new();
    for k in 0..7 {
        let eps = r * 10f64.powi(-(k + 1));
        let z = to_chart(&end.puncture, C64::from_polar(eps, theta0));
        let x = wd.immerse(z)?;
        let nrm = wd.unit_normal(z)?;
        let xn = norm(&x);
        samples.push((xn, dot(&nrm, &x).abs() / xn));
    }
    let required = 1.0 / end.multiplicity as f64 - 0.1;
    if samples.iter().all(|s| s.1 < 1e-13) {
        return Ok(NormalGradientReport {
            puncture: end.puncture,
            multiplicity: end.multiplicity,
            samples,
            exponent: None,
            required,
            pass: true,
        });
    }
    // least squares on the deepest four samples
    let tail = &samples[samples.len() - 4..];
    let xs: Vec<f64> = tail.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.1.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = -sxy / sxx;
    Ok(NormalGradientReport {
        puncture: end.puncture,
        multiplicity: end.multiplicity,
        samples,
        exponent: Some(exponent),
        required,
        pass: exponent >= required,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureDecay {
    pub puncture: Puncture,
    /// slope of log|κ| against log|X|
    pub fitted: f64,
    /// −2 − 2(n+1)/d
    pub predicted: f64,
}

/// Fits the decay of κ against |X| along a ray into the end.
pub fn curvature_decay(wd: &WeierstrassData, end: &EndData) -> Result<CurvatureDecay> {
    let r = local_radius(wd, &end.puncture);
    let mut pts = Vec::new();
    for k in 2..6 {
        let z = to_chart(&end.puncture, C64::from_polar(r * 10f64.powi(-k), 0.61));
        let x = norm(&wd.immerse(z)?);
        let kappa = wd.gauss_curvature(z)?.abs();
        pts.push((x.ln(), kappa.ln()));
    }
    let tail = &pts[1..];
    let nf = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(CurvatureDecay {
        puncture: end.puncture,
        fitted: sxy / sxx,
        predicted: -2.0 - 2.0 * end.gauss_order as f64 / end.multiplicity as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::super::catalog::*;
    use super::*;

    #[test]
    fn catalog_multiplicities() {
        let cat = catenoid();
        for p in cat.punctures.clone() {
            let e = end_analysis(&cat, &p).unwrap();
            assert_eq!(e.multiplicity, 1);
        }
        for k in 1..=3 {
            let en = enneper(k);
            let e = end_analysis(&en, &Puncture::Infinity).unwrap();
            assert_eq!(e.multiplicity, 2 * k + 1);
            assert!((norm(&e.normal_limit) - 1.0).abs() < 1e-10);
        }
        let pl = plane();
        let e = end_analysis(&pl, &Puncture::Infinity).unwrap();
        assert_eq!(e.multiplicity, 1);
    }

    #[test]
    fn catenoid_curvature_decays_like_the_fourth_power() {
        let cat = catenoid();
        let e = end_analysis(&cat, &Puncture::Finite(C64::new(0.0, 0.0))).unwrap();
        let f = curvature_decay(&cat, &e).unwrap();
        assert_eq!(f.predicted, -4.0);
        assert!((f.fitted / f.predicted - 1.0).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn catenoid_normal_gradient_decay() {
        let cat = catenoid();
        let e = end_analysis(&cat, &Puncture::Finite(C64::new(0.0, 0.0))).unwrap();
        let r = normal_gradient_bound_check(&cat, &e).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.exponent.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn plane_normal_is_orthogonal_to_position() {
        let pl = plane();
        let e = end_analysis(&pl, &Puncture::Infinity).unwrap();
        let r = normal_gradient_bound_check(&pl, &e).unwrap();
        assert!(r.exponent.is_none() && r.pass);
    }

    #[test]
    fn enneper_normal_gradient_decay() {
        let en = enneper(1);
        let e = end_analysis(&en, &Puncture::Infinity).unwrap();
        let r = normal_gradient_bound_check(&en, &e).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
