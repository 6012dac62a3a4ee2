//! Catalog surfaces: plane, catenoid, Enneper's surfaces, and the Costa
//! deformation family on rectangular tori.

use super::{Chart, Puncture, WeierstrassData};
use crate::complexfn::{EllipticFn, MeroFn, Poly, RationalMap, RectLattice, C64};
use crate::error::{Error, Result};
use std::sync::Arc;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// g ≡ 1, dh = dz: the plane x₁ = 0.
pub fn plane() -> WeierstrassData {
    WeierstrassData::new(
        "plane",
        MeroFn::Rational(RationalMap::constant(c(1.0, 0.0))),
        MeroFn::Rational(RationalMap::constant(c(1.0, 0.0))),
        Chart::Plane,
        vec![Puncture::Infinity],
        c(0.0, 0.0),
        [0.0; 3],
    )
    .expect("plane data")
}

/// g = z, dh = dz/z; the waist |z| = 1 is the unit circle in x₃ = 0.
pub fn catenoid() -> WeierstrassData {
    WeierstrassData::new(
        "catenoid",
        MeroFn::Rational(RationalMap::identity()),
        MeroFn::Rational(RationalMap::monomial(c(1.0, 0.0), -1)),
        Chart::Plane,
        vec![Puncture::Finite(c(0.0, 0.0)), Puncture::Infinity],
        c(1.0, 0.0),
        [-1.0, 0.0, 0.0],
    )
    .expect("catenoid data")
}

/// g = z^k, dh = z^k dz.
pub fn enneper(k: u32) -> WeierstrassData {
    assert!(k >= 1);
    let mut wd = WeierstrassData::new(
        &format!("enneper{k}"),
        MeroFn::Rational(RationalMap::monomial(c(1.0, 0.0), k as i32)),
        MeroFn::Rational(RationalMap::monomial(c(1.0, 0.0), k as i32)),
        Chart::Plane,
        vec![Puncture::Infinity],
        c(0.0, 0.0),
        [0.0; 3],
    )
    .expect("enneper data");
    wd.params.push(("k".into(), k as f64));
    wd
}

/// Solved period data of the Costa family member on L(it).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CostaCalibration {
    pub t: f64,
    /// g = a (1 + s℘)/℘′
    pub a: f64,
    /// s = 0 is the planar middle end; s ≠ 0 makes it catenoidal.
    pub s: f64,
    /// max |Re period| over the two lattice cycles after calibration.
    pub period_residual: f64,
}

/// Line integrals used by the period conditions:
/// h(F) = ∫₀¹ F(x + it/4) dx (real) and b(F) = ∫₀ᵗ Re F(1/4 + iy) dy,
/// computed with the periodic trapezoid rule.
fn line_integrals(lat: &RectLattice, f: impl Fn(C64) -> C64) -> Result<(f64, f64)> {
    let n = 512;
    let t = lat.t;
    let mut h = 0.0;
    let mut b = 0.0;
    for k in 0..n {
        let s = k as f64 / n as f64;
        let p1 = lat.wp(c(s, 0.25 * t))?;
        h += f(p1).re / n as f64;
        let p2 = lat.wp(c(0.25, s * t))?;
        b += f(p2).re * t / n as f64;
    }
    Ok((h, b))
}

/// Solve the period problem for g = a(1+s℘)/℘′, dh = (1+s℘)(℘−e₂)/℘′ dz.
///
/// With f = dh/g = (℘−e₂)/a and g dh = a(1+s℘)²/(4(℘−e₁)(℘−e₃)), the
/// horizontal cycle forces a² = H₁/H₂(s) and the vertical one a² = −B₁/B₂(s);
/// eliminating a leaves a quadratic in s.
pub fn costa_calibration(lat: &RectLattice) -> Result<CostaCalibration> {
    let [e1, e2, e3] = lat.e;
    let q = |p: C64| 4.0 * (p - e1) * (p - e3);
    let (h1, b1) = line_integrals(lat, |p| p - e2)?;
    let mut hk = [0.0; 3];
    let mut bk = [0.0; 3];
    for k in 0..3 {
        let (h, b) = line_integrals(lat, |p| p.powi(k as i32) / q(p))?;
        hk[k] = h;
        bk[k] = b;
    }
    let qa = h1 * bk[2] + b1 * hk[2];
    let qb = 2.0 * (h1 * bk[1] + b1 * hk[1]);
    let qc = h1 * bk[0] + b1 * hk[0];
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    let mut candidates = Vec::new();
    if qc.abs() < 1e-13 * scale {
        candidates.push(0.0);
    }
    if qa.abs() < 1e-14 * scale {
        candidates.push(-qc / qb);
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let qq = -0.5 * (qb + qb.signum() * sq);
            candidates.push(qq / qa);
            if qq != 0.0 {
                candidates.push(qc / qq);
            }
        }
    }
    let h2 = |s: f64| hk[0] + 2.0 * s * hk[1] + s * s * hk[2];
    let best = candidates
        .into_iter()
        .filter(|s| s.is_finite() && h1 / h2(*s) > 0.0)
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .ok_or_else(|| Error::NonConvergent {
            what: format!("Costa period problem at t = {}", lat.t),
            residual: qc.abs(),
            value: 0.0,
        })?;
    let s = if best.abs() < 1e-12 { 0.0 } else { best };
    let a = (h1 / h2(s)).sqrt();
    let b2 = bk[0] + 2.0 * s * bk[1] + s * s * bk[2];
    let residual = (0.5 * (h1 / a - a * h2(s))).abs().max((0.5 * (b1 / a + a * b2)).abs());
    Ok(CostaCalibration { t: lat.t, a, s, period_residual: residual })
}

/// Costa (t = 1) and its deformations on C / L(it); ends at 0, 1/2, it/2.
pub fn costa(t: f64) -> Result<WeierstrassData> {
    let lat = Arc::new(RectLattice::new(t)?);
    let cal = costa_calibration(&lat)?;
    let [e1, e2, e3] = lat.e;
    let one_plus_s = Poly::new(vec![c(1.0, 0.0), c(cal.s, 0.0)]);
    let roots = |r: &[f64]| Poly::from_roots(c(4.0, 0.0), &r.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
    // g = ℘′ · a(1+s℘)/(4(℘−e1)(℘−e2)(℘−e3))
    let g_odd = RationalMap::new(one_plus_s.scale(c(cal.a, 0.0)), roots(&[e1, e2, e3]))?;
    // dh = ℘′ · (1+s℘)/(4(℘−e1)(℘−e3))
    let dh_odd = RationalMap::new(one_plus_s, roots(&[e1, e3]))?;
    let zero = RationalMap::constant(c(0.0, 0.0));
    let g = EllipticFn::new(lat.clone(), zero.clone(), g_odd);
    let dh = EllipticFn::new(lat.clone(), zero, dh_odd);
    let mut wd = WeierstrassData::new(
        &format!("costa(t={t})"),
        MeroFn::Elliptic(g),
        MeroFn::Elliptic(dh),
        Chart::Torus { t },
        vec![
            Puncture::Finite(c(0.0, 0.0)),
            Puncture::Finite(c(0.5, 0.0)),
            Puncture::Finite(c(0.0, 0.5 * t)),
        ],
        c(0.5, 0.5 * t),
        [0.0; 3],
    )?;
    wd.params = vec![
        ("t".into(), t),
        ("a".into(), cal.a),
        ("s".into(), cal.s),
        ("period_residual".into(), cal.period_residual),
    ];
    Ok(wd)
}

/// A torus-chart surface carries its lattice inside the elliptic handles.
pub fn lattice_of(wd: &WeierstrassData) -> Option<Arc<RectLattice>> {
    match &wd.gauss_map {
        MeroFn::Elliptic(e) => Some(e.lattice.clone()),
        MeroFn::Rational(_) => None,
    }
}

/// Rational data from explicit coefficients (ascending, complex pairs).
pub fn from_rational(
    name: &str,
    g: RationalMap,
    dh: RationalMap,
    punctures: Vec<Puncture>,
    basepoint: C64,
) -> Result<WeierstrassData> {
    WeierstrassData::new(
        name,
        MeroFn::Rational(g),
        MeroFn::Rational(dh),
        Chart::Plane,
        punctures,
        basepoint,
        [0.0; 3],
    )
}
