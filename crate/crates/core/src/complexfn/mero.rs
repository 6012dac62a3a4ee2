//! Meromorphic function handles: rational maps on the sphere, and elliptic
//! functions E(℘) + ℘′·O(℘) on a rectangular torus. Both are closed under
//! the field operations and differentiation.

use super::elliptic::RectLattice;
use super::poly::Poly;
use super::rational::RationalMap;
use super::C64;
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// value = even(℘(z)) + ℘′(z) · odd(℘(z))
#[derive(Debug, Clone)]
pub struct EllipticFn {
    pub lattice: Arc<RectLattice>,
    pub even: RationalMap,
    pub odd: RationalMap,
    /// (even, odd) of u ↦ f(ωᵢ + u) for the three half-periods, built on
    /// first use near a half-period.
    shifted: Arc<OnceLock<Vec<(RationalMap, RationalMap)>>>,
}

fn zero() -> RationalMap {
    RationalMap::constant(C64::new(0.0, 0.0))
}

impl EllipticFn {
    pub fn new(lattice: Arc<RectLattice>, even: RationalMap, odd: RationalMap) -> Self {
        EllipticFn { lattice, even, odd, shifted: Arc::new(OnceLock::new()) }
    }

    pub fn wp(lattice: Arc<RectLattice>) -> Self {
        EllipticFn::new(lattice, RationalMap::identity(), zero())
    }

    pub fn wp_prime(lattice: Arc<RectLattice>) -> Self {
        EllipticFn::new(lattice, zero(), RationalMap::constant(C64::new(1.0, 0.0)))
    }

    pub fn constant(lattice: Arc<RectLattice>, c: C64) -> Self {
        EllipticFn::new(lattice, RationalMap::constant(c), zero())
    }

    /// An even function R(℘).
    pub fn of_wp(lattice: Arc<RectLattice>, r: RationalMap) -> Self {
        EllipticFn::new(lattice, r, zero())
    }

    fn cubic(&self) -> RationalMap {
        let l = &self.lattice;
        RationalMap::from_poly(Poly::new(vec![-l.g3, -l.g2, C64::new(0.0, 0.0), C64::new(4.0, 0.0)]))
    }

    fn second(&self) -> RationalMap {
        let l = &self.lattice;
        RationalMap::from_poly(Poly::new(vec![-l.g2 / 2.0, C64::new(0.0, 0.0), C64::new(6.0, 0.0)]))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let l = &self.lattice;
        let t = l.t;
        // nearest point of the half-lattice
        let hx = (2.0 * z.re).round();
        let hy = (2.0 * z.im / t).round();
        let u = z - C64::new(0.5 * hx, 0.5 * hy * t);
        let which = match ((hx as i64).rem_euclid(2), (hy as i64).rem_euclid(2)) {
            (1, 0) => Some(0),
            (1, 1) => Some(1),
            (0, 1) => Some(2),
            _ => None,
        };
        if let Some(i) = which {
            if u.norm() < 0.2 * t.min(1.0) {
                // ℘ − eᵢ cancels near ωᵢ; evaluate f(ωᵢ + u) through ℘(u)
                let (even, odd) = &self.shifted_parts()[i];
                return Self::combine(even, odd, l, u).map_err(|_| Error::pole(z));
            }
        }
        Self::combine(&self.even, &self.odd, l, z).map_err(|_| Error::pole(z))
    }

    fn combine(even: &RationalMap, odd: &RationalMap, l: &RectLattice, z: C64) -> Result<C64> {
        let (p, dp) = match l.wp_both(z) {
            Ok(v) => v,
            Err(Error::LatticePointHit { .. }) => return Self::at_lattice_point(even, odd),
            Err(e) => return Err(e),
        };
        let mut v = even.eval(p)?;
        if !odd.is_zero() {
            v += dp * odd.eval(p)?;
        }
        Ok(v)
    }

    /// Limit at u = 0, where ℘ ~ u⁻², ℘′ ~ −2u⁻³: regular iff even is finite
    /// at ∞ and odd vanishes there to order ≥ 2.
    fn at_lattice_point(even: &RationalMap, odd: &RationalMap) -> Result<C64> {
        let oe = even.order_at_infinity();
        if oe < 0 || (!odd.is_zero() && odd.order_at_infinity() < 2) {
            return Err(Error::pole(C64::new(0.0, 0.0)));
        }
        if oe > 0 {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(even.numerator().leading() / even.denominator().leading())
    }

    /// ℘(ωᵢ + u) = eᵢ + Aᵢ/(℘(u) − eᵢ), ℘′(ωᵢ + u) = −Aᵢ℘′(u)/(℘(u) − eᵢ)²
    /// with Aᵢ = (eᵢ − eⱼ)(eᵢ − eₖ).
    fn shifted_parts(&self) -> &Vec<(RationalMap, RationalMap)> {
        self.shifted.get_or_init(|| {
            let e = self.lattice.e;
            (0..3)
                .map(|i| {
                    let ei = C64::new(e[i], 0.0);
                    let a = (ei - e[(i + 1) % 3]) * (ei - e[(i + 2) % 3]);
                    let one = C64::new(1.0, 0.0);
                    let even = self.even.compose_mobius(ei, a - ei * ei, one, -ei);
                    let jac = RationalMap::new(
                        Poly::constant(-a),
                        Poly::new(vec![-ei, one]).powi(2),
                    )
                    .expect("nonzero denominator");
                    let odd = self.odd.compose_mobius(ei, a - ei * ei, one, -ei).mul(&jac);
                    (even, odd)
                })
                .collect()
        })
    }

    pub fn derivative(&self) -> EllipticFn {
        let even = self
            .second()
            .mul(&self.odd)
            .add(&self.cubic().mul(&self.odd.derivative()));
        EllipticFn::new(self.lattice.clone(), even, self.even.derivative())
    }

    pub fn add(&self, o: &EllipticFn) -> EllipticFn {
        EllipticFn::new(self.lattice.clone(), self.even.add(&o.even), self.odd.add(&o.odd))
    }

    pub fn scale(&self, s: C64) -> EllipticFn {
        EllipticFn::new(self.lattice.clone(), self.even.scale(s), self.odd.scale(s))
    }

    pub fn mul(&self, o: &EllipticFn) -> EllipticFn {
        let even = self
            .even
            .mul(&o.even)
            .add(&self.cubic().mul(&self.odd).mul(&o.odd));
        let odd = self.even.mul(&o.odd).add(&self.odd.mul(&o.even));
        EllipticFn::new(self.lattice.clone(), even, odd)
    }

    pub fn div(&self, o: &EllipticFn) -> Result<EllipticFn> {
        // multiply through by the conjugate C − ℘′D
        let conj = EllipticFn::new(self.lattice.clone(), o.even.clone(), o.odd.scale(C64::new(-1.0, 0.0)));
        let norm = o.even.mul(&o.even).sub(&self.cubic().mul(&o.odd).mul(&o.odd));
        let top = self.mul(&conj);
        Ok(EllipticFn::new(self.lattice.clone(), top.even.div(&norm)?, top.odd.div(&norm)?))
    }
}

#[derive(Debug, Clone)]
pub enum MeroFn {
    Rational(RationalMap),
    Elliptic(EllipticFn),
}

impl MeroFn {
    pub fn eval(&self, z: C64) -> Result<C64> {
        match self {
            MeroFn::Rational(r) => r.eval(z),
            MeroFn::Elliptic(e) => e.eval(z),
        }
    }

    pub fn derivative(&self) -> MeroFn {
        match self {
            MeroFn::Rational(r) => MeroFn::Rational(r.derivative()),
            MeroFn::Elliptic(e) => MeroFn::Elliptic(e.derivative()),
        }
    }

    pub fn as_rational(&self) -> Option<&RationalMap> {
        match self {
            MeroFn::Rational(r) => Some(r),
            MeroFn::Elliptic(_) => None,
        }
    }

    fn pair(&self, o: &MeroFn) -> Result<(EllipticFn, EllipticFn)> {
        let lift = |f: &MeroFn, lat: &Arc<RectLattice>| -> Result<EllipticFn> {
            match f {
                MeroFn::Elliptic(e) => Ok(e.clone()),
                MeroFn::Rational(r) if r.numerator().degree() == 0 && r.denominator().degree() == 0 => {
                    Ok(EllipticFn::constant(lat.clone(), r.eval(C64::new(0.0, 0.0))?))
                }
                MeroFn::Rational(_) => Err(Error::InvalidInput(
                    "cannot combine a non-constant rational map with an elliptic function".into(),
                )),
            }
        };
        let lat = match (self, o) {
            (MeroFn::Elliptic(e), _) | (_, MeroFn::Elliptic(e)) => e.lattice.clone(),
            _ => unreachable!(),
        };
        Ok((lift(self, &lat)?, lift(o, &lat)?))
    }

    pub fn mul(&self, o: &MeroFn) -> Result<MeroFn> {
        if let (MeroFn::Rational(a), MeroFn::Rational(b)) = (self, o) {
            return Ok(MeroFn::Rational(a.mul(b)));
        }
        let (a, b) = self.pair(o)?;
        Ok(MeroFn::Elliptic(a.mul(&b)))
    }

    pub fn div(&self, o: &MeroFn) -> Result<MeroFn> {
        if let (MeroFn::Rational(a), MeroFn::Rational(b)) = (self, o) {
            return Ok(MeroFn::Rational(a.div(b)?));
        }
        let (a, b) = self.pair(o)?;
        Ok(MeroFn::Elliptic(a.div(&b)?))
    }

    pub fn add(&self, o: &MeroFn) -> Result<MeroFn> {
        if let (MeroFn::Rational(a), MeroFn::Rational(b)) = (self, o) {
            return Ok(MeroFn::Rational(a.add(b)));
        }
        let (a, b) = self.pair(o)?;
        Ok(MeroFn::Elliptic(a.add(&b)))
    }

    pub fn sub(&self, o: &MeroFn) -> Result<MeroFn> {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> MeroFn {
        match self {
            MeroFn::Rational(r) => MeroFn::Rational(r.scale(s)),
            MeroFn::Elliptic(e) => MeroFn::Elliptic(e.scale(s)),
        }
    }

    /// Signed order at z0: exact for rational maps, by the argument
    /// principle on a small circle for elliptic functions.
    pub fn order_at(&self, z0: C64) -> i32 {
        match self {
            MeroFn::Rational(r) => r.order_at(z0),
            MeroFn::Elliptic(e) => {
                let r = 1e-3 * e.lattice.t.min(1.0);
                winding_number(|z| self.eval(z), z0, r, 512).unwrap_or(0)
            }
        }
    }
}

/// Winding number of f(z0 + r e^{iθ}) about 0.
pub fn winding_number(f: impl Fn(C64) -> Result<C64>, z0: C64, r: f64, n: usize) -> Result<i32> {
    let mut total = 0.0;
    let mut prev = f(z0 + C64::from_polar(r, 0.0))?.arg();
    for k in 1..=n {
        let th = 2.0 * PI * k as f64 / n as f64;
        let a = f(z0 + C64::from_polar(r, th))?.arg();
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

/// (1/2πi) ∮ f(z) (z − z0)^k dz over |z − z0| = r, periodic trapezoid rule.
pub fn contour_coefficient(
    f: impl Fn(C64) -> Result<C64>,
    z0: C64,
    r: f64,
    k: i32,
    n: usize,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let th = 2.0 * PI * j as f64 / n as f64;
        let u = C64::from_polar(r, th);
        // dz = i u dθ
        acc += f(z0 + u)? * u.powi(k) * u;
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn half_period_branch_agrees_with_direct_evaluation() {
        let lat = Arc::new(RectLattice::new(1.3).unwrap());
        let p = EllipticFn::wp(lat.clone());
        let dp = EllipticFn::wp_prime(lat.clone());
        let f = dp.div(&p.mul(&p).add(&EllipticFn::constant(lat.clone(), c(1.0, 0.5)))).unwrap();
        for (i, w) in [c(0.5, 0.0), c(0.5, 0.65), c(0.0, 0.65)].into_iter().enumerate() {
            let z = w + c(0.11, -0.07);
            let direct = EllipticFn::combine(&f.even, &f.odd, &lat, z).unwrap();
            let shifted = f.eval(z).unwrap();
            assert!((direct - shifted).norm() < 1e-10 * direct.norm().max(1.0), "{i}: {direct} vs {shifted}");
        }
    }

    #[test]
    fn elliptic_algebra_matches_pointwise_values() {
        let lat = Arc::new(RectLattice::new(1.3).unwrap());
        let p = EllipticFn::wp(lat.clone());
        let dp = EllipticFn::wp_prime(lat.clone());
        let f = p.mul(&dp).add(&EllipticFn::constant(lat.clone(), c(2.0, 0.0)));
        let g = f.div(&dp.add(&p)).unwrap();
        for z in [c(0.21, 0.33), c(0.4, 0.9), c(0.77, 0.12)] {
            let (pv, dv) = lat.wp_both(z).unwrap();
            let expect = (pv * dv + 2.0) / (dv + pv);
            assert!((g.eval(z).unwrap() - expect).norm() < 1e-9 * expect.norm());
        }
    }

    #[test]
    fn elliptic_derivative_matches_finite_differences() {
        let lat = Arc::new(RectLattice::new(1.0).unwrap());
        let f = EllipticFn::wp_prime(lat.clone())
            .div(&EllipticFn::wp(lat.clone()).add(&EllipticFn::constant(lat.clone(), c(3.0, 0.0))))
            .unwrap();
        let df = f.derivative();
        for z in [c(0.2, 0.3), c(0.61, 0.44)] {
            let h = 1e-5;
            let fd = (f.eval(z + h).unwrap() - f.eval(z - h).unwrap()) / (2.0 * h);
            let d = df.eval(z).unwrap();
            assert!((fd - d).norm() / d.norm() < 1e-6);
        }
    }

    #[test]
    fn orders_from_argument_principle() {
        let lat = Arc::new(RectLattice::new(1.0).unwrap());
        let dp = MeroFn::Elliptic(EllipticFn::wp_prime(lat.clone()));
        assert_eq!(dp.order_at(c(0.0, 0.0)), -3);
        assert_eq!(dp.order_at(c(0.5, 0.0)), 1);
        let p = MeroFn::Elliptic(EllipticFn::wp(lat));
        assert_eq!(p.order_at(c(0.0, 0.0)), -2);
        // on the square lattice ℘ has a double zero at (1+i)/2
        assert_eq!(p.order_at(c(0.5, 0.5)), 2);
    }

    #[test]
    fn contour_residue() {
        let f = |z: C64| Ok(C64::new(3.0, 0.0) / z + z);
        let r = contour_coefficient(f, c(0.0, 0.0), 0.5, 0, 64).unwrap();
        assert!((r - 3.0).norm() < 1e-13);
    }
}
