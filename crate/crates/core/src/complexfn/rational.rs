//! Rational functions num/den with root-clustering reduction.

use super::poly::Poly;
use super::C64;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Two roots belong to the same cluster (a numerically split multiple root)
/// when closer than this, relative to their size.
const CLUSTER_RADIUS: f64 = 1e-4;
/// Cluster centroids closer than this are a common factor.
const COMMON_ROOT_TOL: f64 = 1e-9;
/// Pole test: |den(z)| ≤ POLE_TOL Σ|dₖ||z|ᵏ.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalJson", into = "RationalJson")]
pub struct RationalMap {
    num: Poly,
    den: Poly,
}

/// Wire format: coefficient lists of [re, im] pairs, ascending degree.
#[derive(Serialize, Deserialize)]
struct RationalJson {
    numerator: Vec<[f64; 2]>,
    denominator: Vec<[f64; 2]>,
}

impl TryFrom<RationalJson> for RationalMap {
    type Error = Error;
    fn try_from(j: RationalJson) -> Result<Self> {
        let to = |v: &[[f64; 2]]| Poly::new(v.iter().map(|p| C64::new(p[0], p[1])).collect());
        RationalMap::new(to(&j.numerator), to(&j.denominator))
    }
}

impl From<RationalMap> for RationalJson {
    fn from(r: RationalMap) -> Self {
        let to = |p: &Poly| p.coeffs().iter().map(|c| [c.re, c.im]).collect();
        RationalJson {
            numerator: to(&r.num),
            denominator: to(&r.den),
        }
    }
}

impl RationalMap {
    /// Builds and reduces num/den.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("denominator identically zero".into()));
        }
        Ok(RationalMap { num, den }.reduced())
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalMap { num: p, den: Poly::one() }
    }

    pub fn constant(c: C64) -> Self {
        RationalMap::from_poly(Poly::constant(c))
    }

    /// c z^k for any integer k.
    pub fn monomial(c: C64, k: i32) -> Self {
        if k >= 0 {
            RationalMap::from_poly(Poly::monomial(c, k as usize))
        } else {
            RationalMap {
                num: Poly::constant(c),
                den: Poly::monomial(C64::new(1.0, 0.0), (-k) as usize),
            }
        }
    }

    /// z
    pub fn identity() -> Self {
        RationalMap::monomial(C64::new(1.0, 0.0), 1)
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn reduced(self) -> Self {
        let RationalMap { mut num, mut den } = self;
        if num.is_zero() {
            return RationalMap { num, den: Poly::one() };
        }
        // exact z^k factors first
        let k = num.low_zero_count().min(den.low_zero_count());
        if k > 0 {
            num = num.shift_down(k);
            den = den.shift_down(k);
        }
        if num.degree() >= 1 && den.degree() >= 1 {
            let cn = num.root_clusters(CLUSTER_RADIUS);
            let cd = den.root_clusters(CLUSTER_RADIUS);
            let mut cn_left: Vec<(C64, usize)> = cn.clone();
            let mut cd_left: Vec<(C64, usize)> = cd.clone();
            let mut cancelled = false;
            for a in cn_left.iter_mut() {
                for b in cd_left.iter_mut() {
                    if a.1 > 0
                        && b.1 > 0
                        && (a.0 - b.0).norm() <= COMMON_ROOT_TOL * (1.0 + a.0.norm())
                    {
                        let m = a.1.min(b.1);
                        a.1 -= m;
                        b.1 -= m;
                        cancelled = true;
                    }
                }
            }
            if cancelled {
                let expand = |c: &[(C64, usize)]| -> Vec<C64> {
                    c.iter()
                        .flat_map(|(r, m)| std::iter::repeat_n(*r, *m))
                        .collect()
                };
                num = Poly::from_roots(num.leading(), &expand(&cn_left));
                den = Poly::from_roots(den.leading(), &expand(&cd_left));
            }
        }
        // normalize the denominator's leading coefficient to 1
        let l = den.leading();
        if l != C64::new(1.0, 0.0) {
            num = num.scale(C64::new(1.0, 0.0) / l);
            den = den.scale(C64::new(1.0, 0.0) / l);
        }
        RationalMap { num, den }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let n = self.num.eval(z);
        let d = self.den.eval(z);
        // relative cancellation in the denominator marks a pole; an absolute
        // test misfires for large |z|
        if d.norm() <= POLE_TOL * self.den.abs_scale(z) {
            // 0/0 left by rounding in the reduction: evaluate the limit
            if n.norm() <= POLE_TOL * self.num.abs_scale(z) {
                let tn = self.num.taylor_at(z);
                let td = self.den.taylor_at(z);
                let on = self.num.order_at(z, 1e-10);
                let od = self.den.order_at(z, 1e-10);
                if on > od {
                    return Ok(C64::new(0.0, 0.0));
                }
                if on == od {
                    return Ok(tn[on] / td[od]);
                }
            }
            return Err(Error::pole(z));
        }
        Ok(n / d)
    }

    pub fn derivative(&self) -> RationalMap {
        let n = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        RationalMap {
            num: n,
            den: self.den.mul(&self.den),
        }
        .reduced()
    }

    /// Signed order: zero order n > 0, pole order -n.
    pub fn order_at(&self, z0: C64) -> i32 {
        assert!(!self.is_zero(), "order of the zero function");
        self.num.order_at(z0, 1e-10) as i32 - self.den.order_at(z0, 1e-10) as i32
    }

    /// Order at the point at infinity (as a function): deg den − deg num.
    pub fn order_at_infinity(&self) -> i32 {
        self.den.degree() as i32 - self.num.degree() as i32
    }

    pub fn add(&self, o: &RationalMap) -> RationalMap {
        RationalMap {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
        .reduced()
    }

    pub fn sub(&self, o: &RationalMap) -> RationalMap {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, o: &RationalMap) -> RationalMap {
        RationalMap {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
        .reduced()
    }

    pub fn div(&self, o: &RationalMap) -> Result<RationalMap> {
        if o.is_zero() {
            return Err(Error::InvalidInput("division by the zero function".into()));
        }
        Ok(RationalMap {
            num: self.num.mul(&o.den),
            den: self.den.mul(&o.num),
        }
        .reduced())
    }

    pub fn scale(&self, s: C64) -> RationalMap {
        RationalMap {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
        .reduced()
    }

    /// f(q(z)) for a polynomial q.
    pub fn compose_poly(&self, q: &Poly) -> RationalMap {
        RationalMap {
            num: self.num.compose(q),
            den: self.den.compose(q),
        }
        .reduced()
    }

    /// f((aP + b)/(cP + d)) as a rational function of P.
    pub fn compose_mobius(&self, a: C64, b: C64, c: C64, d: C64) -> RationalMap {
        let k = self.num.degree().max(self.den.degree());
        let top = Poly::new(vec![b, a]);
        let bot = Poly::new(vec![d, c]);
        let expand = |q: &Poly| {
            let mut acc = Poly::zero();
            for (j, cj) in q.coeffs().iter().enumerate() {
                acc = acc.add(&top.powi(j).mul(&bot.powi(k - j)).scale(*cj));
            }
            acc
        };
        RationalMap { num: expand(&self.num), den: expand(&self.den) }.reduced()
    }

    /// f(1/w) as a rational function of w.
    pub fn at_inverse(&self) -> RationalMap {
        let dn = self.num.degree();
        let dd = self.den.degree();
        // f(1/w) = w^{dd-dn} rev(num)/rev(den)
        let mut num = self.num.reversed(dn);
        let mut den = self.den.reversed(dd);
        if dd >= dn {
            num = num.mul(&Poly::monomial(C64::new(1.0, 0.0), dd - dn));
        } else {
            den = den.mul(&Poly::monomial(C64::new(1.0, 0.0), dn - dd));
        }
        RationalMap { num, den }.reduced()
    }

    /// Density of the form f(z) dz rewritten in w = 1/z: −f(1/w)/w².
    pub fn form_at_inverse(&self) -> RationalMap {
        self.at_inverse()
            .mul(&RationalMap::monomial(C64::new(-1.0, 0.0), -2))
    }

    /// Complex conjugate coefficients (f̄(z) = conj f(conj z)).
    pub fn conj_coeffs(&self) -> RationalMap {
        let cj = |p: &Poly| Poly::new(p.coeffs().iter().map(|c| c.conj()).collect());
        RationalMap {
            num: cj(&self.num),
            den: cj(&self.den),
        }
    }

    /// Residue at a finite point via the Laurent coefficient of (z−z0)^{-1}.
    pub fn residue_at(&self, z0: C64) -> C64 {
        let ord = self.order_at(z0);
        if ord >= 0 {
            return C64::new(0.0, 0.0);
        }
        let m = (-ord) as usize;
        // (z-z0)^m f is regular; its Taylor coefficient of order m−1 is the residue
        let tn = self.num.taylor_at(z0);
        let td = self.den.taylor_at(z0);
        let od = self.den.order_at(z0, 1e-10);
        let on = self.num.order_at(z0, 1e-10);
        // series division of (tn shifted by on) by (td shifted by od)
        let a: Vec<C64> = tn.iter().skip(on).copied().collect();
        let b: Vec<C64> = td.iter().skip(od).copied().collect();
        let need = m - 1;
        let mut q = vec![C64::new(0.0, 0.0); need + 1];
        for k in 0..=need {
            let mut s = if k < a.len() { a[k] } else { C64::new(0.0, 0.0) };
            for j in 1..=k {
                if j < b.len() {
                    s -= b[j] * q[k - j];
                }
            }
            q[k] = s / b[0];
        }
        // f = (z-z0)^{-m} * (series q), so the residue is q[m-1]
        q[need]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rat(n: &[f64], d: &[f64]) -> RationalMap {
        RationalMap::new(Poly::from_real(n), Poly::from_real(d)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let id = RationalMap::identity();
        assert_eq!(id.eval(c(2.0, 1.0)).unwrap(), c(2.0, 1.0));
        let inv = RationalMap::monomial(c(1.0, 0.0), -1);
        assert!((inv.eval(c(2.0, 0.0)).unwrap() - 0.5).norm() < 1e-15);
        // (1 - z^2)/2 at 3 is (1 - 9)/2 = -4
        let f = rat(&[0.5, 0.0, -0.5], &[1.0]);
        assert!((f.eval(c(3.0, 0.0)).unwrap() - c(-4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pole_hit_reported() {
        let inv = RationalMap::monomial(c(1.0, 0.0), -1);
        assert!(matches!(inv.eval(c(0.0, 0.0)), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn derivative_examples() {
        let z2 = RationalMap::monomial(c(1.0, 0.0), 2);
        let d = z2.derivative();
        assert!((d.eval(c(1.3, 0.2)).unwrap() - c(2.6, 0.4)).norm() < 1e-14);
        let inv = RationalMap::monomial(c(1.0, 0.0), -1);
        let di = inv.derivative();
        let z = c(0.7, -0.4);
        assert!((di.eval(z).unwrap() + 1.0 / (z * z)).norm() < 1e-13);
        // z/(z-1) -> -1/(z-1)^2, checked by central differences
        let f = rat(&[0.0, 1.0], &[-1.0, 1.0]);
        let df = f.derivative();
        for z in [c(2.0, 0.5), c(-1.0, 0.3), c(0.3, 2.0), c(3.0, -1.0), c(-2.0, -2.0)] {
            let h = 1e-5;
            let fd = (f.eval(z + h).unwrap() - f.eval(z - h).unwrap()) / (2.0 * h);
            let ex = df.eval(z).unwrap();
            assert!((fd - ex).norm() / ex.norm() < 1e-6);
            assert!((ex + 1.0 / ((z - 1.0) * (z - 1.0))).norm() < 1e-12);
        }
    }

    #[test]
    fn order_examples() {
        assert_eq!(RationalMap::monomial(c(1.0, 0.0), 3).order_at(c(0.0, 0.0)), 3);
        assert_eq!(RationalMap::monomial(c(1.0, 0.0), -2).order_at(c(0.0, 0.0)), -2);
        let f = rat(&[0.5, 0.0, -0.5], &[1.0]);
        assert_eq!(f.order_at(c(1.0, 0.0)), 1);
    }

    #[test]
    fn reduction_cancels_common_roots() {
        // (z^2 - 1)/(z - 1) = z + 1
        let f = rat(&[-1.0, 0.0, 1.0], &[-1.0, 1.0]);
        assert_eq!(f.denominator().degree(), 0);
        assert!((f.eval(c(1.0, 0.0)).unwrap() - 2.0).norm() < 1e-12);
        // (z-2)^3 / (z-2)^2 with a split triple root
        let n = Poly::from_roots(c(1.0, 0.0), &[c(2.0, 0.0); 3]);
        let d = Poly::from_roots(c(1.0, 0.0), &[c(2.0, 0.0); 2]);
        let g = RationalMap::new(n, d).unwrap();
        assert_eq!(g.denominator().degree(), 0);
        assert_eq!(g.order_at(c(2.0, 0.0)), 1);
    }

    #[test]
    fn inversion_of_forms() {
        // dz on the plane is -dw/w^2 at infinity
        let one = RationalMap::constant(c(1.0, 0.0));
        let f = one.form_at_inverse();
        assert_eq!(f.order_at(c(0.0, 0.0)), -2);
        // dz/z is -dw/w
        let inv = RationalMap::monomial(c(1.0, 0.0), -1);
        let g = inv.form_at_inverse();
        assert_eq!(g.order_at(c(0.0, 0.0)), -1);
        assert!((g.residue_at(c(0.0, 0.0)) + 1.0).norm() < 1e-14);
    }

    #[test]
    fn residues() {
        // 1/(z^2 - 1): residue 1/2 at 1, -1/2 at -1
        let f = rat(&[1.0], &[-1.0, 0.0, 1.0]);
        assert!((f.residue_at(c(1.0, 0.0)) - 0.5).norm() < 1e-12);
        assert!((f.residue_at(c(-1.0, 0.0)) + 0.5).norm() < 1e-12);
        // (1 + z)/z^2: residue 1 at 0
        let g = rat(&[1.0, 1.0], &[0.0, 0.0, 1.0]);
        assert!((g.residue_at(c(0.0, 0.0)) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let f = rat(&[0.5, 0.0, -0.5], &[0.0, 1.0]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("[0.5,0.0]"));
        let g: RationalMap = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }
}
