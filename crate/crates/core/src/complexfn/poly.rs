//! Dense complex polynomials in ascending coefficient order.

use super::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<C64>,
}

/// Coefficients below this fraction of the largest one are treated as
/// cancellation noise when trimming the top degree.
const TRIM_REL: f64 = 1e-14;

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while let Some(last) = coeffs.last() {
            if last.norm() <= TRIM_REL * scale || *last == C64::new(0.0, 0.0) {
                coeffs.pop();
            } else {
                break;
            }
        }
        Poly { coeffs }
    }

    pub fn from_real(c: &[f64]) -> Self {
        Poly::new(c.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(c: C64) -> Self {
        Poly::new(vec![c])
    }

    pub fn one() -> Self {
        Poly::constant(C64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    /// c * z^k
    pub fn monomial(c: C64, k: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); k + 1];
        v[k] = c;
        Poly::new(v)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Sum of |c_k| |z|^k, the natural scale for rounding error in `eval`.
    pub fn abs_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * r + c.norm();
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let mut v = vec![C64::new(0.0, 0.0); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in o.coeffs.iter().enumerate() {
            v[i] += c;
        }
        Poly::new(v)
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![C64::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }

    pub fn powi(&self, k: usize) -> Poly {
        let mut r = Poly::one();
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// p(z) with z replaced by another polynomial q.
    pub fn compose(&self, q: &Poly) -> Poly {
        let mut acc = Poly::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(q).add(&Poly::constant(*c));
        }
        acc
    }

    /// Coefficients reversed: z^deg p(1/z).
    pub fn reversed(&self, deg: usize) -> Poly {
        let mut v = vec![C64::new(0.0, 0.0); deg + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            v[deg - k] = *c;
        }
        Poly::new(v)
    }

    /// Number of trailing zero coefficients (an exact factor z^k).
    pub fn low_zero_count(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.norm() == 0.0).count()
    }

    /// Divide out z^k exactly; caller guarantees the low coefficients vanish.
    pub fn shift_down(&self, k: usize) -> Poly {
        Poly::new(self.coeffs[k.min(self.coeffs.len())..].to_vec())
    }

    /// Coefficients of p(z0 + u) in powers of u.
    pub fn taylor_at(&self, z0: C64) -> Vec<C64> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let t = a[j + 1] * z0;
                a[j] += t;
            }
        }
        a
    }

    /// Order of vanishing at z0, with a coefficient counted as zero when it
    /// is below `rel_tol` times the evaluation scale at z0.
    pub fn order_at(&self, z0: C64, rel_tol: f64) -> usize {
        if self.is_zero() {
            return usize::MAX;
        }
        let t = self.taylor_at(z0);
        let scale = self.abs_scale(z0).max(1e-300);
        t.iter().take_while(|c| c.norm() <= rel_tol * scale).count()
    }

    /// All complex roots via Aberth–Ehrlich iteration with Newton polishing.
    pub fn roots(&self) -> Vec<C64> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return vec![];
        }
        let lead = self.leading();
        let monic: Vec<C64> = self.coeffs.iter().map(|c| c / lead).collect();
        let p = Poly { coeffs: monic };
        let dp = p.derivative();
        // Cauchy-type radius for the initial circle.
        let radius = 1.0
            + p.coeffs[..n]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let r0 = radius.min(
            p.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm().powf(1.0 / (n - k) as f64))
                .fold(0.0, f64::max)
                .max(1e-3),
        );
        let mut z: Vec<C64> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                C64::from_polar(r0, th)
            })
            .collect();
        for _ in 0..500 {
            let mut moved = 0.0f64;
            for i in 0..n {
                let pv = p.eval(z[i]);
                let dv = dp.eval(z[i]);
                if pv.norm() == 0.0 {
                    continue;
                }
                let ratio = pv / dv;
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let d = z[i] - z[j];
                        if d.norm() > 0.0 {
                            s += C64::new(1.0, 0.0) / d;
                        }
                    }
                }
                let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
                if w.is_finite() {
                    z[i] -= w;
                    moved = moved.max(w.norm() / (1.0 + z[i].norm()));
                }
            }
            if moved < 1e-15 {
                break;
            }
        }
        for zi in z.iter_mut() {
            for _ in 0..3 {
                let dv = dp.eval(*zi);
                if dv.norm() == 0.0 {
                    break;
                }
                let step = p.eval(*zi) / dv;
                if !step.is_finite() || step.norm() > 1e-6 * (1.0 + zi.norm()) {
                    break;
                }
                *zi -= step;
            }
        }
        z
    }

    /// Roots grouped into clusters (numerically split multiple roots), each
    /// centre polished by Newton's method on the (m-1)-th derivative, where
    /// the m-fold root is simple.
    pub fn root_clusters(&self, radius: f64) -> Vec<(C64, usize)> {
        let roots = self.roots();
        let mut groups: Vec<Vec<C64>> = Vec::new();
        for r in roots {
            let hit = groups.iter().position(|g| {
                let c = g.iter().sum::<C64>() / g.len() as f64;
                (c - r).norm() <= radius * (1.0 + r.norm())
            });
            match hit {
                Some(i) => groups[i].push(r),
                None => groups.push(vec![r]),
            }
        }
        groups
            .into_iter()
            .map(|g| {
                let m = g.len();
                let mut c = g.iter().sum::<C64>() / m as f64;
                if m > 1 {
                    let mut q = self.clone();
                    for _ in 0..m - 1 {
                        q = q.derivative();
                    }
                    let dq = q.derivative();
                    for _ in 0..8 {
                        let d = dq.eval(c);
                        if d.norm() == 0.0 {
                            break;
                        }
                        let step = q.eval(c) / d;
                        if !step.is_finite() || step.norm() > radius * (1.0 + c.norm()) {
                            break;
                        }
                        c -= step;
                    }
                }
                (c, m)
            })
            .collect()
    }

    /// lead * prod (z - r)
    pub fn from_roots(lead: C64, roots: &[C64]) -> Poly {
        let mut p = Poly::constant(lead);
        for r in roots {
            p = p.mul(&Poly::new(vec![-r, C64::new(1.0, 0.0)]));
        }
        p
    }
}
