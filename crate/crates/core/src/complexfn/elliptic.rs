//! Weierstrass ℘ on the rectangular lattice L(it) = {m + i n t}.
//!
//! The sum over m is done in closed form row by row,
//! Σ_m (u − m)^{-2} = π² / sin²(πu), and the rows n decay like e^{-2π|n|t},
//! so a modest row cutoff reaches machine precision.

use super::C64;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectLattice {
    pub t: f64,
    pub truncation_order: usize,
    pub g2: C64,
    pub g3: C64,
    /// ℘(1/2), ℘((1+it)/2), ℘(it/2); real, e1 > e2 > e3.
    pub e: [f64; 3],
    constant: f64,
}

fn i_unit() -> C64 {
    C64::new(0.0, 1.0)
}

/// Row sums S(u) = Σ_m (u−m)^{-2} and S'(u).
fn row_sum(u: C64) -> (C64, C64) {
    if u.im.abs() < 1.0 {
        let s = (u * PI).sin();
        let c = (u * PI).cos();
        let s2 = s * s;
        (PI * PI / s2, -2.0 * PI.powi(3) * c / (s2 * s))
    } else {
        // q-expansion branch, |q| < 1
        let (q, sign) = if u.im < 0.0 {
            ((-2.0 * PI * i_unit() * u).exp(), 1.0)
        } else {
            ((2.0 * PI * i_unit() * u).exp(), -1.0)
        };
        let one = C64::new(1.0, 0.0);
        let omq = one - q;
        let val = -4.0 * PI * PI * q / (omq * omq);
        let der = sign * 8.0 * PI.powi(3) * i_unit() * q * (one + q) / (omq * omq * omq);
        (val, der)
    }
}

/// Σ_m (i n t − m)^{-4} and ^{-6} for n ≥ 1, from the Eulerian q-series.
fn row_power_sums(n: usize, t: f64) -> (f64, f64) {
    let q = (-2.0 * PI * n as f64 * t).exp();
    let omq = 1.0 - q;
    let f2 = q * (1.0 + 4.0 * q + q * q) / omq.powi(4);
    let f4 = q * (1.0 + 26.0 * q + 66.0 * q * q + 26.0 * q.powi(3) + q.powi(4)) / omq.powi(6);
    (8.0 * PI.powi(4) / 3.0 * f2, -8.0 * PI.powi(6) / 15.0 * f4)
}

impl RectLattice {
    /// Rows |n| ≤ N with e^{-2πNt} far below double precision.
    pub fn new(t: f64) -> Result<Self> {
        let n = (7.0 / t).ceil() as usize + 2;
        Self::with_truncation(t, n)
    }

    pub fn with_truncation(t: f64, truncation_order: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("lattice parameter t = {t}")));
        }
        let mut constant = PI * PI / 3.0;
        for n in 1..=truncation_order {
            let (s, _) = row_sum(C64::new(0.0, n as f64 * t));
            constant += 2.0 * s.re;
        }
        let mut g4 = PI.powi(4) / 45.0;
        let mut g6 = 2.0 * PI.powi(6) / 945.0;
        for n in 1..=truncation_order {
            let (a, b) = row_power_sums(n, t);
            g4 += 2.0 * a;
            g6 += 2.0 * b;
        }
        let mut lat = RectLattice {
            t,
            truncation_order,
            g2: C64::new(60.0 * g4, 0.0),
            g3: C64::new(140.0 * g6, 0.0),
            e: [0.0; 3],
            constant,
        };
        let e1 = lat.wp(C64::new(0.5, 0.0))?.re;
        let e2 = lat.wp(C64::new(0.5, 0.5 * t))?.re;
        let e3 = lat.wp(C64::new(0.0, 0.5 * t))?.re;
        lat.e = [e1, e2, e3];
        Ok(lat)
    }

    /// Distance from z to the nearest lattice point.
    pub fn lattice_distance(&self, z: C64) -> f64 {
        let m = z.re.round();
        let n = (z.im / self.t).round();
        C64::new(z.re - m, z.im - n * self.t).norm()
    }

    fn rows(&self, z: C64) -> std::ops::RangeInclusive<i64> {
        // widen the cutoff for points outside the central strip
        let extra = (z.im / self.t).abs().ceil() as i64;
        let n = self.truncation_order as i64 + extra;
        -n..=n
    }

    fn check(&self, z: C64) -> Result<()> {
        if self.lattice_distance(z) < 1e-12 {
            return Err(Error::LatticePointHit { re: z.re, im: z.im });
        }
        Ok(())
    }

    /// ℘(z)
    pub fn wp(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        let mut acc = C64::new(0.0, 0.0);
        for n in self.rows(z) {
            acc += row_sum(z - i_unit() * (n as f64 * self.t)).0;
        }
        Ok(acc - self.constant)
    }

    /// ℘′(z)
    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        let mut acc = C64::new(0.0, 0.0);
        for n in self.rows(z) {
            acc += row_sum(z - i_unit() * (n as f64 * self.t)).1;
        }
        Ok(acc)
    }

    /// (℘, ℘′) in one pass.
    pub fn wp_both(&self, z: C64) -> Result<(C64, C64)> {
        self.check(z)?;
        let mut a = C64::new(0.0, 0.0);
        let mut b = C64::new(0.0, 0.0);
        for n in self.rows(z) {
            let (s, d) = row_sum(z - i_unit() * (n as f64 * self.t));
            a += s;
            b += d;
        }
        Ok((a - self.constant, b))
    }

    /// 4P³ − g2 P − g3, equal to ℘′² on the curve.
    pub fn cubic(&self, p: C64) -> C64 {
        4.0 * p * p * p - self.g2 * p - self.g3
    }

    /// ℘″ = 6℘² − g2/2
    pub fn second(&self, p: C64) -> C64 {
        6.0 * p * p - self.g2 / 2.0
    }
}

pub fn wp_eval(l: &RectLattice, z: C64) -> Result<C64> {
    l.wp(z)
}

pub fn wp_prime(l: &RectLattice, z: C64) -> Result<C64> {
    l.wp_prime(z)
}
