//! Complex-arithmetic kernel: polynomials, reduced rational maps, the
//! Weierstrass ℘-function on rectangular lattices, and meromorphic handles
//! built from either.

pub mod elliptic;
pub mod mero;
pub mod poly;
pub mod rational;

pub use num_complex::Complex64 as C64;

pub use elliptic::{wp_eval, wp_prime, RectLattice};
pub use mero::{EllipticFn, MeroFn};
pub use poly::Poly;
pub use rational::RationalMap;

/// f(z) for a rational map; see [`RationalMap::eval`].
pub fn eval_rational(f: &RationalMap, z: C64) -> crate::Result<C64> {
    f.eval(z)
}

/// Exact quotient-rule derivative.
pub fn derivative(f: &RationalMap) -> RationalMap {
    f.derivative()
}

/// Signed order of vanishing at z0.
pub fn order_at(f: &RationalMap, z0: C64) -> i32 {
    f.order_at(z0)
}
