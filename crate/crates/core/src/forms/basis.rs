//! Holomorphic 1-forms with poles of order ≤ dⱼ + 1 at the ends, their real
//! parts as harmonic forms, the L²* Gram matrix, and X_ω.

use super::l2star_weight;
use crate::complexfn::mero::contour_coefficient;
use crate::complexfn::{EllipticFn, MeroFn, Poly, RationalMap, C64};
use crate::error::{Error, Result};
use crate::surface::catalog::lattice_of;
use crate::surface::{end_analysis, norm, Chart, ChartQuadrature, Puncture, QuadSpec, Vec3, WeierstrassData};
use crate::topology::{Sidedness, SurfaceTopology};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// ω = density · dz on the chart, with its pole order at each puncture.
#[derive(Debug, Clone)]
pub struct MeromorphicForm {
    pub label: String,
    pub density: MeroFn,
    pub pole_orders: Vec<(Puncture, i32)>,
}

impl MeromorphicForm {
    pub fn new(wd: &WeierstrassData, label: &str, density: MeroFn) -> Self {
        let mut f = MeromorphicForm { label: label.into(), density, pole_orders: vec![] };
        f.pole_orders = wd.punctures.iter().map(|p| (*p, f.pole_order_at(p))).collect();
        f
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        self.density.eval(z)
    }

    /// The density in the local coordinate u of a puncture (z = p + u, or
    /// z = 1/u at ∞ where dz = −du/u²).
    pub fn local_density(&self, p: &Puncture, u: C64) -> Result<C64> {
        match p {
            Puncture::Finite(z0) => self.density.eval(z0 + u),
            Puncture::Infinity => Ok(-self.density.eval(1.0 / u)? / (u * u)),
        }
    }

    /// Pole order of the form at a puncture (0 if regular).
    pub fn pole_order_at(&self, p: &Puncture) -> i32 {
        let ord = match (&self.density, p) {
            (MeroFn::Rational(r), _) if r.is_zero() => return 0,
            (MeroFn::Rational(r), Puncture::Finite(z0)) => r.order_at(*z0),
            (MeroFn::Rational(r), Puncture::Infinity) => r.order_at_infinity() - 2,
            (MeroFn::Elliptic(_), Puncture::Finite(z0)) => self.density.order_at(*z0),
            (MeroFn::Elliptic(_), Puncture::Infinity) => 0,
        };
        (-ord).max(0)
    }

    /// The residue (1/2πi)∮ω around the puncture.
    pub fn residue(&self, p: &Puncture) -> Result<C64> {
        contour_coefficient(|u| self.local_density(p, u), c(0.0, 0.0), 1e-2, 0, 256)
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(Error::pole(c(0.0, 0.0))) })
    }

    pub fn scale(&self, s: C64) -> MeromorphicForm {
        MeromorphicForm {
            label: format!("({s})·{}", self.label),
            density: self.density.scale(s),
            pole_orders: self.pole_orders.clone(),
        }
    }

    pub fn add(&self, o: &MeromorphicForm) -> Result<MeromorphicForm> {
        let pole_orders =
            self.pole_orders.iter().zip(&o.pole_orders).map(|(a, b)| (a.0, a.1.max(b.1))).collect();
        Ok(MeromorphicForm {
            label: format!("{} + {}", self.label, o.label),
            density: self.density.add(&o.density)?,
            pole_orders,
        })
    }
}

/// dxᵢ = Re(φᵢ dz)
pub fn dx_form(wd: &WeierstrassData, i: usize) -> MeromorphicForm {
    MeromorphicForm::new(wd, &format!("dx{}", i + 1), wd.phi_functions()[i].clone())
}

/// *dxᵢ = Im(φᵢ dz) = Re(−iφᵢ dz), so that dxᵢ + i*dxᵢ = φᵢ dz.
pub fn star_dx(wd: &WeierstrassData, i: usize) -> MeromorphicForm {
    MeromorphicForm::new(wd, &format!("*dx{}", i + 1), wd.phi_functions()[i].scale(c(0.0, -1.0)))
}

/// X_ω = (⟨ω, dx₁⟩, ⟨ω, dx₂⟩, ⟨ω, dx₃⟩) for the harmonic form Re ω. In the
/// chart ⟨Re(f dz), Re(φ dz)⟩ = λ⁻² Re(f φ̄).
pub fn x_omega(wd: &WeierstrassData, omega: &MeromorphicForm, z: C64) -> Result<Vec3> {
    let f = omega.eval(z)?;
    let phi = wd.phi(z)?;
    let l2 = wd.lambda(z)?.powi(2);
    Ok([(f * phi[0].conj()).re / l2, (f * phi[1].conj()).re / l2, (f * phi[2].conj()).re / l2])
}

/// Topology read off the data: genus from the chart, d from the ends.
pub fn basis_topology(wd: &WeierstrassData) -> Result<SurfaceTopology> {
    let genus = match wd.chart {
        Chart::Plane => 0,
        Chart::Torus { .. } => 1,
    };
    let d = wd.punctures.iter().map(|p| end_analysis(wd, p).map(|e| e.multiplicity)).collect::<Result<Vec<_>>>()?;
    SurfaceTopology::new(genus, d, Sidedness::Two)
}

fn genus_zero_basis(wd: &WeierstrassData, d: &[u32]) -> Result<Vec<MeromorphicForm>> {
    let mut out = Vec::new();
    let finite: Vec<(C64, u32)> = wd
        .punctures
        .iter()
        .zip(d)
        .filter_map(|(p, &d)| match p {
            Puncture::Finite(z) => Some((*z, d)),
            Puncture::Infinity => None,
        })
        .collect();
    let d_inf = wd.punctures.iter().zip(d).find(|(p, _)| matches!(p, Puncture::Infinity)).map(|(_, &d)| d);
    let pole = |z0: C64, l: u32| -> Result<RationalMap> {
        let den = Poly::from_roots(c(1.0, 0.0), &vec![z0; l as usize]);
        RationalMap::new(Poly::one(), den)
    };
    for (k, &(z0, dj)) in finite.iter().enumerate() {
        for l in 1..=dj + 1 {
            // without an end at ∞ the residues are paired against the first end
            let f = if l == 1 && d_inf.is_none() {
                if k == 0 {
                    continue;
                }
                pole(z0, 1)?.sub(&pole(finite[0].0, 1)?)
            } else {
                pole(z0, l)?
            };
            out.push(MeromorphicForm::new(wd, &format!("dz/(z−({z0}))^{l}"), MeroFn::Rational(f)));
        }
    }
    if let Some(dinf) = d_inf {
        // zⁿ dz has a pole of order n + 2 at ∞
        for n in 0..dinf {
            let f = RationalMap::monomial(c(1.0, 0.0), n as i32);
            out.push(MeromorphicForm::new(wd, &format!("z^{n} dz"), MeroFn::Rational(f)));
        }
    }
    Ok(out)
}

/// On C/L(it) with simple ends at half-periods, one of them 0: dz, ℘(z −
/// ω) dz for each end ω, and ℘′/(℘ − e) dz carrying residue −2 at 0 and +2
/// at the half-period with ℘ = e.
fn torus_basis(wd: &WeierstrassData, d: &[u32]) -> Result<Vec<MeromorphicForm>> {
    let lat = lattice_of(wd).ok_or_else(|| Error::InvalidInput("torus chart without a lattice".into()))?;
    let t = lat.t;
    let half = [c(0.5, 0.0), c(0.5, 0.5 * t), c(0.0, 0.5 * t)];
    let unsupported = || Error::InvalidInput("torus basis needs simple ends at half-periods including 0".into());
    if d.iter().any(|&x| x != 1) {
        return Err(unsupported());
    }
    let mut ends = Vec::new();
    let mut has_zero = false;
    for p in &wd.punctures {
        let Puncture::Finite(z) = p else { return Err(unsupported()) };
        if z.norm() < 1e-12 {
            has_zero = true;
        } else {
            ends.push(half.iter().position(|h| (h - z).norm() < 1e-12).ok_or_else(unsupported)?);
        }
    }
    if !has_zero {
        return Err(unsupported());
    }
    let constant = |v: C64| RationalMap::constant(v);
    let x = RationalMap::identity();
    let mut out = vec![MeromorphicForm::new(wd, "dz", MeroFn::Elliptic(EllipticFn::constant(lat.clone(), c(1.0, 0.0))))];
    out.push(MeromorphicForm::new(wd, "℘ dz", MeroFn::Elliptic(EllipticFn::wp(lat.clone()))));
    for &i in &ends {
        let e = lat.e;
        let (ei, ej, ek) = (e[i], e[(i + 1) % 3], e[(i + 2) % 3]);
        let a = (ei - ej) * (ei - ek);
        let shifted = x.sub(&constant(c(ei, 0.0)));
        // ℘(z − ωᵢ) = eᵢ + (eᵢ − eⱼ)(eᵢ − eₖ)/(℘ − eᵢ)
        let even = constant(c(ei, 0.0)).add(&constant(c(a, 0.0)).div(&shifted)?);
        out.push(MeromorphicForm::new(
            wd,
            &format!("℘(z − {}) dz", half[i]),
            MeroFn::Elliptic(EllipticFn::of_wp(lat.clone(), even)),
        ));
    }
    for &i in &ends {
        let odd = constant(c(1.0, 0.0)).div(&x.sub(&constant(c(lat.e[i], 0.0))))?;
        out.push(MeromorphicForm::new(
            wd,
            &format!("℘′/(℘ − e{}) dz", i + 1),
            MeroFn::Elliptic(EllipticFn::new(lat.clone(), constant(c(0.0, 0.0)), odd)),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Gram {
    /// real forms: Re(fₖ dz) at 2k, Re(i fₖ dz) at 2k + 1
    pub matrix: Vec<Vec<f64>>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub condition_number: f64,
    pub quadrature_nodes: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolomorphicBasis {
    pub topology: SurfaceTopology,
    #[serde(skip)]
    pub forms: Vec<MeromorphicForm>,
    pub labels: Vec<String>,
    pub pole_orders: Vec<Vec<i32>>,
    /// max over forms of |Σ residues|
    pub residue_sum: f64,
    pub holomorphic_dim: usize,
    pub harmonic_dim: usize,
    pub gram: Gram,
}

/// Quadrature for L²* integrals of forms: the area rule of the surface
/// module at a coarser density, excising δ-disks at the ends.
pub fn forms_quadrature_spec() -> QuadSpec {
    QuadSpec { delta: 1e-5, radial_nodes: 8, angular_nodes: 64, bulk_density: 64 }
}

/// |X(z)| at the nodes, integrating along runs of nearby nodes and
/// restarting from the basepoint whenever consecutive nodes are far apart
/// relative to their distance from the ends.
pub fn extrinsic_norms(wd: &WeierstrassData, nodes: &[C64]) -> Result<Vec<f64>> {
    let mut runs: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for k in 1..=nodes.len() {
        let end_run = k == nodes.len() || {
            let (a, b) = (nodes[k - 1], nodes[k]);
            let mut reach = 0.25 * wd.puncture_distance(a).min(wd.puncture_distance(b));
            if wd.has_infinity() {
                // distance to ∞ measured in w = 1/z
                reach = reach.min(0.25 * a.norm().min(b.norm()).max(1.0));
            }
            (b - a).norm() > reach
        };
        if end_run {
            runs.push(start..k);
            start = k;
        }
    }
    let parts: Result<Vec<Vec<f64>>> = runs
        .par_iter()
        .map(|r| Ok(wd.immerse_along(&nodes[r.clone()])?.iter().map(norm).collect()))
        .collect();
    Ok(parts?.concat())
}

/// Gram matrix ⟨Re(a dz), Re(b dz)⟩_{L²*} = ∫ Re(a b̄) w(|X|) dx dy over the
/// real span {fₖ, i fₖ}.
pub fn l2star_gram(wd: &WeierstrassData, forms: &[MeromorphicForm], spec: QuadSpec) -> Result<Gram> {
    let q = ChartQuadrature::new(wd, spec)?;
    let z: Vec<C64> = q.nodes.iter().map(|n| n.0).collect();
    let xs = extrinsic_norms(wd, &z)?;
    let n = 2 * forms.len();
    let rows: Result<Vec<Vec<f64>>> = q
        .nodes
        .par_iter()
        .zip(&xs)
        .map(|(&(z, w), &x)| {
            let mut v = vec![0.0; n * n];
            let f: Vec<C64> = forms
                .iter()
                .map(|f| f.eval(z))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flat_map(|a| [a, a * c(0.0, 1.0)])
                .collect();
            let ww = w * l2star_weight(x);
            for i in 0..n {
                for j in i..n {
                    v[i * n + j] = ww * (f[i] * f[j].conj()).re;
                }
            }
            Ok(v)
        })
        .collect();
    let rows = rows?;
    let mut g = DMatrix::<f64>::zeros(n, n);
    for r in &rows {
        for i in 0..n {
            for j in i..n {
                g[(i, j)] += r[i * n + j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    let eig = SymmetricEigen::new(g.clone());
    let min_eig = eig.eigenvalues.min();
    let max_eig = eig.eigenvalues.max();
    if !(min_eig > 1e-12 * max_eig.abs()) {
        return Err(Error::DegenerateBasis { min_eig });
    }
    Ok(Gram {
        matrix: (0..n).map(|i| (0..n).map(|j| g[(i, j)]).collect()).collect(),
        min_eig,
        max_eig,
        condition_number: max_eig / min_eig,
        quadrature_nodes: q.nodes.len(),
        delta: spec.delta,
    })
}

/// Holomorphic 1-forms with poles of order ≤ dⱼ + 1, g + Σ(dⱼ+1) − 1 of
/// them, and the Gram matrix of their real and imaginary parts in L²*.
pub fn holomorphic_basis(wd: &WeierstrassData) -> Result<HolomorphicBasis> {
    holomorphic_basis_with(wd, forms_quadrature_spec())
}

pub fn holomorphic_basis_with(wd: &WeierstrassData, spec: QuadSpec) -> Result<HolomorphicBasis> {
    let topology = basis_topology(wd)?;
    let forms = match wd.chart {
        Chart::Plane => genus_zero_basis(wd, &topology.multiplicities)?,
        Chart::Torus { .. } => torus_basis(wd, &topology.multiplicities)?,
    };
    let expected = topology.genus as i64 + topology.end_sum() - 1;
    if forms.len() as i64 != expected {
        return Err(Error::InvalidInput(format!("basis has {} forms, expected {expected}", forms.len())));
    }
    for f in &forms {
        for (p, o) in &f.pole_orders {
            let d = topology.multiplicities[wd.punctures.iter().position(|q| q == p).unwrap()];
            if *o > d as i32 + 1 {
                return Err(Error::InvalidInput(format!("{} has a pole of order {o} at {p}", f.label)));
            }
        }
    }
    let mut residue_sum: f64 = 0.0;
    for f in &forms {
        let mut s = c(0.0, 0.0);
        for p in &wd.punctures {
            s += f.residue(p)?;
        }
        residue_sum = residue_sum.max(s.norm());
    }
    let gram = l2star_gram(wd, &forms, spec)?;
    Ok(HolomorphicBasis {
        labels: forms.iter().map(|f| f.label.clone()).collect(),
        pole_orders: forms.iter().map(|f| f.pole_orders.iter().map(|p| p.1).collect()).collect(),
        holomorphic_dim: forms.len(),
        harmonic_dim: 2 * forms.len(),
        topology,
        forms,
        residue_sum,
        gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{catenoid, enneper};

    #[test]
    fn catenoid_basis_is_dz_over_z_powers_and_dz() {
        let wd = catenoid();
        let t = basis_topology(&wd).unwrap();
        let forms = genus_zero_basis(&wd, &t.multiplicities).unwrap();
        let orders: Vec<Vec<i32>> = forms.iter().map(|f| f.pole_orders.iter().map(|p| p.1).collect()).collect();
        // punctures (0, ∞): dz/z, dz/z², dz
        assert_eq!(orders, vec![vec![1, 1], vec![2, 0], vec![0, 2]]);
    }

    #[test]
    fn enneper_basis_counts() {
        let wd = enneper(1);
        let t = basis_topology(&wd).unwrap();
        assert_eq!(t.multiplicities, vec![3]);
        let forms = genus_zero_basis(&wd, &t.multiplicities).unwrap();
        let orders: Vec<i32> = forms.iter().map(|f| f.pole_orders[0].1).collect();
        assert_eq!(orders, vec![2, 3, 4]);
    }

    #[test]
    fn catenoid_x_omega_has_unit_length_on_the_waist() {
        let wd = catenoid();
        let f = MeromorphicForm::new(&wd, "dz/z", MeroFn::Rational(RationalMap::monomial(c(1.0, 0.0), -1)));
        for k in 0..8 {
            let z = C64::from_polar(1.0, 0.3 + k as f64);
            assert!((wd.lambda(z).unwrap() - 1.0).abs() < 1e-12);
            assert!((norm(&x_omega(&wd, &f, z).unwrap()) - 1.0).abs() < 1e-12);
        }
    }
}
