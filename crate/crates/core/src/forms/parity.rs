//! Parity under the reflections τ₁: z ↦ −z̄ and τ₂: z ↦ z̄ of the chart,
//! which cover x₁ ↦ −x₁ and x₂ ↦ −x₂ on the Costa family.
//!
//! A harmonic form Re(f dz) pulls back to Re(h dz) with h(z) = −conj f(−z̄)
//! under τ₁ and h(z) = conj f(z̄) under τ₂.

use super::basis::{dx_form, star_dx, HolomorphicBasis, MeromorphicForm};
use super::dim_harmonic_l2star;
use crate::complexfn::C64;
use crate::error::{Error, Result};
use crate::spectral::{Parity, Sign};
use crate::surface::{costa, Chart, Puncture, WeierstrassData};
use crate::topology::SurfaceTopology;
use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParityType {
    pub s1: i8,
    pub s2: i8,
}

impl ParityType {
    /// ++, +−, −+, −−
    pub const ALL: [ParityType; 4] = [
        ParityType { s1: 1, s2: 1 },
        ParityType { s1: 1, s2: -1 },
        ParityType { s1: -1, s2: 1 },
        ParityType { s1: -1, s2: -1 },
    ];

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|p| p == self).expect("signs are ±1")
    }

    pub fn product(&self, o: &ParityType) -> ParityType {
        ParityType { s1: self.s1 * o.s1, s2: self.s2 * o.s2 }
    }

    pub fn label(&self) -> String {
        let s = |x: i8| if x > 0 { '+' } else { '-' };
        format!("{}{}", s(self.s1), s(self.s2))
    }

    pub fn to_parity(&self) -> Parity {
        let s = |x: i8| if x > 0 { Sign::Even } else { Sign::Odd };
        Parity { tau1: s(self.s1), tau2: s(self.s2) }
    }
}

impl fmt::Display for ParityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for ParityType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reflection {
    Tau1,
    Tau2,
}

pub fn reflect(r: Reflection, z: C64) -> C64 {
    match r {
        Reflection::Tau1 => -z.conj(),
        Reflection::Tau2 => z.conj(),
    }
}

/// Density of the pulled-back form at z.
pub fn pullback_density(f: impl Fn(C64) -> Result<C64>, r: Reflection, z: C64) -> Result<C64> {
    let v = f(reflect(r, z))?;
    Ok(match r {
        Reflection::Tau1 => -v.conj(),
        Reflection::Tau2 => v.conj(),
    })
}

/// The real parts and imaginary parts of dz/z and dz/z², written in (x, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelForm {
    LogRadial,
    LogAngular,
    InverseSquareRe,
    InverseSquareIm,
}

impl ModelForm {
    pub const ALL: [ModelForm; 4] =
        [ModelForm::LogRadial, ModelForm::LogAngular, ModelForm::InverseSquareRe, ModelForm::InverseSquareIm];

    pub fn expr(&self) -> &'static str {
        match self {
            ModelForm::LogRadial => "(x dx + y dy)/(x² + y²)",
            ModelForm::LogAngular => "(x dy − y dx)/(x² + y²)",
            ModelForm::InverseSquareRe => "((x² − y²) dx + 2xy dy)/((x² − y²)² + 4x²y²)",
            ModelForm::InverseSquareIm => "((x² − y²) dy − 2xy dx)/((x² − y²)² + 4x²y²)",
        }
    }

    /// (P, Q) of P dx + Q dy
    pub fn coefficients(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        let d = (x * x - y * y).powi(2) + 4.0 * x * x * y * y;
        match self {
            ModelForm::LogRadial => (x / r2, y / r2),
            ModelForm::LogAngular => (-y / r2, x / r2),
            ModelForm::InverseSquareRe => ((x * x - y * y) / d, 2.0 * x * y / d),
            ModelForm::InverseSquareIm => (-2.0 * x * y / d, (x * x - y * y) / d),
        }
    }
}

fn sample_points() -> Vec<(f64, f64)> {
    (0..12).map(|k| (0.7 * (0.9 + 0.37 * k as f64).cos(), 0.45 * (1.3 + 0.61 * k as f64).sin() + 0.05)).collect()
}

fn match_sign(pairs: &[([f64; 2], [f64; 2])], what: &str) -> Result<i8> {
    let scale = pairs.iter().map(|(a, _)| a[0].abs().max(a[1].abs())).fold(0.0, f64::max);
    for s in [1i8, -1] {
        let bad = pairs.iter().any(|(a, b)| {
            (b[0] - s as f64 * a[0]).abs() > 1e-9 * scale || (b[1] - s as f64 * a[1]).abs() > 1e-9 * scale
        });
        if !bad {
            return Ok(s);
        }
    }
    Err(Error::NotEigenform(what.into()))
}

/// Parity of a tabulated form by pulling it back under (x, y) ↦ (−x, y)
/// and (x, y) ↦ (x, −y) at sample points.
pub fn parity_type_of(f: ModelForm) -> Result<ParityType> {
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    for (x, y) in sample_points() {
        let (p, q) = f.coefficients(x, y);
        let (a, b) = f.coefficients(-x, y);
        p1.push(([p, q], [-a, b]));
        let (a, b) = f.coefficients(x, -y);
        p2.push(([p, q], [a, -b]));
    }
    Ok(ParityType { s1: match_sign(&p1, f.expr())?, s2: match_sign(&p2, f.expr())? })
}

/// Points of the chart away from the ends, for pullback comparisons.
fn chart_samples(wd: &WeierstrassData) -> Vec<C64> {
    let (w, h) = match wd.chart {
        Chart::Torus { t } => (1.0, t),
        Chart::Plane => (3.0, 3.0),
    };
    (0..16)
        .map(|k| {
            let a = 0.13 + 0.61803398875 * k as f64;
            let b = 0.29 + 0.41421356237 * k as f64;
            C64::new(w * (a.fract() - 0.5), h * (b.fract() - 0.5))
        })
        .filter(|&z| wd.puncture_distance(z) > 0.05 && (!wd.has_infinity() || z.norm() < 1e3))
        .collect()
}

/// Parity of the harmonic form Re ω; NotEigenform if Re ω is not a
/// joint eigenform of the two reflections.
pub fn form_parity(wd: &WeierstrassData, omega: &MeromorphicForm) -> Result<ParityType> {
    let mut signs = [0i8; 2];
    for (k, r) in [Reflection::Tau1, Reflection::Tau2].into_iter().enumerate() {
        let mut pairs = Vec::new();
        for z in chart_samples(wd) {
            let f = omega.eval(z)?;
            let h = pullback_density(|w| omega.eval(w), r, z)?;
            pairs.push(([f.re, f.im], [h.re, h.im]));
        }
        signs[k] = match_sign(&pairs, &omega.label)?;
    }
    Ok(ParityType { s1: signs[0], s2: signs[1] })
}

fn fixed_by_reflections(wd: &WeierstrassData, p: &Puncture) -> bool {
    match p {
        Puncture::Infinity => true,
        Puncture::Finite(z) => [Reflection::Tau1, Reflection::Tau2].iter().all(|&r| {
            let w = reflect(r, *z);
            match wd.chart {
                Chart::Plane => (w - z).norm() < 1e-12,
                Chart::Torus { t } => {
                    let d = w - z;
                    (d.re - d.re.round()).abs() < 1e-12 && (d.im / t - (d.im / t).round()).abs() < 1e-12
                }
            }
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CostaParityDims {
    pub t: f64,
    /// model form and its parity, in the order of the Laurent slots
    /// Re α₁, Im α₁, Re α₂, Im α₂
    pub laurent_slots: Vec<(String, ParityType)>,
    pub ends: usize,
    /// dx, dy on the closed torus
    pub global_forms: Vec<(String, ParityType)>,
    /// rank of the residue-sum constraint per parity
    pub residue_constraints: [usize; 4],
    pub tilde: [usize; 4],
    pub star_dx: Vec<(String, ParityType)>,
    pub dims: [usize; 4],
    pub total: usize,
}

/// Per parity: allowed Laurent coefficients at the three ends plus the
/// L² forms dx, dy, minus the rank of Σ residues = 0, then minus the
/// *dxⁱ of that parity.
pub fn costa_parity_dims(t: f64) -> Result<CostaParityDims> {
    let wd = costa(t)?;
    if !wd.punctures.iter().all(|p| fixed_by_reflections(&wd, p)) {
        return Err(Error::InvalidInput("ends are not fixed by both reflections".into()));
    }
    let mut laurent_slots = Vec::new();
    for m in ModelForm::ALL {
        laurent_slots.push((m.expr().to_string(), parity_type_of(m)?));
    }
    let ends = wd.punctures.len();
    let lat_forms = [
        ("dx".to_string(), MeromorphicForm::new(&wd, "dx", const_density(&wd, C64::new(1.0, 0.0))?)),
        ("dy".to_string(), MeromorphicForm::new(&wd, "dy", const_density(&wd, C64::new(0.0, -1.0))?)),
    ];
    let mut global_forms = Vec::new();
    for (name, f) in &lat_forms {
        global_forms.push((name.clone(), form_parity(&wd, f)?));
    }
    let mut residue_constraints = [0usize; 4];
    // Σ Re α₁ = 0 sits in the slot of Re(dz/z), Σ Im α₁ = 0 in that of Im(dz/z)
    residue_constraints[laurent_slots[0].1.index()] += 1;
    residue_constraints[laurent_slots[1].1.index()] += 1;
    let mut tilde = [0usize; 4];
    for (_, p) in &laurent_slots {
        tilde[p.index()] += ends;
    }
    for (_, p) in &global_forms {
        tilde[p.index()] += 1;
    }
    for k in 0..4 {
        tilde[k] -= residue_constraints[k];
    }
    let expected = dim_harmonic_l2star(&SurfaceTopology::two_sided(1, &vec![1; ends])) as usize;
    if tilde.iter().sum::<usize>() != expected {
        return Err(Error::InvalidInput(format!("parity count {tilde:?} does not add up to {expected}")));
    }
    let mut star = Vec::new();
    let mut dims = tilde;
    for i in 0..3 {
        let f = star_dx(&wd, i);
        let p = form_parity(&wd, &f)?;
        dims[p.index()] -= 1;
        star.push((f.label.clone(), p));
    }
    Ok(CostaParityDims {
        t,
        laurent_slots,
        ends,
        global_forms,
        residue_constraints,
        tilde,
        star_dx: star,
        total: dims.iter().sum(),
        dims,
    })
}

fn const_density(wd: &WeierstrassData, v: C64) -> Result<crate::complexfn::MeroFn> {
    let lat = crate::surface::catalog::lattice_of(wd).ok_or_else(|| Error::InvalidInput("no lattice".into()))?;
    Ok(crate::complexfn::MeroFn::Elliptic(crate::complexfn::EllipticFn::constant(lat, v)))
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityDecomposition {
    pub tilde: [usize; 4],
    pub dims: [usize; 4],
    /// max |M² − I| and |M₁M₂ − M₂M₁| of the fitted reflection matrices
    pub involution_residual: f64,
    /// least-squares residual of the pullback fits, relative
    pub fit_residual: f64,
    /// largest L²* inner product between unit forms of different parity
    pub max_cross_parity_inner: f64,
}

/// The reflections as real matrices on the span of the basis, fitted from
/// pullbacks at sample points, and the dimensions of their joint
/// eigenspaces.
pub fn parity_decomposition(wd: &WeierstrassData, basis: &HolomorphicBasis) -> Result<ParityDecomposition> {
    let n = 2 * basis.forms.len();
    let zs = chart_samples(wd);
    let eval_real = |b: usize, z: C64| -> Result<C64> {
        let v = basis.forms[b / 2].eval(z)?;
        Ok(if b % 2 == 0 { v } else { v * C64::new(0.0, 1.0) })
    };
    let mut a = DMatrix::<f64>::zeros(2 * zs.len(), n);
    for (s, &z) in zs.iter().enumerate() {
        for b in 0..n {
            let v = eval_real(b, z)?;
            a[(2 * s, b)] = v.re;
            a[(2 * s + 1, b)] = v.im;
        }
    }
    let svd = a.clone().svd(true, true);
    let mut fit_residual: f64 = 0.0;
    let mut mats = Vec::new();
    for r in [Reflection::Tau1, Reflection::Tau2] {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for b in 0..n {
            let mut rhs = DVector::<f64>::zeros(2 * zs.len());
            for (s, &z) in zs.iter().enumerate() {
                let h = pullback_density(|w| eval_real(b, w), r, z)?;
                rhs[2 * s] = h.re;
                rhs[2 * s + 1] = h.im;
            }
            let x = svd.solve(&rhs, 1e-12).map_err(|e| Error::InvalidInput(e.into()))?;
            let res = (&a * &x - &rhs).norm() / rhs.norm().max(1e-300);
            fit_residual = fit_residual.max(res);
            m.set_column(b, &x);
        }
        mats.push(m);
    }
    let id = DMatrix::<f64>::identity(n, n);
    let inv = [(&mats[0] * &mats[0] - &id).amax(), (&mats[1] * &mats[1] - &id).amax()];
    let comm = (&mats[0] * &mats[1] - &mats[1] * &mats[0]).amax();
    let g = DMatrix::from_fn(n, n, |i, j| basis.gram.matrix[i][j]);
    let mut tilde = [0usize; 4];
    let mut spaces: Vec<DMatrix<f64>> = Vec::new();
    for p in ParityType::ALL {
        let proj = (&id + &mats[0] * p.s1 as f64) * (&id + &mats[1] * p.s2 as f64) * 0.25;
        tilde[p.index()] = proj.trace().round() as usize;
        // orthonormal columns spanning the range of the projector
        let s = proj.svd(true, false);
        let u = s.u.expect("left vectors");
        let cols: Vec<usize> = (0..n).filter(|&k| s.singular_values[k] > 0.5).collect();
        spaces.push(DMatrix::from_fn(n, cols.len(), |i, j| u[(i, cols[j])]));
    }
    let mut cross: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i == j || spaces[i].ncols() == 0 || spaces[j].ncols() == 0 {
                continue;
            }
            let block = spaces[i].transpose() * &g * &spaces[j];
            let di = (spaces[i].transpose() * &g * &spaces[i]).diagonal();
            let dj = (spaces[j].transpose() * &g * &spaces[j]).diagonal();
            for a in 0..block.nrows() {
                for b in 0..block.ncols() {
                    cross = cross.max(block[(a, b)].abs() / (di[a] * dj[b]).sqrt());
                }
            }
        }
    }
    let mut dims = tilde;
    for i in 0..3 {
        let p = form_parity(wd, &star_dx(wd, i))?;
        dims[p.index()] = dims[p.index()].saturating_sub(1);
    }
    Ok(ParityDecomposition {
        tilde,
        dims,
        involution_residual: inv[0].max(inv[1]).max(comm),
        fit_residual,
        max_cross_parity_inner: cross,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    /// dim H^p ≤ Σ w over the summands
    pub parity: ParityType,
    pub dim: usize,
    pub summands: [ParityType; 3],
}

impl Inequality {
    pub fn holds(&self, w: &[usize; 4]) -> bool {
        self.dim <= self.summands.iter().map(|q| w[q.index()]).sum::<usize>()
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.summands.iter().map(|q| format!("w{q}")).collect();
        write!(f, "{} = dim H{} ≤ {}", self.dim, self.parity, s.join(" + "))
    }
}

/// For ω ∈ H^p the components ⟨ω, dxⁱ⟩ of X_ω have parity p · type(dxⁱ),
/// so orthogonality to W costs at most that many w's.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSystem {
    pub dims: [usize; 4],
    pub dx_types: [ParityType; 3],
}

impl LemmaSystem {
    pub fn for_costa(t: f64) -> Result<Self> {
        let dims = costa_parity_dims(t)?.dims;
        let wd = costa(t)?;
        let mut dx_types = [ParityType::ALL[0]; 3];
        for (i, d) in dx_types.iter_mut().enumerate() {
            *d = form_parity(&wd, &dx_form(&wd, i))?;
        }
        Ok(LemmaSystem { dims, dx_types })
    }

    pub fn inequalities(&self) -> Vec<Inequality> {
        ParityType::ALL
            .iter()
            .map(|p| Inequality {
                parity: *p,
                dim: self.dims[p.index()],
                summands: self.dx_types.map(|d| p.product(&d)),
            })
            .collect()
    }

    pub fn violations(&self, w: &[usize; 4]) -> Vec<Inequality> {
        self.inequalities().into_iter().filter(|i| !i.holds(w)).collect()
    }
}

/// Violated inequalities for w = (w⁺⁺, w⁺⁻, w⁻⁺, w⁻⁻) on the Costa family.
pub fn parity_feasibility(w: [usize; 4]) -> Result<Vec<Inequality>> {
    Ok(LemmaSystem::for_costa(1.0)?.violations(&w))
}

#[derive(Debug, Clone, Serialize)]
pub struct Replay {
    pub index: usize,
    /// all w with Σw = index satisfying every inequality
    pub solutions: Vec<[usize; 4]>,
    pub forced: Option<[usize; 4]>,
    pub nodal_w_minus_minus: usize,
    pub solutions_with_nodal: Vec<[usize; 4]>,
    /// the forced solution with w⁻⁻ replaced by the nodal value
    pub forced_with_nodal_violations: Vec<String>,
    pub contradiction: bool,
}

/// Assume Index = `index`, solve the inequalities over Σw = index, then
/// impose w⁻⁻ = `w_minus_minus` from the nodal-domain argument.
pub fn contradiction_replay(sys: &LemmaSystem, index: usize, w_minus_minus: usize) -> Replay {
    let mut solutions = Vec::new();
    for a in 0..=index {
        for b in 0..=index - a {
            for c in 0..=index - a - b {
                let w = [a, b, c, index - a - b - c];
                if sys.violations(&w).is_empty() {
                    solutions.push(w);
                }
            }
        }
    }
    let mm = ParityType::ALL[3].index();
    let solutions_with_nodal: Vec<[usize; 4]> = solutions.iter().filter(|w| w[mm] == w_minus_minus).copied().collect();
    let forced = if solutions.len() == 1 { Some(solutions[0]) } else { None };
    let forced_with_nodal_violations = match forced {
        Some(mut w) => {
            w[mm] = w_minus_minus;
            sys.violations(&w).iter().map(|i| i.to_string()).collect()
        }
        None => vec![],
    };
    Replay {
        index,
        contradiction: solutions_with_nodal.is_empty(),
        solutions,
        forced,
        nodal_w_minus_minus: w_minus_minus,
        solutions_with_nodal,
        forced_with_nodal_violations,
    }
}
