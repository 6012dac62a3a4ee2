//! Triangulations of the exhaustion regions {z : |X(z)| ≤ R} on the chart.
//!
//! Near each puncture the mesh is a structured log-polar grid in the local
//! coordinate (square cells of relative size h), whose innermost ring sits on
//! the curve |X| = R. Away from the punctures a hexagonal lattice fills in,
//! and a constrained Delaunay refinement joins the pieces with a minimum
//! angle guarantee.

use crate::complexfn::C64;
use crate::error::{Error, Result};
use crate::surface::quadrature::local_chart;
use crate::surface::{norm, Chart, Puncture, Vec3, WeierstrassData};
use rayon::prelude::*;
use serde::Serialize;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::collections::{HashMap, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Interior,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    /// outer extrinsic radius
    pub r: f64,
    /// floor on the excision radius in each puncture's local coordinate
    pub delta: f64,
    /// relative edge length
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MeshKind {
    Plane,
    /// C / L(it), periodic
    Torus { t: f64 },
    /// [0, 1/2] × [0, t/2] with the reflection lines as boundary
    Quarter { t: f64 },
}

/// Vertex lies on a fixed line of z ↦ −z̄ (x ∈ {0, 1/2}).
pub const TAU1_LINE: u8 = 1;
/// Vertex lies on a fixed line of z ↦ z̄ (y ∈ {0, t/2}).
pub const TAU2_LINE: u8 = 2;

/// Degree-4 six-point rule on the reference triangle, barycentric points and
/// weights summing to one.
pub const TRI_RULE: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445948490915965;
    const B: f64 = 0.091576213509771;
    const WA: f64 = 0.223381589678011;
    const WB: f64 = 0.109951743655322;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

pub use crate::forms::l2star_weight;

#[derive(Debug, Clone)]
pub struct ConformalMesh {
    pub vertices: Vec<C64>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_flags: Vec<VertexKind>,
    pub lambda2: Vec<f64>,
    /// V = 2κλ²
    pub potential: Vec<f64>,
    /// w(|X|) λ²
    pub weight: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    /// V at the points of `TRI_RULE` in each triangle.
    pub tri_potential: Vec<[f64; 6]>,
    /// TAU1_LINE / TAU2_LINE bits, quarter meshes only.
    pub mirror: Vec<u8>,
    pub region: Region,
    pub kind: MeshKind,
}

fn wrap(kind: MeshKind, d: C64) -> C64 {
    match kind {
        MeshKind::Torus { t } => C64::new(d.re - d.re.round(), d.im - t * (d.im / t).round()),
        _ => d,
    }
}

/// Canonical representative on the torus, exact for mirrored inputs.
fn normalize(kind: MeshKind, z: C64) -> C64 {
    match kind {
        MeshKind::Torus { t } => {
            let mut x = z.re - z.re.round();
            let mut y = z.im - t * (z.im / t).round();
            if x <= -0.5 {
                x += 1.0;
            }
            if y <= -0.5 * t {
                y += t;
            }
            C64::new(x + 0.0, y + 0.0)
        }
        _ => z,
    }
}

fn key(z: C64) -> (u64, u64) {
    ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
}

impl ConformalMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Triangle corners in a common sheet (periodic meshes are unwrapped
    /// around the first corner).
    pub fn corners(&self, tri: usize) -> [C64; 3] {
        let [a, b, c] = self.triangles[tri];
        let p = self.vertices[a];
        [p, p + wrap(self.kind, self.vertices[b] - p), p + wrap(self.kind, self.vertices[c] - p)]
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [p, q, r] = self.corners(tri);
        0.5 * ((q - p).re * (r - p).im - (q - p).im * (r - p).re)
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let c = self.corners(t);
                (0..3)
                    .map(|k| {
                        let u = c[(k + 1) % 3] - c[k];
                        let v = c[(k + 2) % 3] - c[k];
                        ((u.conj() * v).arg().abs()).to_degrees()
                    })
                    .fold(180.0, f64::min)
            })
            .fold(180.0, f64::min)
    }

    pub fn dirichlet_count(&self) -> usize {
        self.boundary_flags.iter().filter(|&&k| k == VertexKind::Dirichlet).count()
    }

    /// Same mesh with every vertex at |X| ≥ r made Dirichlet. The free space
    /// is a coordinate subspace of the original one.
    pub fn restrict(&self, r: f64) -> ConformalMesh {
        let mut m = self.clone();
        for (k, x) in m.positions.iter().enumerate() {
            if norm(x) >= r {
                m.boundary_flags[k] = VertexKind::Dirichlet;
            }
        }
        m.region.r = r;
        m
    }

    /// Split every triangle into four at its edge midpoints. The geometry is
    /// unchanged, so the P1 space of the result contains the original one.
    pub fn refine_uniform(&self, wd: &WeierstrassData) -> Result<ConformalMesh> {
        let boundary_edges = self.boundary_edges();
        let mut verts = self.vertices.clone();
        let mut flags = self.boundary_flags.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        for (ti, tri) in self.triangles.iter().enumerate() {
            let c = self.corners(ti);
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = (a.min(b), a.max(b));
                m[k] = *mid.entry(e).or_insert_with(|| {
                    let z = normalize(self.kind, 0.5 * (c[k] + c[(k + 1) % 3]));
                    verts.push(z);
                    let d = boundary_edges.contains(&e)
                        && flags[a] == VertexKind::Dirichlet
                        && flags[b] == VertexKind::Dirichlet;
                    flags.push(if d { VertexKind::Dirichlet } else { VertexKind::Interior });
                    verts.len() - 1
                });
            }
            tris.push([tri[0], m[0], m[2]]);
            tris.push([m[0], tri[1], m[1]]);
            tris.push([m[2], m[1], tri[2]]);
            tris.push([m[0], m[1], m[2]]);
        }
        let region = Region { h: 0.5 * self.region.h, ..self.region };
        finish(wd, verts, tris, flags, region, self.kind)
    }

    fn boundary_edges(&self) -> HashSet<(usize, usize)> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect()
    }

    /// Plain-text dump. Header line, then `vertices N` followed by N lines
    /// `index re im kind lambda2 potential weight`, then `triangles M`
    /// followed by M lines of three vertex indices.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# minsurf mesh v1 R={} delta={} h={}", self.region.r, self.region.delta, self.region.h);
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for (i, z) in self.vertices.iter().enumerate() {
            let k = match self.boundary_flags[i] {
                VertexKind::Interior => "interior",
                VertexKind::Dirichlet => "dirichlet",
            };
            let _ = writeln!(
                s,
                "{i} {:.17e} {:.17e} {k} {:.17e} {:.17e} {:.17e}",
                z.re, z.im, self.lambda2[i], self.potential[i], self.weight[i]
            );
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

/// X at every vertex: one full path integral per connected component, then
/// Gauss–Legendre along the edges of a breadth-first spanning tree. Edges are
/// short relative to the distance to the nearest puncture, so the fixed rule
/// is accurate to rounding.
fn propagate_positions(
    wd: &WeierstrassData,
    vertices: &[C64],
    triangles: &[[usize; 3]],
    kind: MeshKind,
) -> Result<Vec<Vec3>> {
    let n = vertices.len();
    let mut adj = vec![Vec::new(); n];
    for t in triangles {
        for k in 0..3 {
            adj[t[k]].push(t[(k + 1) % 3]);
            adj[t[(k + 1) % 3]].push(t[k]);
        }
    }
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut roots = Vec::new();
    for s in 0..n {
        if parent[s] != usize::MAX {
            continue;
        }
        parent[s] = s;
        roots.push(s);
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            order.push(v);
            for &u in &adj[v] {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    q.push_back(u);
                }
            }
        }
    }
    let nodes = crate::quad::gauss_legendre_on(8, 0.0, 1.0);
    let incr: Result<Vec<Vec3>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let p = parent[v];
            if p == v {
                return wd.immerse(vertices[v]);
            }
            let a = vertices[p];
            let b = a + wrap(kind, vertices[v] - a);
            wd.short_segment_integral(a, b, &nodes)
        })
        .collect();
    let incr = incr?;
    let mut x = vec![[0.0; 3]; n];
    for &v in &order {
        let p = parent[v];
        x[v] = if p == v { incr[v] } else { [x[p][0] + incr[v][0], x[p][1] + incr[v][1], x[p][2] + incr[v][2]] };
    }
    Ok(x)
}

/// Samples every field on the given triangulation.
fn finish(
    wd: &WeierstrassData,
    vertices: Vec<C64>,
    triangles: Vec<[usize; 3]>,
    boundary_flags: Vec<VertexKind>,
    region: Region,
    kind: MeshKind,
) -> Result<ConformalMesh> {
    let fail = |e: Error| Error::MeshFailure(format!("field sampling failed: {e}"));
    let local: Result<Vec<(f64, f64, Vec3)>> = vertices
        .par_iter()
        .map(|&z| {
            let l = wd.lambda(z)?;
            let v = 2.0 * wd.kappa_lambda2(z)?;
            Ok((l * l, v, wd.unit_normal(z)?))
        })
        .collect();
    let positions = propagate_positions(wd, &vertices, &triangles, kind).map_err(fail)?;
    let samples: Vec<(f64, f64, Vec3, Vec3)> =
        local.map_err(fail)?.into_iter().zip(positions).map(|((l2, v, n), x)| (l2, v, x, n)).collect();
    let mut mesh = ConformalMesh {
        lambda2: samples.iter().map(|s| s.0).collect(),
        potential: samples.iter().map(|s| s.1.min(0.0)).collect(),
        weight: samples.iter().map(|s| l2star_weight(norm(&s.2)) * s.0).collect(),
        positions: samples.iter().map(|s| s.2).collect(),
        normals: samples.iter().map(|s| s.3).collect(),
        mirror: vec![0; vertices.len()],
        vertices,
        triangles,
        boundary_flags,
        tri_potential: vec![],
        region,
        kind,
    };
    if let MeshKind::Quarter { t } = kind {
        for (k, z) in mesh.vertices.iter().enumerate() {
            let mut b = 0;
            if z.re == 0.0 || z.re == 0.5 {
                b |= TAU1_LINE;
            }
            if z.im == 0.0 || z.im == 0.5 * t {
                b |= TAU2_LINE;
            }
            mesh.mirror[k] = b;
        }
    }
    for t in 0..mesh.triangles.len() {
        if mesh.signed_area(t) <= 0.0 {
            return Err(Error::MeshFailure(format!("triangle {t} is not positively oriented")));
        }
    }
    let tri_potential: Result<Vec<[f64; 6]>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let c = mesh.corners(t);
            let mut out = [0.0; 6];
            for (q, (b, _)) in TRI_RULE.iter().enumerate() {
                let z = c[0] * b[0] + c[1] * b[1] + c[2] * b[2];
                out[q] = (2.0 * wd.kappa_lambda2(z)?).min(0.0);
            }
            Ok(out)
        })
        .collect();
    mesh.tri_potential = tri_potential.map_err(fail)?;
    Ok(mesh)
}

/// Unit vector at angle θ, exact on the coordinate axes.
fn direction(theta: f64) -> C64 {
    let k = (theta / FRAC_PI_2).round();
    if (theta - k * FRAC_PI_2).abs() < 1e-12 {
        match (k as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, theta)
    }
}

/// Largest local radius r < rho with |X(p + r·dir)| = R, by bracketing
/// inward from rho and bisecting in log r.
fn exit_radius(wd: &WeierstrassData, p: &Puncture, dir: C64, rho: f64, r_ext: f64) -> Result<f64> {
    // X is carried inward along the ray by short segment integrals
    let z = |r: f64| local_chart(p, dir * r);
    let step = |r0: f64, x0: Vec3, r1: f64| -> Result<Vec3> {
        let d = wd.segment_integral(z(r0), z(r1))?;
        Ok([x0[0] + d[0], x0[1] + d[1], x0[2] + d[2]])
    };
    let mut hi = rho;
    let mut x_hi = wd.immerse(z(hi))?;
    if norm(&x_hi) >= r_ext {
        return Err(Error::MeshFailure(format!(
            "R = {r_ext} is too small: |X| already exceeds it at the patch radius {rho} around {p}"
        )));
    }
    let mut lo = hi;
    loop {
        lo /= 1.5;
        let x_lo = step(hi, x_hi, lo)?;
        if norm(&x_lo) >= r_ext {
            break;
        }
        if lo < 1e-14 {
            return Err(Error::MeshFailure(format!("|X| stays below {r_ext} near {p}")));
        }
        hi = lo;
        x_hi = x_lo;
    }
    for _ in 0..60 {
        let m = (lo * hi).sqrt();
        let x_m = step(hi, x_hi, m)?;
        if norm(&x_m) >= r_ext {
            lo = m;
        } else {
            hi = m;
            x_hi = x_m;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok(hi)
}

/// Structured log-polar grid around one puncture: `pts[j][i]`, ray j,
/// ring i, with i = 0 on the inner boundary and i = ns at radius rho.
struct PatchGrid {
    pts: Vec<Vec<C64>>,
    ns: usize,
}

fn patch_grid(
    wd: &WeierstrassData,
    p: &Puncture,
    thetas: &[f64],
    rho: f64,
    region: &Region,
) -> Result<PatchGrid> {
    let dirs: Vec<C64> = thetas.iter().map(|&t| direction(t)).collect();
    let inner: Result<Vec<f64>> = dirs
        .par_iter()
        .map(|&d| Ok(exit_radius(wd, p, d, rho, region.r)?.max(region.delta)))
        .collect();
    let inner = inner?;
    let worst = inner.iter().cloned().fold(0.0, f64::max);
    if worst > 0.7 * rho {
        return Err(Error::MeshFailure(format!(
            "R = {} leaves no room around {p}: inner radius {worst:.3e} vs patch radius {rho:.3e}",
            region.r
        )));
    }
    let span = inner.iter().map(|d| (rho / d).ln()).fold(0.0, f64::max);
    let ns = ((span / region.h).ceil() as usize).max(2);
    let pts = dirs
        .iter()
        .zip(&inner)
        .map(|(&d, &r0)| {
            let l = (rho / r0).ln();
            (0..=ns)
                .map(|i| {
                    let r = if i == ns { rho } else { r0 * (l * i as f64 / ns as f64).exp() };
                    local_chart(p, d * r)
                })
                .collect()
        })
        .collect();
    Ok(PatchGrid { pts, ns })
}

fn hex_points(lo: C64, hi: C64, s: f64, keep: impl Fn(C64) -> bool) -> Vec<C64> {
    let dy = s * 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let mut row = 0usize;
    let mut y = lo.im + 0.5 * dy;
    while y < hi.im {
        let mut x = lo.re + if row % 2 == 0 { 0.25 * s } else { 0.75 * s };
        while x < hi.re {
            let z = C64::new(x, y);
            if keep(z) {
                out.push(z);
            }
            x += s;
        }
        y += dy;
        row += 1;
    }
    out
}

/// Points strictly between a and b on the segment, about s apart.
fn segment_points(a: C64, b: C64, s: f64) -> Vec<C64> {
    let n = (((b - a).norm() / s).round() as usize).max(1);
    (1..n)
        .map(|k| {
            let f = k as f64 / n as f64;
            let mut z = a + (b - a) * f;
            // keep exact coordinates on axis-parallel segments
            if a.re == b.re {
                z.re = a.re;
            }
            if a.im == b.im {
                z.im = a.im;
            }
            z
        })
        .collect()
}

struct Builder {
    cdt: ConstrainedDelaunayTriangulation<Point2<f64>>,
    dirichlet: HashSet<(u64, u64)>,
}

impl Builder {
    fn new() -> Self {
        Builder { cdt: ConstrainedDelaunayTriangulation::new(), dirichlet: HashSet::new() }
    }

    fn insert(&mut self, z: C64) -> Result<spade::handles::FixedVertexHandle> {
        self.cdt
            .insert(Point2::new(z.re, z.im))
            .map_err(|e| Error::MeshFailure(format!("point insertion failed: {e:?}")))
    }

    fn polyline(&mut self, pts: &[C64], closed: bool) -> Result<()> {
        let hs: Result<Vec<_>> = pts.iter().map(|&z| self.insert(z)).collect();
        let hs = hs?;
        let n = hs.len();
        let m = if closed { n } else { n - 1 };
        for k in 0..m {
            let (a, b) = (hs[k], hs[(k + 1) % n]);
            if a != b && !self.cdt.can_add_constraint(a, b) {
                return Err(Error::MeshFailure("boundary curves intersect".into()));
            }
            if a != b {
                self.cdt.add_constraint(a, b);
            }
        }
        Ok(())
    }

    /// Refine, drop excluded faces, and classify boundary vertices: a boundary
    /// vertex is Dirichlet when it was marked so or when `natural` rejects it.
    fn finish(
        mut self,
        wd: &WeierstrassData,
        region: Region,
        kind: MeshKind,
        natural: impl Fn(C64) -> bool,
    ) -> Result<ConformalMesh> {
        let n0 = self.cdt.num_vertices();
        let params = RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .exclude_outer_faces(true)
            .with_max_additional_vertices(4 * n0 + 1000);
        let res = self.cdt.refine(params);
        if !res.refinement_complete {
            return Err(Error::MeshFailure("Delaunay refinement did not complete".into()));
        }
        let excluded: HashSet<_> = res.excluded_faces.into_iter().collect();
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for f in self.cdt.inner_faces() {
            if excluded.contains(&f.fix()) {
                continue;
            }
            let mut t = [0usize; 3];
            for (k, v) in f.vertices().iter().enumerate() {
                let id = v.fix().index();
                t[k] = *index.entry(id).or_insert_with(|| {
                    let p = v.position();
                    verts.push(C64::new(p.x, p.y));
                    verts.len() - 1
                });
            }
            tris.push(t);
        }
        if tris.is_empty() {
            return Err(Error::MeshFailure("empty region".into()));
        }
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut flags = vec![VertexKind::Interior; verts.len()];
        for (&(a, b), &c) in &count {
            if c == 1 {
                for v in [a, b] {
                    let z = verts[v];
                    if self.dirichlet.contains(&key(z)) || !natural(z) {
                        flags[v] = VertexKind::Dirichlet;
                    }
                }
            }
        }
        finish(wd, verts, tris, flags, region, kind)
    }
}

fn check_region(region: &Region) -> Result<()> {
    if !(region.r > 0.0 && region.h > 0.0 && region.h <= 1.0 && region.delta >= 0.0) {
        return Err(Error::InvalidInput(format!("bad region {region:?}")));
    }
    Ok(())
}

/// Mesh of {|X| ≤ R} minus delta-disks, Dirichlet on every boundary curve.
/// Plane charts are meshed directly; torus charts with punctures at the
/// half-lattice points 0, 1/2, it/2 are assembled from four reflected
/// quarter meshes.
pub fn build_mesh(wd: &WeierstrassData, r: f64, delta: f64, h: f64) -> Result<ConformalMesh> {
    let region = Region { r, delta, h };
    check_region(&region)?;
    match wd.chart {
        Chart::Plane => plane_mesh(wd, region),
        Chart::Torus { .. } => torus_from_quarter(wd, &quarter_mesh(wd, r, delta, h)?),
    }
}

fn plane_mesh(wd: &WeierstrassData, region: Region) -> Result<ConformalMesh> {
    if !wd.has_infinity() {
        return Err(Error::MeshFailure("plane chart without an end at infinity".into()));
    }
    let fp = wd.finite_punctures();
    let mut rho_f: f64 = 1.0;
    for (i, a) in fp.iter().enumerate() {
        for b in fp.iter().skip(i + 1) {
            rho_f = rho_f.min(0.4 * (a - b).norm());
        }
    }
    let rb = fp.iter().map(|p| p.norm()).fold(0.0, f64::max) + if fp.is_empty() { 1.0 } else { rho_f };
    let h = region.h;
    let n_theta = ((2.0 * PI / h).ceil() as usize).max(8);
    let thetas: Vec<f64> = (0..n_theta).map(|j| 2.0 * PI * j as f64 / n_theta as f64).collect();
    // a single puncture at 0 whose patch reaches the ∞ patch: share the ring
    let shared_ring = fp.len() == 1 && fp[0].norm() == 0.0 && (rb - rho_f).abs() < 1e-15;
    let mut b = Builder::new();
    let add_patch = |b: &mut Builder, p: Puncture, rho: f64, skip_outer: bool| -> Result<()> {
        let g = patch_grid(wd, &p, &thetas, rho, &region)?;
        let ring: Vec<C64> = g.pts.iter().map(|ray| ray[0]).collect();
        for z in &ring {
            b.dirichlet.insert(key(*z));
        }
        b.polyline(&ring, true)?;
        let top = if skip_outer { g.ns - 1 } else { g.ns };
        for ray in &g.pts {
            for z in &ray[1..=top] {
                b.insert(*z)?;
            }
        }
        Ok(())
    };
    for &p in &fp {
        add_patch(&mut b, Puncture::Finite(p), rho_f, false)?;
    }
    add_patch(&mut b, Puncture::Infinity, 1.0 / rb, shared_ring)?;
    if !shared_ring {
        let s = h * rho_f.min(rb);
        let pts = hex_points(C64::new(-rb, -rb), C64::new(rb, rb), s, |z| {
            z.norm() < rb - 0.5 * s && fp.iter().all(|p| (z - p).norm() > rho_f + 0.5 * s)
        });
        for z in pts {
            b.insert(z)?;
        }
    }
    b.finish(wd, region, MeshKind::Plane, |_| false)
}

fn half_lattice_punctures(wd: &WeierstrassData, t: f64) -> bool {
    let mut want = vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.5 * t)];
    let fp = wd.finite_punctures();
    if fp.len() != 3 {
        return false;
    }
    for p in fp {
        match want.iter().position(|w| (w - p).norm() < 1e-12) {
            Some(k) => {
                want.remove(k);
            }
            None => return false,
        }
    }
    true
}

/// Mesh of the quarter [0, 1/2] × [0, t/2] minus neighborhoods of the corner
/// punctures 0, 1/2, it/2. The rectangle sides are natural boundary; the
/// curves |X| = R around the punctures are Dirichlet.
pub fn quarter_mesh(wd: &WeierstrassData, r: f64, delta: f64, h: f64) -> Result<ConformalMesh> {
    let region = Region { r, delta, h };
    check_region(&region)?;
    let t = match wd.chart {
        Chart::Torus { t } => t,
        Chart::Plane => return Err(Error::InvalidInput("quarter meshes live on torus charts".into())),
    };
    if !half_lattice_punctures(wd, t) {
        return Err(Error::MeshFailure("quarter meshing needs punctures exactly at 0, 1/2, it/2".into()));
    }
    let rho = 0.2 * t.min(1.0);
    let s = h * rho;
    let wedge = |a: f64, b: f64| -> Vec<f64> {
        let n = (((b - a) / h).ceil() as usize).max(2);
        (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect()
    };
    let c0 = Puncture::Finite(C64::new(0.0, 0.0));
    let c1 = Puncture::Finite(C64::new(0.5, 0.0));
    let c2 = Puncture::Finite(C64::new(0.0, 0.5 * t));
    let g0 = patch_grid(wd, &c0, &wedge(0.0, FRAC_PI_2), rho, &region)?;
    let g1 = patch_grid(wd, &c1, &wedge(FRAC_PI_2, PI), rho, &region)?;
    let g2 = patch_grid(wd, &c2, &wedge(-FRAC_PI_2, 0.0), rho, &region)?;
    let last = |g: &PatchGrid| g.pts.len() - 1;
    let ray = |g: &PatchGrid, j: usize| g.pts[j].clone();
    let rev = |mut v: Vec<C64>| {
        v.reverse();
        v
    };
    let arc = |g: &PatchGrid| -> Vec<C64> { (1..last(g)).rev().map(|j| g.pts[j][0]).collect() };
    let corner = C64::new(0.5, 0.5 * t);
    let mut lp: Vec<C64> = Vec::new();
    lp.extend(ray(&g0, 0));
    lp.extend(segment_points(C64::new(rho, 0.0), C64::new(0.5 - rho, 0.0), s));
    lp.extend(rev(ray(&g1, last(&g1))));
    lp.extend(arc(&g1));
    lp.extend(ray(&g1, 0));
    lp.extend(segment_points(C64::new(0.5, rho), corner, s));
    lp.push(corner);
    lp.extend(segment_points(corner, C64::new(rho, 0.5 * t), s));
    lp.extend(rev(ray(&g2, last(&g2))));
    lp.extend(arc(&g2));
    lp.extend(ray(&g2, 0));
    lp.extend(segment_points(C64::new(0.0, 0.5 * t - rho), C64::new(0.0, rho), s));
    lp.extend(rev(ray(&g0, last(&g0))));
    lp.extend(arc(&g0));
    let mut b = Builder::new();
    for g in [&g0, &g1, &g2] {
        for ray in &g.pts {
            b.dirichlet.insert(key(ray[0]));
        }
    }
    b.polyline(&lp, true)?;
    for g in [&g0, &g1, &g2] {
        for ray in &g.pts[1..last(g)] {
            for z in &ray[1..] {
                b.insert(*z)?;
            }
        }
    }
    let centres = [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.5 * t)];
    let m = 0.5 * s;
    for z in hex_points(C64::new(0.0, 0.0), C64::new(0.5, 0.5 * t), s, |z| {
        z.re > m && z.re < 0.5 - m && z.im > m && z.im < 0.5 * t - m && centres.iter().all(|c| (z - c).norm() > rho + m)
    }) {
        b.insert(z)?;
    }
    let on_side = move |z: C64| z.re == 0.0 || z.re == 0.5 || z.im == 0.0 || z.im == 0.5 * t;
    b.finish(wd, region, MeshKind::Quarter { t }, on_side)
}

/// The four images of a quarter mesh under z ↦ ±z, ±z̄, glued into a
/// periodic mesh of the whole torus.
pub fn torus_from_quarter(wd: &WeierstrassData, q: &ConformalMesh) -> Result<ConformalMesh> {
    let t = match q.kind {
        MeshKind::Quarter { t } => t,
        _ => return Err(Error::InvalidInput("expected a quarter mesh".into())),
    };
    let kind = MeshKind::Torus { t };
    let maps: [(fn(C64) -> C64, bool); 4] = [
        (|z| z, false),
        (|z| -z.conj(), true),
        (|z| z.conj(), true),
        (|z| -z, false),
    ];
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut flags = Vec::new();
    let mut tris = Vec::new();
    for (f, flips) in maps {
        let ids: Vec<usize> = q
            .vertices
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let w = normalize(kind, f(z));
                *index.entry(key(w)).or_insert_with(|| {
                    verts.push(w);
                    flags.push(q.boundary_flags[k]);
                    verts.len() - 1
                })
            })
            .collect();
        for tri in &q.triangles {
            let m = [ids[tri[0]], ids[tri[1]], ids[tri[2]]];
            tris.push(if flips { [m[0], m[2], m[1]] } else { m });
        }
    }
    finish(wd, verts, tris, flags, q.region, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{catenoid, enneper, plane};

    #[test]
    fn plane_disk_has_zero_potential() {
        let m = build_mesh(&plane(), 10.0, 0.0, 0.3).unwrap();
        assert!(m.potential.iter().all(|&v| v == 0.0));
        assert!(m.min_angle_deg() >= 15.0);
    }

    #[test]
    fn catenoid_boundary_lies_on_the_sphere_of_radius_r() {
        let r = 10.0;
        let h = 0.25;
        let m = build_mesh(&catenoid(), r, 0.0, h).unwrap();
        assert!(m.min_angle_deg() >= 15.0, "{}", m.min_angle_deg());
        for (k, x) in m.positions.iter().enumerate() {
            if m.boundary_flags[k] == VertexKind::Dirichlet {
                assert!((norm(x) - r).abs() / r < 2.0 * h, "{}", norm(x));
            } else {
                assert!(norm(x) <= r * (1.0 + 1e-9));
            }
        }
        // the annulus is roughly c/R ≤ |z| ≤ R/c with c ≈ 1/2
        let rmax = m.vertices.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let rmin = m.vertices.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(rmax > r && rmax < 4.0 * r, "{rmax}");
        assert!(rmin < 1.0 / r && rmin > 0.25 / r, "{rmin}");
    }

    #[test]
    fn uniform_refinement_quadruples_triangles() {
        let wd = enneper(1);
        let m = build_mesh(&wd, 20.0, 0.0, 0.4).unwrap();
        let f = m.refine_uniform(&wd).unwrap();
        assert_eq!(f.triangles.len(), 4 * m.triangles.len());
        // rebuilding at h/2 lands near the same factor
        let m2 = build_mesh(&wd, 20.0, 0.0, 0.2).unwrap();
        let ratio = m2.triangles.len() as f64 / m.triangles.len() as f64;
        assert!((ratio / 4.0 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn costa_quarter_reflects_to_a_closed_torus_mesh() {
        let wd = crate::surface::costa(1.0).unwrap();
        let q = quarter_mesh(&wd, 20.0, 0.0, 0.3).unwrap();
        assert!(q.min_angle_deg() >= 15.0, "{}", q.min_angle_deg());
        assert!(q.mirror.iter().any(|&b| b == TAU1_LINE) && q.mirror.iter().any(|&b| b == TAU2_LINE));
        let m = torus_from_quarter(&wd, &q).unwrap();
        let inner = m.boundary_edges();
        // only the curves around the punctures remain as boundary
        for (a, b) in inner {
            assert_eq!(m.boundary_flags[a], VertexKind::Dirichlet);
            assert_eq!(m.boundary_flags[b], VertexKind::Dirichlet);
        }
        let area: f64 = (0..m.triangles.len()).map(|t| m.signed_area(t)).sum();
        let qa: f64 = (0..q.triangles.len()).map(|t| q.signed_area(t)).sum();
        assert!((area - 4.0 * qa).abs() < 1e-12);
        assert!(m.potential.iter().all(|&v| v <= 0.0));
    }
}
