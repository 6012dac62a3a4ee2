use crate::config::{AuditSpec, EnumerateSpec, RunConfig, SurfaceSpec, TopologySpec};
use crate::report::{Check, Outcome, Table};
use anyhow::{bail, Context, Result};
use minsurf::forms::basis::basis_topology;
use minsurf::forms::{
    contradiction_replay, costa_parity_dims, harmonic_dimension, holomorphic_basis, parity_decomposition,
    parity_type_of, LemmaSystem, ModelForm,
};
use minsurf::spectral::{
    assemble_q, build_mesh, index_estimate, negative_inertia, nodal_domain_count, nodal_domain_count_with_zero_set,
    parity_counts, quarter_mesh, rotational_jacobi_field, torus_from_quarter, weighted_eigenpairs, Schedule, VertexKind,
};
use minsurf::surface::{
    curvature_decay, end_analysis, jorge_meeks_total_curvature, normal_gradient_bound_check, total_curvature,
    CurvatureDecay, EndData, NormalGradientReport, QuadSpec, TotalCurvature, WeierstrassData,
};
use minsurf::topology::{
    bound_report, enumerate_feasible, index_lower_bound, sandwich, BoundReport, FeasibilityConstraints, Literature,
    Sandwich, Sidedness, SurfaceTopology,
};
use serde::Serialize;

fn surface_spec(cfg: &RunConfig) -> Result<&SurfaceSpec> {
    cfg.surface.as_ref().context("no surface given (positional name or [surface] in the config)")
}

fn f(x: f64) -> String {
    format!("{x:.12e}")
}

/// Genus zero with one end of odd multiplicity d ≥ 5 is the Enneper
/// family, for which a competing closed form circulates.
fn enneper_note(t: &SurfaceTopology, b: &BoundReport) -> Option<String> {
    if t.sided != Sidedness::Two || t.genus != 0 || t.ends != 1 {
        return None;
    }
    let d = t.multiplicities[0];
    if d < 5 || d % 2 == 0 {
        return None;
    }
    let k = (d - 1) / 2;
    Some(format!(
        "Enneper order k = {k}: the lower bound (2k+1)/3 = {}/3 is sometimes quoted for this family; \
         substituting the computed multiplicity d = {d} gives {} (= (4k-1)/3). Reported values use the latter.",
        2 * k + 1,
        b.lower
    ))
}

fn sorted(mut d: Vec<u32>) -> Vec<u32> {
    d.sort_unstable_by(|a, b| b.cmp(a));
    d
}

// ---------------------------------------------------------------------------
// surface

#[derive(Serialize)]
struct EndReport {
    data: EndData,
    curvature_decay: Option<CurvatureDecay>,
    normal_gradient: NormalGradientReport,
}

#[derive(Serialize)]
struct SurfaceReport {
    name: String,
    params: Vec<(String, f64)>,
    genus: u32,
    ends: Vec<EndReport>,
    multiplicities: Vec<u32>,
    total_curvature: TotalCurvature,
    jorge_meeks: f64,
    bounds: BoundReport,
}

pub fn surface(cfg: &RunConfig) -> Result<Outcome> {
    let wd = surface_spec(cfg)?.build()?;
    let tol = cfg.tolerances;
    let mut checks = Vec::new();
    let mut ends = Vec::new();
    let mut table = Table::new(&[
        "puncture",
        "multiplicity",
        "winding",
        "gauss_order",
        "decay_fitted",
        "decay_predicted",
        "normal_exponent",
        "normal_required",
    ]);
    for p in &wd.punctures {
        let data = end_analysis(&wd, p)?;
        // a constant Gauss map has no curvature to fit
        let decay = if data.gauss_order > 0 { Some(curvature_decay(&wd, &data)?) } else { None };
        let ng = normal_gradient_bound_check(&wd, &data)?;
        if let Some(d) = &decay {
            let rel = (d.fitted / d.predicted - 1.0).abs();
            checks.push(Check::new(
                &format!("curvature decay at {p}"),
                rel <= tol.decay_exponent,
                format!("fitted {:.4}, predicted {:.4}", d.fitted, d.predicted),
            ));
        }
        checks.push(Check::new(
            &format!("normal gradient at {p}"),
            ng.pass,
            format!("exponent {:?}, required {:.3}", ng.exponent, ng.required),
        ));
        table.push(vec![
            p.to_string(),
            data.multiplicity.to_string(),
            data.winding.to_string(),
            data.gauss_order.to_string(),
            decay.as_ref().map(|d| f(d.fitted)).unwrap_or_default(),
            decay.as_ref().map(|d| f(d.predicted)).unwrap_or_default(),
            ng.exponent.map(f).unwrap_or_default(),
            f(ng.required),
        ]);
        ends.push(EndReport { data, curvature_decay: decay, normal_gradient: ng });
    }
    let mult: Vec<u32> = ends.iter().map(|e| e.data.multiplicity).collect();
    let tc = total_curvature(&wd, &QuadSpec::default())?;
    let jm = jorge_meeks_total_curvature(&wd, &mult);
    let scale = jm.abs().max(4.0 * std::f64::consts::PI);
    checks.push(Check::new(
        "total curvature",
        (tc.value - jm).abs() <= tol.total_curvature * scale,
        format!("quadrature {:.9}, quantized {:.9}", tc.value, jm),
    ));
    let genus = if wd.lattice_t().is_some() { 1 } else { 0 };
    let topo = SurfaceTopology::two_sided(genus, &sorted(mult.clone()));
    let bounds = bound_report(&topo)?;
    let mut notes = Vec::new();
    notes.extend(enneper_note(&topo, &bounds));
    let report = SurfaceReport {
        name: wd.name.clone(),
        params: wd.params.clone(),
        genus,
        ends,
        multiplicities: mult,
        total_curvature: tc,
        jorge_meeks: jm,
        bounds,
    };
    let mut out = Outcome::new(report, table)?;
    out.checks = checks;
    out.notes = notes;
    Ok(out)
}

// ---------------------------------------------------------------------------
// bound, sandwich

fn topology_of(cfg: &RunConfig) -> Result<SurfaceTopology> {
    if let Some(t) = &cfg.topology {
        if !t.multiplicities.is_empty() {
            let sided = if t.one_sided { Sidedness::One } else { Sidedness::Two };
            return Ok(SurfaceTopology::new(t.genus, sorted(t.multiplicities.clone()), sided)?);
        }
    }
    if cfg.surface.is_some() {
        let wd = surface_spec(cfg)?.build()?;
        let t = basis_topology(&wd)?;
        return Ok(SurfaceTopology::new(t.genus, sorted(t.multiplicities), t.sided)?);
    }
    bail!("no topology given: pass --d (and --g, --one-sided) or a surface name")
}

#[derive(Serialize)]
struct KnownCheck {
    name: String,
    index: i64,
    citation: String,
    consistent: bool,
}

#[derive(Serialize)]
struct BoundOut {
    bounds: BoundReport,
    known: Vec<KnownCheck>,
}

pub fn bound(cfg: &RunConfig) -> Result<Outcome> {
    let t = topology_of(cfg)?;
    let b = bound_report(&t)?;
    let lit = Literature::builtin();
    let mut checks = Vec::new();
    let mut known = Vec::new();
    for k in lit.known_for(&t) {
        let mut ok = k.index >= b.lower_ceil;
        if let Some(u) = b.upper {
            ok &= u >= minsurf::topology::Q::from_integer(k.index);
        }
        checks.push(Check::new(
            &format!("known index of {}", k.name),
            ok,
            format!("index {} against lower {} upper {:?}", k.index, b.lower, b.upper.map(|u| u.to_string())),
        ));
        known.push(KnownCheck { name: k.name.clone(), index: k.index, citation: k.citation.clone(), consistent: ok });
    }
    let mut table = Table::new(&["genus", "multiplicities", "sided", "lower", "lower_ceil", "upper", "formula"]);
    table.push(vec![
        t.genus.to_string(),
        fmt_d(&t.multiplicities),
        format!("{:?}", t.sided).to_lowercase(),
        b.lower.to_string(),
        b.lower_ceil.to_string(),
        b.upper.map(|u| u.to_string()).unwrap_or_default(),
        format!("{:?}", b.formula_used),
    ]);
    let note = enneper_note(&t, &b);
    let mut out = Outcome::new(BoundOut { bounds: b, known }, table)?;
    out.checks = checks;
    out.notes.extend(note);
    Ok(out)
}

fn fmt_d(d: &[u32]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct SandwichOut {
    topology: SurfaceTopology,
    sandwich: Sandwich,
    lower_ceil: i64,
    upper_floor: i64,
    known: Vec<KnownCheck>,
}

pub fn sandwich_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let t = topology_of(cfg)?;
    let s = sandwich(&t)?;
    let lit = Literature::builtin();
    let mut checks = Vec::new();
    let mut known = Vec::new();
    for k in lit.known_for(&t) {
        let ok = s.contains(k.index);
        checks.push(Check::new(
            &format!("sandwich contains {}", k.name),
            ok,
            format!("{} ≤ {} ≤ {}", s.lower, k.index, s.upper),
        ));
        known.push(KnownCheck { name: k.name.clone(), index: k.index, citation: k.citation.clone(), consistent: ok });
    }
    let mut table = Table::new(&["genus", "multiplicities", "lower", "upper", "total_curvature_over_pi"]);
    table.push(vec![
        t.genus.to_string(),
        fmt_d(&t.multiplicities),
        s.lower.to_string(),
        s.upper.to_string(),
        s.total_curvature_over_pi.to_string(),
    ]);
    let lower_ceil = minsurf::topology::ceil_q(s.lower);
    let upper_floor = s.upper.floor().to_integer();
    let mut out = Outcome::new(SandwichOut { topology: t, sandwich: s, lower_ceil, upper_floor, known }, table)?;
    out.checks = checks;
    Ok(out)
}

// ---------------------------------------------------------------------------
// enumerate

pub fn enumerate(cfg: &RunConfig) -> Result<Outcome> {
    let e: EnumerateSpec = cfg.enumerate.clone().unwrap_or_default();
    let lit = Literature::builtin();
    let mut c = FeasibilityConstraints {
        nonflat: e.nonflat,
        embedded: e.embedded,
        min_ends: e.min_ends,
        min_genus: e.min_genus,
        ..Default::default()
    };
    if e.min_ends > 0 || e.min_genus > 0 {
        c.provenance.push(format!("min_ends = {}, min_genus = {}: supplied on the command line", e.min_ends, e.min_genus));
    }
    for id in &e.presets {
        c = c.with_preset(&lit.preset(id)?);
    }
    for id in &e.exclude {
        c.excluded_topologies.push(lit.exclusion(id)?);
    }
    let sided = if e.one_sided { Sidedness::One } else { Sidedness::Two };
    let en = enumerate_feasible(e.budget, sided, &c);
    let mut table = Table::new(&["genus", "ends", "multiplicities", "sided", "lower"]);
    for t in &en.topologies {
        table.push(vec![
            t.genus.to_string(),
            t.ends.to_string(),
            fmt_d(&t.multiplicities),
            format!("{:?}", t.sided).to_lowercase(),
            index_lower_bound(t).to_string(),
        ]);
    }
    Outcome::new(en, table)
}

// ---------------------------------------------------------------------------
// index

#[derive(Serialize)]
struct IndexOut {
    spectral: minsurf::spectral::SpectralReport,
    eigenfunctions: Option<String>,
    mesh: Option<String>,
}

#[derive(Serialize)]
struct MeshDump<'a> {
    vertices: Vec<[f64; 2]>,
    positions: &'a [[f64; 3]],
    triangles: &'a [[usize; 3]],
    dirichlet: Vec<bool>,
}

pub fn index(cfg: &RunConfig) -> Result<Outcome> {
    let wd = surface_spec(cfg)?.build()?;
    let schedule = cfg.schedule.clone().unwrap_or_default();
    let rep = index_estimate(&wd, &schedule)?;
    let mut table = Table::new(&["stage", "r", "delta", "h", "vertices", "count", "lowest_eigenvalue", "perturbed"]);
    for (k, st) in rep.schedule.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            f(st.r),
            f(st.delta),
            f(st.h),
            rep.vertices[k].to_string(),
            rep.counts[k].to_string(),
            rep.lowest_eigs[k].first().map(|&v| f(v)).unwrap_or_default(),
            rep.perturbed[k].to_string(),
        ]);
    }
    let mut checks = vec![Check::new(
        "counts never decrease",
        rep.counts.windows(2).all(|w| w[0] <= w[1]),
        format!("{:?}", rep.counts),
    )];
    let outputs = cfg.index.clone().unwrap_or_default();
    if outputs.eigenfunctions.is_some() || outputs.mesh.is_some() {
        let last = rep.schedule.last().context("empty schedule")?;
        let mesh = build_mesh(&wd, last.r, last.delta, last.h)?;
        if let Some(path) = &outputs.eigenfunctions {
            let pairs = weighted_eigenpairs(&mesh, outputs.eigenfunction_count)?;
            write_eigenfunctions(path, &mesh, &pairs)?;
        }
        if let Some(path) = &outputs.mesh {
            let dump = MeshDump {
                vertices: mesh.vertices.iter().map(|z| [z.re, z.im]).collect(),
                positions: &mesh.positions,
                triangles: &mesh.triangles,
                dirichlet: mesh.boundary_flags.iter().map(|k| *k == VertexKind::Dirichlet).collect(),
            };
            std::fs::write(path, serde_json::to_string(&dump)? + "\n").with_context(|| format!("writing {path}"))?;
        }
    }
    if let (Some(est), Some(known)) = (rep.index_estimate, known_index(&wd)) {
        checks.push(Check::new("matches known index", est as i64 == known, format!("estimate {est}, known {known}")));
    }
    let nonconvergent = !rep.stabilized;
    let mut out = Outcome::new(IndexOut { spectral: rep, eigenfunctions: outputs.eigenfunctions, mesh: outputs.mesh }, table)?;
    out.checks = checks;
    out.nonconvergent = nonconvergent;
    if nonconvergent {
        out.notes.push("counts did not stabilize over the last three stages; extend the schedule".into());
    }
    Ok(out)
}

fn known_index(wd: &WeierstrassData) -> Option<i64> {
    let t = basis_topology(wd).ok()?;
    let t = SurfaceTopology::new(t.genus, sorted(t.multiplicities), t.sided).ok()?;
    let lit = Literature::builtin();
    let name = match wd.name.as_str() {
        n if n.starts_with("enneper") => format!("enneper-{}", wd.params.iter().find(|p| p.0 == "k")?.1 as u32),
        n if n.starts_with("costa") && wd.params.iter().any(|p| p.0 == "t" && p.1 == 1.0) => "costa".into(),
        "catenoid" => "catenoid".into(),
        _ => return None,
    };
    lit.known_for(&t).into_iter().find(|k| k.name == name).map(|k| k.index)
}

fn write_eigenfunctions(
    path: &str,
    mesh: &minsurf::spectral::ConformalMesh,
    pairs: &[minsurf::spectral::Eigenpair],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {path}"))?;
    let mut header = vec!["re".to_string(), "im".into(), "x1".into(), "x2".into(), "x3".into()];
    header.extend(pairs.iter().enumerate().map(|(k, p)| format!("f{k} (mu={:.9e})", p.value)));
    w.write_record(&header)?;
    for (i, z) in mesh.vertices.iter().enumerate() {
        let x = mesh.positions[i];
        let mut row = vec![f(z.re), f(z.im), f(x[0]), f(x[1]), f(x[2])];
        row.extend(pairs.iter().map(|p| f(p.vector[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// forms

#[derive(Serialize)]
struct FormsOut {
    basis: minsurf::forms::HolomorphicBasis,
    dimension: minsurf::forms::HarmonicDimension,
    parity: Option<minsurf::forms::CostaParityDims>,
    decomposition: Option<minsurf::forms::ParityDecomposition>,
}

fn is_costa(wd: &WeierstrassData) -> Option<f64> {
    (wd.name.starts_with("costa")).then(|| wd.lattice_t()).flatten()
}

pub fn forms(cfg: &RunConfig) -> Result<Outcome> {
    let wd = surface_spec(cfg)?.build()?;
    let tol = cfg.tolerances;
    let basis = holomorphic_basis(&wd)?;
    let dim = harmonic_dimension(&basis.topology);
    let mut checks = vec![
        Check::new(
            "basis spans the harmonic space",
            basis.harmonic_dim as i64 == dim.dim,
            format!("{} real forms, formula {} = {}", basis.harmonic_dim, dim.formula, dim.dim),
        ),
        Check::new("residues sum to zero", basis.residue_sum <= tol.residue, format!("{:.3e}", basis.residue_sum)),
        Check::new(
            "Gram matrix nonsingular",
            basis.gram.condition_number.is_finite() && basis.gram.min_eig > 0.0,
            format!("condition number {:.6e}", basis.gram.condition_number),
        ),
    ];
    let mut table = Table::new(&["form", "pole_orders"]);
    for (l, po) in basis.labels.iter().zip(&basis.pole_orders) {
        let s: Vec<String> = wd.punctures.iter().zip(po).map(|(p, o)| format!("{p}:{o}")).collect();
        table.push(vec![l.clone(), s.join(" ")]);
    }
    let (parity, decomposition) = match is_costa(&wd) {
        Some(t) => {
            let p = costa_parity_dims(t)?;
            let d = parity_decomposition(&wd, &basis)?;
            checks.push(Check::new(
                "parity counts agree with reflection traces",
                p.tilde == d.tilde && p.dims == d.dims,
                format!("counted {:?}/{:?}, traced {:?}/{:?}", p.tilde, p.dims, d.tilde, d.dims),
            ));
            checks.push(Check::new(
                "parity spaces are L²*-orthogonal",
                d.max_cross_parity_inner <= tol.cross_parity,
                format!("{:.3e}", d.max_cross_parity_inner),
            ));
            (Some(p), Some(d))
        }
        None => (None, None),
    };
    let mut out = Outcome::new(FormsOut { basis, dimension: dim, parity, decomposition }, table)?;
    out.checks = checks;
    Ok(out)
}

// ---------------------------------------------------------------------------
// costa-audit

#[derive(Serialize)]
struct ModelRow {
    form: &'static str,
    parity: String,
}

#[derive(Serialize)]
struct AuditOut {
    spec: AuditSpec,
    parity_table: Vec<ModelRow>,
    dims: minsurf::forms::CostaParityDims,
    decomposition: minsurf::forms::ParityDecomposition,
    restricted_counts: minsurf::spectral::ParityCounts,
    full_torus_count: usize,
    quarter_vertices: usize,
    nodal_domains: usize,
    nodal_domains_sign_rule: usize,
    inequalities: Vec<String>,
    computed_counts_violations: Vec<String>,
    replay: minsurf::forms::Replay,
}

pub fn costa_audit(cfg: &RunConfig) -> Result<Outcome> {
    let a = cfg.audit.clone().unwrap_or_default();
    let wd = minsurf::surface::costa(a.t)?;
    let tol = cfg.tolerances;
    let mut checks = Vec::new();

    let parity_table: Vec<ModelRow> =
        [ModelForm::LogRadial, ModelForm::LogAngular, ModelForm::InverseSquareRe, ModelForm::InverseSquareIm]
            .into_iter()
            .map(|m| Ok(ModelRow { form: m.expr(), parity: parity_type_of(m)?.label() }))
            .collect::<Result<_>>()?;

    let dims = costa_parity_dims(a.t)?;
    let basis = holomorphic_basis(&wd)?;
    let decomposition = parity_decomposition(&wd, &basis)?;
    checks.push(Check::new(
        "parity dims by counting and by reflection traces",
        dims.dims == decomposition.dims && dims.tilde == decomposition.tilde,
        format!("{:?} / {:?}", dims.dims, decomposition.dims),
    ));
    checks.push(Check::new(
        "parity spaces are L²*-orthogonal",
        decomposition.max_cross_parity_inner <= tol.cross_parity,
        format!("{:.3e}", decomposition.max_cross_parity_inner),
    ));

    let q = quarter_mesh(&wd, a.r, 0.0, a.h)?;
    let pc = parity_counts(&q)?;
    let full = torus_from_quarter(&wd, &q)?;
    let n = negative_inertia(&assemble_q(&full).0)?;
    checks.push(Check::new(
        "restricted counts sum to the full count",
        pc.total == n,
        format!("{} restricted, {} on the full torus", pc.total, n),
    ));
    checks.push(Check::new("index at least 4", pc.total >= 4, format!("{}", pc.total)));
    if let Some(k) = known_index(&wd) {
        checks.push(Check::new("matches known index", pc.total as i64 == k, format!("{} vs {k}", pc.total)));
    }

    let phi = rotational_jacobi_field(&full);
    let nodal = nodal_domain_count_with_zero_set(&full, &phi, a.zero_tol);
    let nodal_sign = nodal_domain_count(&full, &phi);

    let sys = LemmaSystem::for_costa(a.t)?;
    let inequalities: Vec<String> = sys.inequalities().iter().map(|i| i.to_string()).collect();
    let w: [usize; 4] = std::array::from_fn(|k| pc.counts[k].1);
    let violations: Vec<String> = sys.violations(&w).iter().map(|i| i.to_string()).collect();
    checks.push(Check::new(
        "computed counts satisfy the inequalities",
        violations.is_empty(),
        format!("w = {w:?}"),
    ));
    // index 3 is the case the argument rules out; w⁻⁻ = 0 is its nodal input
    let replay = contradiction_replay(&sys, 3, 0);
    checks.push(Check::new(
        "index 3 replay ends in contradiction",
        replay.contradiction,
        format!("solutions {:?}, with w-- = 0: {:?}", replay.solutions, replay.solutions_with_nodal),
    ));

    let mut table = Table::new(&["parity", "tilde_dim", "dim", "restricted_count"]);
    for k in 0..4 {
        table.push(vec![
            pc.counts[k].0.clone(),
            dims.tilde[k].to_string(),
            dims.dims[k].to_string(),
            pc.counts[k].1.to_string(),
        ]);
    }
    let rep = AuditOut {
        spec: a,
        parity_table,
        dims,
        decomposition,
        restricted_counts: pc,
        full_torus_count: n,
        quarter_vertices: q.num_vertices(),
        nodal_domains: nodal,
        nodal_domains_sign_rule: nodal_sign,
        inequalities,
        computed_counts_violations: violations,
        replay,
    };
    let mut out = Outcome::new(rep, table)?;
    out.checks = checks;
    out.notes.push(
        "nodal_domains drops |φ| ≤ zero_tol·max|φ| as the zero set; nodal_domains_sign_rule assigns exact zeros to the positive side"
            .into(),
    );
    Ok(out)
}

pub fn default_schedule() -> Schedule {
    Schedule::default()
}

pub fn topology_spec(g: Option<u32>, d: &[u32], one_sided: bool) -> Option<TopologySpec> {
    (!d.is_empty()).then(|| TopologySpec { genus: g.unwrap_or(0), multiplicities: d.to_vec(), one_sided })
}
