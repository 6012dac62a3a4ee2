//! One line per acceptance criterion, then a non-zero exit if any failed.
//! Run with `cargo test --release --test acceptance`.

use minsurf::complexfn::{RectLattice, C64};
use minsurf::forms::basis::basis_topology;
use minsurf::forms::*;
use minsurf::spectral::*;
use minsurf::surface::*;
use minsurf::topology::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn lib<T>(r: minsurf::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn stable_tail(counts: &[usize]) -> bool {
    counts.len() >= 3 && counts[counts.len() - 3..].windows(2).all(|w| w[0] == w[1])
}

fn c1_catenoid_index() -> Outcome {
    let start = Instant::now();
    let s = Schedule::default();
    ensure(s.radii.iter().all(|&r| r <= 160.0), "schedule exceeds R = 160")?;
    let rep = lib(index_estimate(&catenoid(), &s))?;
    let secs = start.elapsed().as_secs_f64();
    let vmax = *rep.vertices.iter().max().unwrap();
    let b = lib(bound_report(&SurfaceTopology::two_sided(0, &[1, 1])))?;
    ensure(rep.index_estimate == Some(1) && stable_tail(&rep.counts), format!("counts {:?}", rep.counts))?;
    ensure(vmax <= 200_000, format!("{vmax} vertices"))?;
    ensure(secs <= 300.0, format!("{secs:.0} s"))?;
    ensure(b.lower == q(1) && b.upper == Some(q(1)), format!("bounds {} / {:?}", b.lower, b.upper))?;
    Ok(format!("counts {:?}, ≤ {vmax} vertices, {secs:.1} s; bounds [1, 1]", rep.counts))
}

fn c2_enneper_index() -> Outcome {
    let mut parts = Vec::new();
    for k in [1u32, 2] {
        let start = Instant::now();
        let rep = lib(index_estimate(&enneper(k), &Schedule::default()))?;
        let secs = start.elapsed().as_secs_f64();
        let want = 2 * k as usize - 1;
        ensure(
            stable_tail(&rep.counts) && rep.index_estimate == Some(want),
            format!("k = {k}: counts {:?}, want {want}", rep.counts),
        )?;
        ensure(secs <= 900.0, format!("k = {k}: {secs:.0} s"))?;
        parts.push(format!("k={k}: {:?} ({secs:.1} s)", rep.counts));
    }
    Ok(parts.join("; "))
}

fn c3_total_curvature() -> Outcome {
    // (surface, genus, multiplicities) with the multiplicities taken from
    // the known classification, not from the end analysis
    let cases = vec![
        (plane(), 0, vec![1]),
        (catenoid(), 0, vec![1, 1]),
        (enneper(1), 0, vec![3]),
        (enneper(2), 0, vec![5]),
        (lib(costa(1.0))?, 1, vec![1, 1, 1]),
    ];
    let mut parts = Vec::new();
    for (wd, g, d) in cases {
        let tc = lib(total_curvature(&wd, &QuadSpec::default()))?;
        let t = SurfaceTopology::two_sided(g, &d);
        let want = -4.0 * PI * to_f64(jorge_meeks_degree(&t));
        // the plane's prediction is 0; measure it against one 4π quantum
        let rel = (tc.value - want).abs() / want.abs().max(4.0 * PI);
        ensure(rel <= 0.01, format!("{}: {} vs {want}", wd.name, tc.value))?;
        parts.push(format!("{} {:.1e}", wd.name, rel));
    }
    Ok(format!("relative errors: {}", parts.join(", ")))
}

const EXPECTED_CASE_SPLIT: &[&str] = &[
    "lower bound ≤ 2 requires 2g + 2Σ(dⱼ+1) ≤ 11",
    "nonflat: Σ(dⱼ+1) ≥ 4",
    "constraint: g ≥ 1",
    "g = 1: Σ(dⱼ+1) ≤ 4",
    "  r = 1, d = (3): feasible, lower bound 5/3",
    "  r = 1, d = (2): rejected, Σ(dⱼ+1) = 3 < 4 is flat",
    "  r = 1, d = (1): rejected, Σ(dⱼ+1) = 2 < 4 is flat",
    "  r = 2, d = (1,1): feasible, lower bound 5/3",
    "g = 2: Σ(dⱼ+1) ≤ 3",
    "  r = 1, d = (2): rejected, Σ(dⱼ+1) = 3 < 4 is flat",
    "  r = 1, d = (1): rejected, Σ(dⱼ+1) = 2 < 4 is flat",
    "g = 2: no candidate survives",
    "g = 3: Σ(dⱼ+1) ≤ 2",
    "  r = 1, d = (1): rejected, Σ(dⱼ+1) = 2 < 4 is flat",
    "g = 3: no candidate survives",
    "g = 4: Σ(dⱼ+1) ≤ 1 < 2, no topology; g ≤ 3 is exhaustive",
];

fn c4_bound_formulas() -> Outcome {
    let cat = lib(bound_report(&SurfaceTopology::two_sided(0, &[1, 1])))?;
    ensure(cat.lower == q(1), format!("catenoid lower {}", cat.lower))?;
    let costa_like = lib(bound_report(&SurfaceTopology::two_sided(1, &[1, 1, 1])))?;
    ensure(costa_like.lower == q(3), format!("(1,3,(1,1,1)) lower {}", costa_like.lower))?;

    let nonflat = FeasibilityConstraints { nonflat: true, ..Default::default() };
    let one = enumerate_feasible(1, Sidedness::One, &nonflat);
    ensure(one.topologies.is_empty(), format!("one-sided budget 1: {:?}", one.topologies))?;

    let emb = FeasibilityConstraints { embedded: true, min_ends: 3, min_genus: 1, ..Default::default() };
    let three = enumerate_feasible(3, Sidedness::Two, &emb);
    ensure(
        three.topologies == vec![SurfaceTopology::two_sided(1, &[1, 1, 1])],
        format!("embedded budget 3: {:?}", three.topologies),
    )?;

    let lit = Literature::builtin();
    let c = FeasibilityConstraints { nonflat: true, ..Default::default() }.with_preset(&lib(lit.preset("index-two-genus"))?);
    let two = enumerate_feasible(2, Sidedness::Two, &c);
    ensure(two.trace == EXPECTED_CASE_SPLIT, format!("case split differs:\n{}", two.trace.join("\n")))?;
    ensure(
        two.topologies == vec![SurfaceTopology::two_sided(1, &[3]), SurfaceTopology::two_sided(1, &[1, 1])],
        format!("budget 2 survivors {:?}", two.topologies),
    )?;
    let cited = FeasibilityConstraints {
        excluded_topologies: vec![lib(lit.exclusion("chen-gackstatter-index"))?, lib(lit.exclusion("genus-one-8pi-two-ends"))?],
        ..c
    };
    ensure(enumerate_feasible(2, Sidedness::Two, &cited).topologies.is_empty(), "cited exclusions leave survivors")?;
    Ok(format!(
        "catenoid 1, (1,3,(1,1,1)) 3, one-sided budget 1 empty, embedded budget 3 = {{(1,3,(1,1,1))}}, budget 2 split {} lines",
        two.trace.len()
    ))
}

fn c5_harmonic_dimensions() -> Outcome {
    let mut parts = Vec::new();
    for (wd, want) in [(catenoid(), 6usize), (lib(costa(1.0))?, 12)] {
        let b = lib(holomorphic_basis(&wd))?;
        let formula = dim_harmonic_l2star(&b.topology);
        ensure(b.harmonic_dim == want && formula == want as i64, format!("{}: {} / {formula}", wd.name, b.harmonic_dim))?;
        ensure(b.gram.condition_number.is_finite() && b.gram.min_eig > 0.0, format!("{}: {:?}", wd.name, b.gram))?;
        parts.push(format!("{} {} (cond {:.3e})", wd.name, b.harmonic_dim, b.gram.condition_number));
    }
    Ok(parts.join(", "))
}

fn c6_integrability_threshold() -> Outcome {
    let mut parts = Vec::new();
    for d in 1..=3 {
        let at = lib(l2star_end_norm(d + 1, d, 1e-6))?;
        let past = lib(l2star_end_norm(d + 2, d, 1e-6))?;
        ensure(!at.diverges, format!("d = {d}, l = d+1 flagged divergent: {at:?}"))?;
        ensure(past.diverges && past.growth_rate > 0.0, format!("d = {d}, l = d+2 not divergent: {past:?}"))?;
        parts.push(format!("d={d} rates {:.2e}/{:.2}", at.growth_rate, past.growth_rate));
    }
    Ok(parts.join(", "))
}

fn c7_costa_audit() -> Outcome {
    let start = Instant::now();
    let dims = lib(costa_parity_dims(1.0))?;
    ensure(dims.dims == [2, 3, 3, 1] && dims.tilde == [2, 4, 4, 2], format!("{:?} / {:?}", dims.dims, dims.tilde))?;
    let wd = lib(costa(1.0))?;
    let basis = lib(holomorphic_basis(&wd))?;
    let dec = lib(parity_decomposition(&wd, &basis))?;
    ensure(dec.dims == dims.dims && dec.tilde == dims.tilde, format!("traces give {:?} / {:?}", dec.dims, dec.tilde))?;

    let table: Vec<String> = [ModelForm::LogRadial, ModelForm::LogAngular, ModelForm::InverseSquareRe, ModelForm::InverseSquareIm]
        .into_iter()
        .map(|m| lib(parity_type_of(m)).map(|p| p.label()))
        .collect::<Result<_, _>>()?;
    ensure(table == ["++", "--", "-+", "+-"], format!("parity table {table:?}"))?;

    let quarter = lib(quarter_mesh(&wd, 40.0, 0.0, 0.3))?;
    let pc = lib(parity_counts(&quarter))?;
    let full = lib(torus_from_quarter(&wd, &quarter))?;
    let n = lib(negative_inertia(&assemble_q(&full).0))?;
    ensure(pc.total == 5 && n == 5, format!("restricted {:?}, full {n}", pc.counts))?;
    ensure(pc.counts[3].1 == 0, format!("w-- = {}", pc.counts[3].1))?;

    let phi = rotational_jacobi_field(&full);
    let nodal = nodal_domain_count_with_zero_set(&full, &phi, 1e-9);
    ensure(nodal == 4, format!("nodal domains {nodal}"))?;

    let sys = lib(LemmaSystem::for_costa(1.0))?;
    let replay = contradiction_replay(&sys, 3, 0);
    ensure(replay.contradiction && replay.forced == Some([2, 0, 0, 1]), format!("{replay:?}"))?;

    let wd2 = lib(costa(2.0))?;
    let pc2 = lib(parity_counts(&lib(quarter_mesh(&wd2, 40.0, 0.0, 0.3))?))?;
    ensure(pc2.total >= 4, format!("t = 2 count {}", pc2.total))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 1800.0, format!("{secs:.0} s"))?;
    let w: Vec<usize> = pc.counts.iter().map(|c| c.1).collect();
    Ok(format!(
        "dims {:?}, tilde {:?}, w {w:?} (total 5), nodal 4, replay contradiction, t=2 total {}, {secs:.1} s",
        dims.dims, dims.tilde, pc2.total
    ))
}

fn c8_property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // ℘ ODE and periodicity
    let mut wp_err: f64 = 0.0;
    for &t in &[1.0, 1.7, 2.5] {
        let lat = lib(RectLattice::new(t))?;
        for _ in 0..200 {
            let z = C64::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95) * t);
            let (p, dp) = lib(lat.wp_both(z))?;
            let scale = dp.norm_sqr().max(1.0);
            wp_err = wp_err.max((dp * dp - lat.cubic(p)).norm() / scale);
            for w in [C64::new(1.0, 0.0), C64::new(0.0, t)] {
                let p2 = lib(lat.wp(z + w))?;
                wp_err = wp_err.max((p2 - p).norm() / p.norm().max(1.0));
            }
        }
    }
    ensure(wp_err <= 1e-7, format!("℘ residual {wp_err:.2e}"))?;

    // Σ φᵢ² = 0
    let mut conf: f64 = 0.0;
    for wd in [catenoid(), enneper(1), enneper(3), lib(costa(1.0))?, lib(costa(2.0))?] {
        for _ in 0..200 {
            let z = match wd.lattice_t() {
                Some(t) => C64::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95) * t),
                None => C64::from_polar(rng.gen_range(0.1..5.0), rng.gen_range(0.0..2.0 * PI)),
            };
            if wd.puncture_distance(z) < 0.03 {
                continue;
            }
            let phi = lib(wd.phi(z))?;
            let s: C64 = phi.iter().map(|p| p * p).sum();
            let n: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
            conf = conf.max(s.norm() / n);
        }
    }
    ensure(conf <= 1e-10, format!("conformality {conf:.2e}"))?;

    // inertia against dense eigenvalues, refinement and domain monotonicity
    let mut meshes = 0;
    for wd in [catenoid(), enneper(1), enneper(2)] {
        for (r, h) in [(10.0, 0.6), (30.0, 0.5), (60.0, 0.45)] {
            let m = lib(build_mesh(&wd, r, 0.0, h))?;
            if m.num_vertices() > 500 {
                continue;
            }
            let (a, _) = assemble_q(&m);
            let sparse = lib(negative_inertia(&a))?;
            ensure(dense_negative_count(&a) == sparse, format!("{} R={r}: dense ≠ LDLᵀ", wd.name))?;
            meshes += 1;
            let fine = lib(m.refine_uniform(&wd))?;
            let nf = lib(negative_inertia(&assemble_q(&fine).0))?;
            ensure(nf >= sparse, format!("{} R={r}: refinement {sparse} -> {nf}", wd.name))?;
            let small = m.restrict(0.5 * r);
            let ns = lib(negative_inertia(&assemble_masked(&small, &[]).a))?;
            ensure(ns <= sparse, format!("{} R={r}: restriction {sparse} -> {ns}", wd.name))?;
        }
    }
    ensure(meshes >= 5, format!("only {meshes} meshes under 500 vertices"))?;

    // cutoff witnesses
    let mut grad: f64 = 0.0;
    let mut lap: f64 = 0.0;
    for r in [10.0, 100.0, 1000.0] {
        for alpha in [1.5, 2.0, 8.0] {
            let cf = lib(CutoffFamily::new(alpha, r))?;
            for x in cutoff_sample(&cf, 501) {
                for nu in [0.0, 0.5, 1.0] {
                    let v = lib(cutoff_eval_with_normal(&cf, x, nu))?;
                    grad = grad.max(v.grad_witness);
                    lap = lap.max(v.lap_witness);
                }
            }
        }
    }
    ensure(grad <= XI_PRIME_SUP + 1e-12 && lap <= cutoff_constant() + 1e-12, format!("witnesses {grad} {lap}"))?;

    // curvature decay at every end
    let mut decay: f64 = 0.0;
    for wd in [catenoid(), enneper(1), enneper(2), enneper(3), lib(costa(1.0))?] {
        for p in wd.punctures.clone() {
            let e = lib(end_analysis(&wd, &p))?;
            let f = lib(curvature_decay(&wd, &e))?;
            decay = decay.max((f.fitted / f.predicted - 1.0).abs());
        }
    }
    ensure(decay <= 0.05, format!("decay exponent off by {decay:.3}"))?;
    Ok(format!(
        "℘ {wp_err:.1e}, conformality {conf:.1e}, {meshes} dense checks, witnesses {grad:.4}/{lap:.4}, decay {decay:.1e}"
    ))
}

fn c9_sandwich() -> Outcome {
    let mut cases = vec![(catenoid(), 1i64), (lib(costa(1.0))?, 5)];
    for k in 1..=4u32 {
        cases.push((enneper(k), 2 * k as i64 - 1));
    }
    let mut parts = Vec::new();
    for (wd, index) in cases {
        let t = lib(basis_topology(&wd))?;
        let mut d = t.multiplicities.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        let t = lib(SurfaceTopology::new(t.genus, d, t.sided))?;
        let s = lib(sandwich(&t))?;
        ensure(s.contains(index), format!("{}: {} ∉ [{}, {}]", wd.name, index, s.lower, s.upper))?;
        parts.push(format!("{} {} ∈ [{}, {}]", wd.name, index, s.lower, s.upper));
    }
    Ok(parts.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("catenoid index by exhaustion", c1_catenoid_index),
        ("Enneper indices 1 and 3", c2_enneper_index),
        ("total curvature quantization", c3_total_curvature),
        ("exact bound formulas and enumerations", c4_bound_formulas),
        ("L²* harmonic dimensions", c5_harmonic_dimensions),
        ("sharp integrability threshold", c6_integrability_threshold),
        ("Costa parity audit", c7_costa_audit),
        ("property suites", c8_property_suites),
        ("sandwich containment", c9_sandwich),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!("criterion {} {tag}: {name}: {detail}", k + 1);
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
