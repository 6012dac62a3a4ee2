use minsurf::spectral::*;
use minsurf::surface::*;
use proptest::prelude::*;

fn catalog(i: usize) -> WeierstrassData {
    match i % 5 {
        0 => plane(),
        1 => catenoid(),
        2 => enneper(1),
        3 => enneper(2),
        _ => costa(1.0).unwrap(),
    }
}

fn shifted(asm: &Assembled, sigma: f64) -> SymmetricSparse {
    asm.a.add_scaled(-sigma, &asm.m)
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inertia_matches_dense_on_small_meshes(i in 0usize..5, r in 10.0f64..60.0, h in 0.35f64..0.6, s in -1.0f64..1.0) {
        let wd = catalog(i);
        let mesh = build_mesh(&wd, r, 0.0, h).unwrap();
        prop_assume!(mesh.num_vertices() <= 500);
        let asm = assemble_masked(&mesh, &[]);
        let n = negative_inertia(&asm.a).unwrap();
        prop_assert_eq!(n, dense_negative_count(&asm.a));
        // and with an indefinite shift, against the generalized spectrum
        let eigs = dense_generalized_eigenvalues(&asm.a, &asm.m.values);
        let sigma = s.abs() * eigs[eigs.len().min(8) - 1];
        let m = shifted(&asm, sigma);
        prop_assert_eq!(negative_inertia(&m).unwrap(), dense_negative_count(&m));
        prop_assert_eq!(negative_inertia(&m).unwrap(), eigs.iter().filter(|&&e| e < sigma).count());
    }

    #[test]
    fn uniform_refinement_never_lowers_counts(i in 0usize..5, r in 10.0f64..60.0, h in 0.4f64..0.8) {
        let wd = catalog(i);
        let coarse = build_mesh(&wd, r, 0.0, h).unwrap();
        let fine = coarse.refine_uniform(&wd).unwrap();
        let n0 = negative_inertia(&assemble_q(&coarse).0).unwrap();
        let n1 = negative_inertia(&assemble_q(&fine).0).unwrap();
        prop_assert!(n1 >= n0, "{} R={r} h={h}: {n0} -> {n1}", wd.name);
    }

    #[test]
    fn shrinking_the_domain_never_raises_counts(i in 0usize..5, r in 20.0f64..80.0, f in 0.2f64..1.0, s in 0.0f64..1.0) {
        let wd = catalog(i);
        let big = build_mesh(&wd, r, 0.0, 0.4).unwrap();
        let small = big.restrict(f * r);
        let ab = assemble_masked(&big, &[]);
        let asm = assemble_masked(&small, &[]);
        let e = lowest_generalized(&ab.a, &ab.m.values, 4).unwrap();
        let sigma = s * e[3].0.abs();
        prop_assert!(negative_inertia(&shifted(&asm, sigma)).unwrap() <= negative_inertia(&shifted(&ab, sigma)).unwrap());
        prop_assert!(negative_inertia(&asm.a).unwrap() <= negative_inertia(&ab.a).unwrap());
    }

    #[test]
    fn meshes_are_well_shaped_with_nonpositive_potential(i in 0usize..5, r in 10.0f64..100.0, h in 0.2f64..0.6) {
        let mesh = build_mesh(&catalog(i), r, 0.0, h).unwrap();
        prop_assert!(mesh.min_angle_deg() >= 15.0);
        prop_assert!(mesh.potential.iter().all(|&v| v <= 0.0));
        prop_assert!(mesh.tri_potential.iter().flatten().all(|&v| v <= 0.0));
        for t in 0..mesh.triangles.len() {
            prop_assert!(mesh.signed_area(t) > 0.0);
        }
    }
}

#[test]
fn first_dirichlet_eigenvalue_of_the_disk() {
    // the plane chart with λ ≡ 1 meshes {|z| ≤ R}; λ₁ R² = j₀,₁² = 5.7832
    let j01_sq = 2.404825557695773f64.powi(2);
    let m = build_mesh(&plane(), 10.0, 0.0, 0.02).unwrap();
    let asm = assemble_masked(&m, &[]);
    let e = lowest_generalized(&asm.a, &asm.m.values, 1).unwrap();
    let got = e[0].0 * 100.0;
    assert!((got / j01_sq - 1.0).abs() < 0.02, "{got}");
    // dense route on a coarse disk
    let c = build_mesh(&plane(), 10.0, 0.0, 0.4).unwrap();
    let ac = assemble_masked(&c, &[]);
    assert!(ac.a.dim <= 500);
    let dense = dense_generalized_eigenvalues(&ac.a, &ac.m.values);
    let sparse = lowest_generalized(&ac.a, &ac.m.values, 3).unwrap();
    for k in 0..3 {
        assert!((dense[k] - sparse[k].0).abs() < 1e-8 * dense[k]);
    }
    assert!((dense[0] * 100.0 / j01_sq - 1.0).abs() < 0.1);
}

#[test]
fn stiffness_is_nonnegative_without_potential() {
    use rand::{Rng, SeedableRng};
    let m = build_mesh(&plane(), 20.0, 0.0, 0.3).unwrap();
    let asm = assemble_masked(&m, &[]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x: Vec<f64> = (0..asm.a.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(asm.a.quad_form(&x) >= 0.0);
    }
    assert_eq!(asm.a, asm.k);
}

#[test]
fn assembly_is_independent_of_triangle_order() {
    let wd = catenoid();
    let m = build_mesh(&wd, 20.0, 0.0, 0.4).unwrap();
    let mut p = m.clone();
    p.triangles.reverse();
    p.tri_potential.reverse();
    let (a, _) = assemble_q(&m);
    let (b, _) = assemble_q(&p);
    assert_eq!(a.col_ptr, b.col_ptr);
    assert_eq!(a.row_idx, b.row_idx);
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn propagated_positions_agree_with_direct_path_integrals() {
    for wd in [catenoid(), enneper(2), costa(1.0).unwrap()] {
        let m = build_mesh(&wd, 20.0, 0.0, 0.4).unwrap();
        for v in (0..m.num_vertices()).step_by(37) {
            let x = wd.immerse(m.vertices[v]).unwrap();
            let d = norm(&sub(&x, &m.positions[v]));
            assert!(d < 1e-8 * norm(&x).max(1.0), "{} vertex {v}: {d}", wd.name);
        }
    }
}

/// Q on the chart versus Q on the immersed triangles: cotangent stiffness
/// from 3D edge lengths and a shape-operator curvature per triangle.
fn immersed_form(m: &ConformalMesh, f: &[f64]) -> (f64, f64) {
    let mut energy = 0.0;
    let mut potential = 0.0;
    for t in &m.triangles {
        let p: Vec<Vec3> = t.iter().map(|&i| m.positions[i]).collect();
        let n: Vec<Vec3> = t.iter().map(|&i| m.normals[i]).collect();
        let e1 = sub(&p[1], &p[0]);
        let e2 = sub(&p[2], &p[0]);
        let area = 0.5 * norm(&cross(&e1, &e2));
        for k in 0..3 {
            let (i, j, o) = (k, (k + 1) % 3, (k + 2) % 3);
            let u = sub(&p[i], &p[o]);
            let v = sub(&p[j], &p[o]);
            energy += 0.5 * dot(&u, &v) / norm(&cross(&u, &v)) * (f[t[i]] - f[t[j]]).powi(2);
        }
        let d1 = sub(&n[1], &n[0]);
        let d2 = sub(&n[2], &n[0]);
        let g = [dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2)];
        let b = [[dot(&d1, &e1), dot(&d1, &e2)], [dot(&d2, &e1), dot(&d2, &e2)]];
        let kappa = (b[0][0] * b[1][1] - b[0][1] * b[1][0]) / (g[0] * g[2] - g[1] * g[1]);
        let [a0, a1, a2] = [f[t[0]], f[t[1]], f[t[2]]];
        let mean_sq = (a0 * a0 + a1 * a1 + a2 * a2 + a0 * a1 + a1 * a2 + a0 * a2) / 6.0;
        potential += 2.0 * kappa * mean_sq * area;
    }
    (energy, energy + potential)
}

#[test]
fn conformal_reduction_matches_the_immersed_form() {
    let wd = catenoid();
    let r = 10.0;
    for (h, check_q) in [(0.3, false), (0.05, true)] {
        let m = build_mesh(&wd, r, 0.0, h).unwrap();
        let asm = assemble_masked(&m, &[]);
        let f: Vec<f64> = m
            .positions
            .iter()
            .enumerate()
            .map(|(i, x)| if m.boundary_flags[i] == VertexKind::Dirichlet { 0.0 } else { 1.0 - dot(x, x) / (r * r) })
            .collect();
        let x = asm.restrict(&f);
        let (e3, q3) = immersed_form(&m, &f);
        let ec = asm.k.quad_form(&x);
        let qc = asm.a.quad_form(&x);
        assert!((e3 - ec).abs() < 1e-3 * ec, "h={h}: energy {ec} vs {e3}");
        if check_q {
            assert!((q3 - qc).abs() < 1e-3 * qc.abs(), "h={h}: form {qc} vs {q3}");
        }
    }
}

#[test]
fn catenoid_dirichlet_index_is_one_dense_and_sparse() {
    let m = build_mesh(&catenoid(), 50.0, 0.0, 0.45).unwrap();
    assert!(m.num_vertices() <= 500, "{}", m.num_vertices());
    let (a, _) = assemble_q(&m);
    assert_eq!(dense_negative_count(&a), 1);
    assert_eq!(negative_inertia(&a).unwrap(), 1);
    let fine = build_mesh(&catenoid(), 50.0, 0.0, 0.1).unwrap();
    assert_eq!(negative_inertia(&assemble_q(&fine).0).unwrap(), 1);
}

#[test]
fn catalog_indices_by_exhaustion() {
    for (wd, want) in [(catenoid(), 1), (enneper(1), 1), (enneper(2), 3), (enneper(3), 5)] {
        let r = index_estimate(&wd, &Schedule::default()).unwrap();
        assert!(r.stabilized, "{}: {:?}", wd.name, r.counts);
        assert_eq!(r.index_estimate, Some(want), "{}: {:?}", wd.name, r.counts);
        assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn catenoid_constant_function_is_destabilizing_on_coarse_meshes() {
    // with relative edge 0.7 the ramp to the Dirichlet rings costs about
    // 4π/0.7 against −∫V ≈ 8π
    for r in [10.0, 20.0, 40.0, 80.0, 160.0] {
        let m = build_mesh(&catenoid(), r, 0.0, 0.7).unwrap();
        let asm = assemble_masked(&m, &[]);
        let q = asm.a.quad_form(&vec![1.0; asm.a.dim]);
        let v: f64 = asm.a.quad_form(&vec![1.0; asm.a.dim]) - asm.k.quad_form(&vec![1.0; asm.a.dim]);
        assert!(q < 0.0, "R={r}: {q}");
        assert!(v < -6.0 * std::f64::consts::PI, "R={r}: {v}");
    }
}

#[test]
fn weighted_ground_state_of_the_catenoid() {
    let wd = catenoid();
    let mut vals = Vec::new();
    for r in [50.0, 100.0] {
        let m = build_mesh(&wd, r, 0.0, 0.3).unwrap();
        let e = weighted_eigenpairs(&m, 3).unwrap();
        assert!(e[0].value < 0.0 && e[1].value > 0.0, "{:?}", e.iter().map(|p| p.value).collect::<Vec<_>>());
        let negatives = e.iter().filter(|p| p.value < 0.0).count();
        assert_eq!(negatives, negative_inertia(&assemble_q(&m).0).unwrap());
        vals.push(e[0].value);
    }
    assert!((vals[1] / vals[0] - 1.0).abs() < 0.05, "{vals:?}");
}

#[test]
fn dense_oracle_for_weighted_eigenvalues() {
    let m = build_mesh(&catenoid(), 20.0, 0.0, 0.45).unwrap();
    let asm = assemble_masked(&m, &[]);
    assert!(asm.a.dim <= 500);
    let dense = dense_generalized_eigenvalues(&asm.a, &asm.w.values);
    let e = weighted_eigenpairs(&m, 2).unwrap();
    for k in 0..2 {
        assert!((e[k].value - dense[k]).abs() < 1e-7 * dense[k].abs());
    }
}

#[test]
fn plane_weighted_spectrum_is_positive_and_decreasing() {
    let mut last = f64::INFINITY;
    for r in [10.0, 40.0, 160.0] {
        let m = build_mesh(&plane(), r, 0.0, 0.3).unwrap();
        let e = weighted_eigenpairs(&m, 2).unwrap();
        assert!(e[0].value > 0.0);
        assert!(e[0].value < last);
        last = e[0].value;
    }
}

#[test]
fn gradient_energy_of_weighted_eigenfunctions() {
    let cat = catenoid();
    let meshes: Vec<ConformalMesh> =
        [200.0, 400.0, 800.0].iter().map(|&r| build_mesh(&cat, r, 0.0, 0.15).unwrap()).collect();
    let ground: Vec<Vec<f64>> = meshes.iter().map(|m| weighted_eigenpairs(m, 1).unwrap()[0].vector.clone()).collect();
    let st: Vec<(&ConformalMesh, &[f64])> = meshes.iter().zip(&ground).map(|(m, f)| (m, f.as_slice())).collect();
    let rep = gradient_l2_check(&st);
    assert!(rep.pass, "{rep:?}");

    // the plane has no bound state: its lowest weighted mode spreads out,
    // with energy equal to its eigenvalue, which decays to 0
    let mut last = f64::INFINITY;
    for r in [50.0, 100.0, 200.0] {
        let m = build_mesh(&plane(), r, 0.0, 0.3).unwrap();
        let e = &weighted_eigenpairs(&m, 1).unwrap()[0];
        let energy = dirichlet_energy(&m, &e.vector);
        assert!((energy / e.value - 1.0).abs() < 1e-8, "{energy} vs {}", e.value);
        assert!(energy < last);
        last = energy;
    }

    // |X|^{1/2} has energy growing like R, so the check must reject it
    let guards: Vec<(ConformalMesh, Vec<f64>)> = [100.0, 200.0, 400.0]
        .iter()
        .map(|&r| {
            let m = build_mesh(&cat, r, 0.0, 0.15).unwrap();
            let f = m.positions.iter().map(|x| norm(x).sqrt()).collect();
            (m, f)
        })
        .collect();
    let st: Vec<(&ConformalMesh, &[f64])> = guards.iter().map(|(m, f)| (m, f.as_slice())).collect();
    let rep = gradient_l2_check(&st);
    assert!(!rep.pass, "{rep:?}");
    assert!(rep.energies.windows(2).all(|w| w[1] > 1.5 * w[0]));
}

#[test]
fn costa_symmetry_pieces_and_nodal_domains() {
    let wd = costa(1.0).unwrap();
    let q = quarter_mesh(&wd, 40.0, 0.0, 0.3).unwrap();
    let pc = parity_counts(&q).unwrap();
    let full = torus_from_quarter(&wd, &q).unwrap();
    let n = negative_inertia(&assemble_q(&full).0).unwrap();
    assert_eq!(pc.total, n);
    assert_eq!(pc.total, 5);
    assert_eq!(pc.counts[3], ("--".to_string(), 0));
    let phi = rotational_jacobi_field(&full);
    assert_eq!(nodal_domain_count_with_zero_set(&full, &phi, 1e-9), 4);
    // φ vanishes to rounding on the mirror lines
    for (k, &b) in q.mirror.iter().enumerate() {
        if b != 0 {
            let x = q.positions[k];
            let v = q.normals[k][1] * x[0] - q.normals[k][0] * x[1];
            assert!(v.abs() < 1e-9 * norm(&x).max(1.0));
        }
    }
}

#[test]
fn costa_deformation_spot_check() {
    let wd = costa(2.0).unwrap();
    let q = quarter_mesh(&wd, 40.0, 0.0, 0.3).unwrap();
    let pc = parity_counts(&q).unwrap();
    assert!(pc.total >= 4, "{pc:?}");
    let full = torus_from_quarter(&wd, &q).unwrap();
    assert_eq!(negative_inertia(&assemble_q(&full).0).unwrap(), pc.total);
}

#[test]
fn nodal_domains_of_simple_functions() {
    let m = quarter_mesh(&costa(1.0).unwrap(), 20.0, 0.0, 0.3).unwrap();
    assert_eq!(nodal_domain_count(&m, &vec![1.0; m.num_vertices()]), 1);
    // one zero line x = 1/4 across the rectangle
    let f: Vec<f64> = m.vertices.iter().map(|z| (2.0 * std::f64::consts::PI * z.re).cos()).collect();
    assert_eq!(nodal_domain_count(&m, &f), 2);
}
