use minsurf::complexfn::C64;
use minsurf::surface::{
    catenoid, costa, curvature_decay, end_analysis, enneper, normal_gradient_bound_check, plane, total_curvature,
    Puncture, QuadSpec, WeierstrassData,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn catalog() -> Vec<WeierstrassData> {
    vec![plane(), catenoid(), enneper(1), enneper(2), enneper(3), costa(1.0).unwrap(), costa(2.0).unwrap()]
}

fn sample_points(wd: &WeierstrassData, n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let z = match wd.lattice_t() {
            Some(t) => C64::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..t)),
            None => C64::from_polar(rng.gen_range(0.3..2.0), rng.gen_range(0.0..2.0 * PI)),
        };
        if wd.finite_punctures().is_empty() || wd.puncture_distance(z) > 0.08 {
            out.push(z);
        }
    }
    out
}

#[test]
fn phi_is_isotropic() {
    for wd in catalog() {
        for z in sample_points(&wd, 20, 1) {
            let p = wd.phi(z).unwrap();
            let s = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            assert!(s.norm() < 1e-10, "{} at {z}: {}", wd.name, s.norm());
        }
    }
}

#[test]
fn curvature_density_two_ways() {
    for wd in catalog() {
        if wd.name == "plane" {
            continue;
        }
        for z in sample_points(&wd, 20, 2) {
            let a = wd.kappa_lambda2(z).unwrap();
            let l = wd.lambda(z).unwrap();
            let b = wd.gauss_curvature_closed_form(z).unwrap() * l * l;
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{} at {z}: {a} vs {b}", wd.name);
            assert!(a <= 1e-12);
        }
    }
}

/// Central differences of the immersion itself.
fn tangents(wd: &WeierstrassData, z: C64, h: f64) -> ([f64; 3], [f64; 3]) {
    let d = |a: C64, b: C64| {
        let xa = wd.immerse(a).unwrap();
        let xb = wd.immerse(b).unwrap();
        [(xa[0] - xb[0]) / (2.0 * h), (xa[1] - xb[1]) / (2.0 * h), (xa[2] - xb[2]) / (2.0 * h)]
    };
    (d(z + h, z - h), d(z + C64::new(0.0, h), z - C64::new(0.0, h)))
}

#[test]
fn metric_and_normal_match_finite_differences() {
    for wd in catalog() {
        for z in sample_points(&wd, 6, 3) {
            let (xx, xy) = tangents(&wd, z, 1e-4);
            let cr = minsurf::surface::cross(&xx, &xy);
            let area = minsurf::surface::norm(&cr);
            let l2 = wd.lambda(z).unwrap().powi(2);
            assert!((area - l2).abs() < 1e-3 * l2, "{} at {z}: {area} vs {l2}", wd.name);
            let n = wd.unit_normal(z).unwrap();
            assert!((minsurf::surface::norm(&n) - 1.0).abs() < 1e-12);
            let nx = minsurf::surface::dot(&n, &xx) / minsurf::surface::norm(&xx);
            let ny = minsurf::surface::dot(&n, &xy) / minsurf::surface::norm(&xy);
            assert!(nx.abs() < 1e-5 && ny.abs() < 1e-5, "{} at {z}: {nx} {ny}", wd.name);
        }
    }
}

#[test]
fn costa_residues_are_real_and_periods_close() {
    for t in [1.0, 2.0] {
        let c = costa(t).unwrap();
        for p in c.finite_punctures() {
            for r in c.residues_at(p).unwrap() {
                assert!(r.im.abs() < 1e-8, "t={t} p={p} residue {r}");
            }
        }
        let z = C64::new(0.31, 0.23 * t);
        for w in [C64::new(1.0, 0.0), C64::new(0.0, t)] {
            let v = c.cycle_integral(z, w).unwrap();
            for x in v {
                assert!(x.abs() < 1e-8, "t={t} cycle {w}: {v:?}");
            }
        }
        c.immerse_checked(C64::new(0.2, 0.4 * t)).unwrap();
    }
}

#[test]
fn costa_reflections_act_as_coordinate_reflections() {
    for t in [1.0, 2.0] {
        let c = costa(t).unwrap();
        for z in sample_points(&c, 8, 4) {
            let x = c.immerse(z).unwrap();
            let a = c.immerse(-z.conj()).unwrap();
            let b = c.immerse(z.conj()).unwrap();
            let tau1 = [-x[0], x[1], x[2]];
            let tau2 = [x[0], -x[1], x[2]];
            for i in 0..3 {
                assert!((a[i] - tau1[i]).abs() < 1e-7, "t={t} z={z}: {a:?} vs {tau1:?}");
                assert!((b[i] - tau2[i]).abs() < 1e-7, "t={t} z={z}: {b:?} vs {tau2:?}");
            }
        }
    }
}

#[test]
fn costa_has_three_embedded_ends() {
    for t in [1.0, 2.0] {
        let c = costa(t).unwrap();
        for p in c.punctures.clone() {
            let e = end_analysis(&c, &p).unwrap();
            assert_eq!(e.multiplicity, 1, "t={t} {p}");
            assert!((minsurf::surface::norm(&e.normal_limit) - 1.0).abs() < 1e-10);
            let r = normal_gradient_bound_check(&c, &e).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
}

#[test]
fn total_curvature_is_quantized() {
    let spec = QuadSpec::default();
    let cases = [(plane(), 0.0), (catenoid(), -4.0 * PI), (enneper(1), -4.0 * PI), (enneper(2), -8.0 * PI)];
    for (wd, expected) in cases {
        let tc = total_curvature(&wd, &spec).unwrap();
        assert!((tc.value - expected).abs() <= 0.01 * expected.abs() + 1e-12, "{}: {tc:?}", wd.name);
    }
    let tc = total_curvature(&costa(1.0).unwrap(), &spec).unwrap();
    assert!((tc.value + 12.0 * PI).abs() <= 0.01 * 12.0 * PI, "{tc:?}");
}

#[test]
fn curvature_decay_exponents() {
    let mut cases = vec![(catenoid(), Puncture::Infinity), (catenoid(), Puncture::Finite(C64::new(0.0, 0.0)))];
    for k in 1..=3 {
        cases.push((enneper(k), Puncture::Infinity));
    }
    let c = costa(1.0).unwrap();
    for p in c.punctures.clone() {
        cases.push((c.clone(), p));
    }
    for (wd, p) in cases {
        let e = end_analysis(&wd, &p).unwrap();
        let f = curvature_decay(&wd, &e).unwrap();
        assert!((f.fitted / f.predicted - 1.0).abs() < 0.05, "{} {p}: {f:?}", wd.name);
    }
}
