use minsurf::complexfn::{Poly, RationalMap, RectLattice, C64};
use proptest::prelude::*;

fn grid(t: f64) -> Vec<C64> {
    let mut v = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            // offset grid, stays clear of lattice points
            v.push(C64::new((i as f64 + 0.37) / 10.0, t * (j as f64 + 0.41) / 10.0));
        }
    }
    v
}

#[test]
fn wp_satisfies_its_differential_equation() {
    for t in [0.7, 1.0, 1.6, 2.0] {
        let lat = RectLattice::new(t).unwrap();
        for z in grid(t) {
            let (p, dp) = lat.wp_both(z).unwrap();
            let r = dp * dp - lat.cubic(p);
            let scale = 1.0 + dp.norm_sqr();
            assert!(r.norm() / scale < 1e-7, "t={t} z={z} residual {}", r.norm());
        }
    }
}

#[test]
fn wp_is_doubly_periodic_on_grid() {
    for t in [1.0, 2.0] {
        let lat = RectLattice::new(t).unwrap();
        for z in grid(t) {
            let w = lat.wp(z).unwrap();
            let a = lat.wp(z + 1.0).unwrap();
            let b = lat.wp(z + C64::new(0.0, t)).unwrap();
            assert!((a - w).norm() / w.norm().max(1.0) < 1e-8);
            assert!((b - w).norm() / w.norm().max(1.0) < 1e-8);
        }
    }
}

fn small_poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec(-3i32..=3, 1..4).prop_map(|v| {
        let mut c: Vec<f64> = v.into_iter().map(|x| x as f64).collect();
        if c.iter().all(|x| *x == 0.0) {
            c[0] = 1.0;
        }
        Poly::from_real(&c)
    })
}

fn rational() -> impl Strategy<Value = RationalMap> {
    (small_poly(), small_poly()).prop_map(|(n, d)| RationalMap::new(n, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_is_additive_under_products(f in rational(), h in rational(), k in 0usize..4) {
        // probe the integer points where small integer polynomials vanish
        let z0 = C64::new([0.0, 1.0, -1.0, 0.5][k], 0.0);
        let prod = f.mul(&h);
        prop_assume!(!prod.is_zero());
        prop_assert_eq!(prod.order_at(z0), f.order_at(z0) + h.order_at(z0));
    }

    #[test]
    fn derivative_matches_central_differences(f in rational(), re in -2.0f64..2.0, im in 0.3f64..2.0) {
        let z = C64::new(re, im);
        let d = f.derivative();
        let h = 1e-5;
        let (Ok(a), Ok(b), Ok(ex)) = (f.eval(z + h), f.eval(z - h), d.eval(z)) else {
            return Ok(());
        };
        let fd = (a - b) / (2.0 * h);
        // stay away from poles, where differences lose all accuracy
        let near_pole = f.denominator().eval(z).norm() < 0.2;
        prop_assume!(!near_pole);
        prop_assert!((fd - ex).norm() <= 1e-5 * ex.norm().max(1.0));
    }
}
