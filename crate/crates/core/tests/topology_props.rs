use minsurf::topology::*;
use num_rational::Rational64;
use proptest::prelude::*;

fn topo(sided: Sidedness) -> impl Strategy<Value = SurfaceTopology> {
    (0u32..6, prop::collection::vec(1u32..6, 1..5)).prop_map(move |(g, mut d)| {
        d.sort_unstable_by(|a, b| b.cmp(a));
        SurfaceTopology::new(g, d, sided).unwrap()
    })
}

fn any_topo() -> impl Strategy<Value = SurfaceTopology> {
    prop_oneof![topo(Sidedness::Two), topo(Sidedness::One)]
}

proptest! {
    #[test]
    fn lower_bound_increases_in_genus_and_multiplicity(t in any_topo(), j in 0usize..4) {
        let base = index_lower_bound(&t);
        let mut up_g = t.clone();
        up_g.genus += 1;
        prop_assert!(index_lower_bound(&up_g) > base);
        let mut up_d = t.clone();
        let j = j % t.multiplicities.len();
        up_d.multiplicities[j] += 1;
        prop_assert!(index_lower_bound(&up_d) > base);
    }

    #[test]
    fn embedded_corollary_matches_theorem(g in 0u32..20, r in 1u32..10) {
        let t = SurfaceTopology::two_sided(g, &vec![1; r as usize]);
        prop_assert_eq!(index_lower_bound_embedded(g, r), index_lower_bound(&t));
    }

    #[test]
    fn sandwich_lower_against_index_bound(t in topo(Sidedness::Two)) {
        prop_assume!(t.end_sum() >= 4);
        let s = sandwich(&t).unwrap();
        let lb = index_lower_bound(&t);
        if t.end_sum() == 4 {
            prop_assert_eq!(s.lower, lb);
        } else {
            prop_assert!(s.lower <= lb);
        }
    }

    #[test]
    fn degree_matches_total_curvature(t in any_topo()) {
        let k = total_curvature_over_pi(&t);
        let d = jorge_meeks_degree(&t);
        match t.sided {
            Sidedness::Two => prop_assert_eq!(k, -d * 4),
            Sidedness::One => prop_assert_eq!(k, -d * 2),
        }
    }

    #[test]
    fn report_bounds_are_ordered(t in topo(Sidedness::Two)) {
        prop_assume!(t.end_sum() >= 4 || t.genus >= 1);
        let r = bound_report(&t).unwrap();
        prop_assert!(r.lower <= r.upper.unwrap());
        prop_assert_eq!(r.lower_ceil, r.lower.ceil().to_integer());
    }

    #[test]
    fn enumeration_is_complete_and_sound(budget in 0u32..5, one in any::<bool>(), t in any_topo()) {
        let sided = if one { Sidedness::One } else { Sidedness::Two };
        let e = enumerate_feasible(budget, sided, &FeasibilityConstraints::default());
        for x in &e.topologies {
            prop_assert!(index_lower_bound(x) <= Rational64::from_integer(budget as i64));
        }
        if t.sided == sided && index_lower_bound(&t) <= Rational64::from_integer(budget as i64) {
            prop_assert!(e.topologies.contains(&t), "{} missing", t);
        }
        let mut sorted = e.topologies.clone();
        sorted.sort_by(|a, b| (a.genus, a.ends).cmp(&(b.genus, b.ends)).then(b.multiplicities.cmp(&a.multiplicities)));
        prop_assert_eq!(sorted, e.topologies);
    }
}

#[test]
fn planes_are_reported_unless_nonflat() {
    let e = enumerate_feasible(0, Sidedness::Two, &FeasibilityConstraints::default());
    assert!(e.topologies.contains(&SurfaceTopology::two_sided(0, &[1])));
    let c = FeasibilityConstraints { nonflat: true, ..Default::default() };
    assert!(!enumerate_feasible(0, Sidedness::Two, &c).topologies.contains(&SurfaceTopology::two_sided(0, &[1])));
}

#[test]
fn enumeration_is_deterministic() {
    let c = FeasibilityConstraints { nonflat: true, ..Default::default() };
    let a = enumerate_feasible(4, Sidedness::Two, &c);
    let b = enumerate_feasible(4, Sidedness::Two, &c);
    assert_eq!(a.topologies, b.topologies);
    assert_eq!(a.trace, b.trace);
}
