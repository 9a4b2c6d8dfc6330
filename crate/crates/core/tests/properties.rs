use proptest::prelude::*;
use softqec::chain_complex::{boundary, restricted_boundary, Chain, HyperGraph};
use softqec::montecarlo::{estimate, failure_probability, rate_per_round};
use softqec::surface_code::{build_rotated_code, classify_residual, Basis, PauliOperator, ResidualClass};

fn chain() -> impl Strategy<Value = Chain> {
    proptest::collection::vec(0usize..24, 0..16).prop_map(Chain::edges)
}

fn hypergraph() -> impl Strategy<Value = HyperGraph> {
    proptest::collection::vec(proptest::collection::vec(0usize..10, 1..4), 24).prop_map(|e| HyperGraph::from_edges(10, e).unwrap())
}

proptest! {
    #[test]
    fn chain_addition_is_a_group(a in chain(), b in chain(), c in chain()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        prop_assert!(a.add(&a).unwrap().is_empty());
        prop_assert_eq!(a.add(&Chain::edges([])).unwrap(), a.clone());
    }

    #[test]
    fn boundary_is_linear(g in hypergraph(), a in chain(), b in chain(), mask in proptest::collection::vec(any::<bool>(), 10)) {
        let lhs = boundary(&a.add(&b).unwrap(), &g).unwrap();
        let rhs = boundary(&a, &g).unwrap().add(&boundary(&b, &g).unwrap()).unwrap();
        prop_assert_eq!(&lhs, &rhs);
        let r = restricted_boundary(&a, &mask, &g).unwrap();
        let expect: Vec<usize> = boundary(&a, &g).unwrap().support().iter().copied().filter(|&v| mask[v]).collect();
        prop_assert_eq!(r.support(), &expect[..]);
    }

    #[test]
    fn stabilizer_products_stay_stabilizers(d in prop_oneof![Just(3i64), Just(5), Just(7)], picks in proptest::collection::vec(any::<bool>(), 48), logical in any::<bool>(), x_type in any::<bool>()) {
        let code = build_rotated_code(d).unwrap();
        let basis = if x_type { Basis::X } else { Basis::Z };
        let plaquettes = code.plaquettes(basis);
        let mut op = PauliOperator::identity();
        let mut any = false;
        for (p, _) in plaquettes.iter().zip(&picks).filter(|(_, &k)| k) {
            op = op.mul(&PauliOperator::of_type(basis, p.qubits.iter().copied()));
            any = true;
        }
        if logical {
            op = op.mul(&PauliOperator::of_type(basis, code.logical(basis).iter().copied()));
        }
        let class = classify_residual(&op, &code).unwrap();
        let expect = match (logical, any) {
            (true, _) => ResidualClass::Logical,
            (false, true) => ResidualClass::Stabilizer,
            (false, false) => ResidualClass::Identity,
        };
        prop_assert_eq!(class, expect);
    }

    #[test]
    fn posterior_summary_is_consistent(n in 0u64..5000, frac in 0.0f64..=1.0) {
        let k = (n as f64 * frac).floor() as u64;
        let s = estimate(n, k);
        prop_assert!(0.0 <= s.ci_lo && s.ci_lo <= s.mean && s.mean <= s.ci_hi && s.ci_hi <= 1.0);
        prop_assert!((s.mean - (k as f64 + 0.5) / (n as f64 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn per_round_rate_inverts_failure_model(a in 1e-6f64..1.0, t in 1usize..500) {
        // keep p * T moderate: near the mixing limit 1 - 2q underflows
        let p = a * (5.0 / t as f64).min(0.4);
        let back = rate_per_round(failure_probability(p, t), t).unwrap();
        prop_assert!((back - p).abs() < 1e-9 * p.max(1e-3), "{} vs {}", back, p);
    }
}
