//! Cross-module properties: symbolic forms, their dense realizations and the
//! numerical recovery agree, and closure certificates replay exactly.

use proptest::prelude::*;

use skewgen::canon::{
    eigstruct_of_kcf, index_sum_check, realize_skew_kcf, Point, SkewBlock, SkewKcf,
};
use skewgen::closure::{
    apply_rule, enumerate_skew_kcfs, skew_dominates, strata_dag, RuleApplication, SearchOptions,
};
use skewgen::generic::{generic_skew_pencil, GenericPencilParams};
use skewgen::linearize::{linearize, predicted_indices};
use skewgen::numeric::{recover, ToleranceModel};
use skewgen::sampling::{sample_bounded_rank_skew_poly, trial_rng};

fn skew_form() -> impl Strategy<Value = SkewKcf> {
    let block = prop_oneof![
        (0usize..4).prop_map(SkewBlock::M),
        (1usize..3).prop_map(SkewBlock::K),
        (1usize..3, 0u8..3).prop_map(|(h, e)| SkewBlock::H { eig: Point::value(f64::from(e) - 1.5, 0.5), size: h }),
    ];
    proptest::collection::vec(block, 1..4).prop_map(|b| SkewKcf::new(b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realization_recovers_symbolic_structure(s in skew_form()) {
        let e = eigstruct_of_kcf(&s.to_kcf());
        prop_assert!(index_sum_check(&e, 1, s.rank()));
        let p = realize_skew_kcf(&s).unwrap();
        prop_assert!(p.is_skew());
        let rec = recover(&p.to_poly(), &ToleranceModel::default()).unwrap();
        prop_assert_eq!(rec.normal_rank, s.rank());
        prop_assert_eq!(&rec.right, &e.right);
        prop_assert_eq!(&rec.left, &e.left);
        prop_assert_eq!(rec.divisor_degree_sum, e.divisor_degree_sum());
    }

    #[test]
    fn rule_applications_preserve_size(s in skew_form(), j in 0usize..3) {
        let k = s.to_kcf();
        let eig = k.eigenvalues().into_iter().next();
        let apps = [
            RuleApplication::AbsorbRight { j, k: 0, eig: eig.unwrap_or(skewgen::canon::Eigenvalue::Infinite) },
            RuleApplication::BalanceRight { j: 1, k: 1 },
        ];
        for app in apps {
            if let Ok(next) = apply_rule(&k, &app) {
                prop_assert_eq!((next.rows(), next.cols()), (k.rows(), k.cols()));
                prop_assert_eq!(next.rank(), k.rank());
            }
        }
    }
}

#[test]
fn generic_form_dominates_small_strata_with_paired_certificates() {
    for (n, w) in [(4, 1), (5, 2), (6, 2), (7, 3)] {
        let g = generic_skew_pencil(GenericPencilParams::new(n, w).unwrap());
        for x in enumerate_skew_kcfs(n, 2 * w, 2) {
            let d = skew_dominates(&g, &x, SearchOptions::default()).unwrap();
            let cert = d.certificate().unwrap_or_else(|| panic!("{x} not dominated by {g}"));
            assert!(cert.is_paired());
            assert_eq!(cert.replay().unwrap(), g.to_kcf());
        }
    }
}

#[test]
fn strata_dag_of_small_case() {
    // rank <= 2 skew 4x4: {M_1,M_0} on top, {M_0^4} at the bottom,
    // H_1 and K_1 strata in between
    let strata = enumerate_skew_kcfs(4, 2, 1);
    let edges = strata_dag(&strata, SearchOptions::default()).unwrap();
    let name = |i: usize| strata[i].to_string();
    let mut named: Vec<(String, String)> = edges.iter().map(|&(i, j)| (name(i), name(j))).collect();
    named.sort();
    let top = "{M_1, M_0}".to_string();
    let bottom = "{M_0, M_0, M_0, M_0}".to_string();
    assert_eq!(named.len(), 4, "{named:?}");
    assert!(named.contains(&(top.clone(), "{H_1(mu1), M_0, M_0}".to_string())));
    assert!(named.contains(&(top, "{K_1, M_0, M_0}".to_string())));
    assert!(named.contains(&("{K_1, M_0, M_0}".to_string(), bottom.clone())));
    assert!(named.contains(&("{H_1(mu1), M_0, M_0}".to_string(), bottom)));
}

#[test]
fn linearization_shifts_sampled_indices() {
    let tol = ToleranceModel::default();
    for t in 0..5 {
        let p = sample_bounded_rank_skew_poly(4, 1, 3, &mut trial_rng(5, t)).unwrap();
        let base = recover(&p, &tol).unwrap();
        assert_eq!(base.right, [1, 2]);
        let lin = recover(&linearize(&p).unwrap().pencil.to_poly(), &tol).unwrap();
        assert_eq!(lin.right, predicted_indices(&base.right, 3).unwrap());
        assert_eq!(lin.right, [2, 3]);
        assert_eq!(lin.divisor_degree_sum, 0);
    }
}
