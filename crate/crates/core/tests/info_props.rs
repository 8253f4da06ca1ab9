use proptest::prelude::*;

use rdlab_core::info::{
    cond_entropy, cond_mutual_info, entropy, entropy_continuity_bound, hb, mi_continuity_bounds, mutual_info,
    variational_distance,
};
use rdlab_core::JointDist;

fn pmf(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, k).prop_map(|v| {
        // a few exact zeros exercise the 0 log 0 convention
        let v: Vec<f64> = v.into_iter().map(|x| if x < 0.1 { 0.0 } else { x }).collect();
        let s: f64 = v.iter().sum();
        if s == 0.0 {
            let mut u = vec![0.0; v.len()];
            u[0] = 1.0;
            u
        } else {
            v.into_iter().map(|x| x / s).collect()
        }
    })
}

fn joint2() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(a, b)| (Just(a), Just(b), pmf(a * b)))
}

/// Direct `-sum p log2 p` over a flat pmf.
fn h_oracle(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

fn row_sums(a: usize, b: usize, p: &[f64]) -> Vec<f64> {
    (0..a).map(|i| p[i * b..(i + 1) * b].iter().sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn entropy_matches_direct_sum((a, b, p) in joint2()) {
        let d = JointDist::from_sizes(&[a, b], p.clone()).unwrap();
        prop_assert!((entropy(&d, &[0, 1]).unwrap() - h_oracle(&p)).abs() < 1e-12);
        prop_assert!((entropy(&d, &[0]).unwrap() - h_oracle(&row_sums(a, b, &p))).abs() < 1e-12);
    }

    #[test]
    fn entropy_invariant_under_relabeling(
        (a, b, p, perm) in joint2().prop_flat_map(|(a, b, p)| {
            (Just(a), Just(b), Just(p), Just((0..a).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let d = JointDist::from_sizes(&[a, b], p.clone()).unwrap();
        let relabeled = JointDist::from_fn(&[a, b], |i| p[perm[i[0]] * b + i[1]]).unwrap();
        for axes in [&[0usize][..], &[1], &[0, 1]] {
            let (x, y) = (entropy(&d, axes).unwrap(), entropy(&relabeled, axes).unwrap());
            prop_assert!((x - y).abs() < 1e-12);
        }
        let (i, j) = (mutual_info(&d, &[0], &[1]).unwrap(), mutual_info(&relabeled, &[0], &[1]).unwrap());
        prop_assert!((i - j).abs() < 1e-12);
    }

    #[test]
    fn mutual_info_symmetric_and_chain_rule((a, b, p) in joint2()) {
        let d = JointDist::from_sizes(&[a, b], p).unwrap();
        let i_xy = mutual_info(&d, &[0], &[1]).unwrap();
        prop_assert!((i_xy - mutual_info(&d, &[1], &[0]).unwrap()).abs() < 1e-12);
        prop_assert!(i_xy >= 0.0);
        let hxy = entropy(&d, &[0, 1]).unwrap();
        let hx = entropy(&d, &[0]).unwrap();
        prop_assert!((hxy - hx - cond_entropy(&d, &[1], &[0]).unwrap()).abs() < 1e-10);
        prop_assert!((i_xy - (hx + entropy(&d, &[1]).unwrap() - hxy)).abs() < 1e-10);
    }

    #[test]
    fn three_axis_chain_rule(p in pmf(27)) {
        let d = JointDist::from_sizes(&[3, 3, 3], p).unwrap();
        // I(X; YZ) = I(X; Z) + I(X; Y | Z)
        let lhs = mutual_info(&d, &[0], &[1, 2]).unwrap();
        let rhs = mutual_info(&d, &[0], &[2]).unwrap() + cond_mutual_info(&d, &[0], &[1], &[2]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn variational_triangle_and_marginal_monotonicity(p in pmf(12), q in pmf(12), r in pmf(12)) {
        let (p, q, r) = (
            JointDist::from_sizes(&[3, 4], p).unwrap(),
            JointDist::from_sizes(&[3, 4], q).unwrap(),
            JointDist::from_sizes(&[3, 4], r).unwrap(),
        );
        let v = |x: &JointDist, y: &JointDist| variational_distance(x, y).unwrap();
        prop_assert!(v(&p, &r) <= v(&p, &q) + v(&q, &r) + 1e-15);
        prop_assert!(v(&p, &q) <= 1.0 + 1e-15);
        let vm = v(&p.marginal(&[0]).unwrap(), &q.marginal(&[0]).unwrap());
        prop_assert!(vm <= v(&p, &q) + 1e-15);
    }

    #[test]
    fn continuity_bounds_hold(k in 2usize..9, p in pmf(8), q in pmf(8), lam in 0.0f64..1.0) {
        let norm = |v: &[f64]| {
            let s: f64 = v[..k].iter().sum();
            if s == 0.0 { let mut u = vec![0.0; k]; u[0] = 1.0; u } else { v[..k].iter().map(|x| x / s).collect() }
        };
        let p = norm(&p);
        let q: Vec<f64> = norm(&q).iter().zip(&p).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let v: f64 = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let b = entropy_continuity_bound(v, k).unwrap();
        prop_assert!((h_oracle(&p) - h_oracle(&q)).abs() <= b + 1e-10, "v = {v}, k = {k}");
    }

    #[test]
    fn mutual_info_continuity(p in pmf(8), q in pmf(8), lam in 0.0f64..1.0) {
        let q: Vec<f64> = q.iter().zip(&p).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let (p, q) = (JointDist::from_sizes(&[2, 2, 2], p).unwrap(), JointDist::from_sizes(&[2, 2, 2], q).unwrap());
        let v = variational_distance(&p, &q).unwrap();
        let (pair, cond) = mi_continuity_bounds(v, 2).unwrap();
        let di = (mutual_info(&p, &[0], &[1]).unwrap() - mutual_info(&q, &[0], &[1]).unwrap()).abs();
        let dc = (cond_mutual_info(&p, &[0], &[1], &[2]).unwrap() - cond_mutual_info(&q, &[0], &[1], &[2]).unwrap()).abs();
        prop_assert!(di <= pair + 1e-10);
        prop_assert!(dc <= cond + 1e-10);
    }
}

#[test]
fn continuity_bound_closed_form() {
    // hb(v) + v log2(|A| - 1) at v = 1/4, |A| = 5: hb(0.25) = 0.8112781244591328.
    let b = entropy_continuity_bound(0.25, 5).unwrap();
    assert!((b - (0.811_278_124_459_132_8 + 0.25 * 2.0)).abs() < 1e-15);
    assert!((hb(0.25) - 0.811_278_124_459_132_8).abs() < 1e-15);
}
