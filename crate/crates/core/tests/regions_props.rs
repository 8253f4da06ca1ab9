use proptest::prelude::*;

use rdlab_core::checks::block_source_3x3;
use rdlab_core::components::gk_common_part;
use rdlab_core::regions::search::random_flmc_spec;
use rdlab_core::regions::{assemble_region, b_upper, cc_alpha, correction_terms_unchecked, flmc_alpha, RDTuple, RateBounds};
use rdlab_core::rng::stream;
use rdlab_core::JointDist;

fn p_sw(v: &[f64], s: usize, w: usize) -> JointDist {
    let t: f64 = v.iter().sum();
    JointDist::from_sizes(&[s, w], v.iter().map(|x| x / t).collect()).unwrap()
}

fn sw_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..4, 2usize..4).prop_flat_map(|(s, w)| (Just(s), Just(w), prop::collection::vec(0.05f64..1.0, s * w)))
}

fn gap(a: &RateBounds, b: &RateBounds) -> f64 {
    [a.r1 - b.r1, a.r2 - b.r2, a.sum - b.sum, a.d1 - b.d1, a.d2 - b.d2]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rate_loss_nondecreasing_in_n((s, w, v) in sw_strategy(), eps in 1e-6f64..0.15) {
        let p = p_sw(&v, s, w);
        let mut prev = f64::NEG_INFINITY;
        // Increasing once log|W| > 1/(n ln 2), i.e. from n = 2 when |W| >= 2,
        // up to the upper end of B(eps).
        let hi = b_upper(eps).min(1e7);
        let ns = (0..200).map(|k| (2.0 * (hi / 2.0).powf(k as f64 / 199.0)).floor()).filter(|&n| n >= 2.0 && n <= hi);
        for n in ns {
            let t = correction_terms_unchecked(eps, &p, n, 0.01, 64.0, (1.0, 1.0)).unwrap();
            prop_assert!(t.e_n >= prev - 1e-12, "n = {n}: {} < {prev}", t.e_n);
            prop_assert!(t.e_n <= (w as f64).log2() + 1e-12);
            prev = t.e_n;
        }
    }

    #[test]
    fn theta_and_lambda_decrease_along_schedule((s, w, v) in sw_strategy(), alpha in 0.05f64..0.45) {
        let p = p_sw(&v, s, w);
        let floor = 1.0 / (w as f64 + 1.0);
        let mut prev: Option<rdlab_core::regions::FlmcCorrectionTerms> = None;
        for n in [1e3f64, 1e4, 1e5, 1e6] {
            let tau = n.powf(-0.5 + alpha);
            let t = correction_terms_unchecked(0.0, &p, n, tau, 64.0, (1.0, 1.0)).unwrap();
            prop_assert_eq!(t.e_n, 0.0);
            if let Some(q) = prev {
                prop_assert!(t.p_tau >= q.p_tau, "p(tau) at n = {n}");
                // Lambda(p) is non-increasing in p only on [1/(|W|+1), 1]
                if q.p_tau >= floor {
                    prop_assert!(t.lambda_n <= q.lambda_n + 1e-15, "lambda at n = {n}: {} vs {}", t.lambda_n, q.lambda_n);
                }
                if q.theta_n.is_finite() {
                    prop_assert!(t.theta_n < q.theta_n, "theta at n = {n}: {} vs {}", t.theta_n, q.theta_n);
                }
            }
            prev = Some(t);
        }
    }

    #[test]
    fn corner_rates_consistent(seed in 0u64..10_000) {
        let src = block_source_3x3().unwrap();
        let (gk, _) = gk_common_part(&src);
        let spec = random_flmc_spec(&mut stream(seed, 0, "props"), &src, gk, 2, 3, 3).unwrap();
        let b = cc_alpha(&src, &spec).unwrap();
        prop_assert!(b.r1 >= -1e-12 && b.r2 >= -1e-12);
        prop_assert!(b.sum >= b.r1.max(b.r2) - 1e-12);
        for c in b.corners() {
            prop_assert!(c.r1 >= 0.0 && c.r2 >= 0.0);
            prop_assert!(c.r1 + c.r2 >= b.sum - 1e-12);
        }
    }

    #[test]
    fn assembled_boundary_is_pareto_sorted_and_hull_idempotent(
        pts in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0, 0.0f64..0.5, 0.0f64..0.5), 1..60)
    ) {
        let corners: Vec<RDTuple> = pts.iter().map(|&(r1, r2, d1, d2)| RDTuple { r1, r2, d1, d2 }).collect();
        let Ok(b) = assemble_region(&corners, (0.4, 0.4), false) else {
            prop_assert!(corners.iter().all(|c| c.d1 > 0.4 || c.d2 > 0.4));
            return Ok(());
        };
        for w in b.points.windows(2) {
            prop_assert!(w[0].r1 < w[1].r1 || (w[0].r1 == w[1].r1 && w[0].r2 < w[1].r2));
            prop_assert!(w[0].r2 > w[1].r2);
        }
        for (i, p) in b.points.iter().enumerate() {
            for (j, q) in b.points.iter().enumerate() {
                prop_assert!(i == j || !(q.r1 <= p.r1 && q.r2 <= p.r2));
            }
        }
        // every admissible corner is weakly dominated by a boundary point
        for c in corners.iter().filter(|c| c.d1 <= 0.4 && c.d2 <= 0.4) {
            prop_assert!(b.points.iter().any(|p| p.r1 <= c.r1 && p.r2 <= c.r2));
        }
        let h = b.hull();
        prop_assert_eq!(h.hull(), h.clone());
        prop_assert!(h.len() <= b.len());
    }
}

#[test]
fn rate_loss_dips_at_small_n_for_large_eps() {
    // |W| = 2, eps = 0.2 (B(eps) reaches n = 4): E(2) > E(3).
    // Oracle values from h_b(d)/n + d with d = 1 - 0.8^n.
    let p = p_sw(&[0.5, 0.5], 1, 2);
    let e = |n: f64| correction_terms_unchecked(0.2, &p, n, 0.01, 64.0, (1.0, 1.0)).unwrap().e_n;
    assert!((e(2.0) - 0.831_341_594_627_745_9).abs() < 1e-14);
    assert!((e(3.0) - 0.821_194_821_310_466_1).abs() < 1e-14);
    assert!(e(3.0) < e(2.0));
}

#[test]
fn finite_length_converges_to_common_component() {
    // Along tau = n^-0.4 with eps = 0 every coordinate gap to the
    // common-component bounds shrinks; specs 3 and 4 are below 1e-3 by 1e18.
    let src = block_source_3x3().unwrap();
    let (gk, _) = gk_common_part(&src);
    for seed in 0..5 {
        let spec = random_flmc_spec(&mut stream(seed, 0, "conv"), &src, gk.clone(), 2, 3, 3).unwrap();
        let cc = cc_alpha(&src, &spec).unwrap();
        let gaps: Vec<f64> = [1e10f64, 1e12, 1e14, 1e16, 1e18]
            .iter()
            .map(|&n| gap(&flmc_alpha(&src, &spec, n as u64, n.powf(-0.4)).unwrap().0, &cc))
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {gaps:?}");
        if seed >= 3 {
            assert!(gaps[4] < 1e-3, "seed {seed}: {gaps:?}");
        }
    }
}
