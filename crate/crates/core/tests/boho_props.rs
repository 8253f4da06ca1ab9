use proptest::prelude::*;

use rdlab_core::boho::{
    boho_cc_corner, boho_derived, boho_flmc_corner, boho_gap, boho_region_sweep, log_interior, n_lower, n_upper,
    tau_range, BohoGrid, BohoParams,
};
use rdlab_core::regions::region_contains;
use rdlab_core::Error;

fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Admissible parameters, each drawn strictly inside its open range.
fn params() -> impl Strategy<Value = BohoParams> {
    (0.05f64..0.45, -7.0f64..-4.0, 0.2f64..0.45, 0.01f64..0.99, 0.01f64..0.99, 0.01f64..0.99).prop_filter_map(
        "empty n range",
        |(p, le, delta, un, ut, ud)| {
            let epsilon = 10f64.powf(le);
            let (lo, hi) = (n_lower(delta), n_upper(epsilon));
            if hi <= lo * 1.01 {
                return None;
            }
            let n = (lo + un * (hi - lo)).round() as u64;
            let (tlo, thi) = tau_range(delta, n);
            if thi <= tlo {
                return None;
            }
            let tau = tlo + ut * (thi - tlo);
            let base = BohoParams { p, epsilon, delta, delta1: 0.0, n, tau };
            let (dp, _, _) = boho_derived(&BohoParams { delta1: 1e-6, ..base }).ok()?;
            let pd = p * (1.0 - dp) + dp * (1.0 - p);
            Some(BohoParams { delta1: ud * pd, ..base })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn corner_reduces_to_common_component_when_losses_are_removed(b in params()) {
        let (dp, dn, theta) = boho_derived(&b).unwrap();
        // Oracles for the derived quantities.
        let n = b.n as f64;
        let dp_oracle = (b.delta + b.tau + 8.0 * (-n * b.tau * b.tau / 2.0).exp()).min(1.0);
        prop_assert!((dp - dp_oracle).abs() < 1e-15);
        let dn_oracle = 1.0 - (1.0 - b.epsilon).powf(n);
        prop_assert!((dn - dn_oracle).abs() < 1e-9 * dn_oracle.max(1e-300) + 1e-15);

        let f = boho_flmc_corner(&b).unwrap();
        let conv = |a: f64| b.p * (1.0 - a) + a * (1.0 - b.p);
        let cc_delta = boho_cc_corner(b.p, b.delta, 0.0).unwrap();
        prop_assert!((f.r1 - theta - cc_delta.r1).abs() < 1e-12);
        prop_assert!((f.r1 - theta - (1.0 - h(b.delta))).abs() < 1e-12);
        if dp <= 0.5 {
            prop_assert_eq!(f.r2, boho_cc_corner(b.p, dp, b.delta1).unwrap().r2);
        }
        prop_assert!((f.r2 - (h(conv(dp)) - h(b.delta1)).max(0.0)).abs() < 1e-12);
        prop_assert_eq!(f.d1, 0.0);
        let loss = 2.0 * dn * dp + b.epsilon * (1.0 - 2.0 * dp);
        prop_assert!((f.d2 - loss - b.delta1).abs() < 1e-12, "{} vs {}", f.d2 - b.delta1, loss);
        // The finite-length corner never beats the common-component one;
        // for R2 this needs p*delta' increasing in delta', i.e. delta' <= 1/2.
        prop_assert!(f.r1 > cc_delta.r1 && f.d2 > b.delta1);
        if dp <= 0.5 {
            prop_assert!(f.r2 >= (h(conv(b.delta)) - h(b.delta1)).max(0.0) - 1e-12);
        }
    }

    #[test]
    fn gap_shrinks_with_epsilon(b in params()) {
        let mut prev = f64::INFINITY;
        for e in [b.epsilon, b.epsilon / 10.0, b.epsilon / 100.0, 1e-12, 1e-14] {
            let g = boho_gap(&BohoParams { epsilon: e, ..b }).unwrap();
            // below ~1e-12 the loss change is under one ulp of the gap
            if e > 1e-12 {
                prop_assert!(g < prev, "eps = {e}: {g} vs {prev}");
            } else {
                prop_assert!(g <= prev, "eps = {e}: {g} vs {prev}");
            }
            prev = g;
        }
    }
}

#[test]
fn derived_values_at_a_fixed_point() {
    // p = 0.3, eps = 1e-4, delta = 0.3, n = 20000, tau = 0.05.
    // delta' = 0.3 + 0.05 + 8 e^{-25}; theta' = log2(12.5 - ln 4)/n + tau (4 + h(0.3) - log2 0.21) + 3/n.
    let b = BohoParams { p: 0.3, epsilon: 1e-4, delta: 0.3, delta1: 0.05, n: 20_000, tau: 0.05 };
    let (dp, dn, theta) = boho_derived(&b).unwrap();
    assert!((dp - (0.35 + 8.0 * (-25f64).exp())).abs() < 1e-15);
    assert!((dn - 0.864_678_250_517_269_8).abs() < 1e-12, "{dn}");
    let t = (12.5 - 4f64.ln()).log2() / 2e4 + 0.05 * (4.0 + h(0.3) - 0.21f64.log2()) + 3.0 / 2e4;
    assert!((theta - t).abs() < 1e-14);
}

fn small_grid(eps: &[f64]) -> BohoGrid {
    BohoGrid {
        delta: log_interior(0.05, 0.49, 16),
        n_points: 8,
        tau_points: 6,
        delta1_points: 16,
        n_grid_eps: eps.to_vec(),
    }
}

#[test]
fn regions_nest_as_epsilon_shrinks() {
    let eps = [1e-4, 1e-5, 1e-7];
    let grid = small_grid(&eps);
    let cc = boho_region_sweep(0.3, 0.0, 0.2, &grid).unwrap().boundary;
    let regions: Vec<_> = eps.iter().map(|&e| boho_region_sweep(0.3, e, 0.2, &grid).unwrap().boundary).collect();
    for w in regions.windows(2) {
        // region(1e-4) inside region(1e-5) inside region(1e-7)
        let c = region_contains(&w[1], &w[0], 1e-9).unwrap();
        assert!(c.contained, "{c:?}");
    }
    for r in &regions {
        assert!(region_contains(&cc, r, 1e-9).unwrap().contained);
        // The common-component region is strictly larger.
        assert!(!region_contains(r, &cc, 1e-9).unwrap().contained);
    }
}

#[test]
fn large_epsilon_has_no_admissible_blocklength() {
    let r = boho_region_sweep(0.3, 0.4, 0.15, &small_grid(&[]));
    assert!(matches!(r, Err(Error::Infeasible(_))), "{r:?}");
}
