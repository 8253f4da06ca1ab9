use proptest::prelude::*;

use rdlab_core::components::{enumerate_component_pairs, epsilon_of, gk_common_part, ComponentPair};
use rdlab_core::{DistortionTable, DistributedSource, JointDist};

/// Source on `|X1| x |X2|` whose support is block-diagonal: `x1` and `x2`
/// belong to block `b1[x1]`, `b2[x2]`; every in-block cell is positive.
fn block_source(b1: &[usize], b2: &[usize], w: &[f64]) -> DistributedSource {
    let (n1, n2) = (b1.len(), b2.len());
    let raw: Vec<f64> = (0..n1 * n2)
        .map(|c| if b1[c / n2] == b2[c % n2] { w[c] } else { 0.0 })
        .collect();
    let s: f64 = raw.iter().sum();
    let pmf = JointDist::from_sizes(&[n1, n2], raw.iter().map(|p| p / s).collect()).unwrap();
    DistributedSource::new(pmf, DistortionTable::hamming(n1), DistortionTable::hamming(n2)).unwrap()
}

/// Block labels in which every block appears on both sides.
fn blocks() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<f64>)> {
    (1usize..4, 2usize..6, 2usize..6).prop_flat_map(|(k, n1, n2)| {
        let k = k.min(n1).min(n2);
        (
            prop::collection::vec(0..k, n1 - k).prop_map(move |mut v| {
                v.extend(0..k);
                v
            }),
            prop::collection::vec(0..k, n2 - k).prop_map(move |mut v| {
                v.extend(0..k);
                v
            }),
            prop::collection::vec(0.05f64..1.0, n1 * n2),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn gk_part_is_exact_and_maximal((b1, b2, w) in blocks()) {
        let src = block_source(&b1, &b2, &w);
        let (gk, h_s) = gk_common_part(&src);
        // epsilon is computed as one minus the agreeing mass
        prop_assert!(gk.epsilon().abs() < 1e-12);
        let k = b1.iter().max().unwrap() + 1;
        // Oracle: entropy of the block label.
        let mut mass = vec![0.0; k];
        for i in 0..b1.len() { for j in 0..b2.len() { mass[b1[i]] += src.prob(i, j); } }
        let h: f64 = mass.iter().filter(|&&m| m > 0.0).map(|&m| -m * m.log2()).sum();
        prop_assert!((h_s - h).abs() < 1e-12);
        prop_assert_eq!(gk.s_size(), k);
        // Splitting any block of the common part into two labels, with any
        // assignment of the X2 side of that block, breaks the common-function
        // property.
        for blk in 0..k {
            let xs1: Vec<usize> = (0..b1.len()).filter(|&i| gk.f1()[i] == gk.f1()[b1.iter().position(|&b| b == blk).unwrap()]).collect();
            let xs2: Vec<usize> = (0..b2.len()).filter(|&j| gk.f2()[j] == gk.f1()[xs1[0]]).collect();
            if xs1.len() + xs2.len() < 2 { continue; }
            let new = k;
            for mask1 in 0u32..(1 << xs1.len()) {
                for mask2 in 0u32..(1 << xs2.len()) {
                    let ones = mask1.count_ones() + mask2.count_ones();
                    if ones == 0 || ones as usize == xs1.len() + xs2.len() { continue; }
                    let mut f1 = gk.f1().to_vec();
                    let mut f2 = gk.f2().to_vec();
                    for (t, &i) in xs1.iter().enumerate() { if mask1 >> t & 1 == 1 { f1[i] = new; } }
                    for (t, &j) in xs2.iter().enumerate() { if mask2 >> t & 1 == 1 { f2[j] = new; } }
                    prop_assert!(epsilon_of(&src, &f1, &f2, k + 1).unwrap() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn epsilon_invariant_under_relabeling((b1, b2, w) in blocks(), f1 in prop::collection::vec(0usize..3, 5), f2 in prop::collection::vec(0usize..3, 5), perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let src = block_source(&b1, &b2, &w);
        let f1: Vec<usize> = f1[..b1.len()].to_vec();
        let f2: Vec<usize> = f2[..b2.len()].to_vec();
        let e = epsilon_of(&src, &f1, &f2, 3).unwrap();
        let g1: Vec<usize> = f1.iter().map(|&v| perm[v]).collect();
        let g2: Vec<usize> = f2.iter().map(|&v| perm[v]).collect();
        prop_assert_eq!(e, epsilon_of(&src, &g1, &g2, 3).unwrap());
        // Oracle: direct sum over disagreeing cells.
        let mut d = 0.0;
        for i in 0..b1.len() { for j in 0..b2.len() { if f1[i] != f2[j] { d += src.prob(i, j); } } }
        prop_assert!((e - d).abs() < 1e-12);
    }
}

#[test]
fn enumerated_pairs_round_trip_bit_exactly() {
    let src = block_source(&[0, 1, 1], &[0, 1, 1], &[0.3, 0.2, 0.1, 0.4, 0.25, 0.1, 0.2, 0.1, 0.25]);
    let pairs = enumerate_component_pairs(&src, 3, 0.5).unwrap();
    assert!(pairs.len() > 3);
    for p in &pairs {
        let back = ComponentPair::from_text(&p.to_text()).unwrap();
        assert_eq!(&back, p);
        assert_eq!(back.epsilon().to_bits(), p.epsilon().to_bits());
    }
}
