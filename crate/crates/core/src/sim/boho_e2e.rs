use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::info::{binary_convolve, JointDist};
use crate::regions::delta_n;
use crate::rng::stream;
use crate::{Error, Result};

use super::hoeffding_radius;
use super::quantizer::{build_min_hamming, decode_seq, sequence_count, QuantizerCodebook};

/// Largest blocklength of the first-layer codebook.
pub const MAX_N: usize = 20;

/// Inputs of the end-to-end BOHO simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BohoSimParams {
    pub p: f64,
    pub epsilon: f64,
    pub n: usize,
    pub m: usize,
    /// Target first-layer distortion used to pick the codebook.
    pub delta: f64,
    pub delta1: f64,
    pub codebook_size: usize,
    pub candidates: usize,
    pub seed: u64,
}

impl Default for BohoSimParams {
    fn default() -> Self {
        BohoSimParams {
            p: 0.3,
            epsilon: 1e-3,
            n: 8,
            m: 100_000,
            delta: 0.2,
            delta1: 0.05,
            codebook_size: 6,
            candidates: 64,
            seed: 1,
        }
    }
}

/// Exact `E d_H(X^n, Q(X^n))/n` for uniform binary `X^n`.
pub fn exact_distortion(q: &QuantizerCodebook) -> Result<f64> {
    let total = sequence_count(2, q.n)?;
    let sum: usize = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = decode_seq(i, 2, q.n);
            let c = &q.codewords[q.encode(&x)];
            x.iter().zip(c).filter(|(a, b)| a != b).count()
        })
        .sum();
    Ok(sum as f64 / (total * q.n) as f64)
}

/// Among `candidates` min-Hamming codebooks of `size` codewords, the one
/// whose exact distortion is closest to `delta` (lowest candidate index on
/// ties). Returns the codebook and its distortion.
pub fn targeted_codebook(n: usize, size: usize, delta: f64, candidates: usize, seed: u64) -> Result<(QuantizerCodebook, f64)> {
    if n == 0 || n > MAX_N {
        return Err(Error::Infeasible(format!("first-layer blocklength {n} outside [1, {MAX_N}]")));
    }
    if candidates == 0 {
        return Err(Error::Precondition("need at least one candidate codebook".into()));
    }
    let target = JointDist::from_sizes(&[2, 2], vec![(1.0 - delta) / 2.0, delta / 2.0, delta / 2.0, (1.0 - delta) / 2.0])?;
    let mut best: Option<(QuantizerCodebook, f64)> = None;
    for k in 0..candidates {
        let cseed = stream(seed, k as u64, "candidate").random::<u64>();
        let q = build_min_hamming(&target, n, size, cseed)?;
        let d = exact_distortion(&q)?;
        if best.as_ref().is_none_or(|(_, bd)| (d - delta).abs() < (bd - delta).abs()) {
            best = Some((q, d));
        }
    }
    best.ok_or_else(|| Error::Precondition("no candidate".into()))
}

/// Measured quantities of one end-to-end run.
#[derive(Debug, Clone, PartialEq)]
pub struct BohoSimReport {
    pub codebook_distortion: f64,
    pub delta_prime_meas: f64,
    pub delta_n: f64,
    pub d2_meas: f64,
    pub d2_radius: f64,
    /// `delta1 + delta_n (delta' + (eps/delta_n) * delta')` at the measured `delta'`.
    pub d2_bound: f64,
    /// `E w(V + V_hat)/n` measured.
    pub mismatch_weight: f64,
    /// Blocks with `E^n = 0` but `V != V_hat`.
    pub error_free_mismatch: usize,
    pub blocks_with_error: usize,
    /// Per-row mean of the permuted `S` array.
    pub row_means: Vec<f64>,
    /// `p * delta'_meas`.
    pub fin1_param: f64,
    pub fin1_max_z: f64,
    /// Bonferroni critical value at level 0.01 over `n` rows.
    pub fin1_critical: f64,
}

impl BohoSimReport {
    pub fn d2_passed(&self) -> bool {
        self.d2_meas <= self.d2_bound + 3.0 * self.d2_radius
    }

    pub fn fin1_passed(&self) -> bool {
        self.fin1_max_z <= self.fin1_critical
    }
}

/// Runs `m` blocks: both encoders quantize with the first-layer codebook,
/// encoder 2 forms `S = X + V_hat + Z` and permutes it, the second layer is
/// an exact `Bern(delta1)` test channel on the permuted array, and the
/// decoder outputs `U + V`.
pub fn boho_end_to_end(params: &BohoSimParams) -> Result<BohoSimReport> {
    let BohoSimParams { p, epsilon, n, m, delta1, .. } = *params;
    if !(p > 0.0 && p < 0.5) || !(0.0..0.5).contains(&epsilon) || !(0.0..=0.5).contains(&delta1) {
        return Err(Error::OutOfRange(format!("p = {p}, eps = {epsilon}, delta1 = {delta1}")));
    }
    if m < 2 {
        return Err(Error::Precondition("m must be at least 2".into()));
    }
    if n.saturating_mul(m) > super::interleave::SAMPLE_CAP {
        return Err(Error::CapExceeded(format!("n m = {} exceeds the sample cap", n * m)));
    }
    let (q, dq) = targeted_codebook(n, params.codebook_size, params.delta, params.candidates, params.seed)?;
    let enc = q.encode_all()?;
    let index = |v: &[u8]| v.iter().fold(0usize, |a, &b| a * 2 + b as usize);
    let seed = params.seed;

    struct Block {
        s_tilde: Vec<u8>,
        xv: usize,
        err: usize,
        vv: usize,
        e_nonzero: bool,
    }
    let blocks: Vec<Block> = (0..m)
        .into_par_iter()
        .map(|l| {
            let mut rs = stream(seed, l as u64, "source");
            let mut rp = stream(seed, l as u64, "perm");
            let mut rn = stream(seed, l as u64, "second-layer");
            let x: Vec<u8> = (0..n).map(|_| u8::from(rs.random::<bool>())).collect();
            let e: Vec<u8> = (0..n).map(|_| u8::from(rs.random::<f64>() < epsilon)).collect();
            let z: Vec<u8> = (0..n).map(|_| u8::from(rs.random::<f64>() < p)).collect();
            let x1: Vec<u8> = x.iter().zip(&e).map(|(a, b)| a ^ b).collect();
            let v = &q.codewords[enc[index(&x1)] as usize];
            let vh = &q.codewords[enc[index(&x)] as usize];
            let s: Vec<u8> = (0..n).map(|i| x[i] ^ vh[i] ^ z[i]).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rp);
            let s_tilde: Vec<u8> = perm.iter().map(|&i| s[i]).collect();
            let u_tilde: Vec<u8> = s_tilde.iter().map(|&b| b ^ u8::from(rn.random::<f64>() < delta1)).collect();
            let mut u = vec![0u8; n];
            for (j, &i) in perm.iter().enumerate() {
                u[i] = u_tilde[j];
            }
            let err = (0..n).filter(|&i| (x[i] ^ z[i]) != (u[i] ^ v[i])).count();
            Block {
                s_tilde,
                xv: x.iter().zip(vh).filter(|(a, b)| a != b).count(),
                err,
                vv: v.iter().zip(vh).filter(|(a, b)| a != b).count(),
                e_nonzero: e.contains(&1),
            }
        })
        .collect();

    let (mf, nf) = (m as f64, n as f64);
    let mut row_sum = vec![0u64; n];
    let (mut xv, mut err, mut vv) = (0usize, 0usize, 0usize);
    let (mut error_free_mismatch, mut blocks_with_error) = (0, 0);
    for b in &blocks {
        for (j, &bit) in b.s_tilde.iter().enumerate() {
            row_sum[j] += bit as u64;
        }
        xv += b.xv;
        err += b.err;
        vv += b.vv;
        if b.e_nonzero {
            blocks_with_error += 1;
        } else if b.vv > 0 {
            error_free_mismatch += 1;
        }
    }
    let dp = xv as f64 / (mf * nf);
    let dn = delta_n(epsilon, nf);
    let loss = 2.0 * dn * dp + epsilon * (1.0 - 2.0 * dp);
    let fin1_param = binary_convolve(p, dp)?;
    let row_means: Vec<f64> = row_sum.iter().map(|&s| s as f64 / mf).collect();
    let sd = (fin1_param * (1.0 - fin1_param) / mf).sqrt();
    let fin1_max_z = row_means.iter().map(|r| (r - fin1_param).abs() / sd).fold(0.0, f64::max);
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Precondition(e.to_string()))?;
    let fin1_critical = normal.inverse_cdf(1.0 - 0.01 / (2.0 * nf));
    Ok(BohoSimReport {
        codebook_distortion: dq,
        delta_prime_meas: dp,
        delta_n: dn,
        d2_meas: err as f64 / (mf * nf),
        d2_radius: hoeffding_radius(m, 0.01),
        d2_bound: delta1 + loss,
        mismatch_weight: vv as f64 / (mf * nf),
        error_free_mismatch,
        blocks_with_error,
        row_means,
        fin1_param,
        fin1_max_z,
        fin1_critical,
    })
}
