use rayon::prelude::*;

use crate::info::{entropy, hb, CondDist, JointDist};
use crate::rng::stream;
use crate::{Error, Result};

use super::quantizer::{decode_seq, sample_index, seq_ln_prob, sequence_count, QuantizerCodebook};

/// Average joint type `E[N(a, b | S^n, Q(S^n))]/n` over `S^n ~ p_s` i.i.d.
/// `sampled = Some((samples, seed))` estimates it by Monte Carlo.
pub fn average_type(q: &QuantizerCodebook, p_s: &[f64], sampled: Option<(usize, u64)>) -> Result<JointDist> {
    if p_s.len() != q.s_size {
        return Err(Error::AxisMismatch(format!("source of size {} for |S| = {}", p_s.len(), q.s_size)));
    }
    let cells = q.s_size * q.w_size;
    let count = |s: &[u8], weight: f64, acc: &mut Vec<f64>| {
        let c = &q.codewords[q.encode(s)];
        for (a, b) in s.iter().zip(c) {
            acc[*a as usize * q.w_size + *b as usize] += weight;
        }
    };
    let sum: Vec<f64> = match sampled {
        None => {
            let total = sequence_count(q.s_size, q.n)?;
            // Fixed chunking keeps the floating-point sum order independent
            // of the worker count.
            let chunk = 4096;
            let parts: Vec<Vec<f64>> = (0..total.div_ceil(chunk))
                .into_par_iter()
                .map(|c| {
                    let mut acc = vec![0.0; cells];
                    for i in c * chunk..((c + 1) * chunk).min(total) {
                        let s = decode_seq(i, q.s_size, q.n);
                        let pr = seq_ln_prob(&s, p_s).exp();
                        if pr > 0.0 {
                            count(&s, pr, &mut acc);
                        }
                    }
                    acc
                })
                .collect();
            fold(parts, cells)
        }
        Some((samples, seed)) => {
            if samples == 0 {
                return Err(Error::Precondition("sampled mode needs samples > 0".into()));
            }
            let parts: Vec<Vec<f64>> = (0..samples)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(seed, t as u64, "average-type");
                    let s: Vec<u8> = (0..q.n).map(|_| sample_index(&mut rng, p_s) as u8).collect();
                    let mut acc = vec![0.0; cells];
                    count(&s, 1.0, &mut acc);
                    acc
                })
                .collect();
            fold(parts, cells).into_iter().map(|v| v / samples as f64).collect()
        }
    };
    let probs: Vec<f64> = sum.iter().map(|v| v / q.n as f64).collect();
    let total: f64 = probs.iter().sum();
    JointDist::from_sizes(&[q.s_size, q.w_size], probs.iter().map(|v| v / total).collect())
}

fn fold(parts: Vec<Vec<f64>>, cells: usize) -> Vec<f64> {
    parts.into_iter().fold(vec![0.0; cells], |mut a, p| {
        a.iter_mut().zip(p).for_each(|(x, y)| *x += y);
        a
    })
}

/// The `T`-correction channel `S -> T`, `T` in `{0, 1, ..., |W|}`. `T = 0`
/// keeps the quantizer output; `T = b + 1` overwrites it with `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionChannel {
    pub p_t_given_s: CondDist,
    /// `gamma(a, b) = average(a, b) - target(a, b)`.
    pub gammas: Vec<f64>,
    pub average: JointDist,
    pub target: JointDist,
    /// Max-cell residual of the corrected joint against the target.
    pub residual: f64,
    pub exact: bool,
}

/// Builds the channel from a measured average type and the target `P(S, W)`.
pub fn correction_from_average(average: &JointDist, target: &JointDist, exact: bool) -> Result<CorrectionChannel> {
    if average.sizes() != target.sizes() || target.rank() != 2 {
        return Err(Error::AxisMismatch(format!(
            "average type {:?} vs target {:?}",
            average.sizes(),
            target.sizes()
        )));
    }
    let (s, w) = (target.sizes()[0], target.sizes()[1]);
    let ps = target.marginal(&[0])?;
    let gammas: Vec<f64> = average.probs().iter().zip(target.probs()).map(|(a, t)| a - t).collect();
    let mut kernel = vec![0.0; s * (w + 1)];
    for a in 0..s {
        let pa = ps.probs()[a];
        let mut p0 = 1.0f64;
        for b in 0..w {
            let den = average.probs()[a * w + b];
            if den < 0.0 {
                return Err(Error::Precondition(format!("target + gamma < 0 at ({a}, {b})")));
            }
            if den > 0.0 {
                p0 = p0.min(target.probs()[a * w + b] / den);
            }
        }
        let row = &mut kernel[a * (w + 1)..(a + 1) * (w + 1)];
        if pa > 0.0 {
            row[0] = p0;
            for b in 0..w {
                let m = target.probs()[a * w + b] - average.probs()[a * w + b] * p0;
                row[b + 1] = (m / pa).max(0.0);
            }
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= z);
        } else {
            row[0] = 1.0;
        }
    }
    let p_t_given_s = CondDist::from_sizes(&[s], &[w + 1], kernel)?;
    let corrected = corrected_joint_raw(average, &p_t_given_s, s, w);
    let residual = corrected
        .iter()
        .zip(target.probs())
        .map(|(c, t)| (c - t).abs())
        .fold(0.0, f64::max);
    Ok(CorrectionChannel {
        p_t_given_s,
        gammas,
        average: average.clone(),
        target: target.clone(),
        residual,
        exact,
    })
}

/// Exact (`sampled = None`) or sampled average type, then the channel.
/// `p_s` must be the `S` marginal of the target.
pub fn build_correction(
    q: &QuantizerCodebook,
    p_s: &[f64],
    target: &JointDist,
    sampled: Option<(usize, u64)>,
) -> Result<CorrectionChannel> {
    let ps = target.marginal(&[0])?;
    if ps.probs().len() != p_s.len() || ps.probs().iter().zip(p_s).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Precondition("source pmf differs from the target's S marginal".into()));
    }
    let avg = average_type(q, p_s, sampled)?;
    correction_from_average(&avg, target, sampled.is_none())
}

fn corrected_joint_raw(average: &JointDist, c: &CondDist, s: usize, w: usize) -> Vec<f64> {
    let ps = average.marginal(&[0]).map(|d| d.probs().to_vec()).unwrap_or_default();
    let mut out = vec![0.0; s * w];
    for a in 0..s {
        for b in 0..w {
            out[a * w + b] = average.probs()[a * w + b] * c.prob(a, 0) + ps[a] * c.prob(a, b + 1);
        }
    }
    out
}

impl CorrectionChannel {
    pub fn s_size(&self) -> usize {
        self.target.sizes()[0]
    }

    pub fn w_size(&self) -> usize {
        self.target.sizes()[1]
    }

    /// Joint of `(S, W')` after the correction, `W' = F(W, T)`.
    pub fn corrected_joint(&self) -> Result<JointDist> {
        let v = corrected_joint_raw(&self.average, &self.p_t_given_s, self.s_size(), self.w_size());
        let z: f64 = v.iter().sum();
        JointDist::from_sizes(&[self.s_size(), self.w_size()], v.iter().map(|x| x / z).collect())
    }

    /// `P(T = 0 | a)`.
    pub fn p0(&self, a: usize) -> f64 {
        self.p_t_given_s.prob(a, 0)
    }

    /// `min_a P(T = 0 | a)` over the support of `S`.
    pub fn min_p0(&self) -> f64 {
        let ps = self.target.marginal(&[0]).expect("rank 2");
        (0..self.s_size())
            .filter(|&a| ps.probs()[a] > 0.0)
            .map(|a| self.p0(a))
            .fold(1.0, f64::min)
    }
}

/// `W' = F(w, t)`.
pub fn apply_f(w: usize, t: usize) -> usize {
    if t == 0 {
        w
    } else {
        t - 1
    }
}

/// Rate of the correction side channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionRate {
    pub h_t: f64,
    pub p_t0: f64,
    pub min_p0: f64,
    /// `h_b(min_p0) + (1 - min_p0) log |W|`.
    pub lambda: f64,
}

/// `h_b(p) + (1 - p) log2 |W|`.
pub fn lambda_bound(p: f64, w_size: usize) -> f64 {
    hb(p) + (1.0 - p) * (w_size as f64).log2()
}

/// `H(T)` under `p_s` and the channel, with the bound at the realized
/// `min_a P(T = 0 | a)`.
pub fn correction_rate(c: &CorrectionChannel, p_s: &[f64]) -> Result<CorrectionRate> {
    let ps = JointDist::from_sizes(&[p_s.len()], p_s.to_vec())?;
    let joint = c.p_t_given_s.joint_with(&ps)?;
    let h_t = entropy(&joint, &[1])?;
    let pt = joint.marginal(&[1])?;
    let min_p0 = c.min_p0();
    Ok(CorrectionRate {
        h_t,
        p_t0: pt.probs()[0],
        min_p0,
        lambda: lambda_bound(min_p0, c.w_size()),
    })
}
