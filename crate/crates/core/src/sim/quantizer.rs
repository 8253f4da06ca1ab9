use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::info::{mutual_info, JointDist};
use crate::regions::correction_terms_unchecked;
use crate::rng::stream;
use crate::typicality::{enumerate_typical, type_is_typical, ENUMERATION_CAP};
use crate::{Error, Result};

/// Largest number of distinct codewords a codebook may hold.
pub const CODEBOOK_CAP: usize = 1 << 22;

/// Encoder rule of a codebook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncoderRule {
    /// Lowest index jointly typical with the source block at `tau_hat`,
    /// index 1 if none.
    FirstTypical { tau_hat: f64 },
    /// Lowest index among the codewords nearest in Hamming distance.
    MinHamming,
}

/// An `n`-length codebook over `W` with its encoder.
///
/// For the typicality rule, `codewords` holds the distinct codewords in
/// order of first appearance among the `theta` draws and `first_index`
/// their 1-based draw indices. Later duplicates never win the
/// lowest-index rule, so they are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerCodebook {
    pub n: usize,
    pub s_size: usize,
    pub w_size: usize,
    pub rule: EncoderRule,
    pub target: JointDist,
    pub codewords: Vec<Vec<u8>>,
    pub first_index: Vec<u128>,
    /// Number of draws, saturating at `u128::MAX`.
    pub theta: u128,
    pub log2_theta: f64,
    /// `I(W; S)` of the target.
    pub mutual_info: f64,
    /// `theta_n(tau)` for the typicality rule; 0 otherwise.
    pub theta_n: f64,
    pub tau: f64,
}

/// `Theta = ceil(2^{n(I + theta_n) - 1})` with its base-2 log.
pub fn codebook_size(n: usize, mi: f64, theta_n: f64) -> (u128, f64) {
    let x = n as f64 * (mi + theta_n) - 1.0;
    if x >= 127.0 {
        return (u128::MAX, x);
    }
    let t = x.exp2().ceil().max(1.0);
    (t as u128, t.log2())
}

/// Builds the typicality codebook for target `p_sw` (axes `S, W`).
/// `theta` overrides the number of draws; draws are shared between
/// codebooks built from the same seed, so smaller `theta` gives a prefix.
pub fn build_quantizer(p_sw: &JointDist, n: usize, tau: f64, theta: Option<u128>, seed: u64) -> Result<QuantizerCodebook> {
    if p_sw.rank() != 2 {
        return Err(Error::AxisMismatch("target must have axes (S, W)".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("blocklength must be at least 1".into()));
    }
    let (s, w) = (p_sw.sizes()[0], p_sw.sizes()[1]);
    let mi = mutual_info(p_sw, &[0], &[1])?;
    let terms = correction_terms_unchecked(0.0, p_sw, n as f64, tau, 1.0, (0.0, 0.0))?;
    if !terms.theta_n.is_finite() {
        return Err(Error::Precondition(format!(
            "theta_n undefined at n = {n}, tau = {tau}: log argument 2 n tau^2/|S|^2 - ln 2|S| is not positive"
        )));
    }
    let (theta_formula, log2_formula) = codebook_size(n, mi, terms.theta_n);
    let (theta, log2_theta) = match theta {
        Some(t) if t >= 1 => (t, (t as f64).log2()),
        Some(_) => return Err(Error::Precondition("codebook needs at least one draw".into())),
        None => (theta_formula, log2_formula),
    };
    let tau_hat = tau * (s + w) as f64;
    let p_w = p_sw.marginal(&[1])?;
    let set = enumerate_typical(&p_w, n, tau_hat)?;
    if set.count() == 0 {
        return Err(Error::Infeasible(format!("typical set of W empty at n = {n}, tau_hat = {tau_hat}")));
    }
    let mut pool: Vec<Vec<u8>> = set.iter().map(|v| v.values().iter().map(|&a| a as u8).collect()).collect();
    let k = pool.len();
    if k.min(usize::try_from(theta).unwrap_or(usize::MAX)) > CODEBOOK_CAP {
        return Err(Error::CapExceeded(format!(
            "{} distinct codewords exceed the cap {CODEBOOK_CAP}",
            k.min(usize::try_from(theta).unwrap_or(usize::MAX))
        )));
    }
    let mut rng = stream(seed, 0, "codebook");
    pool.shuffle(&mut rng);
    // Draw index at which the (j+1)-th distinct codeword first appears:
    // geometric waiting times with success probability (k - j)/k.
    let mut first_index = Vec::new();
    let mut idx: u128 = 0;
    for j in 0..k {
        let gap = if j == 0 {
            1u128
        } else {
            let q = j as f64 / k as f64;
            let u: f64 = 1.0 - rng.random::<f64>();
            1 + (u.ln() / q.ln()).floor() as u128
        };
        idx = idx.saturating_add(gap);
        if idx > theta {
            break;
        }
        first_index.push(idx);
    }
    pool.truncate(first_index.len());
    Ok(QuantizerCodebook {
        n,
        s_size: s,
        w_size: w,
        rule: EncoderRule::FirstTypical { tau_hat },
        target: p_sw.clone(),
        codewords: pool,
        first_index,
        theta,
        log2_theta,
        mutual_info: mi,
        theta_n: terms.theta_n,
        tau,
    })
}

/// Min-Hamming codebook of `size` codewords drawn i.i.d. from the `W`
/// marginal of `p_sw`; needs `|S| = |W|`.
pub fn build_min_hamming(p_sw: &JointDist, n: usize, size: usize, seed: u64) -> Result<QuantizerCodebook> {
    if p_sw.rank() != 2 || p_sw.sizes()[0] != p_sw.sizes()[1] {
        return Err(Error::AxisMismatch("min-Hamming rule needs a square (S, W) target".into()));
    }
    if size == 0 || n == 0 {
        return Err(Error::Precondition("codebook size and blocklength must be positive".into()));
    }
    if size > CODEBOOK_CAP {
        return Err(Error::CapExceeded(format!("{size} codewords exceed the cap {CODEBOOK_CAP}")));
    }
    let p_w = p_sw.marginal(&[1])?;
    let mut rng = stream(seed, 0, "codebook");
    let codewords = (0..size)
        .map(|_| (0..n).map(|_| sample_index(&mut rng, p_w.probs()) as u8).collect())
        .collect();
    from_codewords(p_sw, n, codewords)
}

/// Min-Hamming quantizer from explicit codewords.
pub fn from_codewords(p_sw: &JointDist, n: usize, codewords: Vec<Vec<u8>>) -> Result<QuantizerCodebook> {
    let w = p_sw.sizes()[1];
    if codewords.is_empty() || codewords.iter().any(|c| c.len() != n || c.iter().any(|&a| a as usize >= w)) {
        return Err(Error::Precondition("codewords must be nonempty, of length n, over W".into()));
    }
    let size = codewords.len();
    Ok(QuantizerCodebook {
        n,
        s_size: p_sw.sizes()[0],
        w_size: w,
        rule: EncoderRule::MinHamming,
        target: p_sw.clone(),
        codewords,
        first_index: (1..=size as u128).collect(),
        theta: size as u128,
        log2_theta: (size as f64).log2(),
        mutual_info: mutual_info(p_sw, &[0], &[1])?,
        theta_n: 0.0,
        tau: 0.0,
    })
}

/// Draws an index from a pmf by inversion.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &q) in p.iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&q| q > 0.0).unwrap_or(0)
}

impl QuantizerCodebook {
    /// Position of the chosen codeword in `codewords`.
    pub fn encode(&self, s: &[u8]) -> usize {
        match self.rule {
            EncoderRule::FirstTypical { tau_hat } => {
                let (sz, wz) = (self.s_size, self.w_size);
                let mut counts = vec![0u64; sz * wz];
                for (k, c) in self.codewords.iter().enumerate() {
                    counts.iter_mut().for_each(|v| *v = 0);
                    for (a, b) in s.iter().zip(c) {
                        counts[*a as usize * wz + *b as usize] += 1;
                    }
                    if type_is_typical(&counts, self.n, self.target.probs(), tau_hat) {
                        return k;
                    }
                }
                0
            }
            EncoderRule::MinHamming => {
                let mut best = (usize::MAX, 0);
                for (k, c) in self.codewords.iter().enumerate() {
                    let d = s.iter().zip(c).filter(|(a, b)| a != b).count();
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                best.1
            }
        }
    }

    /// The encoder's draw index, 1-based.
    pub fn index_of(&self, s: &[u8]) -> u128 {
        self.first_index[self.encode(s)]
    }

    /// Encodes every `s^n` in lexicographic order. Needs `|S|^n <= 2^24`.
    pub fn encode_all(&self) -> Result<Vec<u32>> {
        let total = sequence_count(self.s_size, self.n)?;
        Ok((0..total)
            .into_par_iter()
            .map(|i| self.encode(&decode_seq(i, self.s_size, self.n)) as u32)
            .collect())
    }
}

/// `k^n` if within the enumeration cap.
pub fn sequence_count(k: usize, n: usize) -> Result<usize> {
    let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!("{k}^{n} sequences exceed the cap {ENUMERATION_CAP}")));
    }
    Ok(total as usize)
}

/// Lexicographic index to sequence, most significant symbol first.
pub fn decode_seq(mut i: usize, k: usize, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    for pos in (0..n).rev() {
        v[pos] = (i % k) as u8;
        i /= k;
    }
    v
}

/// Sequence to lexicographic index.
pub fn encode_seq(s: &[u8], k: usize) -> usize {
    s.iter().fold(0, |acc, &a| acc * k + a as usize)
}

/// `log P^n(s)` in nats.
pub fn seq_ln_prob(s: &[u8], p: &[f64]) -> f64 {
    s.iter().map(|&a| p[a as usize].ln()).sum()
}

fn dn_of(s: &[u8], w: &[u8], target: &JointDist) -> f64 {
    let wz = target.sizes()[1];
    let mut counts = vec![0u64; target.num_cells()];
    for (a, b) in s.iter().zip(w) {
        counts[*a as usize * wz + *b as usize] += 1;
    }
    crate::typicality::type_distortion(&counts, s.len(), target.probs())
}

/// Covering failure `P(d^n(S^n, Q(S^n)) > phi)` with a 99% radius
/// (0 in exact mode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covering {
    pub failure: f64,
    pub radius: f64,
    pub exact: bool,
}

/// Exact or sampled covering failure of `q` for source `p_s` against `target`.
pub fn measure_covering(
    q: &QuantizerCodebook,
    p_s: &[f64],
    target: &JointDist,
    phi: f64,
    sampled: Option<(usize, u64)>,
) -> Result<Covering> {
    if p_s.len() != q.s_size || target.sizes() != [q.s_size, q.w_size] {
        return Err(Error::AxisMismatch("source, target and codebook alphabets differ".into()));
    }
    match sampled {
        None => {
            let total = sequence_count(q.s_size, q.n)?;
            let failure: f64 = (0..total)
                .into_par_iter()
                .map(|i| {
                    let s = decode_seq(i, q.s_size, q.n);
                    let pr = seq_ln_prob(&s, p_s).exp();
                    if pr > 0.0 && dn_of(&s, &q.codewords[q.encode(&s)], target) > phi {
                        pr
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            Ok(Covering {
                failure,
                radius: 0.0,
                exact: true,
            })
        }
        Some((samples, seed)) => {
            if samples == 0 {
                return Err(Error::Precondition("sampled mode needs samples > 0".into()));
            }
            let fails: usize = (0..samples)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(seed, t as u64, "covering");
                    let s: Vec<u8> = (0..q.n).map(|_| sample_index(&mut rng, p_s) as u8).collect();
                    usize::from(dn_of(&s, &q.codewords[q.encode(&s)], target) > phi)
                })
                .sum();
            Ok(Covering {
                failure: fails as f64 / samples as f64,
                radius: super::hoeffding_radius(samples, 0.01),
                exact: false,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::hb;

    fn bsc_target(d: f64) -> JointDist {
        JointDist::from_sizes(&[2, 2], vec![(1.0 - d) / 2.0, d / 2.0, d / 2.0, (1.0 - d) / 2.0]).unwrap()
    }

    #[test]
    fn theta_exponent_matches_independent_recomputation() {
        let t = bsc_target(0.2);
        let (n, tau) = (12usize, 0.6);
        let q = build_quantizer(&t, n, tau, None, 3).unwrap();
        // theta_12 for BSC(0.2) with uniform S, written out by hand:
        // log2(2 n tau^2 / 4 - ln 4)/n + tau (sum log 1/P(w|s) / 2 + sum H(W|s) / 2 + 2 sum log 1/P(s)) + 3/n
        let sum_log_cond = 2.0 * (-(0.8f64.log2()) - 0.2f64.log2());
        let th = (2.0 * 12.0 * 0.36 / 4.0 - 4f64.ln()).log2() / 12.0
            + 0.6 * (sum_log_cond / 2.0 + 2.0 * hb(0.2) / 2.0 + 2.0 * 2.0)
            + 3.0 / 12.0;
        assert!((q.theta_n - th).abs() < 1e-12);
        let expo = 12.0 * (1.0 - hb(0.2) + th) - 1.0;
        assert!((q.log2_theta - expo).abs() < 1e-9 || q.theta == u128::MAX);
        assert!(q.log2_theta / n as f64 <= q.mutual_info + q.theta_n + 1e-12);
    }

    #[test]
    fn degenerate_alphabet_and_blocklength() {
        let t = JointDist::from_sizes(&[2, 1], vec![0.5, 0.5]).unwrap();
        let q = build_quantizer(&t, 4, 1.0, None, 1).unwrap();
        assert_eq!(q.codewords.len(), 1);
        assert_eq!(q.encode(&[0, 1, 1, 0]), 0);
        let t = bsc_target(0.2);
        // theta_1 needs 2 tau^2/4 > ln 4, i.e. tau > 1.67.
        assert!(build_quantizer(&t, 1, 1.0, Some(5), 1).is_err());
        let q = build_quantizer(&t, 1, 2.0, Some(5), 1).unwrap();
        assert!(q.codewords.iter().all(|c| c.len() == 1));
        assert!(q.first_index[0] == 1 && q.first_index.iter().all(|&i| i <= 5));
    }

    #[test]
    fn prefix_property_of_shared_draws() {
        let t = bsc_target(0.2);
        let big = build_quantizer(&t, 6, 0.7, Some(1000), 9).unwrap();
        let small = build_quantizer(&t, 6, 0.7, Some(10), 9).unwrap();
        assert_eq!(&big.codewords[..small.codewords.len()], &small.codewords[..]);
        assert!(small.first_index.iter().all(|&i| i <= 10));
    }

    #[test]
    fn min_hamming_ties_pick_lowest_index() {
        let t = bsc_target(0.2);
        let q = from_codewords(&t, 3, vec![vec![0, 0, 1], vec![1, 0, 0], vec![1, 1, 1]]).unwrap();
        assert_eq!(q.encode(&[0, 0, 0]), 0);
        assert_eq!(q.encode(&[1, 1, 0]), 1);
        let cov = measure_covering(&q, &[0.5, 0.5], &t, 1.0, None).unwrap();
        assert_eq!(cov.failure, 0.0);
    }
}
