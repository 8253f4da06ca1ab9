use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::components::ComponentPair;
use crate::info::{variational_distance, JointDist};
use crate::regions::search::{flmc_specs, spec_record, Scheme, SweepConfig, SweepResult};
use crate::regions::{delta_n, mcml_alpha, FlmcCodingSpec, McmlRateTerms, RateBounds, ReconstructionMap};
use crate::rng::stream;
use crate::source::DistributedSource;
use crate::{Error, Result};

use super::correction::{apply_f, build_correction, correction_rate, CorrectionChannel};
use super::quantizer::{build_quantizer, decode_seq, encode_seq, sample_index, sequence_count, QuantizerCodebook};
use super::hoeffding_radius;

/// Largest `n * m` simulated by [`interleave_and_induce`].
pub const SAMPLE_CAP: usize = 1 << 26;

/// Number of shuffles in the exchangeability test.
pub const EXCHANGE_SHUFFLES: usize = 999;

/// Significance level of the statistical gates.
pub const ALPHA: f64 = 0.01;

fn check_shapes(src: &DistributedSource, comps: &ComponentPair, q: &QuantizerCodebook, c: &CorrectionChannel) -> Result<()> {
    if comps.f1().len() != src.x1_size() || comps.f2().len() != src.x2_size() {
        return Err(Error::AxisMismatch("components do not match the source".into()));
    }
    if q.s_size != comps.s_size() || c.s_size() != q.s_size || c.w_size() != q.w_size {
        return Err(Error::AxisMismatch("codebook, correction and components disagree on |S| or |W|".into()));
    }
    Ok(())
}

/// The single-letter induced joint over `(X1, X2, W1', W2)`: position
/// average of the per-letter marginals of the block construction, computed
/// by enumerating every `(s1^n, s2^n)` pair. Needs `|S|^{2n} <= 2^24`.
pub fn exact_induced(
    src: &DistributedSource,
    comps: &ComponentPair,
    q: &QuantizerCodebook,
    c: &CorrectionChannel,
) -> Result<JointDist> {
    check_shapes(src, comps, q, c)?;
    let (ns, nw, n) = (q.s_size, q.w_size, q.n);
    let blocks = sequence_count(ns, n)?;
    sequence_count(ns, 2 * n)?;
    let enc: Vec<u32> = q.encode_all()?;
    let ps = comps.s_joint(src);
    let ln_ps: Vec<f64> = ps.iter().map(|v| v.ln()).collect();
    let kcells = ns * ns * nw * nw;
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|i1| {
            let s1 = decode_seq(i1, ns, n);
            let w1 = &q.codewords[enc[i1] as usize];
            // P(W1'(i) = w | s1) per position.
            let pw1: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let a = s1[i] as usize;
                    (0..nw)
                        .map(|w| c.p0(a) * f64::from(u8::from(w1[i] as usize == w)) + c.p_t_given_s.prob(a, w + 1))
                        .collect()
                })
                .collect();
            let mut acc = vec![0.0; kcells];
            for i2 in 0..blocks {
                let s2 = decode_seq(i2, ns, n);
                let lp: f64 = s1.iter().zip(&s2).map(|(&a, &b)| ln_ps[a as usize * ns + b as usize]).sum();
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let pr = lp.exp();
                let w2 = &q.codewords[enc[i2] as usize];
                for i in 0..n {
                    let base = ((s1[i] as usize * ns + s2[i] as usize) * nw) * nw + w2[i] as usize;
                    for (w, &pw) in pw1[i].iter().enumerate() {
                        acc[base + w * nw] += pr * pw;
                    }
                }
            }
            acc
        })
        .collect();
    let mut k = vec![0.0; kcells];
    for p in parts {
        k.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let (f1, f2) = (comps.f1(), comps.f2());
    let sizes = [src.x1_size(), src.x2_size(), nw, nw];
    let mut raw = vec![0.0; sizes.iter().product()];
    crate::info::for_each_index(&sizes, |ix, flat| {
        let (a, b) = (f1[ix[0]], f2[ix[1]]);
        let pab = ps[a * ns + b];
        if pab > 0.0 {
            raw[flat] = src.prob(ix[0], ix[1]) * k[((a * ns + b) * nw + ix[2]) * nw + ix[3]] / (n as f64 * pab);
        }
    });
    // Absorb summation drift before validation.
    let z: f64 = raw.iter().sum();
    JointDist::from_sizes(&sizes, raw.iter().map(|v| v / z).collect())
}

/// `P'(x1, x2, w1, w2) P(u1 | x1, w1) P(u2 | x2, w2)` over
/// `(X1, X2, W1', W2, U1, U2)`.
pub fn with_u_kernels(p4: &JointDist, spec: &FlmcCodingSpec) -> Result<JointDist> {
    let nw = spec.w_size();
    if p4.rank() != 4 || p4.sizes()[2] != nw || p4.sizes()[3] != nw {
        return Err(Error::AxisMismatch("induced joint must be (X1, X2, W1', W2)".into()));
    }
    let s = p4.sizes();
    JointDist::from_fn(&[s[0], s[1], nw, nw, spec.u1_size(), spec.u2_size()], |i| {
        p4.prob(&i[..4]) * spec.p_u1.prob(i[0] * nw + i[2], i[4]) * spec.p_u2.prob(i[1] * nw + i[3], i[5])
    })
}

/// `1(w1 = w2) P(x1, x2) P(w1 | f1(x1)) P(u1 | x1, w1) P(u2 | x2, w1)` over
/// `(X1, X2, W1, W2, U1, U2)`, the axis order of the induced joint.
pub fn claim3_reference(src: &DistributedSource, spec: &FlmcCodingSpec) -> Result<JointDist> {
    let nw = spec.w_size();
    let f1 = spec.components.f1();
    JointDist::from_fn(&[src.x1_size(), src.x2_size(), nw, nw, spec.u1_size(), spec.u2_size()], |i| {
        if i[2] != i[3] {
            return 0.0;
        }
        src.prob(i[0], i[1])
            * spec.p_w.prob(f1[i[0]], i[2])
            * spec.p_u1.prob(i[0] * nw + i[2], i[4])
            * spec.p_u2.prob(i[1] * nw + i[2], i[5])
    })
}

/// `(V(P', Q), 1 - p + p delta_n + eps, V <= bound)`.
pub fn claim3_check(p_prime: &JointDist, q: &JointDist, epsilon: f64, p_tau: f64, delta_n: f64) -> Result<(f64, f64, bool)> {
    if p_prime.sizes() != q.sizes() {
        return Err(Error::AxisMismatch(format!("{:?} vs {:?}", p_prime.sizes(), q.sizes())));
    }
    let v = variational_distance(p_prime, q)?;
    let bound = 1.0 - p_tau + p_tau * delta_n + epsilon;
    Ok((v, bound, v <= bound))
}

/// Output of [`interleave_and_induce`].
#[derive(Debug, Clone, PartialEq)]
pub struct InterleaveReport {
    pub n: usize,
    pub m: usize,
    /// Pooled empirical joint over `(X1, X2, W1', W2)`.
    pub empirical: JointDist,
    /// Standard error per cell: block-mean estimate floored at the
    /// i.i.d. value `sqrt(p(1-p)/(nm))`.
    pub std_err: Vec<f64>,
    /// Chi-square homogeneity of the `n` rows.
    pub row_chi2: f64,
    pub row_df: usize,
    pub row_p_value: f64,
    /// Lag-1 equality count on row 0 against block shuffles.
    pub exchange_stat: f64,
    pub exchange_p_value: f64,
    /// Mean fraction of positions with `W1' = W2` and `S1 = S2`.
    pub agree: f64,
    pub agree_radius: f64,
    /// Blocks where `S1^n = S2^n` but the quantizer outputs differ.
    pub common_input_mismatch: usize,
}

/// Simulates `m` blocks of length `n`: both encoders quantize with `q`,
/// the first chain is corrected by `c`, and each block is permuted
/// uniformly. Row `j` of the permuted array collects position `pi_l(j)`.
pub fn interleave_and_induce(
    q: &QuantizerCodebook,
    c: &CorrectionChannel,
    src: &DistributedSource,
    comps: &ComponentPair,
    m: usize,
    seed: u64,
) -> Result<InterleaveReport> {
    check_shapes(src, comps, q, c)?;
    let (n, nw, ns) = (q.n, q.w_size, q.s_size);
    if m == 0 {
        return Err(Error::Precondition("m must be positive".into()));
    }
    if n.saturating_mul(m) > SAMPLE_CAP {
        return Err(Error::CapExceeded(format!("n m = {} exceeds {SAMPLE_CAP}", n * m)));
    }
    let table = sequence_count(ns, n).ok().map(|_| q.encode_all()).transpose()?;
    let encode = |s: &[u8]| -> usize {
        match &table {
            Some(t) => t[encode_seq(s, ns)] as usize,
            None => q.encode(s),
        }
    };
    let (nx1, nx2) = (src.x1_size(), src.x2_size());
    let cells = nx1 * nx2 * nw * nw;
    let (f1, f2) = (comps.f1(), comps.f2());
    let pmf = src.pmf().probs().to_vec();

    struct Block {
        rows: Vec<u32>,
        agree: usize,
        mismatch: bool,
    }
    let blocks: Vec<Block> = (0..m)
        .into_par_iter()
        .map(|l| {
            let mut rs = stream(seed, l as u64, "source");
            let mut rt = stream(seed, l as u64, "t");
            let mut rp = stream(seed, l as u64, "perm");
            let xs: Vec<usize> = (0..n).map(|_| sample_index(&mut rs, &pmf)).collect();
            let x1: Vec<usize> = xs.iter().map(|v| v / nx2).collect();
            let x2: Vec<usize> = xs.iter().map(|v| v % nx2).collect();
            let s1: Vec<u8> = x1.iter().map(|&x| f1[x] as u8).collect();
            let s2: Vec<u8> = x2.iter().map(|&x| f2[x] as u8).collect();
            let w1 = &q.codewords[encode(&s1)];
            let w2 = &q.codewords[encode(&s2)];
            let mismatch = s1 == s2 && w1 != w2;
            let w1p: Vec<usize> = (0..n)
                .map(|i| {
                    let t = sample_index(&mut rt, c.p_t_given_s.row(s1[i] as usize));
                    apply_f(w1[i] as usize, t)
                })
                .collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rp);
            let rows = perm
                .iter()
                .map(|&i| (((x1[i] * nx2 + x2[i]) * nw + w1p[i]) * nw + w2[i] as usize) as u32)
                .collect();
            let agree = (0..n).filter(|&i| s1[i] == s2[i] && w1p[i] == w2[i] as usize).count();
            Block { rows, agree, mismatch }
        })
        .collect();

    let mut row_counts = vec![0u64; n * cells];
    let mut sum = vec![0.0; cells];
    let mut sumsq = vec![0.0; cells];
    let mut agree = 0.0;
    let mut mismatch = 0;
    let mut block_counts = vec![0u32; cells];
    for b in &blocks {
        block_counts.iter_mut().for_each(|v| *v = 0);
        for (j, &cell) in b.rows.iter().enumerate() {
            row_counts[j * cells + cell as usize] += 1;
            block_counts[cell as usize] += 1;
        }
        for (k, &v) in block_counts.iter().enumerate() {
            let f = v as f64 / n as f64;
            sum[k] += f;
            sumsq[k] += f * f;
        }
        agree += b.agree as f64 / n as f64;
        mismatch += usize::from(b.mismatch);
    }
    let mf = m as f64;
    let emp: Vec<f64> = sum.iter().map(|v| v / mf).collect();
    let std_err: Vec<f64> = (0..cells)
        .map(|k| {
            let var = if m > 1 { ((sumsq[k] - mf * emp[k] * emp[k]) / (mf - 1.0)).max(0.0) } else { 0.0 };
            (var / mf).sqrt().max((emp[k] * (1.0 - emp[k]) / (n as f64 * mf)).sqrt())
        })
        .collect();
    let empirical = JointDist::from_sizes(&[nx1, nx2, nw, nw], emp)?;

    let (row_chi2, row_df, row_p_value) = row_homogeneity(&row_counts, n, cells);
    let seq: Vec<u32> = blocks.iter().map(|b| b.rows[0]).collect();
    let (exchange_stat, exchange_p_value) = exchangeability(&seq, seed);

    Ok(InterleaveReport {
        n,
        m,
        empirical,
        std_err,
        row_chi2,
        row_df,
        row_p_value,
        exchange_stat,
        exchange_p_value,
        agree: agree / mf,
        agree_radius: hoeffding_radius(m, ALPHA),
        common_input_mismatch: mismatch,
    })
}

/// Pearson chi-square test that the `rows x cells` counts share one
/// distribution; empty columns are dropped. Returns `(stat, df, p)`.
pub fn row_homogeneity(counts: &[u64], rows: usize, cells: usize) -> (f64, usize, f64) {
    let col: Vec<u64> = (0..cells).map(|k| (0..rows).map(|j| counts[j * cells + k]).sum()).collect();
    let row: Vec<u64> = (0..rows).map(|j| counts[j * cells..(j + 1) * cells].iter().sum()).collect();
    let total: u64 = row.iter().sum();
    let live: Vec<usize> = (0..cells).filter(|&k| col[k] > 0).collect();
    if rows < 2 || live.len() < 2 || total == 0 {
        return (0.0, 0, 1.0);
    }
    let mut stat = 0.0;
    for j in 0..rows {
        for &k in &live {
            let e = row[j] as f64 * col[k] as f64 / total as f64;
            let o = counts[j * cells + k] as f64;
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = (rows - 1) * (live.len() - 1);
    let p = ChiSquared::new(df as f64).map(|d| 1.0 - d.cdf(stat)).unwrap_or(1.0);
    (stat, df, p)
}

fn lag1_equal(seq: &[u32]) -> f64 {
    seq.windows(2).filter(|w| w[0] == w[1]).count() as f64
}

/// Two-sided permutation test of the lag-1 equality count against
/// [`EXCHANGE_SHUFFLES`] block shuffles. Returns `(stat, p)`.
pub fn exchangeability(seq: &[u32], seed: u64) -> (f64, f64) {
    let obs = lag1_equal(seq);
    if seq.len() < 3 {
        return (obs, 1.0);
    }
    let null: Vec<f64> = (0..EXCHANGE_SHUFFLES)
        .into_par_iter()
        .map(|k| {
            let mut v = seq.to_vec();
            v.shuffle(&mut stream(seed, k as u64, "exchangeability"));
            lag1_equal(&v)
        })
        .collect();
    let center = null.iter().sum::<f64>() / null.len() as f64;
    let d = (obs - center).abs();
    let extreme = null.iter().filter(|&&s| (s - center).abs() >= d - 1e-9).count();
    (obs, (1 + extreme) as f64 / (1 + EXCHANGE_SHUFFLES) as f64)
}

/// Largest `|empirical - exact| / std_err` over cells.
pub fn max_z(report: &InterleaveReport, exact: &JointDist) -> f64 {
    report
        .empirical
        .probs()
        .iter()
        .zip(exact.probs())
        .zip(&report.std_err)
        .map(|((e, x), s)| {
            let d = (e - x).abs();
            if d == 0.0 {
                0.0
            } else if *s > 0.0 {
                d / s
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Everything measured when the construction is run exactly at small `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactConstruction {
    pub quantizer: QuantizerCodebook,
    pub correction: CorrectionChannel,
    /// Induced joint over `(X1, X2, W1', W2, U1, U2)`.
    pub p_prime: JointDist,
    pub terms: McmlRateTerms,
    pub h_t: f64,
}

/// Builds the typicality quantizer for `P(S1, W)`, the exact correction
/// and the exact induced joint. Rate terms are the measured ones:
/// `theta = log2(Theta)/n - I(W; S1)`, `lambda = H(T)`, `p` the realized
/// `min_a P(T = 0 | a)`.
pub fn exact_construction(
    src: &DistributedSource,
    spec: &FlmcCodingSpec,
    n: usize,
    tau: f64,
    seed: u64,
) -> Result<ExactConstruction> {
    let p_sw = spec.p_sw(src)?;
    let q = build_quantizer(&p_sw, n, tau, None, seed)?;
    let p_s = spec.components.s1_marginal(src);
    let c = build_correction(&q, &p_s, &p_sw, None)?;
    let rate = correction_rate(&c, &p_s)?;
    let p4 = exact_induced(src, &spec.components, &q, &c)?;
    let p_prime = with_u_kernels(&p4, spec)?;
    let eps = spec.components.epsilon();
    let dn = delta_n(eps, n as f64);
    let nw = spec.w_size() as f64;
    let e = crate::info::hb(dn) / n as f64 + dn * nw.log2();
    let terms = McmlRateTerms {
        e,
        lambda: rate.h_t,
        theta: (q.log2_theta / n as f64 - q.mutual_info).max(0.0),
        p_tau: rate.min_p0,
        delta_n: dn,
    };
    Ok(ExactConstruction {
        quantizer: q,
        correction: c,
        p_prime,
        terms,
        h_t: rate.h_t,
    })
}

/// Multi-letter bounds of one spec at small `n`, with Bayes-optimal
/// reconstructions from `(W1', W2, U1, U2)`.
pub fn mcml_point(src: &DistributedSource, spec: &FlmcCodingSpec, n: usize, tau: f64, seed: u64) -> Result<RateBounds> {
    let ex = exact_construction(src, spec, n, tau, seed)?;
    let g1 = ReconstructionMap::optimal(&ex.p_prime, 0, &[2, 3, 4, 5], src.d1())?;
    let g2 = ReconstructionMap::optimal(&ex.p_prime, 1, &[2, 3, 4, 5], src.d2())?;
    mcml_alpha(src, spec, &ex.p_prime, &ex.terms, &g1, &g2)
}

/// Multi-letter sweep over the finite-length specs and the `(n, tau)`
/// grid. Points whose quantizer cannot be built are skipped.
pub fn sweep_mcml(src: &DistributedSource, cfg: &SweepConfig) -> Result<SweepResult> {
    let specs = flmc_specs(src, cfg)?;
    let grid = cfg.n_tau_grid()?;
    let jobs: Vec<(usize, u64, f64)> = (0..specs.len())
        .flat_map(|k| grid.iter().map(move |&(n, t)| (k, n, t)))
        .collect();
    let evals: Vec<Result<RateBounds>> = jobs
        .iter()
        .map(|&(k, n, t)| {
            let seed = stream(cfg.seed, k as u64, "mcml-codebook").random::<u64>();
            mcml_point(src, &specs[k], n as usize, t, seed)
        })
        .collect();
    let mut out = SweepResult::default();
    for (&(k, n, t), e) in jobs.iter().zip(evals) {
        match e {
            Ok(b) => out.push(Scheme::Mcml, Some(n), Some(t), b.corners(), spec_record(&specs[k])),
            Err(Error::Infeasible(msg) | Error::Precondition(msg) | Error::CapExceeded(msg)) => {
                out.skipped.push(format!("spec {k}, n = {n}, tau = {t}: {msg}"))
            }
            Err(e) => return Err(e),
        }
    }
    if out.points.is_empty() {
        return Err(Error::Infeasible(
            out.skipped.first().cloned().unwrap_or_else(|| "empty multi-letter sweep".into()),
        ));
    }
    Ok(out)
}
