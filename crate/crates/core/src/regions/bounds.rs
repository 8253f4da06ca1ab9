use crate::components::ComponentPair;
use crate::info::{cond_mutual_info, mutual_info, CondDist, JointDist};
use crate::source::{DistortionTable, DistributedSource, DistributedSourceSi};
use crate::{Error, Result};

use super::corrections::{flmc_corrections, FlmcCorrectionTerms};
use super::spec::{FlmcCodingSpec, ReconstructionMap};
use super::RateBounds;

/// Axis order of [`flmc_joint`]: `(X1, X2, W, U1, U2)`.
pub const FLMC_AXES: [&str; 5] = ["X1", "X2", "W", "U1", "U2"];
const X1: usize = 0;
const X2: usize = 1;
const W: usize = 2;
const U1: usize = 3;
const U2: usize = 4;

/// `P(x1,x2) P(w|f1(x1)) P(u1|x1,w) P(u2|x2,w)` over `(X1, X2, W, U1, U2)`.
pub fn flmc_joint(src: &DistributedSource, spec: &FlmcCodingSpec) -> Result<JointDist> {
    let (w, u1, u2) = (spec.w_size(), spec.u1_size(), spec.u2_size());
    let f1 = spec.components.f1();
    JointDist::from_fn(&[src.x1_size(), src.x2_size(), w, u1, u2], |i| {
        src.prob(i[0], i[1])
            * spec.p_w.prob(f1[i[0]], i[2])
            * spec.p_u1.prob(i[0] * w + i[2], i[3])
            * spec.p_u2.prob(i[1] * w + i[2], i[4])
    })
}

/// `E d(X_axis, g(args))` under `joint`.
pub fn expected_distortion(
    joint: &JointDist,
    x_axis: usize,
    arg_axes: &[usize],
    g: &ReconstructionMap,
    d: &DistortionTable,
) -> f64 {
    let mut total = 0.0;
    let mut args = vec![0usize; arg_axes.len()];
    crate::info::for_each_index(joint.sizes(), |idx, flat| {
        let p = joint.probs()[flat];
        if p > 0.0 {
            for (k, &a) in arg_axes.iter().enumerate() {
                args[k] = idx[a];
            }
            total += p * d.get(idx[x_axis], g.get(&args));
        }
    });
    total
}

fn single_letter_bounds(src: &DistributedSource, spec: &FlmcCodingSpec) -> Result<(JointDist, RateBounds)> {
    let j = flmc_joint(src, spec)?;
    let b = RateBounds {
        r1: cond_mutual_info(&j, &[X1], &[U1], &[W, U2])?,
        r2: cond_mutual_info(&j, &[X2], &[U2], &[W, U1])?,
        sum: mutual_info(&j, &[X1, X2], &[U1, U2, W])?,
        d1: expected_distortion(&j, X1, &[W, U1, U2], &spec.g1, src.d1()),
        d2: expected_distortion(&j, X2, &[W, U1, U2], &spec.g2, src.d2()),
    };
    Ok((j, b))
}

/// Common-component bounds: `R1 >= I(X1;U1|W,U2)`, `R2 >= I(X2;U2|W,U1)`,
/// `R1 + R2 >= I(X1,X2;U1,U2,W)`, `Di >= E di(Xi, gi(W,U1,U2))`.
pub fn cc_alpha(src: &DistributedSource, spec: &FlmcCodingSpec) -> Result<RateBounds> {
    if spec.components.epsilon() != 0.0 {
        return Err(Error::Precondition(format!(
            "common-component scheme needs epsilon = 0, got {}",
            spec.components.epsilon()
        )));
    }
    Ok(single_letter_bounds(src, spec)?.1)
}

/// Berger-Tung bounds: the common-component scheme with trivial `S` and `W`.
/// `p_u1: X1 -> U1`, `p_u2: X2 -> U2`, `gi: (U1, U2) -> Xi`.
pub fn bt_alpha(
    src: &DistributedSource,
    p_u1: &CondDist,
    p_u2: &CondDist,
    g1: &ReconstructionMap,
    g2: &ReconstructionMap,
) -> Result<RateBounds> {
    let trivial = ComponentPair::new(src, 1, vec![0; src.x1_size()], vec![0; src.x2_size()])?;
    let lift = |g: &ReconstructionMap| {
        ReconstructionMap::new(&[1, g.arg_sizes()[0], g.arg_sizes()[1]], g.out_size(), g.table().to_vec())
    };
    let spec = FlmcCodingSpec::new(
        src,
        trivial,
        CondDist::from_sizes(&[1], &[1], vec![1.0])?,
        CondDist::from_sizes(&[src.x1_size(), 1], &[p_u1.to_len()], p_u1.kernel().to_vec())?,
        CondDist::from_sizes(&[src.x2_size(), 1], &[p_u2.to_len()], p_u2.kernel().to_vec())?,
        lift(g1)?,
        lift(g2)?,
    )?;
    cc_alpha(src, &spec)
}

/// Finite-length bounds: the common-component mutual informations plus the
/// correction terms, and distortions inflated by `2 x d_max`.
pub fn flmc_alpha(
    src: &DistributedSource,
    spec: &FlmcCodingSpec,
    n: u64,
    tau: f64,
) -> Result<(RateBounds, FlmcCorrectionTerms)> {
    let t = flmc_corrections(
        &spec.components,
        &spec.p_sw(src)?,
        n,
        tau,
        (src.d1().max(), src.d2().max()),
        (spec.u1_size(), spec.u2_size()),
    )?;
    Ok((apply_flmc_terms(src, spec, &t)?, t))
}

pub(crate) fn apply_flmc_terms(
    src: &DistributedSource,
    spec: &FlmcCodingSpec,
    t: &FlmcCorrectionTerms,
) -> Result<RateBounds> {
    let (_, b) = single_letter_bounds(src, spec)?;
    Ok(RateBounds {
        r1: b.r1 + t.e_n + t.gamma_n + t.lambda_n,
        r2: b.r2 + t.e_n + t.gamma_n,
        sum: b.sum + t.e_n + t.gamma_n + t.lambda_n + t.theta_n,
        d1: b.d1 + 2.0 * t.x * t.d_max1,
        d2: b.d2 + 2.0 * t.x * t.d_max2,
    })
}

/// Side-information bounds with a trivial time-sharing variable.
/// Joint axes `(X1, X2, Y1, Y2, U1, U2)`; `p_u1: (X1, Y1) -> U1`,
/// `p_u2: (X2, Y2) -> U2`, `gi: (U1, U2, Y1, Y2) -> Xi`.
pub fn btsi_alpha(
    src: &DistributedSourceSi,
    p_u1: &CondDist,
    p_u2: &CondDist,
    g1: &ReconstructionMap,
    g2: &ReconstructionMap,
) -> Result<RateBounds> {
    let s = src.pmf().sizes();
    let (y1, y2) = (s[2], s[3]);
    if p_u1.from_len() != s[0] * y1 || p_u2.from_len() != s[1] * y2 {
        return Err(Error::AxisMismatch("U kernels must take (Xi, Yi)".into()));
    }
    let (nu1, nu2) = (p_u1.to_len(), p_u2.to_len());
    let args = [nu1, nu2, y1, y2];
    if g1.arg_sizes() != args || g2.arg_sizes() != args || g1.out_size() != s[0] || g2.out_size() != s[1] {
        return Err(Error::AxisMismatch(
            "reconstruction maps must take (U1, U2, Y1, Y2) to the source alphabets".into(),
        ));
    }
    let pmf = src.pmf();
    let j = JointDist::from_fn(&[s[0], s[1], y1, y2, nu1, nu2], |i| {
        pmf.prob(&i[..4]) * p_u1.prob(i[0] * y1 + i[2], i[4]) * p_u2.prob(i[1] * y2 + i[3], i[5])
    })?;
    Ok(RateBounds {
        r1: cond_mutual_info(&j, &[0], &[4], &[5, 2, 3])?,
        r2: cond_mutual_info(&j, &[1], &[5], &[4, 2, 3])?,
        sum: cond_mutual_info(&j, &[0, 1], &[4, 5], &[2, 3])?,
        d1: expected_distortion(&j, 0, &[4, 5, 2, 3], g1, src.d1()),
        d2: expected_distortion(&j, 1, &[4, 5, 2, 3], g2, src.d2()),
    })
}

/// Rate terms charged on top of the multi-letter mutual informations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmlRateTerms {
    pub e: f64,
    pub lambda: f64,
    pub theta: f64,
    pub p_tau: f64,
    pub delta_n: f64,
}

impl From<&FlmcCorrectionTerms> for McmlRateTerms {
    fn from(t: &FlmcCorrectionTerms) -> Self {
        McmlRateTerms {
            e: t.e_n,
            lambda: t.lambda_n,
            theta: t.theta_n,
            p_tau: t.p_tau,
            delta_n: t.delta_n,
        }
    }
}

/// Residuals of the five structural conditions on an induced joint
/// `P'(X1, X2, W1', W2, U1, U2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmlConditionReport {
    /// Max-cell residuals for conditions 1, 2, 4, 5; for condition 3 the
    /// shortfall `p(tau)(1 - delta_n) - P'(W1' = W2, S1 = S2)` (negative is slack).
    pub residuals: [f64; 5],
    pub tolerance: f64,
}

impl McmlConditionReport {
    pub fn passed(&self) -> [bool; 5] {
        self.residuals.map(|r| r <= self.tolerance)
    }

    pub fn all_passed(&self) -> bool {
        self.passed().iter().all(|&b| b)
    }
}

/// Checks the five conditions on `p_prime` (axes `X1, X2, W1', W2, U1, U2`).
pub fn mcml_conditions(
    src: &DistributedSource,
    spec: &FlmcCodingSpec,
    p_prime: &JointDist,
    p_tau: f64,
    delta_n: f64,
) -> Result<McmlConditionReport> {
    let (nx1, nx2, nw) = (src.x1_size(), src.x2_size(), spec.w_size());
    let (nu1, nu2) = (spec.u1_size(), spec.u2_size());
    if p_prime.sizes() != [nx1, nx2, nw, nw, nu1, nu2] {
        return Err(Error::AxisMismatch(format!(
            "induced joint shape {:?}, expected {:?}",
            p_prime.sizes(),
            [nx1, nx2, nw, nw, nu1, nu2]
        )));
    }
    let (f1, f2) = (spec.components.f1(), spec.components.f2());
    let ns = spec.components.s_size();

    // 1: P'(x1, x2, w1, u1) = P(x1, x2) P(w1 | f1(x1)) P(u1 | x1, w1)
    let m1 = p_prime.marginal(&[0, 1, 2, 4])?;
    let mut r1 = 0.0f64;
    crate::info::for_each_index(m1.sizes(), |i, flat| {
        let want = src.prob(i[0], i[1]) * spec.p_w.prob(f1[i[0]], i[2]) * spec.p_u1.prob(i[0] * nw + i[2], i[3]);
        r1 = r1.max((m1.probs()[flat] - want).abs());
    });

    // 2: P'(x2, w2, u2) = P'(x2, w2) P(u2 | x2, w2)
    let m2 = p_prime.marginal(&[1, 3, 5])?;
    let mut r2 = 0.0f64;
    for x2 in 0..nx2 {
        for w2 in 0..nw {
            let mass: f64 = (0..nu2).map(|u| m2.prob(&[x2, w2, u])).sum();
            for u in 0..nu2 {
                let want = mass * spec.p_u2.prob(x2 * nw + w2, u);
                r2 = r2.max((m2.prob(&[x2, w2, u]) - want).abs());
            }
        }
    }

    // 3: P'(W1' = W2, S1 = S2) >= p(tau)(1 - delta_n)
    let m3 = p_prime.marginal(&[0, 1, 2, 3])?;
    let mut agree = 0.0;
    crate::info::for_each_index(m3.sizes(), |i, flat| {
        if i[2] == i[3] && f1[i[0]] == f2[i[1]] {
            agree += m3.probs()[flat];
        }
    });
    let r3 = p_tau * (1.0 - delta_n) - agree;

    // 4: P'(x1, x2, w1, w2, u1, u2) = P'(x1, x2, w1, w2) P'(u1 | x1, w1) P'(u2 | x2, w2)
    let c1 = p_prime.conditional(&[4], &[0, 2])?;
    let c2 = p_prime.conditional(&[5], &[1, 3])?;
    let mut r4 = 0.0f64;
    crate::info::for_each_index(p_prime.sizes(), |i, flat| {
        let want = m3.prob(&i[..4]) * c1.prob(i[0] * nw + i[2], i[4]) * c2.prob(i[1] * nw + i[3], i[5]);
        r4 = r4.max((p_prime.probs()[flat] - want).abs());
    });

    // 5: P'(x1, x2, w1, w2) = P(x1, x2) P'(w1, w2 | f1(x1), f2(x2))
    let mut psw = vec![0.0; ns * ns * nw * nw];
    let mut ps = vec![0.0; ns * ns];
    crate::info::for_each_index(m3.sizes(), |i, flat| {
        let (a, b) = (f1[i[0]], f2[i[1]]);
        psw[((a * ns + b) * nw + i[2]) * nw + i[3]] += m3.probs()[flat];
    });
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            ps[f1[x1] * ns + f2[x2]] += src.prob(x1, x2);
        }
    }
    let mut r5 = 0.0f64;
    crate::info::for_each_index(m3.sizes(), |i, flat| {
        let (a, b) = (f1[i[0]], f2[i[1]]);
        let pab = ps[a * ns + b];
        let cond = if pab > 0.0 {
            psw[((a * ns + b) * nw + i[2]) * nw + i[3]] / pab
        } else {
            0.0
        };
        r5 = r5.max((m3.probs()[flat] - src.prob(i[0], i[1]) * cond).abs());
    });

    Ok(McmlConditionReport {
        residuals: [r1, r2, r3, r4, r5],
        tolerance: 1e-9,
    })
}

/// Multi-letter bounds evaluated on an induced joint `p_prime` over
/// `(X1, X2, W1', W2, U1, U2)`; `gi: (W1', W2, U1, U2) -> Xi`.
pub fn mcml_alpha(
    src: &DistributedSource,
    spec: &FlmcCodingSpec,
    p_prime: &JointDist,
    terms: &McmlRateTerms,
    g1: &ReconstructionMap,
    g2: &ReconstructionMap,
) -> Result<RateBounds> {
    let report = mcml_conditions(src, spec, p_prime, terms.p_tau, terms.delta_n)?;
    if !report.all_passed() {
        let failed: Vec<String> = report
            .passed()
            .iter()
            .enumerate()
            .filter(|(_, ok)| !**ok)
            .map(|(k, _)| format!("condition {} (residual {:e})", k + 1, report.residuals[k]))
            .collect();
        return Err(Error::Invariant(format!("induced joint fails {}", failed.join(", "))));
    }
    let nw = spec.w_size();
    let args = [nw, nw, spec.u1_size(), spec.u2_size()];
    if g1.arg_sizes() != args || g2.arg_sizes() != args {
        return Err(Error::AxisMismatch(
            "reconstruction maps must take (W1', W2, U1, U2)".into(),
        ));
    }
    // S1 = f1(X1) is appended as a seventh axis to evaluate I(W1'; S1).
    let f1 = spec.components.f1();
    let mut sizes = p_prime.sizes().to_vec();
    sizes.push(spec.components.s_size());
    let ext = JointDist::from_fn(&sizes, |i| if f1[i[0]] == i[6] { p_prime.prob(&i[..6]) } else { 0.0 })?;
    let cmi = |a: &[usize], b: &[usize], c: &[usize]| cond_mutual_info(&ext, a, b, c);
    let (x1, x2, w1, w2, u1, u2, s1) = (0, 1, 2, 3, 4, 5, 6);
    Ok(RateBounds {
        r1: cmi(&[x1], &[u1], &[u2, w1, w2])? + terms.e + terms.lambda,
        r2: cmi(&[x2], &[u2], &[u1, w1, w2])? + terms.e,
        sum: mutual_info(&ext, &[w1], &[s1])? + cmi(&[x1], &[u1], &[w1, w2])? + cmi(&[x2], &[u2], &[w1, w2])?
            - cmi(&[u1], &[u2], &[w1, w2])?
            + terms.e
            + terms.lambda
            + terms.theta,
        d1: expected_distortion(&ext, x1, &[w1, w2, u1, u2], g1, src.d1()),
        d2: expected_distortion(&ext, x2, &[w1, w2, u1, u2], g2, src.d2()),
    })
}
