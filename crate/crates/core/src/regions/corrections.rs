use crate::components::ComponentPair;
use crate::info::{hb, plogp_sum, JointDist};
use crate::{Error, Result};

use super::OPEN_MARGIN;

/// Finite-blocklength correction terms of the single-letter region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlmcCorrectionTerms {
    pub n: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub sigma_prime: f64,
    pub delta_n: f64,
    pub p_tau: f64,
    pub phi: f64,
    pub phi_prime: f64,
    pub theta_n: f64,
    pub gamma_n: f64,
    pub lambda_n: f64,
    pub e_n: f64,
    /// `1 - p(tau) + p(tau) delta_n + epsilon`
    pub x: f64,
    pub d_max1: f64,
    pub d_max2: f64,
}

/// Integer interval `[lo, hi]`; `hi = None` means unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BSet {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl BSet {
    pub fn is_empty(&self) -> bool {
        matches!(self.hi, Some(h) if h < self.lo)
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && self.hi.is_none_or(|h| n <= h)
    }
}

/// `1 - (1 - eps)^n`, computed without cancellation.
pub fn delta_n(epsilon: f64, n: f64) -> f64 {
    if epsilon <= 0.0 {
        return 0.0;
    }
    if epsilon >= 1.0 {
        return 1.0;
    }
    -(n * (-epsilon).ln_1p()).exp_m1()
}

/// `log(2 eps) / log(1 - eps)`; `+inf` at `eps = 0`.
pub fn b_upper(epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        return f64::INFINITY;
    }
    if epsilon >= 0.5 {
        return 0.0;
    }
    (2.0 * epsilon).ln() / (-epsilon).ln_1p()
}

/// `[ceil((sigma/sigma')^2), floor(log(2 eps)/log(1 - eps))]`.
pub fn b_set(epsilon: f64, sigma: f64, sigma_prime: f64) -> BSet {
    let lo = (sigma / sigma_prime).powi(2).ceil().max(1.0) as u64;
    let hi = b_upper(epsilon);
    BSet {
        lo,
        hi: hi.is_finite().then(|| hi.floor().max(0.0) as u64),
    }
}

/// Evaluates every correction term from the formulas without checking the
/// admissible ranges of `n` and `tau`. `alphabet_product` is
/// `|X1||X2||U1||U2||W|`.
pub fn correction_terms_unchecked(
    epsilon: f64,
    p_sw: &JointDist,
    n: f64,
    tau: f64,
    alphabet_product: f64,
    dmax: (f64, f64),
) -> Result<FlmcCorrectionTerms> {
    if p_sw.rank() != 2 {
        return Err(Error::AxisMismatch("P(S1, W) must have two axes".into()));
    }
    let (s, w) = (p_sw.sizes()[0], p_sw.sizes()[1]);
    let (sf, wf) = (s as f64, w as f64);
    let pmin = p_sw.min_prob();
    if !(pmin > 0.0) {
        return Err(Error::Precondition("P(S1, W) has a zero cell".into()));
    }
    let m = sf.max(wf);
    let sigma = m * (8.0 * m / pmin).ln().sqrt();
    let sigma_prime = sf * wf / (2.0 * (sf + wf)) * pmin;
    let phi = tau * (1.0 / sf + 1.0 / wf);
    let phi_prime = 4.0 * sf * (-2.0 * n * tau * tau / (sf * sf)).exp();
    let p_tau = pmin / (pmin + phi_prime + phi);

    let ps = p_sw.marginal(&[0])?;
    let mut sum_log_cond = 0.0;
    let mut sum_cond_entropy = 0.0;
    for a in 0..s {
        let row: Vec<f64> = (0..w).map(|b| p_sw.probs()[a * w + b] / ps.probs()[a]).collect();
        sum_log_cond -= row.iter().map(|v| v.log2()).sum::<f64>();
        sum_cond_entropy += plogp_sum(&row);
    }
    let sum_log_s: f64 = -ps.probs().iter().map(|v| v.log2()).sum::<f64>();
    let theta_n = (2.0 * n * tau * tau / (sf * sf) - (2.0 * sf).ln()).log2() / n
        + tau * (sum_log_cond / wf + sum_cond_entropy / sf + (sf + wf) / sf * sum_log_s)
        + (sf + 1.0) / n;

    let dn = delta_n(epsilon, n);
    let x = 1.0 - p_tau + p_tau * dn + epsilon;
    let gamma_n = 8.0 * hb(x) + 8.0 * x * alphabet_product.log2();
    let lambda_n = hb(p_tau) + (1.0 - p_tau) * wf.log2();
    let e_n = hb(dn) / n + dn * wf.log2();
    Ok(FlmcCorrectionTerms {
        n,
        tau,
        epsilon,
        sigma,
        sigma_prime,
        delta_n: dn,
        p_tau,
        phi,
        phi_prime,
        theta_n,
        gamma_n,
        lambda_n,
        e_n,
        x,
        d_max1: dmax.0,
        d_max2: dmax.1,
    })
}

/// Correction terms with the admissibility checks: `n` in `B(eps)` and
/// `sigma/sqrt(n) < tau < sigma'`, both with relative margin 1e-9, and
/// `x <= 1`. `u_sizes` completes the alphabet product in `Gamma`.
pub fn flmc_corrections(
    components: &ComponentPair,
    p_sw: &JointDist,
    n: u64,
    tau: f64,
    dmax: (f64, f64),
    u_sizes: (usize, usize),
) -> Result<FlmcCorrectionTerms> {
    if p_sw.rank() != 2 || p_sw.sizes()[0] != components.s_size() {
        return Err(Error::AxisMismatch(format!(
            "P(S1, W) shape {:?} with |S| = {}",
            p_sw.sizes(),
            components.s_size()
        )));
    }
    let product = (components.f1().len()
        * components.f2().len()
        * u_sizes.0
        * u_sizes.1
        * p_sw.sizes()[1]) as f64;
    let t = correction_terms_unchecked(components.epsilon(), p_sw, n as f64, tau, product, dmax)?;
    let b = b_set(components.epsilon(), t.sigma, t.sigma_prime);
    if b.is_empty() {
        return Err(Error::Infeasible(format!(
            "B(eps) is empty for eps = {} (lower end {}, upper end {:?})",
            components.epsilon(),
            b.lo,
            b.hi
        )));
    }
    if !b.contains(n) {
        return Err(Error::Infeasible(format!(
            "n = {n} outside B(eps) = [{}, {}]",
            b.lo,
            b.hi.map_or("inf".to_string(), |h| h.to_string())
        )));
    }
    let lo = t.sigma / (n as f64).sqrt();
    if !(tau > lo * (1.0 + OPEN_MARGIN) && tau < t.sigma_prime * (1.0 - OPEN_MARGIN)) {
        return Err(Error::Infeasible(format!(
            "tau = {tau} outside ({lo}, {})",
            t.sigma_prime
        )));
    }
    if t.x > 1.0 {
        return Err(Error::Infeasible(format!("x = {} exceeds 1", t.x)));
    }
    Ok(t)
}
