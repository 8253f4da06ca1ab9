//! Binary one-help-one example: `X1 = X + E`, `X2 = (X, Z)` with
//! `X ~ Bern(1/2)`, `Z ~ Bern(p)`, `E ~ Bern(eps)` independent. Encoder 1's
//! reconstruction is free (`d1 = 0`); encoder 2 must reproduce `X + Z`
//! under Hamming distortion.

use rayon::prelude::*;

use crate::info::{binary_convolve, hb, JointDist};
use crate::regions::{assemble_region, b_set, RDTuple, RegionBoundary, OPEN_MARGIN};
use crate::source::{DistortionTable, DistributedSource};
use crate::{Error, Result};

/// Parameters of one finite-length BOHO corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BohoParams {
    pub p: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub delta1: f64,
    pub n: u64,
    pub tau: f64,
}

/// `(64/delta^2) ln(32/delta)`: lower end of the blocklength range.
pub fn n_lower(delta: f64) -> f64 {
    64.0 / (delta * delta) * (32.0 / delta).ln()
}

/// `log(2 eps)/log(1 - eps)`: upper end of the blocklength range.
pub fn n_upper(epsilon: f64) -> f64 {
    crate::regions::b_upper(epsilon)
}

/// Open `tau` range `(2 sqrt(ln(32/delta)/n), delta/4)`.
pub fn tau_range(delta: f64, n: u64) -> (f64, f64) {
    (2.0 * ((32.0 / delta).ln() / n as f64).sqrt(), delta / 4.0)
}

fn inside(x: f64, lo: f64, hi: f64) -> bool {
    x > lo + OPEN_MARGIN * lo.abs() && x < hi - OPEN_MARGIN * hi.abs()
}

/// `delta' = min(1, delta + tau + 8 exp(-2 n tau^2 / 4))`.
pub fn delta_prime(delta: f64, n: u64, tau: f64) -> f64 {
    (delta + tau + 8.0 * (-2.0 * n as f64 * tau * tau / 4.0).exp()).min(1.0)
}

impl BohoParams {
    /// Checks every range and names the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::OutOfRange(m));
        if !(self.p > 0.0 && self.p < 0.5) {
            return bad(format!("p = {} outside (0, 1/2)", self.p));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 0.5) {
            return bad(format!("eps = {} outside [0, 1/2)", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad(format!("delta = {} outside (0, 1/2)", self.delta));
        }
        let (nlo, nhi) = (n_lower(self.delta), n_upper(self.epsilon));
        let n = self.n as f64;
        if !(n > nlo * (1.0 + OPEN_MARGIN) && n < nhi * (1.0 - OPEN_MARGIN)) {
            return bad(format!("n = {} outside ({nlo}, {nhi})", self.n));
        }
        let (tlo, thi) = tau_range(self.delta, self.n);
        if !inside(self.tau, tlo, thi) {
            return bad(format!("tau = {} outside ({tlo}, {thi})", self.tau));
        }
        let hi = binary_convolve(self.p, delta_prime(self.delta, self.n, self.tau))?;
        if !(self.delta1 > 0.0 && self.delta1 < hi) {
            return bad(format!("delta1 = {} outside (0, {hi})", self.delta1));
        }
        Ok(())
    }
}

/// Joint pmf over `X1 in {0,1}` and `X2 = (x, z)` indexed `2x + z`.
pub fn boho_source(p: f64, epsilon: f64) -> Result<DistributedSource> {
    if !(0.0..0.5).contains(&p) || !(0.0..0.5).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("p = {p}, eps = {epsilon} must lie in [0, 1/2)")));
    }
    let pz = [1.0 - p, p];
    let pe = [1.0 - epsilon, epsilon];
    let pmf = JointDist::from_fn(&[2, 4], |i| {
        let (x, z) = (i[1] / 2, i[1] % 2);
        0.5 * pz[z] * pe[i[0] ^ x]
    })?;
    let d2 = (0..16)
        .map(|k| {
            let (a, b) = (k / 4, k % 4);
            if (a / 2) ^ (a % 2) == (b / 2) ^ (b % 2) {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    DistributedSource::new(pmf, DistortionTable::zero(2), DistortionTable::new(4, d2)?)
}

/// Parses a named source `boho:p=<p>,eps=<eps>`.
pub fn parse_named_source(name: &str) -> Result<DistributedSource> {
    let rest = name
        .strip_prefix("boho:")
        .ok_or_else(|| Error::Parse(format!("unknown named source '{name}'")))?;
    let (mut p, mut eps) = (None, None);
    for kv in rest.split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number '{v}' for {k}")))?;
        match k.trim() {
            "p" => p = Some(v),
            "eps" => eps = Some(v),
            other => return Err(Error::Parse(format!("unknown key '{other}'"))),
        }
    }
    boho_source(
        p.ok_or_else(|| Error::Parse("missing p".into()))?,
        eps.ok_or_else(|| Error::Parse("missing eps".into()))?,
    )
}

/// `(delta', delta_n, theta'_n)`.
pub fn boho_derived(params: &BohoParams) -> Result<(f64, f64, f64)> {
    params.validate()?;
    Ok(derived_unchecked(params))
}

fn derived_unchecked(b: &BohoParams) -> (f64, f64, f64) {
    let n = b.n as f64;
    let dp = delta_prime(b.delta, b.n, b.tau);
    let dn = crate::regions::delta_n(b.epsilon, n);
    let theta = (n * b.tau * b.tau / 4.0 - 4f64.ln()).log2() / n
        + b.tau * (4.0 + hb(b.delta) - (b.delta * (1.0 - b.delta)).log2())
        + 3.0 / n;
    (dp, dn, theta)
}

/// `delta_n (delta' + (eps/delta_n) * delta')`, as printed.
fn loss_term(epsilon: f64, dn: f64, dp: f64) -> f64 {
    if dn == 0.0 {
        return 0.0;
    }
    let r = epsilon / dn;
    dn * (dp + r * (1.0 - dp) + dp * (1.0 - r))
}

/// Finite-length corner `(1 - h(delta) + theta'_n, h(p*delta') - h(delta1), 0, D2)`.
pub fn boho_flmc_corner(params: &BohoParams) -> Result<RDTuple> {
    let (dp, dn, theta) = boho_derived(params)?;
    if params.epsilon > dn {
        return Err(Error::Invariant(format!(
            "eps = {} exceeds delta_n = {dn}",
            params.epsilon
        )));
    }
    Ok(RDTuple {
        r1: 1.0 - hb(params.delta) + theta,
        r2: (hb(binary_convolve(params.p, dp)?) - hb(params.delta1)).max(0.0),
        d1: 0.0,
        d2: params.delta1 + loss_term(params.epsilon, dn, dp),
    })
}

/// Common-component corner `(1 - h(delta), h(p*delta) - h(delta1), 0, delta1)`
/// for `0 <= delta <= 1/2` and `0 <= delta1 <= p*delta`.
pub fn boho_cc_corner(p: f64, delta: f64, delta1: f64) -> Result<RDTuple> {
    if !(0.0..=0.5).contains(&p) || !(0.0..=0.5).contains(&delta) {
        return Err(Error::OutOfRange(format!("p = {p}, delta = {delta} must lie in [0, 1/2]")));
    }
    let pd = binary_convolve(p, delta)?;
    if !(delta1 >= 0.0 && delta1 <= pd) {
        return Err(Error::OutOfRange(format!("delta1 = {delta1} outside [0, {pd}]")));
    }
    Ok(RDTuple {
        r1: 1.0 - hb(delta),
        r2: (hb(pd) - hb(delta1)).max(0.0),
        d1: 0.0,
        d2: delta1,
    })
}

/// Euclidean distance between the finite-length corner and the
/// common-component corner at the same `(delta, delta1)`.
pub fn boho_gap(params: &BohoParams) -> Result<f64> {
    let (dp, dn, theta) = boho_derived(params)?;
    let r2 = hb(binary_convolve(params.p, dp)?) - hb(binary_convolve(params.p, params.delta)?);
    let d2 = loss_term(params.epsilon, dn, dp);
    Ok((theta * theta + r2 * r2 + d2 * d2).sqrt())
}

/// Sweep grids. `n_grid_eps` lists the `eps` values whose blocklength
/// grids are merged, so curves for different `eps` share their grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BohoGrid {
    pub delta: Vec<f64>,
    pub n_points: usize,
    pub tau_points: usize,
    pub delta1_points: usize,
    pub n_grid_eps: Vec<f64>,
}

/// `k` log-spaced points strictly inside `(lo, hi)`.
pub fn log_interior(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Vec::new();
    }
    let (a, b) = (lo.ln(), hi.ln());
    (1..=k)
        .map(|i| (a + (b - a) * i as f64 / (k + 1) as f64).exp())
        .collect()
}

impl Default for BohoGrid {
    fn default() -> Self {
        BohoGrid {
            delta: log_interior(0.01, 0.49, 64),
            n_points: 32,
            tau_points: 16,
            delta1_points: 64,
            n_grid_eps: Vec::new(),
        }
    }
}

impl BohoGrid {
    /// Admissible blocklengths for `(delta, eps)`: the merged grid filtered
    /// to the open range. Each `eps` contributes `n_points` log-spaced
    /// points over its whole range and `n_points` over `(lo, 2 lo)`.
    pub fn n_grid(&self, delta: f64, epsilon: f64) -> Vec<u64> {
        let lo = n_lower(delta);
        let mut all: Vec<u64> = Vec::new();
        let mut eps_list = self.n_grid_eps.clone();
        eps_list.push(epsilon);
        for e in eps_list {
            let hi = n_upper(e);
            if !hi.is_finite() || hi <= lo {
                continue;
            }
            all.extend(log_interior(lo, hi, self.n_points).into_iter().map(|v| v.round() as u64));
            // The loss grows with n, so small-D2 corners sit just above the lower end.
            all.extend(log_interior(lo, hi.min(2.0 * lo), self.n_points).into_iter().map(|v| v.round() as u64));
        }
        all.sort_unstable();
        all.dedup();
        let hi = n_upper(epsilon);
        all.into_iter()
            .filter(|&n| {
                let x = n as f64;
                x > lo * (1.0 + OPEN_MARGIN) && x < hi * (1.0 - OPEN_MARGIN)
            })
            .collect()
    }
}

/// One swept corner with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BohoCorner {
    pub tuple: RDTuple,
    pub epsilon: f64,
    pub delta: f64,
    pub delta1: f64,
    pub n: Option<u64>,
    pub tau: Option<f64>,
}

/// Boundary at `D2 <= d2max` plus the corners behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BohoSweep {
    pub epsilon: f64,
    pub boundary: RegionBoundary,
    pub corners: Vec<BohoCorner>,
}

/// `delta1` candidates in `(0, hi)`: a uniform grid plus the value at which
/// `D2 = d2max` binds when it lies inside.
fn delta1_grid(hi: f64, points: usize, binding: f64, closed: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=points).map(|k| hi * k as f64 / (points + 1) as f64).collect();
    if closed {
        v.push(hi);
    }
    if binding > 0.0 && (binding < hi || (closed && binding <= hi)) {
        v.push(binding);
    }
    v
}

/// Keeps, among corners sharing `R1`, the feasible one with least `R2`.
fn best_feasible(cands: impl Iterator<Item = BohoCorner>, d2max: f64) -> Option<BohoCorner> {
    cands
        .filter(|c| c.tuple.d2 <= d2max + 1e-12)
        .min_by(|a, b| a.tuple.r2.total_cmp(&b.tuple.r2))
}

/// Sweeps `delta`, `n`, `tau`, `delta1` and assembles the time-shared
/// boundary at `D2 <= d2max`. At `eps = 0` the common-component corners are
/// swept instead.
pub fn boho_region_sweep(p: f64, epsilon: f64, d2max: f64, grid: &BohoGrid) -> Result<BohoSweep> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::OutOfRange(format!("p = {p} outside (0, 1/2)")));
    }
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("eps = {epsilon} outside [0, 1/2)")));
    }
    let corners: Vec<BohoCorner> = if epsilon == 0.0 {
        grid.delta
            .par_iter()
            .filter_map(|&delta| {
                let hi = binary_convolve(p, delta).ok()?;
                let d1s = delta1_grid(hi, grid.delta1_points, d2max.min(hi), true);
                best_feasible(
                    d1s.into_iter().filter_map(|d1| {
                        Some(BohoCorner {
                            tuple: boho_cc_corner(p, delta, d1).ok()?,
                            epsilon,
                            delta,
                            delta1: d1,
                            n: None,
                            tau: None,
                        })
                    }),
                    d2max,
                )
            })
            .collect()
    } else {
        if b_set(epsilon, 1.0, 1.0).is_empty() {
            return Err(Error::Infeasible(format!("B(eps) empty for eps = {epsilon}")));
        }
        let jobs: Vec<(f64, u64)> = grid
            .delta
            .iter()
            .flat_map(|&d| grid.n_grid(d, epsilon).into_iter().map(move |n| (d, n)))
            .collect();
        if jobs.is_empty() {
            return Err(Error::Infeasible(format!(
                "no admissible n: upper end {} below the lower end for every delta",
                n_upper(epsilon)
            )));
        }
        jobs.par_iter()
            .flat_map_iter(|&(delta, n)| {
                let (tlo, thi) = tau_range(delta, n);
                log_interior(tlo, thi, grid.tau_points).into_iter().filter_map(move |tau| {
                    let base = BohoParams { p, epsilon, delta, delta1: 0.0, n, tau };
                    let (dp, dn, _) = derived_unchecked(&base);
                    let hi = binary_convolve(p, dp).ok()?;
                    let binding = d2max - loss_term(epsilon, dn, dp);
                    let d1s = delta1_grid(hi, grid.delta1_points, binding, false);
                    best_feasible(
                        d1s.into_iter().filter_map(|d1| {
                            let params = BohoParams { delta1: d1, ..base };
                            Some(BohoCorner {
                                tuple: boho_flmc_corner(&params).ok()?,
                                epsilon,
                                delta,
                                delta1: d1,
                                n: Some(n),
                                tau: Some(tau),
                            })
                        }),
                        d2max,
                    )
                })
            })
            .collect()
    };
    if corners.is_empty() {
        return Err(Error::Infeasible(format!(
            "no admissible corner meets D2 <= {d2max} at eps = {epsilon}"
        )));
    }
    let tuples: Vec<RDTuple> = corners.iter().map(|c| c.tuple).collect();
    let boundary = assemble_region(&tuples, (0.0, d2max), true)?;
    Ok(BohoSweep {
        epsilon,
        boundary,
        corners,
    })
}
