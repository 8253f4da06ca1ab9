//! Randomized and exhaustive checks of the continuity lemmas, the
//! typical-set lemmas, and the common-component containment.

use rand::Rng;
use rayon::prelude::*;

use crate::info::{
    cond_mutual_info, entropy, entropy_continuity_bound, mi_continuity_bounds, mutual_info, variational_distance,
    CondDist, JointDist,
};
use crate::regions::search::{cc_specs, random_simplex, SweepConfig};
use crate::regions::{assemble_region, cc_alpha, flmc_alpha, region_contains, RDTuple};
use crate::rng::stream;
use crate::source::DistributedSource;
use crate::typicality::{
    conditional_typical_count, conditional_typical_count_lower_bound, enumerate_typical, is_cond_typical,
    is_jointly_typical, is_typical, typicality_bounds, SeqIter, SymbolSeq,
};
use crate::{Error, Result};

/// Tolerance on each inequality, absorbing rounding in entropy sums.
pub const CHECK_TOL: f64 = 1e-10;

/// One line of a check table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub suite: String,
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    /// Smallest `bound - value` seen (negative on violation).
    pub min_margin: f64,
    pub detail: String,
}

impl CheckRow {
    fn new(suite: &str, name: String) -> Self {
        CheckRow {
            suite: suite.into(),
            name,
            checked: 0,
            violations: 0,
            min_margin: f64::INFINITY,
            detail: String::new(),
        }
    }

    fn record(&mut self, value: f64, bound: f64) {
        self.checked += 1;
        let margin = bound - value;
        self.min_margin = self.min_margin.min(margin);
        if margin < -CHECK_TOL {
            self.violations += 1;
        }
    }

    fn merge(&mut self, o: &CheckRow) {
        self.checked += o.checked;
        self.violations += o.violations;
        self.min_margin = self.min_margin.min(o.min_margin);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checked > 0
    }
}

/// Random pair `(P, Q)` on `cells` cells: `Q` mixes `P` with a fresh
/// random pmf at a uniform weight, so `V(P, Q)` covers `[0, 1)`.
fn random_pair<R: Rng + ?Sized>(rng: &mut R, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let p = random_simplex(rng, cells);
    let r = random_simplex(rng, cells);
    let lam: f64 = rng.random();
    let q = p.iter().zip(&r).map(|(a, b)| (1.0 - lam) * a + lam * b).collect();
    (p, q)
}

/// Entropy continuity on `pairs` random pairs per alphabet size, and the
/// mutual-information bounds (pair and factor-8 conditional) on `pairs`
/// random pairs of joints over `A x A x A`.
pub fn continuity_suite(pairs: usize, sizes: &[usize], seed: u64) -> Result<Vec<CheckRow>> {
    let mut out = Vec::new();
    for &k in sizes {
        let rows: Vec<Result<[CheckRow; 4]>> = (0..pairs)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, t as u64, &format!("continuity-{k}"));
                let mut r = [
                    CheckRow::new("continuity", format!("entropy |A|={k}")),
                    CheckRow::new("continuity", format!("marginal V |A|={k}")),
                    CheckRow::new("continuity", format!("mutual info |A|={k}")),
                    CheckRow::new("continuity", format!("conditional mutual info |A|={k}")),
                ];
                let (p, q) = random_pair(&mut rng, k);
                let (p, q) = (JointDist::from_sizes(&[k], p)?, JointDist::from_sizes(&[k], q)?);
                let v = variational_distance(&p, &q)?;
                let dh = (entropy(&p, &[0])? - entropy(&q, &[0])?).abs();
                r[0].record(dh, entropy_continuity_bound(v, k)?);

                let (p, q) = random_pair(&mut rng, k * k * k);
                let (p, q) = (JointDist::from_sizes(&[k, k, k], p)?, JointDist::from_sizes(&[k, k, k], q)?);
                let v = variational_distance(&p, &q)?;
                let vxy = variational_distance(&p.marginal(&[0, 1])?, &q.marginal(&[0, 1])?)?;
                r[1].record(vxy, v);
                let (b2, b3) = mi_continuity_bounds(v, k)?;
                let di = (mutual_info(&p, &[0], &[1])? - mutual_info(&q, &[0], &[1])?).abs();
                r[2].record(di, b2);
                let dc = (cond_mutual_info(&p, &[0], &[1], &[2])? - cond_mutual_info(&q, &[0], &[1], &[2])?).abs();
                r[3].record(dc, b3);
                Ok(r)
            })
            .collect();
        let mut acc = [
            CheckRow::new("continuity", format!("entropy |A|={k}")),
            CheckRow::new("continuity", format!("marginal V |A|={k}")),
            CheckRow::new("continuity", format!("mutual info |A|={k}")),
            CheckRow::new("continuity", format!("conditional mutual info |A|={k}")),
        ];
        for r in rows {
            let r = r?;
            for (a, b) in acc.iter_mut().zip(r.iter()) {
                a.merge(b);
            }
        }
        for a in &mut acc {
            a.detail = format!("{pairs} random pairs");
        }
        out.extend(acc);
    }
    Ok(out)
}

/// One `(p, zeta, delta)` setting: `X ~ Bern(p)`, `Y | X` a BSC with
/// crossover `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalitySetting {
    pub p: f64,
    pub q: f64,
    pub zeta: f64,
    pub delta: f64,
}

/// 24 settings: `p` in {0.1, 0.25, 0.4, 0.5}, `zeta` in {0.2, 0.5},
/// `delta` in {0.2, 0.5, 1.0}, crossover 0.2.
pub fn default_typicality_grid() -> Vec<TypicalitySetting> {
    let mut v = Vec::new();
    for &p in &[0.1, 0.25, 0.4, 0.5] {
        for &zeta in &[0.2, 0.5] {
            for &delta in &[0.2, 0.5, 1.0] {
                v.push(TypicalitySetting { p, q: 0.2, zeta, delta });
            }
        }
    }
    v
}

fn pxy(s: &TypicalitySetting) -> Result<JointDist> {
    CondDist::bsc(s.q)?.joint_with(&JointDist::bernoulli(s.p)?)
}

/// Exhaustive typical-set checks on binary alphabets: cardinality and
/// complement probability at every `n <= n_max`; composition of typical
/// and conditionally typical sequences at `n <= n_comp`; the conditional
/// count lower bound for every typical `x^n` at `n <= n_max`.
pub fn typicality_suite(grid: &[TypicalitySetting], n_max: usize, n_comp: usize) -> Result<Vec<CheckRow>> {
    let mut card = CheckRow::new("typicality", "typical set cardinality".into());
    let mut comp = CheckRow::new("typicality", "typical set complement probability".into());
    let mut l5 = CheckRow::new("typicality", "composition (joint typicality)".into());
    let mut l8 = CheckRow::new("typicality", "conditional count lower bound".into());
    let mut skipped8 = 0u64;
    for s in grid {
        let px = JointDist::bernoulli(s.p)?;
        let joint = pxy(s)?;
        for n in 1..=n_max {
            let set = enumerate_typical(&px, n, s.zeta)?;
            let b = typicality_bounds(&px, n, s.zeta)?;
            card.record(set.count() as f64, b.card_bound);
            comp.record(1.0 - set.probability(), b.prob_complement_bound);

            let lb_rows: Vec<Result<Option<(f64, f64)>>> = set
                .iter()
                .collect::<Vec<SymbolSeq>>()
                .par_iter()
                .map(|x| match conditional_typical_count_lower_bound(&joint, x, s.zeta, s.delta) {
                    Ok(lb) => Ok(Some((conditional_typical_count(&joint, x, s.delta)? as f64, lb.bound))),
                    Err(Error::Precondition(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect();
            for r in lb_rows {
                match r? {
                    // count >= bound, recorded as bound - count <= 0 margin form.
                    Some((count, bound)) => l8.record(bound, count),
                    None => skipped8 += 1,
                }
            }

            if n <= n_comp {
                let zhat = s.zeta * 4.0;
                let ys: Vec<SymbolSeq> = SeqIter::new(2, n).map(|v| SymbolSeq::new(2, v)).collect::<Result<_>>()?;
                let xs: Vec<SymbolSeq> = set.iter().collect();
                let rows: Vec<Result<CheckRow>> = xs
                    .par_iter()
                    .map(|x| {
                        let mut r = CheckRow::new("typicality", String::new());
                        for y in &ys {
                            if is_cond_typical(y, x, &joint, s.zeta)? {
                                let ok = is_jointly_typical(x, y, &joint, zhat)?;
                                r.record(if ok { 0.0 } else { 1.0 }, 0.0);
                            }
                        }
                        Ok(r)
                    })
                    .collect();
                for r in rows {
                    l5.merge(&r?);
                }
            }
            debug_assert!(set.iter().all(|x| is_typical(&x, &px, s.zeta).unwrap_or(false)));
        }
    }
    let settings = grid.len();
    card.detail = format!("{settings} settings, n = 1..{n_max}");
    comp.detail = card.detail.clone();
    l5.detail = format!("{settings} settings, n = 1..{n_comp}, all typical x and conditionally typical y");
    l8.detail = format!("{settings} settings, n = 1..{n_max}, every typical x; {skipped8} cases outside the zeta precondition");
    Ok(vec![card, comp, l5, l8])
}

/// A 3x3 source whose common part is `{0} | {1, 2}` on both sides.
pub fn block_source_3x3() -> Result<DistributedSource> {
    let pmf = JointDist::from_sizes(
        &[3, 3],
        vec![0.3, 0.0, 0.0, 0.0, 0.25, 0.1, 0.0, 0.1, 0.25],
    )?;
    DistributedSource::new(
        pmf,
        crate::source::DistortionTable::hamming(3),
        crate::source::DistortionTable::hamming(3),
    )
}

/// Result of [`cc_containment`] at one distortion slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentSlice {
    pub fixed: (f64, f64),
    pub contained: bool,
    pub max_violation: f64,
    /// Why the finite-length region is empty at this slice, if it is.
    pub infeasible: Option<String>,
}

/// Checks common-component region `subset` finite-length region at
/// `eps = 0`, blocklength `n`, `tau = n^tau_exponent`, on `samples`
/// shared random specs. The finite-length region is read at distortions
/// `D + slack` and rates get the same slack. Slices are the 50%, 75% and
/// 100% quantiles of the common-component distortions.
pub fn cc_containment(
    src: &DistributedSource,
    samples: usize,
    n: u64,
    tau_exponent: f64,
    slack: f64,
    seed: u64,
) -> Result<Vec<ContainmentSlice>> {
    let cfg = SweepConfig {
        seed,
        samples,
        ..SweepConfig::default()
    };
    let specs = cc_specs(src, &cfg)?;
    let tau = (n as f64).powf(tau_exponent);
    let cc: Vec<RDTuple> = specs
        .iter()
        .map(|s| cc_alpha(src, s).map(|b| b.corners()))
        .collect::<Result<Vec<_>>>()?
        .concat();
    let flmc: Vec<std::result::Result<Vec<RDTuple>, String>> = specs
        .par_iter()
        .map(|s| match flmc_alpha(src, s, n, tau) {
            Ok((b, _)) => Ok(b.corners()),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    let first_err = flmc.iter().find_map(|r| r.as_ref().err().cloned());
    let flmc: Vec<RDTuple> = flmc.into_iter().filter_map(|r| r.ok()).flatten().collect();
    let quant = |mut v: Vec<f64>, q: f64| {
        v.sort_by(f64::total_cmp);
        v[((v.len() - 1) as f64 * q).round() as usize]
    };
    let d1s: Vec<f64> = cc.iter().map(|t| t.d1).collect();
    let d2s: Vec<f64> = cc.iter().map(|t| t.d2).collect();
    let mut out = Vec::new();
    for q in [0.5, 0.75, 1.0] {
        let fixed = (quant(d1s.clone(), q), quant(d2s.clone(), q));
        let inner = assemble_region(&cc, fixed, true)?;
        let outer = if flmc.is_empty() {
            Err(Error::Infeasible(first_err.clone().unwrap_or_default()))
        } else {
            assemble_region(&flmc, (fixed.0 + slack, fixed.1 + slack), true)
        };
        match outer {
            Ok(mut o) => {
                o.fixed = fixed;
                let c = region_contains(&o, &inner, slack)?;
                out.push(ContainmentSlice {
                    fixed,
                    contained: c.contained,
                    max_violation: c.max_violation,
                    infeasible: None,
                });
            }
            Err(Error::Infeasible(m)) => out.push(ContainmentSlice {
                fixed,
                contained: false,
                max_violation: f64::INFINITY,
                infeasible: Some(m),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn slice_detail(s: &ContainmentSlice) -> String {
    match &s.infeasible {
        Some(m) => format!("D = ({:.4}, {:.4}): finite-length region empty ({m})", s.fixed.0, s.fixed.1),
        None => format!("D = ({:.4}, {:.4}): max shift {:.3e}", s.fixed.0, s.fixed.1, s.max_violation),
    }
}

/// Blocklengths of the convergence row.
pub const CONVERGENCE_N: [u64; 6] = [100_000_000, 10_000_000_000, 1_000_000_000_000, 100_000_000_000_000, 10_000_000_000_000_000, 1_000_000_000_000_000_000];

/// Two rows on the 3x3 block source: containment at `n = 1e6` within
/// `1e-3`, and the worst shift over the slices being non-increasing
/// along [`CONVERGENCE_N`].
pub fn containment_suite(samples: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let src = block_source_3x3()?;
    let slices = cc_containment(&src, samples, 1_000_000, -0.4, 1e-3, seed)?;
    let mut r = CheckRow::new("containment", "common-component inside finite-length, n = 1e6".into());
    for s in &slices {
        r.record(s.max_violation, 1e-3);
    }
    let mut details: Vec<String> = slices.iter().map(slice_detail).collect();
    details.dedup();
    r.detail = details.join("; ");

    let mut conv = CheckRow::new("containment", "worst shift non-increasing in n".into());
    let mut prev = f64::INFINITY;
    let mut trace = Vec::new();
    for n in CONVERGENCE_N {
        let worst = cc_containment(&src, samples, n, -0.4, 1e-3, seed)?
            .iter()
            .map(|s| s.max_violation)
            .fold(f64::NEG_INFINITY, f64::max);
        conv.record(worst, prev);
        trace.push(format!("n = {n:e}: {worst:.3e}"));
        prev = worst;
    }
    conv.detail = trace.join("; ");
    Ok(vec![r, conv])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_continuity_run_has_no_violations() {
        let rows = continuity_suite(300, &[2, 3], 1).unwrap();
        assert!(rows.iter().all(|r| r.passed()), "{rows:?}");
    }

    #[test]
    fn small_typicality_run_has_no_violations() {
        let g = &default_typicality_grid()[..3];
        let rows = typicality_suite(g, 6, 5).unwrap();
        assert!(rows.iter().all(|r| r.passed()), "{rows:?}");
    }
}
