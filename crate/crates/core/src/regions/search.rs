//! Random search over single-letter design variables.
//!
//! Each sample draws kernels uniformly from the product of simplices within
//! the cardinality caps and pairs them with Bayes-optimal reconstructions,
//! so every emitted corner is achievable by construction.

use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::components::{enumerate_component_pairs, gk_common_part, ComponentPair};
use crate::info::{CondDist, JointDist};
use crate::rng::stream;
use crate::source::{DistributedSource, DistributedSourceSi};
use crate::text::fmt_reals;
use crate::{Error, Result};

use super::bounds::{bt_alpha, btsi_alpha, cc_alpha, flmc_alpha, flmc_joint};
use super::spec::{FlmcCodingSpec, ReconstructionMap};
use super::RDTuple;

/// Region schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Cc,
    Bt,
    Btsi,
    Flmc,
    Mcml,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Cc => "cc",
            Scheme::Bt => "bt",
            Scheme::Btsi => "btsi",
            Scheme::Flmc => "flmc",
            Scheme::Mcml => "mcml",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "cc" => Scheme::Cc,
            "bt" => Scheme::Bt,
            "btsi" => Scheme::Btsi,
            "flmc" => Scheme::Flmc,
            "mcml" => Scheme::Mcml,
            _ => return Err(Error::Parse(format!("unknown scheme '{s}'"))),
        })
    }
}

/// Sweep description, read from TOML.
///
/// ```toml
/// seed = 1
/// samples = 200
/// w_size = 2          # default |S|
/// u1_size = 2         # default |X1|
/// u2_size = 2         # default |X2|
/// n = [1000000]       # flmc / mcml
/// tau_exponent = -0.4 # tau = n^exponent; or give `tau = [...]`
/// max_epsilon = 0.0   # flmc: component pairs with eps up to this value
/// max_s = 2           # flmc: largest component alphabet
/// f1 = [0, 1]          # flmc / mcml: fixed component maps instead
/// f2 = [0, 0, 1, 1]
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub w_size: Option<usize>,
    #[serde(default)]
    pub u1_size: Option<usize>,
    #[serde(default)]
    pub u2_size: Option<usize>,
    #[serde(default)]
    pub n: Vec<u64>,
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub tau_exponent: Option<f64>,
    #[serde(default)]
    pub max_epsilon: f64,
    #[serde(default)]
    pub max_s: Option<usize>,
    /// Explicit component maps; when both are given they replace the
    /// enumeration.
    #[serde(default)]
    pub f1: Option<Vec<usize>>,
    #[serde(default)]
    pub f2: Option<Vec<usize>>,
}

fn default_samples() -> usize {
    200
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 0,
            samples: default_samples(),
            w_size: None,
            u1_size: None,
            u2_size: None,
            n: Vec::new(),
            tau: Vec::new(),
            tau_exponent: None,
            max_epsilon: 0.0,
            max_s: None,
            f1: None,
            f2: None,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// `(n, tau)` pairs for the finite-length schemes.
    pub fn n_tau_grid(&self) -> Result<Vec<(u64, f64)>> {
        if self.n.is_empty() {
            return Err(Error::Parse("finite-length sweep needs `n`".into()));
        }
        let mut out = Vec::new();
        for &n in &self.n {
            if let Some(e) = self.tau_exponent {
                out.push((n, (n as f64).powf(e)));
            }
            for &t in &self.tau {
                out.push((n, t));
            }
        }
        if out.is_empty() {
            return Err(Error::Parse("finite-length sweep needs `tau` or `tau_exponent`".into()));
        }
        Ok(out)
    }
}

/// One evaluated corner with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub tuple: RDTuple,
    pub scheme: Scheme,
    pub n: Option<u64>,
    pub tau: Option<f64>,
    pub provenance_id: usize,
}

/// Corners plus one provenance record per id; `skipped` collects the
/// reasons for inadmissible parameter points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub provenance: Vec<String>,
    pub skipped: Vec<String>,
}

impl SweepResult {
    pub fn tuples(&self) -> Vec<RDTuple> {
        self.points.iter().map(|p| p.tuple).collect()
    }

    pub(crate) fn push(&mut self, scheme: Scheme, n: Option<u64>, tau: Option<f64>, corners: Vec<RDTuple>, record: String) {
        let id = self.provenance.len();
        self.provenance.push(record);
        for tuple in corners {
            self.points.push(SweepPoint {
                tuple,
                scheme,
                n,
                tau,
                provenance_id: id,
            });
        }
    }

    /// Appends `other` with provenance ids shifted past the current ones.
    pub fn extend(&mut self, other: SweepResult) {
        let off = self.provenance.len();
        self.provenance.extend(other.provenance);
        self.skipped.extend(other.skipped);
        self.points.extend(other.points.into_iter().map(|mut p| {
            p.provenance_id += off;
            p
        }));
    }
}

/// Uniform point of the probability simplex of dimension `k - 1`.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Kernel with each row uniform on the simplex.
pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, from: &[usize], to: usize) -> Result<CondDist> {
    let rows: usize = from.iter().product();
    let mut k = Vec::with_capacity(rows * to);
    for _ in 0..rows {
        k.extend(random_simplex(rng, to));
    }
    CondDist::from_sizes(from, &[to], k)
}

/// Random common-component/finite-length spec on `components` with
/// Bayes-optimal reconstructions.
pub fn random_flmc_spec<R: Rng + ?Sized>(
    rng: &mut R,
    src: &DistributedSource,
    components: ComponentPair,
    w: usize,
    u1: usize,
    u2: usize,
) -> Result<FlmcCodingSpec> {
    let (x1, x2) = (src.x1_size(), src.x2_size());
    let p_w = random_kernel(rng, &[components.s_size()], w)?;
    let p_u1 = random_kernel(rng, &[x1, w], u1)?;
    let p_u2 = random_kernel(rng, &[x2, w], u2)?;
    let args = [w, u1, u2];
    let placeholder1 = ReconstructionMap::constant(&args, x1, 0)?;
    let placeholder2 = ReconstructionMap::constant(&args, x2, 0)?;
    let mut spec = FlmcCodingSpec::new(src, components, p_w, p_u1, p_u2, placeholder1, placeholder2)?;
    let j = flmc_joint(src, &spec)?;
    spec.g1 = ReconstructionMap::optimal(&j, 0, &[2, 3, 4], src.d1())?;
    spec.g2 = ReconstructionMap::optimal(&j, 1, &[2, 3, 4], src.d2())?;
    Ok(spec)
}

/// Text record of a spec, for provenance sidecars.
pub fn spec_record(spec: &FlmcCodingSpec) -> String {
    let c = &spec.components;
    let g = |m: &ReconstructionMap| m.table().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    format!(
        "s_size {}\nf1 {}\nf2 {}\nepsilon {}\nw {}\np_w {}\nu1 {}\np_u1 {}\nu2 {}\np_u2 {}\ng1 {}\ng2 {}\n",
        c.s_size(),
        c.f1().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        c.f2().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        crate::text::fmt_real(c.epsilon()),
        spec.w_size(),
        fmt_reals(spec.p_w.kernel()),
        spec.u1_size(),
        fmt_reals(spec.p_u1.kernel()),
        spec.u2_size(),
        fmt_reals(spec.p_u2.kernel()),
        g(&spec.g1),
        g(&spec.g2),
    )
}

/// `(X2, X1)` source with swapped distortion tables.
pub fn swap_source(src: &DistributedSource) -> Result<DistributedSource> {
    DistributedSource::new(src.pmf().permute_axes(&[1, 0])?, src.d2().clone(), src.d1().clone())
}

/// Maps a tuple of the swapped problem back to the original labels.
pub fn unswap(t: RDTuple) -> RDTuple {
    RDTuple {
        r1: t.r2,
        r2: t.r1,
        d1: t.d2,
        d2: t.d1,
    }
}

fn sizes(cfg: &SweepConfig, src: &DistributedSource, s: usize) -> (usize, usize, usize) {
    let w = cfg.w_size.unwrap_or(s).clamp(1, s + 1);
    let u1 = cfg.u1_size.unwrap_or(src.x1_size()).clamp(1, src.x1_size() * w + 1);
    let u2 = cfg.u2_size.unwrap_or(src.x2_size()).clamp(1, src.x2_size() * w + 1);
    (w, u1, u2)
}

/// Random specs on the Gács-Körner common part, evaluated by the
/// common-component bounds. Specs are returned alongside for reuse.
pub fn cc_specs(src: &DistributedSource, cfg: &SweepConfig) -> Result<Vec<FlmcCodingSpec>> {
    let (gk, _) = gk_common_part(src);
    let (w, u1, u2) = sizes(cfg, src, gk.s_size());
    (0..cfg.samples)
        .into_par_iter()
        .map(|k| random_flmc_spec(&mut stream(cfg.seed, k as u64, "cc-spec"), src, gk.clone(), w, u1, u2))
        .collect()
}

/// Common-component sweep.
pub fn sweep_cc(src: &DistributedSource, cfg: &SweepConfig) -> Result<SweepResult> {
    let specs = cc_specs(src, cfg)?;
    let corners: Vec<Result<Vec<RDTuple>>> = specs.par_iter().map(|s| Ok(cc_alpha(src, s)?.corners())).collect();
    let mut out = SweepResult::default();
    for (s, c) in specs.iter().zip(corners) {
        out.push(Scheme::Cc, None, None, c?, spec_record(s));
    }
    Ok(out)
}

/// Berger-Tung sweep: random `P(Ui|Xi)` and Bayes-optimal `gi(U1, U2)`.
pub fn sweep_bt(src: &DistributedSource, cfg: &SweepConfig) -> Result<SweepResult> {
    let (x1, x2) = (src.x1_size(), src.x2_size());
    let u1 = cfg.u1_size.unwrap_or(x1).clamp(1, x1 + 1);
    let u2 = cfg.u2_size.unwrap_or(x2).clamp(1, x2 + 1);
    let evals: Vec<Result<(Vec<RDTuple>, String)>> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(cfg.seed, k as u64, "bt-spec");
            let k1 = random_kernel(&mut rng, &[x1], u1)?;
            let k2 = random_kernel(&mut rng, &[x2], u2)?;
            let j = JointDist::from_fn(&[x1, x2, u1, u2], |i| src.prob(i[0], i[1]) * k1.prob(i[0], i[2]) * k2.prob(i[1], i[3]))?;
            let g1 = ReconstructionMap::optimal(&j, 0, &[2, 3], src.d1())?;
            let g2 = ReconstructionMap::optimal(&j, 1, &[2, 3], src.d2())?;
            let b = bt_alpha(src, &k1, &k2, &g1, &g2)?;
            Ok((b.corners(), format!("p_u1 {}\np_u2 {}\n", fmt_reals(k1.kernel()), fmt_reals(k2.kernel()))))
        })
        .collect();
    let mut out = SweepResult::default();
    for e in evals {
        let (c, rec) = e?;
        out.push(Scheme::Bt, None, None, c, rec);
    }
    Ok(out)
}

/// Side-information sweep: random `P(Ui|Xi,Yi)`, Bayes-optimal `gi(U1,U2,Y1,Y2)`.
pub fn sweep_btsi(src: &DistributedSourceSi, cfg: &SweepConfig) -> Result<SweepResult> {
    let s = src.pmf().sizes().to_vec();
    let u1 = cfg.u1_size.unwrap_or(s[0]).clamp(1, s[0] * s[2] + 1);
    let u2 = cfg.u2_size.unwrap_or(s[1]).clamp(1, s[1] * s[3] + 1);
    let evals: Vec<Result<(Vec<RDTuple>, String)>> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(cfg.seed, k as u64, "btsi-spec");
            let k1 = random_kernel(&mut rng, &[s[0], s[2]], u1)?;
            let k2 = random_kernel(&mut rng, &[s[1], s[3]], u2)?;
            let pmf = src.pmf();
            let j = JointDist::from_fn(&[s[0], s[1], s[2], s[3], u1, u2], |i| {
                pmf.prob(&i[..4]) * k1.prob(i[0] * s[2] + i[2], i[4]) * k2.prob(i[1] * s[3] + i[3], i[5])
            })?;
            let g1 = ReconstructionMap::optimal(&j, 0, &[4, 5, 2, 3], src.d1())?;
            let g2 = ReconstructionMap::optimal(&j, 1, &[4, 5, 2, 3], src.d2())?;
            let b = btsi_alpha(src, &k1, &k2, &g1, &g2)?;
            Ok((b.corners(), format!("p_u1 {}\np_u2 {}\n", fmt_reals(k1.kernel()), fmt_reals(k2.kernel()))))
        })
        .collect();
    let mut out = SweepResult::default();
    for e in evals {
        let (c, rec) = e?;
        out.push(Scheme::Btsi, None, None, c, rec);
    }
    Ok(out)
}

/// Component pairs used by the finite-length sweep: the explicit pair if
/// `f1` and `f2` are set, otherwise all pairs with `eps <= max_epsilon`
/// and `|S| <= max_s`, excluding the trivial pair unless it is the only one.
pub fn flmc_components(src: &DistributedSource, cfg: &SweepConfig) -> Result<Vec<ComponentPair>> {
    match (&cfg.f1, &cfg.f2) {
        (Some(f1), Some(f2)) => {
            let s = f1.iter().chain(f2).copied().max().unwrap_or(0) + 1;
            return Ok(vec![ComponentPair::new(src, s, f1.clone(), f2.clone())?]);
        }
        (None, None) => {}
        _ => return Err(Error::Parse("give both f1 and f2 or neither".into())),
    }
    let max_s = cfg.max_s.unwrap_or(src.x1_size().min(src.x2_size()));
    let all = enumerate_component_pairs(src, max_s, cfg.max_epsilon)?;
    let nontrivial: Vec<ComponentPair> = all.iter().filter(|c| c.s_size() > 1).cloned().collect();
    Ok(if nontrivial.is_empty() { all } else { nontrivial })
}

/// Random specs over `flmc_components`, cycling through the pairs.
pub fn flmc_specs(src: &DistributedSource, cfg: &SweepConfig) -> Result<Vec<FlmcCodingSpec>> {
    let comps = flmc_components(src, cfg)?;
    if comps.is_empty() {
        return Err(Error::Infeasible(format!(
            "no component pair with epsilon <= {}",
            cfg.max_epsilon
        )));
    }
    (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let c = comps[k % comps.len()].clone();
            let (w, u1, u2) = sizes(cfg, src, c.s_size());
            random_flmc_spec(&mut stream(cfg.seed, k as u64, "flmc-spec"), src, c, w, u1, u2)
        })
        .collect()
}

/// Evaluates the finite-length bounds of each spec at every `(n, tau)`.
/// Inadmissible points are skipped and reported; if nothing is admissible
/// the first reason is returned as the error.
pub fn evaluate_flmc(src: &DistributedSource, specs: &[FlmcCodingSpec], grid: &[(u64, f64)]) -> Result<SweepResult> {
    let jobs: Vec<(usize, u64, f64)> = (0..specs.len())
        .flat_map(|k| grid.iter().map(move |&(n, t)| (k, n, t)))
        .collect();
    let evals: Vec<Result<Vec<RDTuple>>> = jobs
        .par_iter()
        .map(|&(k, n, t)| Ok(flmc_alpha(src, &specs[k], n, t)?.0.corners()))
        .collect();
    let mut out = SweepResult::default();
    for (&(k, n, t), e) in jobs.iter().zip(evals) {
        match e {
            Ok(c) => out.push(Scheme::Flmc, Some(n), Some(t), c, spec_record(&specs[k])),
            Err(Error::Infeasible(m)) => out.skipped.push(format!("spec {k}, n = {n}, tau = {t}: {m}")),
            Err(e) => return Err(e),
        }
    }
    if out.points.is_empty() {
        return Err(Error::Infeasible(
            out.skipped.first().cloned().unwrap_or_else(|| "empty finite-length sweep".into()),
        ));
    }
    Ok(out)
}

/// Finite-length sweep.
pub fn sweep_flmc(src: &DistributedSource, cfg: &SweepConfig) -> Result<SweepResult> {
    let grid = cfg.n_tau_grid()?;
    evaluate_flmc(src, &flmc_specs(src, cfg)?, &grid)
}

/// Runs `f` on the source and on its swap, mapping swapped tuples back.
pub fn swap_symmetrized(
    src: &DistributedSource,
    cfg: &SweepConfig,
    f: impl Fn(&DistributedSource, &SweepConfig) -> Result<SweepResult>,
) -> Result<SweepResult> {
    let mut out = f(src, cfg)?;
    let mut swapped = f(&swap_source(src)?, cfg)?;
    for p in &mut swapped.points {
        p.tuple = unswap(p.tuple);
    }
    for r in &mut swapped.provenance {
        r.insert_str(0, "swapped\n");
    }
    out.extend(swapped);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::DistortionTable;

    fn dsbs() -> DistributedSource {
        DistributedSource::new(
            JointDist::from_sizes(&[2, 2], vec![0.45, 0.05, 0.05, 0.45]).unwrap(),
            DistortionTable::hamming(2),
            DistortionTable::hamming(2),
        )
        .unwrap()
    }

    #[test]
    fn simplex_samples_are_pmfs() {
        let mut r = stream(1, 0, "t");
        for k in 1..6 {
            let v = random_simplex(&mut r, k);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12 && v.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn bt_equals_cc_without_common_part() {
        let src = dsbs();
        let cfg = SweepConfig {
            samples: 8,
            ..Default::default()
        };
        let cc = sweep_cc(&src, &cfg).unwrap();
        assert_eq!(cc.provenance.len(), 8);
        assert!(cc.points.iter().all(|p| p.tuple.r1 >= 0.0 && p.tuple.r2 >= 0.0));
    }

    #[test]
    fn swap_maps_back() {
        let src = DistributedSource::new(
            JointDist::from_sizes(&[2, 3], vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.1]).unwrap(),
            DistortionTable::hamming(2),
            DistortionTable::hamming(3),
        )
        .unwrap();
        let sw = swap_source(&src).unwrap();
        assert_eq!(sw.x1_size(), 3);
        assert_eq!(sw.prob(2, 1), src.prob(1, 2));
        let cfg = SweepConfig {
            samples: 4,
            ..Default::default()
        };
        let r = swap_symmetrized(&src, &cfg, sweep_bt).unwrap();
        assert_eq!(r.provenance.len(), 8);
    }
}
