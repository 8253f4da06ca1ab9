//! Desk-scale simulation of the two-layer construction.
//!
//! Every random quantity is drawn from a stream keyed by
//! `(seed, index, role)`, and results are reduced in index order, so a
//! report depends only on its config.

pub mod boho_e2e;
pub mod correction;
pub mod interleave;
pub mod quantizer;

use rand::Rng;
use serde::Deserialize;

use crate::boho::parse_named_source;
use crate::components::ComponentPair;
use crate::info::{CondDist, JointDist};
use crate::regions::{correction_terms_unchecked, delta_n, FlmcCodingSpec, ReconstructionMap};
use crate::rng::stream;
use crate::source::{parse_source, DistributedSource, SourceSpec};
use crate::text::fmt_real;
use crate::{Error, Result};

use boho_e2e::{boho_end_to_end, BohoSimParams};
use correction::{build_correction, correction_rate, lambda_bound};
use interleave::{claim3_check, claim3_reference, exact_induced, interleave_and_induce, max_z, with_u_kernels, ALPHA};
use quantizer::{build_min_hamming, build_quantizer, measure_covering, QuantizerCodebook};

/// Two-sided Hoeffding radius for a mean of `k` values in `[0, 1]` at
/// confidence `1 - alpha`.
pub fn hoeffding_radius(k: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * k as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    Quantizer,
    Correction,
    Interleave,
    Boho,
}

impl SimKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimKind::Quantizer => "quantizer",
            SimKind::Correction => "correction",
            SimKind::Interleave => "interleave",
            SimKind::Boho => "boho",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "quantizer" => SimKind::Quantizer,
            "correction" => SimKind::Correction,
            "interleave" => SimKind::Interleave,
            "boho" => SimKind::Boho,
            _ => return Err(Error::Parse(format!("unknown simulation '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    #[default]
    Typical,
    MinHamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

/// Simulation config (TOML).
///
/// ```toml
/// kind = "correction"
/// seed = 7
/// trials = 3
/// n = 8
/// tau = 0.6
/// delta = 0.2            # BSC(delta) target on uniform binary S
/// # or: p_s = [...] and w_kernel = [[...], ...]
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub kind: Option<SimKind>,
    #[serde(default = "one")]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub trials: usize,
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub tau: Option<f64>,
    #[serde(default)]
    pub rule: RuleName,
    pub codebook_size: Option<u64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub delta: Option<f64>,
    pub p_s: Option<Vec<f64>>,
    pub w_kernel: Option<Vec<Vec<f64>>>,
    /// Named source (`boho:p=..,eps=..`) or source text file path.
    pub source: Option<String>,
    pub s_size: Option<usize>,
    pub f1: Option<Vec<usize>>,
    pub f2: Option<Vec<usize>>,
    pub u1_kernel: Option<Vec<Vec<f64>>>,
    pub u2_kernel: Option<Vec<Vec<f64>>>,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta1: Option<f64>,
    pub candidates: Option<usize>,
}

fn one() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn default_m() -> usize {
    10_000
}
fn default_samples() -> usize {
    100_000
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if cfg.trials == 0 {
            return Err(Error::Precondition("trials must be at least 1".into()));
        }
        Ok(cfg)
    }

    /// Target `P(S, W)` from `delta` or from `p_s` and `w_kernel`.
    fn target(&self) -> Result<JointDist> {
        if let (Some(ps), Some(k)) = (&self.p_s, &self.w_kernel) {
            let kernel = rows(k, ps.len())?;
            let w = k[0].len();
            let c = CondDist::from_sizes(&[ps.len()], &[w], kernel)?;
            return c.joint_with(&JointDist::from_sizes(&[ps.len()], ps.clone())?);
        }
        let d = self
            .delta
            .ok_or_else(|| Error::Parse("config needs 'delta' or 'p_s' with 'w_kernel'".into()))?;
        JointDist::from_sizes(&[2, 2], vec![(1.0 - d) / 2.0, d / 2.0, d / 2.0, (1.0 - d) / 2.0])
    }

    fn tau(&self) -> Result<f64> {
        self.tau.ok_or_else(|| Error::Parse("config needs 'tau'".into()))
    }

    fn sampled(&self, seed: u64) -> Option<(usize, u64)> {
        match self.mode {
            Mode::Exact => None,
            Mode::Sampled => Some((self.samples, seed)),
        }
    }

    fn quantizer(&self, target: &JointDist, seed: u64) -> Result<QuantizerCodebook> {
        match self.rule {
            RuleName::Typical => build_quantizer(target, self.n, self.tau()?, self.codebook_size.map(u128::from), seed),
            RuleName::MinHamming => {
                let m = self
                    .codebook_size
                    .ok_or_else(|| Error::Parse("min-hamming rule needs 'codebook_size'".into()))?;
                build_min_hamming(target, self.n, m as usize, seed)
            }
        }
    }
}

fn rows(k: &[Vec<f64>], expect: usize) -> Result<Vec<f64>> {
    if k.len() != expect || k.iter().any(|r| r.len() != k[0].len()) || k[0].is_empty() {
        return Err(Error::Parse(format!("kernel must have {expect} rows of equal length")));
    }
    Ok(k.concat())
}

/// One checked property. Hard gates decide the exit status; statistical
/// gates are reported alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub vacuous: bool,
    pub hard: bool,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub kind: String,
    pub values: Vec<(String, f64)>,
    pub gates: Vec<Gate>,
    pub trial_header: Vec<String>,
    pub trial_rows: Vec<Vec<f64>>,
}

impl SimReport {
    /// All hard gates passed (vacuous gates count as passed).
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| !g.hard || g.passed || g.vacuous)
    }

    /// `key = value` text, one line per value and per gate.
    pub fn to_text(&self) -> String {
        let mut s = format!("kind = {}\n", self.kind);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {}\n", fmt_real(*v)));
        }
        for g in &self.gates {
            let status = if g.vacuous {
                "vacuous"
            } else if g.passed {
                "pass"
            } else {
                "fail"
            };
            s.push_str(&format!(
                "gate.{} = {status} {} value={} limit={}\n",
                g.name,
                if g.hard { "hard" } else { "statistical" },
                fmt_real(g.value),
                fmt_real(g.limit)
            ));
        }
        s.push_str(&format!("passed = {}\n", self.passed()));
        s
    }

    /// Per-trial statistics as CSV.
    pub fn to_csv(&self) -> String {
        let mut s = self.trial_header.join(",");
        s.push('\n');
        for r in &self.trial_rows {
            s.push_str(&r.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    fn value(&mut self, prefix: &str, key: &str, v: f64) {
        self.values.push((format!("{prefix}{key}"), v));
    }

    fn gate(&mut self, prefix: &str, name: &str, passed: bool, vacuous: bool, hard: bool, value: f64, limit: f64) {
        self.gates.push(Gate {
            name: format!("{prefix}{name}"),
            passed,
            vacuous,
            hard,
            value,
            limit,
        });
    }
}

fn prefix(trials: usize, t: usize) -> String {
    if trials == 1 {
        String::new()
    } else {
        format!("t{t}.")
    }
}

fn trial_seed(master: u64, t: usize) -> u64 {
    stream(master, t as u64, "trial").random()
}

/// Loads `source` as a named source or a source file path.
pub fn load_source(name: &str) -> Result<DistributedSource> {
    if name.starts_with("boho:") {
        return parse_named_source(name);
    }
    let text = std::fs::read_to_string(name).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
    match parse_source(&text)? {
        SourceSpec::Plain(s) => Ok(s),
        SourceSpec::SideInfo(_) => Err(Error::Precondition("simulation needs a source without side information".into())),
    }
}

/// Runs the simulation of `kind`, overriding the config's `kind` if given.
pub fn run(kind: SimKind, cfg: &SimConfig) -> Result<SimReport> {
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(Error::Precondition(format!(
                "config is for '{}' but '{}' was requested",
                k.as_str(),
                kind.as_str()
            )));
        }
    }
    match kind {
        SimKind::Quantizer => run_quantizer(cfg),
        SimKind::Correction => run_correction(cfg),
        SimKind::Interleave => run_interleave(cfg),
        SimKind::Boho => run_boho(cfg),
    }
}

fn run_quantizer(cfg: &SimConfig) -> Result<SimReport> {
    let target = cfg.target()?;
    let (s, w) = (target.sizes()[0], target.sizes()[1]);
    let p_s = target.marginal(&[0])?.probs().to_vec();
    let mut rep = SimReport {
        kind: "quantizer".into(),
        trial_header: [
            "trial", "log2_theta", "rate", "rate_bound", "distinct", "failure", "radius", "phi", "phi_prime",
        ]
        .map(String::from)
        .to_vec(),
        ..Default::default()
    };
    for t in 0..cfg.trials {
        let pre = prefix(cfg.trials, t);
        let seed = trial_seed(cfg.seed, t);
        let q = cfg.quantizer(&target, seed)?;
        let tau = if q.tau > 0.0 { q.tau } else { cfg.tau()? };
        let terms = correction_terms_unchecked(0.0, &target, cfg.n as f64, tau, 1.0, (0.0, 0.0))?;
        let (phi, phi_prime) = (terms.phi, terms.phi_prime);
        let cov = measure_covering(&q, &p_s, &target, phi, cfg.sampled(seed))?;
        let rate = q.log2_theta / cfg.n as f64;
        let bound = q.mutual_info + q.theta_n;
        let typical = matches!(q.rule, quantizer::EncoderRule::FirstTypical { .. });
        rep.value(&pre, "n", cfg.n as f64);
        rep.value(&pre, "s_size", s as f64);
        rep.value(&pre, "w_size", w as f64);
        rep.value(&pre, "log2_theta", q.log2_theta);
        rep.value(&pre, "rate", rate);
        rep.value(&pre, "mutual_info", q.mutual_info);
        rep.value(&pre, "theta_n", q.theta_n);
        rep.value(&pre, "distinct_codewords", q.codewords.len() as f64);
        rep.value(&pre, "phi", phi);
        rep.value(&pre, "phi_prime", phi_prime);
        rep.value(&pre, "covering_failure", cov.failure);
        rep.value(&pre, "covering_radius", cov.radius);
        rep.gate(&pre, "rate_accounting", rate <= bound + 1e-12, !typical, true, rate, bound);
        let vacuous = phi_prime >= 1.0 || !typical;
        rep.gate(
            &pre,
            "covering",
            cov.failure - cov.radius <= phi_prime,
            vacuous,
            cov.exact,
            cov.failure,
            phi_prime,
        );
        rep.trial_rows.push(vec![
            t as f64,
            q.log2_theta,
            rate,
            bound,
            q.codewords.len() as f64,
            cov.failure,
            cov.radius,
            phi,
            phi_prime,
        ]);
    }
    Ok(rep)
}

fn run_correction(cfg: &SimConfig) -> Result<SimReport> {
    let target = cfg.target()?;
    let w = target.sizes()[1];
    let p_s = target.marginal(&[0])?.probs().to_vec();
    let tau = cfg.tau()?;
    let terms = correction_terms_unchecked(0.0, &target, cfg.n as f64, tau, 1.0, (0.0, 0.0))?;
    let lambda_tau = lambda_bound(terms.p_tau, w);
    let mut rep = SimReport {
        kind: "correction".into(),
        trial_header: ["trial", "residual", "h_t", "p_t0", "min_p0", "lambda_realized", "lambda_tau", "p_tau"]
            .map(String::from)
            .to_vec(),
        ..Default::default()
    };
    for t in 0..cfg.trials {
        let pre = prefix(cfg.trials, t);
        let seed = trial_seed(cfg.seed, t);
        let q = cfg.quantizer(&target, seed)?;
        let c = build_correction(&q, &p_s, &target, cfg.sampled(seed))?;
        let r = correction_rate(&c, &p_s)?;
        let k = c.p_t_given_s.kernel();
        let rows_ok = k.iter().all(|&v| v >= 0.0)
            && k.chunks(w + 1).all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        rep.value(&pre, "n", cfg.n as f64);
        rep.value(&pre, "residual", c.residual);
        rep.value(&pre, "h_t", r.h_t);
        rep.value(&pre, "p_t0", r.p_t0);
        rep.value(&pre, "min_p0", r.min_p0);
        rep.value(&pre, "lambda_realized", r.lambda);
        rep.value(&pre, "p_tau", terms.p_tau);
        rep.value(&pre, "lambda_tau", lambda_tau);
        for (i, v) in c.average.probs().iter().enumerate() {
            rep.value(&pre, &format!("average_type.{i}"), *v);
        }
        rep.gate(&pre, "valid_channel", rows_ok, false, true, 0.0, 0.0);
        rep.gate(&pre, "exactness", c.residual < 1e-10, !c.exact, c.exact, c.residual, 1e-10);
        let grouping = lambda_bound(r.p_t0, w);
        rep.gate(&pre, "lambda_grouping", r.h_t <= grouping + 1e-12, false, true, r.h_t, grouping);
        // Lambda is non-increasing only on [1/(|W|+1), 1]; below that the
        // step from P(T=0) >= p(tau) to H(T) <= Lambda(p(tau)) has no basis.
        let outside = r.p_t0 < terms.p_tau || terms.p_tau < 1.0 / (w + 1) as f64;
        rep.gate(
            &pre,
            "lambda_tau",
            r.h_t <= lambda_tau + 1e-12,
            outside,
            true,
            r.h_t,
            lambda_tau,
        );
        rep.trial_rows.push(vec![
            t as f64,
            c.residual,
            r.h_t,
            r.p_t0,
            r.min_p0,
            r.lambda,
            lambda_tau,
            terms.p_tau,
        ]);
    }
    Ok(rep)
}

/// Coding spec of an interleave config. Missing `U` kernels default to
/// a constant `U`.
fn interleave_spec(cfg: &SimConfig, src: &DistributedSource) -> Result<FlmcCodingSpec> {
    let (f1, f2) = match (&cfg.f1, &cfg.f2) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return Err(Error::Parse("interleave needs 'f1' and 'f2'".into())),
    };
    let s = cfg
        .s_size
        .unwrap_or_else(|| f1.iter().chain(&f2).copied().max().unwrap_or(0) + 1);
    let comps = ComponentPair::new(src, s, f1, f2)?;
    let wk = cfg.w_kernel.as_ref().ok_or_else(|| Error::Parse("interleave needs 'w_kernel'".into()))?;
    let w = wk.first().map_or(0, Vec::len);
    let p_w = CondDist::from_sizes(&[s], &[w], rows(wk, s)?)?;
    let ukernel = |k: &Option<Vec<Vec<f64>>>, x: usize| -> Result<CondDist> {
        match k {
            Some(k) => {
                let u = k.first().map_or(0, Vec::len);
                CondDist::from_sizes(&[x, w], &[u], rows(k, x * w)?)
            }
            None => CondDist::from_sizes(&[x, w], &[1], vec![1.0; x * w]),
        }
    };
    let p_u1 = ukernel(&cfg.u1_kernel, src.x1_size())?;
    let p_u2 = ukernel(&cfg.u2_kernel, src.x2_size())?;
    let args = [w, p_u1.to_len(), p_u2.to_len()];
    let g1 = ReconstructionMap::constant(&args, src.x1_size(), 0)?;
    let g2 = ReconstructionMap::constant(&args, src.x2_size(), 0)?;
    FlmcCodingSpec::new(src, comps, p_w, p_u1, p_u2, g1, g2)
}

fn run_interleave(cfg: &SimConfig) -> Result<SimReport> {
    let src = load_source(cfg.source.as_deref().ok_or_else(|| Error::Parse("interleave needs 'source'".into()))?)?;
    let spec = interleave_spec(cfg, &src)?;
    let p_sw = spec.p_sw(&src)?;
    let p_s = spec.components.s1_marginal(&src);
    let eps = spec.components.epsilon();
    let dn = delta_n(eps, cfg.n as f64);
    let mut rep = SimReport {
        kind: "interleave".into(),
        trial_header: [
            "trial", "max_z", "row_p_value", "exchange_p_value", "agree", "agree_limit", "claim3_v", "claim3_bound",
        ]
        .map(String::from)
        .to_vec(),
        ..Default::default()
    };
    for t in 0..cfg.trials {
        let pre = prefix(cfg.trials, t);
        let seed = trial_seed(cfg.seed, t);
        let q = cfg.quantizer(&p_sw, seed)?;
        let c = build_correction(&q, &p_s, &p_sw, None)?;
        let r = interleave_and_induce(&q, &c, &src, &spec.components, cfg.m, seed)?;
        let p = c.min_p0();
        let agree_limit = p * (1.0 - dn);
        rep.value(&pre, "n", cfg.n as f64);
        rep.value(&pre, "m", cfg.m as f64);
        rep.value(&pre, "epsilon", eps);
        rep.value(&pre, "delta_n", dn);
        rep.value(&pre, "min_p0", p);
        rep.value(&pre, "correction_residual", c.residual);
        rep.value(&pre, "row_chi2", r.row_chi2);
        rep.value(&pre, "row_df", r.row_df as f64);
        rep.value(&pre, "row_p_value", r.row_p_value);
        rep.value(&pre, "exchange_stat", r.exchange_stat);
        rep.value(&pre, "exchange_p_value", r.exchange_p_value);
        rep.value(&pre, "agree", r.agree);
        rep.value(&pre, "agree_radius", r.agree_radius);
        rep.gate(&pre, "row_homogeneity", r.row_p_value >= ALPHA, false, false, r.row_p_value, ALPHA);
        rep.gate(&pre, "exchangeability", r.exchange_p_value >= ALPHA, false, false, r.exchange_p_value, ALPHA);
        rep.gate(
            &pre,
            "mcml_condition3",
            r.agree >= agree_limit - r.agree_radius,
            false,
            false,
            r.agree,
            agree_limit - r.agree_radius,
        );
        rep.gate(
            &pre,
            "common_input",
            r.common_input_mismatch == 0,
            false,
            true,
            r.common_input_mismatch as f64,
            0.0,
        );
        let (mut mz, mut v, mut bound) = (f64::NAN, f64::NAN, f64::NAN);
        match exact_induced(&src, &spec.components, &q, &c) {
            Ok(exact) => {
                mz = max_z(&r, &exact);
                rep.value(&pre, "max_z", mz);
                rep.gate(&pre, "induced_joint", mz < 3.0, false, false, mz, 3.0);
                let pp = with_u_kernels(&exact, &spec)?;
                let (vv, b, ok) = claim3_check(&pp, &claim3_reference(&src, &spec)?, eps, p, dn)?;
                v = vv;
                bound = b;
                rep.value(&pre, "claim3_v", v);
                rep.value(&pre, "claim3_bound", bound);
                rep.gate(&pre, "claim3", ok, false, true, v, bound);
            }
            Err(Error::CapExceeded(_)) => {}
            Err(e) => return Err(e),
        }
        rep.trial_rows.push(vec![
            t as f64,
            mz,
            r.row_p_value,
            r.exchange_p_value,
            r.agree,
            agree_limit,
            v,
            bound,
        ]);
    }
    Ok(rep)
}

fn run_boho(cfg: &SimConfig) -> Result<SimReport> {
    let d = BohoSimParams::default();
    let mut rep = SimReport {
        kind: "boho".into(),
        trial_header: [
            "trial", "delta_prime_meas", "d2_meas", "d2_bound", "d2_radius", "fin1_param", "fin1_max_z",
        ]
        .map(String::from)
        .to_vec(),
        ..Default::default()
    };
    for t in 0..cfg.trials {
        let pre = prefix(cfg.trials, t);
        let params = BohoSimParams {
            p: cfg.p.unwrap_or(d.p),
            epsilon: cfg.epsilon.unwrap_or(d.epsilon),
            n: cfg.n,
            m: cfg.m,
            delta: cfg.delta.unwrap_or(d.delta),
            delta1: cfg.delta1.unwrap_or(d.delta1),
            codebook_size: cfg.codebook_size.map_or(d.codebook_size, |v| v as usize),
            candidates: cfg.candidates.unwrap_or(d.candidates),
            seed: trial_seed(cfg.seed, t),
        };
        let r = boho_end_to_end(&params)?;
        rep.value(&pre, "n", params.n as f64);
        rep.value(&pre, "m", params.m as f64);
        rep.value(&pre, "codebook_distortion", r.codebook_distortion);
        rep.value(&pre, "delta_prime_meas", r.delta_prime_meas);
        rep.value(&pre, "delta_n", r.delta_n);
        rep.value(&pre, "mismatch_weight", r.mismatch_weight);
        rep.value(&pre, "blocks_with_error", r.blocks_with_error as f64);
        rep.value(&pre, "d2_meas", r.d2_meas);
        rep.value(&pre, "d2_bound", r.d2_bound);
        rep.value(&pre, "d2_radius", r.d2_radius);
        rep.value(&pre, "fin1_param", r.fin1_param);
        for (j, v) in r.row_means.iter().enumerate() {
            rep.value(&pre, &format!("row_mean.{j}"), *v);
        }
        rep.gate(
            &pre,
            "common_component",
            r.error_free_mismatch == 0,
            false,
            true,
            r.error_free_mismatch as f64,
            0.0,
        );
        rep.gate(&pre, "d2", r.d2_passed(), false, false, r.d2_meas, r.d2_bound + 3.0 * r.d2_radius);
        rep.gate(&pre, "fin1", r.fin1_passed(), false, false, r.fin1_max_z, r.fin1_critical);
        rep.trial_rows.push(vec![
            t as f64,
            r.delta_prime_meas,
            r.d2_meas,
            r.d2_bound,
            r.d2_radius,
            r.fin1_param,
            r.fin1_max_z,
        ]);
    }
    Ok(rep)
}
