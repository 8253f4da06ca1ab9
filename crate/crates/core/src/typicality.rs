//! Sequences, joint types, typical and conditionally typical sets, and the
//! cardinality/probability bounds used by the random-quantizer analysis.
//!
//! Membership depends only on (joint) types, so exact counts are computed
//! by summing multinomial coefficients over type classes. The lazily
//! enumerated members are available for cross-checking at small `n`.

use crate::info::{plogp_sum, JointDist};
use crate::{Alphabet, Error, Result};

/// Default limit on `|X|^n` for exhaustive enumeration.
pub const ENUMERATION_CAP: u128 = 1 << 24;

/// Slack added to every typicality threshold to absorb rounding when a
/// deviation sits exactly on the boundary.
pub const TYPICALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolSeq {
    alphabet: Alphabet,
    values: Vec<usize>,
}

impl SymbolSeq {
    pub fn new(alphabet_size: usize, values: Vec<usize>) -> Result<Self> {
        let alphabet = Alphabet::new(alphabet_size)?;
        if let Some(v) = values.iter().find(|&&v| v >= alphabet_size) {
            return Err(Error::OutOfRange(format!(
                "symbol {v} on an alphabet of size {alphabet_size}"
            )));
        }
        Ok(SymbolSeq { alphabet, values })
    }

    /// Parses a digit string such as `"0101"`.
    pub fn from_digits(digits: &str, alphabet_size: usize) -> Result<Self> {
        let values = digits
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::Parse(format!("`{c}` is not a digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet_size, values)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Symbol-tuple counts of aligned sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalType {
    sizes: Vec<usize>,
    counts: Vec<u64>,
    n: usize,
}

impl EmpiricalType {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n as f64)
            .collect()
    }

    pub fn to_dist(&self) -> Result<JointDist> {
        JointDist::from_sizes(&self.sizes, self.frequencies())
    }
}

pub fn joint_type(seqs: &[&SymbolSeq]) -> Result<EmpiricalType> {
    let first = seqs
        .first()
        .ok_or_else(|| Error::Precondition("at least one sequence required".into()))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::Precondition("sequences must have length n >= 1".into()));
    }
    if let Some(s) = seqs.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch(format!("lengths {} and {}", n, s.len())));
    }
    let sizes: Vec<usize> = seqs.iter().map(|s| s.alphabet_size()).collect();
    let strides = crate::info::strides(&sizes);
    let mut counts = vec![0u64; sizes.iter().product()];
    for i in 0..n {
        let flat: usize = seqs
            .iter()
            .zip(&strides)
            .map(|(s, st)| s.values[i] * st)
            .sum();
        counts[flat] += 1;
    }
    Ok(EmpiricalType { sizes, counts, n })
}

/// `max_cells |type(s, w) - target|`.
pub fn dn_distortion(s: &SymbolSeq, w: &SymbolSeq, target: &JointDist) -> Result<f64> {
    if target.sizes() != [s.alphabet_size(), w.alphabet_size()] {
        return Err(Error::AxisMismatch(format!(
            "target shape {:?} for alphabets ({}, {})",
            target.sizes(),
            s.alphabet_size(),
            w.alphabet_size()
        )));
    }
    let t = joint_type(&[s, w])?;
    Ok(type_distortion(t.counts(), t.n(), target.probs()))
}

pub(crate) fn type_distortion(counts: &[u64], n: usize, target: &[f64]) -> f64 {
    counts
        .iter()
        .zip(target)
        .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
        .fold(0.0, f64::max)
}

/// Typicality of a type: `|N(a)/n - P(a)| <= zeta/|X|` on the support and
/// `N(a) = 0` off it. `p` is the flattened pmf.
pub fn type_is_typical(counts: &[u64], n: usize, p: &[f64], zeta: f64) -> bool {
    let thr = zeta / p.len() as f64 + TYPICALITY_TOL;
    counts.iter().zip(p).all(|(&c, &pa)| {
        if pa == 0.0 {
            c == 0
        } else {
            (c as f64 / n as f64 - pa).abs() <= thr
        }
    })
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta >= 0.0) {
        return Err(Error::OutOfRange(format!("typicality parameter {zeta} < 0")));
    }
    Ok(())
}

/// Membership of `x` in the typical set of `p`. A multi-axis `p` is treated
/// as a pmf over its flattened cells.
pub fn is_typical(x: &SymbolSeq, p: &JointDist, zeta: f64) -> Result<bool> {
    check_zeta(zeta)?;
    if x.alphabet_size() != p.num_cells() {
        return Err(Error::AxisMismatch(format!(
            "sequence alphabet {} vs pmf with {} cells",
            x.alphabet_size(),
            p.num_cells()
        )));
    }
    let t = joint_type(&[x])?;
    Ok(type_is_typical(t.counts(), t.n(), p.probs(), zeta))
}

fn check_pair(x: &SymbolSeq, y: &SymbolSeq, pxy: &JointDist) -> Result<()> {
    if pxy.sizes() != [x.alphabet_size(), y.alphabet_size()] {
        return Err(Error::AxisMismatch(format!(
            "pmf shape {:?} for alphabets ({}, {})",
            pxy.sizes(),
            x.alphabet_size(),
            y.alphabet_size()
        )));
    }
    Ok(())
}

/// Joint typicality: threshold `zeta / (|X||Y|)` per cell.
pub fn is_jointly_typical(x: &SymbolSeq, y: &SymbolSeq, pxy: &JointDist, zeta: f64) -> Result<bool> {
    check_zeta(zeta)?;
    check_pair(x, y, pxy)?;
    let t = joint_type(&[x, y])?;
    Ok(type_is_typical(t.counts(), t.n(), pxy.probs(), zeta))
}

/// Conditional typicality test on a joint type `N(a, b)` (row-major `|X| x |Y|`):
/// `|N(a,b)/n - N(a)/n P(b|a)| <= delta/|Y|` where `P(b|a) > 0`, else `N(a,b) = 0`.
pub fn joint_type_is_cond_typical(counts: &[u64], n: usize, pxy: &JointDist, delta: f64) -> bool {
    let (nx, ny) = (pxy.sizes()[0], pxy.sizes()[1]);
    let thr = delta / ny as f64 + TYPICALITY_TOL;
    let nf = n as f64;
    (0..nx).all(|a| {
        let row = &pxy.probs()[a * ny..(a + 1) * ny];
        let pa: f64 = row.iter().sum();
        let na: u64 = counts[a * ny..(a + 1) * ny].iter().sum();
        (0..ny).all(|b| {
            let c = counts[a * ny + b];
            let pba = if pa > 0.0 { row[b] / pa } else { 0.0 };
            if pba == 0.0 {
                c == 0
            } else {
                (c as f64 / nf - na as f64 / nf * pba).abs() <= thr
            }
        })
    })
}

/// Membership of `y` in the conditionally typical set given `x`.
pub fn is_cond_typical(y: &SymbolSeq, x: &SymbolSeq, pxy: &JointDist, delta: f64) -> Result<bool> {
    check_zeta(delta)?;
    check_pair(x, y, pxy)?;
    let t = joint_type(&[x, y])?;
    Ok(joint_type_is_cond_typical(t.counts(), t.n(), pxy, delta))
}

/// Calls `f` with every vector of `k` non-negative counts summing to `n`.
pub fn for_each_composition(n: u64, k: usize, mut f: impl FnMut(&[u64])) {
    fn rec(rem: u64, pos: usize, buf: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if pos + 1 == buf.len() {
            buf[pos] = rem;
            f(buf);
            return;
        }
        for c in 0..=rem {
            buf[pos] = c;
            rec(rem - c, pos + 1, buf, f);
        }
    }
    if k == 0 {
        return;
    }
    let mut buf = vec![0u64; k];
    rec(n, 0, &mut buf, &mut f);
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Number of sequences with the given type.
pub fn multinomial(counts: &[u64]) -> u128 {
    let mut rem: u64 = counts.iter().sum();
    let mut r: u128 = 1;
    for &c in counts {
        r *= binomial(rem, c);
        rem -= c;
    }
    r
}

/// Log-probability (base 2) of one sequence with type `counts` under i.i.d. `p`.
fn seq_log2_prob(counts: &[u64], p: &[f64]) -> f64 {
    counts
        .iter()
        .zip(p)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &pa)| c as f64 * pa.log2())
        .sum()
}

fn sequence_space(k: usize, n: usize, cap: u128) -> Result<u128> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(k as u128);
        if total > cap {
            return Err(Error::CapExceeded(format!(
                "{k}^{n} sequences exceed the cap of {cap}"
            )));
        }
    }
    Ok(total)
}

/// The typical set of `p` at blocklength `n`: exact size plus lazy members.
#[derive(Debug, Clone)]
pub struct TypicalSet {
    probs: Vec<f64>,
    n: usize,
    zeta: f64,
    count: u128,
    probability: f64,
}

impl TypicalSet {
    pub fn count(&self) -> u128 {
        self.count
    }

    /// `P(X^n in A)` under i.i.d. `p`.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    /// Members in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = SymbolSeq> + '_ {
        let k = self.probs.len();
        SeqIter::new(k, self.n).filter_map(move |v| {
            let mut counts = vec![0u64; k];
            v.iter().for_each(|&a| counts[a] += 1);
            type_is_typical(&counts, self.n, &self.probs, self.zeta).then(|| SymbolSeq {
                alphabet: Alphabet::new(k).expect("k >= 1"),
                values: v,
            })
        })
    }
}

/// Lexicographic odometer over `[0, k)^n`.
pub struct SeqIter {
    k: usize,
    cur: Option<Vec<usize>>,
}

impl SeqIter {
    pub fn new(k: usize, n: usize) -> Self {
        SeqIter {
            k,
            cur: (k > 0).then(|| vec![0; n]),
        }
    }
}

impl Iterator for SeqIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let cur = self.cur.as_mut().expect("checked above");
        let mut done = true;
        for pos in (0..cur.len()).rev() {
            cur[pos] += 1;
            if cur[pos] < self.k {
                done = false;
                break;
            }
            cur[pos] = 0;
        }
        if done {
            self.cur = None;
        }
        Some(out)
    }
}

pub fn enumerate_typical(p: &JointDist, n: usize, zeta: f64) -> Result<TypicalSet> {
    enumerate_typical_with_cap(p, n, zeta, ENUMERATION_CAP)
}

pub fn enumerate_typical_with_cap(p: &JointDist, n: usize, zeta: f64, cap: u128) -> Result<TypicalSet> {
    check_zeta(zeta)?;
    if n == 0 {
        return Err(Error::Precondition("blocklength must be at least 1".into()));
    }
    let k = p.num_cells();
    sequence_space(k, n, cap)?;
    let probs = p.probs().to_vec();
    let mut count = 0u128;
    let mut probability = 0.0;
    for_each_composition(n as u64, k, |c| {
        if type_is_typical(c, n, &probs, zeta) {
            let m = multinomial(c);
            count += m;
            probability += m as f64 * seq_log2_prob(c, &probs).exp2();
        }
    });
    Ok(TypicalSet {
        probs,
        n,
        zeta,
        count,
        probability: probability.min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityBounds {
    /// `2^{n(H + zeta')}`
    pub card_bound: f64,
    /// `2|X| exp(-2n (zeta/|X|)^2)`
    pub prob_complement_bound: f64,
    pub zeta_prime: f64,
}

/// Cardinality and complement-probability bounds for the typical set.
/// Zero-probability cells are excluded from `zeta'`, matching the support
/// indicator of the typicality definition.
pub fn typicality_bounds(p: &JointDist, n: usize, zeta: f64) -> Result<TypicalityBounds> {
    if !(zeta > 0.0) {
        return Err(Error::OutOfRange(format!("zeta = {zeta} must be positive")));
    }
    let k = p.num_cells() as f64;
    let h = plogp_sum(p.probs());
    let zeta_prime = -(zeta / k)
        * p.probs()
            .iter()
            .filter(|&&q| q > 0.0)
            .map(|q| q.log2())
            .sum::<f64>();
    let nf = n as f64;
    Ok(TypicalityBounds {
        card_bound: (nf * (h + zeta_prime)).exp2(),
        prob_complement_bound: 2.0 * k * (-2.0 * nf * (zeta / k).powi(2)).exp(),
        zeta_prime,
    })
}

fn check_cond_inputs(pxy: &JointDist, x: &SymbolSeq) -> Result<(usize, usize)> {
    if pxy.rank() != 2 || pxy.sizes()[0] != x.alphabet_size() {
        return Err(Error::AxisMismatch(format!(
            "pmf shape {:?} for an x alphabet of {}",
            pxy.sizes(),
            x.alphabet_size()
        )));
    }
    if x.is_empty() {
        return Err(Error::Precondition("sequence must be non-empty".into()));
    }
    Ok((pxy.sizes()[0], pxy.sizes()[1]))
}

/// Exact `|A_delta(Y | x)|`. The set factorizes over the positions where `x`
/// takes each symbol, so the count is a product of per-symbol sums.
pub fn conditional_typical_count(pxy: &JointDist, x: &SymbolSeq, delta: f64) -> Result<u128> {
    check_zeta(delta)?;
    let (nx, ny) = check_cond_inputs(pxy, x)?;
    let n = x.len() as f64;
    let thr = delta / ny as f64 + TYPICALITY_TOL;
    let mut nxa = vec![0u64; nx];
    x.values().iter().for_each(|&a| nxa[a] += 1);
    let mut total: u128 = 1;
    for a in 0..nx {
        let row = &pxy.probs()[a * ny..(a + 1) * ny];
        let pa: f64 = row.iter().sum();
        let mut sub = 0u128;
        for_each_composition(nxa[a], ny, |c| {
            let ok = c.iter().enumerate().all(|(b, &cab)| {
                let pba = if pa > 0.0 { row[b] / pa } else { 0.0 };
                if pba == 0.0 {
                    cab == 0
                } else {
                    (cab as f64 / n - nxa[a] as f64 / n * pba).abs() <= thr
                }
            });
            if ok {
                sub += multinomial(c);
            }
        });
        total *= sub;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCountBound {
    pub bound: f64,
    pub delta1: f64,
    pub zeta2: f64,
    pub alpha: f64,
    pub cond_entropy: f64,
}

/// Lower bound `2^{n(H(Y|X) - delta1 - zeta2)} alpha(delta)` on `|A_delta(Y|x)|`
/// for a typical `x`. Rows with `P_X(a) = 0` and cells with `P(b|a) = 0`
/// do not contribute to `delta1`; the bracket inside `alpha` is clipped at 0.
pub fn conditional_typical_count_lower_bound(
    pxy: &JointDist,
    x: &SymbolSeq,
    zeta: f64,
    delta: f64,
) -> Result<ConditionalCountBound> {
    check_zeta(zeta)?;
    check_zeta(delta)?;
    let (nx, ny) = check_cond_inputs(pxy, x)?;
    let px = pxy.marginal(&[0])?;
    let pmax = px.probs().iter().cloned().fold(0.0, f64::max);
    if zeta > nx as f64 * pmax {
        return Err(Error::Precondition(format!(
            "zeta = {zeta} exceeds |X| P_max = {}",
            nx as f64 * pmax
        )));
    }
    if !is_typical(x, &px, zeta)? {
        return Err(Error::Precondition("x is not typical at zeta".into()));
    }
    let n = x.len() as f64;
    let mut delta1 = 0.0;
    let mut zeta2 = 0.0;
    let mut cond_entropy = 0.0;
    for a in 0..nx {
        let pa = px.probs()[a];
        if pa == 0.0 {
            continue;
        }
        let row: Vec<f64> = pxy.probs()[a * ny..(a + 1) * ny]
            .iter()
            .map(|v| v / pa)
            .collect();
        delta1 -= row.iter().filter(|&&v| v > 0.0).map(|v| v.log2()).sum::<f64>();
        let h = plogp_sum(&row);
        zeta2 += h;
        cond_entropy += pa * h;
    }
    delta1 *= delta / ny as f64;
    zeta2 *= zeta / nx as f64;
    let inner = 1.0 - 2.0 * ny as f64 * (-(n / pmax) * (delta / ny as f64).powi(2)).exp();
    let alpha = inner.max(0.0).powi(nx as i32);
    Ok(ConditionalCountBound {
        bound: (n * (cond_entropy - delta1 - zeta2)).exp2() * alpha,
        delta1,
        zeta2,
        alpha,
        cond_entropy,
    })
}
