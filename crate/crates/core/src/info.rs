//! Finite alphabets, dense joint and conditional pmfs, Shannon measures,
//! and the continuity bounds for entropy and mutual information.

use crate::{Error, Result};

/// Normalization tolerance applied when a pmf is constructed.
pub const PMF_TOL: f64 = 1e-12;

/// Information quantities in `[-INFO_CLAMP, 0)` are reported as 0.
pub const INFO_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::OutOfRange("alphabet size must be at least 1".into()));
        }
        Ok(Alphabet { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::OutOfRange("alphabet size must be at least 1".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::OutOfRange("alphabet labels must be distinct".into()));
        }
        Ok(Alphabet {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Row-major strides for a shape.
pub(crate) fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * sizes[k + 1];
    }
    s
}

/// Calls `f(multi_index, flat_index)` for every cell in row-major order.
pub fn for_each_index(sizes: &[usize], mut f: impl FnMut(&[usize], usize)) {
    let total: usize = sizes.iter().product();
    if total == 0 {
        return;
    }
    let mut idx = vec![0usize; sizes.len()];
    for flat in 0..total {
        f(&idx, flat);
        for k in (0..sizes.len()).rev() {
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Dense joint pmf over an ordered list of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    axes: Vec<Alphabet>,
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

fn check_pmf(probs: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, expected a finite non-negative value"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PMF_TOL {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {sum:.17}, expected 1"
        )));
    }
    Ok(())
}

impl JointDist {
    pub fn new(axes: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidAxis("a joint pmf needs at least one axis".into()));
        }
        let sizes: Vec<usize> = axes.iter().map(Alphabet::size).collect();
        let total: usize = sizes.iter().product();
        if probs.len() != total {
            return Err(Error::LengthMismatch(format!(
                "{} probabilities for {} cells",
                probs.len(),
                total
            )));
        }
        check_pmf(&probs)?;
        Ok(JointDist { axes, sizes, probs })
    }

    pub fn from_sizes(sizes: &[usize], probs: Vec<f64>) -> Result<Self> {
        let axes = sizes
            .iter()
            .map(|&s| Alphabet::new(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, probs)
    }

    /// Builds a pmf by evaluating `f` at every multi-index.
    pub fn from_fn(sizes: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let total: usize = sizes.iter().product();
        let mut probs = vec![0.0; total];
        for_each_index(sizes, |idx, flat| probs[flat] = f(idx));
        Self::from_sizes(sizes, probs)
    }

    pub fn uniform(sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().product();
        Self::from_sizes(sizes, vec![1.0 / total as f64; total])
    }

    pub fn point_mass(sizes: &[usize], at: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().product();
        let mut probs = vec![0.0; total];
        let st = strides(sizes);
        if at.len() != sizes.len() || at.iter().zip(sizes).any(|(a, s)| a >= s) {
            return Err(Error::InvalidAxis("point-mass index outside the shape".into()));
        }
        probs[at.iter().zip(&st).map(|(a, s)| a * s).sum::<usize>()] = 1.0;
        Self::from_sizes(sizes, probs)
    }

    /// Bernoulli pmf on a binary alphabet.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("Bernoulli parameter {p}")));
        }
        Self::from_sizes(&[2], vec![1.0 - p, p])
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn rank(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let st = strides(&self.sizes);
        idx.iter().zip(&st).map(|(a, s)| a * s).sum()
    }

    pub fn prob(&self, idx: &[usize]) -> f64 {
        self.probs[self.flat_index(idx)]
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn check_axes(&self, axes: &[usize]) -> Result<()> {
        for (i, &a) in axes.iter().enumerate() {
            if a >= self.rank() {
                return Err(Error::InvalidAxis(format!(
                    "axis {a} on a pmf with {} axes",
                    self.rank()
                )));
            }
            if axes[..i].contains(&a) {
                return Err(Error::InvalidAxis(format!("axis {a} repeated")));
            }
        }
        Ok(())
    }

    /// Marginal on `axes`, in the given order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointDist> {
        if axes.is_empty() {
            return Err(Error::InvalidAxis("empty axis subset".into()));
        }
        self.check_axes(axes)?;
        Ok(self.marginal_unchecked(axes))
    }

    fn marginal_unchecked(&self, axes: &[usize]) -> JointDist {
        let out_sizes: Vec<usize> = axes.iter().map(|&a| self.sizes[a]).collect();
        let out_st = strides(&out_sizes);
        let mut out = vec![0.0; out_sizes.iter().product()];
        for_each_index(&self.sizes, |idx, flat| {
            let p = self.probs[flat];
            if p != 0.0 {
                let j: usize = axes.iter().zip(&out_st).map(|(&a, s)| idx[a] * s).sum();
                out[j] += p;
            }
        });
        JointDist {
            axes: axes.iter().map(|&a| self.axes[a].clone()).collect(),
            sizes: out_sizes,
            probs: out,
        }
    }

    /// Same pmf with axes reordered (`order[k]` is the source axis of new axis `k`).
    pub fn permute_axes(&self, order: &[usize]) -> Result<JointDist> {
        if order.len() != self.rank() {
            return Err(Error::InvalidAxis("permutation must list every axis".into()));
        }
        self.marginal(order)
    }

    /// Conditional `P(axes_to | axes_from)`; rows with zero mass become uniform.
    pub fn conditional(&self, to: &[usize], from: &[usize]) -> Result<CondDist> {
        let mut all = from.to_vec();
        all.extend_from_slice(to);
        self.check_axes(&all)?;
        let joint = self.marginal_unchecked(&all);
        let from_len: usize = from.iter().map(|&a| self.sizes[a]).product();
        let to_len: usize = to.iter().map(|&a| self.sizes[a]).product();
        let mut kernel = joint.probs;
        for r in 0..from_len {
            let row = &mut kernel[r * to_len..(r + 1) * to_len];
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter_mut().for_each(|v| *v /= mass);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / to_len as f64);
            }
        }
        CondDist::new(
            from.iter().map(|&a| self.axes[a].clone()).collect(),
            to.iter().map(|&a| self.axes[a].clone()).collect(),
            kernel,
        )
    }
}

/// One pmf over `to` axes per cell of the `from` axes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CondDist {
    from: Vec<Alphabet>,
    to: Vec<Alphabet>,
    from_len: usize,
    to_len: usize,
    kernel: Vec<f64>,
}

impl CondDist {
    pub fn new(from: Vec<Alphabet>, to: Vec<Alphabet>, kernel: Vec<f64>) -> Result<Self> {
        if to.is_empty() {
            return Err(Error::InvalidAxis("a kernel needs at least one output axis".into()));
        }
        let from_len: usize = from.iter().map(Alphabet::size).product();
        let to_len: usize = to.iter().map(Alphabet::size).product();
        if kernel.len() != from_len * to_len {
            return Err(Error::LengthMismatch(format!(
                "{} kernel entries for {}x{} cells",
                kernel.len(),
                from_len,
                to_len
            )));
        }
        for r in 0..from_len {
            check_pmf(&kernel[r * to_len..(r + 1) * to_len])
                .map_err(|e| Error::InvalidDistribution(format!("row {r}: {e}")))?;
        }
        Ok(CondDist {
            from,
            to,
            from_len,
            to_len,
            kernel,
        })
    }

    pub fn from_sizes(from: &[usize], to: &[usize], kernel: Vec<f64>) -> Result<Self> {
        let mk = |s: &[usize]| s.iter().map(|&k| Alphabet::new(k)).collect::<Result<Vec<_>>>();
        Self::new(mk(from)?, mk(to)?, kernel)
    }

    /// Deterministic kernel `x -> map[x]`.
    pub fn deterministic(from: &[usize], to: usize, map: &[usize]) -> Result<Self> {
        let from_len: usize = from.iter().product();
        if map.len() != from_len || map.iter().any(|&y| y >= to) {
            return Err(Error::OutOfRange("deterministic map outside the output alphabet".into()));
        }
        let mut kernel = vec![0.0; from_len * to];
        for (x, &y) in map.iter().enumerate() {
            kernel[x * to + y] = 1.0;
        }
        Self::from_sizes(from, &[to], kernel)
    }

    /// Binary symmetric channel with crossover `delta`.
    pub fn bsc(delta: f64) -> Result<Self> {
        Self::from_sizes(&[2], &[2], vec![1.0 - delta, delta, delta, 1.0 - delta])
    }

    pub fn from_axes(&self) -> &[Alphabet] {
        &self.from
    }

    pub fn to_axes(&self) -> &[Alphabet] {
        &self.to
    }

    pub fn from_len(&self) -> usize {
        self.from_len
    }

    pub fn to_len(&self) -> usize {
        self.to_len
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.kernel[from * self.to_len + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.kernel[from * self.to_len..(from + 1) * self.to_len]
    }

    /// Joint of an input pmf (flattened) and this kernel, axes `(from.., to..)`.
    pub fn joint_with(&self, input: &JointDist) -> Result<JointDist> {
        if input.num_cells() != self.from_len {
            return Err(Error::AxisMismatch(format!(
                "input has {} cells, kernel expects {}",
                input.num_cells(),
                self.from_len
            )));
        }
        let mut probs = Vec::with_capacity(self.kernel.len());
        for x in 0..self.from_len {
            let px = input.probs()[x];
            probs.extend(self.row(x).iter().map(|k| px * k));
        }
        let mut axes = input.axes().to_vec();
        axes.extend(self.to.iter().cloned());
        JointDist::new(axes, probs)
    }
}

/// Binary entropy in bits.
pub fn hb(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

pub(crate) fn plogp_sum(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

pub(crate) fn clamp_info(v: f64) -> f64 {
    if (-INFO_CLAMP..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

fn check_disjoint(sets: &[&[usize]]) -> Result<()> {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if let Some(a) = sets[i].iter().find(|a| sets[j].contains(a)) {
                return Err(Error::InvalidAxis(format!("axis {a} appears in two subsets")));
            }
        }
    }
    Ok(())
}

/// Entropy (bits) of the marginal on `axes`.
pub fn entropy(d: &JointDist, axes: &[usize]) -> Result<f64> {
    Ok(plogp_sum(d.marginal(axes)?.probs()))
}

fn joint_entropy(d: &JointDist, sets: &[&[usize]]) -> Result<f64> {
    let all: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    if all.is_empty() {
        return Ok(0.0);
    }
    entropy(d, &all)
}

/// `I(a; b) = H(a) + H(b) - H(a, b)`.
pub fn mutual_info(d: &JointDist, a: &[usize], b: &[usize]) -> Result<f64> {
    check_disjoint(&[a, b])?;
    let v = entropy(d, a)? + entropy(d, b)? - joint_entropy(d, &[a, b])?;
    Ok(clamp_info(v))
}

/// `I(a; b | c) = H(a, c) + H(b, c) - H(a, b, c) - H(c)`. An empty `c` gives `I(a; b)`.
pub fn cond_mutual_info(d: &JointDist, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    check_disjoint(&[a, b, c])?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidAxis("empty axis subset".into()));
    }
    let v = joint_entropy(d, &[a, c])? + joint_entropy(d, &[b, c])?
        - joint_entropy(d, &[a, b, c])?
        - joint_entropy(d, &[c])?;
    Ok(clamp_info(v))
}

/// Conditional entropy `H(a | c)`.
pub fn cond_entropy(d: &JointDist, a: &[usize], c: &[usize]) -> Result<f64> {
    check_disjoint(&[a, c])?;
    if a.is_empty() {
        return Err(Error::InvalidAxis("empty axis subset".into()));
    }
    Ok(clamp_info(
        joint_entropy(d, &[a, c])? - joint_entropy(d, &[c])?,
    ))
}

/// `V(p, q) = 1/2 sum |p - q|`.
pub fn variational_distance(p: &JointDist, q: &JointDist) -> Result<f64> {
    if p.sizes() != q.sizes() {
        return Err(Error::AxisMismatch(format!(
            "shapes {:?} and {:?}",
            p.sizes(),
            q.sizes()
        )));
    }
    let v = 0.5
        * p.probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    Ok(v.min(1.0))
}

fn check_unit(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("v = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Entropy continuity: `h_b(v) + v log2(|A| - 1)`.
pub fn entropy_continuity_bound(v: f64, alphabet_size: usize) -> Result<f64> {
    check_unit(v)?;
    if alphabet_size < 2 {
        return Err(Error::OutOfRange("alphabet size must be at least 2".into()));
    }
    Ok(hb(v) + v * ((alphabet_size - 1) as f64).log2())
}

/// Mutual-information continuity: `(4 c, 8 c)` with `c = h_b(v) + v log2 |A|`.
pub fn mi_continuity_bounds(v: f64, alphabet_size: usize) -> Result<(f64, f64)> {
    check_unit(v)?;
    if alphabet_size < 1 {
        return Err(Error::OutOfRange("alphabet size must be at least 1".into()));
    }
    let c = hb(v) + v * (alphabet_size as f64).log2();
    Ok((4.0 * c, 8.0 * c))
}

/// `a * b = a(1 - b) + b(1 - a)`.
pub fn binary_convolve(a: f64, b: f64) -> Result<f64> {
    check_unit(a)?;
    check_unit(b)?;
    Ok(a * (1.0 - b) + b * (1.0 - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        let u = JointDist::uniform(&[2]).unwrap();
        assert!(close(entropy(&u, &[0]).unwrap(), 1.0, 1e-15));
        let pm = JointDist::point_mass(&[3], &[1]).unwrap();
        assert_eq!(entropy(&pm, &[0]).unwrap(), 0.0);
        let b = JointDist::bernoulli(0.3).unwrap();
        assert!(close(entropy(&b, &[0]).unwrap(), 0.8812908992306927, 1e-15));
        assert!(entropy(&b, &[1]).is_err());
    }

    #[test]
    fn mutual_info_examples() {
        let prod = JointDist::from_fn(&[2, 3], |i| [0.4, 0.6][i[0]] * [0.2, 0.3, 0.5][i[1]]).unwrap();
        assert!(close(mutual_info(&prod, &[0], &[1]).unwrap(), 0.0, 1e-15));
        let id = JointDist::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(close(mutual_info(&id, &[0], &[1]).unwrap(), 1.0, 1e-15));
        let dsbs = JointDist::from_sizes(&[2, 2], vec![0.45, 0.05, 0.05, 0.45]).unwrap();
        assert!(close(mutual_info(&dsbs, &[0], &[1]).unwrap(), 0.5310044064107189, 1e-14));
        assert!(mutual_info(&dsbs, &[0], &[0]).is_err());
    }

    #[test]
    fn cond_mutual_info_trivial_and_markov() {
        let d = JointDist::from_fn(&[2, 2, 1], |i| [[0.1, 0.2], [0.3, 0.4]][i[0]][i[1]]).unwrap();
        let a = cond_mutual_info(&d, &[0], &[1], &[2]).unwrap();
        let b = mutual_info(&d, &[0], &[1]).unwrap();
        assert!(close(a, b, 1e-15));
        // a - c - b
        let pc = [0.3, 0.7];
        let pa = [[0.9, 0.1], [0.2, 0.8]];
        let pb = [[0.6, 0.4], [0.25, 0.75]];
        let m = JointDist::from_fn(&[2, 2, 2], |i| pc[i[2]] * pa[i[2]][i[0]] * pb[i[2]][i[1]]).unwrap();
        assert!(close(cond_mutual_info(&m, &[0], &[1], &[2]).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn variational_examples() {
        let a = JointDist::bernoulli(0.5).unwrap();
        let b = JointDist::bernoulli(0.3).unwrap();
        assert!(close(variational_distance(&a, &b).unwrap(), 0.2, 1e-15));
        assert_eq!(variational_distance(&a, &a).unwrap(), 0.0);
        let p = JointDist::point_mass(&[2], &[0]).unwrap();
        let q = JointDist::point_mass(&[2], &[1]).unwrap();
        assert_eq!(variational_distance(&p, &q).unwrap(), 1.0);
        let c = JointDist::uniform(&[3]).unwrap();
        assert!(variational_distance(&a, &c).is_err());
    }

    #[test]
    fn continuity_examples() {
        assert_eq!(entropy_continuity_bound(0.0, 5).unwrap(), 0.0);
        let b = entropy_continuity_bound(0.2, 2).unwrap();
        assert!(close(b, 0.7219280948873623, 1e-15));
        assert!(1.0 - 0.8812908992306927 <= b);
        assert!(close(entropy_continuity_bound(0.5, 4).unwrap(), 1.7924812503605780, 1e-15));
        assert!(entropy_continuity_bound(1.5, 4).is_err());
        assert_eq!(mi_continuity_bounds(0.0, 8).unwrap(), (0.0, 0.0));
        let (p, c) = mi_continuity_bounds(0.1, 8).unwrap();
        let base = 0.4689955935892812 + 0.3;
        assert!(close(p, 4.0 * base, 1e-14) && close(c, 8.0 * base, 1e-14));
    }

    #[test]
    fn convolution_examples() {
        assert_eq!(binary_convolve(0.37, 0.0).unwrap(), 0.37);
        assert_eq!(binary_convolve(0.5, 0.21).unwrap(), 0.5);
        assert!(close(binary_convolve(0.3, 0.1).unwrap(), 0.34, 1e-15));
        assert!(binary_convolve(-0.1, 0.1).is_err());
    }

    #[test]
    fn rejects_bad_pmfs() {
        assert!(JointDist::from_sizes(&[2], vec![0.5, 0.6]).is_err());
        assert!(JointDist::from_sizes(&[2], vec![1.5, -0.5]).is_err());
        assert!(JointDist::from_sizes(&[2], vec![1.0]).is_err());
        assert!(CondDist::from_sizes(&[2], &[2], vec![1.0, 0.0, 0.3, 0.3]).is_err());
        assert!(Alphabet::with_labels(vec!["a".into(), "a".into()]).is_err());
        assert!(Alphabet::new(0).is_err());
    }

    #[test]
    fn conditional_and_joint_round_trip() {
        let d = JointDist::from_sizes(&[2, 3], vec![0.1, 0.2, 0.1, 0.3, 0.0, 0.3]).unwrap();
        let k = d.conditional(&[1], &[0]).unwrap();
        let back = k.joint_with(&d.marginal(&[0]).unwrap()).unwrap();
        for (a, b) in back.probs().iter().zip(d.probs()) {
            assert!(close(*a, *b, 1e-15));
        }
    }
}
