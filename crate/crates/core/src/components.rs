//! Common parts of a two-component source: the Gács–Körner decomposition
//! and pairs of functions `S1 = f1(X1)`, `S2 = f2(X2)` that agree with
//! probability at least `1 - epsilon`.

use std::collections::BTreeSet;

use crate::info::plogp_sum;
use crate::source::DistributedSource;
use crate::text::{fmt_real, Record};
use crate::{Error, Result};

/// Cells below this mass are treated as outside the support when building
/// the bipartite graph of the common part.
pub const SUPPORT_THRESHOLD: f64 = 1e-15;

/// Combinatorial limit of `enumerate_component_pairs`.
pub const ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPair {
    s_size: usize,
    f1: Vec<usize>,
    f2: Vec<usize>,
    epsilon: f64,
}

impl ComponentPair {
    /// Builds a pair and computes its mismatch probability under `src`.
    pub fn new(src: &DistributedSource, s_size: usize, f1: Vec<usize>, f2: Vec<usize>) -> Result<Self> {
        let epsilon = epsilon_of(src, &f1, &f2, s_size)?;
        Ok(ComponentPair {
            s_size,
            f1,
            f2,
            epsilon,
        })
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    pub fn f1(&self) -> &[usize] {
        &self.f1
    }

    pub fn f2(&self) -> &[usize] {
        &self.f2
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Checks the stored epsilon against `src` to within 1e-12.
    pub fn validate(&self, src: &DistributedSource) -> Result<()> {
        let e = epsilon_of(src, &self.f1, &self.f2, self.s_size)?;
        if (e - self.epsilon).abs() > 1e-12 {
            return Err(Error::Invariant(format!(
                "stored epsilon {} but the source gives {e}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `P(S1)`.
    pub fn s1_marginal(&self, src: &DistributedSource) -> Vec<f64> {
        let mut p = vec![0.0; self.s_size];
        for x1 in 0..src.x1_size() {
            for x2 in 0..src.x2_size() {
                p[self.f1[x1]] += src.prob(x1, x2);
            }
        }
        p
    }

    /// `P(S1, S2)`, row-major over `S x S`.
    pub fn s_joint(&self, src: &DistributedSource) -> Vec<f64> {
        let k = self.s_size;
        let mut p = vec![0.0; k * k];
        for x1 in 0..src.x1_size() {
            for x2 in 0..src.x2_size() {
                p[self.f1[x1] * k + self.f2[x2]] += src.prob(x1, x2);
            }
        }
        p
    }

    /// Relabels `S` by first occurrence in `f1`, then `f2`, and drops unused labels.
    pub fn canonical(&self) -> ComponentPair {
        let (s_size, f1, f2) = canonicalize(&self.f1, &self.f2);
        ComponentPair {
            s_size,
            f1,
            f2,
            epsilon: self.epsilon,
        }
    }

    pub fn to_text(&self) -> String {
        let ints = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        format!(
            "component_pair\ns_size {}\nf1 {}\nf2 {}\nepsilon {}\n",
            self.s_size,
            ints(&self.f1),
            ints(&self.f2),
            fmt_real(self.epsilon)
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let r = Record::parse(text, "component_pair")?;
        let s_size = match r.ints("s_size")?.as_slice() {
            [s] => *s,
            _ => return Err(Error::Parse("`s_size` takes one value".into())),
        };
        let f1 = r.ints("f1")?;
        let f2 = r.ints("f2")?;
        check_maps(&f1, &f2, s_size)?;
        Ok(ComponentPair {
            s_size,
            f1,
            f2,
            epsilon: r.real("epsilon")?,
        })
    }
}

fn canonicalize(f1: &[usize], f2: &[usize]) -> (usize, Vec<usize>, Vec<usize>) {
    let mut relabel: Vec<(usize, usize)> = Vec::new();
    let mut map = |v: usize| -> usize {
        if let Some(&(_, to)) = relabel.iter().find(|(from, _)| *from == v) {
            return to;
        }
        let to = relabel.len();
        relabel.push((v, to));
        to
    };
    let g1: Vec<usize> = f1.iter().map(|&v| map(v)).collect();
    let g2: Vec<usize> = f2.iter().map(|&v| map(v)).collect();
    (relabel.len(), g1, g2)
}

fn check_maps(f1: &[usize], f2: &[usize], s_size: usize) -> Result<()> {
    if s_size == 0 {
        return Err(Error::OutOfRange("component alphabet must be non-empty".into()));
    }
    if let Some(v) = f1.iter().chain(f2).find(|&&v| v >= s_size) {
        return Err(Error::OutOfRange(format!(
            "component value {v} outside an alphabet of size {s_size}"
        )));
    }
    Ok(())
}

/// `P(f1(X1) != f2(X2))`.
pub fn epsilon_of(src: &DistributedSource, f1: &[usize], f2: &[usize], s_size: usize) -> Result<f64> {
    if f1.len() != src.x1_size() || f2.len() != src.x2_size() {
        return Err(Error::LengthMismatch(format!(
            "maps of lengths ({}, {}) for alphabets ({}, {})",
            f1.len(),
            f2.len(),
            src.x1_size(),
            src.x2_size()
        )));
    }
    check_maps(f1, f2, s_size)?;
    let mut e = 0.0;
    for (x1, &a) in f1.iter().enumerate() {
        for (x2, &b) in f2.iter().enumerate() {
            if a != b {
                e += src.prob(x1, x2);
            }
        }
    }
    Ok(e.min(1.0))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn gk_common_part(src: &DistributedSource) -> (ComponentPair, f64) {
    gk_common_part_with_threshold(src, SUPPORT_THRESHOLD)
}

/// Connected components of the bipartite support graph. Symbols with no
/// support edge carry no mass and are mapped to component 0.
pub fn gk_common_part_with_threshold(src: &DistributedSource, threshold: f64) -> (ComponentPair, f64) {
    let (n1, n2) = (src.x1_size(), src.x2_size());
    let mut uf = UnionFind((0..n1 + n2).collect());
    let mut has_edge = vec![false; n1 + n2];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            if src.prob(x1, x2) >= threshold {
                uf.union(x1, n1 + x2);
                has_edge[x1] = true;
                has_edge[n1 + x2] = true;
            }
        }
    }
    let mut labels: Vec<usize> = Vec::new();
    let mut label_of = |root: usize| -> usize {
        match labels.iter().position(|&r| r == root) {
            Some(i) => i,
            None => {
                labels.push(root);
                labels.len() - 1
            }
        }
    };
    let mut f = vec![usize::MAX; n1 + n2];
    for node in 0..n1 + n2 {
        if has_edge[node] {
            f[node] = label_of(uf.find(node));
        }
    }
    let s_size = labels.len().max(1);
    for v in f.iter_mut().filter(|v| **v == usize::MAX) {
        *v = 0;
    }
    let f1 = f[..n1].to_vec();
    let f2 = f[n1..].to_vec();
    let pair = ComponentPair::new(src, s_size, f1, f2).expect("maps are total by construction");
    let k = plogp_sum(&pair.s1_marginal(src));
    (pair, k)
}

/// All component pairs with `|S| <= max_s` and mismatch at most `max_eps`,
/// canonicalized and deduplicated, sorted by `(|S|, f1, f2)`.
pub fn enumerate_component_pairs(
    src: &DistributedSource,
    max_s: usize,
    max_eps: f64,
) -> Result<Vec<ComponentPair>> {
    if max_s == 0 {
        return Err(Error::OutOfRange("max_s must be at least 1".into()));
    }
    let (n1, n2) = (src.x1_size(), src.x2_size());
    let space = (max_s as u64)
        .checked_pow((n1 + n2) as u32)
        .filter(|&s| s <= ENUMERATION_CAP)
        .ok_or_else(|| {
            Error::CapExceeded(format!(
                "{max_s}^({n1}+{n2}) candidate map pairs exceed {ENUMERATION_CAP}"
            ))
        })?;
    let mut seen: BTreeSet<(usize, Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut digits = vec![0usize; n1 + n2];
    for code in 0..space {
        let mut c = code;
        for d in digits.iter_mut() {
            *d = (c % max_s as u64) as usize;
            c /= max_s as u64;
        }
        let (s, g1, g2) = canonicalize(&digits[..n1], &digits[n1..]);
        if seen.contains(&(s, g1.clone(), g2.clone())) {
            continue;
        }
        let e = epsilon_of(src, &g1, &g2, s)?;
        if e <= max_eps + 1e-12 {
            seen.insert((s, g1, g2));
        }
    }
    seen.into_iter()
        .map(|(s, f1, f2)| ComponentPair::new(src, s, f1, f2))
        .collect()
}
