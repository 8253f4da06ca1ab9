use crate::components::ComponentPair;
use crate::info::{for_each_index, strides, CondDist, JointDist};
use crate::source::{DistortionTable, DistributedSource};
use crate::{Error, Result};

/// Deterministic reconstruction `x_hat = g(args)` stored as a row-major table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionMap {
    arg_sizes: Vec<usize>,
    out_size: usize,
    table: Vec<usize>,
}

impl ReconstructionMap {
    pub fn new(arg_sizes: &[usize], out_size: usize, table: Vec<usize>) -> Result<Self> {
        let cells: usize = arg_sizes.iter().product();
        if table.len() != cells {
            return Err(Error::LengthMismatch(format!(
                "{} table entries for {cells} argument cells",
                table.len()
            )));
        }
        if let Some(v) = table.iter().find(|&&v| v >= out_size) {
            return Err(Error::OutOfRange(format!(
                "reconstruction {v} outside an alphabet of size {out_size}"
            )));
        }
        Ok(ReconstructionMap {
            arg_sizes: arg_sizes.to_vec(),
            out_size,
            table,
        })
    }

    pub fn constant(arg_sizes: &[usize], out_size: usize, value: usize) -> Result<Self> {
        Self::new(arg_sizes, out_size, vec![value; arg_sizes.iter().product()])
    }

    /// Builds a map from a closure over argument multi-indices.
    pub fn from_fn(arg_sizes: &[usize], out_size: usize, mut f: impl FnMut(&[usize]) -> usize) -> Result<Self> {
        let mut table = vec![0; arg_sizes.iter().product()];
        for_each_index(arg_sizes, |idx, flat| table[flat] = f(idx));
        Self::new(arg_sizes, out_size, table)
    }

    /// Minimum-expected-distortion reconstruction of axis `x_axis` of
    /// `joint` from `arg_axes`; ties go to the lowest symbol.
    pub fn optimal(joint: &JointDist, x_axis: usize, arg_axes: &[usize], d: &DistortionTable) -> Result<Self> {
        let mut axes = arg_axes.to_vec();
        axes.push(x_axis);
        let m = joint.marginal(&axes)?;
        let nx = joint.sizes()[x_axis];
        let arg_sizes: Vec<usize> = arg_axes.iter().map(|&a| joint.sizes()[a]).collect();
        let cells: usize = arg_sizes.iter().product();
        let table = (0..cells)
            .map(|c| {
                let row = &m.probs()[c * nx..(c + 1) * nx];
                (0..d.size())
                    .map(|xh| (xh, row.iter().enumerate().map(|(x, p)| p * d.get(x, xh)).sum::<f64>()))
                    .fold((0, f64::INFINITY), |best, (xh, cost)| if cost < best.1 { (xh, cost) } else { best })
                    .0
            })
            .collect();
        Self::new(&arg_sizes, d.size(), table)
    }

    pub fn arg_sizes(&self) -> &[usize] {
        &self.arg_sizes
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn get(&self, args: &[usize]) -> usize {
        let st = strides(&self.arg_sizes);
        self.table[args.iter().zip(&st).map(|(a, s)| a * s).sum::<usize>()]
    }
}

/// Single-letter design variables of the common-component and
/// finite-length schemes: `P(W|S1)`, `P(U1|X1,W)`, `P(U2|X2,W)`, and the
/// reconstructions `g_i(W, U1, U2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlmcCodingSpec {
    pub components: ComponentPair,
    pub p_w: CondDist,
    pub p_u1: CondDist,
    pub p_u2: CondDist,
    pub g1: ReconstructionMap,
    pub g2: ReconstructionMap,
}

impl FlmcCodingSpec {
    /// Validates shapes and the cardinality caps `|W| <= |S| + 1`,
    /// `|Ui| <= |Xi||W| + 1`.
    pub fn new(
        src: &DistributedSource,
        components: ComponentPair,
        p_w: CondDist,
        p_u1: CondDist,
        p_u2: CondDist,
        g1: ReconstructionMap,
        g2: ReconstructionMap,
    ) -> Result<Self> {
        let (x1, x2) = (src.x1_size(), src.x2_size());
        if components.f1().len() != x1 || components.f2().len() != x2 {
            return Err(Error::AxisMismatch("components do not match the source alphabets".into()));
        }
        let s = components.s_size();
        if p_w.from_len() != s {
            return Err(Error::AxisMismatch(format!(
                "P(W|S) has {} input cells, |S| = {s}",
                p_w.from_len()
            )));
        }
        let w = p_w.to_len();
        if w > s + 1 {
            return Err(Error::OutOfRange(format!("|W| = {w} exceeds |S| + 1 = {}", s + 1)));
        }
        for (name, k, xs) in [("U1", &p_u1, x1), ("U2", &p_u2, x2)] {
            if k.from_len() != xs * w {
                return Err(Error::AxisMismatch(format!(
                    "P({name}|X,W) has {} input cells, expected {}",
                    k.from_len(),
                    xs * w
                )));
            }
            if k.to_len() > xs * w + 1 {
                return Err(Error::OutOfRange(format!(
                    "|{name}| = {} exceeds |X||W| + 1 = {}",
                    k.to_len(),
                    xs * w + 1
                )));
            }
        }
        let args = [w, p_u1.to_len(), p_u2.to_len()];
        if g1.arg_sizes() != args || g2.arg_sizes() != args || g1.out_size() != x1 || g2.out_size() != x2 {
            return Err(Error::AxisMismatch(
                "reconstruction maps must take (W, U1, U2) to the source alphabets".into(),
            ));
        }
        Ok(FlmcCodingSpec {
            components,
            p_w,
            p_u1,
            p_u2,
            g1,
            g2,
        })
    }

    pub fn w_size(&self) -> usize {
        self.p_w.to_len()
    }

    pub fn u1_size(&self) -> usize {
        self.p_u1.to_len()
    }

    pub fn u2_size(&self) -> usize {
        self.p_u2.to_len()
    }

    /// `P(S1, W) = P(S1) P(W|S1)`.
    pub fn p_sw(&self, src: &DistributedSource) -> Result<JointDist> {
        let ps = self.components.s1_marginal(src);
        let w = self.w_size();
        JointDist::from_fn(&[self.components.s_size(), w], |i| ps[i[0]] * self.p_w.prob(i[0], i[1]))
    }
}
