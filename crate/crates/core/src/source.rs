//! Distributed sources: a joint pmf on `X1 x X2` (optionally with side
//! information `Y1, Y2`) and per-encoder distortion tables. Reconstruction
//! alphabets equal the source alphabets.

use serde::Deserialize;

use crate::info::JointDist;
use crate::{Alphabet, Error, Result};

/// Square distortion table `d(x, x_hat)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionTable {
    size: usize,
    values: Vec<f64>,
}

impl DistortionTable {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::LengthMismatch(format!(
                "{} distortion entries for a {size}x{size} table",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::OutOfRange(format!("distortion entry {v}")));
        }
        Ok(DistortionTable { size, values })
    }

    pub fn hamming(size: usize) -> Self {
        let values = (0..size * size)
            .map(|k| if k / size == k % size { 0.0 } else { 1.0 })
            .collect();
        DistortionTable { size, values }
    }

    pub fn zero(size: usize) -> Self {
        DistortionTable {
            size,
            values: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, xhat: usize) -> f64 {
        self.values[x * self.size + xhat]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedSource {
    pmf: JointDist,
    d1: DistortionTable,
    d2: DistortionTable,
}

impl DistributedSource {
    pub fn new(pmf: JointDist, d1: DistortionTable, d2: DistortionTable) -> Result<Self> {
        if pmf.rank() != 2 {
            return Err(Error::AxisMismatch("source pmf must have axes (X1, X2)".into()));
        }
        if d1.size() != pmf.sizes()[0] || d2.size() != pmf.sizes()[1] {
            return Err(Error::AxisMismatch(format!(
                "distortion tables {}x{} and {}x{} for alphabets {:?}",
                d1.size(),
                d1.size(),
                d2.size(),
                d2.size(),
                pmf.sizes()
            )));
        }
        Ok(DistributedSource { pmf, d1, d2 })
    }

    pub fn pmf(&self) -> &JointDist {
        &self.pmf
    }

    pub fn x1_size(&self) -> usize {
        self.pmf.sizes()[0]
    }

    pub fn x2_size(&self) -> usize {
        self.pmf.sizes()[1]
    }

    pub fn x1(&self) -> &Alphabet {
        &self.pmf.axes()[0]
    }

    pub fn x2(&self) -> &Alphabet {
        &self.pmf.axes()[1]
    }

    pub fn d1(&self) -> &DistortionTable {
        &self.d1
    }

    pub fn d2(&self) -> &DistortionTable {
        &self.d2
    }

    pub fn prob(&self, x1: usize, x2: usize) -> f64 {
        self.pmf.probs()[x1 * self.x2_size() + x2]
    }
}

/// Source with side information; pmf axes are `(X1, X2, Y1, Y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedSourceSi {
    pmf: JointDist,
    d1: DistortionTable,
    d2: DistortionTable,
}

impl DistributedSourceSi {
    pub fn new(pmf: JointDist, d1: DistortionTable, d2: DistortionTable) -> Result<Self> {
        if pmf.rank() != 4 {
            return Err(Error::AxisMismatch(
                "side-information pmf must have axes (X1, X2, Y1, Y2)".into(),
            ));
        }
        if d1.size() != pmf.sizes()[0] || d2.size() != pmf.sizes()[1] {
            return Err(Error::AxisMismatch("distortion tables do not match X1, X2".into()));
        }
        Ok(DistributedSourceSi { pmf, d1, d2 })
    }

    pub fn pmf(&self) -> &JointDist {
        &self.pmf
    }

    pub fn d1(&self) -> &DistortionTable {
        &self.d1
    }

    pub fn d2(&self) -> &DistortionTable {
        &self.d2
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    x1: usize,
    x2: usize,
    #[serde(default)]
    y1: Option<usize>,
    #[serde(default)]
    y2: Option<usize>,
    pmf: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

/// A parsed source file: plain or with side information.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Plain(DistributedSource),
    SideInfo(DistributedSourceSi),
}

/// Parses a TOML source description:
///
/// ```toml
/// x1 = 2
/// x2 = 2
/// pmf = [0.45, 0.05, 0.05, 0.45]   # row-major over (X1, X2[, Y1, Y2])
/// d1 = [0, 1, 1, 0]
/// d2 = [0, 1, 1, 0]
/// # y1 = 2, y2 = 2 for side information
/// ```
pub fn parse_source(text: &str) -> Result<SourceSpec> {
    let f: SourceFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let d1 = DistortionTable::new(f.x1, f.d1)?;
    let d2 = DistortionTable::new(f.x2, f.d2)?;
    match (f.y1, f.y2) {
        (None, None) => Ok(SourceSpec::Plain(DistributedSource::new(
            JointDist::from_sizes(&[f.x1, f.x2], f.pmf)?,
            d1,
            d2,
        )?)),
        (Some(y1), Some(y2)) => Ok(SourceSpec::SideInfo(DistributedSourceSi::new(
            JointDist::from_sizes(&[f.x1, f.x2, y1, y2], f.pmf)?,
            d1,
            d2,
        )?)),
        _ => Err(Error::Parse("give both y1 and y2 or neither".into())),
    }
}
