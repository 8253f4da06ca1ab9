//! Plain-text serialization of pmfs and kernels.
//!
//! Each record is a header line followed by `key value...` lines. Reals are
//! written with 17 significant digits so that parsing returns the same bits.

use crate::info::{CondDist, JointDist};
use crate::{Error, Result};

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_reals(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_real(x)).collect::<Vec<_>>().join(" ")
}

fn fmt_ints(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Line-oriented `key value...` record with a fixed header.
pub(crate) struct Record<'a> {
    lines: Vec<(usize, &'a str, Vec<&'a str>)>,
}

impl<'a> Record<'a> {
    pub(crate) fn parse(text: &'a str, header: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h == header => {}
            Some((n, h)) => {
                return Err(Error::Parse(format!(
                    "line {n}: expected header `{header}`, found `{h}`"
                )))
            }
            None => return Err(Error::Parse(format!("empty input, expected `{header}`"))),
        }
        let lines = lines
            .map(|(n, l)| {
                let mut it = l.split_whitespace();
                let key = it.next().unwrap_or("");
                (n, key, it.collect())
            })
            .collect();
        Ok(Record { lines })
    }

    fn get(&self, key: &str) -> Result<(usize, &[&'a str])> {
        self.lines
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(n, _, v)| (*n, v.as_slice()))
            .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
    }

    pub(crate) fn ints(&self, key: &str) -> Result<Vec<usize>> {
        let (n, vals) = self.get(key)?;
        vals.iter()
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {n}: `{v}` is not an integer")))
            })
            .collect()
    }

    pub(crate) fn reals(&self, key: &str) -> Result<Vec<f64>> {
        let (n, vals) = self.get(key)?;
        vals.iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {n}: `{v}` is not a number")))
            })
            .collect()
    }

    pub(crate) fn real(&self, key: &str) -> Result<f64> {
        let v = self.reals(key)?;
        let (n, _) = self.get(key)?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::Parse(format!("line {n}: `{key}` takes one value"))),
        }
    }
}

impl JointDist {
    pub fn to_text(&self) -> String {
        format!(
            "joint_dist\nsizes {}\nprobs {}\n",
            fmt_ints(self.sizes()),
            fmt_reals(self.probs())
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let r = Record::parse(text, "joint_dist")?;
        JointDist::from_sizes(&r.ints("sizes")?, r.reals("probs")?)
    }
}

impl CondDist {
    pub fn to_text(&self) -> String {
        let sizes = |a: &[crate::Alphabet]| a.iter().map(|x| x.size()).collect::<Vec<_>>();
        format!(
            "cond_dist\nfrom {}\nto {}\nkernel {}\n",
            fmt_ints(&sizes(self.from_axes())),
            fmt_ints(&sizes(self.to_axes())),
            fmt_reals(self.kernel())
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let r = Record::parse(text, "cond_dist")?;
        CondDist::from_sizes(&r.ints("from")?, &r.ints("to")?, r.reals("kernel")?)
    }
}
