use crate::{Error, Result};

use super::RDTuple;

/// Tolerance when filtering corners against the fixed distortions.
const DISTORTION_TOL: f64 = 1e-12;

/// One boundary point; `source` indexes the corner list it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub r1: f64,
    pub r2: f64,
    pub source: usize,
}

/// Non-dominated `(R1, R2)` points of a region slice at fixed distortions,
/// sorted by increasing `R1` (hence strictly decreasing `R2`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionBoundary {
    pub fixed: (f64, f64),
    pub points: Vec<BoundaryPoint>,
    pub hulled: bool,
}

/// Result of [`region_contains`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub contained: bool,
    /// Largest uniform shift `t` needed to bring an inner point into the
    /// outer region, `(a + t, b + t)`.
    pub max_violation: f64,
    /// Index into the inner boundary of the worst point.
    pub worst: Option<usize>,
}

/// Keeps corners meeting the fixed distortions, removes dominated points,
/// and optionally replaces the result by the vertices of its lower convex
/// envelope (time-sharing).
pub fn assemble_region(corners: &[RDTuple], fixed: (f64, f64), hull: bool) -> Result<RegionBoundary> {
    if corners.is_empty() {
        return Err(Error::Precondition("no corners to assemble".into()));
    }
    let pts: Vec<BoundaryPoint> = corners
        .iter()
        .enumerate()
        .filter(|(_, c)| c.d1 <= fixed.0 + DISTORTION_TOL && c.d2 <= fixed.1 + DISTORTION_TOL)
        .map(|(i, c)| BoundaryPoint {
            r1: c.r1,
            r2: c.r2,
            source: i,
        })
        .collect();
    if pts.is_empty() {
        return Err(Error::Infeasible(format!(
            "no corner meets D1 <= {} and D2 <= {}",
            fixed.0, fixed.1
        )));
    }
    let mut b = RegionBoundary {
        fixed,
        points: pareto(pts),
        hulled: false,
    };
    if hull {
        b = b.hull();
    }
    Ok(b)
}

fn pareto(mut pts: Vec<BoundaryPoint>) -> Vec<BoundaryPoint> {
    pts.sort_by(|a, b| {
        a.r1.total_cmp(&b.r1)
            .then(a.r2.total_cmp(&b.r2))
            .then(a.source.cmp(&b.source))
    });
    let mut out: Vec<BoundaryPoint> = Vec::new();
    for p in pts {
        if out.last().is_none_or(|l| p.r2 < l.r2) {
            out.push(p);
        }
    }
    out
}

fn cross(o: &BoundaryPoint, a: &BoundaryPoint, b: &BoundaryPoint) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

impl RegionBoundary {
    /// Lower-left convex hull vertices. Idempotent.
    pub fn hull(&self) -> RegionBoundary {
        let mut h: Vec<BoundaryPoint> = Vec::new();
        for &p in &self.points {
            while h.len() >= 2 && cross(&h[h.len() - 2], &h[h.len() - 1], &p) <= 0.0 {
                h.pop();
            }
            h.push(p);
        }
        RegionBoundary {
            fixed: self.fixed,
            points: h,
            hulled: true,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest `R2` reachable at `R1 = r1` by time-sharing boundary points;
    /// `+inf` left of the first point.
    pub fn envelope(&self, r1: f64) -> f64 {
        let h = if self.hulled { self.points.clone() } else { self.hull().points };
        let Some(first) = h.first() else {
            return f64::INFINITY;
        };
        if r1 < first.r1 {
            return f64::INFINITY;
        }
        for w in h.windows(2) {
            if r1 <= w[1].r1 {
                let t = if w[1].r1 > w[0].r1 { (r1 - w[0].r1) / (w[1].r1 - w[0].r1) } else { 1.0 };
                return w[0].r2 + t * (w[1].r2 - w[0].r2);
            }
        }
        h.last().map_or(f64::INFINITY, |p| p.r2)
    }

    /// [`Self::envelope`] evaluated on `grid`.
    pub fn envelope_on(&self, grid: &[f64]) -> Vec<f64> {
        let h = self.hull();
        grid.iter().map(|&r| h.envelope(r)).collect()
    }

    /// Smallest `t >= 0` with `(a + t, b + t)` in the time-shared region.
    pub fn violation(&self, a: f64, b: f64) -> f64 {
        let h = self.hull();
        let inside = |t: f64| h.envelope(a + t) <= b + t;
        if inside(0.0) {
            return 0.0;
        }
        let mut hi = 1.0;
        while !inside(hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Whether every point of `inner` lies in the time-shared `outer` region,
/// up to a uniform shift of at most `slack` in both rates.
pub fn region_contains(outer: &RegionBoundary, inner: &RegionBoundary, slack: f64) -> Result<Containment> {
    if (outer.fixed.0 - inner.fixed.0).abs() > DISTORTION_TOL || (outer.fixed.1 - inner.fixed.1).abs() > DISTORTION_TOL {
        return Err(Error::AxisMismatch(format!(
            "regions at distortions {:?} and {:?}",
            outer.fixed, inner.fixed
        )));
    }
    let h = outer.hull();
    let mut worst = None;
    let mut max_violation = 0.0f64;
    for (i, p) in inner.points.iter().enumerate() {
        let v = h.violation(p.r1, p.r2);
        if v > max_violation {
            max_violation = v;
            worst = Some(i);
        }
    }
    Ok(Containment {
        contained: max_violation <= slack,
        max_violation,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r1: f64, r2: f64) -> RDTuple {
        RDTuple { r1, r2, d1: 0.0, d2: 0.0 }
    }

    #[test]
    fn dominance_and_hull() {
        let b = assemble_region(&[t(1.0, 1.0), t(0.5, 1.5), t(1.2, 1.2), t(2.0, 0.0), t(1.0, 0.9)], (0.0, 0.0), false)
            .unwrap();
        let rs: Vec<(f64, f64)> = b.points.iter().map(|p| (p.r1, p.r2)).collect();
        assert_eq!(rs, vec![(0.5, 1.5), (1.0, 0.9), (2.0, 0.0)]);
        let h = b.hull();
        assert_eq!(h.hull(), h);
        assert_eq!(h.len(), 3);
        let h2 = assemble_region(&[t(0.0, 2.0), t(1.0, 1.5), t(2.0, 0.0)], (0.0, 0.0), true).unwrap();
        assert_eq!(h2.len(), 2);
        assert!((h2.envelope(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(h2.envelope(-0.1), f64::INFINITY);
        assert_eq!(h2.envelope(5.0), 0.0);
    }

    #[test]
    fn containment_violation_is_uniform_shift() {
        let outer = assemble_region(&[t(1.0, 1.0)], (0.0, 0.0), false).unwrap();
        let inner = assemble_region(&[t(0.5, 0.8)], (0.0, 0.0), false).unwrap();
        let c = region_contains(&outer, &inner, 0.0).unwrap();
        assert!(!c.contained);
        assert!((c.max_violation - 0.5).abs() < 1e-12);
        assert!(region_contains(&outer, &outer, 0.0).unwrap().contained);
        assert!(region_contains(&inner, &outer, 0.0).unwrap().contained);
    }

    #[test]
    fn distortion_filter_and_errors() {
        let mut c = t(0.0, 0.0);
        c.d2 = 0.2;
        assert!(matches!(assemble_region(&[c], (0.0, 0.1), false), Err(Error::Infeasible(_))));
        assert!(assemble_region(&[], (0.0, 0.1), false).is_err());
        let a = assemble_region(&[t(0.0, 0.0)], (0.0, 0.1), false).unwrap();
        let b = assemble_region(&[t(0.0, 0.0)], (0.0, 0.2), false).unwrap();
        assert!(region_contains(&a, &b, 0.0).is_err());
    }
}
