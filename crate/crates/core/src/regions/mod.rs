//! Achievable rate-distortion bound sets and region boundaries.
//!
//! Each scheme evaluates to a [`RateBounds`] polyhedron
//! `{R1 >= r1, R2 >= r2, R1 + R2 >= sum, D1 >= d1, D2 >= d2}` whose extreme
//! points are returned by [`RateBounds::corners`].

mod boundary;
mod bounds;
mod corrections;
pub mod search;
mod spec;

pub use boundary::{assemble_region, region_contains, BoundaryPoint, Containment, RegionBoundary};
pub use bounds::{
    bt_alpha, btsi_alpha, cc_alpha, mcml_conditions, expected_distortion, flmc_alpha, flmc_joint,
    mcml_alpha, McmlConditionReport, McmlRateTerms, FLMC_AXES,
};
pub use corrections::{b_set, b_upper, delta_n, correction_terms_unchecked, flmc_corrections, BSet, FlmcCorrectionTerms};
pub use spec::{FlmcCodingSpec, ReconstructionMap};

/// Relative margin used when enforcing open parameter intervals.
pub const OPEN_MARGIN: f64 = 1e-9;

/// A rate-distortion tuple `(R1, R2, D1, D2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RDTuple {
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Lower bounds defining one achievable polyhedron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
    pub d1: f64,
    pub d2: f64,
}

impl RateBounds {
    /// Extreme points: a single corner when the individual bounds already
    /// meet the sum-rate bound, otherwise the two corners carrying the
    /// excess on `R1` and on `R2`.
    pub fn corners(&self) -> Vec<RDTuple> {
        let (r1, r2) = (self.r1.max(0.0), self.r2.max(0.0));
        let excess = self.sum - r1 - r2;
        let mk = |a: f64, b: f64| RDTuple {
            r1: a,
            r2: b,
            d1: self.d1,
            d2: self.d2,
        };
        if excess <= 0.0 {
            vec![mk(r1, r2)]
        } else {
            vec![mk(r1 + excess, r2), mk(r1, r2 + excess)]
        }
    }
}
