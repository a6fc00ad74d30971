//! Intervals and axis-aligned boxes with open/closed endpoints.
//!
//! State and input domains are products of one-dimensional intervals; the
//! half-open case matters because lattice counting and membership tests have
//! to honor it exactly.

use std::fmt;

/// Relative tolerance used when deciding whether a point sits exactly on an
/// interval endpoint (endpoint arithmetic like `pi/3` vs `25 * (pi/75)` is
/// only equal up to rounding).
pub const ENDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// true when `lo` itself belongs to the interval.
    pub lo_closed: bool,
    /// true when `hi` itself belongs to the interval.
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    /// `[lo, hi[` — closed below, open above.
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    /// Membership with exact endpoint semantics (no tolerance).
    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above_lo = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below_hi = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above_lo && below_hi
    }

    /// Membership where values within `ENDPOINT_TOL` of an endpoint are
    /// snapped onto it before the open/closed rule is applied.
    pub fn contains_snapped(&self, x: f64) -> bool {
        let tol_lo = ENDPOINT_TOL * self.lo.abs().max(1.0);
        let tol_hi = ENDPOINT_TOL * self.hi.abs().max(1.0);
        let x_snapped = if (x - self.lo).abs() <= tol_lo {
            self.lo
        } else if (x - self.hi).abs() <= tol_hi {
            self.hi
        } else {
            x
        };
        self.contains(x_snapped)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { ']' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { '[' }
        )
    }
}

/// Product of per-dimension intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub dims: Vec<Interval>,
}

impl BoxRegion {
    pub fn new(dims: Vec<Interval>) -> Self {
        BoxRegion { dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.dims.iter().all(Interval::is_bounded)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(iv, &xi)| iv.contains(xi))
    }

    pub fn contains_snapped(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len()
            && self.dims.iter().zip(x).all(|(iv, &xi)| iv.contains_snapped(xi))
    }

    /// Smallest per-dimension width; the largest lattice pitch the box can
    /// support while still containing at least one lattice point near every
    /// member (the quantity written `mu_hat` for a set).
    pub fn min_width(&self) -> f64 {
        self.dims.iter().map(Interval::width).fold(f64::INFINITY, f64::min)
    }

    /// Componentwise widths.
    pub fn widths(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::width).collect()
    }

    /// true when `inner` is contained in `self` componentwise (interval
    /// inclusion honoring endpoint openness).
    pub fn contains_box(&self, inner: &BoxRegion) -> bool {
        if self.dims.len() != inner.dims.len() {
            return false;
        }
        self.dims.iter().zip(&inner.dims).all(|(outer, inner)| {
            let lo_ok = inner.lo > outer.lo
                || (inner.lo == outer.lo && (outer.lo_closed || !inner.lo_closed));
            let hi_ok = inner.hi < outer.hi
                || (inner.hi == outer.hi && (outer.hi_closed || !inner.hi_closed));
            lo_ok && hi_ok
        })
    }

    /// Uniform sample (open endpoints are a measure-zero concern and ignored).
    pub fn sample(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        self.dims.iter().map(|iv| iv.lo + rng.gen::<f64>() * iv.width()).collect()
    }
}

/// Infinity norm of a vector.
pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
}

/// Infinity-norm distance between two vectors of equal length.
pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (&x, &y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_membership() {
        let iv = Interval::half_open(-1.0, 1.0);
        assert!(iv.contains(-1.0));
        assert!(!iv.contains(1.0));
        assert!(iv.contains(0.999999));
    }

    #[test]
    fn snapped_membership_rounds_to_endpoint() {
        let iv = Interval::half_open(-1.0, 1.0);
        // A hair below the open endpoint snaps onto it and is excluded.
        assert!(!iv.contains_snapped(1.0 - 1e-12));
        // A hair below the closed endpoint snaps onto it and is included.
        assert!(iv.contains_snapped(-1.0 - 1e-12));
    }

    #[test]
    fn box_inclusion_respects_openness() {
        let outer = BoxRegion::new(vec![Interval::half_open(0.0, 1.0)]);
        let same = BoxRegion::new(vec![Interval::half_open(0.0, 1.0)]);
        let closed = BoxRegion::new(vec![Interval::closed(0.0, 1.0)]);
        assert!(outer.contains_box(&same));
        assert!(!outer.contains_box(&closed));
        assert!(closed.contains_box(&outer));
    }

    #[test]
    fn min_width_picks_smallest_side() {
        let b = BoxRegion::new(vec![
            Interval::half_open(-std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3),
            Interval::half_open(-1.0, 1.0),
        ]);
        assert!((b.min_width() - 2.0).abs() < 1e-12);
    }
}
