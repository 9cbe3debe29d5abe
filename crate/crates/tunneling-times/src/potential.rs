//! Finite-range barrier potentials.
//!
//! Every barrier is reduced at construction time to a contiguous list of
//! constant-height slabs, the only representation the scattering solver
//! consumes. Segments are half-open `[left, right)`, so the value at a shared
//! edge is the height of the segment to the right of it.

use crate::error::{Error, Result};

/// How a barrier was specified. Kept for reporting; numerics only ever look
/// at the slab decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum BarrierKind {
    Rectangular { v0: f64, width: f64 },
    PiecewiseConstant,
    Sampled,
}

/// One constant-height slab, occupying `[left, left + width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub left: f64,
    pub width: f64,
    pub height: f64,
}

impl Slab {
    pub fn right(&self) -> f64 {
        self.left + self.width
    }
}

/// A non-negative potential that vanishes identically outside a finite
/// interval: `V(q) = 0` exactly for `|q - center| > support_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    kind: BarrierKind,
    center: f64,
    support_radius: f64,
    /// Contiguous slabs with zero-height ends trimmed. Empty iff V == 0.
    slabs: Vec<Slab>,
}

/// Ratio tolerance used when checking that piecewise segments are contiguous.
const CONTIGUITY_TOL: f64 = 1e-9;

impl Barrier {
    /// Rectangular barrier of height `v0 >= 0` and width `width > 0`
    /// centered at `center`.
    pub fn rectangular(v0: f64, width: f64, center: f64) -> Result<Self> {
        if !(v0 >= 0.0) || !v0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "barrier height must be finite and >= 0, got {v0}"
            )));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "barrier width must be finite and > 0, got {width}"
            )));
        }
        let slabs = if v0 == 0.0 {
            Vec::new()
        } else {
            vec![Slab {
                left: center - width / 2.0,
                width,
                height: v0,
            }]
        };
        Ok(Barrier {
            kind: BarrierKind::Rectangular { v0, width },
            center,
            support_radius: width / 2.0,
            slabs,
        })
    }

    /// Piecewise-constant barrier from `(left, right, height)` triples.
    /// Segments must be sorted, non-overlapping and contiguous; heights must
    /// be >= 0.
    pub fn piecewise_constant(segments: &[(f64, f64, f64)]) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter(
                "piecewise barrier needs at least one segment".into(),
            ));
        }
        let span = segments.last().unwrap().1 - segments[0].0;
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "piecewise barrier span must be positive, got {span}"
            )));
        }
        let mut slabs = Vec::with_capacity(segments.len());
        let mut cursor = segments[0].0;
        for (i, &(left, right, height)) in segments.iter().enumerate() {
            if !(right > left) {
                return Err(Error::InvalidParameter(format!(
                    "segment {i} has right <= left ({right} <= {left})"
                )));
            }
            if !(height >= 0.0) || !height.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "segment {i} height must be finite and >= 0, got {height}"
                )));
            }
            if (left - cursor).abs() > CONTIGUITY_TOL * span.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "segment {i} starts at {left} but the previous one ends at {cursor}; segments must be contiguous"
                )));
            }
            // Snap to the shared edge so the slab list is exactly contiguous.
            slabs.push(Slab {
                left: cursor,
                width: right - cursor,
                height,
            });
            cursor = right;
        }
        let (lo, hi) = (segments[0].0, cursor);
        Ok(Barrier {
            kind: BarrierKind::PiecewiseConstant,
            center: 0.5 * (lo + hi),
            support_radius: 0.5 * (hi - lo),
            slabs: trim_zero_ends(slabs),
        })
    }

    /// Barrier sampled on a uniform grid: `heights[j]` applies on the cell
    /// `[start + j*step - step/2, start + j*step + step/2)`.
    pub fn from_samples(start: f64, step: f64, heights: &[f64]) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample step must be finite and > 0, got {step}"
            )));
        }
        if heights.is_empty() {
            return Err(Error::InvalidParameter(
                "sampled barrier needs at least one height".into(),
            ));
        }
        let mut slabs = Vec::with_capacity(heights.len());
        for (j, &h) in heights.iter().enumerate() {
            if !(h >= 0.0) || !h.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "sample {j} must be finite and >= 0, got {h}"
                )));
            }
            slabs.push(Slab {
                left: start + (j as f64 - 0.5) * step,
                width: step,
                height: h,
            });
        }
        let lo = slabs[0].left;
        let hi = slabs.last().unwrap().right();
        Ok(Barrier {
            kind: BarrierKind::Sampled,
            center: 0.5 * (lo + hi),
            support_radius: 0.5 * (hi - lo),
            slabs: trim_zero_ends(slabs),
        })
    }

    pub fn kind(&self) -> &BarrierKind {
        &self.kind
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Radius `D` of the declared support: `V(q) = 0` for `|q - center| > D`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Slab decomposition with zero-height ends trimmed (empty when V == 0).
    pub fn slabs(&self) -> &[Slab] {
        &self.slabs
    }

    /// True when the potential is identically zero.
    pub fn is_free(&self) -> bool {
        self.slabs.is_empty()
    }

    /// V(q), honoring the half-open edge convention.
    pub fn evaluate(&self, q: f64) -> f64 {
        for s in &self.slabs {
            if q < s.left {
                return 0.0;
            }
            if q < s.right() {
                return s.height;
            }
        }
        0.0
    }

    /// Width of the narrowest slab with nonzero height; `None` for the free
    /// barrier. Sets the finest feature scale that spectral cutoffs must
    /// resolve.
    pub fn min_feature_width(&self) -> Option<f64> {
        self.slabs
            .iter()
            .filter(|s| s.height > 0.0)
            .map(|s| s.width)
            .fold(None, |acc, w| Some(acc.map_or(w, |a: f64| a.min(w))))
    }

    pub fn max_height(&self) -> f64 {
        self.slabs.iter().fold(0.0, |m, s| m.max(s.height))
    }
}

fn trim_zero_ends(mut slabs: Vec<Slab>) -> Vec<Slab> {
    while slabs.first().is_some_and(|s| s.height == 0.0) {
        slabs.remove(0);
    }
    while slabs.last().is_some_and(|s| s.height == 0.0) {
        slabs.pop();
    }
    slabs
}
