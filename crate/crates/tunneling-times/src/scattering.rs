//! Stationary scattering amplitudes for piecewise-constant barriers.
//!
//! For each momentum `kappa > 0` the scattering state is
//!
//! ```text
//! psi(q) = exp(i kappa q) + B exp(-i kappa q)    left of the barrier,
//! psi(q) = A exp(i kappa q)                      right of the barrier,
//! ```
//!
//! with `hbar = 1` and energy `eps = kappa^2 / (2 m)`. The solver composes
//! per-slab transfer matrices in the `(psi, psi')` basis, where each slab
//! matrix is an entire function of the energy: the same expressions cover
//! propagating (`eps > V`), evanescent (`eps < V`) and degenerate
//! (`eps = V`, linear wave) slabs without branching on the physics.
//!
//! Magnitudes are tracked on a log scale. Wide or tall barriers make the
//! matrix entries grow like `exp(gamma * width)`; entries are renormalized
//! by their largest element whenever they get big, and the accumulated
//! scale is folded into `ln|A|` at the end. This keeps `ln|A|` and the
//! transmission phase exact far beyond the point where `|A|` itself
//! underflows.
//!
//! Known limitation, inherent to transfer matrices: resonant structures
//! (two opaque humps enclosing a cavity) cancel large matrix entries when
//! the transmission returns to order one, which costs relative accuracy of
//! roughly `eps_machine * exp(total opacity)`. Single-humped barriers are
//! unaffected.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potential::Barrier;

/// A complex amplitude in log-polar form, `A = exp(ln_abs + i arg)`.
///
/// The representation stays exact when `|A|` is far below the smallest
/// normal float, which happens routinely under wide barriers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub ln_abs: f64,
    pub arg: f64,
}

impl Amplitude {
    pub const ONE: Amplitude = Amplitude {
        ln_abs: 0.0,
        arg: 0.0,
    };

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn abs(self) -> f64 {
        self.ln_abs.exp()
    }

    /// |A|^2, usable as a transmission probability.
    pub fn abs_sq(self) -> f64 {
        (2.0 * self.ln_abs).exp()
    }
}

// --- slab matrices -------------------------------------------------------

/// cos(sqrt(x)) and sin(sqrt(x))/sqrt(x), continued to x <= 0 where they
/// become cosh/sinh of sqrt(-x). Entire in x; series near zero.
fn cs(x: f64) -> (f64, f64) {
    if x.abs() < 1e-4 {
        let c = 1.0 - x / 2.0 * (1.0 - x / 12.0 * (1.0 - x / 30.0));
        let s = 1.0 - x / 6.0 * (1.0 - x / 20.0 * (1.0 - x / 42.0));
        (c, s)
    } else if x > 0.0 {
        let r = x.sqrt();
        (r.cos(), r.sin() / r)
    } else {
        let r = (-x).sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

/// 2x2 real transfer matrix in the (psi, psi') basis with a separate
/// log-scale so that products over opaque slabs never overflow.
#[derive(Debug, Clone, Copy)]
struct ScaledMat2 {
    m: [[f64; 2]; 2],
    log_scale: f64,
}

const RENORM_THRESHOLD: f64 = 1e120;
/// Largest gamma*d handled by a single slab factor; wider slabs are split.
const MAX_SLAB_OPACITY: f64 = 300.0;

impl ScaledMat2 {
    fn identity() -> Self {
        ScaledMat2 {
            m: [[1.0, 0.0], [0.0, 1.0]],
            log_scale: 0.0,
        }
    }

    /// Left-multiply by the transfer matrix of one slab with
    /// `k^2 = 2 m (eps - V)` (any sign) and width `d`.
    fn apply_slab(&mut self, k2: f64, d: f64) {
        let x = k2 * d * d;
        let (c, s) = cs(x);
        let m12 = d * s;
        let m21 = -k2 * d * s;
        let a = self.m;
        self.m = [
            [c * a[0][0] + m12 * a[1][0], c * a[0][1] + m12 * a[1][1]],
            [m21 * a[0][0] + c * a[1][0], m21 * a[0][1] + c * a[1][1]],
        ];
        let mx = self.max_abs();
        if mx > RENORM_THRESHOLD {
            for row in &mut self.m {
                for e in row {
                    *e /= mx;
                }
            }
            self.log_scale += mx.ln();
        }
    }

    fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, e| acc.max(e.abs()))
    }
}

fn validate_kappa_mass(kappa: f64, mass: f64) -> Result<()> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mass must be finite and > 0, got {mass}"
        )));
    }
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa must be finite and nonzero, got {kappa}"
        )));
    }
    Ok(())
}

/// Transmission amplitude `A` and reflection amplitude `B` at one momentum.
///
/// `kappa < 0` is accepted and satisfies `A(-kappa) = conj(A(kappa))` for
/// real barriers, which is how tabulated grids are extended to negative
/// arguments.
pub fn amplitude_pair(b: &Barrier, mass: f64, kappa: f64) -> Result<(Amplitude, Complex64)> {
    validate_kappa_mass(kappa, mass)?;
    let slabs = b.slabs();
    if slabs.is_empty() {
        return Ok((Amplitude::ONE, Complex64::new(0.0, 0.0)));
    }

    let mut mat = ScaledMat2::identity();
    for s in slabs {
        let k2 = kappa * kappa - 2.0 * mass * s.height;
        // Split very opaque slabs so cosh stays representable per factor.
        let n_sub = if k2 < 0.0 {
            (((-k2).sqrt() * s.width) / MAX_SLAB_OPACITY).ceil().max(1.0) as usize
        } else {
            1
        };
        let d = s.width / n_sub as f64;
        for _ in 0..n_sub {
            mat.apply_slab(k2, d);
        }
    }

    let m = &mat.m;
    let x0 = slabs[0].left;
    let width = slabs.last().unwrap().right() - x0;

    // With the chain matched to plane waves on both sides:
    //   A_loc = 2 / D,  D = m11 + m22 + i (m21/kappa - kappa*m12),
    //   B_loc = [(m22 - m11) - i (kappa*m12 + m21/kappa)] / D,
    // and the anchors contribute A = A_loc e^{-i kappa width},
    // B = B_loc e^{2 i kappa x0}.
    let d = Complex64::new(m[0][0] + m[1][1], m[1][0] / kappa - kappa * m[0][1]);
    let ln_abs = 2.0f64.ln() - d.norm().ln() - mat.log_scale;
    let arg = -d.arg() - kappa * width;

    let b_num = Complex64::new(m[1][1] - m[0][0], -(kappa * m[0][1] + m[1][0] / kappa));
    let b_loc = b_num / d;
    let refl = b_loc * Complex64::from_polar(1.0, 2.0 * kappa * x0);

    Ok((Amplitude { ln_abs, arg }, refl))
}

/// Transmission amplitude only.
pub fn transmission_amplitude(b: &Barrier, mass: f64, kappa: f64) -> Result<Amplitude> {
    amplitude_pair(b, mass, kappa).map(|(a, _)| a)
}

// --- rectangular closed form ---------------------------------------------

/// Closed-form transmission amplitude of a rectangular barrier, in
/// log-polar form. Independent of the transfer-matrix code path; used as
/// its oracle.
///
/// Continuous across `eps = v0`: the degenerate slab obeys the linear wave
/// equation and the formula's analytic limit is taken there via series.
pub fn rectangular_closed_form_polar(v0: f64, width: f64, mass: f64, kappa: f64) -> Result<Amplitude> {
    validate_kappa_mass(kappa, mass)?;
    if !(v0 >= 0.0) || !(width > 0.0) {
        return Err(Error::InvalidParameter(
            "closed form needs v0 >= 0 and width > 0".into(),
        ));
    }
    if v0 == 0.0 {
        return Ok(Amplitude::ONE);
    }
    let k2 = kappa * kappa - 2.0 * mass * v0;
    let x = k2 * width * width;

    let (ln_d, arg_d) = if x.abs() < 1e-6 {
        // eps ~ v0: psi'' ~ 0 inside, D -> 1 - i kappa w / 2 smoothly.
        let c = 1.0 - x / 2.0 * (1.0 - x / 12.0);
        let s = 1.0 - x / 6.0 * (1.0 - x / 20.0);
        let im = -(kappa * kappa + k2) / (2.0 * kappa) * width * s;
        let d = Complex64::new(c, im);
        (d.norm().ln(), d.arg())
    } else if x > 0.0 {
        let k = k2.sqrt();
        let kw = k * width;
        let d = Complex64::new(
            kw.cos(),
            -(kappa * kappa + k2) / (2.0 * kappa * k) * kw.sin(),
        );
        (d.norm().ln(), d.arg())
    } else {
        let g = (-k2).sqrt();
        let gw = g * width;
        let z = (kappa * kappa - g * g) / (2.0 * kappa * g);
        if gw <= 200.0 {
            let d = Complex64::new(gw.cosh(), -z * gw.sinh());
            (d.norm().ln(), d.arg())
        } else {
            // cosh/sinh would overflow; factor out exp(gw).
            let u = (-2.0 * gw).exp();
            let re = 1.0 + u;
            let im = -z * (1.0 - u);
            (
                gw - 2.0f64.ln() + 0.5 * (re * re + im * im).ln(),
                im.atan2(re),
            )
        }
    };

    Ok(Amplitude {
        ln_abs: -ln_d,
        arg: -kappa * width - arg_d,
    })
}

/// Closed-form amplitude as a complex number (underflows to zero for very
/// opaque barriers; use the polar variant when that matters).
pub fn rectangular_closed_form(v0: f64, width: f64, mass: f64, kappa: f64) -> Result<Complex64> {
    rectangular_closed_form_polar(v0, width, mass, kappa).map(Amplitude::to_complex)
}

// --- tabulated amplitudes -------------------------------------------------

/// Shape of a momentum grid, as far as downstream quadratures care.
///
/// `step * (offset + i + 1/2)` grids ("half-integer") mirror cleanly to
/// negative momenta, which the propagator needs; plain integer-aligned
/// grids work for everything that stays on positive momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridForm {
    UniformHalfInteger { step: f64, offset: i64 },
    UniformInteger { step: f64, offset: i64 },
    Uniform { step: f64 },
    Irregular,
}

impl GridForm {
    pub fn step(&self) -> Option<f64> {
        match *self {
            GridForm::UniformHalfInteger { step, .. }
            | GridForm::UniformInteger { step, .. }
            | GridForm::Uniform { step } => Some(step),
            GridForm::Irregular => None,
        }
    }
}

fn detect_grid_form(kappa: &[f64]) -> GridForm {
    if kappa.len() < 2 {
        return GridForm::Irregular;
    }
    let n = kappa.len();
    let step = (kappa[n - 1] - kappa[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return GridForm::Irregular;
    }
    let uniform = kappa
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);
    if !uniform {
        return GridForm::Irregular;
    }
    let r = kappa[0] / step;
    let as_int = r.round();
    if (r - as_int).abs() < 1e-6 && as_int >= 1.0 {
        return GridForm::UniformInteger {
            step,
            offset: as_int as i64,
        };
    }
    let as_half = (r - 0.5).round();
    if (r - 0.5 - as_half).abs() < 1e-6 && as_half >= 0.0 {
        return GridForm::UniformHalfInteger {
            step,
            offset: as_half as i64,
        };
    }
    GridForm::Uniform { step }
}

/// Transmission and reflection amplitudes tabulated on a momentum grid,
/// with the transmission phase unwrapped and log magnitudes kept alongside
/// the complex values.
#[derive(Debug, Clone)]
pub struct ScatteringAmplitudes {
    pub mass: f64,
    pub kappa: Vec<f64>,
    /// Transmission amplitude A per grid point (zero where |A| underflows).
    pub amp: Vec<Complex64>,
    /// Reflection amplitude B per grid point.
    pub refl: Vec<Complex64>,
    /// ln|A| per grid point, valid even where `amp` underflows.
    pub ln_abs_a: Vec<f64>,
    /// arg A per grid point, unwrapped downward from the highest momentum
    /// (where the principal value is near zero because A -> 1).
    pub phase: Vec<f64>,
    form: GridForm,
    /// True when `ln_abs_a` was reconstructed from complex values instead of
    /// being accumulated on a log scale by the transfer matrix.
    logs_from_complex: bool,
}

impl ScatteringAmplitudes {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn grid_form(&self) -> GridForm {
        self.form
    }

    pub fn grid_step(&self) -> Option<f64> {
        self.form.step()
    }

    pub(crate) fn logs_from_complex(&self) -> bool {
        self.logs_from_complex
    }

    /// Index of the grid point closest to `kappa`.
    pub fn index_nearest(&self, kappa: f64) -> usize {
        match self.form.step() {
            Some(h) => {
                let i = ((kappa - self.kappa[0]) / h).round();
                (i.max(0.0) as usize).min(self.kappa.len() - 1)
            }
            None => {
                let mut best = 0;
                let mut dist = f64::INFINITY;
                for (i, &k) in self.kappa.iter().enumerate() {
                    let d = (k - kappa).abs();
                    if d < dist {
                        dist = d;
                        best = i;
                    }
                }
                best
            }
        }
    }

    pub fn transmission_probability(&self, i: usize) -> f64 {
        (2.0 * self.ln_abs_a[i]).exp()
    }

    /// Lattice coordinate of stored index 0, when the grid sits on a lattice
    /// `kappa_l = step * (l + 1/2)` (half-integer) or `kappa_l = step * l`
    /// (integer).
    pub(crate) fn lattice_offset(&self) -> Option<i64> {
        match self.form {
            GridForm::UniformHalfInteger { offset, .. } => Some(offset),
            GridForm::UniformInteger { offset, .. } => Some(offset),
            _ => None,
        }
    }

    /// Amplitude at lattice coordinate `l`, extending to negative momenta
    /// through `A(-kappa) = conj(A(kappa))`. Only half-integer lattices can
    /// mirror (they never hit kappa = 0).
    pub(crate) fn amp_at_lattice(&self, l: i64) -> Result<Complex64> {
        let offset = self.lattice_offset().ok_or_else(|| {
            Error::OutOfRange("amplitude grid is not lattice-aligned".into())
        })?;
        let half = matches!(self.form, GridForm::UniformHalfInteger { .. });
        let n = self.kappa.len() as i64;
        let fetch = |l_pos: i64, conj: bool| -> Result<Complex64> {
            let i = l_pos - offset;
            if i < 0 || i >= n {
                return Err(Error::OutOfRange(format!(
                    "lattice point {l_pos} outside stored range [{offset}, {})",
                    offset + n
                )));
            }
            let a = self.amp[i as usize];
            Ok(if conj { a.conj() } else { a })
        };
        if half {
            if l >= 0 {
                fetch(l, false)
            } else {
                fetch(-l - 1, true)
            }
        } else {
            if l > 0 {
                fetch(l, false)
            } else if l < 0 {
                fetch(-l, true)
            } else {
                Err(Error::OutOfRange(
                    "integer-aligned grid requires the amplitude at kappa = 0; \
                     use a half-integer-aligned grid (see default_kappa_grid)"
                        .into(),
                ))
            }
        }
    }

    /// Build a table from complex amplitudes alone (e.g. imported data).
    /// Log magnitudes are reconstructed from `|A|`, so they lose meaning
    /// once `|A|` underflows; operations that need them will say so.
    pub fn from_complex_parts(
        mass: f64,
        kappa: Vec<f64>,
        amp: Vec<Complex64>,
        refl: Vec<Complex64>,
    ) -> Result<Self> {
        if kappa.is_empty() || kappa.len() != amp.len() || kappa.len() != refl.len() {
            return Err(Error::InvalidParameter(
                "kappa, amp and refl must be equal-length and non-empty".into(),
            ));
        }
        validate_grid(&kappa)?;
        let ln_abs_a: Vec<f64> = amp.iter().map(|a| a.norm().ln()).collect();
        let raw: Vec<f64> = amp.iter().map(|a| a.arg()).collect();
        let phase = unwrap_phase_from_top(&raw, &kappa)?;
        let form = detect_grid_form(&kappa);
        Ok(ScatteringAmplitudes {
            mass,
            kappa,
            amp,
            refl,
            ln_abs_a,
            phase,
            form,
            logs_from_complex: true,
        })
    }
}

fn validate_grid(kappa: &[f64]) -> Result<()> {
    for (i, &k) in kappa.iter().enumerate() {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid point {i} must be finite and > 0, got {k}"
            )));
        }
        if i > 0 && k <= kappa[i - 1] {
            return Err(Error::InvalidParameter(format!(
                "grid must be strictly increasing, violated at index {i}"
            )));
        }
    }
    Ok(())
}

fn wrap_to_pi(x: f64) -> f64 {
    let two = 2.0 * PI;
    let r = x.rem_euclid(two);
    if r > PI {
        r - two
    } else {
        r
    }
}

/// Unwrap principal-value phases into a continuous branch, anchored at the
/// top of the grid where `arg A` sits near zero. Fails when a step is too
/// close to +-pi to resolve the branch.
fn unwrap_phase_from_top(raw: &[f64], kappa: &[f64]) -> Result<Vec<f64>> {
    let n = raw.len();
    let mut out = vec![0.0; n];
    out[n - 1] = wrap_to_pi(raw[n - 1]);
    for i in (0..n.saturating_sub(1)).rev() {
        let d = wrap_to_pi(raw[i] - raw[i + 1]);
        if d.abs() >= PI * (1.0 - 1e-9) {
            return Err(Error::GridTooCoarse {
                kappa_left: kappa[i],
                kappa_right: kappa[i + 1],
            });
        }
        out[i] = out[i + 1] + d;
    }
    Ok(out)
}

/// Tabulate A and B on a strictly increasing grid of positive momenta.
pub fn transmission_amplitudes(
    b: &Barrier,
    mass: f64,
    kappa_grid: &[f64],
) -> Result<ScatteringAmplitudes> {
    if kappa_grid.is_empty() {
        return Err(Error::InvalidParameter("empty kappa grid".into()));
    }
    validate_grid(kappa_grid)?;

    let n = kappa_grid.len();
    let mut amp = Vec::with_capacity(n);
    let mut refl = Vec::with_capacity(n);
    let mut ln_abs_a = Vec::with_capacity(n);
    let mut raw_phase = Vec::with_capacity(n);
    for &k in kappa_grid {
        let (a, b_refl) = amplitude_pair(b, mass, k)?;
        amp.push(a.to_complex());
        refl.push(b_refl);
        ln_abs_a.push(a.ln_abs);
        raw_phase.push(wrap_to_pi(a.arg));
    }
    let phase = unwrap_phase_from_top(&raw_phase, kappa_grid)?;
    let form = detect_grid_form(kappa_grid);
    Ok(ScatteringAmplitudes {
        mass,
        kappa: kappa_grid.to_vec(),
        amp,
        refl,
        ln_abs_a,
        phase,
        form,
        logs_from_complex: false,
    })
}

// --- grid builders --------------------------------------------------------

/// Spectral cutoff for the sigma integral behind the transmission
/// propagator: wide enough for the packet's momentum content, its spatial
/// Fourier width and the barrier's finest feature.
pub fn sigma_max_default(dp0: f64, dq0: f64, barrier: &Barrier) -> f64 {
    let feature = barrier.min_feature_width().map_or(0.0, |w| 1.0 / w);
    16.0 * dp0.max(1.0 / dq0).max(feature)
}

/// Uniform grid of `n` points covering `[lo, hi]` (no lattice alignment).
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * h).collect()
}

/// Default momentum grid for a packet with mean momentum `p0` and momentum
/// width `dp0`: `n` points on a half-integer lattice covering
/// `[p0 - 8 dp0 - sigma_max/2, p0 + 8 dp0 + sigma_max/2]` (clipped to
/// positive momenta). Half-integer alignment keeps every propagator lookup
/// on-lattice after mirroring to negative momenta, and the step is snapped
/// so that `p0` itself is a lattice point: amplitudes, times and kernel
/// columns are then all evaluated exactly at the packet's mean momentum
/// instead of at a neighbor up to half a step away.
pub fn default_kappa_grid(p0: f64, dp0: f64, sigma_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 16, "kappa grid needs at least 16 points");
    assert!(p0 > 0.0 && dp0 > 0.0 && sigma_max > 0.0);
    let lo = p0 - 8.0 * dp0 - sigma_max / 2.0;
    let hi = p0 + 8.0 * dp0 + sigma_max / 2.0;
    let h0 = if lo <= 0.0 {
        hi / (n as f64 - 0.5)
    } else {
        (hi - lo) / (n as f64 - 2.0)
    };
    // Snapping toward a coarser step keeps the coverage guarantee; it only
    // fails when the window dwarfs p0, where alignment is pointless anyway.
    let l = (p0 / h0 - 0.5).floor();
    let h = if l >= 1.0 { p0 / (l + 0.5) } else { h0 };
    if lo <= 0.0 {
        return (0..n).map(|i| h * (i as f64 + 0.5)).collect();
    }
    let l0 = (lo / h - 0.5).floor();
    if l0 < 1.0 {
        return (0..n).map(|i| h * (i as f64 + 0.5)).collect();
    }
    (0..n).map(|i| h * (l0 + i as f64 + 0.5)).collect()
}

/// Number of grid points used when callers do not override it.
pub const DEFAULT_KAPPA_POINTS: usize = 2048;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rect(v0: f64, w: f64) -> Barrier {
        Barrier::rectangular(v0, w, 0.0).unwrap()
    }

    /// Relative distance between two amplitudes in log-polar form:
    /// |exp(d ln + i d arg) - 1| up to second order.
    fn polar_rel_dev(a: Amplitude, b: Amplitude) -> f64 {
        let dl = a.ln_abs - b.ln_abs;
        let da = wrap_to_pi(a.arg - b.arg);
        (dl * dl + da * da).sqrt()
    }

    #[test]
    fn free_barrier_is_exactly_transparent() {
        let b = rect(0.0, 1.0);
        for &k in &[0.3, 1.0, 4.7] {
            let (a, r) = amplitude_pair(&b, 1.0, k).unwrap();
            assert_eq!(a.ln_abs, 0.0);
            assert_eq!(a.arg, 0.0);
            assert_eq!(r, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn below_barrier_magnitude_matches_closed_form() {
        // kappa = gamma = 1 for v0 = 1, m = 1: |A| = 1/cosh(2).
        let b = rect(1.0, 2.0);
        let a = transmission_amplitude(&b, 1.0, 1.0).unwrap();
        assert_relative_eq!(a.abs(), 0.26580222883407967, max_relative = 1e-12);
        let cf = rectangular_closed_form_polar(1.0, 2.0, 1.0, 1.0).unwrap();
        assert!(polar_rel_dev(a, cf) < 1e-12);
    }

    #[test]
    fn transfer_matrix_matches_closed_form_in_all_regimes() {
        let b = rect(1.0, 2.0);
        let degenerate = 2.0f64.sqrt();
        for &k in &[
            0.05,
            0.8,
            degenerate - 1e-7,
            degenerate,
            degenerate + 1e-7,
            1.8,
            3.0,
            12.0,
        ] {
            let a = transmission_amplitude(&b, 1.0, k).unwrap();
            let cf = rectangular_closed_form_polar(1.0, 2.0, 1.0, k).unwrap();
            assert!(
                polar_rel_dev(a, cf) < 1e-10,
                "kappa = {k}: transfer {a:?} vs closed form {cf:?}"
            );
        }
    }

    #[test]
    fn closed_form_is_continuous_at_the_degenerate_point() {
        let k_star = (2.0f64).sqrt(); // eps = v0 for v0 = m = 1
        let at = rectangular_closed_form_polar(1.0, 2.0, 1.0, k_star).unwrap();
        let lo = rectangular_closed_form_polar(1.0, 2.0, 1.0, k_star - 1e-9).unwrap();
        let hi = rectangular_closed_form_polar(1.0, 2.0, 1.0, k_star + 1e-9).unwrap();
        assert!(polar_rel_dev(at, lo) < 1e-7);
        assert!(polar_rel_dev(at, hi) < 1e-7);
    }

    #[test]
    fn composing_subslabs_reproduces_the_single_slab() {
        let whole = rect(1.0, 2.0);
        for n in [2usize, 3, 7, 16, 64] {
            let w = 2.0 / n as f64;
            let segments: Vec<(f64, f64, f64)> = (0..n)
                .map(|j| (-1.0 + j as f64 * w, -1.0 + (j + 1) as f64 * w, 1.0))
                .collect();
            let split = Barrier::piecewise_constant(&segments).unwrap();
            for &k in &[0.5, 1.0, 1.9] {
                let a1 = transmission_amplitude(&whole, 1.0, k).unwrap();
                let an = transmission_amplitude(&split, 1.0, k).unwrap();
                assert!(
                    polar_rel_dev(a1, an) < 1e-9,
                    "n = {n}, kappa = {k}: {a1:?} vs {an:?}"
                );
            }
        }
    }

    #[test]
    fn amplitude_is_invariant_under_translation() {
        for &k in &[0.4, 1.0, 2.3] {
            let here = Barrier::rectangular(1.0, 2.0, 0.0).unwrap();
            let there = Barrier::rectangular(1.0, 2.0, 7.25).unwrap();
            let a0 = transmission_amplitude(&here, 1.0, k).unwrap();
            let a1 = transmission_amplitude(&there, 1.0, k).unwrap();
            assert!(polar_rel_dev(a0, a1) < 1e-10);

            // B picks up exp(2 i kappa s) under a shift by s.
            let (_, b0) = amplitude_pair(&here, 1.0, k).unwrap();
            let (_, b1) = amplitude_pair(&there, 1.0, k).unwrap();
            let expected = b0 * Complex64::from_polar(1.0, 2.0 * k * 7.25);
            assert!((b1 - expected).norm() < 1e-10 * b0.norm().max(1e-3));
        }
    }

    #[test]
    fn negative_momentum_is_the_conjugate() {
        let b = rect(1.0, 2.0);
        for &k in &[0.3, 1.0, 2.5] {
            let (a_pos, _) = amplitude_pair(&b, 1.0, k).unwrap();
            let (a_neg, _) = amplitude_pair(&b, 1.0, -k).unwrap();
            assert_relative_eq!(a_neg.ln_abs, a_pos.ln_abs, max_relative = 1e-12);
            assert!((wrap_to_pi(a_neg.arg + a_pos.arg)).abs() < 1e-10);
        }
    }

    #[test]
    fn high_energy_limit_is_transparent() {
        let b = rect(1.0, 2.0);
        let a = transmission_amplitude(&b, 1.0, 50.0).unwrap();
        // |A| -> 1 like 1/kappa^4, arg A -> -m v0 w / kappa.
        assert!((a.abs() - 1.0).abs() < 1e-5);
        assert!((wrap_to_pi(a.arg) + 1.0 * 1.0 * 2.0 / 50.0).abs() < 1e-3);
    }

    #[test]
    fn opaque_barrier_keeps_log_magnitudes() {
        // gamma = 1, width 1500: |A| ~ exp(-1500), far below f64 range.
        let b = rect(1.0, 1500.0);
        let a = transmission_amplitude(&b, 1.0, 1.0).unwrap();
        let cf = rectangular_closed_form_polar(1.0, 1500.0, 1.0, 1.0).unwrap();
        assert!(a.ln_abs < -1490.0);
        assert_relative_eq!(a.ln_abs, cf.ln_abs, max_relative = 1e-10);
        assert!((wrap_to_pi(a.arg - cf.arg)).abs() < 1e-8);
        assert_eq!(a.to_complex(), Complex64::new(0.0, 0.0)); // underflow by design
    }

    #[test]
    fn tabulation_unwraps_phase_without_jumps() {
        let b = rect(1.0, 10.0);
        let grid = uniform_grid(0.05, 6.0, 4096);
        let amps = transmission_amplitudes(&b, 1.0, &grid).unwrap();
        for w in amps.phase.windows(2) {
            assert!((w[1] - w[0]).abs() < 1.0);
        }
        // Anchor: principal value at the top of the grid.
        let top = *amps.phase.last().unwrap();
        assert!(top.abs() <= PI);
    }

    #[test]
    fn coarse_grid_phase_jump_is_detected() {
        // Synthetic amplitudes stepping by exactly pi between neighbors.
        let kappa = vec![1.0, 2.0, 3.0];
        let amp = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let refl = vec![Complex64::new(0.0, 0.0); 3];
        let err = ScatteringAmplitudes::from_complex_parts(1.0, kappa, amp, refl)
            .err()
            .expect("pi step must be rejected");
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn grid_form_detection() {
        let half: Vec<f64> = (0..32).map(|i| 0.25 * (i as f64 + 0.5)).collect();
        assert!(matches!(
            detect_grid_form(&half),
            GridForm::UniformHalfInteger { offset: 0, .. }
        ));
        let int: Vec<f64> = (1..33).map(|i| 0.25 * i as f64).collect();
        assert!(matches!(
            detect_grid_form(&int),
            GridForm::UniformInteger { offset: 1, .. }
        ));
        let shifted: Vec<f64> = (0..32).map(|i| 0.3 + 0.25 * i as f64).collect();
        assert!(matches!(detect_grid_form(&shifted), GridForm::Uniform { .. }));
        let irregular = vec![0.1, 0.2, 0.4, 0.8];
        assert!(matches!(detect_grid_form(&irregular), GridForm::Irregular));
    }

    #[test]
    fn default_grid_is_half_integer_aligned_and_covers_the_window() {
        let b = rect(1.0, 2.0);
        let sm = sigma_max_default(0.02, 25.0, &b);
        assert_relative_eq!(sm, 8.0, max_relative = 1e-12);
        let grid = default_kappa_grid(1.0, 0.02, sm, DEFAULT_KAPPA_POINTS);
        assert_eq!(grid.len(), DEFAULT_KAPPA_POINTS);
        assert!(grid[0] > 0.0);
        // Window [p0 - 8 dp0 - sm/2, p0 + 8 dp0 + sm/2] reaches below zero
        // here, so the grid starts at step/2 and must still reach the top.
        assert!(*grid.last().unwrap() >= 1.0 + 0.16 + 4.0 - 1e-9);
        assert!(matches!(
            detect_grid_form(&grid),
            GridForm::UniformHalfInteger { .. }
        ));
    }

    proptest! {
        /// Unitarity |A|^2 + |B|^2 = 1 for random piecewise barriers.
        #[test]
        fn unitarity_for_random_barriers(
            heights in proptest::collection::vec(0.0f64..4.0, 1..5),
            widths in proptest::collection::vec(0.1f64..2.0, 5),
            kappa in 0.05f64..5.0,
        ) {
            let mut segments = Vec::new();
            let mut cursor = -1.0;
            for (i, &h) in heights.iter().enumerate() {
                segments.push((cursor, cursor + widths[i], h));
                cursor += widths[i];
            }
            let b = Barrier::piecewise_constant(&segments).unwrap();
            let (a, r) = amplitude_pair(&b, 1.0, kappa).unwrap();
            let total = a.abs_sq() + r.norm_sqr();
            prop_assert!((total - 1.0).abs() < 1e-9, "total = {}", total);
        }
    }
}
