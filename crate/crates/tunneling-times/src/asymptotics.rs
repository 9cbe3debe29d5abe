//! Large-time transmitted-side observables.
//!
//! Everything here is built on one kernel, the transmission propagator
//!
//! ```text
//! T(r,p) = integral dsigma/(2 pi) e^{-i sigma r} A(p + sigma/2) conj(A(p - sigma/2)),
//! ```
//!
//! which transports the incident phase-space density across the barrier:
//! the transmitted coordinate distribution is
//!
//! ```text
//! P_t(q) = integral dp dr T(r,p) rho0(q - v t + r, p),    v = p/m.
//! ```
//!
//! The measure carries the 1/(2 pi) because that is the unique constant for
//! which the free barrier gives T = delta(r) and the r-integral of T equals
//! |A(p)|^2; both are checked in tests.
//!
//! Discretization: with amplitudes tabulated at spacing h, the spectrum is
//! sampled at sigma_j = 2 h j, |j| <= M, so both A-arguments stay on the
//! table's lattice. The sum over N = 2M+1 samples is a DFT; it yields T on
//! the conjugate lattice r_k = k dr, dr = 2 pi/(N 2h), periodic with period
//! N dr. Two regimes need different handling of the spectrum's tail:
//!
//! * Pointwise columns (`propagator_column`, `transmission_propagator`).
//!   The spectrum F(sigma) = A(p+sigma/2) conj(A(p-sigma/2)) tends to 1 at
//!   large |sigma|, not to 0, so truncating it leaks ringing into r < 0 and
//!   buries causality. The constant part is resummed exactly: F = 1 + (F-1),
//!   the 1 produces the discrete delta at r = 0 in closed form, and only
//!   F - 1 is summed, damped by the taper W(sigma) = (1 - i sigma/s0)^-12
//!   with s0 = sigma_max/7. W is analytic and bounded in the upper half
//!   sigma-plane, so its r-space image is supported on r >= 0: the taper
//!   delays but never advances, and causality survives it exactly. The cost
//!   is resolution, tapered structures smear over r of order 84/sigma_max.
//!   W(0) = 1 keeps the r-integral of T equal to |A(p)|^2 to rounding.
//!
//! * Distribution quadrature (`transmitted_exact`). Here T is integrated
//!   against rho0, whose r-profile is a Gaussian of width dq0; its spectrum
//!   cuts F off at sigma of order 10/dq0 all by itself. The kernel is used
//!   raw (no taper, no resummation) with the small M that covers that
//!   window, and the r-sum over the packet's support reproduces the sigma-
//!   space sum exactly through the DFT's orthogonality.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scattering::{GridForm, ScatteringAmplitudes};
use crate::times::TunnelingTimes;
use crate::wigner::{GaussianWignerState, StepTestDistribution};

/// Order of the causal taper (1 - i sigma/s0)^-ORDER.
pub const TAPER_ORDER: i32 = 12;
/// sigma_max / s0; together with the order this puts |W(sigma_max)| near
/// 50^-6 ~ 6e-11.
pub const TAPER_SCALE_RATIO: f64 = 7.0;
/// The packet's Gaussian r-profile suppresses the kernel's spectrum beyond
/// sigma = RHO_SIGMA_REACH / dq0 (exp(-50) at the cut).
const RHO_SIGMA_REACH: f64 = 10.0;
/// Half-width of Gaussian quadrature windows, in standard deviations.
const WINDOW_SIGMAS: f64 = 8.5;
/// Exact-method values may dip below zero only at quadrature-noise level,
/// bounded by this fraction of the maximum.
pub const NEGATIVITY_FLOOR: f64 = 1e-8;

/// How a transmitted distribution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Full kernel quadrature over (p, r, sigma).
    ExactKernel,
    /// First order in the tunneling times: marginal, its derivative and the
    /// first momentum moment.
    FirstOrder,
    /// Closed Gaussian form of the first-order expansion.
    GaussianClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactKernel => "exact-kernel",
            Method::FirstOrder => "first-order",
            Method::GaussianClosedForm => "gaussian-closed-form",
        }
    }
}

/// Transmitted coordinate distribution at a fixed time.
#[derive(Debug, Clone)]
pub struct TransmittedDistribution {
    pub t: f64,
    pub q_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Method,
    /// |A(P0)|^2 at the packet's mean momentum.
    pub transmission_at_p0: f64,
    pub times: TunnelingTimes,
    pub warnings: Vec<String>,
}

impl TransmittedDistribution {
    /// Trapezoid of the values over the q grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.q_grid, |i| self.values[i])
    }

    pub fn mean_q(&self) -> f64 {
        trapezoid(&self.q_grid, |i| self.q_grid[i] * self.values[i]) / self.integral()
    }

    pub fn variance_q(&self) -> f64 {
        let mean = self.mean_q();
        trapezoid(&self.q_grid, |i| {
            let d = self.q_grid[i] - mean;
            d * d * self.values[i]
        }) / self.integral()
    }

    /// Sub-grid maximum location by a parabola through the three points
    /// around the gridded maximum.
    pub fn peak_q(&self) -> Result<f64> {
        peak_location(&self.q_grid, &self.values)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Peak and half-height observables of the first-order Gaussian theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftObservables {
    /// tau0 = 2 t tau_a dp0^2/m - tau_w.
    pub tau0: f64,
    /// zeta = 2 v0 tau0 / dq(t).
    pub zeta: f64,
    /// Peak advance dQ = 2 v0 tau0 / (sqrt(1 + zeta^2) + 1); |dQ| < dq(t).
    pub delta_q_peak: f64,
    /// tau_h = t tau_a dp0^2/m - tau_w; its speed-up term is half of tau0's.
    pub tau_h: f64,
    /// v0 tau_h, the advance of the half-height point of a sharp-edged
    /// test profile.
    pub half_height_shift: f64,
}

/// Controls for propagator column evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PropagatorOptions {
    /// Spectral cutoff. `None` uses everything the amplitude table supports
    /// around the requested momentum.
    pub sigma_max: Option<f64>,
    /// Refuse to proceed unless the r-lattice is at least this fine. The
    /// achievable spacing is bounded by 2 pi / sigma_max.
    pub requested_delta_r: Option<f64>,
    /// Damp the non-decaying spectral tail with the causal rational taper.
    /// Disabling exposes hard-cutoff ringing (useful for diagnostics only).
    pub causal_taper: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            sigma_max: None,
            requested_delta_r: None,
            causal_taper: true,
        }
    }
}

/// T(., p) on its natural signed r-lattice, r ascending.
#[derive(Debug, Clone)]
pub struct PropagatorColumn {
    /// Momentum of the column (a lattice point of the amplitude table).
    pub p: f64,
    /// Signed positions r_k = k dr, k = -M..=M, ascending.
    pub r: Vec<f64>,
    /// T(r_k, p); the r = 0 bin carries the resummed delta weight 1/dr.
    pub values: Vec<f64>,
    pub delta_r: f64,
    /// Index of r = 0 in `r` and `values`.
    pub zero_index: usize,
    /// max |T| over r < -dr divided by max |T| overall; the quantitative
    /// causality figure (the half-open cell (-dr, 0) belongs to the r = 0
    /// sample).
    pub causality_ratio: f64,
    /// dr times the sum of all values; equals |A(p)|^2 to rounding.
    pub integral: f64,
    /// max |Im| / max |Re| over the raw bins before the real part is taken;
    /// conjugate symmetry of the spectrum keeps it at rounding level.
    pub max_imag_residue: f64,
}

/// Uniform lattice behind an amplitude table: kappa_l = (l + 1/2) step or
/// kappa_l = l step.
#[derive(Debug, Clone, Copy)]
struct Lattice {
    step: f64,
    offset: i64,
    half: bool,
    n: i64,
}

fn lattice_of(amps: &ScatteringAmplitudes) -> Result<Lattice> {
    let (step, offset, half) = match amps.grid_form() {
        GridForm::UniformHalfInteger { step, offset } => (step, offset, true),
        GridForm::UniformInteger { step, offset } => (step, offset, false),
        _ => {
            return Err(Error::InvalidParameter(
                "propagator evaluation needs amplitudes on a uniform lattice \
                 aligned to half-integer (preferred) or integer multiples of \
                 the step; see default_kappa_grid"
                    .into(),
            ))
        }
    };
    Ok(Lattice {
        step,
        offset,
        half,
        n: amps.len() as i64,
    })
}

impl Lattice {
    /// Largest half-width M such that lattice points c-M..=c+M are all
    /// resolvable (using the negative-momentum mirror where the grid
    /// reaches down to it).
    fn max_halfwidth(self, c: i64) -> i64 {
        let up = self.offset + self.n - 1 - c;
        let down = if self.half && self.offset == 0 {
            // Mirror extends the reach to lattice point -n.
            c + self.n
        } else {
            // A gap below the stored range (or the kappa = 0 point of an
            // integer lattice) blocks the mirror.
            c - self.offset
        };
        up.min(down)
    }
}

/// Table index and absolute lattice coordinate of a momentum that must lie
/// on the lattice.
fn column_center(amps: &ScatteringAmplitudes, lat: Lattice, p: f64) -> Result<(usize, i64)> {
    let i = amps.index_nearest(p);
    if (amps.kappa[i] - p).abs() > 1e-3 * lat.step {
        return Err(Error::InvalidParameter(format!(
            "momentum {p} is not a lattice point of the amplitude table \
             (nearest is {} at spacing {})",
            amps.kappa[i], lat.step
        )));
    }
    Ok((i, lat.offset + i as i64))
}

/// Kernel samples in DFT bin order for a column centered at lattice
/// coordinate `c`: transformed, scaled by dsigma/(2 pi), the real parts are
/// T on the r-lattice (plus the resummed delta when tapering).
struct RawColumn {
    delta_r: f64,
    /// FFT output, bin k holds T at signed index k (k <= M) or k - N.
    bins: Vec<Complex64>,
    /// Added to the r = 0 bin's real part: 1/dr when the asymptotic unit
    /// spectrum was resummed, else 0.
    delta_weight: f64,
}

fn raw_column(
    amps: &ScatteringAmplitudes,
    lat: Lattice,
    c: i64,
    m: i64,
    taper_s0: Option<f64>,
    fft: &dyn rustfft::Fft<f64>,
    scratch: &mut [Complex64],
) -> Result<RawColumn> {
    let n = (2 * m + 1) as usize;
    debug_assert_eq!(fft.len(), n);
    let delta_sigma = 2.0 * lat.step;
    let delta_r = 2.0 * PI / (n as f64 * delta_sigma);
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for j in -m..=m {
        let a_plus = amps.amp_at_lattice(c + j)?;
        let a_minus = amps.amp_at_lattice(c - j)?;
        let f = a_plus * a_minus.conj();
        let value = match taper_s0 {
            Some(s0) => {
                let sigma = j as f64 * delta_sigma;
                (f - 1.0) * Complex64::new(1.0, -sigma / s0).powi(-TAPER_ORDER)
            }
            None => f,
        };
        let k = if j >= 0 { j as usize } else { (j + n as i64) as usize };
        bins[k] = value;
    }
    fft.process_with_scratch(&mut bins, scratch);
    let scale = delta_sigma / (2.0 * PI);
    for b in bins.iter_mut() {
        *b *= scale;
    }
    let delta_weight = if taper_s0.is_some() { 1.0 / delta_r } else { 0.0 };
    Ok(RawColumn {
        delta_r,
        bins,
        delta_weight,
    })
}

/// Resolve options into the spectral half-width M and taper scale for a
/// column at lattice coordinate `c`.
fn resolve_spectral_window(
    lat: Lattice,
    c: i64,
    opts: &PropagatorOptions,
) -> Result<(i64, Option<f64>)> {
    let delta_sigma = 2.0 * lat.step;
    let m_max = lat.max_halfwidth(c);
    let m = match opts.sigma_max {
        Some(s) => {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "sigma_max must be finite and > 0, got {s}"
                )));
            }
            let m = (s / delta_sigma).floor() as i64;
            if m > m_max {
                return Err(Error::OutOfRange(format!(
                    "sigma_max = {s} needs amplitudes {} beyond the table's \
                     reach around this momentum (available sigma_max = {})",
                    (m - m_max) as f64 * delta_sigma,
                    m_max as f64 * delta_sigma,
                )));
            }
            m
        }
        None => m_max,
    };
    if m < 4 {
        return Err(Error::OutOfRange(
            "amplitude table supports fewer than 4 spectral samples around \
             this momentum; extend the grid"
                .into(),
        ));
    }
    let sigma_max_used = m as f64 * delta_sigma;
    if let Some(dr) = opts.requested_delta_r {
        if !(dr > 0.0) || !dr.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "requested_delta_r must be finite and > 0, got {dr}"
            )));
        }
        if dr < 2.0 * PI / sigma_max_used {
            return Err(Error::Resolution {
                required_sigma_max: 2.0 * PI / dr,
            });
        }
    }
    let s0 = opts
        .causal_taper
        .then_some(sigma_max_used / TAPER_SCALE_RATIO);
    Ok((m, s0))
}

/// T(., p) on the signed r-lattice conjugate to the table's sigma-lattice.
pub fn propagator_column(
    amps: &ScatteringAmplitudes,
    p: f64,
    opts: &PropagatorOptions,
) -> Result<PropagatorColumn> {
    let lat = lattice_of(amps)?;
    let (_, c) = column_center(amps, lat, p)?;
    let (m, s0) = resolve_spectral_window(lat, c, opts)?;
    let n = (2 * m + 1) as usize;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let raw = raw_column(amps, lat, c, m, s0, fft.as_ref(), &mut scratch)?;

    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    for b in &raw.bins {
        max_re = max_re.max(b.re.abs());
        max_im = max_im.max(b.im.abs());
    }
    max_re = max_re.max(raw.delta_weight);
    let max_imag_residue = if max_re > 0.0 { max_im / max_re } else { 0.0 };

    let mu = m as usize;
    let mut r = vec![0.0; n];
    let mut values = vec![0.0; n];
    for k in 0..n {
        let signed = if k <= mu { k as i64 } else { k as i64 - n as i64 };
        let idx = (signed + m) as usize;
        r[idx] = signed as f64 * raw.delta_r;
        values[idx] = raw.bins[k].re;
    }
    values[mu] += raw.delta_weight;

    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Strictly before the r = -dr sample: ascending indices 0..=M-2.
    let acausal = values[..mu.saturating_sub(1)]
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let causality_ratio = if max_abs > 0.0 { acausal / max_abs } else { 0.0 };
    let integral = values.iter().sum::<f64>() * raw.delta_r;

    Ok(PropagatorColumn {
        p: amps.kappa[amps.index_nearest(p)],
        r,
        values,
        delta_r: raw.delta_r,
        zero_index: mu,
        causality_ratio,
        integral,
        max_imag_residue,
    })
}

/// T(r, p) at a single point, by direct summation of the same tapered,
/// delta-resummed spectrum a column uses. On lattice points r = k dr this
/// agrees with `propagator_column`; between them it interpolates the band-
/// limited representation (the resummed delta appears as its Dirichlet
/// kernel).
pub fn transmission_propagator(amps: &ScatteringAmplitudes, r: f64, p: f64) -> Result<f64> {
    let lat = lattice_of(amps)?;
    let (_, c) = column_center(amps, lat, p)?;
    let opts = PropagatorOptions::default();
    let (m, s0) = resolve_spectral_window(lat, c, &opts)?;
    let s0 = s0.expect("default options taper");
    let delta_sigma = 2.0 * lat.step;
    // j = 0 term: F real, W = 1, delta contributes 1.
    let f0 = {
        let a = amps.amp_at_lattice(c)?;
        (a * a.conj()).re
    };
    let mut total = f0;
    for j in 1..=m {
        let sigma = j as f64 * delta_sigma;
        let a_plus = amps.amp_at_lattice(c + j)?;
        let a_minus = amps.amp_at_lattice(c - j)?;
        let f = a_plus * a_minus.conj();
        let damped = (f - 1.0) * Complex64::new(1.0, -sigma / s0).powi(-TAPER_ORDER) + 1.0;
        // Conjugate pair j and -j: twice the real part.
        total += 2.0 * (damped * Complex64::from_polar(1.0, -sigma * r)).re;
    }
    Ok(total * delta_sigma / (2.0 * PI))
}

/// One momentum row of the exact-kernel quadrature.
struct ColumnData {
    kappa: f64,
    weight: f64,
    re_bins: Vec<f64>,
}

/// Transmitted coordinate distribution by full kernel quadrature.
///
/// For each lattice momentum in the packet's window the raw (untapered)
/// kernel is transformed once; each requested q then sums the r-lattice
/// against the packet's sheared Gaussian. Accuracy is limited by the
/// Gaussian's tails at the window edges, around exp(-36).
pub fn transmitted_exact(
    amps: &ScatteringAmplitudes,
    s: &GaussianWignerState,
    t: f64,
    q_grid: &[f64],
) -> Result<TransmittedDistribution> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    if q_grid.is_empty() || q_grid.iter().any(|q| !q.is_finite()) {
        return Err(Error::InvalidParameter(
            "q grid must be non-empty and finite".into(),
        ));
    }
    if (amps.mass - s.mass).abs() > 1e-9 * s.mass {
        return Err(Error::InvalidParameter(format!(
            "amplitude table mass {} does not match packet mass {}",
            amps.mass, s.mass
        )));
    }
    let lat = lattice_of(amps)?;
    let h = lat.step;
    if h > s.dp0 / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "momentum grid step {h} is too coarse for the packet's spread \
             {}; need step <= dp0/4",
            s.dp0
        )));
    }
    let i_p0 = amps.index_nearest(s.p0);
    if (amps.kappa[i_p0] - s.p0).abs() > h {
        return Err(Error::OutOfRange(format!(
            "packet momentum {} lies outside the amplitude table",
            s.p0
        )));
    }

    let mut warnings = Vec::new();
    let clearing = 2.0 * s.q0.abs() * s.mass / s.p0;
    if t <= clearing {
        warnings.push(format!(
            "t = {t} has not cleared the barrier region (needs t > {clearing}); \
             the asymptotic transmitted form is not yet reliable"
        ));
    }

    // Momentum window: lattice points within WINDOW_SIGMAS spreads of P0.
    let k0 = amps.kappa[0];
    let lo_req = s.p0 - WINDOW_SIGMAS * s.dp0;
    let hi_req = s.p0 + WINDOW_SIGMAS * s.dp0;
    let i_lo_raw = ((lo_req - k0) / h).ceil() as i64;
    let i_hi_raw = ((hi_req - k0) / h).floor() as i64;
    let i_lo = i_lo_raw.max(0) as usize;
    let i_hi = i_hi_raw.min(lat.n - 1) as usize;
    if i_lo_raw < 0 || i_hi_raw > lat.n - 1 {
        warnings.push(format!(
            "momentum window [{lo_req}, {hi_req}] is clipped to the table's \
             range [{}, {}]",
            amps.kappa[0],
            amps.kappa[amps.len() - 1]
        ));
    }
    if i_hi <= i_lo + 8 {
        return Err(Error::OutOfRange(
            "fewer than 9 lattice momenta fall inside the packet window".into(),
        ));
    }

    // Spectral half-width: the Gaussian r-profile of width dq0 exhausts the
    // kernel's spectrum at RHO_SIGMA_REACH / dq0.
    let delta_sigma = 2.0 * h;
    let sigma_need = RHO_SIGMA_REACH / s.dq0;
    let m = ((sigma_need / delta_sigma).ceil() as i64).max(4);
    for c_i in i_lo..=i_hi {
        let c = lat.offset + c_i as i64;
        if m > lat.max_halfwidth(c) {
            return Err(Error::OutOfRange(format!(
                "amplitude table must extend sigma/2 = {} beyond the packet \
                 window for the kernel quadrature (momentum {} reaches only {})",
                0.5 * m as f64 * delta_sigma,
                amps.kappa[c_i],
                0.5 * lat.max_halfwidth(c) as f64 * delta_sigma,
            )));
        }
    }

    let n = (2 * m + 1) as usize;
    let n_i = n as i64;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut columns = Vec::with_capacity(i_hi - i_lo + 1);
    let mut delta_r = 0.0;
    for i in i_lo..=i_hi {
        let c = lat.offset + i as i64;
        let raw = raw_column(amps, lat, c, m, None, fft.as_ref(), &mut scratch)?;
        delta_r = raw.delta_r;
        let weight = if i == i_lo || i == i_hi { 0.5 } else { 1.0 };
        columns.push(ColumnData {
            kappa: amps.kappa[i],
            weight,
            re_bins: raw.bins.iter().map(|b| b.re).collect(),
        });
    }

    let reach = WINDOW_SIGMAS * s.dq0;
    let values: Vec<f64> = (0..q_grid.len())
        .into_par_iter()
        .map(|qi| {
            let q = q_grid[qi];
            let mut total = 0.0;
            for col in &columns {
                let v = col.kappa / s.mass;
                let shifted = q - v * t;
                // rho0's first argument is shifted + r; it peaks where
                // r = q0 - shifted.
                let r_center = s.q0 - shifted;
                let m_lo = ((r_center - reach) / delta_r).ceil() as i64;
                let m_hi = ((r_center + reach) / delta_r).floor() as i64;
                let mut inner = 0.0;
                for mm in m_lo..=m_hi {
                    let k = (((mm % n_i) + n_i) % n_i) as usize;
                    inner += col.re_bins[k] * s.density(shifted + mm as f64 * delta_r, col.kappa);
                }
                total += col.weight * inner;
            }
            total * delta_r * h
        })
        .collect();

    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 && min < -NEGATIVITY_FLOOR * max {
        warnings.push(format!(
            "negative excursion {min} exceeds quadrature noise ({} of the \
             maximum {max}); inspect the configuration",
            min / max
        ));
    }

    let times = tunneling_times_at(amps, s.p0)?;
    Ok(TransmittedDistribution {
        t,
        q_grid: q_grid.to_vec(),
        values,
        method: Method::ExactKernel,
        transmission_at_p0: amps.transmission_probability(i_p0),
        times,
        warnings,
    })
}

fn tunneling_times_at(amps: &ScatteringAmplitudes, p0: f64) -> Result<TunnelingTimes> {
    crate::times::tunneling_times(amps, p0)
}

/// First-order transmitted density at one point:
///
/// ```text
/// P_t(q) ~ a2 [ P0_t(q) + v0 tau_w dP0_t/dq + 2 v0 tau_a M_t(q) ].
/// ```
///
/// `a2` is the transmission probability |A(P0)|^2 at the packet's mean
/// momentum.
pub fn transmitted_first_order(
    times: &TunnelingTimes,
    a2: f64,
    s: &GaussianWignerState,
    t: f64,
    q: f64,
) -> f64 {
    let v0 = s.v0();
    let marginal = s.free_marginal(t, q);
    let dq = s.spread_at(t);
    let d_marginal = -(q - s.center_at(t)) / (dq * dq) * marginal;
    let moment = s.first_moment(t, q);
    a2 * (marginal + v0 * times.tau_w * d_marginal + 2.0 * v0 * times.tau_a * moment)
}

/// First-order distribution over a grid, with the same bookkeeping as the
/// exact method.
pub fn transmitted_first_order_table(
    times: &TunnelingTimes,
    a2: f64,
    s: &GaussianWignerState,
    t: f64,
    q_grid: &[f64],
) -> TransmittedDistribution {
    let mut warnings = Vec::new();
    let clearing = 2.0 * s.q0.abs() * s.mass / s.p0;
    if t <= clearing {
        warnings.push(format!(
            "t = {t} has not cleared the barrier region (needs t > {clearing}); \
             the asymptotic transmitted form is not yet reliable"
        ));
    }
    let values = q_grid
        .iter()
        .map(|&q| transmitted_first_order(times, a2, s, t, q))
        .collect();
    TransmittedDistribution {
        t,
        q_grid: q_grid.to_vec(),
        values,
        method: Method::FirstOrder,
        transmission_at_p0: a2,
        times: *times,
        warnings,
    }
}

/// Closed Gaussian form of the first-order distribution:
///
/// ```text
/// P_t(q) = a2 P0_t(q) [ 1 + v0 tau0 (q - Q)/dq^2 ].
/// ```
///
/// Algebraically identical to `transmitted_first_order` for a Gaussian
/// state; kept separate because the peak and width observables read off it
/// directly.
pub fn gaussian_first_order(
    s: &GaussianWignerState,
    times: &TunnelingTimes,
    a2: f64,
    t: f64,
    q: f64,
) -> f64 {
    let obs = shift_observables(times, s, t);
    let dq = s.spread_at(t);
    let bracket = 1.0 + s.v0() * obs.tau0 * (q - s.center_at(t)) / (dq * dq);
    a2 * s.free_marginal(t, q) * bracket
}

/// Gaussian distribution over a grid.
pub fn gaussian_first_order_table(
    s: &GaussianWignerState,
    times: &TunnelingTimes,
    a2: f64,
    t: f64,
    q_grid: &[f64],
) -> TransmittedDistribution {
    let values = q_grid
        .iter()
        .map(|&q| gaussian_first_order(s, times, a2, t, q))
        .collect();
    TransmittedDistribution {
        t,
        q_grid: q_grid.to_vec(),
        values,
        method: Method::GaussianClosedForm,
        transmission_at_p0: a2,
        times: *times,
        warnings: Vec::new(),
    }
}

/// Peak and half-height shift observables at time t.
///
/// The speed-up term t tau_a dp0^2/m is computed once and enters tau0 with
/// weight 2 and tau_h with weight 1, which keeps the exact half relation
/// (tau_h + tau_w) = (tau0 + tau_w)/2 at rounding level. Velocities and
/// spreads are the packet's; the times are assumed to be evaluated at the
/// packet's mean momentum.
pub fn shift_observables(
    times: &TunnelingTimes,
    s: &GaussianWignerState,
    t: f64,
) -> ShiftObservables {
    let speed_up = t * times.tau_a * s.dp0 * s.dp0 / s.mass;
    let tau0 = 2.0 * speed_up - times.tau_w;
    let tau_h = speed_up - times.tau_w;
    let v0 = s.v0();
    let dq = s.spread_at(t);
    let zeta = 2.0 * v0 * tau0 / dq;
    let delta_q_peak = 2.0 * v0 * tau0 / ((1.0 + zeta * zeta).sqrt() + 1.0);
    ShiftObservables {
        tau0,
        zeta,
        delta_q_peak,
        tau_h,
        half_height_shift: v0 * tau_h,
    }
}

/// Advance of the half-height point of a sharp-edged test profile:
/// v0 tau_h with tau_h = t tau_a dp0^2/m - tau_w.
pub fn half_height_shift(step: &StepTestDistribution, times: &TunnelingTimes, t: f64) -> f64 {
    let speed_up = t * times.tau_a * step.dp0 * step.dp0 / step.mass;
    step.v0() * (speed_up - times.tau_w)
}

/// Sub-grid maximum by a parabola through the three points around the
/// gridded maximum. A maximum on the first or last point means the grid
/// does not bracket the peak.
pub fn peak_location(q: &[f64], values: &[f64]) -> Result<f64> {
    if q.len() != values.len() || q.len() < 3 {
        return Err(Error::InvalidParameter(
            "peak location needs at least 3 matching grid points".into(),
        ));
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    if best == 0 || best == q.len() - 1 {
        return Err(Error::OutOfRange(format!(
            "maximum sits on the grid edge at q = {}; widen the grid",
            q[best]
        )));
    }
    let (x0, x1, x2) = (q[best - 1], q[best], q[best + 1]);
    let (y0, y1, y2) = (values[best - 1], values[best], values[best + 1]);
    // Vertex of the parabola through three (not necessarily equidistant)
    // points.
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature.abs() < f64::MIN_POSITIVE.sqrt() {
        return Ok(x1);
    }
    Ok(0.5 * (x0 + x1 - d01 / curvature))
}

fn trapezoid(x: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 1..x.len() {
        total += 0.5 * (x[i] - x[i - 1]) * (y(i) + y(i - 1));
    }
    total
}

/// Uniformly spaced evaluation grid centered on the packet at time t,
/// spanning `half_width_sigmas` spreads each way.
pub fn centered_q_grid(
    s: &GaussianWignerState,
    t: f64,
    half_width_sigmas: f64,
    n: usize,
) -> Vec<f64> {
    let center = s.center_at(t);
    let dq = s.spread_at(t);
    let lo = center - half_width_sigmas * dq;
    let hi = center + half_width_sigmas * dq;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
