//! Tunneling-time observables from energy derivatives of the transmission
//! amplitude.
//!
//! Writing `A(eps) = exp(ln|A| + i phi)` at energy `eps = kappa^2 / (2m)`:
//!
//! ```text
//! tau_w  = d phi / d eps          (phase time; group delay)
//! tau_a  = d ln|A| / d eps        (magnitude time)
//! tau_c  = tau_w - i tau_a
//! tau_bl = |tau_c|
//! ```
//!
//! Both derivatives are taken on the tabulated momentum grid with central
//! differences at steps `h` and `2h`, combined by one Richardson step, and
//! converted with `d eps = (kappa0 / m) d kappa`. `tau_a` comes from the
//! stored `ln|A|` column, so opaque barriers whose complex amplitude
//! underflows still produce finite times as long as the table was built by
//! the transfer-matrix tabulator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scattering::ScatteringAmplitudes;

/// The time observables at one incident momentum, `hbar = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelingTimes {
    /// Momentum actually used: the grid point nearest the request.
    pub kappa0: f64,
    /// Energy at `kappa0`.
    pub epsilon0: f64,
    /// Group velocity `kappa0 / m`.
    pub v0: f64,
    pub tau_w: f64,
    pub tau_a: f64,
    pub tau_c: Complex64,
    pub tau_bl: f64,
}

/// Smallest |A| for which times are still extracted from a table whose
/// log magnitudes were reconstructed from complex values.
const COMPLEX_UNDERFLOW_FLOOR: f64 = 1e-300;

fn stencil_center(amps: &ScatteringAmplitudes, kappa0: f64, reach: usize) -> Result<(usize, f64)> {
    let h = amps.grid_step().ok_or_else(|| {
        Error::InvalidParameter("tunneling times need a uniform momentum grid".into())
    })?;
    let i0 = amps.index_nearest(kappa0);
    if i0 < reach || i0 + reach >= amps.len() {
        return Err(Error::OutOfRange(format!(
            "kappa0 = {kappa0} needs {reach} grid points on each side; grid covers [{}, {}] with step {h}",
            amps.kappa[0],
            amps.kappa[amps.len() - 1]
        )));
    }
    Ok((i0, h))
}

fn central_pair(f: &[f64], i0: usize, h: f64) -> (f64, f64) {
    let d_h = (f[i0 + 1] - f[i0 - 1]) / (2.0 * h);
    let d_2h = (f[i0 + 2] - f[i0 - 2]) / (4.0 * h);
    (d_h, d_2h)
}

fn richardson(d_h: f64, d_2h: f64) -> f64 {
    (4.0 * d_h - d_2h) / 3.0
}

/// Extract the time observables at the grid point nearest `kappa0`.
pub fn tunneling_times(amps: &ScatteringAmplitudes, kappa0: f64) -> Result<TunnelingTimes> {
    let (i0, h) = stencil_center(amps, kappa0, 2)?;

    if amps.logs_from_complex() {
        for i in i0 - 2..=i0 + 2 {
            if amps.amp[i].norm() < COMPLEX_UNDERFLOW_FLOOR {
                return Err(Error::AmplitudeUnderflow {
                    kappa: amps.kappa[i],
                });
            }
        }
    }

    let k0 = amps.kappa[i0];
    let v0 = k0 / amps.mass;

    let (pw_h, pw_2h) = central_pair(&amps.phase, i0, h);
    let (la_h, la_2h) = central_pair(&amps.ln_abs_a, i0, h);
    let tau_w = richardson(pw_h, pw_2h) / v0;
    let tau_a = richardson(la_h, la_2h) / v0;

    let tau_c = Complex64::new(tau_w, -tau_a);
    Ok(TunnelingTimes {
        kappa0: k0,
        epsilon0: 0.5 * k0 * k0 / amps.mass,
        v0,
        tau_w,
        tau_a,
        tau_c,
        tau_bl: tau_c.norm(),
    })
}

/// Plain central-difference estimates of `d phi / d eps` at steps `h`, `2h`
/// and `4h`, before Richardson combination. Exposed so callers can check
/// that the stencil is in its asymptotic regime: for a smooth phase the
/// ratio of successive corrections,
/// `(d_4h - d_2h) / (d_2h - d_h)`, sits near 4.
#[derive(Debug, Clone, Copy)]
pub struct PhaseDerivativeDiagnostics {
    pub d_h: f64,
    pub d_2h: f64,
    pub d_4h: f64,
}

impl PhaseDerivativeDiagnostics {
    pub fn correction_ratio(&self) -> f64 {
        (self.d_4h - self.d_2h) / (self.d_2h - self.d_h)
    }
}

/// Diagnostics for the phase-time stencil at the grid point nearest
/// `kappa0`; needs four grid points on each side.
pub fn phase_derivative_diagnostics(
    amps: &ScatteringAmplitudes,
    kappa0: f64,
) -> Result<PhaseDerivativeDiagnostics> {
    let (i0, h) = stencil_center(amps, kappa0, 4)?;
    let k0 = amps.kappa[i0];
    let v0 = k0 / amps.mass;
    let f = &amps.phase;
    let d_h = (f[i0 + 1] - f[i0 - 1]) / (2.0 * h) / v0;
    let d_2h = (f[i0 + 2] - f[i0 - 2]) / (4.0 * h) / v0;
    let d_4h = (f[i0 + 4] - f[i0 - 4]) / (8.0 * h) / v0;
    Ok(PhaseDerivativeDiagnostics { d_h, d_2h, d_4h })
}
