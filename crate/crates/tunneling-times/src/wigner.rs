//! Initial phase-space distributions and their free evolution.
//!
//! The central object is an uncorrelated Gaussian phase-space density
//!
//! ```text
//! rho0(q,p) = C exp[-(q-Q0)^2/(2 dq0^2) - (p-P0)^2/(2 dp0^2)],
//! C = 1/(2 pi dq0 dp0),
//! ```
//!
//! which is a legitimate Wigner function when `dq0*dp0 >= 1/2` (saturated
//! exactly by pure coherent states). Free evolution shears phase space,
//! `rho_t(q,p) = rho0(q - p t/m, p)`, and everything downstream only needs
//! the two resulting closed forms: the coordinate marginal
//!
//! ```text
//! P0_t(q) = exp[-(q-Q)^2/(2 dq^2)] / (sqrt(2 pi) dq),
//! Q = Q0 + v0 t,   dq^2 = dq0^2 + (t dp0/m)^2,
//! ```
//!
//! and the centered first momentum moment
//!
//! ```text
//! M_t(q) = t (q-Q) dp0^2 / (m dq^2) * P0_t(q).
//! ```

use crate::error::{Error, Result};
use crate::potential::Barrier;

/// Ratio dp0/p0 above which the narrow-momentum assumption behind the
/// first-order transmitted-distribution formulas degrades noticeably.
pub const MOMENTUM_SPREAD_WARN: f64 = 0.1;
/// Ratio dp0/p0 at and above which construction is refused.
pub const MOMENTUM_SPREAD_LIMIT: f64 = 0.25;

/// Uncorrelated Gaussian phase-space state, the initial condition for every
/// transmitted-distribution computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWignerState {
    pub mass: f64,
    /// Initial center Q0.
    pub q0: f64,
    /// Mean momentum P0 > 0 (moving toward the barrier from the left).
    pub p0: f64,
    /// Initial position spread dq0.
    pub dq0: f64,
    /// Momentum spread dp0.
    pub dp0: f64,
}

impl GaussianWignerState {
    pub fn new(mass: f64, q0: f64, p0: f64, dq0: f64, dp0: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("p0", p0), ("dq0", dq0), ("dp0", dp0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !q0.is_finite() {
            return Err(Error::InvalidParameter(format!("q0 must be finite, got {q0}")));
        }
        // Uncertainty bound; exact saturation (pure coherent state) is legal.
        if dq0 * dp0 < 0.5 * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "dq0*dp0 = {} violates the uncertainty bound 1/2",
                dq0 * dp0
            )));
        }
        if dp0 / p0 >= MOMENTUM_SPREAD_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dp0/p0 = {} is too large for a directed packet (limit {})",
                dp0 / p0,
                MOMENTUM_SPREAD_LIMIT
            )));
        }
        Ok(GaussianWignerState { mass, q0, p0, dq0, dp0 })
    }

    /// Minimum-uncertainty state: dp0 = 1/(2 dq0).
    pub fn pure(mass: f64, q0: f64, p0: f64, dq0: f64) -> Result<Self> {
        Self::new(mass, q0, p0, dq0, 0.5 / dq0)
    }

    /// Normalization constant C = 1/(2 pi dq0 dp0).
    pub fn normalization(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.dq0 * self.dp0)
    }

    pub fn v0(&self) -> f64 {
        self.p0 / self.mass
    }

    /// Free-flight center Q = Q0 + v0 t.
    pub fn center_at(&self, t: f64) -> f64 {
        self.q0 + self.v0() * t
    }

    /// Spread dq(t) = sqrt(dq0^2 + (t dp0/m)^2).
    pub fn spread_at(&self, t: f64) -> f64 {
        let drift = t * self.dp0 / self.mass;
        self.dq0.hypot(drift)
    }

    /// rho0(q, p) at t = 0.
    pub fn density(&self, q: f64, p: f64) -> f64 {
        let x = (q - self.q0) / self.dq0;
        let y = (p - self.p0) / self.dp0;
        self.normalization() * (-0.5 * (x * x + y * y)).exp()
    }

    /// Freely evolved density rho_t(q,p) = rho0(q - p t/m, p).
    pub fn density_evolved(&self, q: f64, p: f64, t: f64) -> f64 {
        self.density(q - p * t / self.mass, p)
    }

    /// Momentum marginal, a normalized Gaussian around p0 (time-invariant
    /// under free flight).
    pub fn momentum_marginal(&self, p: f64) -> f64 {
        let y = (p - self.p0) / self.dp0;
        (-0.5 * y * y).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.dp0)
    }

    /// Coordinate marginal of the freely evolved state.
    pub fn free_marginal(&self, t: f64, q: f64) -> f64 {
        let dq = self.spread_at(t);
        let x = (q - self.center_at(t)) / dq;
        (-0.5 * x * x).exp() / ((2.0 * std::f64::consts::PI).sqrt() * dq)
    }

    /// Centered first momentum moment of the freely evolved state,
    /// M_t(q) = integral dp (p - P0) rho_t(q, p).
    pub fn first_moment(&self, t: f64, q: f64) -> f64 {
        let dq = self.spread_at(t);
        let factor = t * (q - self.center_at(t)) * self.dp0 * self.dp0 / (self.mass * dq * dq);
        factor * self.free_marginal(t, q)
    }

    /// Time for the center to travel twice the distance to `center`
    /// (barrier center): past this the transmitted packet is well clear.
    pub fn clearing_time(&self, center: f64) -> f64 {
        2.0 * self.mass * (self.q0 - center).abs() / self.p0
    }

    /// The state must start in free space on the incident (left) side of
    /// the barrier: center more than one spread left of the support.
    pub fn prepared_in_free_space(&self, b: &Barrier) -> Result<()> {
        let gap = (b.center() - self.q0) - self.dq0;
        if gap <= b.support_radius() {
            return Err(Error::InvalidParameter(format!(
                "initial state overlaps the barrier: center {} with spread {} \
                 must sit left of the support [{}, {}] by more than one spread",
                self.q0,
                self.dq0,
                b.center() - b.support_radius(),
                b.center() + b.support_radius()
            )));
        }
        Ok(())
    }

    /// Advisory messages about parameter regimes that weaken the
    /// first-order analysis without invalidating it.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.dp0 / self.p0;
        if ratio > MOMENTUM_SPREAD_WARN {
            out.push(format!(
                "dp0/p0 = {ratio:.3} exceeds {MOMENTUM_SPREAD_WARN}; first-order \
                 transmitted-distribution errors grow like (dp0/p0)^2"
            ));
        }
        out
    }

    /// Sample rho0 on a (q, p) tensor grid spanning 8 spreads each way.
    pub fn sampled(&self, nq: usize, np: usize) -> SampledDistribution {
        SampledDistribution::from_fn(
            (self.q0 - 8.0 * self.dq0, self.q0 + 8.0 * self.dq0),
            (self.p0 - 8.0 * self.dp0, self.p0 + 8.0 * self.dp0),
            nq,
            np,
            |q, p| self.density(q, p),
        )
    }
}

/// Sharp-edged test distribution: indicator of q < Q0 times a normalized
/// Gaussian momentum profile. Not realizable as a quantum state (it
/// violates the uncertainty bound at the edge); used only to probe the
/// motion of the half-height point of the transmitted distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTestDistribution {
    pub mass: f64,
    /// Edge position: the coordinate profile is 1 for q < q0, 0 beyond.
    pub q0: f64,
    pub p0: f64,
    pub dp0: f64,
    /// Optional edge-smoothing width for quadrature robustness; 0 keeps the
    /// sharp step.
    pub smoothing: f64,
}

impl StepTestDistribution {
    pub fn new(mass: f64, q0: f64, p0: f64, dp0: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("p0", p0), ("dp0", dp0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(StepTestDistribution { mass, q0, p0, dp0, smoothing: 0.0 })
    }

    pub fn with_smoothing(mut self, width: f64) -> Result<Self> {
        if !(width >= 0.0) || !width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing width must be finite and >= 0, got {width}"
            )));
        }
        self.smoothing = width;
        Ok(self)
    }

    pub fn v0(&self) -> f64 {
        self.p0 / self.mass
    }

    /// Coordinate profile: sharp (or smoothed) unit step falling at q0.
    pub fn coordinate_profile(&self, q: f64) -> f64 {
        if self.smoothing == 0.0 {
            if q < self.q0 {
                1.0
            } else {
                0.0
            }
        } else {
            // Logistic ramp from 1 to 0 over ~smoothing around q0.
            1.0 / (1.0 + ((q - self.q0) / self.smoothing).exp())
        }
    }

    pub fn momentum_profile(&self, p: f64) -> f64 {
        let y = (p - self.p0) / self.dp0;
        (-0.5 * y * y).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.dp0)
    }

    pub fn density(&self, q: f64, p: f64) -> f64 {
        self.coordinate_profile(q) * self.momentum_profile(p)
    }
}

/// A phase-space density sampled on a uniform (q, p) tensor grid, row-major
/// in q. Carries trapezoid quadrature and the moment extractors.
#[derive(Debug, Clone)]
pub struct SampledDistribution {
    pub q_start: f64,
    pub dq: f64,
    pub nq: usize,
    pub p_start: f64,
    pub dp: f64,
    pub np: usize,
    /// values[iq * np + ip] = rho(q_iq, p_ip).
    pub values: Vec<f64>,
}

/// Tolerance on |integral - 1| for moment extraction.
pub const MOMENT_NORMALIZATION_TOL: f64 = 1e-6;

impl SampledDistribution {
    pub fn from_fn(
        q_range: (f64, f64),
        p_range: (f64, f64),
        nq: usize,
        np: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        assert!(nq >= 2 && np >= 2, "tensor grid needs at least 2x2 points");
        let dq = (q_range.1 - q_range.0) / (nq - 1) as f64;
        let dp = (p_range.1 - p_range.0) / (np - 1) as f64;
        let mut values = Vec::with_capacity(nq * np);
        for iq in 0..nq {
            let q = q_range.0 + iq as f64 * dq;
            for ip in 0..np {
                let p = p_range.0 + ip as f64 * dp;
                values.push(f(q, p));
            }
        }
        SampledDistribution {
            q_start: q_range.0,
            dq,
            nq,
            p_start: p_range.0,
            dp,
            np,
            values,
        }
    }

    pub fn q(&self, iq: usize) -> f64 {
        self.q_start + iq as f64 * self.dq
    }

    pub fn p(&self, ip: usize) -> f64 {
        self.p_start + ip as f64 * self.dp
    }

    fn edge_weight(i: usize, n: usize) -> f64 {
        if i == 0 || i == n - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// 2D trapezoid over the grid of `g(q, p, rho)`.
    fn quad(&self, g: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for iq in 0..self.nq {
            let wq = Self::edge_weight(iq, self.nq);
            let q = self.q(iq);
            let mut row = 0.0;
            for ip in 0..self.np {
                let wp = Self::edge_weight(ip, self.np);
                let p = self.p(ip);
                row += wp * g(q, p, self.values[iq * self.np + ip]);
            }
            total += wq * row;
        }
        total * self.dq * self.dp
    }

    pub fn integral(&self) -> f64 {
        self.quad(|_, _, v| v)
    }

    /// Quadrature moments (P0, dp0, Q0, dq0). The density must integrate to
    /// 1 within 1e-6; moments are taken relative to the measured integral.
    pub fn moments(&self) -> Result<(f64, f64, f64, f64)> {
        let norm = self.integral();
        if (norm - 1.0).abs() > MOMENT_NORMALIZATION_TOL {
            return Err(Error::Normalization {
                measured: norm,
                tolerance: MOMENT_NORMALIZATION_TOL,
            });
        }
        let p0 = self.quad(|_, p, v| p * v) / norm;
        let q0 = self.quad(|q, _, v| q * v) / norm;
        let var_p = self.quad(|_, p, v| (p - p0) * (p - p0) * v) / norm;
        let var_q = self.quad(|q, _, v| (q - q0) * (q - q0) * v) / norm;
        Ok((p0, var_p.sqrt(), q0, var_q.sqrt()))
    }
}
