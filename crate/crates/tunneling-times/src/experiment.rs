//! Config-driven experiment runs.
//!
//! A run reads one flat config file (see `config`), computes one of six
//! experiment kinds and writes CSV tables plus a `summary.txt` into an
//! output directory. Outputs are deterministic: the same config and build
//! produce bit-identical files, so committed run directories work as
//! regression baselines. Summaries state every observable next to the
//! formula it implements.
//!
//! Config schema. Common keys:
//!
//! ```text
//! experiment.kind = amplitudes | times | propagator | distribution
//!                 | oracle-compare | shift-sweep
//! mass            = 1.0                 # optional, default 1
//! barrier.kind    = rectangular | piecewise | free
//! barrier.v0      = 1.0                 # rectangular
//! barrier.width   = 2.0                 # rectangular
//! barrier.center  = 0.0                 # rectangular, optional
//! barrier.edges   = [-1.0, 0.0, 1.0]    # piecewise: ascending, one more
//! barrier.heights = [0.5, 1.0]          #   entry than heights
//! packet.kind     = gaussian            # optional, only gaussian
//! packet.q0       = -40.0
//! packet.p0       = 1.0
//! packet.dq0      = 25.0
//! packet.dp0      = 0.02                # optional, default pure 1/(2 dq0)
//! momentum.reference = 1.0              # optional with a packet (then p0)
//! grid.points     = 2048                # momentum grid size
//! ```
//!
//! Evaluation times (`distribution`, `oracle-compare`, `shift-sweep`) come
//! either as an explicit `times.list = [...]` or as a generated ramp
//! `times.start` / `times.stop` / `times.count`. Kind-specific keys:
//! `grid.kappa-max` (amplitudes, times; default 5), `grid.sigma-max`
//! (packet-based kinds; default from the packet and barrier scales),
//! `grid.q-points` and `grid.q-half-width` (distribution; defaults 801 and
//! 8 spreads), `compare.peak-tolerance` (oracle-compare; default 0.1) and
//! `tdse.step` (oracle-compare; spatial step override). Keys a kind does
//! not read are rejected, so typos cannot silently fall back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use crate::asymptotics::{
    centered_q_grid, gaussian_first_order_table, propagator_column, shift_observables,
    transmitted_exact, transmitted_first_order_table, PropagatorOptions,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::potential::{Barrier, BarrierKind};
use crate::report::{format_value, CsvTable, Summary};
use crate::scattering::{
    default_kappa_grid, sigma_max_default, transmission_amplitudes, ScatteringAmplitudes,
    DEFAULT_KAPPA_POINTS,
};
use crate::tdse::{
    evolve, momentum_weighted_transmission, transmitted_observables, EvolutionSetup,
};
use crate::times::{phase_derivative_diagnostics, tunneling_times, TunnelingTimes};
use crate::wigner::GaussianWignerState;

/// Maximum deviation of the propagator's mass `dr sum T` from |A(p)|^2.
const KERNEL_MASS_TOLERANCE: f64 = 1e-8;
/// Maximum acceptable acausal leakage, max_{r < -dr} |T| / max |T|.
const CAUSALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Amplitudes,
    Times,
    Propagator,
    Distribution,
    OracleCompare,
    ShiftSweep,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Amplitudes => "amplitudes",
            ExperimentKind::Times => "times",
            ExperimentKind::Propagator => "propagator",
            ExperimentKind::Distribution => "distribution",
            ExperimentKind::OracleCompare => "oracle-compare",
            ExperimentKind::ShiftSweep => "shift-sweep",
        }
    }

    fn from_config_value(value: &str) -> Result<Self> {
        for kind in ALL_KINDS {
            if kind.as_str() == value {
                return Ok(kind);
            }
        }
        let names: Vec<&str> = ALL_KINDS.iter().map(|k| k.as_str()).collect();
        Err(Error::ConfigValidation {
            key: "experiment.kind".into(),
            message: format!("unknown kind `{value}`; expected one of {}", names.join(", ")),
        })
    }
}

const ALL_KINDS: [ExperimentKind; 6] = [
    ExperimentKind::Amplitudes,
    ExperimentKind::Times,
    ExperimentKind::Propagator,
    ExperimentKind::Distribution,
    ExperimentKind::OracleCompare,
    ExperimentKind::ShiftSweep,
];

/// Every runnable kind with a one-line description.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "amplitudes",
            "transmission and reflection amplitudes on a momentum grid, with unitarity residuals",
        ),
        (
            "times",
            "tunneling-time observables across a momentum grid plus a reference-momentum summary",
        ),
        (
            "propagator",
            "causal transmission kernel T(r, p) at one momentum, with mass and causality checks",
        ),
        (
            "distribution",
            "transmitted coordinate distributions: exact kernel quadrature next to first-order theory",
        ),
        (
            "oracle-compare",
            "first-order peak advance and transmission checked against direct grid evolution",
        ),
        (
            "shift-sweep",
            "peak and half-height shift observables swept over arrival times",
        ),
    ]
}

/// A fully validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub mass: f64,
    pub barrier: Barrier,
    pub packet: Option<GaussianWignerState>,
    /// Explicit `momentum.reference`; falls back to the packet's p0.
    pub reference: Option<f64>,
    pub times: Vec<f64>,
    pub grid_points: usize,
    /// Upper edge of the uniform grid used by `amplitudes` and `times`.
    pub kappa_max: f64,
    /// Spectral cutoff override for packet-based kinds.
    pub sigma_max: Option<f64>,
    pub q_points: usize,
    pub q_half_width: f64,
    pub peak_tolerance: f64,
    pub tdse_step: Option<f64>,
}

pub struct RunReport {
    pub kind: ExperimentKind,
    /// Files written, summary last.
    pub files: Vec<PathBuf>,
}

/// Parse, validate and run a config file, writing results into `out_dir`
/// (created if missing).
pub fn run_experiment(config_path: &Path, out_dir: &Path) -> Result<RunReport> {
    let exp = validate_config(config_path)?;
    fs::create_dir_all(out_dir)?;
    let files = exp.run(out_dir)?;
    Ok(RunReport {
        kind: exp.kind,
        files,
    })
}

/// Parse and validate a config file without running it.
pub fn validate_config(config_path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(config_path)?;
    let cfg = Config::parse(&text)?;
    let exp = ExperimentConfig::from_config(&cfg)?;
    cfg.ensure_fully_consumed()?;
    Ok(exp)
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValidation {
        key: key.into(),
        message: message.into(),
    }
}

fn barrier_from(cfg: &Config) -> Result<Barrier> {
    let kind = cfg.get_str("barrier.kind")?;
    let wrap = |e: Error| invalid("barrier", e.to_string());
    match kind {
        "free" => Barrier::rectangular(0.0, 1.0, 0.0).map_err(wrap),
        "rectangular" => {
            let v0 = cfg.get_f64("barrier.v0")?;
            let width = cfg.get_f64("barrier.width")?;
            let center = cfg.get_f64_opt("barrier.center")?.unwrap_or(0.0);
            Barrier::rectangular(v0, width, center).map_err(wrap)
        }
        "piecewise" => {
            let edges = cfg.get_f64_list("barrier.edges")?;
            let heights = cfg.get_f64_list("barrier.heights")?;
            if edges.len() != heights.len() + 1 {
                return Err(invalid(
                    "barrier.edges",
                    format!(
                        "need exactly one more edge than heights, got {} edges for {} heights",
                        edges.len(),
                        heights.len()
                    ),
                ));
            }
            let segments: Vec<(f64, f64, f64)> = heights
                .iter()
                .enumerate()
                .map(|(i, &h)| (edges[i], edges[i + 1], h))
                .collect();
            Barrier::piecewise_constant(&segments).map_err(wrap)
        }
        other => Err(invalid(
            "barrier.kind",
            format!("unknown barrier kind `{other}`; expected rectangular, piecewise or free"),
        )),
    }
}

fn packet_from(cfg: &Config, mass: f64) -> Result<Option<GaussianWignerState>> {
    let present =
        cfg.contains("packet.q0") || cfg.contains("packet.p0") || cfg.contains("packet.dq0");
    if !present {
        return Ok(None);
    }
    if let Some(kind) = cfg.get_str_opt("packet.kind")? {
        if kind != "gaussian" {
            return Err(invalid(
                "packet.kind",
                format!(
                    "unsupported packet kind `{kind}`; config runs take gaussian packets \
                     (the sharp-edged step profile is available through the library API)"
                ),
            ));
        }
    }
    let q0 = cfg.get_f64("packet.q0")?;
    let p0 = cfg.get_f64("packet.p0")?;
    let dq0 = cfg.get_f64("packet.dq0")?;
    let state = match cfg.get_f64_opt("packet.dp0")? {
        Some(dp0) => GaussianWignerState::new(mass, q0, p0, dq0, dp0),
        None => GaussianWignerState::pure(mass, q0, p0, dq0),
    }
    .map_err(|e| invalid("packet", e.to_string()))?;
    Ok(Some(state))
}

fn times_from(cfg: &Config) -> Result<Vec<f64>> {
    let list = cfg.get_f64_list_opt("times.list")?;
    let ramp = cfg.contains("times.start") || cfg.contains("times.stop") || cfg.contains("times.count");
    let times = match (list, ramp) {
        (Some(_), true) => {
            return Err(invalid(
                "times.list",
                "give either times.list or times.start/stop/count, not both",
            ))
        }
        (Some(list), false) => list,
        (None, true) => {
            let start = cfg.get_f64("times.start")?;
            let stop = cfg.get_f64("times.stop")?;
            let count = cfg
                .get_usize_opt("times.count")?
                .ok_or_else(|| invalid("times.count", "missing required key"))?;
            if count < 2 {
                return Err(invalid("times.count", "a time ramp needs at least 2 points"));
            }
            if stop <= start {
                return Err(invalid("times.stop", "must exceed times.start"));
            }
            (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect()
        }
        (None, false) => {
            return Err(invalid(
                "times.list",
                "missing required key (or use times.start/stop/count)",
            ))
        }
    };
    if times.is_empty() {
        return Err(invalid("times.list", "needs at least one time"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("times.list", "times must be finite and >= 0"));
    }
    Ok(times)
}

impl ExperimentConfig {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let kind = ExperimentKind::from_config_value(cfg.get_str("experiment.kind")?)?;
        let mass = cfg.get_f64_opt("mass")?.unwrap_or(1.0);
        if !(mass > 0.0) {
            return Err(invalid("mass", format!("must be > 0, got {mass}")));
        }
        let barrier = barrier_from(cfg)?;
        let packet = packet_from(cfg, mass)?;
        let reference = cfg.get_f64_opt("momentum.reference")?;
        if let Some(p) = reference {
            if !(p > 0.0) {
                return Err(invalid("momentum.reference", format!("must be > 0, got {p}")));
            }
        }

        use ExperimentKind::*;
        let needs_packet = matches!(kind, Propagator | Distribution | OracleCompare | ShiftSweep);
        if needs_packet && packet.is_none() {
            return Err(invalid(
                "packet.q0",
                format!(
                    "kind `{}` needs a gaussian packet (packet.q0, packet.p0, packet.dq0)",
                    kind.as_str()
                ),
            ));
        }
        if kind == Times && reference.is_none() && packet.is_none() {
            return Err(invalid(
                "momentum.reference",
                "kind `times` needs momentum.reference (or a packet to take p0 from)",
            ));
        }

        let times = match kind {
            Distribution | OracleCompare | ShiftSweep => times_from(cfg)?,
            Amplitudes | Times | Propagator => Vec::new(),
        };
        if kind == OracleCompare {
            if times.len() != 1 {
                return Err(invalid(
                    "times.list",
                    "oracle-compare takes exactly one evaluation time",
                ));
            }
            if !(times[0] > 0.0) {
                return Err(invalid("times.list", "the evaluation time must be > 0"));
            }
        }

        let grid_points = cfg
            .get_usize_opt("grid.points")?
            .unwrap_or(DEFAULT_KAPPA_POINTS);
        if grid_points < 32 {
            return Err(invalid(
                "grid.points",
                format!("need at least 32 grid points, got {grid_points}"),
            ));
        }
        let (kappa_max, sigma_max) = match kind {
            Amplitudes | Times => {
                let kmax = cfg.get_f64_opt("grid.kappa-max")?.unwrap_or(5.0);
                if !(kmax > 0.0) {
                    return Err(invalid("grid.kappa-max", format!("must be > 0, got {kmax}")));
                }
                (kmax, None)
            }
            _ => {
                let sigma = cfg.get_f64_opt("grid.sigma-max")?;
                if let Some(s) = sigma {
                    if !(s > 0.0) {
                        return Err(invalid("grid.sigma-max", format!("must be > 0, got {s}")));
                    }
                }
                (0.0, sigma)
            }
        };

        let (q_points, q_half_width) = if kind == Distribution {
            let n = cfg.get_usize_opt("grid.q-points")?.unwrap_or(801);
            if n < 9 {
                return Err(invalid("grid.q-points", format!("need at least 9, got {n}")));
            }
            let w = cfg.get_f64_opt("grid.q-half-width")?.unwrap_or(8.0);
            if !(w > 0.0) {
                return Err(invalid("grid.q-half-width", format!("must be > 0, got {w}")));
            }
            (n, w)
        } else {
            (801, 8.0)
        };

        let (peak_tolerance, tdse_step) = if kind == OracleCompare {
            let tol = cfg.get_f64_opt("compare.peak-tolerance")?.unwrap_or(0.1);
            if !(tol > 0.0) {
                return Err(invalid(
                    "compare.peak-tolerance",
                    format!("must be > 0, got {tol}"),
                ));
            }
            let step = cfg.get_f64_opt("tdse.step")?;
            if let Some(s) = step {
                if !(s > 0.0) {
                    return Err(invalid("tdse.step", format!("must be > 0, got {s}")));
                }
            }
            (tol, step)
        } else {
            (0.1, None)
        };

        Ok(ExperimentConfig {
            kind,
            mass,
            barrier,
            packet,
            reference,
            times,
            grid_points,
            kappa_max,
            sigma_max,
            q_points,
            q_half_width,
            peak_tolerance,
            tdse_step,
        })
    }

    /// One-line-per-field description for `validate` output.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind: {}\n", self.kind.as_str()));
        out.push_str(&format!("mass: {}\n", self.mass));
        out.push_str(&format!("barrier: {}\n", describe_barrier(&self.barrier)));
        if let Some(p) = &self.packet {
            out.push_str(&format!(
                "packet: gaussian q0 = {}, p0 = {}, dq0 = {}, dp0 = {}\n",
                p.q0, p.p0, p.dq0, p.dp0
            ));
        }
        out.push_str(&format!("reference momentum: {}\n", self.reference_momentum_or_nan()));
        if !self.times.is_empty() {
            out.push_str(&format!(
                "times: {} values in [{}, {}]\n",
                self.times.len(),
                self.times.iter().cloned().fold(f64::INFINITY, f64::min),
                self.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ));
        }
        out.push_str(&format!("momentum grid points: {}\n", self.grid_points));
        out
    }

    fn reference_momentum(&self) -> f64 {
        self.reference
            .or_else(|| self.packet.as_ref().map(|p| p.p0))
            .expect("validated: reference momentum or packet present")
    }

    fn reference_momentum_or_nan(&self) -> f64 {
        self.reference
            .or_else(|| self.packet.as_ref().map(|p| p.p0))
            .unwrap_or(f64::NAN)
    }

    /// Amplitude table on the packet-centered half-integer lattice.
    fn packet_table(&self) -> Result<ScatteringAmplitudes> {
        let s = self.packet.as_ref().expect("validated: packet present");
        let sigma = self
            .sigma_max
            .unwrap_or_else(|| sigma_max_default(s.dp0, s.dq0, &self.barrier));
        let grid = default_kappa_grid(s.p0, s.dp0, sigma, self.grid_points);
        transmission_amplitudes(&self.barrier, self.mass, &grid)
    }

    /// Uniform table on (0, kappa_max] for the momentum-sweep kinds.
    fn uniform_table(&self) -> Result<ScatteringAmplitudes> {
        let n = self.grid_points;
        let grid: Vec<f64> = (1..=n)
            .map(|i| self.kappa_max * i as f64 / n as f64)
            .collect();
        transmission_amplitudes(&self.barrier, self.mass, &grid)
    }

    fn base_summary(&self) -> Summary {
        let mut s = Summary::new();
        s.field("kind", self.kind.as_str());
        s.field("mass", format_value(self.mass));
        s.field("barrier", describe_barrier(&self.barrier));
        if let Some(p) = &self.packet {
            s.field(
                "packet",
                format!(
                    "gaussian q0 = {}, p0 = {}, dq0 = {}, dp0 = {}",
                    format_value(p.q0),
                    format_value(p.p0),
                    format_value(p.dq0),
                    format_value(p.dp0)
                ),
            );
        }
        s
    }

    /// Run the experiment, returning the files written (summary last).
    pub fn run(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        match self.kind {
            ExperimentKind::Amplitudes => self.run_amplitudes(out_dir),
            ExperimentKind::Times => self.run_times(out_dir),
            ExperimentKind::Propagator => self.run_propagator(out_dir),
            ExperimentKind::Distribution => self.run_distribution(out_dir),
            ExperimentKind::OracleCompare => self.run_oracle_compare(out_dir),
            ExperimentKind::ShiftSweep => self.run_shift_sweep(out_dir),
        }
    }

    fn run_amplitudes(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let amps = self.uniform_table()?;
        let mut table = CsvTable::new(&[
            "kappa",
            "re_a",
            "im_a",
            "ln_abs_a",
            "phase_a",
            "re_b",
            "im_b",
            "transmission",
            "unitarity_residual",
        ]);
        let mut max_residual = 0.0f64;
        for i in 0..amps.len() {
            let a = amps.amp[i];
            let b = amps.refl[i];
            let t = amps.transmission_probability(i);
            let residual = t + b.norm_sqr() - 1.0;
            max_residual = max_residual.max(residual.abs());
            table.push_row(&[
                amps.kappa[i],
                a.re,
                a.im,
                amps.ln_abs_a[i],
                amps.phase[i],
                b.re,
                b.im,
                t,
                residual,
            ]);
        }
        let csv = out_dir.join("amplitudes.csv");
        table.write(&csv)?;

        let mut summary = self.base_summary();
        summary.section("amplitude table");
        summary.field(
            "grid",
            format!(
                "{} uniform points on (0, {}]",
                amps.len(),
                format_value(self.kappa_max)
            ),
        );
        summary.observable(
            "max_unitarity_residual",
            max_residual,
            "max over kappa of | |A|^2 + |B|^2 - 1 |, which vanishes for a real barrier",
        );
        if let Some(p) = self.reference {
            let i = amps.index_nearest(p);
            summary.section("reference momentum");
            summary.field("kappa", format_value(amps.kappa[i]));
            summary.observable(
                "transmission",
                amps.transmission_probability(i),
                "|A(kappa)|^2 at the grid point nearest momentum.reference",
            );
        }
        let summary_path = out_dir.join("summary.txt");
        summary.write(&summary_path)?;
        Ok(vec![csv, summary_path])
    }

    fn run_times(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let amps = self.uniform_table()?;
        let p_ref = self.reference_momentum();
        let central = tunneling_times(&amps, p_ref)?;

        let mut table = CsvTable::new(&["kappa", "epsilon", "v", "tau_w", "tau_a", "tau_bl"]);
        for i in 2..amps.len() - 2 {
            let tt = tunneling_times(&amps, amps.kappa[i])?;
            table.push_row(&[tt.kappa0, tt.epsilon0, tt.v0, tt.tau_w, tt.tau_a, tt.tau_bl]);
        }
        let csv = out_dir.join("times.csv");
        table.write(&csv)?;

        let mut summary = self.base_summary();
        summary.section("times at the reference momentum");
        summary.field("kappa0", format_value(central.kappa0));
        write_times_block(&mut summary, &central);
        if let Ok(diag) = phase_derivative_diagnostics(&amps, p_ref) {
            summary.observable(
                "stencil_correction_ratio",
                diag.correction_ratio(),
                "(d_4h - d_2h) / (d_2h - d_h) of the raw phase derivative; near 4 when \
                 the grid resolves the phase",
            );
        }
        let summary_path = out_dir.join("summary.txt");
        summary.write(&summary_path)?;
        Ok(vec![csv, summary_path])
    }

    fn run_propagator(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let amps = self.packet_table()?;
        let p = self.reference_momentum();
        let col = propagator_column(&amps, p, &PropagatorOptions::default())?;

        let mut table = CsvTable::new(&["r", "kernel"]);
        for (r, v) in col.r.iter().zip(&col.values) {
            table.push_row(&[*r, *v]);
        }
        let csv = out_dir.join("propagator.csv");
        table.write(&csv)?;

        let a2 = amps.transmission_probability(amps.index_nearest(col.p));
        let mut summary = self.base_summary();
        summary.section("kernel column");
        summary.field("momentum", format_value(col.p));
        summary.field("delta_r", format_value(col.delta_r));
        summary.field("r points", col.r.len());
        summary.observable(
            "integral",
            col.integral,
            "dr times the sum of all kernel samples; the r = 0 bin carries the \
             resummed forward delta",
        );
        summary.observable("transmission", a2, "|A(p)|^2 at the column momentum");
        summary.check(
            "kernel mass equals the transmission probability",
            col.integral - a2,
            KERNEL_MASS_TOLERANCE,
        );
        summary.observable(
            "causality_ratio",
            col.causality_ratio,
            "max over r < -dr of |T(r, p)| divided by the overall max |T|",
        );
        summary.check("no weight ahead of the front", col.causality_ratio, CAUSALITY_TOLERANCE);
        summary.observable(
            "max_imag_residue",
            col.max_imag_residue,
            "largest |Im| over |Re| before the real part is taken; conjugate symmetry \
             keeps it at rounding level",
        );
        let summary_path = out_dir.join("summary.txt");
        summary.write(&summary_path)?;
        Ok(vec![csv, summary_path])
    }

    fn run_distribution(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let s = self.packet.as_ref().expect("validated");
        let amps = self.packet_table()?;
        let p_ref = self.reference_momentum();
        let tt = tunneling_times(&amps, p_ref)?;
        let a2 = amps.transmission_probability(amps.index_nearest(p_ref));

        let mut summary = self.base_summary();
        summary.section("first-order inputs");
        write_times_block(&mut summary, &tt);
        summary.observable(
            "transmission",
            a2,
            "|A(kappa0)|^2 at the grid point nearest the reference momentum",
        );

        let mut files = Vec::new();
        for (idx, &t) in self.times.iter().enumerate() {
            let q = centered_q_grid(s, t, self.q_half_width, self.q_points);
            let exact = transmitted_exact(&amps, s, t, &q)?;
            let first = transmitted_first_order_table(&tt, a2, s, t, &q);
            let gauss = gaussian_first_order_table(s, &tt, a2, t, &q);

            let mut table =
                CsvTable::new(&["q", "exact", "first_order", "gaussian", "free_scaled"]);
            for i in 0..q.len() {
                table.push_row(&[
                    q[i],
                    exact.values[i],
                    first.values[i],
                    gauss.values[i],
                    a2 * s.free_marginal(t, q[i]),
                ]);
            }
            let csv = out_dir.join(format!("distribution_{idx:03}.csv"));
            table.write(&csv)?;
            files.push(csv);

            summary.section(&format!("t = {}", format_value(t)));
            summary.observable(
                "integral",
                exact.integral(),
                "trapezoid of the exact-kernel distribution over the q window",
            );
            summary.observable(
                "mean_q",
                exact.mean_q(),
                "first moment of the exact-kernel distribution",
            );
            summary.observable(
                "variance_q",
                exact.variance_q(),
                "second central moment of the exact-kernel distribution",
            );
            let obs = shift_observables(&tt, s, t);
            match exact.peak_q() {
                Ok(peak) => {
                    summary.observable(
                        "peak_advance",
                        peak - s.center_at(t),
                        "exact-kernel peak location minus the free center Q0 + v0 t",
                    );
                }
                Err(e) => summary.note(&format!("peak location unavailable: {e}")),
            }
            summary.observable(
                "peak_advance_first_order",
                obs.delta_q_peak,
                "dQ = 2 v0 tau0 / (sqrt(1 + zeta^2) + 1), zeta = 2 v0 tau0 / dq(t), \
                 tau0 = 2 t tau_a dp0^2 / m - tau_w",
            );
            for w in &exact.warnings {
                summary.note(w);
            }
        }

        let summary_path = out_dir.join("summary.txt");
        summary.write(&summary_path)?;
        files.push(summary_path);
        Ok(files)
    }

    fn run_oracle_compare(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let s = self.packet.as_ref().expect("validated");
        let t_final = self.times[0];
        let amps = self.packet_table()?;
        let p_ref = self.reference_momentum();
        let tt = tunneling_times(&amps, p_ref)?;
        let a2 = amps.transmission_probability(amps.index_nearest(p_ref));
        let obs = shift_observables(&tt, s, t_final);
        let weighted = momentum_weighted_transmission(&amps, s)?;

        let setup = EvolutionSetup::for_scattering(&self.barrier, s, t_final, self.tdse_step)?;
        let ev = evolve(&setup)?;
        let tobs = transmitted_observables(&ev)?;
        let measured = tobs.peak_q - s.center_at(t_final);
        let predicted = obs.delta_q_peak;
        let rel_dev = if measured != 0.0 {
            (predicted - measured).abs() / measured.abs()
        } else {
            f64::INFINITY
        };

        let mut table = CsvTable::new(&[
            "t_final",
            "transmission",
            "peak_q",
            "half_height_q",
            "variance",
            "peak_advance",
            "peak_advance_first_order",
        ]);
        table.push_row(&[
            t_final,
            tobs.transmission,
            tobs.peak_q,
            tobs.half_height_q,
            tobs.variance,
            measured,
            predicted,
        ]);
        let csv = out_dir.join("tdse.csv");
        table.write(&csv)?;

        let mut summary = self.base_summary();
        summary.section("grid evolution");
        summary.field(
            "grid",
            format!(
                "[{}, {}] step {} ({} points)",
                format_value(setup.grid.start),
                format_value(setup.grid.end()),
                format_value(setup.grid.step),
                setup.grid.n
            ),
        );
        summary.field("dt", format_value(setup.dt));
        summary.field("steps", ev.steps);
        summary.field("norm drift (max step)", format_value(ev.norm_drift_max_step));
        summary.field("norm drift (total)", format_value(ev.norm_drift_total));

        summary.section("first-order inputs");
        write_times_block(&mut summary, &tt);

        summary.section("peak advance");
        summary.observable(
            "measured",
            measured,
            "transmitted-side density peak minus the free center Q0 + v0 t",
        );
        summary.observable(
            "first_order",
            predicted,
            "dQ = 2 v0 tau0 / (sqrt(1 + zeta^2) + 1), zeta = 2 v0 tau0 / dq(t), \
             tau0 = 2 t tau_a dp0^2 / m - tau_w",
        );
        summary.check(
            "first-order peak advance vs grid evolution (relative)",
            rel_dev,
            self.peak_tolerance,
        );

        summary.section("transmission");
        summary.observable(
            "grid_evolution",
            tobs.transmission,
            "probability beyond the barrier's far edge at t_final",
        );
        summary.observable(
            "momentum_weighted",
            weighted,
            "integral of |A(kappa)|^2 against the packet's momentum marginal",
        );
        summary.observable("at_p0", a2, "|A(kappa0)|^2 at the reference momentum");
        let summary_path = out_dir.join("summary.txt");
        summary.write(&summary_path)?;
        Ok(vec![csv, summary_path])
    }

    fn run_shift_sweep(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let s = self.packet.as_ref().expect("validated");
        let amps = self.packet_table()?;
        let p_ref = self.reference_momentum();
        let tt = tunneling_times(&amps, p_ref)?;

        let mut table = CsvTable::new(&[
            "t",
            "tau0",
            "zeta",
            "delta_q_peak",
            "tau_h",
            "half_height_shift",
            "half_relation_residual",
        ]);
        let mut rows = Vec::with_capacity(self.times.len());
        for &t in &self.times {
            let o = shift_observables(&tt, s, t);
            let residual = (o.tau_h + tt.tau_w) - 0.5 * (o.tau0 + tt.tau_w);
            table.push_row(&[
                t,
                o.tau0,
                o.zeta,
                o.delta_q_peak,
                o.tau_h,
                o.half_height_shift,
                residual,
            ]);
            rows.push((t, o.delta_q_peak));
        }
        let csv = out_dir.join("shift_sweep.csv");
        table.write(&csv)?;

        let mut summary = self.base_summary();
        summary.section("sweep inputs");
        write_times_block(&mut summary, &tt);
        summary.note(
            "columns: tau0 = 2 t tau_a dp0^2 / m - tau_w; zeta = 2 v0 tau0 / dq(t); \
             delta_q_peak = 2 v0 tau0 / (sqrt(1 + zeta^2) + 1); \
             tau_h = t tau_a dp0^2 / m - tau_w; half_height_shift = v0 tau_h; \
             half_relation_residual = (tau_h + tau_w) - (tau0 + tau_w) / 2, \
             identically zero",
        );
        if tt.tau_a != 0.0 && tt.tau_w / tt.tau_a > 0.0 {
            let t_star = self.mass * tt.tau_w / (2.0 * tt.tau_a * s.dp0 * s.dp0);
            summary.observable(
                "t_star",
                t_star,
                "m tau_w / (2 tau_a dp0^2), where tau0 and the peak shift change sign",
            );
        }
        for pair in rows.windows(2) {
            let (t0, d0) = pair[0];
            let (t1, d1) = pair[1];
            if d0 != 0.0 && d1 != 0.0 && d0.signum() != d1.signum() {
                summary.note(&format!(
                    "delta_q_peak changes sign between t = {} and t = {}",
                    format_value(t0),
                    format_value(t1)
                ));
            }
        }
        let summary_path = out_dir.join("summary.txt");
        summary.write(&summary_path)?;
        Ok(vec![csv, summary_path])
    }
}

fn describe_barrier(b: &Barrier) -> String {
    match b.kind() {
        BarrierKind::Rectangular { v0, width } => format!(
            "rectangular v0 = {}, width = {}, center = {}",
            format_value(*v0),
            format_value(*width),
            format_value(b.center())
        ),
        BarrierKind::PiecewiseConstant => format!(
            "piecewise-constant, {} slabs on [{}, {}], max height {}",
            b.slabs().len(),
            format_value(b.center() - b.support_radius()),
            format_value(b.center() + b.support_radius()),
            format_value(b.max_height())
        ),
        BarrierKind::Sampled => format!(
            "sampled, {} cells on [{}, {}], max height {}",
            b.slabs().len(),
            format_value(b.center() - b.support_radius()),
            format_value(b.center() + b.support_radius()),
            format_value(b.max_height())
        ),
    }
}

fn write_times_block(summary: &mut Summary, tt: &TunnelingTimes) {
    summary.observable(
        "tau_w",
        tt.tau_w,
        "d(arg A)/d epsilon at kappa0, epsilon = kappa^2 / (2 m), by a five-point \
         Richardson stencil",
    );
    summary.observable("tau_a", tt.tau_a, "d(ln |A|)/d epsilon at kappa0");
    summary.observable("tau_bl", tt.tau_bl, "|tau_w - i tau_a|");
    summary.observable("v0", tt.v0, "kappa0 / m");
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn run_text(text: &str, dir: &Path) -> Result<RunReport> {
        let path = dir.join("config.txt");
        fs::write(&path, text).unwrap();
        run_experiment(&path, &dir.join("out"))
    }

    fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        (header, rows)
    }

    #[test]
    fn free_barrier_amplitudes_are_exactly_one() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_text(
            "experiment.kind = amplitudes\n\
             barrier.kind = free\n\
             grid.points = 64\n\
             grid.kappa-max = 2.0\n",
            dir.path(),
        )
        .unwrap();
        assert_eq!(report.kind, ExperimentKind::Amplitudes);
        let (header, rows) = read_csv(&report.files[0]);
        assert_eq!(header[0], "kappa");
        assert_eq!(rows.len(), 64);
        for row in &rows {
            assert_eq!(row[1], 1.0); // re A
            assert_eq!(row[2], 0.0); // im A
            assert_eq!(row[7], 1.0); // transmission
            assert_eq!(row[8], 0.0); // unitarity residual
        }
        let summary = fs::read_to_string(report.files.last().unwrap()).unwrap();
        assert!(summary.contains("max_unitarity_residual"));
    }

    #[test]
    fn times_run_matches_the_rectangular_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_text(
            "experiment.kind = times\n\
             barrier.kind = rectangular\n\
             barrier.v0 = 1.0\n\
             barrier.width = 2.0\n\
             momentum.reference = 1.0\n\
             grid.points = 1024\n\
             grid.kappa-max = 2.0\n",
            dir.path(),
        )
        .unwrap();
        let (header, rows) = read_csv(&report.files[0]);
        assert_eq!(header, ["kappa", "epsilon", "v", "tau_w", "tau_a", "tau_bl"]);
        assert_eq!(rows.len(), 1024 - 4);
        // Row nearest kappa = 1: tau_w = -w + 2 tanh w, tau_a = w tanh w.
        let row = rows
            .iter()
            .min_by(|a, b| {
                (a[0] - 1.0).abs().partial_cmp(&(b[0] - 1.0).abs()).unwrap()
            })
            .unwrap();
        let th = 2.0f64.tanh();
        assert!((row[3] - (-2.0 + 2.0 * th)).abs() < 1e-5, "tau_w = {}", row[3]);
        assert!((row[4] - 2.0 * th).abs() < 1e-5, "tau_a = {}", row[4]);
    }

    #[test]
    fn propagator_run_reports_passing_checks() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_text(
            "experiment.kind = propagator\n\
             barrier.kind = rectangular\n\
             barrier.v0 = 1.0\n\
             barrier.width = 2.0\n\
             packet.q0 = -30.0\n\
             packet.p0 = 1.0\n\
             packet.dq0 = 5.0\n\
             grid.points = 1024\n",
            dir.path(),
        )
        .unwrap();
        let (header, rows) = read_csv(&report.files[0]);
        assert_eq!(header, ["r", "kernel"]);
        assert!(rows.len() > 100);
        let summary = fs::read_to_string(report.files.last().unwrap()).unwrap();
        assert!(
            summary.matches("-> PASS").count() == 2,
            "expected both kernel checks to pass:\n{summary}"
        );
    }

    #[test]
    fn distribution_run_writes_one_table_per_time() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_text(
            "experiment.kind = distribution\n\
             barrier.kind = rectangular\n\
             barrier.v0 = 1.0\n\
             barrier.width = 2.0\n\
             packet.q0 = -30.0\n\
             packet.p0 = 1.0\n\
             packet.dq0 = 5.0\n\
             times.list = [80.0, 120.0]\n\
             grid.points = 512\n\
             grid.q-points = 201\n",
            dir.path(),
        )
        .unwrap();
        assert_eq!(report.files.len(), 3);
        assert!(report.files[0].ends_with("distribution_000.csv"));
        assert!(report.files[1].ends_with("distribution_001.csv"));
        let (_, rows) = read_csv(&report.files[0]);
        assert_eq!(rows.len(), 201);
        // Transmitted mass stays near |A(p0)|^2 for a narrow packet.
        let summary = fs::read_to_string(report.files.last().unwrap()).unwrap();
        assert!(summary.contains("integral"));
        assert!(summary.contains("peak_advance_first_order"));
    }

    #[test]
    fn shift_sweep_is_bit_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let config = "experiment.kind = shift-sweep\n\
             barrier.kind = rectangular\n\
             barrier.v0 = 1.0\n\
             barrier.width = 0.5\n\
             packet.q0 = -40.0\n\
             packet.p0 = 1.0\n\
             packet.dq0 = 10.0\n\
             packet.dp0 = 0.05\n\
             times.start = 0.0\n\
             times.stop = 600.0\n\
             times.count = 25\n\
             grid.points = 256\n";
        let path = dir.path().join("config.txt");
        fs::write(&path, config).unwrap();
        let r1 = run_experiment(&path, &dir.path().join("out1")).unwrap();
        let r2 = run_experiment(&path, &dir.path().join("out2")).unwrap();
        for (a, b) in r1.files.iter().zip(&r2.files) {
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{a:?} vs {b:?}");
        }
        let summary = fs::read_to_string(r1.files.last().unwrap()).unwrap();
        assert!(summary.contains("t_star"), "{summary}");
        assert!(summary.contains("changes sign"), "{summary}");
    }

    #[test]
    fn validation_reports_key_paths() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, text: &str| {
            let p = dir.path().join(name);
            fs::write(&p, text).unwrap();
            p
        };

        let missing = write("a.txt", "experiment.kind = times\nbarrier.kind = free\n");
        match validate_config(&missing).unwrap_err() {
            Error::ConfigValidation { key, .. } => assert_eq!(key, "momentum.reference"),
            other => panic!("{other:?}"),
        }

        let unknown = write(
            "b.txt",
            "experiment.kind = amplitudes\nbarrier.kind = free\nbarrier.heihgt = 1.0\n",
        );
        match validate_config(&unknown).unwrap_err() {
            Error::ConfigValidation { key, .. } => assert_eq!(key, "barrier.heihgt"),
            other => panic!("{other:?}"),
        }

        let bad_kind = write("c.txt", "experiment.kind = spectra\nbarrier.kind = free\n");
        match validate_config(&bad_kind).unwrap_err() {
            Error::ConfigValidation { key, .. } => assert_eq!(key, "experiment.kind"),
            other => panic!("{other:?}"),
        }

        let bad_packet = write(
            "d.txt",
            "experiment.kind = shift-sweep\nbarrier.kind = free\n\
             packet.q0 = -40.0\npacket.p0 = 1.0\npacket.dq0 = 2.0\npacket.dp0 = 0.01\n\
             times.list = [10.0]\n",
        );
        match validate_config(&bad_packet).unwrap_err() {
            Error::ConfigValidation { key, .. } => assert_eq!(key, "packet"),
            other => panic!("{other:?}"),
        }

        let exit3 = validate_config(&missing).unwrap_err();
        assert_eq!(exit3.exit_code(), 3);
    }

    #[test]
    fn list_covers_every_kind() {
        let listed = list_experiments();
        assert_eq!(listed.len(), ALL_KINDS.len());
        for kind in ALL_KINDS {
            assert!(listed.iter().any(|(name, _)| *name == kind.as_str()));
            assert_eq!(
                ExperimentKind::from_config_value(kind.as_str()).unwrap(),
                kind
            );
        }
    }
}
