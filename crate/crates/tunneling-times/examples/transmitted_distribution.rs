//! Coordinate distribution of the transmitted packet, long after the
//! barrier: the full kernel quadrature next to its first-order form in
//! the tunneling times, and the bare free marginal scaled by |A(P0)|^2
//! for contrast.
//!
//!     cargo run --example transmitted_distribution

use tunneling_times::{
    centered_q_grid, default_kappa_grid, gaussian_first_order_table, shift_observables,
    sigma_max_default, transmission_amplitudes, transmitted_exact, tunneling_times, Barrier,
    GaussianWignerState,
};

fn main() -> tunneling_times::Result<()> {
    let mass = 1.0;
    let barrier = Barrier::rectangular(1.0, 2.0, 0.0)?;
    // Narrow momentum spread: dp0/p0 = 0.02, so first order in the times
    // describes the transmitted shape well.
    let s = GaussianWignerState::new(mass, -40.0, 1.0, 25.0, 0.02)?;
    let t = 180.0;

    let sigma_max = sigma_max_default(s.dp0, s.dq0, &barrier);
    let grid = default_kappa_grid(s.p0, s.dp0, sigma_max, 2048);
    let amps = transmission_amplitudes(&barrier, mass, &grid)?;
    let times = tunneling_times(&amps, s.p0)?;
    let a2 = amps.transmission_probability(amps.index_nearest(s.p0));

    let q = centered_q_grid(&s, t, 6.0, 601);
    let exact = transmitted_exact(&amps, &s, t, &q)?;
    let first = gaussian_first_order_table(&s, &times, a2, t, &q);

    let center = s.center_at(t);
    println!("barrier: rectangular v0 = 1, width = 2; packet dp0/p0 = {}", s.dp0 / s.p0);
    println!("t = {t}, free center at q = {center}\n");
    println!(
        "{:>8}  {:>13}  {:>13}  {:>13}",
        "q-center", "exact", "first order", "free scaled"
    );
    for i in (0..q.len()).step_by(60) {
        println!(
            "{:8.2}  {:13.6e}  {:13.6e}  {:13.6e}",
            q[i] - center,
            exact.values[i],
            first.values[i],
            a2 * s.free_marginal(t, q[i])
        );
    }

    let obs = shift_observables(&times, &s, t);
    println!("\ntransmitted mass (exact integral) = {:.9}", exact.integral());
    println!("|A(P0)|^2                         = {:.9}", a2);
    println!("\npeak advance, exact quadrature    = {:.6}", exact.peak_q()? - center);
    println!("peak advance, first order         = {:.6}", obs.delta_q_peak);
    println!("naive phase-time advance -v0 tau_w = {:.6}", -s.v0() * times.tau_w);
    println!("\nthe peak advance outgrows the bare phase-time shift: the magnitude");
    println!("sensitivity tau_a keeps reweighting the packet toward faster momenta,");
    println!("an effect that accumulates with t and dominates at late times.");
    Ok(())
}
