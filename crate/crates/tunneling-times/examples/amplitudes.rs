//! Transmission and reflection amplitudes of a rectangular barrier,
//! checked against the closed form and the unitarity relation.
//!
//!     cargo run --example amplitudes

use tunneling_times::{
    rectangular_closed_form, transmission_amplitudes, uniform_grid, Barrier,
};

fn main() -> tunneling_times::Result<()> {
    let v0 = 1.0;
    let width = 2.0;
    let mass = 1.0;
    let barrier = Barrier::rectangular(v0, width, 0.0)?;

    // 2048 momenta on (0, 5]: tunneling below kappa = sqrt(2 m v0),
    // resonant oscillation above.
    let n = 2048;
    let grid = uniform_grid(5.0 / n as f64, 5.0, n);
    let amps = transmission_amplitudes(&barrier, mass, &grid)?;

    println!("rectangular barrier: v0 = {v0}, width = {width}, mass = {mass}");
    println!("barrier top at kappa = {:.6}\n", (2.0 * mass * v0).sqrt());
    println!(
        "{:>7}  {:>12}  {:>10}  {:>12}  {:>12}",
        "kappa", "|A|^2", "arg A", "closed dev", "unitarity"
    );

    let mut worst_closed = 0.0f64;
    let mut worst_unitarity = 0.0f64;
    for i in 0..amps.len() {
        let k = amps.kappa[i];
        let a = amps.amp[i];
        let b = amps.refl[i];
        let closed = rectangular_closed_form(v0, width, mass, k)?;
        let closed_dev = (a - closed).norm() / closed.norm();
        let unitarity = (a.norm_sqr() + b.norm_sqr() - 1.0).abs();
        worst_closed = worst_closed.max(closed_dev);
        worst_unitarity = worst_unitarity.max(unitarity);
        if (i + 1) % 256 == 0 {
            println!(
                "{:7.4}  {:12.6e}  {:10.6}  {:12.2e}  {:12.2e}",
                k,
                a.norm_sqr(),
                amps.phase[i],
                closed_dev,
                unitarity
            );
        }
    }

    println!("\nworst closed-form deviation: {worst_closed:.2e}");
    println!("worst unitarity residual:    {worst_unitarity:.2e}");
    Ok(())
}
