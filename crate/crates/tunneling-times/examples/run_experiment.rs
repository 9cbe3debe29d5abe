//! The config-driven front end. Everything the library computes is also
//! reachable through flat config files and the `ttime` binary; this
//! example drives the same entry points in-process: write a config, run
//! it, and show the deterministic outputs.
//!
//!     cargo run --example run_experiment

use std::fs;

use tunneling_times::{list_experiments, run_experiment};

fn main() -> tunneling_times::Result<()> {
    println!("available experiment kinds:");
    for (name, description) in list_experiments() {
        println!("  {name:15} {description}");
    }

    let config = "\
# thin barrier: the transmitted peak starts delayed, ends advanced
experiment.kind = shift-sweep
barrier.kind = rectangular
barrier.v0 = 1.0
barrier.width = 0.5
packet.q0 = -40.0
packet.p0 = 1.0
packet.dq0 = 10.0
packet.dp0 = 0.05
times.start = 0.0
times.stop = 600.0
times.count = 25
";

    let dir = tempfile::tempdir().expect("temp dir");
    let config_path = dir.path().join("sweep.conf");
    fs::write(&config_path, config)?;

    println!("\nrunning config:\n{config}");
    let report = run_experiment(&config_path, &dir.path().join("out"))?;
    println!("kind `{}` wrote:", report.kind.as_str());
    for file in &report.files {
        println!("  {}", file.display());
    }

    let summary = fs::read_to_string(report.files.last().expect("summary written"))?;
    println!("\nsummary.txt:\n{summary}");
    println!("re-running the same config reproduces these files byte for byte.");
    Ok(())
}
