//! Desk-scale star and Erdős–Rényi sweeps with their scaling ratios.
//!
//! cargo run --release -p binvote-core --example desk_sweep [seed]

use binvote_core::experiments::{scaling_ratio, sweep_convergence, write_sweep_csv, SweepConfig, SweepTopology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    for topology in [SweepTopology::star(), SweepTopology::erdos_renyi()] {
        let summary = sweep_convergence(&SweepConfig::desk(topology, seed))?;
        write_sweep_csv(&summary, std::io::stdout().lock())?;
        let r2 = scaling_ratio(&summary, 2.0, 1)?;
        let r4 = scaling_ratio(&summary, 4.0, 1)?;
        println!(
            "# spread(N^2 ln N) = {:.3}; N^4 ln N ratio strictly decreasing: {}",
            r2.spread,
            r4.strictly_decreasing()
        );
    }
    Ok(())
}
