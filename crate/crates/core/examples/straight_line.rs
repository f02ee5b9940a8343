//! Centre-of-mass track of a neutral pair crossing a unit magnetic field,
//! next to a same-sign pair that curls. Pass a config path to override the
//! default neutral run; the full-size runs take several minutes each.

use magneto_bo::experiment::{self, ExperimentConfig};
use std::path::PathBuf;

fn main() -> magneto_bo::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| root.join("straight_line.toml"));
    let cfg = ExperimentConfig::load(&path)?;
    let report = experiment::run(&cfg)?;
    let center = report.results.tables.iter().find(|t| t.name == "center").expect("straight-line runs write the track");
    print!("{}", center.to_csv()?);
    for name in ["path_length", "line_deviation", "relative_deviation"] {
        println!("{name} = {:.6e}", report.metric(name).unwrap_or(f64::NAN));
    }
    for a in &report.assertions {
        println!("{}", a.describe());
    }
    println!("{:.1} s", report.wall_time);
    Ok(())
}
