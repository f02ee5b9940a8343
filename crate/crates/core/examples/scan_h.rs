//! Projection defects, adiabatic leakage and coherent-state errors of the
//! two-level model over a geometric list of h, with fitted slopes.

use magneto_bo::experiment::{self, ExperimentConfig};
use std::path::PathBuf;

fn main() -> magneto_bo::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/two_level_scan.toml");
    let report = experiment::scan_h(&ExperimentConfig::load(&path)?)?;
    for name in ["scan", "fits"] {
        if let Some(t) = report.results.tables.iter().find(|t| t.name == name) {
            println!("{name}:");
            print!("{}", t.to_csv()?);
        }
    }
    for note in &report.results.notes {
        println!("note: {note}");
    }
    for a in &report.assertions {
        println!("{}", a.describe());
    }
    Ok(())
}
